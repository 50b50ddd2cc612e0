//! Percentile-bootstrap confidence intervals for effect estimates.
//!
//! Resamples whole participant records with replacement and re-runs the
//! entire estimation pipeline, model refits included, on each replicate.
//! Replicate RNG streams are a pure function of (master seed, replicate
//! index), so results are bit-identical across worker counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mediation::PointEstimates;

/// Bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    /// Number of resamples.
    pub replicates: usize,
    /// Confidence level in (0, 1).
    pub level: f64,
    /// Master seed; replicate i draws from stream i of this seed.
    pub seed: u64,
    /// Worker-count hint; 0 uses the global thread pool's default.
    pub workers: usize,
}

impl BootstrapConfig {
    /// Defaults: 5000 replicates at the 95% level.
    pub fn new(seed: u64) -> BootstrapConfig {
        BootstrapConfig { replicates: 5000, level: 0.95, seed, workers: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Invalid("bootstrap needs at least one replicate".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Invalid("confidence level must lie strictly in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A point estimate with bootstrap confidence intervals and replication
/// metadata.
#[derive(Debug, Clone)]
pub struct EffectEstimate {
    /// The full-data estimates.
    pub point: PointEstimates,
    /// Percentile interval for the indirect effect.
    pub ci_indirect: (f64, f64),
    /// Percentile interval for the risk ratio, when the full-data estimate
    /// has one and at least one replicate produced one.
    pub ci_risk_ratio: Option<(f64, f64)>,
    /// Replicates whose pipeline failed (dropped from the intervals).
    pub replicate_failures: usize,
    /// Successful replicates whose fits showed separation (kept).
    pub separation_count: usize,
    /// The master seed used.
    pub seed: u64,
}

/// Runs the percentile bootstrap: `estimator` is the full estimation
/// pipeline and is re-run on every resample. Replicates that return errors
/// are dropped and counted; replicates with separation are kept and
/// counted.
pub fn bootstrap(
    ds: &Dataset,
    estimator: &(dyn Fn(&Dataset) -> Result<PointEstimates> + Sync),
    cfg: &BootstrapConfig,
) -> Result<EffectEstimate> {
    cfg.validate()?;
    let point = estimator(ds)?;
    let n = ds.n();

    let run = || -> Vec<Option<(f64, Option<f64>, bool)>> {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(rep as u64);
                let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let resampled = ds.resample(&indices);
                estimator(&resampled)
                    .ok()
                    .map(|est| (est.indirect, est.risk_ratio, est.separation))
            })
            .collect()
    };
    let results = if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Estimation(format!("thread pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    };

    let mut indirects = Vec::with_capacity(cfg.replicates);
    let mut ratios = Vec::new();
    let mut replicate_failures = 0usize;
    let mut separation_count = 0usize;
    for r in results {
        match r {
            Some((indirect, ratio, separation)) => {
                indirects.push(indirect);
                if let Some(rr) = ratio {
                    ratios.push(rr);
                }
                if separation {
                    separation_count += 1;
                }
            }
            None => replicate_failures += 1,
        }
    }
    if indirects.is_empty() {
        return Err(Error::Estimation("every bootstrap replicate failed".into()));
    }

    let ci_indirect = percentile_interval(&indirects, cfg.level)?;
    let ci_risk_ratio = if point.risk_ratio.is_some() && !ratios.is_empty() {
        Some(percentile_interval(&ratios, cfg.level)?)
    } else {
        None
    };
    Ok(EffectEstimate {
        point,
        ci_indirect,
        ci_risk_ratio,
        replicate_failures,
        separation_count,
        seed: cfg.seed,
    })
}

// Empirical quantile with linear interpolation between order statistics:
// rank h = (n−1)·p, value = x[⌊h⌋] + (h − ⌊h⌋)·(x[⌊h⌋+1] − x[⌊h⌋]).
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// The equal-tailed percentile interval of a sample: quantiles at
/// (1−level)/2 and 1−(1−level)/2, linearly interpolated between order
/// statistics.
pub fn percentile_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Invalid("percentile interval of an empty sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid("confidence level must lie strictly in (0, 1)".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("estimates are finite"));
    let tail = (1.0 - level) / 2.0;
    Ok((interpolated_quantile(&sorted, tail), interpolated_quantile(&sorted, 1.0 - tail)))
}

/// Ratio-scale companion of an effect: counterfactual mean over baseline
/// mean. Errors on a non-positive baseline rather than returning infinity.
pub fn to_risk_ratio(counterfactual_mean: f64, baseline_mean: f64) -> Result<f64> {
    if baseline_mean > 0.0 {
        Ok(counterfactual_mean / baseline_mean)
    } else {
        Err(Error::Invalid("risk ratio needs a positive baseline mean".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        Dataset, MediatorKind, MediatorValue, ObservationRecord, OutcomeKind, Schema,
    };
    use crate::interventions::InterventionSpec;
    use crate::mediation::organic_indirect_rel0;
    use approx::assert_abs_diff_eq;

    #[test]
    fn percentile_interval_known_values() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let (lo, hi) = percentile_interval(&values, 0.90).unwrap();
        assert_abs_diff_eq!(lo, 5.95, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 95.05, epsilon = 1e-12);

        assert_eq!(percentile_interval(&[4.2], 0.95).unwrap(), (4.2, 4.2));
        assert_eq!(percentile_interval(&[7.0; 9], 0.5).unwrap(), (7.0, 7.0));
        assert!(percentile_interval(&[], 0.95).is_err());
        assert!(percentile_interval(&[1.0], 1.0).is_err());
    }

    #[test]
    fn percentile_interval_is_monotone_and_widening() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let (lo95, hi95) = percentile_interval(&values, 0.95).unwrap();
        let (lo99, hi99) = percentile_interval(&values, 0.99).unwrap();
        assert!(hi99 - lo99 >= hi95 - lo95, "wider level must not shrink the interval");

        let mut extended = values.clone();
        extended.push(1e6);
        let (lo_ext, hi_ext) = percentile_interval(&extended, 0.95).unwrap();
        assert!(lo_ext >= lo95 - 1e-12);
        assert!(hi_ext >= hi95 - 1e-12);
    }

    #[test]
    fn risk_ratio_values() {
        assert_eq!(to_risk_ratio(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(to_risk_ratio(0.0, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(to_risk_ratio(0.543, 0.508).unwrap(), 1.0689, epsilon = 1e-4);
        assert!(to_risk_ratio(0.5, 0.0).is_err());
    }

    fn schema() -> Schema {
        Schema {
            id: None,
            arm: "arm".into(),
            outcome: "y".into(),
            mediator: "m".into(),
            common_causes: vec!["c".into()],
            extra_confounders: vec![],
        }
    }

    fn trial_ds(n: usize, arm1: usize) -> Dataset {
        let records: Vec<ObservationRecord> = (0..n)
            .map(|i| ObservationRecord {
                id: i.to_string(),
                arm: u8::from(i < arm1),
                mediator: MediatorValue::Binary((i * 7) % 3 == 0),
                outcome: f64::from(u8::from((i * 11) % 5 < 2 + usize::from((i * 7) % 3 == 0))),
                common_causes: vec![f64::from(u8::from(i % 2 == 0))],
                extra_confounders: vec![],
            })
            .collect();
        Dataset::from_records(schema(), OutcomeKind::Binary, MediatorKind::Binary, None, records)
            .unwrap()
    }

    fn fixed_point(indirect: f64) -> PointEstimates {
        PointEstimates {
            base_arm: 0,
            indirect,
            direct: None,
            total: None,
            baseline_mean: 0.5,
            counterfactual_mean: 0.5 + indirect,
            risk_ratio: Some((0.5 + indirect) / 0.5),
            separation: false,
            extrapolated: 0,
        }
    }

    #[test]
    fn constant_estimator_gives_degenerate_interval() {
        let ds = trial_ds(40, 20);
        let cfg = BootstrapConfig { replicates: 25, level: 0.95, seed: 7, workers: 0 };
        let est = bootstrap(&ds, &|_| Ok(fixed_point(0.1)), &cfg).unwrap();
        assert_eq!(est.ci_indirect, (0.1, 0.1));
        assert_eq!(est.replicate_failures, 0);
        assert_eq!(est.separation_count, 0);
        let (lo, hi) = est.ci_risk_ratio.unwrap();
        assert_abs_diff_eq!(lo, 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.2, epsilon = 1e-12);
    }

    fn arm_contrast_estimator(ds: &Dataset) -> Result<PointEstimates> {
        organic_indirect_rel0(ds, None, &InterventionSpec::ArmContrast, None)
    }

    #[test]
    fn same_seed_is_bit_identical_across_worker_counts() {
        let ds = trial_ds(60, 30);
        let mut cfg = BootstrapConfig { replicates: 160, level: 0.95, seed: 42, workers: 1 };
        let serial = bootstrap(&ds, &arm_contrast_estimator, &cfg).unwrap();
        cfg.workers = 8;
        let parallel = bootstrap(&ds, &arm_contrast_estimator, &cfg).unwrap();
        assert_eq!(serial.ci_indirect, parallel.ci_indirect);
        assert_eq!(serial.ci_risk_ratio, parallel.ci_risk_ratio);
        assert_eq!(serial.replicate_failures, parallel.replicate_failures);
        assert_eq!(serial.separation_count, parallel.separation_count);

        cfg.seed = 43;
        let other = bootstrap(&ds, &arm_contrast_estimator, &cfg).unwrap();
        assert_ne!(serial.ci_indirect, other.ci_indirect, "a new seed draws new resamples");
    }

    #[test]
    fn failed_replicates_are_dropped_and_counted() {
        // A single arm-1 record: resamples that miss it cannot form the arm
        // contrast and must be dropped, roughly (1 − 1/n)^n ≈ 37% of draws.
        let ds = trial_ds(25, 1);
        let cfg = BootstrapConfig { replicates: 120, level: 0.9, seed: 5, workers: 0 };
        let est = bootstrap(&ds, &arm_contrast_estimator, &cfg).unwrap();
        assert!(est.replicate_failures > 10, "expected many dropped replicates");
        assert!(est.replicate_failures < 120, "some replicates must survive");
        assert!(est.ci_indirect.0 <= est.ci_indirect.1);
    }

    #[test]
    fn interval_orientation_holds_on_real_resamples() {
        let ds = trial_ds(80, 40);
        let cfg = BootstrapConfig { replicates: 200, level: 0.95, seed: 11, workers: 0 };
        let est = bootstrap(&ds, &arm_contrast_estimator, &cfg).unwrap();
        assert!(est.ci_indirect.0 <= est.ci_indirect.1);
        assert!(est.ci_indirect.0.is_finite() && est.ci_indirect.1.is_finite());
        assert_eq!(est.seed, 11);
    }
}
