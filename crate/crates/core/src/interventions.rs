//! Interventions on the mediator distribution and the discrete laws they
//! induce for plug-in estimation.
//!
//! Each intervention maps the base arm's mediator behavior toward the other
//! arm's, either through a model (odds multiplication for binary mediators)
//! or by transforming observed values directly (shifts, setting everything
//! below the assay limit, substituting an external sample, or contrasting
//! the two arms). Laws are represented without any density estimation: a
//! weighted list of mediator points per covariate row.

use crate::data::{Dataset, MediatorKind, MediatorValue};
use crate::error::{Error, Result};
use crate::glm::{ColSource, DesignSpec, FittedModel, LinkKind, ResolvedDesign, Term};

/// Odds multiplier: a positive number or the distinguished value infinity,
/// which sends every positive probability to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OddsFactor {
    Finite(f64),
    Infinite,
}

impl OddsFactor {
    fn validate(self) -> Result<()> {
        match self {
            OddsFactor::Finite(f) if f.is_finite() && f > 0.0 => Ok(()),
            OddsFactor::Infinite => Ok(()),
            _ => Err(Error::Invalid("odds factor must be positive (or infinite)".into())),
        }
    }
}

/// A hypothetical intervention on the mediator distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum InterventionSpec {
    /// Multiply the odds of a binary mediator by a factor, given covariates.
    OddsMultiply(OddsFactor),
    /// Lower every observed log10 mediator value by a nonnegative amount,
    /// censoring results that fall below the assay limit.
    Shift(f64),
    /// Send every mediator below the assay limit.
    SetAllBelow,
    /// Replace the mediator law by an external sample of (mediator,
    /// covariates) pairs, e.g. measurements from a separate treated study.
    EmpiricalSample(TreatedSample),
    /// Use the other arm's observed mediator distribution.
    ArmContrast,
}

/// Mediator measurements with covariates from outside the analysis dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatedSample {
    /// Covariate names shared by all pairs.
    pub names: Vec<String>,
    /// One (mediator, covariate values) pair per sampled participant.
    pub pairs: Vec<(MediatorValue, Vec<f64>)>,
}

/// A discrete mediator law: for each covariate row, mediator points with
/// probability weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MediatorLaw {
    /// Names of the covariate columns in each row.
    pub names: Vec<String>,
    pub rows: Vec<LawRow>,
}

/// One covariate row of a [`MediatorLaw`].
#[derive(Debug, Clone, PartialEq)]
pub struct LawRow {
    /// Covariate values, aligned with the law's names.
    pub covariates: Vec<f64>,
    /// Weighted mediator points; weights are nonnegative and sum to one.
    pub points: Vec<(MediatorValue, f64)>,
}

impl MediatorLaw {
    /// Checks the weight invariants on every row.
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Invalid("mediator law has no rows".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.covariates.len() != self.names.len() {
                return Err(Error::Invalid(format!("law row {i}: covariate length mismatch")));
            }
            let mut total = 0.0;
            for &(_, w) in &row.points {
                if w.is_nan() || w < 0.0 {
                    return Err(Error::Invalid(format!("law row {i}: negative weight")));
                }
                total += w;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "law row {i}: weights sum to {total}, not 1"
                )));
            }
        }
        Ok(())
    }
}

/// Applies an odds multiplier to a probability:
/// `p1 = F p0 / (1 - p0 + F p0)`. A factor of one returns `p0` unchanged;
/// an infinite factor sends every positive probability to one.
pub fn odds_transform(p0: f64, factor: OddsFactor) -> Result<f64> {
    factor.validate()?;
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Invalid(format!("probability {p0} outside [0, 1]")));
    }
    Ok(match factor {
        // Exact identity at F = 1: callers rely on the output being
        // bitwise-equal to the input, which the general formula does not
        // guarantee.
        OddsFactor::Finite(1.0) => p0,
        OddsFactor::Finite(f) => f * p0 / (1.0 - p0 + f * p0),
        OddsFactor::Infinite => {
            if p0 > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    })
}

/// Lowers an observed log10 mediator value by `delta`, censoring at the
/// assay limit; below-limit values stay below the limit. Pass
/// `f64::NEG_INFINITY` as the limit for uncensored mediators.
pub fn shift_mediator(m: MediatorValue, delta: f64, assay_limit: f64) -> Result<MediatorValue> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Invalid("shift must be nonnegative".into()));
    }
    match m {
        MediatorValue::Binary(_) => {
            Err(Error::Invalid("shift applies to limit-censored mediators only".into()))
        }
        MediatorValue::BelowLimit => Ok(MediatorValue::BelowLimit),
        MediatorValue::Observed(v) => {
            if delta.is_infinite() {
                return if assay_limit.is_finite() {
                    Ok(MediatorValue::BelowLimit)
                } else {
                    Err(Error::Invalid("infinite shift requires an assay limit".into()))
                };
            }
            let shifted = v - delta;
            if shifted >= assay_limit {
                Ok(MediatorValue::Observed(shifted))
            } else {
                Ok(MediatorValue::BelowLimit)
            }
        }
    }
}

pub(crate) fn design_references_mediator(design: &DesignSpec) -> bool {
    design.terms().iter().any(|t| match t {
        Term::MediatorMain | Term::BelowLimitIndicator => true,
        Term::Interaction(a, b) => a == "mediator" || b == "mediator",
        _ => false,
    })
}

// Fitted P(mediator = 1 | covariates) for one record of `ds`.
pub(crate) fn mediator_probability(
    model: &FittedModel,
    resolved: &ResolvedDesign,
    ds: &Dataset,
    i: usize,
) -> Result<f64> {
    let mut row = vec![0.0; resolved.width()];
    resolved.fill_row(
        ds.mediator(i),
        &|src| match src {
            ColSource::Cause(j) => ds.causes_row(i)[j],
            ColSource::Confounder(j) => ds.confounders_row(i)[j],
            ColSource::Arm => f64::from(ds.arm(i)),
        },
        &mut row,
    )?;
    Ok(model.mean_for_row(&row))
}

pub(crate) fn check_mediator_model(model: Option<&FittedModel>) -> Result<&FittedModel> {
    let model = model.ok_or_else(|| {
        Error::Invalid("odds interventions need a fitted mediator model".into())
    })?;
    if model.link() != LinkKind::Logit {
        return Err(Error::Invalid("mediator model must use the logit link".into()));
    }
    if design_references_mediator(model.design()) {
        return Err(Error::Invalid("mediator model design cannot reference the mediator".into()));
    }
    Ok(model)
}

pub(crate) fn law_names(ds: &Dataset) -> Vec<String> {
    let mut names = ds.schema().common_causes.clone();
    names.extend(ds.schema().extra_confounders.iter().cloned());
    names
}

pub(crate) fn law_covariates(ds: &Dataset, i: usize) -> Vec<f64> {
    let mut values = ds.causes_row(i).to_vec();
    values.extend_from_slice(ds.confounders_row(i));
    values
}

// Two-point binary law rows over the base arm, with per-record probability
// transform `p -> f(p)`.
fn two_point_rows(
    ds: &Dataset,
    base_arm: u8,
    model: &FittedModel,
    transform: &dyn Fn(f64) -> Result<f64>,
) -> Result<Vec<LawRow>> {
    let resolved = ResolvedDesign::for_dataset(model.design(), ds.schema())?;
    let mut rows = Vec::new();
    for i in ds.arm_indices(base_arm) {
        let p0 = mediator_probability(model, &resolved, ds, i)?;
        let p1 = transform(p0.clamp(0.0, 1.0))?;
        rows.push(LawRow {
            covariates: law_covariates(ds, i),
            points: vec![
                (MediatorValue::Binary(true), p1),
                (MediatorValue::Binary(false), 1.0 - p1),
            ],
        });
    }
    Ok(rows)
}

// Weight-one law rows from transformed observed mediators of one arm.
fn transformed_rows(
    ds: &Dataset,
    arm: u8,
    transform: &dyn Fn(MediatorValue) -> Result<MediatorValue>,
) -> Result<Vec<LawRow>> {
    let mut rows = Vec::new();
    for i in ds.arm_indices(arm) {
        rows.push(LawRow {
            covariates: law_covariates(ds, i),
            points: vec![(transform(ds.mediator(i))?, 1.0)],
        });
    }
    Ok(rows)
}

fn require_arm(ds: &Dataset, arm: u8, what: &str) -> Result<()> {
    if ds.arm_count(arm) == 0 {
        return Err(Error::Data(format!("{what} requires records in arm {arm}")));
    }
    Ok(())
}

fn require_censored(ds: &Dataset, what: &str) -> Result<()> {
    if ds.mediator_kind() != MediatorKind::LimitCensored {
        return Err(Error::Invalid(format!("{what} requires a limit-censored mediator")));
    }
    Ok(())
}

fn check_pairs(ds: &Dataset, sample: &TreatedSample) -> Result<()> {
    if sample.pairs.is_empty() {
        return Err(Error::Invalid("empirical sample has no pairs".into()));
    }
    for (i, (m, values)) in sample.pairs.iter().enumerate() {
        if m.kind() != ds.mediator_kind() {
            return Err(Error::Invalid(format!(
                "empirical sample pair {i}: mediator kind does not match the dataset"
            )));
        }
        if values.len() != sample.names.len() {
            return Err(Error::Invalid(format!(
                "empirical sample pair {i}: covariate length mismatch"
            )));
        }
    }
    Ok(())
}

/// The mediator law induced by an intervention over the base arm's
/// covariates (or the supplied sample's). `mediator_model` is required for
/// odds interventions; `base_arm` 0 gives the usual analysis and 1 the
/// arms-swapped one.
pub fn counterfactual_mediator_law(
    ds: &Dataset,
    spec: &InterventionSpec,
    mediator_model: Option<&FittedModel>,
    base_arm: u8,
) -> Result<MediatorLaw> {
    build_law(ds, spec, mediator_model, base_arm, true)
}

/// The matching representation of the base arm's factual mediator law,
/// i.e. the law [`counterfactual_mediator_law`] degenerates to under a null
/// intervention of the same kind. Plug-in effect estimates subtract the two.
pub fn factual_mediator_law(
    ds: &Dataset,
    spec: &InterventionSpec,
    mediator_model: Option<&FittedModel>,
    base_arm: u8,
) -> Result<MediatorLaw> {
    build_law(ds, spec, mediator_model, base_arm, false)
}

fn build_law(
    ds: &Dataset,
    spec: &InterventionSpec,
    mediator_model: Option<&FittedModel>,
    base_arm: u8,
    counterfactual: bool,
) -> Result<MediatorLaw> {
    if base_arm > 1 {
        return Err(Error::Invalid("base arm must be 0 or 1".into()));
    }
    require_arm(ds, base_arm, "the analysis")?;
    let other_arm = 1 - base_arm;
    let names = law_names(ds);

    // A binary mediator cannot go "below the limit" except in the sense of
    // certain membership in the below-limit class, which is exactly an
    // infinite odds multiplication.
    let spec = if matches!(spec, InterventionSpec::SetAllBelow)
        && ds.mediator_kind() == MediatorKind::Binary
    {
        &InterventionSpec::OddsMultiply(OddsFactor::Infinite)
    } else {
        spec
    };

    let rows = match spec {
        InterventionSpec::OddsMultiply(factor) => {
            factor.validate()?;
            if ds.mediator_kind() != MediatorKind::Binary {
                return Err(Error::Invalid(
                    "odds interventions require a binary mediator (binarize first)".into(),
                ));
            }
            let model = check_mediator_model(mediator_model)?;
            let effective: Box<dyn Fn(f64) -> Result<f64>> = if !counterfactual {
                Box::new(Ok)
            } else if base_arm == 0 {
                let f = *factor;
                Box::new(move |p| odds_transform(p, f))
            } else {
                // Arms swapped: undo the multiplication.
                match factor {
                    OddsFactor::Finite(f) => {
                        let inv = OddsFactor::Finite(1.0 / f);
                        Box::new(move |p| odds_transform(p, inv))
                    }
                    OddsFactor::Infinite => {
                        return Err(Error::Invalid(
                            "an infinite odds factor cannot be inverted for the arms-swapped analysis"
                                .into(),
                        ));
                    }
                }
            };
            two_point_rows(ds, base_arm, model, &effective)?
        }
        InterventionSpec::Shift(delta) => {
            require_censored(ds, "a shift intervention")?;
            if delta.is_nan() || *delta < 0.0 {
                return Err(Error::Invalid("shift must be nonnegative".into()));
            }
            let limit = ds.assay_limit().unwrap_or(f64::NEG_INFINITY);
            if !counterfactual {
                transformed_rows(ds, base_arm, &|m| Ok(m))?
            } else if base_arm == 0 {
                transformed_rows(ds, base_arm, &|m| shift_mediator(m, *delta, limit))?
            } else {
                // Arms swapped: shift back up, which is only well defined
                // when nothing in the base arm is censored.
                if ds.arm_indices(base_arm).iter().any(|&i| ds.mediator(i).is_below_limit()) {
                    return Err(Error::Invalid(
                        "below-limit mediators cannot be shifted upward for the arms-swapped analysis"
                            .into(),
                    ));
                }
                if !delta.is_finite() {
                    return Err(Error::Invalid("infinite shift cannot be inverted".into()));
                }
                transformed_rows(ds, base_arm, &|m| match m {
                    MediatorValue::Observed(v) => Ok(MediatorValue::Observed(v + *delta)),
                    _ => unreachable!("checked above"),
                })?
            }
        }
        InterventionSpec::SetAllBelow => {
            require_censored(ds, "set-all-below")?;
            if ds.assay_limit().is_none() {
                return Err(Error::Invalid("set-all-below requires an assay limit".into()));
            }
            if base_arm == 1 && counterfactual {
                return Err(Error::Invalid(
                    "set-all-below cannot be inverted for the arms-swapped analysis".into(),
                ));
            }
            if counterfactual {
                transformed_rows(ds, base_arm, &|_| Ok(MediatorValue::BelowLimit))?
            } else {
                transformed_rows(ds, base_arm, &|m| Ok(m))?
            }
        }
        InterventionSpec::EmpiricalSample(sample) => {
            if counterfactual {
                check_pairs(ds, sample)?;
                let rows = sample
                    .pairs
                    .iter()
                    .map(|(m, values)| LawRow {
                        covariates: values.clone(),
                        points: vec![(*m, 1.0)],
                    })
                    .collect();
                return Ok(MediatorLaw { names: sample.names.clone(), rows });
            }
            transformed_rows(ds, base_arm, &|m| Ok(m))?
        }
        InterventionSpec::ArmContrast => {
            require_arm(ds, other_arm, "an arm contrast")?;
            if counterfactual {
                transformed_rows(ds, other_arm, &|m| Ok(m))?
            } else {
                transformed_rows(ds, base_arm, &|m| Ok(m))?
            }
        }
    };
    Ok(MediatorLaw { names, rows })
}

/// Number of law points, weight greater than zero, whose mediator value lies
/// outside the observed mediator support of the base arm. A positive count
/// signals extrapolation beyond the outcome model's data.
pub fn count_extrapolated(law: &MediatorLaw, ds: &Dataset, base_arm: u8) -> usize {
    let base = ds.arm_indices(base_arm);
    let mut has_below = false;
    let mut has_zero = false;
    let mut has_one = false;
    let mut min_obs = f64::INFINITY;
    let mut max_obs = f64::NEG_INFINITY;
    for &i in &base {
        match ds.mediator(i) {
            MediatorValue::Binary(true) => has_one = true,
            MediatorValue::Binary(false) => has_zero = true,
            MediatorValue::BelowLimit => has_below = true,
            MediatorValue::Observed(v) => {
                min_obs = min_obs.min(v);
                max_obs = max_obs.max(v);
            }
        }
    }
    let mut count = 0;
    for row in &law.rows {
        for &(m, w) in &row.points {
            if w <= 0.0 {
                continue;
            }
            let outside = match m {
                MediatorValue::Binary(true) => !has_one,
                MediatorValue::Binary(false) => !has_zero,
                MediatorValue::BelowLimit => !has_below,
                MediatorValue::Observed(v) => v < min_obs || v > max_obs,
            };
            if outside {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, ObservationRecord, OutcomeKind, Schema};
    use crate::glm::{fit, ResponseKind};
    use approx::assert_abs_diff_eq;

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

    fn censored_ds() -> Dataset {
        let records: Vec<ObservationRecord> = (0..20)
            .map(|i| {
                let arm = u8::from(i >= 12);
                let below = i % 4 == 0;
                ObservationRecord {
                    id: i.to_string(),
                    arm,
                    mediator: if below {
                        MediatorValue::BelowLimit
                    } else {
                        MediatorValue::Observed(1.0 + (i as f64 % 7.0) * 0.5)
                    },
                    outcome: f64::from(u8::from(i % 2 == 0)),
                    common_causes: vec![f64::from(u8::from(i % 3 == 0))],
                    extra_confounders: vec![],
                }
            })
            .collect();
        Dataset::from_records(
            schema(),
            OutcomeKind::Binary,
            MediatorKind::LimitCensored,
            Some(1.0),
            records,
        )
        .unwrap()
    }

    fn binary_ds() -> Dataset {
        let records: Vec<ObservationRecord> = (0..24)
            .map(|i| {
                let arm = u8::from(i >= 12);
                ObservationRecord {
                    id: i.to_string(),
                    arm,
                    mediator: MediatorValue::Binary((i * 5) % 3 == 0),
                    outcome: f64::from(u8::from(i % 2 == 0)),
                    common_causes: vec![f64::from(u8::from(i % 3 == 0))],
                    extra_confounders: vec![],
                }
            })
            .collect();
        Dataset::from_records(schema(), OutcomeKind::Binary, MediatorKind::Binary, None, records)
            .unwrap()
    }

    fn mediator_model(ds: &Dataset, arm: u8) -> crate::glm::FittedModel {
        fit(
            ds,
            ResponseKind::MediatorBinary,
            &DesignSpec::default_mediator(ds, false),
            LinkKind::Logit,
            Some(arm),
        )
        .unwrap()
    }

    #[test]
    fn odds_transform_known_values() {
        assert_abs_diff_eq!(
            odds_transform(0.4, OddsFactor::Finite(2.0)).unwrap(),
            4.0 / 7.0,
            epsilon = 1e-15
        );
        // A factor of one is the identity, bit for bit.
        for p in [0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            assert_eq!(odds_transform(p, OddsFactor::Finite(1.0)).unwrap(), p);
        }
        assert_eq!(odds_transform(0.3, OddsFactor::Infinite).unwrap(), 1.0);
        assert_eq!(odds_transform(0.0, OddsFactor::Infinite).unwrap(), 0.0);
        assert_eq!(odds_transform(1.0, OddsFactor::Finite(5.0)).unwrap(), 1.0);
        assert!(odds_transform(0.4, OddsFactor::Finite(0.0)).is_err());
        assert!(odds_transform(0.4, OddsFactor::Finite(-2.0)).is_err());
        assert!(odds_transform(1.2, OddsFactor::Finite(2.0)).is_err());
    }

    #[test]
    fn doubling_odds_simplifies_for_f_two() {
        // For F = 2 the transform reduces to 2p / (1 + p).
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            let direct = odds_transform(p, OddsFactor::Finite(2.0)).unwrap();
            assert_abs_diff_eq!(direct, 2.0 * p / (1.0 + p), epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_known_values() {
        let limit = 1.0;
        assert_eq!(
            shift_mediator(MediatorValue::Observed(2.5), 1.0, limit).unwrap(),
            MediatorValue::Observed(1.5)
        );
        assert_eq!(
            shift_mediator(MediatorValue::Observed(1.7), 1.0, limit).unwrap(),
            MediatorValue::BelowLimit
        );
        // Landing exactly on the limit still counts as observed.
        assert_eq!(
            shift_mediator(MediatorValue::Observed(2.0), 1.0, limit).unwrap(),
            MediatorValue::Observed(1.0)
        );
        assert_eq!(
            shift_mediator(MediatorValue::BelowLimit, 3.0, limit).unwrap(),
            MediatorValue::BelowLimit
        );
        assert!(shift_mediator(MediatorValue::Observed(2.0), -0.5, limit).is_err());
        assert!(shift_mediator(MediatorValue::Binary(true), 0.5, limit).is_err());
        assert_eq!(
            shift_mediator(MediatorValue::Observed(9.0), f64::INFINITY, limit).unwrap(),
            MediatorValue::BelowLimit
        );
    }

    #[test]
    fn odds_law_is_two_point_with_unit_weights() {
        let ds = binary_ds();
        let model = mediator_model(&ds, 0);
        let law = counterfactual_mediator_law(
            &ds,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0)),
            Some(&model),
            0,
        )
        .unwrap();
        law.validate().unwrap();
        assert_eq!(law.rows.len(), ds.arm_count(0));
        for row in &law.rows {
            assert_eq!(row.points.len(), 2);
        }
        // The factual law under the same spec uses untransformed fitted
        // probabilities.
        let null = factual_mediator_law(
            &ds,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0)),
            Some(&model),
            0,
        )
        .unwrap();
        null.validate().unwrap();
        for (cf, nl) in law.rows.iter().zip(&null.rows) {
            let p_cf = cf.points[0].1;
            let p_nl = nl.points[0].1;
            assert!(p_cf >= p_nl, "tripling odds cannot lower the probability");
        }
    }

    #[test]
    fn odds_law_requires_binary_mediator_and_model() {
        let ds = censored_ds();
        let spec = InterventionSpec::OddsMultiply(OddsFactor::Finite(2.0));
        assert!(counterfactual_mediator_law(&ds, &spec, None, 0).is_err());
        let bds = binary_ds();
        let err = counterfactual_mediator_law(&bds, &spec, None, 0).unwrap_err();
        assert!(err.to_string().contains("mediator model"));
    }

    #[test]
    fn shift_law_transforms_base_arm_records() {
        let ds = censored_ds();
        let law =
            counterfactual_mediator_law(&ds, &InterventionSpec::Shift(0.5), None, 0).unwrap();
        law.validate().unwrap();
        assert_eq!(law.rows.len(), ds.arm_count(0));
        let idx = ds.arm_indices(0);
        for (row, &i) in law.rows.iter().zip(&idx) {
            match (ds.mediator(i), row.points[0].0) {
                (MediatorValue::Observed(v), MediatorValue::Observed(s)) => {
                    assert_abs_diff_eq!(s, v - 0.5, epsilon = 0.0)
                }
                (MediatorValue::Observed(v), MediatorValue::BelowLimit) => assert!(v - 0.5 < 1.0),
                (MediatorValue::BelowLimit, MediatorValue::BelowLimit) => {}
                other => panic!("unexpected shift outcome {other:?}"),
            }
        }
    }

    #[test]
    fn set_all_below_law_is_degenerate() {
        let ds = censored_ds();
        let law =
            counterfactual_mediator_law(&ds, &InterventionSpec::SetAllBelow, None, 0).unwrap();
        law.validate().unwrap();
        assert!(law
            .rows
            .iter()
            .all(|r| r.points == vec![(MediatorValue::BelowLimit, 1.0)]));
    }

    #[test]
    fn set_all_below_on_binary_equals_infinite_odds() {
        let ds = binary_ds();
        let model = mediator_model(&ds, 0);
        let a =
            counterfactual_mediator_law(&ds, &InterventionSpec::SetAllBelow, Some(&model), 0)
                .unwrap();
        let b = counterfactual_mediator_law(
            &ds,
            &InterventionSpec::OddsMultiply(OddsFactor::Infinite),
            Some(&model),
            0,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn arm_contrast_law_uses_other_arm_records() {
        let ds = censored_ds();
        let law =
            counterfactual_mediator_law(&ds, &InterventionSpec::ArmContrast, None, 0).unwrap();
        assert_eq!(law.rows.len(), ds.arm_count(1));
        let idx = ds.arm_indices(1);
        for (row, &i) in law.rows.iter().zip(&idx) {
            assert_eq!(row.points[0].0, ds.mediator(i));
            assert_eq!(row.covariates, ds.causes_row(i));
        }
        // Swapped base arm reverses the roles.
        let swapped =
            counterfactual_mediator_law(&ds, &InterventionSpec::ArmContrast, None, 1).unwrap();
        assert_eq!(swapped.rows.len(), ds.arm_count(0));
    }

    #[test]
    fn empirical_sample_law_keeps_pairs() {
        let ds = censored_ds();
        let sample = TreatedSample {
            names: vec!["c".into()],
            pairs: vec![
                (MediatorValue::BelowLimit, vec![1.0]),
                (MediatorValue::Observed(2.25), vec![0.0]),
            ],
        };
        let law = counterfactual_mediator_law(
            &ds,
            &InterventionSpec::EmpiricalSample(sample.clone()),
            None,
            0,
        )
        .unwrap();
        law.validate().unwrap();
        assert_eq!(law.rows.len(), 2);
        assert_eq!(law.rows[1].points[0].0, MediatorValue::Observed(2.25));
        // Kind mismatches are rejected.
        let bad = TreatedSample {
            names: vec!["c".into()],
            pairs: vec![(MediatorValue::Binary(true), vec![0.0])],
        };
        assert!(counterfactual_mediator_law(
            &ds,
            &InterventionSpec::EmpiricalSample(bad),
            None,
            0
        )
        .is_err());
    }

    #[test]
    fn extrapolation_counts_points_outside_base_support() {
        let ds = censored_ds();
        let sample = TreatedSample {
            names: vec!["c".into()],
            // 9.9 is far above every observed value; 2.0 is inside.
            pairs: vec![
                (MediatorValue::Observed(9.9), vec![0.0]),
                (MediatorValue::Observed(2.0), vec![1.0]),
            ],
        };
        let law = counterfactual_mediator_law(
            &ds,
            &InterventionSpec::EmpiricalSample(sample),
            None,
            0,
        )
        .unwrap();
        assert_eq!(count_extrapolated(&law, &ds, 0), 1);
        let inside =
            counterfactual_mediator_law(&ds, &InterventionSpec::Shift(0.25), None, 0).unwrap();
        assert_eq!(count_extrapolated(&inside, &ds, 0), 0);
    }

    #[test]
    fn arms_swapped_restrictions() {
        let ds = censored_ds();
        // Arm 1 contains below-limit records, so an upward shift is refused.
        assert!(counterfactual_mediator_law(&ds, &InterventionSpec::Shift(0.5), None, 1).is_err());
        assert!(counterfactual_mediator_law(&ds, &InterventionSpec::SetAllBelow, None, 1).is_err());
        let bds = binary_ds();
        let model = mediator_model(&bds, 1);
        assert!(counterfactual_mediator_law(
            &bds,
            &InterventionSpec::OddsMultiply(OddsFactor::Infinite),
            Some(&model),
            1
        )
        .is_err());
        let finite = counterfactual_mediator_law(
            &bds,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(2.0)),
            Some(&model),
            1,
        )
        .unwrap();
        finite.validate().unwrap();
        assert_eq!(finite.rows.len(), bds.arm_count(1));
    }

    proptest::proptest! {
        // Multiplying odds by F and then by 1/F returns the original
        // probability.
        #[test]
        fn odds_round_trip(p in 0.0f64..=1.0, f in 0.01f64..100.0) {
            let forward = odds_transform(p, OddsFactor::Finite(f)).unwrap();
            let back = odds_transform(forward, OddsFactor::Finite(1.0 / f)).unwrap();
            proptest::prop_assert!((back - p).abs() <= 1e-12);
        }

        // Odds transforms are monotone in the factor.
        #[test]
        fn odds_monotone_in_factor(p in 0.01f64..1.0, f in 0.1f64..50.0, g in 1.001f64..4.0) {
            let lo = odds_transform(p, OddsFactor::Finite(f)).unwrap();
            let hi = odds_transform(p, OddsFactor::Finite(f * g)).unwrap();
            proptest::prop_assert!(hi >= lo);
            let inf = odds_transform(p, OddsFactor::Infinite).unwrap();
            proptest::prop_assert!(inf >= hi);
        }

        // Two shifts compose additively. Dyadic inputs (multiples of 1/64)
        // keep the arithmetic exact, so the censoring boundary is
        // unambiguous.
        #[test]
        fn shift_composition(v in 64i64..640, a in 0i64..320, b in 0i64..320) {
            let limit = 1.0;
            let m = MediatorValue::Observed(v as f64 / 64.0);
            let a = a as f64 / 64.0;
            let b = b as f64 / 64.0;
            let two_steps =
                shift_mediator(shift_mediator(m, a, limit).unwrap(), b, limit).unwrap();
            let one_step = shift_mediator(m, a + b, limit).unwrap();
            proptest::prop_assert_eq!(two_steps, one_step);
        }
    }
}
