//! Plug-in estimators of organic indirect and direct effects.
//!
//! The central quantity is the counterfactual outcome mean: the base arm's
//! outcome regression averaged over a counterfactual mediator law and the
//! base arm's covariates. The indirect effect is estimated as the difference
//! between this plug-in mean and the plug-in mean under the matching null
//! law (the base arm's own mediator distribution, represented the same way).
//! Because a null intervention induces bitwise-identical laws, its estimated
//! indirect effect is exactly zero, and the direct effect is defined as the
//! arm contrast minus the indirect effect, making the decomposition
//! `indirect + direct = total` hold by construction.

use serde::Serialize;

use crate::data::{Dataset, MediatorKind, OutcomeKind};
use crate::error::{Error, Result};
use crate::glm::{
    fit, ColSource, CoefficientRole, DesignSpec, FittedModel, LinkKind, ResolvedDesign,
    ResponseKind,
};
use crate::interventions::{
    check_mediator_model, count_extrapolated, counterfactual_mediator_law,
    design_references_mediator, factual_mediator_law, law_covariates, law_names,
    mediator_probability, odds_transform, InterventionSpec, LawRow, MediatorLaw, TreatedSample,
};

/// Scale of a reported effect difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectScale {
    /// Difference of outcome probabilities (binary outcome).
    RiskDifference,
    /// Difference of outcome means (continuous outcome).
    MeanDifference,
}

/// The reporting scale implied by a dataset's outcome kind.
pub fn effect_scale(ds: &Dataset) -> EffectScale {
    match ds.outcome_kind() {
        OutcomeKind::Binary => EffectScale::RiskDifference,
        OutcomeKind::Continuous => EffectScale::MeanDifference,
    }
}

/// Point estimates from one analysis.
///
/// Sign convention: `indirect` is the effect of turning the mediator pathway
/// on. For base arm 0 it estimates E(Y^(0,I=1)) − E(Y^(0)); for base arm 1
/// it estimates E(Y^(1)) − E(Y^(1,I=1)). In both cases `total` is the plain
/// arm contrast E(Y|A=1) − E(Y|A=0) and `direct = total − indirect`.
///
/// `indirect` is computed as a difference of two plug-in means, the
/// counterfactual one and the factual one, over identically represented
/// laws. The factual plug-in mean agrees with `baseline_mean` (the raw
/// base-arm outcome mean) only up to the model-fit tolerance, so
/// `counterfactual_mean − baseline_mean` can differ from `indirect` by up
/// to roughly 1e-8 for logistic outcome models; for the standardized
/// observational estimator, where `baseline_mean` is itself the factual
/// plug-in mean, the identity is exact.
#[derive(Debug, Clone, Serialize)]
pub struct PointEstimates {
    /// Which arm's outcome model and mediator distribution form the base.
    pub base_arm: u8,
    /// Indirect effect: outcome change attributable to the mediator shift.
    pub indirect: f64,
    /// Direct effect, `total − indirect`; absent without both arms.
    pub direct: Option<f64>,
    /// Arm contrast E(Y|A=1) − E(Y|A=0); absent without both arms.
    pub total: Option<f64>,
    /// Observed mean outcome in the base arm (raw for randomized analyses,
    /// standardized for the observational estimator).
    pub baseline_mean: f64,
    /// Plug-in mean outcome under the counterfactual mediator law.
    pub counterfactual_mean: f64,
    /// `counterfactual_mean / baseline_mean`; present only for binary
    /// outcomes with a positive baseline.
    pub risk_ratio: Option<f64>,
    /// Whether any fitted model showed separation.
    pub separation: bool,
    /// Counterfactual mediator points outside the base arm's observed
    /// mediator support (an extrapolation warning, not an error).
    pub extrapolated: usize,
}

fn outcome_link(ds: &Dataset) -> LinkKind {
    match ds.outcome_kind() {
        OutcomeKind::Binary => LinkKind::Logit,
        OutcomeKind::Continuous => LinkKind::Identity,
    }
}

fn risk_ratio_value(ds: &Dataset, counterfactual_mean: f64, baseline_mean: f64) -> Option<f64> {
    if ds.outcome_kind() == OutcomeKind::Binary && baseline_mean > 0.0 {
        Some(counterfactual_mean / baseline_mean)
    } else {
        None
    }
}

/// Per-row weighted mean predictions of the outcome model over a mediator
/// law. Averaging these gives [`plugin_counterfactual_mean`]; the per-row
/// values also support crude variance calculations.
pub fn plugin_row_means(outcome_model: &FittedModel, law: &MediatorLaw) -> Result<Vec<f64>> {
    law.validate()?;
    let resolved = ResolvedDesign::for_names(outcome_model.design(), &law.names)?;
    let mut buf = vec![0.0; resolved.width()];
    let mut out = Vec::with_capacity(law.rows.len());
    for row in &law.rows {
        let mut mean = 0.0;
        for &(m, w) in &row.points {
            if w == 0.0 {
                continue;
            }
            resolved.fill_row(
                m,
                &|src| match src {
                    ColSource::Cause(j) => row.covariates[j],
                    _ => unreachable!("name contexts resolve to cause indices only"),
                },
                &mut buf,
            )?;
            mean += w * outcome_model.mean_for_row(&buf);
        }
        out.push(mean);
    }
    Ok(out)
}

/// The plug-in counterfactual outcome mean: the outcome model's predictions
/// averaged over the law's weighted mediator points and covariate rows.
pub fn plugin_counterfactual_mean(outcome_model: &FittedModel, law: &MediatorLaw) -> Result<f64> {
    let means = plugin_row_means(outcome_model, law)?;
    Ok(means.iter().sum::<f64>() / means.len() as f64)
}

fn organic_point_estimates(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    spec: &InterventionSpec,
    mediator_design: Option<&DesignSpec>,
    base_arm: u8,
) -> Result<PointEstimates> {
    let default_outcome;
    let outcome_design = match outcome_design {
        Some(d) => d,
        None => {
            default_outcome = DesignSpec::default_outcome(ds, false);
            &default_outcome
        }
    };
    let outcome_model =
        fit(ds, ResponseKind::Outcome, outcome_design, outcome_link(ds), Some(base_arm))?;

    // Odds interventions, and set-all-below on an already-binary mediator
    // (which reduces to an infinite odds multiplication), need the fitted
    // base-arm mediator model.
    let needs_mediator_model = matches!(spec, InterventionSpec::OddsMultiply(_))
        || (matches!(spec, InterventionSpec::SetAllBelow)
            && ds.mediator_kind() == MediatorKind::Binary);
    let mediator_model = if needs_mediator_model {
        let default_mediator;
        let design = match mediator_design {
            Some(d) => d,
            None => {
                default_mediator = DesignSpec::default_mediator(ds, false);
                &default_mediator
            }
        };
        Some(fit(ds, ResponseKind::MediatorBinary, design, LinkKind::Logit, Some(base_arm))?)
    } else {
        None
    };

    let cf_law = counterfactual_mediator_law(ds, spec, mediator_model.as_ref(), base_arm)?;
    let null_law = factual_mediator_law(ds, spec, mediator_model.as_ref(), base_arm)?;
    let counterfactual_mean = plugin_counterfactual_mean(&outcome_model, &cf_law)?;
    let factual_mean = plugin_counterfactual_mean(&outcome_model, &null_law)?;
    let indirect = if base_arm == 0 {
        counterfactual_mean - factual_mean
    } else {
        factual_mean - counterfactual_mean
    };

    let baseline_mean = ds
        .arm_mean_outcome(base_arm)
        .ok_or_else(|| Error::Data(format!("no records in arm {base_arm}")))?;
    let total = match (ds.arm_mean_outcome(1), ds.arm_mean_outcome(0)) {
        (Some(y1), Some(y0)) => Some(y1 - y0),
        _ => None,
    };
    let direct = total.map(|t| t - indirect);
    let separation = outcome_model.separation_flag
        || mediator_model.as_ref().is_some_and(|m| m.separation_flag);

    Ok(PointEstimates {
        base_arm,
        indirect,
        direct,
        total,
        baseline_mean,
        counterfactual_mean,
        risk_ratio: risk_ratio_value(ds, counterfactual_mean, baseline_mean),
        separation,
        extrapolated: count_extrapolated(&cf_law, ds, base_arm),
    })
}

/// Organic indirect and direct effects relative to the untreated arm: the
/// arm-0 outcome model averaged over the intervention's mediator law. Pass
/// `None` designs to use the defaults. The intervention kinds and their
/// requirements are described on [`InterventionSpec`].
pub fn organic_indirect_rel0(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    spec: &InterventionSpec,
    mediator_design: Option<&DesignSpec>,
) -> Result<PointEstimates> {
    organic_point_estimates(ds, outcome_design, spec, mediator_design, 0)
}

/// The arms-swapped analysis: the arm-1 outcome model and mediator
/// distribution form the base, and the intervention moves the mediator back
/// toward its untreated law. `indirect` keeps the orientation of
/// [`organic_indirect_rel0`] (the outcome change from turning the mediator
/// pathway on), so under exchangeable arms the two agree.
pub fn organic_indirect_rel1(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    spec: &InterventionSpec,
    mediator_design: Option<&DesignSpec>,
) -> Result<PointEstimates> {
    organic_point_estimates(ds, outcome_design, spec, mediator_design, 1)
}

/// The treated-sample estimator: predictions of the base (arm 0) outcome
/// model averaged over externally measured (mediator, covariates) pairs,
/// minus the factual plug-in mean. Works on datasets with or without an
/// arm-1 sample.
pub fn indirect_from_treated_sample(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    sample: &TreatedSample,
) -> Result<PointEstimates> {
    organic_indirect_rel0(
        ds,
        outcome_design,
        &InterventionSpec::EmpiricalSample(sample.clone()),
        None,
    )
}

fn binary_product_parts(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    mediator_design: Option<&DesignSpec>,
    arm: u8,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    if arm > 1 {
        return Err(Error::Invalid("base arm must be 0 or 1".into()));
    }
    if ds.mediator_kind() != MediatorKind::Binary {
        return Err(Error::Invalid(
            "the product method requires a binary mediator (binarize first)".into(),
        ));
    }
    let default_outcome;
    let outcome_design = match outcome_design {
        Some(d) => d,
        None => {
            default_outcome = DesignSpec::default_outcome(ds, false);
            &default_outcome
        }
    };
    let default_mediator;
    let mediator_design = match mediator_design {
        Some(d) => d,
        None => {
            default_mediator = DesignSpec::default_mediator(ds, false);
            &default_mediator
        }
    };
    let outcome_model =
        fit(ds, ResponseKind::Outcome, outcome_design, outcome_link(ds), Some(arm))?;
    let m1 = fit(ds, ResponseKind::MediatorBinary, mediator_design, LinkKind::Logit, Some(1))?;
    let m0 = fit(ds, ResponseKind::MediatorBinary, mediator_design, LinkKind::Logit, Some(0))?;
    check_mediator_model(Some(&m1))?;

    let resolved_outcome = ResolvedDesign::for_dataset(outcome_model.design(), ds.schema())?;
    let resolved_mediator = ResolvedDesign::for_dataset(mediator_design, ds.schema())?;
    let mut buf = vec![0.0; resolved_outcome.width()];
    let mut parts = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let get = |src: ColSource| match src {
            ColSource::Cause(j) => ds.causes_row(i)[j],
            ColSource::Confounder(j) => ds.confounders_row(i)[j],
            ColSource::Arm => f64::from(ds.arm(i)),
        };
        resolved_outcome.fill_row(crate::data::MediatorValue::Binary(true), &get, &mut buf)?;
        let e1 = outcome_model.mean_for_row(&buf);
        resolved_outcome.fill_row(crate::data::MediatorValue::Binary(false), &get, &mut buf)?;
        let e0 = outcome_model.mean_for_row(&buf);
        let p1 = mediator_probability(&m1, &resolved_mediator, ds, i)?;
        let p0 = mediator_probability(&m0, &resolved_mediator, ds, i)?;
        parts.push((e1, e0, p1, p0));
    }
    Ok(parts)
}

/// The product method for binary mediators: the outcome gap between
/// mediator levels times the between-arm gap in mediator probability,
/// averaged over every record's covariates. `arm` selects which arm's
/// outcome model supplies the gap.
pub fn binary_product(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    mediator_design: Option<&DesignSpec>,
    arm: u8,
) -> Result<f64> {
    let parts = binary_product_parts(ds, outcome_design, mediator_design, arm)?;
    let n = parts.len() as f64;
    Ok(parts.iter().map(|&(e1, e0, p1, p0)| (e1 - e0) * (p1 - p0)).sum::<f64>() / n)
}

/// The same estimand as [`binary_product`] written as a two-term sum over
/// mediator levels instead of a single product. Algebraically identical;
/// implemented separately so the two routes can be cross-checked.
pub fn binary_product_sum_form(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    mediator_design: Option<&DesignSpec>,
    arm: u8,
) -> Result<f64> {
    let parts = binary_product_parts(ds, outcome_design, mediator_design, arm)?;
    let n = parts.len() as f64;
    Ok(parts
        .iter()
        .map(|&(e1, e0, p1, p0)| e1 * (p1 - p0) + e0 * ((1.0 - p1) - (1.0 - p0)))
        .sum::<f64>()
        / n)
}

/// The product method for linear models: the treatment coefficient of the
/// mediator regression times the mediator coefficient of the outcome
/// regression. Both models must use the identity link; an interaction term
/// in the outcome model is permitted and ignored.
pub fn linear_product(mediator_model: &FittedModel, outcome_model: &FittedModel) -> Result<f64> {
    if mediator_model.link() != LinkKind::Identity || outcome_model.link() != LinkKind::Identity {
        return Err(Error::Invalid("the linear product method needs identity-link models".into()));
    }
    let alpha = mediator_model.coefficient_by_role(CoefficientRole::TreatmentArm).ok_or_else(
        || Error::Invalid("mediator model must contain exactly one treatment-arm term".into()),
    )?;
    let beta = outcome_model
        .coefficient_by_role(CoefficientRole::Mediator)
        .ok_or_else(|| Error::Invalid("outcome model must contain exactly one mediator term".into()))?;
    Ok(beta * alpha)
}

/// The observational estimator: conditions on the extra confounders Z
/// throughout and standardizes over every record's (C, Z) instead of the
/// untreated arm's, so `baseline_mean` is itself a plug-in mean and
/// `indirect = counterfactual_mean − baseline_mean` exactly. Supports odds
/// and arm-contrast interventions on a binary mediator; `total` and
/// `direct` are not produced, since the raw arm contrast is confounded.
pub fn observational_indirect(
    ds: &Dataset,
    outcome_design: Option<&DesignSpec>,
    spec: &InterventionSpec,
    mediator_design: Option<&DesignSpec>,
) -> Result<PointEstimates> {
    if ds.schema().extra_confounders.is_empty() {
        return Err(Error::Invalid(
            "the observational estimator requires extra confounder columns".into(),
        ));
    }
    if ds.mediator_kind() != MediatorKind::Binary {
        return Err(Error::Invalid(
            "the observational estimator requires a binary mediator (binarize first)".into(),
        ));
    }
    match spec {
        InterventionSpec::OddsMultiply(_) | InterventionSpec::ArmContrast => {}
        _ => {
            return Err(Error::Invalid(
                "the observational estimator supports odds and arm-contrast interventions".into(),
            ))
        }
    }

    let default_outcome;
    let outcome_design = match outcome_design {
        Some(d) => d,
        None => {
            default_outcome = DesignSpec::default_outcome(ds, true);
            &default_outcome
        }
    };
    let default_mediator;
    let mediator_design = match mediator_design {
        Some(d) => d,
        None => {
            default_mediator = DesignSpec::default_mediator(ds, true);
            &default_mediator
        }
    };
    if design_references_mediator(mediator_design) {
        return Err(Error::Invalid("mediator model design cannot reference the mediator".into()));
    }

    let outcome_model = fit(ds, ResponseKind::Outcome, outcome_design, outcome_link(ds), Some(0))?;
    let m0 = fit(ds, ResponseKind::MediatorBinary, mediator_design, LinkKind::Logit, Some(0))?;
    let m1 = match spec {
        InterventionSpec::ArmContrast => {
            Some(fit(ds, ResponseKind::MediatorBinary, mediator_design, LinkKind::Logit, Some(1))?)
        }
        _ => None,
    };

    let resolved_mediator = ResolvedDesign::for_dataset(mediator_design, ds.schema())?;
    let names = law_names(ds);
    let mut cf_rows = Vec::with_capacity(ds.n());
    let mut null_rows = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let p0 = mediator_probability(&m0, &resolved_mediator, ds, i)?.clamp(0.0, 1.0);
        let p_cf = match spec {
            InterventionSpec::OddsMultiply(factor) => odds_transform(p0, *factor)?,
            InterventionSpec::ArmContrast => {
                mediator_probability(m1.as_ref().expect("fitted above"), &resolved_mediator, ds, i)?
                    .clamp(0.0, 1.0)
            }
            _ => unreachable!("spec checked above"),
        };
        let covariates = law_covariates(ds, i);
        cf_rows.push(two_point_row(covariates.clone(), p_cf));
        null_rows.push(two_point_row(covariates, p0));
    }
    let cf_law = MediatorLaw { names: names.clone(), rows: cf_rows };
    let null_law = MediatorLaw { names, rows: null_rows };

    let counterfactual_mean = plugin_counterfactual_mean(&outcome_model, &cf_law)?;
    let baseline_mean = plugin_counterfactual_mean(&outcome_model, &null_law)?;
    let separation = outcome_model.separation_flag
        || m0.separation_flag
        || m1.as_ref().is_some_and(|m| m.separation_flag);

    Ok(PointEstimates {
        base_arm: 0,
        indirect: counterfactual_mean - baseline_mean,
        direct: None,
        total: None,
        baseline_mean,
        counterfactual_mean,
        risk_ratio: risk_ratio_value(ds, counterfactual_mean, baseline_mean),
        separation,
        extrapolated: count_extrapolated(&cf_law, ds, 0),
    })
}

fn two_point_row(covariates: Vec<f64>, p: f64) -> LawRow {
    LawRow {
        covariates,
        points: vec![
            (crate::data::MediatorValue::Binary(true), p),
            (crate::data::MediatorValue::Binary(false), 1.0 - p),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MediatorValue, ObservationRecord, Schema};
    use crate::glm::Term;
    use crate::interventions::OddsFactor;
    use approx::assert_abs_diff_eq;

    fn schema(causes: &[&str], confounders: &[&str]) -> Schema {
        Schema {
            id: None,
            arm: "arm".into(),
            outcome: "y".into(),
            mediator: "m".into(),
            common_causes: causes.iter().map(|s| s.to_string()).collect(),
            extra_confounders: confounders.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn record(
        i: usize,
        arm: u8,
        mediator: MediatorValue,
        outcome: f64,
        causes: Vec<f64>,
        confounders: Vec<f64>,
    ) -> ObservationRecord {
        ObservationRecord {
            id: i.to_string(),
            arm,
            mediator,
            outcome,
            common_causes: causes,
            extra_confounders: confounders,
        }
    }

    /// No covariates; continuous outcome so fits are exact least squares.
    /// Arm 0: outcome is 2 + 4·m on mediator values m ∈ {0,0,1,1};
    /// arm 1 mediators are {1,1,0,1}.
    fn toy_contrast_ds() -> Dataset {
        let mut records = Vec::new();
        for (i, (m, y)) in [(false, 1.0), (false, 3.0), (true, 5.0), (true, 7.0)]
            .into_iter()
            .enumerate()
        {
            records.push(record(i, 0, MediatorValue::Binary(m), y, vec![], vec![]));
        }
        for (i, (m, y)) in [(true, 6.0), (true, 8.0), (false, 2.0), (true, 9.0)]
            .into_iter()
            .enumerate()
        {
            records.push(record(4 + i, 1, MediatorValue::Binary(m), y, vec![], vec![]));
        }
        Dataset::from_records(
            schema(&[], &[]),
            OutcomeKind::Continuous,
            MediatorKind::Binary,
            None,
            records,
        )
        .unwrap()
    }

    fn binary_logistic_ds(n: usize) -> Dataset {
        // Deterministic pseudo-random pattern with a positive
        // mediator-outcome association in both arms.
        let records: Vec<ObservationRecord> = (0..n)
            .map(|i| {
                let arm = u8::from(i % 2 == 1);
                let c = f64::from(u8::from((i / 2) % 2 == 0));
                let h = (i * 2654435761) % 97;
                let m = h < 30 + 40 * arm as usize + 10 * c as usize;
                let h2 = (i * 40503 + 7) % 89;
                let y = h2 < 20 + 45 * usize::from(m) + 8 * c as usize;
                record(
                    i,
                    arm,
                    MediatorValue::Binary(m),
                    f64::from(u8::from(y)),
                    vec![c],
                    vec![],
                )
            })
            .collect();
        Dataset::from_records(
            schema(&["c"], &[]),
            OutcomeKind::Binary,
            MediatorKind::Binary,
            None,
            records,
        )
        .unwrap()
    }

    fn censored_ds() -> Dataset {
        let records: Vec<ObservationRecord> = (0..40)
            .map(|i| {
                let arm = u8::from(i >= 20);
                let below = (i + arm as usize).is_multiple_of(5);
                let v = 1.0 + ((i * 13) % 17) as f64 * 0.25;
                let mediator = if below {
                    MediatorValue::BelowLimit
                } else {
                    MediatorValue::Observed(v)
                };
                let y = f64::from(u8::from((i * 7) % 10 < 3 + usize::from(below) * 4));
                record(i, arm, mediator, y, vec![f64::from(u8::from(i % 3 == 0))], vec![])
            })
            .collect();
        Dataset::from_records(
            schema(&["c"], &[]),
            OutcomeKind::Binary,
            MediatorKind::LimitCensored,
            Some(1.0),
            records,
        )
        .unwrap()
    }

    #[test]
    fn arm_contrast_matches_hand_computation() {
        let ds = toy_contrast_ds();
        let est =
            organic_indirect_rel0(&ds, None, &InterventionSpec::ArmContrast, None).unwrap();
        // Arm-0 outcome model: exactly 2 + 4m. Counterfactual mean over
        // arm-1 mediators {1,1,0,1}: 2 + 4·(3/4) = 5. Factual mean over
        // arm-0 mediators {0,0,1,1}: 2 + 4·(1/2) = 4 (also the raw mean).
        assert_abs_diff_eq!(est.counterfactual_mean, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.indirect, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.baseline_mean, 4.0, epsilon = 1e-12);
        let total = est.total.unwrap();
        assert_abs_diff_eq!(total, 6.25 - 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.direct.unwrap(), total - 1.0, epsilon = 1e-12);
        assert!(est.risk_ratio.is_none(), "continuous outcome has no risk ratio");
    }

    #[test]
    fn null_interventions_are_exactly_zero() {
        let censored = censored_ds();
        let est =
            organic_indirect_rel0(&censored, None, &InterventionSpec::Shift(0.0), None).unwrap();
        assert_eq!(est.indirect, 0.0, "zero shift must give a bitwise zero");
        assert_eq!(est.extrapolated, 0);

        let binary = binary_logistic_ds(120);
        let est = organic_indirect_rel0(
            &binary,
            None,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(1.0)),
            None,
        )
        .unwrap();
        assert_eq!(est.indirect, 0.0, "unit odds factor must give a bitwise zero");
        // The plug-in factual mean agrees with the raw baseline up to the
        // fit tolerance, so the risk ratio sits at 1 to that accuracy.
        assert_abs_diff_eq!(est.risk_ratio.unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn decomposition_is_exact() {
        let ds = binary_logistic_ds(160);
        for spec in [
            InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0)),
            InterventionSpec::OddsMultiply(OddsFactor::Infinite),
            InterventionSpec::ArmContrast,
        ] {
            let est = organic_indirect_rel0(&ds, None, &spec, None).unwrap();
            let total = est.total.unwrap();
            assert_abs_diff_eq!(est.indirect + est.direct.unwrap(), total, epsilon = 1e-12);
        }
    }

    #[test]
    fn indirect_monotone_in_odds_factor() {
        let ds = binary_logistic_ds(200);
        let factors = [
            OddsFactor::Finite(1.0),
            OddsFactor::Finite(2.0),
            OddsFactor::Finite(3.0),
            OddsFactor::Finite(10.0),
            OddsFactor::Infinite,
        ];
        let mut last = f64::NEG_INFINITY;
        for f in factors {
            let est = organic_indirect_rel0(
                &ds,
                None,
                &InterventionSpec::OddsMultiply(f),
                None,
            )
            .unwrap();
            assert!(
                est.indirect >= last - 1e-12,
                "indirect effect decreased from {last} to {} at {f:?}",
                est.indirect
            );
            last = est.indirect;
        }
    }

    #[test]
    fn binary_outcome_estimates_are_bounded() {
        let ds = binary_logistic_ds(150);
        for spec in [
            InterventionSpec::OddsMultiply(OddsFactor::Finite(5.0)),
            InterventionSpec::ArmContrast,
        ] {
            let est = organic_indirect_rel0(&ds, None, &spec, None).unwrap();
            assert!((0.0..=1.0).contains(&est.counterfactual_mean));
            assert!(est.indirect.abs() <= 1.0);
        }
    }

    #[test]
    fn infinite_odds_equals_set_all_below_exactly() {
        let ds = binary_logistic_ds(140);
        let inf = organic_indirect_rel0(
            &ds,
            None,
            &InterventionSpec::OddsMultiply(OddsFactor::Infinite),
            None,
        )
        .unwrap();
        let below =
            organic_indirect_rel0(&ds, None, &InterventionSpec::SetAllBelow, None).unwrap();
        assert_eq!(inf.indirect, below.indirect);
        assert_eq!(inf.counterfactual_mean, below.counterfactual_mean);
    }

    #[test]
    fn product_form_matches_sum_form() {
        let ds = binary_logistic_ds(180);
        let product = binary_product(&ds, None, None, 0).unwrap();
        let sum = binary_product_sum_form(&ds, None, None, 0).unwrap();
        assert_abs_diff_eq!(product, sum, epsilon = 1e-10);
        assert!(product.abs() > 1e-4, "test dataset should show a real effect");
    }

    /// Equal covariate margins per arm and saturated models make the product
    /// method and the arm-contrast plug-in numerically identical.
    fn balanced_saturated_ds() -> Dataset {
        let mut records = Vec::new();
        let mut i = 0;
        // (arm, c) cells all have 6 records; mediator frequencies differ by
        // arm; outcomes are continuous with cell-plus-wiggle structure.
        let m_patterns: [[bool; 6]; 4] = [
            [true, true, false, false, false, false],  // arm 0, c = 0
            [true, true, true, true, false, false],    // arm 0, c = 1
            [true, true, true, true, false, false],    // arm 1, c = 0
            [true, true, true, true, true, false],     // arm 1, c = 1
        ];
        for arm in 0..2u8 {
            for c in 0..2 {
                let pattern = m_patterns[(arm as usize) * 2 + c];
                for (k, &m) in pattern.iter().enumerate() {
                    let y = 1.0
                        + 2.0 * f64::from(u8::from(m))
                        + 3.0 * c as f64
                        + 0.25 * (k % 3) as f64;
                    records.push(record(
                        i,
                        arm,
                        MediatorValue::Binary(m),
                        y,
                        vec![c as f64],
                        vec![],
                    ));
                    i += 1;
                }
            }
        }
        Dataset::from_records(
            schema(&["c"], &[]),
            OutcomeKind::Continuous,
            MediatorKind::Binary,
            None,
            records,
        )
        .unwrap()
    }

    fn saturated_outcome_design() -> DesignSpec {
        DesignSpec::new(vec![
            Term::Intercept,
            Term::MediatorMain,
            Term::Covariate("c".into()),
            Term::Interaction("mediator".into(), "c".into()),
        ])
        .unwrap()
    }

    #[test]
    fn product_method_equals_arm_contrast_under_saturation() {
        let ds = balanced_saturated_ds();
        let design = saturated_outcome_design();
        let product = binary_product(&ds, Some(&design), None, 0).unwrap();
        let organic =
            organic_indirect_rel0(&ds, Some(&design), &InterventionSpec::ArmContrast, None)
                .unwrap();
        assert_abs_diff_eq!(product, organic.indirect, epsilon = 1e-10);

        let product1 = binary_product(&ds, Some(&design), None, 1).unwrap();
        let organic1 =
            organic_indirect_rel1(&ds, Some(&design), &InterventionSpec::ArmContrast, None)
                .unwrap();
        assert_abs_diff_eq!(product1, organic1.indirect, epsilon = 1e-10);
    }

    #[test]
    fn rel1_mirrors_rel0_with_arms_relabeled() {
        let ds = binary_logistic_ds(160);
        let swapped_records: Vec<ObservationRecord> =
            (0..ds.n()).map(|i| {
                let mut r = ds.record(i);
                r.arm = 1 - r.arm;
                r
            })
            .collect();
        let swapped = Dataset::from_records(
            ds.schema().clone(),
            ds.outcome_kind(),
            ds.mediator_kind(),
            ds.assay_limit(),
            swapped_records,
        )
        .unwrap();
        let rel1 =
            organic_indirect_rel1(&ds, None, &InterventionSpec::ArmContrast, None).unwrap();
        let rel0_swapped =
            organic_indirect_rel0(&swapped, None, &InterventionSpec::ArmContrast, None).unwrap();
        assert_abs_diff_eq!(rel1.indirect, -rel0_swapped.indirect, epsilon = 1e-12);
        assert_abs_diff_eq!(rel1.total.unwrap(), -rel0_swapped.total.unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn treated_sample_of_base_records_gives_exact_zero() {
        let ds = censored_ds();
        let pairs: Vec<(MediatorValue, Vec<f64>)> = (0..ds.n())
            .filter(|&i| ds.arm(i) == 0)
            .map(|i| (ds.mediator(i), ds.causes_row(i).to_vec()))
            .collect();
        let sample = TreatedSample { names: vec!["c".into()], pairs };
        let est = indirect_from_treated_sample(&ds, None, &sample).unwrap();
        assert_eq!(est.indirect, 0.0, "own-sample pairs reproduce the factual law");
    }

    #[test]
    fn linear_product_recovers_known_coefficients() {
        // Noiseless linear structure: m = 1 + 0.5c + 2a, y = 0.5 + c + 3m.
        let mut records = Vec::new();
        let mut i = 0;
        for arm in 0..2u8 {
            for c in [0.0, 1.0, 2.0, 3.0] {
                let m = 1.0 + 0.5 * c + 2.0 * f64::from(arm);
                let y = 0.5 + c + 3.0 * m;
                records.push(record(i, arm, MediatorValue::Observed(m), y, vec![c], vec![]));
                i += 1;
            }
        }
        let ds = Dataset::from_records(
            schema(&["c"], &[]),
            OutcomeKind::Continuous,
            MediatorKind::LimitCensored,
            Some(0.0),
            records,
        )
        .unwrap();
        let mediator_design = DesignSpec::new(vec![
            Term::Intercept,
            Term::Covariate("arm".into()),
            Term::Covariate("c".into()),
        ])
        .unwrap();
        let outcome_design = DesignSpec::new(vec![
            Term::Intercept,
            Term::MediatorMain,
            Term::Covariate("c".into()),
        ])
        .unwrap();
        let mediator_model = fit(
            &ds,
            ResponseKind::MediatorContinuous,
            &mediator_design,
            LinkKind::Identity,
            None,
        )
        .unwrap();
        let outcome_model =
            fit(&ds, ResponseKind::Outcome, &outcome_design, LinkKind::Identity, None).unwrap();
        let product = linear_product(&mediator_model, &outcome_model).unwrap();
        assert_abs_diff_eq!(product, 3.0 * 2.0, epsilon = 1e-9);
        // Swapping the model roles is caught by the term requirements.
        assert!(linear_product(&outcome_model, &mediator_model).is_err());
    }

    fn confounded_ds() -> Dataset {
        let records: Vec<ObservationRecord> = (0..200)
            .map(|i| {
                let z = f64::from(u8::from((i * 31) % 7 < 3));
                let c = f64::from(u8::from((i * 17) % 5 < 2));
                let arm = u8::from((i * 13 + 3 * z as usize) % 10 < 3 + 4 * z as usize);
                let m = ((i * 23) % 11) as f64 / 11.0 < 0.3 + 0.3 * z + 0.2 * f64::from(arm);
                let y = ((i * 41 + 5) % 13) as f64 / 13.0
                    < 0.2 + 0.3 * f64::from(u8::from(m)) + 0.25 * z + 0.1 * c;
                record(
                    i,
                    arm,
                    MediatorValue::Binary(m),
                    f64::from(u8::from(y)),
                    vec![c],
                    vec![z],
                )
            })
            .collect();
        Dataset::from_records(
            schema(&["c"], &["z"]),
            OutcomeKind::Binary,
            MediatorKind::Binary,
            None,
            records,
        )
        .unwrap()
    }

    #[test]
    fn observational_estimator_standardizes_baseline() {
        let ds = confounded_ds();
        let est = observational_indirect(
            &ds,
            None,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0)),
            None,
        )
        .unwrap();
        assert!(est.total.is_none() && est.direct.is_none());
        // Standardized baseline: the identity holds exactly here.
        assert_eq!(est.indirect, est.counterfactual_mean - est.baseline_mean);
        assert!((0.0..=1.0).contains(&est.baseline_mean));

        let contrast =
            observational_indirect(&ds, None, &InterventionSpec::ArmContrast, None).unwrap();
        assert!(contrast.indirect.is_finite());

        // Unsupported pieces are rejected.
        assert!(observational_indirect(&ds, None, &InterventionSpec::SetAllBelow, None).is_err());
        let no_z = binary_logistic_ds(60);
        assert!(observational_indirect(
            &no_z,
            None,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(2.0)),
            None
        )
        .is_err());
    }

    #[test]
    fn observational_unit_odds_is_exactly_zero() {
        let ds = confounded_ds();
        let est = observational_indirect(
            &ds,
            None,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(1.0)),
            None,
        )
        .unwrap();
        assert_eq!(est.indirect, 0.0);
        assert_eq!(est.risk_ratio, Some(1.0));
    }

    #[test]
    fn factual_plugin_mean_tracks_raw_baseline() {
        let ds = binary_logistic_ds(120);
        let est =
            organic_indirect_rel0(&ds, None, &InterventionSpec::ArmContrast, None).unwrap();
        // With an intercept in the logit design, the mean fitted value
        // matches the mean response at the fit tolerance, so the plug-in
        // identity against the raw baseline holds approximately.
        assert_abs_diff_eq!(
            est.counterfactual_mean - est.baseline_mean,
            est.indirect,
            epsilon = 1e-6
        );
    }

    #[test]
    fn separation_in_outcome_model_is_flagged() {
        // Arm-0 outcome perfectly follows the mediator.
        let mut records = Vec::new();
        for i in 0..30 {
            let m = i % 2 == 0;
            records.push(record(i, 0, MediatorValue::Binary(m), f64::from(u8::from(m)), vec![], vec![]));
        }
        for i in 30..60 {
            let m = i % 3 == 0;
            records.push(record(
                i,
                1,
                MediatorValue::Binary(m),
                f64::from(u8::from(i % 2 == 1)),
                vec![],
                vec![],
            ));
        }
        let ds = Dataset::from_records(
            schema(&[], &[]),
            OutcomeKind::Binary,
            MediatorKind::Binary,
            None,
            records,
        )
        .unwrap();
        let est =
            organic_indirect_rel0(&ds, None, &InterventionSpec::ArmContrast, None).unwrap();
        assert!(est.separation);
        assert!(est.indirect.is_finite());
    }

    #[test]
    fn out_of_support_sample_points_are_counted() {
        let ds = censored_ds();
        let sample = TreatedSample {
            names: vec!["c".into()],
            pairs: vec![
                (MediatorValue::Observed(50.0), vec![0.0]),
                (MediatorValue::Observed(2.0), vec![1.0]),
            ],
        };
        let est = indirect_from_treated_sample(&ds, None, &sample).unwrap();
        assert_eq!(est.extrapolated, 1);
    }
}
