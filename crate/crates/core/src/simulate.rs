//! Structural-equation data generators and brute-force counterfactual
//! oracles.
//!
//! The oracle computes true organic effects by executing an intervention
//! inside the generative mechanism: for each draw of the covariates it
//! forms the factual and counterfactual mediator under the base arm, feeds
//! both into the base arm's outcome equation, and averages the paired
//! difference of conditional outcome means. Common random numbers (the same
//! covariate and noise draws on both sides) and analytic outcome means keep
//! the Monte Carlo error far below the estimator sampling error, so every
//! estimator can be checked against the truth at modest draw counts.
//!
//! All generation is deterministic given (seed, n): record i or draw j uses
//! stream i of the seeded generator, independent of threading or blocking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    Dataset, MediatorKind, MediatorValue, ObservationRecord, OutcomeKind, Schema,
};
use crate::error::{Error, Result};
use crate::glm::expit;
use crate::interventions::{shift_mediator, InterventionSpec, OddsFactor, TreatedSample};
use crate::mediation::{observational_indirect, organic_indirect_rel0};

/// Marginal law of one generated covariate, before dependence shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateLaw {
    /// 0/1 with the given success probability.
    Bernoulli(f64),
    Normal { mean: f64, sd: f64 },
}

/// How a generated covariate enters the analysis dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateRole {
    CommonCause,
    ExtraConfounder,
}

/// One generated covariate. `depends` adds linear shifts from earlier
/// covariates — to the mean for a normal law, to the log-odds for a
/// Bernoulli law — so confounders can be correlated by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    pub role: CovariateRole,
    #[serde(default)]
    pub depends: Vec<(String, f64)>,
    pub law: CovariateLaw,
}

/// Treatment assignment mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentLaw {
    /// Randomized with a fixed probability, independent of covariates.
    Randomized(f64),
    /// Logistic in the covariates (an observational design).
    Logistic { intercept: f64, coefficients: Vec<(String, f64)> },
}

/// Structural equation for the mediator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorEq {
    /// Continuous mediator: intercept + covariates + treatment + noise.
    Linear {
        intercept: f64,
        covariate_coefficients: Vec<(String, f64)>,
        treatment: f64,
        noise_sd: f64,
    },
    /// Binary mediator: success log-odds linear in covariates, shifted by
    /// `treatment_log_odds` under treatment.
    Logistic {
        intercept: f64,
        covariate_coefficients: Vec<(String, f64)>,
        treatment_log_odds: f64,
    },
}

/// Structural equation for the outcome. Logistic outcomes read the
/// *observed* (possibly censored) mediator: an observed value contributes
/// `mediator`·value (plus `interaction`·value under treatment), a
/// below-limit record contributes `below_shift` instead — so a piecewise
/// outcome design is exactly correctly specified. Linear outcomes require
/// uncensored mediators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeEq {
    Linear {
        intercept: f64,
        covariate_coefficients: Vec<(String, f64)>,
        treatment: f64,
        mediator: f64,
        interaction: f64,
        noise_sd: f64,
    },
    Logistic {
        intercept: f64,
        covariate_coefficients: Vec<(String, f64)>,
        treatment: f64,
        mediator: f64,
        interaction: f64,
        below_shift: f64,
    },
}

/// A complete generative mechanism: covariates, treatment, mediator,
/// outcome, and optional assay censoring applied to the generated mediator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    #[serde(default)]
    pub assay_limit: Option<f64>,
    pub covariates: Vec<CovariateSpec>,
    pub treatment: TreatmentLaw,
    pub mediator: MediatorEq,
    pub outcome: OutcomeEq,
}

/// A brute-force truth with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// The true indirect effect, oriented like the matching estimator.
    pub truth: f64,
    pub mc_standard_error: f64,
    pub draws: usize,
}

// ---- compiled form: names resolved to covariate indices ----

struct Lin {
    intercept: f64,
    terms: Vec<(usize, f64)>,
}

impl Lin {
    fn eval(&self, values: &[f64]) -> f64 {
        self.intercept + self.terms.iter().map(|&(j, b)| b * values[j]).sum::<f64>()
    }
}

enum CTreatment {
    Randomized(f64),
    Logistic(Lin),
}

enum CMediator {
    Linear { lin: Lin, treatment: f64, noise_sd: f64 },
    Logistic { lin: Lin, treatment_log_odds: f64 },
}

enum COutcome {
    Linear { lin: Lin, treatment: f64, mediator: f64, interaction: f64, noise_sd: f64 },
    Logistic { lin: Lin, treatment: f64, mediator: f64, interaction: f64, below_shift: f64 },
}

struct Compiled {
    laws: Vec<CovariateLaw>,
    depends: Vec<Vec<(usize, f64)>>,
    treatment: CTreatment,
    mediator: CMediator,
    outcome: COutcome,
    assay_limit: Option<f64>,
}

fn resolve_terms(
    coefficients: &[(String, f64)],
    names: &[String],
    what: &str,
) -> Result<Vec<(usize, f64)>> {
    coefficients
        .iter()
        .map(|(name, b)| {
            names
                .iter()
                .position(|n| n == name)
                .map(|j| (j, *b))
                .ok_or_else(|| Error::Invalid(format!("{what} references unknown covariate '{name}'")))
        })
        .collect()
}

impl GenerativeModel {
    fn compile(&self) -> Result<Compiled> {
        if self.covariates.is_empty() {
            return Err(Error::Invalid("generative model needs at least one covariate".into()));
        }
        let names: Vec<String> = self.covariates.iter().map(|c| c.name.clone()).collect();
        {
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != names.len() {
                return Err(Error::Invalid("covariate names must be distinct".into()));
            }
        }
        let mut laws = Vec::new();
        let mut depends = Vec::new();
        for (j, spec) in self.covariates.iter().enumerate() {
            match spec.law {
                CovariateLaw::Bernoulli(p) if !(0.0..=1.0).contains(&p) => {
                    return Err(Error::Invalid(format!("probability {p} outside [0, 1]")))
                }
                CovariateLaw::Normal { sd, .. } if sd.is_nan() || sd < 0.0 => {
                    return Err(Error::Invalid("normal sd must be nonnegative".into()))
                }
                _ => {}
            }
            let terms = resolve_terms(&spec.depends, &names[..j], &spec.name)?;
            laws.push(spec.law);
            depends.push(terms);
        }
        let treatment = match &self.treatment {
            TreatmentLaw::Randomized(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Invalid(format!("probability {p} outside [0, 1]")));
                }
                CTreatment::Randomized(*p)
            }
            TreatmentLaw::Logistic { intercept, coefficients } => CTreatment::Logistic(Lin {
                intercept: *intercept,
                terms: resolve_terms(coefficients, &names, "treatment law")?,
            }),
        };
        let mediator = match &self.mediator {
            MediatorEq::Linear { intercept, covariate_coefficients, treatment, noise_sd } => {
                if noise_sd.is_nan() || *noise_sd < 0.0 {
                    return Err(Error::Invalid("mediator noise sd must be nonnegative".into()));
                }
                CMediator::Linear {
                    lin: Lin {
                        intercept: *intercept,
                        terms: resolve_terms(covariate_coefficients, &names, "mediator equation")?,
                    },
                    treatment: *treatment,
                    noise_sd: *noise_sd,
                }
            }
            MediatorEq::Logistic { intercept, covariate_coefficients, treatment_log_odds } => {
                if self.assay_limit.is_some() {
                    return Err(Error::Invalid(
                        "an assay limit applies to continuous mediators only".into(),
                    ));
                }
                CMediator::Logistic {
                    lin: Lin {
                        intercept: *intercept,
                        terms: resolve_terms(covariate_coefficients, &names, "mediator equation")?,
                    },
                    treatment_log_odds: *treatment_log_odds,
                }
            }
        };
        let outcome = match &self.outcome {
            OutcomeEq::Linear {
                intercept,
                covariate_coefficients,
                treatment,
                mediator,
                interaction,
                noise_sd,
            } => {
                if noise_sd.is_nan() || *noise_sd < 0.0 {
                    return Err(Error::Invalid("outcome noise sd must be nonnegative".into()));
                }
                if self.assay_limit.is_some() {
                    return Err(Error::Invalid(
                        "a linear outcome equation with assay censoring is not supported".into(),
                    ));
                }
                COutcome::Linear {
                    lin: Lin {
                        intercept: *intercept,
                        terms: resolve_terms(covariate_coefficients, &names, "outcome equation")?,
                    },
                    treatment: *treatment,
                    mediator: *mediator,
                    interaction: *interaction,
                    noise_sd: *noise_sd,
                }
            }
            OutcomeEq::Logistic {
                intercept,
                covariate_coefficients,
                treatment,
                mediator,
                interaction,
                below_shift,
            } => COutcome::Logistic {
                lin: Lin {
                    intercept: *intercept,
                    terms: resolve_terms(covariate_coefficients, &names, "outcome equation")?,
                },
                treatment: *treatment,
                mediator: *mediator,
                interaction: *interaction,
                below_shift: *below_shift,
            },
        };
        Ok(Compiled {
            laws,
            depends,
            treatment,
            mediator,
            outcome,
            assay_limit: self.assay_limit,
        })
    }

    fn schema(&self) -> Schema {
        Schema {
            id: None,
            arm: "arm".into(),
            outcome: "y".into(),
            mediator: "m".into(),
            common_causes: self
                .covariates
                .iter()
                .filter(|c| c.role == CovariateRole::CommonCause)
                .map(|c| c.name.clone())
                .collect(),
            extra_confounders: self
                .covariates
                .iter()
                .filter(|c| c.role == CovariateRole::ExtraConfounder)
                .map(|c| c.name.clone())
                .collect(),
        }
    }

    fn outcome_kind(&self) -> OutcomeKind {
        match self.outcome {
            OutcomeEq::Linear { .. } => OutcomeKind::Continuous,
            OutcomeEq::Logistic { .. } => OutcomeKind::Binary,
        }
    }

    fn mediator_kind(&self) -> MediatorKind {
        match self.mediator {
            MediatorEq::Linear { .. } => MediatorKind::LimitCensored,
            MediatorEq::Logistic { .. } => MediatorKind::Binary,
        }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl Compiled {
    fn draw_covariates(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        out.clear();
        for (j, law) in self.laws.iter().enumerate() {
            let shift: f64 = self.depends[j].iter().map(|&(k, b)| b * out[k]).sum();
            let value = match *law {
                CovariateLaw::Bernoulli(p) => {
                    let p = if p <= 0.0 {
                        0.0
                    } else if p >= 1.0 {
                        1.0
                    } else {
                        expit(logit(p) + shift)
                    };
                    f64::from(u8::from(rng.gen::<f64>() < p))
                }
                CovariateLaw::Normal { mean, sd } => {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + shift + sd * z
                }
            };
            out.push(value);
        }
    }

    fn draw_arm(&self, rng: &mut ChaCha8Rng, cov: &[f64]) -> u8 {
        let p = match &self.treatment {
            CTreatment::Randomized(p) => *p,
            CTreatment::Logistic(lin) => expit(lin.eval(cov)),
        };
        u8::from(rng.gen::<f64>() < p)
    }

    // The generated mediator for one record; the f64 is the latent
    // (uncensored) value for linear equations.
    fn draw_mediator(&self, rng: &mut ChaCha8Rng, cov: &[f64], arm: u8) -> MediatorValue {
        match &self.mediator {
            CMediator::Linear { lin, treatment, noise_sd } => {
                let z: f64 = rng.sample(StandardNormal);
                let latent = lin.eval(cov) + treatment * f64::from(arm) + noise_sd * z;
                self.censor(latent)
            }
            CMediator::Logistic { lin, treatment_log_odds } => {
                let p = expit(lin.eval(cov) + treatment_log_odds * f64::from(arm));
                MediatorValue::Binary(rng.gen::<f64>() < p)
            }
        }
    }

    fn censor(&self, latent: f64) -> MediatorValue {
        match self.assay_limit {
            Some(limit) if latent < limit => MediatorValue::BelowLimit,
            _ => MediatorValue::Observed(latent),
        }
    }

    fn mediator_probability(&self, cov: &[f64], arm: u8) -> Result<f64> {
        match &self.mediator {
            CMediator::Logistic { lin, treatment_log_odds } => {
                Ok(expit(lin.eval(cov) + treatment_log_odds * f64::from(arm)))
            }
            CMediator::Linear { .. } => Err(Error::Invalid(
                "odds interventions require a binary generative mediator".into(),
            )),
        }
    }

    // Conditional outcome mean given mediator, covariates, and arm.
    fn outcome_mean(&self, m: MediatorValue, cov: &[f64], arm: u8) -> Result<f64> {
        let a = f64::from(arm);
        match &self.outcome {
            COutcome::Linear { lin, treatment, mediator, interaction, .. } => {
                let mv = match m {
                    MediatorValue::Binary(b) => f64::from(u8::from(b)),
                    MediatorValue::Observed(v) => v,
                    MediatorValue::BelowLimit => {
                        return Err(Error::Invalid(
                            "linear outcome equations need observed mediator values".into(),
                        ))
                    }
                };
                Ok(lin.eval(cov) + treatment * a + mediator * mv + interaction * a * mv)
            }
            COutcome::Logistic { lin, treatment, mediator, interaction, below_shift } => {
                let eta = match m {
                    MediatorValue::Binary(b) => {
                        let mv = f64::from(u8::from(b));
                        lin.eval(cov) + treatment * a + mediator * mv + interaction * a * mv
                    }
                    MediatorValue::Observed(v) => {
                        lin.eval(cov) + treatment * a + mediator * v + interaction * a * v
                    }
                    MediatorValue::BelowLimit => lin.eval(cov) + treatment * a + below_shift,
                };
                Ok(expit(eta))
            }
        }
    }

    fn draw_outcome(&self, rng: &mut ChaCha8Rng, mean: f64) -> f64 {
        match &self.outcome {
            COutcome::Linear { noise_sd, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + noise_sd * z
            }
            COutcome::Logistic { .. } => f64::from(u8::from(rng.gen::<f64>() < mean)),
        }
    }
}

fn record_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn generate_records(
    model: &GenerativeModel,
    n: usize,
    seed: u64,
    force_arm: Option<u8>,
) -> Result<Vec<ObservationRecord>> {
    let compiled = model.compile()?;
    let schema = model.schema();
    let cause_idx: Vec<usize> = model
        .covariates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role == CovariateRole::CommonCause)
        .map(|(j, _)| j)
        .collect();
    let confounder_idx: Vec<usize> = model
        .covariates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role == CovariateRole::ExtraConfounder)
        .map(|(j, _)| j)
        .collect();
    debug_assert_eq!(cause_idx.len(), schema.common_causes.len());

    let mut records = Vec::with_capacity(n);
    let mut cov = Vec::new();
    for i in 0..n {
        let mut rng = record_rng(seed, i);
        compiled.draw_covariates(&mut rng, &mut cov);
        let arm = match force_arm {
            Some(a) => {
                // Burn the assignment draw so forcing an arm changes nothing
                // else about the record.
                let _ = compiled.draw_arm(&mut rng, &cov);
                a
            }
            None => compiled.draw_arm(&mut rng, &cov),
        };
        let mediator = compiled.draw_mediator(&mut rng, &cov, arm);
        let mean = compiled.outcome_mean(mediator, &cov, arm)?;
        let outcome = compiled.draw_outcome(&mut rng, mean);
        records.push(ObservationRecord {
            id: (i + 1).to_string(),
            arm,
            mediator,
            outcome,
            common_causes: cause_idx.iter().map(|&j| cov[j]).collect(),
            extra_confounders: confounder_idx.iter().map(|&j| cov[j]).collect(),
        });
    }
    Ok(records)
}

/// Draws `n` i.i.d. records from the generative model. Record i depends
/// only on (seed, i), so datasets are reproducible.
pub fn generate_trial(model: &GenerativeModel, n: usize, seed: u64) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::Invalid("trial size must be at least 1".into()));
    }
    let records = generate_records(model, n, seed, None)?;
    Dataset::from_records(
        model.schema(),
        model.outcome_kind(),
        model.mediator_kind(),
        model.assay_limit,
        records,
    )
}

/// Mediator measurements with covariates from an all-treated draw of the
/// model, e.g. to play the role of an external on-treatment study.
pub fn treated_sample(model: &GenerativeModel, count: usize, seed: u64) -> Result<TreatedSample> {
    if count < 1 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    let records = generate_records(model, count, seed, Some(1))?;
    let schema = model.schema();
    let mut names = schema.common_causes.clone();
    names.extend(schema.extra_confounders.iter().cloned());
    let pairs = records
        .into_iter()
        .map(|r| {
            let mut values = r.common_causes;
            values.extend_from_slice(&r.extra_confounders);
            (r.mediator, values)
        })
        .collect();
    Ok(TreatedSample { names, pairs })
}

// Factual and counterfactual per-draw conditional outcome means under the
// base arm, with shared covariate and noise draws.
fn paired_means(
    compiled: &Compiled,
    spec: &InterventionSpec,
    base_arm: u8,
    rng: &mut ChaCha8Rng,
    cov: &mut Vec<f64>,
) -> Result<(f64, f64)> {
    compiled.draw_covariates(rng, cov);
    let other_arm = 1 - base_arm;
    match spec {
        InterventionSpec::OddsMultiply(factor) => {
            let p_fact = compiled.mediator_probability(cov, base_arm)?;
            let p_cf = match (base_arm, factor) {
                (0, f) => crate::interventions::odds_transform(p_fact, *f)?,
                (1, OddsFactor::Finite(f)) => {
                    crate::interventions::odds_transform(p_fact, OddsFactor::Finite(1.0 / f))?
                }
                (1, OddsFactor::Infinite) => {
                    return Err(Error::Invalid(
                        "an infinite odds factor cannot be inverted for the arms-swapped analysis"
                            .into(),
                    ))
                }
                _ => unreachable!("base arm is 0 or 1"),
            };
            // Binary mediator: integrate it out analytically.
            let y1 = compiled.outcome_mean(MediatorValue::Binary(true), cov, base_arm)?;
            let y0 = compiled.outcome_mean(MediatorValue::Binary(false), cov, base_arm)?;
            Ok((p_fact * y1 + (1.0 - p_fact) * y0, p_cf * y1 + (1.0 - p_cf) * y0))
        }
        InterventionSpec::ArmContrast | InterventionSpec::EmpiricalSample(_) => {
            match &compiled.mediator {
                CMediator::Logistic { .. } => {
                    let p_fact = compiled.mediator_probability(cov, base_arm)?;
                    let p_cf = compiled.mediator_probability(cov, other_arm)?;
                    let y1 = compiled.outcome_mean(MediatorValue::Binary(true), cov, base_arm)?;
                    let y0 = compiled.outcome_mean(MediatorValue::Binary(false), cov, base_arm)?;
                    Ok((p_fact * y1 + (1.0 - p_fact) * y0, p_cf * y1 + (1.0 - p_cf) * y0))
                }
                CMediator::Linear { lin, treatment, noise_sd } => {
                    let z: f64 = rng.sample(StandardNormal);
                    let base = lin.eval(cov) + noise_sd * z;
                    let m_fact = compiled.censor(base + treatment * f64::from(base_arm));
                    let m_cf = compiled.censor(base + treatment * f64::from(other_arm));
                    Ok((
                        compiled.outcome_mean(m_fact, cov, base_arm)?,
                        compiled.outcome_mean(m_cf, cov, base_arm)?,
                    ))
                }
            }
        }
        InterventionSpec::Shift(delta) => {
            if base_arm != 0 {
                return Err(Error::Invalid(
                    "shift oracles support the untreated base arm only".into(),
                ));
            }
            let limit = compiled.assay_limit.unwrap_or(f64::NEG_INFINITY);
            let m_fact = match &compiled.mediator {
                CMediator::Linear { lin, treatment, noise_sd } => {
                    let z: f64 = rng.sample(StandardNormal);
                    compiled.censor(lin.eval(cov) + treatment * 0.0 + noise_sd * z)
                }
                CMediator::Logistic { .. } => {
                    return Err(Error::Invalid(
                        "shift interventions require a continuous generative mediator".into(),
                    ))
                }
            };
            let m_cf = shift_mediator(m_fact, *delta, limit)?;
            Ok((
                compiled.outcome_mean(m_fact, cov, base_arm)?,
                compiled.outcome_mean(m_cf, cov, base_arm)?,
            ))
        }
        InterventionSpec::SetAllBelow => {
            if base_arm != 0 {
                return Err(Error::Invalid(
                    "set-all-below oracles support the untreated base arm only".into(),
                ));
            }
            if compiled.assay_limit.is_none() {
                return Err(Error::Invalid("set-all-below requires an assay limit".into()));
            }
            let m_fact = match &compiled.mediator {
                CMediator::Linear { lin, treatment, noise_sd } => {
                    let z: f64 = rng.sample(StandardNormal);
                    compiled.censor(lin.eval(cov) + treatment * 0.0 + noise_sd * z)
                }
                CMediator::Logistic { .. } => {
                    return Err(Error::Invalid(
                        "set-all-below requires a continuous generative mediator".into(),
                    ))
                }
            };
            Ok((
                compiled.outcome_mean(m_fact, cov, base_arm)?,
                compiled.outcome_mean(MediatorValue::BelowLimit, cov, base_arm)?,
            ))
        }
    }
}

const ORACLE_CHUNK: usize = 4096;

/// Brute-force truth for an organic intervention: Monte Carlo over the
/// covariate and mediator-noise laws, with the counterfactual sharing every
/// draw with its factual partner. The sign matches the corresponding
/// estimator: the outcome change from turning the mediator pathway on.
///
/// External-sample specs are not executable generatively; their estimand is
/// the arm contrast, so pass `ArmContrast` (accepted as an alias here).
pub fn oracle_organic_effect(
    model: &GenerativeModel,
    spec: &InterventionSpec,
    base_arm: u8,
    draws: usize,
    seed: u64,
) -> Result<OracleResult> {
    if base_arm > 1 {
        return Err(Error::Invalid("base arm must be 0 or 1".into()));
    }
    if draws < 1 {
        return Err(Error::Invalid("oracle needs at least one draw".into()));
    }
    let compiled = model.compile()?;
    // The first draw checks spec compatibility up front and pivots the
    // accumulation: summing deviations from a typical value keeps the
    // variance free of cancellation even when the paired differences are
    // constant to machine precision (as under common random numbers in
    // linear models), and a common null difference of exactly zero stays
    // exactly zero.
    let pivot = {
        let mut rng = record_rng(seed, 0);
        let mut cov = Vec::new();
        let (fact, cf) = paired_means(&compiled, spec, base_arm, &mut rng, &mut cov)?;
        if base_arm == 0 {
            cf - fact
        } else {
            fact - cf
        }
    };

    let chunks = draws.div_ceil(ORACLE_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * ORACLE_CHUNK;
            let end = (start + ORACLE_CHUNK).min(draws);
            let mut cov = Vec::new();
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for j in start..end {
                let mut rng = record_rng(seed, j);
                let (fact, cf) = paired_means(&compiled, spec, base_arm, &mut rng, &mut cov)
                    .expect("spec compatibility checked on the first draw");
                let diff = if base_arm == 0 { cf - fact } else { fact - cf };
                let dev = diff - pivot;
                sum += dev;
                sumsq += dev * dev;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(s, q), (ps, pq)| (s + ps, q + pq));

    let n = draws as f64;
    let mean_dev = sum / n;
    let truth = pivot + mean_dev;
    let variance =
        if draws > 1 { ((sumsq - n * mean_dev * mean_dev) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(OracleResult {
        truth,
        mc_standard_error: (variance / n).sqrt(),
        draws,
    })
}

/// Encodes a mediator value on one numeric axis for distribution tests:
/// observed values as themselves, below-limit as a point mass below every
/// observable value, binary as 0/1.
fn encode(m: MediatorValue, assay_limit: Option<f64>) -> f64 {
    match m {
        MediatorValue::Binary(b) => f64::from(u8::from(b)),
        MediatorValue::Observed(v) => v,
        MediatorValue::BelowLimit => assay_limit.unwrap_or(0.0) - 1.0,
    }
}

/// A sample of the factual mediator law under one arm, numerically encoded.
pub fn mediator_sample(
    model: &GenerativeModel,
    arm: u8,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let compiled = model.compile()?;
    let mut out = Vec::with_capacity(draws);
    let mut cov = Vec::new();
    for j in 0..draws {
        let mut rng = record_rng(seed, j);
        compiled.draw_covariates(&mut rng, &mut cov);
        out.push(encode(compiled.draw_mediator(&mut rng, &cov, arm), model.assay_limit));
    }
    Ok(out)
}

/// A sample of the counterfactual mediator law an intervention induces on
/// the base arm, numerically encoded. For an organic intervention this
/// sample should be indistinguishable from [`mediator_sample`] of the other
/// arm.
pub fn counterfactual_mediator_sample(
    model: &GenerativeModel,
    spec: &InterventionSpec,
    base_arm: u8,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let compiled = model.compile()?;
    let limit = model.assay_limit.unwrap_or(f64::NEG_INFINITY);
    let mut out = Vec::with_capacity(draws);
    let mut cov = Vec::new();
    for j in 0..draws {
        let mut rng = record_rng(seed, j);
        compiled.draw_covariates(&mut rng, &mut cov);
        let value = match spec {
            InterventionSpec::OddsMultiply(factor) => {
                if base_arm != 0 {
                    return Err(Error::Invalid("sampling supports the untreated base arm".into()));
                }
                let p0 = compiled.mediator_probability(&cov, 0)?;
                let p1 = crate::interventions::odds_transform(p0, *factor)?;
                MediatorValue::Binary(rng.gen::<f64>() < p1)
            }
            InterventionSpec::ArmContrast | InterventionSpec::EmpiricalSample(_) => {
                compiled.draw_mediator(&mut rng, &cov, 1 - base_arm)
            }
            InterventionSpec::Shift(delta) => {
                shift_mediator(compiled.draw_mediator(&mut rng, &cov, base_arm), *delta, limit)?
            }
            InterventionSpec::SetAllBelow => MediatorValue::BelowLimit,
        };
        out.push(encode(value, model.assay_limit));
    }
    Ok(out)
}

/// Two-sample Kolmogorov–Smirnov statistic: the largest absolute gap
/// between the two empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut max_gap: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        max_gap = max_gap.max((i as f64 / na - j as f64 / nb).abs());
    }
    max_gap
}

// ---- built-in scenarios ----
//
// The parameter values below are implementation constants picked for
// well-conditioned fits and clearly nonzero effects; nothing about them is
// data-derived.

/// Linear structural equations with a treatment-mediator interaction in the
/// outcome. The true indirect effect relative to the untreated arm is the
/// mediator-equation treatment coefficient times the outcome-equation
/// mediator coefficient: 0.8 × 0.7 = 0.56.
pub fn linear_sem_model(interaction: f64) -> GenerativeModel {
    GenerativeModel {
        covariates: vec![CovariateSpec {
            name: "c".into(),
            role: CovariateRole::CommonCause,
            law: CovariateLaw::Normal { mean: 0.0, sd: 1.0 },
            depends: vec![],
        }],
        treatment: TreatmentLaw::Randomized(0.5),
        mediator: MediatorEq::Linear {
            intercept: 0.0,
            covariate_coefficients: vec![("c".into(), 0.5)],
            treatment: 0.8,
            noise_sd: 1.0,
        },
        outcome: OutcomeEq::Linear {
            intercept: -0.2,
            covariate_coefficients: vec![("c".into(), 0.4)],
            treatment: 0.3,
            mediator: 0.7,
            interaction,
            noise_sd: 1.0,
        },
        assay_limit: None,
    }
}

/// Binary mediator, binary outcome, one binary common cause. Treatment
/// multiplies the mediator odds by exactly 3 at every covariate value, so
/// `odds_multiply(3)` is the organic counterpart of the treated arm.
pub fn binary_mediator_model() -> GenerativeModel {
    GenerativeModel {
        covariates: vec![CovariateSpec {
            name: "c".into(),
            role: CovariateRole::CommonCause,
            law: CovariateLaw::Bernoulli(0.4),
            depends: vec![],
        }],
        treatment: TreatmentLaw::Randomized(0.5),
        mediator: MediatorEq::Logistic {
            intercept: -0.3,
            covariate_coefficients: vec![("c".into(), 0.8)],
            treatment_log_odds: 3.0f64.ln(),
        },
        outcome: OutcomeEq::Logistic {
            intercept: -1.2,
            covariate_coefficients: vec![("c".into(), 0.5)],
            treatment: 0.4,
            mediator: 0.9,
            interaction: 0.0,
            below_shift: 0.0,
        },
        assay_limit: None,
    }
}

/// Limit-censored continuous mediator on the log10 scale, binary outcome
/// read off the censored value piecewise. Treatment lowers the latent
/// mediator by exactly 1.0, so `shift(1.0)` is the organic counterpart of
/// the treated arm.
pub fn censored_mediator_model() -> GenerativeModel {
    GenerativeModel {
        covariates: vec![CovariateSpec {
            name: "c".into(),
            role: CovariateRole::CommonCause,
            law: CovariateLaw::Bernoulli(0.5),
            depends: vec![],
        }],
        treatment: TreatmentLaw::Randomized(0.5),
        mediator: MediatorEq::Linear {
            intercept: 2.8,
            covariate_coefficients: vec![("c".into(), 0.5)],
            treatment: -1.0,
            noise_sd: 0.9,
        },
        outcome: OutcomeEq::Logistic {
            intercept: 0.8,
            covariate_coefficients: vec![("c".into(), 0.3)],
            treatment: 0.0,
            mediator: -0.55,
            interaction: 0.0,
            below_shift: -1.5,
        },
        assay_limit: Some(1.0),
    }
}

/// Two common causes where the second influences the mediator but, unless
/// `violate` is set, has no effect on the outcome once the mediator and the
/// first cause are known — so conditioning on the first cause alone is
/// equally valid.
pub fn uniqueness_model(violate: bool) -> GenerativeModel {
    GenerativeModel {
        covariates: vec![
            CovariateSpec {
                name: "c1".into(),
                role: CovariateRole::CommonCause,
                law: CovariateLaw::Bernoulli(0.5),
                depends: vec![],
            },
            CovariateSpec {
                name: "c2".into(),
                role: CovariateRole::CommonCause,
                law: CovariateLaw::Normal { mean: 0.0, sd: 1.0 },
                depends: vec![("c1".into(), 0.8)],
            },
        ],
        treatment: TreatmentLaw::Randomized(0.5),
        mediator: MediatorEq::Logistic {
            intercept: -0.4,
            covariate_coefficients: vec![("c1".into(), 0.7), ("c2".into(), 1.2)],
            treatment_log_odds: 3.0f64.ln(),
        },
        outcome: OutcomeEq::Logistic {
            intercept: -0.8,
            covariate_coefficients: vec![
                ("c1".into(), 0.6),
                ("c2".into(), if violate { 1.2 } else { 0.0 }),
            ],
            treatment: 0.3,
            mediator: 1.1,
            interaction: 0.0,
            below_shift: 0.0,
        },
        assay_limit: None,
    }
}

/// Binary mediator model where treatment assignment depends on an extra
/// confounder Z that also drives the mediator and the outcome. With
/// `randomized` the same structure is assigned at a fair coin instead, so
/// adjusted and unadjusted analyses should agree.
pub fn confounding_model(randomized: bool) -> GenerativeModel {
    GenerativeModel {
        covariates: vec![
            CovariateSpec {
                name: "c".into(),
                role: CovariateRole::CommonCause,
                law: CovariateLaw::Bernoulli(0.5),
                depends: vec![],
            },
            CovariateSpec {
                name: "z".into(),
                role: CovariateRole::ExtraConfounder,
                law: CovariateLaw::Bernoulli(0.5),
                depends: vec![],
            },
        ],
        treatment: if randomized {
            TreatmentLaw::Randomized(0.5)
        } else {
            TreatmentLaw::Logistic {
                intercept: -1.2,
                coefficients: vec![("z".into(), 2.4)],
            }
        },
        mediator: MediatorEq::Logistic {
            intercept: -0.5,
            covariate_coefficients: vec![("c".into(), 0.6), ("z".into(), 1.2)],
            treatment_log_odds: 3.0f64.ln(),
        },
        outcome: OutcomeEq::Logistic {
            intercept: -0.9,
            covariate_coefficients: vec![("c".into(), 0.5), ("z".into(), 1.3)],
            treatment: 0.25,
            mediator: 1.0,
            interaction: 0.0,
            below_shift: 0.0,
        },
        assay_limit: None,
    }
}

// ---- paired scenario reports ----

const SE_BLOCKS: usize = 10;

/// Runs an estimator on `blocks` disjoint round-robin subsamples of the
/// dataset — the raw material for a quick model-agnostic standard error.
pub fn block_estimates(
    ds: &Dataset,
    blocks: usize,
    estimate: &dyn Fn(&Dataset) -> Result<f64>,
) -> Result<Vec<f64>> {
    if blocks < 2 || blocks > ds.n() {
        return Err(Error::Invalid(format!("cannot split {} records into {blocks} blocks", ds.n())));
    }
    let mut values = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let idx: Vec<usize> = (0..ds.n()).filter(|i| i % blocks == b).collect();
        values.push(estimate(&ds.resample(&idx))?);
    }
    Ok(values)
}

/// Standard error of a full-sample statistic inferred from disjoint-block
/// estimates: each block estimate has roughly `blocks` times the
/// full-sample variance, so the block sd scaled down by √blocks estimates
/// the full-sample standard error.
pub fn block_standard_error(
    ds: &Dataset,
    blocks: usize,
    estimate: &dyn Fn(&Dataset) -> Result<f64>,
) -> Result<f64> {
    Ok(block_se(&block_estimates(ds, blocks, estimate)?))
}

fn sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn block_se(values: &[f64]) -> f64 {
    sd(values) / (values.len() as f64).sqrt()
}

fn paired_diff_se(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    sd(&diffs) / (diffs.len() as f64).sqrt()
}

/// Estimates from two conditioning sets on the same simulated trial, with
/// block standard errors, against the oracle truth.
#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// Conditioning on both common causes.
    pub full: f64,
    pub full_se: f64,
    /// Conditioning on the first common cause only.
    pub reduced: f64,
    pub reduced_se: f64,
    /// Standard error of the (paired) difference of the two estimates.
    pub diff_se: f64,
    pub oracle: OracleResult,
    pub n: usize,
}

fn keep_causes(ds: &Dataset, keep: &[&str]) -> Result<Dataset> {
    let schema = ds.schema();
    let keep_idx: Vec<usize> = keep
        .iter()
        .map(|k| {
            schema
                .common_causes
                .iter()
                .position(|c| c == k)
                .ok_or_else(|| Error::Invalid(format!("unknown common cause '{k}'")))
        })
        .collect::<Result<_>>()?;
    let mut new_schema = schema.clone();
    new_schema.common_causes = keep.iter().map(|k| k.to_string()).collect();
    let records = (0..ds.n())
        .map(|i| {
            let mut r = ds.record(i);
            r.common_causes = keep_idx.iter().map(|&j| r.common_causes[j]).collect();
            r
        })
        .collect();
    Dataset::from_records(new_schema, ds.outcome_kind(), ds.mediator_kind(), ds.assay_limit(), records)
}

/// Runs the two-conditioning-sets comparison: estimates the indirect effect
/// of the arm contrast using both common causes and using only the first,
/// on one generated trial of size `n`. Under the default model the two
/// target the same quantity; with `violate` the second cause affects the
/// outcome directly and the reduced analysis is biased.
pub fn uniqueness_scenario(
    seed: u64,
    n: usize,
    oracle_draws: usize,
    violate: bool,
) -> Result<UniquenessReport> {
    let model = uniqueness_model(violate);
    let ds = generate_trial(&model, n, seed)?;
    let reduced_ds = keep_causes(&ds, &["c1"])?;
    let spec = InterventionSpec::ArmContrast;
    let estimate = |d: &Dataset| -> Result<f64> {
        organic_indirect_rel0(d, None, &spec, None).map(|p| p.indirect)
    };

    let full = estimate(&ds)?;
    let reduced = estimate(&reduced_ds)?;
    let full_blocks = block_estimates(&ds, SE_BLOCKS, &estimate)?;
    let reduced_blocks = block_estimates(&reduced_ds, SE_BLOCKS, &estimate)?;
    let oracle = oracle_organic_effect(&model, &spec, 0, oracle_draws, seed ^ 0x9e3779b97f4a7c15)?;
    Ok(UniquenessReport {
        full,
        full_se: block_se(&full_blocks),
        reduced,
        reduced_se: block_se(&reduced_blocks),
        diff_se: paired_diff_se(&full_blocks, &reduced_blocks),
        oracle,
        n,
    })
}

/// Adjusted and unadjusted estimates on one simulated observational study,
/// with block standard errors, against the oracle truth.
#[derive(Debug, Clone)]
pub struct ConfoundingReport {
    /// The observational estimator conditioning on (C, Z).
    pub adjusted: f64,
    pub adjusted_se: f64,
    /// The randomized-style estimator ignoring Z.
    pub unadjusted: f64,
    pub unadjusted_se: f64,
    pub oracle: OracleResult,
    pub n: usize,
}

/// Runs the confounding comparison with `odds_multiply(3)`: the Z-adjusted
/// observational estimator against the naive analysis that ignores Z, on
/// one generated study of size `n`. Because Z confounds the mediator-outcome
/// relation, only the adjusted analysis tracks the oracle — even when
/// treatment itself is `randomized`.
pub fn confounded_scenario(
    seed: u64,
    n: usize,
    oracle_draws: usize,
    randomized: bool,
) -> Result<ConfoundingReport> {
    let model = confounding_model(randomized);
    let ds = generate_trial(&model, n, seed)?;
    let spec = InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0));
    let adjusted_est = |d: &Dataset| -> Result<f64> {
        observational_indirect(d, None, &spec, None).map(|p| p.indirect)
    };
    let unadjusted_est = |d: &Dataset| -> Result<f64> {
        organic_indirect_rel0(d, None, &spec, None).map(|p| p.indirect)
    };

    let adjusted = adjusted_est(&ds)?;
    let unadjusted = unadjusted_est(&ds)?;
    let adjusted_blocks = block_estimates(&ds, SE_BLOCKS, &adjusted_est)?;
    let unadjusted_blocks = block_estimates(&ds, SE_BLOCKS, &unadjusted_est)?;
    let oracle = oracle_organic_effect(&model, &spec, 0, oracle_draws, seed ^ 0x517cc1b727220a95)?;
    Ok(ConfoundingReport {
        adjusted,
        adjusted_se: block_se(&adjusted_blocks),
        unadjusted,
        unadjusted_se: block_se(&unadjusted_blocks),
        oracle,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::to_csv_string;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_noise_linear_sem_satisfies_equations() {
        let mut model = linear_sem_model(0.5);
        if let MediatorEq::Linear { noise_sd, .. } = &mut model.mediator {
            *noise_sd = 0.0;
        }
        if let OutcomeEq::Linear { noise_sd, .. } = &mut model.outcome {
            *noise_sd = 0.0;
        }
        let ds = generate_trial(&model, 200, 9).unwrap();
        for i in 0..ds.n() {
            let c = ds.causes_row(i)[0];
            let a = f64::from(ds.arm(i));
            let m = match ds.mediator(i) {
                MediatorValue::Observed(v) => v,
                other => panic!("unexpected mediator {other:?}"),
            };
            assert_abs_diff_eq!(m, 0.5 * c + 0.8 * a, epsilon = 1e-12);
            assert_abs_diff_eq!(
                ds.outcome(i),
                -0.2 + 0.4 * c + 0.3 * a + 0.7 * m + 0.5 * a * m,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn generation_is_deterministic_and_arms_follow_the_law() {
        let model = binary_mediator_model();
        let a = generate_trial(&model, 400, 77).unwrap();
        let b = generate_trial(&model, 400, 77).unwrap();
        assert_eq!(to_csv_string(&a, "BLQ"), to_csv_string(&b, "BLQ"));

        let mut all_zero = confounding_model(true);
        all_zero.treatment = TreatmentLaw::Randomized(0.0);
        let ds = generate_trial(&all_zero, 100, 3).unwrap();
        assert_eq!(ds.arm_count(1), 0);
    }

    #[test]
    fn censored_scenario_produces_below_limit_records() {
        let ds = generate_trial(&censored_mediator_model(), 2000, 12).unwrap();
        let below = (0..ds.n()).filter(|&i| ds.mediator(i).is_below_limit()).count();
        assert!(below > 50, "expected a real share of censored records, got {below}");
        assert!(below < ds.n() / 2);
    }

    #[test]
    fn oracle_linear_arm_contrast_is_exact_under_crn() {
        // With common random numbers the factual/counterfactual difference
        // is constant in a linear model: exactly the product of the
        // treatment-on-mediator and mediator-on-outcome coefficients.
        let oracle = oracle_organic_effect(
            &linear_sem_model(0.5),
            &InterventionSpec::ArmContrast,
            0,
            20_000,
            5,
        )
        .unwrap();
        assert_abs_diff_eq!(oracle.truth, 0.56, epsilon = 1e-12);
        assert!(oracle.mc_standard_error < 1e-12);
    }

    #[test]
    fn oracle_null_interventions_are_exact_zeros() {
        let shifted =
            oracle_organic_effect(&censored_mediator_model(), &InterventionSpec::Shift(0.0), 0, 5_000, 8)
                .unwrap();
        assert_eq!(shifted.truth, 0.0);
        assert_eq!(shifted.mc_standard_error, 0.0);

        let unit_odds = oracle_organic_effect(
            &binary_mediator_model(),
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(1.0)),
            0,
            5_000,
            8,
        )
        .unwrap();
        assert_eq!(unit_odds.truth, 0.0);

        let mut null_outcome = binary_mediator_model();
        if let OutcomeEq::Logistic { mediator, interaction, .. } = &mut null_outcome.outcome {
            *mediator = 0.0;
            *interaction = 0.0;
        }
        let null = oracle_organic_effect(
            &null_outcome,
            &InterventionSpec::ArmContrast,
            0,
            5_000,
            8,
        )
        .unwrap();
        assert_eq!(null.truth, 0.0, "outcome ignores the mediator entirely");
    }

    #[test]
    fn oracle_base_arms_agree_without_interaction() {
        let model = linear_sem_model(0.0);
        let rel0 =
            oracle_organic_effect(&model, &InterventionSpec::ArmContrast, 0, 20_000, 4).unwrap();
        let rel1 =
            oracle_organic_effect(&model, &InterventionSpec::ArmContrast, 1, 20_000, 4).unwrap();
        let band = 3.0 * (rel0.mc_standard_error + rel1.mc_standard_error + 1e-12);
        assert!((rel0.truth - rel1.truth).abs() <= band);
    }

    #[test]
    fn oracle_determinism_is_independent_of_parallel_chunking() {
        let model = binary_mediator_model();
        let spec = InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0));
        let a = oracle_organic_effect(&model, &spec, 0, 30_000, 21).unwrap();
        let b = oracle_organic_effect(&model, &spec, 0, 30_000, 21).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.mc_standard_error, b.mc_standard_error);
    }

    #[test]
    fn interventions_are_organic_by_distribution() {
        let n = 100_000;
        // 0.01-level two-sample Kolmogorov–Smirnov critical value.
        let crit = 1.6276 * (2.0 / n as f64).sqrt();

        let binary = binary_mediator_model();
        let treated = mediator_sample(&binary, 1, n, 101).unwrap();
        let cf = counterfactual_mediator_sample(
            &binary,
            &InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0)),
            0,
            n,
            202,
        )
        .unwrap();
        let stat = ks_statistic(&treated, &cf);
        assert!(stat < crit, "odds-multiplied law differs from the treated law: {stat} >= {crit}");

        let censored = censored_mediator_model();
        let treated = mediator_sample(&censored, 1, n, 303).unwrap();
        let cf = counterfactual_mediator_sample(
            &censored,
            &InterventionSpec::Shift(1.0),
            0,
            n,
            404,
        )
        .unwrap();
        let stat = ks_statistic(&treated, &cf);
        assert!(stat < crit, "shifted law differs from the treated law: {stat} >= {crit}");
    }

    #[test]
    fn ks_statistic_behaves() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        assert!(ks_statistic(&a, &a) < 1e-12);
        let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        assert_abs_diff_eq!(ks_statistic(&a, &b), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn estimator_tracks_oracle_on_the_binary_scenario() {
        let model = binary_mediator_model();
        let spec = InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0));
        let ds = generate_trial(&model, 20_000, 33).unwrap();
        let est = organic_indirect_rel0(&ds, None, &spec, None).unwrap();
        let se = block_standard_error(&ds, SE_BLOCKS, &|d| {
            organic_indirect_rel0(d, None, &spec, None).map(|p| p.indirect)
        })
        .unwrap();
        let oracle = oracle_organic_effect(&model, &spec, 0, 200_000, 44).unwrap();
        let gap = (est.indirect - oracle.truth).abs();
        let band = 3.0 * (se * se + oracle.mc_standard_error.powi(2)).sqrt();
        assert!(gap <= band, "estimate {:.4} vs truth {:.4}, band {band:.4}", est.indirect, oracle.truth);
        assert!(oracle.truth > 0.02, "scenario should carry a visible effect");
    }

    #[test]
    fn uniqueness_holds_and_violation_shows() {
        let report = uniqueness_scenario(7, 40_000, 200_000, false).unwrap();
        let band = 3.0 * report.diff_se;
        assert!(
            (report.full - report.reduced).abs() <= band,
            "reduced {:.4} vs full {:.4} beyond {band:.4}",
            report.reduced,
            report.full
        );

        let violated = uniqueness_scenario(7, 40_000, 200_000, true).unwrap();
        let gap = (violated.reduced - violated.oracle.truth).abs();
        let band = 3.0
            * (violated.reduced_se.powi(2) + violated.oracle.mc_standard_error.powi(2)).sqrt();
        assert!(gap > band, "violation should bias the reduced analysis: gap {gap:.4} within {band:.4}");
        let full_gap = (violated.full - violated.oracle.truth).abs();
        let full_band =
            3.0 * (violated.full_se.powi(2) + violated.oracle.mc_standard_error.powi(2)).sqrt();
        assert!(full_gap <= full_band, "full conditioning must stay unbiased");
    }

    #[test]
    fn confounding_biases_only_the_unadjusted_analysis() {
        let report = confounded_scenario(15, 40_000, 200_000, false).unwrap();
        let adj_gap = (report.adjusted - report.oracle.truth).abs();
        let adj_band =
            3.0 * (report.adjusted_se.powi(2) + report.oracle.mc_standard_error.powi(2)).sqrt();
        assert!(adj_gap <= adj_band, "adjusted gap {adj_gap:.4} beyond {adj_band:.4}");
        let naive_gap = (report.unadjusted - report.oracle.truth).abs();
        let naive_band =
            3.0 * (report.unadjusted_se.powi(2) + report.oracle.mc_standard_error.powi(2)).sqrt();
        assert!(naive_gap > naive_band, "naive gap {naive_gap:.4} within {naive_band:.4}");

        // Randomizing treatment does not rescue the Z-blind analysis: Z
        // still confounds the mediator-outcome relationship.
        let randomized = confounded_scenario(16, 40_000, 200_000, true).unwrap();
        let adj_gap = (randomized.adjusted - randomized.oracle.truth).abs();
        let adj_band = 3.0
            * (randomized.adjusted_se.powi(2) + randomized.oracle.mc_standard_error.powi(2)).sqrt();
        assert!(adj_gap <= adj_band, "adjusted analysis should track the truth when randomized");
        let naive_gap = (randomized.unadjusted - randomized.oracle.truth).abs();
        let naive_band = 3.0
            * (randomized.unadjusted_se.powi(2) + randomized.oracle.mc_standard_error.powi(2))
                .sqrt();
        assert!(naive_gap > naive_band, "mediator confounding survives randomization");

        // Once Z leaves the outcome equation it no longer confounds the
        // mediator, and with randomized treatment the adjusted and
        // unadjusted analyses estimate the same thing.
        let mut benign = confounding_model(true);
        if let OutcomeEq::Logistic { covariate_coefficients, .. } = &mut benign.outcome {
            covariate_coefficients.retain(|(name, _)| name != "z");
        }
        let ds = generate_trial(&benign, 40_000, 18).unwrap();
        let spec = InterventionSpec::OddsMultiply(OddsFactor::Finite(3.0));
        let adjusted_est = |d: &Dataset| -> Result<f64> {
            observational_indirect(d, None, &spec, None).map(|p| p.indirect)
        };
        let unadjusted_est = |d: &Dataset| -> Result<f64> {
            organic_indirect_rel0(d, None, &spec, None).map(|p| p.indirect)
        };
        let adjusted = adjusted_est(&ds).unwrap();
        let unadjusted = unadjusted_est(&ds).unwrap();
        let adjusted_se = block_standard_error(&ds, SE_BLOCKS, &adjusted_est).unwrap();
        let unadjusted_se = block_standard_error(&ds, SE_BLOCKS, &unadjusted_est).unwrap();
        let gap = (adjusted - unadjusted).abs();
        let band = 3.0 * (adjusted_se.powi(2) + unadjusted_se.powi(2)).sqrt();
        assert!(gap <= band, "benign Z should align the analyses: gap {gap:.4} beyond {band:.4}");
    }

    #[test]
    fn treated_sample_matches_model_shape() {
        let sample = treated_sample(&censored_mediator_model(), 500, 66).unwrap();
        assert_eq!(sample.names, vec!["c".to_string()]);
        assert_eq!(sample.pairs.len(), 500);
        let below = sample.pairs.iter().filter(|(m, _)| m.is_below_limit()).count();
        assert!(below > 50, "treated draws should often censor, got {below}");
    }
}
