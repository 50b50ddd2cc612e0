//! Regression models for outcomes and binary mediators: identity-link least
//! squares and logit-link maximum likelihood via iteratively reweighted least
//! squares (IRLS) with step-halving.
//!
//! Designs are named term lists resolved against a dataset schema. For
//! limit-censored mediators, the piecewise design {intercept, below-limit
//! indicator, mediator, covariates} makes the mediator term contribute zero
//! for below-limit records, so below-limit predictions depend only on the
//! intercept, the below-limit coefficient, and the covariates.

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, MediatorKind, MediatorValue, OutcomeKind, Schema};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const SCORE_TOL_PER_OBS: f64 = 1e-8;
const STEP_TOL: f64 = 1e-10;
const PIVOT_REL_TOL: f64 = 1e-10;
const SEPARATION_PROB_TOL: f64 = 1e-8;
const SEPARATION_COEF_BOUND: f64 = 1e4;
const MIN_IRLS_WEIGHT: f64 = 1e-10;

/// Mean-link function of a regression model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Linear model for the conditional mean.
    Identity,
    /// Logistic model for a 0/1 response probability.
    Logit,
}

/// Which dataset column is modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    /// The outcome column.
    Outcome,
    /// The (binary) mediator column, coded 0/1.
    MediatorBinary,
    /// The observed continuous mediator value; rejects below-limit records,
    /// which have no numeric value.
    MediatorContinuous,
}

/// One design term. Names refer to schema columns; the reserved name
/// `mediator` always refers to the mediator term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Intercept,
    /// A common cause, extra confounder, or the treatment-arm column, by name.
    Covariate(String),
    /// The mediator value (0 for below-limit records in piecewise designs).
    MediatorMain,
    /// 1 for below-limit mediator records, 0 otherwise.
    BelowLimitIndicator,
    /// Product of two factors, each a covariate name or `mediator`.
    Interaction(String, String),
}

impl Term {
    /// Coefficient label for this term.
    pub fn label(&self) -> String {
        match self {
            Term::Intercept => "intercept".into(),
            Term::Covariate(name) => name.clone(),
            Term::MediatorMain => "mediator".into(),
            Term::BelowLimitIndicator => "below_limit".into(),
            Term::Interaction(a, b) => format!("{a}:{b}"),
        }
    }
}

/// An ordered list of distinct design terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    terms: Vec<Term>,
}

impl DesignSpec {
    pub fn new(terms: Vec<Term>) -> Result<DesignSpec> {
        if terms.is_empty() {
            return Err(Error::Invalid("design must contain at least one term".into()));
        }
        let mut labels: Vec<String> = terms.iter().map(Term::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != terms.len() {
            return Err(Error::Invalid("design terms must be distinct".into()));
        }
        Ok(DesignSpec { terms })
    }

    /// Just an intercept.
    pub fn intercept_only() -> DesignSpec {
        DesignSpec { terms: vec![Term::Intercept] }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn has_below_indicator(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, Term::BelowLimitIndicator))
    }

    /// Default outcome design: intercept, mediator, and all common causes;
    /// for limit-censored mediators with below-limit records, also the
    /// below-limit indicator (the piecewise censored-outcome design).
    /// With `include_confounders`, extra confounders are appended.
    pub fn default_outcome(ds: &Dataset, include_confounders: bool) -> DesignSpec {
        let mut terms = vec![Term::Intercept];
        let any_below = (0..ds.n()).any(|i| ds.mediator(i).is_below_limit());
        if ds.mediator_kind() == MediatorKind::LimitCensored && any_below {
            terms.push(Term::BelowLimitIndicator);
        }
        terms.push(Term::MediatorMain);
        for c in &ds.schema().common_causes {
            terms.push(Term::Covariate(c.clone()));
        }
        if include_confounders {
            for z in &ds.schema().extra_confounders {
                terms.push(Term::Covariate(z.clone()));
            }
        }
        DesignSpec { terms }
    }

    /// Default mediator design: intercept and all common causes, plus extra
    /// confounders when requested.
    pub fn default_mediator(ds: &Dataset, include_confounders: bool) -> DesignSpec {
        let mut terms = vec![Term::Intercept];
        for c in &ds.schema().common_causes {
            terms.push(Term::Covariate(c.clone()));
        }
        if include_confounders {
            for z in &ds.schema().extra_confounders {
                terms.push(Term::Covariate(z.clone()));
            }
        }
        DesignSpec { terms }
    }
}

/// What a fitted coefficient multiplies, independent of column naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientRole {
    Intercept,
    CommonCause,
    ExtraConfounder,
    TreatmentArm,
    Mediator,
    BelowLimit,
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ColSource {
    Cause(usize),
    Confounder(usize),
    Arm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RFactor {
    Col(ColSource),
    Mediator,
}

#[derive(Debug, Clone, PartialEq)]
enum RTerm {
    Intercept,
    Col(ColSource),
    Mediator,
    Below,
    Interaction(RFactor, RFactor),
}

/// A design resolved to column indices for a particular naming context.
#[derive(Debug, Clone)]
pub(crate) struct ResolvedDesign {
    terms: Vec<RTerm>,
    has_below: bool,
}

enum NameContext<'a> {
    /// Full dataset schema: causes, confounders, arm column, mediator column.
    Dataset(&'a Schema),
    /// A bare covariate name list (e.g. a mediator law); no arm available.
    Names(&'a [String]),
}

impl NameContext<'_> {
    fn resolve_col(&self, name: &str) -> Option<ColSource> {
        match self {
            NameContext::Dataset(schema) => {
                if let Some(j) = schema.common_causes.iter().position(|c| c == name) {
                    Some(ColSource::Cause(j))
                } else if let Some(j) = schema.extra_confounders.iter().position(|c| c == name) {
                    Some(ColSource::Confounder(j))
                } else if name == schema.arm {
                    Some(ColSource::Arm)
                } else {
                    None
                }
            }
            NameContext::Names(names) => {
                names.iter().position(|c| c == name).map(ColSource::Cause)
            }
        }
    }

    fn is_mediator_name(&self, name: &str) -> bool {
        name == "mediator"
            || matches!(self, NameContext::Dataset(schema) if name == schema.mediator)
    }
}

impl ResolvedDesign {
    fn resolve(design: &DesignSpec, ctx: &NameContext) -> Result<ResolvedDesign> {
        let has_below = design.has_below_indicator();
        let mut terms = Vec::with_capacity(design.terms().len());
        let factor = |name: &str| -> Result<RFactor> {
            if ctx.is_mediator_name(name) {
                return Ok(RFactor::Mediator);
            }
            ctx.resolve_col(name)
                .map(RFactor::Col)
                .ok_or_else(|| Error::Invalid(format!("design name '{name}' cannot be resolved")))
        };
        for term in design.terms() {
            terms.push(match term {
                Term::Intercept => RTerm::Intercept,
                Term::Covariate(name) => match factor(name)? {
                    RFactor::Col(src) => RTerm::Col(src),
                    RFactor::Mediator => RTerm::Mediator,
                },
                Term::MediatorMain => RTerm::Mediator,
                Term::BelowLimitIndicator => RTerm::Below,
                Term::Interaction(a, b) => RTerm::Interaction(factor(a)?, factor(b)?),
            });
        }
        Ok(ResolvedDesign { terms, has_below })
    }

    pub(crate) fn for_dataset(design: &DesignSpec, schema: &Schema) -> Result<ResolvedDesign> {
        Self::resolve(design, &NameContext::Dataset(schema))
    }

    pub(crate) fn for_names(design: &DesignSpec, names: &[String]) -> Result<ResolvedDesign> {
        Self::resolve(design, &NameContext::Names(names))
    }

    pub(crate) fn width(&self) -> usize {
        self.terms.len()
    }

    fn mediator_main(&self, mediator: MediatorValue) -> Result<f64> {
        match mediator {
            MediatorValue::Binary(b) => Ok(f64::from(u8::from(b))),
            MediatorValue::Observed(v) => Ok(v),
            MediatorValue::BelowLimit => {
                if self.has_below {
                    Ok(0.0)
                } else {
                    Err(Error::Invalid(
                        "below-limit mediator requires a design with the below-limit indicator"
                            .into(),
                    ))
                }
            }
        }
    }

    /// Fills one design row. `get` supplies covariate and arm values.
    pub(crate) fn fill_row(
        &self,
        mediator: MediatorValue,
        get: &dyn Fn(ColSource) -> f64,
        out: &mut [f64],
    ) -> Result<()> {
        debug_assert_eq!(out.len(), self.terms.len());
        for (slot, term) in out.iter_mut().zip(&self.terms) {
            *slot = match term {
                RTerm::Intercept => 1.0,
                RTerm::Col(src) => get(*src),
                RTerm::Mediator => self.mediator_main(mediator)?,
                RTerm::Below => f64::from(u8::from(mediator.is_below_limit())),
                RTerm::Interaction(a, b) => {
                    let fa = match a {
                        RFactor::Col(src) => get(*src),
                        RFactor::Mediator => self.mediator_main(mediator)?,
                    };
                    let fb = match b {
                        RFactor::Col(src) => get(*src),
                        RFactor::Mediator => self.mediator_main(mediator)?,
                    };
                    fa * fb
                }
            };
        }
        Ok(())
    }
}

/// A fitted regression model with named coefficients and fit diagnostics.
#[derive(Debug, Clone)]
pub struct FittedModel {
    link: LinkKind,
    design: DesignSpec,
    names: Vec<String>,
    roles: Vec<CoefficientRole>,
    coefficients: Vec<f64>,
    /// Whether both convergence criteria were met.
    pub converged: bool,
    /// Number of coefficient updates performed.
    pub iterations: usize,
    /// Largest absolute score component at the returned coefficients.
    pub max_abs_score: f64,
    /// Set when fitted probabilities reach 0/1 numerically or the
    /// coefficients diverge, the signature of separated data.
    pub separation_flag: bool,
    n_obs: usize,
    loglik_trace: Vec<f64>,
    coef_norm_trace: Vec<f64>,
}

impl FittedModel {
    pub fn link(&self) -> LinkKind {
        self.link
    }

    pub fn design(&self) -> &DesignSpec {
        &self.design
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient_names(&self) -> &[String] {
        &self.names
    }

    /// Coefficient by label, e.g. `"intercept"`, `"mediator"`, a covariate
    /// name, or `"a:b"` for an interaction.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    /// The unique coefficient playing the given role, if exactly one exists.
    pub fn coefficient_by_role(&self, role: CoefficientRole) -> Option<f64> {
        let mut found = None;
        for (i, r) in self.roles.iter().enumerate() {
            if *r == role {
                if found.is_some() {
                    return None;
                }
                found = Some(self.coefficients[i]);
            }
        }
        found
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Log-likelihood at the start of each IRLS iteration (non-decreasing).
    pub fn loglik_trace(&self) -> &[f64] {
        &self.loglik_trace
    }

    /// Euclidean coefficient norm at the start of each IRLS iteration.
    pub fn coef_norm_trace(&self) -> &[f64] {
        &self.coef_norm_trace
    }

    fn inverse_link(&self, eta: f64) -> f64 {
        match self.link {
            LinkKind::Identity => eta,
            LinkKind::Logit => expit(eta),
        }
    }

    pub(crate) fn mean_for_row(&self, row: &[f64]) -> f64 {
        let eta: f64 = row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum();
        self.inverse_link(eta)
    }

    /// Predicted mean for a mediator value and named covariates. Covariate
    /// names must cover every name referenced by the design; the treatment
    /// arm is not available here, so designs with an arm term are rejected.
    pub fn predict_mean(
        &self,
        mediator: MediatorValue,
        covariate_names: &[String],
        covariate_values: &[f64],
    ) -> Result<f64> {
        if covariate_names.len() != covariate_values.len() {
            return Err(Error::Invalid("covariate names and values differ in length".into()));
        }
        let resolved = ResolvedDesign::for_names(&self.design, covariate_names)?;
        let mut row = vec![0.0; resolved.width()];
        resolved.fill_row(
            mediator,
            &|src| match src {
                ColSource::Cause(j) => covariate_values[j],
                _ => unreachable!("name contexts resolve to cause indices only"),
            },
            &mut row,
        )?;
        Ok(self.mean_for_row(&row))
    }
}

pub(crate) fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

// log(1 + exp(eta)) without overflow.
fn log1p_exp(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood of 0/1 responses under a logit-linear model.
pub fn logistic_log_likelihood(rows: &[Vec<f64>], y: &[f64], coefs: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta: f64 = row.iter().zip(coefs).map(|(x, b)| x * b).sum();
            yi * eta - log1p_exp(eta)
        })
        .sum()
}

/// Analytic score (log-likelihood gradient) of the logit model.
pub fn logistic_score(rows: &[Vec<f64>], y: &[f64], coefs: &[f64]) -> Vec<f64> {
    let p = coefs.len();
    let mut score = vec![0.0; p];
    for (row, &yi) in rows.iter().zip(y) {
        let eta: f64 = row.iter().zip(coefs).map(|(x, b)| x * b).sum();
        let r = yi - expit(eta);
        for (s, x) in score.iter_mut().zip(row) {
            *s += r * x;
        }
    }
    score
}

fn arm_rows(ds: &Dataset, arm_filter: Option<u8>) -> Result<Vec<usize>> {
    let rows: Vec<usize> = match arm_filter {
        None => (0..ds.n()).collect(),
        Some(a) => {
            if a > 1 {
                return Err(Error::Invalid("arm filter must be 0 or 1".into()));
            }
            ds.arm_indices(a)
        }
    };
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "no records in arm {}",
            arm_filter.map(|a| a.to_string()).unwrap_or_default()
        )));
    }
    Ok(rows)
}

/// Design rows for the selected records, in record order.
pub fn design_rows(
    ds: &Dataset,
    design: &DesignSpec,
    arm_filter: Option<u8>,
) -> Result<Vec<Vec<f64>>> {
    let resolved = ResolvedDesign::for_dataset(design, ds.schema())?;
    let rows = arm_rows(ds, arm_filter)?;
    let mut out = Vec::with_capacity(rows.len());
    for &i in &rows {
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
        out.push(row);
    }
    Ok(out)
}

/// Response values for the selected records, in record order.
pub fn response_values(
    ds: &Dataset,
    response: ResponseKind,
    arm_filter: Option<u8>,
) -> Result<Vec<f64>> {
    let rows = arm_rows(ds, arm_filter)?;
    match response {
        ResponseKind::Outcome => Ok(rows.iter().map(|&i| ds.outcome(i)).collect()),
        ResponseKind::MediatorBinary => {
            if ds.mediator_kind() != MediatorKind::Binary {
                return Err(Error::Invalid(
                    "mediator response requires a binary mediator (binarize first)".into(),
                ));
            }
            Ok(rows
                .iter()
                .map(|&i| match ds.mediator(i) {
                    MediatorValue::Binary(b) => f64::from(u8::from(b)),
                    _ => unreachable!("kind checked above"),
                })
                .collect())
        }
        ResponseKind::MediatorContinuous => rows
            .iter()
            .map(|&i| match ds.mediator(i) {
                MediatorValue::Observed(v) => Ok(v),
                MediatorValue::BelowLimit => Err(Error::Invalid(
                    "below-limit records have no numeric mediator value".into(),
                )),
                MediatorValue::Binary(_) => Err(Error::Invalid(
                    "continuous mediator response requires a limit-censored mediator".into(),
                )),
            })
            .collect(),
    }
}

// Least-squares solve via column-pivoted QR; errors if any pivot falls below
// PIVOT_REL_TOL relative to the largest pivot.
fn solve_least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let p = a.ncols();
    if a.nrows() < p {
        return Err(Error::RankDeficient(format!(
            "{} observations for {p} design columns",
            a.nrows()
        )));
    }
    let qr = a.col_piv_qr();
    let r = qr.r();
    let largest = r[(0, 0)].abs();
    for k in 0..p {
        if r[(k, k)].abs() <= PIVOT_REL_TOL * largest {
            return Err(Error::RankDeficient(format!(
                "collinear design (pivot {k} below tolerance)"
            )));
        }
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, p).into_owned();
    let solved = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    let mut x = solved;
    qr.p().inv_permute_rows(&mut x);
    Ok(x)
}

fn model_labels(design: &DesignSpec, schema: &Schema) -> (Vec<String>, Vec<CoefficientRole>) {
    let role_of_name = |name: &str| -> CoefficientRole {
        if schema.common_causes.iter().any(|c| c == name) {
            CoefficientRole::CommonCause
        } else if schema.extra_confounders.iter().any(|c| c == name) {
            CoefficientRole::ExtraConfounder
        } else if name == schema.arm {
            CoefficientRole::TreatmentArm
        } else {
            CoefficientRole::Mediator
        }
    };
    let mut names = Vec::new();
    let mut roles = Vec::new();
    for term in design.terms() {
        names.push(term.label());
        roles.push(match term {
            Term::Intercept => CoefficientRole::Intercept,
            Term::Covariate(name) => role_of_name(name),
            Term::MediatorMain => CoefficientRole::Mediator,
            Term::BelowLimitIndicator => CoefficientRole::BelowLimit,
            Term::Interaction(_, _) => CoefficientRole::Interaction,
        });
    }
    (names, roles)
}

/// Fits a regression of the chosen response on the design, optionally
/// restricted to one arm. Logit fits that hit the iteration cap without
/// separation return [`Error::NotConverged`] carrying the last iterate;
/// separated fits are returned with `separation_flag` set, keeping the
/// fitted probabilities usable.
pub fn fit(
    ds: &Dataset,
    response: ResponseKind,
    design: &DesignSpec,
    link: LinkKind,
    arm_filter: Option<u8>,
) -> Result<FittedModel> {
    if link == LinkKind::Logit {
        let binary_response = match response {
            ResponseKind::Outcome => ds.outcome_kind() == OutcomeKind::Binary,
            ResponseKind::MediatorBinary => true,
            ResponseKind::MediatorContinuous => false,
        };
        if !binary_response {
            return Err(Error::Invalid("logit link requires a 0/1 response".into()));
        }
    }
    let rows = design_rows(ds, design, arm_filter)?;
    let y = response_values(ds, response, arm_filter)?;
    let n = rows.len();
    let p = design.terms().len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(&y);
    let (names, roles) = model_labels(design, ds.schema());
    let base = |coefficients: Vec<f64>| FittedModel {
        link,
        design: design.clone(),
        names: names.clone(),
        roles: roles.clone(),
        coefficients,
        converged: false,
        iterations: 0,
        max_abs_score: f64::INFINITY,
        separation_flag: false,
        n_obs: n,
        loglik_trace: Vec::new(),
        coef_norm_trace: Vec::new(),
    };

    match link {
        LinkKind::Identity => {
            let beta = solve_least_squares(x.clone(), &yv)?;
            let resid = &yv - &x * &beta;
            let score = x.transpose() * &resid;
            let mut model = base(beta.iter().copied().collect());
            model.converged = true;
            model.iterations = 1;
            model.max_abs_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            model.loglik_trace = vec![-0.5 * resid.norm_squared()];
            model.coef_norm_trace = vec![model.coefficients.iter().map(|b| b * b).sum::<f64>().sqrt()];
            Ok(model)
        }
        LinkKind::Logit => {
            let score_tol = SCORE_TOL_PER_OBS * n as f64;
            let mut beta = DVector::zeros(p);
            let mut last_step = f64::INFINITY;
            let mut iterations = 0usize;
            let mut converged = false;
            let mut zero_gain_streak = 0usize;
            let mut loglik_trace = Vec::new();
            let mut coef_norm_trace = Vec::new();
            let mut probs = DVector::zeros(n);
            let mut max_score;
            loop {
                let eta = &x * &beta;
                for i in 0..n {
                    probs[i] = expit(eta[i]);
                }
                let loglik: f64 = (0..n).map(|i| y[i] * eta[i] - log1p_exp(eta[i])).sum();
                let score = x.transpose() * (&yv - &probs);
                max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
                loglik_trace.push(loglik);
                coef_norm_trace.push(beta.norm());
                // Both a small score and a vanishing step: the extra polish
                // iterations after the score first drops below tolerance are
                // what push the coefficients to near machine precision.
                if max_score <= score_tol && last_step <= STEP_TOL {
                    converged = true;
                    break;
                }
                if iterations >= MAX_ITERATIONS {
                    break;
                }
                iterations += 1;
                // Newton step via least squares on the weighted design.
                let mut a = x.clone();
                let mut b = DVector::zeros(n);
                for i in 0..n {
                    let w = (probs[i] * (1.0 - probs[i])).max(MIN_IRLS_WEIGHT);
                    let sw = w.sqrt();
                    for j in 0..p {
                        a[(i, j)] *= sw;
                    }
                    b[i] = (y[i] - probs[i]) / sw;
                }
                let delta = solve_least_squares(a, &b)?;
                // Step-halving keeps the log-likelihood non-decreasing.
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..40 {
                    let cand = &beta + t * &delta;
                    // Same evaluation path as the loop head, so equal
                    // coefficients give bitwise-equal likelihoods.
                    let cand_eta = &x * &cand;
                    let cand_ll: f64 =
                        (0..n).map(|i| y[i] * cand_eta[i] - log1p_exp(cand_eta[i])).sum();
                    if cand_ll >= loglik {
                        last_step = (t * &delta).iter().fold(0.0f64, |m, d| m.max(d.abs()));
                        if cand_ll > loglik {
                            zero_gain_streak = 0;
                        } else {
                            zero_gain_streak += 1;
                        }
                        beta = cand;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                // Three stall signatures mean the likelihood has hit its
                // floating-point ceiling and the iterate is as good as
                // double precision allows, even when the score tolerance was
                // narrowly missed (its attainable floor grows with n while
                // the tolerance assumes per-observation scaling):
                // no acceptable step, repeated acceptances that gain nothing,
                // or an accepted step too small to move any coefficient.
                // A step accepted right before a stall has already squared
                // the remaining coefficient error toward machine precision,
                // so stopping here does not cost accuracy.
                if !accepted
                    || zero_gain_streak >= 2
                    || last_step <= f64::EPSILON * (1.0 + beta.norm())
                {
                    converged = true;
                    break;
                }
            }
            let separation = probs
                .iter()
                .any(|&pi| pi <= SEPARATION_PROB_TOL || pi >= 1.0 - SEPARATION_PROB_TOL)
                || beta.iter().any(|b| b.abs() > SEPARATION_COEF_BOUND);
            let mut model = base(beta.iter().copied().collect());
            model.converged = converged;
            model.iterations = iterations;
            model.max_abs_score = max_score;
            model.separation_flag = separation;
            model.loglik_trace = loglik_trace;
            model.coef_norm_trace = coef_norm_trace;
            if !converged && !separation {
                return Err(Error::NotConverged {
                    iterations,
                    max_abs_score: max_score,
                    last: Box::new(model),
                });
            }
            Ok(model)
        }
    }
}
