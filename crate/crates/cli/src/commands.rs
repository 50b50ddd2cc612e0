//! Command implementations behind the binary's subcommands: run an analysis,
//! generate a synthetic trial, classify errors into exit codes.

use std::path::PathBuf;

use orgmed::data::{load_csv, parse_mediator_field, to_csv_string, Dataset, LoadReport};
use orgmed::glm::{fit, DesignSpec, LinkKind, ResponseKind, Term};
use orgmed::inference::{bootstrap, BootstrapConfig};
use orgmed::interventions::{InterventionSpec, OddsFactor, TreatedSample};
use orgmed::mediation::{
    binary_product, effect_scale, indirect_from_treated_sample, linear_product,
    observational_indirect, organic_indirect_rel0, organic_indirect_rel1, PointEstimates,
};
use orgmed::simulate::generate_trial;
use orgmed::{Error, Result};

use crate::config::{
    AnalysisConfig, DataSection, EstimatorMethod, InterventionKind, SimulateConfig,
};
use crate::report::{render, ReportRow};

/// A finished analysis: the rendered report, where it landed (if a path was
/// configured), and the rows for programmatic inspection.
#[derive(Debug)]
pub struct AnalyzeOutput {
    pub report: String,
    pub written: Option<PathBuf>,
    pub rows: Vec<ReportRow>,
}

/// A finished generation run.
#[derive(Debug)]
pub struct SimulateOutput {
    pub csv: String,
    pub written: Option<PathBuf>,
}

/// Maps an error to the binary's exit code: 1 for unusable configuration,
/// 2 for data problems, 3 for estimation failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invalid(_) => 1,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) => 2,
        Error::RankDeficient(_) | Error::NotConverged { .. } | Error::Estimation(_) => 3,
    }
}

/// Runs a configured analysis end to end. The report is rendered in full
/// before anything is written, so a failure can never leave a partial table
/// behind.
pub fn run_analyze(cfg: &AnalysisConfig) -> Result<AnalyzeOutput> {
    cfg.validate()?;
    let (ds, _load) = load_dataset(cfg)?;
    let sample = cfg
        .estimator
        .sample_path
        .as_deref()
        .map(|path| load_treated_sample(path, &cfg.data))
        .transpose()?;

    let boot = BootstrapConfig {
        replicates: cfg.bootstrap.replicates,
        level: cfg.bootstrap.level,
        seed: cfg.bootstrap.seed,
        workers: cfg.bootstrap.workers,
    };
    let label = cfg.mediator_label().to_string();
    let mut rows = Vec::new();
    for (level, task) in build_tasks(cfg, sample)? {
        let estimator = task.into_estimator(cfg.estimator.method)?;
        let estimate = bootstrap(&ds, estimator.as_ref(), &boot)?;
        rows.push(ReportRow { mediator: label.clone(), level, estimate, n: ds.n() });
    }

    let report = render(&rows, effect_scale(&ds), cfg.output.format, cfg.bootstrap.level);
    let written = write_output(cfg.output.path.as_deref(), &report)?;
    Ok(AnalyzeOutput { report, written, rows })
}

/// Generates a synthetic trial and renders it as CSV. For a fixed config the
/// output is byte-identical across runs.
pub fn run_simulate(cfg: &SimulateConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let model = cfg.resolve_model()?;
    let ds = generate_trial(&model, cfg.scenario.n, cfg.scenario.seed)?;
    let csv = to_csv_string(&ds, &cfg.scenario.below_token);
    let written = write_output(cfg.output.path.as_deref(), &csv)?;
    Ok(SimulateOutput { csv, written })
}

/// Loads the analysis dataset described by the config.
pub fn load_dataset(cfg: &AnalysisConfig) -> Result<(Dataset, LoadReport)> {
    load_csv(&cfg.data.path, &cfg.data.csv_schema())
}

/// One report row's worth of estimation work.
enum RowTask {
    Organic(InterventionSpec),
    Product(u8),
}

/// A full estimation pipeline in the shape `bootstrap` re-runs per resample.
type Estimator = Box<dyn Fn(&Dataset) -> Result<PointEstimates> + Sync>;

impl RowTask {
    /// Bundles the task with the configured method into a bootstrap-ready
    /// estimator closure.
    fn into_estimator(self, method: EstimatorMethod) -> Result<Estimator> {
        Ok(match (method, self) {
            (EstimatorMethod::Rel0, RowTask::Organic(spec)) => {
                Box::new(move |d: &Dataset| organic_indirect_rel0(d, None, &spec, None))
            }
            (EstimatorMethod::Rel1, RowTask::Organic(spec)) => {
                Box::new(move |d: &Dataset| organic_indirect_rel1(d, None, &spec, None))
            }
            (EstimatorMethod::Observational, RowTask::Organic(spec)) => {
                Box::new(move |d: &Dataset| observational_indirect(d, None, &spec, None))
            }
            (EstimatorMethod::TreatedSample, RowTask::Organic(spec)) => {
                let InterventionSpec::EmpiricalSample(sample) = spec else {
                    return Err(Error::Invalid(
                        "the treated_sample estimator requires an empirical sample"
                            .to_string(),
                    ));
                };
                Box::new(move |d: &Dataset| indirect_from_treated_sample(d, None, &sample))
            }
            (EstimatorMethod::BinaryProduct, RowTask::Product(arm)) => {
                Box::new(move |d: &Dataset| {
                    binary_product(d, None, None, arm).map(|v| product_point(v, arm))
                })
            }
            (EstimatorMethod::LinearProduct, RowTask::Product(_)) => {
                Box::new(|d: &Dataset| linear_product_point(d))
            }
            _ => {
                return Err(Error::Invalid(
                    "estimator method and intervention kind do not fit together"
                        .to_string(),
                ))
            }
        })
    }
}

/// Expands the configured intervention into displayable (level, task) rows.
fn build_tasks(
    cfg: &AnalysisConfig,
    sample: Option<TreatedSample>,
) -> Result<Vec<(String, RowTask)>> {
    let product = matches!(
        cfg.estimator.method,
        EstimatorMethod::BinaryProduct | EstimatorMethod::LinearProduct
    );
    let tasks = match cfg.intervention.kind {
        InterventionKind::OddsMultiply => cfg
            .intervention
            .levels
            .iter()
            .map(|&level| {
                let factor = if level.is_infinite() {
                    OddsFactor::Infinite
                } else {
                    OddsFactor::Finite(level)
                };
                (
                    level_display(level),
                    RowTask::Organic(InterventionSpec::OddsMultiply(factor)),
                )
            })
            .collect(),
        InterventionKind::Shift => cfg
            .intervention
            .levels
            .iter()
            .map(|&level| {
                (level_display(level), RowTask::Organic(InterventionSpec::Shift(level)))
            })
            .collect(),
        InterventionKind::SetAllBelow => vec![(
            "set_all_below".to_string(),
            RowTask::Organic(InterventionSpec::SetAllBelow),
        )],
        InterventionKind::ArmContrast => {
            let task = if product {
                RowTask::Product(cfg.estimator.product_arm)
            } else {
                RowTask::Organic(InterventionSpec::ArmContrast)
            };
            vec![("arm_contrast".to_string(), task)]
        }
        InterventionKind::EmpiricalSample => {
            let sample = sample.ok_or_else(|| {
                Error::Invalid("an empirical_sample run needs a sample file".to_string())
            })?;
            vec![(
                "treated_sample".to_string(),
                RowTask::Organic(InterventionSpec::EmpiricalSample(sample)),
            )]
        }
    };
    Ok(tasks)
}

fn level_display(level: f64) -> String {
    if level.is_infinite() {
        "inf".to_string()
    } else {
        format!("{level}")
    }
}

/// Wraps a bare product-formula value in the estimate shape the bootstrap
/// expects; the product methods carry no slice means or risk ratios.
fn product_point(indirect: f64, base_arm: u8) -> PointEstimates {
    PointEstimates {
        base_arm,
        indirect,
        direct: None,
        total: None,
        baseline_mean: f64::NAN,
        counterfactual_mean: f64::NAN,
        risk_ratio: None,
        separation: false,
        extrapolated: 0,
    }
}

/// Coefficient-product analysis for continuous mediator and outcome: a linear
/// mediator fit with an arm term, and a linear outcome fit with mediator,
/// arm, and arm-mediator interaction terms.
fn linear_product_point(ds: &Dataset) -> Result<PointEstimates> {
    let schema = ds.schema();
    let arm = schema.arm.clone();

    let mut mediator_terms = vec![Term::Intercept, Term::Covariate(arm.clone())];
    mediator_terms
        .extend(schema.common_causes.iter().map(|c| Term::Covariate(c.clone())));
    let mediator_design = DesignSpec::new(mediator_terms)?;

    let mut outcome_terms =
        vec![Term::Intercept, Term::MediatorMain, Term::Covariate(arm.clone())];
    outcome_terms.extend(schema.common_causes.iter().map(|c| Term::Covariate(c.clone())));
    outcome_terms.push(Term::Interaction(arm, "mediator".to_string()));
    let outcome_design = DesignSpec::new(outcome_terms)?;

    let mediator_model = fit(
        ds,
        ResponseKind::MediatorContinuous,
        &mediator_design,
        LinkKind::Identity,
        None,
    )?;
    let outcome_model =
        fit(ds, ResponseKind::Outcome, &outcome_design, LinkKind::Identity, None)?;
    linear_product(&mediator_model, &outcome_model).map(|v| product_point(v, 0))
}

fn is_missing(field: &str) -> bool {
    let trimmed = field.trim();
    trimmed.is_empty() || trimmed == "NA"
}

/// Loads an external treated-arm mediator sample. The file must carry the
/// configured mediator column; every other column except the id is taken as a
/// covariate. Rows with missing fields are dropped, like the main loader's.
pub fn load_treated_sample(path: &str, data: &DataSection) -> Result<TreatedSample> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();

    let mut mediator_idx = None;
    let mut covariates: Vec<(usize, String)> = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        if name == data.mediator {
            mediator_idx = Some(idx);
        } else if data.id.as_deref() != Some(name) {
            covariates.push((idx, name.to_string()));
        }
    }
    let mediator_idx = mediator_idx.ok_or_else(|| {
        Error::Data(format!(
            "sample file {path} has no mediator column {:?}",
            data.mediator
        ))
    })?;

    let mut pairs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = idx + 2; // line number in the file; the header is line 1
        let mediator_field = record.get(mediator_idx).unwrap_or("");
        if is_missing(mediator_field) {
            continue;
        }
        let mediator = parse_mediator_field(
            mediator_field,
            data.mediator_kind,
            data.assay_limit,
            &data.below_token,
            row,
        )?;
        let mut values = Vec::with_capacity(covariates.len());
        let mut complete = true;
        for (col, name) in &covariates {
            let field = record.get(*col).unwrap_or("");
            if is_missing(field) {
                complete = false;
                break;
            }
            values.push(field.trim().parse::<f64>().map_err(|_| {
                Error::Data(format!(
                    "row {row}: sample column {name} is not numeric: {field:?}"
                ))
            })?);
        }
        if complete {
            pairs.push((mediator, values));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Data(format!("sample file {path} has no usable rows")));
    }
    Ok(TreatedSample {
        names: covariates.into_iter().map(|(_, name)| name).collect(),
        pairs,
    })
}

/// Writes `content` to `path` when one is configured; the caller prints to
/// stdout otherwise.
fn write_output(path: Option<&str>, content: &str) -> Result<Option<PathBuf>> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(Some(PathBuf::from(p)))
        }
        None => Ok(None),
    }
}
