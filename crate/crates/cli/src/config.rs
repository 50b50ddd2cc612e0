//! TOML-backed run configuration: what data to load, which estimator to run,
//! which intervention levels to evaluate, and how to bootstrap and report.
//!
//! Command-line flags override file values, which override environment
//! defaults; [`Overrides::apply`] implements that precedence.

use std::path::Path;

use orgmed::data::{CsvSchema, MediatorKind, OutcomeKind, Schema};
use orgmed::simulate::{
    binary_mediator_model, censored_mediator_model, confounding_model, linear_sem_model,
    uniqueness_model, GenerativeModel,
};
use orgmed::{Error, Result};
use serde::{Deserialize, Serialize};

/// Environment variable consulted for a default worker count when neither the
/// command line nor the config file sets one.
pub const WORKERS_ENV_VAR: &str = "ORGMED_WORKERS";

fn default_below_token() -> String {
    "BLQ".to_string()
}

/// Full description of one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub data: DataSection,
    pub estimator: EstimatorSection,
    pub intervention: InterventionSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Where the trial CSV lives and how its columns map onto the analysis roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Path to the CSV file.
    pub path: String,
    /// Participant identifier column; row numbers are used when absent.
    #[serde(default)]
    pub id: Option<String>,
    /// Treatment arm column (values 0 and 1).
    pub arm: String,
    /// Outcome column.
    pub outcome: String,
    /// Mediator column.
    pub mediator: String,
    /// Baseline common causes of mediator and outcome.
    #[serde(default)]
    pub common_causes: Vec<String>,
    /// Additional confounders used only by the observational estimator.
    #[serde(default)]
    pub extra_confounders: Vec<String>,
    pub outcome_kind: OutcomeKind,
    pub mediator_kind: MediatorKind,
    /// Lower assay limit for censored mediators, on the measurement scale.
    #[serde(default)]
    pub assay_limit: Option<f64>,
    /// Token marking below-limit mediator measurements in the CSV.
    #[serde(default = "default_below_token")]
    pub below_token: String,
}

impl DataSection {
    /// The column mapping in the form the loader expects.
    pub fn csv_schema(&self) -> CsvSchema {
        CsvSchema {
            schema: Schema {
                id: self.id.clone(),
                arm: self.arm.clone(),
                outcome: self.outcome.clone(),
                mediator: self.mediator.clone(),
                common_causes: self.common_causes.clone(),
                extra_confounders: self.extra_confounders.clone(),
            },
            outcome_kind: self.outcome_kind,
            mediator_kind: self.mediator_kind,
            assay_limit: self.assay_limit,
            below_limit_token: self.below_token.clone(),
        }
    }
}

/// Which estimator produces the point estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    /// Counterfactual mediator anchored at the control arm.
    Rel0,
    /// Counterfactual mediator anchored at the treated arm.
    Rel1,
    /// Confounder-adjusted analysis without a randomized arm.
    Observational,
    /// Product-of-fits shortcut for binary mediators.
    BinaryProduct,
    /// Coefficient product for linear mediator and outcome models.
    LinearProduct,
    /// Plug-in that replaces the mediator law with an external sample.
    TreatedSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub method: EstimatorMethod,
    /// Display name for the mediator in reports; defaults to the column name.
    #[serde(default)]
    pub mediator_label: Option<String>,
    /// CSV of treated-arm mediator draws, required for empirical-sample runs.
    #[serde(default)]
    pub sample_path: Option<String>,
    /// Which arm the product formulas condition on (0 or 1).
    #[serde(default)]
    pub product_arm: u8,
}

/// How the counterfactual mediator law is built from the fitted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    /// Multiply the odds of a binary mediator by each level (`inf` saturates).
    OddsMultiply,
    /// Lower a censored mediator by each level.
    Shift,
    /// Send every censored mediator below the assay limit.
    SetAllBelow,
    /// Replace the base-arm mediator law with the other arm's.
    ArmContrast,
    /// Replace the mediator law with draws from an external sample.
    EmpiricalSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSection {
    pub kind: InterventionKind,
    /// One report row per level; must be empty for kinds without a dial.
    #[serde(default)]
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    pub replicates: usize,
    /// Two-sided confidence level, strictly between 0 and 1.
    pub level: f64,
    pub seed: u64,
    /// Worker threads; 0 means one thread per available core.
    pub workers: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        BootstrapSection { replicates: 5000, level: 0.95, seed: 0, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// Rounded human-readable table.
    #[default]
    Markdown,
    /// Full-precision machine-readable table.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Report destination; stdout when absent.
    pub path: Option<String>,
    pub format: ReportFormat,
}

impl AnalysisConfig {
    /// Parses a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    /// Reads and parses a config file.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Serializes back to TOML; parsing the result reproduces `self`.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    /// Checks cross-field consistency before any data is touched.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        for (field, value) in
            [("arm", &d.arm), ("outcome", &d.outcome), ("mediator", &d.mediator)]
        {
            if value.trim().is_empty() {
                return Err(Error::Invalid(format!("data.{field} must name a column")));
            }
        }
        if let Some(limit) = d.assay_limit {
            if !limit.is_finite() {
                return Err(Error::Invalid("data.assay_limit must be finite".to_string()));
            }
        }

        let kind = self.intervention.kind;
        let levels = &self.intervention.levels;
        match kind {
            InterventionKind::OddsMultiply | InterventionKind::Shift => {
                if levels.is_empty() {
                    return Err(Error::Invalid(
                        "intervention.levels must list at least one level for this kind"
                            .to_string(),
                    ));
                }
            }
            _ => {
                if !levels.is_empty() {
                    return Err(Error::Invalid(format!(
                        "intervention.levels must be empty for kind {kind:?}"
                    )));
                }
            }
        }
        for &level in levels {
            let ok = match kind {
                InterventionKind::OddsMultiply => level > 0.0,
                InterventionKind::Shift => level.is_finite() && level >= 0.0,
                _ => unreachable!("levels already rejected for {kind:?}"),
            };
            if !ok {
                return Err(Error::Invalid(format!(
                    "intervention level {level} is not valid for kind {kind:?}"
                )));
            }
        }

        let est = &self.estimator;
        let needs_sample = kind == InterventionKind::EmpiricalSample;
        if needs_sample && est.sample_path.is_none() {
            return Err(Error::Invalid(
                "estimator.sample_path is required for empirical_sample interventions"
                    .to_string(),
            ));
        }
        if !needs_sample && est.sample_path.is_some() {
            return Err(Error::Invalid(
                "estimator.sample_path only applies to empirical_sample interventions"
                    .to_string(),
            ));
        }
        match est.method {
            EstimatorMethod::Rel0 | EstimatorMethod::Rel1 => {}
            EstimatorMethod::Observational => {
                if !matches!(
                    kind,
                    InterventionKind::OddsMultiply | InterventionKind::ArmContrast
                ) {
                    return Err(Error::Invalid(
                        "the observational estimator supports odds_multiply and \
                         arm_contrast interventions only"
                            .to_string(),
                    ));
                }
                if d.extra_confounders.is_empty() {
                    return Err(Error::Invalid(
                        "the observational estimator needs data.extra_confounders"
                            .to_string(),
                    ));
                }
            }
            EstimatorMethod::BinaryProduct => {
                if kind != InterventionKind::ArmContrast {
                    return Err(Error::Invalid(
                        "binary_product estimates the arm_contrast estimand only".to_string(),
                    ));
                }
                if d.mediator_kind != MediatorKind::Binary {
                    return Err(Error::Invalid(
                        "binary_product requires a binary mediator".to_string(),
                    ));
                }
                if est.product_arm > 1 {
                    return Err(Error::Invalid(
                        "estimator.product_arm must be 0 or 1".to_string(),
                    ));
                }
            }
            EstimatorMethod::LinearProduct => {
                if kind != InterventionKind::ArmContrast {
                    return Err(Error::Invalid(
                        "linear_product estimates the arm_contrast estimand only".to_string(),
                    ));
                }
                if d.mediator_kind != MediatorKind::LimitCensored
                    || d.outcome_kind != OutcomeKind::Continuous
                {
                    return Err(Error::Invalid(
                        "linear_product requires a continuous mediator and outcome"
                            .to_string(),
                    ));
                }
            }
            EstimatorMethod::TreatedSample => {
                if kind != InterventionKind::EmpiricalSample {
                    return Err(Error::Invalid(
                        "the treated_sample estimator requires an empirical_sample \
                         intervention"
                            .to_string(),
                    ));
                }
            }
        }

        let b = &self.bootstrap;
        if b.replicates == 0 {
            return Err(Error::Invalid("bootstrap.replicates must be positive".to_string()));
        }
        if !(b.level > 0.0 && b.level < 1.0) {
            return Err(Error::Invalid(
                "bootstrap.level must lie strictly between 0 and 1".to_string(),
            ));
        }
        Ok(())
    }

    /// The report label for the mediator.
    pub fn mediator_label(&self) -> &str {
        self.estimator
            .mediator_label
            .as_deref()
            .unwrap_or(&self.data.mediator)
    }
}

/// Named generators with fixed parameter choices, runnable without writing a
/// model table by hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    /// Linear mediator and outcome with a treatment-mediator interaction.
    LinearSem,
    /// Binary mediator, binary outcome, one binary common cause.
    BinaryMediator,
    /// Assay-censored mediator with a below-limit outcome shift.
    CensoredMediator,
    /// Two common causes; either conditioning set identifies the effect.
    Uniqueness,
    /// As `uniqueness`, with a direct path that breaks the agreement.
    UniquenessViolated,
    /// Treatment assignment driven by an extra confounder.
    Confounded,
    /// The confounded structure with treatment randomized instead.
    ConfoundedRandomized,
}

impl ScenarioName {
    /// The generative model this name stands for.
    pub fn model(self) -> GenerativeModel {
        match self {
            ScenarioName::LinearSem => linear_sem_model(0.5),
            ScenarioName::BinaryMediator => binary_mediator_model(),
            ScenarioName::CensoredMediator => censored_mediator_model(),
            ScenarioName::Uniqueness => uniqueness_model(false),
            ScenarioName::UniquenessViolated => uniqueness_model(true),
            ScenarioName::Confounded => confounding_model(false),
            ScenarioName::ConfoundedRandomized => confounding_model(true),
        }
    }
}

/// Full description of one synthetic-trial generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// A built-in scenario; mutually exclusive with `model`.
    #[serde(default)]
    pub name: Option<ScenarioName>,
    /// Number of participants to generate.
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Token written for below-limit mediator measurements.
    #[serde(default = "default_below_token")]
    pub below_token: String,
    /// An explicit generative model; mutually exclusive with `name`.
    #[serde(default)]
    pub model: Option<GenerativeModel>,
}

impl SimulateConfig {
    /// Parses a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    /// Reads and parses a config file.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Serializes back to TOML; parsing the result reproduces `self`.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    /// Resolves the scenario to a concrete generative model.
    pub fn resolve_model(&self) -> Result<GenerativeModel> {
        match (&self.scenario.name, &self.scenario.model) {
            (Some(name), None) => Ok(name.model()),
            (None, Some(model)) => Ok(model.clone()),
            (Some(_), Some(_)) => Err(Error::Invalid(
                "scenario.name and scenario.model are mutually exclusive".to_string(),
            )),
            (None, None) => Err(Error::Invalid(
                "one of scenario.name or scenario.model is required".to_string(),
            )),
        }
    }

    /// Checks the scenario before generating anything.
    pub fn validate(&self) -> Result<()> {
        if self.scenario.n == 0 {
            return Err(Error::Invalid("scenario.n must be positive".to_string()));
        }
        self.resolve_model().map(|_| ())
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub format: Option<ReportFormat>,
}

impl Overrides {
    /// Applies flag values over `config`, falling back to `env_workers`
    /// (the parsed environment default) when neither flag nor file set a
    /// worker count.
    pub fn apply(&self, config: &mut AnalysisConfig, env_workers: Option<usize>) {
        if let Some(seed) = self.seed {
            config.bootstrap.seed = seed;
        }
        if let Some(replicates) = self.replicates {
            config.bootstrap.replicates = replicates;
        }
        if let Some(level) = self.level {
            config.bootstrap.level = level;
        }
        if let Some(workers) = self.workers {
            config.bootstrap.workers = workers;
        } else if config.bootstrap.workers == 0 {
            if let Some(workers) = env_workers {
                config.bootstrap.workers = workers;
            }
        }
        if let Some(out) = &self.out {
            config.output.path = Some(out.clone());
        }
        if let Some(format) = self.format {
            config.output.format = format;
        }
    }

    /// Applies the subset of flags that make sense for generation runs.
    pub fn apply_simulate(&self, config: &mut SimulateConfig) {
        if let Some(seed) = self.seed {
            config.scenario.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output.path = Some(out.clone());
        }
    }
}

/// Reads the worker-count environment variable, ignoring unparsable values.
pub fn env_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV_VAR).ok()?.trim().parse().ok()
}
