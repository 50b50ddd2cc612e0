//! Trial data model: records with a treatment arm, a mediator, an outcome,
//! and named baseline covariates, plus CSV input/output.
//!
//! Mediators are either binary (e.g. viral suppression yes/no) or measured on
//! the log10 scale by an assay with a lower quantification limit, in which
//! case a value is either an observed number at or above the limit or the
//! distinguished state "below the assay limit".

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Outcome measurement scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    /// 0/1 outcome, analyzed on the probability scale.
    Binary,
    /// Real-valued outcome, analyzed on the mean scale.
    Continuous,
}

/// Mediator measurement scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorKind {
    /// 0/1 mediator.
    Binary,
    /// log10-scale measurement, possibly censored at a lower assay limit.
    LimitCensored,
}

/// A single mediator measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MediatorValue {
    /// Binary mediator value.
    Binary(bool),
    /// Observed log10 value at or above the assay limit.
    Observed(f64),
    /// Measurement below the assay limit; the numeric value is unknown.
    BelowLimit,
}

impl MediatorValue {
    /// True for `BelowLimit`.
    pub fn is_below_limit(&self) -> bool {
        matches!(self, MediatorValue::BelowLimit)
    }

    /// Kind this value belongs to.
    pub fn kind(&self) -> MediatorKind {
        match self {
            MediatorValue::Binary(_) => MediatorKind::Binary,
            _ => MediatorKind::LimitCensored,
        }
    }
}

/// Column names giving each dataset field a stable, user-facing identity.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Schema {
    /// Participant identifier column; row numbers are used when absent.
    pub id: Option<String>,
    /// Treatment arm column (values 0 and 1).
    pub arm: String,
    /// Outcome column.
    pub outcome: String,
    /// Mediator column.
    pub mediator: String,
    /// Baseline common causes of mediator and outcome.
    pub common_causes: Vec<String>,
    /// Additional confounders used only in observational analyses.
    pub extra_confounders: Vec<String>,
}

impl Schema {
    /// Checks that no column name is used twice.
    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut names: Vec<&str> = vec![&self.arm, &self.outcome, &self.mediator];
        if let Some(id) = &self.id {
            names.push(id);
        }
        names.extend(self.common_causes.iter().map(String::as_str));
        names.extend(self.extra_confounders.iter().map(String::as_str));
        for name in names {
            if name.is_empty() {
                return Err(Error::Data("empty column name in schema".into()));
            }
            if !seen.insert(name) {
                return Err(Error::Data(format!("duplicate column name '{name}' in schema")));
            }
        }
        Ok(())
    }
}

/// One participant's data, used when assembling a [`Dataset`] by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    /// Opaque participant identifier.
    pub id: String,
    /// Treatment arm, 0 or 1.
    pub arm: u8,
    /// Mediator measurement.
    pub mediator: MediatorValue,
    /// Outcome value; 0/1 for binary outcomes.
    pub outcome: f64,
    /// Common-cause values, aligned with `Schema::common_causes`.
    pub common_causes: Vec<f64>,
    /// Extra confounder values, aligned with `Schema::extra_confounders`.
    pub extra_confounders: Vec<f64>,
}

/// Immutable analysis dataset. Stored column-wise so bootstrap resampling is
/// a set of cheap gathers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    outcome_kind: OutcomeKind,
    mediator_kind: MediatorKind,
    assay_limit: Option<f64>,
    ids: Vec<String>,
    arms: Vec<u8>,
    outcomes: Vec<f64>,
    mediators: Vec<MediatorValue>,
    // Row-major n x k matrices; k may be zero.
    causes: Vec<f64>,
    confounders: Vec<f64>,
}

/// Row counts from a CSV load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadReport {
    /// Records kept.
    pub n_loaded: usize,
    /// Records dropped because a mapped field was missing.
    pub n_dropped: usize,
}

/// Column mapping and parsing rules for [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    /// Column names for each dataset field.
    pub schema: Schema,
    /// How to interpret the outcome column.
    pub outcome_kind: OutcomeKind,
    /// How to interpret the mediator column.
    pub mediator_kind: MediatorKind,
    /// Lower assay limit on the log10 scale (censored mediators only).
    pub assay_limit: Option<f64>,
    /// Token marking a below-limit mediator measurement.
    pub below_limit_token: String,
}

impl CsvSchema {
    /// Mapping with the conventional below-limit token `"BLQ"`.
    pub fn new(
        schema: Schema,
        outcome_kind: OutcomeKind,
        mediator_kind: MediatorKind,
        assay_limit: Option<f64>,
    ) -> Self {
        CsvSchema {
            schema,
            outcome_kind,
            mediator_kind,
            assay_limit,
            below_limit_token: "BLQ".to_string(),
        }
    }
}

// Fields treated as missing under listwise deletion.
fn is_missing(field: &str) -> bool {
    let t = field.trim();
    t.is_empty() || t == "NA"
}

fn parse_real(field: &str, column: &str, row: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        Error::Data(format!("row {row}: cannot parse '{field}' in column '{column}' as a number"))
    })?;
    if !v.is_finite() {
        return Err(Error::Data(format!("row {row}: non-finite value in column '{column}'")));
    }
    Ok(v)
}

fn parse_binary(field: &str, column: &str, row: usize) -> Result<f64> {
    let v = parse_real(field, column, row)?;
    if v != 0.0 && v != 1.0 {
        return Err(Error::Data(format!(
            "row {row}: column '{column}' must be 0 or 1, found '{field}'"
        )));
    }
    Ok(v)
}

/// Parses one mediator field according to the mediator kind, assay limit, and
/// below-limit token. Values strictly below the limit are rejected, not
/// clamped; a value exactly at the limit counts as observed.
pub fn parse_mediator_field(
    field: &str,
    kind: MediatorKind,
    assay_limit: Option<f64>,
    below_limit_token: &str,
    row: usize,
) -> Result<MediatorValue> {
    match kind {
        MediatorKind::Binary => Ok(MediatorValue::Binary(
            parse_binary(field, "mediator", row)? == 1.0,
        )),
        MediatorKind::LimitCensored => {
            if field.trim() == below_limit_token {
                if assay_limit.is_none() {
                    return Err(Error::Data(format!(
                        "row {row}: below-limit token present but no assay limit was declared"
                    )));
                }
                return Ok(MediatorValue::BelowLimit);
            }
            let v = parse_real(field, "mediator", row)?;
            if let Some(limit) = assay_limit {
                if v < limit {
                    return Err(Error::Data(format!(
                        "row {row}: mediator value {v} is below the declared assay limit {limit}"
                    )));
                }
            }
            Ok(MediatorValue::Observed(v))
        }
    }
}

impl Dataset {
    /// Builds a dataset from records, validating every invariant.
    pub fn from_records(
        schema: Schema,
        outcome_kind: OutcomeKind,
        mediator_kind: MediatorKind,
        assay_limit: Option<f64>,
        records: Vec<ObservationRecord>,
    ) -> Result<Dataset> {
        schema.validate()?;
        if records.is_empty() {
            return Err(Error::Data("no records".into()));
        }
        if let Some(limit) = assay_limit {
            if !limit.is_finite() {
                return Err(Error::Data("assay limit must be finite".into()));
            }
            if mediator_kind == MediatorKind::Binary {
                return Err(Error::Data("binary mediators do not take an assay limit".into()));
            }
        }
        let n = records.len();
        let kc = schema.common_causes.len();
        let kz = schema.extra_confounders.len();
        let mut ds = Dataset {
            schema,
            outcome_kind,
            mediator_kind,
            assay_limit,
            ids: Vec::with_capacity(n),
            arms: Vec::with_capacity(n),
            outcomes: Vec::with_capacity(n),
            mediators: Vec::with_capacity(n),
            causes: Vec::with_capacity(n * kc),
            confounders: Vec::with_capacity(n * kz),
        };
        for (row, r) in records.into_iter().enumerate() {
            if r.arm > 1 {
                return Err(Error::Data(format!("record {row}: arm must be 0 or 1")));
            }
            if !r.outcome.is_finite() {
                return Err(Error::Data(format!("record {row}: non-finite outcome")));
            }
            if outcome_kind == OutcomeKind::Binary && r.outcome != 0.0 && r.outcome != 1.0 {
                return Err(Error::Data(format!("record {row}: binary outcome must be 0 or 1")));
            }
            match (mediator_kind, r.mediator) {
                (MediatorKind::Binary, MediatorValue::Binary(_)) => {}
                (MediatorKind::LimitCensored, MediatorValue::Observed(v)) => {
                    if !v.is_finite() {
                        return Err(Error::Data(format!("record {row}: non-finite mediator")));
                    }
                    if let Some(limit) = assay_limit {
                        if v < limit {
                            return Err(Error::Data(format!(
                                "record {row}: mediator value {v} is below the assay limit {limit}"
                            )));
                        }
                    }
                }
                (MediatorKind::LimitCensored, MediatorValue::BelowLimit) => {
                    if assay_limit.is_none() {
                        return Err(Error::Data(format!(
                            "record {row}: below-limit mediator requires an assay limit"
                        )));
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "record {row}: mediator value does not match the declared mediator kind"
                    )));
                }
            }
            if r.common_causes.len() != kc || r.extra_confounders.len() != kz {
                return Err(Error::Data(format!(
                    "record {row}: covariate count does not match the schema"
                )));
            }
            if r.common_causes.iter().chain(&r.extra_confounders).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("record {row}: non-finite covariate")));
            }
            ds.ids.push(r.id);
            ds.arms.push(r.arm);
            ds.outcomes.push(r.outcome);
            ds.mediators.push(r.mediator);
            ds.causes.extend_from_slice(&r.common_causes);
            ds.confounders.extend_from_slice(&r.extra_confounders);
        }
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        self.outcome_kind
    }

    pub fn mediator_kind(&self) -> MediatorKind {
        self.mediator_kind
    }

    pub fn assay_limit(&self) -> Option<f64> {
        self.assay_limit
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn arm(&self, i: usize) -> u8 {
        self.arms[i]
    }

    pub fn outcome(&self, i: usize) -> f64 {
        self.outcomes[i]
    }

    pub fn mediator(&self, i: usize) -> MediatorValue {
        self.mediators[i]
    }

    /// Common-cause values of record `i`, in schema order.
    pub fn causes_row(&self, i: usize) -> &[f64] {
        let k = self.schema.common_causes.len();
        &self.causes[i * k..(i + 1) * k]
    }

    /// Extra-confounder values of record `i`, in schema order.
    pub fn confounders_row(&self, i: usize) -> &[f64] {
        let k = self.schema.extra_confounders.len();
        &self.confounders[i * k..(i + 1) * k]
    }

    /// Indices of the records in the given arm.
    pub fn arm_indices(&self, arm: u8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.arms[i] == arm).collect()
    }

    /// Number of records in the given arm.
    pub fn arm_count(&self, arm: u8) -> usize {
        self.arms.iter().filter(|&&a| a == arm).count()
    }

    /// Mean outcome in the given arm, if the arm is non-empty.
    pub fn arm_mean_outcome(&self, arm: u8) -> Option<f64> {
        let idx = self.arm_indices(arm);
        if idx.is_empty() {
            return None;
        }
        Some(idx.iter().map(|&i| self.outcomes[i]).sum::<f64>() / idx.len() as f64)
    }

    /// Materializes record `i` as an owned [`ObservationRecord`].
    pub fn record(&self, i: usize) -> ObservationRecord {
        ObservationRecord {
            id: self.ids[i].clone(),
            arm: self.arms[i],
            mediator: self.mediators[i],
            outcome: self.outcomes[i],
            common_causes: self.causes_row(i).to_vec(),
            extra_confounders: self.confounders_row(i).to_vec(),
        }
    }

    /// New dataset consisting of the given records (repeats allowed), in
    /// order. Used for bootstrap resampling of whole participant records.
    pub fn resample(&self, indices: &[usize]) -> Dataset {
        let kc = self.schema.common_causes.len();
        let kz = self.schema.extra_confounders.len();
        let mut out = Dataset {
            schema: self.schema.clone(),
            outcome_kind: self.outcome_kind,
            mediator_kind: self.mediator_kind,
            assay_limit: self.assay_limit,
            ids: Vec::with_capacity(indices.len()),
            arms: Vec::with_capacity(indices.len()),
            outcomes: Vec::with_capacity(indices.len()),
            mediators: Vec::with_capacity(indices.len()),
            causes: Vec::with_capacity(indices.len() * kc),
            confounders: Vec::with_capacity(indices.len() * kz),
        };
        for &i in indices {
            out.ids.push(self.ids[i].clone());
            out.arms.push(self.arms[i]);
            out.outcomes.push(self.outcomes[i]);
            out.mediators.push(self.mediators[i]);
            out.causes.extend_from_slice(self.causes_row(i));
            out.confounders.extend_from_slice(self.confounders_row(i));
        }
        out
    }
}

/// Loads a dataset from a CSV file with a single header row. Records with a
/// missing mapped field (empty or `NA`) are dropped and counted; any other
/// malformed field is an error.
pub fn load_csv<P: AsRef<Path>>(path: P, csv_schema: &CsvSchema) -> Result<(Dataset, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column '{name}' not found in CSV header")))
    };
    let s = &csv_schema.schema;
    s.validate()?;
    let id_col = s.id.as_deref().map(find).transpose()?;
    let arm_col = find(&s.arm)?;
    let outcome_col = find(&s.outcome)?;
    let mediator_col = find(&s.mediator)?;
    let cause_cols: Vec<usize> = s.common_causes.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let conf_cols: Vec<usize> =
        s.extra_confounders.iter().map(|c| find(c)).collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut n_dropped = 0usize;
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let data_row = row_idx + 1;
        let get = |col: usize| row.get(col).unwrap_or("");
        let mut mapped: Vec<&str> = vec![get(arm_col), get(outcome_col), get(mediator_col)];
        if let Some(c) = id_col {
            mapped.push(get(c));
        }
        mapped.extend(cause_cols.iter().map(|&c| get(c)));
        mapped.extend(conf_cols.iter().map(|&c| get(c)));
        if mapped.iter().any(|f| is_missing(f)) {
            n_dropped += 1;
            continue;
        }
        let arm = parse_binary(get(arm_col), &s.arm, data_row)? as u8;
        let outcome = match csv_schema.outcome_kind {
            OutcomeKind::Binary => parse_binary(get(outcome_col), &s.outcome, data_row)?,
            OutcomeKind::Continuous => parse_real(get(outcome_col), &s.outcome, data_row)?,
        };
        let mediator = parse_mediator_field(
            get(mediator_col),
            csv_schema.mediator_kind,
            csv_schema.assay_limit,
            &csv_schema.below_limit_token,
            data_row,
        )?;
        let common_causes = s
            .common_causes
            .iter()
            .zip(&cause_cols)
            .map(|(name, &c)| parse_real(get(c), name, data_row))
            .collect::<Result<Vec<f64>>>()?;
        let extra_confounders = s
            .extra_confounders
            .iter()
            .zip(&conf_cols)
            .map(|(name, &c)| parse_real(get(c), name, data_row))
            .collect::<Result<Vec<f64>>>()?;
        let id = match id_col {
            Some(c) => get(c).trim().to_string(),
            None => data_row.to_string(),
        };
        records.push(ObservationRecord { id, arm, mediator, outcome, common_causes, extra_confounders });
    }
    let n_loaded = records.len();
    let ds = Dataset::from_records(
        s.clone(),
        csv_schema.outcome_kind,
        csv_schema.mediator_kind,
        csv_schema.assay_limit,
        records,
    )?;
    Ok((ds, LoadReport { n_loaded, n_dropped }))
}

fn format_value(v: f64) -> String {
    // `{}` prints the shortest decimal string that round-trips the f64.
    format!("{v}")
}

/// Serializes a dataset in the canonical column order
/// (id, arm, outcome, mediator, common causes, extra confounders).
/// Loading the result with the matching [`CsvSchema`] reproduces the dataset.
pub fn to_csv_string(ds: &Dataset, below_limit_token: &str) -> String {
    let s = ds.schema();
    let mut out = String::new();
    let id_name = s.id.as_deref().unwrap_or("id");
    let mut header: Vec<&str> = vec![id_name, &s.arm, &s.outcome, &s.mediator];
    header.extend(s.common_causes.iter().map(String::as_str));
    header.extend(s.extra_confounders.iter().map(String::as_str));
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..ds.n() {
        let mut fields: Vec<String> = vec![
            ds.id(i).to_string(),
            ds.arm(i).to_string(),
            format_value(ds.outcome(i)),
            match ds.mediator(i) {
                MediatorValue::Binary(b) => (b as u8).to_string(),
                MediatorValue::Observed(v) => format_value(v),
                MediatorValue::BelowLimit => below_limit_token.to_string(),
            },
        ];
        fields.extend(ds.causes_row(i).iter().copied().map(format_value));
        fields.extend(ds.confounders_row(i).iter().copied().map(format_value));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes [`to_csv_string`] output to a file.
pub fn write_csv<P: AsRef<Path>>(ds: &Dataset, path: P, below_limit_token: &str) -> Result<()> {
    std::fs::write(path, to_csv_string(ds, below_limit_token))?;
    Ok(())
}

/// Recodes a limit-censored mediator as binary: 1 when below the assay limit
/// (e.g. virally suppressed), 0 when observed at or above it.
pub fn binarize_mediator(ds: &Dataset) -> Result<Dataset> {
    if ds.mediator_kind() == MediatorKind::Binary {
        return Err(Error::Invalid("mediator is already binary".into()));
    }
    let mut out = ds.clone();
    out.mediator_kind = MediatorKind::Binary;
    out.assay_limit = None;
    out.mediators = ds
        .mediators
        .iter()
        .map(|m| MediatorValue::Binary(m.is_below_limit()))
        .collect();
    Ok(out)
}
