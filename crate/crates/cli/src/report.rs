//! Report rendering: one row per intervention level, as a rounded markdown
//! table for reading or a full-precision CSV for downstream tooling.

use orgmed::inference::EffectEstimate;
use orgmed::mediation::EffectScale;

use crate::config::ReportFormat;

/// One rendered line of an analysis report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    /// Display name of the mediator.
    pub mediator: String,
    /// Display form of the intervention level (a number, `inf`, or the
    /// kind's name for kinds without a dial).
    pub level: String,
    /// Estimate and interval for this level.
    pub estimate: EffectEstimate,
    /// Number of analyzed participants.
    pub n: usize,
}

/// Renders `rows` in the requested format. The indirect effect is shown as a
/// percentage (one decimal) on the risk-difference scale and as a plain
/// number (three decimals) on the mean-difference scale; risk ratios get two
/// decimals. The CSV form keeps every float at full precision.
pub fn render(rows: &[ReportRow], scale: EffectScale, format: ReportFormat, level: f64) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(rows, scale, level),
        ReportFormat::Csv => render_csv(rows),
    }
}

fn fmt_effect(value: f64, scale: EffectScale) -> String {
    match scale {
        EffectScale::RiskDifference => format!("{:.1}%", 100.0 * value),
        EffectScale::MeanDifference => format!("{value:.3}"),
    }
}

fn fmt_effect_ci(ci: (f64, f64), scale: EffectScale) -> String {
    format!("({}, {})", fmt_effect(ci.0, scale), fmt_effect(ci.1, scale))
}

fn fmt_risk_ratio(rr: Option<f64>) -> String {
    rr.map(|v| format!("{v:.2}")).unwrap_or_default()
}

fn fmt_risk_ratio_ci(ci: Option<(f64, f64)>) -> String {
    ci.map(|(lo, hi)| format!("({lo:.2}, {hi:.2})")).unwrap_or_default()
}

/// Escapes the one character that would break a markdown table cell.
fn md_cell(text: &str) -> String {
    text.replace('|', "\\|")
}

fn render_markdown(rows: &[ReportRow], scale: EffectScale, level: f64) -> String {
    let pct = (level * 100.0 * 10.0).round() / 10.0;
    let mut out = String::new();
    out.push_str(&format!(
        "| mediator | level | indirect | indirect {pct}% CI | RR | RR {pct}% CI | n \
         | replicate_failures | separation_count | seed |\n"
    ));
    out.push_str("| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |\n");
    for row in rows {
        let e = &row.estimate;
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            md_cell(&row.mediator),
            md_cell(&row.level),
            fmt_effect(e.point.indirect, scale),
            fmt_effect_ci(e.ci_indirect, scale),
            fmt_risk_ratio(e.point.risk_ratio),
            fmt_risk_ratio_ci(e.ci_risk_ratio),
            row.n,
            e.replicate_failures,
            e.separation_count,
            e.seed,
        ));
    }
    out
}

fn render_csv(rows: &[ReportRow]) -> String {
    // `f64::to_string` prints the shortest string that parses back to the
    // same bits, so the CSV columns lose nothing to rounding.
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "mediator",
            "level",
            "indirect",
            "ci_low",
            "ci_high",
            "risk_ratio",
            "rr_low",
            "rr_high",
            "n",
            "replicate_failures",
            "separation_count",
            "seed",
        ])
        .expect("writing to memory cannot fail");
    for row in rows {
        let e = &row.estimate;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writer
            .write_record([
                row.mediator.clone(),
                row.level.clone(),
                e.point.indirect.to_string(),
                e.ci_indirect.0.to_string(),
                e.ci_indirect.1.to_string(),
                opt(e.point.risk_ratio),
                opt(e.ci_risk_ratio.map(|c| c.0)),
                opt(e.ci_risk_ratio.map(|c| c.1)),
                row.n.to_string(),
                e.replicate_failures.to_string(),
                e.separation_count.to_string(),
                e.seed.to_string(),
            ])
            .expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory cannot fail"))
        .expect("csv output is ASCII-safe UTF-8")
}
