//! Presentation tables for campaign results.
//!
//! Three renderers cover the tables a campaign report needs: per-cell mean
//! latencies, influence percentages, and deployment times. Each renders to
//! CSV, Markdown, or JSON carrying exactly the same numbers, so the format
//! choice is purely cosmetic.
//!
//! Rounding here is presentation-only — stored artifacts keep full
//! precision. Displayed values round half up toward +∞ (`(x · 10^dp +
//! 0.5).floor() / 10^dp`): two decimals for percentages, one for latency
//! means and seconds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doe::{Analysis, InfluenceReport};
use crate::orchestrator::{
    deployment_overhead, ExperimentPlan, ExperimentResult, OrchestratorError,
};
use crate::workload::WorkloadStats;
use crate::Operation;

/// Errors from table assembly and rendering.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no results to render")]
    EmptyInput,

    #[error("results do not share one design: {0}")]
    MismatchedDesigns(String),

    #[error("influence for `{0}` is degenerate (zero total variation); nothing to render")]
    DegenerateInfluence(String),

    #[error("{0}")]
    InvalidInput(String),
}

/// Output format of every renderer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Markdown,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!(
                "unknown format `{other}` (expected `csv`, `markdown`, or `json`)"
            )),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "markdown",
            OutputFormat::Json => "json",
        })
    }
}

/// Round half up toward +∞ at `decimals` places. The display-rounding
/// policy for every rendered number.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale + 0.5).floor() / scale
}

/// One table cell. Numbers carry their display precision so that all three
/// output formats print identical digits.
#[derive(Debug, Clone, PartialEq)]
enum CellValue {
    Text(String),
    Int(i64),
    /// Already display-rounded; `decimals` pads the textual formats.
    Num { value: f64, decimals: u32 },
    Empty,
}

impl CellValue {
    fn num(value: f64, decimals: u32) -> CellValue {
        CellValue::Num {
            value: round_half_up(value, decimals),
            decimals,
        }
    }

    fn render_text(&self) -> String {
        match self {
            CellValue::Text(text) => text.clone(),
            CellValue::Int(value) => value.to_string(),
            CellValue::Num { value, decimals } => {
                format!("{value:.prec$}", prec = *decimals as usize)
            }
            CellValue::Empty => String::new(),
        }
    }

    fn render_json(&self) -> serde_json::Value {
        match self {
            CellValue::Text(text) => serde_json::Value::String(text.clone()),
            CellValue::Int(value) => serde_json::Value::from(*value),
            CellValue::Num { value, .. } => serde_json::Number::from_f64(*value)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            CellValue::Empty => serde_json::Value::Null,
        }
    }
}

/// Column-labeled grid, the common shape behind all renderers.
#[derive(Debug, Clone, PartialEq)]
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<CellValue>>,
}

impl Table {
    fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Markdown => self.render_markdown(),
            OutputFormat::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns).expect("in-memory csv");
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(CellValue::render_text).collect();
            writer.write_record(&fields).expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    fn render_markdown(&self) -> String {
        let escape = |text: &str| text.replace('|', "\\|");
        let mut out = String::new();
        out.push_str("| ");
        out.push_str(&self.columns.iter().map(|c| escape(c)).collect::<Vec<_>>().join(" | "));
        out.push_str(" |\n| ");
        out.push_str(&vec!["---"; self.columns.len()].join(" | "));
        out.push_str(" |\n");
        for row in &self.rows {
            out.push_str("| ");
            out.push_str(
                &row.iter()
                    .map(|cell| escape(&cell.render_text()))
                    .collect::<Vec<_>>()
                    .join(" | "),
            );
            out.push_str(" |\n");
        }
        out
    }

    fn render_json(&self) -> String {
        let value = serde_json::json!({
            "columns": self.columns,
            "rows": self.rows
                .iter()
                .map(|row| row.iter().map(CellValue::render_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&value).expect("table serializes");
        text.push('\n');
        text
    }
}

fn check_same_design(results: &[&ExperimentResult]) -> Result<(), ReportError> {
    let first = &results[0];
    for result in &results[1..] {
        let same_len = result.factors.len() == first.factors.len();
        let same_factors = same_len
            && result.factors.iter().zip(&first.factors).all(|(a, b)| {
                a.name == b.name && a.low_label == b.low_label && a.high_label == b.high_label
            });
        if !same_factors {
            return Err(ReportError::MismatchedDesigns(format!(
                "`{}` and `{}` use different factors",
                first.label, result.label
            )));
        }
    }
    Ok(())
}

/// Per-cell mean latency table across one or more results sharing a
/// design: one row per cell, one latency column per (result, operation).
/// Latencies are shown at one decimal place.
pub fn render_cell_table(
    results: &[&ExperimentResult],
    format: OutputFormat,
) -> Result<String, ReportError> {
    if results.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    check_same_design(results)?;

    let design = results[0]
        .design()
        .map_err(|e| ReportError::InvalidInput(e.to_string()))?;

    let mut columns = vec!["experiment".to_owned()];
    for factor in design.factors() {
        columns.push(factor.name.clone());
    }
    let mut measurement_columns: Vec<(usize, Operation)> = Vec::new();
    for (index, result) in results.iter().enumerate() {
        for operation in result.operations_present() {
            columns.push(format!("{} {} mean (ms)", result.label, operation));
            measurement_columns.push((index, operation));
        }
    }
    if measurement_columns.is_empty() {
        return Err(ReportError::InvalidInput(
            "no result carries a complete set of measurements".into(),
        ));
    }

    let mut rows = Vec::with_capacity(design.rows());
    for row in 0..design.rows() {
        let mut cells = vec![CellValue::Int(row as i64 + 1)];
        for (j, factor) in design.factors().iter().enumerate() {
            let code = design.code(row, 1 << j);
            let label = if code > 0.0 {
                &factor.high_label
            } else {
                &factor.low_label
            };
            cells.push(CellValue::Text(format!("{label} ({code:+.0})")));
        }
        for &(index, operation) in &measurement_columns {
            let cell = &results[index].cells[row];
            let measurement = match operation {
                Operation::Write => cell.write.as_ref(),
                Operation::Read => cell.read.as_ref(),
            };
            cells.push(match measurement {
                Some(m) => CellValue::num(m.mean_latency_ms, 1),
                None => CellValue::Empty,
            });
        }
        rows.push(cells);
    }

    Ok(Table { columns, rows }.render(format))
}

/// One influence analysis with its table identity.
#[derive(Debug, Clone)]
pub struct LabeledInfluence {
    pub label: String,
    pub operation: Operation,
    pub influence: InfluenceReport,
}

/// Influence analyses for every (result, operation) pair, labeled for the
/// influence table.
pub fn influence_entries(
    results: &[&ExperimentResult],
) -> Result<Vec<LabeledInfluence>, OrchestratorError> {
    let mut entries = Vec::new();
    for result in results {
        for operation in result.operations_present() {
            let analysis = result.analysis(operation)?;
            entries.push(LabeledInfluence {
                label: result.label.clone(),
                operation,
                influence: analysis.influence,
            });
        }
    }
    Ok(entries)
}

/// Influence percentage table: one row per (testbed, operation), one
/// column per effect, percentages at two decimal places. All entries must
/// come from the same design, and none may be degenerate.
pub fn render_influence_table(
    entries: &[LabeledInfluence],
    format: OutputFormat,
) -> Result<String, ReportError> {
    if entries.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let effect_names: Vec<String> = entries[0]
        .influence
        .iter()
        .map(|(name, _)| name.to_owned())
        .collect();
    let any_residual = entries.iter().any(|e| e.influence.residual_pct.is_some());

    for entry in entries {
        if entry.influence.degenerate {
            return Err(ReportError::DegenerateInfluence(format!(
                "{} {}",
                entry.label, entry.operation
            )));
        }
        let names: Vec<&str> = entry.influence.iter().map(|(name, _)| name).collect();
        if names != effect_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ReportError::MismatchedDesigns(format!(
                "`{} {}` reports effects {names:?}, expected {effect_names:?}",
                entry.label, entry.operation
            )));
        }
    }

    let mut columns = vec!["testbed".to_owned(), "operation".to_owned()];
    columns.extend(effect_names.iter().map(|name| format!("{name} (%)")));
    if any_residual {
        columns.push("error (%)".to_owned());
    }

    let rows = entries
        .iter()
        .map(|entry| {
            let mut cells = vec![
                CellValue::Text(entry.label.clone()),
                CellValue::Text(entry.operation.to_string()),
            ];
            cells.extend(entry.influence.iter().map(|(_, pct)| CellValue::num(pct, 2)));
            if any_residual {
                cells.push(match entry.influence.residual_pct {
                    Some(pct) => CellValue::num(pct, 2),
                    None => CellValue::Empty,
                });
            }
            cells
        })
        .collect();

    Ok(Table { columns, rows }.render(format))
}

/// Deployment time table: seconds at one decimal place plus each entry's
/// overhead against the fastest entry at two, computed as
/// `100 · (t − t_fastest) / t_fastest`.
pub fn render_deployment_table(
    entries: &[(String, f64)],
    format: OutputFormat,
) -> Result<String, ReportError> {
    if entries.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    for (label, seconds) in entries {
        if !seconds.is_finite() || *seconds <= 0.0 {
            return Err(ReportError::InvalidInput(format!(
                "`{label}` has a non-positive deployment time {seconds}"
            )));
        }
    }
    let fastest = entries
        .iter()
        .map(|(_, seconds)| *seconds)
        .fold(f64::INFINITY, f64::min);

    let columns = vec![
        "testbed".to_owned(),
        "deployment (s)".to_owned(),
        "overhead vs fastest (%)".to_owned(),
    ];
    let rows = entries
        .iter()
        .map(|(label, seconds)| {
            let overhead = deployment_overhead(*seconds, fastest)
                .map_err(|e| ReportError::InvalidInput(e.to_string()))?;
            Ok(vec![
                CellValue::Text(label.clone()),
                CellValue::num(*seconds, 1),
                CellValue::num(overhead, 2),
            ])
        })
        .collect::<Result<Vec<_>, ReportError>>()?;

    Ok(Table { columns, rows }.render(format))
}

/// Full analysis document for one labeled response set.
///
/// CSV and Markdown show the display-rounded analysis table (coefficients
/// at four decimals, sums of squares and percentages at two); JSON is the
/// machine-grade artifact with full-precision values.
pub fn render_analysis(
    label: &str,
    unit: &str,
    analyses: &[(Operation, Analysis)],
    format: OutputFormat,
) -> Result<String, ReportError> {
    if analyses.is_empty() {
        return Err(ReportError::EmptyInput);
    }

    if format == OutputFormat::Json {
        let mut operations = serde_json::Map::new();
        for (operation, analysis) in analyses {
            let ss: serde_json::Value = serde_json::to_value(
                analysis
                    .breakdown
                    .iter()
                    .map(|(name, ss)| (name.to_owned(), ss))
                    .collect::<std::collections::BTreeMap<_, _>>(),
            )
            .expect("map serializes");
            let doc = serde_json::json!({
                "q0": analysis.effects.q0(),
                "effects": analysis.effects.to_map(),
                "ss": ss,
                "ss_error": analysis.breakdown.ss_error,
                "ss_total": analysis.breakdown.ss_total,
                "influence_pct": analysis.influence.to_map(),
                "residual_pct": analysis.influence.residual_pct,
                "degenerate": analysis.influence.degenerate,
            });
            operations.insert(operation.to_string(), doc);
        }
        let doc = serde_json::json!({
            "label": label,
            "unit": unit,
            "operations": operations,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("analysis serializes");
        text.push('\n');
        return Ok(text);
    }

    let columns = vec![
        "operation".to_owned(),
        "term".to_owned(),
        format!("coefficient ({unit})"),
        "sum of squares".to_owned(),
        "influence (%)".to_owned(),
    ];
    let mut rows = Vec::new();
    for (operation, analysis) in analyses {
        let op = CellValue::Text(operation.to_string());
        rows.push(vec![
            op.clone(),
            CellValue::Text("mean".into()),
            CellValue::num(analysis.effects.q0(), 4),
            CellValue::Empty,
            CellValue::Empty,
        ]);
        for (name, q) in analysis.effects.iter() {
            let ss = analysis.breakdown.get(name).expect("breakdown covers effects");
            let pct = analysis.influence.get(name);
            rows.push(vec![
                op.clone(),
                CellValue::Text(name.to_owned()),
                CellValue::num(q, 4),
                CellValue::num(ss, 2),
                pct.map_or(CellValue::Empty, |pct| CellValue::num(pct, 2)),
            ]);
        }
        if analysis.breakdown.ss_error > 0.0 {
            rows.push(vec![
                op.clone(),
                CellValue::Text("error".into()),
                CellValue::Empty,
                CellValue::num(analysis.breakdown.ss_error, 2),
                analysis
                    .influence
                    .residual_pct
                    .map_or(CellValue::Empty, |pct| CellValue::num(pct, 2)),
            ]);
        }
        rows.push(vec![
            op,
            CellValue::Text("total".into()),
            CellValue::Empty,
            CellValue::num(analysis.breakdown.ss_total, 2),
            if analysis.influence.degenerate {
                CellValue::Empty
            } else {
                CellValue::num(100.0, 2)
            },
        ]);
    }

    Ok(Table { columns, rows }.render(format))
}

/// Design preview for a validated plan: one row per cell with level labels
/// and the decoded allocation.
pub fn render_design_preview(
    plan: &ExperimentPlan,
    format: OutputFormat,
) -> Result<String, ReportError> {
    let design = plan
        .design()
        .map_err(|e| ReportError::InvalidInput(e.to_string()))?;

    let mut columns = vec!["experiment".to_owned()];
    for factor in design.factors() {
        columns.push(factor.name.clone());
    }
    columns.push("vcpus".to_owned());
    columns.push("ram_gb".to_owned());

    let mut rows = Vec::with_capacity(design.rows());
    for row in 0..design.rows() {
        let mut cells = vec![CellValue::Int(row as i64 + 1)];
        for (j, factor) in design.factors().iter().enumerate() {
            let code = design.code(row, 1 << j);
            let label = if code > 0.0 {
                &factor.high_label
            } else {
                &factor.low_label
            };
            cells.push(CellValue::Text(format!("{label} ({code:+.0})")));
        }
        let allocation = plan.allocation_for_row(&design, row);
        cells.push(CellValue::Int(i64::from(allocation.vcpus)));
        cells.push(CellValue::num(allocation.ram_gb, 1));
        rows.push(cells);
    }

    Ok(Table { columns, rows }.render(format))
}

/// One workload run's stats as a metric/value table (JSON renders the
/// stats struct itself, at full precision).
pub fn render_stats_table(
    stats: &WorkloadStats,
    format: OutputFormat,
) -> Result<String, ReportError> {
    if format == OutputFormat::Json {
        let mut text = serde_json::to_string_pretty(stats).expect("stats serialize");
        text.push('\n');
        return Ok(text);
    }

    let columns = vec!["metric".to_owned(), "value".to_owned()];
    let mut rows = vec![
        vec![
            CellValue::Text("operation".into()),
            CellValue::Text(stats.operation.to_string()),
        ],
        vec![
            CellValue::Text("mean latency (ms)".into()),
            CellValue::num(stats.mean_latency_ms, 1),
        ],
    ];
    let mut optional = |name: &str, value: Option<f64>| {
        if let Some(value) = value {
            rows.push(vec![
                CellValue::Text(name.into()),
                CellValue::num(value, 1),
            ]);
        }
    };
    optional("mean excl. timeouts (ms)", stats.mean_excl_timeouts_ms);
    optional("median (ms)", stats.p50_ms);
    optional("95th percentile (ms)", stats.p95_ms);
    optional("99th percentile (ms)", stats.p99_ms);
    rows.push(vec![
        CellValue::Text("op rate (op/s)".into()),
        CellValue::num(stats.ops_per_sec, 1),
    ]);
    if let Some(rows_per_sec) = stats.rows_per_sec {
        rows.push(vec![
            CellValue::Text("row rate (row/s)".into()),
            CellValue::num(rows_per_sec, 1),
        ]);
    }
    rows.push(vec![
        CellValue::Text("total ops".into()),
        CellValue::Int(stats.total_ops as i64),
    ]);
    rows.push(vec![
        CellValue::Text("completed ops".into()),
        CellValue::Int(stats.completed_ops as i64),
    ]);
    rows.push(vec![
        CellValue::Text("timeouts".into()),
        CellValue::Int(stats.timeout_count as i64),
    ]);
    if let Some(reason) = stats.stop_reason {
        rows.push(vec![
            CellValue::Text("stopped by".into()),
            CellValue::Text(
                match reason {
                    crate::workload::StopReason::OpCountReached => "op count",
                    crate::workload::StopReason::DurationReached => "duration limit",
                }
                .into(),
            ),
        ]);
    }

    Ok(Table { columns, rows }.render(format))
}
