//! slicebench — factorial benchmarking for replicated key-value slices.
//!
//! Subcommands mirror the campaign lifecycle: `plan` validates and
//! previews a plan file, `run` executes it into a result artifact,
//! `analyze` turns responses into effects and influence percentages,
//! `report` and `compare` render tables across persisted results, and
//! `simulate` drives one simulated ring directly.
//!
//! Exit codes: 0 on success, 2 when the input is invalid (bad plan,
//! malformed responses file, bad flags), 1 when execution itself fails.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use slicebench_core::doe::{analyze, build_design, default_factors, Analysis};
use slicebench_core::orchestrator::{
    replay_responses, run_experiment, ExperimentPlan, ExperimentResult, OrchestratorError,
};
use slicebench_core::report::{
    influence_entries, render_analysis, render_cell_table, render_deployment_table,
    render_design_preview, render_influence_table, render_stats_table, LabeledInfluence,
    OutputFormat, ReportError,
};
use slicebench_core::sim::{build_ring, RingConfig};
use slicebench_core::workload::{run_workload, WorkloadSpec};
use slicebench_core::Operation;

const EXIT_RUNTIME: i32 = 1;
const EXIT_VALIDATION: i32 = 2;

#[derive(Parser)]
#[command(
    name = "slicebench",
    version,
    about = "Measure and explain how CPU/RAM allocation drives key-value slice latency"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Markdown => OutputFormat::Markdown,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OperationArg {
    Write,
    Read,
}

impl From<OperationArg> for Operation {
    fn from(value: OperationArg) -> Self {
        match value {
            OperationArg::Write => Operation::Write,
            OperationArg::Read => Operation::Read,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableArg {
    Cells,
    Influence,
    Deployment,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a plan file and preview its design
    Plan {
        /// Plan JSON file
        #[arg(long)]
        plan: PathBuf,
        /// Override every seed in the plan (previews what `run` would use)
        #[arg(long)]
        seed: Option<u64>,
        /// Output format (json echoes the normalized plan)
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a plan and emit the result artifact (JSON)
    Run {
        /// Plan JSON file
        #[arg(long)]
        plan: PathBuf,
        /// Override every seed in the plan
        #[arg(long)]
        seed: Option<u64>,
        /// Display label stored in the result (defaults to the plan id)
        #[arg(long)]
        label: Option<String>,
        /// Write the result here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effect and influence analysis of responses or a result
    Analyze {
        /// Recorded responses CSV (experiment,operation,latency_ms)
        #[arg(long, conflicts_with = "result")]
        responses: Option<PathBuf>,
        /// Result artifact produced by `run`
        #[arg(long)]
        result: Option<PathBuf>,
        /// Restrict the analysis to one operation
        #[arg(long, value_enum)]
        operation: Option<OperationArg>,
        /// Display label (defaults to the input file stem)
        #[arg(long)]
        label: Option<String>,
        /// Output format (json keeps full precision)
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a table across result artifacts
    Report {
        /// Result artifacts produced by `run`
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        /// Which table to render
        #[arg(long, value_enum)]
        table: TableArg,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drive one workload against a simulated ring
    Simulate {
        /// Ring configuration JSON file
        #[arg(long)]
        ring: PathBuf,
        #[arg(long, value_enum, default_value = "write")]
        operation: OperationArg,
        /// Operations to issue
        #[arg(long, default_value_t = 10_000)]
        ops: u64,
        /// Key population size
        #[arg(long, default_value_t = 10_000)]
        entries: u64,
        /// Concurrent in-flight operations
        #[arg(long, default_value_t = 1)]
        in_flight: u32,
        /// Override the ring seed
        #[arg(long)]
        seed: Option<u64>,
        /// Dump the token ring as CSV instead of running a workload
        #[arg(long)]
        dump_ring: bool,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Influence table across labeled results or responses files
    Compare {
        /// label=path pairs; `.csv` paths are read as recorded responses,
        /// anything else as a result artifact
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<String>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// CLI failure, tagged with the exit code it should produce.
struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_VALIDATION,
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_RUNTIME,
        }
    }
}

impl From<OrchestratorError> for CliError {
    fn from(error: OrchestratorError) -> Self {
        if error.is_validation() {
            CliError::validation(error.to_string())
        } else {
            CliError::runtime(error.to_string())
        }
    }
}

impl From<slicebench_core::doe::DoeError> for CliError {
    fn from(error: slicebench_core::doe::DoeError) -> Self {
        CliError::validation(error.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(error: ReportError) -> Self {
        CliError::validation(error.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = dispatch(cli.command) {
        eprintln!("error: {}", error.message);
        std::process::exit(error.code);
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Plan {
            plan,
            seed,
            format,
            out,
        } => cmd_plan(&plan, seed, format.into(), out.as_deref()),
        Command::Run {
            plan,
            seed,
            label,
            out,
        } => cmd_run(&plan, seed, label, out.as_deref()),
        Command::Analyze {
            responses,
            result,
            operation,
            label,
            format,
            out,
        } => cmd_analyze(
            responses.as_deref(),
            result.as_deref(),
            operation.map(Into::into),
            label,
            format.into(),
            out.as_deref(),
        ),
        Command::Report {
            results,
            table,
            format,
            out,
        } => cmd_report(&results, table, format.into(), out.as_deref()),
        Command::Simulate {
            ring,
            operation,
            ops,
            entries,
            in_flight,
            seed,
            dump_ring,
            format,
            out,
        } => cmd_simulate(
            &ring,
            operation.into(),
            ops,
            entries,
            in_flight,
            seed,
            dump_ring,
            format.into(),
            out.as_deref(),
        ),
        Command::Compare {
            results,
            format,
            out,
        } => cmd_compare(&results, format.into(), out.as_deref()),
    }
}

/// Seed from `SLICEBENCH_SEED`, the lowest-precedence source (below the
/// `--seed` flag and any seeds in the plan itself).
fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("SLICEBENCH_SEED") {
        Ok(raw) => raw.parse().map(Some).map_err(|_| {
            CliError::validation(format!("SLICEBENCH_SEED must be an unsigned integer, got `{raw}`"))
        }),
        Err(_) => Ok(None),
    }
}

fn apply_seed_policy(plan: &mut ExperimentPlan, flag: Option<u64>) -> Result<(), CliError> {
    if let Some(seed) = flag {
        plan.override_seeds(seed);
    } else if let Some(seed) = env_seed()? {
        plan.fill_missing_seeds(seed);
    }
    Ok(())
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_plan(
    path: &Path,
    seed: Option<u64>,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (mut plan, _) = ExperimentPlan::load(path)?;
    apply_seed_policy(&mut plan, seed)?;
    let content = match format {
        OutputFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(&plan).expect("validated plan serializes");
            text.push('\n');
            text
        }
        format => {
            let design = plan.design()?;
            let preview = render_design_preview(&plan, format)?;
            match format {
                OutputFormat::Markdown => format!(
                    "plan `{}`: {} factors, {} cells, {} repetition(s)\n\n{}",
                    plan.plan_id,
                    design.k(),
                    design.rows(),
                    plan.repetitions,
                    preview
                ),
                _ => preview,
            }
        }
    };
    emit(out, &content)
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    label: Option<String>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (mut plan, base_dir) = ExperimentPlan::load(path)?;
    apply_seed_policy(&mut plan, seed)?;
    let mut result = run_experiment(&plan, &base_dir)?;
    if let Some(label) = label {
        result.label = label;
    }
    emit(out, &result.to_json_string())
}

/// Analyses for the requested operations, from either input kind.
fn collect_analyses(
    responses: Option<&Path>,
    result: Option<&Path>,
    operation: Option<Operation>,
) -> Result<(String, Vec<(Operation, Analysis)>), CliError> {
    let mut analyses = Vec::new();
    let label;
    match (responses, result) {
        (Some(path), None) => {
            label = path
                .file_stem()
                .map(|stem| stem.to_string_lossy().into_owned())
                .unwrap_or_else(|| "responses".to_owned());
            let vectors = replay_responses(path)?;
            for (op, vector) in vectors {
                if operation.is_some_and(|wanted| wanted != op) {
                    continue;
                }
                let k = vector.len().trailing_zeros() as usize;
                let design = build_design(default_factors(k))?;
                analyses.push((op, analyze(&design, &vector)?));
            }
        }
        (None, Some(path)) => {
            let loaded = ExperimentResult::load(path)?;
            label = loaded.label.clone();
            for op in loaded.operations_present() {
                if operation.is_some_and(|wanted| wanted != op) {
                    continue;
                }
                analyses.push((op, loaded.analysis(op)?));
            }
        }
        _ => {
            return Err(CliError::validation(
                "exactly one of --responses or --result is required",
            ))
        }
    }
    if analyses.is_empty() {
        let wanted = operation.map(|op| op.to_string()).unwrap_or_default();
        return Err(CliError::validation(format!(
            "input has no complete {wanted} measurements to analyze"
        )));
    }
    Ok((label, analyses))
}

fn cmd_analyze(
    responses: Option<&Path>,
    result: Option<&Path>,
    operation: Option<Operation>,
    label: Option<String>,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (default_label, analyses) = collect_analyses(responses, result, operation)?;
    let label = label.unwrap_or(default_label);
    let content = render_analysis(&label, "ms", &analyses, format)?;
    emit(out, &content)
}

fn cmd_report(
    paths: &[PathBuf],
    table: TableArg,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let results = paths
        .iter()
        .map(|path| ExperimentResult::load(path))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&ExperimentResult> = results.iter().collect();

    let content = match table {
        TableArg::Cells => render_cell_table(&refs, format)?,
        TableArg::Influence => {
            let entries = influence_entries(&refs)?;
            render_influence_table(&entries, format)?
        }
        TableArg::Deployment => {
            let entries = results
                .iter()
                .map(|result| {
                    result
                        .deployment_time_s
                        .map(|seconds| (result.label.clone(), seconds))
                        .ok_or_else(|| {
                            CliError::validation(format!(
                                "result `{}` records no deployment time",
                                result.label
                            ))
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            render_deployment_table(&entries, format)?
        }
    };
    emit(out, &content)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    ring_path: &Path,
    operation: Operation,
    ops: u64,
    entries: u64,
    in_flight: u32,
    seed: Option<u64>,
    dump_ring: bool,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(ring_path)
        .map_err(|e| CliError::runtime(format!("{}: {e}", ring_path.display())))?;
    let mut config: RingConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: invalid JSON: {e}", ring_path.display())))?;

    if let Some(seed) = seed {
        config.seed = Some(seed);
    } else if config.seed.is_none() {
        config.seed = env_seed()?;
    }

    let resolved_seed = config.effective_seed();
    let mut ring = build_ring(config).map_err(OrchestratorError::from)?;

    if dump_ring {
        return emit(out, &ring.dump_tokens_csv());
    }

    let spec = WorkloadSpec {
        operation,
        op_count: ops,
        entry_count: entries,
        in_flight,
        replication_factor: ring.config().replication_factor,
        consistency: ring.config().consistency,
        seed: Some(resolved_seed),
        ..Default::default()
    };
    let stats = run_workload(&spec, &mut ring).map_err(OrchestratorError::from)?;
    emit(out, &render_stats_table(&stats, format)?)
}

fn cmd_compare(
    pairs: &[String],
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut entries: Vec<LabeledInfluence> = Vec::new();
    for pair in pairs {
        let Some((label, path)) = pair.split_once('=') else {
            return Err(CliError::validation(format!(
                "`{pair}` is not a label=path pair"
            )));
        };
        if label.is_empty() || path.is_empty() {
            return Err(CliError::validation(format!(
                "`{pair}` is not a label=path pair"
            )));
        }
        let path = Path::new(path);
        if path.extension().is_some_and(|ext| ext == "csv") {
            let vectors = replay_responses(path)?;
            for (op, vector) in vectors {
                let k = vector.len().trailing_zeros() as usize;
                let design = build_design(default_factors(k))?;
                let analysis = analyze(&design, &vector)?;
                entries.push(LabeledInfluence {
                    label: label.to_owned(),
                    operation: op,
                    influence: analysis.influence,
                });
            }
        } else {
            let mut result = ExperimentResult::load(path)?;
            result.label = label.to_owned();
            entries.extend(influence_entries(&[&result])?);
        }
    }
    emit(out, &render_influence_table(&entries, format)?)
}
