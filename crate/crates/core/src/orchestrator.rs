//! Campaign orchestration: plans, adapters, and persisted results.
//!
//! A plan binds a factorial design to concrete resource allocations (which
//! allocation knob each factor turns, and to what values), a workload per
//! operation class, and an adapter that says where measurements come from:
//!
//! * `simulated` — build a fresh [`crate::sim::SimRing`] per cell and drive
//!   it with the bundled workload driver (fully deterministic);
//! * `replay` — read previously recorded per-cell mean latencies from a
//!   responses CSV (no execution at all);
//! * `external` — shell out to a stress tool per cell and parse its
//!   summary output.
//!
//! Cells may execute in any order, but results are always stored in design
//! row order, and within a repetition every cell runs from the same base
//! seed (common random numbers), so that seed noise cancels out of effect
//! estimates instead of leaking into them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doe::{
    analyze, build_design, Analysis, DesignMatrix, DoeError, Factor, ResponseSource,
    ResponseVector,
};
use crate::sim::{build_ring, RingConfig, SimError};
use crate::workload::{
    parse_stress_summary, run_workload, WorkloadError, WorkloadSpec, WorkloadStats,
};
use crate::{derive_seed, Operation};

/// Errors from plan handling, adapters, and result assembly.
#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("responses file {path}: row {row}: {reason}")]
    ResponsesSchema {
        path: String,
        row: usize,
        reason: String,
    },

    #[error("responses file {path}: {operation} responses are missing experiment {index}")]
    MissingExperiment {
        path: String,
        operation: Operation,
        index: usize,
    },

    #[error("responses file {path}: duplicate row for experiment {index} {operation}")]
    DuplicateExperiment {
        path: String,
        operation: Operation,
        index: usize,
    },

    #[error(
        "replay file {path} has {got} {operation} experiments but the plan's design has {expected}"
    )]
    ReplaySizeMismatch {
        path: String,
        operation: Operation,
        expected: usize,
        got: usize,
    },

    #[error("no deployment time available: {0}")]
    DeploymentUnsupported(String),

    #[error("readiness probe did not succeed within {0} s")]
    ReadinessTimeout(f64),

    #[error("baseline deployment time must be positive, got {0}")]
    NonPositiveBaseline(f64),

    #[error("cells {0:?} failed; the result cannot be analyzed")]
    IncompleteCells(Vec<usize>),

    #[error("result `{label}` has no complete {operation} measurements")]
    MissingOperation { label: String, operation: Operation },

    #[error("external command exited with {status}: {stderr}")]
    ExternalCommand { status: String, stderr: String },

    #[error(transparent)]
    Design(#[from] DoeError),

    #[error(transparent)]
    Workload(#[from] WorkloadError),

    #[error(transparent)]
    Sim(#[from] SimError),
}

impl OrchestratorError {
    /// Whether the error is the caller's input being invalid (as opposed
    /// to something going wrong while executing). Drives the CLI's exit
    /// code split between configuration mistakes and runtime failures.
    pub fn is_validation(&self) -> bool {
        match self {
            OrchestratorError::InvalidPlan(_)
            | OrchestratorError::Json { .. }
            | OrchestratorError::ResponsesSchema { .. }
            | OrchestratorError::MissingExperiment { .. }
            | OrchestratorError::DuplicateExperiment { .. }
            | OrchestratorError::ReplaySizeMismatch { .. }
            | OrchestratorError::NonPositiveBaseline(_)
            | OrchestratorError::IncompleteCells(_)
            | OrchestratorError::MissingOperation { .. }
            | OrchestratorError::DeploymentUnsupported(_)
            | OrchestratorError::Design(_) => true,
            OrchestratorError::Workload(e) => matches!(e, WorkloadError::InvalidSpec(_)),
            OrchestratorError::Sim(e) => !matches!(e, SimError::EmptyLatencies),
            OrchestratorError::Io { .. }
            | OrchestratorError::ReadinessTimeout(_)
            | OrchestratorError::ExternalCommand { .. } => false,
        }
    }
}

/// Which allocation knob a factor turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationField {
    Vcpus,
    RamGb,
}

impl std::fmt::Display for AllocationField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AllocationField::Vcpus => "vcpus",
            AllocationField::RamGb => "ram_gb",
        })
    }
}

/// One plan factor: a design factor plus the real allocation values its
/// coded levels decode to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFactor {
    pub name: String,
    pub low_label: String,
    pub high_label: String,
    pub applies_to: AllocationField,
    pub low_value: f64,
    pub high_value: f64,
}

impl PlanFactor {
    pub fn to_factor(&self) -> Result<Factor, DoeError> {
        Factor::new(&self.name, &self.low_label, &self.high_label)
    }

    fn validate(&self) -> Result<(), OrchestratorError> {
        let check = |which: &str, value: f64| -> Result<(), OrchestratorError> {
            let fail = |reason: String| Err(OrchestratorError::InvalidPlan(reason));
            match self.applies_to {
                AllocationField::Vcpus => {
                    if !value.is_finite() || value < 1.0 || value.fract() != 0.0 {
                        return fail(format!(
                            "factor `{}`: {which} vcpus value {value} must be a positive integer",
                            self.name
                        ));
                    }
                }
                AllocationField::RamGb => {
                    if !value.is_finite() || value <= 0.0 {
                        return fail(format!(
                            "factor `{}`: {which} ram_gb value {value} must be positive",
                            self.name
                        ));
                    }
                }
            }
            Ok(())
        };
        check("low", self.low_value)?;
        check("high", self.high_value)?;
        if self.low_value == self.high_value {
            return Err(OrchestratorError::InvalidPlan(format!(
                "factor `{}`: low and high decode to the same value {}",
                self.name, self.low_value
            )));
        }
        Ok(())
    }
}

/// Resolved allocation of one cell, as recorded in results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationProfile {
    pub vcpus: u32,
    pub ram_gb: f64,
}

/// Allocation fields actually governed by factors in this cell; fields no
/// factor touches are left at whatever the adapter's baseline says.
#[derive(Debug, Clone, Copy, Default)]
struct AssignedAllocation {
    vcpus: Option<u32>,
    ram_gb: Option<f64>,
}

/// Workload specs per operation class. Either may be omitted; a live
/// campaign runs only what is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PlanWorkloads {
    pub write: Option<WorkloadSpec>,
    pub read: Option<WorkloadSpec>,
}

/// Readiness probe for external targets: a command polled until it exits
/// successfully.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadinessProbe {
    pub command: String,
    #[serde(default = "default_probe_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_probe_interval")]
    pub poll_interval_s: f64,
}

fn default_probe_timeout() -> f64 {
    60.0
}

fn default_probe_interval() -> f64 {
    1.0
}

/// Where measurements come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterSpec {
    /// Drive the bundled ring simulator.
    Simulated {
        ring: RingConfig,
        /// Deployment time the simulated slice reports (a configuration
        /// input, since nothing is actually deployed).
        #[serde(default)]
        deploy_time_s: f64,
    },
    /// Read recorded responses instead of executing anything.
    Replay {
        /// Responses CSV, resolved relative to the plan file's directory.
        path: String,
        #[serde(default)]
        deploy_time_s: Option<f64>,
    },
    /// Shell out to a stress tool per cell. `{vcpus}`, `{ram_gb}`, and
    /// `{operation}` in the command are substituted per cell and
    /// operation.
    External {
        command: String,
        #[serde(default)]
        working_dir: Option<String>,
        #[serde(default)]
        env: BTreeMap<String, String>,
        #[serde(default)]
        readiness: Option<ReadinessProbe>,
    },
}

impl AdapterSpec {
    pub fn kind(&self) -> AdapterKind {
        match self {
            AdapterSpec::Simulated { .. } => AdapterKind::Simulated,
            AdapterSpec::Replay { .. } => AdapterKind::Replay,
            AdapterSpec::External { .. } => AdapterKind::External,
        }
    }
}

/// Adapter discriminant, kept in results so consumers know what produced
/// the numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterKind {
    Simulated,
    Replay,
    External,
}

impl AdapterKind {
    pub fn response_source(self) -> ResponseSource {
        match self {
            AdapterKind::Simulated => ResponseSource::Simulated,
            AdapterKind::Replay => ResponseSource::Replayed,
            AdapterKind::External => ResponseSource::External,
        }
    }
}

/// Order in which cells execute. Storage order is always design order;
/// randomization exists to decorrelate execution position from cell
/// identity on real testbeds (for the simulator it provably changes
/// nothing, which the tests pin down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CellOrder {
    #[default]
    Ascending,
    /// Shuffle with this seed.
    Randomized(u64),
}

fn default_repetitions() -> u32 {
    1
}

/// A complete experiment plan, the unit of configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub plan_id: String,
    pub factors: Vec<PlanFactor>,
    #[serde(default)]
    pub workloads: PlanWorkloads,
    pub adapter: AdapterSpec,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub cell_order: CellOrder,
}

impl ExperimentPlan {
    /// Parse and validate a plan from JSON text. `origin` only labels
    /// error messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, OrchestratorError> {
        let mut plan: ExperimentPlan =
            serde_json::from_str(text).map_err(|source| OrchestratorError::Json {
                path: origin.to_owned(),
                source,
            })?;
        plan.validate()?;
        Ok(plan)
    }

    /// Load a plan file. Returns the plan plus the directory against which
    /// relative paths inside the plan (the replay file) resolve.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|source| OrchestratorError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let plan = Self::from_json(&text, &path.display().to_string())?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((plan, base_dir))
    }

    /// Check plan coherence and normalize the parts that are implied by
    /// position (workload operations are fixed by their key).
    pub fn validate(&mut self) -> Result<(), OrchestratorError> {
        if self.plan_id.is_empty() {
            return Err(OrchestratorError::InvalidPlan("plan_id must not be empty".into()));
        }
        if self.repetitions == 0 {
            return Err(OrchestratorError::InvalidPlan(
                "repetitions must be at least 1".into(),
            ));
        }

        // The factor list must form a valid design...
        self.design()?;
        // ...and decode to unambiguous allocations.
        let mut seen = Vec::new();
        for factor in &self.factors {
            factor.validate()?;
            if seen.contains(&factor.applies_to) {
                return Err(OrchestratorError::InvalidPlan(format!(
                    "more than one factor applies to {}",
                    factor.applies_to
                )));
            }
            seen.push(factor.applies_to);
        }

        if let Some(spec) = &mut self.workloads.write {
            spec.operation = Operation::Write;
            spec.validate()?;
        }
        if let Some(spec) = &mut self.workloads.read {
            spec.operation = Operation::Read;
            spec.validate()?;
        }

        match &self.adapter {
            AdapterSpec::Simulated { ring, deploy_time_s } => {
                if self.workloads.write.is_none() && self.workloads.read.is_none() {
                    return Err(OrchestratorError::InvalidPlan(
                        "a simulated campaign needs at least one workload".into(),
                    ));
                }
                if !deploy_time_s.is_finite() || *deploy_time_s < 0.0 {
                    return Err(OrchestratorError::InvalidPlan(
                        "deploy_time_s must be nonnegative".into(),
                    ));
                }
                // Catch ring configuration problems at plan time rather
                // than in the middle of a campaign.
                build_ring(ring.clone())?;
                for spec in [&self.workloads.write, &self.workloads.read]
                    .into_iter()
                    .flatten()
                {
                    if spec.replication_factor != ring.replication_factor {
                        return Err(OrchestratorError::InvalidPlan(format!(
                            "workload replication_factor {} does not match the ring's {}",
                            spec.replication_factor, ring.replication_factor
                        )));
                    }
                }
            }
            AdapterSpec::External { command, readiness, .. } => {
                if self.workloads.write.is_none() && self.workloads.read.is_none() {
                    return Err(OrchestratorError::InvalidPlan(
                        "an external campaign needs at least one workload".into(),
                    ));
                }
                if command.is_empty() {
                    return Err(OrchestratorError::InvalidPlan(
                        "external command must not be empty".into(),
                    ));
                }
                if let Some(probe) = readiness {
                    if probe.timeout_s <= 0.0 || probe.poll_interval_s <= 0.0 {
                        return Err(OrchestratorError::InvalidPlan(
                            "readiness timeout and poll interval must be positive".into(),
                        ));
                    }
                }
            }
            AdapterSpec::Replay { path, deploy_time_s } => {
                if path.is_empty() {
                    return Err(OrchestratorError::InvalidPlan(
                        "replay path must not be empty".into(),
                    ));
                }
                if let Some(t) = deploy_time_s {
                    if !t.is_finite() || *t < 0.0 {
                        return Err(OrchestratorError::InvalidPlan(
                            "deploy_time_s must be nonnegative".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Design implied by the factor list.
    pub fn design(&self) -> Result<DesignMatrix, DoeError> {
        let factors = self
            .factors
            .iter()
            .map(PlanFactor::to_factor)
            .collect::<Result<Vec<_>, _>>()?;
        build_design(factors)
    }

    /// Force one seed everywhere (the `--seed` flag).
    pub fn override_seeds(&mut self, seed: u64) {
        if let Some(spec) = &mut self.workloads.write {
            spec.seed = Some(seed);
        }
        if let Some(spec) = &mut self.workloads.read {
            spec.seed = Some(seed);
        }
        if let AdapterSpec::Simulated { ring, .. } = &mut self.adapter {
            ring.seed = Some(seed);
        }
    }

    /// Fill only seeds the plan left unspecified (the environment
    /// fallback, which ranks below plan values).
    pub fn fill_missing_seeds(&mut self, seed: u64) {
        if let Some(spec) = &mut self.workloads.write {
            spec.seed.get_or_insert(seed);
        }
        if let Some(spec) = &mut self.workloads.read {
            spec.seed.get_or_insert(seed);
        }
        if let AdapterSpec::Simulated { ring, .. } = &mut self.adapter {
            ring.seed.get_or_insert(seed);
        }
    }

    fn assigned_allocation(&self, design: &DesignMatrix, row: usize) -> AssignedAllocation {
        let mut assigned = AssignedAllocation::default();
        for (j, factor) in self.factors.iter().enumerate() {
            let high = design.code(row, 1 << j) > 0.0;
            let value = if high { factor.high_value } else { factor.low_value };
            match factor.applies_to {
                AllocationField::Vcpus => assigned.vcpus = Some(value as u32),
                AllocationField::RamGb => assigned.ram_gb = Some(value),
            }
        }
        assigned
    }

    /// Baseline allocation for fields no factor governs: the simulated
    /// ring's first node, or a 1 vCPU / 1 GB placeholder when there is no
    /// ring to consult.
    fn baseline_allocation(&self) -> AllocationProfile {
        match &self.adapter {
            AdapterSpec::Simulated { ring, .. } => AllocationProfile {
                vcpus: ring.nodes[0].vcpus,
                ram_gb: ring.nodes[0].ram_gb,
            },
            _ => AllocationProfile {
                vcpus: 1,
                ram_gb: 1.0,
            },
        }
    }

    /// Concrete allocation recorded for one design row.
    pub fn allocation_for_row(
        &self,
        design: &DesignMatrix,
        row: usize,
    ) -> AllocationProfile {
        let assigned = self.assigned_allocation(design, row);
        let baseline = self.baseline_allocation();
        AllocationProfile {
            vcpus: assigned.vcpus.unwrap_or(baseline.vcpus),
            ram_gb: assigned.ram_gb.unwrap_or(baseline.ram_gb),
        }
    }
}

/// Measurements of one operation class in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellMeasurement {
    /// Mean latency across repetitions — the cell's response value.
    pub mean_latency_ms: f64,
    /// Per-repetition stats. Empty for replayed results, which carry only
    /// the recorded means.
    #[serde(default)]
    pub stats: Vec<WorkloadStats>,
}

/// One design cell's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    /// 1-based experiment number in design (standard) order.
    pub experiment: usize,
    /// Main-effect codes of this cell, in factor order.
    pub codes: Vec<i8>,
    pub allocation: AllocationProfile,
    #[serde(default)]
    pub write: Option<CellMeasurement>,
    #[serde(default)]
    pub read: Option<CellMeasurement>,
    /// Present when the cell failed; failed cells block analysis but not
    /// the rest of the campaign.
    #[serde(default)]
    pub error: Option<String>,
}

/// Which clock stamped the result. Simulated and replayed campaigns run in
/// virtual time so their artifacts are reproducible byte for byte; only
/// external campaigns consume wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    Virtual,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timestamps {
    pub clock: ClockKind,
    pub start_ms: f64,
    pub end_ms: f64,
}

/// A completed campaign: everything needed to reproduce tables without
/// re-running anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentResult {
    pub plan_id: String,
    /// Display name in cross-result tables; defaults to the plan id.
    pub label: String,
    pub adapter_kind: AdapterKind,
    pub factors: Vec<PlanFactor>,
    pub repetitions: u32,
    pub cells: Vec<CellRecord>,
    #[serde(default)]
    pub deployment_time_s: Option<f64>,
    pub timestamps: Timestamps,
}

impl ExperimentResult {
    pub fn design(&self) -> Result<DesignMatrix, DoeError> {
        let factors = self
            .factors
            .iter()
            .map(PlanFactor::to_factor)
            .collect::<Result<Vec<_>, _>>()?;
        build_design(factors)
    }

    /// Per-cell response values for one operation, in design order.
    pub fn response_vector(&self, operation: Operation) -> Result<ResponseVector, OrchestratorError> {
        let failed: Vec<usize> = self
            .cells
            .iter()
            .filter(|cell| cell.error.is_some())
            .map(|cell| cell.experiment)
            .collect();
        if !failed.is_empty() {
            return Err(OrchestratorError::IncompleteCells(failed));
        }
        let mut values = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            let measurement = match operation {
                Operation::Write => cell.write.as_ref(),
                Operation::Read => cell.read.as_ref(),
            };
            match measurement {
                Some(m) => values.push(m.mean_latency_ms),
                None => {
                    return Err(OrchestratorError::MissingOperation {
                        label: self.label.clone(),
                        operation,
                    })
                }
            }
        }
        Ok(ResponseVector::new(
            values,
            "ms",
            operation,
            self.adapter_kind.response_source(),
        )?)
    }

    /// Operations for which every cell holds a measurement.
    pub fn operations_present(&self) -> Vec<Operation> {
        let mut present = Vec::new();
        if self.cells.iter().all(|c| c.write.is_some()) {
            present.push(Operation::Write);
        }
        if self.cells.iter().all(|c| c.read.is_some()) {
            present.push(Operation::Read);
        }
        present
    }

    /// Effect → variation → influence chain for one operation.
    pub fn analysis(&self, operation: Operation) -> Result<Analysis, OrchestratorError> {
        let design = self.design()?;
        let responses = self.response_vector(operation)?;
        Ok(analyze(&design, &responses)?)
    }

    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("result serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, OrchestratorError> {
        serde_json::from_str(text).map_err(|source| OrchestratorError::Json {
            path: origin.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|source| OrchestratorError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<(), OrchestratorError> {
        std::fs::write(path, self.to_json_string()).map_err(|source| OrchestratorError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Recorded responses, parsed from a CSV with header
/// `experiment,operation,latency_ms`: one row per (cell, operation), cells
/// numbered from 1 in design order.
pub fn replay_responses(
    path: &Path,
) -> Result<BTreeMap<Operation, ResponseVector>, OrchestratorError> {
    let display_path = path.display().to_string();
    let schema_err = |row: usize, reason: String| OrchestratorError::ResponsesSchema {
        path: display_path.clone(),
        row,
        reason,
    };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => OrchestratorError::Io {
                path: display_path.clone(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => schema_err(0, e.to_string()),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| schema_err(0, e.to_string()))?
        .clone();
    let expected = ["experiment", "operation", "latency_ms"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(schema_err(
            0,
            format!(
                "header must be `experiment,operation,latency_ms`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut per_op: BTreeMap<Operation, BTreeMap<usize, f64>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, after the header
        let record = record.map_err(|e| schema_err(row, e.to_string()))?;
        if record.len() != 3 {
            return Err(schema_err(row, format!("expected 3 fields, found {}", record.len())));
        }
        let experiment: usize = record[0]
            .parse()
            .map_err(|_| schema_err(row, format!("bad experiment number `{}`", &record[0])))?;
        if experiment == 0 {
            return Err(schema_err(row, "experiment numbers start at 1".into()));
        }
        let operation: Operation = record[1]
            .parse()
            .map_err(|e: String| schema_err(row, e))?;
        let latency: f64 = record[2]
            .parse()
            .map_err(|_| schema_err(row, format!("bad latency `{}`", &record[2])))?;
        if !latency.is_finite() || latency <= 0.0 {
            return Err(schema_err(
                row,
                format!("latency must be positive and finite, got {latency}"),
            ));
        }
        if per_op.entry(operation).or_default().insert(experiment, latency).is_some() {
            return Err(OrchestratorError::DuplicateExperiment {
                path: display_path,
                operation,
                index: experiment,
            });
        }
    }

    if per_op.is_empty() {
        return Err(schema_err(0, "file contains no response rows".into()));
    }

    let mut vectors = BTreeMap::new();
    for (operation, cells) in per_op {
        let max = *cells.keys().last().expect("nonempty");
        // A full factorial needs 2^k cells; find the smallest gap to name.
        let rows = if max.is_power_of_two() && max >= 2 {
            max
        } else {
            max.next_power_of_two().max(2)
        };
        for index in 1..=rows {
            if !cells.contains_key(&index) {
                return Err(OrchestratorError::MissingExperiment {
                    path: display_path,
                    operation,
                    index,
                });
            }
        }
        let values: Vec<f64> = (1..=rows).map(|i| cells[&i]).collect();
        vectors.insert(
            operation,
            ResponseVector::new(values, "ms", operation, ResponseSource::Replayed)?,
        );
    }
    Ok(vectors)
}

/// Substitute the per-cell placeholders in an external command template.
fn substitute_template(template: &str, allocation: AllocationProfile, operation: Operation) -> String {
    template
        .replace("{vcpus}", &allocation.vcpus.to_string())
        .replace("{ram_gb}", &allocation.ram_gb.to_string())
        .replace("{operation}", operation.name())
}

fn run_external_command(
    command: &str,
    working_dir: Option<&Path>,
    env: &BTreeMap<String, String>,
) -> Result<String, OrchestratorError> {
    let mut cmd = std::process::Command::new("sh");
    cmd.arg("-c").arg(command);
    if let Some(dir) = working_dir {
        cmd.current_dir(dir);
    }
    for (key, value) in env {
        cmd.env(key, value);
    }
    let output = cmd.output().map_err(|source| OrchestratorError::Io {
        path: "sh".into(),
        source,
    })?;
    if !output.status.success() {
        return Err(OrchestratorError::ExternalCommand {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

/// Measure (or look up) how long bringing the slice up takes, in seconds.
///
/// Simulated slices report their configured value; replayed results carry
/// the recorded one if the plan has it; external targets are polled with
/// the readiness probe under a wall clock.
pub fn measure_deployment(
    adapter: &AdapterSpec,
    base_dir: &Path,
) -> Result<f64, OrchestratorError> {
    match adapter {
        AdapterSpec::Simulated { deploy_time_s, .. } => Ok(*deploy_time_s),
        AdapterSpec::Replay { deploy_time_s, .. } => deploy_time_s.ok_or_else(|| {
            OrchestratorError::DeploymentUnsupported(
                "replay plan records no deploy_time_s".into(),
            )
        }),
        AdapterSpec::External {
            readiness,
            working_dir,
            env,
            ..
        } => {
            let probe = readiness.as_ref().ok_or_else(|| {
                OrchestratorError::DeploymentUnsupported(
                    "external adapter has no readiness probe configured".into(),
                )
            })?;
            let dir = working_dir.as_ref().map(|d| base_dir.join(d));
            let started = std::time::Instant::now();
            loop {
                if run_external_command(&probe.command, dir.as_deref(), env).is_ok() {
                    return Ok(started.elapsed().as_secs_f64());
                }
                if started.elapsed().as_secs_f64() >= probe.timeout_s {
                    return Err(OrchestratorError::ReadinessTimeout(probe.timeout_s));
                }
                std::thread::sleep(std::time::Duration::from_secs_f64(probe.poll_interval_s));
            }
        }
    }
}

/// Relative slowdown of one deployment against a faster baseline, in
/// percent: `100 · (slower − faster) / faster`.
pub fn deployment_overhead(slower_s: f64, faster_s: f64) -> Result<f64, OrchestratorError> {
    if !faster_s.is_finite() || faster_s <= 0.0 {
        return Err(OrchestratorError::NonPositiveBaseline(faster_s));
    }
    if !slower_s.is_finite() {
        return Err(OrchestratorError::NonPositiveBaseline(slower_s));
    }
    Ok(100.0 * (slower_s - faster_s) / faster_s)
}

/// Virtual duration of one run, reconstructed from its throughput figures.
fn virtual_duration_ms(stats: &WorkloadStats) -> f64 {
    if stats.ops_per_sec > 0.0 {
        stats.total_ops as f64 * 1000.0 / stats.ops_per_sec
    } else {
        0.0
    }
}

/// Execute a plan and assemble its result.
///
/// Relative paths inside the plan resolve against `base_dir` (use the plan
/// file's directory). Failed cells are recorded as failed rather than
/// aborting the campaign; analysis later refuses incomplete results.
pub fn run_experiment(
    plan: &ExperimentPlan,
    base_dir: &Path,
) -> Result<ExperimentResult, OrchestratorError> {
    let design = plan.design()?;

    if let AdapterSpec::Replay { path, deploy_time_s } = &plan.adapter {
        return replay_experiment(plan, &design, &base_dir.join(path), *deploy_time_s);
    }

    // Deployment first: no point benchmarking a slice that never came up.
    let deployment_time_s = match &plan.adapter {
        AdapterSpec::External { readiness: None, .. } => None,
        adapter => Some(measure_deployment(adapter, base_dir)?),
    };

    let mut execution_order: Vec<usize> = (0..design.rows()).collect();
    if let CellOrder::Randomized(seed) = plan.cell_order {
        execution_order.shuffle(&mut ChaCha12Rng::seed_from_u64(seed));
    }

    let wall_start = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64() * 1000.0)
        .unwrap_or(0.0);
    let mut virtual_ms = 0.0f64;

    let mut cells: Vec<Option<CellRecord>> = (0..design.rows()).map(|_| None).collect();
    for &row in &execution_order {
        let assigned = plan.assigned_allocation(&design, row);
        let allocation = plan.allocation_for_row(&design, row);
        let mut record = CellRecord {
            experiment: row + 1,
            codes: design.main_codes(row),
            allocation,
            write: None,
            read: None,
            error: None,
        };

        for (operation, spec) in [
            (Operation::Write, plan.workloads.write.as_ref()),
            (Operation::Read, plan.workloads.read.as_ref()),
        ] {
            let Some(spec) = spec else { continue };
            match run_cell_operation(plan, base_dir, assigned, allocation, spec, operation) {
                Ok(measurement) => {
                    for stats in &measurement.stats {
                        virtual_ms += virtual_duration_ms(stats);
                    }
                    match operation {
                        Operation::Write => record.write = Some(measurement),
                        Operation::Read => record.read = Some(measurement),
                    }
                }
                Err(error) => {
                    let mut message = String::new();
                    let _ = write!(message, "{operation} workload: {error}");
                    record.error = Some(message);
                    break;
                }
            }
        }
        cells[row] = Some(record);
    }

    let wall_end = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64() * 1000.0)
        .unwrap_or(0.0);

    let timestamps = match plan.adapter.kind() {
        AdapterKind::External => Timestamps {
            clock: ClockKind::Wall,
            start_ms: wall_start,
            end_ms: wall_end,
        },
        _ => Timestamps {
            clock: ClockKind::Virtual,
            start_ms: 0.0,
            end_ms: virtual_ms,
        },
    };

    Ok(ExperimentResult {
        plan_id: plan.plan_id.clone(),
        label: plan.plan_id.clone(),
        adapter_kind: plan.adapter.kind(),
        factors: plan.factors.clone(),
        repetitions: plan.repetitions,
        cells: cells.into_iter().map(|c| c.expect("every row visited")).collect(),
        deployment_time_s,
        timestamps,
    })
}

/// Run all repetitions of one (cell, operation) pair.
///
/// Every repetition gets a fresh adapter so no state leaks between cells,
/// and seeds derive from the plan's base seeds and the repetition index
/// only — cells within one repetition share randomness by construction.
fn run_cell_operation(
    plan: &ExperimentPlan,
    base_dir: &Path,
    assigned: AssignedAllocation,
    allocation: AllocationProfile,
    spec: &WorkloadSpec,
    operation: Operation,
) -> Result<CellMeasurement, OrchestratorError> {
    let mut stats = Vec::with_capacity(plan.repetitions as usize);
    for rep in 0..plan.repetitions {
        let run = match &plan.adapter {
            AdapterSpec::Simulated { ring, .. } => {
                let mut config = ring.clone();
                for node in &mut config.nodes {
                    if let Some(vcpus) = assigned.vcpus {
                        node.vcpus = vcpus;
                    }
                    if let Some(ram_gb) = assigned.ram_gb {
                        node.ram_gb = ram_gb;
                    }
                }
                config.seed = Some(derive_seed(config.effective_seed(), u64::from(rep)));
                let mut ring = build_ring(config)?;
                let mut spec = spec.clone();
                spec.seed = Some(derive_seed(spec.effective_seed(), u64::from(rep)));
                run_workload(&spec, &mut ring)?
            }
            AdapterSpec::External {
                command,
                working_dir,
                env,
                ..
            } => {
                let rendered = substitute_template(command, allocation, operation);
                let dir = working_dir.as_ref().map(|d| base_dir.join(d));
                let stdout = run_external_command(&rendered, dir.as_deref(), env)?;
                parse_stress_summary(&stdout, operation)?
            }
            AdapterSpec::Replay { .. } => unreachable!("replay plans never run cells"),
        };
        stats.push(run);
    }

    let mean_latency_ms =
        stats.iter().map(|s| s.mean_latency_ms).sum::<f64>() / stats.len() as f64;
    Ok(CellMeasurement {
        mean_latency_ms,
        stats,
    })
}

fn replay_experiment(
    plan: &ExperimentPlan,
    design: &DesignMatrix,
    responses_path: &Path,
    deploy_time_s: Option<f64>,
) -> Result<ExperimentResult, OrchestratorError> {
    let vectors = replay_responses(responses_path)?;
    for (operation, vector) in &vectors {
        if vector.len() != design.rows() {
            return Err(OrchestratorError::ReplaySizeMismatch {
                path: responses_path.display().to_string(),
                operation: *operation,
                expected: design.rows(),
                got: vector.len(),
            });
        }
    }

    let cells = (0..design.rows())
        .map(|row| {
            let measurement = |operation: Operation| {
                vectors.get(&operation).map(|vector| CellMeasurement {
                    mean_latency_ms: vector.values()[row],
                    stats: Vec::new(),
                })
            };
            CellRecord {
                experiment: row + 1,
                codes: design.main_codes(row),
                allocation: plan.allocation_for_row(design, row),
                write: measurement(Operation::Write),
                read: measurement(Operation::Read),
                error: None,
            }
        })
        .collect();

    Ok(ExperimentResult {
        plan_id: plan.plan_id.clone(),
        label: plan.plan_id.clone(),
        adapter_kind: AdapterKind::Replay,
        factors: plan.factors.clone(),
        repetitions: plan.repetitions,
        cells,
        deployment_time_s: deploy_time_s,
        timestamps: Timestamps {
            clock: ClockKind::Virtual,
            start_ms: 0.0,
            end_ms: 0.0,
        },
    })
}
