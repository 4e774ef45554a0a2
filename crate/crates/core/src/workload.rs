//! Deterministic workload generation and latency aggregation.
//!
//! The driver runs an open-loop, virtually-timed pipeline against any
//! [`KeyValueTarget`]: operations are issued as soon as one of `in_flight`
//! slots frees up, each completion advances that slot's clock by the
//! operation's latency, and the run stops at an operation budget or a
//! virtual duration limit. No wall-clock time is involved anywhere, which
//! is what makes simulated campaigns reproducible byte for byte.
//!
//! The module also speaks the line-oriented summary format that external
//! stress tools print (`<key> : <value> <unit>`), so recorded or live tool
//! output can flow into the same aggregation types.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::{Operation, DEFAULT_SEED};

/// Errors from workload execution, aggregation, and summary parsing.
#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),

    #[error("target is not ready to serve operations")]
    TargetUnreachable,

    #[error("timed-out fraction {fraction:.3} exceeds the abort threshold {threshold}")]
    TimeoutFractionExceeded { fraction: f64, threshold: f64 },

    #[error("no operations completed ({timed_out} of {issued} issued operations timed out)")]
    ZeroCompleted { issued: u64, timed_out: u64 },

    #[error("cannot aggregate an empty sample list")]
    EmptySamples,

    #[error("summary line {line}: cannot parse `{text}`")]
    MalformedSummaryLine { line: usize, text: String },

    #[error("summary line {line}: `{key}` expects unit `{expected}`, found `{found}`")]
    SummaryUnitMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        found: String,
    },

    #[error("summary is missing the mandatory `{0}` field")]
    MissingSummaryField(&'static str),

    #[error("summary reports {errors} errors out of {total} total operations")]
    InconsistentSummaryCounts { errors: u64, total: u64 },
}

/// How keys are chosen for measured operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KeyDistribution {
    /// Uniformly random over the key population (seeded).
    #[default]
    Uniform,
    /// Round-robin over the key population in index order.
    Sequential,
}

/// Parameters of one workload run against a target.
///
/// All fields have defaults tuned to the canonical campaign shape (ten
/// thousand keys, replication factor two, quorum consistency), so plan
/// files only spell out what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Operation class to measure.
    pub operation: Operation,
    /// Size of the key population. For reads, the driver first makes sure
    /// every key in the population exists on the target.
    pub entry_count: u64,
    /// Replication factor the target is expected to run with. Checked
    /// against the target, not enforced by the driver.
    pub replication_factor: u32,
    /// Consistency level the target should apply. Informational to the
    /// driver; the target's own configuration governs behavior.
    pub consistency: crate::Consistency,
    /// Total operations to issue.
    pub op_count: u64,
    /// Virtual-time budget; issuing stops once a slot would start at or
    /// beyond this limit.
    pub duration_limit_s: Option<f64>,
    /// Concurrent in-flight operations (pipeline width).
    pub in_flight: u32,
    pub key_distribution: KeyDistribution,
    /// Payload size carried by writes. The simulator's latency model does
    /// not react to it, but external targets may.
    pub value_size_bytes: u32,
    /// Base seed for key selection. `None` means: resolved by the caller's
    /// seed policy, falling back to [`DEFAULT_SEED`].
    pub seed: Option<u64>,
    /// Abort the run when more than this fraction of issued operations
    /// timed out; the cell is then marked failed instead of reporting a
    /// mean dominated by the timeout ceiling.
    pub abort_timeout_fraction: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            operation: Operation::Write,
            entry_count: 10_000,
            replication_factor: 2,
            consistency: crate::Consistency::Quorum,
            op_count: 10_000,
            duration_limit_s: None,
            in_flight: 1,
            key_distribution: KeyDistribution::Uniform,
            value_size_bytes: 256,
            seed: None,
            abort_timeout_fraction: 0.5,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.entry_count == 0 {
            return Err(WorkloadError::InvalidSpec("entry_count must be at least 1".into()));
        }
        if self.op_count == 0 {
            return Err(WorkloadError::InvalidSpec("op_count must be at least 1".into()));
        }
        if self.in_flight == 0 {
            return Err(WorkloadError::InvalidSpec("in_flight must be at least 1".into()));
        }
        if self.replication_factor == 0 {
            return Err(WorkloadError::InvalidSpec(
                "replication_factor must be at least 1".into(),
            ));
        }
        if let Some(limit) = self.duration_limit_s {
            if !limit.is_finite() || limit <= 0.0 {
                return Err(WorkloadError::InvalidSpec(
                    "duration_limit_s must be positive".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.abort_timeout_fraction) {
            return Err(WorkloadError::InvalidSpec(
                "abort_timeout_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Key-selection seed after fallback.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// Key bytes for a population index. Fixed-width so keys sort and hash
/// uniformly regardless of index magnitude.
pub fn key_for_index(index: u64) -> Vec<u8> {
    format!("key{index:08}").into_bytes()
}

/// One measured operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub latency_ms: f64,
    /// The operation hit the target's timeout ceiling; `latency_ms` is
    /// clamped to that ceiling.
    pub timed_out: bool,
    /// Issue position within the run (0-based).
    pub op_index: u64,
}

/// Why a run stopped issuing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    OpCountReached,
    DurationReached,
}

/// Aggregated statistics over one run's samples.
///
/// Timed-out operations count into `mean_latency_ms` at the clamped
/// ceiling value (hiding them would understate pain); the timeout-free
/// mean is reported alongside when any operation completed in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadStats {
    pub operation: Operation,
    pub mean_latency_ms: f64,
    /// Mean over operations that did not time out; absent when every
    /// sample timed out.
    pub mean_excl_timeouts_ms: Option<f64>,
    pub p50_ms: Option<f64>,
    pub p95_ms: Option<f64>,
    pub p99_ms: Option<f64>,
    /// Issued operations per second of virtual time; 0 when no elapsed
    /// time is known.
    pub ops_per_sec: f64,
    /// Row throughput. Equal to `ops_per_sec` for single-row operations;
    /// external tools may report it separately.
    pub rows_per_sec: Option<f64>,
    pub total_ops: u64,
    pub completed_ops: u64,
    pub timeout_count: u64,
    /// Absent when the stats came from a parsed summary rather than a
    /// driver run.
    pub stop_reason: Option<StopReason>,
}

/// Anything the driver can aim at: the bundled simulator, or an adapter
/// wrapping a real deployment.
pub trait KeyValueTarget {
    /// Target is reachable and willing to serve.
    fn ready(&self) -> bool;
    /// Number of nodes in the target's ring.
    fn ring_size(&self) -> usize;
    /// Whether a key already exists (drives read-population).
    fn contains_key(&self, key: &[u8]) -> bool;
    /// Execute one operation and report its latency. `op_index` in the
    /// returned sample is overwritten by the driver.
    fn execute(&mut self, operation: Operation, key: &[u8]) -> LatencySample;
}

/// Run one workload to completion against a target.
///
/// Read workloads first populate the key space (unmeasured writes for any
/// missing key) so that every measured read hits an existing key. The
/// returned stats are order-normalized and timed purely in virtual time.
pub fn run_workload(
    spec: &WorkloadSpec,
    target: &mut dyn KeyValueTarget,
) -> Result<WorkloadStats, WorkloadError> {
    spec.validate()?;
    if !target.ready() {
        return Err(WorkloadError::TargetUnreachable);
    }
    if (spec.replication_factor as usize) > target.ring_size() {
        return Err(WorkloadError::InvalidSpec(format!(
            "replication_factor {} exceeds target ring size {}",
            spec.replication_factor,
            target.ring_size()
        )));
    }

    if spec.operation == Operation::Read {
        for index in 0..spec.entry_count {
            let key = key_for_index(index);
            if !target.contains_key(&key) {
                target.execute(Operation::Write, &key);
            }
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(spec.effective_seed());
    // Virtual completion time of each pipeline slot; an operation is issued
    // on the slot that frees earliest.
    let mut slots = vec![0.0f64; spec.in_flight as usize];
    let duration_limit_ms = spec.duration_limit_s.map(|s| s * 1000.0);

    let mut samples: Vec<LatencySample> = Vec::new();
    let mut stop_reason = StopReason::OpCountReached;
    let mut virtual_end_ms = 0.0f64;

    for issued in 0..spec.op_count {
        let slot = slots
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, _)| i)
            .expect("in_flight >= 1");
        let start_ms = slots[slot];
        if let Some(limit) = duration_limit_ms {
            if start_ms >= limit {
                stop_reason = StopReason::DurationReached;
                break;
            }
        }

        let key_index = match spec.key_distribution {
            KeyDistribution::Uniform => rng.random_range(0..spec.entry_count),
            KeyDistribution::Sequential => issued % spec.entry_count,
        };
        let key = key_for_index(key_index);
        let mut sample = target.execute(spec.operation, &key);
        sample.op_index = issued;

        slots[slot] = start_ms + sample.latency_ms;
        virtual_end_ms = virtual_end_ms.max(slots[slot]);
        samples.push(sample);
    }

    let issued = samples.len() as u64;
    let timed_out = samples.iter().filter(|s| s.timed_out).count() as u64;
    if issued > 0 {
        let fraction = timed_out as f64 / issued as f64;
        if fraction > spec.abort_timeout_fraction {
            return Err(WorkloadError::TimeoutFractionExceeded {
                fraction,
                threshold: spec.abort_timeout_fraction,
            });
        }
    }
    if issued == timed_out {
        return Err(WorkloadError::ZeroCompleted { issued, timed_out });
    }

    let mut stats = aggregate_samples(&samples, spec.operation, Some(virtual_end_ms))?;
    stats.stop_reason = Some(stop_reason);
    Ok(stats)
}

/// Nearest-rank percentile over a sorted slice: the value at rank
/// `ceil(p/100 · n)` (1-based).
fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len() as f64;
    let rank = (p / 100.0 * n).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Aggregate raw samples into [`WorkloadStats`].
///
/// The input order does not matter: samples are sorted internally before
/// any floating-point accumulation, so permutations of the same multiset
/// produce bit-identical stats. `virtual_elapsed_ms` feeds the throughput
/// figures; pass `None` when no meaningful elapsed time exists.
pub fn aggregate_samples(
    samples: &[LatencySample],
    operation: Operation,
    virtual_elapsed_ms: Option<f64>,
) -> Result<WorkloadStats, WorkloadError> {
    if samples.is_empty() {
        return Err(WorkloadError::EmptySamples);
    }

    let mut all: Vec<f64> = samples.iter().map(|s| s.latency_ms).collect();
    all.sort_by(f64::total_cmp);
    let mean_latency_ms = all.iter().sum::<f64>() / all.len() as f64;

    let mut completed: Vec<f64> = samples
        .iter()
        .filter(|s| !s.timed_out)
        .map(|s| s.latency_ms)
        .collect();
    completed.sort_by(f64::total_cmp);
    let mean_excl_timeouts_ms = if completed.is_empty() {
        None
    } else {
        Some(completed.iter().sum::<f64>() / completed.len() as f64)
    };

    let total_ops = samples.len() as u64;
    let timeout_count = samples.iter().filter(|s| s.timed_out).count() as u64;

    let (ops_per_sec, rows_per_sec) = match virtual_elapsed_ms {
        Some(elapsed) if elapsed > 0.0 => {
            let rate = total_ops as f64 * 1000.0 / elapsed;
            (rate, Some(rate))
        }
        Some(_) => (0.0, Some(0.0)),
        None => (0.0, None),
    };

    Ok(WorkloadStats {
        operation,
        mean_latency_ms,
        mean_excl_timeouts_ms,
        p50_ms: Some(percentile(&all, 50.0)),
        p95_ms: Some(percentile(&all, 95.0)),
        p99_ms: Some(percentile(&all, 99.0)),
        ops_per_sec,
        rows_per_sec,
        total_ops,
        completed_ops: total_ops - timeout_count,
        timeout_count,
        stop_reason: None,
    })
}

// --- stress-tool summary format ---------------------------------------------
//
// External stress tools print a run summary as one `<key> : <value> <unit>`
// line per statistic:
//
//     op rate : 8559 op/s
//     row rate : 8559 row/s
//     latency mean : 93.5 ms
//     latency median : 89.2 ms
//     latency 95th percentile : 141.0 ms
//     latency 99th percentile : 197.3 ms
//     total ops : 250000
//     errors : 12
//
// `op rate`, `latency mean`, and `total ops` are mandatory; everything else
// is optional and unrecognized lines are skipped (tools print plenty of
// chatter around the summary block).

const KEY_OP_RATE: &str = "op rate";
const KEY_ROW_RATE: &str = "row rate";
const KEY_LATENCY_MEAN: &str = "latency mean";
const KEY_LATENCY_MEDIAN: &str = "latency median";
const KEY_LATENCY_P95: &str = "latency 95th percentile";
const KEY_LATENCY_P99: &str = "latency 99th percentile";
const KEY_TOTAL_OPS: &str = "total ops";
const KEY_ERRORS: &str = "errors";

fn parse_float_field(
    line_no: usize,
    key: &str,
    rest: &str,
    expected_unit: &'static str,
) -> Result<f64, WorkloadError> {
    let mut parts = rest.split_whitespace();
    let raw = parts.next().ok_or_else(|| WorkloadError::MalformedSummaryLine {
        line: line_no,
        text: rest.to_owned(),
    })?;
    let value: f64 = raw.parse().map_err(|_| WorkloadError::MalformedSummaryLine {
        line: line_no,
        text: raw.to_owned(),
    })?;
    if !value.is_finite() || value < 0.0 {
        return Err(WorkloadError::MalformedSummaryLine {
            line: line_no,
            text: raw.to_owned(),
        });
    }
    let unit = parts.next().unwrap_or("");
    if unit != expected_unit || parts.next().is_some() {
        return Err(WorkloadError::SummaryUnitMismatch {
            line: line_no,
            key: key.to_owned(),
            expected: expected_unit,
            found: unit.to_owned(),
        });
    }
    Ok(value)
}

fn parse_count_field(line_no: usize, rest: &str) -> Result<u64, WorkloadError> {
    let mut parts = rest.split_whitespace();
    let raw = parts.next().ok_or_else(|| WorkloadError::MalformedSummaryLine {
        line: line_no,
        text: rest.to_owned(),
    })?;
    if parts.next().is_some() {
        return Err(WorkloadError::MalformedSummaryLine {
            line: line_no,
            text: rest.to_owned(),
        });
    }
    raw.parse().map_err(|_| WorkloadError::MalformedSummaryLine {
        line: line_no,
        text: raw.to_owned(),
    })
}

/// Parse a stress-tool summary into [`WorkloadStats`].
///
/// The operation is supplied by the caller because the summary itself does
/// not name one (tools run one operation per invocation). A repeated key
/// takes its last occurrence.
pub fn parse_stress_summary(
    text: &str,
    operation: Operation,
) -> Result<WorkloadStats, WorkloadError> {
    let mut op_rate: Option<f64> = None;
    let mut row_rate: Option<f64> = None;
    let mut mean: Option<f64> = None;
    let mut median: Option<f64> = None;
    let mut p95: Option<f64> = None;
    let mut p99: Option<f64> = None;
    let mut total: Option<u64> = None;
    let mut errors: u64 = 0;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let Some((raw_key, rest)) = line.split_once(':') else {
            continue; // not a summary line
        };
        let key = raw_key.trim();
        let rest = rest.trim();
        match key {
            KEY_OP_RATE => op_rate = Some(parse_float_field(line_no, key, rest, "op/s")?),
            KEY_ROW_RATE => row_rate = Some(parse_float_field(line_no, key, rest, "row/s")?),
            KEY_LATENCY_MEAN => mean = Some(parse_float_field(line_no, key, rest, "ms")?),
            KEY_LATENCY_MEDIAN => median = Some(parse_float_field(line_no, key, rest, "ms")?),
            KEY_LATENCY_P95 => p95 = Some(parse_float_field(line_no, key, rest, "ms")?),
            KEY_LATENCY_P99 => p99 = Some(parse_float_field(line_no, key, rest, "ms")?),
            KEY_TOTAL_OPS => total = Some(parse_count_field(line_no, rest)?),
            KEY_ERRORS => errors = parse_count_field(line_no, rest)?,
            _ => {} // unknown key: skip
        }
    }

    let ops_per_sec = op_rate.ok_or(WorkloadError::MissingSummaryField(KEY_OP_RATE))?;
    let mean_latency_ms = mean.ok_or(WorkloadError::MissingSummaryField(KEY_LATENCY_MEAN))?;
    let total_ops = total.ok_or(WorkloadError::MissingSummaryField(KEY_TOTAL_OPS))?;
    if errors > total_ops {
        return Err(WorkloadError::InconsistentSummaryCounts {
            errors,
            total: total_ops,
        });
    }

    Ok(WorkloadStats {
        operation,
        mean_latency_ms,
        mean_excl_timeouts_ms: None,
        p50_ms: median,
        p95_ms: p95,
        p99_ms: p99,
        ops_per_sec,
        rows_per_sec: row_rate,
        total_ops,
        completed_ops: total_ops - errors,
        timeout_count: errors,
        stop_reason: None,
    })
}

/// Render stats in the stress-tool summary format.
///
/// Parsing the result reproduces every field the format can carry (the
/// operation, the timeout-free mean, and the stop reason are not part of
/// the format).
pub fn render_stress_summary(stats: &WorkloadStats) -> String {
    let mut out = String::new();
    out.push_str(&format!("{KEY_OP_RATE} : {} op/s\n", stats.ops_per_sec));
    if let Some(rows) = stats.rows_per_sec {
        out.push_str(&format!("{KEY_ROW_RATE} : {rows} row/s\n"));
    }
    out.push_str(&format!("{KEY_LATENCY_MEAN} : {} ms\n", stats.mean_latency_ms));
    if let Some(p50) = stats.p50_ms {
        out.push_str(&format!("{KEY_LATENCY_MEDIAN} : {p50} ms\n"));
    }
    if let Some(p95) = stats.p95_ms {
        out.push_str(&format!("{KEY_LATENCY_P95} : {p95} ms\n"));
    }
    if let Some(p99) = stats.p99_ms {
        out.push_str(&format!("{KEY_LATENCY_P99} : {p99} ms\n"));
    }
    out.push_str(&format!("{KEY_TOTAL_OPS} : {}\n", stats.total_ops));
    out.push_str(&format!("{KEY_ERRORS} : {}\n", stats.timeout_count));
    out
}
