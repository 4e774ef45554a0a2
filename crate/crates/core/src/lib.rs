//! Core engine for slicebench.
//!
//! The crate is organized around the lifecycle of a resource-allocation
//! benchmarking campaign against a replicated key-value slice:
//!
//! * [`doe`] — full factorial (2^k) experiment designs, effect estimation,
//!   and allocation-of-variation analysis.
//! * [`workload`] — deterministic open-loop workload generation against any
//!   [`workload::KeyValueTarget`], plus latency aggregation and the
//!   stress-tool summary text format.
//! * [`sim`] — a deterministic token-ring simulator that stands in for a
//!   real replicated store, with a parametric latency model.
//! * [`orchestrator`] — experiment plans, cell scheduling, adapters
//!   (simulated / replayed / external), and persisted campaign results.
//! * [`report`] — presentation tables (cell means, influence percentages,
//!   deployment times) in CSV, Markdown, and JSON.
//!
//! Everything is seed-driven: two runs of the same plan with the same seeds
//! produce byte-identical artifacts.

use serde::{Deserialize, Serialize};

pub mod doe;
pub mod orchestrator;
pub mod report;
pub mod sim;
pub mod workload;

/// Seed used whenever neither a plan, a flag, nor the environment supplies
/// one. Fixed so that "no configuration at all" is still reproducible.
pub const DEFAULT_SEED: u64 = 0x5EED_BA5E;

/// The two operation classes a campaign measures. Reads and writes take
/// different paths through a replicated store and are always analyzed
/// separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Write,
    Read,
}

impl Operation {
    /// Stable lowercase name, used in CSV columns and JSON keys.
    pub fn name(self) -> &'static str {
        match self {
            Operation::Write => "write",
            Operation::Read => "read",
        }
    }
}

impl std::fmt::Display for Operation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Operation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "write" => Ok(Operation::Write),
            "read" => Ok(Operation::Read),
            other => Err(format!("unknown operation `{other}` (expected `write` or `read`)")),
        }
    }
}

/// Client-visible consistency level: how many replica acknowledgements an
/// operation waits for before completing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Consistency {
    /// First replica answer wins.
    One,
    /// Majority of the replica set: floor(rf / 2) + 1 acknowledgements.
    Quorum,
    /// Every replica must acknowledge.
    All,
}

impl Consistency {
    /// Number of acknowledgements required out of `rf` replicas.
    pub fn required_acks(self, rf: usize) -> usize {
        match self {
            Consistency::One => 1,
            Consistency::Quorum => rf / 2 + 1,
            Consistency::All => rf,
        }
    }
}

impl std::fmt::Display for Consistency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Consistency::One => "one",
            Consistency::Quorum => "quorum",
            Consistency::All => "all",
        })
    }
}

/// Derive an independent child seed from a base seed and a stream index.
///
/// This is a splitmix64 step over the base xored with a Weyl increment of
/// the stream index, so consecutive stream indices give uncorrelated seeds
/// while staying pure and cheap. Used to give each repetition of a campaign
/// its own randomness without touching the per-cell base seed (cells share
/// the base seed on purpose: common random numbers across cells cancel out
/// of effect differences).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
