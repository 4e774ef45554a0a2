//! Full factorial (2^k) experiment designs and effect analysis.
//!
//! A design assigns every factor two coded levels, −1 (low) and +1 (high),
//! and enumerates all 2^k level combinations in standard order: the first
//! factor alternates fastest, the last slowest. Effects — main effects and
//! every interaction — are estimated from one response value per design row
//! by signed quarter-sums (for k = 2) generalized to dot products against
//! the coded columns. The sum of squares attributed to each effect then
//! yields the percentage of total variation each factor (or interaction)
//! explains, which is the headline output of a campaign.
//!
//! Design columns are never materialized: codes are computed on demand from
//! the row index and an effect bitmask, so designs stay cheap even at the
//! upper end of the supported range (k = 16, 65 536 rows).

use std::collections::BTreeMap;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Operation;

/// Upper bound on the number of factors in a single design.
///
/// 2^16 rows is already far beyond anything a physical campaign would run;
/// the bound mostly guards against nonsense input overflowing row indices.
pub const MAX_FACTORS: usize = 16;

/// Errors from design construction and analysis.
#[derive(Debug, Error)]
pub enum DoeError {
    #[error("factor list is empty")]
    EmptyFactors,

    #[error("{0} factors requested, at most {MAX_FACTORS} supported")]
    TooManyFactors(usize),

    #[error("factor name must not be empty")]
    EmptyFactorName,

    #[error("duplicate factor name `{0}`")]
    DuplicateFactorName(String),

    #[error("factor `{0}`: low and high labels are both `{1}`")]
    IdenticalLevelLabels(String, String),

    #[error("factor names are ambiguous: `{0}` denotes more than one effect")]
    AmbiguousEffectName(String),

    #[error("response has {got} values but the design has {expected} rows")]
    ResponseLengthMismatch { expected: usize, got: usize },

    #[error("response value at row {row} is not finite: {value}")]
    NonFiniteResponse { row: usize, value: f64 },

    #[error("replicate count must be at least 1")]
    ZeroReplication,

    #[error("{got} cell residuals supplied but the design has {expected} cells")]
    ResidualLengthMismatch { expected: usize, got: usize },

    #[error("cell residual at index {index} is invalid: {value} (must be finite and nonnegative)")]
    InvalidResidual { index: usize, value: f64 },

    #[error("coded point has {got} coordinates but the design has {expected} factors")]
    PointDimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} is {value}, outside the coded range [-1, +1]")]
    CodeOutOfRange { index: usize, value: f64 },
}

/// One two-level factor: a name plus human-readable labels for its levels.
///
/// The name identifies the factor in effect names (`"A"`, `"B"`, joined as
/// `"AB"` for the interaction); the labels only show up in rendered tables
/// (`"1vCPU"` vs `"4vCPU"`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub low_label: String,
    pub high_label: String,
}

impl Factor {
    pub fn new(
        name: impl Into<String>,
        low_label: impl Into<String>,
        high_label: impl Into<String>,
    ) -> Result<Self, DoeError> {
        let factor = Factor {
            name: name.into(),
            low_label: low_label.into(),
            high_label: high_label.into(),
        };
        factor.validate()?;
        Ok(factor)
    }

    fn validate(&self) -> Result<(), DoeError> {
        if self.name.is_empty() {
            return Err(DoeError::EmptyFactorName);
        }
        if self.low_label == self.high_label {
            return Err(DoeError::IdenticalLevelLabels(
                self.name.clone(),
                self.low_label.clone(),
            ));
        }
        Ok(())
    }
}

/// Placeholder factors `A`, `B`, `C`, … with generic `low`/`high` labels.
///
/// Used when a response vector arrives without design metadata (for example
/// a bare CSV of recorded latencies) and only the row count is known.
pub fn default_factors(k: usize) -> Vec<Factor> {
    const NAMES: [&str; MAX_FACTORS] = [
        "A", "B", "C", "D", "E", "F", "G", "H", "J", "K", "L", "M", "N", "P", "Q", "R",
    ];
    NAMES
        .iter()
        .take(k)
        .map(|name| Factor {
            name: (*name).to_owned(),
            low_label: "low".to_owned(),
            high_label: "high".to_owned(),
        })
        .collect()
}

/// A 2^k full factorial design in standard order.
///
/// Row `r` (0-based) sets factor `j` to +1 when bit `j` of `r` is set and to
/// −1 otherwise, so row 0 is all-low and the first factor alternates fastest.
/// An *effect* is any nonempty subset of factors, identified by a bitmask
/// over factor indices; its coded column is the elementwise product of the
/// member factors' columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    factors: Vec<Factor>,
    /// All 2^k − 1 effect masks in canonical order: main effects first, then
    /// two-factor interactions, and so on; ties broken by factor position.
    effect_masks: Vec<u32>,
}

/// Build a design from a factor list, validating names along the way.
pub fn build_design(factors: Vec<Factor>) -> Result<DesignMatrix, DoeError> {
    if factors.is_empty() {
        return Err(DoeError::EmptyFactors);
    }
    if factors.len() > MAX_FACTORS {
        return Err(DoeError::TooManyFactors(factors.len()));
    }
    let mut seen = HashSet::new();
    for factor in &factors {
        factor.validate()?;
        if !seen.insert(factor.name.as_str()) {
            return Err(DoeError::DuplicateFactorName(factor.name.clone()));
        }
    }

    let k = factors.len();
    let mut effect_masks: Vec<u32> = (1..(1u32 << k)).collect();
    effect_masks.sort_by_key(|mask| (mask.count_ones(), *mask));

    let design = DesignMatrix {
        factors,
        effect_masks,
    };

    // Effect names are factor names joined in factor order. With multi-char
    // factor names that can collide ("A", "B", "AB" would make the mask
    // {A, B} and the main effect AB both read "AB"); refuse such designs
    // up front instead of producing ambiguous reports.
    let mut names = HashSet::new();
    for &mask in &design.effect_masks {
        let name = design.effect_name(mask);
        if !names.insert(name.clone()) {
            return Err(DoeError::AmbiguousEffectName(name));
        }
    }

    Ok(design)
}

impl DesignMatrix {
    /// Number of factors.
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// Number of design rows, 2^k.
    pub fn rows(&self) -> usize {
        1 << self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Effect bitmasks in canonical order (mains, then pairs, …).
    pub fn effect_masks(&self) -> &[u32] {
        &self.effect_masks
    }

    /// Human-readable effect name: member factor names concatenated in
    /// factor order (`"A"`, `"B"`, `"AB"`, `"ABC"`, …).
    pub fn effect_name(&self, mask: u32) -> String {
        let mut name = String::new();
        for (j, factor) in self.factors.iter().enumerate() {
            if mask & (1 << j) != 0 {
                name.push_str(&factor.name);
            }
        }
        name
    }

    /// All effect names in canonical order.
    pub fn effect_names(&self) -> Vec<String> {
        self.effect_masks
            .iter()
            .map(|&mask| self.effect_name(mask))
            .collect()
    }

    /// Coded value (±1) of the effect `mask` at design row `row`.
    ///
    /// For a main effect this is the factor's level; for an interaction it
    /// is the product of the member levels, which equals −1 raised to the
    /// number of member factors sitting at their low level in this row.
    pub fn code(&self, row: usize, mask: u32) -> f64 {
        debug_assert!(row < self.rows());
        let lows = mask & !(row as u32);
        if lows.count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Main-effect codes for one row, in factor order.
    pub fn main_codes(&self, row: usize) -> Vec<i8> {
        (0..self.k())
            .map(|j| if row & (1 << j) != 0 { 1 } else { -1 })
            .collect()
    }

    /// Materialize one coded column. Mostly useful in tests; the analysis
    /// paths below work row-wise without building columns.
    pub fn column(&self, mask: u32) -> Vec<f64> {
        (0..self.rows()).map(|row| self.code(row, mask)).collect()
    }
}

/// Where a response vector came from. Carried through analysis into
/// reports so that simulated and recorded numbers are never conflated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseSource {
    Simulated,
    Replayed,
    External,
}

/// One response value per design row, in standard order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    values: Vec<f64>,
    pub unit: String,
    pub label: Operation,
    pub source: ResponseSource,
}

impl ResponseVector {
    /// Wrap raw per-row values. Every value must be finite; whether values
    /// must also be positive is the caller's business (latencies are, but
    /// derived responses like differences need not be).
    pub fn new(
        values: Vec<f64>,
        unit: impl Into<String>,
        label: Operation,
        source: ResponseSource,
    ) -> Result<Self, DoeError> {
        for (row, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(DoeError::NonFiniteResponse { row, value });
            }
        }
        Ok(ResponseVector {
            values,
            unit: unit.into(),
            label,
            source,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Estimated model coefficients for a saturated 2^k model:
/// `y = q0 + Σ_e q_e · X_e` over all effects `e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimates {
    q0: f64,
    unit: String,
    /// `(name, mask, coefficient)` per effect, in canonical order.
    effects: Vec<(String, u32, f64)>,
    k: usize,
}

impl EffectEstimates {
    /// Grand mean of the responses.
    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(effect name, coefficient)` pairs in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.effects.iter().map(|(name, _, q)| (name.as_str(), *q))
    }

    /// Coefficient for a named effect, if the design has it.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.effects
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, _, q)| *q)
    }

    /// Name → coefficient map (alphabetical iteration order).
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.effects
            .iter()
            .map(|(name, _, q)| (name.clone(), *q))
            .collect()
    }

    /// Evaluate the fitted model at a coded point.
    ///
    /// Coordinates are one per factor and must lie in [−1, +1]; interaction
    /// regressors are products of the member coordinates, so evaluating at a
    /// design row reproduces that row's response exactly (saturated model).
    pub fn predict(&self, coded_point: &[f64]) -> Result<f64, DoeError> {
        if coded_point.len() != self.k {
            return Err(DoeError::PointDimensionMismatch {
                expected: self.k,
                got: coded_point.len(),
            });
        }
        for (index, &value) in coded_point.iter().enumerate() {
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(DoeError::CodeOutOfRange { index, value });
            }
        }
        let mut y = self.q0;
        for (_, mask, q) in &self.effects {
            let mut regressor = 1.0;
            for (j, &x) in coded_point.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    regressor *= x;
                }
            }
            y += q * regressor;
        }
        Ok(y)
    }
}

/// Estimate the saturated model's coefficients from one response per row.
///
/// `q0` is the response mean; each effect coefficient is the dot product of
/// the effect's coded column with the responses, divided by 2^k. For k = 2
/// this reduces to the familiar signed quarter-sums, e.g.
/// `q_A = (−y1 + y2 − y3 + y4) / 4`.
pub fn estimate_effects(
    design: &DesignMatrix,
    responses: &ResponseVector,
) -> Result<EffectEstimates, DoeError> {
    let rows = design.rows();
    if responses.len() != rows {
        return Err(DoeError::ResponseLengthMismatch {
            expected: rows,
            got: responses.len(),
        });
    }

    let values = responses.values();
    let mut q0 = 0.0;
    for &y in values {
        q0 += y;
    }
    q0 /= rows as f64;

    let mut effects = Vec::with_capacity(design.effect_masks().len());
    for &mask in design.effect_masks() {
        let mut dot = 0.0;
        for (row, &y) in values.iter().enumerate() {
            dot += design.code(row, mask) * y;
        }
        effects.push((design.effect_name(mask), mask, dot / rows as f64));
    }

    Ok(EffectEstimates {
        q0,
        unit: responses.unit.clone(),
        effects,
        k: design.k(),
    })
}

/// Sums of squares attributed to each effect, plus replication error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationBreakdown {
    /// `(effect name, sum of squares)` in canonical order.
    ss_terms: Vec<(String, f64)>,
    pub ss_error: f64,
    pub ss_total: f64,
}

impl VariationBreakdown {
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ss_terms.iter().map(|(name, ss)| (name.as_str(), *ss))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.ss_terms
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, ss)| *ss)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.ss_terms.iter().cloned().collect()
    }
}

/// Attribute variation to effects: `SS_e = r · 2^k · q_e²`.
///
/// `replication` is the number of replicate measurements per cell that went
/// into the (averaged) responses. With replication, per-cell residual sums
/// of squares can be supplied (one per cell) and are pooled into `ss_error`;
/// in the common unreplicated case pass `None` and the saturated model
/// leaves no residual: `SS_T = Σ_e SS_e`.
pub fn variation_breakdown(
    effects: &EffectEstimates,
    replication: u32,
    cell_residuals: Option<&[f64]>,
) -> Result<VariationBreakdown, DoeError> {
    if replication == 0 {
        return Err(DoeError::ZeroReplication);
    }
    let cells = 1usize << effects.k;
    let scale = replication as f64 * cells as f64;

    let mut ss_terms = Vec::with_capacity(effects.effects.len());
    let mut ss_total = 0.0;
    for (name, _, q) in &effects.effects {
        let ss = scale * q * q;
        ss_total += ss;
        ss_terms.push((name.clone(), ss));
    }

    let mut ss_error = 0.0;
    if let Some(residuals) = cell_residuals {
        if residuals.len() != cells {
            return Err(DoeError::ResidualLengthMismatch {
                expected: cells,
                got: residuals.len(),
            });
        }
        for (index, &value) in residuals.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DoeError::InvalidResidual { index, value });
            }
            ss_error += value;
        }
    }
    ss_total += ss_error;

    Ok(VariationBreakdown {
        ss_terms,
        ss_error,
        ss_total,
    })
}

/// Percentage of total variation explained by each effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    /// `(effect name, percentage)` in canonical order. Empty when the
    /// breakdown is degenerate.
    percentages: Vec<(String, f64)>,
    /// Share left to replication error, when any error was present.
    pub residual_pct: Option<f64>,
    /// True when total variation is zero (all responses identical): no
    /// meaningful percentages exist.
    pub degenerate: bool,
}

impl InfluenceReport {
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.percentages
            .iter()
            .map(|(name, pct)| (name.as_str(), *pct))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.percentages
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, pct)| *pct)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.percentages.iter().cloned().collect()
    }
}

/// Convert a variation breakdown into influence percentages,
/// `100 · SS_e / SS_T`.
pub fn influence_percentages(breakdown: &VariationBreakdown) -> InfluenceReport {
    if breakdown.ss_total == 0.0 {
        return InfluenceReport {
            percentages: Vec::new(),
            residual_pct: None,
            degenerate: true,
        };
    }
    let percentages = breakdown
        .ss_terms
        .iter()
        .map(|(name, ss)| (name.clone(), 100.0 * ss / breakdown.ss_total))
        .collect();
    let residual_pct = if breakdown.ss_error > 0.0 {
        Some(100.0 * breakdown.ss_error / breakdown.ss_total)
    } else {
        None
    };
    InfluenceReport {
        percentages,
        residual_pct,
        degenerate: false,
    }
}

/// The full analysis chain for one response vector: coefficients, sums of
/// squares, and influence percentages, for the unreplicated saturated case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub effects: EffectEstimates,
    pub breakdown: VariationBreakdown,
    pub influence: InfluenceReport,
}

/// Run estimation → variation → influence in one step (replication 1,
/// no residuals). This is the path every latency campaign takes.
pub fn analyze(design: &DesignMatrix, responses: &ResponseVector) -> Result<Analysis, DoeError> {
    let effects = estimate_effects(design, responses)?;
    let breakdown = variation_breakdown(&effects, 1, None)?;
    let influence = influence_percentages(&breakdown);
    Ok(Analysis {
        effects,
        breakdown,
        influence,
    })
}
