//! Structural properties of the factorial analysis, checked over random
//! inputs rather than hand-picked examples. Each property is a statement
//! that must hold for *every* response vector; a failure here means the
//! estimator itself is broken, not that a tolerance was picked badly.

use proptest::prelude::*;

use slicebench_core::doe::{
    analyze, build_design, default_factors, estimate_effects, influence_percentages,
    variation_breakdown, ResponseSource, ResponseVector,
};
use slicebench_core::sim::quorum_latency;
use slicebench_core::workload::{aggregate_samples, LatencySample};
use slicebench_core::{Consistency, Operation};

fn response(values: Vec<f64>) -> ResponseVector {
    ResponseVector::new(values, "ms", Operation::Write, ResponseSource::External)
        .expect("finite values")
}

/// A response vector whose length matches a design with `k` factors,
/// with latencies spread over four orders of magnitude.
fn factorial_responses() -> impl Strategy<Value = Vec<f64>> {
    (1usize..=4).prop_flat_map(|k| proptest::collection::vec(0.1f64..1e6, 1 << k))
}

/// Absolute comparison scaled to the magnitudes involved: dot products
/// and quarter-sums lose at most a few ulps per row, so 1e-9 of the
/// working scale is far above float noise yet far below any real defect.
fn assert_close(actual: f64, expected: f64, scale: f64) {
    let tolerance = 1e-9 * (scale.abs() + 1.0);
    assert!(
        (actual - expected).abs() <= tolerance,
        "expected {expected}, got {actual} (tolerance {tolerance})"
    );
}

#[test]
fn effect_columns_are_mutually_orthogonal() {
    // ±1 sums of at most 32 terms are exact in f64, so this holds with
    // equality, not a tolerance.
    for k in 1..=5 {
        let design = build_design(default_factors(k)).unwrap();
        let masks = design.effect_masks().to_vec();
        for (i, &a) in masks.iter().enumerate() {
            let col_a = design.column(a);
            // Balance against the all-ones column.
            assert_eq!(col_a.iter().sum::<f64>(), 0.0, "k={k} effect {a:#b}");
            for &b in &masks[i + 1..] {
                let col_b = design.column(b);
                let dot: f64 = col_a.iter().zip(&col_b).map(|(x, y)| x * y).sum();
                assert_eq!(dot, 0.0, "k={k} effects {a:#b} x {b:#b}");
            }
        }
    }
}

proptest! {
    /// The saturated model has as many coefficients as cells, so it must
    /// pass through every measured point exactly (up to rounding).
    #[test]
    fn saturated_model_reproduces_every_design_point(values in factorial_responses()) {
        let k = values.len().trailing_zeros() as usize;
        let design = build_design(default_factors(k)).unwrap();
        let estimates = estimate_effects(&design, &response(values.clone())).unwrap();
        for (row, &observed) in values.iter().enumerate() {
            let point: Vec<f64> = design
                .main_codes(row)
                .iter()
                .map(|&c| f64::from(c))
                .collect();
            let predicted = estimates.predict(&point).unwrap();
            assert_close(predicted, observed, observed);
        }
    }

    /// Shifting every response by a constant moves the grand mean by that
    /// constant and nothing else: effects measure differences, not levels.
    #[test]
    fn adding_a_constant_moves_only_the_mean(
        values in factorial_responses(),
        shift in -1e4f64..1e4,
    ) {
        let k = values.len().trailing_zeros() as usize;
        let design = build_design(default_factors(k)).unwrap();
        let base = estimate_effects(&design, &response(values.clone())).unwrap();
        let shifted_values: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let shifted = estimate_effects(&design, &response(shifted_values)).unwrap();

        let scale = shift.abs() + values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert_close(shifted.q0(), base.q0() + shift, scale);
        for (name, value) in base.iter() {
            assert_close(shifted.get(name).unwrap(), value, scale);
        }
    }

    /// Rescaling responses (a unit change) rescales every coefficient and
    /// leaves the influence split untouched.
    #[test]
    fn rescaling_responses_preserves_the_influence_split(
        values in factorial_responses(),
        factor in 0.1f64..1e3,
    ) {
        let k = values.len().trailing_zeros() as usize;
        let design = build_design(default_factors(k)).unwrap();
        let base = analyze(&design, &response(values.clone())).unwrap();
        prop_assume!(!base.influence.degenerate);

        let scaled_values: Vec<f64> = values.iter().map(|v| v * factor).collect();
        let scaled = analyze(&design, &response(scaled_values)).unwrap();

        let magnitude = factor * values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert_close(scaled.effects.q0(), base.effects.q0() * factor, magnitude);
        for (name, value) in base.effects.iter() {
            assert_close(scaled.effects.get(name).unwrap(), value * factor, magnitude);
        }
        for (name, pct) in base.influence.iter() {
            let rescaled = scaled.influence.get(name).unwrap();
            // Percentages live on a fixed 0..100 scale; compare absolutely.
            assert!(
                (rescaled - pct).abs() <= 1e-6,
                "influence of {name} moved from {pct} to {rescaled}"
            );
        }
    }

    /// Influence percentages are shares of one whole.
    #[test]
    fn influence_percentages_sum_to_one_hundred(values in factorial_responses()) {
        let k = values.len().trailing_zeros() as usize;
        let design = build_design(default_factors(k)).unwrap();
        let estimates = estimate_effects(&design, &response(values)).unwrap();
        let breakdown = variation_breakdown(&estimates, 1, None).unwrap();
        let report = influence_percentages(&breakdown);
        prop_assume!(!report.degenerate);
        let total: f64 = report.iter().map(|(_, pct)| pct).sum();
        assert_close(total, 100.0, 100.0);
    }

    /// At the coded center every contrast term vanishes, leaving q0.
    #[test]
    fn prediction_at_the_center_is_the_grand_mean(values in factorial_responses()) {
        let k = values.len().trailing_zeros() as usize;
        let design = build_design(default_factors(k)).unwrap();
        let estimates = estimate_effects(&design, &response(values)).unwrap();
        let center = vec![0.0; k];
        // Every product of codes contains a zero, so this is exact.
        assert_eq!(estimates.predict(&center).unwrap(), estimates.q0());
    }

    /// The acknowledgement rule is an order statistic: the One/Quorum/All
    /// latencies are the minimum, the majority rank, and the maximum.
    #[test]
    fn quorum_latency_is_an_order_statistic(
        latencies in proptest::collection::vec(0.01f64..1e4, 1..=9),
    ) {
        let mut sorted = latencies.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();

        assert_eq!(quorum_latency(&latencies, Consistency::One).unwrap(), sorted[0]);
        assert_eq!(quorum_latency(&latencies, Consistency::All).unwrap(), sorted[n - 1]);
        // Majority = n/2 + 1 replies, i.e. index n/2 once sorted.
        assert_eq!(quorum_latency(&latencies, Consistency::Quorum).unwrap(), sorted[n / 2]);
    }

    /// Aggregation treats samples as a multiset: any arrival order yields
    /// bit-identical statistics, which is what makes whole-run artifacts
    /// reproducible across scheduling differences.
    #[test]
    fn aggregation_ignores_sample_order(
        samples in proptest::collection::vec(
            (0.01f64..1e4, proptest::bool::ANY).prop_map(|(latency_ms, timed_out)| {
                LatencySample { latency_ms, timed_out, op_index: 0 }
            }),
            1..200,
        ).prop_shuffle().prop_flat_map(|original| {
            let shuffled = Just(original.clone()).prop_shuffle();
            (Just(original), shuffled)
        }),
    ) {
        let (original, shuffled) = samples;
        let a = aggregate_samples(&original, Operation::Read, Some(1234.5)).unwrap();
        let b = aggregate_samples(&shuffled, Operation::Read, Some(1234.5)).unwrap();
        let a_json = serde_json::to_string(&a).unwrap();
        let b_json = serde_json::to_string(&b).unwrap();
        assert_eq!(a_json, b_json);
    }
}
