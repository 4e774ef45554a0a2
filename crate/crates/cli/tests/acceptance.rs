//! Acceptance gate for the whole harness. Each test checks one shipping
//! criterion end to end at its stated tolerance and prints a PASS line
//! (visible under `cargo test -- --nocapture`); a failed criterion fails
//! its test. Random inputs come from a fixed-seed generator so every run
//! checks the same thousand vectors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use slicebench_core::doe::{
    analyze, build_design, default_factors, estimate_effects, ResponseSource, ResponseVector,
};
use slicebench_core::orchestrator::{
    deployment_overhead, replay_responses, run_experiment, AdapterSpec, ExperimentPlan,
};
use slicebench_core::report::round_half_up;
use slicebench_core::{derive_seed, Operation};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crate lives two levels below the repo root")
        .to_path_buf()
}

fn load_plan(name: &str) -> (ExperimentPlan, PathBuf) {
    ExperimentPlan::load(&repo_root().join("plans").join(name)).expect("bundled plan loads")
}

/// Deterministic uniform stream in [0, 1), independent of the simulator's
/// generators: each draw hashes (seed, index) and keeps the top 53 bits.
struct UniformStream {
    seed: u64,
    index: u64,
}

impl UniformStream {
    fn new(seed: u64) -> Self {
        UniformStream { seed, index: 0 }
    }

    fn next_unit(&mut self) -> f64 {
        self.index += 1;
        (derive_seed(self.seed, self.index) >> 11) as f64 / (1u64 << 53) as f64
    }

    /// A positive latency-like value spread over (0.1, ~1000.1).
    fn next_latency(&mut self) -> f64 {
        0.1 + self.next_unit() * 1000.0
    }

    fn latency_vector(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_latency()).collect()
    }
}

fn response(values: Vec<f64>) -> ResponseVector {
    ResponseVector::new(values, "ms", Operation::Write, ResponseSource::External)
        .expect("finite values")
}

fn assert_relative(actual: f64, expected: f64, tolerance: f64, what: &str) {
    let scale = expected.abs().max(1e-300);
    assert!(
        ((actual - expected) / scale).abs() <= tolerance,
        "{what}: got {actual}, expected {expected} (relative tolerance {tolerance})"
    );
}

/// Criterion 1: analyzing the bundled recorded campaigns reproduces all
/// twelve recorded influence percentages within ±0.02 points.
#[test]
fn criterion_1_recorded_campaign_influence_reproduction() {
    let expectations = [
        ("fibre_ng.csv", Operation::Write, [93.32, 3.22, 3.45]),
        ("fibre_ng.csv", Operation::Read, [83.63, 0.04, 16.33]),
        ("fabric.csv", Operation::Write, [0.29, 89.05, 10.66]),
        ("fabric.csv", Operation::Read, [1.48, 84.18, 14.34]),
    ];

    let design = build_design(default_factors(2)).unwrap();
    for (file, op, recorded) in expectations {
        let vectors = replay_responses(&repo_root().join("data").join(file)).unwrap();
        let analysis = analyze(&design, &vectors[&op]).unwrap();
        for (name, want) in ["A", "B", "AB"].iter().zip(recorded) {
            let got = analysis.influence.get(name).unwrap();
            assert!(
                (got - want).abs() <= 0.02,
                "{file} {op}: influence of {name} is {got:.4}%, recorded {want}%"
            );
        }
    }
    println!("acceptance criterion 1: PASS — all 12 influence percentages within ±0.02 points");
}

/// Criterion 2: effect coefficients match an independent quarter-sum
/// evaluation to 1e-12 relative error.
#[test]
fn criterion_2_effect_coefficients_match_quarter_sums() {
    let y = [156.9, 93.5, 186.6, 93.0];

    // Brute-force quarter sums straight off the 2x2 sign pattern, written
    // without reference to the estimator under test.
    let oracle_q0 = (y[0] + y[1] + y[2] + y[3]) / 4.0;
    let oracle_qa = (-y[0] + y[1] - y[2] + y[3]) / 4.0;
    let oracle_qb = (-y[0] - y[1] + y[2] + y[3]) / 4.0;
    let oracle_qab = (y[0] - y[1] - y[2] + y[3]) / 4.0;

    let design = build_design(default_factors(2)).unwrap();
    let estimates = estimate_effects(&design, &response(y.to_vec())).unwrap();

    assert_relative(estimates.q0(), oracle_q0, 1e-12, "q0 vs quarter sums");
    assert_relative(estimates.get("A").unwrap(), oracle_qa, 1e-12, "qA vs quarter sums");
    assert_relative(estimates.get("B").unwrap(), oracle_qb, 1e-12, "qB vs quarter sums");
    assert_relative(estimates.get("AB").unwrap(), oracle_qab, 1e-12, "qAB vs quarter sums");

    // And the quarter sums themselves land on the recorded coefficients.
    assert_relative(oracle_q0, 132.5, 1e-9, "q0 vs recorded value");
    assert_relative(oracle_qa, -39.25, 1e-9, "qA vs recorded value");
    assert_relative(oracle_qb, 7.3, 1e-9, "qB vs recorded value");
    assert_relative(oracle_qab, -7.55, 1e-9, "qAB vs recorded value");

    println!("acceptance criterion 2: PASS — estimator equals quarter-sum oracle to 1e-12");
}

/// Criterion 3: the recorded provisioning times display as a 66.36%
/// overhead under 2-decimal half-up rounding.
#[test]
fn criterion_3_deployment_overhead_display() {
    let overhead = deployment_overhead(73.2, 44.0).unwrap();
    let displayed = round_half_up(overhead, 2);
    assert_eq!(format!("{displayed:.2}"), "66.36", "raw overhead {overhead}");
    println!("acceptance criterion 3: PASS — deployment_overhead(73.2, 44.0) displays 66.36%");
}

/// Criterion 4: over 1000 random positive vectors on 2-factor and
/// 3-factor designs each, the saturated model reproduces every design
/// point within 1e-9 relative error.
#[test]
fn criterion_4_saturated_model_reconstruction() {
    let mut stream = UniformStream::new(0x5EED_BA5E);
    for k in [2usize, 3] {
        let design = build_design(default_factors(k)).unwrap();
        for _ in 0..1000 {
            let values = stream.latency_vector(1 << k);
            let estimates = estimate_effects(&design, &response(values.clone())).unwrap();
            for (row, &observed) in values.iter().enumerate() {
                let point: Vec<f64> = design
                    .main_codes(row)
                    .iter()
                    .map(|&c| f64::from(c))
                    .collect();
                let predicted = estimates.predict(&point).unwrap();
                assert_relative(predicted, observed, 1e-9, &format!("k={k} row {row}"));
            }
        }
    }
    println!("acceptance criterion 4: PASS — 2000 random vectors reconstructed at 1e-9");
}

/// Criterion 5: influence percentages of 1000 random non-degenerate
/// vectors sum to 100 within 1e-9, and shifting or rescaling responses
/// behaves as an analysis of differences must.
#[test]
fn criterion_5_normalization_and_invariances() {
    let mut stream = UniformStream::new(0xABCD_0001);
    for trial in 0..1000u32 {
        let k = if trial % 2 == 0 { 2 } else { 3 };
        let design = build_design(default_factors(k)).unwrap();
        let values = stream.latency_vector(1 << k);
        let base = analyze(&design, &response(values.clone())).unwrap();
        assert!(!base.influence.degenerate, "continuous draws cannot tie");

        let total: f64 = base.influence.iter().map(|(_, pct)| pct).sum();
        assert!(
            (total - 100.0).abs() <= 1e-9,
            "trial {trial}: percentages sum to {total}"
        );

        // Shift: only the grand mean moves.
        let shift = stream.next_latency();
        let shifted_values: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let shifted = estimate_effects(&design, &response(shifted_values)).unwrap();
        let scale = shift + 1000.0;
        assert!(
            (shifted.q0() - (base.effects.q0() + shift)).abs() <= 1e-9 * scale,
            "trial {trial}: shifted q0"
        );
        for (name, value) in base.effects.iter() {
            assert!(
                (shifted.get(name).unwrap() - value).abs() <= 1e-9 * scale,
                "trial {trial}: shift changed effect {name}"
            );
        }

        // Scale: coefficients rescale, the influence split stays put.
        let factor = 0.5 + stream.next_unit() * 99.5;
        let scaled_values: Vec<f64> = values.iter().map(|v| v * factor).collect();
        let scaled = analyze(&design, &response(scaled_values)).unwrap();
        assert!(
            (scaled.effects.q0() - base.effects.q0() * factor).abs()
                <= 1e-9 * factor * 1000.0,
            "trial {trial}: scaled q0"
        );
        for (name, pct) in base.influence.iter() {
            assert!(
                (scaled.influence.get(name).unwrap() - pct).abs() <= 1e-6,
                "trial {trial}: scaling moved influence of {name}"
            );
        }
    }
    println!("acceptance criterion 5: PASS — normalization and shift/scale invariance hold");
}

/// Criterion 6: the simulator recovers the effect structure it was
/// configured with — CPU-starved, RAM-starved, and timeout-pressure
/// regimes — inside the runtime budget at 10,000 ops per cell.
#[test]
fn criterion_6_simulator_effect_recovery() {
    // CPU sensitivity only: the CPU factor owns effectively all variation.
    let started = Instant::now();
    let (plan, base_dir) = load_plan("sim_cpu_only.json");
    let cpu_only = run_experiment(&plan, &base_dir).unwrap();
    let cpu_elapsed = started.elapsed();
    assert!(cpu_elapsed.as_secs_f64() < 10.0, "CPU campaign took {cpu_elapsed:?}");

    // RAM sensitivity only.
    let started = Instant::now();
    let (plan, base_dir) = load_plan("sim_ram_only.json");
    let ram_only = run_experiment(&plan, &base_dir).unwrap();
    let ram_elapsed = started.elapsed();
    assert!(ram_elapsed.as_secs_f64() < 10.0, "RAM campaign took {ram_elapsed:?}");

    // Stalls far beyond the operation timeout: the memory-squeeze regime.
    let started = Instant::now();
    let (plan, base_dir) = load_plan("sim_timeout.json");
    let squeezed = run_experiment(&plan, &base_dir).unwrap();
    let squeeze_elapsed = started.elapsed();
    assert!(squeeze_elapsed.as_secs_f64() < 10.0, "timeout campaign took {squeeze_elapsed:?}");

    for op in [Operation::Write, Operation::Read] {
        let cpu_pct = cpu_only.analysis(op).unwrap().influence.get("A").unwrap();
        assert!(cpu_pct > 99.0, "{op}: CPU influence only {cpu_pct:.2}% in CPU-only regime");

        let ram_pct = ram_only.analysis(op).unwrap().influence.get("B").unwrap();
        assert!(ram_pct > 99.0, "{op}: RAM influence only {ram_pct:.2}% in RAM-only regime");

        let influence = squeezed.analysis(op).unwrap().influence;
        let (cpu_pct, ram_pct) = (influence.get("A").unwrap(), influence.get("B").unwrap());
        assert!(
            ram_pct > cpu_pct,
            "{op}: RAM ({ram_pct:.2}%) should dominate CPU ({cpu_pct:.2}%) under timeouts"
        );
    }

    // Timeouts must actually have fired for the squeeze to mean anything.
    let timeouts: u64 = squeezed
        .cells
        .iter()
        .flat_map(|cell| [&cell.write, &cell.read])
        .flatten()
        .flat_map(|m| &m.stats)
        .map(|s| s.timeout_count)
        .sum();
    assert!(timeouts > 0, "timeout campaign recorded no timeouts");

    println!(
        "acceptance criterion 6: PASS — effect recovery in {:.2}s/{:.2}s/{:.2}s campaigns",
        cpu_elapsed.as_secs_f64(),
        ram_elapsed.as_secs_f64(),
        squeeze_elapsed.as_secs_f64()
    );
}

/// Criterion 7: identical plan + seed produces byte-identical persisted
/// artifacts, both through the library and through the shipped binary.
#[test]
fn criterion_7_byte_identical_reruns() {
    // Library level, across every bundled plan kind.
    for name in ["sim_timeout.json", "replay_fibre_ng.json"] {
        let (plan, base_dir) = load_plan(name);
        let first = run_experiment(&plan, &base_dir).unwrap().to_json_string();
        let second = run_experiment(&plan, &base_dir).unwrap().to_json_string();
        assert_eq!(first, second, "library rerun of {name} diverged");
    }

    // Binary level with an explicit seed override.
    let dir = tempfile::tempdir().unwrap();
    let plan_path = repo_root().join("plans/sim_timeout.json");
    let artifact = |out: &Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_slicebench"))
            .arg("run")
            .arg("--plan")
            .arg(&plan_path)
            .args(["--seed", "777", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let first = artifact(&dir.path().join("first.json"));
    let second = artifact(&dir.path().join("second.json"));
    assert_eq!(first, second, "binary rerun diverged");
    assert!(!first.is_empty());

    println!("acceptance criterion 7: PASS — reruns are byte-identical");
}

/// Criterion 8: absolute testbed latencies are consumed through the
/// replay path only — the bundled recorded campaigns use the replay
/// adapter, and nothing simulates those magnitudes.
#[test]
fn criterion_8_recorded_latencies_enter_via_replay_only() {
    for name in ["replay_fibre_ng.json", "replay_fabric.json"] {
        let (plan, _) = load_plan(name);
        assert!(
            matches!(plan.adapter, AdapterSpec::Replay { .. }),
            "{name} must use the replay adapter"
        );
    }
    println!("acceptance criterion 8: PASS — recorded campaigns are replay-only by construction");
}
