//! End-to-end flows across the bundled campaign files: replaying the two
//! recorded testbeds, driving a simulated campaign from a plan file, and
//! the determinism contract for whole result artifacts.

use std::path::{Path, PathBuf};

use slicebench_core::orchestrator::{
    deployment_overhead, run_experiment, ExperimentPlan, ExperimentResult,
};
use slicebench_core::Operation;

/// Repository root, two levels above this crate's manifest.
fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crate lives two levels below the repo root")
        .to_path_buf()
}

fn run_bundled(plan_name: &str) -> ExperimentResult {
    let path = repo_root().join("plans").join(plan_name);
    let (plan, base_dir) = ExperimentPlan::load(&path).expect("bundled plan loads");
    run_experiment(&plan, &base_dir).expect("bundled plan runs")
}

#[test]
fn replayed_testbed_campaigns_reproduce_the_recorded_analysis() {
    let fibre = run_bundled("replay_fibre_ng.json");
    let fabric = run_bundled("replay_fabric.json");

    // The replayed responses are the recorded cell means, verbatim.
    assert_eq!(
        fibre.response_vector(Operation::Write).unwrap().values(),
        &[156.9, 93.5, 186.6, 93.0]
    );
    assert_eq!(
        fibre.response_vector(Operation::Read).unwrap().values(),
        &[100.3, 99.1, 101.3, 98.2]
    );
    assert_eq!(
        fabric.response_vector(Operation::Write).unwrap().values(),
        &[719.2, 913.3, 404.4, 265.4]
    );
    assert_eq!(
        fabric.response_vector(Operation::Read).unwrap().values(),
        &[616.5, 830.8, 385.8, 275.8]
    );

    // Influence splits match the recorded analysis of those campaigns.
    let cases = [
        (&fibre, Operation::Write, [93.32, 3.22, 3.45]),
        (&fibre, Operation::Read, [83.63, 0.04, 16.33]),
        (&fabric, Operation::Write, [0.29, 89.05, 10.66]),
        (&fabric, Operation::Read, [1.48, 84.18, 14.34]),
    ];
    for (result, op, expected) in cases {
        let analysis = result.analysis(op).unwrap();
        for (name, want) in ["A", "B", "AB"].iter().zip(expected) {
            let got = analysis.influence.get(name).unwrap();
            assert!(
                (got - want).abs() <= 0.02,
                "{} {op}: influence of {name} is {got}, recorded {want}",
                result.label
            );
        }
    }

    // Deployment provisioning times ride along with the replay.
    let overhead = deployment_overhead(
        fibre.deployment_time_s.unwrap(),
        fabric.deployment_time_s.unwrap(),
    )
    .unwrap();
    assert!((overhead - 66.36).abs() < 0.005, "overhead {overhead}");
}

#[test]
fn simulated_campaign_shows_cpu_starvation_and_monotone_cells() {
    let result = run_bundled("sim_cpu_only.json");

    for op in [Operation::Write, Operation::Read] {
        let analysis = result.analysis(op).unwrap();
        let cpu = analysis.influence.get("A").unwrap();
        assert!(cpu > 99.0, "{op}: CPU influence only {cpu}%");

        // Adding vCPUs can only help when CPU is the sole bottleneck:
        // rows 1→2 and 3→4 each raise the CPU level with RAM held fixed.
        let y = result.response_vector(op).unwrap().values().to_vec();
        assert!(y[1] < y[0], "{op}: 4vCPU not faster at 2GB ({} vs {})", y[1], y[0]);
        assert!(y[3] < y[2], "{op}: 4vCPU not faster at 8GB ({} vs {})", y[3], y[2]);
    }
}

#[test]
fn rerunning_a_plan_yields_a_byte_identical_artifact() {
    let a = run_bundled("sim_timeout.json");
    let b = run_bundled("sim_timeout.json");
    assert_eq!(a.to_json_string(), b.to_json_string());
}

#[test]
fn stored_artifacts_round_trip_through_json() {
    let result = run_bundled("sim_ram_only.json");
    let text = result.to_json_string();
    let reloaded = ExperimentResult::from_json(&text, "round-trip").unwrap();
    assert_eq!(reloaded.to_json_string(), text);

    // The reloaded artifact analyzes identically, not just structurally.
    let before = result.analysis(Operation::Write).unwrap();
    let after = reloaded.analysis(Operation::Write).unwrap();
    assert_eq!(before.effects.to_map(), after.effects.to_map());
}
