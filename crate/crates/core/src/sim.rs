//! Deterministic token-ring simulator for a replicated key-value slice.
//!
//! The simulator models the pieces of a replicated store that matter to a
//! resource-allocation study and nothing else: token-based key placement,
//! replica fan-out with a consistency level, a per-replica service-time
//! model driven by the node's CPU/RAM allocation, and a timeout ceiling.
//! There is no network, no threads, no wall clock — every source of
//! variation flows from one seed, so identical configurations replay
//! identical latency sequences.
//!
//! Placement mirrors how token-ring stores assign ownership: each node
//! holds many virtual tokens on a 64-bit hash ring, a key hashes to a
//! point, and the walk clockwise from that point collects the replica set
//! (first `rf` *distinct* nodes; consecutive tokens of one node never
//! yield duplicate replicas).

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::{KeyValueTarget, LatencySample};
use crate::{derive_seed, Consistency, Operation, DEFAULT_SEED};

/// Errors from ring construction and use.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("ring has no nodes")]
    EmptyRing,

    #[error("replication factor {rf} exceeds ring size {nodes}")]
    ReplicationExceedsNodes { rf: u32, nodes: usize },

    #[error("node `{node}`: {reason}")]
    InvalidProfile { node: String, reason: String },

    #[error("invalid ring config: {0}")]
    InvalidConfig(String),

    #[error("cannot take a quorum over an empty latency list")]
    EmptyLatencies,
}

/// Static description of one simulated node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeProfile {
    pub node_id: String,
    /// Virtual CPUs allocated to the node.
    pub vcpus: u32,
    /// RAM allocated to the node, in GiB.
    pub ram_gb: f64,
    /// Virtual tokens this node owns on the hash ring.
    #[serde(default = "default_token_count")]
    pub token_count: u32,
    /// One-way latency between the client and this node when it
    /// coordinates a request.
    #[serde(default)]
    pub rtt_to_client_ms: f64,
    /// Added cost for this node to answer a coordinator.
    #[serde(default)]
    pub inter_node_rtt_ms: f64,
}

fn default_token_count() -> u32 {
    1024
}

impl NodeProfile {
    fn validate(&self) -> Result<(), SimError> {
        let fail = |reason: &str| {
            Err(SimError::InvalidProfile {
                node: self.node_id.clone(),
                reason: reason.to_owned(),
            })
        };
        if self.node_id.is_empty() {
            return Err(SimError::InvalidConfig("node_id must not be empty".into()));
        }
        if self.vcpus == 0 {
            return fail("vcpus must be at least 1");
        }
        if !self.ram_gb.is_finite() || self.ram_gb <= 0.0 {
            return fail("ram_gb must be positive");
        }
        if self.token_count == 0 {
            return fail("token_count must be at least 1");
        }
        if !self.rtt_to_client_ms.is_finite() || self.rtt_to_client_ms < 0.0 {
            return fail("rtt_to_client_ms must be nonnegative");
        }
        if !self.inter_node_rtt_ms.is_finite() || self.inter_node_rtt_ms < 0.0 {
            return fail("inter_node_rtt_ms must be nonnegative");
        }
        Ok(())
    }
}

/// Parameters of the per-replica service-time model:
///
/// ```text
/// service = base_op_ms · (1 + cpu_alpha / vcpus) · jitter + stall
/// ```
///
/// * `jitter` is lognormal with median 1 (`exp(jitter_sigma · z)` for a
///   standard normal draw `z`), so `jitter_sigma = 0` means exactly 1.
/// * `stall` adds `stall_ms` with probability `clamp(ram_beta / ram_gb,
///   0, 1)` — the memory-pressure knob: more RAM, fewer stalls.
///
/// All parameters must be nonnegative. Zeroing a parameter removes its
/// term, which is how single-cause scenarios are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyModelParams {
    pub base_write_ms: f64,
    pub base_read_ms: f64,
    pub cpu_alpha: f64,
    pub ram_beta: f64,
    pub stall_ms: f64,
    pub jitter_sigma: f64,
}

impl LatencyModelParams {
    fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [
            ("base_write_ms", self.base_write_ms),
            ("base_read_ms", self.base_read_ms),
            ("cpu_alpha", self.cpu_alpha),
            ("ram_beta", self.ram_beta),
            ("stall_ms", self.stall_ms),
            ("jitter_sigma", self.jitter_sigma),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "latency model: {name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Full configuration of a simulated ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub nodes: Vec<NodeProfile>,
    #[serde(default = "default_replication_factor")]
    pub replication_factor: u32,
    #[serde(default = "default_consistency")]
    pub consistency: Consistency,
    /// Client-visible latency ceiling; operations hitting it are reported
    /// as timed out at exactly this value.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: f64,
    #[serde(default)]
    pub latency_model: LatencyModelParams,
    /// Base seed for token placement and the service-time draws. `None`
    /// means: resolved by the caller's seed policy, falling back to
    /// [`DEFAULT_SEED`].
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_replication_factor() -> u32 {
    2
}

fn default_consistency() -> Consistency {
    Consistency::Quorum
}

fn default_timeout_ms() -> f64 {
    1000.0
}

impl RingConfig {
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// FNV-1a 64-bit hash; the ring's position function.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET_BASIS;
    for &byte in bytes {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// Service time of one replica for one operation, as a pure function of
/// the node profile, the model, and two unit draws: `jitter_draw` is a
/// standard-normal variate, `stall_draw` a uniform variate in [0, 1).
pub fn replica_service_time(
    profile: &NodeProfile,
    operation: Operation,
    model: &LatencyModelParams,
    jitter_draw: f64,
    stall_draw: f64,
) -> f64 {
    let base = match operation {
        Operation::Write => model.base_write_ms,
        Operation::Read => model.base_read_ms,
    };
    let cpu_factor = 1.0 + model.cpu_alpha / f64::from(profile.vcpus);
    let jitter = (model.jitter_sigma * jitter_draw).exp();
    let stall = if stall_draw < stall_probability(model, profile) {
        model.stall_ms
    } else {
        0.0
    };
    base * cpu_factor * jitter + stall
}

/// Probability that a replica on `profile` stalls under `model`.
pub fn stall_probability(model: &LatencyModelParams, profile: &NodeProfile) -> f64 {
    (model.ram_beta / profile.ram_gb).clamp(0.0, 1.0)
}

/// Client-visible completion time given per-replica answer times: the
/// k-th smallest, where k is the consistency level's acknowledgement
/// count over the full replica set.
pub fn quorum_latency(replica_latencies: &[f64], consistency: Consistency) -> Result<f64, SimError> {
    if replica_latencies.is_empty() {
        return Err(SimError::EmptyLatencies);
    }
    let mut sorted = replica_latencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let acks = consistency.required_acks(sorted.len());
    Ok(sorted[acks - 1])
}

/// A built ring: placement structure plus the mutable run state (draw
/// stream, key store, per-node accounting). One ring models one timeline;
/// it is not meant to be shared across concurrent drivers.
#[derive(Debug)]
pub struct SimRing {
    config: RingConfig,
    /// `(token, node index)` sorted by token; the ring itself.
    tokens: Vec<(u64, usize)>,
    rng: ChaCha12Rng,
    store: HashSet<Vec<u8>>,
    busy_ms: Vec<f64>,
    ops_executed: u64,
}

/// Validate a configuration and assign tokens.
///
/// Tokens are drawn per node, in node order, from a generator seeded with
/// the ring seed; collisions redraw. The operation-time draw stream uses a
/// seed derived from the same base so that token layout and service times
/// never share randomness.
pub fn build_ring(config: RingConfig) -> Result<SimRing, SimError> {
    if config.nodes.is_empty() {
        return Err(SimError::EmptyRing);
    }
    if config.replication_factor == 0 {
        return Err(SimError::InvalidConfig(
            "replication_factor must be at least 1".into(),
        ));
    }
    if config.replication_factor as usize > config.nodes.len() {
        return Err(SimError::ReplicationExceedsNodes {
            rf: config.replication_factor,
            nodes: config.nodes.len(),
        });
    }
    if !config.timeout_ms.is_finite() || config.timeout_ms <= 0.0 {
        return Err(SimError::InvalidConfig("timeout_ms must be positive".into()));
    }
    config.latency_model.validate()?;
    let mut ids = HashSet::new();
    for node in &config.nodes {
        node.validate()?;
        if !ids.insert(node.node_id.as_str()) {
            return Err(SimError::InvalidConfig(format!(
                "duplicate node_id `{}`",
                node.node_id
            )));
        }
    }

    let seed = config.effective_seed();
    let mut token_rng = ChaCha12Rng::seed_from_u64(seed);
    let mut used: HashSet<u64> = HashSet::new();
    let mut tokens: Vec<(u64, usize)> = Vec::new();
    for (index, node) in config.nodes.iter().enumerate() {
        for _ in 0..node.token_count {
            loop {
                let token: u64 = token_rng.random();
                if used.insert(token) {
                    tokens.push((token, index));
                    break;
                }
            }
        }
    }
    tokens.sort_unstable_by_key(|&(token, _)| token);

    let node_count = config.nodes.len();
    Ok(SimRing {
        config,
        tokens,
        rng: ChaCha12Rng::seed_from_u64(derive_seed(seed, 1)),
        store: HashSet::new(),
        busy_ms: vec![0.0; node_count],
        ops_executed: 0,
    })
}

impl SimRing {
    pub fn config(&self) -> &RingConfig {
        &self.config
    }

    pub fn total_tokens(&self) -> usize {
        self.tokens.len()
    }

    /// Token count per node index; each node owns exactly its configured
    /// `token_count`.
    pub fn tokens_per_node(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.config.nodes.len()];
        for &(_, node) in &self.tokens {
            counts[node] += 1;
        }
        counts
    }

    /// Total virtual service time spent on one node so far. Placement
    /// balance shows up here without any extra instrumentation.
    pub fn busy_ms(&self, node_index: usize) -> f64 {
        self.busy_ms[node_index]
    }

    pub fn ops_executed(&self) -> u64 {
        self.ops_executed
    }

    /// Replica set for a key: walk clockwise from the key's hash point and
    /// collect the first `rf` distinct nodes. The first entry coordinates
    /// the request.
    pub fn place_replicas(&self, key: &[u8]) -> Vec<usize> {
        let rf = self.config.replication_factor as usize;
        let hash = fnv1a_64(key);
        let start = self.tokens.partition_point(|&(token, _)| token < hash);
        let mut replicas = Vec::with_capacity(rf);
        for offset in 0..self.tokens.len() {
            let (_, node) = self.tokens[(start + offset) % self.tokens.len()];
            if !replicas.contains(&node) {
                replicas.push(node);
                if replicas.len() == rf {
                    break;
                }
            }
        }
        replicas
    }

    /// Ring layout as CSV (`node_id,token`), one row per token in ring
    /// order.
    pub fn dump_tokens_csv(&self) -> String {
        let mut out = String::from("node_id,token\n");
        for &(token, node) in &self.tokens {
            out.push_str(&self.config.nodes[node].node_id);
            out.push(',');
            out.push_str(&token.to_string());
            out.push('\n');
        }
        out
    }

    fn execute_op(&mut self, operation: Operation, key: &[u8]) -> LatencySample {
        let replicas = self.place_replicas(key);
        let mut answer_times = Vec::with_capacity(replicas.len());
        for &node_index in &replicas {
            // Two draws per replica, consumed in placement order, so the
            // draw stream is a pure function of the operation sequence.
            let jitter_draw: f64 = self.rng.sample(StandardNormal);
            let stall_draw: f64 = self.rng.random();
            let node = &self.config.nodes[node_index];
            let service = replica_service_time(
                node,
                operation,
                &self.config.latency_model,
                jitter_draw,
                stall_draw,
            );
            self.busy_ms[node_index] += service;
            answer_times.push(service + node.inter_node_rtt_ms);
        }

        let waited = quorum_latency(&answer_times, self.config.consistency)
            .expect("replica set is never empty");
        let coordinator = &self.config.nodes[replicas[0]];
        let mut latency_ms = coordinator.rtt_to_client_ms + waited;
        let timed_out = latency_ms > self.config.timeout_ms;
        if timed_out {
            latency_ms = self.config.timeout_ms;
        }

        if operation == Operation::Write {
            self.store.insert(key.to_vec());
        }

        let sample = LatencySample {
            latency_ms,
            timed_out,
            op_index: self.ops_executed,
        };
        self.ops_executed += 1;
        sample
    }
}

impl KeyValueTarget for SimRing {
    fn ready(&self) -> bool {
        true
    }

    fn ring_size(&self) -> usize {
        self.config.nodes.len()
    }

    fn contains_key(&self, key: &[u8]) -> bool {
        self.store.contains(key)
    }

    fn execute(&mut self, operation: Operation, key: &[u8]) -> LatencySample {
        self.execute_op(operation, key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn node(id: &str, vcpus: u32, ram_gb: f64) -> NodeProfile {
        NodeProfile {
            node_id: id.to_owned(),
            vcpus,
            ram_gb,
            token_count: 1024,
            rtt_to_client_ms: 0.0,
            inter_node_rtt_ms: 0.0,
        }
    }

    fn three_node_config() -> RingConfig {
        RingConfig {
            nodes: vec![
                node("cassandra-0", 2, 4.0),
                node("cassandra-1", 2, 4.0),
                node("cassandra-2", 2, 4.0),
            ],
            replication_factor: 2,
            consistency: Consistency::Quorum,
            timeout_ms: 1000.0,
            latency_model: LatencyModelParams {
                base_write_ms: 10.0,
                base_read_ms: 8.0,
                ..Default::default()
            },
            seed: Some(7),
        }
    }

    #[test]
    fn fnv1a_matches_published_vectors() {
        assert_eq!(fnv1a_64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a_64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a_64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn every_node_owns_its_token_count() {
        let ring = build_ring(three_node_config()).unwrap();
        assert_eq!(ring.total_tokens(), 3 * 1024);
        assert_eq!(ring.tokens_per_node(), vec![1024, 1024, 1024]);
        // Ring order is sorted and collision-free.
        let tokens: Vec<u64> = ring.tokens.iter().map(|&(t, _)| t).collect();
        let mut sorted = tokens.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(tokens, sorted);
    }

    #[test]
    fn same_seed_same_ring() {
        let a = build_ring(three_node_config()).unwrap();
        let b = build_ring(three_node_config()).unwrap();
        assert_eq!(a.tokens, b.tokens);
        let mut other = three_node_config();
        other.seed = Some(8);
        let c = build_ring(other).unwrap();
        assert_ne!(a.tokens, c.tokens);
    }

    #[test]
    fn rejects_bad_configs() {
        let empty = RingConfig {
            nodes: vec![],
            ..three_node_config()
        };
        assert!(matches!(build_ring(empty), Err(SimError::EmptyRing)));

        let mut rf4 = three_node_config();
        rf4.replication_factor = 4;
        assert!(matches!(
            build_ring(rf4),
            Err(SimError::ReplicationExceedsNodes { rf: 4, nodes: 3 })
        ));

        let mut no_ram = three_node_config();
        no_ram.nodes[1].ram_gb = 0.0;
        assert!(matches!(build_ring(no_ram), Err(SimError::InvalidProfile { .. })));

        let mut bad_model = three_node_config();
        bad_model.latency_model.cpu_alpha = -1.0;
        assert!(matches!(build_ring(bad_model), Err(SimError::InvalidConfig(_))));

        let mut dup = three_node_config();
        dup.nodes[2].node_id = "cassandra-0".into();
        assert!(matches!(build_ring(dup), Err(SimError::InvalidConfig(_))));

        let mut no_timeout = three_node_config();
        no_timeout.timeout_ms = 0.0;
        assert!(matches!(build_ring(no_timeout), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn placement_returns_distinct_nodes_from_hash_point() {
        let ring = build_ring(three_node_config()).unwrap();
        // Independent re-derivation of the walk for a handful of keys.
        for key in [&b"key00000000"[..], b"key00004242", b"zzz", b""] {
            let replicas = ring.place_replicas(key);
            assert_eq!(replicas.len(), 2);
            assert_ne!(replicas[0], replicas[1]);

            let hash = fnv1a_64(key);
            let naive_start = ring
                .tokens
                .iter()
                .position(|&(token, _)| token >= hash)
                .unwrap_or(0);
            let mut expected = Vec::new();
            for offset in 0..ring.tokens.len() {
                let (_, node) = ring.tokens[(naive_start + offset) % ring.tokens.len()];
                if !expected.contains(&node) {
                    expected.push(node);
                    if expected.len() == 2 {
                        break;
                    }
                }
            }
            assert_eq!(replicas, expected);
        }
    }

    #[test]
    fn placement_spreads_primaries_across_nodes() {
        let ring = build_ring(three_node_config()).unwrap();
        let mut primaries = vec![0usize; 3];
        for index in 0..10_000u64 {
            let key = crate::workload::key_for_index(index);
            primaries[ring.place_replicas(&key)[0]] += 1;
        }
        // With 1024 tokens per node the primary share lands close to a
        // third each; a 2:1 skew would mean broken placement.
        for &count in &primaries {
            assert!((2000..5000).contains(&count), "primaries skewed: {primaries:?}");
        }
    }

    #[test]
    fn single_node_ring_owns_everything() {
        let config = RingConfig {
            nodes: vec![node("solo", 1, 1.0)],
            replication_factor: 1,
            ..three_node_config()
        };
        let ring = build_ring(config).unwrap();
        for index in 0..100u64 {
            let key = crate::workload::key_for_index(index);
            assert_eq!(ring.place_replicas(&key), vec![0]);
        }
    }

    #[test]
    fn service_time_scales_with_cpu_allocation() {
        let model = LatencyModelParams {
            base_write_ms: 10.0,
            cpu_alpha: 3.0,
            ..Default::default()
        };
        // 1 vCPU: 10 · (1 + 3/1) = 40 ms; 4 vCPUs: 10 · (1 + 3/4) = 17.5 ms.
        let slow = replica_service_time(&node("n", 1, 4.0), Operation::Write, &model, 0.0, 0.9);
        let fast = replica_service_time(&node("n", 4, 4.0), Operation::Write, &model, 0.0, 0.9);
        assert_relative_eq!(slow, 40.0);
        assert_relative_eq!(fast, 17.5);
    }

    #[test]
    fn stall_probability_clamps_and_scales_with_ram() {
        let model = LatencyModelParams {
            ram_beta: 2.0,
            stall_ms: 50.0,
            base_read_ms: 1.0,
            ..Default::default()
        };
        // 2 GB: p = 1.0 (every draw stalls); 8 GB: p = 0.25.
        assert_relative_eq!(stall_probability(&model, &node("n", 1, 2.0)), 1.0);
        assert_relative_eq!(stall_probability(&model, &node("n", 1, 8.0)), 0.25);

        let stalled = replica_service_time(&node("n", 1, 2.0), Operation::Read, &model, 0.0, 0.99);
        assert_relative_eq!(stalled, 51.0);
        let clean = replica_service_time(&node("n", 1, 8.0), Operation::Read, &model, 0.0, 0.5);
        assert_relative_eq!(clean, 1.0);
    }

    #[test]
    fn zero_sigma_means_unit_jitter() {
        let model = LatencyModelParams {
            base_write_ms: 7.0,
            ..Default::default()
        };
        // Even an extreme normal draw leaves the latency untouched.
        let value = replica_service_time(&node("n", 1, 4.0), Operation::Write, &model, 12.3, 0.9);
        assert_relative_eq!(value, 7.0);
    }

    #[test]
    fn quorum_latency_is_an_order_statistic() {
        let latencies = [5.0, 3.0, 9.0];
        assert_relative_eq!(quorum_latency(&latencies, Consistency::One).unwrap(), 3.0);
        assert_relative_eq!(quorum_latency(&latencies, Consistency::Quorum).unwrap(), 5.0);
        assert_relative_eq!(quorum_latency(&latencies, Consistency::All).unwrap(), 9.0);
        // Two replicas: quorum needs both.
        assert_relative_eq!(
            quorum_latency(&[4.0, 2.0], Consistency::Quorum).unwrap(),
            4.0
        );
        assert!(matches!(
            quorum_latency(&[], Consistency::Quorum),
            Err(SimError::EmptyLatencies)
        ));
    }

    #[test]
    fn writes_land_in_the_store() {
        let mut ring = build_ring(three_node_config()).unwrap();
        let key = b"key00000001";
        assert!(!ring.contains_key(key));
        let sample = ring.execute(Operation::Write, key);
        assert!(ring.contains_key(key));
        assert!(!sample.timed_out);
        assert!(sample.latency_ms > 0.0);
        // Reads do not create keys.
        ring.execute(Operation::Read, b"key00000002");
        assert!(!ring.contains_key(b"key00000002"));
    }

    #[test]
    fn latencies_clamp_at_the_timeout_ceiling() {
        let mut config = three_node_config();
        config.latency_model.base_write_ms = 5000.0;
        let mut ring = build_ring(config).unwrap();
        let sample = ring.execute(Operation::Write, b"key00000001");
        assert!(sample.timed_out);
        assert_relative_eq!(sample.latency_ms, 1000.0);
    }

    #[test]
    fn identical_rings_replay_identical_latency_sequences() {
        let mut a = build_ring(three_node_config()).unwrap();
        let mut b = build_ring(three_node_config()).unwrap();
        for index in 0..200u64 {
            let key = crate::workload::key_for_index(index % 40);
            let op = if index % 3 == 0 {
                Operation::Read
            } else {
                Operation::Write
            };
            assert_eq!(a.execute(op, &key), b.execute(op, &key));
        }
        assert_eq!(a.ops_executed(), 200);
    }

    #[test]
    fn busy_time_accumulates_on_replicas() {
        let mut ring = build_ring(three_node_config()).unwrap();
        for index in 0..300u64 {
            ring.execute(Operation::Write, &crate::workload::key_for_index(index));
        }
        let total: f64 = (0..3).map(|i| ring.busy_ms(i)).sum();
        // Every op charges exactly rf = 2 replicas with 10 ms each (no
        // jitter, no stalls configured).
        assert_relative_eq!(total, 300.0 * 2.0 * 10.0, max_relative = 1e-9);
        for i in 0..3 {
            assert!(ring.busy_ms(i) > 0.0);
        }
    }

    #[test]
    fn token_dump_is_ordered_csv() {
        let mut config = three_node_config();
        for node in &mut config.nodes {
            node.token_count = 4;
        }
        let ring = build_ring(config).unwrap();
        let dump = ring.dump_tokens_csv();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "node_id,token");
        assert_eq!(lines.len(), 1 + 12);
        let tokens: Vec<u64> = lines[1..]
            .iter()
            .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        let mut sorted = tokens.clone();
        sorted.sort_unstable();
        assert_eq!(tokens, sorted);
        assert!(lines[1..].iter().all(|l| l.starts_with("cassandra-")));
    }
}
