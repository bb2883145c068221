//! Workload generation and replay against the on-line solver.
//!
//! Operators attach to uniformly random switches and open connections to
//! uniformly random devices; interarrival and duration are exponentially
//! distributed. Each operator is materialized as an ephemeral device hanging
//! off its switch by a 1 Gbps link whose full capacity counts as standard
//! budget (no critical stream ever crosses it). The replay asserts the
//! budget-safety invariants after every event.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Vertex, VertexId, VertexKind};
use crate::offline_solver::OfflinePlan;
use crate::online_solver::{AdmitOutcome, OnlineError, OnlineState};
use crate::topogen::Instance;

/// Capacity of the ephemeral operator attachment links.
pub const OPERATOR_LINK_BPS: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad workload config: {0}")]
    BadConfig(String),
    #[error("instance has no switches")]
    NoSwitches,
    #[error("instance has no target devices")]
    NoTargets,
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("invariant violated after event {event}: {detail}")]
    InvariantViolated { event: usize, detail: String },
    #[error("no samples to report")]
    EmptyStats,
    #[error("unparseable stats: {0}")]
    BadStats(String),
    #[error(transparent)]
    Online(#[from] OnlineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Begin {
        connection: u64,
        operator: u32,
        target: VertexId,
    },
    End {
        connection: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Workload parameters. Interarrival and duration are per-operator
/// exponential processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub operators: u32,
    pub mean_interarrival_s: f64,
    pub mean_duration_s: f64,
    pub horizon_s: f64,
    pub seed: u64,
}

impl WorkloadConfig {
    /// The evaluation defaults: one operator per substation, 5-minute mean
    /// interarrival, 3x that as mean duration, 10-minute horizon.
    pub fn evaluation_defaults(operators: u32, seed: u64) -> WorkloadConfig {
        WorkloadConfig {
            operators,
            mean_interarrival_s: 300.0,
            mean_duration_s: 900.0,
            horizon_s: 600.0,
            seed,
        }
    }
}

/// A generated workload: operator attachment switches plus the ordered
/// event trace. Each begin has exactly one later end with the same
/// connection id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub operator_switches: Vec<VertexId>,
    pub events: Vec<Event>,
}

/// Generates the event trace. Deterministic per seed.
pub fn generate_workload(inst: &Instance, cfg: &WorkloadConfig) -> Result<Workload, SimError> {
    if !(cfg.mean_interarrival_s > 0.0) || !(cfg.mean_duration_s > 0.0) {
        return Err(SimError::BadConfig(
            "interarrival and duration means must be positive".into(),
        ));
    }
    if cfg.horizon_s < 0.0 {
        return Err(SimError::BadConfig("horizon must be non-negative".into()));
    }
    let mut switches: Vec<VertexId> = inst.topology.switches().collect();
    switches.sort();
    if switches.is_empty() {
        return Err(SimError::NoSwitches);
    }
    let ids = inst.topology.ids();
    let mut targets: Vec<VertexId> = inst
        .topology
        .devices()
        .filter(|&d| Some(d) != ids)
        .collect();
    targets.sort();
    if targets.is_empty() {
        return Err(SimError::NoTargets);
    }

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let operator_switches: Vec<VertexId> = (0..cfg.operators)
        .map(|_| switches[master.random_range(0..switches.len())])
        .collect();
    let op_seeds: Vec<u64> = (0..cfg.operators).map(|_| master.random()).collect();

    let interarrival = Exp::new(1.0 / cfg.mean_interarrival_s)
        .map_err(|e| SimError::BadConfig(e.to_string()))?;
    let duration_dist =
        Exp::new(1.0 / cfg.mean_duration_s).map_err(|e| SimError::BadConfig(e.to_string()))?;

    // (begin time, operator, target, duration), later sorted and numbered.
    let mut raw: Vec<(f64, u32, VertexId, f64)> = Vec::new();
    for (u, &seed) in op_seeds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0.0f64;
        loop {
            t += interarrival.sample(&mut rng);
            if t > cfg.horizon_s {
                break;
            }
            let duration = duration_dist.sample(&mut rng);
            let target = targets[rng.random_range(0..targets.len())];
            raw.push((t, u as u32, target, duration));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut events = Vec::with_capacity(raw.len() * 2);
    for (c, &(t, u, target, duration)) in raw.iter().enumerate() {
        events.push(Event {
            time: t,
            kind: EventKind::Begin {
                connection: c as u64,
                operator: u,
                target,
            },
        });
        events.push(Event {
            time: t + duration,
            kind: EventKind::End {
                connection: c as u64,
            },
        });
    }
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| event_order_key(a).cmp(&event_order_key(b)))
    });
    Ok(Workload {
        operator_switches,
        events,
    })
}

fn event_order_key(e: &Event) -> (u64, u8) {
    match e.kind {
        EventKind::Begin { connection, .. } => (connection, 1),
        EventKind::End { connection } => (connection, 0),
    }
}

/// Fate of one connection over the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionStat {
    pub connection: u64,
    pub begin: f64,
    pub end: f64,
    pub min_bps: u64,
    pub final_bps: u64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub rows: Vec<ConnectionStat>,
    pub admitted: u32,
    pub rejected: u32,
}

/// Extends the instance with one ephemeral device per operator, returning
/// the augmented instance and the operators' device ids. The new links'
/// full capacity is standard budget.
pub fn augment_with_operators(
    inst: &Instance,
    operator_switches: &[VertexId],
) -> (Instance, Vec<VertexId>) {
    let topo = &inst.topology;
    let mut vertices = topo.vertices().to_vec();
    let mut links = topo
        .physical_links()
        .expect("instance topologies are link-symmetric");
    let mut next_id = vertices.iter().map(|v| v.id.0 + 1).max().unwrap_or(0);
    let mut op_devices = Vec::with_capacity(operator_switches.len());
    for (u, &sw) in operator_switches.iter().enumerate() {
        let id = VertexId(next_id);
        next_id += 1;
        vertices.push(Vertex {
            id,
            kind: VertexKind::Device,
            label: Some(format!("op{u}")),
        });
        links.push((id, sw, OPERATOR_LINK_BPS));
        op_devices.push(id);
    }
    let topology = crate::model::Topology::from_links(vertices, &links, topo.ids());
    let mut beta = Vec::with_capacity(topology.edges().len());
    for e in topology.edges() {
        match inst.topology.edge_between(e.from, e.to) {
            Some(old) => beta.push(inst.beta()[old]),
            None => beta.push(e.capacity_bps),
        }
    }
    let mut out = Instance::from_parts(topology, inst.critical.clone());
    out.set_beta(beta);
    out.alpha = inst.alpha;
    out.seed = inst.seed;
    out.backbone = inst.backbone.clone();
    out.substations = inst.substations;
    (out, op_devices)
}

/// Replays a workload: begins admit streams from the operator's device
/// toward the target, ends remove them. Budget safety is checked after
/// every event; any violation aborts the run.
pub fn run(
    inst: &Instance,
    plan: Option<&OfflinePlan>,
    workload: &Workload,
    tau_seconds: f64,
) -> Result<(RunStats, OnlineState), SimError> {
    let (augmented, op_devices) = augment_with_operators(inst, &workload.operator_switches);
    let mut state = OnlineState::new(augmented, plan.cloned(), tau_seconds)?;

    let mut rows: BTreeMap<u64, ConnectionStat> = BTreeMap::new();
    let mut live: BTreeMap<u64, u64> = BTreeMap::new(); // connection -> stream id
    let mut by_stream: BTreeMap<u64, u64> = BTreeMap::new(); // stream id -> connection
    let mut admitted = 0u32;
    let mut rejected = 0u32;

    let update_mins =
        |assignment: &BTreeMap<u64, u64>,
         by_stream: &BTreeMap<u64, u64>,
         rows: &mut BTreeMap<u64, ConnectionStat>| {
            for (&sid, &bps) in assignment {
                if let Some(&conn) = by_stream.get(&sid) {
                    let row = rows.get_mut(&conn).expect("row exists for live stream");
                    row.min_bps = row.min_bps.min(bps);
                    row.final_bps = bps;
                }
            }
        };

    for (i, event) in workload.events.iter().enumerate() {
        match event.kind {
            EventKind::Begin {
                connection,
                operator,
                target,
            } => {
                if rows.contains_key(&connection) {
                    return Err(SimError::MalformedTrace(format!(
                        "connection {connection} begins twice"
                    )));
                }
                let src = *op_devices.get(operator as usize).ok_or_else(|| {
                    SimError::MalformedTrace(format!("unknown operator {operator}"))
                })?;
                let mut row = ConnectionStat {
                    connection,
                    begin: event.time,
                    end: f64::NAN,
                    min_bps: u64::MAX,
                    final_bps: 0,
                    rejected: false,
                };
                match state.admit_stream(src, target, event.time)? {
                    AdmitOutcome::Admitted(adm) => {
                        admitted += 1;
                        live.insert(connection, adm.stream.id);
                        by_stream.insert(adm.stream.id, connection);
                        rows.insert(connection, row);
                        update_mins(&adm.assignment, &by_stream, &mut rows);
                    }
                    AdmitOutcome::Rejected => {
                        rejected += 1;
                        row.rejected = true;
                        row.min_bps = 0;
                        rows.insert(connection, row);
                    }
                }
            }
            EventKind::End { connection } => {
                let row = rows.get_mut(&connection).ok_or_else(|| {
                    SimError::MalformedTrace(format!("end without begin for {connection}"))
                })?;
                row.end = event.time;
                if let Some(sid) = live.remove(&connection) {
                    row.final_bps = state
                        .stream(sid)
                        .map(|s| s.assigned_bps)
                        .unwrap_or(row.final_bps);
                    by_stream.remove(&sid);
                    let assignment = state.remove_stream(sid)?;
                    update_mins(&assignment, &by_stream, &mut rows);
                }
            }
        }
        let report = crate::verify::check_online_state(&state);
        if let Some(v) = report.first() {
            return Err(SimError::InvariantViolated {
                event: i,
                detail: v.to_string(),
            });
        }
    }

    Ok((
        RunStats {
            rows: rows.into_values().collect(),
            admitted,
            rejected,
        },
        state,
    ))
}

/// Log-scale density bucket: fraction of admitted streams whose lifetime
/// minimum allocation falls in [low, high).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBucket {
    pub low_bps: u64,
    pub high_bps: u64,
    pub fraction: f64,
}

/// Bucket bounds on the 1-2-5 logarithmic ladder: 1, 2, 5, 10, 20, 50, ...
fn bucket_bounds(bps: u64) -> (u64, u64) {
    if bps == 0 {
        return (0, 1);
    }
    let mut lo = 1u64;
    loop {
        let hi = match lo.to_string().as_bytes()[0] {
            b'1' => lo * 2,
            b'2' => lo / 2 * 5,
            _ => lo * 2, // 5 -> 10
        };
        if bps < hi {
            return (lo, hi);
        }
        lo = hi;
    }
}

/// Buckets the per-stream lifetime-minimum allocations on a logarithmic
/// (1-2-5) axis. Fractions sum to 1 within 1e-9.
pub fn density_report(stats: &RunStats) -> Result<Vec<DensityBucket>, SimError> {
    let mins: Vec<u64> = stats
        .rows
        .iter()
        .filter(|r| !r.rejected)
        .map(|r| r.min_bps)
        .collect();
    if mins.is_empty() {
        return Err(SimError::EmptyStats);
    }
    let total = mins.len() as f64;
    let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for m in mins {
        *counts.entry(bucket_bounds(m)).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|((low_bps, high_bps), n)| DensityBucket {
            low_bps,
            high_bps,
            fraction: n as f64 / total,
        })
        .collect())
}

/// Renders the trace as CSV (`time,kind,c,u,s,t`).
pub fn trace_csv(workload: &Workload) -> String {
    let mut out = String::from("time,kind,c,u,s,t\n");
    let mut operator_of: BTreeMap<u64, u32> = BTreeMap::new();
    for e in &workload.events {
        match e.kind {
            EventKind::Begin {
                connection,
                operator,
                target,
            } => {
                operator_of.insert(connection, operator);
                let s = workload.operator_switches[operator as usize];
                out.push_str(&format!(
                    "{:?},begin,{},{},{},{}\n",
                    e.time, connection, operator, s, target
                ));
            }
            EventKind::End { connection } => {
                let u = operator_of
                    .get(&connection)
                    .map(|u| u.to_string())
                    .unwrap_or_default();
                out.push_str(&format!("{:?},end,{},{},,\n", e.time, connection, u));
            }
        }
    }
    out
}

/// Renders run statistics as CSV
/// (`stream_id,begin,end,min_bw,final_bw,rejected`).
pub fn stats_csv(stats: &RunStats) -> String {
    let mut out = String::from("stream_id,begin,end,min_bw,final_bw,rejected\n");
    for r in &stats.rows {
        out.push_str(&format!(
            "{},{:?},{:?},{},{},{}\n",
            r.connection, r.begin, r.end, r.min_bps, r.final_bps, r.rejected
        ));
    }
    out
}

/// Parses the stats CSV produced by [`stats_csv`].
pub fn parse_stats_csv(text: &str) -> Result<RunStats, SimError> {
    let mut rows = Vec::new();
    let mut admitted = 0;
    let mut rejected = 0;
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "stream_id,begin,end,min_bw,final_bw,rejected" {
                return Err(SimError::BadStats("unexpected header".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(SimError::BadStats(format!("line {}: expected 6 fields", i + 1)));
        }
        let parse_err = |what: &str| SimError::BadStats(format!("line {}: bad {what}", i + 1));
        let row = ConnectionStat {
            connection: fields[0].parse().map_err(|_| parse_err("stream_id"))?,
            begin: fields[1].parse().map_err(|_| parse_err("begin"))?,
            end: fields[2].parse().map_err(|_| parse_err("end"))?,
            min_bps: fields[3].parse().map_err(|_| parse_err("min_bw"))?,
            final_bps: fields[4].parse().map_err(|_| parse_err("final_bw"))?,
            rejected: fields[5].parse().map_err(|_| parse_err("rejected"))?,
        };
        if row.rejected {
            rejected += 1;
        } else {
            admitted += 1;
        }
        rows.push(row);
    }
    Ok(RunStats {
        rows,
        admitted,
        rejected,
    })
}

/// Renders the density table as CSV
/// (`bucket_low_bps,bucket_high_bps,fraction`).
pub fn density_csv(buckets: &[DensityBucket]) -> String {
    let mut out = String::from("bucket_low_bps,bucket_high_bps,fraction\n");
    for b in buckets {
        out.push_str(&format!("{},{},{:?}\n", b.low_bps, b.high_bps, b.fraction));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Topology, VertexId};
    use crate::topogen::Instance;

    fn vx(id: u32, kind: VertexKind) -> Vertex {
        Vertex {
            id: VertexId(id),
            kind,
            label: None,
        }
    }

    /// a(0) - sw1(1) - sw2(2) - {t(3), IDS(4)}, everything standard budget.
    fn corridor() -> Instance {
        let topo = Topology::from_links(
            vec![
                vx(0, VertexKind::Device),
                vx(1, VertexKind::Switch),
                vx(2, VertexKind::Switch),
                vx(3, VertexKind::Device),
                vx(4, VertexKind::Device),
            ],
            &[
                (VertexId(0), VertexId(1), 10_000_000),
                (VertexId(1), VertexId(2), 10_000_000),
                (VertexId(2), VertexId(3), 10_000_000),
                (VertexId(2), VertexId(4), 10_000_000),
            ],
            Some(VertexId(4)),
        );
        let beta: Vec<u64> = topo.edges().iter().map(|e| e.capacity_bps).collect();
        let mut inst = Instance::from_parts(topo, vec![]);
        inst.set_beta(beta);
        inst
    }

    fn begin(time: f64, c: u64, u: u32, target: u32) -> Event {
        Event {
            time,
            kind: EventKind::Begin {
                connection: c,
                operator: u,
                target: VertexId(target),
            },
        }
    }

    fn end(time: f64, c: u64) -> Event {
        Event {
            time,
            kind: EventKind::End { connection: c },
        }
    }

    #[test]
    fn zero_horizon_produces_empty_trace() {
        let inst = corridor();
        let cfg = WorkloadConfig {
            operators: 5,
            mean_interarrival_s: 300.0,
            mean_duration_s: 900.0,
            horizon_s: 0.0,
            seed: 1,
        };
        let w = generate_workload(&inst, &cfg).unwrap();
        assert!(w.events.is_empty());
        assert_eq!(w.operator_switches.len(), 5);
    }

    #[test]
    fn same_seed_same_trace() {
        let inst = corridor();
        let cfg = WorkloadConfig::evaluation_defaults(4, 42);
        let a = generate_workload(&inst, &cfg).unwrap();
        let b = generate_workload(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(trace_csv(&a), trace_csv(&b));
        let other = generate_workload(
            &inst,
            &WorkloadConfig {
                seed: 43,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn begins_pair_with_later_ends_and_targets_skip_the_ids() {
        let inst = corridor();
        let cfg = WorkloadConfig {
            operators: 6,
            mean_interarrival_s: 5.0,
            mean_duration_s: 15.0,
            horizon_s: 200.0,
            seed: 9,
        };
        let w = generate_workload(&inst, &cfg).unwrap();
        let mut begun = BTreeMap::new();
        for e in &w.events {
            match e.kind {
                EventKind::Begin {
                    connection, target, ..
                } => {
                    assert_ne!(target, VertexId(4), "IDS must not be a target");
                    assert!(begun.insert(connection, e.time).is_none());
                }
                EventKind::End { connection } => {
                    let t0 = begun.get(&connection).expect("end after begin");
                    assert!(e.time >= *t0);
                }
            }
        }
        let ends = w
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::End { .. }))
            .count();
        assert_eq!(ends, begun.len());
    }

    #[test]
    fn empirical_interarrival_mean_matches_rate() {
        let inst = corridor();
        let cfg = WorkloadConfig {
            operators: 4,
            mean_interarrival_s: 10.0,
            mean_duration_s: 30.0,
            horizon_s: 25_000.0,
            seed: 3,
        };
        let w = generate_workload(&inst, &cfg).unwrap();
        let begins = w
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Begin { .. }))
            .count();
        assert!(begins > 5_000, "need a large sample, got {begins}");
        // Over the horizon each operator fires roughly horizon/mean times.
        let empirical = cfg.operators as f64 * cfg.horizon_s / begins as f64;
        let relative = (empirical - 10.0).abs() / 10.0;
        assert!(relative < 0.1, "empirical mean {empirical}");
    }

    #[test]
    fn empty_trace_runs_to_empty_stats() {
        let inst = corridor();
        let w = Workload {
            operator_switches: vec![VertexId(1)],
            events: vec![],
        };
        let (stats, state) = run(&inst, None, &w, 0.01).unwrap();
        assert_eq!(stats.rows.len(), 0);
        assert_eq!((stats.admitted, stats.rejected), (0, 0));
        assert_eq!(state.streams().count(), 0);
        assert!(matches!(density_report(&stats), Err(SimError::EmptyStats)));
    }

    #[test]
    fn single_begin_gets_the_widest_bottleneck() {
        let inst = corridor();
        let w = Workload {
            operator_switches: vec![VertexId(1)],
            events: vec![begin(1.0, 0, 0, 3)],
        };
        let (stats, state) = run(&inst, None, &w, 0.01).unwrap();
        assert_eq!(stats.admitted, 1);
        // Operator device -> sw1 -> sw2 -> t plus replica sw2 -> IDS: the
        // bottleneck is the 10 Mbps corridor.
        assert_eq!(stats.rows[0].min_bps, 10_000_000);
        assert_eq!(state.streams().count(), 1);
    }

    #[test]
    fn end_restores_the_previous_allocation() {
        let inst = corridor();
        let w = Workload {
            operator_switches: vec![VertexId(1)],
            events: vec![
                begin(1.0, 0, 0, 3),
                begin(2.0, 1, 0, 3),
                end(3.0, 1),
                end(4.0, 0),
            ],
        };
        let (stats, state) = run(&inst, None, &w, 0.01).unwrap();
        assert_eq!(stats.admitted, 2);
        assert_eq!(state.streams().count(), 0);
        let c0 = &stats.rows[0];
        // Shared down to 5 Mbps while both lived, back to 10 Mbps after.
        assert_eq!(c0.min_bps, 5_000_000);
        assert_eq!(c0.final_bps, 10_000_000);
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let inst = corridor();
        let w = Workload {
            operator_switches: vec![VertexId(1)],
            events: vec![end(1.0, 7)],
        };
        assert!(matches!(
            run(&inst, None, &w, 0.01),
            Err(SimError::MalformedTrace(_))
        ));
        let w = Workload {
            operator_switches: vec![VertexId(1)],
            events: vec![begin(1.0, 0, 0, 3), begin(2.0, 0, 0, 3)],
        };
        assert!(matches!(
            run(&inst, None, &w, 0.01),
            Err(SimError::MalformedTrace(_))
        ));
    }

    #[test]
    fn run_is_deterministic() {
        let inst = corridor();
        let cfg = WorkloadConfig {
            operators: 3,
            mean_interarrival_s: 20.0,
            mean_duration_s: 60.0,
            horizon_s: 300.0,
            seed: 11,
        };
        let w = generate_workload(&inst, &cfg).unwrap();
        let (a, _) = run(&inst, None, &w, 0.01).unwrap();
        let (b, _) = run(&inst, None, &w, 0.01).unwrap();
        assert_eq!(stats_csv(&a), stats_csv(&b));
    }

    #[test]
    fn density_buckets_sum_to_one() {
        let inst = corridor();
        let cfg = WorkloadConfig {
            operators: 3,
            mean_interarrival_s: 20.0,
            mean_duration_s: 60.0,
            horizon_s: 300.0,
            seed: 11,
        };
        let w = generate_workload(&inst, &cfg).unwrap();
        let (stats, _) = run(&inst, None, &w, 0.01).unwrap();
        if stats.admitted == 0 {
            return;
        }
        let buckets = density_report(&stats).unwrap();
        let total: f64 = buckets.iter().map(|b| b.fraction).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for b in &buckets {
            assert!(b.low_bps < b.high_bps);
        }
    }

    #[test]
    fn identical_allocations_land_in_one_bucket() {
        let stats = RunStats {
            rows: vec![
                ConnectionStat {
                    connection: 0,
                    begin: 0.0,
                    end: 1.0,
                    min_bps: 3_000_000,
                    final_bps: 3_000_000,
                    rejected: false,
                },
                ConnectionStat {
                    connection: 1,
                    begin: 0.0,
                    end: 1.0,
                    min_bps: 3_000_000,
                    final_bps: 3_000_000,
                    rejected: false,
                },
            ],
            admitted: 2,
            rejected: 0,
        };
        let buckets = density_report(&stats).unwrap();
        assert_eq!(buckets.len(), 1);
        assert_eq!(buckets[0].fraction, 1.0);
        assert!(buckets[0].low_bps <= 3_000_000 && 3_000_000 < buckets[0].high_bps);
    }

    #[test]
    fn bucket_ladder_is_1_2_5() {
        assert_eq!(bucket_bounds(0), (0, 1));
        assert_eq!(bucket_bounds(1), (1, 2));
        assert_eq!(bucket_bounds(2), (2, 5));
        assert_eq!(bucket_bounds(7), (5, 10));
        assert_eq!(bucket_bounds(10), (10, 20));
        assert_eq!(bucket_bounds(49_999_999), (20_000_000, 50_000_000));
    }

    #[test]
    fn stats_csv_round_trip() {
        let inst = corridor();
        let w = Workload {
            operator_switches: vec![VertexId(1)],
            events: vec![begin(1.0, 0, 0, 3), end(2.5, 0)],
        };
        let (stats, _) = run(&inst, None, &w, 0.01).unwrap();
        let text = stats_csv(&stats);
        let back = parse_stats_csv(&text).unwrap();
        assert_eq!(stats, back);
        assert!(parse_stats_csv("garbage").is_err());
    }
}
