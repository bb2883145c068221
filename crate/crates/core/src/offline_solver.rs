//! Exact desk-scale optimizer for routing critical streams and their
//! replicas.
//!
//! The search space is built by enumerating, per stream, every simple
//! forwarding path (up to a configurable limit) paired with the unobserved
//! variant and with every replica path from the forwarding path's last hop
//! to an IDS. A branch-and-bound over one option per stream then maximizes
//! the exact objective, pruning on residual-capacity infeasibility and on an
//! optimistic per-stream value bound. All value arithmetic is rational, so
//! tie-breaking (lexicographically smallest option indices) is exact.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Topology, VertexId};
use crate::topogen::Instance;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no IDS designated in the topology")]
    MissingIds,
    #[error("stream {0} has no forwarding path")]
    NoPath(u32),
    #[error("no feasible combination routes every critical stream")]
    Infeasible,
    #[error("instance exceeds the solver size bound ({edges} edges, {streams} streams; max {max_edges}/{max_streams}); export the ILP instead")]
    SizeBound {
        edges: usize,
        streams: usize,
        max_edges: usize,
        max_streams: usize,
    },
    #[error("instance exceeds the oracle bound (8 switches, 3 streams)")]
    OracleBound,
    #[error("options are not aligned with the instance's stream list")]
    MisalignedOptions,
}

/// Routing decision for one critical stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    #[serde(rename = "id")]
    pub stream: u32,
    pub path: Vec<VertexId>,
    pub observed: bool,
    #[serde(rename = "op", default, skip_serializing_if = "Option::is_none")]
    pub observation_point: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replica_path: Option<Vec<VertexId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// The enumeration was complete; the plan is a global optimum.
    Exact,
    /// Some stream hit the option limit; the plan is optimal within the
    /// enumerated options only.
    EnumerationLimited,
    Infeasible,
}

/// The offline routing plan: one entry per critical stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfflinePlan {
    pub status: SolveStatus,
    #[serde(rename = "streams")]
    pub entries: Vec<PlanEntry>,
}

impl OfflinePlan {
    pub fn entry_for(&self, stream: u32) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.stream == stream)
    }
}

/// An observed variant of a stream option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaOption {
    pub op: VertexId,
    pub ids: VertexId,
    pub path: Vec<VertexId>,
}

/// One candidate decision for a stream: a forwarding path, either unobserved
/// or with a concrete replica route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamOption {
    pub path: Vec<VertexId>,
    pub observation: Option<ReplicaOption>,
}

/// All enumerated options of one stream, in deterministic order: paths by
/// (hop count, lexicographic), each followed by its replica variants in the
/// same order.
#[derive(Debug, Clone)]
pub struct StreamOptions {
    pub stream: u32,
    pub options: Vec<StreamOption>,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub max_edges: usize,
    pub max_streams: usize,
    pub option_limit: usize,
    pub jobs: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_edges: 40,
            max_streams: 12,
            option_limit: 200,
            jobs: 1,
        }
    }
}

/// Hard cap on raw path enumeration before sorting; hitting it marks the
/// stream's options as truncated.
const RAW_PATH_CAP: usize = 100_000;

/// All simple `from`→`to` paths whose interior vertices are switches,
/// sorted by (hop count, lexicographic vertex ids). Returns the paths and
/// whether the raw enumeration overflowed.
fn simple_paths(topo: &Topology, from: VertexId, to: VertexId) -> (Vec<Vec<VertexId>>, bool) {
    let mut out = Vec::new();
    let mut overflow = false;
    let mut path = vec![from];
    let mut on_path = std::collections::BTreeSet::from([from]);

    fn targets(topo: &Topology, v: VertexId) -> Vec<VertexId> {
        let mut t: Vec<VertexId> = topo.out_edges(v).iter().map(|&e| topo.edge(e).to).collect();
        t.sort();
        t
    }

    fn dfs(
        topo: &Topology,
        to: VertexId,
        path: &mut Vec<VertexId>,
        on_path: &mut std::collections::BTreeSet<VertexId>,
        out: &mut Vec<Vec<VertexId>>,
        overflow: &mut bool,
    ) {
        if *overflow {
            return;
        }
        let u = *path.last().unwrap();
        for tgt in targets(topo, u) {
            if tgt == to {
                if out.len() >= RAW_PATH_CAP {
                    *overflow = true;
                    return;
                }
                let mut p = path.clone();
                p.push(to);
                out.push(p);
            } else if topo.is_switch(tgt) && !on_path.contains(&tgt) {
                path.push(tgt);
                on_path.insert(tgt);
                dfs(topo, to, path, on_path, out, overflow);
                path.pop();
                on_path.remove(&tgt);
            }
        }
    }

    if from != to {
        dfs(topo, to, &mut path, &mut on_path, &mut out, &mut overflow);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    (out, overflow)
}

/// Enumerates the options of one stream against a list of candidate IDSes.
/// Replica paths to all IDSes are merged and sorted by (hop count,
/// lexicographic), so nearer IDSes come first.
pub fn enumerate_stream_options_multi(
    inst: &Instance,
    stream: &crate::model::CriticalStream,
    limit: usize,
    ids_list: &[VertexId],
) -> Result<StreamOptions, SolveError> {
    assert!(limit >= 1, "option limit must be at least 1");
    let topo = &inst.topology;
    let (mut paths, mut truncated) = simple_paths(topo, stream.src, stream.dst);
    if paths.is_empty() {
        return Err(SolveError::NoPath(stream.id));
    }
    if paths.len() > limit {
        paths.truncate(limit);
        truncated = true;
    }

    let mut options = Vec::new();
    for path in paths {
        options.push(StreamOption {
            path: path.clone(),
            observation: None,
        });
        let op = path[path.len() - 2];
        if !topo.is_switch(op) {
            continue;
        }
        let mut replicas = Vec::new();
        for &d in ids_list {
            let (rpaths, over) = simple_paths(topo, op, d);
            truncated |= over;
            for rp in rpaths {
                replicas.push((rp, d));
            }
        }
        replicas.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        if replicas.len() > limit {
            replicas.truncate(limit);
            truncated = true;
        }
        for (rp, d) in replicas {
            options.push(StreamOption {
                path: path.clone(),
                observation: Some(ReplicaOption {
                    op,
                    ids: d,
                    path: rp,
                }),
            });
        }
    }
    Ok(StreamOptions {
        stream: stream.id,
        options,
        truncated,
    })
}

/// Enumerates the options of one stream against the instance's designated
/// IDS.
pub fn enumerate_stream_options(
    inst: &Instance,
    stream: &crate::model::CriticalStream,
    limit: usize,
) -> Result<StreamOptions, SolveError> {
    let ids = inst.topology.ids().ok_or(SolveError::MissingIds)?;
    enumerate_stream_options_multi(inst, stream, limit, &[ids])
}

/// Enumerates options for every critical stream, in stream order.
pub fn enumerate_options(
    inst: &Instance,
    cfg: &SolveConfig,
    ids_override: Option<&[VertexId]>,
) -> Result<Vec<StreamOptions>, SolveError> {
    let default_ids;
    let ids_list: &[VertexId] = match ids_override {
        Some(list) => list,
        None => {
            default_ids = [inst.topology.ids().ok_or(SolveError::MissingIds)?];
            &default_ids
        }
    };
    inst.critical
        .iter()
        .map(|s| enumerate_stream_options_multi(inst, s, cfg.option_limit, ids_list))
        .collect()
}

/// Per-option precomputation: exact value and per-edge bandwidth usage.
struct PreparedOption {
    value: BigRational,
    usage: Vec<(usize, u64)>,
}

fn prepare(inst: &Instance, options: &[StreamOptions]) -> Result<Vec<Vec<PreparedOption>>, SolveError> {
    let topo = &inst.topology;
    let e_count = topo.edges().len() as u64;
    let k = e_count * inst.critical.len() as u64 + 1;
    if options.len() != inst.critical.len() {
        return Err(SolveError::MisalignedOptions);
    }
    let mut prepared = Vec::with_capacity(options.len());
    for (stream, opts) in inst.critical.iter().zip(options) {
        if opts.stream != stream.id {
            return Err(SolveError::MisalignedOptions);
        }
        let mut po = Vec::with_capacity(opts.options.len());
        for opt in &opts.options {
            let mut usage: BTreeMap<usize, u64> = BTreeMap::new();
            let mut value = BigRational::from(BigInt::from(e_count));
            let mut add_path = |p: &[VertexId], value: &mut BigRational| {
                for pair in p.windows(2) {
                    let ei = topo
                        .edge_between(pair[0], pair[1])
                        .expect("enumerated paths use existing edges");
                    *usage.entry(ei).or_default() += stream.demand_bps;
                    *value -= BigRational::new(
                        BigInt::from(stream.demand_bps),
                        BigInt::from(inst.critical_capacity(ei)),
                    );
                }
            };
            add_path(&opt.path, &mut value);
            if let Some(rep) = &opt.observation {
                add_path(&rep.path, &mut value);
                value += BigRational::from(BigInt::from(k * stream.relevance as u64));
            }
            po.push(PreparedOption {
                value,
                usage: usage.into_iter().collect(),
            });
        }
        prepared.push(po);
    }
    Ok(prepared)
}

fn fits(remaining: &[u64], usage: &[(usize, u64)]) -> bool {
    usage.iter().all(|&(e, amt)| remaining[e] >= amt)
}

fn apply(remaining: &mut [u64], usage: &[(usize, u64)]) {
    for &(e, amt) in usage {
        remaining[e] -= amt;
    }
}

fn revert(remaining: &mut [u64], usage: &[(usize, u64)]) {
    for &(e, amt) in usage {
        remaining[e] += amt;
    }
}

struct Search<'s> {
    prepared: &'s [Vec<PreparedOption>],
    suffix_max: &'s [BigRational],
    best: Option<(BigRational, Vec<u32>)>,
}

impl Search<'_> {
    fn dfs(&mut self, level: usize, value: BigRational, chosen: &mut Vec<u32>, remaining: &mut [u64]) {
        if let Some((bv, _)) = &self.best {
            // Options explored in index order: an equal-value solution found
            // later is lexicographically larger, so pruning on <= is exact.
            if &value + &self.suffix_max[level] <= *bv {
                return;
            }
        }
        if level == self.prepared.len() {
            self.best = Some((value, chosen.clone()));
            return;
        }
        for (idx, opt) in self.prepared[level].iter().enumerate() {
            if !fits(remaining, &opt.usage) {
                continue;
            }
            apply(remaining, &opt.usage);
            chosen.push(idx as u32);
            self.dfs(level + 1, &value + &opt.value, chosen, remaining);
            chosen.pop();
            revert(remaining, &opt.usage);
        }
    }
}

fn assemble(inst: &Instance, options: &[StreamOptions], chosen: &[u32], status: SolveStatus) -> OfflinePlan {
    let entries = inst
        .critical
        .iter()
        .zip(options)
        .zip(chosen)
        .map(|((stream, opts), &idx)| {
            let opt = &opts.options[idx as usize];
            PlanEntry {
                stream: stream.id,
                path: opt.path.clone(),
                observed: opt.observation.is_some(),
                observation_point: opt.observation.as_ref().map(|r| r.op),
                replica_path: opt.observation.as_ref().map(|r| r.path.clone()),
            }
        })
        .collect();
    OfflinePlan { status, entries }
}

/// Finds the maximum-objective feasible combination of stream options.
///
/// The result is deterministic: among equal-value optima the plan with the
/// lexicographically smallest option index vector wins, and parallel runs
/// (`cfg.jobs > 1`) return bit-identical plans to sequential ones.
pub fn solve_exact(
    inst: &Instance,
    options: &[StreamOptions],
    cfg: &SolveConfig,
) -> Result<OfflinePlan, SolveError> {
    let edges = inst.topology.edges().len();
    let streams = inst.critical.len();
    if edges > cfg.max_edges || streams > cfg.max_streams {
        return Err(SolveError::SizeBound {
            edges,
            streams,
            max_edges: cfg.max_edges,
            max_streams: cfg.max_streams,
        });
    }
    let prepared = prepare(inst, options)?;
    if prepared.iter().any(|p| p.is_empty()) {
        return Err(SolveError::Infeasible);
    }
    let status = if options.iter().any(|o| o.truncated) {
        SolveStatus::EnumerationLimited
    } else {
        SolveStatus::Exact
    };

    // suffix_max[i] = best possible value of streams i.. ignoring capacity.
    let mut suffix_max = vec![BigRational::zero(); prepared.len() + 1];
    for i in (0..prepared.len()).rev() {
        let m = prepared[i]
            .iter()
            .map(|o| &o.value)
            .max()
            .expect("non-empty options");
        suffix_max[i] = &suffix_max[i + 1] + m;
    }

    let remaining: Vec<u64> = (0..edges).map(|e| inst.critical_capacity(e)).collect();

    let best = if cfg.jobs <= 1 || prepared[0].len() <= 1 {
        let mut search = Search {
            prepared: &prepared,
            suffix_max: &suffix_max,
            best: None,
        };
        let mut chosen = Vec::new();
        let mut rem = remaining;
        search.dfs(0, BigRational::zero(), &mut chosen, &mut rem);
        search.best
    } else {
        // Split the first level across workers; merge private bests by
        // (value, then lexicographically smallest index vector).
        let jobs = cfg.jobs.min(prepared[0].len());
        let results = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for worker in 0..jobs {
                let prepared = &prepared;
                let suffix_max = &suffix_max;
                let remaining = &remaining;
                handles.push(scope.spawn(move || {
                    let mut search = Search {
                        prepared,
                        suffix_max,
                        best: None,
                    };
                    let mut rem = remaining.clone();
                    for idx in (worker..prepared[0].len()).step_by(jobs) {
                        let opt = &prepared[0][idx];
                        if !fits(&rem, &opt.usage) {
                            continue;
                        }
                        apply(&mut rem, &opt.usage);
                        let mut chosen = vec![idx as u32];
                        search.dfs(1, opt.value.clone(), &mut chosen, &mut rem);
                        revert(&mut rem, &opt.usage);
                    }
                    search.best
                }));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("solver worker panicked"))
                .collect::<Vec<_>>()
        });
        let mut merged: Option<(BigRational, Vec<u32>)> = None;
        for candidate in results.into_iter().flatten() {
            let take = match &merged {
                None => true,
                Some((bv, bi)) => {
                    candidate.0 > *bv || (candidate.0 == *bv && candidate.1 < *bi)
                }
            };
            if take {
                merged = Some(candidate);
            }
        }
        merged
    };

    match best {
        Some((_, chosen)) => Ok(assemble(inst, options, &chosen, status)),
        None => Err(SolveError::Infeasible),
    }
}

/// Enumerates options and solves in one step.
pub fn plan_offline(inst: &Instance, cfg: &SolveConfig) -> Result<OfflinePlan, SolveError> {
    let options = enumerate_options(inst, cfg, None)?;
    solve_exact(inst, &options, cfg)
}

/// Exhaustive reference optimizer: evaluates the full cross product of
/// stream options with an independent path enumerator and the exact
/// objective evaluator, applying the same tie-break as [`solve_exact`].
/// Only defined for tiny instances (at most 8 switches, 3 streams).
pub fn brute_force_oracle(inst: &Instance) -> Result<OfflinePlan, SolveError> {
    let switches = inst.topology.switches().count();
    if switches > 8 || inst.critical.len() > 3 {
        return Err(SolveError::OracleBound);
    }
    let ids = inst.topology.ids().ok_or(SolveError::MissingIds)?;

    let mut all_options: Vec<Vec<StreamOption>> = Vec::new();
    for stream in &inst.critical {
        let paths = oracle_paths(&inst.topology, stream.src, stream.dst);
        if paths.is_empty() {
            return Err(SolveError::NoPath(stream.id));
        }
        let mut opts = Vec::new();
        for path in paths {
            opts.push(StreamOption {
                path: path.clone(),
                observation: None,
            });
            let op = path[path.len() - 2];
            if !inst.topology.is_switch(op) {
                continue;
            }
            for rp in oracle_paths(&inst.topology, op, ids) {
                opts.push(StreamOption {
                    path: path.clone(),
                    observation: Some(ReplicaOption {
                        op,
                        ids,
                        path: rp,
                    }),
                });
            }
        }
        all_options.push(opts);
    }

    let topo = &inst.topology;
    let mut best: Option<(BigRational, Vec<u32>)> = None;
    let mut counters = vec![0usize; all_options.len()];
    'combos: loop {
        // Feasibility of the current combination against critical capacities.
        let mut usage = vec![0u64; topo.edges().len()];
        let mut feasible = true;
        'check: for (stream, (opts, &idx)) in
            inst.critical.iter().zip(all_options.iter().zip(&counters))
        {
            let opt = &opts[idx];
            let mut paths: Vec<&[VertexId]> = vec![&opt.path];
            if let Some(rep) = &opt.observation {
                paths.push(&rep.path);
            }
            for p in paths {
                for pair in p.windows(2) {
                    let ei = topo.edge_between(pair[0], pair[1]).expect("known edge");
                    usage[ei] += stream.demand_bps;
                    if usage[ei] > inst.critical_capacity(ei) {
                        feasible = false;
                        break 'check;
                    }
                }
            }
        }
        if feasible {
            let chosen: Vec<u32> = counters.iter().map(|&x| x as u32).collect();
            let plan = assemble_from(inst, &all_options, &counters);
            let value = crate::formulation::objective_value(inst, &plan)
                .expect("oracle plans reference known streams and edges");
            let better = match &best {
                None => true,
                Some((bv, _)) => value > *bv,
            };
            if better {
                best = Some((value, chosen));
            }
        }
        // Advance the cross-product counters (last stream fastest), so
        // combinations are visited in lexicographic order.
        for i in (0..counters.len()).rev() {
            counters[i] += 1;
            if counters[i] < all_options[i].len() {
                continue 'combos;
            }
            counters[i] = 0;
            if i == 0 {
                break 'combos;
            }
        }
        if counters.is_empty() {
            break;
        }
    }

    match best {
        Some((_, chosen)) => {
            let counters: Vec<usize> = chosen.iter().map(|&x| x as usize).collect();
            Ok(assemble_from(inst, &all_options, &counters))
        }
        None => Err(SolveError::Infeasible),
    }
}

fn assemble_from(inst: &Instance, options: &[Vec<StreamOption>], counters: &[usize]) -> OfflinePlan {
    let entries = inst
        .critical
        .iter()
        .zip(options.iter().zip(counters))
        .map(|(stream, (opts, &idx))| {
            let opt = &opts[idx];
            PlanEntry {
                stream: stream.id,
                path: opt.path.clone(),
                observed: opt.observation.is_some(),
                observation_point: opt.observation.as_ref().map(|r| r.op),
                replica_path: opt.observation.as_ref().map(|r| r.path.clone()),
            }
        })
        .collect();
    OfflinePlan {
        status: SolveStatus::Exact,
        entries,
    }
}

/// Breadth-first simple-path enumeration used only by the oracle; a
/// deliberately different traversal from the solver's depth-first one.
fn oracle_paths(topo: &Topology, from: VertexId, to: VertexId) -> Vec<Vec<VertexId>> {
    let mut complete = Vec::new();
    let mut frontier = vec![vec![from]];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for path in frontier {
            let u = *path.last().unwrap();
            let mut targets: Vec<VertexId> =
                topo.out_edges(u).iter().map(|&e| topo.edge(e).to).collect();
            targets.sort();
            for tgt in targets {
                if tgt == to && to != from {
                    let mut p = path.clone();
                    p.push(to);
                    complete.push(p);
                } else if topo.is_switch(tgt) && !path.contains(&tgt) {
                    let mut p = path.clone();
                    p.push(tgt);
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    complete.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    complete
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::objective_value;
    use crate::model::{CriticalStream, Vertex, VertexKind};
    use crate::verify::check_plan;
    use num_traits::Zero;

    fn vx(id: u32, kind: VertexKind) -> Vertex {
        Vertex {
            id: VertexId(id),
            kind,
            label: None,
        }
    }

    fn stream(id: u32, src: u32, dst: u32, demand: u64) -> CriticalStream {
        CriticalStream {
            id,
            src: VertexId(src),
            dst: VertexId(dst),
            demand_bps: demand,
            relevance: 1,
        }
    }

    fn path(ids: &[u32]) -> Vec<VertexId> {
        ids.iter().map(|&x| VertexId(x)).collect()
    }

    /// Line s(0) - a(1) - b(2) - t(3), IDS d(4) off b; replica link capacity
    /// is a parameter.
    fn line(replica_cap: u64, demand: u64) -> Instance {
        let topo = Topology::from_links(
            vec![
                vx(0, VertexKind::Device),
                vx(1, VertexKind::Switch),
                vx(2, VertexKind::Switch),
                vx(3, VertexKind::Device),
                vx(4, VertexKind::Device),
            ],
            &[
                (VertexId(0), VertexId(1), 100),
                (VertexId(1), VertexId(2), 100),
                (VertexId(2), VertexId(3), 100),
                (VertexId(2), VertexId(4), replica_cap),
            ],
            Some(VertexId(4)),
        );
        Instance::from_parts(topo, vec![stream(0, 0, 3, demand)])
    }

    /// Two streams from devices 0 and 5 to t(4); switches a(1), b(2), c(3);
    /// the a-b edge fits only the first stream, the a-c-b detour exists for
    /// both. IDS d(6) off b.
    fn contended() -> Instance {
        let topo = Topology::from_links(
            vec![
                vx(0, VertexKind::Device),
                vx(1, VertexKind::Switch),
                vx(2, VertexKind::Switch),
                vx(3, VertexKind::Switch),
                vx(4, VertexKind::Device),
                vx(5, VertexKind::Device),
                vx(6, VertexKind::Device),
            ],
            &[
                (VertexId(0), VertexId(1), 100),
                (VertexId(5), VertexId(1), 100),
                (VertexId(1), VertexId(2), 10),
                (VertexId(1), VertexId(3), 10),
                (VertexId(3), VertexId(2), 10),
                (VertexId(2), VertexId(4), 100),
                (VertexId(2), VertexId(6), 100),
            ],
            Some(VertexId(6)),
        );
        Instance::from_parts(topo, vec![stream(0, 0, 4, 10), stream(1, 5, 4, 4)])
    }

    #[test]
    fn line_graph_has_two_options() {
        let inst = line(100, 10);
        let opts = enumerate_stream_options(&inst, &inst.critical[0], 50).unwrap();
        assert_eq!(opts.options.len(), 2);
        assert!(!opts.truncated);
        assert!(opts.options[0].observation.is_none());
        let rep = opts.options[1].observation.as_ref().unwrap();
        assert_eq!(rep.op, VertexId(2));
        assert_eq!(rep.path, path(&[2, 4]));
    }

    #[test]
    fn diamond_has_four_options_and_limit_one_keeps_shortest() {
        // s(0) dual-homed to a(1), b(2); t(3) behind both; d(4) off both.
        let topo = Topology::from_links(
            vec![
                vx(0, VertexKind::Device),
                vx(1, VertexKind::Switch),
                vx(2, VertexKind::Switch),
                vx(3, VertexKind::Device),
                vx(4, VertexKind::Device),
            ],
            &[
                (VertexId(0), VertexId(1), 100),
                (VertexId(0), VertexId(2), 100),
                (VertexId(1), VertexId(3), 100),
                (VertexId(2), VertexId(3), 100),
                (VertexId(1), VertexId(4), 100),
                (VertexId(2), VertexId(4), 100),
            ],
            Some(VertexId(4)),
        );
        let inst = Instance::from_parts(topo, vec![stream(0, 0, 3, 10)]);
        let opts = enumerate_stream_options(&inst, &inst.critical[0], 50).unwrap();
        assert!(opts.options.len() >= 4);

        let limited = enumerate_stream_options(&inst, &inst.critical[0], 1).unwrap();
        assert!(limited.truncated);
        // One path retained: the lexicographically smallest of the two
        // equal-length ones.
        assert!(limited.options.iter().all(|o| o.path == path(&[0, 1, 3])));
    }

    #[test]
    fn missing_path_is_reported() {
        let topo = Topology::from_links(
            vec![
                vx(0, VertexKind::Device),
                vx(1, VertexKind::Switch),
                vx(2, VertexKind::Device),
                vx(3, VertexKind::Switch),
                vx(4, VertexKind::Device),
            ],
            &[
                (VertexId(0), VertexId(1), 100),
                (VertexId(2), VertexId(3), 100),
                (VertexId(3), VertexId(4), 100),
            ],
            Some(VertexId(4)),
        );
        let inst = Instance::from_parts(topo, vec![stream(0, 0, 2, 10)]);
        assert!(matches!(
            enumerate_stream_options(&inst, &inst.critical[0], 10),
            Err(SolveError::NoPath(0))
        ));
    }

    #[test]
    fn single_path_gets_observed_and_matches_oracle() {
        let inst = line(100, 10);
        let cfg = SolveConfig::default();
        let options = enumerate_options(&inst, &cfg, None).unwrap();
        let plan = solve_exact(&inst, &options, &cfg).unwrap();
        assert_eq!(plan.status, SolveStatus::Exact);
        let entry = plan.entry_for(0).unwrap();
        assert!(entry.observed);
        assert_eq!(entry.observation_point, Some(VertexId(2)));

        let oracle = brute_force_oracle(&inst).unwrap();
        assert_eq!(plan, oracle);
        assert!(check_plan(&inst, &plan).is_empty());

        // Observation dominance showed up in the exact value: it includes K.
        let k = inst.topology.edges().len() as u64 * inst.critical.len() as u64 + 1;
        let value = objective_value(&inst, &plan).unwrap();
        assert!(value > BigRational::from(BigInt::from(k)));
    }

    #[test]
    fn infeasible_replica_leaves_stream_unobserved() {
        let inst = line(5, 10); // replica link narrower than the demand
        let cfg = SolveConfig::default();
        let options = enumerate_options(&inst, &cfg, None).unwrap();
        let plan = solve_exact(&inst, &options, &cfg).unwrap();
        let entry = plan.entry_for(0).unwrap();
        assert!(!entry.observed);
        assert_eq!(plan, brute_force_oracle(&inst).unwrap());
    }

    #[test]
    fn contention_pushes_second_stream_onto_detour() {
        let inst = contended();
        let cfg = SolveConfig::default();
        let options = enumerate_options(&inst, &cfg, None).unwrap();
        let plan = solve_exact(&inst, &options, &cfg).unwrap();
        let first = plan.entry_for(0).unwrap();
        let second = plan.entry_for(1).unwrap();
        assert_eq!(first.path, path(&[0, 1, 2, 4]));
        assert_eq!(second.path, path(&[5, 1, 3, 2, 4]));
        assert_eq!(plan, brute_force_oracle(&inst).unwrap());
        assert!(check_plan(&inst, &plan).is_empty());
    }

    #[test]
    fn parallel_solve_is_bit_identical() {
        let inst = contended();
        let sequential = SolveConfig::default();
        let parallel = SolveConfig {
            jobs: 3,
            ..SolveConfig::default()
        };
        let options = enumerate_options(&inst, &sequential, None).unwrap();
        let a = solve_exact(&inst, &options, &sequential).unwrap();
        let b = solve_exact(&inst, &options, &parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_instance_is_reported_by_both() {
        // Demand exceeds every capacity on the only path.
        let inst = line(100, 1_000);
        let cfg = SolveConfig::default();
        let options = enumerate_options(&inst, &cfg, None).unwrap();
        assert!(matches!(
            solve_exact(&inst, &options, &cfg),
            Err(SolveError::Infeasible)
        ));
        assert!(matches!(
            brute_force_oracle(&inst),
            Err(SolveError::Infeasible)
        ));
    }

    #[test]
    fn multi_ids_prefers_the_reachable_ids() {
        // d1(4) behind a too-narrow link, d2(5) behind a wide one.
        let topo = Topology::from_links(
            vec![
                vx(0, VertexKind::Device),
                vx(1, VertexKind::Switch),
                vx(2, VertexKind::Switch),
                vx(3, VertexKind::Device),
                vx(4, VertexKind::Device),
                vx(5, VertexKind::Device),
            ],
            &[
                (VertexId(0), VertexId(1), 100),
                (VertexId(1), VertexId(2), 100),
                (VertexId(2), VertexId(3), 100),
                (VertexId(2), VertexId(4), 5),
                (VertexId(2), VertexId(5), 100),
            ],
            Some(VertexId(4)),
        );
        let inst = Instance::from_parts(topo, vec![stream(0, 0, 3, 10)]);
        let cfg = SolveConfig::default();
        let ids_set = [VertexId(4), VertexId(5)];
        let options = enumerate_options(&inst, &cfg, Some(&ids_set)).unwrap();
        let plan = solve_exact(&inst, &options, &cfg).unwrap();
        let entry = plan.entry_for(0).unwrap();
        assert!(entry.observed);
        assert_eq!(entry.replica_path.as_ref().unwrap().last(), Some(&VertexId(5)));
    }

    #[test]
    fn size_bound_is_enforced() {
        let inst = line(100, 10);
        let cfg = SolveConfig {
            max_edges: 4,
            ..SolveConfig::default()
        };
        let options = enumerate_options(&inst, &cfg, None).unwrap();
        assert!(matches!(
            solve_exact(&inst, &options, &cfg),
            Err(SolveError::SizeBound { .. })
        ));
    }

    #[test]
    fn oracle_bound_is_enforced() {
        let mut vertices: Vec<Vertex> = (0..9).map(|i| vx(i, VertexKind::Switch)).collect();
        vertices.push(vx(9, VertexKind::Device));
        vertices.push(vx(10, VertexKind::Device));
        let mut links = vec![
            (VertexId(9), VertexId(0), 100),
            (VertexId(10), VertexId(8), 100),
        ];
        for i in 0..8 {
            links.push((VertexId(i), VertexId(i + 1), 100));
        }
        let topo = Topology::from_links(vertices, &links, Some(VertexId(10)));
        let inst = Instance::from_parts(topo, vec![stream(0, 9, 10, 1)]);
        assert!(matches!(brute_force_oracle(&inst), Err(SolveError::OracleBound)));
    }

    #[test]
    fn added_capacity_never_hurts() {
        let base = contended();
        let cfg = SolveConfig::default();
        let before = {
            let options = enumerate_options(&base, &cfg, None).unwrap();
            objective_value(&base, &solve_exact(&base, &options, &cfg).unwrap()).unwrap()
        };
        // Widen the contended a-b edge in both directions.
        let mut links = base.topology.physical_links().unwrap();
        for l in &mut links {
            if (l.0, l.1) == (VertexId(1), VertexId(2)) {
                l.2 += 50;
            }
        }
        let topo = Topology::from_links(base.topology.vertices().to_vec(), &links, base.topology.ids());
        let widened = Instance::from_parts(topo, base.critical.clone());
        let after = {
            let options = enumerate_options(&widened, &cfg, None).unwrap();
            objective_value(&widened, &solve_exact(&widened, &options, &cfg).unwrap()).unwrap()
        };
        assert!(after >= before);
    }

    #[test]
    fn plan_json_shape() {
        let inst = line(100, 10);
        let cfg = SolveConfig::default();
        let plan = plan_offline(&inst, &cfg).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        assert!(json.contains("\"status\":\"exact\""));
        assert!(json.contains("\"streams\""));
        assert!(json.contains("\"op\":2"));
        let back: OfflinePlan = serde_json::from_str(&json).unwrap();
        assert_eq!(plan, back);
        assert!(!objective_value(&inst, &plan).unwrap().is_zero());
    }
}
