//! On-line admission of standard streams.
//!
//! A new stream gets a forwarding path, an observation point as close to its
//! destination as possible, and a replica path to the IDS, all chosen by
//! widest-path search over per-edge candidate capacities β(e)/(m+1). After
//! every admission or removal the bandwidth of all standard streams is
//! reassigned max-min fairly by progressive water filling over the standard
//! budget β, in exact rational arithmetic. Critical reservations are never
//! touched: standard streams and their replicas live entirely inside β.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Topology, VertexId};
use crate::offline_solver::OfflinePlan;
use crate::topogen::Instance;

#[derive(Debug, Error)]
pub enum OnlineError {
    #[error("no IDS designated in the topology")]
    MissingIds,
    #[error("endpoint {0} is not a device vertex")]
    EndpointNotDevice(VertexId),
    #[error("source and destination are both {0}")]
    EndpointsEqual(VertexId),
    #[error("no active stream with id {0}")]
    UnknownStream(u64),
    #[error("state has no offline plan")]
    NoPlan,
    #[error("critical stream {0} is not in the offline plan")]
    StreamNotInPlan(u32),
    #[error("critical stream {0} is already observed")]
    AlreadyObserved(u32),
    #[error("plan references unknown edge ({0}, {1})")]
    PlanEdgeUnknown(VertexId, VertexId),
}

/// An admitted standard stream: forwarding path P, observation point op ∈ P,
/// replica path Q from op to the IDS, and its current fair-share bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardStream {
    pub id: u64,
    pub src: VertexId,
    pub dst: VertexId,
    pub path: Vec<VertexId>,
    pub op: VertexId,
    pub replica_path: Vec<VertexId>,
    pub assigned_bps: u64,
    pub admitted_at: f64,
}

/// Result of a successful admission: the new stream plus the complete new
/// bandwidth assignment (integer bits/s, floored from the exact shares).
#[derive(Debug, Clone)]
pub struct Admission {
    pub stream: StandardStream,
    pub assignment: BTreeMap<u64, u64>,
    pub widest_path_calls: usize,
}

#[derive(Debug, Clone)]
pub enum AdmitOutcome {
    Admitted(Admission),
    /// Every candidate layer had zero residual standard bandwidth: the
    /// network cannot host the stream without touching critical
    /// reservations.
    Rejected,
}

/// Result of an on-demand observation request for a critical stream.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationOutcome {
    /// A hop on the stream's path with enough critical residual to carry the
    /// replica, and the replica path from it.
    Observe { op: VertexId, path: Vec<VertexId> },
    /// No hop suffices; these observed streams hold replica bandwidth on the
    /// binding edges and could be switched off to free resources.
    Suggestion {
        streams: BTreeSet<u32>,
        bottleneck_edges: Vec<(VertexId, VertexId)>,
    },
}

/// Mutable on-line solver state. One writer at a time; clones are cheap
/// read-only snapshots.
#[derive(Debug, Clone)]
pub struct OnlineState {
    instance: Arc<Instance>,
    plan: Option<OfflinePlan>,
    critical_usage: Vec<u64>,
    streams: BTreeMap<u64, StandardStream>,
    stream_edges: BTreeMap<u64, BTreeSet<usize>>,
    edge_streams: Vec<BTreeSet<u64>>,
    allocations: BTreeMap<u64, BigRational>,
    tau: f64,
    next_id: u64,
}

impl OnlineState {
    /// Builds a fresh state. When an offline plan is supplied its critical
    /// usage is charged against the critical share of each edge, enabling
    /// on-demand observation requests.
    pub fn new(
        instance: Instance,
        plan: Option<OfflinePlan>,
        tau_seconds: f64,
    ) -> Result<OnlineState, OnlineError> {
        let mut critical_usage = vec![0u64; instance.topology.edges().len()];
        if let Some(plan) = &plan {
            for entry in &plan.entries {
                let demand = instance
                    .critical
                    .iter()
                    .find(|s| s.id == entry.stream)
                    .map(|s| s.demand_bps)
                    .unwrap_or(0);
                let mut charge = |p: &[VertexId]| -> Result<(), OnlineError> {
                    for pair in p.windows(2) {
                        let ei = instance
                            .topology
                            .edge_between(pair[0], pair[1])
                            .ok_or(OnlineError::PlanEdgeUnknown(pair[0], pair[1]))?;
                        critical_usage[ei] += demand;
                    }
                    Ok(())
                };
                charge(&entry.path)?;
                if let Some(rp) = &entry.replica_path {
                    charge(rp)?;
                }
            }
        }
        let edge_streams = vec![BTreeSet::new(); instance.topology.edges().len()];
        Ok(OnlineState {
            instance: Arc::new(instance),
            plan,
            critical_usage,
            streams: BTreeMap::new(),
            stream_edges: BTreeMap::new(),
            edge_streams,
            allocations: BTreeMap::new(),
            tau: tau_seconds,
            next_id: 0,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn streams(&self) -> impl Iterator<Item = &StandardStream> {
        self.streams.values()
    }

    pub fn stream(&self, id: u64) -> Option<&StandardStream> {
        self.streams.get(&id)
    }

    /// Exact current allocations, keyed by stream id.
    pub fn allocations(&self) -> &BTreeMap<u64, BigRational> {
        &self.allocations
    }

    /// Streams crossing each edge (by P or Q), indexed like `edges()`.
    pub fn edge_streams(&self) -> &[BTreeSet<u64>] {
        &self.edge_streams
    }

    pub fn critical_usage(&self) -> &[u64] {
        &self.critical_usage
    }

    /// Capacity offered to the widest-path searches: β(e)/(m+1) where m is
    /// the number of standard streams currently sharing the edge.
    pub fn per_edge_candidate_capacity(&self) -> Vec<u64> {
        self.instance
            .beta()
            .iter()
            .zip(&self.edge_streams)
            .map(|(&beta, sharers)| beta / (sharers.len() as u64 + 1))
            .collect()
    }

    /// Handles a new standard stream from `src` to `dst` at time `now`.
    ///
    /// Candidate observation points are scanned by increasing switch
    /// distance from `dst`; within a layer the candidate with the widest
    /// bottleneck b = min(bw(s→op), bw(op→ids), bw(op→dst)) wins (ties:
    /// lowest id), and the first layer with b > 0 ends the search. On
    /// success all standard-stream bandwidths are recomputed by water
    /// filling and the stream is admitted at `now` plus the reconfiguration
    /// delay τ.
    pub fn admit_stream(
        &mut self,
        src: VertexId,
        dst: VertexId,
        now: f64,
    ) -> Result<AdmitOutcome, OnlineError> {
        let topo = &self.instance.topology;
        if !topo.is_device(src) {
            return Err(OnlineError::EndpointNotDevice(src));
        }
        if !topo.is_device(dst) {
            return Err(OnlineError::EndpointNotDevice(dst));
        }
        if src == dst {
            return Err(OnlineError::EndpointsEqual(src));
        }
        let ids = topo.ids().ok_or(OnlineError::MissingIds)?;

        let caps = self.per_edge_candidate_capacity();
        let dist_to_dst = switch_distances_to(topo, dst);
        let Some(dist_sd) = device_distance(topo, src, dst) else {
            return Ok(AdmitOutcome::Rejected);
        };
        let layer_bound = dist_sd.saturating_sub(2).max(1);

        let mut calls = 0usize;
        for layer in 1..=layer_bound {
            let mut best: Option<(u64, VertexId, Vec<VertexId>, Vec<VertexId>, Vec<VertexId>)> =
                None;
            let mut candidates: Vec<VertexId> = dist_to_dst
                .iter()
                .filter(|&(_, &d)| d == layer)
                .map(|(&v, _)| v)
                .collect();
            candidates.sort();
            for v in candidates {
                calls += 3;
                let so = widest_path(topo, &caps, src, v);
                let od = widest_path(topo, &caps, v, ids);
                let ot = widest_path(topo, &caps, v, dst);
                let (Some(so), Some(od), Some(ot)) = (so, od, ot) else {
                    continue;
                };
                let b = so.1.min(od.1).min(ot.1);
                if b > 0 && best.as_ref().map_or(true, |(bb, ..)| b > *bb) {
                    best = Some((b, v, so.0, od.0, ot.0));
                }
            }
            if let Some((_, op, so, od, ot)) = best {
                let mut path = so;
                path.extend_from_slice(&ot[1..]);
                let id = self.next_id;
                self.next_id += 1;
                let mut edges = BTreeSet::new();
                for p in [&path, &od] {
                    for pair in p.windows(2) {
                        edges.insert(
                            topo.edge_between(pair[0], pair[1])
                                .expect("widest paths use existing edges"),
                        );
                    }
                }
                for &e in &edges {
                    self.edge_streams[e].insert(id);
                }
                self.stream_edges.insert(id, edges);
                self.streams.insert(
                    id,
                    StandardStream {
                        id,
                        src,
                        dst,
                        path,
                        op,
                        replica_path: od,
                        assigned_bps: 0,
                        admitted_at: now + self.tau,
                    },
                );
                let assignment = self.refill();
                return Ok(AdmitOutcome::Admitted(Admission {
                    stream: self.streams[&id].clone(),
                    assignment,
                    widest_path_calls: calls,
                }));
            }
        }
        Ok(AdmitOutcome::Rejected)
    }

    /// Removes an active stream and reassigns the survivors.
    pub fn remove_stream(&mut self, id: u64) -> Result<BTreeMap<u64, u64>, OnlineError> {
        self.streams
            .remove(&id)
            .ok_or(OnlineError::UnknownStream(id))?;
        self.allocations.remove(&id);
        if let Some(edges) = self.stream_edges.remove(&id) {
            for e in edges {
                self.edge_streams[e].remove(&id);
            }
        }
        Ok(self.refill())
    }

    fn refill(&mut self) -> BTreeMap<u64, u64> {
        self.allocations = water_fill(self.instance.beta(), &self.stream_edges);
        let mut out = BTreeMap::new();
        for (&id, alloc) in &self.allocations {
            let bps = floor_bps(alloc);
            if let Some(s) = self.streams.get_mut(&id) {
                s.assigned_bps = bps;
            }
            out.insert(id, bps);
        }
        out
    }

    /// Requests observation of a critical stream the offline plan left
    /// unobserved. Walks the stream's path backward from the hop closest to
    /// the destination and returns the first hop whose widest path to the
    /// IDS over the critical residual carries the stream's demand;
    /// otherwise reports which observed streams sit on the binding edges.
    pub fn observe_on_request(&self, stream_id: u32) -> Result<ObservationOutcome, OnlineError> {
        let plan = self.plan.as_ref().ok_or(OnlineError::NoPlan)?;
        let entry = plan
            .entry_for(stream_id)
            .ok_or(OnlineError::StreamNotInPlan(stream_id))?;
        if entry.observed {
            return Err(OnlineError::AlreadyObserved(stream_id));
        }
        let stream = self
            .instance
            .critical
            .iter()
            .find(|s| s.id == stream_id)
            .ok_or(OnlineError::StreamNotInPlan(stream_id))?;
        let topo = &self.instance.topology;
        let ids = topo.ids().ok_or(OnlineError::MissingIds)?;
        let caps: Vec<u64> = (0..topo.edges().len())
            .map(|e| {
                self.instance
                    .critical_capacity(e)
                    .saturating_sub(self.critical_usage[e])
            })
            .collect();

        let mut binding = BTreeSet::new();
        if entry.path.len() >= 3 {
            for &hop in entry.path[1..entry.path.len() - 1].iter().rev() {
                let Some((path, b)) = widest_path_allow_zero(topo, &caps, hop, ids) else {
                    continue;
                };
                if b >= stream.demand_bps {
                    return Ok(ObservationOutcome::Observe { op: hop, path });
                }
                for pair in path.windows(2) {
                    let ei = topo.edge_between(pair[0], pair[1]).expect("path edge");
                    if caps[ei] == b {
                        binding.insert(ei);
                    }
                }
            }
        }
        let mut streams = BTreeSet::new();
        for other in &plan.entries {
            if !other.observed {
                continue;
            }
            if let Some(rp) = &other.replica_path {
                for pair in rp.windows(2) {
                    if let Some(ei) = topo.edge_between(pair[0], pair[1]) {
                        if binding.contains(&ei) {
                            streams.insert(other.stream);
                        }
                    }
                }
            }
        }
        let bottleneck_edges = binding
            .into_iter()
            .map(|ei| {
                let e = topo.edge(ei);
                (e.from, e.to)
            })
            .collect();
        Ok(ObservationOutcome::Suggestion {
            streams,
            bottleneck_edges,
        })
    }

    /// Testing hook: overwrites one stream's allocation without refilling,
    /// so checkers can be exercised against corrupted states.
    #[doc(hidden)]
    pub fn override_allocation(&mut self, id: u64, alloc: BigRational) {
        if let Some(s) = self.streams.get_mut(&id) {
            s.assigned_bps = floor_bps(&alloc);
        }
        self.allocations.insert(id, alloc);
    }

    /// Serializable snapshot of the active streams and their allocations.
    pub fn dump(&self) -> StateDump {
        StateDump {
            tau_seconds: self.tau,
            streams: self
                .streams
                .values()
                .map(|s| StreamDump {
                    stream: s.clone(),
                    allocation_exact: self.allocations[&s.id].to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateDump {
    pub tau_seconds: f64,
    pub streams: Vec<StreamDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StreamDump {
    #[serde(flatten)]
    pub stream: StandardStream,
    pub allocation_exact: String,
}

fn floor_bps(x: &BigRational) -> u64 {
    x.floor().to_integer().to_u64().unwrap_or(0)
}

/// Switch distances toward `target`: a switch v is at distance i when the
/// shortest forwarding route v → target through switches has i hops.
fn switch_distances_to(topo: &Topology, target: VertexId) -> BTreeMap<VertexId, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &ei in topo.in_edges(target) {
        let v = topo.edge(ei).from;
        if topo.is_switch(v) && !dist.contains_key(&v) {
            dist.insert(v, 1);
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &ei in topo.in_edges(v) {
            let w = topo.edge(ei).from;
            if topo.is_switch(w) && !dist.contains_key(&w) {
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Hop distance between two devices routing through switches only.
fn device_distance(topo: &Topology, from: VertexId, to: VertexId) -> Option<u32> {
    let mut dist = BTreeMap::from([(from, 0u32)]);
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &ei in topo.out_edges(v) {
            let w = topo.edge(ei).to;
            if w == to {
                return Some(d + 1);
            }
            if topo.is_switch(w) && !dist.contains_key(&w) {
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    None
}

/// Widest (maximum-bottleneck) path from `from` to `to` over `caps`,
/// traversing only switches in the interior. Ties: fewer hops, then
/// lexicographically smallest vertex ids. Edges with zero capacity are
/// impassable; `None` when disconnected under positive capacities.
pub fn widest_path(
    topo: &Topology,
    caps: &[u64],
    from: VertexId,
    to: VertexId,
) -> Option<(Vec<VertexId>, u64)> {
    widest_path_threshold(topo, caps, from, to, 1)
}

/// Widest-path variant that may traverse zero-capacity edges, returning a
/// zero bottleneck instead of `None` when only those connect the endpoints.
pub fn widest_path_allow_zero(
    topo: &Topology,
    caps: &[u64],
    from: VertexId,
    to: VertexId,
) -> Option<(Vec<VertexId>, u64)> {
    widest_path_threshold(topo, caps, from, to, 0)
}

fn widest_path_threshold(
    topo: &Topology,
    caps: &[u64],
    from: VertexId,
    to: VertexId,
    min_allowed: u64,
) -> Option<(Vec<VertexId>, u64)> {
    if from == to {
        return None;
    }
    let mut values: Vec<u64> = caps.iter().copied().filter(|&c| c >= min_allowed).collect();
    values.sort_unstable();
    values.dedup();
    if values.is_empty() {
        return None;
    }

    let reachable = |b: u64| -> bool {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &ei in topo.out_edges(v) {
                if caps[ei] < b {
                    continue;
                }
                let w = topo.edge(ei).to;
                if w == to {
                    return true;
                }
                if topo.is_switch(w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        false
    };

    // Largest threshold in `values` that keeps `to` reachable.
    if !reachable(values[0]) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if reachable(values[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let bottleneck = values[lo];

    // Backward hop counts to `to` restricted to caps >= bottleneck.
    let mut dist_to: BTreeMap<VertexId, u32> = BTreeMap::from([(to, 0)]);
    let mut queue = VecDeque::from([to]);
    while let Some(v) = queue.pop_front() {
        let d = dist_to[&v];
        for &ei in topo.in_edges(v) {
            if caps[ei] < bottleneck {
                continue;
            }
            let w = topo.edge(ei).from;
            let interior_ok = topo.is_switch(w) || w == from;
            if interior_ok && !dist_to.contains_key(&w) {
                dist_to.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    let total = *dist_to.get(&from)?;

    // Greedy lexicographically-smallest shortest path.
    let mut path = vec![from];
    let mut cur = from;
    for step in 0..total {
        let want = total - step - 1;
        let mut next: Option<VertexId> = None;
        for &ei in topo.out_edges(cur) {
            if caps[ei] < bottleneck {
                continue;
            }
            let w = topo.edge(ei).to;
            let usable = w == to || topo.is_switch(w);
            if usable && dist_to.get(&w) == Some(&want) && next.map_or(true, |n| w < n) {
                next = Some(w);
            }
        }
        let w = next.expect("distance-consistent successor exists");
        path.push(w);
        cur = w;
    }
    Some((path, bottleneck))
}

/// Max-min fair allocation by progressive filling: repeatedly saturate the
/// edge with the minimum per-stream share c(e)/|S(e)| (ties: lowest edge
/// index), fix its streams at that share, and continue on the residuals.
/// Exact rational arithmetic throughout.
pub fn water_fill(
    budgets: &[u64],
    stream_edges: &BTreeMap<u64, BTreeSet<usize>>,
) -> BTreeMap<u64, BigRational> {
    let mut members: BTreeMap<usize, BTreeSet<u64>> = BTreeMap::new();
    for (&id, edges) in stream_edges {
        assert!(!edges.is_empty(), "stream {id} crosses no edge");
        for &e in edges {
            members.entry(e).or_default().insert(id);
        }
    }
    let mut residual: BTreeMap<usize, BigRational> = members
        .keys()
        .map(|&e| (e, BigRational::from(BigInt::from(budgets[e]))))
        .collect();

    let mut alloc = BTreeMap::new();
    while !members.is_empty() {
        let (&bottleneck, share) = members
            .iter()
            .map(|(e, m)| {
                let share = &residual[e] / BigRational::from(BigInt::from(m.len() as u64));
                (e, share)
            })
            .min_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)))
            .expect("members non-empty");
        let fixed: Vec<u64> = members[&bottleneck].iter().copied().collect();
        for id in fixed {
            alloc.insert(id, share.clone());
            for &e in &stream_edges[&id] {
                if e == bottleneck {
                    continue;
                }
                if let Some(m) = members.get_mut(&e) {
                    m.remove(&id);
                    *residual.get_mut(&e).unwrap() -= &share;
                    if m.is_empty() {
                        members.remove(&e);
                        residual.remove(&e);
                    }
                }
            }
        }
        members.remove(&bottleneck);
        residual.remove(&bottleneck);
    }
    alloc
}
