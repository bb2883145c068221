//! Independent checker for offline plans and on-line states. Consults only
//! the instance and the artifact under check, never solver internals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::model::{VertexId, VertexKind};
use crate::offline_solver::OfflinePlan;
use crate::online_solver::OnlineState;
use crate::topogen::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    MissingStream,
    UnknownStream,
    PathEndpoint,
    PathDisconnected,
    PathNotSimple,
    DeviceInterior,
    ObservedWithoutOp,
    ObservedWithoutReplica,
    StrayObservation,
    OpNotSwitch,
    OpNotLastHop,
    ReplicaStart,
    ReplicaEnd,
    ReplicaDisconnected,
    ReplicaNotSimple,
    ReplicaDeviceInterior,
    CapacityExceeded,
    BudgetExceeded,
    NotMaxMin,
    NoIds,
}

/// A machine-readable violation with the offending entity ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(rename = "stream_id", skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<(VertexId, VertexId)>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.detail)
    }
}

fn violation(code: ViolationCode, stream: Option<u64>, detail: String) -> Violation {
    Violation {
        code,
        stream,
        edge: None,
        detail,
    }
}

/// Checks an offline plan against the instance's designated IDS.
pub fn check_plan(inst: &Instance, plan: &OfflinePlan) -> Vec<Violation> {
    let ids: BTreeSet<VertexId> = inst.topology.ids().into_iter().collect();
    check_plan_with_ids(inst, plan, &ids)
}

/// Checks an offline plan, accepting any IDS in `ids_set` as a replica
/// destination (for multi-IDS plans).
pub fn check_plan_with_ids(
    inst: &Instance,
    plan: &OfflinePlan,
    ids_set: &BTreeSet<VertexId>,
) -> Vec<Violation> {
    let topo = &inst.topology;
    let mut report = Vec::new();
    let known: BTreeMap<u32, &crate::model::CriticalStream> =
        inst.critical.iter().map(|s| (s.id, s)).collect();

    for stream in &inst.critical {
        if plan.entry_for(stream.id).is_none() {
            report.push(violation(
                ViolationCode::MissingStream,
                Some(stream.id as u64),
                format!("critical stream {} is not routed", stream.id),
            ));
        }
    }

    let mut usage: BTreeMap<usize, u64> = BTreeMap::new();
    for entry in &plan.entries {
        let sid = Some(entry.stream as u64);
        let Some(stream) = known.get(&entry.stream) else {
            report.push(violation(
                ViolationCode::UnknownStream,
                sid,
                format!("plan entry for unknown stream {}", entry.stream),
            ));
            continue;
        };

        // Forwarding path: connects src to dst, simple, devices only at the
        // endpoints.
        let path = &entry.path;
        if path.first() != Some(&stream.src) || path.last() != Some(&stream.dst) {
            report.push(violation(
                ViolationCode::PathEndpoint,
                sid,
                format!(
                    "path must run {} -> {}, got {:?}",
                    stream.src, stream.dst, path
                ),
            ));
        }
        check_walk(
            topo,
            path,
            sid,
            ViolationCode::PathDisconnected,
            ViolationCode::PathNotSimple,
            &mut report,
        );
        for &v in path.iter().skip(1).take(path.len().saturating_sub(2)) {
            if topo.vertex(v).map(|x| x.kind) == Some(VertexKind::Device) {
                report.push(violation(
                    ViolationCode::DeviceInterior,
                    sid,
                    format!("device {v} in the interior of the path"),
                ));
            }
        }

        if entry.observed {
            let Some(op) = entry.observation_point else {
                report.push(violation(
                    ViolationCode::ObservedWithoutOp,
                    sid,
                    "observed but no observation point".into(),
                ));
                continue;
            };
            if !topo.is_switch(op) {
                report.push(violation(
                    ViolationCode::OpNotSwitch,
                    sid,
                    format!("observation point {op} is not a switch"),
                ));
            }
            if path.len() < 2 || path[path.len() - 2] != op {
                report.push(violation(
                    ViolationCode::OpNotLastHop,
                    sid,
                    format!("op {op} is not the last traversed node before the destination"),
                ));
            }
            let Some(replica) = &entry.replica_path else {
                report.push(violation(
                    ViolationCode::ObservedWithoutReplica,
                    sid,
                    "observed but no replica path".into(),
                ));
                continue;
            };
            if replica.first() != Some(&op) {
                report.push(violation(
                    ViolationCode::ReplicaStart,
                    sid,
                    format!("replica must start at the observation point {op}"),
                ));
            }
            match replica.last() {
                Some(last) if ids_set.contains(last) => {}
                _ => report.push(violation(
                    ViolationCode::ReplicaEnd,
                    sid,
                    format!("replica must end at an IDS, got {:?}", replica.last()),
                )),
            }
            check_walk(
                topo,
                replica,
                sid,
                ViolationCode::ReplicaDisconnected,
                ViolationCode::ReplicaNotSimple,
                &mut report,
            );
            for &v in replica.iter().take(replica.len().saturating_sub(1)) {
                if topo.vertex(v).map(|x| x.kind) == Some(VertexKind::Device) {
                    report.push(violation(
                        ViolationCode::ReplicaDeviceInterior,
                        sid,
                        format!("device {v} on the replica path before the IDS"),
                    ));
                }
            }
        } else if entry.observation_point.is_some() || entry.replica_path.is_some() {
            report.push(violation(
                ViolationCode::StrayObservation,
                sid,
                "unobserved stream carries an observation point or replica path".into(),
            ));
        }

        // Accumulate bandwidth over edges that exist; structural breaks were
        // already reported.
        let mut charge = |p: &[VertexId]| {
            for pair in p.windows(2) {
                if let Some(ei) = topo.edge_between(pair[0], pair[1]) {
                    *usage.entry(ei).or_default() += stream.demand_bps;
                }
            }
        };
        charge(path);
        if let Some(replica) = &entry.replica_path {
            charge(replica);
        }
    }

    for (ei, used) in usage {
        let cap = inst.critical_capacity(ei);
        if used > cap {
            let e = topo.edge(ei);
            report.push(Violation {
                code: ViolationCode::CapacityExceeded,
                stream: None,
                edge: Some((e.from, e.to)),
                detail: format!(
                    "edge ({}, {}) carries {used} bps of critical traffic, capacity {cap}",
                    e.from, e.to
                ),
            });
        }
    }
    report
}

fn check_walk(
    topo: &crate::model::Topology,
    path: &[VertexId],
    stream: Option<u64>,
    disconnected: ViolationCode,
    not_simple: ViolationCode,
    report: &mut Vec<Violation>,
) {
    for pair in path.windows(2) {
        if topo.edge_between(pair[0], pair[1]).is_none() {
            report.push(Violation {
                code: disconnected,
                stream,
                edge: Some((pair[0], pair[1])),
                detail: format!("no edge ({}, {})", pair[0], pair[1]),
            });
        }
    }
    let distinct: BTreeSet<&VertexId> = path.iter().collect();
    if distinct.len() != path.len() {
        report.push(violation(
            not_simple,
            stream,
            format!("walk revisits a vertex: {path:?}"),
        ));
    }
}

/// Checks the on-line state: per-edge standard usage within the budget, and
/// the max-min condition (every stream is saturated on some edge where it
/// holds a maximal share).
pub fn check_online_state(state: &OnlineState) -> Vec<Violation> {
    let mut report = Vec::new();
    let inst = state.instance();
    let allocations = state.allocations();
    let edge_streams = state.edge_streams();

    let mut edge_sums: Vec<BigRational> = vec![BigRational::zero(); edge_streams.len()];
    for (ei, members) in edge_streams.iter().enumerate() {
        for id in members {
            if let Some(a) = allocations.get(id) {
                edge_sums[ei] += a;
            }
        }
        let beta = BigRational::from_integer(inst.beta()[ei].into());
        if edge_sums[ei] > beta {
            let e = inst.topology.edge(ei);
            report.push(Violation {
                code: ViolationCode::BudgetExceeded,
                stream: None,
                edge: Some((e.from, e.to)),
                detail: format!(
                    "edge ({}, {}) standard usage {} exceeds budget {}",
                    e.from,
                    e.to,
                    edge_sums[ei],
                    inst.beta()[ei]
                ),
            });
        }
    }

    for stream in state.streams() {
        let alloc = match allocations.get(&stream.id) {
            Some(a) => a,
            None => {
                report.push(violation(
                    ViolationCode::NotMaxMin,
                    Some(stream.id),
                    format!("stream {} has no allocation", stream.id),
                ));
                continue;
            }
        };
        let has_bottleneck = edge_streams.iter().enumerate().any(|(ei, members)| {
            if !members.contains(&stream.id) {
                return false;
            }
            let beta = BigRational::from_integer(inst.beta()[ei].into());
            if edge_sums[ei] != beta {
                return false;
            }
            members
                .iter()
                .all(|m| allocations.get(m).map_or(true, |a| a <= alloc))
        });
        if !has_bottleneck {
            report.push(violation(
                ViolationCode::NotMaxMin,
                Some(stream.id),
                format!(
                    "stream {} has no saturated edge where it holds a maximal share",
                    stream.id
                ),
            ));
        }
    }
    report
}
