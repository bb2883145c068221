//! Core domain types: capacitated directed topologies partitioned into
//! switches and devices, critical streams, and replica specifications.
//!
//! A physical link is always represented by two oppositely directed edges.
//! Topologies are immutable after construction and safe to share read-only
//! across concurrent workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Identifier of a vertex within a [`Topology`]. Ids are dense integers
/// assigned in file order at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether a vertex can switch traffic (member of N) or is an attached end
/// device (member of M).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Switch,
    Device,
}

/// A network vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A directed capacitated edge. Capacity is in bits per second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub capacity_bps: u64,
}

/// A critical stream: a design-time-known unidirectional flow between two
/// devices, with a fixed bandwidth demand and an observation relevance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalStream {
    pub id: u32,
    pub src: VertexId,
    pub dst: VertexId,
    pub demand_bps: u64,
    pub relevance: u32,
}

/// A replica stream specification: originates at an observation point
/// (a switch adjacent to the parent stream's destination) and terminates at
/// an IDS device, with the same demand as its parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaSpec {
    pub source: VertexId,
    pub dest: VertexId,
    pub demand_bps: u64,
}

impl ReplicaSpec {
    /// Builds the replica spec for `stream` observed at `op` and inspected by
    /// the IDS `ids`. The demand always equals the parent stream's demand.
    pub fn for_stream(stream: &CriticalStream, op: VertexId, ids: VertexId) -> ReplicaSpec {
        ReplicaSpec {
            source: op,
            dest: ids,
            demand_bps: stream.demand_bps,
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("edge ({0}, {1}) has no oppositely directed twin of equal capacity")]
    NotLinkSymmetric(VertexId, VertexId),
}

/// A directed capacitated graph partitioned into switches (N) and devices
/// (M), with an optional designated IDS device.
///
/// Construction is permissive: structural invariants are not enforced here
/// but reported by [`validate_topology`], so that invalid inputs can be
/// described rather than rejected opaquely.
#[derive(Debug, Clone)]
pub struct Topology {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    ids: Option<VertexId>,
    vert_index: BTreeMap<VertexId, usize>,
    edge_index: BTreeMap<(VertexId, VertexId), usize>,
    out_adj: BTreeMap<VertexId, Vec<usize>>,
    in_adj: BTreeMap<VertexId, Vec<usize>>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges && self.ids == other.ids
    }
}

impl Topology {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>, ids: Option<VertexId>) -> Topology {
        let mut vert_index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            vert_index.entry(v.id).or_insert(i);
        }
        let mut edge_index = BTreeMap::new();
        let mut out_adj: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
        let mut in_adj: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            edge_index.entry((e.from, e.to)).or_insert(i);
            out_adj.entry(e.from).or_default().push(i);
            in_adj.entry(e.to).or_default().push(i);
        }
        Topology {
            vertices,
            edges,
            ids,
            vert_index,
            edge_index,
            out_adj,
            in_adj,
        }
    }

    /// Builds a topology from physical links, expanding each link into two
    /// oppositely directed edges of equal capacity (in link order).
    pub fn from_links(
        vertices: Vec<Vertex>,
        links: &[(VertexId, VertexId, u64)],
        ids: Option<VertexId>,
    ) -> Topology {
        let mut edges = Vec::with_capacity(links.len() * 2);
        for &(a, b, cap) in links {
            edges.push(Edge {
                from: a,
                to: b,
                capacity_bps: cap,
            });
            edges.push(Edge {
                from: b,
                to: a,
                capacity_bps: cap,
            });
        }
        Topology::new(vertices, edges, ids)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn ids(&self) -> Option<VertexId> {
        self.ids
    }

    pub fn vertex(&self, v: VertexId) -> Option<&Vertex> {
        self.vert_index.get(&v).map(|&i| &self.vertices[i])
    }

    pub fn is_switch(&self, v: VertexId) -> bool {
        matches!(self.vertex(v).map(|x| x.kind), Some(VertexKind::Switch))
    }

    pub fn is_device(&self, v: VertexId) -> bool {
        matches!(self.vertex(v).map(|x| x.kind), Some(VertexKind::Device))
    }

    pub fn switches(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Switch)
            .map(|v| v.id)
    }

    pub fn devices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Device)
            .map(|v| v.id)
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    /// Index of the directed edge (a, b), if present.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<usize> {
        self.edge_index.get(&(a, b)).copied()
    }

    /// Indices of edges leaving `v`.
    pub fn out_edges(&self, v: VertexId) -> &[usize] {
        self.out_adj.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Indices of edges entering `v`.
    pub fn in_edges(&self, v: VertexId) -> &[usize] {
        self.in_adj.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Collapses the directed edge set back into physical links, in edge
    /// order. Fails if some edge has no equal-capacity twin.
    pub fn physical_links(&self) -> Result<Vec<(VertexId, VertexId, u64)>, ModelError> {
        let mut links = Vec::with_capacity(self.edges.len() / 2);
        for (i, e) in self.edges.iter().enumerate() {
            let rev = self
                .edge_between(e.to, e.from)
                .ok_or(ModelError::NotLinkSymmetric(e.from, e.to))?;
            if self.edges[rev].capacity_bps != e.capacity_bps {
                return Err(ModelError::NotLinkSymmetric(e.from, e.to));
            }
            if i < rev {
                links.push((e.from, e.to, e.capacity_bps));
            }
        }
        Ok(links)
    }
}

/// Serialized form of [`Topology`]: vertices plus physical links.
#[derive(Serialize, Deserialize)]
struct TopologyFile {
    vertices: Vec<Vertex>,
    links: Vec<LinkRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ids: Option<VertexId>,
}

#[derive(Serialize, Deserialize)]
struct LinkRecord {
    a: VertexId,
    b: VertexId,
    capacity_bps: u64,
}

impl Serialize for Topology {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let links = self
            .physical_links()
            .map_err(|e| serde::ser::Error::custom(e.to_string()))?
            .into_iter()
            .map(|(a, b, capacity_bps)| LinkRecord { a, b, capacity_bps })
            .collect();
        TopologyFile {
            vertices: self.vertices.clone(),
            links,
            ids: self.ids,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Topology {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = TopologyFile::deserialize(deserializer)?;
        if file.links.is_empty() && file.vertices.is_empty() {
            return Err(D::Error::custom("empty topology"));
        }
        let links: Vec<(VertexId, VertexId, u64)> = file
            .links
            .iter()
            .map(|l| (l.a, l.b, l.capacity_bps))
            .collect();
        Ok(Topology::from_links(file.vertices, &links, file.ids))
    }
}

/// A violation of the structural topology invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyViolation {
    DuplicateVertexId(VertexId),
    UnknownEndpoint { from: VertexId, to: VertexId },
    DuplicateEdge { from: VertexId, to: VertexId },
    SelfLoop(VertexId),
    DeviceDeviceEdge { from: VertexId, to: VertexId },
    ZeroCapacity { from: VertexId, to: VertexId },
    IdsUnknown(VertexId),
    IdsNotDevice(VertexId),
}

impl TopologyViolation {
    pub fn code(&self) -> &'static str {
        match self {
            TopologyViolation::DuplicateVertexId(_) => "duplicate-vertex-id",
            TopologyViolation::UnknownEndpoint { .. } => "unknown-endpoint",
            TopologyViolation::DuplicateEdge { .. } => "duplicate-edge",
            TopologyViolation::SelfLoop(_) => "self-loop",
            TopologyViolation::DeviceDeviceEdge { .. } => "device-device-edge",
            TopologyViolation::ZeroCapacity { .. } => "zero-capacity",
            TopologyViolation::IdsUnknown(_) => "ids-unknown",
            TopologyViolation::IdsNotDevice(_) => "ids-not-device",
        }
    }
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyViolation::DuplicateVertexId(v) => write!(f, "duplicate vertex id {v}"),
            TopologyViolation::UnknownEndpoint { from, to } => {
                write!(f, "edge ({from}, {to}) references an unknown vertex")
            }
            TopologyViolation::DuplicateEdge { from, to } => {
                write!(f, "duplicate edge ({from}, {to})")
            }
            TopologyViolation::SelfLoop(v) => write!(f, "self-loop at {v}"),
            TopologyViolation::DeviceDeviceEdge { from, to } => {
                write!(f, "device-device edge ({from}, {to})")
            }
            TopologyViolation::ZeroCapacity { from, to } => {
                write!(f, "edge ({from}, {to}) has zero capacity")
            }
            TopologyViolation::IdsUnknown(v) => write!(f, "IDS not in M: unknown vertex {v}"),
            TopologyViolation::IdsNotDevice(v) => {
                write!(f, "IDS not in M: vertex {v} is a switch")
            }
        }
    }
}

/// Checks every structural invariant of a topology. An empty report means
/// the topology is well-formed. Violations are data, not failures.
pub fn validate_topology(t: &Topology) -> Vec<TopologyViolation> {
    let mut report = Vec::new();
    let mut seen = BTreeSet::new();
    for v in t.vertices() {
        if !seen.insert(v.id) {
            report.push(TopologyViolation::DuplicateVertexId(v.id));
        }
    }
    let mut seen_edges = BTreeSet::new();
    for e in t.edges() {
        if t.vertex(e.from).is_none() || t.vertex(e.to).is_none() {
            report.push(TopologyViolation::UnknownEndpoint {
                from: e.from,
                to: e.to,
            });
            continue;
        }
        if !seen_edges.insert((e.from, e.to)) {
            report.push(TopologyViolation::DuplicateEdge {
                from: e.from,
                to: e.to,
            });
        }
        if e.from == e.to {
            report.push(TopologyViolation::SelfLoop(e.from));
        }
        if t.is_device(e.from) && t.is_device(e.to) {
            report.push(TopologyViolation::DeviceDeviceEdge {
                from: e.from,
                to: e.to,
            });
        }
        if e.capacity_bps == 0 {
            report.push(TopologyViolation::ZeroCapacity {
                from: e.from,
                to: e.to,
            });
        }
    }
    if let Some(d) = t.ids() {
        match t.vertex(d) {
            None => report.push(TopologyViolation::IdsUnknown(d)),
            Some(v) if v.kind == VertexKind::Switch => {
                report.push(TopologyViolation::IdsNotDevice(d))
            }
            Some(_) => {}
        }
    }
    report
}

/// Sum of the capacities of all physical links incident to `v`, counting
/// each physical link once (one direction).
pub fn incident_bandwidth_sum(t: &Topology, v: VertexId) -> Result<u64, ModelError> {
    if t.vertex(v).is_none() {
        return Err(ModelError::UnknownVertex(v));
    }
    let mut neighbors = BTreeSet::new();
    for &ei in t.out_edges(v) {
        neighbors.insert(t.edge(ei).to);
    }
    for &ei in t.in_edges(v) {
        neighbors.insert(t.edge(ei).from);
    }
    let mut sum = 0u64;
    for w in neighbors {
        let cap = t
            .edge_between(v, w)
            .or_else(|| t.edge_between(w, v))
            .map(|ei| t.edge(ei).capacity_bps)
            .unwrap_or(0);
        sum += cap;
    }
    Ok(sum)
}

/// The candidate observation points of a stream: exactly the switches with a
/// directed edge to the stream's destination.
pub fn candidate_observation_points(t: &Topology, stream: &CriticalStream) -> BTreeSet<VertexId> {
    t.in_edges(stream.dst)
        .iter()
        .map(|&ei| t.edge(ei).from)
        .filter(|&v| t.is_switch(v))
        .collect()
}
