//! ILP formulation of the offline routing problem and its export in CPLEX LP
//! text format.
//!
//! The model has one binary variable per (stream, edge) pair and one per
//! (stream, IDS, edge) triple for replicas. Constraints: per-edge capacity
//! over the critical share, per-stream flow conservation with unit demand,
//! replica conservation allowing a unit of replica flow only at the last hop
//! of the parent stream, and zero-fixings at device vertices. The objective
//! maximizes total normalized residual capacity plus a large reward `K` per
//! observed stream, with `K` strictly larger than the residual part's range.
//!
//! Rows and variables are generated lazily in a fixed deterministic order so
//! paper-scale models export in one streaming pass.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::model::{validate_topology, VertexId};
use crate::offline_solver::OfflinePlan;
use crate::topogen::Instance;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("instance topology is invalid: {0}")]
    InvalidTopology(String),
    #[error("no IDS designated in the topology")]
    MissingIds,
    #[error("IDS set is empty")]
    EmptyIdsSet,
    #[error("IDS {0} is not a device vertex")]
    IdsNotDevice(VertexId),
    #[error("stream {0}: endpoint is not a device vertex")]
    StreamEndpointNotDevice(u32),
    #[error("stream {0}: source equals destination")]
    StreamEndpointsEqual(u32),
    #[error("stream {0}: relevance must be >= 1")]
    InvalidRelevance(u32),
    #[error("edge ({0}, {1}) has zero critical capacity")]
    ZeroCriticalCapacity(VertexId, VertexId),
    #[error("IDS capacity constraint already added")]
    IdsCapacityTwice,
    #[error("IDS capacity constraint requires a single-IDS model")]
    IdsCapacityOnMulti,
    #[error("flow table limit for {0} is negative")]
    NegativeFlowTableLimit(VertexId),
    #[error("flow table key {0} is not a switch")]
    FlowTableKeyNotSwitch(VertexId),
    #[error("plan references unknown edge ({0}, {1})")]
    UnknownEdge(VertexId, VertexId),
    #[error("plan references unknown stream {0}")]
    UnknownStream(u32),
}

/// Reference to a binary decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    /// Stream `stream` routed through directed edge index `edge`.
    Crit { stream: u32, edge: u32 },
    /// Replica of `stream` bound for the IDS at position `ids` in the
    /// model's IDS list, routed through directed edge index `edge`.
    Rep { stream: u32, ids: u32, edge: u32 },
}

/// Exact rational coefficient in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coef {
    pub num: i128,
    pub den: u64,
}

impl Coef {
    fn ratio(num: i128, den: u64) -> Coef {
        debug_assert!(den > 0);
        let g = num.unsigned_abs().gcd(&(den as u128));
        if g <= 1 {
            return Coef { num, den };
        }
        Coef {
            num: num / g as i128,
            den: (den as u128 / g) as u64,
        }
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

/// One linear constraint. Constraint coefficients are always integral.
#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarRef, i64)>,
    pub sense: Sense,
    pub rhs: i128,
}

/// How a limited-IDS budget is expressed: weighted by replica demand
/// (unit-consistent) or as a plain count of observed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdsCapacityForm {
    BandwidthWeighted,
    ObservationCount,
}

/// Size summary of a built model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelSummary {
    pub streams: u64,
    pub directed_edges: u64,
    pub ids_count: u64,
    pub k: u64,
    pub binaries: u64,
    pub constraints: ConstraintCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintCounts {
    pub capacity: u64,
    pub conservation: u64,
    pub replica_conservation: u64,
    pub observation_link: u64,
    pub replica_source_zero: u64,
    pub device_zero: u64,
    pub replica_device_zero: u64,
    pub ids_capacity: u64,
    pub flow_table: u64,
    pub total: u64,
}

/// The ILP model over an instance. Rows, variables, and objective terms are
/// enumerated on demand in a fixed order; nothing is materialized.
pub struct IlpModel<'a> {
    inst: &'a Instance,
    ids_list: Vec<VertexId>,
    multi: bool,
    ids_capacity: Option<(u64, IdsCapacityForm)>,
    flow_table: Option<BTreeMap<VertexId, u64>>,
    k: u64,
    switches: Vec<VertexId>,
    vertices_sorted: Vec<VertexId>,
    /// (edge index, its unique device endpoint) for every device-adjacent edge.
    device_adjacent: Vec<(u32, VertexId)>,
    /// Directed-degree (in + out) per vertex.
    adj_count: BTreeMap<VertexId, u64>,
}

fn common_checks(inst: &Instance) -> Result<(), FormulationError> {
    let violations = validate_topology(&inst.topology);
    if let Some(v) = violations.first() {
        return Err(FormulationError::InvalidTopology(v.to_string()));
    }
    for s in &inst.critical {
        if !inst.topology.is_device(s.src) || !inst.topology.is_device(s.dst) {
            return Err(FormulationError::StreamEndpointNotDevice(s.id));
        }
        if s.src == s.dst {
            return Err(FormulationError::StreamEndpointsEqual(s.id));
        }
        if s.relevance == 0 {
            return Err(FormulationError::InvalidRelevance(s.id));
        }
    }
    for (i, e) in inst.topology.edges().iter().enumerate() {
        if inst.critical_capacity(i) == 0 {
            return Err(FormulationError::ZeroCriticalCapacity(e.from, e.to));
        }
    }
    Ok(())
}

fn model_from(inst: &Instance, ids_list: Vec<VertexId>, multi: bool) -> IlpModel<'_> {
    let switches: Vec<VertexId> = {
        let mut v: Vec<_> = inst.topology.switches().collect();
        v.sort();
        v
    };
    let vertices_sorted = {
        let mut v: Vec<_> = inst.topology.vertices().iter().map(|x| x.id).collect();
        v.sort();
        v
    };
    let mut device_adjacent = Vec::new();
    let mut adj_count: BTreeMap<VertexId, u64> = BTreeMap::new();
    for (i, e) in inst.topology.edges().iter().enumerate() {
        *adj_count.entry(e.from).or_default() += 1;
        *adj_count.entry(e.to).or_default() += 1;
        if inst.topology.is_device(e.from) {
            device_adjacent.push((i as u32, e.from));
        } else if inst.topology.is_device(e.to) {
            device_adjacent.push((i as u32, e.to));
        }
    }
    let k = inst.topology.edges().len() as u64 * inst.critical.len() as u64 + 1;
    IlpModel {
        inst,
        ids_list,
        multi,
        ids_capacity: None,
        flow_table: None,
        k,
        switches,
        vertices_sorted,
        device_adjacent,
        adj_count,
    }
}

/// Builds the base single-IDS model over the instance's designated IDS.
pub fn build_base(inst: &Instance) -> Result<IlpModel<'_>, FormulationError> {
    common_checks(inst)?;
    let ids = inst.topology.ids().ok_or(FormulationError::MissingIds)?;
    if !inst.topology.is_device(ids) {
        return Err(FormulationError::IdsNotDevice(ids));
    }
    Ok(model_from(inst, vec![ids], false))
}

/// Builds the multi-IDS variant: replicas carry a distinct variable set per
/// IDS and each stream may be observed by any one of them.
pub fn build_multi_ids<'a>(
    inst: &'a Instance,
    ids_set: &BTreeSet<VertexId>,
) -> Result<IlpModel<'a>, FormulationError> {
    common_checks(inst)?;
    if ids_set.is_empty() {
        return Err(FormulationError::EmptyIdsSet);
    }
    for &d in ids_set {
        if !inst.topology.is_device(d) {
            return Err(FormulationError::IdsNotDevice(d));
        }
    }
    Ok(model_from(inst, ids_set.iter().copied().collect(), true))
}

impl<'a> IlpModel<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    /// The observation reward weight: smallest integer strictly larger than
    /// the residual part's range |E|·|Crit|.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn ids_list(&self) -> &[VertexId] {
        &self.ids_list
    }

    pub fn is_multi(&self) -> bool {
        self.multi
    }

    /// Adds the limited-IDS budget constraint. Single-IDS models only, at
    /// most once.
    pub fn add_ids_capacity(
        &mut self,
        b_d: u64,
        form: IdsCapacityForm,
    ) -> Result<(), FormulationError> {
        if self.multi {
            return Err(FormulationError::IdsCapacityOnMulti);
        }
        if self.ids_capacity.is_some() {
            return Err(FormulationError::IdsCapacityTwice);
        }
        self.ids_capacity = Some((b_d, form));
        Ok(())
    }

    /// Adds per-switch flow-table (rule count) limits.
    pub fn add_flow_table_limits(
        &mut self,
        ft: &BTreeMap<VertexId, i64>,
    ) -> Result<(), FormulationError> {
        let mut checked = BTreeMap::new();
        for (&v, &limit) in ft {
            if limit < 0 {
                return Err(FormulationError::NegativeFlowTableLimit(v));
            }
            if !self.inst.topology.is_switch(v) {
                return Err(FormulationError::FlowTableKeyNotSwitch(v));
            }
            checked.insert(v, limit as u64);
        }
        self.flow_table = Some(checked);
        Ok(())
    }

    fn edge_count(&self) -> u32 {
        self.inst.topology.edges().len() as u32
    }

    /// Possible observation points of a stream: switches with an edge to its
    /// destination.
    fn l_sigma(&self, stream: &crate::model::CriticalStream) -> BTreeSet<VertexId> {
        crate::model::candidate_observation_points(&self.inst.topology, stream)
    }

    /// All binary variables, in export order: per stream, the routing
    /// variables (edge order) followed by its replica variables (IDS order,
    /// then edge order).
    pub fn for_each_var(&self, mut f: impl FnMut(VarRef)) {
        let edges = self.edge_count();
        for s in 0..self.inst.critical.len() as u32 {
            for e in 0..edges {
                f(VarRef::Crit { stream: s, edge: e });
            }
            for d in 0..self.ids_list.len() as u32 {
                for e in 0..edges {
                    f(VarRef::Rep {
                        stream: s,
                        ids: d,
                        edge: e,
                    });
                }
            }
        }
    }

    pub fn var_count(&self) -> u64 {
        self.inst.critical.len() as u64 * self.edge_count() as u64 * (1 + self.ids_list.len() as u64)
    }

    /// Writes the variable's LP name into `out`.
    pub fn var_name_into(&self, var: VarRef, out: &mut String) {
        let edge = |e: u32| self.inst.topology.edge(e as usize);
        match var {
            VarRef::Crit { stream, edge: e } => {
                let ed = edge(e);
                let sid = self.inst.critical[stream as usize].id;
                write!(out, "x_s{}_e{}_{}", sid, ed.from, ed.to).unwrap();
            }
            VarRef::Rep { stream, ids, edge: e } => {
                let ed = edge(e);
                let sid = self.inst.critical[stream as usize].id;
                if self.multi {
                    write!(out, "r_s{}_d{}_e{}_{}", sid, self.ids_list[ids as usize], ed.from, ed.to)
                        .unwrap();
                } else {
                    write!(out, "r_s{}_e{}_{}", sid, ed.from, ed.to).unwrap();
                }
            }
        }
    }

    pub fn var_name(&self, var: VarRef) -> String {
        let mut s = String::new();
        self.var_name_into(var, &mut s);
        s
    }

    /// Enumerates every constraint row in a fixed order, reusing one scratch
    /// row allocation.
    pub fn for_each_row(&self, mut f: impl FnMut(&Row)) {
        let topo = &self.inst.topology;
        let n_streams = self.inst.critical.len() as u32;
        let n_ids = self.ids_list.len() as u32;
        let mut row = Row {
            name: String::new(),
            terms: Vec::new(),
            sense: Sense::Le,
            rhs: 0,
        };

        // Capacity per edge over the critical share of the capacity.
        if n_streams > 0 {
            for (ei, e) in topo.edges().iter().enumerate() {
                row.name.clear();
                write!(row.name, "cap_e{}_{}", e.from, e.to).unwrap();
                row.terms.clear();
                for s in 0..n_streams {
                    let b = self.inst.critical[s as usize].demand_bps as i64;
                    row.terms.push((VarRef::Crit { stream: s, edge: ei as u32 }, b));
                    for d in 0..n_ids {
                        row.terms
                            .push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, b));
                    }
                }
                row.sense = Sense::Le;
                row.rhs = self.inst.critical_capacity(ei) as i128;
                f(&row);
            }
        }

        // Flow conservation and unit demand per stream.
        for (si, stream) in self.inst.critical.iter().enumerate() {
            let s = si as u32;
            for &v in &self.vertices_sorted {
                if v == stream.src || v == stream.dst {
                    continue;
                }
                row.name.clear();
                write!(row.name, "flow_s{}_v{}", stream.id, v).unwrap();
                row.terms.clear();
                for &ei in topo.out_edges(v) {
                    row.terms.push((VarRef::Crit { stream: s, edge: ei as u32 }, 1));
                }
                for &ei in topo.in_edges(v) {
                    row.terms.push((VarRef::Crit { stream: s, edge: ei as u32 }, -1));
                }
                row.sense = Sense::Eq;
                row.rhs = 0;
                f(&row);
            }
            row.name.clear();
            write!(row.name, "src_s{}", stream.id).unwrap();
            row.terms.clear();
            for &ei in topo.out_edges(stream.src) {
                row.terms.push((VarRef::Crit { stream: s, edge: ei as u32 }, 1));
            }
            row.sense = Sense::Eq;
            row.rhs = 1;
            f(&row);
            row.name.clear();
            write!(row.name, "dst_s{}", stream.id).unwrap();
            row.terms.clear();
            for &ei in topo.in_edges(stream.dst) {
                row.terms.push((VarRef::Crit { stream: s, edge: ei as u32 }, 1));
            }
            row.sense = Sense::Eq;
            row.rhs = 1;
            f(&row);
        }

        // Replica conservation: balanced on switches outside L_sigma, at most
        // one unit produced at the parent's last hop, none leaving an IDS.
        for (si, stream) in self.inst.critical.iter().enumerate() {
            let s = si as u32;
            let l_sigma = self.l_sigma(stream);
            for &v in &self.switches {
                if l_sigma.contains(&v) {
                    row.name.clear();
                    write!(row.name, "robs_s{}_v{}", stream.id, v).unwrap();
                    row.terms.clear();
                    for d in 0..n_ids {
                        for &ei in topo.out_edges(v) {
                            row.terms.push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, 1));
                        }
                        for &ei in topo.in_edges(v) {
                            row.terms
                                .push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, -1));
                        }
                    }
                    let vt = topo
                        .edge_between(v, stream.dst)
                        .expect("L_sigma member has an edge to the destination");
                    row.terms.push((VarRef::Crit { stream: s, edge: vt as u32 }, -1));
                    row.sense = Sense::Le;
                    row.rhs = 0;
                    f(&row);
                } else {
                    for d in 0..n_ids {
                        row.name.clear();
                        if self.multi {
                            write!(
                                row.name,
                                "rflow_s{}_d{}_v{}",
                                stream.id, self.ids_list[d as usize], v
                            )
                            .unwrap();
                        } else {
                            write!(row.name, "rflow_s{}_v{}", stream.id, v).unwrap();
                        }
                        row.terms.clear();
                        for &ei in topo.out_edges(v) {
                            row.terms.push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, 1));
                        }
                        for &ei in topo.in_edges(v) {
                            row.terms
                                .push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, -1));
                        }
                        row.sense = Sense::Eq;
                        row.rhs = 0;
                        f(&row);
                    }
                }
            }
            for d in 0..n_ids {
                let ids_v = self.ids_list[d as usize];
                for &ei in topo.out_edges(ids_v) {
                    let e = topo.edge(ei);
                    row.name.clear();
                    if self.multi {
                        write!(row.name, "rsrc_s{}_d{}_e{}_{}", stream.id, ids_v, e.from, e.to)
                            .unwrap();
                    } else {
                        write!(row.name, "rsrc_s{}_e{}_{}", stream.id, e.from, e.to).unwrap();
                    }
                    row.terms.clear();
                    row.terms.push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, 1));
                    row.sense = Sense::Eq;
                    row.rhs = 0;
                    f(&row);
                }
            }
        }

        // Devices have no switching capability: routing variables vanish on
        // every edge adjacent to a device that is not the stream's own
        // endpoint; replicas likewise except at their IDS.
        for (si, stream) in self.inst.critical.iter().enumerate() {
            let s = si as u32;
            for &(ei, dev) in &self.device_adjacent {
                if dev == stream.src || dev == stream.dst {
                    continue;
                }
                let e = topo.edge(ei as usize);
                row.name.clear();
                write!(row.name, "xdev_s{}_e{}_{}", stream.id, e.from, e.to).unwrap();
                row.terms.clear();
                row.terms.push((VarRef::Crit { stream: s, edge: ei }, 1));
                row.sense = Sense::Eq;
                row.rhs = 0;
                f(&row);
            }
        }
        for (si, stream) in self.inst.critical.iter().enumerate() {
            let s = si as u32;
            for d in 0..n_ids {
                let ids_v = self.ids_list[d as usize];
                for &(ei, dev) in &self.device_adjacent {
                    if dev == ids_v {
                        continue;
                    }
                    let e = topo.edge(ei as usize);
                    row.name.clear();
                    if self.multi {
                        write!(row.name, "rdev_s{}_d{}_e{}_{}", stream.id, ids_v, e.from, e.to)
                            .unwrap();
                    } else {
                        write!(row.name, "rdev_s{}_e{}_{}", stream.id, e.from, e.to).unwrap();
                    }
                    row.terms.clear();
                    row.terms.push((VarRef::Rep { stream: s, ids: d, edge: ei }, 1));
                    row.sense = Sense::Eq;
                    row.rhs = 0;
                    f(&row);
                }
            }
        }

        // Optional IDS inspection budget.
        if let Some((b_d, form)) = self.ids_capacity {
            let d_vertex = self.ids_list[0];
            row.name.clear();
            row.name.push_str("ids_cap");
            row.terms.clear();
            for (si, stream) in self.inst.critical.iter().enumerate() {
                let coef = match form {
                    IdsCapacityForm::BandwidthWeighted => stream.demand_bps as i64,
                    IdsCapacityForm::ObservationCount => 1,
                };
                for &ei in topo.in_edges(d_vertex) {
                    row.terms.push((
                        VarRef::Rep { stream: si as u32, ids: 0, edge: ei as u32 },
                        coef,
                    ));
                }
            }
            if !row.terms.is_empty() {
                row.sense = Sense::Le;
                row.rhs = b_d as i128;
                f(&row);
            }
        }

        // Optional per-switch rule-count limits.
        if let Some(ft) = &self.flow_table {
            for (&v, &limit) in ft {
                row.name.clear();
                write!(row.name, "ft_v{}", v).unwrap();
                row.terms.clear();
                for s in 0..n_streams {
                    for &ei in topo.out_edges(v) {
                        row.terms.push((VarRef::Crit { stream: s, edge: ei as u32 }, 1));
                        for d in 0..n_ids {
                            row.terms.push((VarRef::Rep { stream: s, ids: d, edge: ei as u32 }, 1));
                        }
                    }
                }
                if !row.terms.is_empty() {
                    row.sense = Sense::Le;
                    row.rhs = limit as i128;
                    f(&row);
                }
            }
        }
    }

    /// Collects all rows. Intended for small models and tests.
    pub fn rows(&self) -> Vec<Row> {
        let mut out = Vec::new();
        self.for_each_row(|r| out.push(r.clone()));
        out
    }

    /// Objective terms: per routing variable −B/C(e); replica variables
    /// additionally earn K·ρ when they enter their IDS.
    pub fn for_each_objective_term(&self, mut f: impl FnMut(VarRef, Coef)) {
        let topo = &self.inst.topology;
        let n_ids = self.ids_list.len() as u32;
        let entering: Vec<BTreeSet<u32>> = self
            .ids_list
            .iter()
            .map(|&d| topo.in_edges(d).iter().map(|&e| e as u32).collect())
            .collect();
        for (si, stream) in self.inst.critical.iter().enumerate() {
            let s = si as u32;
            let b = stream.demand_bps;
            for e in 0..self.edge_count() {
                let c = self.inst.critical_capacity(e as usize);
                f(
                    VarRef::Crit { stream: s, edge: e },
                    Coef::ratio(-(b as i128), c),
                );
            }
            for d in 0..n_ids {
                for e in 0..self.edge_count() {
                    let c = self.inst.critical_capacity(e as usize);
                    let mut num = -(b as i128);
                    if entering[d as usize].contains(&e) {
                        num += self.k as i128 * stream.relevance as i128 * c as i128;
                    }
                    f(VarRef::Rep { stream: s, ids: d, edge: e }, Coef::ratio(num, c));
                }
            }
        }
    }

    /// The objective's additive constant |Crit|·|E|.
    pub fn objective_constant(&self) -> u64 {
        self.inst.critical.len() as u64 * self.edge_count() as u64
    }

    /// Feasibility of a 0/1 assignment against every row. Missing variables
    /// are treated as zero. Intended for exhaustive checks on tiny models.
    pub fn assignment_feasible(&self, assign: &BTreeMap<VarRef, bool>) -> bool {
        let mut ok = true;
        self.for_each_row(|row| {
            if !ok {
                return;
            }
            let lhs: i128 = row
                .terms
                .iter()
                .map(|&(v, c)| {
                    if assign.get(&v).copied().unwrap_or(false) {
                        c as i128
                    } else {
                        0
                    }
                })
                .sum();
            ok = match row.sense {
                Sense::Le => lhs <= row.rhs,
                Sense::Eq => lhs == row.rhs,
            };
        });
        ok
    }

    /// Exact objective value of a 0/1 assignment.
    pub fn assignment_objective(&self, assign: &BTreeMap<VarRef, bool>) -> BigRational {
        let mut total = BigRational::from(BigInt::from(self.objective_constant()));
        self.for_each_objective_term(|v, coef| {
            if assign.get(&v).copied().unwrap_or(false) {
                total += coef.to_rational();
            }
        });
        total
    }

    /// Size summary computed in closed form (no row enumeration).
    pub fn summary(&self) -> ModelSummary {
        let topo = &self.inst.topology;
        let n = self.inst.critical.len() as u64;
        let e = self.edge_count() as u64;
        let d = self.ids_list.len() as u64;
        let n_switches = self.switches.len() as u64;
        let v = self.vertices_sorted.len() as u64;
        let device_adj_total = self.device_adjacent.len() as u64;
        let adj = |x: VertexId| self.adj_count.get(&x).copied().unwrap_or(0);
        let ids_outdeg: u64 = self
            .ids_list
            .iter()
            .map(|&x| topo.out_edges(x).len() as u64)
            .sum();

        let mut conservation = 0;
        let mut replica_conservation = 0;
        let mut observation_link = 0;
        let mut device_zero = 0;
        let mut replica_device_zero = 0;
        for stream in &self.inst.critical {
            let l = self.l_sigma(stream).len() as u64;
            conservation += v;
            observation_link += l;
            replica_conservation += (n_switches - l) * d;
            device_zero += device_adj_total - adj(stream.src) - adj(stream.dst);
            for &ids_v in &self.ids_list {
                replica_device_zero += device_adj_total - adj(ids_v);
            }
        }
        let counts = ConstraintCounts {
            capacity: if n > 0 { e } else { 0 },
            conservation,
            replica_conservation,
            observation_link,
            replica_source_zero: n * ids_outdeg,
            device_zero,
            replica_device_zero,
            ids_capacity: u64::from(self.ids_capacity.is_some() && n > 0),
            flow_table: if n > 0 {
                self.flow_table.as_ref().map(|x| x.len() as u64).unwrap_or(0)
            } else {
                0
            },
            total: 0,
        };
        let total = counts.capacity
            + counts.conservation
            + counts.replica_conservation
            + counts.observation_link
            + counts.replica_source_zero
            + counts.device_zero
            + counts.replica_device_zero
            + counts.ids_capacity
            + counts.flow_table;
        ModelSummary {
            streams: n,
            directed_edges: e,
            ids_count: d,
            k: self.k,
            binaries: self.var_count(),
            constraints: ConstraintCounts { total, ..counts },
        }
    }

    /// Streams the model in CPLEX LP text format. Output is byte-identical
    /// across exports of the same model.
    pub fn export_lp(&self, w: &mut impl Write) -> io::Result<()> {
        let mut line = LineWriter::new(w);
        line.raw("Maximize\n");
        line.begin(" obj:");
        let mut token = String::new();
        let mut any = false;
        self.for_each_objective_term(|v, coef| {
            if coef.num == 0 {
                return;
            }
            any = true;
            token.clear();
            token.push_str(if coef.num < 0 { "- " } else { "+ " });
            push_decimal(&mut token, coef.num.unsigned_abs(), coef.den as u128);
            token.push(' ');
            self.var_name_into(v, &mut token);
            line.push(&token);
        });
        let constant = self.objective_constant();
        if constant > 0 {
            token.clear();
            write!(token, "+ {constant}").unwrap();
            line.push(&token);
            any = true;
        }
        if !any {
            line.push("0");
        }
        line.end_line();

        line.raw("Subject To\n");
        let mut head = String::new();
        self.for_each_row(|row| {
            if line.failed() {
                return;
            }
            head.clear();
            write!(head, " {}:", row.name).unwrap();
            line.begin(&head);
            for &(v, c) in &row.terms {
                token.clear();
                token.push_str(if c < 0 { "- " } else { "+ " });
                if c.unsigned_abs() != 1 {
                    write!(token, "{} ", c.unsigned_abs()).unwrap();
                }
                self.var_name_into(v, &mut token);
                line.push(&token);
            }
            token.clear();
            match row.sense {
                Sense::Le => write!(token, "<= {}", row.rhs).unwrap(),
                Sense::Eq => write!(token, "= {}", row.rhs).unwrap(),
            }
            line.push(&token);
            line.end_line();
        });

        line.raw("Binary\n");
        self.for_each_var(|v| {
            if line.failed() {
                return;
            }
            token.clear();
            token.push(' ');
            self.var_name_into(v, &mut token);
            token.push('\n');
            line.raw(&token);
        });
        line.raw("End\n");
        line.finish()
    }
}

/// Evaluates the offline objective exactly for the 0/1 assignment induced by
/// a plan: normalized residual capacity over every edge plus K·ρ per
/// observed stream.
pub fn objective_value(inst: &Instance, plan: &OfflinePlan) -> Result<BigRational, FormulationError> {
    let topo = &inst.topology;
    let e_count = topo.edges().len() as u64;
    let k = e_count * inst.critical.len() as u64 + 1;
    let streams: BTreeMap<u32, &crate::model::CriticalStream> =
        inst.critical.iter().map(|s| (s.id, s)).collect();

    let mut total = BigRational::from(BigInt::from(e_count * inst.critical.len() as u64));
    for entry in &plan.entries {
        let stream = streams
            .get(&entry.stream)
            .ok_or(FormulationError::UnknownStream(entry.stream))?;
        let usage = |path: &[VertexId]| -> Result<BigRational, FormulationError> {
            let mut acc = BigRational::zero();
            for pair in path.windows(2) {
                let ei = topo
                    .edge_between(pair[0], pair[1])
                    .ok_or(FormulationError::UnknownEdge(pair[0], pair[1]))?;
                acc += BigRational::new(
                    BigInt::from(stream.demand_bps),
                    BigInt::from(inst.critical_capacity(ei)),
                );
            }
            Ok(acc)
        };
        total -= usage(&entry.path)?;
        if let Some(replica) = &entry.replica_path {
            total -= usage(replica)?;
        }
        if entry.observed {
            total += BigRational::from(BigInt::from(k * stream.relevance as u64));
        }
    }
    Ok(total)
}

/// Writes `num/den` as a decimal with at least 9 (up to 12) significant
/// digits, exactly when the expansion terminates sooner.
fn push_decimal(out: &mut String, mut num: u128, den: u128) {
    debug_assert!(den > 0);
    let int = num / den;
    num %= den;
    write!(out, "{int}").unwrap();
    if num == 0 {
        return;
    }
    out.push('.');
    let mut sig = if int == 0 {
        0
    } else {
        int.ilog10() as usize + 1
    };
    while num != 0 && sig < 12 {
        num *= 10;
        let digit = num / den;
        out.push((b'0' + digit as u8) as char);
        num %= den;
        if digit != 0 || sig > 0 {
            sig += 1;
        }
    }
}


/// Token-wrapping writer: keeps LP lines under a fixed width, indenting
/// continuation lines. The first I/O error is latched and surfaced by
/// `finish`, so row generation closures stay infallible.
struct LineWriter<'w, W: Write> {
    w: &'w mut W,
    line: String,
    err: Option<io::Error>,
}

const LINE_LIMIT: usize = 200;

impl<'w, W: Write> LineWriter<'w, W> {
    fn new(w: &'w mut W) -> Self {
        LineWriter {
            w,
            line: String::new(),
            err: None,
        }
    }

    fn write(&mut self, s: &str) {
        if self.err.is_none() {
            if let Err(e) = self.w.write_all(s.as_bytes()) {
                self.err = Some(e);
            }
        }
    }

    fn raw(&mut self, s: &str) {
        debug_assert!(self.line.is_empty());
        self.write(s);
    }

    fn begin(&mut self, head: &str) {
        self.line.clear();
        self.line.push_str(head);
    }

    fn push(&mut self, token: &str) {
        if self.line.len() + token.len() + 1 > LINE_LIMIT && !self.line.is_empty() {
            self.line.push('\n');
            let line = std::mem::take(&mut self.line);
            self.write(&line);
            self.line = line;
            self.line.clear();
            self.line.push_str("   ");
        }
        self.line.push(' ');
        self.line.push_str(token);
    }

    fn end_line(&mut self) {
        self.line.push('\n');
        let line = std::mem::take(&mut self.line);
        self.write(&line);
        self.line = line;
        self.line.clear();
    }

    fn failed(&self) -> bool {
        self.err.is_some()
    }

    fn finish(self) -> io::Result<()> {
        match self.err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}
