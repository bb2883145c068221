//! Routing and monitoring planner for industrial control system (ICS)
//! networks built on SDN switches.
//!
//! The library models an ICS network as a directed capacitated graph whose
//! vertices are either switches or end devices, with one (or more) intrusion
//! detection sinks among the devices. Critical traffic streams, known at
//! design time, are routed together with their mirrored replica streams by an
//! exact offline optimizer (or exported as an ILP in LP text format for
//! external solvers). Occasional standard streams are admitted on-line with
//! widest-path routing and max-min fair (water-filling) bandwidth assignment
//! out of a reserved budget, so that critical reservations are never touched.
//!
//! Modules:
//! - [`model`]: domain types and graph primitives.
//! - [`graphml`]: backbone import from a GraphML subset.
//! - [`topogen`]: evaluation-instance generation (substations, IDS placement,
//!   budget reservation).
//! - [`formulation`]: ILP construction and LP-format export.
//! - [`offline_solver`]: exact desk-scale optimizer for critical streams.
//! - [`online_solver`]: on-line admission of standard streams.
//! - [`simulator`]: workload generation and replay.
//! - [`verify`]: independent plan and state checker.

pub mod formulation;
pub mod graphml;
pub mod model;
pub mod offline_solver;
pub mod online_solver;
pub mod simulator;
pub mod topogen;
pub mod verify;

pub use model::{
    candidate_observation_points, incident_bandwidth_sum, validate_topology, CriticalStream, Edge,
    ModelError, ReplicaSpec, Topology, TopologyViolation, Vertex, VertexId, VertexKind,
};
pub use offline_solver::{OfflinePlan, PlanEntry, SolveConfig, SolveStatus};
pub use online_solver::{OnlineState, StandardStream};
pub use topogen::{Instance, SubstationTemplate};
