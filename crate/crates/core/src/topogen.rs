//! Reconstruction of evaluation instances: imports a backbone of routers,
//! attaches electrical substations following a decreasing power law over the
//! routers' incident bandwidth, places one IDS at the best-connected router,
//! instantiates the per-substation critical streams, and reserves a per-edge
//! bandwidth budget for standard streams.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    incident_bandwidth_sum, validate_topology, CriticalStream, Topology, Vertex, VertexId,
    VertexKind,
};

/// Capacity of substation-internal links and access-switch uplinks.
pub const SUBSTATION_LINK_BPS: u64 = 1_000_000_000;
/// Capacity of the IDS attachment link.
pub const IDS_LINK_BPS: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum TopogenError {
    #[error("backbone has no vertices")]
    EmptyBackbone,
    #[error("backbone is not a valid topology: {0}")]
    InvalidBackbone(String),
    #[error("backbone vertex {0} is not a switch")]
    NonSwitchBackbone(VertexId),
    #[error("alpha {0} outside [0.7, 1.0]")]
    AlphaOutOfRange(f64),
    #[error("reserve fraction must satisfy 0 <= f < 1, got {0}")]
    FractionOutOfRange(Ratio<u64>),
    #[error("unparseable fraction {0:?}")]
    BadFraction(String),
    #[error("instance has no backbone routers")]
    NoBackbone,
}

/// One row of the substation equipment table: a device role, how many
/// instances a substation holds, and the bandwidth demands of the two
/// streams exchanged with the SCADA server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub role: DeviceRole,
    pub quantity: u32,
    pub from_scada_bps: u64,
    pub to_scada_bps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceRole {
    VoltageMeter,
    CircuitSwitch,
    Breaker,
    CurrentMeter,
    PowerTransformer,
    Hmi,
    HistorianDb,
}

impl DeviceRole {
    fn short(self) -> &'static str {
        match self {
            DeviceRole::VoltageMeter => "vm",
            DeviceRole::CircuitSwitch => "cs",
            DeviceRole::Breaker => "br",
            DeviceRole::CurrentMeter => "cm",
            DeviceRole::PowerTransformer => "pt",
            DeviceRole::Hmi => "hmi",
            DeviceRole::HistorianDb => "db",
        }
    }
}

/// Equipment of one substation. Besides the listed devices every substation
/// holds one SCADA server and two access switches; each device is dual-homed
/// to both access switches and both switches uplink to the city router.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstationTemplate {
    pub rows: Vec<DeviceSpec>,
}

impl SubstationTemplate {
    /// Devices per substation including the SCADA server.
    pub fn device_count(&self) -> u32 {
        1 + self.rows.iter().map(|r| r.quantity).sum::<u32>()
    }

    /// Vertices a substation contributes: devices plus two access switches.
    pub fn vertex_count(&self) -> u32 {
        self.device_count() + 2
    }

    /// Physical links a substation contributes: every device dual-homed plus
    /// the two uplinks.
    pub fn link_count(&self) -> u32 {
        2 * self.device_count() + 2
    }

    /// Unidirectional critical streams per substation: two per device, both
    /// with the SCADA server as the other endpoint.
    pub fn stream_count(&self) -> u32 {
        2 * self.rows.iter().map(|r| r.quantity).sum::<u32>()
    }
}

/// The substation equipment table used for the evaluation instances.
/// Table values in Kbps are stored as integer bits per second.
pub fn substation_template() -> SubstationTemplate {
    let row = |role, quantity, from_scada_bps, to_scada_bps| DeviceSpec {
        role,
        quantity,
        from_scada_bps,
        to_scada_bps,
    };
    SubstationTemplate {
        rows: vec![
            row(DeviceRole::VoltageMeter, 2, 10_000, 100_000),
            row(DeviceRole::CircuitSwitch, 2, 1_500, 1_500),
            row(DeviceRole::Breaker, 2, 1_500, 1_500),
            row(DeviceRole::CurrentMeter, 2, 10_000, 100_000),
            row(DeviceRole::PowerTransformer, 1, 50_000, 500_000),
            row(DeviceRole::Hmi, 1, 30_000_000, 3_000_000),
            row(DeviceRole::HistorianDb, 1, 30_000_000, 3_000_000),
        ],
    }
}

/// A generated (or loaded) problem instance: the full topology, the critical
/// streams, and the per-edge standard-stream budget β. For every edge,
/// β(e) + critical capacity = original capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    pub topology: Topology,
    pub critical: Vec<CriticalStream>,
    beta: Vec<u64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub backbone: Vec<VertexId>,
    pub substations: u32,
}

impl Instance {
    /// Wraps a hand-built topology and stream set: no budget reserved, all
    /// switches treated as backbone routers.
    pub fn from_parts(topology: Topology, critical: Vec<CriticalStream>) -> Instance {
        let beta = vec![0; topology.edges().len()];
        let backbone = topology.switches().collect();
        Instance {
            topology,
            critical,
            beta,
            alpha: None,
            seed: 0,
            backbone,
            substations: 0,
        }
    }

    /// Per-edge standard-stream budget, parallel to `topology.edges()`.
    pub fn beta(&self) -> &[u64] {
        &self.beta
    }

    pub fn set_beta(&mut self, beta: Vec<u64>) {
        assert_eq!(beta.len(), self.topology.edges().len());
        self.beta = beta;
    }

    /// Capacity of edge `idx` available to critical and replica streams.
    pub fn critical_capacity(&self, idx: usize) -> u64 {
        self.topology.edge(idx).capacity_bps - self.beta[idx]
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    topology: Topology,
    critical: Vec<CriticalStream>,
    beta: Vec<BetaRecord>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    seed: u64,
    backbone: Vec<VertexId>,
    #[serde(default)]
    substations: u32,
}

#[derive(Serialize, Deserialize)]
struct BetaRecord {
    from: VertexId,
    to: VertexId,
    beta_bps: u64,
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> InstanceFile {
        let beta = inst
            .topology
            .edges()
            .iter()
            .zip(&inst.beta)
            .map(|(e, &b)| BetaRecord {
                from: e.from,
                to: e.to,
                beta_bps: b,
            })
            .collect();
        InstanceFile {
            topology: inst.topology,
            critical: inst.critical,
            beta,
            alpha: inst.alpha,
            seed: inst.seed,
            backbone: inst.backbone,
            substations: inst.substations,
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = String;

    fn try_from(file: InstanceFile) -> Result<Instance, String> {
        let mut beta = vec![0u64; file.topology.edges().len()];
        for rec in &file.beta {
            let idx = file
                .topology
                .edge_between(rec.from, rec.to)
                .ok_or_else(|| format!("beta record for unknown edge ({}, {})", rec.from, rec.to))?;
            beta[idx] = rec.beta_bps;
        }
        Ok(Instance {
            topology: file.topology,
            critical: file.critical,
            beta,
            alpha: file.alpha,
            seed: file.seed,
            backbone: file.backbone,
            substations: file.substations,
        })
    }
}

/// Exact substation counts for routers in power-law rank order: the router
/// at 1-based position `i` receives ⌊10 / i^(p/100)⌋ substations.
///
/// Computed in exact integer arithmetic (k ≤ ⌊10/i^α⌋ iff k^100·i^p ≤ 10^100)
/// so counts never depend on floating-point rounding.
fn substation_counts(n_routers: usize, alpha_hundredths: u32) -> Vec<u32> {
    let bound = BigUint::from(10u32).pow(100);
    let k_pow: Vec<BigUint> = (0u32..=10).map(|k| BigUint::from(k).pow(100)).collect();
    (1..=n_routers as u64)
        .map(|i| {
            let i_pow = BigUint::from(i).pow(alpha_hundredths);
            (0u32..=10)
                .rev()
                .find(|&k| &k_pow[k as usize] * &i_pow <= bound)
                .unwrap_or(0)
        })
        .collect()
}

fn alpha_hundredths(alpha: f64) -> Result<u32, TopogenError> {
    if !(0.7..=1.0).contains(&alpha) {
        return Err(TopogenError::AlphaOutOfRange(alpha));
    }
    // alpha is interpreted on the hundredth grid used by find_alpha.
    Ok((alpha * 100.0).round() as u32)
}

/// Total number of substations a backbone of `n_routers` receives at the
/// given grid exponent.
pub fn substation_total(n_routers: usize, alpha: f64) -> Result<u32, TopogenError> {
    let p = alpha_hundredths(alpha)?;
    Ok(substation_counts(n_routers, p).iter().sum())
}

fn backbone_ranking(backbone: &Topology) -> Vec<VertexId> {
    let mut ranked: Vec<(u64, VertexId)> = backbone
        .vertices()
        .iter()
        .map(|v| (incident_bandwidth_sum(backbone, v.id).unwrap_or(0), v.id))
        .collect();
    // Descending incident bandwidth, ties by ascending id.
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, v)| v).collect()
}

/// Attaches substations to a backbone of routers and places the IDS.
///
/// Routers are ranked by descending incident bandwidth (ties by ascending
/// id); the router at rank `i` receives ⌊10/i^alpha⌋ substations. Every
/// substation contributes 12 devices dual-homed to two access switches that
/// both uplink to the router, plus the per-substation critical streams. One
/// IDS device is attached to the top-ranked router.
pub fn attach_substations(
    backbone: &Topology,
    tmpl: &SubstationTemplate,
    alpha: f64,
    seed: u64,
) -> Result<Instance, TopogenError> {
    if backbone.vertices().is_empty() {
        return Err(TopogenError::EmptyBackbone);
    }
    let violations = validate_topology(backbone);
    if !violations.is_empty() {
        return Err(TopogenError::InvalidBackbone(violations[0].to_string()));
    }
    if let Some(v) = backbone.vertices().iter().find(|v| v.kind != VertexKind::Switch) {
        return Err(TopogenError::NonSwitchBackbone(v.id));
    }
    let p = alpha_hundredths(alpha)?;

    let ranking = backbone_ranking(backbone);
    let counts = substation_counts(ranking.len(), p);

    let mut vertices = backbone.vertices().to_vec();
    let mut links = backbone
        .physical_links()
        .map_err(|e| TopogenError::InvalidBackbone(e.to_string()))?;
    let mut next_id = vertices.iter().map(|v| v.id.0 + 1).max().unwrap_or(0);
    let mut fresh = |kind, label: String, vertices: &mut Vec<Vertex>| {
        let id = VertexId(next_id);
        next_id += 1;
        vertices.push(Vertex {
            id,
            kind,
            label: Some(label),
        });
        id
    };

    let mut critical = Vec::new();
    let mut stream_id = 0u32;
    let mut sub_idx = 0u32;
    for (pos, &router) in ranking.iter().enumerate() {
        for _ in 0..counts[pos] {
            let sw = [
                fresh(VertexKind::Switch, format!("s{sub_idx}-sw0"), &mut vertices),
                fresh(VertexKind::Switch, format!("s{sub_idx}-sw1"), &mut vertices),
            ];
            let scada = fresh(VertexKind::Device, format!("s{sub_idx}-scada"), &mut vertices);
            let mut devices = vec![scada];
            for row in &tmpl.rows {
                for k in 0..row.quantity {
                    let dev = fresh(
                        VertexKind::Device,
                        format!("s{}-{}{}", sub_idx, row.role.short(), k),
                        &mut vertices,
                    );
                    devices.push(dev);
                    critical.push(CriticalStream {
                        id: stream_id,
                        src: scada,
                        dst: dev,
                        demand_bps: row.from_scada_bps,
                        relevance: 1,
                    });
                    critical.push(CriticalStream {
                        id: stream_id + 1,
                        src: dev,
                        dst: scada,
                        demand_bps: row.to_scada_bps,
                        relevance: 1,
                    });
                    stream_id += 2;
                }
            }
            for &dev in &devices {
                links.push((dev, sw[0], SUBSTATION_LINK_BPS));
                links.push((dev, sw[1], SUBSTATION_LINK_BPS));
            }
            links.push((sw[0], router, SUBSTATION_LINK_BPS));
            links.push((sw[1], router, SUBSTATION_LINK_BPS));
            sub_idx += 1;
        }
    }

    let ids = fresh(VertexKind::Device, "ids".to_string(), &mut vertices);
    links.push((ids, ranking[0], IDS_LINK_BPS));

    let topology = Topology::from_links(vertices, &links, Some(ids));
    let beta = vec![0; topology.edges().len()];
    Ok(Instance {
        topology,
        critical,
        beta,
        alpha: Some(p as f64 / 100.0),
        seed,
        backbone: backbone.vertices().iter().map(|v| v.id).collect(),
        substations: counts.iter().sum(),
    })
}

/// Smallest exponent on the grid {0.70, 0.71, …, 1.00} whose power-law
/// substation total equals `q_target`, or `None` if no grid value matches.
pub fn find_alpha(backbone: &Topology, q_target: u32) -> Option<f64> {
    let n = backbone.vertices().len();
    (70..=100)
        .find(|&p| substation_counts(n, p).iter().sum::<u32>() == q_target)
        .map(|p| p as f64 / 100.0)
}

/// Grid exponent whose substation total is closest to `q_target`
/// (ties: smallest exponent). Returns the exponent and the total achieved.
pub fn nearest_alpha(backbone: &Topology, q_target: u32) -> (f64, u32) {
    let n = backbone.vertices().len();
    let mut best = (70u32, substation_counts(n, 70).iter().sum::<u32>());
    for p in 71..=100 {
        let q: u32 = substation_counts(n, p).iter().sum();
        if q.abs_diff(q_target) < best.1.abs_diff(q_target) {
            best = (p, q);
        }
    }
    (best.0 as f64 / 100.0, best.1)
}

/// Parses a decimal fraction such as "0.05" into an exact rational.
pub fn parse_fraction(s: &str) -> Result<Ratio<u64>, TopogenError> {
    let bad = || TopogenError::BadFraction(s.to_string());
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || frac_part.len() > 18
    {
        return Err(bad());
    }
    let int: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let den = 10u64.pow(frac_part.len() as u32);
    let frac: u64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| bad())?
    };
    let num = int.checked_mul(den).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

/// Reserves a fraction of every edge's capacity as the standard-stream
/// budget: β(e) = ⌊fraction · C(e)⌋, leaving C(e) − β(e) for critical use.
pub fn reserve_standard_fraction(
    inst: &Instance,
    fraction: Ratio<u64>,
) -> Result<Instance, TopogenError> {
    if fraction >= Ratio::new(1, 1) {
        return Err(TopogenError::FractionOutOfRange(fraction));
    }
    let mut out = inst.clone();
    out.beta = inst
        .topology
        .edges()
        .iter()
        .map(|e| {
            let num = e.capacity_bps as u128 * *fraction.numer() as u128;
            (num / *fraction.denom() as u128) as u64
        })
        .collect();
    Ok(out)
}

/// The backbone router with the largest incident bandwidth, counting only
/// links between backbone routers (ties: lowest id). The IDS device hangs
/// off this router in generated instances.
pub fn place_ids(inst: &Instance) -> Result<VertexId, TopogenError> {
    if inst.backbone.is_empty() {
        return Err(TopogenError::NoBackbone);
    }
    let members: BTreeSet<VertexId> = inst.backbone.iter().copied().collect();
    let mut best: Option<(u64, VertexId)> = None;
    for &r in &inst.backbone {
        let mut sum = 0u64;
        let t = &inst.topology;
        let mut neighbors = BTreeSet::new();
        for &ei in t.out_edges(r) {
            neighbors.insert(t.edge(ei).to);
        }
        for &ei in t.in_edges(r) {
            neighbors.insert(t.edge(ei).from);
        }
        for w in neighbors {
            if !members.contains(&w) {
                continue;
            }
            sum += t
                .edge_between(r, w)
                .or_else(|| t.edge_between(w, r))
                .map(|ei| t.edge(ei).capacity_bps)
                .unwrap_or(0);
        }
        let better = match best {
            None => true,
            Some((b, v)) => sum > b || (sum == b && r < v),
        };
        if better {
            best = Some((sum, r));
        }
    }
    Ok(best.expect("non-empty backbone").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn switch(id: u32) -> Vertex {
        Vertex {
            id: VertexId(id),
            kind: VertexKind::Switch,
            label: None,
        }
    }

    /// A 10-router, 9-link tree backbone shaped like the smallest evaluation
    /// backbone: hub at 0, secondary hub at 1.
    fn tree10() -> Topology {
        let caps = [
            (0, 1, 600_000_000),
            (0, 3, 200_000_000),
            (0, 4, 200_000_000),
            (0, 6, 400_000_000),
            (0, 8, 200_000_000),
            (0, 7, 200_000_000),
            (1, 2, 400_000_000),
            (1, 5, 200_000_000),
            (6, 9, 200_000_000),
        ];
        let links: Vec<_> = caps
            .iter()
            .map(|&(a, b, c)| (VertexId(a), VertexId(b), c))
            .collect();
        Topology::from_links((0..10).map(switch).collect(), &links, None)
    }

    #[test]
    fn template_matches_equipment_table() {
        let t = substation_template();
        let hmi = t.rows.iter().find(|r| r.role == DeviceRole::Hmi).unwrap();
        assert_eq!(hmi.from_scada_bps, 30_000_000);
        assert_eq!(hmi.to_scada_bps, 3_000_000);
        let br = t.rows.iter().find(|r| r.role == DeviceRole::Breaker).unwrap();
        assert_eq!((br.from_scada_bps, br.to_scada_bps), (1_500, 1_500));
        assert_eq!(t.device_count(), 12);
        assert_eq!(t.stream_count(), 22);
        assert_eq!(t.vertex_count(), 14);
        assert_eq!(t.link_count(), 26);
    }

    #[test]
    fn power_law_totals() {
        // Direct summation of ⌊10/i^0.7⌋ over the first ranks.
        assert_eq!(substation_counts(10, 70), vec![10, 6, 4, 3, 3, 2, 2, 2, 2, 1]);
        assert_eq!(substation_total(10, 0.7).unwrap(), 35);
        assert_eq!(substation_total(25, 0.7).unwrap(), 50);
    }

    #[test]
    fn attach_reproduces_count_formulas() {
        let backbone = tree10();
        let tmpl = substation_template();
        let inst = attach_substations(&backbone, &tmpl, 0.7, 0).unwrap();
        assert_eq!(inst.substations, 35);
        assert_eq!(inst.topology.vertices().len(), 10 + 35 * 14 + 1);
        assert_eq!(inst.topology.physical_links().unwrap().len(), 9 + 35 * 26 + 1);
        assert_eq!(inst.critical.len(), 35 * 22);
        assert!(validate_topology(&inst.topology).is_empty());
        assert!(inst.critical.iter().all(|s| s.relevance == 1));
        // The IDS hangs off the top-ranked router.
        let ids = inst.topology.ids().unwrap();
        assert!(inst.topology.is_device(ids));
        assert_eq!(place_ids(&inst).unwrap(), VertexId(0));
        assert!(inst
            .topology
            .edge_between(ids, VertexId(0))
            .is_some());
    }

    #[test]
    fn attach_is_deterministic() {
        let backbone = tree10();
        let tmpl = substation_template();
        let a = attach_substations(&backbone, &tmpl, 0.7, 7).unwrap();
        let b = attach_substations(&backbone, &tmpl, 0.7, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn attach_rejects_empty_and_non_switch_backbones() {
        let tmpl = substation_template();
        let empty = Topology::new(vec![], vec![], None);
        assert!(matches!(
            attach_substations(&empty, &tmpl, 0.7, 0),
            Err(TopogenError::EmptyBackbone)
        ));
        let mut vs = vec![switch(0)];
        vs.push(Vertex {
            id: VertexId(1),
            kind: VertexKind::Device,
            label: None,
        });
        let bad = Topology::from_links(vs, &[(VertexId(0), VertexId(1), 10)], None);
        assert!(matches!(
            attach_substations(&bad, &tmpl, 0.7, 0),
            Err(TopogenError::NonSwitchBackbone(_))
        ));
    }

    #[test]
    fn find_alpha_on_grid() {
        assert_eq!(find_alpha(&tree10(), 35), Some(0.7));
        assert_eq!(find_alpha(&tree10(), 100_000), None);
        assert_eq!(find_alpha(&tree10(), 0), None);
    }

    #[test]
    fn nearest_alpha_reports_closest_total() {
        let (alpha, q) = nearest_alpha(&tree10(), 35);
        assert_eq!((alpha, q), (0.7, 35));
        let (_, q) = nearest_alpha(&tree10(), 1_000);
        assert_eq!(q, 35); // grid maximum for ten routers
    }

    #[test]
    fn reserve_fraction_floors() {
        let t = Topology::from_links(
            (0..2).map(switch).collect(),
            &[(VertexId(0), VertexId(1), 1_000_000_000)],
            None,
        );
        let inst = Instance::from_parts(t, vec![]);
        let r = reserve_standard_fraction(&inst, parse_fraction("0.05").unwrap()).unwrap();
        assert_eq!(r.beta(), &[50_000_000, 50_000_000]);
        assert_eq!(r.critical_capacity(0), 950_000_000);

        let zero = reserve_standard_fraction(&inst, parse_fraction("0").unwrap()).unwrap();
        assert!(zero.beta().iter().all(|&b| b == 0));

        let t = Topology::from_links(
            (0..2).map(switch).collect(),
            &[(VertexId(0), VertexId(1), 999)],
            None,
        );
        let inst = Instance::from_parts(t, vec![]);
        let r = reserve_standard_fraction(&inst, parse_fraction("0.05").unwrap()).unwrap();
        assert_eq!(r.beta()[0], 49);
    }

    #[test]
    fn reserve_fraction_rejects_one_or_more() {
        let inst = Instance::from_parts(tree10(), vec![]);
        assert!(reserve_standard_fraction(&inst, Ratio::new(1, 1)).is_err());
        assert!(reserve_standard_fraction(&inst, Ratio::new(3, 2)).is_err());
    }

    #[test]
    fn parse_fraction_decimals() {
        assert_eq!(parse_fraction("0.05").unwrap(), Ratio::new(1, 20));
        assert_eq!(parse_fraction("0").unwrap(), Ratio::new(0, 1));
        assert_eq!(parse_fraction(".5").unwrap(), Ratio::new(1, 2));
        assert!(parse_fraction("x").is_err());
        assert!(parse_fraction("").is_err());
    }

    #[test]
    fn place_ids_single_router() {
        let single = Instance::from_parts(Topology::new(vec![switch(3)], vec![], None), vec![]);
        assert_eq!(place_ids(&single).unwrap(), VertexId(3));
    }

    #[test]
    fn place_ids_prefers_largest_incident_bandwidth() {
        // Star: 2 is the hub; routers 0 and 1 see 600M and 400M of it.
        let t = Topology::from_links(
            (0..3).map(switch).collect(),
            &[
                (VertexId(1), VertexId(2), 600_000_000),
                (VertexId(0), VertexId(2), 400_000_000),
            ],
            None,
        );
        let mut inst = Instance::from_parts(t, vec![]);
        inst.backbone = vec![VertexId(0), VertexId(1), VertexId(2)];
        assert_eq!(place_ids(&inst).unwrap(), VertexId(2));
        inst.backbone = vec![VertexId(0), VertexId(1)];
        // Restricted to {0, 1} there are no backbone-internal links left:
        // both sum to zero and the tie goes to the lowest id.
        assert_eq!(place_ids(&inst).unwrap(), VertexId(0));
    }

    #[test]
    fn place_ids_tie_breaks_on_lowest_id() {
        // A single 500M link: both routers sum to 500M, lowest id wins.
        let t = Topology::from_links(
            (0..2).map(switch).collect(),
            &[(VertexId(0), VertexId(1), 500_000_000)],
            None,
        );
        let inst = Instance::from_parts(t, vec![]);
        assert_eq!(place_ids(&inst).unwrap(), VertexId(0));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = attach_substations(&tree10(), &substation_template(), 0.7, 1).unwrap();
        let inst = reserve_standard_fraction(&inst, parse_fraction("0.05").unwrap()).unwrap();
        let json = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&json).unwrap();
        assert_eq!(inst, back);
    }
}
