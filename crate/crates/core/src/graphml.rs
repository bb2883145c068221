//! Backbone import from a GraphML subset: `node` and `edge` elements plus an
//! optional per-edge bandwidth attribute (`LinkSpeedRaw`, bits per second).
//!
//! Imported vertices are all switches; ids are dense integers assigned in
//! file order. Links without a bandwidth attribute default to 1 Gbps.

use thiserror::Error;

use crate::model::{Topology, Vertex, VertexId, VertexKind};

/// Default capacity for links with no bandwidth attribute.
pub const DEFAULT_LINK_BPS: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum GraphmlError {
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("no <graph> element")]
    MissingGraph,
    #[error("node {0:?} declared twice")]
    DuplicateNode(String),
    #[error("edge references unknown node {0:?}")]
    UnknownNodeRef(String),
    #[error("edge missing source or target attribute")]
    MissingEndpoint,
    #[error("self-loop at node {0:?}")]
    SelfLoop(String),
    #[error("duplicate link between {0:?} and {1:?}")]
    DuplicateLink(String, String),
    #[error("unparseable bandwidth value {0:?}")]
    BadBandwidth(String),
}

/// Parses a GraphML document into a backbone topology.
pub fn import_graphml(text: &str) -> Result<Topology, GraphmlError> {
    let doc = roxmltree::Document::parse(text)?;
    let graph = doc
        .descendants()
        .find(|n| n.has_tag_name_local("graph"))
        .ok_or(GraphmlError::MissingGraph)?;

    // Resolve <key> declarations so that <data key="dNN"> can be looked up
    // by attribute name.
    let mut label_keys = Vec::new();
    let mut bandwidth_keys = Vec::new();
    for key in doc.descendants().filter(|n| n.has_tag_name_local("key")) {
        let id = key.attribute("id").unwrap_or_default().to_string();
        match key.attribute("attr.name") {
            Some("label") => label_keys.push(id),
            Some("LinkSpeedRaw") => bandwidth_keys.push(id),
            _ => {}
        }
    }
    let data_value = |node: roxmltree::Node, keys: &[String]| -> Option<String> {
        node.children()
            .filter(|c| c.has_tag_name_local("data"))
            .find(|c| c.attribute("key").map(|k| keys.iter().any(|x| x == k)) == Some(true))
            .and_then(|c| c.text())
            .map(|s| s.trim().to_string())
    };

    let mut vertices = Vec::new();
    let mut name_to_id = std::collections::BTreeMap::new();
    for node in graph.children().filter(|n| n.has_tag_name_local("node")) {
        let name = node.attribute("id").unwrap_or_default().to_string();
        let id = VertexId(vertices.len() as u32);
        if name_to_id.insert(name.clone(), id).is_some() {
            return Err(GraphmlError::DuplicateNode(name));
        }
        let label = data_value(node, &label_keys).unwrap_or_else(|| name.clone());
        vertices.push(Vertex {
            id,
            kind: VertexKind::Switch,
            label: Some(label),
        });
    }

    let mut links = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for edge in graph.children().filter(|n| n.has_tag_name_local("edge")) {
        let src = edge.attribute("source").ok_or(GraphmlError::MissingEndpoint)?;
        let dst = edge.attribute("target").ok_or(GraphmlError::MissingEndpoint)?;
        let a = *name_to_id
            .get(src)
            .ok_or_else(|| GraphmlError::UnknownNodeRef(src.to_string()))?;
        let b = *name_to_id
            .get(dst)
            .ok_or_else(|| GraphmlError::UnknownNodeRef(dst.to_string()))?;
        if a == b {
            return Err(GraphmlError::SelfLoop(src.to_string()));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !seen.insert((lo, hi)) {
            return Err(GraphmlError::DuplicateLink(src.to_string(), dst.to_string()));
        }
        let capacity = match data_value(edge, &bandwidth_keys) {
            Some(raw) => parse_bandwidth(&raw)?,
            None => DEFAULT_LINK_BPS,
        };
        links.push((a, b, capacity));
    }

    Ok(Topology::from_links(vertices, &links, None))
}

fn parse_bandwidth(raw: &str) -> Result<u64, GraphmlError> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v.round() as u64),
        _ => Err(GraphmlError::BadBandwidth(raw.to_string())),
    }
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for roxmltree::Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key attr.name="label" attr.type="string" for="node" id="d0" />
  <key attr.name="LinkSpeedRaw" attr.type="double" for="edge" id="d1" />
  <graph edgedefault="undirected">
    <node id="0"><data key="d0">Alpha</data></node>
    <node id="1"><data key="d0">Beta</data></node>
    <node id="2" />
    <edge source="0" target="1"><data key="d1">2.0E8</data></edge>
    <edge source="1" target="2" />
  </graph>
</graphml>
"#;

    #[test]
    fn parses_nodes_edges_and_bandwidth() {
        let t = import_graphml(SAMPLE).unwrap();
        assert_eq!(t.vertices().len(), 3);
        assert_eq!(t.edges().len(), 4);
        assert_eq!(t.vertex(VertexId(0)).unwrap().label.as_deref(), Some("Alpha"));
        assert_eq!(t.vertex(VertexId(2)).unwrap().label.as_deref(), Some("2"));
        let e = t.edge(t.edge_between(VertexId(0), VertexId(1)).unwrap());
        assert_eq!(e.capacity_bps, 200_000_000);
        // Missing bandwidth attribute falls back to 1 Gbps.
        let e = t.edge(t.edge_between(VertexId(1), VertexId(2)).unwrap());
        assert_eq!(e.capacity_bps, DEFAULT_LINK_BPS);
        assert!(t.vertices().iter().all(|v| v.kind == VertexKind::Switch));
    }

    #[test]
    fn rejects_unknown_endpoint() {
        let text = SAMPLE.replace("target=\"2\" /", "target=\"9\" /");
        assert!(matches!(
            import_graphml(&text),
            Err(GraphmlError::UnknownNodeRef(_))
        ));
    }

    #[test]
    fn rejects_garbage() {
        assert!(import_graphml("not xml").is_err());
    }
}
