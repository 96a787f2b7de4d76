//! JSON loading and DOT export.
//!
//! Graphs serialize to the record schema of [`GraphData`]; the loader
//! rejects structural violations with the diagnostics of
//! [`EdgeIndexedGraph::validate_data`].  DOT export renders one undirected
//! edge per oriented pair with both indices as head/tail labels, and vertex
//! labels carry ordering values when one is supplied.

use std::fmt::Write as _;

use num_rational::BigRational;
use thiserror::Error;

use crate::grouping::{CoverData, CoverMap, GroupingError};
use crate::indexed_graph::{EdgeIndexedGraph, GraphData, OrderFunction, Part, Violation};
use crate::num_util::format_ratio;
use crate::star_tree::StarTreeSpec;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid graph: {}", render_violations(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Cover(#[from] GroupingError),
    #[error("ordering and graph sizes do not match")]
    OrderingMismatch,
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn graph_from_json(text: &str) -> Result<EdgeIndexedGraph, IoError> {
    let data: GraphData = serde_json::from_str(text)?;
    EdgeIndexedGraph::from_data(&data).map_err(IoError::Invalid)
}

pub fn graph_to_json(graph: &EdgeIndexedGraph) -> String {
    serde_json::to_string_pretty(&graph.to_data()).expect("graph data serializes")
}

pub fn cover_from_json(text: &str) -> Result<CoverMap, IoError> {
    let data: CoverData = serde_json::from_str(text)?;
    Ok(CoverMap::from_data(&data)?)
}

pub fn cover_to_json(cover: &CoverMap) -> String {
    serde_json::to_string_pretty(&cover.to_data()).expect("cover data serializes")
}

pub fn spec_from_json(text: &str) -> Result<StarTreeSpec, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn spec_to_json(spec: &StarTreeSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serializes")
}

/// Ordering values as an id-keyed map of `p/q` strings.
pub fn ordering_to_json(
    graph: &EdgeIndexedGraph,
    ordering: &OrderFunction,
) -> Result<String, IoError> {
    if ordering.vertex_values.len() != graph.vertex_count()
        || ordering.edge_values.len() != graph.edge_count()
    {
        return Err(IoError::OrderingMismatch);
    }
    let vertices: std::collections::BTreeMap<String, String> = (0..graph.vertex_count())
        .map(|v| {
            (
                graph.vertex_id(v).to_string(),
                format_ratio(&ordering.vertex_values[v]),
            )
        })
        .collect();
    let edges: std::collections::BTreeMap<String, String> = (0..graph.edge_count())
        .map(|e| {
            (
                graph.edge_id(e).to_string(),
                format_ratio(&ordering.edge_values[e]),
            )
        })
        .collect();
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "vertices": vertices,
        "edges": edges,
    }))
    .expect("ordering serializes"))
}

/// DOT rendering: undirected edge per pair, `headlabel` the index into the
/// head vertex and `taillabel` the index into the tail.
pub fn graph_to_dot(graph: &EdgeIndexedGraph, ordering: Option<&OrderFunction>) -> String {
    let mut out = String::from("graph {\n  node [shape=circle];\n");
    for v in 0..graph.vertex_count() {
        let id = graph.vertex_id(v);
        let mut attrs = Vec::new();
        let label = match ordering {
            Some(ord) => format!("{id}\\nN={}", format_ratio(&ord.vertex_values[v])),
            None => id.to_string(),
        };
        attrs.push(format!("label=\"{label}\""));
        if graph.vertex_part(v) == Some(Part::Zero) {
            attrs.push("shape=doublecircle".to_string());
        }
        let _ = writeln!(out, "  \"{id}\" [{}];", attrs.join(", "));
    }
    for e in 0..graph.edge_count() {
        let rev = graph.reverse(e);
        // one line per pair, keyed by the lexicographically smaller id
        if graph.edge_id(e) > graph.edge_id(rev) {
            continue;
        }
        let tail = graph.vertex_id(graph.origin(e));
        let head = graph.vertex_id(graph.terminus(e));
        let _ = writeln!(
            out,
            "  \"{tail}\" -- \"{head}\" [headlabel=\"{}\", taillabel=\"{}\"];",
            graph.index(e),
            graph.index(rev),
        );
    }
    out.push_str("}\n");
    out
}

/// Formats a rational exactly as `p/q`.
pub fn render_ratio(value: &BigRational) -> String {
    format_ratio(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexed_graph::compute_ordering;
    use crate::num_util::int;
    use crate::star_tree::{build_star_ray, IndexedStarTree};

    fn ray_graph() -> EdgeIndexedGraph {
        IndexedStarTree::canonical(build_star_ray(4).unwrap(), 3)
            .unwrap()
            .truncate(2)
            .unwrap()
            .graph
    }

    #[test]
    fn graph_json_roundtrip_is_identity() {
        let g = ray_graph();
        let json = graph_to_json(&g);
        let back = graph_from_json(&json).unwrap();
        assert_eq!(graph_to_json(&back), json);
    }

    #[test]
    fn loader_rejects_with_diagnostics() {
        let g = ray_graph();
        let mut data = g.to_data();
        data.edges[0].index = 0;
        let text = serde_json::to_string(&data).unwrap();
        match graph_from_json(&text) {
            Err(IoError::Invalid(violations)) => {
                assert!(violations
                    .iter()
                    .any(|v| matches!(v, Violation::IndexNotPositive { .. })));
            }
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn dot_output_is_deterministic_and_labelled() {
        let g = ray_graph();
        let ord = compute_ordering(&g, "s0", &int(1)).unwrap();
        let dot = graph_to_dot(&g, Some(&ord));
        assert_eq!(dot, graph_to_dot(&g, Some(&ord)));
        assert!(dot.contains("headlabel"));
        assert!(dot.contains("N=1/1"));
        // one undirected line per pair
        let lines = dot.lines().filter(|l| l.contains("--")).count();
        assert_eq!(lines, g.edge_count() / 2);
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = build_star_ray(5).unwrap();
        let json = spec_to_json(&spec);
        let back = spec_from_json(&json).unwrap();
        assert_eq!(back, spec);
    }
}
