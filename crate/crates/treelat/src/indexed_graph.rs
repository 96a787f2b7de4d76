//! Locally finite edge-indexed graphs.
//!
//! A graph carries oriented edge pairs with a fixed-point-free reverse
//! involution and a positive integer index `i(e)` per oriented edge.  An
//! ordering is a positive rational function `N` on vertices and edges with
//! `N(e) = N(reverse(e)) = N(terminus(e)) / i(e)`; a graph admitting one is
//! unimodular.  The universal covering tree is determined by the index data:
//! above any lift of `v` there are exactly `i(e)` edge lifts for every `e`
//! with terminus `v`.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch;
use crate::num_util::{from_biguint, gcd_all, lcm_all, to_biguint};

/// Bipartition class of a vertex: `Zero` for centers, `One` for joints and
/// leaves of a star tree, or whatever classes a general graph uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl Part {
    pub fn opposite(self) -> Part {
        match self {
            Part::Zero => Part::One,
            Part::One => Part::Zero,
        }
    }
}

/// Serialized form of a graph; the loader rejects any structural violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphData {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<Part>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: String,
    pub origin: String,
    pub terminus: String,
    pub index: u64,
    pub reverse: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Violation {
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertexId(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdgeId(String),
    #[error("edge {edge:?} references unknown vertex {vertex:?}")]
    UnknownVertex { edge: String, vertex: String },
    #[error("edge {edge:?} references unknown reverse edge {reverse:?}")]
    UnknownReverse { edge: String, reverse: String },
    #[error("reverse map is not an involution at edge {edge:?}")]
    ReverseNotInvolution { edge: String },
    #[error("involution has fixed point: edge {edge:?} is its own reverse")]
    ReverseFixedPoint { edge: String },
    #[error("edge {edge:?} endpoints do not match its reverse")]
    EndpointMismatch { edge: String },
    #[error("index must be >= 1 on edge {edge:?}")]
    IndexNotPositive { edge: String },
    #[error("edge {edge:?} joins two vertices of the same part")]
    EdgeWithinPart { edge: String },
}

#[derive(Debug, Clone)]
struct VertexData {
    id: String,
    part: Option<Part>,
}

#[derive(Debug, Clone)]
struct EdgeData {
    id: String,
    origin: usize,
    terminus: usize,
    index: u64,
    reverse: usize,
}

/// Immutable edge-indexed graph with deterministic vertex and edge order
/// (sorted by identifier).
#[derive(Debug, Clone)]
pub struct EdgeIndexedGraph {
    vertices: Vec<VertexData>,
    edges: Vec<EdgeData>,
    vertex_lookup: BTreeMap<String, usize>,
    /// Edges with terminus at each vertex, sorted by edge id.
    in_edges: Vec<Vec<usize>>,
}

impl EdgeIndexedGraph {
    /// Structural diagnostics for raw graph data; empty means valid.
    pub fn validate_data(data: &GraphData) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut vmap = BTreeMap::new();
        for v in &data.vertices {
            if vmap.insert(v.id.clone(), v).is_some() {
                violations.push(Violation::DuplicateVertexId(v.id.clone()));
            }
        }
        let mut emap = BTreeMap::new();
        for e in &data.edges {
            if emap.insert(e.id.clone(), e).is_some() {
                violations.push(Violation::DuplicateEdgeId(e.id.clone()));
            }
        }
        for e in &data.edges {
            for endpoint in [&e.origin, &e.terminus] {
                if !vmap.contains_key(endpoint) {
                    violations.push(Violation::UnknownVertex {
                        edge: e.id.clone(),
                        vertex: endpoint.clone(),
                    });
                }
            }
            if e.index == 0 {
                violations.push(Violation::IndexNotPositive { edge: e.id.clone() });
            }
            match emap.get(&e.reverse) {
                None => violations.push(Violation::UnknownReverse {
                    edge: e.id.clone(),
                    reverse: e.reverse.clone(),
                }),
                Some(rev) => {
                    if rev.id == e.id {
                        violations.push(Violation::ReverseFixedPoint { edge: e.id.clone() });
                    } else {
                        if rev.reverse != e.id {
                            violations.push(Violation::ReverseNotInvolution { edge: e.id.clone() });
                        }
                        if rev.origin != e.terminus || rev.terminus != e.origin {
                            violations.push(Violation::EndpointMismatch { edge: e.id.clone() });
                        }
                    }
                }
            }
            if let (Some(a), Some(b)) = (vmap.get(&e.origin), vmap.get(&e.terminus)) {
                if let (Some(pa), Some(pb)) = (a.part, b.part) {
                    if pa == pb {
                        violations.push(Violation::EdgeWithinPart { edge: e.id.clone() });
                    }
                }
            }
        }
        violations
    }

    /// Builds a graph, rejecting invalid data with the full diagnostics list.
    pub fn from_data(data: &GraphData) -> Result<Self, Vec<Violation>> {
        let violations = Self::validate_data(data);
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut vertices: Vec<VertexData> = data
            .vertices
            .iter()
            .map(|v| VertexData {
                id: v.id.clone(),
                part: v.part,
            })
            .collect();
        vertices.sort_by(|a, b| a.id.cmp(&b.id));
        let vertex_lookup: BTreeMap<String, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), i))
            .collect();

        let mut sorted_edges: Vec<&EdgeRecord> = data.edges.iter().collect();
        sorted_edges.sort_by(|a, b| a.id.cmp(&b.id));
        let edge_lookup: BTreeMap<String, usize> = sorted_edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        let edges: Vec<EdgeData> = sorted_edges
            .iter()
            .map(|e| EdgeData {
                id: e.id.clone(),
                origin: vertex_lookup[&e.origin],
                terminus: vertex_lookup[&e.terminus],
                index: e.index,
                reverse: edge_lookup[&e.reverse],
            })
            .collect();

        let mut in_edges = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            in_edges[e.terminus].push(i);
        }

        Ok(EdgeIndexedGraph {
            vertices,
            edges,
            vertex_lookup,
            in_edges,
        })
    }

    pub fn to_data(&self) -> GraphData {
        GraphData {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexRecord {
                    id: v.id.clone(),
                    part: v.part,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id.clone(),
                    origin: self.vertices[e.origin].id.clone(),
                    terminus: self.vertices[e.terminus].id.clone(),
                    index: e.index,
                    reverse: self.edges[e.reverse].id.clone(),
                })
                .collect(),
        }
    }

    /// Diagnostics for an already-built graph; empty by construction.
    pub fn validate(&self) -> Vec<Violation> {
        Self::validate_data(&self.to_data())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertices[v].id
    }

    pub fn vertex_part(&self, v: usize) -> Option<Part> {
        self.vertices[v].part
    }

    pub fn vertex_by_id(&self, id: &str) -> Option<usize> {
        self.vertex_lookup.get(id).copied()
    }

    pub fn edge_id(&self, e: usize) -> &str {
        &self.edges[e].id
    }

    pub fn edge_by_id(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn origin(&self, e: usize) -> usize {
        self.edges[e].origin
    }

    pub fn terminus(&self, e: usize) -> usize {
        self.edges[e].terminus
    }

    pub fn index(&self, e: usize) -> u64 {
        self.edges[e].index
    }

    pub fn reverse(&self, e: usize) -> usize {
        self.edges[e].reverse
    }

    /// Oriented edges with terminus `v`, sorted by edge id.
    pub fn edges_into(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.in_edges[v].len()
    }

    /// Total incoming index `sum over e with terminus v of i(e)`; this is the
    /// degree of every lift of `v` in the universal covering tree.
    pub fn lift_degree(&self, v: usize) -> u64 {
        self.in_edges[v].iter().map(|&e| self.edges[e].index).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &e in &self.in_edges[v] {
                let u = self.edges[e].origin;
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.vertices.len()
    }

    /// Graph distance in edges from `base` to every vertex (`None` when
    /// unreachable).
    pub fn distances_from(&self, base: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertices.len()];
        dist[base] = Some(0);
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &e in &self.in_edges[v] {
                let u = self.edges[e].origin;
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }
}

/// Incremental construction with `"u>v"` edge-pair identifiers.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: impl Into<String>, part: Option<Part>) -> &mut Self {
        self.vertices.push(VertexRecord {
            id: id.into(),
            part,
        });
        self
    }

    /// Adds the oriented pair between `u` and `v`; `index_into_v` is the index
    /// of the edge with terminus `v` and `index_into_u` of its reverse.
    /// Parallel pairs between the same vertices get a `~k` suffix.
    pub fn add_edge_pair(
        &mut self,
        u: &str,
        v: &str,
        index_into_v: u64,
        index_into_u: u64,
    ) -> &mut Self {
        let multiplicity = self
            .edges
            .iter()
            .filter(|e| (e.origin == u && e.terminus == v) || (e.origin == v && e.terminus == u))
            .count()
            / 2;
        let suffix = if multiplicity == 0 {
            String::new()
        } else {
            format!("~{multiplicity}")
        };
        let forward = format!("{u}>{v}{suffix}");
        let backward = format!("{v}>{u}{suffix}");
        self.edges.push(EdgeRecord {
            id: forward.clone(),
            origin: u.to_string(),
            terminus: v.to_string(),
            index: index_into_v,
            reverse: backward.clone(),
        });
        self.edges.push(EdgeRecord {
            id: backward,
            origin: v.to_string(),
            terminus: u.to_string(),
            index: index_into_u,
            reverse: forward,
        });
        self
    }

    pub fn data(&self) -> GraphData {
        GraphData {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn build(&self) -> Result<EdgeIndexedGraph, Vec<Violation>> {
        EdgeIndexedGraph::from_data(&self.data())
    }
}

/// Positive rational values on vertices and oriented edges satisfying the
/// ordering relation; edge values agree across reverse pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFunction {
    pub vertex_values: Vec<BigRational>,
    pub edge_values: Vec<BigRational>,
}

impl OrderFunction {
    /// Checks the defining relation `N(e) = N(rev e) = N(terminus e) / i(e)`
    /// and positivity against `graph`.
    pub fn is_valid_for(&self, graph: &EdgeIndexedGraph) -> bool {
        if self.vertex_values.len() != graph.vertex_count()
            || self.edge_values.len() != graph.edge_count()
        {
            return false;
        }
        if self
            .vertex_values
            .iter()
            .chain(self.edge_values.iter())
            .any(|v| !v.is_positive())
        {
            return false;
        }
        (0..graph.edge_count()).all(|e| {
            let expected = &self.vertex_values[graph.terminus(e)]
                / BigRational::from_integer(graph.index(e).into());
            self.edge_values[e] == expected
                && self.edge_values[e] == self.edge_values[graph.reverse(e)]
        })
    }

    /// All vertex and edge values scaled by `factor`.
    pub fn scaled(&self, factor: &BigRational) -> OrderFunction {
        OrderFunction {
            vertex_values: self.vertex_values.iter().map(|v| v * factor).collect(),
            edge_values: self.edge_values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Vertex and edge values as positive integers, if integral.
    pub fn integral_values(&self) -> Option<(Vec<BigUint>, Vec<BigUint>)> {
        let vs: Option<Vec<BigUint>> = self.vertex_values.iter().map(to_biguint).collect();
        let es: Option<Vec<BigUint>> = self.edge_values.iter().map(to_biguint).collect();
        Some((vs?, es?))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OrderingError {
    #[error("unknown base vertex {0:?}")]
    UnknownVertex(String),
    #[error("base value must be positive")]
    NonPositiveBase,
    #[error("graph is not connected")]
    Disconnected,
    #[error(
        "not unimodular: cycle through edge {via_edge:?} forces value {forced} at vertex {vertex:?} which already has {existing}"
    )]
    NonUnimodular {
        vertex: String,
        via_edge: String,
        existing: BigRational,
        forced: BigRational,
    },
}

/// Propagates the unique ordering with `N(base) = base_value` along a
/// breadth-first spanning tree with sorted neighbor order, checking every
/// non-tree edge for consistency.
pub fn compute_ordering(
    graph: &EdgeIndexedGraph,
    base: &str,
    base_value: &BigRational,
) -> Result<OrderFunction, OrderingError> {
    let base = graph
        .vertex_by_id(base)
        .ok_or_else(|| OrderingError::UnknownVertex(base.to_string()))?;
    if !base_value.is_positive() {
        return Err(OrderingError::NonPositiveBase);
    }

    let mut vertex_values: Vec<Option<BigRational>> = vec![None; graph.vertex_count()];
    vertex_values[base] = Some(base_value.clone());
    let mut queue = VecDeque::from([base]);
    while let Some(u) = queue.pop_front() {
        let nu = vertex_values[u].clone().unwrap();
        // Edges into u, i.e. arriving from each neighbor; propagate along the
        // reverse orientation toward the neighbor.
        for &e in graph.edges_into(u) {
            let rev = graph.reverse(e);
            let v = graph.origin(e);
            // N(v) = i(e into v) * N(u) / i(e into u)
            let forced = BigRational::from_integer(graph.index(rev).into()) * &nu
                / BigRational::from_integer(graph.index(e).into());
            match &vertex_values[v] {
                None => {
                    vertex_values[v] = Some(forced);
                    queue.push_back(v);
                }
                Some(existing) => {
                    if *existing != forced {
                        return Err(OrderingError::NonUnimodular {
                            vertex: graph.vertex_id(v).to_string(),
                            via_edge: graph.edge_id(rev).to_string(),
                            existing: existing.clone(),
                            forced,
                        });
                    }
                }
            }
        }
    }
    if vertex_values.iter().any(Option::is_none) {
        return Err(OrderingError::Disconnected);
    }
    let vertex_values: Vec<BigRational> = vertex_values.into_iter().map(Option::unwrap).collect();
    let edge_values: Vec<BigRational> = (0..graph.edge_count())
        .map(|e| {
            &vertex_values[graph.terminus(e)] / BigRational::from_integer(graph.index(e).into())
        })
        .collect();
    Ok(OrderFunction {
        vertex_values,
        edge_values,
    })
}

/// True iff the connected graph admits an ordering; trees always do.
pub fn is_unimodular(graph: &EdgeIndexedGraph) -> bool {
    match graph.vertex_count() {
        0 => true,
        _ => compute_ordering(graph, graph.vertex_id(0), &BigRational::one()).is_ok(),
    }
}

/// Rescales by the least positive rational making every value a positive
/// integer with overall gcd 1.
pub fn minimal_integral_ordering(ordering: &OrderFunction) -> OrderFunction {
    let all: Vec<&BigRational> = ordering
        .vertex_values
        .iter()
        .chain(ordering.edge_values.iter())
        .collect();
    if all.is_empty() {
        return ordering.clone();
    }
    let denoms: Vec<BigUint> = all
        .iter()
        .map(|r| r.denom().to_biguint().expect("positive ordering value"))
        .collect();
    let common = lcm_all(denoms.iter());
    let scaled_numers: Vec<BigUint> = all
        .iter()
        .map(|r| {
            let scaled = *r * from_biguint(&common);
            to_biguint(&scaled).expect("cleared denominator")
        })
        .collect();
    let g = gcd_all(scaled_numers.iter());
    let factor = from_biguint(&common) / from_biguint(&g);
    ordering.scaled(&factor)
}

/// True iff for every part-0 vertex the total incoming index is `m` and for
/// every part-1 vertex it is `n`; vertices without a part tag fail the check.
pub fn covers_biregular(graph: &EdgeIndexedGraph, m: u64, n: u64) -> bool {
    (0..graph.vertex_count()).all(|v| match graph.vertex_part(v) {
        Some(Part::Zero) => graph.lift_degree(v) == m,
        Some(Part::One) => graph.lift_degree(v) == n,
        None => false,
    })
}

/// One vertex of a universal-cover ball.
#[derive(Debug, Clone)]
pub struct BallNode {
    /// Path name: `(edge-id, copy)` steps from the root joined by `/`.
    pub name: String,
    /// Vertex of the base graph this node projects to.
    pub projection: usize,
    pub parent: Option<usize>,
    /// Edge (into this node's projection) whose copy 0 is the lift already
    /// used by the parent edge.
    reserved: Option<usize>,
    pub depth: u32,
    pub children: Vec<usize>,
}

/// Finite combinatorial ball of the universal covering tree.
#[derive(Debug, Clone)]
pub struct CoverBall {
    pub nodes: Vec<BallNode>,
    pub radius: u32,
}

impl CoverBall {
    pub fn root(&self) -> &BallNode {
        &self.nodes[0]
    }

    /// Degree of a node within the ball.
    pub fn degree(&self, node: usize) -> usize {
        let n = &self.nodes[node];
        n.children.len() + usize::from(n.parent.is_some())
    }

    /// Nodes strictly inside the ball (depth < radius); their ball degree
    /// equals their degree in the full covering tree.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].depth < self.radius)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverBallError {
    #[error("unknown base vertex {0:?}")]
    UnknownVertex(String),
}

/// Expands the radius-`radius` ball of the universal covering tree rooted at
/// a lift of `base`.  Each lift of `v` receives, for every edge `e` with
/// terminus `v`, exactly `i(e)` incoming edge lifts; lifts are named by their
/// `(edge-id, copy)` path from the root with copy numbers `0..i(e)`, copy 0
/// of the reserved edge being the connection back toward the root.
pub fn universal_cover_ball(
    graph: &EdgeIndexedGraph,
    base: &str,
    radius: u32,
) -> Result<CoverBall, CoverBallError> {
    let base = graph
        .vertex_by_id(base)
        .ok_or_else(|| CoverBallError::UnknownVertex(base.to_string()))?;
    let mut nodes = vec![BallNode {
        name: "@".to_string(),
        projection: base,
        parent: None,
        reserved: None,
        depth: 0,
        children: Vec::new(),
    }];
    let mut frontier = vec![0usize];
    for depth in 1..=radius {
        // Each frontier node expands independently; order-preserving flat_map
        // keeps child numbering identical to the sequential expansion.
        let seeds: Vec<(usize, usize, Option<usize>, String)> = frontier
            .iter()
            .map(|&i| {
                let n = &nodes[i];
                (i, n.projection, n.reserved, n.name.clone())
            })
            .collect();
        let children = batch::flat_map(&seeds, |(parent, proj, reserved, name)| {
            let mut out = Vec::new();
            for &e in graph.edges_into(*proj) {
                let first_copy = u64::from(Some(e) == *reserved);
                for copy in first_copy..graph.index(e) {
                    out.push(BallNode {
                        name: format!("{name}/{}#{copy}", graph.edge_id(e)),
                        projection: graph.origin(e),
                        parent: Some(*parent),
                        reserved: Some(graph.reverse(e)),
                        depth,
                        children: Vec::new(),
                    });
                }
            }
            out
        });
        let mut next_frontier = Vec::with_capacity(children.len());
        for child in children {
            let idx = nodes.len();
            let parent = child.parent.unwrap();
            nodes.push(child);
            nodes[parent].children.push(idx);
            next_frontier.push(idx);
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(CoverBall { nodes, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num_util::{int, ratio};

    /// Star of degree `m` with center `c`, leaf indices `n`.
    pub(crate) fn single_star(m: u64, n: u64) -> EdgeIndexedGraph {
        let mut b = GraphBuilder::new();
        b.add_vertex("c", Some(Part::Zero));
        for t in 0..m {
            let leaf = format!("l{t}");
            b.add_vertex(leaf.clone(), Some(Part::One));
            b.add_edge_pair("c", &leaf, n, 1);
        }
        b.build().unwrap()
    }

    #[test]
    fn single_star_is_valid() {
        let g = single_star(3, 3);
        assert!(g.validate().is_empty());
        assert!(g.is_connected());
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn zero_index_is_rejected() {
        let mut b = GraphBuilder::new();
        b.add_vertex("a", None).add_vertex("b", None);
        b.add_edge_pair("a", "b", 0, 1);
        let violations = b.build().unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::IndexNotPositive { .. })));
    }

    #[test]
    fn fixed_point_reverse_is_rejected() {
        let data = GraphData {
            vertices: vec![
                VertexRecord {
                    id: "a".into(),
                    part: None,
                },
                VertexRecord {
                    id: "b".into(),
                    part: None,
                },
            ],
            edges: vec![EdgeRecord {
                id: "e".into(),
                origin: "a".into(),
                terminus: "b".into(),
                index: 1,
                reverse: "e".into(),
            }],
        };
        let violations = EdgeIndexedGraph::validate_data(&data);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::ReverseFixedPoint { .. })));
    }

    #[test]
    fn same_part_edge_is_rejected() {
        let mut b = GraphBuilder::new();
        b.add_vertex("a", Some(Part::Zero));
        b.add_vertex("b", Some(Part::Zero));
        b.add_edge_pair("a", "b", 1, 1);
        let violations = b.build().unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::EdgeWithinPart { .. })));
    }

    #[test]
    fn ordering_on_single_star() {
        let g = single_star(3, 3);
        let ord = compute_ordering(&g, "c", &int(1)).unwrap();
        let c = g.vertex_by_id("c").unwrap();
        assert_eq!(ord.vertex_values[c], int(1));
        for t in 0..3 {
            let l = g.vertex_by_id(&format!("l{t}")).unwrap();
            assert_eq!(ord.vertex_values[l], int(3));
        }
        assert!(ord.is_valid_for(&g));
    }

    #[test]
    fn identity_indices_give_constant_ordering() {
        let mut b = GraphBuilder::new();
        for id in ["a", "b", "c"] {
            b.add_vertex(id, None);
        }
        b.add_edge_pair("a", "b", 1, 1);
        b.add_edge_pair("b", "c", 1, 1);
        let g = b.build().unwrap();
        let ord = compute_ordering(&g, "a", &int(1)).unwrap();
        assert!(ord.vertex_values.iter().all(|v| *v == int(1)));
        assert!(ord.edge_values.iter().all(|v| *v == int(1)));
    }

    /// 2-cycle whose indices force a mismatch when propagated around.
    fn non_unimodular_two_cycle() -> EdgeIndexedGraph {
        let data = GraphData {
            vertices: vec![
                VertexRecord {
                    id: "a".into(),
                    part: None,
                },
                VertexRecord {
                    id: "b".into(),
                    part: None,
                },
            ],
            edges: vec![
                EdgeRecord {
                    id: "e0".into(),
                    origin: "a".into(),
                    terminus: "b".into(),
                    index: 2,
                    reverse: "e0r".into(),
                },
                EdgeRecord {
                    id: "e0r".into(),
                    origin: "b".into(),
                    terminus: "a".into(),
                    index: 1,
                    reverse: "e0".into(),
                },
                EdgeRecord {
                    id: "e1".into(),
                    origin: "a".into(),
                    terminus: "b".into(),
                    index: 1,
                    reverse: "e1r".into(),
                },
                EdgeRecord {
                    id: "e1r".into(),
                    origin: "b".into(),
                    terminus: "a".into(),
                    index: 1,
                    reverse: "e1".into(),
                },
            ],
        };
        EdgeIndexedGraph::from_data(&data).unwrap()
    }

    #[test]
    fn two_cycle_with_skew_indices_is_not_unimodular() {
        // Around the cycle: N(b) = 2 N(a) along e0 but N(b) = N(a) along e1.
        let g = non_unimodular_two_cycle();
        let err = compute_ordering(&g, "a", &int(1)).unwrap_err();
        assert!(matches!(err, OrderingError::NonUnimodular { .. }));
        assert!(!is_unimodular(&g));
    }

    #[test]
    fn ordering_unique_up_to_scale() {
        let g = single_star(4, 3);
        let from_center = compute_ordering(&g, "c", &int(1)).unwrap();
        let from_leaf = compute_ordering(&g, "l1", &ratio(7, 2)).unwrap();
        let scale = &from_leaf.vertex_values[0] / &from_center.vertex_values[0];
        for v in 0..g.vertex_count() {
            assert_eq!(
                from_leaf.vertex_values[v],
                &from_center.vertex_values[v] * &scale
            );
        }
    }

    #[test]
    fn minimal_integral_clears_denominators_and_gcd() {
        let ord = OrderFunction {
            vertex_values: vec![ratio(1, 2), ratio(3, 2)],
            edge_values: vec![ratio(1, 2), ratio(1, 2)],
        };
        let min = minimal_integral_ordering(&ord);
        assert_eq!(min.vertex_values, vec![int(1), int(3)]);
        let already = minimal_integral_ordering(&min);
        assert_eq!(already, min);
    }

    #[test]
    fn one_vertex_graph_is_degenerate_but_fine() {
        let mut b = GraphBuilder::new();
        b.add_vertex("v", Some(Part::Zero));
        let g = b.build().unwrap();
        let ord = compute_ordering(&g, "v", &ratio(5, 3)).unwrap();
        assert_eq!(ord.vertex_values, vec![ratio(5, 3)]);
        let ball = universal_cover_ball(&g, "v", 4).unwrap();
        assert_eq!(ball.nodes.len(), 1);
    }

    #[test]
    fn star_cover_ball_is_biregular() {
        let (m, n) = (4u64, 3u64);
        let g = single_star(m, n);
        assert!(covers_biregular(&g, m, n));
        let ball = universal_cover_ball(&g, "c", 2).unwrap();
        // Root has degree m, each radius-1 node (a leaf lift) degree n.
        assert_eq!(ball.degree(0), m as usize);
        for &child in &ball.nodes[0].children {
            assert_eq!(ball.degree(child), n as usize);
        }
        assert_eq!(
            ball.nodes.len(),
            1 + m as usize + m as usize * (n as usize - 1)
        );
    }

    #[test]
    fn cover_ball_radius_zero_is_a_point() {
        let g = single_star(5, 4);
        let ball = universal_cover_ball(&g, "c", 0).unwrap();
        assert_eq!(ball.nodes.len(), 1);
        assert_eq!(ball.root().name, "@");
    }

    #[test]
    fn cover_ball_degree_law() {
        // Lift degrees match the total incoming index at every interior node,
        // including on a graph with a cycle.
        let mut b = GraphBuilder::new();
        b.add_vertex("a", None).add_vertex("b", None);
        b.add_edge_pair("a", "b", 2, 2);
        b.add_edge_pair("b", "a", 1, 1);
        let g = b.build().unwrap();
        let ball = universal_cover_ball(&g, "a", 5).unwrap();
        for i in ball.interior() {
            let proj = ball.nodes[i].projection;
            assert_eq!(ball.degree(i) as u64, g.lift_degree(proj));
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Random indexed tree shapes: parent pointers plus index pairs.
        fn tree_strategy() -> impl Strategy<Value = EdgeIndexedGraph> {
            proptest::collection::vec((0usize..8, 1u64..5, 1u64..5), 1..8).prop_map(|edges| {
                let mut b = GraphBuilder::new();
                b.add_vertex("t0", None);
                for (i, (parent, into_child, into_parent)) in edges.iter().enumerate() {
                    let child = format!("t{}", i + 1);
                    let parent = format!("t{}", parent % (i + 1));
                    b.add_vertex(child.clone(), None);
                    b.add_edge_pair(&parent, &child, *into_child, *into_parent);
                }
                b.build().unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn trees_are_always_unimodular(tree in tree_strategy()) {
                prop_assert!(is_unimodular(&tree));
            }

            #[test]
            fn orderings_differ_by_one_scale(tree in tree_strategy(), base_num in 1i64..6) {
                let a = compute_ordering(&tree, "t0", &int(1)).unwrap();
                let last = format!("t{}", tree.vertex_count() - 1);
                let b = compute_ordering(&tree, &last, &ratio(base_num, 3)).unwrap();
                let scale = &b.vertex_values[0] / &a.vertex_values[0];
                for v in 0..tree.vertex_count() {
                    prop_assert_eq!(&b.vertex_values[v], &(&a.vertex_values[v] * &scale));
                }
                for e in 0..tree.edge_count() {
                    prop_assert_eq!(&b.edge_values[e], &(&a.edge_values[e] * &scale));
                }
            }

            #[test]
            fn ball_degree_law_on_random_trees(tree in tree_strategy()) {
                let ball = universal_cover_ball(&tree, "t0", 3).unwrap();
                for i in ball.interior() {
                    let proj = ball.nodes[i].projection;
                    prop_assert_eq!(ball.degree(i) as u64, tree.lift_degree(proj));
                }
            }
        }
    }

    #[test]
    fn perturbed_star_fails_biregularity() {
        let mut b = GraphBuilder::new();
        b.add_vertex("c", Some(Part::Zero));
        for t in 0..3u64 {
            let leaf = format!("l{t}");
            b.add_vertex(leaf.clone(), Some(Part::One));
            let n = if t == 0 { 4 } else { 3 };
            b.add_edge_pair("c", &leaf, n, 1);
        }
        let g = b.build().unwrap();
        assert!(!covers_biregular(&g, 3, 3));
    }
}
