//! Finite groupings of edge-indexed graphs and coverings between them.
//!
//! A grouping assigns a finite group to every vertex and edge pair together
//! with an injection of each edge group into its terminal vertex group, so
//! that the local indices reproduce the graph's edge indexing.  Group data
//! is structural (cyclic, products of cyclics, semidirect tower levels);
//! element enumeration is used for verification only below a configurable
//! order bound, with order arithmetic checked above it.
//!
//! A covering of edge-indexed graphs is a graph map `q : (B, j) -> (A, i)`
//! with `i(e) = sum of j(f)` over the fiber of `e` at each vertex, plus
//! local index data `[A_a : B_b]`, `[A_e : B_f]` satisfying the matching
//! sum rule.  Its degree `sum of [A_a : B_b]` over a fiber is independent of
//! the base vertex, and covolumes scale by exactly that degree.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indexed_graph::{EdgeIndexedGraph, GraphBuilder, GraphData, OrderFunction, Part};
use crate::num_util::{euler_phi, format_ratio, from_biguint, gcd_all, recip_uint};
use crate::weights::AdmissibleSequence;

/// Structural description of a finite group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupDesc {
    Cyclic {
        #[serde(with = "crate::num_util::biguint_string")]
        order: BigUint,
    },
    Product {
        #[serde(with = "crate::num_util::biguint_vec_string")]
        orders: Vec<BigUint>,
    },
    /// `G_level x| H` from the semidirect tower over the weight sequence
    /// `seq` with parameter `k` (`H` = units mod `w(k)`), optionally times an
    /// extra cyclic factor (`Z/n` at degree-one joints, `Z/(n/s)` at
    /// degree-two joints of non-canonical indexings).
    Semidirect {
        seq: AdmissibleSequence,
        k: u32,
        level: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        extra_factor: Option<u64>,
    },
}

impl GroupDesc {
    pub fn trivial() -> Self {
        GroupDesc::Cyclic {
            order: BigUint::one(),
        }
    }

    pub fn order(&self) -> BigUint {
        match self {
            GroupDesc::Cyclic { order } => order.clone(),
            GroupDesc::Product { orders } => orders.iter().product(),
            GroupDesc::Semidirect {
                seq,
                k,
                level,
                extra_factor,
            } => {
                let h = euler_phi(&seq.weight(*k));
                let base = seq.weight(*level) * h;
                match extra_factor {
                    Some(n) => base * BigUint::from(*n),
                    None => base,
                }
            }
        }
    }
}

/// How an edge group includes into its terminal vertex group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectionDesc {
    /// Cyclic groups, generator `[1] -> [factor]`.
    CyclicMultiple {
        #[serde(with = "crate::num_util::biguint_string")]
        factor: BigUint,
    },
    /// Equal groups, identity map.
    Identity,
    /// `A -> A x C`, inclusion of the first factor.
    FirstFactor,
    /// Tower inclusion `G_i x| H -> G_(i+1) x| H`.
    TowerStep,
}

#[derive(Debug, Error, PartialEq)]
pub enum GroupingError {
    #[error("ordering is not integral: value {0} at position {1}")]
    NonIntegralOrdering(String, usize),
    #[error("selector selects no vertices")]
    EmptySelector,
    #[error("cover data references unknown id {0:?}")]
    UnknownId(String),
    #[error("degree mismatch: vertex {vertex:?} gives degree {got}, vertex {reference:?} gives {expected}")]
    DegreeMismatch {
        vertex: String,
        got: BigUint,
        reference: String,
        expected: BigUint,
    },
    #[error("no connected topological cover of degree {degree}: the graph is a tree")]
    NoTopologicalCover { degree: u64 },
    #[error("degree must be >= 1")]
    ZeroDegree,
    #[error("grouping on A does not pull back: {0}")]
    NotPullable(String),
}

/// Vertex classes for covolume sums over finite graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexSelector {
    PartZero,
    PartOne,
    All,
    Ids(BTreeSet<String>),
}

impl VertexSelector {
    fn selects(&self, graph: &EdgeIndexedGraph, v: usize) -> bool {
        match self {
            VertexSelector::PartZero => graph.vertex_part(v) == Some(Part::Zero),
            VertexSelector::PartOne => graph.vertex_part(v) == Some(Part::One),
            VertexSelector::All => true,
            VertexSelector::Ids(ids) => ids.contains(graph.vertex_id(v)),
        }
    }
}

/// A finite grouping: groups per vertex and per oriented edge (equal across
/// reverse pairs) with the edge-group injections.
#[derive(Debug, Clone)]
pub struct FiniteGrouping {
    pub graph: EdgeIndexedGraph,
    pub vertex_groups: Vec<GroupDesc>,
    pub edge_groups: Vec<GroupDesc>,
    pub injections: Vec<InjectionDesc>,
}

/// Default order bound below which injections are verified element by
/// element.
pub const ELEMENT_BOUND: u64 = 1_000_000;

/// Serialized grouping: descriptors keyed by vertex and edge identifiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupingData {
    pub graph: GraphData,
    pub vertex_groups: std::collections::BTreeMap<String, GroupDesc>,
    pub edge_groups: std::collections::BTreeMap<String, GroupDesc>,
    pub injections: std::collections::BTreeMap<String, InjectionDesc>,
}

impl FiniteGrouping {
    /// The induced order function `v -> |A_v|`, `e -> |A_e|`.
    pub fn order_function(&self) -> OrderFunction {
        OrderFunction {
            vertex_values: self
                .vertex_groups
                .iter()
                .map(|g| from_biguint(&g.order()))
                .collect(),
            edge_values: self
                .edge_groups
                .iter()
                .map(|g| from_biguint(&g.order()))
                .collect(),
        }
    }

    /// Structural diagnostics: the index identity
    /// `|A_t(e)| / |A_e| = i(e)`, reverse-pair consistency, and injectivity
    /// of every edge injection (element-wise below `element_bound`).
    pub fn validate(&self, element_bound: u64) -> Vec<String> {
        let mut problems = Vec::new();
        let g = &self.graph;
        if self.vertex_groups.len() != g.vertex_count()
            || self.edge_groups.len() != g.edge_count()
            || self.injections.len() != g.edge_count()
        {
            problems.push("group data length mismatch".to_string());
            return problems;
        }
        for e in 0..g.edge_count() {
            let rev = g.reverse(e);
            if self.edge_groups[e] != self.edge_groups[rev] {
                problems.push(format!(
                    "edge group differs across the pair at {:?}",
                    g.edge_id(e)
                ));
            }
            let vertex_order = self.vertex_groups[g.terminus(e)].order();
            let edge_order = self.edge_groups[e].order();
            if &edge_order * BigUint::from(g.index(e)) != vertex_order {
                problems.push(format!(
                    "index identity fails at edge {:?}: |A_v| = {vertex_order}, |A_e| = {edge_order}, i(e) = {}",
                    g.edge_id(e),
                    g.index(e)
                ));
            }
            problems.extend(self.check_injection(e, element_bound));
        }
        problems
    }

    fn check_injection(&self, e: usize, element_bound: u64) -> Vec<String> {
        let g = &self.graph;
        let source = &self.edge_groups[e];
        let target = &self.vertex_groups[g.terminus(e)];
        let id = g.edge_id(e);
        let mut problems = Vec::new();
        match &self.injections[e] {
            InjectionDesc::CyclicMultiple { factor } => {
                let (s, t) = (source.order(), target.order());
                // well-defined: s * factor = 0 mod t; injective: the order
                // of [factor] in Z/t, which is t / gcd(t, factor), equals s.
                if !(&s * factor % &t).is_zero() {
                    problems.push(format!("injection at {id:?} is not well-defined"));
                } else if &t / t.gcd(factor) != s {
                    problems.push(format!("injection at {id:?} is not injective"));
                } else if let (Ok(s), Ok(t), Ok(f)) =
                    (u64::try_from(&s), u64::try_from(&t), u64::try_from(factor))
                {
                    if t <= element_bound {
                        // exhaustive: x -> f x mod t on Z/s
                        let mut seen = BTreeSet::new();
                        for x in 0..s {
                            let image = (u128::from(x) * u128::from(f) % u128::from(t)) as u64;
                            if !seen.insert(image) {
                                problems
                                    .push(format!("injection at {id:?} collides at element {x}"));
                                break;
                            }
                        }
                    }
                }
            }
            InjectionDesc::Identity => {
                if source.order() != target.order() {
                    problems.push(format!(
                        "identity injection at {id:?} between different orders"
                    ));
                }
            }
            InjectionDesc::FirstFactor => {
                if (target.order() % source.order()) != BigUint::zero() {
                    problems.push(format!(
                        "first-factor injection at {id:?}: source order does not divide target"
                    ));
                }
            }
            InjectionDesc::TowerStep => {
                // Order arithmetic here; element-wise equivariance is part of
                // the tower verification.
                if (target.order() % source.order()) != BigUint::zero() {
                    problems.push(format!(
                        "tower injection at {id:?}: source order does not divide target"
                    ));
                }
            }
        }
        problems
    }

    /// `sum over selected vertices of 1 / |A_v|`.
    pub fn covolume(&self, selector: &VertexSelector) -> Result<BigRational, GroupingError> {
        covolume_of_orders(
            &self.graph,
            &self
                .vertex_groups
                .iter()
                .map(GroupDesc::order)
                .collect::<Vec<_>>(),
            selector,
        )
    }

    pub fn to_data(&self) -> GroupingData {
        let g = &self.graph;
        GroupingData {
            graph: g.to_data(),
            vertex_groups: (0..g.vertex_count())
                .map(|v| (g.vertex_id(v).to_string(), self.vertex_groups[v].clone()))
                .collect(),
            edge_groups: (0..g.edge_count())
                .map(|e| (g.edge_id(e).to_string(), self.edge_groups[e].clone()))
                .collect(),
            injections: (0..g.edge_count())
                .map(|e| (g.edge_id(e).to_string(), self.injections[e].clone()))
                .collect(),
        }
    }

    pub fn from_data(data: &GroupingData) -> Result<Self, GroupingError> {
        let graph = EdgeIndexedGraph::from_data(&data.graph)
            .map_err(|v| GroupingError::NotPullable(format!("invalid graph: {v:?}")))?;
        let mut vertex_groups = Vec::with_capacity(graph.vertex_count());
        for v in 0..graph.vertex_count() {
            let id = graph.vertex_id(v);
            vertex_groups.push(
                data.vertex_groups
                    .get(id)
                    .cloned()
                    .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?,
            );
        }
        let mut edge_groups = Vec::with_capacity(graph.edge_count());
        let mut injections = Vec::with_capacity(graph.edge_count());
        for e in 0..graph.edge_count() {
            let id = graph.edge_id(e);
            edge_groups.push(
                data.edge_groups
                    .get(id)
                    .cloned()
                    .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?,
            );
            injections.push(
                data.injections
                    .get(id)
                    .cloned()
                    .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?,
            );
        }
        Ok(FiniteGrouping {
            graph,
            vertex_groups,
            edge_groups,
            injections,
        })
    }

    /// Effective iff the group orders share no common factor.
    pub fn is_effective(&self) -> bool {
        let orders: Vec<BigUint> = self
            .vertex_groups
            .iter()
            .chain(self.edge_groups.iter())
            .map(GroupDesc::order)
            .collect();
        gcd_all(orders.iter()).is_one()
    }
}

fn covolume_of_orders(
    graph: &EdgeIndexedGraph,
    orders: &[BigUint],
    selector: &VertexSelector,
) -> Result<BigRational, GroupingError> {
    let mut sum = BigRational::zero();
    let mut any = false;
    for v in 0..graph.vertex_count() {
        if selector.selects(graph, v) {
            any = true;
            sum += recip_uint(&orders[v]);
        }
    }
    if !any {
        return Err(GroupingError::EmptySelector);
    }
    Ok(sum)
}

/// Covolume of an ordering: `1/N(v)` plays the role of `1/|A_v|`.
pub fn covolume_ordering(
    graph: &EdgeIndexedGraph,
    ordering: &OrderFunction,
    selector: &VertexSelector,
) -> Result<BigRational, GroupingError> {
    let mut sum = BigRational::zero();
    let mut any = false;
    for v in 0..graph.vertex_count() {
        if selector.selects(graph, v) {
            any = true;
            sum += ordering.vertex_values[v].recip();
        }
    }
    if !any {
        return Err(GroupingError::EmptySelector);
    }
    Ok(sum)
}

/// The finite cyclic grouping of an integral ordering: cyclic groups of the
/// ordering's orders, injections `[1] -> [i(e)]`.
pub fn canonical_cyclic_grouping(
    graph: &EdgeIndexedGraph,
    ordering: &OrderFunction,
) -> Result<FiniteGrouping, GroupingError> {
    let (vertex_orders, edge_orders) = integral_orders(ordering)?;
    let vertex_groups = vertex_orders
        .into_iter()
        .map(|order| GroupDesc::Cyclic { order })
        .collect();
    let edge_groups: Vec<GroupDesc> = edge_orders
        .into_iter()
        .map(|order| GroupDesc::Cyclic { order })
        .collect();
    let injections = (0..graph.edge_count())
        .map(|e| InjectionDesc::CyclicMultiple {
            factor: BigUint::from(graph.index(e)),
        })
        .collect();
    Ok(FiniteGrouping {
        graph: graph.clone(),
        vertex_groups,
        edge_groups,
        injections,
    })
}

fn integral_orders(
    ordering: &OrderFunction,
) -> Result<(Vec<BigUint>, Vec<BigUint>), GroupingError> {
    ordering.integral_values().ok_or_else(|| {
        let bad = ordering
            .vertex_values
            .iter()
            .chain(ordering.edge_values.iter())
            .enumerate()
            .find(|(_, v)| !crate::num_util::is_integral(v))
            .map(|(i, v)| (format_ratio(v), i))
            .unwrap_or_default();
        GroupingError::NonIntegralOrdering(bad.0, bad.1)
    })
}

/// True iff the integral ordering's values have no common factor, which is
/// exactly when its cyclic grouping is effective.
pub fn is_effective_cyclic(ordering: &OrderFunction) -> Result<bool, GroupingError> {
    let (vs, es) = integral_orders(ordering)?;
    Ok(gcd_all(vs.iter().chain(es.iter())).is_one())
}

// ---------------------------------------------------------------------------
// Coverings
// ---------------------------------------------------------------------------

/// A covering of edge-indexed graphs with local index data.
#[derive(Debug, Clone)]
pub struct CoverMap {
    pub source: EdgeIndexedGraph,
    pub target: EdgeIndexedGraph,
    /// source vertex -> target vertex
    pub vertex_map: Vec<usize>,
    /// source edge -> target edge
    pub edge_map: Vec<usize>,
    /// `[A_a : B_b]` per source vertex
    pub vertex_index: Vec<u64>,
    /// `[A_e : B_f]` per source edge
    pub edge_index: Vec<u64>,
}

/// Serialized cover: maps keyed by identifiers, graphs embedded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverData {
    pub source: GraphData,
    pub target: GraphData,
    pub vertex_map: std::collections::BTreeMap<String, String>,
    pub edge_map: std::collections::BTreeMap<String, String>,
    pub vertex_index: std::collections::BTreeMap<String, u64>,
    pub edge_index: std::collections::BTreeMap<String, u64>,
}

impl CoverMap {
    pub fn from_data(data: &CoverData) -> Result<Self, GroupingError> {
        let source = EdgeIndexedGraph::from_data(&data.source)
            .map_err(|v| GroupingError::NotPullable(format!("invalid source graph: {v:?}")))?;
        let target = EdgeIndexedGraph::from_data(&data.target)
            .map_err(|v| GroupingError::NotPullable(format!("invalid target graph: {v:?}")))?;
        let mut vertex_map = Vec::with_capacity(source.vertex_count());
        let mut vertex_index = Vec::with_capacity(source.vertex_count());
        for b in 0..source.vertex_count() {
            let id = source.vertex_id(b);
            let a = data
                .vertex_map
                .get(id)
                .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?;
            vertex_map.push(
                target
                    .vertex_by_id(a)
                    .ok_or_else(|| GroupingError::UnknownId(a.clone()))?,
            );
            vertex_index.push(
                *data
                    .vertex_index
                    .get(id)
                    .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?,
            );
        }
        let mut edge_map = Vec::with_capacity(source.edge_count());
        let mut edge_index = Vec::with_capacity(source.edge_count());
        for f in 0..source.edge_count() {
            let id = source.edge_id(f);
            let e = data
                .edge_map
                .get(id)
                .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?;
            edge_map.push(
                target
                    .edge_by_id(e)
                    .ok_or_else(|| GroupingError::UnknownId(e.clone()))?,
            );
            edge_index.push(
                *data
                    .edge_index
                    .get(id)
                    .ok_or_else(|| GroupingError::UnknownId(id.to_string()))?,
            );
        }
        Ok(CoverMap {
            source,
            target,
            vertex_map,
            edge_map,
            vertex_index,
            edge_index,
        })
    }

    pub fn to_data(&self) -> CoverData {
        CoverData {
            source: self.source.to_data(),
            target: self.target.to_data(),
            vertex_map: (0..self.source.vertex_count())
                .map(|b| {
                    (
                        self.source.vertex_id(b).to_string(),
                        self.target.vertex_id(self.vertex_map[b]).to_string(),
                    )
                })
                .collect(),
            edge_map: (0..self.source.edge_count())
                .map(|f| {
                    (
                        self.source.edge_id(f).to_string(),
                        self.target.edge_id(self.edge_map[f]).to_string(),
                    )
                })
                .collect(),
            vertex_index: (0..self.source.vertex_count())
                .map(|b| (self.source.vertex_id(b).to_string(), self.vertex_index[b]))
                .collect(),
            edge_index: (0..self.source.edge_count())
                .map(|f| (self.source.edge_id(f).to_string(), self.edge_index[f]))
                .collect(),
        }
    }
}

/// Checks graph-map commutation, the fiber sum rule, and local index
/// compatibility; empty diagnostics means a valid cover.
pub fn verify_cover(cover: &CoverMap) -> Vec<String> {
    let mut problems = Vec::new();
    let b_graph = &cover.source;
    let a_graph = &cover.target;
    if cover.vertex_map.len() != b_graph.vertex_count()
        || cover.edge_map.len() != b_graph.edge_count()
        || cover.vertex_index.len() != b_graph.vertex_count()
        || cover.edge_index.len() != b_graph.edge_count()
    {
        problems.push("cover data length mismatch".into());
        return problems;
    }
    if cover.vertex_index.contains(&0) || cover.edge_index.contains(&0) {
        problems.push("local indices must be >= 1".into());
    }
    // Graph map commutation with boundaries and reversal.
    for f in 0..b_graph.edge_count() {
        let e = cover.edge_map[f];
        if cover.vertex_map[b_graph.origin(f)] != a_graph.origin(e)
            || cover.vertex_map[b_graph.terminus(f)] != a_graph.terminus(e)
        {
            problems.push(format!(
                "edge {:?} does not commute with the boundary maps",
                b_graph.edge_id(f)
            ));
        }
        if cover.edge_map[b_graph.reverse(f)] != a_graph.reverse(e) {
            problems.push(format!(
                "edge {:?} does not commute with reversal",
                b_graph.edge_id(f)
            ));
        }
    }
    // Fiber sum rule and local index compatibility at every source vertex.
    for b in 0..b_graph.vertex_count() {
        let a = cover.vertex_map[b];
        for &e in a_graph.edges_into(a) {
            let fiber: Vec<usize> = b_graph
                .edges_into(b)
                .iter()
                .copied()
                .filter(|&f| cover.edge_map[f] == e)
                .collect();
            let index_sum: u64 = fiber.iter().map(|&f| b_graph.index(f)).sum();
            if index_sum != a_graph.index(e) {
                problems.push(format!(
                    "fiber sum rule fails at vertex {:?} over edge {:?}: i(e) = {} but the fiber sums to {}",
                    b_graph.vertex_id(b),
                    a_graph.edge_id(e),
                    a_graph.index(e),
                    index_sum
                ));
            }
            let local_sum: u64 = fiber.iter().map(|&f| cover.edge_index[f]).sum();
            if local_sum != cover.vertex_index[b] {
                problems.push(format!(
                    "local index compatibility fails at vertex {:?} over edge {:?}: [A_a : B_b] = {} but edge indices sum to {}",
                    b_graph.vertex_id(b),
                    a_graph.edge_id(e),
                    cover.vertex_index[b],
                    local_sum
                ));
            }
        }
    }
    problems
}

/// The covering degree `sum over the fiber of a of [A_a : B_b]`, computed at
/// every target vertex; errors when the values disagree.
pub fn cover_degree(cover: &CoverMap) -> Result<BigUint, GroupingError> {
    let mut per_vertex: Vec<BigUint> = vec![BigUint::zero(); cover.target.vertex_count()];
    for b in 0..cover.source.vertex_count() {
        per_vertex[cover.vertex_map[b]] += BigUint::from(cover.vertex_index[b]);
    }
    let reference = per_vertex
        .first()
        .cloned()
        .ok_or(GroupingError::ZeroDegree)?;
    for (a, value) in per_vertex.iter().enumerate() {
        if *value != reference {
            return Err(GroupingError::DegreeMismatch {
                vertex: cover.target.vertex_id(a).to_string(),
                got: value.clone(),
                reference: cover.target.vertex_id(0).to_string(),
                expected: reference,
            });
        }
    }
    Ok(reference)
}

/// `deg(q) * Vol(A) = Vol(B)` over all vertices, exactly.
pub fn volume_ratio_check(
    cover: &CoverMap,
    grouping_a: &FiniteGrouping,
    grouping_b: &FiniteGrouping,
) -> Result<bool, GroupingError> {
    let degree = cover_degree(cover)?;
    let vol_a = grouping_a.covolume(&VertexSelector::All)?;
    let vol_b = grouping_b.covolume(&VertexSelector::All)?;
    Ok(from_biguint(&degree) * vol_a == vol_b)
}

/// Grouping on the source induced by dividing the target's group orders by
/// the local indices; cyclic groups with the evident multiple injections.
pub fn pull_back_grouping(
    cover: &CoverMap,
    grouping_a: &FiniteGrouping,
) -> Result<FiniteGrouping, GroupingError> {
    let mut vertex_groups = Vec::with_capacity(cover.source.vertex_count());
    for b in 0..cover.source.vertex_count() {
        let a_order = grouping_a.vertex_groups[cover.vertex_map[b]].order();
        let index = BigUint::from(cover.vertex_index[b]);
        let (q, r) = a_order.div_rem(&index);
        if !r.is_zero() {
            return Err(GroupingError::NotPullable(format!(
                "[A_a : B_b] = {index} does not divide |A_a| = {a_order} at {:?}",
                cover.source.vertex_id(b)
            )));
        }
        vertex_groups.push(GroupDesc::Cyclic { order: q });
    }
    let mut edge_groups = Vec::with_capacity(cover.source.edge_count());
    for f in 0..cover.source.edge_count() {
        let a_order = grouping_a.edge_groups[cover.edge_map[f]].order();
        let index = BigUint::from(cover.edge_index[f]);
        let (q, r) = a_order.div_rem(&index);
        if !r.is_zero() {
            return Err(GroupingError::NotPullable(format!(
                "[A_e : B_f] = {index} does not divide |A_e| = {a_order} at {:?}",
                cover.source.edge_id(f)
            )));
        }
        edge_groups.push(GroupDesc::Cyclic { order: q });
    }
    let injections = (0..cover.source.edge_count())
        .map(|f| InjectionDesc::CyclicMultiple {
            factor: BigUint::from(cover.source.index(f)),
        })
        .collect();
    let grouping = FiniteGrouping {
        graph: cover.source.clone(),
        vertex_groups,
        edge_groups,
        injections,
    };
    let problems = grouping.validate(0);
    if !problems.is_empty() {
        return Err(GroupingError::NotPullable(problems.join("; ")));
    }
    Ok(grouping)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    /// Degree-d topological cover with trivial group index data; exists for
    /// connected graphs with a cycle (and degree 1 always).
    Topological,
    /// Graph isomorphism with every group index equal to d.
    Group,
}

/// Deterministically builds a degree-`d` cover of `graph` in the requested
/// mode; the output always passes [`verify_cover`].
pub fn build_index_cover(
    graph: &EdgeIndexedGraph,
    degree: u64,
    mode: CoverMode,
) -> Result<CoverMap, GroupingError> {
    if degree == 0 {
        return Err(GroupingError::ZeroDegree);
    }
    match mode {
        CoverMode::Group => {
            let mut b = GraphBuilder::new();
            let data = graph.to_data();
            for v in &data.vertices {
                b.add_vertex(format!("c.{}", v.id), v.part);
            }
            let mut edges = Vec::new();
            for e in &data.edges {
                edges.push(crate::indexed_graph::EdgeRecord {
                    id: format!("c.{}", e.id),
                    origin: format!("c.{}", e.origin),
                    terminus: format!("c.{}", e.terminus),
                    index: e.index,
                    reverse: format!("c.{}", e.reverse),
                });
            }
            let source_data = GraphData {
                vertices: b.data().vertices,
                edges,
            };
            let source =
                EdgeIndexedGraph::from_data(&source_data).expect("relabeled copy of a valid graph");
            let vertex_map = (0..source.vertex_count())
                .map(|v| {
                    graph
                        .vertex_by_id(&source.vertex_id(v)[2..])
                        .expect("copied vertex")
                })
                .collect();
            let edge_map = (0..source.edge_count())
                .map(|f| {
                    graph
                        .edge_by_id(&source.edge_id(f)[2..])
                        .expect("copied edge")
                })
                .collect();
            Ok(CoverMap {
                vertex_index: vec![degree; source.vertex_count()],
                edge_index: vec![degree; source.edge_count()],
                source,
                target: graph.clone(),
                vertex_map,
                edge_map,
            })
        }
        CoverMode::Topological => {
            let sheets = degree;
            // Spanning tree via breadth-first search from vertex 0; non-tree
            // edge pairs get the cyclic deck permutation t -> t + 1.
            let mut tree_edges = vec![false; graph.edge_count()];
            if graph.vertex_count() > 0 {
                let mut seen = vec![false; graph.vertex_count()];
                seen[0] = true;
                let mut queue = std::collections::VecDeque::from([0usize]);
                while let Some(v) = queue.pop_front() {
                    for &e in graph.edges_into(v) {
                        let u = graph.origin(e);
                        if !seen[u] {
                            seen[u] = true;
                            tree_edges[e] = true;
                            tree_edges[graph.reverse(e)] = true;
                            queue.push_back(u);
                        }
                    }
                }
            }
            let has_cycle = tree_edges.iter().filter(|&&t| !t).count() > 0;
            if sheets > 1 && !has_cycle {
                return Err(GroupingError::NoTopologicalCover { degree: sheets });
            }
            // Deck shift of an oriented edge: +1 on the lexicographically
            // smaller orientation of a non-tree pair, -1 on its reverse.
            let shift = |e: usize| -> i64 {
                if tree_edges[e] {
                    0
                } else if graph.edge_id(e) < graph.edge_id(graph.reverse(e)) {
                    1
                } else {
                    -1
                }
            };
            let data = graph.to_data();
            let mut vertices = Vec::new();
            for t in 0..sheets {
                for v in &data.vertices {
                    vertices.push(crate::indexed_graph::VertexRecord {
                        id: format!("{}@{t}", v.id),
                        part: v.part,
                    });
                }
            }
            let mut edges = Vec::new();
            for t in 0..sheets as i64 {
                for e in 0..graph.edge_count() {
                    let s = shift(e);
                    let target_sheet = (t + s).rem_euclid(sheets as i64);
                    // The lift of e at sheet `t` starts at (origin, t) and
                    // ends at (terminus, t + shift); its reverse is the lift
                    // of reverse(e) at the target sheet.
                    edges.push(crate::indexed_graph::EdgeRecord {
                        id: format!("{}@{t}", graph.edge_id(e)),
                        origin: format!("{}@{t}", graph.vertex_id(graph.origin(e))),
                        terminus: format!("{}@{target_sheet}", graph.vertex_id(graph.terminus(e))),
                        index: graph.index(e),
                        reverse: format!("{}@{target_sheet}", graph.edge_id(graph.reverse(e))),
                    });
                }
            }
            let source = EdgeIndexedGraph::from_data(&GraphData { vertices, edges })
                .expect("sheeted cover of a valid graph");
            fn strip(id: &str) -> &str {
                id.rsplit_once('@').unwrap().0
            }
            let vertex_map = (0..source.vertex_count())
                .map(|v| graph.vertex_by_id(strip(source.vertex_id(v))).unwrap())
                .collect();
            let edge_map = (0..source.edge_count())
                .map(|f| graph.edge_by_id(strip(source.edge_id(f))).unwrap())
                .collect();
            Ok(CoverMap {
                vertex_index: vec![1; source.vertex_count()],
                edge_index: vec![1; source.edge_count()],
                source,
                target: graph.clone(),
                vertex_map,
                edge_map,
            })
        }
    }
}
