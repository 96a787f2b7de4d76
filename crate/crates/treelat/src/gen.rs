//! Seeded fixture generators for tests and sweeps.  All randomness flows
//! from the given seed; identical seeds give identical fixtures.

use num_integer::Integer;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::indexed_graph::{
    compute_ordering, minimal_integral_ordering, EdgeIndexedGraph, GraphBuilder, OrderFunction,
};
use crate::star_tree::{build_star_ray, Block, StarTreeSpec};
use crate::weights::AdmissibleSequence;

/// Random connected unimodular edge-indexed graph with up to `max_vertices`
/// vertices: a random indexed tree, plus `extra_edges` ordering-compatible
/// chords (so the result stays unimodular even with cycles).  Returns the
/// graph with its minimal integral ordering.
pub fn random_unimodular_graph(
    seed: u64,
    max_vertices: usize,
    extra_edges: usize,
) -> (EdgeIndexedGraph, OrderFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(2..=max_vertices.max(2));
    let mut b = GraphBuilder::new();
    for v in 0..count {
        b.add_vertex(format!("v{v}"), None);
    }
    for v in 1..count {
        let parent = rng.gen_range(0..v);
        let into_child = rng.gen_range(1..=4u64);
        let into_parent = rng.gen_range(1..=4u64);
        b.add_edge_pair(
            &format!("v{parent}"),
            &format!("v{v}"),
            into_child,
            into_parent,
        );
    }
    let tree = b.build().expect("random trees are valid");
    let ordering = minimal_integral_ordering(
        &compute_ordering(&tree, "v0", &num_rational::BigRational::one())
            .expect("trees are unimodular"),
    );
    let (orders, _) = ordering.integral_values().expect("integral ordering");

    // Chords consistent with the ordering: the pair between u and v gets
    // indices N(v)/c and N(u)/c for c = gcd(N(u), N(v)).
    for _ in 0..extra_edges {
        let u = rng.gen_range(0..count);
        let v = rng.gen_range(0..count);
        if u == v {
            continue;
        }
        let (ui, vi) = (
            tree.vertex_by_id(&format!("v{u}")).unwrap(),
            tree.vertex_by_id(&format!("v{v}")).unwrap(),
        );
        let c = orders[ui].gcd(&orders[vi]);
        let into_v = u64::try_from(&(&orders[vi] / &c)).expect("small fixture orders");
        let into_u = u64::try_from(&(&orders[ui] / &c)).expect("small fixture orders");
        b.add_edge_pair(&format!("v{u}"), &format!("v{v}"), into_v, into_u);
    }
    let graph = b.build().expect("chords preserve validity");
    let ordering = minimal_integral_ordering(
        &compute_ordering(&graph, "v0", &num_rational::BigRational::one())
            .expect("chords chosen compatible with the ordering"),
    );
    (graph, ordering)
}

/// Whether the generated graph has a cycle (needed for topological covers).
pub fn has_cycle(graph: &EdgeIndexedGraph) -> bool {
    graph.edge_count() / 2 >= graph.vertex_count()
}

/// Random star-tree spec with an admissible indexing sequence that fits its
/// degree; blocks are glued only where sites allow.
pub fn random_star_spec(seed: u64) -> (StarTreeSpec, AdmissibleSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: u64 = *[3u64, 3, 4, 6].get(rng.gen_range(0..4)).unwrap();
    let m = n + rng.gen_range(0..2u64);
    let seq = if n == 6 && rng.gen_bool(0.5) {
        AdmissibleSequence::new(6, vec![], vec![3, 6]).unwrap()
    } else {
        AdmissibleSequence::canonical(n).unwrap()
    };
    let mut spec = build_star_ray(m).expect("m >= 3");
    for _ in 0..rng.gen_range(0..4usize) {
        let level = rng.gen_range(1..=4u32);
        let depth = rng.gen_range(1..=3u32);
        if let Ok(next) = spec.glue(Block::Weighted { depth }, level) {
            if next.validate_for(&seq).is_ok() {
                spec = next;
            }
        }
    }
    (spec, seq)
}

/// `count` fixtures from consecutive seeds.
pub fn unimodular_graphs(
    base_seed: u64,
    count: usize,
    max_vertices: usize,
    extra_edges: usize,
) -> Vec<(EdgeIndexedGraph, OrderFunction)> {
    (0..count)
        .map(|i| random_unimodular_graph(base_seed + i as u64, max_vertices, extra_edges))
        .collect()
}
