//! Exact constructions of nonuniform lattices acting on biregular trees.
//!
//! The library builds lattices in `Aut(X_{m,n})` as finite groupings of
//! edge-indexed quotient graphs and measures their commensurability
//! invariants, with all arithmetic over arbitrary-precision rationals:
//!
//! * [`indexed_graph`] — locally finite edge-indexed graphs, orderings and
//!   unimodularity, universal-cover expansion, biregularity checks.
//! * [`grouping`] — finite groupings (cyclic, product, semidirect), vertex
//!   covolumes, and coverings of edge-indexed graphs with the degree formula.
//! * [`star_tree`] — star trees as finite descriptions (ray plus glued
//!   blocks), canonical and divisor-sequence edge indexings, exact and
//!   interval covolumes.
//! * [`realize`] — greedy digit expansions for covolume targets, growth-type
//!   realization, and the semidirect tower that shrinks covolume by the order
//!   of a unit group.
//! * [`growth`] — growth functions with the shift/scale comparison order,
//!   quotient (ball) growth, stabilizer growth, and p-stabilizer growth.
//! * [`cli`] — the `treelat` command-line surface.
//!
//! Heavy inner loops (cover-ball expansion, batch sweeps) run data-parallel
//! on rayon when the default `parallel` feature is enabled and fall back to
//! sequential iteration without it; results are bit-identical either way.

pub mod batch;
pub mod cli;
pub mod gen;
pub mod grouping;
pub mod growth;
pub mod indexed_graph;
pub mod io;
pub mod num_util;
pub mod realize;
pub mod series;
pub mod star_tree;
pub mod weights;
