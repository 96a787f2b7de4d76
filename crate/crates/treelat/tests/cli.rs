//! End-to-end tests of the command-line surface: outputs, exit codes, and
//! byte-for-byte reproducibility.

use std::io::Write;

use treelat::cli::run_capture;
use treelat::grouping::{build_index_cover, CoverMode};
use treelat::io;
use treelat::star_tree::{build_single_star, IndexedStarTree};

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(content.as_bytes()).unwrap();
    file
}

fn single_star_graph_json() -> String {
    let tree = IndexedStarTree::canonical(build_single_star(4).unwrap(), 3).unwrap();
    io::graph_to_json(&tree.truncate(0).unwrap().graph)
}

#[test]
fn covolume_of_the_star_ray_prints_the_exact_rational() {
    let (code, out, _) = run_capture(&[
        "covolume",
        "--startree",
        "ray",
        "--m",
        "4",
        "--n",
        "3",
        "--selector",
        "v0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "2/1\n");
}

#[test]
fn covolume_selectors_match_the_convention() {
    let (code, out, _) = run_capture(&[
        "covolume",
        "--startree",
        "star",
        "--m",
        "4",
        "--n",
        "3",
        "--selector",
        "all",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "7/3\n");
    let (code, out, _) = run_capture(&[
        "covolume",
        "--startree",
        "star",
        "--m",
        "4",
        "--n",
        "3",
        "--selector",
        "v0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "1/1\n");
}

#[test]
fn order_reports_figure_consistent_values() {
    let file = write_temp(&single_star_graph_json());
    let (code, out, _) = run_capture(&[
        "order",
        "--graph",
        file.path().to_str().unwrap(),
        "--base",
        "s0",
        "--value",
        "1",
    ]);
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(parsed["vertices"]["s0"], "1/1");
    assert_eq!(parsed["vertices"]["s0.l0"], "3/1");
}

#[test]
fn validate_rejects_bad_graphs_with_exit_3() {
    let mut data: serde_json::Value = serde_json::from_str(&single_star_graph_json()).unwrap();
    data["edges"][0]["index"] = serde_json::json!(0);
    let file = write_temp(&data.to_string());
    let (code, out, _) = run_capture(&["validate", "--graph", file.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(out.contains("index must be >= 1"));

    let good = write_temp(&single_star_graph_json());
    let (code, out, _) = run_capture(&["validate", "--graph", good.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("\"valid\": true"));
}

#[test]
fn cover_degree_of_the_identity_cover_is_one() {
    let tree = IndexedStarTree::canonical(build_single_star(4).unwrap(), 3).unwrap();
    let graph = tree.truncate(0).unwrap().graph;
    let cover = build_index_cover(&graph, 1, CoverMode::Group).unwrap();
    let file = write_temp(&io::cover_to_json(&cover));
    let (code, out, _) = run_capture(&["cover-degree", "--cover", file.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, "1\n");

    let (code, out, _) = run_capture(&["cover-check", "--cover", file.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("\"valid\": true"));
}

#[test]
fn realize_rejects_small_covolume_with_exit_4() {
    let (code, _, err) = run_capture(&["realize", "--kappa", "2", "--m", "4", "--n", "3"]);
    assert_eq!(code, 4);
    assert!(err.contains("ray covolume"));
}

#[test]
fn parse_errors_exit_2() {
    let (code, _, _) = run_capture(&["covolume", "--startree", "nope", "--m", "4", "--n", "3"]);
    assert_eq!(code, 2);
    let (code, _, err) = run_capture(&["realize", "--kappa", "x/y", "--m", "4", "--n", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("invalid"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "realize", "--kappa", "3", "--m", "4", "--n", "3", "--sample", "5", "--seed", "11",
    ];
    let (c1, out1, _) = run_capture(&args);
    let (c2, out2, _) = run_capture(&args);
    assert_eq!(c1, 0);
    assert_eq!(c1, c2);
    assert_eq!(out1, out2);
}

#[test]
fn export_roundtrips_through_the_loader() {
    let (code, out, _) = run_capture(&[
        "startree",
        "--startree",
        "ray",
        "--m",
        "4",
        "--n",
        "3",
        "--glue",
        "2@1",
        "--depth",
        "4",
        "--emit",
        "graph",
    ]);
    assert_eq!(code, 0);
    let graph = io::graph_from_json(&out).unwrap();
    assert!(graph.validate().is_empty());
    // dot export of the same tree mentions both endpoints and labels
    let (code, dot, _) = run_capture(&[
        "export",
        "--startree",
        "ray",
        "--m",
        "4",
        "--n",
        "3",
        "--depth",
        "2",
        "--format",
        "dot",
        "--ordering-base",
        "s0",
    ]);
    assert_eq!(code, 0);
    assert!(dot.starts_with("graph {"));
    assert!(dot.contains("headlabel"));
    assert!(dot.contains("N=1/1"));
}

#[test]
fn spec_files_roundtrip_through_subcommands() {
    let (code, spec_json, _) = run_capture(&[
        "startree",
        "--startree",
        "ray",
        "--m",
        "4",
        "--n",
        "3",
        "--glue",
        "1@1",
        "--emit",
        "spec",
    ]);
    assert_eq!(code, 0);
    let file = write_temp(&spec_json);
    let (code, out, _) = run_capture(&[
        "covolume",
        "--spec",
        file.path().to_str().unwrap(),
        "--n",
        "3",
        "--selector",
        "v0",
    ]);
    assert_eq!(code, 0);
    // 2 + 1/2
    assert_eq!(out, "5/2\n");
}

#[test]
fn growth_subcommands_report_verdicts() {
    let (code, out, _) = run_capture(&["growth", "compare", "exp:3/2", "exp:7/4"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"equivalent\": false"));
    let (code, out, _) = run_capture(&["growth", "acceptable", "exp:2/1"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"verdict\": \"No\""));
    let (code, out, _) = run_capture(&[
        "growth",
        "stabilizer",
        "--startree",
        "ray",
        "--m",
        "6",
        "--n",
        "6",
        "--seq",
        "3,6",
        "--kmax",
        "4",
        "--v0-only",
    ]);
    assert_eq!(code, 0);
    let tab: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(tab["values"][4], "100");
    // p-stabilizer route for p = 2
    let (code, out, _) = run_capture(&[
        "growth",
        "stabilizer",
        "--startree",
        "ray",
        "--m",
        "6",
        "--n",
        "6",
        "--seq",
        "3,6",
        "--kmax",
        "4",
        "--v0-only",
        "--p",
        "2",
    ]);
    assert_eq!(code, 0);
    let tab: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(tab["values"][4], "4");
}

#[test]
fn shrink_reports_unit_group_and_exact_covolume() {
    let (code, out, _) = run_capture(&[
        "shrink",
        "--startree",
        "ray",
        "--m",
        "4",
        "--n",
        "4",
        "--k",
        "2",
        "--depth",
        "6",
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["unit_order"], "6");
    assert_eq!(report["covolume"], "1/4");
    // single star cannot reach level 2: precondition violation
    let (code, _, err) = run_capture(&[
        "shrink",
        "--startree",
        "star",
        "--m",
        "4",
        "--n",
        "4",
        "--k",
        "2",
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("faithful"));
}
