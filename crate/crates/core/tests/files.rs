use std::fs;

use pzero::config::Study;
use pzero::graph::write_edge_list;
use pzero::*;

#[test]
fn edge_list_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ws.el");
    let graph = generate(&GraphSpec::WattsStrogatz { n: 300, k: 6, beta: 0.2, seed: 9 }).unwrap();
    fs::write(&path, write_edge_list(&graph)).unwrap();
    let loaded = load_edge_list(&path).unwrap();
    assert_eq!(loaded.graph, graph);
    assert_eq!(loaded.external_ids, (0..300).collect::<Vec<u64>>());
    let spec = GraphSpec::EdgeList { path: path.clone() };
    assert_eq!(generate(&spec).unwrap(), graph);
}

#[test]
fn load_errors_carry_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.el");
    fs::write(&path, "# comment\n0 1\n2 2\n").unwrap();
    let err = load_edge_list(&path).unwrap_err();
    assert!(err.is_input_format());
    let msg = err.to_string();
    assert!(msg.contains("bad.el") && msg.contains('3'), "{msg}");
    let missing = load_edge_list(dir.path().join("nope.el")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
}

#[test]
fn study_file_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.json");
    fs::write(&path, r#"{"graph": {"kind": "grid2d", "rows": 4}}"#).unwrap();
    let msg = Study::from_path(&path).unwrap_err().to_string();
    assert!(msg.contains("study.json") && msg.contains("cols"), "{msg}");
}
