#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;

use proptest::prelude::*;
use zge::error::{exit, CliError};
use zge::io::{load_dataset, write_dataset, DatasetPaths};
use zge::zgem;
use zge_core::Matrix;

fn write_files(dir: &Path, edges: &str, features: &str, labels: &str) -> DatasetPaths {
    let p = DatasetPaths::in_dir(dir);
    fs::write(&p.edges, edges).unwrap();
    fs::write(&p.features, features).unwrap();
    fs::write(&p.labels, labels).unwrap();
    p
}

#[test]
fn duplicate_edge_counts_once() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_files(dir.path(), "0 1\n0 1\n", "0:1\n1:2\n", "0 0\n1 1\n");
    let (ds, stats) = load_dataset(&p).unwrap();
    assert_eq!(ds.n_edges(), 1);
    assert_eq!(stats.duplicate_edges_dropped, 1);
}

#[test]
fn crlf_comments_and_self_loops() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_files(
        dir.path(),
        "# citation edges\r\n0 1\r\n2 2\r\n1 2\r\n",
        "# dim 5\r\n0:1 4:2\r\n\r\n3:1.5\r\n",
        "0 0\r\n1 1\r\n2 0\r\n",
    );
    let (ds, stats) = load_dataset(&p).unwrap();
    assert_eq!((ds.n_nodes(), ds.n_edges(), ds.feature_dim(), ds.n_classes()), (3, 2, 5, 2));
    assert_eq!(stats.self_loops_dropped, 1);
    assert_eq!(ds.features().row_nnz(1), 0);
    assert_eq!(ds.features().get(2, 3), 1.5);
}

fn expect_parse_error(edges: &str, features: &str, labels: &str, line: usize, needle: &str) {
    let dir = tempfile::tempdir().unwrap();
    let p = write_files(dir.path(), edges, features, labels);
    let err = load_dataset(&p).unwrap_err();
    assert_eq!(err.exit_code(), exit::DATA, "{err}");
    match &err {
        CliError::Parse { line: l, message, .. } => {
            assert_eq!(*l, line, "{err}");
            assert!(message.contains(needle), "{err}");
        }
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn malformed_lines_report_line_numbers() {
    expect_parse_error("0 1\n0 x\n", "0:1\n0:1\n", "0 0\n1 0\n", 2, "not a non-negative integer");
    expect_parse_error("0 1 2\n", "0:1\n0:1\n", "0 0\n1 0\n", 1, "two node ids");
    expect_parse_error("0 1\n1 7\n", "0:1\n0:1\n", "0 0\n1 0\n", 2, "out of range");
    expect_parse_error("0 1\n", "# dim 2\n0:1\n5:1\n", "0 0\n1 0\n", 3, "declared dimension");
    expect_parse_error("0 1\n", "0:1\n0;1\n", "0 0\n1 0\n", 2, "index:value");
    expect_parse_error("0 1\n", "0:1\n0:-1\n", "0 0\n1 0\n", 2, "non-negative");
    expect_parse_error("0 1\n", "0:1\n0:1\n", "0 0\n0 1\n", 2, "labeled twice");
}

#[test]
fn class_without_members_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_files(dir.path(), "0 1\n", "0:1\n0:1\n", "0 0\n1 2\n");
    let err = load_dataset(&p).unwrap_err();
    assert_eq!(err.exit_code(), exit::DATA, "{err}");
    let p = write_files(dir.path(), "0 1\n", "0:1\n0:1\n", "0 0\n");
    assert!(load_dataset(&p).unwrap_err().to_string().contains("node 1 has no label"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn serialization_round_trip_is_idempotent(seed in 0u64..1000, n in 10usize..60, classes in 2usize..5) {
        let ds = common::planted_dataset(seed, n, classes, 20, 2);
        let dir = tempfile::tempdir().unwrap();
        let p = DatasetPaths::in_dir(dir.path());
        write_dataset(&ds, &p).unwrap();
        let (back, _) = load_dataset(&p).unwrap();
        prop_assert_eq!(&back, &ds);
        let q = DatasetPaths::in_dir(&dir.path().join("again"));
        write_dataset(&back, &q).unwrap();
        for (a, b) in p.all().iter().zip(q.all()) {
            prop_assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        }
        prop_assert_eq!(back.average_degree() * n as f64, 2.0 * back.n_edges() as f64);
    }
}

#[test]
fn zgem_round_trip_and_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.zgem");
    let m = Matrix::from_fn(3, 4, |i, j| i as f64 - 0.25 * j as f64);
    zgem::write(&path, &m).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"ZGEM");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 4);
    assert_eq!(bytes.len(), 24 + 12 * 8);
    assert_eq!(zgem::read(&path).unwrap(), m);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    fs::write(&path, &bad).unwrap();
    let err = zgem::read(&path).unwrap_err();
    assert!(matches!(err, CliError::Integrity { .. }) && err.to_string().contains("magic"), "{err}");
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(zgem::read(&path).unwrap_err(), CliError::Integrity { .. }));
    let mut v2 = bytes.clone();
    v2[4] = 2;
    fs::write(&path, &v2).unwrap();
    assert!(zgem::read(&path).unwrap_err().to_string().contains("version"));
}

#[test]
fn checkpoint_round_trip() {
    use zge_core::model::{GcnHyper, GcnModel};
    let dir = tempfile::tempdir().unwrap();
    let model = GcnModel::init(5, GcnHyper { hidden: 7, epochs: 3, ..Default::default() }, 42);
    zge::checkpoint::save_model(dir.path(), &model, "abc").unwrap();
    let back = zge::checkpoint::load_model(dir.path()).unwrap();
    assert_eq!((back.w1, back.slopes, back.w2, back.hyper, back.seed), (model.w1, model.slopes, model.w2, model.hyper, model.seed));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_hash = abc") && manifest.contains("w1 = 5x7"));
}
