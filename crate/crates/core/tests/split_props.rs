mod common;

use proptest::prelude::*;
use rand::Rng;
use zge_core::graph::{make_zero_shot_split, Dataset};
use zge_core::CsrMatrix;

fn dataset(seed: u64, n: usize, classes: usize) -> Dataset {
    let mut r = common::rng(seed);
    let edges = common::random_graph(&mut r, n, n);
    let feats: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, r.random_range(0..6), 1.0)).collect();
    let labels: Vec<usize> = (0..n).map(|i| if i < classes { i } else { r.random_range(0..classes) }).collect();
    Dataset::from_edges(&edges, CsrMatrix::from_triplets(n, 6, &feats).unwrap(), labels).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_and_balances(seed in 0u64..10_000, n in 60usize..200, classes in 3usize..7, unseen in 1usize..3) {
        let ds = dataset(seed, n, classes);
        let split = make_zero_shot_split(&ds, 0.2, unseen, seed).unwrap();
        prop_assert_eq!(split.unseen.len(), unseen);
        prop_assert_eq!(split.seen.len() + unseen, classes);
        let total = (0.2 * n as f64).round() as usize;
        prop_assert_eq!(split.probe_train.len(), total);
        prop_assert_eq!(split.probe_train.len() + split.test.len(), n);
        for v in &split.test {
            prop_assert!(!split.probe_train.contains(v));
        }
        for v in &split.train_labeled {
            prop_assert!(split.probe_train.contains(v));
            prop_assert!(split.is_seen(ds.labels()[*v]));
        }
        let in_seen = split.probe_train.iter().filter(|&&v| split.is_seen(ds.labels()[v])).count();
        prop_assert_eq!(in_seen, split.train_labeled.len());
        prop_assert_eq!(make_zero_shot_split(&ds, 0.2, unseen, seed).unwrap(), split);
    }
}

#[test]
fn invalid_split_arguments() {
    let ds = dataset(1, 50, 4);
    assert!(make_zero_shot_split(&ds, 0.2, 4, 0).is_err());
    assert!(make_zero_shot_split(&ds, 0.2, 0, 0).is_err());
    assert!(make_zero_shot_split(&ds, 1.5, 1, 0).is_err());
    assert!(make_zero_shot_split(&ds, 0.01, 1, 0).is_err());
}
