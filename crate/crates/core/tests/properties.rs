//! Property tests across module boundaries.

use std::collections::HashSet;

use pipkit::encoding::perm_rank;
use pipkit::gen::sorted_runs;
use pipkit::graph_oracle::{build_oracle, CsrGraph, OracleConfig};
use pipkit::io::{decode, encode, ARRAY_MAGIC};
use pipkit::merge::{merge, MergeConfig};
use pipkit::reference::{ref_components, ref_kruskal, ref_merge};
use pipkit::verify::partition_matches;
use proptest::prelude::*;

fn simple_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
    (2usize..40).prop_flat_map(|n| {
        let pairs = proptest::collection::vec((0..n, 0..n, 1u64..5), 1..3 * n);
        (Just(n), pairs).prop_map(|(n, raw)| {
            let mut seen = HashSet::new();
            let mut edges: Vec<_> =
                raw.into_iter().filter(|&(u, v, _)| u != v && seen.insert((u.min(v), u.max(v)))).collect();
            // CSR arrays have no isolated vertices.
            for v in 0..n {
                if !edges.iter().any(|&(a, b, _)| a == v || b == v) {
                    let u = (v + 1) % n;
                    seen.insert((u.min(v), u.max(v)));
                    edges.push((v, u, 2));
                }
            }
            (n, edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_matches_references((n, edges) in simple_graph(), seed in any::<u64>()) {
        let mut words = CsrGraph::from_edges(n, &edges).unwrap().into_words();
        let original = words.clone();
        {
            let oracle = build_oracle(&mut words, &OracleConfig::seeded(seed)).unwrap();
            let msf: HashSet<_> = ref_kruskal(n, &edges).into_iter().collect();
            for &(u, v, w) in &edges {
                prop_assert_eq!(oracle.msf_query(u, v).unwrap(), msf.contains(&(w, u.min(v), u.max(v))));
            }
            let labels: Vec<usize> = (0..n).map(|v| oracle.connectivity_query(v).unwrap()).collect();
            prop_assert!(partition_matches(&labels, &ref_components(n, &edges).unwrap()));
            for v in 0..n {
                prop_assert_eq!(oracle.offset_read(v), original[v + 1]);
            }
        }
        // Restored arrays keep the offsets and the edge multiset.
        prop_assert_eq!(&words[..=n], &original[..=n]);
        let mut a = CsrGraph::from_words(words).unwrap().edges();
        let mut b = CsrGraph::from_words(original).unwrap().edges();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn merge_matches_reference(left in 0usize..3000, right in 0usize..3000, seed in any::<u64>(), tuned in any::<bool>()) {
        let mut data = sorted_runs(left, right, seed);
        let want = ref_merge(&data[..left], &data[left..]);
        let cfg = if tuned { MergeConfig::tuned(seed) } else { MergeConfig { seed, ..MergeConfig::default() } };
        merge(&mut data, left, &cfg).unwrap();
        prop_assert_eq!(data, want);
    }

    #[test]
    fn array_files_roundtrip(words in proptest::collection::vec(any::<u64>(), 0..200)) {
        prop_assert_eq!(decode(ARRAY_MAGIC, &encode(ARRAY_MAGIC, &words)).unwrap(), words);
    }

    #[test]
    fn rank_rejects_non_permutations(v in proptest::collection::vec(0usize..6, 1..6)) {
        let mut s = v.clone();
        s.sort_unstable();
        let is_perm = s.iter().enumerate().all(|(i, &x)| x == i + 1);
        prop_assert_eq!(perm_rank(&v).is_ok(), is_perm);
    }
}
