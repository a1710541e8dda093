//! Brute-force oracles. Deliberately simple and independent of the main
//! modules; they allocate freely.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{contract, Result};

/// Undirected weighted edge on 0-based vertices.
pub type RefEdge = (usize, usize, u64);

/// `(weight, min endpoint, max endpoint)`; the total edge order.
pub fn ref_edge_key(e: RefEdge) -> (u64, usize, usize) {
    (e.2, e.0.min(e.1), e.0.max(e.1))
}

/// Two-finger merge.
pub fn ref_merge(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Sequential Knuth shuffle: for `i = n-1..1`, swap `i` with a uniform index in `[0, i]`.
pub fn ref_shuffle<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut out = items.to_vec();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Kruskal under the edge-key order. Returns the forest's keys, sorted.
pub fn ref_kruskal(n: usize, edges: &[RefEdge]) -> Vec<(u64, usize, usize)> {
    let mut keys: Vec<_> = edges.iter().map(|&e| ref_edge_key(e)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for k in keys {
        let (ru, rv) = (find(&mut parent, k.1), find(&mut parent, k.2));
        if ru != rv {
            parent[ru] = rv;
            out.push(k);
        }
    }
    out
}

/// BFS labeling; each vertex gets the smallest vertex of its component.
pub fn ref_components(n: usize, edges: &[RefEdge]) -> Result<Vec<usize>> {
    if n > 0 && edges.is_empty() {
        return contract("graph has no edges");
    }
    let adj = adjacency(n, edges);
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &(y, _) in &adj[x] {
                if label[y] == usize::MAX {
                    label[y] = s;
                    q.push_back(y);
                }
            }
        }
    }
    Ok(label)
}

fn adjacency(n: usize, edges: &[RefEdge]) -> Vec<Vec<(usize, u64)>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    adj
}

/// Unbounded Prim from `u`; returns the first popped vertex that is a center.
/// The frontier is ordered by the key of each vertex's best connecting edge.
pub fn ref_prim_first_center(n: usize, edges: &[RefEdge], is_center: &[bool], u: usize) -> Option<usize> {
    let adj = adjacency(n, edges);
    let mut visited = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(((0u64, 0usize, 0usize), u)));
    while let Some(Reverse((_, x))) = heap.pop() {
        if visited[x] {
            continue;
        }
        visited[x] = true;
        if is_center[x] {
            return Some(x);
        }
        for &(y, w) in &adj[x] {
            if !visited[y] {
                heap.push(Reverse((ref_edge_key((x, y, w)), y)));
            }
        }
    }
    None
}

/// All permutations of `1..=k` in the order produced by the rank recurrence:
/// grouped by first element, each group listing the reduced tails in order.
pub fn ref_enumerate_perms(k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![1]];
    }
    let tails = ref_enumerate_perms(k - 1);
    let mut out = Vec::with_capacity(tails.len() * k);
    for first in 1..=k {
        for t in &tails {
            let mut p = Vec::with_capacity(k);
            p.push(first);
            p.extend(t.iter().map(|&x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

/// Position of `pi` in `ref_enumerate_perms`; `k ≤ 8`.
pub fn ref_perm_rank(pi: &[usize]) -> Result<u64> {
    let k = pi.len();
    if k == 0 || k > 8 {
        return contract("exhaustive ranking supports 1 ≤ k ≤ 8");
    }
    match ref_enumerate_perms(k).iter().position(|p| p == pi) {
        Some(r) => Ok(r as u64),
        None => contract(format!("{pi:?} is not a permutation of 1..={k}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::perm_rank;

    #[test]
    fn merge_examples() {
        assert_eq!(ref_merge(&[1, 3], &[2]), [1, 2, 3]);
        assert_eq!(ref_merge(&[], &[4, 5]), [4, 5]);
    }

    #[test]
    fn shuffle_is_deterministic_permutation() {
        let v: Vec<u32> = (0..100).collect();
        let a = ref_shuffle(&v, 7);
        assert_eq!(a, ref_shuffle(&v, 7));
        let mut s = a.clone();
        s.sort();
        assert_eq!(s, v);
        assert_eq!(ref_shuffle(&[9], 1), [9]);
    }

    #[test]
    fn kruskal_examples() {
        let tri = [(0, 1, 1), (1, 2, 2), (0, 2, 3)];
        assert_eq!(ref_kruskal(3, &tri), [(1, 0, 1), (2, 1, 2)]);
        let square = [(0, 1, 5), (1, 2, 5), (2, 3, 5), (3, 0, 5)];
        let f = ref_kruskal(4, &square);
        assert_eq!(f, [(5, 0, 1), (5, 0, 3), (5, 1, 2)]);
        assert_eq!(f, ref_kruskal(4, &square));
    }

    #[test]
    fn components_examples() {
        assert_eq!(ref_components(4, &[(0, 1, 1), (2, 3, 1)]).unwrap(), [0, 0, 2, 2]);
        assert!(ref_components(2, &[]).is_err());
    }

    #[test]
    fn prim_first_center_examples() {
        let path = [(0, 1, 1), (1, 2, 1), (2, 3, 1)];
        let mut c = [false; 4];
        c[3] = true;
        assert_eq!(ref_prim_first_center(4, &path, &c, 0), Some(3));
        assert_eq!(ref_prim_first_center(4, &path, &c, 3), Some(3));
        assert_eq!(ref_prim_first_center(4, &path, &[false; 4], 0), None);
    }

    #[test]
    fn perm_rank_matches_encoding_exhaustively() {
        assert_eq!(ref_perm_rank(&[1]).unwrap(), 0);
        for k in 1..=6 {
            for (r, p) in ref_enumerate_perms(k).iter().enumerate() {
                assert_eq!(perm_rank(p).unwrap(), r as u64);
            }
        }
    }
}
