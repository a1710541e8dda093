//! Seeded input generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use crate::error::{PipError, Result};
use crate::graph_oracle::CsrGraph;
use crate::rng::{stream, CounterRng};

/// Margin kept free at both ends of the key space for merge padding.
pub const KEY_MARGIN: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ArrayKind {
    /// Distinct keys in random order.
    RandomDistinct,
    /// Two sorted runs of `size / 2` and `size - size / 2` distinct keys.
    SortedPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphKind {
    Gnm,
    Grid,
    Path,
    Dumbbell,
}

/// Strictly increasing distinct keys with random gaps.
pub fn sorted_distinct(size: usize, seed: u64) -> Vec<u64> {
    let rng = CounterRng::new(seed);
    let span = u64::MAX - 2 * KEY_MARGIN;
    let gap = (span / (size as u64).max(1)).max(1);
    let mut key = KEY_MARGIN;
    (0..size as u64)
        .map(|i| {
            key += 1 + rng.below(stream::GENERATOR, i, 0, gap);
            key
        })
        .collect()
}

pub fn gen_array(size: usize, seed: u64, kind: ArrayKind) -> Vec<u64> {
    match kind {
        ArrayKind::RandomDistinct => {
            let mut keys = sorted_distinct(size, seed);
            keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            keys
        }
        ArrayKind::SortedPair => sorted_runs(size / 2, size - size / 2, seed),
    }
}

/// Two sorted runs of distinct keys back to back, interleaved uniformly at
/// random.
pub fn sorted_runs(left_len: usize, right_len: usize, seed: u64) -> Vec<u64> {
    let size = left_len + right_len;
    let keys = sorted_distinct(size, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    // Selection sampling: a uniform subset of exactly left_len keys.
    let mut need = left_len;
    let mut out = Vec::with_capacity(size);
    let mut right = Vec::with_capacity(right_len);
    for (i, k) in keys.into_iter().enumerate() {
        if need > 0 && rng.random_range(0..size - i) < need {
            out.push(k);
            need -= 1;
        } else {
            right.push(k);
        }
    }
    out.extend(right);
    out
}

fn gnm_edges(n: usize, m: usize, max_weight: u64, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize, u64)>> {
    if n < 2 {
        return Err(PipError::Input("a graph needs at least 2 vertices".into()));
    }
    let possible = n * (n - 1) / 2;
    if m > possible {
        return Err(PipError::Input(format!("{m} edges do not fit a simple graph on {n} vertices")));
    }
    let mut seen = FxHashSet::default();
    let mut edges = Vec::with_capacity(m + n / 2);
    let mut deg = vec![0usize; n];
    let mut add = |u: usize, v: usize, rng: &mut ChaCha8Rng, edges: &mut Vec<_>, deg: &mut [usize]| {
        let (a, b) = (u.min(v), u.max(v));
        if a != b && seen.insert((a, b)) {
            edges.push((a, b, rng.random_range(1..=max_weight.max(1))));
            deg[a] += 1;
            deg[b] += 1;
        }
    };
    while edges.len() < m {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        add(u, v, rng, &mut edges, &mut deg);
    }
    for v in 0..n {
        while deg[v] == 0 {
            let u = rng.random_range(0..n);
            add(u, v, rng, &mut edges, &mut deg);
        }
    }
    Ok(edges)
}

/// Edge list for `kind`. `m` is used by `gnm` and `dumbbell` only; isolated
/// vertices get extra random edges, so the result may exceed `m`.
pub fn gen_edges(kind: GraphKind, n: usize, m: usize, seed: u64, max_weight: u64) -> Result<Vec<(usize, usize, u64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n < 2 {
        return Err(PipError::Input("a graph needs at least 2 vertices".into()));
    }
    let w = |rng: &mut ChaCha8Rng| rng.random_range(1..=max_weight.max(1));
    Ok(match kind {
        GraphKind::Gnm => gnm_edges(n, m, max_weight, &mut rng)?,
        GraphKind::Path => (1..n).map(|v| (v - 1, v, w(&mut rng))).collect(),
        GraphKind::Grid => {
            let width = (n as f64).sqrt().ceil() as usize;
            let mut e = Vec::new();
            for v in 0..n {
                if (v + 1) % width != 0 && v + 1 < n {
                    e.push((v, v + 1, w(&mut rng)));
                }
                if v + width < n {
                    e.push((v, v + width, w(&mut rng)));
                }
            }
            e
        }
        GraphKind::Dumbbell => {
            if n < 4 {
                return Err(PipError::Input("a dumbbell needs at least 4 vertices".into()));
            }
            let half = n / 2;
            let mut e = gnm_edges(half, (m / 2).min(half * (half - 1) / 2), max_weight, &mut rng)?;
            let other = n - half;
            let right = gnm_edges(other, (m - m / 2).min(other * (other - 1) / 2), max_weight, &mut rng)?;
            e.extend(right.into_iter().map(|(u, v, x)| (u + half, v + half, x)));
            e.push((half - 1, half, w(&mut rng)));
            e
        }
    })
}

pub fn gen_graph(kind: GraphKind, n: usize, m: usize, seed: u64, max_weight: u64) -> Result<CsrGraph> {
    CsrGraph::from_edges(n, &gen_edges(kind, n, m, seed, max_weight)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrays_are_distinct_and_reproducible() {
        for size in [0usize, 1, 2, 999, 5000] {
            let a = gen_array(size, 4, ArrayKind::RandomDistinct);
            assert_eq!(a, gen_array(size, 4, ArrayKind::RandomDistinct));
            let mut s = a.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), size);
            assert!(s.first().is_none_or(|&k| k > KEY_MARGIN));
            assert!(s.last().is_none_or(|&k| k < u64::MAX - KEY_MARGIN));
        }
    }

    #[test]
    fn sorted_pair_has_two_runs() {
        let a = gen_array(1001, 9, ArrayKind::SortedPair);
        let (l, r) = a.split_at(500);
        assert!(l.windows(2).all(|p| p[0] < p[1]));
        assert!(r.windows(2).all(|p| p[0] < p[1]));
        assert!(l.last() > r.first());
    }

    #[test]
    fn path_degrees() {
        let g = gen_graph(GraphKind::Path, 3, 0, 1, 10).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!((0..3).map(|v| g.degree(v)).collect::<Vec<_>>(), [1, 2, 1]);
    }

    #[test]
    fn kinds_validate() {
        for kind in [GraphKind::Gnm, GraphKind::Grid, GraphKind::Path, GraphKind::Dumbbell] {
            let g = gen_graph(kind, 50, 80, 3, 5).unwrap();
            assert_eq!(g.n(), 50);
            assert!((0..50).all(|v| g.degree(v) > 0));
            assert_eq!(g, gen_graph(kind, 50, 80, 3, 5).unwrap());
        }
        assert!(gen_graph(GraphKind::Gnm, 4, 7, 0, 1).is_err());
    }
}
