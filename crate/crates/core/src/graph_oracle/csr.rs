//! CSR word arrays: `I[0] = n`, `I[1..=n]` holds for each vertex the index
//! in `I` of its last adjacency word, and the rest holds `(neighbor, weight)`
//! entries with 1-based neighbor labels. Every undirected edge is listed at
//! both endpoints.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{PipError, Result};

/// Total edge order: weight first, then the smaller and larger endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub weight: u64,
    pub lo: usize,
    pub hi: usize,
}

impl EdgeKey {
    pub fn new(u: usize, v: usize, weight: u64) -> Self {
        EdgeKey { weight, lo: u.min(v), hi: u.max(v) }
    }
}

/// Owned CSR word array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsrGraph {
    words: Vec<u64>,
}

/// Vertex and edge counts of a validated word array.
pub fn validate_words(words: &[u64]) -> Result<(usize, usize)> {
    let bad = |msg: String| Err(PipError::Input(msg));
    let Some(&n) = words.first() else { return bad("empty graph array".into()) };
    let n = n as usize;
    if n == 0 || words.len() < n + 1 || !(words.len() - 1 - n).is_multiple_of(4) {
        return bad(format!("array of {} words cannot hold {n} vertices plus 4m entries", words.len()));
    }
    let m = (words.len() - 1 - n) / 4;
    let mut prev = n as u64;
    for v in 0..n {
        let a = words[1 + v];
        if a <= prev {
            return bad(format!("vertex {} has degree 0 or offsets are not increasing", v + 1));
        }
        if !(a - prev).is_multiple_of(2) {
            return bad(format!("vertex {} has an odd number of adjacency words", v + 1));
        }
        prev = a;
    }
    if prev as usize != words.len() - 1 {
        return bad("last offset must point at the final word".into());
    }
    let mut half: Vec<(usize, usize, u64)> = Vec::with_capacity(2 * m);
    let mut lo = n + 1;
    for v in 0..n {
        let hi = words[1 + v] as usize;
        for p in (lo..=hi).step_by(2) {
            let label = words[p] as usize;
            if label == 0 || label > n {
                return bad(format!("neighbor label {label} of vertex {} out of range", v + 1));
            }
            if label - 1 == v {
                return bad(format!("self loop at vertex {}", v + 1));
            }
            half.push((v, label - 1, words[p + 1]));
        }
        lo = hi + 1;
    }
    let mut fwd: Vec<_> = half.iter().map(|&(u, v, w)| (u, v, w)).collect();
    let mut rev: Vec<_> = half.iter().map(|&(u, v, w)| (v, u, w)).collect();
    fwd.par_sort_unstable();
    rev.par_sort_unstable();
    if fwd != rev {
        return bad("adjacency lists are not symmetric".into());
    }
    if fwd.windows(2).any(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
        return bad("parallel edges are not supported".into());
    }
    Ok((n, m))
}

impl CsrGraph {
    pub fn from_words(words: Vec<u64>) -> Result<Self> {
        validate_words(&words)?;
        Ok(CsrGraph { words })
    }

    /// Builds the CSR array of a simple graph on 0-based vertices.
    pub fn from_edges(n: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let mut deg = vec![0usize; n];
        for &(u, v, _) in edges {
            if u >= n || v >= n {
                return Err(PipError::Input(format!("edge ({u}, {v}) outside {n} vertices")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut words = vec![0u64; n + 4 * edges.len() + 1];
        words[0] = n as u64;
        let mut next = Vec::with_capacity(n);
        let mut end = n;
        for v in 0..n {
            next.push(end + 1);
            end += 2 * deg[v];
            words[1 + v] = end as u64;
        }
        for &(u, v, w) in edges {
            for (a, b) in [(u, v), (v, u)] {
                words[next[a]] = b as u64 + 1;
                words[next[a] + 1] = w;
                next[a] += 2;
            }
        }
        Self::from_words(words)
    }

    /// Parses whitespace-separated `u v w` lines with 1-based labels.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0usize;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| -> Result<u64> {
                s.parse().map_err(|_| PipError::Input(format!("line {}: cannot parse {s:?}", ln + 1)))
            };
            if parts.len() != 3 {
                return Err(PipError::Input(format!("line {}: expected `u v w`", ln + 1)));
            }
            let (u, v, w) = (parse(parts[0])? as usize, parse(parts[1])? as usize, parse(parts[2])?);
            if u == 0 || v == 0 {
                return Err(PipError::Input(format!("line {}: labels start at 1", ln + 1)));
            }
            n = n.max(u).max(v);
            edges.push((u - 1, v - 1, w));
        }
        Self::from_edges(n, &edges)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    pub fn n(&self) -> usize {
        self.words[0] as usize
    }

    pub fn m(&self) -> usize {
        (self.words.len() - 1 - self.n()) / 4
    }

    pub fn degree(&self, v: usize) -> usize {
        let prev = if v == 0 { self.n() as u64 } else { self.words[v] };
        ((self.words[1 + v] - prev) / 2) as usize
    }

    /// `(neighbor, weight)` entries of `v`, 0-based.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let lo = if v == 0 { self.n() + 1 } else { self.words[v] as usize + 1 };
        let hi = self.words[1 + v] as usize;
        (lo..=hi).step_by(2).map(move |p| (self.words[p] as usize - 1, self.words[p + 1]))
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        (0..self.n())
            .flat_map(|u| self.neighbors(u).filter(move |&(v, _)| u < v).map(move |(v, w)| (u, v, w)))
            .collect()
    }
}

fn by_weight_then_label(a: &[u64; 2], b: &[u64; 2]) -> Ordering {
    (a[1], a[0]).cmp(&(b[1], b[0]))
}

/// Sorts every adjacency list by `(weight, neighbor)`. Offsets are untouched.
pub fn sort_adjacency(words: &mut [u64]) -> Result<()> {
    let (n, _) = validate_words(words)?;
    let (head, entries) = words.split_at_mut(n + 1);
    sort_lists(&head[1..], entries, n + 1, 0, n);
    Ok(())
}

/// Sorts the lists of vertices `[lo, hi)`; `entries` starts at word `start`.
fn sort_lists(offsets: &[u64], entries: &mut [u64], start: usize, lo: usize, hi: usize) {
    if hi - lo <= 64 {
        let mut from = 0;
        for &end in &offsets[lo..hi] {
            let to = end as usize + 1 - start;
            let (list, _) = entries[from..to].as_chunks_mut::<2>();
            list.sort_unstable_by(by_weight_then_label);
            from = to;
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    let split = offsets[mid - 1] as usize + 1 - start;
    let (left, right) = entries.split_at_mut(split);
    rayon::join(|| sort_lists(offsets, left, start, lo, mid), || sort_lists(offsets, right, start + split, mid, hi));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> CsrGraph {
        CsrGraph::from_edges(3, &[(0, 1, 3), (1, 2, 1), (0, 2, 2)]).unwrap()
    }

    #[test]
    fn layout_of_triangle() {
        let g = triangle();
        assert_eq!(g.words().len(), 3 + 12 + 1);
        assert_eq!(&g.words()[..4], &[3, 7, 11, 15]);
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 3);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn sorting_orders_by_weight() {
        let g = triangle();
        let mut w = g.into_words();
        sort_adjacency(&mut w).unwrap();
        let g = CsrGraph::from_words(w).unwrap();
        for v in 0..3 {
            let ws: Vec<u64> = g.neighbors(v).map(|(_, w)| w).collect();
            assert!(ws.windows(2).all(|p| p[0] <= p[1]));
        }
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), [(2, 2), (1, 3)]);
    }

    #[test]
    fn sorted_input_unchanged_and_large_graphs_stay_valid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 500;
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.random_range(0..v), v, rng.random_range(0..20)));
        }
        let mut w = CsrGraph::from_edges(n, &edges).unwrap().into_words();
        sort_adjacency(&mut w).unwrap();
        let once = w.clone();
        sort_adjacency(&mut w).unwrap();
        assert_eq!(w, once);
        let g = CsrGraph::from_words(w).unwrap();
        for v in 0..n {
            let l: Vec<_> = g.neighbors(v).map(|(u, w)| (w, u)).collect();
            assert!(l.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn validation_errors() {
        assert!(CsrGraph::from_edges(3, &[(0, 1, 1)]).is_err());
        assert!(CsrGraph::from_edges(2, &[(0, 1, 1), (1, 0, 2)]).is_err());
        assert!(CsrGraph::from_edges(2, &[(0, 0, 1), (0, 1, 1)]).is_err());
        assert!(CsrGraph::from_words(vec![2, 4, 3, 2, 1, 1, 1]).is_err());
        let mut w = triangle().into_words();
        w[4] = 3;
        assert!(CsrGraph::from_words(w).is_err());
    }

    #[test]
    fn parses_text() {
        let g = CsrGraph::parse_edge_list("# tri\n1 2 3\n2 3 1\n\n1 3 2\n").unwrap();
        assert_eq!(g, triangle());
        assert!(CsrGraph::parse_edge_list("1 2").is_err());
        assert!(CsrGraph::parse_edge_list("0 1 1").is_err());
    }
}
