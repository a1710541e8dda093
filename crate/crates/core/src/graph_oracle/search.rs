//! Bounded Prim-order search for the nearest center.

use std::cell::RefCell;

use min_max_heap::MinMaxHeap;
use rustc_hash::{FxHashMap, FxHashSet};

use super::codec::Codec;
use super::csr::EdgeKey;
use crate::encoding::{ld, Region};

/// Outcome of one bounded search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CenterSearchResult {
    pub center: Option<usize>,
    pub visited: usize,
    /// `(parent, child, weight)` in pop order; empty unless requested.
    pub tree_edges: Vec<(usize, usize, u64)>,
    pub min_label: usize,
    /// Keys at or above this were dropped; `None` means nothing was.
    pub threshold: Option<EdgeKey>,
    /// The whole component was traversed without meeting a center.
    pub exhausted: bool,
}

impl CenterSearchResult {
    pub fn has_tree_edge(&self, key: EdgeKey) -> bool {
        self.tree_edges.iter().any(|&(p, c, w)| EdgeKey::new(p, c, w) == key)
    }
}

#[derive(Default)]
struct Scratch {
    best: FxHashMap<usize, (EdgeKey, usize)>,
    visited: FxHashSet<usize>,
    heap: MinMaxHeap<(EdgeKey, usize, usize)>,
}

impl Scratch {
    fn clear(&mut self) {
        self.best.clear();
        self.visited.clear();
        self.heap.clear();
    }

    fn rebuild_heap(&mut self) {
        self.heap.clear();
        for (&v, &(key, parent)) in &self.best {
            self.heap.push((key, v, parent));
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// Frontier bound for doubling iteration `k`.
pub fn frontier_limit(n: usize, frontier_factor: usize, k: u32) -> usize {
    let lg = (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize;
    frontier_factor.max(1).saturating_mul(lg * lg).saturating_mul(1usize << k.min(40))
}

/// Searches from `u` keeping at most `limit` frontier vertices.
pub fn center_search(codec: &Codec, region: &Region, u: usize, limit: usize, record: bool) -> CenterSearchResult {
    center_search_by(codec, region, u, limit, record, |v| codec.is_center(region, v))
}

/// Same search with an arbitrary center predicate.
pub fn center_search_by(
    codec: &Codec,
    region: &Region,
    u: usize,
    limit: usize,
    record: bool,
    is_center: impl Fn(usize) -> bool,
) -> CenterSearchResult {
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let sc = &mut *guard;
        sc.clear();
        let limit = limit.max(1);
        let mut out = CenterSearchResult { min_label: u, ..Default::default() };
        let mut cutoff: Option<EdgeKey> = None;
        let below = |cutoff: Option<EdgeKey>, key: EdgeKey| cutoff.is_none_or(|c| key < c);

        let mut next = Some((u, u, 0u64));
        loop {
            let Some((v, parent, w)) = next.take() else {
                let Some((key, v, parent)) = sc.heap.pop_min() else {
                    out.exhausted = cutoff.is_none();
                    break;
                };
                if sc.best.get(&v).map(|b| b.0) != Some(key) {
                    continue;
                }
                sc.best.remove(&v);
                next = Some((v, parent, key.weight));
                continue;
            };
            sc.visited.insert(v);
            out.visited += 1;
            out.min_label = out.min_label.min(v);
            if v != u && record {
                out.tree_edges.push((parent, v, w));
            }
            if is_center(v) {
                out.center = Some(v);
                break;
            }
            if out.visited > limit {
                break;
            }
            let (lo, hi) = codec.adjacency(region, v);
            for (idx, p) in (lo..hi).step_by(2).enumerate() {
                let j = ld(region, p) as usize - 1;
                let wj = ld(region, p + 1);
                if sc.visited.contains(&j) {
                    continue;
                }
                let key = EdgeKey::new(v, j, wj);
                if idx >= limit {
                    if below(cutoff, key) {
                        cutoff = Some(key);
                    }
                    break;
                }
                if !below(cutoff, key) {
                    continue;
                }
                if sc.best.get(&j).is_some_and(|b| b.0 <= key) {
                    continue;
                }
                sc.best.insert(j, (key, v));
                sc.heap.push((key, j, v));
            }
            while sc.best.len() > limit {
                let Some((key, j, _)) = sc.heap.pop_max() else { break };
                if sc.best.get(&j).map(|b| b.0) == Some(key) {
                    sc.best.remove(&j);
                    cutoff = Some(key);
                }
            }
            if sc.heap.len() > 4 * sc.best.len() + 64 {
                sc.rebuild_heap();
            }
        }
        out.threshold = cutoff;
        out
    })
}

/// Repeats the search with doubled bounds until it finds a center or
/// exhausts the component. Returns the result and the final iteration.
pub fn locate(
    codec: &Codec,
    region: &Region,
    u: usize,
    frontier_factor: usize,
    record: bool,
) -> (CenterSearchResult, u32) {
    let mut k = 0;
    loop {
        let res = center_search(codec, region, u, frontier_limit(codec.n, frontier_factor, k), record);
        if res.center.is_some() || res.exhausted {
            return (res, k);
        }
        k += 1;
    }
}
