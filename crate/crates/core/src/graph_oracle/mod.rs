//! Minimum spanning forest and connectivity oracles stored inside a CSR
//! graph's offset array.
//!
//! Vertices are clustered around random centers (one per block of the
//! offset array) by bounded Prim searches. A Boruvka loop over the cluster
//! graph, with randomized star contraction, builds a union-find forest over
//! blocks whose links carry the cluster graph's spanning forest edges. Queries
//! rerun the searches and consult that forest.

mod codec;
mod csr;
mod search;

pub use codec::{Codec, StoredEdge};
pub use csr::{sort_adjacency, validate_words, CsrGraph, EdgeKey};
pub use search::{center_search, center_search_by, frontier_limit, locate, CenterSearchResult};

use std::ops::Deref;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering::Relaxed};

use rayon::prelude::*;

use crate::encoding::{as_region, ld, Region};
use crate::error::{contract, PipError, Result};
use crate::rng::{stream, CounterRng};

/// How block centers are picked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CenterChoice {
    /// Uniform within each block.
    Seeded,
    /// One vertex per block, in block order.
    Fixed(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub seed: u64,
    pub frontier_factor: usize,
    pub centers: CenterChoice,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { seed: 0, frontier_factor: 4, centers: CenterChoice::Seeded }
    }
}

impl OracleConfig {
    pub fn seeded(seed: u64) -> Self {
        OracleConfig { seed, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct BuildStats {
    pub boruvka_rounds: usize,
    pub contraction_rounds: usize,
    pub searches: usize,
    /// Searches that needed more than one bound.
    pub doubled_searches: usize,
    pub max_iteration: u32,
    pub blocks: usize,
    pub roots: usize,
}

/// Build checkpoints reported to an observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Initialized,
    Boruvka(usize),
    Contraction(usize),
    Finished,
}

pub trait BuildObserver {
    fn stage(&mut self, stage: Stage, codec: &Codec, region: &Region);
}

impl BuildObserver for () {
    fn stage(&mut self, _: Stage, _: &Codec, _: &Region) {}
}

/// Oracle over borrowed or owned storage. Dropping it restores the array.
pub struct Oracle<S: Deref<Target = Region>> {
    storage: S,
    codec: Codec,
    frontier_factor: usize,
    stats: BuildStats,
}

pub type OwnedOracle = Oracle<Box<Region>>;

/// Builds the oracle inside `words`, which must hold a valid CSR array.
pub fn build_oracle<'a>(words: &'a mut [u64], cfg: &OracleConfig) -> Result<Oracle<&'a Region>> {
    build_observed(words, cfg, &mut ())
}

pub fn build_observed<'a, O: BuildObserver>(
    words: &'a mut [u64],
    cfg: &OracleConfig,
    obs: &mut O,
) -> Result<Oracle<&'a Region>> {
    prepare(words)?;
    let region: &Region = as_region(words);
    Oracle::build(region, cfg, obs)
}

/// Builds the oracle taking ownership of the array.
pub fn build_owned(mut words: Vec<u64>, cfg: &OracleConfig) -> Result<OwnedOracle> {
    prepare(&mut words)?;
    let cells: Box<Region> = words.into_iter().map(AtomicU64::new).collect();
    Oracle::build(cells, cfg, &mut ())
}

fn prepare(words: &mut [u64]) -> Result<()> {
    validate_words(words)?;
    sort_adjacency(words)
}

fn pick_centers(codec: &Codec, cfg: &OracleConfig) -> Result<Vec<usize>> {
    let rng = CounterRng::new(cfg.seed);
    let nodes = codec.nodes();
    match &cfg.centers {
        CenterChoice::Seeded => Ok((0..nodes)
            .map(|i| {
                let (lo, hi) = codec.block_range(i);
                lo + rng.below(stream::CENTER, i as u64, 0, (hi - lo) as u64) as usize
            })
            .collect()),
        CenterChoice::Fixed(c) => {
            if c.len() != nodes {
                return contract(format!("{} centers given for {nodes} blocks", c.len()));
            }
            for (i, &v) in c.iter().enumerate() {
                let (lo, hi) = codec.block_range(i);
                if v < lo || v >= hi {
                    return contract(format!("center {v} outside block {i} = [{lo}, {hi})"));
                }
            }
            Ok(c.clone())
        }
    }
}

impl<S: Deref<Target = Region>> Oracle<S> {
    fn build<O: BuildObserver>(storage: S, cfg: &OracleConfig, obs: &mut O) -> Result<Self> {
        if cfg.frontier_factor == 0 {
            return contract("frontier_factor must be positive");
        }
        let region: &Region = &storage;
        let n = ld(region, 0) as usize;
        let mut codec = Codec::plan(n, region.len())?;
        let centers = pick_centers(&codec, cfg)?;
        codec.init(region, &centers);
        let mut oracle = Oracle { codec, frontier_factor: cfg.frontier_factor, stats: BuildStats::default(), storage };
        oracle.stats.blocks = oracle.codec.blocks;
        obs.stage(Stage::Initialized, &oracle.codec, &oracle.storage);
        if !oracle.codec.is_implicit() {
            oracle.run_rounds(cfg.seed, obs)?;
        }
        oracle.stats.roots = (0..oracle.codec.nodes()).filter(|&i| oracle.codec.is_root(&oracle.storage, i)).count();
        obs.stage(Stage::Finished, &oracle.codec, &oracle.storage);
        Ok(oracle)
    }

    fn run_rounds<O: BuildObserver>(&mut self, seed: u64, obs: &mut O) -> Result<()> {
        let rng = CounterRng::new(seed);
        let blocks = self.codec.blocks;
        let mut coin_round = 0u64;
        let round_cap = 2 * blocks + 8;
        loop {
            if self.stats.boruvka_rounds == round_cap {
                return Err(PipError::Invariant(format!("no convergence after {round_cap} rounds")));
            }
            let changed = self.boruvka_round()?;
            self.stats.boruvka_rounds += 1;
            obs.stage(Stage::Boruvka(self.stats.boruvka_rounds), &self.codec, &self.storage);
            if !changed {
                return Ok(());
            }
            loop {
                if coin_round > 64 * (round_cap as u64 + 64) {
                    return Err(PipError::Invariant("star contraction does not converge".into()));
                }
                let linked = self.contraction_round(&rng, coin_round)?;
                coin_round += 1;
                self.stats.contraction_rounds += 1;
                obs.stage(Stage::Contraction(self.stats.contraction_rounds), &self.codec, &self.storage);
                if !linked {
                    break;
                }
            }
        }
    }

    /// Offers every cut edge to the roots on both sides. Returns whether any
    /// root slot changed.
    fn boruvka_round(&mut self) -> Result<bool> {
        let (codec, region) = (&self.codec, &*self.storage);
        (0..codec.blocks).into_par_iter().for_each(|i| {
            if codec.is_root(region, i) {
                codec.slot_reset(region, i);
            }
        });
        let progress = AtomicBool::new(false);
        let searches = AtomicUsize::new(0);
        let doubled = AtomicUsize::new(0);
        let max_iter = AtomicUsize::new(0);
        let failure: std::sync::Mutex<Option<PipError>> = std::sync::Mutex::new(None);
        let frontier_factor = self.frontier_factor;
        let find = |v: usize| {
            let (res, k) = locate(codec, region, v, frontier_factor, false);
            searches.fetch_add(1, Relaxed);
            if k > 0 {
                doubled.fetch_add(1, Relaxed);
                max_iter.fetch_max(k as usize, Relaxed);
            }
            res.center
        };
        (0..codec.n).into_par_iter().with_min_len(8).for_each(|i| {
            let Some(s1) = find(i) else { return };
            let (lo, hi) = codec.adjacency(region, i);
            for p in (lo..hi).step_by(2) {
                let j = ld(region, p) as usize - 1;
                let weight = ld(region, p + 1);
                let Some(s2) = find(j) else { continue };
                if s1 == s2 {
                    continue;
                }
                let roots = codec
                    .find_root(region, codec.block_of(s1))
                    .and_then(|r1| Ok((r1, codec.find_root(region, codec.block_of(s2))?)));
                let (r1, r2) = match roots {
                    Ok(r) => r,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        return;
                    }
                };
                if r1 == r2 {
                    continue;
                }
                let a = codec.slot_offer(region, r1, StoredEdge { src: i, tgt: j, weight, far_center: s2 });
                let b = codec.slot_offer(region, r2, StoredEdge { src: j, tgt: i, weight, far_center: s1 });
                if a || b {
                    progress.store(true, Relaxed);
                }
            }
        });
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        self.stats.searches += searches.into_inner();
        self.stats.doubled_searches += doubled.into_inner();
        self.stats.max_iteration = self.stats.max_iteration.max(max_iter.into_inner() as u32);
        Ok(progress.into_inner())
    }

    /// One coin-flip linking step. Returns whether any root still pointed at
    /// another root before linking.
    fn contraction_round(&mut self, rng: &CounterRng, coin_round: u64) -> Result<bool> {
        let (codec, region) = (&self.codec, &*self.storage);
        let blocks = codec.blocks;
        (0..blocks).into_par_iter().for_each(|i| {
            if codec.is_root(region, i) {
                codec.set_coin(region, i, rng.bit(stream::CONTRACT_COIN, i as u64, coin_round));
            }
        });
        let any = AtomicBool::new(false);
        // Decisions go into each root's own parent field; a root is never
        // passed through by find() while its root flag is set.
        (0..blocks).into_par_iter().try_for_each(|i| -> Result<()> {
            if !codec.is_root(region, i) {
                return Ok(());
            }
            let Some(e) = codec.stored_edge(region, i) else { return Ok(()) };
            let other = codec.find_root(region, codec.block_of(e.far_center))?;
            if other != i {
                any.store(true, Relaxed);
                if !codec.coin_of(region, i) && codec.coin_of(region, other) {
                    codec.set_parent(region, i, other);
                }
            }
            Ok(())
        })?;
        (0..blocks).into_par_iter().for_each(|i| {
            if codec.is_root(region, i) && codec.parent_of(region, i) != i {
                codec.set_root(region, i, false);
            }
        });
        Ok(any.into_inner())
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn region(&self) -> &Region {
        &self.storage
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn n(&self) -> usize {
        self.codec.n
    }

    /// Original offset of vertex `v`.
    pub fn offset_read(&self, v: usize) -> u64 {
        self.codec.offset_read(&self.storage, v)
    }

    /// Bounded search from `u` with frontier limit `limit`, tree edges recorded.
    pub fn center_search(&self, u: usize, limit: usize) -> CenterSearchResult {
        center_search(&self.codec, &self.storage, u, limit, true)
    }

    /// Bounded search treating exactly the vertices accepted by `is_center`
    /// as centers.
    pub fn center_search_by(&self, u: usize, limit: usize, is_center: impl Fn(usize) -> bool) -> CenterSearchResult {
        center_search_by(&self.codec, &self.storage, u, limit, true, is_center)
    }

    pub fn is_center(&self, v: usize) -> bool {
        self.codec.is_center(&self.storage, v)
    }

    /// Doubling search from `v` as queries run it, with the final iteration.
    pub fn locate(&self, v: usize) -> Result<(CenterSearchResult, u32)> {
        self.check_vertex(v)?;
        Ok(locate(&self.codec, &self.storage, v, self.frontier_factor, true))
    }

    /// Center of `v`'s cluster, if its component has one.
    pub fn center_of(&self, v: usize) -> Result<Option<usize>> {
        self.check_vertex(v)?;
        Ok(locate(&self.codec, &self.storage, v, self.frontier_factor, false).0.center)
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.codec.n {
            return contract(format!("vertex {v} outside 0..{}", self.codec.n));
        }
        Ok(())
    }

    fn edge_weight(&self, u: usize, v: usize) -> Result<u64> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let (lo, hi) = self.codec.adjacency(&self.storage, u);
        (lo..hi)
            .step_by(2)
            .find(|&p| ld(&self.storage, p) as usize == v + 1)
            .map(|p| ld(&self.storage, p + 1))
            .ok_or_else(|| PipError::Contract(format!("({u}, {v}) is not an edge")))
    }

    fn path_holds(&self, start: usize, key: EdgeKey) -> Result<bool> {
        let (codec, region) = (&self.codec, &*self.storage);
        let mut x = start;
        for _ in 0..=codec.nodes() {
            if codec.stored_edge(region, x).is_some_and(|e| e.key() == key) && !codec.is_root(region, x) {
                return Ok(true);
            }
            if codec.is_root(region, x) {
                return Ok(false);
            }
            x = codec.parent_of(region, x);
        }
        Err(PipError::Invariant(format!("parent links from block {start} do not reach a root")))
    }

    /// Whether edge `(u, v)` belongs to the minimum spanning forest.
    pub fn msf_query(&self, u: usize, v: usize) -> Result<bool> {
        let weight = self.edge_weight(u, v)?;
        let key = EdgeKey::new(u, v, weight);
        let (codec, region) = (&self.codec, &*self.storage);
        let (ru, _) = locate(codec, region, u, self.frontier_factor, true);
        let (rv, _) = locate(codec, region, v, self.frontier_factor, true);
        match (ru.center, rv.center) {
            (Some(s1), Some(s2)) if s1 != s2 => {
                Ok(self.path_holds(codec.block_of(s1), key)? || self.path_holds(codec.block_of(s2), key)?)
            }
            (Some(_), Some(_)) => Ok(ru.has_tree_edge(key) || rv.has_tree_edge(key)),
            (None, None) => Ok(ru.has_tree_edge(key)),
            _ => Err(PipError::Invariant(format!("only one endpoint of ({u}, {v}) reaches a center"))),
        }
    }

    /// Component label of `v`: equal for two vertices iff they are connected.
    /// The label is a vertex of the component.
    pub fn connectivity_query(&self, v: usize) -> Result<usize> {
        self.check_vertex(v)?;
        let (codec, region) = (&self.codec, &*self.storage);
        let (res, _) = locate(codec, region, v, self.frontier_factor, false);
        match res.center {
            Some(s) => Ok(codec.center_of_block(region, codec.find_root(region, codec.block_of(s))?)),
            None => Ok(res.min_label),
        }
    }

    /// Edges stored at non-root blocks: the cluster graph's spanning forest.
    pub fn forest_edges(&self) -> Vec<StoredEdge> {
        (0..self.codec.blocks)
            .filter(|&i| !self.codec.is_root(&self.storage, i))
            .filter_map(|i| self.codec.stored_edge(&self.storage, i))
            .collect()
    }

    /// Restores the array; the oracle is unusable afterwards.
    pub fn restore(&mut self) {
        self.codec.restore(&self.storage);
    }
}

impl OwnedOracle {
    /// Restores and returns the original array (adjacency lists sorted).
    pub fn into_words(mut self) -> Vec<u64> {
        self.restore();
        std::mem::take(&mut self.storage).into_vec().into_iter().map(AtomicU64::into_inner).collect()
    }
}

impl<S: Deref<Target = Region>> Drop for Oracle<S> {
    fn drop(&mut self) {
        self.restore();
    }
}

/// Checks that parent links over blocks form a forest.
pub fn check_forest(codec: &Codec, region: &Region) -> Result<usize> {
    let mut roots = 0;
    for i in 0..codec.nodes() {
        let r = codec.find_root(region, i)?;
        if r == i {
            roots += 1;
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{ref_components, ref_kruskal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, m: usize, max_w: u64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, u64)> {
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            seen.insert((u, v));
            edges.push((u, v, rng.random_range(0..max_w)));
        }
        while edges.len() < m {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push((a.min(b), a.max(b), rng.random_range(0..max_w)));
            }
        }
        edges
    }

    fn check_against_reference(n: usize, edges: &[(usize, usize, u64)], cfg: &OracleConfig) -> BuildStats {
        let mut words = CsrGraph::from_edges(n, edges).unwrap().into_words();
        let mut sorted = words.clone();
        sort_adjacency(&mut sorted).unwrap();
        let oracle = build_oracle(&mut words, cfg).unwrap();
        let msf: std::collections::HashSet<_> = ref_kruskal(n, edges).into_iter().collect();
        for &(u, v, w) in edges {
            let want = msf.contains(&(w, u.min(v), u.max(v)));
            assert_eq!(oracle.msf_query(u, v).unwrap(), want, "edge ({u}, {v}, {w})");
        }
        let comp = ref_components(n, edges).unwrap();
        let labels: Vec<usize> = (0..n).map(|v| oracle.connectivity_query(v).unwrap()).collect();
        for u in 0..n {
            assert_eq!(comp[labels[u]], comp[u], "label of {u} leaves its component");
        }
        for &(u, v, _) in edges {
            assert_eq!(labels[u], labels[v]);
        }
        let stats = *oracle.stats();
        drop(oracle);
        assert_eq!(words, sorted);
        stats
    }

    #[test]
    fn triangle() {
        let edges = [(0, 1, 1), (1, 2, 2), (0, 2, 3)];
        let mut w = CsrGraph::from_edges(3, &edges).unwrap().into_words();
        let o = build_oracle(&mut w, &OracleConfig::seeded(1)).unwrap();
        assert!(o.msf_query(0, 1).unwrap());
        assert!(o.msf_query(2, 1).unwrap());
        assert!(!o.msf_query(0, 2).unwrap());
        assert!(o.msf_query(0, 0).is_err());
    }

    #[test]
    fn small_random_graphs_match_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..40 {
            let n = rng.random_range(2..120);
            let m = rng.random_range(n - 1..=(3 * n).min(n * (n - 1) / 2));
            let edges = random_graph(n, m, 6, &mut rng);
            check_against_reference(n, &edges, &OracleConfig::seeded(case));
        }
    }

    #[test]
    fn many_blocks_exercise_boruvka() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for case in 0..2 {
            let n = 1200 + 600 * case;
            let edges = random_graph(n, 3 * n, 50, &mut rng);
            let stats = check_against_reference(n, &edges, &OracleConfig::seeded(case as u64));
            assert!(stats.blocks >= 6);
            assert!(stats.boruvka_rounds >= 2);
            assert_eq!(stats.roots, 1);
        }
    }

    #[test]
    fn multi_component_forest() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut edges = Vec::new();
        let parts = [700usize, 600, 5, 800];
        let mut base = 0;
        for &p in &parts {
            for (u, v, w) in random_graph(p, 2 * p, 10, &mut rng) {
                edges.push((u + base, v + base, w));
            }
            base += p;
        }
        check_against_reference(base, &edges, &OracleConfig::seeded(3));
    }

    #[test]
    fn forced_centerless_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let big = 900;
        let mut edges = random_graph(big, 3 * big, 20, &mut rng);
        edges.extend([(big, big + 1, 4), (big + 1, big + 2, 1)]);
        let n = big + 3;
        let words = CsrGraph::from_edges(n, &edges).unwrap().into_words();
        let codec = Codec::plan(n, words.len()).unwrap();
        let centers: Vec<usize> = (0..codec.blocks).map(|i| codec.block_range(i).0).collect();
        let cfg = OracleConfig { centers: CenterChoice::Fixed(centers), ..OracleConfig::seeded(0) };
        check_against_reference(n, &edges, &cfg);
        let mut w = words.clone();
        let o = build_oracle(&mut w, &cfg).unwrap();
        for v in big..n {
            assert_eq!(o.connectivity_query(v).unwrap(), big);
            assert_eq!(o.center_of(v).unwrap(), None);
        }
    }

    #[test]
    fn fixed_centers_must_sit_in_their_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let edges = random_graph(600, 1200, 5, &mut rng);
        let mut w = CsrGraph::from_edges(600, &edges).unwrap().into_words();
        let cfg = OracleConfig { centers: CenterChoice::Fixed(vec![599]), ..Default::default() };
        assert!(build_oracle(&mut w, &cfg).is_err());
    }

    struct Snapshots {
        offsets: Vec<u64>,
        stages: usize,
    }

    impl BuildObserver for Snapshots {
        fn stage(&mut self, _: Stage, codec: &Codec, region: &Region) {
            self.stages += 1;
            for v in 0..codec.n {
                assert_eq!(codec.offset_read(region, v), self.offsets[v]);
            }
            check_forest(codec, region).unwrap();
        }
    }

    #[test]
    fn offsets_readable_at_every_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 1500;
        let edges = random_graph(n, 3 * n, 30, &mut rng);
        let mut w = CsrGraph::from_edges(n, &edges).unwrap().into_words();
        let mut obs = Snapshots { offsets: w[1..=n].to_vec(), stages: 0 };
        let o = build_observed(&mut w, &OracleConfig::seeded(2), &mut obs).unwrap();
        assert!(obs.stages >= 4);
        drop(o);
    }

    #[test]
    fn owned_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let edges = random_graph(800, 2000, 30, &mut rng);
        let words = CsrGraph::from_edges(800, &edges).unwrap().into_words();
        let mut sorted = words.clone();
        sort_adjacency(&mut sorted).unwrap();
        let o = build_owned(words, &OracleConfig::seeded(6)).unwrap();
        assert!(o.stats().blocks >= 2);
        assert_eq!(o.into_words(), sorted);
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let edges = random_graph(1000, 3000, 9, &mut rng);
        let run = || {
            let mut w = CsrGraph::from_edges(1000, &edges).unwrap().into_words();
            let o = build_oracle(&mut w, &OracleConfig::seeded(77)).unwrap();
            (*o.stats(), o.forest_edges())
        };
        assert_eq!(run(), run());
    }
}
