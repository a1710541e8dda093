//! The acceptance suite, shared by `pipkit verify-all` and the acceptance
//! test target. Each criterion runs at a smoke or full scale and reports a
//! pass flag with a one-line detail.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alloc_track;
use crate::buffers::RestorableBuffer;
use crate::encoding::{as_region, ld, perm_rank, perm_unrank, read_block, snapshot, st, write_block, Region};
use crate::error::Result;
use crate::gen::{gen_array, gen_edges, sorted_runs, ArrayKind, GraphKind};
use crate::graph_oracle::{
    build_observed, build_oracle, check_forest, BuildObserver, CenterChoice, Codec, CsrGraph, OracleConfig, Stage,
};
use crate::merge::{
    compute_block_metadata, default_block_size, end_merge, merge, restore_target_cache, Blocks, EndMergeOptions,
    MergeConfig, MergeLayout,
};
use crate::reference::{
    ref_components, ref_enumerate_perms, ref_kruskal, ref_merge, ref_perm_rank, ref_prim_first_center,
};
use crate::shuffle::{
    apply_swaps, buffered_shuffle, buffered_shuffle_with, chunked_shuffle, parallel_knuth_shuffle, parallel_shuffle,
    sequential_knuth, BufferedParams, FixedTargets, SeededTargets, SwapOrder,
};
use crate::stats::{chi_square_homogeneity, chi_square_uniform};

/// Minimum p-value for the distribution tests.
pub const P_MIN: f64 = 1e-3;
/// Extra heap words a merge may hold beyond four blocks.
pub const MERGE_HEAP_SLACK_WORDS: usize = 16;
/// Share of trials that must meet the end-merge round bound.
pub const ROUND_BOUND_SHARE: f64 = 0.99;
/// Largest tolerated share of runs that need a second search bound.
pub const DOUBLING_SHARE_MAX: f64 = 0.01;
/// Largest auxiliary heap as a share of the input bytes at scale.
pub const HEAP_SHARE_MAX: f64 = 0.01;
pub const SPEEDUP_MIN: f64 = 2.0;
pub const SPEEDUP_THREADS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Smoke,
    Full,
}

/// Deliberate damage used to check that the suite notices it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Flip one backup pair in a built graph codec.
    CorruptCodec,
}

#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub scale: Scale,
    pub fault: Fault,
}

impl Ctx {
    pub fn new(scale: Scale) -> Self {
        Ctx { scale, fault: Fault::None }
    }

    fn pick<T>(&self, smoke: T, full: T) -> T {
        match self.scale {
            Scale::Smoke => smoke,
            Scale::Full => full,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    /// A failure that only reflects the machine (too few threads).
    pub informational: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, informational: false, detail: detail.into() }
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    /// Wall-clock budget at full scale.
    pub budget: Duration,
    run: fn(&Ctx) -> Result<Outcome>,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub informational: bool,
    pub elapsed: Duration,
    pub budget: Duration,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let info = if self.informational { " (informational)" } else { "" };
        format!(
            "{status} [{:>2}] {} ({:.1} s, budget {} s){info}: {}",
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

pub fn criteria() -> Vec<Criterion> {
    let c = |id, name, secs, run| Criterion { id, name, budget: Duration::from_secs(secs), run };
    vec![
        c(1, "encoding roundtrip", 5, encoding_roundtrip),
        c(2, "permutation rank bijection", 10, perm_rank_bijection),
        c(3, "buffer identity", 10, buffer_identity),
        c(4, "merge correctness and heap bound", 120, merge_correctness),
        c(5, "end-merge round bound", 120, end_merge_rounds),
        c(6, "sort-phase inversion discipline", 60, inversion_discipline),
        c(7, "shuffle uniformity and replay", 300, shuffle_uniformity),
        c(8, "swap-order invariance", 60, swap_order),
        c(9, "MSF oracle equivalence", 300, msf_equivalence),
        c(10, "connectivity oracle equivalence", 120, connectivity_equivalence),
        c(11, "center search oracle", 120, center_search_oracle),
        c(12, "offset recoverability", 60, offset_recoverability),
        c(13, "in-place accounting at scale", 120, heap_at_scale),
        c(14, "parallel merge speedup", 300, parallel_speedup),
    ]
}

pub fn run_criterion(c: &Criterion, ctx: &Ctx) -> CheckResult {
    let start = Instant::now();
    let out = std::panic::catch_unwind(|| (c.run)(ctx));
    let elapsed = start.elapsed();
    let mut out = match out {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::new(false, format!("error: {e}")),
        Err(_) => Outcome::new(false, "panicked"),
    };
    if ctx.scale == Scale::Full && elapsed > c.budget && out.pass {
        out.pass = false;
        out.detail = format!("over time budget; {}", out.detail);
    }
    CheckResult {
        id: c.id,
        name: c.name,
        pass: out.pass,
        informational: out.informational,
        elapsed,
        budget: c.budget,
        detail: out.detail,
    }
}

/// Runs the criteria whose ids are in `only` (all when `None`).
pub fn verify_all(ctx: &Ctx, only: Option<&[u32]>, mut report: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    criteria()
        .iter()
        .filter(|c| only.is_none_or(|ids| ids.contains(&c.id)))
        .map(|c| {
            let r = run_criterion(c, ctx);
            report(&r);
            r
        })
        .collect()
}

/// True when every result passed or failed only informationally.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.pass || r.informational)
}

fn distinct_values(len: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut seen = HashSet::with_capacity(len);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let v: u64 = rng.random();
        if seen.insert(v) {
            out.push(v);
        }
    }
    out
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

fn encoding_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let trials = ctx.pick(1_000, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..trials {
        let cells = 2 * rng.random_range(1..=32usize);
        let before = rng.random_range(0..4usize);
        let len = before + cells + rng.random_range(0..4usize);
        let mut data = distinct_values(len, &mut rng);
        let orig = data.clone();
        let bits = cells / 2;
        let value = if bits == 64 { rng.random() } else { rng.random::<u64>() & ((1u64 << bits) - 1) };
        let region = as_region(&mut data);
        write_block(region, before, before + cells, value)?;
        let back = read_block(region, before, before + cells)?;
        let now = snapshot(region);
        let outside_same = now[..before] == orig[..before] && now[before + cells..] == orig[before + cells..];
        if back != value || sorted(now) != sorted(orig) || !outside_same {
            return Ok(Outcome::new(false, format!("trial {trial}: {cells} cells, wrote {value:#x}, read {back:#x}")));
        }
    }
    Ok(Outcome::new(true, format!("{trials} random blocks of 2-64 cells")))
}

fn perm_rank_bijection(ctx: &Ctx) -> Result<Outcome> {
    let max_k = ctx.pick(6, 8);
    let mut checked = 0usize;
    for k in 1..=max_k {
        let all = ref_enumerate_perms(k);
        for (r, pi) in all.iter().enumerate() {
            if perm_unrank(r as u64, k)? != *pi || perm_rank(pi)? != r as u64 {
                return Ok(Outcome::new(false, format!("k={k}: rank {r} does not round-trip")));
            }
            if k <= 6 && ref_perm_rank(pi)? != r as u64 {
                return Ok(Outcome::new(false, format!("k={k}: reference rank differs at {r}")));
            }
            checked += 1;
        }
    }
    let anchors = [(vec![1usize], 0u64), (vec![3, 1, 2], 4), (vec![5, 4, 3, 2, 1], 119)];
    for (pi, want) in anchors {
        let got = perm_rank(&pi)?;
        if got != want {
            return Ok(Outcome::new(false, format!("rank of {pi:?} is {got}, expected {want}")));
        }
    }
    Ok(Outcome::new(true, format!("{checked} permutations for k <= {max_k}; anchors 0, 4, 119")))
}

fn canonical_pairs(mut v: Vec<u64>, from: usize, to: usize) -> Vec<u64> {
    for p in (from..to).step_by(2) {
        if v[p] > v[p + 1] {
            v.swap(p, p + 1);
        }
    }
    v
}

fn buffer_identity(ctx: &Ctx) -> Result<Outcome> {
    let trials = ctx.pick(100, 1_000);
    let slot_counts = [1usize, 2, 3, 4, 7];
    let widths = [1u32, 2, 5, 13, 32, 63, 64];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ops_done = 0usize;
    for trial in 0..trials {
        let s = slot_counts[trial % slot_counts.len()];
        let w = widths[(trial / slot_counts.len()) % widths.len()];
        let adjustable = (trial / (slot_counts.len() * widths.len())) % 2 == 1;
        let start = rng.random_range(0..3usize);
        let len = start + RestorableBuffer::footprint(s, w) + 2;
        let buf = RestorableBuffer::new(start, s, w, adjustable)?;
        let mut data = canonical_pairs(distinct_values(len, &mut rng), buf.enc_start(), buf.end());
        let mut model = data.clone();
        let region = as_region(&mut data);
        buf.init(region)?;
        let mut used: HashSet<u64> = model.iter().copied().collect();
        for _ in 0..2 * s + 6 {
            let t = rng.random_range(0..s);
            match (adjustable, rng.random_range(0..3)) {
                (true, 0) => {
                    buf.begin_aux_phase();
                    let v: u64 = rng.random();
                    buf.simulated_write(region, t, v)?;
                    model[start + t] = v;
                    if buf.simulated_read(region, t)? != v {
                        return Ok(Outcome::new(false, format!("trial {trial}: simulated read differs")));
                    }
                }
                (true, 1) => {
                    buf.begin_encoding_phase();
                    let e = buf.enc_start() + rng.random_range(0..buf.enc_len());
                    let v = loop {
                        let v: u64 = rng.random();
                        if used.insert(v) {
                            break v;
                        }
                    };
                    // Pair order carries encoded bits, so the model tracks
                    // each pair as a set and replaces the overwritten value.
                    let first = e - (e - buf.enc_start()) % 2;
                    let old = ld(region, e);
                    buf.encoding_write(region, e, v)?;
                    let at = if model[first] == old { first } else { first + 1 };
                    model[at] = v;
                }
                _ => {
                    let v = rng.random::<u64>() & buf.mask();
                    buf.aux_store(region, t, v);
                    if buf.aux_load(region, t) != v {
                        return Ok(Outcome::new(false, format!("trial {trial}: scratch word differs")));
                    }
                }
            }
            ops_done += 1;
        }
        buf.restore(region);
        if snapshot(region) != canonical_pairs(model, buf.enc_start(), buf.end()) {
            return Ok(Outcome::new(false, format!("trial {trial}: s={s} w={w} adjustable={adjustable} not restored")));
        }
    }
    Ok(Outcome::new(true, format!("{trials} arrays, {ops_done} interleaved operations")))
}

fn require_alloc_tracking() -> Option<Outcome> {
    (!alloc_track::is_active()).then(|| Outcome::new(false, "allocation tracking is not installed in this binary"))
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| crate::PipError::Invariant(e.to_string()))
}

/// Runs `f` on a pool worker. Parallel calls made from outside a pool go
/// through the shared injector queue, which allocates a fresh segment every
/// few dozen jobs; from a worker they use its local deque instead.
fn on_worker<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(thread_pool(0)?.install(f))
}

fn side_len(rng: &mut ChaCha8Rng, max: usize, uniform: bool) -> usize {
    if uniform {
        rng.random_range(0..=max)
    } else {
        ((rng.random::<f64>() * ((max + 1) as f64).ln()).exp() as usize).saturating_sub(1).min(max)
    }
}

fn merge_correctness(ctx: &Ctx) -> Result<Outcome> {
    if let Some(o) = require_alloc_tracking() {
        return Ok(o);
    }
    on_worker(|| merge_trials(ctx))?
}

fn merge_trials(ctx: &Ctx) -> Result<Outcome> {
    let trials = ctx.pick(200, 10_000);
    let max_side = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut elements = 0usize;
    for trial in 0..trials {
        // Half the trials draw side lengths uniformly, half log-uniformly.
        let uniform = trial % 4 == 0;
        let (na, nb) = (side_len(&mut rng, max_side, uniform), side_len(&mut rng, max_side, uniform));
        let seed = trial as u64;
        let mut data = sorted_runs(na, nb, seed);
        let want = ref_merge(&data[..na], &data[na..]);
        let cfg = if trial % 2 == 0 {
            MergeConfig { seed, ..MergeConfig::default() }
        } else {
            MergeConfig { check_inputs: true, ..MergeConfig::tuned(seed) }
        };
        let (stats, heap) = alloc_track::measure(|| merge(&mut data, na, &cfg));
        let stats = stats?;
        let bound = 4 * stats.block_size + MERGE_HEAP_SLACK_WORDS;
        let words = heap.peak_bytes.div_ceil(8);
        if data != want {
            return Ok(Outcome::new(false, format!("trial {trial}: sizes ({na}, {nb}) merged wrongly")));
        }
        if words > bound {
            return Ok(Outcome::new(
                false,
                format!("trial {trial}: sizes ({na}, {nb}), {:?}: {words} heap words > bound {bound}", stats.path),
            ));
        }
        worst = worst.max(words as f64 / bound as f64);
        elements += na + nb;
    }
    Ok(Outcome::new(
        true,
        format!("{trials} merges, {elements} elements; worst heap use {:.0}% of 4b+16", 100.0 * worst),
    ))
}

fn block_size_for(blocks: usize) -> usize {
    let mut b = 64;
    loop {
        let next = default_block_size(blocks * b);
        if next == b {
            return b;
        }
        b = next;
    }
}

fn end_merge_rounds(ctx: &Ctx) -> Result<Outcome> {
    let exps: Vec<u32> = ctx.pick((10..=12).collect(), (10..=16).collect());
    let trials = ctx.pick(20, 100);
    let cfg = MergeConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for e in exps {
        let n_blocks = 1usize << e;
        let b = block_size_for(n_blocks);
        let layout = MergeLayout::new(n_blocks * b, &MergeConfig { block_size: Some(b), ..cfg.clone() })?;
        let bound = 2 * e as usize + 2;
        let mut rounds = Vec::with_capacity(trials);
        for t in 0..trials {
            let seed = ((e as u64) << 32) | t as u64;
            let mut data = sorted_runs(n_blocks / 2 * b, n_blocks / 2 * b, seed);
            let region = as_region(&mut data);
            let blocks = Blocks::divisible(&layout, region, n_blocks / 2 * b)?;
            compute_block_metadata(&blocks);
            rounds.push(end_merge(&blocks, EndMergeOptions { seed, round_cap: false }).rounds);
        }
        rounds.sort_unstable();
        let share = rounds.iter().filter(|&&r| r <= bound).count() as f64 / trials as f64;
        let p99 = rounds[((trials as f64 * 0.99).ceil() as usize).min(trials) - 1];
        ok &= share >= ROUND_BOUND_SHARE;
        parts.push(format!("N=2^{e}: {:.0}% <= {bound}, median {}, p99 {}", 100.0 * share, rounds[trials / 2], p99));
    }
    Ok(Outcome::new(ok, parts.join("; ")))
}

fn inversion_discipline(ctx: &Ctx) -> Result<Outcome> {
    let cases = ctx.pick(100, 1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pairs_checked = 0usize;
    for case in 0..cases {
        let total_blocks = rng.random_range(2..=64usize);
        let na = rng.random_range(1..total_blocks);
        let nb = total_blocks - na;
        let cfg = if case % 2 == 0 {
            MergeConfig::default()
        } else {
            MergeConfig { round_cap: true, cache_target: true, precompute_coins: true, ..MergeConfig::default() }
        };
        let seed = case as u64;
        let b = block_size_for(total_blocks);
        let layout = MergeLayout::new(total_blocks * b, &MergeConfig { block_size: Some(b), ..cfg.clone() })
            .or_else(|_| MergeLayout::new(total_blocks * b, &cfg))?;
        let b = layout.block_size;
        let mut data = sorted_runs(na * b, nb * b, seed);
        let region = as_region(&mut data);
        let blocks = Blocks::divisible(&layout, region, na * b)?;
        compute_block_metadata(&blocks);
        end_merge(&blocks, EndMergeOptions { seed, round_cap: cfg.round_cap });
        restore_target_cache(&blocks);
        let n = blocks.len();
        let span: Vec<(u64, u64)> = (0..n)
            .map(|p| {
                let c = blocks.cells(p);
                (*c.iter().min().expect("block"), *c.iter().max().expect("block"))
            })
            .collect();
        for i in 0..n {
            if i + 1 < n && blocks.endpoint(i) >= blocks.endpoint(i + 1) {
                return Ok(Outcome::new(false, format!("case {case}: blocks {i}, {} not end-sorted", i + 1)));
            }
            for j in i + 1..n {
                if span[i].1 > span[j].0 {
                    pairs_checked += 1;
                    if j != blocks.inv(i).min(n - 1) {
                        return Ok(Outcome::new(
                            false,
                            format!("case {case}: pair ({i}, {j}) but inversion index {}", blocks.inv(i)),
                        ));
                    }
                }
            }
        }
    }
    Ok(Outcome::new(true, format!("{cases} instances, {pairs_checked} out-of-order pairs checked")))
}

fn perm_index(v: &[u64]) -> usize {
    let pi: Vec<usize> = v.iter().map(|&x| x as usize + 1).collect();
    perm_rank(&pi).expect("permutation") as usize
}

fn uniformity_p(n: usize, runs: usize, base: u64, mut f: impl FnMut(&mut Vec<u64>, u64) -> Result<()>) -> Result<f64> {
    let outcomes: usize = (1..=n).product();
    let mut counts = vec![0u64; outcomes];
    for r in 0..runs {
        let mut v: Vec<u64> = (0..n as u64).collect();
        f(&mut v, base + r as u64)?;
        counts[perm_index(&v)] += 1;
    }
    Ok(chi_square_uniform(&counts).1)
}

fn shuffle_uniformity(ctx: &Ctx) -> Result<Outcome> {
    let mut worst = (1.0f64, String::new());
    let mut ok = true;
    for n in 3..=5usize {
        let runs = 120 * (1..=n).product::<usize>();
        let base = (n as u64) << 40;
        let mut variants: Vec<(String, f64)> = vec![
            ("parallel".into(), uniformity_p(n, runs, base, |v, s| parallel_shuffle(v, s).map(drop))?),
            ("buffered".into(), {
                let tiny = BufferedParams::tiny(n);
                uniformity_p(n, runs, base + (1 << 30), |v, s| match &tiny {
                    Some(p) => buffered_shuffle_with(v, &SeededTargets::new(s), p, s).map(drop),
                    None => buffered_shuffle(v, s).map(drop),
                })?
            }),
        ];
        for k in [1, 2, n] {
            let p = uniformity_p(n, runs, base + ((k as u64) << 32), |v, s| {
                chunked_shuffle(v, k, &SeededTargets::new(s)).map(drop)
            })?;
            variants.push((format!("chunked k={k}"), p));
        }
        for (name, p) in variants {
            ok &= p > P_MIN;
            if p < worst.0 {
                worst = (p, format!("{name} n={n}"));
            }
        }
    }
    let instances = ctx.pick(100, 1_000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..instances {
        let n = rng.random_range(1..1000usize);
        let h = FixedTargets::new((0..n).map(|s| rng.random_range(0..=s)).collect())?;
        let start: Vec<u64> = (0..n as u64).collect();
        let mut want = start.clone();
        sequential_knuth(&mut want, &h);
        let mut par = start.clone();
        parallel_knuth_shuffle(&mut par, 0, n, &h)?;
        if par != want {
            return Ok(Outcome::new(false, format!("replay case {case} (n={n}) differs from the sequential shuffle")));
        }
        for k in [1, 2, 7, n] {
            let mut ch = start.clone();
            chunked_shuffle(&mut ch, k, &h)?;
            if ch != want {
                return Ok(Outcome::new(false, format!("replay case {case} (n={n}, k={k}) differs")));
            }
        }
    }
    Ok(Outcome::new(ok, format!("lowest p = {:.4} ({}); {instances} replay instances equal", worst.0, worst.1)))
}

fn swap_order(ctx: &Ctx) -> Result<Outcome> {
    let n = 4;
    let runs = ctx.pick(20_000u64, 100_000);
    let mut desc = vec![0u64; 24];
    let mut asc = vec![0u64; 24];
    for seed in 0..runs {
        let mut v: Vec<u64> = (0..n as u64).collect();
        apply_swaps(&mut v, &SeededTargets::new(seed), SwapOrder::Descending);
        desc[perm_index(&v)] += 1;
        let mut v: Vec<u64> = (0..n as u64).collect();
        apply_swaps(&mut v, &SeededTargets::new(seed + runs), SwapOrder::Ascending);
        asc[perm_index(&v)] += 1;
    }
    let (stat, p) = chi_square_homogeneity(&desc, &asc);
    Ok(Outcome::new(p > P_MIN, format!("{runs} samples each; chi2 = {stat:.2}, p = {p:.4}")))
}

type EdgeList = Vec<(usize, usize, u64)>;

/// Random simple graphs with small weight ranges; every third one is split
/// into several components.
fn graph_corpus(count: usize, max_n: usize, max_m: usize, seed: u64) -> Result<Vec<(usize, EdgeList)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let n = rng.random_range(2..=max_n);
        let max_w = rng.random_range(1..=8u64);
        let parts = if i % 3 == 2 && n >= 8 { rng.random_range(2..=4usize) } else { 1 };
        let mut edges = Vec::new();
        let mut base = 0;
        for p in 0..parts {
            let size = if p + 1 == parts { n - base } else { (n / parts).max(2) };
            let cap = (size * (size - 1) / 2).min(max_m / parts);
            let m = rng.random_range((size - 1).min(cap)..=cap);
            for (u, v, w) in gen_edges(GraphKind::Gnm, size, m, rng.random(), max_w)? {
                edges.push((u + base, v + base, w));
            }
            base += size;
        }
        out.push((n, edges));
    }
    Ok(out)
}

fn msf_equivalence(ctx: &Ctx) -> Result<Outcome> {
    let corpus = graph_corpus(ctx.pick(50, 500), 256, 2048, 9)?;
    let mut queries = 0usize;
    for (g, (n, edges)) in corpus.iter().enumerate() {
        let mut words = CsrGraph::from_edges(*n, edges)?.into_words();
        let oracle = build_oracle(&mut words, &OracleConfig::seeded(g as u64))?;
        let msf: HashSet<_> = ref_kruskal(*n, edges).into_iter().collect();
        for &(u, v, w) in edges {
            queries += 1;
            if oracle.msf_query(u, v)? != msf.contains(&(w, u.min(v), u.max(v))) {
                return Ok(Outcome::new(false, format!("graph {g}: edge ({u}, {v}, {w}) disagrees with Kruskal")));
            }
        }
    }
    Ok(Outcome::new(true, format!("{} graphs, {queries} edge queries, all agree", corpus.len())))
}

/// Whether two labelings induce the same partition.
pub fn partition_matches(labels: &[usize], comp: &[usize]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    labels.iter().zip(comp).all(|(&l, &c)| *fwd.entry(l).or_insert(c) == c && *back.entry(c).or_insert(l) == l)
}

fn check_partition(n: usize, edges: &[(usize, usize, u64)], cfg: &OracleConfig) -> Result<bool> {
    let mut words = CsrGraph::from_edges(n, edges)?.into_words();
    let oracle = build_oracle(&mut words, cfg)?;
    let labels = (0..n).map(|v| oracle.connectivity_query(v)).collect::<Result<Vec<_>>>()?;
    Ok(partition_matches(&labels, &ref_components(n, edges)?))
}

/// A large random component plus a 3-vertex component with every block's
/// center placed in the large one.
pub fn centerless_fixture(big: usize, seed: u64) -> Result<(usize, EdgeList, OracleConfig)> {
    let mut edges = gen_edges(GraphKind::Gnm, big, 3 * big, seed, 20)?;
    edges.extend([(big, big + 1, 4), (big + 1, big + 2, 1)]);
    let n = big + 3;
    let words_len = n + 4 * edges.len() + 1;
    let codec = Codec::plan(n, words_len)?;
    let centers: Vec<usize> = (0..codec.nodes()).map(|i| codec.block_range(i).0).collect();
    Ok((n, edges, OracleConfig { centers: CenterChoice::Fixed(centers), ..OracleConfig::seeded(seed) }))
}

fn connectivity_equivalence(ctx: &Ctx) -> Result<Outcome> {
    let corpus = graph_corpus(ctx.pick(50, 500), 256, 2048, 9)?;
    for (g, (n, edges)) in corpus.iter().enumerate() {
        if !check_partition(*n, edges, &OracleConfig::seeded(g as u64))? {
            return Ok(Outcome::new(false, format!("graph {g}: partition differs from reference")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut fixtures = 0;
    for f in 0..ctx.pick(2, 4) {
        let mut edges = Vec::new();
        let mut base = 0;
        for size in [500usize, 400, 5, 600] {
            for (u, v, w) in gen_edges(GraphKind::Gnm, size, (2 * size).min(size * (size - 1) / 2), rng.random(), 10)? {
                edges.push((u + base, v + base, w));
            }
            base += size;
        }
        if !check_partition(base, &edges, &OracleConfig::seeded(f))? {
            return Ok(Outcome::new(false, format!("multi-component fixture {f} differs")));
        }
        let (n, edges, cfg) = centerless_fixture(400 + 100 * f as usize, f)?;
        let mut words = CsrGraph::from_edges(n, &edges)?.into_words();
        let oracle = build_oracle(&mut words, &cfg)?;
        let small: Vec<usize> = (n - 3..n).map(|v| oracle.connectivity_query(v)).collect::<Result<_>>()?;
        if small != [n - 3; 3] || oracle.center_of(n - 1)?.is_some() {
            return Ok(Outcome::new(false, format!("centerless fixture {f}: labels {small:?}")));
        }
        drop(oracle);
        if !check_partition(n, &edges, &cfg)? {
            return Ok(Outcome::new(false, format!("centerless fixture {f}: partition differs")));
        }
        fixtures += 2;
    }
    Ok(Outcome::new(true, format!("{} graphs and {fixtures} fixtures partition like BFS", corpus.len())))
}

fn center_search_oracle(ctx: &Ctx) -> Result<Outcome> {
    let corpus = graph_corpus(ctx.pick(30, 200), 128, 1024, 11)?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut starts = 0usize;
    let mut doubled_runs = 0usize;
    let mut doubled_searches = 0usize;
    for (g, (n, edges)) in corpus.iter().enumerate() {
        let n = *n;
        let mut words = CsrGraph::from_edges(n, edges)?.into_words();
        let oracle = build_oracle(&mut words, &OracleConfig::seeded(g as u64))?;
        let centers: Vec<bool> = (0..n).map(|_| rng.random_range(0..8) == 0).collect();
        let own: Vec<bool> = (0..n).map(|v| oracle.is_center(v)).collect();
        let mut run_doubled = oracle.stats().max_iteration > 0;
        for u in 0..n {
            for set in [&centers, &own] {
                let got = oracle.center_search_by(u, n, |v| set[v]).center;
                if got != ref_prim_first_center(n, edges, set, u) {
                    return Ok(Outcome::new(false, format!("graph {g}, start {u}: center {got:?} differs from Prim")));
                }
                starts += 1;
            }
            let (_, k) = oracle.locate(u)?;
            if k > 0 {
                doubled_searches += 1;
                run_doubled = true;
            }
        }
        doubled_runs += run_doubled as usize;
    }
    let share = doubled_runs as f64 / corpus.len() as f64;
    Ok(Outcome::new(
        share < DOUBLING_SHARE_MAX,
        format!(
            "{starts} searches match Prim; {doubled_runs}/{} runs ({doubled_searches} searches) needed a second bound",
            corpus.len()
        ),
    ))
}

struct OffsetWatch {
    offsets: Vec<u64>,
    stages: usize,
    corrupt: bool,
    failure: Option<String>,
}

impl BuildObserver for OffsetWatch {
    fn stage(&mut self, stage: Stage, codec: &Codec, region: &Region) {
        self.stages += 1;
        if self.corrupt && stage == Stage::Finished && codec.blocks > 0 {
            let cell = 1 + codec.backups[0].offset;
            let a = ld(region, cell);
            st(region, cell, ld(region, cell + 1));
            st(region, cell + 1, a);
        }
        if self.failure.is_some() {
            return;
        }
        if let Err(e) = check_forest(codec, region) {
            self.failure = Some(format!("{stage:?}: {e}"));
            return;
        }
        if let Some(v) = (0..codec.n).find(|&v| codec.offset_read(region, v) != self.offsets[v]) {
            self.failure = Some(format!("{stage:?}: offset of vertex {v} reads {}", codec.offset_read(region, v)));
        }
    }
}

fn offset_recoverability(ctx: &Ctx) -> Result<Outcome> {
    let builds = ctx.pick(8, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut stages = 0;
    for b in 0..builds {
        let n = rng.random_range(400..=1000usize);
        let m = rng.random_range(2 * n..=3 * n);
        let mut words = CsrGraph::from_edges(n, &gen_edges(GraphKind::Gnm, n, m, rng.random(), 30)?)?.into_words();
        let mut watch = OffsetWatch {
            offsets: words[1..=n].to_vec(),
            stages: 0,
            corrupt: ctx.fault == Fault::CorruptCodec && b == 0,
            failure: None,
        };
        let oracle = build_observed(&mut words, &OracleConfig::seeded(b as u64), &mut watch)?;
        drop(oracle);
        stages += watch.stages;
        if let Some(f) = watch.failure {
            return Ok(Outcome::new(false, format!("build {b}: {f}")));
        }
    }
    Ok(Outcome::new(true, format!("{builds} builds, {stages} stage snapshots match")))
}

fn heap_at_scale(ctx: &Ctx) -> Result<Outcome> {
    if let Some(o) = require_alloc_tracking() {
        return Ok(o);
    }
    on_worker(|| heap_trials(ctx))?
}

fn heap_trials(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.pick(1_000_000, 10_000_000);
    let bytes = (8 * n) as f64;
    let mut data = gen_array(n, 21, ArrayKind::SortedPair);
    let (stats, merge_heap) = alloc_track::measure(|| merge(&mut data, n / 2, &MergeConfig::tuned(21)));
    stats?;
    if data.windows(2).any(|w| w[0] >= w[1]) {
        return Ok(Outcome::new(false, "merge output not sorted"));
    }
    let before = data.clone();
    let (stats, shuffle_heap) = alloc_track::measure(|| buffered_shuffle(&mut data, 22));
    let stats = stats?;
    data.sort_unstable();
    if data != before {
        return Ok(Outcome::new(false, "shuffle output is not a permutation"));
    }
    let (m, s) = (merge_heap.peak_bytes as f64 / bytes, shuffle_heap.peak_bytes as f64 / bytes);
    let pass = m < HEAP_SHARE_MAX && s < HEAP_SHARE_MAX && !stats.fallback;
    Ok(Outcome::new(
        pass,
        format!(
            "n={n}: merge heap {} B ({:.4}%), buffered shuffle heap {} B ({:.4}%){}",
            merge_heap.peak_bytes,
            100.0 * m,
            shuffle_heap.peak_bytes,
            100.0 * s,
            if stats.fallback { ", fell back to heap workspace" } else { "" }
        ),
    ))
}

fn parallel_speedup(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.pick(2_000_000, 50_000_000);
    let hw = std::thread::available_parallelism().map_or(1, |c| c.get());
    let input = gen_array(n, 31, ArrayKind::SortedPair);
    let mut times = Vec::new();
    for threads in [1, SPEEDUP_THREADS] {
        let pool = thread_pool(threads)?;
        let mut data = input.clone();
        let start = Instant::now();
        pool.install(|| merge(&mut data, n / 2, &MergeConfig::tuned(31)))?;
        times.push(start.elapsed().as_secs_f64());
        if data.windows(2).any(|w| w[0] >= w[1]) {
            return Ok(Outcome::new(false, format!("{threads}-thread merge output not sorted")));
        }
    }
    let speedup = times[0] / times[1];
    let pass = speedup >= SPEEDUP_MIN;
    let mut out = Outcome::new(
        pass,
        format!(
            "n={n}: 1 thread {:.2} s, {SPEEDUP_THREADS} threads {:.2} s, speedup {speedup:.2}x; {hw} hardware threads",
            times[0], times[1]
        ),
    );
    out.informational = !pass && hw < SPEEDUP_THREADS;
    Ok(out)
}

/// Orders the corpus so tests can spot-check a single graph.
pub fn sample_corpus_graph(index: usize) -> Result<(usize, EdgeList)> {
    let mut corpus = graph_corpus(index + 1, 256, 2048, 9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(index as u64);
    corpus.shuffle(&mut rng);
    Ok(corpus.swap_remove(0))
}
