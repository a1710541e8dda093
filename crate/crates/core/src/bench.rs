//! Timed runs that emit one CSV record per (algorithm, size, threads, seed).

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::alloc_track;
use crate::error::{PipError, Result};
use crate::gen::{gen_array, gen_edges, ArrayKind, GraphKind};
use crate::graph_oracle::{build_oracle, CsrGraph, OracleConfig};
use crate::merge::{merge, MergeConfig, MergePath};
use crate::reference::{ref_kruskal, ref_merge};
use crate::shuffle::{buffered_shuffle, parallel_shuffle, sequential_knuth, SeededTargets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchAlgo {
    /// Merge with default settings.
    Merge,
    /// Merge with precomputed coins, round cap and cached targets.
    MergeTuned,
    /// The standard library's sort of the concatenated runs.
    StdSort,
    ShuffleParallel,
    ShuffleBuffered,
    /// Sequential Knuth shuffle with the same targets.
    ShuffleSequential,
    /// Oracle build on a random graph with `size` vertices and `4·size` edges.
    GraphBuild,
}

impl BenchAlgo {
    pub fn name(self) -> &'static str {
        match self {
            BenchAlgo::Merge => "merge",
            BenchAlgo::MergeTuned => "merge-tuned",
            BenchAlgo::StdSort => "std-sort",
            BenchAlgo::ShuffleParallel => "shuffle-parallel",
            BenchAlgo::ShuffleBuffered => "shuffle-buffered",
            BenchAlgo::ShuffleSequential => "shuffle-sequential",
            BenchAlgo::GraphBuild => "graph-build",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub algos: Vec<BenchAlgo>,
    pub sizes: Vec<usize>,
    pub threads: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Cross-check each output against the reference implementation.
    pub verify: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRecord {
    pub algo: &'static str,
    pub size: usize,
    pub block: usize,
    pub threads: usize,
    pub seed: u64,
    /// Wall time in microseconds, at least 1.
    pub us: u64,
    /// Peak heap above the level before the run, in bytes.
    pub heap_peak: usize,
    /// Peak scratch held by one task (stack or heap), in bytes.
    pub scratch_peak: usize,
    /// `pass`, `fail`, or `skipped`.
    pub verified: &'static str,
}

struct Run {
    block: usize,
    scratch_words: usize,
    check: Option<bool>,
}

fn verdict(check: Option<bool>) -> &'static str {
    match check {
        None => "skipped",
        Some(true) => "pass",
        Some(false) => "fail",
    }
}

fn is_permutation_of(out: &[u64], input: &[u64]) -> bool {
    let mut a = out.to_vec();
    let mut b = input.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

fn timed(f: impl FnOnce() -> Result<Run>) -> Result<(Run, u64, usize)> {
    let start = Instant::now();
    let (run, heap) = alloc_track::measure(f);
    let us = (start.elapsed().as_micros() as u64).max(1);
    Ok((run?, us, heap.peak_bytes))
}

/// Runs one configuration on the current thread pool.
fn run_one(algo: BenchAlgo, size: usize, seed: u64, verify: bool) -> Result<(Run, u64, usize)> {
    match algo {
        BenchAlgo::Merge | BenchAlgo::MergeTuned => {
            let cfg = match algo {
                BenchAlgo::Merge => MergeConfig { seed, ..MergeConfig::default() },
                _ => MergeConfig::tuned(seed),
            };
            let left = size / 2;
            let mut data = gen_array(size, seed, ArrayKind::SortedPair);
            let want = verify.then(|| ref_merge(&data[..left], &data[left..]));
            let (run, us, heap) = timed(|| {
                let stats = merge(&mut data, left, &cfg)?;
                // The sort phase holds 2b words per task.
                let scratch_words = if stats.path == MergePath::Blocked { 2 * stats.block_size } else { 0 };
                Ok(Run { block: stats.block_size, scratch_words, check: None })
            })?;
            Ok((Run { check: want.map(|w| w == data), ..run }, us, heap))
        }
        BenchAlgo::StdSort => {
            let mut data = gen_array(size, seed, ArrayKind::SortedPair);
            let want = verify.then(|| ref_merge(&data[..size / 2], &data[size / 2..]));
            let (run, us, heap) = timed(|| {
                data.sort_unstable();
                Ok(Run { block: 0, scratch_words: 0, check: None })
            })?;
            Ok((Run { check: want.map(|w| w == data), ..run }, us, heap))
        }
        BenchAlgo::ShuffleParallel | BenchAlgo::ShuffleBuffered | BenchAlgo::ShuffleSequential => {
            let input = gen_array(size, seed, ArrayKind::RandomDistinct);
            let mut data = input.clone();
            let res = timed(|| {
                let heap_words = match algo {
                    BenchAlgo::ShuffleParallel => parallel_shuffle(&mut data, seed)?.heap_words,
                    BenchAlgo::ShuffleBuffered => buffered_shuffle(&mut data, seed)?.heap_words,
                    _ => {
                        sequential_knuth(&mut data, &SeededTargets::new(seed));
                        0
                    }
                };
                Ok(Run { block: 0, scratch_words: heap_words, check: None })
            })?;
            let check = verify.then(|| {
                if algo == BenchAlgo::ShuffleParallel {
                    let mut seq = input.clone();
                    sequential_knuth(&mut seq, &SeededTargets::new(seed));
                    seq == data
                } else {
                    is_permutation_of(&data, &input)
                }
            });
            Ok((Run { check, ..res.0 }, res.1, res.2))
        }
        BenchAlgo::GraphBuild => {
            let edges = gen_edges(GraphKind::Gnm, size, (4 * size).min(size * (size - 1) / 2), seed, 1 << 20)?;
            let mut words = CsrGraph::from_edges(size, &edges)?.into_words();
            let cfg = OracleConfig::seeded(seed);
            let mut oracle = None;
            let res = timed(|| {
                let o = build_oracle(&mut words, &cfg)?;
                let block = o.codec().block_size;
                oracle = Some(o);
                Ok(Run { block, scratch_words: 0, check: None })
            })?;
            let oracle = oracle.expect("built");
            let check = if verify {
                let msf: HashSet<_> = ref_kruskal(size, &edges).into_iter().collect();
                let mut ok = true;
                for &(u, v, w) in &edges {
                    ok &= oracle.msf_query(u, v)? == msf.contains(&(w, u.min(v), u.max(v)));
                }
                Some(ok)
            } else {
                None
            };
            Ok((Run { check, ..res.0 }, res.1, res.2))
        }
    }
}

/// Runs every combination in `spec`, passing each record to `sink` as soon
/// as it is ready.
pub fn run_bench(spec: &BenchSpec, mut sink: impl FnMut(&BenchRecord) -> Result<()>) -> Result<Vec<BenchRecord>> {
    if spec.algos.is_empty() || spec.sizes.is_empty() || spec.threads.is_empty() || spec.seeds.is_empty() {
        return Err(PipError::Input("bench needs at least one algorithm, size, thread count and seed".into()));
    }
    if spec.threads.contains(&0) {
        return Err(PipError::Input("thread counts must be positive".into()));
    }
    let mut out = Vec::new();
    for &threads in &spec.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| PipError::Invariant(e.to_string()))?;
        for &algo in &spec.algos {
            for &size in &spec.sizes {
                if algo == BenchAlgo::GraphBuild && size < 2 {
                    return Err(PipError::Input("graph-build needs size >= 2".into()));
                }
                for &seed in &spec.seeds {
                    let (run, us, heap_peak) = pool.install(|| run_one(algo, size, seed, spec.verify))?;
                    let rec = BenchRecord {
                        algo: algo.name(),
                        size,
                        block: run.block,
                        threads,
                        seed,
                        us,
                        heap_peak,
                        scratch_peak: 8 * run.scratch_words,
                        verified: verdict(run.check),
                    };
                    sink(&rec)?;
                    out.push(rec);
                }
            }
        }
    }
    Ok(out)
}

/// A CSV writer with the fixed bench header.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(w)
}

pub const CSV_HEADER: &str = "algo,size,block,threads,seed,us,heap_peak,scratch_peak,verified";
