//! Uniform random permutation in place.
//!
//! Every index `s` owns one swap with target `H[s]`, uniform in `[0, s]`,
//! and the sequential shuffle runs them from the top index down. The
//! parallel variants resolve conflicts with reservations so that the result
//! equals that sequential run for the same targets.

mod buffered;
mod encoder;
mod engine;
mod workspace;

pub use buffered::{buffered_shuffle, buffered_shuffle_with, BufferedParams};
pub use encoder::{uniform_encoder_apply, EncoderSpec};
pub use engine::{table_capacity, workspace_words};
pub use workspace::{BufferWorkspace, HeapWorkspace, Workspace};

use engine::{Access, Engine};

use crate::encoding::as_region;
use crate::error::{contract, Result};
use crate::rng::{stream, CounterRng};

/// Source of swap targets; `target(s)` must lie in `[0, s]` and be a pure
/// function of `s`.
pub trait TargetSource: Sync {
    fn target(&self, s: usize) -> usize;
}

#[derive(Clone, Copy, Debug)]
pub struct SeededTargets {
    rng: CounterRng,
}

impl SeededTargets {
    pub fn new(seed: u64) -> Self {
        SeededTargets { rng: CounterRng::new(seed) }
    }
}

impl TargetSource for SeededTargets {
    #[inline]
    fn target(&self, s: usize) -> usize {
        self.rng.below(stream::SWAP_TARGET, s as u64, 0, s as u64 + 1) as usize
    }
}

/// Targets given explicitly, for replay tests.
#[derive(Clone, Debug)]
pub struct FixedTargets(Vec<usize>);

impl FixedTargets {
    pub fn new(targets: Vec<usize>) -> Result<Self> {
        if let Some((i, &j)) = targets.iter().enumerate().find(|&(i, &j)| j > i) {
            return contract(format!("target {j} for index {i} exceeds the index"));
        }
        Ok(FixedTargets(targets))
    }
}

impl TargetSource for FixedTargets {
    #[inline]
    fn target(&self, s: usize) -> usize {
        self.0[s]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShuffleStats {
    /// Reservation rounds over all chunks.
    pub rounds: usize,
    pub chunks: usize,
    /// Words of heap workspace held.
    pub heap_words: usize,
    /// The buffered variant fell back to the heap-backed shuffle.
    pub fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapOrder {
    Descending,
    Ascending,
}

/// Sequential shuffle: for `s = n-1` down to `1`, swap `s` with its target.
pub fn sequential_knuth<T, S: TargetSource>(data: &mut [T], targets: &S) {
    apply_swaps(data, targets, SwapOrder::Descending)
}

/// Applies every index's swap once, in the given index order.
pub fn apply_swaps<T, S: TargetSource>(data: &mut [T], targets: &S, order: SwapOrder) {
    let n = data.len();
    match order {
        SwapOrder::Descending => (1..n).rev().for_each(|s| data.swap(s, targets.target(s))),
        SwapOrder::Ascending => (1..n).for_each(|s| data.swap(s, targets.target(s))),
    }
}

/// Runs the swaps of indices `[lo, hi)` as one chunk with a heap workspace.
pub fn parallel_knuth_shuffle<S: TargetSource>(
    data: &mut [u64],
    lo: usize,
    hi: usize,
    targets: &S,
) -> Result<ShuffleStats> {
    if lo > hi || hi > data.len() {
        return contract(format!("index range [{lo}, {hi}) outside array of {}", data.len()));
    }
    let k = (hi - lo).max(1);
    let ws = HeapWorkspace::new(workspace_words(k, false));
    let region = as_region(data);
    let rounds = Engine::new(region, &ws, targets, Access::Plain, k)?.run(lo, hi);
    Ok(ShuffleStats { rounds, chunks: usize::from(hi > lo), heap_words: ws.len(), fallback: false })
}

/// Processes all indices top-down in chunks of `k`, one reservation table reused.
pub fn chunked_shuffle<S: TargetSource>(data: &mut [u64], k: usize, targets: &S) -> Result<ShuffleStats> {
    if k == 0 {
        return contract("chunk size must be at least 1");
    }
    let ws = HeapWorkspace::new(workspace_words(k, false));
    chunked_shuffle_in(data, k, targets, &ws)
}

/// Chunked shuffle over a caller-provided workspace.
pub fn chunked_shuffle_in<S: TargetSource, W: Workspace>(
    data: &mut [u64],
    k: usize,
    targets: &S,
    ws: &W,
) -> Result<ShuffleStats> {
    let n = data.len();
    let region = as_region(data);
    let rounds = Engine::new(region, ws, targets, Access::Plain, k)?.run(0, n);
    Ok(ShuffleStats { rounds, chunks: n.div_ceil(k), heap_words: 0, fallback: false })
}

/// Seeded full-array parallel shuffle.
pub fn parallel_shuffle(data: &mut [u64], seed: u64) -> Result<ShuffleStats> {
    let n = data.len();
    parallel_knuth_shuffle(data, 0, n, &SeededTargets::new(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::perm_rank;
    use crate::stats::{chi_square_homogeneity, chi_square_uniform};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_targets(n: usize, rng: &mut ChaCha8Rng) -> FixedTargets {
        FixedTargets::new((0..n).map(|s| rng.random_range(0..=s)).collect()).unwrap()
    }

    fn perm_index(v: &[u64]) -> usize {
        let pi: Vec<usize> = v.iter().map(|&x| x as usize + 1).collect();
        perm_rank(&pi).unwrap() as usize
    }

    fn factorial(n: usize) -> usize {
        (1..=n).product()
    }

    #[test]
    fn singleton_is_identity() {
        let mut v = vec![42];
        parallel_shuffle(&mut v, 3).unwrap();
        assert_eq!(v, [42]);
        let mut e: Vec<u64> = vec![];
        parallel_shuffle(&mut e, 3).unwrap();
    }

    #[test]
    fn fixed_targets_reject_out_of_range() {
        assert!(FixedTargets::new(vec![0, 2]).is_err());
    }

    #[test]
    fn replay_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..300 {
            let n = rng.random_range(1..1000);
            let h = random_targets(n, &mut rng);
            let start: Vec<u64> = (0..n as u64).collect();
            let mut want = start.clone();
            sequential_knuth(&mut want, &h);
            let mut par = start.clone();
            parallel_knuth_shuffle(&mut par, 0, n, &h).unwrap();
            assert_eq!(par, want, "case {case}");
            for k in [1, 2, 7, n] {
                let mut ch = start.clone();
                chunked_shuffle(&mut ch, k, &h).unwrap();
                assert_eq!(ch, want, "case {case} k {k}");
            }
        }
    }

    #[test]
    fn partial_range_matches_sequential_suffix_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 500;
        let h = random_targets(n, &mut rng);
        let mut want: Vec<u64> = (0..n as u64).collect();
        for s in (100..300).rev() {
            want.swap(s, h.target(s));
        }
        let mut got: Vec<u64> = (0..n as u64).collect();
        parallel_knuth_shuffle(&mut got, 100, 300, &h).unwrap();
        assert_eq!(got, want);
    }

    fn uniformity<F: FnMut(&mut Vec<u64>, u64)>(n: usize, runs_per_outcome: usize, mut f: F) -> f64 {
        let outcomes = factorial(n);
        let mut counts = vec![0u64; outcomes];
        for seed in 0..(runs_per_outcome * outcomes) as u64 {
            let mut v: Vec<u64> = (0..n as u64).collect();
            f(&mut v, seed);
            counts[perm_index(&v)] += 1;
        }
        chi_square_uniform(&counts).1
    }

    #[test]
    fn parallel_and_chunked_are_uniform() {
        for n in 3..=5 {
            let p = uniformity(n, 120, |v, s| {
                parallel_shuffle(v, s).unwrap();
            });
            assert!(p > 1e-3, "parallel n={n} p={p}");
            let p = uniformity(n, 120, |v, s| {
                chunked_shuffle(v, 2, &SeededTargets::new(s)).unwrap();
            });
            assert!(p > 1e-3, "chunked n={n} p={p}");
        }
    }

    #[test]
    fn buffered_tiny_is_uniform() {
        for n in 4..=6 {
            let params = BufferedParams::tiny(n).unwrap();
            let p = uniformity(n, 120, |v, s| {
                buffered_shuffle_with(v, &SeededTargets::new(s), &params, s).unwrap();
            });
            assert!(p > 1e-3, "buffered n={n} p={p}");
        }
    }

    #[test]
    fn swap_order_does_not_change_distribution() {
        let n = 4;
        let runs = 100_000u64;
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
        let (_, p) = chi_square_homogeneity(&desc, &asc);
        assert!(p > 1e-3, "p = {p}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn chunked_replay_any_k(n in 1usize..400, k in 1usize..64, seed in any::<u64>()) {
            let h = SeededTargets::new(seed);
            let mut want: Vec<u64> = (0..n as u64).collect();
            sequential_knuth(&mut want, &h);
            let mut got: Vec<u64> = (0..n as u64).collect();
            chunked_shuffle(&mut got, k, &h).unwrap();
            prop_assert_eq!(got, want);
        }
    }
}
