//! In-place parallel merge of two sorted runs stored back to back.
//!
//! Blocks are first moved to the order of their endpoints by randomized
//! swaps, after which every block can overlap with at most one later block.
//! A halving recursion then removes those overlaps with two-block merges in
//! task-local scratch.

mod end_merge;
mod layout;
mod metadata;
mod sort_phase;

pub use end_merge::{done, end_merge, EndMergeOptions, EndMergeStats};
pub use layout::{default_block_size, field_width, Blocks, MergeLayout};
pub use metadata::{compute_block_metadata, restore_target_cache};
pub use sort_phase::{separate, seq_sort, STACK_BLOCK};

use crate::encoding::as_region;
use crate::error::{contract, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeConfig {
    /// Block size override; `None` uses `8·ceil(log2(n+m)) + 8`.
    pub block_size: Option<usize>,
    pub seed: u64,
    /// Encode a 64-bit coin word per block instead of drawing every round.
    pub precompute_coins: bool,
    /// Cap the randomized rounds and finish with cycle leaders.
    pub round_cap: bool,
    /// Keep each block's target in a plain cell backed up by pairs.
    pub cache_target: bool,
    /// Verify sortedness and distinctness of the inputs first (linear time).
    pub check_inputs: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            block_size: None,
            seed: 0,
            precompute_coins: false,
            round_cap: false,
            cache_target: false,
            check_inputs: true,
        }
    }
}

impl MergeConfig {
    /// All optional speedups on, input checks off.
    pub fn tuned(seed: u64) -> Self {
        MergeConfig {
            block_size: None,
            seed,
            precompute_coins: true,
            round_cap: true,
            cache_target: true,
            check_inputs: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergePath {
    /// One side empty or the runs already in order.
    Trivial,
    /// Too small for blocking; merged by rotations.
    Rotation,
    Blocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeStats {
    pub path: MergePath,
    pub block_size: usize,
    pub blocks: usize,
    pub rounds: usize,
    pub capped: bool,
    /// Heap words held for padded head/tail blocks.
    pub heap_words: usize,
}

impl MergeStats {
    fn trivial(path: MergePath) -> Self {
        MergeStats { path, block_size: 0, blocks: 0, rounds: 0, capped: false, heap_words: 0 }
    }
}

/// How inputs whose lengths are not multiples of the block size are padded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignmentPlan {
    pub block_size: usize,
    /// Leading left elements moved into the padded head block.
    pub head_len: usize,
    /// Trailing right elements moved into the padded tail block.
    pub tail_len: usize,
    /// Low sentinels in front of the head elements.
    pub pad_lo: usize,
    /// High sentinels after the tail elements.
    pub pad_hi: usize,
    pub left_blocks: usize,
    pub right_blocks: usize,
}

impl AlignmentPlan {
    pub fn is_passthrough(&self) -> bool {
        self.head_len == 0 && self.tail_len == 0
    }

    pub fn heap_words(&self) -> usize {
        self.block_size * ((self.head_len > 0) as usize + (self.tail_len > 0) as usize)
    }

    /// Low sentinels are `0..pad_lo`, high ones `MAX-pad_hi+1..=MAX`.
    pub fn low_sentinel(&self, i: usize) -> u64 {
        i as u64
    }

    pub fn high_sentinel(&self, i: usize) -> u64 {
        u64::MAX - (self.pad_hi - 1 - i) as u64
    }

    pub fn keys_allowed(&self, min_key: u64, max_key: u64) -> bool {
        min_key >= self.pad_lo as u64 && max_key <= u64::MAX - self.pad_hi as u64
    }
}

pub fn align_inputs(left_len: usize, right_len: usize, block_size: usize) -> AlignmentPlan {
    let head_len = left_len % block_size;
    let tail_len = right_len % block_size;
    AlignmentPlan {
        block_size,
        head_len,
        tail_len,
        pad_lo: if head_len > 0 { block_size - head_len } else { 0 },
        pad_hi: if tail_len > 0 { block_size - tail_len } else { 0 },
        left_blocks: left_len.div_ceil(block_size),
        right_blocks: right_len.div_ceil(block_size),
    }
}

fn check_inputs(a: &[u64], b: &[u64]) -> Result<()> {
    if a.windows(2).any(|w| w[0] >= w[1]) || b.windows(2).any(|w| w[0] >= w[1]) {
        return contract("each run must be strictly increasing");
    }
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return contract(format!("key {} appears in both runs", a[i]));
        }
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(())
}

/// Merges `data[..left_len]` and `data[left_len..]`, both sorted, in place.
pub fn merge(data: &mut [u64], left_len: usize, cfg: &MergeConfig) -> Result<MergeStats> {
    if left_len > data.len() {
        return contract("left run longer than the array");
    }
    let total = data.len();
    if cfg.check_inputs {
        check_inputs(&data[..left_len], &data[left_len..])?;
    }
    if left_len == 0 || left_len == total || data[left_len - 1] < data[left_len] {
        return Ok(MergeStats::trivial(MergePath::Trivial));
    }
    let layout = MergeLayout::new(total, cfg)?;
    let b = layout.block_size;
    if total <= 2 * b {
        rotation_merge(data, left_len);
        return Ok(MergeStats { block_size: b, ..MergeStats::trivial(MergePath::Rotation) });
    }
    let plan = align_inputs(left_len, total - left_len, b);
    let min_key = data[0].min(data[left_len]);
    let max_key = data[left_len - 1].max(data[total - 1]);
    if !plan.keys_allowed(min_key, max_key) {
        return contract(format!(
            "keys must lie in [{}, {}] so padding sentinels stay distinct",
            plan.pad_lo,
            u64::MAX - plan.pad_hi as u64
        ));
    }

    let mut head: Option<Vec<u64>> = (plan.head_len > 0).then(|| {
        let mut h = Vec::with_capacity(b);
        h.extend((0..plan.pad_lo).map(|i| plan.low_sentinel(i)));
        h.extend_from_slice(&data[..plan.head_len]);
        h
    });
    let mut tail: Option<Vec<u64>> = (plan.tail_len > 0).then(|| {
        let mut t = Vec::with_capacity(b);
        t.extend_from_slice(&data[total - plan.tail_len..]);
        t.extend((0..plan.pad_hi).map(|i| plan.high_sentinel(i)));
        t
    });

    let stats = {
        let body = as_region(&mut data[plan.head_len..total - plan.tail_len]);
        let head_r = head.as_deref_mut().map(as_region);
        let tail_r = tail.as_deref_mut().map(as_region);
        let blocks = Blocks::padded(&layout, body, head_r, tail_r, plan.left_blocks);
        compute_block_metadata(&blocks);
        let em = end_merge(&blocks, EndMergeOptions { seed: cfg.seed, round_cap: cfg.round_cap });
        restore_target_cache(&blocks);
        seq_sort(&blocks, 0, blocks.len());
        MergeStats {
            path: MergePath::Blocked,
            block_size: b,
            blocks: blocks.len(),
            rounds: em.rounds,
            capped: em.capped,
            heap_words: plan.heap_words(),
        }
    };
    if let Some(h) = head {
        data[..plan.head_len].copy_from_slice(&h[plan.pad_lo..]);
    }
    if let Some(t) = tail {
        data[total - plan.tail_len..].copy_from_slice(&t[..plan.tail_len]);
    }
    Ok(stats)
}

/// In-place merge by recursive rotations; quadratic worst case, used only
/// for inputs smaller than two blocks.
pub fn rotation_merge(v: &mut [u64], mid: usize) {
    let n = v.len();
    if mid == 0 || mid == n || v[mid - 1] < v[mid] {
        return;
    }
    if n <= 16 {
        for i in mid..n {
            let mut k = i;
            while k > 0 && v[k - 1] > v[k] {
                v.swap(k - 1, k);
                k -= 1;
            }
        }
        return;
    }
    let (cut_a, cut_b) = if mid >= n - mid {
        let a = mid / 2;
        (a, mid + v[mid..].partition_point(|&x| x < v[a]))
    } else {
        let bcut = mid + (n - mid) / 2;
        (v[..mid].partition_point(|&x| x <= v[bcut]), bcut)
    };
    v[cut_a..cut_b].rotate_left(mid - cut_a);
    let new_mid = cut_a + (cut_b - mid);
    let (left, right) = v.split_at_mut(new_mid);
    rotation_merge(left, cut_a);
    rotation_merge(right, cut_b - new_mid);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::as_region;
    use crate::reference::ref_merge;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(n: usize, m: usize, seed: u64, lo: u64) -> (Vec<u64>, Vec<u64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(m));
        let mut key = lo;
        while a.len() < n || b.len() < m {
            key += rng.random_range(1..4);
            let to_a = b.len() == m || (a.len() < n && rng.random_bool(n as f64 / (n + m) as f64));
            if to_a {
                a.push(key)
            } else {
                b.push(key)
            }
        }
        (a, b)
    }

    fn run(n: usize, m: usize, seed: u64, cfg: &MergeConfig) -> MergeStats {
        let (a, b) = instance(n, m, seed, 10_000);
        let mut data = [a.clone(), b.clone()].concat();
        let stats = merge(&mut data, n, cfg).unwrap();
        assert_eq!(data, ref_merge(&a, &b), "n={n} m={m} seed={seed}");
        stats
    }

    #[test]
    fn tiny_hand_cases() {
        let mut d = vec![1, 3, 5, 2, 4, 6];
        merge(&mut d, 3, &MergeConfig::default()).unwrap();
        assert_eq!(d, [1, 2, 3, 4, 5, 6]);
        let mut d = vec![1, 3, 5];
        merge(&mut d, 3, &MergeConfig::default()).unwrap();
        assert_eq!(d, [1, 3, 5]);
        let mut d = vec![1, 2, 2];
        assert!(merge(&mut d, 2, &MergeConfig::default()).is_err());
        let mut d = vec![5, 1, 2];
        assert!(merge(&mut d, 2, &MergeConfig::default()).is_err());
    }

    #[test]
    fn blocked_sizes_including_remainders() {
        let cfg = MergeConfig::default();
        for (i, &(n, m)) in
            [(1000, 1000), (1, 5000), (5000, 1), (2048, 1536), (777, 3333), (150, 151)].iter().enumerate()
        {
            let s = run(n, m, i as u64, &cfg);
            assert_ne!(s.path, MergePath::Rotation);
            assert!(s.heap_words <= 2 * s.block_size);
        }
    }

    #[test]
    fn aligned_plan_is_passthrough() {
        assert!(align_inputs(400, 800, 200).is_passthrough());
        let p = align_inputs(203, 201, 200);
        assert_eq!((p.head_len, p.tail_len, p.pad_lo, p.pad_hi), (3, 1, 197, 199));
        assert_eq!((p.left_blocks, p.right_blocks), (2, 2));
        let cfg = MergeConfig { block_size: Some(200), ..MergeConfig::default() };
        run(203, 201, 4, &cfg);
    }

    #[test]
    fn sentinel_range_is_enforced() {
        let mut data: Vec<u64> = (0..3000u64).map(|x| 2 * x).collect();
        data.extend((0..2001u64).map(|x| 2 * x + 1));
        assert!(merge(&mut data, 3000, &MergeConfig::default()).is_err());
    }

    #[test]
    fn tuned_configuration_merges() {
        for seed in 0..4 {
            let cfg = MergeConfig::tuned(seed);
            let s = run(20_000, 13_001, seed, &cfg);
            assert_eq!(s.path, MergePath::Blocked);
        }
        let cfg = MergeConfig { block_size: Some(4000), ..MergeConfig::tuned(9) };
        run(50_000, 41_234, 9, &cfg);
    }

    #[test]
    fn each_option_alone_merges() {
        let base = MergeConfig { seed: 5, ..MergeConfig::default() };
        for (name, cfg) in [
            ("coins", MergeConfig { precompute_coins: true, ..base.clone() }),
            ("cap", MergeConfig { round_cap: true, ..base.clone() }),
            ("cache", MergeConfig { cache_target: true, ..base.clone() }),
        ] {
            let (a, b) = instance(20_000, 13_001, 5, 10_000);
            let mut data = [a.clone(), b.clone()].concat();
            merge(&mut data, 20_000, &cfg).unwrap();
            assert!(data == ref_merge(&a, &b), "{name}");
        }
    }

    #[test]
    fn rotation_merge_small() {
        for seed in 0..200u64 {
            let n = (seed % 23) as usize;
            let m = (seed % 17) as usize;
            let (a, b) = instance(n, m, seed, 1);
            let mut d = [a.clone(), b.clone()].concat();
            rotation_merge(&mut d, n);
            assert_eq!(d, ref_merge(&a, &b));
        }
    }

    fn blocked_instance(na: usize, nb: usize, seed: u64, cfg: &MergeConfig) -> (Vec<u64>, MergeLayout) {
        let layout_probe = MergeLayout::new(1 << 12, cfg).unwrap();
        let b = layout_probe.block_size;
        let (a, bb) = instance(na * b, nb * b, seed, 1000);
        let data = [a, bb].concat();
        let layout = MergeLayout::new(data.len(), &MergeConfig { block_size: Some(b), ..cfg.clone() }).unwrap();
        (data, layout)
    }

    #[test]
    fn metadata_matches_sort_by_endpoint() {
        let cfg = MergeConfig::default();
        for seed in 0..20 {
            let (mut data, layout) = blocked_instance(8, 8, seed, &cfg);
            let b = layout.block_size;
            let ends: Vec<u64> = data.chunks(b).map(|c| c[b - 1]).collect();
            let mut order: Vec<usize> = (0..ends.len()).collect();
            order.sort_by_key(|&i| ends[i]);
            let region = as_region(&mut data);
            let blocks = Blocks::divisible(&layout, region, 8 * b).unwrap();
            compute_block_metadata(&blocks);
            for (pos, &blk) in order.iter().enumerate() {
                assert_eq!(blocks.target(blk), pos);
            }
        }
    }

    #[test]
    fn already_end_sorted_needs_no_rounds() {
        let cfg = MergeConfig::default();
        let layout = MergeLayout::new(1 << 12, &cfg).unwrap();
        let b = layout.block_size;
        let mut data: Vec<u64> = (1000..1000 + 6 * b as u64).collect();
        let region = as_region(&mut data);
        let blocks = Blocks::divisible(&layout, region, 3 * b).unwrap();
        compute_block_metadata(&blocks);
        let s = end_merge(&blocks, EndMergeOptions { seed: 1, round_cap: false });
        assert_eq!(s.rounds, 0);
    }

    #[test]
    fn two_cycle_is_resolved() {
        let cfg = MergeConfig::default();
        let layout = MergeLayout::new(1 << 12, &cfg).unwrap();
        let b = layout.block_size as u64;
        let mut data: Vec<u64> = (1000 + b..1000 + 2 * b).chain(1000..1000 + b).collect();
        let region = as_region(&mut data);
        let blocks = Blocks::divisible(&layout, region, b as usize).unwrap();
        compute_block_metadata(&blocks);
        assert_eq!((blocks.target(0), blocks.target(1)), (1, 0));
        end_merge(&blocks, EndMergeOptions { seed: 3, round_cap: false });
        assert!(blocks.endpoint(0) < blocks.endpoint(1));
        let flag = std::sync::atomic::AtomicBool::new(false);
        assert!(done(&blocks, &flag));
    }

    #[test]
    fn separate_merges_midpoint_with_partner() {
        let cfg = MergeConfig::default();
        let layout = MergeLayout::new(1 << 12, &cfg).unwrap();
        let b = layout.block_size as u64;
        // Left block holds evens, right block odds: fully interleaved.
        let mut data: Vec<u64> = (0..b).map(|x| 1000 + 2 * x).chain((0..b).map(|x| 1001 + 2 * x)).collect();
        let region = as_region(&mut data);
        let blocks = Blocks::divisible(&layout, region, b as usize).unwrap();
        compute_block_metadata(&blocks);
        end_merge(&blocks, EndMergeOptions { seed: 0, round_cap: false });
        restore_target_cache(&blocks);
        seq_sort(&blocks, 0, 2);
        let out = crate::encoding::snapshot(region);
        assert_eq!(out, (1000..1000 + 2 * b).collect::<Vec<_>>());
    }

    fn inversion_discipline_holds(na: usize, nb: usize, seed: u64, cfg: &MergeConfig) {
        let (mut data, layout) = blocked_instance(na, nb, seed, cfg);
        let b = layout.block_size;
        let region = as_region(&mut data);
        let blocks = Blocks::divisible(&layout, region, na * b).unwrap();
        compute_block_metadata(&blocks);
        end_merge(&blocks, EndMergeOptions { seed, round_cap: cfg.round_cap });
        restore_target_cache(&blocks);
        let n = blocks.len();
        let span: Vec<(u64, u64)> = (0..n)
            .map(|p| {
                let c = blocks.cells(p);
                (*c.iter().min().unwrap(), *c.iter().max().unwrap())
            })
            .collect();
        for i in 0..n {
            if i + 1 < n {
                assert!(blocks.endpoint(i) < blocks.endpoint(i + 1));
            }
            for j in i + 1..n {
                if span[i].1 > span[j].0 {
                    assert_eq!(j, blocks.inv(i).min(n - 1), "seed {seed} pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn inversion_discipline_small_instances() {
        for seed in 0..40 {
            let na = 1 + (seed as usize * 7) % 20;
            let nb = 1 + (seed as usize * 11) % 20;
            inversion_discipline_holds(na, nb, seed, &MergeConfig::default());
            inversion_discipline_holds(
                na,
                nb,
                seed,
                &MergeConfig { round_cap: true, cache_target: true, ..MergeConfig::default() },
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn merge_equals_reference(n in 0usize..3000, m in 0usize..3000, seed in any::<u64>(), tuned in any::<bool>()) {
            let cfg = if tuned { MergeConfig { check_inputs: true, ..MergeConfig::tuned(seed) } } else { MergeConfig { seed, ..MergeConfig::default() } };
            let (a, b) = instance(n, m, seed, 5000);
            let mut data = [a.clone(), b.clone()].concat();
            merge(&mut data, n, &cfg).unwrap();
            prop_assert_eq!(data, ref_merge(&a, &b));
        }
    }
}
