//! Two-stage shuffle whose reservation workspace lives inside the array.
//!
//! Stage one keeps a plain buffer in a suffix and shuffles the prefix before
//! it. Stage two keeps an adjustable buffer at the front and processes the
//! suffix; targets inside that buffer go through simulated access or
//! pair-preserving writes. Restoring the second buffer sorts its encoding
//! pairs, so each pair is then transposed by a fair coin.

use super::encoder::encode_range;
use super::engine::{workspace_words, Access, Engine};
use super::workspace::{BufferWorkspace, HeapWorkspace, Workspace};
use super::{parallel_knuth_shuffle, ShuffleStats, TargetSource};
use crate::buffers::RestorableBuffer;
use crate::encoding::{as_region, ld, Region};
use crate::error::{contract, PipError, Result};
use crate::rng::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferedParams {
    /// Width of every buffer word.
    pub word_bits: u32,
    pub chunk: usize,
    /// Suffix handled by stage two; it hosts the stage-one buffer.
    pub suffix_len: usize,
    pub stage1_slots: usize,
    pub stage2_slots: usize,
    /// Keep the reservation workspace on the heap instead of in the buffers.
    pub heap_workspace: bool,
}

fn bits(n: usize) -> u32 {
    usize::BITS - n.leading_zeros()
}

impl BufferedParams {
    /// Defaults for an array of `n` keys, or `None` when `n` is too small
    /// for in-array workspaces.
    pub fn for_len(n: usize) -> Option<Self> {
        let w = bits(n) + 2;
        let log = (n.max(2) as f64).log2();
        let mut k = ((n as f64) / (log * log)).ceil() as usize;
        let per_chunk = RestorableBuffer::footprint(workspace_words(1, true), w);
        k = k.min(n / 4 / per_chunk);
        if k == 0 {
            return None;
        }
        let s1 = workspace_words(k, false);
        let s2 = workspace_words(k, true);
        Some(BufferedParams {
            word_bits: w,
            chunk: k,
            suffix_len: RestorableBuffer::footprint(s1, w),
            stage1_slots: s1,
            stage2_slots: s2,
            heap_workspace: false,
        })
    }

    /// One-bit buffers with a heap workspace, for exhaustive statistics on
    /// arrays of 4 or more keys.
    pub fn tiny(n: usize) -> Option<Self> {
        if n < 4 {
            return None;
        }
        let suffix = (n - 3).min(3);
        Some(BufferedParams {
            word_bits: 1,
            chunk: n,
            suffix_len: suffix,
            stage1_slots: usize::from(suffix >= 3),
            stage2_slots: 1,
            heap_workspace: true,
        })
    }

    pub fn prefix_len(&self) -> usize {
        RestorableBuffer::footprint(self.stage2_slots, self.word_bits)
    }

    pub fn stage1_len(&self) -> usize {
        RestorableBuffer::footprint(self.stage1_slots, self.word_bits)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.chunk == 0 || !(1..=64).contains(&self.word_bits) {
            return contract("chunk must be positive and word width in 1..=64");
        }
        if self.suffix_len > n || self.stage1_len() > self.suffix_len {
            return contract("stage-one buffer must fit in the suffix");
        }
        if self.prefix_len() > n - self.suffix_len {
            return contract("stage-two buffer must fit before the suffix");
        }
        if !self.heap_workspace
            && (self.stage1_slots < workspace_words(self.chunk, false)
                || self.stage2_slots < workspace_words(self.chunk, true))
        {
            return contract("buffers too small for the chunk workspace");
        }
        Ok(())
    }
}

fn check_pairs(region: &Region, buf: &RestorableBuffer) -> Result<()> {
    if buf.encoding_pairs().any(|(a, b)| ld(region, a) == ld(region, b)) {
        return contract("buffered shuffle needs distinct keys");
    }
    Ok(())
}

fn run_stage<W: Workspace, T: TargetSource>(
    region: &Region,
    ws: &W,
    targets: &T,
    access: Access,
    k: usize,
    lo: usize,
    hi: usize,
) -> Result<usize> {
    let engine = Engine::new(region, ws, targets, access, k)?;
    let rounds = engine.run(lo, hi);
    if engine.saw_duplicate() {
        return Err(PipError::Contract("buffered shuffle needs distinct keys".into()));
    }
    Ok(rounds)
}

/// Shuffles `data` with the given targets and buffer parameters; keys must
/// be distinct.
pub fn buffered_shuffle_with<T: TargetSource>(
    data: &mut [u64],
    targets: &T,
    params: &BufferedParams,
    seed: u64,
) -> Result<ShuffleStats> {
    let n = data.len();
    params.validate(n)?;
    let region = as_region(data);
    let k = params.chunk;
    let split = n - params.suffix_len;
    let w = params.word_bits;
    let heap_words = if params.heap_workspace { workspace_words(k, true) } else { 0 };
    let mut rounds = 0;

    let first = RestorableBuffer::new(n - params.stage1_len(), params.stage1_slots, w, false)?;
    check_pairs(region, &first)?;
    first.init(region)?;
    let stage1 = if params.heap_workspace {
        run_stage(region, &HeapWorkspace::new(workspace_words(k, false)), targets, Access::Plain, k, 0, split)
    } else {
        run_stage(region, &BufferWorkspace::new(&first, region), targets, Access::Plain, k, 0, split)
    };
    first.restore(region);
    rounds += stage1?;

    if split < n {
        let second = RestorableBuffer::new(0, params.stage2_slots, w, true)?;
        check_pairs(region, &second)?;
        second.init(region)?;
        let access = Access::Adjustable(&second);
        let stage2 = if params.heap_workspace {
            run_stage(region, &HeapWorkspace::new(workspace_words(k, true)), targets, access, k, split, n)
        } else {
            run_stage(region, &BufferWorkspace::new(&second, region), targets, access, k, split, n)
        };
        second.restore(region);
        rounds += stage2?;
        encode_range(region, second.enc_start(), second.end(), &CounterRng::new(seed), 1);
    }
    Ok(ShuffleStats { rounds, chunks: n.div_ceil(k), heap_words, fallback: false })
}

/// Buffered shuffle with default parameters; small arrays fall back to the
/// heap-backed parallel shuffle.
pub fn buffered_shuffle(data: &mut [u64], seed: u64) -> Result<ShuffleStats> {
    let targets = super::SeededTargets::new(seed);
    match BufferedParams::for_len(data.len()) {
        Some(p) => buffered_shuffle_with(data, &targets, &p, seed),
        None => {
            let n = data.len();
            let mut stats = parallel_knuth_shuffle(data, 0, n, &targets)?;
            stats.fallback = true;
            Ok(stats)
        }
    }
}
