use std::mem::MaybeUninit;

use super::layout::Blocks;
use crate::encoding::{ld, st};

/// Largest block size whose two-block scratch lives on the task stack.
pub const STACK_BLOCK: usize = 4096;

const SEQ_CUTOFF: usize = 4;

/// Merges the midpoint block of `[lo, hi)` with its clamped inversion
/// partner so no inversion crosses the midpoint afterwards.
pub fn separate(blocks: &Blocks, lo: usize, hi: usize) {
    debug_assert!(hi - lo >= 2);
    let l = blocks.layout;
    let b = l.block_size;
    let c = lo + (hi - lo) / 2 - 1;
    let inv_c = blocks.inv(c);
    let j = inv_c.min(hi - 1);
    let inv_j = blocks.inv(j);
    blocks.reset(c);
    blocks.reset(j);
    if b <= STACK_BLOCK {
        let mut scratch = [MaybeUninit::<u64>::uninit(); 2 * STACK_BLOCK];
        merge_pair(blocks, c, j, &mut scratch[..2 * b]);
    } else {
        let mut scratch = vec![MaybeUninit::<u64>::uninit(); 2 * b];
        merge_pair(blocks, c, j, &mut scratch);
    }
    blocks.set(c, l.inv, inv_c as u64);
    blocks.set(j, l.inv, inv_j as u64);
}

fn merge_pair(blocks: &Blocks, p: usize, q: usize, out: &mut [MaybeUninit<u64>]) {
    let b = blocks.layout.block_size;
    let (rp, bp) = blocks.at(p);
    let (rq, bq) = blocks.at(q);
    if ld(rp, bp + b - 1) < ld(rq, bq) {
        return;
    }
    let (mut i, mut j) = (0, 0);
    for slot in out.iter_mut() {
        let take_p = j == b || (i < b && ld(rp, bp + i) < ld(rq, bq + j));
        if take_p {
            slot.write(ld(rp, bp + i));
            i += 1;
        } else {
            slot.write(ld(rq, bq + j));
            j += 1;
        }
    }
    // SAFETY: the loop above wrote every slot of `out`.
    for k in 0..b {
        unsafe {
            st(rp, bp + k, out[k].assume_init());
            st(rq, bq + k, out[b + k].assume_init());
        }
    }
}

/// Sorts the end-merged blocks `[lo, hi)` by halving recursion; each leaf
/// block gets its encoding reset.
pub fn seq_sort(blocks: &Blocks, lo: usize, hi: usize) {
    let k = hi - lo;
    if k == 0 {
        return;
    }
    if k == 1 {
        blocks.reset(lo);
        return;
    }
    separate(blocks, lo, hi);
    let mid = lo + k / 2;
    if k <= SEQ_CUTOFF {
        seq_sort(blocks, lo, mid);
        seq_sort(blocks, mid, hi);
    } else {
        rayon::join(|| seq_sort(blocks, lo, mid), || seq_sort(blocks, mid, hi));
    }
}
