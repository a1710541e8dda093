use rayon::prelude::*;

use super::layout::Blocks;

const GRAIN: usize = 64;

/// Number of blocks in `[lo, hi)` whose endpoint is below `key`.
fn rank_in(blocks: &Blocks, lo: usize, hi: usize, key: u64) -> usize {
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a) / 2;
        if blocks.endpoint(mid) < key {
            a = mid + 1;
        } else {
            b = mid;
        }
    }
    a - lo
}

/// Rank, end-sorted position and inversion index for every block.
///
/// For a block with local index `i` in its own sequence, the rank `R` counts
/// opposite-sequence endpoints below its endpoint and the target is `i + R`.
/// The opposite block with the next larger endpoint has local index `R`; its
/// position after end-merging is its own `local + rank`, i.e. `R + R'`. When no
/// such block exists the inversion index is the block count.
pub fn compute_block_metadata(blocks: &Blocks) {
    let l = blocks.layout;
    let na = blocks.left_blocks;
    let n = blocks.len();
    (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
        let end = blocks.endpoint(p);
        let (local, opp_lo, opp_hi, own_lo, own_hi) = if p < na { (p, na, n, 0, na) } else { (p - na, 0, na, na, n) };
        let rank = rank_in(blocks, opp_lo, opp_hi, end);
        let target = local + rank;
        let inv = if rank == opp_hi - opp_lo {
            n
        } else {
            let partner_end = blocks.endpoint(opp_lo + rank);
            rank + rank_in(blocks, own_lo, own_hi, partner_end)
        };
        blocks.set(p, l.rank, rank as u64);
        blocks.set(p, l.inv, inv as u64);
        match l.target_cache {
            None => blocks.set(p, l.target, target as u64),
            Some(off) => {
                let (r, base) = blocks.at(p);
                let cell = crate::encoding::ld(r, base + off);
                let mask = l.width_mask();
                l.target.set(r, base, cell & mask);
                crate::encoding::st(r, base + off, (cell & !mask) | target as u64);
            }
        }
    });
}

/// Puts back the original low bits of every target-cache cell.
pub fn restore_target_cache(blocks: &Blocks) {
    let l = blocks.layout;
    let Some(off) = l.target_cache else { return };
    let mask = l.width_mask();
    (0..blocks.len()).into_par_iter().with_min_len(GRAIN).for_each(|p| {
        let (r, base) = blocks.at(p);
        let low = l.target.get(r, base);
        let cell = crate::encoding::ld(r, base + off);
        crate::encoding::st(r, base + off, (cell & !mask) | low);
    });
}
