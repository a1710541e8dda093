use std::sync::atomic::{AtomicBool, Ordering::Relaxed};

use rayon::prelude::*;

use super::layout::Blocks;
use crate::rng::{stream, CounterRng};

const GRAIN: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EndMergeStats {
    /// Coin-flipping rounds executed.
    pub rounds: usize,
    /// True when the round cap fired and cycle leaders finished the job.
    pub capped: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct EndMergeOptions {
    pub seed: u64,
    /// Stop after `3·log2 N` rounds and place the rest by cycle leaders.
    pub round_cap: bool,
}

/// True iff every block's done flag is set. The flag word is shared by all
/// tasks and reset on every call.
pub fn done(blocks: &Blocks, flag: &AtomicBool) -> bool {
    flag.store(true, Relaxed);
    let l = blocks.layout;
    (0..blocks.len()).into_par_iter().with_min_len(GRAIN).for_each(|p| {
        if blocks.get(p, l.done) == 0 {
            flag.store(false, Relaxed);
        }
    });
    flag.load(Relaxed)
}

#[inline]
fn coin(blocks: &Blocks, p: usize, round: usize) -> u64 {
    let l = blocks.layout;
    match l.coin_word {
        Some(f) => {
            let (r, base) = blocks.at(p);
            let bit = (round % 64) as u32;
            let g = crate::encoding::Field { offset: f.offset + 2 * bit as usize, bits: 1 };
            g.get(r, base)
        }
        None => blocks.get(p, l.coin),
    }
}

/// Moves every block to its end-sorted position by randomized swaps.
pub fn end_merge(blocks: &Blocks, opts: EndMergeOptions) -> EndMergeStats {
    let l = blocks.layout;
    let n = blocks.len();
    let rng = CounterRng::new(opts.seed);
    (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
        blocks.set(p, l.swap_flag, 0);
        blocks.set(p, l.done, (blocks.target(p) == p) as u64);
    });
    let cap = if opts.round_cap { 3 * (usize::BITS - n.max(2).leading_zeros()) as usize } else { usize::MAX };
    let flag = AtomicBool::new(true);
    let mut stats = EndMergeStats::default();
    while !done(blocks, &flag) {
        if stats.rounds >= cap {
            stats.capped = true;
            finish_cycles(blocks);
            break;
        }
        let round = stats.rounds;
        // Coin flips, written on right parts.
        match l.coin_word {
            Some(f) if round % 64 == 0 => {
                (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
                    if blocks.get(p, l.done) == 0 {
                        blocks.set(p, f, rng.word(stream::MERGE_COIN_WORD, p as u64, (round / 64) as u64));
                    }
                });
            }
            Some(_) => {}
            None => {
                (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
                    if blocks.get(p, l.done) == 0 {
                        blocks.set(p, l.coin, rng.bit(stream::MERGE_COIN, p as u64, round as u64) as u64);
                    }
                });
            }
        }
        // Left swaps: read right parts, write left parts.
        (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
            if blocks.get(p, l.done) != 0 || coin(blocks, p, round) != 1 {
                return;
            }
            let t = blocks.target(p);
            if coin(blocks, t, round) != 0 {
                return;
            }
            blocks.set(p, l.swap_flag, 1);
            blocks.set(p, l.origin, p as u64);
            blocks.swap_left(p, t);
        });
        // Right swaps: read left parts, move the right part that belongs with them.
        (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
            if blocks.get(p, l.swap_flag) == 0 {
                return;
            }
            let origin = blocks.get(p, l.origin) as usize;
            blocks.set(p, l.swap_flag, 0);
            blocks.set(origin, l.done, 1);
            if blocks.target(p) == origin {
                blocks.set(p, l.done, 1);
            }
            blocks.swap_right(origin, p);
        });
        stats.rounds += 1;
    }
    stats
}

/// Places all remaining blocks: the smallest position of each open cycle
/// leads and swaps blocks home one by one.
fn finish_cycles(blocks: &Blocks) {
    let l = blocks.layout;
    let n = blocks.len();
    (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
        if blocks.get(p, l.done) != 0 {
            return;
        }
        let mut q = blocks.target(p);
        let mut leader = true;
        while q != p {
            if q < p {
                leader = false;
                break;
            }
            q = blocks.target(q);
        }
        if leader {
            blocks.set(p, l.swap_flag, 1);
        }
    });
    (0..n).into_par_iter().with_min_len(GRAIN).for_each(|p| {
        if blocks.get(p, l.done) != 0 || blocks.get(p, l.swap_flag) == 0 {
            return;
        }
        blocks.set(p, l.swap_flag, 0);
        loop {
            let t = blocks.target(p);
            if t == p {
                break;
            }
            blocks.swap_left(p, t);
            blocks.swap_right(p, t);
            blocks.set(t, l.done, 1);
        }
        blocks.set(p, l.done, 1);
    });
}
