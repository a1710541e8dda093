//! Union-find nodes encoded inside the offset array.
//!
//! Block `i` covers vertices `[i·b, (i+1)·b)`, the last block absorbing the
//! remainder. Its first four cells are overwritten with a lock word and the
//! stored edge `(source, target, weight)`; the pairs after them encode the
//! center label, parent block, root and coin flags, and backups of the four
//! overwritten offsets.

use std::sync::atomic::Ordering::{Acquire, Relaxed, Release};

use crate::encoding::{ld, reset_pairs, st, BlockLayout, Field, Region};
use crate::error::{PipError, Result};

use super::csr::EdgeKey;

pub(crate) const RAW: usize = 4;
const LOCK: usize = 0;
const SRC: usize = 1;
const TGT: usize = 2;
const WEIGHT: usize = 3;
const NONE: u64 = u64::MAX;

fn width(max_value: usize) -> u32 {
    (usize::BITS - max_value.leading_zeros()).max(1)
}

/// A stored edge: endpoints, weight, and the center on the far side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoredEdge {
    pub src: usize,
    pub tgt: usize,
    pub weight: u64,
    pub far_center: usize,
}

impl StoredEdge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.src, self.tgt, self.weight)
    }
}

#[derive(Clone, Debug)]
pub struct Codec {
    pub n: usize,
    pub block_size: usize,
    /// Encoded blocks; zero in implicit mode.
    pub blocks: usize,
    pub center: Field,
    pub parent: Field,
    pub root: Field,
    pub coin: Field,
    pub backups: [Field; RAW],
    pub used: usize,
    /// Center of the single implicit cluster when nothing is encoded.
    pub implicit_center: usize,
    pub(crate) encoded: bool,
}

impl Codec {
    /// Layout for a graph with `n` vertices stored in `words_len` words.
    pub fn plan(n: usize, words_len: usize) -> Result<Self> {
        let vb = width(n.saturating_sub(1));
        let ob = width(words_len.saturating_sub(1));
        let spec = [
            ("center", vb),
            ("parent", vb),
            ("root", 1),
            ("coin", 1),
            ("bk0", ob),
            ("bk1", ob),
            ("bk2", ob),
            ("bk3", ob),
        ];
        let need = BlockLayout::required_cells(RAW, &spec);
        let b = need + need % 2;
        let layout = BlockLayout::new(b, RAW, &spec)?;
        let f = |name| layout.field(name);
        Ok(Codec {
            n,
            block_size: b,
            blocks: n / b,
            center: f("center")?,
            parent: f("parent")?,
            root: f("root")?,
            coin: f("coin")?,
            backups: [f("bk0")?, f("bk1")?, f("bk2")?, f("bk3")?],
            used: layout.used_cells(),
            implicit_center: 0,
            encoded: false,
        })
    }

    pub fn is_implicit(&self) -> bool {
        self.blocks == 0
    }

    /// Number of union-find nodes (one in implicit mode).
    pub fn nodes(&self) -> usize {
        self.blocks.max(1)
    }

    #[inline]
    pub fn block_of(&self, v: usize) -> usize {
        if self.is_implicit() {
            0
        } else {
            (v / self.block_size).min(self.blocks - 1)
        }
    }

    /// Vertex range `[lo, hi)` of block `i`.
    pub fn block_range(&self, i: usize) -> (usize, usize) {
        if self.is_implicit() {
            return (0, self.n);
        }
        let lo = i * self.block_size;
        let hi = if i + 1 == self.blocks { self.n } else { lo + self.block_size };
        (lo, hi)
    }

    /// Word index in `I` of block `i`'s first cell.
    #[inline]
    fn base(&self, i: usize) -> usize {
        1 + i * self.block_size
    }

    /// Offset of vertex `v` as it was before encoding.
    #[inline]
    pub fn offset_read(&self, region: &Region, v: usize) -> u64 {
        let cell = 1 + v;
        if !self.encoded {
            return ld(region, cell);
        }
        let i = self.block_of(v);
        let off = v - i * self.block_size;
        if off < RAW {
            return self.backups[off].get(region, self.base(i));
        }
        if off >= self.used {
            return ld(region, cell);
        }
        let first = cell - (off - RAW) % 2;
        let (a, b) = (ld(region, first), ld(region, first + 1));
        if cell == first {
            a.min(b)
        } else {
            a.max(b)
        }
    }

    /// Word range in `I` of `v`'s adjacency entries.
    #[inline]
    pub fn adjacency(&self, region: &Region, v: usize) -> (usize, usize) {
        let prev = if v == 0 { self.n as u64 } else { self.offset_read(region, v - 1) };
        (prev as usize + 1, self.offset_read(region, v) as usize + 1)
    }

    pub fn degree(&self, region: &Region, v: usize) -> usize {
        let (lo, hi) = self.adjacency(region, v);
        (hi - lo) / 2
    }

    /// Backs up the raw cells and writes the initial node state. `centers[i]`
    /// is the center of block `i`.
    pub(crate) fn init(&mut self, region: &Region, centers: &[usize]) {
        if self.is_implicit() {
            self.implicit_center = centers[0];
            return;
        }
        use rayon::prelude::*;
        let this = &*self;
        (0..self.blocks).into_par_iter().with_min_len(16).for_each(|i| {
            let base = this.base(i);
            for t in 0..RAW {
                this.backups[t].set(region, base, ld(region, base + t));
            }
            this.center.set(region, base, centers[i] as u64);
            this.parent.set(region, base, i as u64);
            this.root.set(region, base, 1);
            this.coin.set(region, base, 0);
            this.slot_reset(region, i);
        });
        self.encoded = true;
    }

    /// Puts every offset back and sorts every encoding pair.
    pub(crate) fn restore(&mut self, region: &Region) {
        if !self.encoded {
            return;
        }
        use rayon::prelude::*;
        let this = &*self;
        (0..self.blocks).into_par_iter().with_min_len(16).for_each(|i| {
            let base = this.base(i);
            for t in 0..RAW {
                st(region, base + t, this.backups[t].get(region, base));
            }
            reset_pairs(region, base + RAW, base + this.used);
        });
        self.encoded = false;
    }

    #[inline]
    pub fn center_of_block(&self, region: &Region, i: usize) -> usize {
        if self.is_implicit() {
            self.implicit_center
        } else {
            self.center.get(region, self.base(i)) as usize
        }
    }

    #[inline]
    pub fn is_center(&self, region: &Region, v: usize) -> bool {
        self.center_of_block(region, self.block_of(v)) == v
    }

    #[inline]
    pub fn parent_of(&self, region: &Region, i: usize) -> usize {
        if self.is_implicit() {
            0
        } else {
            self.parent.get(region, self.base(i)) as usize
        }
    }

    pub(crate) fn set_parent(&self, region: &Region, i: usize, p: usize) {
        self.parent.set(region, self.base(i), p as u64)
    }

    #[inline]
    pub fn is_root(&self, region: &Region, i: usize) -> bool {
        self.is_implicit() || self.root.get(region, self.base(i)) == 1
    }

    pub(crate) fn set_root(&self, region: &Region, i: usize, on: bool) {
        self.root.set(region, self.base(i), on as u64)
    }

    pub fn coin_of(&self, region: &Region, i: usize) -> bool {
        self.coin.get(region, self.base(i)) == 1
    }

    pub(crate) fn set_coin(&self, region: &Region, i: usize, heads: bool) {
        self.coin.set(region, self.base(i), heads as u64)
    }

    /// Follows parent links from node `i` to its root.
    pub fn find_root(&self, region: &Region, i: usize) -> Result<usize> {
        let mut x = i;
        for _ in 0..=self.nodes() {
            if self.is_root(region, x) {
                return Ok(x);
            }
            x = self.parent_of(region, x);
        }
        Err(PipError::Invariant(format!("parent links from block {i} do not reach a root")))
    }

    pub(crate) fn slot_reset(&self, region: &Region, i: usize) {
        let base = self.base(i);
        st(region, base + SRC, NONE);
        st(region, base + TGT, NONE);
        st(region, base + WEIGHT, NONE);
        region[base + LOCK].store(0, Release);
    }

    pub fn stored_edge(&self, region: &Region, i: usize) -> Option<StoredEdge> {
        if self.is_implicit() {
            return None;
        }
        let base = self.base(i);
        let lock = region[base + LOCK].load(Acquire);
        if lock >> 1 == 0 {
            return None;
        }
        Some(StoredEdge {
            src: ld(region, base + SRC) as usize,
            tgt: ld(region, base + TGT) as usize,
            weight: ld(region, base + WEIGHT),
            far_center: (lock >> 1) as usize - 1,
        })
    }

    /// Lowers node `i`'s stored edge to `e` if `e` has the smaller key.
    /// Returns whether the slot changed.
    pub(crate) fn slot_offer(&self, region: &Region, i: usize, e: StoredEdge) -> bool {
        let base = self.base(i);
        let lock = &region[base + LOCK];
        let held = loop {
            let cur = lock.load(Relaxed);
            if cur & 1 == 0 && lock.compare_exchange_weak(cur, cur | 1, Acquire, Relaxed).is_ok() {
                break cur;
            }
            std::hint::spin_loop();
        };
        let better = held >> 1 == 0
            || e.key()
                < EdgeKey::new(
                    ld(region, base + SRC) as usize,
                    ld(region, base + TGT) as usize,
                    ld(region, base + WEIGHT),
                );
        if better {
            st(region, base + SRC, e.src as u64);
            st(region, base + TGT, e.tgt as u64);
            st(region, base + WEIGHT, e.weight);
            lock.store((e.far_center as u64 + 1) << 1, Release);
        } else {
            lock.store(held, Release);
        }
        better
    }
}
