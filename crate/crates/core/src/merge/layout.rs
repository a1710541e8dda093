use crate::encoding::{BlockLayout, Field, Region};
use crate::error::{contract, Result};

use super::MergeConfig;

/// Where each per-block field lives. The left part `[0, split)` carries the
/// inversion index, rank, origin and swap flag; the right part carries the
/// target position, coin and done flag. The last cell is never encoded.
#[derive(Clone, Debug)]
pub struct MergeLayout {
    pub block_size: usize,
    pub split: usize,
    pub width: u32,
    pub inv: Field,
    pub rank: Field,
    pub origin: Field,
    pub swap_flag: Field,
    pub target: Field,
    pub coin: Field,
    pub done: Field,
    /// 64 precomputed coin bits, when enabled.
    pub coin_word: Option<Field>,
    /// Offset of the cell whose low bits cache the target; `target` then
    /// holds the backup of that cell's original low bits.
    pub target_cache: Option<usize>,
    /// Cells `[0, used)` may carry encoded pairs; everything else is plain.
    pub used: usize,
}

/// Bits per numeric field for an input of `total` elements.
pub fn field_width(total: usize) -> u32 {
    let t = total.max(2) as u64;
    (64 - (t - 1).leading_zeros()).max(1)
}

/// Default block size `8·ceil(log2(total)) + 8`.
pub fn default_block_size(total: usize) -> usize {
    8 * field_width(total) as usize + 8
}

impl MergeLayout {
    pub fn new(total: usize, cfg: &MergeConfig) -> Result<Self> {
        let w = field_width(total);
        let need = Self::required(w, cfg);
        let b = match cfg.block_size {
            Some(b) => {
                if b < need {
                    return contract(format!("block size {b} below the {need} cells the layout needs"));
                }
                b
            }
            None => default_block_size(total).max(need + need % 2),
        };
        Self::build(b, w, cfg)
    }

    /// Minimal cells (including the unused last cell) for width `w`.
    pub fn required(w: u32, cfg: &MergeConfig) -> usize {
        let w = w as usize;
        let left = 6 * w + 2;
        let mut right = if cfg.cache_target { 1 + 2 * w } else { 2 * w } + 4;
        if cfg.precompute_coins {
            right += 128;
        }
        left + right + 1
    }

    fn build(b: usize, w: u32, cfg: &MergeConfig) -> Result<Self> {
        let left = BlockLayout::new(b, 0, &[("inv", w), ("rank", w), ("origin", w), ("swap", 1)])?;
        let split = left.used_cells();
        let cache_cells = usize::from(cfg.cache_target);
        let mut right_fields: Vec<(&str, u32)> = vec![("target", w), ("coin", 1), ("done", 1)];
        if cfg.precompute_coins {
            right_fields.push(("coin_word", 64));
        }
        let right = BlockLayout::new(b - 1 - split, cache_cells, &right_fields)?;
        let shift = |f: Field| Field { offset: f.offset + split, bits: f.bits };
        Ok(MergeLayout {
            block_size: b,
            split,
            width: w,
            inv: left.field("inv")?,
            rank: left.field("rank")?,
            origin: left.field("origin")?,
            swap_flag: left.field("swap")?,
            target: shift(right.field("target")?),
            coin: shift(right.field("coin")?),
            done: shift(right.field("done")?),
            coin_word: if cfg.precompute_coins { Some(shift(right.field("coin_word")?)) } else { None },
            target_cache: if cfg.cache_target { Some(split) } else { None },
            used: split + right.used_cells(),
        })
    }

    pub fn width_mask(&self) -> u64 {
        if self.width >= 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }
}

/// The block sequence: an optional padded head block, the in-place body,
/// and an optional padded tail block.
#[derive(Clone, Copy)]
pub struct Blocks<'a> {
    pub layout: &'a MergeLayout,
    body: &'a Region,
    head: Option<&'a Region>,
    tail: Option<&'a Region>,
    /// Blocks that came from the left input.
    pub left_blocks: usize,
    pub count: usize,
}

impl<'a> Blocks<'a> {
    /// Blocks over `body` only; both sides must be multiples of the block size.
    pub fn divisible(layout: &'a MergeLayout, body: &'a Region, left_len: usize) -> Result<Self> {
        let b = layout.block_size;
        if !body.len().is_multiple_of(b) || !left_len.is_multiple_of(b) || left_len > body.len() {
            return contract("divisible blocking needs both sides to be multiples of the block size");
        }
        Ok(Blocks { layout, body, head: None, tail: None, left_blocks: left_len / b, count: body.len() / b })
    }

    pub(crate) fn padded(
        layout: &'a MergeLayout,
        body: &'a Region,
        head: Option<&'a Region>,
        tail: Option<&'a Region>,
        left_blocks: usize,
    ) -> Self {
        let b = layout.block_size;
        let count = body.len() / b + head.is_some() as usize + tail.is_some() as usize;
        Blocks { layout, body, head, tail, left_blocks, count }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn right_blocks(&self) -> usize {
        self.count - self.left_blocks
    }

    /// Region and base offset holding block position `p`.
    #[inline]
    pub fn at(&self, p: usize) -> (&'a Region, usize) {
        if p == 0 {
            if let Some(h) = self.head {
                return (h, 0);
            }
        }
        if p + 1 == self.count {
            if let Some(t) = self.tail {
                return (t, 0);
            }
        }
        let q = p - self.head.is_some() as usize;
        (self.body, q * self.layout.block_size)
    }

    #[inline]
    pub fn endpoint(&self, p: usize) -> u64 {
        let (r, base) = self.at(p);
        crate::encoding::ld(r, base + self.layout.block_size - 1)
    }

    #[inline]
    pub fn get(&self, p: usize, f: Field) -> u64 {
        let (r, base) = self.at(p);
        f.get(r, base)
    }

    #[inline]
    pub fn set(&self, p: usize, f: Field, v: u64) {
        let (r, base) = self.at(p);
        f.set(r, base, v)
    }

    /// Target position of the block whose right part sits at `p`.
    #[inline]
    pub fn target(&self, p: usize) -> usize {
        let (r, base) = self.at(p);
        match self.layout.target_cache {
            Some(off) => (crate::encoding::ld(r, base + off) & self.layout.width_mask()) as usize,
            None => self.layout.target.get(r, base) as usize,
        }
    }

    /// Copy of block `p`'s cells.
    pub fn cells(&self, p: usize) -> Vec<u64> {
        let (r, base) = self.at(p);
        (base..base + self.layout.block_size).map(|i| crate::encoding::ld(r, i)).collect()
    }

    pub fn inv(&self, p: usize) -> usize {
        self.get(p, self.layout.inv) as usize
    }

    pub(crate) fn swap_range(&self, p: usize, q: usize, from: usize, to: usize) {
        let (rp, bp) = self.at(p);
        let (rq, bq) = self.at(q);
        for k in from..to {
            let a = crate::encoding::ld(rp, bp + k);
            let c = crate::encoding::ld(rq, bq + k);
            crate::encoding::st(rp, bp + k, c);
            crate::encoding::st(rq, bq + k, a);
        }
    }

    pub(crate) fn swap_left(&self, p: usize, q: usize) {
        self.swap_range(p, q, 0, self.layout.split)
    }

    pub(crate) fn swap_right(&self, p: usize, q: usize) {
        self.swap_range(p, q, self.layout.split, self.layout.block_size)
    }

    /// Re-sorts every encoding pair of block `p`.
    pub(crate) fn reset(&self, p: usize) {
        let (r, base) = self.at(p);
        let l = self.layout;
        let right = l.split + l.target_cache.is_some() as usize;
        crate::encoding::reset_pairs(r, base, base + l.split);
        crate::encoding::reset_pairs(r, base + right, base + l.used);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_budget_fits_default_block() {
        for total in [16usize, 1000, 1 << 20, 1 << 40] {
            let cfg = MergeConfig::default();
            let l = MergeLayout::new(total, &cfg).unwrap();
            let w = field_width(total) as usize;
            assert_eq!(l.split, 6 * w + 2);
            assert_eq!(MergeLayout::required(w as u32, &cfg), 8 * w + 7);
            assert!(l.used < l.block_size);
            assert_eq!(l.block_size, 8 * w + 8);
            assert!(l.target.offset >= l.split && l.done.end() <= l.used);
        }
    }

    #[test]
    fn cached_target_fits_same_budget() {
        let cfg = MergeConfig { cache_target: true, ..MergeConfig::default() };
        let l = MergeLayout::new(1 << 20, &cfg).unwrap();
        assert_eq!(l.block_size, 8 * 20 + 8);
        assert_eq!(l.target_cache, Some(l.split));
    }

    #[test]
    fn override_must_fit() {
        let cfg = MergeConfig { block_size: Some(20), ..MergeConfig::default() };
        assert!(MergeLayout::new(1000, &cfg).is_err());
        let cfg = MergeConfig { block_size: Some(4000), ..MergeConfig::default() };
        assert_eq!(MergeLayout::new(1000, &cfg).unwrap().block_size, 4000);
    }
}
