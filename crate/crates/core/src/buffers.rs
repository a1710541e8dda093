//! Restorable and adjustable buffers.
//!
//! A buffer turns `s` cells of the array into scratch words by stashing the
//! low `w` bits of each of them into `2ws` further cells via inversion
//! encoding. Restoring decodes the stash back and re-sorts every encoding
//! pair ascending, which leaves the region in a canonical state.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering::Relaxed};

use rayon::prelude::*;

use crate::encoding::{ld, read_bits, reset_pairs, st, write_bits, Region};
use crate::error::{contract, Result};

const PAR_SLOTS: usize = 256;

#[derive(Debug)]
pub struct RestorableBuffer {
    aux_start: usize,
    aux_len: usize,
    word_bits: u32,
    adjustable: bool,
    live: AtomicBool,
    // Even: simulated aux traffic allowed. Odd: encoding writes allowed.
    epoch: AtomicU64,
}

impl RestorableBuffer {
    pub fn new(aux_start: usize, aux_len: usize, word_bits: u32, adjustable: bool) -> Result<Self> {
        if !(1..=64).contains(&word_bits) {
            return contract(format!("word width {word_bits} outside 1..=64"));
        }
        Ok(RestorableBuffer {
            aux_start,
            aux_len,
            word_bits,
            adjustable,
            live: AtomicBool::new(false),
            epoch: AtomicU64::new(0),
        })
    }

    /// Plain buffer with whole-word auxiliary slots.
    pub fn plain(aux_start: usize, aux_len: usize) -> Result<Self> {
        Self::new(aux_start, aux_len, 64, false)
    }

    /// Cells consumed by a buffer with `s` slots of `w` bits.
    pub fn footprint(s: usize, w: u32) -> usize {
        s + 2 * w as usize * s
    }

    pub fn aux_start(&self) -> usize {
        self.aux_start
    }
    pub fn aux_len(&self) -> usize {
        self.aux_len
    }
    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }
    pub fn adjustable(&self) -> bool {
        self.adjustable
    }
    pub fn enc_start(&self) -> usize {
        self.aux_start + self.aux_len
    }
    pub fn enc_len(&self) -> usize {
        2 * self.word_bits as usize * self.aux_len
    }
    pub fn end(&self) -> usize {
        self.enc_start() + self.enc_len()
    }
    pub fn is_live(&self) -> bool {
        self.live.load(Relaxed)
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        if self.word_bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.word_bits) - 1
        }
    }

    #[inline]
    fn slot_pairs(&self, t: usize) -> usize {
        self.enc_start() + 2 * self.word_bits as usize * t
    }

    pub fn contains_aux(&self, i: usize) -> bool {
        i >= self.aux_start && i < self.enc_start()
    }

    pub fn contains_enc(&self, i: usize) -> bool {
        i >= self.enc_start() && i < self.end()
    }

    /// Encoding pairs as absolute index pairs.
    pub fn encoding_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.enc_start()..self.end()).step_by(2).map(|p| (p, p + 1))
    }

    pub fn init(&self, region: &Region) -> Result<()> {
        if self.end() > region.len() {
            return contract(format!("buffer [{}, {}) exceeds region of {}", self.aux_start, self.end(), region.len()));
        }
        if self.live.swap(true, Relaxed) {
            return contract("buffer already initialized");
        }
        let mask = self.mask();
        let w = self.word_bits as usize;
        (0..self.aux_len)
            .into_par_iter()
            .with_min_len(PAR_SLOTS)
            .for_each(|t| write_bits(region, self.slot_pairs(t), w, ld(region, self.aux_start + t) & mask));
        Ok(())
    }

    /// Decodes the stashed bits back into the aux slots. Calling it again
    /// on a restored buffer does nothing.
    pub fn restore(&self, region: &Region) {
        if !self.live.swap(false, Relaxed) {
            return;
        }
        let mask = self.mask();
        let w = self.word_bits as usize;
        (0..self.aux_len).into_par_iter().with_min_len(PAR_SLOTS).for_each(|t| {
            let p = self.slot_pairs(t);
            let low = read_bits(region, p, w);
            let cell = self.aux_start + t;
            st(region, cell, (ld(region, cell) & !mask) | low);
            reset_pairs(region, p, p + 2 * w);
        });
    }

    /// Low `w` bits of aux slot `t`, the part usable as scratch.
    #[inline]
    pub fn aux_load(&self, region: &Region, t: usize) -> u64 {
        ld(region, self.aux_start + t) & self.mask()
    }

    /// Stores into the low `w` bits of slot `t`, keeping the high bits.
    #[inline]
    pub fn aux_store(&self, region: &Region, t: usize, v: u64) {
        let mask = self.mask();
        let cell = &region[self.aux_start + t];
        if mask == u64::MAX {
            cell.store(v, Relaxed);
            return;
        }
        let mut cur = cell.load(Relaxed);
        loop {
            let next = (cur & !mask) | (v & mask);
            match cell.compare_exchange_weak(cur, next, Relaxed, Relaxed) {
                Ok(_) => return,
                Err(seen) => cur = seen,
            }
        }
    }

    /// Atomic max on the low bits of slot `t`; returns the previous low bits.
    #[inline]
    pub fn aux_fetch_max(&self, region: &Region, t: usize, v: u64) -> u64 {
        let mask = self.mask();
        let cell = &region[self.aux_start + t];
        let mut cur = cell.load(Relaxed);
        loop {
            let low = cur & mask;
            if low >= v & mask {
                return low;
            }
            let next = (cur & !mask) | (v & mask);
            match cell.compare_exchange_weak(cur, next, Relaxed, Relaxed) {
                Ok(_) => return low,
                Err(seen) => cur = seen,
            }
        }
    }

    /// Compare-exchange on the low bits of slot `t`.
    #[inline]
    pub fn aux_compare_exchange(&self, region: &Region, t: usize, old: u64, new: u64) -> std::result::Result<u64, u64> {
        let mask = self.mask();
        let cell = &region[self.aux_start + t];
        let mut cur = cell.load(Relaxed);
        loop {
            if cur & mask != old & mask {
                return Err(cur & mask);
            }
            let next = (cur & !mask) | (new & mask);
            match cell.compare_exchange_weak(cur, next, Relaxed, Relaxed) {
                Ok(_) => return Ok(old),
                Err(seen) => cur = seen,
            }
        }
    }

    /// Switches the buffer between simulated-aux and encoding-write phases.
    /// Only bookkeeping for the debug-mode overlap check.
    pub fn begin_aux_phase(&self) {
        let e = self.epoch.load(Relaxed);
        if e % 2 == 1 {
            self.epoch.store(e + 1, Relaxed);
        }
    }

    pub fn begin_encoding_phase(&self) {
        let e = self.epoch.load(Relaxed);
        if e.is_multiple_of(2) {
            self.epoch.store(e + 1, Relaxed);
        }
    }

    fn check_adjustable(&self) -> Result<()> {
        if !self.adjustable {
            return contract("simulated access requires an adjustable buffer");
        }
        if !self.is_live() {
            return contract("buffer is not initialized");
        }
        Ok(())
    }

    /// The value that occupied slot `t` at init time, as updated by
    /// simulated writes since.
    pub fn simulated_read(&self, region: &Region, t: usize) -> Result<u64> {
        self.check_adjustable()?;
        debug_assert!(self.epoch.load(Relaxed).is_multiple_of(2), "simulated read during encoding phase");
        Ok(self.sim_read_unchecked(region, t))
    }

    pub fn simulated_write(&self, region: &Region, t: usize, v: u64) -> Result<()> {
        self.check_adjustable()?;
        debug_assert!(self.epoch.load(Relaxed).is_multiple_of(2), "simulated write during encoding phase");
        self.sim_write_unchecked(region, t, v);
        Ok(())
    }

    #[inline]
    pub(crate) fn sim_read_unchecked(&self, region: &Region, t: usize) -> u64 {
        let mask = self.mask();
        let high = ld(region, self.aux_start + t) & !mask;
        high | read_bits(region, self.slot_pairs(t), self.word_bits as usize)
    }

    #[inline]
    pub(crate) fn sim_write_unchecked(&self, region: &Region, t: usize, v: u64) {
        let mask = self.mask();
        if mask != u64::MAX {
            let cell = &region[self.aux_start + t];
            let mut cur = cell.load(Relaxed);
            loop {
                let next = (cur & mask) | (v & !mask);
                match cell.compare_exchange_weak(cur, next, Relaxed, Relaxed) {
                    Ok(_) => break,
                    Err(seen) => cur = seen,
                }
            }
        }
        write_bits(region, self.slot_pairs(t), self.word_bits as usize, v & mask);
    }

    /// Writes `v` at encoding cell `e` (absolute index) and reorders its
    /// pair so the encoded bit is kept.
    pub fn encoding_write(&self, region: &Region, e: usize, v: u64) -> Result<()> {
        self.check_adjustable()?;
        if !self.contains_enc(e) {
            return contract(format!("cell {e} is not an encoding cell"));
        }
        debug_assert!(
            self.epoch.load(Relaxed) % 2 == 1 || self.epoch.load(Relaxed) == 0,
            "encoding write during simulated-aux phase"
        );
        let partner = self.partner(e);
        if ld(region, partner) == v {
            return contract("encoding write would duplicate the partner element");
        }
        self.enc_write_unchecked(region, e, v);
        Ok(())
    }

    #[inline]
    pub(crate) fn partner(&self, e: usize) -> usize {
        self.enc_start() + ((e - self.enc_start()) ^ 1)
    }

    #[inline]
    pub(crate) fn enc_write_unchecked(&self, region: &Region, e: usize, v: u64) {
        let first = e - ((e - self.enc_start()) & 1);
        let bit = ld(region, first) > ld(region, first + 1);
        st(region, e, v);
        if (ld(region, first) > ld(region, first + 1)) != bit {
            let a = ld(region, first);
            st(region, first, ld(region, first + 1));
            st(region, first + 1, a);
        }
    }

    /// Bits currently encoded for slot `t` (for diagnostics and tests).
    pub fn encoded_bits(&self, region: &Region, t: usize) -> u64 {
        read_bits(region, self.slot_pairs(t), self.word_bits as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{as_region, snapshot};
    use proptest::prelude::*;

    fn canonical(mut v: Vec<u64>, from: usize, to: usize) -> Vec<u64> {
        for p in (from..to).step_by(2) {
            if v[p] > v[p + 1] {
                v.swap(p, p + 1);
            }
        }
        v
    }

    #[test]
    fn zero_low_bits_leave_pairs_ascending() {
        let mut cells: Vec<u64> = vec![0x100, 0x200];
        cells.extend(100..132u64);
        let buf = RestorableBuffer::new(0, 2, 8, false).unwrap();
        let r = as_region(&mut cells);
        buf.init(r).unwrap();
        let s = snapshot(r);
        assert!(s[2..].chunks(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn single_stolen_bit() {
        let mut cells = vec![7u64, 10, 11];
        let buf = RestorableBuffer::new(0, 1, 1, false).unwrap();
        let r = as_region(&mut cells);
        buf.init(r).unwrap();
        assert_eq!(snapshot(r), vec![7, 11, 10]);
        buf.aux_store(r, 0, 0);
        buf.restore(r);
        assert_eq!(snapshot(r), vec![7, 10, 11]);
    }

    #[test]
    fn restore_after_overwrite_and_twice() {
        let mut cells: Vec<u64> = vec![0xABCD_1234, 0x5555_FFFF, 3];
        cells.extend(1000..1000 + 2 * 16 * 3);
        let orig = cells.clone();
        let buf = RestorableBuffer::new(0, 3, 16, false).unwrap();
        let r = as_region(&mut cells);
        buf.init(r).unwrap();
        for t in 0..3 {
            buf.aux_store(r, t, 0xFFFF - t as u64);
        }
        buf.restore(r);
        assert_eq!(snapshot(r), orig);
        buf.restore(r);
        assert_eq!(snapshot(r), orig);
    }

    #[test]
    fn overlap_and_mode_errors() {
        let mut cells = vec![1u64, 2, 3];
        let r = as_region(&mut cells);
        let big = RestorableBuffer::new(0, 2, 4, true).unwrap();
        assert!(big.init(r).is_err());
        let plain = RestorableBuffer::new(0, 1, 1, false).unwrap();
        plain.init(r).unwrap();
        assert!(plain.simulated_read(r, 0).is_err());
        assert!(RestorableBuffer::new(0, 1, 0, false).is_err());
    }

    #[test]
    fn simulated_access_roundtrip() {
        let mut cells: Vec<u64> = vec![0xAAAA_0000_0000_0F0F, 0x1234];
        cells.extend(50..50 + 2 * 12 * 2);
        let buf = RestorableBuffer::new(0, 2, 12, true).unwrap();
        let r = as_region(&mut cells);
        buf.init(r).unwrap();
        assert_eq!(buf.simulated_read(r, 0).unwrap(), 0xAAAA_0000_0000_0F0F);
        buf.aux_store(r, 0, 0x777);
        buf.simulated_write(r, 0, 0xBEEF_0000_0000_0ABC).unwrap();
        assert_eq!(buf.simulated_read(r, 0).unwrap(), 0xBEEF_0000_0000_0ABC);
        assert_eq!(buf.aux_load(r, 0), 0x777);
        buf.restore(r);
        assert_eq!(snapshot(r)[0], 0xBEEF_0000_0000_0ABC);
        assert_eq!(snapshot(r)[1], 0x1234);
    }

    #[test]
    fn encoding_writes_keep_bits() {
        let mut cells: Vec<u64> = vec![0b1011];
        cells.extend(10..18u64);
        let buf = RestorableBuffer::new(0, 1, 4, true).unwrap();
        let r = as_region(&mut cells);
        buf.init(r).unwrap();
        buf.begin_encoding_phase();
        let before = buf.encoded_bits(r, 0);
        buf.encoding_write(r, 1, 5).unwrap();
        buf.encoding_write(r, 2, 100).unwrap();
        buf.encoding_write(r, 4, 3).unwrap();
        assert_eq!(buf.encoded_bits(r, 0), before);
        let p = buf.partner(1);
        let partner_value = snapshot(r)[p];
        assert!(buf.encoding_write(r, 1, partner_value).is_err());
        assert!(buf.encoding_write(r, 0, 99).is_err());
    }

    proptest! {
        #[test]
        fn init_restore_identity_on_canonical_arrays(
            s in 1usize..6, w in 1u32..=64, adjustable in any::<bool>(), seed in any::<u64>()
        ) {
            let len = RestorableBuffer::footprint(s, w) + 3;
            let mut cells: Vec<u64> = (0..len as u64)
                .map(|i| crate::rng::mix64(seed ^ i.wrapping_mul(0x9E37)))
                .collect();
            let start = 1;
            let buf = RestorableBuffer::new(start, s, w, adjustable).unwrap();
            let orig = canonical(cells.clone(), buf.enc_start(), buf.end());
            cells = orig.clone();
            let r = as_region(&mut cells);
            buf.init(r).unwrap();
            for t in 0..s {
                buf.aux_store(r, t, seed.rotate_left(t as u32));
            }
            buf.restore(r);
            prop_assert_eq!(snapshot(r), orig);
        }

        #[test]
        fn encoding_fuzz_keeps_bits(seed in any::<u64>(), writes in 1usize..200) {
            let s = 3; let w = 10u32;
            let mut cells: Vec<u64> = (0..RestorableBuffer::footprint(s, w) as u64).map(|i| i * 4 + 1).collect();
            for t in 0..s { cells[t] = seed.rotate_left(7 * t as u32); }
            let buf = RestorableBuffer::new(0, s, w, true).unwrap();
            let r = as_region(&mut cells);
            buf.init(r).unwrap();
            let bits: Vec<u64> = (0..s).map(|t| buf.encoded_bits(r, t)).collect();
            buf.begin_encoding_phase();
            let mut fresh = 1_000_000u64;
            for q in 0..writes {
                let e = buf.enc_start() + (crate::rng::mix64(seed ^ q as u64) as usize % buf.enc_len());
                fresh += 2;
                buf.encoding_write(r, e, fresh).unwrap();
            }
            for t in 0..s { prop_assert_eq!(buf.encoded_bits(r, t), bits[t]); }
        }
    }
}
