//! Inversion encoding: one bit per pair of distinct elements, carried by
//! whether the pair is ordered ascending (0) or descending (1).
//!
//! All routines work on a shared view of the array (`Region`) so that
//! algorithms can read and write disjoint blocks from several tasks at once.
//! Loads and stores are relaxed; ordering between phases comes from the
//! fork-join structure of the callers.

use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

use rayon::prelude::*;

use crate::error::{contract, PipError, Result};

pub type Region = [AtomicU64];

const _: () = assert!(std::mem::size_of::<AtomicU64>() == std::mem::size_of::<u64>());
const _: () = assert!(std::mem::align_of::<AtomicU64>() == std::mem::align_of::<u64>());

/// Views an exclusively borrowed word slice as a shared atomic region.
#[cfg(target_has_atomic = "64")]
pub fn as_region(cells: &mut [u64]) -> &Region {
    // SAFETY: AtomicU64 has the size and alignment of u64 (checked above), and
    // the exclusive borrow guarantees no non-atomic access for the lifetime.
    unsafe { &*(cells as *mut [u64] as *const [AtomicU64]) }
}

pub fn snapshot(region: &Region) -> Vec<u64> {
    region.iter().map(|c| c.load(Relaxed)).collect()
}

#[inline(always)]
pub(crate) fn ld(region: &Region, i: usize) -> u64 {
    region[i].load(Relaxed)
}

#[inline(always)]
pub(crate) fn st(region: &Region, i: usize, v: u64) {
    region[i].store(v, Relaxed)
}

/// Decodes `pairs` bits starting at cell `start`. No bounds or width checks.
#[inline]
pub(crate) fn read_bits(region: &Region, start: usize, pairs: usize) -> u64 {
    let mut v = 0u64;
    for t in 0..pairs {
        let p = start + 2 * t;
        v |= ((ld(region, p) > ld(region, p + 1)) as u64) << t;
    }
    v
}

/// Encodes the low `pairs` bits of `v` starting at cell `start`.
#[inline]
pub(crate) fn write_bits(region: &Region, start: usize, pairs: usize, v: u64) {
    for t in 0..pairs {
        let p = start + 2 * t;
        let a = ld(region, p);
        let b = ld(region, p + 1);
        let want = (v >> t) & 1 == 1;
        if (a > b) != want {
            st(region, p, b);
            st(region, p + 1, a);
        }
    }
}

/// Puts every pair in `[i, j)` into ascending order (all bits zero).
pub fn reset_pairs(region: &Region, i: usize, j: usize) {
    let mut p = i;
    while p + 1 < j {
        let a = ld(region, p);
        let b = ld(region, p + 1);
        if a > b {
            st(region, p, b);
            st(region, p + 1, a);
        }
        p += 2;
    }
}

fn check_range(region: &Region, i: usize, j: usize) -> Result<usize> {
    if j <= i || !(j - i).is_multiple_of(2) {
        return contract(format!("pair range [{i}, {j}) must be non-empty and even"));
    }
    if j > region.len() {
        return contract(format!("pair range [{i}, {j}) exceeds region of {}", region.len()));
    }
    Ok((j - i) / 2)
}

/// Value whose bit t is set iff `region[i+2t] > region[i+2t+1]`.
pub fn read_block(region: &Region, i: usize, j: usize) -> Result<u64> {
    let pairs = check_range(region, i, j)?;
    if pairs > 64 {
        return contract(format!("{pairs} pairs do not fit a 64-bit value; use read_wide"));
    }
    Ok(read_bits(region, i, pairs))
}

pub fn write_block(region: &Region, i: usize, j: usize, v: u64) -> Result<()> {
    let pairs = check_range(region, i, j)?;
    if pairs > 64 {
        return contract(format!("{pairs} pairs do not fit a 64-bit value; use write_wide"));
    }
    if pairs < 64 && v >> pairs != 0 {
        return contract(format!("value {v} does not fit in {pairs} bits"));
    }
    write_bits(region, i, pairs, v);
    Ok(())
}

const WIDE_GRAIN: usize = 64;

/// Multi-word variant of `read_block`; word `q` of `out` holds bits
/// `64q..64q+63`. Splits across tasks once the range exceeds 64 pairs.
pub fn read_wide(region: &Region, i: usize, j: usize, out: &mut [u64]) -> Result<()> {
    let pairs = check_range(region, i, j)?;
    if out.len() < pairs.div_ceil(64) {
        return contract("output too short for the pair range");
    }
    out.par_iter_mut().with_min_len(if pairs > WIDE_GRAIN { 1 } else { usize::MAX }).enumerate().for_each(|(q, w)| {
        let lo = q * 64;
        *w = if lo < pairs { read_bits(region, i + 2 * lo, (pairs - lo).min(64)) } else { 0 };
    });
    Ok(())
}

pub fn write_wide(region: &Region, i: usize, j: usize, words: &[u64]) -> Result<()> {
    let pairs = check_range(region, i, j)?;
    if words.len() < pairs.div_ceil(64) {
        return contract("too few words for the pair range");
    }
    let nwords = pairs.div_ceil(64);
    let tail = pairs - 64 * (nwords - 1);
    if tail < 64 && words[nwords - 1] >> tail != 0 {
        return contract("value does not fit the pair range");
    }
    words[..nwords].par_iter().with_min_len(if pairs > WIDE_GRAIN { 1 } else { usize::MAX }).enumerate().for_each(
        |(q, &w)| {
            let lo = q * 64;
            write_bits(region, i + 2 * lo, (pairs - lo).min(64), w);
        },
    );
    Ok(())
}

/// A named field occupying `bits` consecutive pairs starting at cell
/// `offset` of its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Field {
    pub offset: usize,
    pub bits: u32,
}

impl Field {
    pub fn cells(&self) -> usize {
        2 * self.bits as usize
    }

    pub fn end(&self) -> usize {
        self.offset + self.cells()
    }

    #[inline]
    pub fn get(&self, region: &Region, base: usize) -> u64 {
        read_bits(region, base + self.offset, self.bits as usize)
    }

    #[inline]
    pub fn set(&self, region: &Region, base: usize, v: u64) {
        debug_assert!(self.bits >= 64 || v >> self.bits == 0, "field overflow");
        write_bits(region, base + self.offset, self.bits as usize, v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    block_size: usize,
    raw_cells: usize,
    names: Vec<String>,
    fields: Vec<Field>,
}

impl BlockLayout {
    /// Lays out `fields` in declaration order after `raw_cells` leading cells.
    pub fn new(block_size: usize, raw_cells: usize, fields: &[(&str, u32)]) -> Result<Self> {
        let mut names = Vec::with_capacity(fields.len());
        let mut out = Vec::with_capacity(fields.len());
        let mut offset = raw_cells;
        for &(name, bits) in fields {
            if bits == 0 || bits > 64 {
                return contract(format!("field {name}: width {bits} outside 1..=64"));
            }
            if names.iter().any(|n| n == name) {
                return contract(format!("duplicate field name {name}"));
            }
            names.push(name.to_string());
            let f = Field { offset, bits };
            offset = f.end();
            out.push(f);
        }
        if offset > block_size {
            return contract(format!("layout needs {offset} cells but the block holds {block_size}"));
        }
        Ok(BlockLayout { block_size, raw_cells, names, fields: out })
    }

    /// Cells required by `raw_cells` and `fields`, before choosing a block size.
    pub fn required_cells(raw_cells: usize, fields: &[(&str, u32)]) -> usize {
        raw_cells + fields.iter().map(|&(_, b)| 2 * b as usize).sum::<usize>()
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn raw_cells(&self) -> usize {
        self.raw_cells
    }

    pub fn used_cells(&self) -> usize {
        self.fields.last().map_or(self.raw_cells, |f| f.end())
    }

    pub fn field(&self, name: &str) -> Result<Field> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.fields[i])
            .ok_or_else(|| PipError::Contract(format!("unknown field {name}")))
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, Field)> {
        self.names.iter().map(String::as_str).zip(self.fields.iter().copied())
    }
}

fn field_base(region: &Region, layout: &BlockLayout, block_index: usize) -> Result<usize> {
    let base = block_index
        .checked_mul(layout.block_size)
        .filter(|b| b + layout.block_size <= region.len())
        .ok_or_else(|| PipError::Contract(format!("block {block_index} outside region")))?;
    Ok(base)
}

pub fn read_field(region: &Region, layout: &BlockLayout, block_index: usize, name: &str) -> Result<u64> {
    let f = layout.field(name)?;
    let base = field_base(region, layout, block_index)?;
    Ok(f.get(region, base))
}

pub fn write_field(region: &Region, layout: &BlockLayout, block_index: usize, name: &str, v: u64) -> Result<()> {
    let f = layout.field(name)?;
    if f.bits < 64 && v >> f.bits != 0 {
        return contract(format!("value {v} overflows field {name} of {} bits", f.bits));
    }
    let base = field_base(region, layout, block_index)?;
    f.set(region, base, v);
    Ok(())
}

/// Factorial table for permutation units of size `k`.
#[derive(Clone, Debug)]
pub struct PermUnit {
    k: usize,
    fact: Vec<u64>,
}

pub const MAX_UNIT: usize = 20;

impl PermUnit {
    pub fn new(k: usize) -> Result<Self> {
        if !(2..=MAX_UNIT).contains(&k) {
            return contract(format!("unit size {k} outside 2..={MAX_UNIT}"));
        }
        Ok(PermUnit { k, fact: factorials(k) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of distinct values a unit can hold (k!).
    pub fn capacity(&self) -> u64 {
        self.fact[self.k]
    }

    pub fn factorial(&self, i: usize) -> u64 {
        self.fact[i]
    }

    pub fn write(&self, unit: &mut [u64], v: u64) -> Result<()> {
        if unit.len() != self.k {
            return contract(format!("unit has {} elements, expected {}", unit.len(), self.k));
        }
        unit_write(unit, v)
    }

    pub fn read(&self, unit: &[u64]) -> Result<u64> {
        if unit.len() != self.k {
            return contract(format!("unit has {} elements, expected {}", unit.len(), self.k));
        }
        unit_read(unit)
    }
}

fn factorials(k: usize) -> Vec<u64> {
    let mut f = Vec::with_capacity(k + 1);
    f.push(1u64);
    for i in 1..=k {
        f.push(f[i - 1] * i as u64);
    }
    f
}

fn check_unit_size(k: usize) -> Result<()> {
    if k == 0 || k > MAX_UNIT {
        return contract(format!("permutation size {k} outside 1..={MAX_UNIT}"));
    }
    Ok(())
}

/// Rank of a permutation of `1..=k` given as a listing: the first element
/// contributes `(pi[0] - 1)·(k-1)!`, the rest is ranked after relabelling.
pub fn perm_rank(pi: &[usize]) -> Result<u64> {
    let k = pi.len();
    check_unit_size(k)?;
    let mut seen = [false; MAX_UNIT + 1];
    for &x in pi {
        if x == 0 || x > k || seen[x] {
            return contract(format!("{pi:?} is not a permutation of 1..={k}"));
        }
        seen[x] = true;
    }
    let fact = factorials(k);
    let mut cur: Vec<usize> = pi.to_vec();
    let mut r = 0u64;
    for t in 0..k {
        let first = cur[t];
        r += (first as u64 - 1) * fact[k - 1 - t];
        for x in cur[t + 1..].iter_mut() {
            if *x > first {
                *x -= 1;
            }
        }
    }
    Ok(r)
}

/// Inverse of `perm_rank`.
pub fn perm_unrank(r: u64, k: usize) -> Result<Vec<usize>> {
    check_unit_size(k)?;
    let fact = factorials(k);
    if r >= fact[k] {
        return contract(format!("rank {r} out of range for k = {k}"));
    }
    let mut digits = [0usize; MAX_UNIT];
    let mut rest = r;
    for (t, d) in digits.iter_mut().enumerate().take(k) {
        let f = fact[k - 1 - t];
        *d = (rest / f) as usize;
        rest %= f;
    }
    let mut out: Vec<usize> = Vec::with_capacity(k);
    for t in (0..k).rev() {
        let v = digits[t] + 1;
        for x in out.iter_mut() {
            if *x >= v {
                *x += 1;
            }
        }
        out.insert(0, v);
    }
    Ok(out)
}

fn unit_listing(unit: &[u64]) -> Result<Vec<usize>> {
    let k = unit.len();
    let mut listing = Vec::with_capacity(k);
    for (p, &x) in unit.iter().enumerate() {
        let mut rank = 1usize;
        for (q, &y) in unit.iter().enumerate() {
            if q != p && y == x {
                return contract("unit elements must be distinct");
            }
            if y < x {
                rank += 1;
            }
        }
        listing.push(rank);
    }
    Ok(listing)
}

/// Rearranges the unit so that its relative order spells `perm_unrank(v, k)`.
pub fn unit_write(unit: &mut [u64], v: u64) -> Result<()> {
    let pi = perm_unrank(v, unit.len())?;
    unit_listing(unit)?;
    unit.sort_unstable();
    let sorted: Vec<u64> = unit.to_vec();
    for (slot, &rank) in unit.iter_mut().zip(pi.iter()) {
        *slot = sorted[rank - 1];
    }
    Ok(())
}

pub fn unit_read(unit: &[u64]) -> Result<u64> {
    check_unit_size(unit.len())?;
    perm_rank(&unit_listing(unit)?)
}
