//! Reservation rounds over descending chunks of swap indices.
//!
//! Workspace layout for chunk size `k`: a direct reservation word per
//! in-chunk index, the pending swap list, then a linear-probing table of
//! `cap` key words followed by `cap` value words for out-of-chunk targets.

use rayon::prelude::*;

use super::workspace::Workspace;
use super::TargetSource;
use crate::buffers::RestorableBuffer;
use crate::encoding::{ld, st, Region};
use crate::error::{contract, Result};
use crate::rng::mix64;

const GRAIN: usize = 256;

#[inline]
fn par_for(n: usize, f: impl Fn(usize) + Sync + Send) {
    if n <= GRAIN {
        (0..n).for_each(f);
    } else {
        (0..n).into_par_iter().with_min_len(GRAIN).for_each(f);
    }
}

/// Hash slots for chunk size `k`; doubled when encoding pairs are reserved
/// as a whole.
pub fn table_capacity(k: usize, pair_reservations: bool) -> usize {
    2 * k * (1 + pair_reservations as usize)
}

pub fn workspace_words(k: usize, pair_reservations: bool) -> usize {
    2 * k + 2 * table_capacity(k, pair_reservations)
}

/// How swap targets are accessed.
#[derive(Clone, Copy)]
pub(crate) enum Access<'a> {
    Plain,
    /// Targets below the buffer end go through the adjustable buffer.
    Adjustable(&'a RestorableBuffer),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Plain,
    Aux(usize),
    Enc,
}

pub(crate) struct Engine<'a, W: Workspace, T: TargetSource> {
    region: &'a Region,
    ws: &'a W,
    targets: &'a T,
    access: Access<'a>,
    k: usize,
    cap: usize,
    commit_bit: u64,
    aux_bit: u64,
    id_mask: u64,
    dup_write: std::sync::atomic::AtomicBool,
}

impl<'a, W: Workspace, T: TargetSource> Engine<'a, W, T> {
    pub(crate) fn new(region: &'a Region, ws: &'a W, targets: &'a T, access: Access<'a>, k: usize) -> Result<Self> {
        if k == 0 {
            return contract("chunk size must be at least 1");
        }
        let pairs = matches!(access, Access::Adjustable(_));
        let need = workspace_words(k, pairs);
        if ws.len() < need {
            return contract(format!("workspace holds {} words, chunk {k} needs {need}", ws.len()));
        }
        let bits = ws.bits();
        if bits < 3 || (bits < 64 && (region.len() as u64) >= 1u64 << (bits - 2)) {
            return contract(format!("{bits}-bit workspace words cannot index {} cells", region.len()));
        }
        if region.len() as u64 >= 1 << 62 {
            return contract("array too large");
        }
        par_for(need, |i| ws.store(i, 0));
        Ok(Engine {
            region,
            ws,
            targets,
            access,
            k,
            cap: table_capacity(k, pairs),
            commit_bit: 1 << (bits - 2),
            aux_bit: 1 << (bits - 1),
            id_mask: (1 << (bits - 2)) - 1,
            dup_write: std::sync::atomic::AtomicBool::new(false),
        })
    }

    /// Set when an encoding write met an equal partner element.
    pub(crate) fn saw_duplicate(&self) -> bool {
        self.dup_write.load(std::sync::atomic::Ordering::Relaxed)
    }

    #[inline]
    fn pending(&self) -> usize {
        self.k
    }
    #[inline]
    fn keys(&self) -> usize {
        2 * self.k
    }
    #[inline]
    fn vals(&self) -> usize {
        2 * self.k + self.cap
    }

    #[inline]
    fn kind(&self, t: usize) -> Kind {
        match self.access {
            Access::Adjustable(buf) if t < buf.end() => {
                if buf.contains_aux(t) {
                    Kind::Aux(t - buf.aux_start())
                } else if buf.contains_enc(t) {
                    Kind::Enc
                } else {
                    Kind::Plain
                }
            }
            _ => Kind::Plain,
        }
    }

    /// Indices swap `s` must hold, with the target's access kind.
    #[inline]
    fn reservations(&self, s: usize) -> ([usize; 3], usize, Kind) {
        let t = self.targets.target(s);
        if t == s {
            return ([s, s, s], 1, Kind::Plain);
        }
        let kind = self.kind(t);
        match (kind, self.access) {
            (Kind::Enc, Access::Adjustable(buf)) => ([s, t, buf.partner(t)], 3, kind),
            _ => ([s, t, t], 2, kind),
        }
    }

    /// Reservation value word for `key`, inserting it into the table if needed.
    #[inline]
    fn slot(&self, lo: usize, hi: usize, key: usize) -> usize {
        if key >= lo && key < hi {
            return key - lo;
        }
        let tag = key as u64 + 1;
        let mut h = ((mix64(key as u64) as u128 * self.cap as u128) >> 64) as usize;
        loop {
            let kw = self.keys() + h;
            match self.ws.load(kw) {
                0 => match self.ws.compare_exchange(kw, 0, tag) {
                    Ok(_) => return self.vals() + h,
                    Err(seen) if seen == tag => return self.vals() + h,
                    Err(_) => {}
                },
                x if x == tag => return self.vals() + h,
                _ => {}
            }
            h += 1;
            if h == self.cap {
                h = 0;
            }
        }
    }

    /// Runs the swaps for indices `[lo, hi)` in descending chunks. Returns
    /// the number of reservation rounds.
    pub(crate) fn run(&self, lo: usize, hi: usize) -> usize {
        let mut rounds = 0;
        let mut top = hi;
        while top > lo {
            let bottom = top.saturating_sub(self.k).max(lo);
            rounds += self.run_chunk(bottom, top);
            top = bottom;
        }
        rounds
    }

    fn run_chunk(&self, lo: usize, hi: usize) -> usize {
        let ws = self.ws;
        let len = hi - lo;
        par_for(len, |i| ws.store(self.pending() + i, (hi - 1 - i) as u64));
        let mut live = len;
        let mut rounds = 0;
        while live > 0 {
            rounds += 1;
            par_for(live, |i| {
                let s = (ws.load(self.pending() + i) & self.id_mask) as usize;
                let (keys, n, _) = self.reservations(s);
                for &key in &keys[..n] {
                    ws.fetch_max(self.slot(lo, hi, key), s as u64 + 1);
                }
            });
            par_for(live, |i| {
                let s = (ws.load(self.pending() + i) & self.id_mask) as usize;
                let (keys, n, kind) = self.reservations(s);
                if keys[..n].iter().all(|&key| ws.load(self.slot(lo, hi, key)) == s as u64 + 1) {
                    let aux = if matches!(kind, Kind::Aux(_)) { self.aux_bit } else { 0 };
                    ws.store(self.pending() + i, s as u64 | self.commit_bit | aux);
                }
            });
            match self.access {
                Access::Plain => par_for(live, |i| self.execute(i, None)),
                Access::Adjustable(buf) => {
                    buf.begin_aux_phase();
                    par_for(live, |i| self.execute(i, Some(true)));
                    buf.begin_encoding_phase();
                    par_for(live, |i| self.execute(i, Some(false)));
                }
            }
            par_for(live, |i| {
                let s = (ws.load(self.pending() + i) & self.id_mask) as usize;
                let (keys, n, _) = self.reservations(s);
                for &key in &keys[..n] {
                    ws.store(self.slot(lo, hi, key), 0);
                }
            });
            let mut kept = 0;
            for i in 0..live {
                let v = ws.load(self.pending() + i);
                if v & self.commit_bit == 0 {
                    ws.store(self.pending() + kept, v);
                    kept += 1;
                }
            }
            live = kept;
        }
        par_for(len, |i| ws.store(i, 0));
        par_for(self.cap, |h| {
            ws.store(self.keys() + h, 0);
            ws.store(self.vals() + h, 0);
        });
        rounds
    }

    /// Executes pending entry `i` if committed and in the requested phase.
    #[inline]
    fn execute(&self, i: usize, aux_phase: Option<bool>) {
        let v = self.ws.load(self.pending() + i);
        if v & self.commit_bit == 0 {
            return;
        }
        if let Some(want_aux) = aux_phase {
            if (v & self.aux_bit != 0) != want_aux {
                return;
            }
        }
        let s = (v & self.id_mask) as usize;
        let t = self.targets.target(s);
        if t == s {
            return;
        }
        let r = self.region;
        match (self.kind(t), self.access) {
            (Kind::Plain, _) | (_, Access::Plain) => {
                let a = ld(r, s);
                st(r, s, ld(r, t));
                st(r, t, a);
            }
            (Kind::Aux(slot), Access::Adjustable(buf)) => {
                let a = ld(r, s);
                st(r, s, buf.sim_read_unchecked(r, slot));
                buf.sim_write_unchecked(r, slot, a);
            }
            (Kind::Enc, Access::Adjustable(buf)) => {
                let a = ld(r, s);
                if ld(r, buf.partner(t)) == a {
                    self.dup_write.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                st(r, s, ld(r, t));
                buf.enc_write_unchecked(r, t, a);
            }
        }
    }
}
