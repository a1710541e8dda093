use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

use crate::buffers::RestorableBuffer;
use crate::encoding::Region;

/// Shared scratch words used by the reservation rounds.
pub trait Workspace: Sync {
    fn len(&self) -> usize;
    /// Usable bits per word.
    fn bits(&self) -> u32;
    fn load(&self, i: usize) -> u64;
    fn store(&self, i: usize, v: u64);
    /// Atomic max; returns the previous value.
    fn fetch_max(&self, i: usize, v: u64) -> u64;
    fn compare_exchange(&self, i: usize, old: u64, new: u64) -> Result<u64, u64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct HeapWorkspace {
    words: Vec<AtomicU64>,
}

impl HeapWorkspace {
    pub fn new(len: usize) -> Self {
        HeapWorkspace { words: (0..len).map(|_| AtomicU64::new(0)).collect() }
    }
}

impl Workspace for HeapWorkspace {
    fn len(&self) -> usize {
        self.words.len()
    }
    fn bits(&self) -> u32 {
        64
    }
    #[inline]
    fn load(&self, i: usize) -> u64 {
        self.words[i].load(Relaxed)
    }
    #[inline]
    fn store(&self, i: usize, v: u64) {
        self.words[i].store(v, Relaxed)
    }
    #[inline]
    fn fetch_max(&self, i: usize, v: u64) -> u64 {
        self.words[i].fetch_max(v, Relaxed)
    }
    #[inline]
    fn compare_exchange(&self, i: usize, old: u64, new: u64) -> Result<u64, u64> {
        self.words[i].compare_exchange(old, new, Relaxed, Relaxed)
    }
}

/// Scratch words carved out of a live buffer's auxiliary slots.
pub struct BufferWorkspace<'a> {
    buffer: &'a RestorableBuffer,
    region: &'a Region,
}

impl<'a> BufferWorkspace<'a> {
    pub fn new(buffer: &'a RestorableBuffer, region: &'a Region) -> Self {
        BufferWorkspace { buffer, region }
    }
}

impl Workspace for BufferWorkspace<'_> {
    fn len(&self) -> usize {
        self.buffer.aux_len()
    }
    fn bits(&self) -> u32 {
        self.buffer.word_bits()
    }
    #[inline]
    fn load(&self, i: usize) -> u64 {
        self.buffer.aux_load(self.region, i)
    }
    #[inline]
    fn store(&self, i: usize, v: u64) {
        self.buffer.aux_store(self.region, i, v)
    }
    #[inline]
    fn fetch_max(&self, i: usize, v: u64) -> u64 {
        self.buffer.aux_fetch_max(self.region, i, v)
    }
    #[inline]
    fn compare_exchange(&self, i: usize, old: u64, new: u64) -> Result<u64, u64> {
        self.buffer.aux_compare_exchange(self.region, i, old, new)
    }
}
