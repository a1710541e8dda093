//! C ABI over `pipkit`.
//!
//! Every function returns a [`PipStatus`]; on failure the message is kept
//! per thread and can be fetched with [`pip_last_error`]. Vertices are
//! 0-based. Panics are caught at the boundary and reported as
//! [`PipStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pipkit::graph_oracle::{build_owned, OracleConfig, OwnedOracle};
use pipkit::merge::{merge, MergeConfig};
use pipkit::shuffle::{buffered_shuffle, parallel_shuffle};
use pipkit::PipError;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipStatus {
    Ok = 0,
    NullPointer = 1,
    /// A documented precondition was violated (unsorted runs, duplicate keys,
    /// a queried pair that is not an edge).
    Contract = 2,
    /// Malformed input data.
    Input = 3,
    /// An internal structure was found corrupted.
    Invariant = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque oracle handle. Owns a copy of the graph array.
pub struct PipOracle {
    inner: OwnedOracle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &PipError) -> PipStatus {
    match e {
        PipError::Contract(_) => PipStatus::Contract,
        PipError::Input(_) => PipStatus::Input,
        PipError::Invariant(_) => PipStatus::Invariant,
        PipError::Io(_) => PipStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PipStatus>) -> PipStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PipStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            PipStatus::Panic
        }
    }
}

fn check<T>(r: pipkit::Result<T>) -> Result<T, PipStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PipStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(PipStatus::NullPointer);
    }
    Ok(())
}

/// # Safety
/// `data` must point to `len` writable words, or be null when `len` is 0.
unsafe fn words_mut<'a>(data: *mut u64, len: usize) -> Result<&'a mut [u64], PipStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(data, "data")?;
    Ok(unsafe { std::slice::from_raw_parts_mut(data, len) })
}

/// Merges the sorted runs `data[0..left_len]` and `data[left_len..len]` in
/// place. Keys must be distinct.
///
/// # Safety
/// `data` must point to `len` writable words.
#[no_mangle]
pub unsafe extern "C" fn pip_merge(data: *mut u64, len: usize, left_len: usize, seed: u64) -> PipStatus {
    guard(|| {
        let words = unsafe { words_mut(data, len) }?;
        check(merge(words, left_len, &MergeConfig { seed, ..MergeConfig::default() }))?;
        Ok(())
    })
}

/// Shuffles `data` uniformly using in-place buffers. Values must be
/// distinct.
///
/// # Safety
/// `data` must point to `len` writable words.
#[no_mangle]
pub unsafe extern "C" fn pip_shuffle(data: *mut u64, len: usize, seed: u64) -> PipStatus {
    guard(|| {
        let words = unsafe { words_mut(data, len) }?;
        check(buffered_shuffle(words, seed))?;
        Ok(())
    })
}

/// Shuffles `data` with a heap workspace. The result equals the sequential
/// Knuth shuffle driven by the same seed.
///
/// # Safety
/// `data` must point to `len` writable words.
#[no_mangle]
pub unsafe extern "C" fn pip_parallel_shuffle(data: *mut u64, len: usize, seed: u64) -> PipStatus {
    guard(|| {
        let words = unsafe { words_mut(data, len) }?;
        check(parallel_shuffle(words, seed))?;
        Ok(())
    })
}

/// Builds an oracle from a CSR array of `len` words. The array is copied.
/// On success `*out` receives a handle to release with [`pip_oracle_free`].
///
/// # Safety
/// `words` must point to `len` readable words and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pip_oracle_build(
    words: *const u64,
    len: usize,
    seed: u64,
    out: *mut *mut PipOracle,
) -> PipStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(words, "words")?;
        unsafe { *out = ptr::null_mut() };
        let copy = unsafe { std::slice::from_raw_parts(words, len) }.to_vec();
        let inner = check(build_owned(copy, &OracleConfig::seeded(seed)))?;
        unsafe { *out = Box::into_raw(Box::new(PipOracle { inner })) };
        Ok(())
    })
}

/// Vertex count of the oracle's graph, or 0 for a null handle.
///
/// # Safety
/// `oracle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pip_oracle_vertex_count(oracle: *const PipOracle) -> usize {
    unsafe { oracle.as_ref() }.map_or(0, |o| o.inner.n())
}

/// Writes whether edge `(u, v)` belongs to the minimum spanning forest.
///
/// # Safety
/// `oracle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pip_oracle_msf_query(
    oracle: *const PipOracle,
    u: usize,
    v: usize,
    out: *mut bool,
) -> PipStatus {
    guard(|| {
        non_null(oracle, "oracle")?;
        non_null(out, "out")?;
        let o = unsafe { &*oracle };
        let r = check(o.inner.msf_query(u, v))?;
        unsafe { *out = r };
        Ok(())
    })
}

/// Writes the component label of `v`. Two vertices are connected exactly
/// when their labels are equal.
///
/// # Safety
/// `oracle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pip_oracle_connectivity(oracle: *const PipOracle, v: usize, out: *mut usize) -> PipStatus {
    guard(|| {
        non_null(oracle, "oracle")?;
        non_null(out, "out")?;
        let o = unsafe { &*oracle };
        let r = check(o.inner.connectivity_query(v))?;
        unsafe { *out = r };
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `oracle` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pip_oracle_free(oracle: *mut PipOracle) {
    if !oracle.is_null() {
        drop(unsafe { Box::from_raw(oracle) });
    }
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `cap > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null when `cap` is 0.
#[no_mangle]
pub unsafe extern "C" fn pip_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Static description of a status code; unknown codes get a generic text.
#[no_mangle]
pub extern "C" fn pip_status_str(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"contract violation",
        3 => c"invalid input",
        4 => c"invariant broken",
        5 => c"i/o error",
        6 => c"panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}
