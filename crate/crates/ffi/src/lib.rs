//! C ABI over the `lipcover` library.
//!
//! Conventions:
//! - Every fallible function returns an [`LcStatus`] and writes its result
//!   through an out-pointer only on [`LcStatus::Ok`].
//! - On failure, [`lc_last_error_message`] describes the error. The message
//!   belongs to the calling thread and stays valid until its next call into
//!   this library.
//! - Handles (`LcPointStore`, `LcCondition`) are opaque and owned by the
//!   caller once returned; release them with the matching `_free` function.
//! - Strings returned through out-pointers are NUL-terminated, owned by the
//!   caller, and released with [`lc_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lipcover::cantor::CantorError;
use lipcover::forcing::ForcingError;
use lipcover::lipschitz::l1_count_log2;
use lipcover::sierpinski::cover_check;
use lipcover::{
    amalgamate, extend_with_index, extend_with_ordinal, generic_run, leq, BitString, Condition,
    OrdLabel, PointStore,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was malformed or out of range.
    InvalidArgument = 2,
    /// A condition handed in is not a member of the poset.
    InvalidCondition = 3,
    /// The two conditions do not meet the amalgamation hypotheses.
    Preconditions = 4,
    /// A bit index or count does not fit the fixed-width result.
    Overflow = 5,
    /// A string argument was not valid UTF-8, or JSON did not parse.
    Parse = 6,
    /// The library panicked; this is a bug.
    Internal = 7,
}

/// Opaque store of Cantor-point definitions.
pub struct LcPointStore {
    inner: PointStore,
}

/// Opaque forcing condition.
pub struct LcCondition {
    inner: Condition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (LcStatus, String);

fn fail<T>(status: LcStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err((status, msg.into()))
}

fn run(body: impl FnOnce() -> Result<(), Failure>) -> LcStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => (LcStatus::Ok, None),
        Ok(Err((status, msg))) => (status, Some(msg)),
        Err(_) => (LcStatus::Internal, Some("internal panic".to_string())),
    };
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).expect("NULs removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or((LcStatus::NullPointer, "null output pointer".to_string()))
}

unsafe fn handle<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or((LcStatus::NullPointer, format!("null handle `{name}`")))
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or((LcStatus::NullPointer, format!("null argument `{name}`")))
}

unsafe fn string_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(LcStatus::NullPointer, format!("null argument `{name}`"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (LcStatus::Parse, format!("`{name}` is not UTF-8: {e}")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| (LcStatus::Internal, e.to_string()))
}

fn cantor_failure(e: CantorError) -> Failure {
    let status = match e {
        CantorError::IndexOverflow { .. } => LcStatus::Overflow,
        _ => LcStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn forcing_failure(e: ForcingError) -> Failure {
    let status = match e {
        ForcingError::Invalid { .. } => LcStatus::InvalidCondition,
        ForcingError::Preconditions(_) => LcStatus::Preconditions,
        ForcingError::Infeasible(_) | ForcingError::EmptyRun => LcStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn boxed_condition(c: Condition) -> *mut LcCondition {
    Box::into_raw(Box::new(LcCondition { inner: c }))
}

/// Message for the last failed call on this thread, or null after a success.
#[no_mangle]
pub extern "C" fn lc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of ordered pairs of `{0..size-1}` not covered by the identity and
/// the first `fn_count` ordinal functions and their inverses.
///
/// # Safety
/// `out_uncovered` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_sierpinski_uncovered(
    size: u64,
    fn_count: u64,
    out_uncovered: *mut u64,
) -> LcStatus {
    run(|| {
        let out = out(out_uncovered)?;
        if size == 0 {
            return fail(LcStatus::InvalidArgument, "size must be at least 1");
        }
        *out = cover_check(size, fn_count).uncovered.len() as u64;
        Ok(())
    })
}

/// `log2` of the number of 1-Lipschitz self-maps of the depth-`n` tree.
///
/// # Safety
/// `out_log2` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_lipschitz_count_log2(n: u32, out_log2: *mut u64) -> LcStatus {
    run(|| {
        let out = out(out_log2)?;
        // 2^(n+1) - 2 fits in 64 bits up to n = 63
        if n > 63 {
            return fail(
                LcStatus::Overflow,
                format!("n = {n} overflows the count exponent"),
            );
        }
        *out = l1_count_log2(n) as u64;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn lc_point_store_new() -> *mut LcPointStore {
    Box::into_raw(Box::new(LcPointStore {
        inner: PointStore::new(),
    }))
}

/// # Safety
/// `store` must be null or a handle from [`lc_point_store_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_point_store_free(store: *mut LcPointStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Adds the point `prefix` followed by `tail` forever. `prefix` is a string
/// of `'0'`/`'1'` characters.
///
/// # Safety
/// `store` must be a live handle, `prefix` a NUL-terminated string, and
/// `out_id` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_point_store_add_base(
    store: *mut LcPointStore,
    prefix: *const c_char,
    tail: bool,
    out_id: *mut usize,
) -> LcStatus {
    run(|| {
        let store = handle(store, "store")?;
        let slot = out(out_id)?;
        let prefix: BitString = string_arg(prefix, "prefix")?
            .parse()
            .map_err(|e| (LcStatus::InvalidArgument, format!("prefix: {e}")))?;
        *slot = store.inner.add_base(prefix, tail);
        Ok(())
    })
}

/// Adds the diagonal extension of the `len` points in `ids`.
///
/// # Safety
/// `store` must be a live handle, `ids` valid for `len` reads, and `out_id`
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_point_store_diagonal_extend(
    store: *mut LcPointStore,
    ids: *const usize,
    len: usize,
    out_id: *mut usize,
) -> LcStatus {
    run(|| {
        let store = handle(store, "store")?;
        let slot = out(out_id)?;
        let ids = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(arg(ids, "ids")?, len)
        };
        *slot = store.inner.diagonal_extend(ids).map_err(cantor_failure)?;
        Ok(())
    })
}

/// Bit `index` of point `id`.
///
/// # Safety
/// `store` must be a live handle and `out_bit` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_point_store_eval(
    store: *mut LcPointStore,
    id: usize,
    index: u64,
    out_bit: *mut bool,
) -> LcStatus {
    run(|| {
        let store = handle(store, "store")?;
        *out(out_bit)? = store
            .inner
            .eval_point(id, index as u128)
            .map_err(cantor_failure)?;
        Ok(())
    })
}

/// The first `depth` bits of `f_n(x_id)` as a `'0'`/`'1'` string; `n = 0`
/// gives the prefix of the point itself.
///
/// # Safety
/// `store` must be a live handle and `out_bits` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_point_store_apply(
    store: *mut LcPointStore,
    n: u32,
    id: usize,
    depth: usize,
    out_bits: *mut *mut c_char,
) -> LcStatus {
    run(|| {
        let store = handle(store, "store")?;
        let slot = out(out_bits)?;
        let bits = store.inner.apply(n, id, depth).map_err(cantor_failure)?;
        *slot = into_c_string(bits.to_string())?;
        Ok(())
    })
}

/// The trivial condition: depth 0, index set `{0}`, no labels.
#[no_mangle]
pub extern "C" fn lc_condition_trivial() -> *mut LcCondition {
    boxed_condition(Condition::trivial())
}

/// # Safety
/// `c` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_free(c: *mut LcCondition) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Parses a condition from its JSON form. The maps must be 1-Lipschitz, but
/// membership in the poset is not checked; see [`lc_condition_violations`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_c` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_from_json(
    json: *const c_char,
    out_c: *mut *mut LcCondition,
) -> LcStatus {
    run(|| {
        let slot = out(out_c)?;
        let text = string_arg(json, "json")?;
        let c: Condition =
            serde_json::from_str(text).map_err(|e| (LcStatus::Parse, e.to_string()))?;
        *slot = boxed_condition(c);
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle and `out_json` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_to_json(
    c: *const LcCondition,
    out_json: *mut *mut c_char,
) -> LcStatus {
    run(|| {
        let c = arg(c, "c")?;
        let slot = out(out_json)?;
        let text =
            serde_json::to_string(&c.inner).map_err(|e| (LcStatus::Internal, e.to_string()))?;
        *slot = into_c_string(text)?;
        Ok(())
    })
}

/// Number of failed membership clauses; 0 means the condition is valid.
///
/// # Safety
/// `c` must be a live handle and `out_count` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_violations(
    c: *const LcCondition,
    out_count: *mut usize,
) -> LcStatus {
    run(|| {
        *out(out_count)? = arg(c, "c")?.inner.validate().len();
        Ok(())
    })
}

/// Depth `n` of the condition.
///
/// # Safety
/// `c` must be a live handle and `out_depth` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_depth(
    c: *const LcCondition,
    out_depth: *mut usize,
) -> LcStatus {
    run(|| {
        *out(out_depth)? = arg(c, "c")?.inner.n;
        Ok(())
    })
}

/// Whether `q` extends `p`.
///
/// # Safety
/// `p`, `q` must be live handles and `out_leq` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_leq(
    p: *const LcCondition,
    q: *const LcCondition,
    out_leq: *mut bool,
) -> LcStatus {
    run(|| {
        let (p, q) = (arg(p, "p")?, arg(q, "q")?);
        *out(out_leq)? = leq(&p.inner, &q.inner).map_err(forcing_failure)?;
        Ok(())
    })
}

/// An extension of `c` with depth at least `k` and `k` in its index set.
///
/// # Safety
/// `c` must be a live handle and `out_c` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_extend_index(
    c: *const LcCondition,
    k: u64,
    out_c: *mut *mut LcCondition,
) -> LcStatus {
    run(|| {
        let c = arg(c, "c")?;
        let slot = out(out_c)?;
        *slot = boxed_condition(extend_with_index(&c.inner, k).map_err(forcing_failure)?);
        Ok(())
    })
}

/// An extension of `c` whose label set contains `label`.
///
/// # Safety
/// `c` must be a live handle and `out_c` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_extend_ordinal(
    c: *const LcCondition,
    label: u64,
    out_c: *mut *mut LcCondition,
) -> LcStatus {
    run(|| {
        let c = arg(c, "c")?;
        let slot = out(out_c)?;
        let q = extend_with_ordinal(&c.inner, OrdLabel(label)).map_err(forcing_failure)?;
        *slot = boxed_condition(q);
        Ok(())
    })
}

/// A common extension of two isomorphic, separated conditions.
///
/// # Safety
/// `p`, `q` must be live handles and `out_c` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_condition_amalgamate(
    p: *const LcCondition,
    q: *const LcCondition,
    out_c: *mut *mut LcCondition,
) -> LcStatus {
    run(|| {
        let (p, q) = (arg(p, "p")?, arg(q, "q")?);
        let slot = out(out_c)?;
        *slot = boxed_condition(amalgamate(&p.inner, &q.inner).map_err(forcing_failure)?);
        Ok(())
    })
}

/// The final condition of the seeded generic run meeting the index sets
/// `0..k` and every label in `labels[0..len]`.
///
/// # Safety
/// `labels` must be valid for `len` reads and `out_c` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lc_generic_run(
    k: u64,
    labels: *const u64,
    len: usize,
    seed: u64,
    out_c: *mut *mut LcCondition,
) -> LcStatus {
    run(|| {
        let slot = out(out_c)?;
        let labels: BTreeSet<OrdLabel> = if len == 0 {
            BTreeSet::new()
        } else {
            std::slice::from_raw_parts(arg(labels, "labels")?, len)
                .iter()
                .map(|&l| OrdLabel(l))
                .collect()
        };
        let out = generic_run(k, &labels, seed).map_err(forcing_failure)?;
        *slot = boxed_condition(out.condition);
        Ok(())
    })
}
