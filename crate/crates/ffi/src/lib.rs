//! C ABI over `randclosed`.
//!
//! Every fallible function returns an [`RcStatus`] and writes its result
//! through an out-pointer. On failure a description is available from
//! [`rc_last_error_message`] on the same thread. Trees are opaque handles
//! released with [`rc_tree_free`]; strings returned by the library are
//! released with [`rc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use randclosed::dimension::dim_lower_bound;
use randclosed::galton_watson::survival_limit;
use randclosed::intersection::{
    degree_of_intersectability, f_n, f_n_inverse, intersect_many, nfold_emptiness_prob, pair_emptiness_prob,
    pair_nonempty_possible, threshold,
};
use randclosed::montecarlo::estimate_survival;
use randclosed::tree_codec::{decode_quad, decode_trit, encode_trit};
use randclosed::{Error, OffspringLaw, PrefixTree, QuadCode, TritCode};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// A parameter is outside its domain.
    Domain = 3,
    /// A code contains a symbol outside its alphabet.
    InvalidSymbol = 4,
    /// A code ran out before the requested depth.
    CodeTooShort = 5,
    /// A tree has a dead end above its depth.
    DeadEnd = 6,
    /// A level exceeded the node budget.
    BudgetExceeded = 7,
    /// The process died out before the horizon.
    Extinct = 8,
    /// Too few survivors for a conditional estimate.
    InsufficientSurvivors = 9,
    /// Any other library error.
    Failed = 10,
    /// A panic was caught at the boundary.
    Panic = 11,
}

/// Decoded finite-depth prefix tree.
pub struct RcTree(PrefixTree);

/// Proportion estimate with its 99% interval.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RcEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact: f64,
    pub tolerance: f64,
    pub successes: u64,
    pub trials: u64,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(error: &Error) -> RcStatus {
    match error {
        Error::InvalidSymbol { .. } => RcStatus::InvalidSymbol,
        Error::CodeTooShort { .. } => RcStatus::CodeTooShort,
        Error::DeadEndPresent { .. } => RcStatus::DeadEnd,
        Error::BudgetExceeded { .. } => RcStatus::BudgetExceeded,
        Error::Extinct { .. } => RcStatus::Extinct,
        Error::InsufficientSurvivors { .. } => RcStatus::InsufficientSurvivors,
        Error::Domain(_)
        | Error::InvalidParams(_)
        | Error::InvalidSurvival { .. }
        | Error::DegenerateLaw
        | Error::SubcriticalLaw { .. }
        | Error::DepthTooLarge(_)
        | Error::LevelOutOfRange { .. }
        | Error::InputTooShort { .. } => RcStatus::Domain,
        _ => RcStatus::Failed,
    }
}

struct Failure(RcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            RcStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic in randclosed".into());
            RcStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(RcStatus::NullPointer, format!("{name} is null"))
}

unsafe fn write<T>(out: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(RcStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn rc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by the library.
///
/// # Safety
/// `s` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `1 - 2^(-1/n)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_threshold(n: u32, out: *mut f64) -> RcStatus {
    guard(|| write(out, "out", threshold(n)?))
}

/// `1 - (1 - p)^n`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_f_n(p: f64, n: u32, out: *mut f64) -> RcStatus {
    guard(|| write(out, "out", f_n(p, n)?))
}

/// `1 - (1 - p)^(1/n)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_f_n_inverse(p: f64, n: u32, out: *mut f64) -> RcStatus {
    guard(|| write(out, "out", f_n_inverse(p, n)?))
}

/// Whether sets with parameters `<p,q>` and `<r,s>` can intersect.
#[no_mangle]
pub extern "C" fn rc_pair_nonempty_possible(p: f64, q: f64, r: f64, s: f64) -> bool {
    pair_nonempty_possible(p, q, r, s)
}

/// Probability that the intersection of independent `<p,q>` and `<r,s>`
/// random closed sets is empty.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_pair_emptiness(p: f64, q: f64, r: f64, s: f64, out: *mut f64) -> RcStatus {
    guard(|| write(out, "out", pair_emptiness_prob(p, q, r, s)?))
}

/// Probability that `n` independent `<p,p>` random closed sets have empty
/// intersection.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_nfold_emptiness(p: f64, n: u32, out: *mut f64) -> RcStatus {
    guard(|| write(out, "out", nfold_emptiness_prob(p, n)?))
}

/// Degree of intersectability of the symmetric family at `p` in `(0, 1/2]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_degree(p: f64, out: *mut u64) -> RcStatus {
    guard(|| write(out, "out", degree_of_intersectability(p)?.degree))
}

/// `-log2(1 - p)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_dim_lower_bound(p: f64, out: *mut f64) -> RcStatus {
    guard(|| write(out, "out", dim_lower_bound(p)?))
}

unsafe fn read_law(law: *const f64) -> Result<OffspringLaw, Failure> {
    if law.is_null() {
        return Err(null("law"));
    }
    let probs = [*law, *law.add(1), *law.add(2), *law.add(3)];
    Ok(OffspringLaw::from_array(probs)?)
}

/// Survival probability of the branching process with offspring law
/// `law[0..4] = (a0, a1, a2, a3)`.
///
/// # Safety
/// `law` must point to four readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_survival_limit(law: *const f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let law = read_law(law)?;
        write(out, "out", survival_limit(law)?)
    })
}

/// Decode a trit code to depth `depth`. `consumed` may be null.
///
/// # Safety
/// `code` must be a nul-terminated string; `tree` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_decode_trit(
    code: *const c_char,
    depth: usize,
    tree: *mut *mut RcTree,
    consumed: *mut usize,
) -> RcStatus {
    guard(|| {
        let code: TritCode = read_str(code, "code")?.parse()?;
        let outcome = decode_trit(&code, depth)?;
        if !consumed.is_null() {
            consumed.write(outcome.consumed);
        }
        write(tree, "tree", Box::into_raw(Box::new(RcTree(outcome.tree))))
    })
}

/// Decode a quad code to depth `depth`. `extinct` may be null.
///
/// # Safety
/// `code` must be a nul-terminated string; `tree` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_decode_quad(
    code: *const c_char,
    depth: usize,
    tree: *mut *mut RcTree,
    extinct: *mut bool,
) -> RcStatus {
    guard(|| {
        let code: QuadCode = read_str(code, "code")?.parse()?;
        let outcome = decode_quad(&code, depth)?;
        if !extinct.is_null() {
            extinct.write(outcome.extinct);
        }
        write(tree, "tree", Box::into_raw(Box::new(RcTree(outcome.tree))))
    })
}

/// Release a tree.
///
/// # Safety
/// `tree` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_tree_free(tree: *mut RcTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Depth of a tree, or 0 for null.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_tree_depth(tree: *const RcTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.depth())
}

/// Number of nodes of a tree, or 0 for null.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_tree_node_count(tree: *const RcTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.node_count())
}

/// Whether `node` (a string over {0,1}) is in the tree.
///
/// # Safety
/// `tree` must be null or a live handle; `node` null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn rc_tree_contains(tree: *const RcTree, node: *const c_char) -> bool {
    match (tree.as_ref(), read_str(node, "node")) {
        (Some(t), Ok(s)) => t.0.contains(s),
        _ => false,
    }
}

/// Tree as JSON `{"depth": d, "nodes": [...]}`. Free with [`rc_string_free`].
///
/// # Safety
/// `tree` must be a live handle; `json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_tree_to_json(tree: *const RcTree, json: *mut *mut c_char) -> RcStatus {
    guard(|| {
        let tree = tree.as_ref().ok_or_else(|| null("tree"))?;
        let text = serde_json::to_string(&tree.0).map_err(|e| Failure(RcStatus::Failed, e.to_string()))?;
        write(json, "json", into_c_string(text))
    })
}

/// Trit code of a dead-end-free tree. Free with [`rc_string_free`].
///
/// # Safety
/// `tree` must be a live handle; `code` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_encode_trit(tree: *const RcTree, code: *mut *mut c_char) -> RcStatus {
    guard(|| {
        let tree = tree.as_ref().ok_or_else(|| null("tree"))?;
        write(code, "code", into_c_string(encode_trit(&tree.0)?.to_string()))
    })
}

/// Quad code of the intersection of `count >= 2` trit-coded trees cut at
/// `depth`. `empty` may be null. Free the code with [`rc_string_free`].
///
/// # Safety
/// `codes` must point to `count` nul-terminated strings; `code` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_intersect_codes(
    codes: *const *const c_char,
    count: usize,
    depth: usize,
    code: *mut *mut c_char,
    empty: *mut bool,
) -> RcStatus {
    guard(|| {
        if codes.is_null() {
            return Err(null("codes"));
        }
        let parsed = (0..count)
            .map(|i| Ok(read_str(*codes.add(i), "codes[i]")?.parse::<TritCode>()?))
            .collect::<Result<Vec<_>, Failure>>()?;
        let result = intersect_many(&parsed, depth)?;
        if !empty.is_null() {
            empty.write(decode_quad(&result, depth)?.extinct);
        }
        write(code, "code", into_c_string(result.to_string()))
    })
}

/// Monte Carlo estimate of survival to `depth` for offspring law
/// `law[0..4]`, checked against the recurrence.
///
/// # Safety
/// `law` must point to four readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rc_estimate_survival(
    law: *const f64,
    depth: usize,
    trials: u64,
    seed: u64,
    out: *mut RcEstimate,
) -> RcStatus {
    guard(|| {
        let law = read_law(law)?;
        if trials == 0 {
            return Err(Failure(RcStatus::Domain, "trials must be at least 1".into()));
        }
        let rec = estimate_survival(law, depth, trials, seed)?;
        write(
            out,
            "out",
            RcEstimate {
                value: rec.value,
                ci_low: rec.ci_low,
                ci_high: rec.ci_high,
                exact: rec.exact,
                tolerance: rec.tolerance,
                successes: rec.successes,
                trials: rec.trials,
                passed: rec.verdict.passed(),
            },
        )
    })
}
