//! C ABI for `experttest`.
//!
//! Every fallible function returns an [`EtStatus`]; on failure a message is
//! available from [`et_last_error_message`] on the same thread. Datasets and
//! matchings are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use experttest::{
    adjusted_threshold, exact_binary_p, expert_test, expert_test_with_matching, greedy_match, type1_bound, Dataset,
    DistanceMetric, Error, LossSpec, Matching, TestConfig, TestResult,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtStatus {
    Ok = 0,
    NullPointer,
    InvalidDataset,
    InvalidConfig,
    IncompatibleLoss,
    NonBinaryData,
    TooManyPairs,
    InstanceTooLarge,
    EnumerationTooLarge,
    IndexOutOfRange,
    Internal,
}

impl From<&Error> for EtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDataset(_) => EtStatus::InvalidDataset,
            Error::IncompatibleLoss { .. } => EtStatus::IncompatibleLoss,
            Error::NonBinaryData { .. } => EtStatus::NonBinaryData,
            Error::TooManyPairs { .. } => EtStatus::TooManyPairs,
            Error::InstanceTooLarge { .. } => EtStatus::InstanceTooLarge,
            Error::EnumerationTooLarge { .. } => EtStatus::EnumerationTooLarge,
            Error::InvalidConfig(_) => EtStatus::InvalidConfig,
            _ => EtStatus::Internal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtLossKind {
    ZeroOne = 0,
    Squared,
    WeightedBinary,
}

/// Test configuration. `fp_cost` and `fn_cost` are read only for
/// `WeightedBinary`. A null `metric_weights` selects the Euclidean metric.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EtConfig {
    pub pairs: usize,
    pub resamples: usize,
    pub alpha: f64,
    pub loss: EtLossKind,
    pub fp_cost: f64,
    pub fn_cost: f64,
    pub seed: u64,
    pub metric_weights: *const f64,
    pub metric_weights_len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EtResult {
    pub tau: f64,
    pub effective_p: f64,
    pub rejected: bool,
    pub pairs: usize,
    pub resamples: usize,
    pub mismatch_count: usize,
    pub observed_loss: f64,
    /// When false the swap counts are zero and meaningless.
    pub has_swap_counts: bool,
    pub swaps_increase: usize,
    pub swaps_decrease: usize,
    pub swaps_neutral: usize,
}

impl From<TestResult> for EtResult {
    fn from(r: TestResult) -> Self {
        let swaps = r.binary_swap_counts.unwrap_or_default();
        Self {
            tau: r.tau,
            effective_p: r.effective_p,
            rejected: r.rejected,
            pairs: r.pairs,
            resamples: r.resamples,
            mismatch_count: r.mismatch_count,
            observed_loss: r.observed_loss,
            has_swap_counts: r.binary_swap_counts.is_some(),
            swaps_increase: swaps.increase,
            swaps_decrease: swaps.decrease,
            swaps_neutral: swaps.neutral,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EtType1Bound {
    pub tight: f64,
    pub union_bound: f64,
}

/// Opaque dataset handle.
pub struct EtDataset(Dataset);

/// Opaque matching handle.
pub struct EtMatching(Matching);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (EtStatus, String)>) -> EtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EtStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            EtStatus::Internal
        }
    }
}

fn lift(e: Error) -> (EtStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(what: &str) -> (EtStatus, String) {
    (EtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read<'a, T>(p: *const T, what: &str) -> Result<&'a T, (EtStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), (EtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn array<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (EtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn to_test_config(cfg: &EtConfig) -> Result<TestConfig, (EtStatus, String)> {
    let loss = match cfg.loss {
        EtLossKind::ZeroOne => LossSpec::ZeroOne,
        EtLossKind::Squared => LossSpec::SquaredError,
        EtLossKind::WeightedBinary => LossSpec::WeightedBinary {
            fp_cost: cfg.fp_cost,
            fn_cost: cfg.fn_cost,
        },
    };
    let metric = if cfg.metric_weights.is_null() {
        DistanceMetric::Euclidean
    } else {
        DistanceMetric::WeightedEuclidean {
            weights: array(cfg.metric_weights, cfg.metric_weights_len, "metric_weights")?.to_vec(),
        }
    };
    Ok(TestConfig::new(cfg.pairs, cfg.resamples, cfg.alpha, loss)
        .with_metric(metric)
        .with_seed(cfg.seed))
}

/// Message for the most recent failure on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn et_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Defaults: 1000 resamples, alpha 0.05, squared loss, Euclidean metric, seed 0.
#[no_mangle]
pub extern "C" fn et_config_default(pairs: usize) -> EtConfig {
    EtConfig {
        pairs,
        resamples: 1000,
        alpha: 0.05,
        loss: EtLossKind::Squared,
        fp_cost: 1.0,
        fn_cost: 1.0,
        seed: 0,
        metric_weights: ptr::null(),
        metric_weights_len: 0,
    }
}

/// Builds a dataset from `n` row-major feature rows of width `dim` and the
/// outcome and prediction columns of length `n`. The inputs are copied.
///
/// # Safety
/// `features` must point to `n * dim` values, `y` and `y_hat` to `n` values.
#[no_mangle]
pub unsafe extern "C" fn et_dataset_new(
    features: *const f64,
    n: usize,
    dim: usize,
    y: *const f64,
    y_hat: *const f64,
    out: *mut *mut EtDataset,
) -> EtStatus {
    guard(|| {
        let cells = n
            .checked_mul(dim)
            .ok_or_else(|| (EtStatus::InvalidDataset, "n * dim overflows".to_string()))?;
        let d = Dataset::from_columns(
            array(features, cells, "features")?,
            dim,
            array(y, n, "y")?,
            array(y_hat, n, "y_hat")?,
        )
        .map_err(lift)?;
        write(out, Box::into_raw(Box::new(EtDataset(d))), "out")
    })
}

/// # Safety
/// `d` must be null or a handle from [`et_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn et_dataset_free(d: *mut EtDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn et_dataset_len(d: *const EtDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn et_dataset_dim(d: *const EtDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.dim())
}

/// Greedy matching of `pairs` closest pairs under `cfg`'s metric.
///
/// # Safety
/// `d` and `cfg` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_greedy_match(
    d: *const EtDataset,
    cfg: *const EtConfig,
    out: *mut *mut EtMatching,
) -> EtStatus {
    guard(|| {
        let d = read(d, "dataset")?;
        let cfg = to_test_config(read(cfg, "config")?)?;
        let m = greedy_match(&d.0, cfg.pairs, &cfg.metric).map_err(lift)?;
        write(out, Box::into_raw(Box::new(EtMatching(m))), "out")
    })
}

/// # Safety
/// `m` must be null or a handle from [`et_greedy_match`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn et_matching_free(m: *mut EtMatching) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be null or a live matching handle.
#[no_mangle]
pub unsafe extern "C" fn et_matching_len(m: *const EtMatching) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `m` must be null or a live matching handle.
#[no_mangle]
pub unsafe extern "C" fn et_matching_mismatch_count(m: *const EtMatching) -> usize {
    m.as_ref().map_or(0, |m| m.0.mismatch_count())
}

/// # Safety
/// `m` must be null or a live matching handle.
#[no_mangle]
pub unsafe extern "C" fn et_matching_max_distance(m: *const EtMatching) -> f64 {
    m.as_ref().map_or(0.0, |m| m.0.max_distance())
}

/// Pair `index` in selection order.
///
/// # Safety
/// `m` must be a live matching handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_matching_pair(
    m: *const EtMatching,
    index: usize,
    i: *mut usize,
    j: *mut usize,
    distance: *mut f64,
) -> EtStatus {
    guard(|| {
        let m = &read(m, "matching")?.0;
        let (&(a, b), &dist) = m.pairs().iter().zip(m.distances()).nth(index).ok_or_else(|| {
            (
                EtStatus::IndexOutOfRange,
                format!("pair {index} of a {}-pair matching", m.len()),
            )
        })?;
        write(i, a, "i")?;
        write(j, b, "j")?;
        write(distance, dist, "distance")
    })
}

/// Matches, resamples and decides.
///
/// # Safety
/// `d` and `cfg` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_expert_test(d: *const EtDataset, cfg: *const EtConfig, out: *mut EtResult) -> EtStatus {
    guard(|| {
        let d = read(d, "dataset")?;
        let cfg = to_test_config(read(cfg, "config")?)?;
        let r = expert_test(&d.0, &cfg).map_err(lift)?;
        write(out, r.into(), "out")
    })
}

/// Runs the test on the first `cfg.pairs` pairs of an existing matching.
///
/// # Safety
/// `d`, `m` and `cfg` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_expert_test_with_matching(
    d: *const EtDataset,
    m: *const EtMatching,
    cfg: *const EtConfig,
    out: *mut EtResult,
) -> EtStatus {
    guard(|| {
        let d = read(d, "dataset")?;
        let m = read(m, "matching")?;
        let cfg = to_test_config(read(cfg, "config")?)?;
        let r = expert_test_with_matching(&d.0, &m.0, &cfg).map_err(lift)?;
        write(out, r.into(), "out")
    })
}

/// Limit of `τ` for binary data as the number of resamples grows.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_exact_binary_p(increase: usize, decrease: usize, out: *mut f64) -> EtStatus {
    guard(|| write(out, exact_binary_p(increase, decrease).map_err(lift)?, "out"))
}

/// Type-I error bounds; `resamples == 0` gives the limit of infinitely many resamples.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_type1_bound(
    alpha: f64,
    epsilon_star: f64,
    pairs: usize,
    resamples: usize,
    out: *mut EtType1Bound,
) -> EtStatus {
    guard(|| {
        let b = type1_bound(alpha, epsilon_star, pairs, (resamples > 0).then_some(resamples));
        write(
            out,
            EtType1Bound {
                tight: b.tight,
                union_bound: b.union,
            },
            "out",
        )
    })
}

/// Rejection threshold that keeps the type-I error at `alpha` under a smoothness constant.
///
/// # Safety
/// `m` must be a live matching handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn et_adjusted_threshold(
    alpha: f64,
    smoothness: f64,
    m: *const EtMatching,
    pairs: usize,
    resamples: usize,
    out: *mut f64,
) -> EtStatus {
    guard(|| {
        let m = read(m, "matching")?;
        write(
            out,
            adjusted_threshold(alpha, smoothness, &m.0, pairs, resamples),
            "out",
        )
    })
}
