//! C ABI over the `infreg` estimators.
//!
//! Objects cross the boundary as opaque handles created by the `*_generate`, `*_read_csv`, `*_split` and `*_train`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`InfregStatus`]; on failure the message is available from
//! [`infreg_last_error`] on the same thread until the next failing call.
//! Arrays are row-major `double` buffers owned by the caller.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use infreg::autodiff::Tensor;
use infreg::bounds::run_bounds_trials;
use infreg::dice::{train_dice, DiceConfig, DiceModel};
use infreg::metrics::{MetricReport, TreatedFlag};
use infreg::rng::{RngStream, Stream};
use infreg::sice::{train_sice, SiceConfig, SiceModel};
use infreg::synthgen::{
    gen_dynamic, gen_static, read_dynamic, read_static, DynamicDgpSpec, StaticDataset, StaticDgpSpec,
    TrajectoryDataset,
};
use infreg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfregStatus {
    Ok = 0,
    Config = 1,
    Usage = 2,
    Precondition = 3,
    Validation = 4,
    Schema = 5,
    Divergence = 6,
    Io = 7,
    NullPointer = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

impl From<&Error> for InfregStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => InfregStatus::Config,
            Error::Usage(_) => InfregStatus::Usage,
            Error::Precondition(_) => InfregStatus::Precondition,
            Error::Validation(_) => InfregStatus::Validation,
            Error::Schema { .. } => InfregStatus::Schema,
            Error::Divergence(_) => InfregStatus::Divergence,
            Error::Io { .. } => InfregStatus::Io,
        }
    }
}

/// Held-out evaluation metrics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InfregMetrics {
    pub rmse_y: f64,
    pub mae_y: f64,
    pub ate_error: f64,
    pub pehe: f64,
    pub auuc: f64,
    pub hsic_zt: f64,
    pub mi_probe: f64,
    pub kl_bottleneck: f64,
}

impl From<MetricReport> for InfregMetrics {
    fn from(m: MetricReport) -> Self {
        Self {
            rmse_y: m.rmse_y,
            mae_y: m.mae_y,
            ate_error: m.ate_error,
            pehe: m.pehe,
            auuc: m.auuc,
            hsic_zt: m.hsic_zt,
            mi_probe: m.mi_probe,
            kl_bottleneck: m.kl_bottleneck,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InfregBoundsResult {
    pub trials: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub adversarial_max_ratio: f64,
}

pub struct InfregStaticDataset(StaticDataset);
pub struct InfregTrajectoryDataset(TrajectoryDataset);
pub struct InfregSiceModel(SiceModel);
pub struct InfregDiceModel(DiceModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Utf8,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> InfregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InfregStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            InfregStatus::from(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            InfregStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8".to_string());
            InfregStatus::InvalidUtf8
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("internal panic: {msg}"));
            InfregStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: caller passes a handle obtained from this library or null.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: caller passes a writable location or null.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and nul-terminated by contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Fail::Utf8)
}

unsafe fn optional_text<'a>(p: *const c_char) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        // SAFETY: forwarded contract.
        unsafe { text(p, "string") }.map(Some)
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: caller guarantees `len` readable doubles.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: caller guarantees `len` writable doubles.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

/// Config from an optional JSON object; absent keys keep their defaults.
fn config<T: Default + serde::Serialize + serde::de::DeserializeOwned>(json: Option<&str>) -> Result<T, Fail> {
    let Some(json) = json else { return Ok(T::default()) };
    let mut base = serde_json::to_value(T::default()).expect("plain data serializes");
    let over: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::Config(format!("bad JSON configuration: {e}")))?;
    let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) else {
        return Err(Error::Config("configuration must be a JSON object".into()).into());
    };
    for (k, v) in o {
        match b.get_mut(k) {
            Some(slot) => *slot = v.clone(),
            None => return Err(Error::Config(format!("unknown configuration key {k}")).into()),
        }
    }
    serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()).into())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn infreg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn infreg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates the static benchmark. `spec_json` may be null for defaults.
/// `spec_json` is null or a nul-terminated string; `out_data` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_static_generate(
    spec_json: *const c_char,
    out_data: *mut *mut InfregStaticDataset,
) -> InfregStatus {
    guard(|| {
        let slot = unsafe { out(out_data, "out_data") }?;
        let spec: StaticDgpSpec = config(unsafe { optional_text(spec_json) }?)?;
        *slot = boxed(InfregStaticDataset(gen_static(&spec).1));
        Ok(())
    })
}

/// `path` is a nul-terminated string; `out_data` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_static_read_csv(
    path: *const c_char,
    out_data: *mut *mut InfregStaticDataset,
) -> InfregStatus {
    guard(|| {
        let slot = unsafe { out(out_data, "out_data") }?;
        let path = unsafe { text(path, "path") }?;
        *slot = boxed(InfregStaticDataset(read_static(path.as_ref())?));
        Ok(())
    })
}

/// Row count and widths of `x` and `t`; any output pointer may be null.
/// `data` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn infreg_static_shape(
    data: *const InfregStaticDataset,
    n: *mut usize,
    dx: *mut usize,
    dt: *mut usize,
) -> InfregStatus {
    guard(|| {
        let d = &unsafe { borrow(data, "data") }?.0;
        for (p, v) in [(n, d.len()), (dx, d.dx()), (dt, d.dt())] {
            if let Some(p) = unsafe { p.as_mut() } {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Splits into leading `train_fraction` rows and the rest.
/// `data` is a live handle; both output pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_static_split(
    data: *const InfregStaticDataset,
    train_fraction: f64,
    out_train: *mut *mut InfregStaticDataset,
    out_test: *mut *mut InfregStaticDataset,
) -> InfregStatus {
    guard(|| {
        let d = &unsafe { borrow(data, "data") }?.0;
        let (tr, te) = (unsafe { out(out_train, "out_train") }?, unsafe { out(out_test, "out_test") }?);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!("train fraction must lie in (0, 1), got {train_fraction}")).into());
        }
        let (a, b) = d.split(train_fraction);
        *tr = boxed(InfregStaticDataset(a));
        *te = boxed(InfregStaticDataset(b));
        Ok(())
    })
}

/// Copies the true effects into `out` of length `len` (must equal the row count).
/// `data` is a live handle; `out` holds `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn infreg_static_true_ite(
    data: *const InfregStaticDataset,
    out_buf: *mut f64,
    len: usize,
) -> InfregStatus {
    guard(|| {
        let d = &unsafe { borrow(data, "data") }?.0;
        if len != d.len() {
            return Err(Error::Usage(format!("buffer holds {len} values, dataset has {}", d.len())).into());
        }
        unsafe { slice_mut(out_buf, len, "out") }?.copy_from_slice(&d.ite_true);
        Ok(())
    })
}

/// `data` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn infreg_static_free(data: *mut InfregStaticDataset) {
    if !data.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(data) });
    }
}

/// Generates trajectories. `spec_json` may be null for defaults.
/// `spec_json` is null or nul-terminated; `out_data` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_dynamic_generate(
    spec_json: *const c_char,
    out_data: *mut *mut InfregTrajectoryDataset,
) -> InfregStatus {
    guard(|| {
        let slot = unsafe { out(out_data, "out_data") }?;
        let spec: DynamicDgpSpec = config(unsafe { optional_text(spec_json) }?)?;
        *slot = boxed(InfregTrajectoryDataset(gen_dynamic(&spec).1));
        Ok(())
    })
}

/// `path` is nul-terminated; `out_data` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_dynamic_read_csv(
    path: *const c_char,
    out_data: *mut *mut InfregTrajectoryDataset,
) -> InfregStatus {
    guard(|| {
        let slot = unsafe { out(out_data, "out_data") }?;
        let path = unsafe { text(path, "path") }?;
        *slot = boxed(InfregTrajectoryDataset(read_dynamic(path.as_ref())?));
        Ok(())
    })
}

/// `data` is a live handle; both output pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_dynamic_split(
    data: *const InfregTrajectoryDataset,
    train_fraction: f64,
    out_train: *mut *mut InfregTrajectoryDataset,
    out_test: *mut *mut InfregTrajectoryDataset,
) -> InfregStatus {
    guard(|| {
        let d = &unsafe { borrow(data, "data") }?.0;
        let (tr, te) = (unsafe { out(out_train, "out_train") }?, unsafe { out(out_test, "out_test") }?);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!("train fraction must lie in (0, 1), got {train_fraction}")).into());
        }
        let (a, b) = d.split(train_fraction);
        *tr = boxed(InfregTrajectoryDataset(a));
        *te = boxed(InfregTrajectoryDataset(b));
        Ok(())
    })
}

/// `data` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infreg_dynamic_free(data: *mut InfregTrajectoryDataset) {
    if !data.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(data) });
    }
}

/// Trains the static estimator. `config_json` may be null for defaults.
/// `train` is a live handle; `config_json` is null or nul-terminated;
/// `out_model` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_sice_train(
    train: *const InfregStaticDataset,
    config_json: *const c_char,
    out_model: *mut *mut InfregSiceModel,
) -> InfregStatus {
    guard(|| {
        let d = &unsafe { borrow(train, "train") }?.0;
        let slot = unsafe { out(out_model, "out_model") }?;
        let cfg: SiceConfig = config(unsafe { optional_text(config_json) }?)?;
        *slot = boxed(InfregSiceModel(train_sice(d, &cfg)?));
        Ok(())
    })
}

/// Effect of `t` against `t_alt` for each of `n` rows, averaged over `samples`
/// shared draws of the representation. `x` is `n x dx`, `t` and `t_alt` are
/// `n x dt`, `out` holds `n` values.
/// All buffers hold the stated number of doubles; `model` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn infreg_sice_predict_ite(
    model: *const InfregSiceModel,
    x: *const f64,
    t: *const f64,
    t_alt: *const f64,
    n: usize,
    samples: usize,
    seed: u64,
    out_buf: *mut f64,
) -> InfregStatus {
    guard(|| {
        let m = &unsafe { borrow(model, "model") }?.0;
        let (dx, dt) = (m.heads.input_dim, m.heads.treatment_dim);
        let x = Tensor::matrix(n, dx, unsafe { slice(x, n * dx, "x") }?.to_vec());
        let t = Tensor::matrix(n, dt, unsafe { slice(t, n * dt, "t") }?.to_vec());
        let alt = Tensor::matrix(n, dt, unsafe { slice(t_alt, n * dt, "t_alt") }?.to_vec());
        let dst = unsafe { slice_mut(out_buf, n, "out") }?;
        let mut rng = RngStream::new(seed, Stream::Noise);
        dst.copy_from_slice(&m.predict_ite(&x, &t, &alt, samples, &mut rng)?);
        Ok(())
    })
}

/// Handles are live; `out_metrics` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_sice_evaluate(
    model: *const InfregSiceModel,
    train: *const InfregStaticDataset,
    test: *const InfregStaticDataset,
    out_metrics: *mut InfregMetrics,
) -> InfregStatus {
    guard(|| {
        let m = &unsafe { borrow(model, "model") }?.0;
        let (tr, te) = (&unsafe { borrow(train, "train") }?.0, &unsafe { borrow(test, "test") }?.0);
        let slot = unsafe { out(out_metrics, "out_metrics") }?;
        *slot = m.evaluate(tr, te, TreatedFlag::AnyActive)?.into();
        Ok(())
    })
}

/// Number of completed epochs; the per-epoch totals go to `out` when its
/// `len` is at least that count.
/// `model` is live; `out` is null or holds `len` doubles; `epochs` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_sice_history(
    model: *const InfregSiceModel,
    out_buf: *mut f64,
    len: usize,
    epochs: *mut usize,
) -> InfregStatus {
    guard(|| {
        let h = &unsafe { borrow(model, "model") }?.0.history;
        *unsafe { out(epochs, "epochs") }? = h.len();
        if !out_buf.is_null() && len >= h.len() {
            let dst = unsafe { slice_mut(out_buf, h.len(), "out") }?;
            for (d, r) in dst.iter_mut().zip(h) {
                *d = r.total;
            }
        }
        Ok(())
    })
}

/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infreg_sice_free(model: *mut InfregSiceModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Trains the sequential estimator. `config_json` may be null for defaults.
/// `train` is live; `config_json` is null or nul-terminated; `out_model` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_dice_train(
    train: *const InfregTrajectoryDataset,
    config_json: *const c_char,
    out_model: *mut *mut InfregDiceModel,
) -> InfregStatus {
    guard(|| {
        let d = &unsafe { borrow(train, "train") }?.0;
        let slot = unsafe { out(out_model, "out_model") }?;
        let cfg: DiceConfig = config(unsafe { optional_text(config_json) }?)?;
        *slot = boxed(InfregDiceModel(train_dice(d, &cfg)?));
        Ok(())
    })
}

/// Handles are live; `out_metrics` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_dice_evaluate(
    model: *const InfregDiceModel,
    train: *const InfregTrajectoryDataset,
    test: *const InfregTrajectoryDataset,
    out_metrics: *mut InfregMetrics,
) -> InfregStatus {
    guard(|| {
        let m = &unsafe { borrow(model, "model") }?.0;
        let (tr, te) = (&unsafe { borrow(train, "train") }?.0, &unsafe { borrow(test, "test") }?.0);
        let slot = unsafe { out(out_metrics, "out_metrics") }?;
        *slot = m.evaluate(tr, te, TreatedFlag::AnyActive)?.into();
        Ok(())
    })
}

/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infreg_dice_free(model: *mut InfregDiceModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Randomized check of the finite-table inequalities.
/// `out_result` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_bounds_run(trials: usize, seed: u64, out_result: *mut InfregBoundsResult) -> InfregStatus {
    guard(|| {
        let slot = unsafe { out(out_result, "out_result") }?;
        if trials == 0 {
            *slot = InfregBoundsResult { trials: 0, violations: 0, worst_slack: f64::INFINITY, adversarial_max_ratio: 0.0 };
            return Ok(());
        }
        let s = run_bounds_trials(trials, seed)?;
        *slot = InfregBoundsResult {
            trials,
            violations: s.total_violations(),
            worst_slack: s.worst_slack(),
            adversarial_max_ratio: s.adversarial_max_ratio,
        };
        Ok(())
    })
}

/// Root mean squared difference between two effect vectors of length `n`.
/// Both buffers hold `n` doubles; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_pehe(
    ite_hat: *const f64,
    ite_true: *const f64,
    n: usize,
    out_value: *mut f64,
) -> InfregStatus {
    guard(|| {
        let a = unsafe { slice(ite_hat, n, "ite_hat") }?;
        let b = unsafe { slice(ite_true, n, "ite_true") }?;
        *unsafe { out(out_value, "out_value") }? = infreg::metrics::pehe(a, b)?;
        Ok(())
    })
}

/// Biased HSIC with median-heuristic Gaussian kernels; `z` is `n x dz`, `t` is `n x dt`.
/// Buffers hold the stated number of doubles; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn infreg_hsic(
    z: *const f64,
    dz: usize,
    t: *const f64,
    dt: usize,
    n: usize,
    out_value: *mut f64,
) -> InfregStatus {
    guard(|| {
        let z = Tensor::matrix(n, dz, unsafe { slice(z, n * dz, "z") }?.to_vec());
        let t = Tensor::matrix(n, dt, unsafe { slice(t, n * dt, "t") }?.to_vec());
        *unsafe { out(out_value, "out_value") }? = infreg::metrics::hsic(&z, &t)?;
        Ok(())
    })
}
