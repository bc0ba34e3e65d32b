//! C ABI over `gwr-core`.
//!
//! Every function returns a [`GwrStatus`]; results come back through out
//! pointers. Models are opaque [`GwrModel`] handles created by
//! `gwr_model_new_*` or `gwr_model_load` and released with `gwr_model_free`.
//! On failure, `gwr_last_error_message` describes the most recent error raised
//! on the calling thread. Panics never cross the boundary; they are reported
//! as `GWR_STATUS_PANIC`.
//!
//! A handle must not be used from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gwr_core::network::ContextState;
use gwr_core::{snapshot, ContextRule, GwrError, HyperParams, Model, Network, NeuronId};

/// Largest temporal depth representable in [`GwrHyperParams`].
pub const GWR_MAX_DEPTH: usize = 7;

/// Length of the `alpha` array, `GWR_MAX_DEPTH + 1`.
pub const GWR_ALPHA_LEN: usize = 8;

const _: () = assert!(GWR_ALPHA_LEN == GWR_MAX_DEPTH + 1);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    UnknownNeuron = 4,
    InvalidState = 5,
    Io = 6,
    Parse = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Model hyperparameters. `alpha` holds `depth + 1` weights; the rest are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GwrHyperParams {
    pub insertion_threshold: f64,
    pub habituation_threshold: f64,
    pub tau_b: f64,
    pub tau_n: f64,
    pub kappa: f64,
    pub eps_b: f64,
    pub eps_n: f64,
    pub beta: f64,
    pub depth: u32,
    pub alpha: [f64; GWR_ALPHA_LEN],
    pub n_max: usize,
    /// Use the literal context rule instead of the recursive one.
    pub literal_context: bool,
}

impl From<&HyperParams> for GwrHyperParams {
    fn from(h: &HyperParams) -> Self {
        let mut alpha = [0.0; GWR_ALPHA_LEN];
        alpha[..h.alpha.len()].copy_from_slice(&h.alpha);
        GwrHyperParams {
            insertion_threshold: h.insertion_threshold,
            habituation_threshold: h.habituation_threshold,
            tau_b: h.tau_b,
            tau_n: h.tau_n,
            kappa: h.kappa,
            eps_b: h.eps_b,
            eps_n: h.eps_n,
            beta: h.beta,
            depth: h.depth() as u32,
            alpha,
            n_max: h.n_max,
            literal_context: h.context_rule == ContextRule::Literal,
        }
    }
}

impl TryFrom<&GwrHyperParams> for HyperParams {
    type Error = Failure;

    fn try_from(h: &GwrHyperParams) -> Result<Self, Failure> {
        let depth = h.depth as usize;
        if depth > GWR_MAX_DEPTH {
            return Err(Failure::new(
                GwrStatus::InvalidArgument,
                format!("depth {depth} exceeds {GWR_MAX_DEPTH}"),
            ));
        }
        let hyper = HyperParams {
            insertion_threshold: h.insertion_threshold,
            habituation_threshold: h.habituation_threshold,
            tau_b: h.tau_b,
            tau_n: h.tau_n,
            kappa: h.kappa,
            eps_b: h.eps_b,
            eps_n: h.eps_n,
            alpha: h.alpha[..=depth].to_vec(),
            beta: h.beta,
            n_max: h.n_max,
            context_rule: if h.literal_context {
                ContextRule::Literal
            } else {
                ContextRule::Recursive
            },
        };
        hyper.validate()?;
        Ok(hyper)
    }
}

/// Result of one training step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GwrStepOutcome {
    pub bmu: u32,
    pub second: u32,
    pub distance: f64,
    pub activity: f64,
    pub inserted: bool,
    /// Id of the new neuron when `inserted` is set.
    pub inserted_id: u32,
    pub neuron_count: usize,
}

/// Opaque model handle.
pub struct GwrModel {
    model: Model,
    /// Context used by `gwr_model_classify`, separate from the training context.
    eval: ContextState,
}

impl GwrModel {
    fn boxed(model: Model) -> *mut GwrModel {
        let eval = model.eval_context();
        Box::into_raw(Box::new(GwrModel { model, eval }))
    }
}

#[doc(hidden)]
pub struct Failure {
    status: GwrStatus,
    message: String,
}

impl Failure {
    fn new(status: GwrStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Failure::new(GwrStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<GwrError> for Failure {
    fn from(e: GwrError) -> Self {
        let status = match &e {
            GwrError::DimensionMismatch { .. } => GwrStatus::DimensionMismatch,
            GwrError::UnknownNeuron(_) => GwrStatus::UnknownNeuron,
            GwrError::InvalidState(_) => GwrStatus::InvalidState,
            GwrError::Contract(_) | GwrError::InvalidConfig(_) => GwrStatus::InvalidArgument,
            GwrError::Parse { .. } | GwrError::Snapshot(_) => GwrStatus::Parse,
            GwrError::Io(_) => GwrStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GwrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GwrStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {msg}"));
            GwrStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn handle<'a>(model: *mut GwrModel) -> Result<&'a mut GwrModel, Failure> {
    model.as_mut().ok_or_else(|| Failure::null("model"))
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::new(GwrStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last error raised on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gwr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `out` with the default hyperparameters.
///
/// # Safety
/// `out` must be null or point to writable memory for one `GwrHyperParams`.
#[no_mangle]
pub unsafe extern "C" fn gwr_hyper_default(out: *mut GwrHyperParams) -> GwrStatus {
    guard(|| write_out(out, GwrHyperParams::from(&HyperParams::default()), "out"))
}

/// Creates a growing network seeded with two input vectors of length `dim`.
///
/// # Safety
/// `hyper` must point to a valid struct, `first` and `second` to `dim`
/// readable doubles, and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_new_growing(
    hyper: *const GwrHyperParams,
    dim: usize,
    first: *const f64,
    second: *const f64,
    out: *mut *mut GwrModel,
) -> GwrStatus {
    guard(|| {
        let hyper = HyperParams::try_from(hyper.as_ref().ok_or_else(|| Failure::null("hyper"))?)?;
        let first = slice(first, dim, "first")?;
        let second = slice(second, dim, "second")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let net = Network::init_growing(dim, hyper, first, second)?;
        out.write(GwrModel::boxed(Model::new(net)));
        Ok(())
    })
}

/// Creates a static network of `n_max` neurons drawn uniformly within
/// `[low, high]` per dimension.
///
/// # Safety
/// As for `gwr_model_new_growing`, with `low` and `high` of length `dim`.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_new_static(
    hyper: *const GwrHyperParams,
    dim: usize,
    low: *const f64,
    high: *const f64,
    seed: u64,
    out: *mut *mut GwrModel,
) -> GwrStatus {
    guard(|| {
        let hyper = HyperParams::try_from(hyper.as_ref().ok_or_else(|| Failure::null("hyper"))?)?;
        let low = slice(low, dim, "low")?;
        let high = slice(high, dim, "high")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let net = Network::init_static(dim, hyper, low, high, seed)?;
        out.write(GwrModel::boxed(Model::new(net)));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_free(model: *mut GwrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Presents one frame. `label` may be null for unlabeled input; `out` may be null.
///
/// # Safety
/// `model` must be a live handle, `input` must hold `len` doubles, `label`
/// must be null or a NUL-terminated string, `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_step(
    model: *mut GwrModel,
    input: *const f64,
    len: usize,
    label: *const c_char,
    out: *mut GwrStepOutcome,
) -> GwrStatus {
    guard(|| {
        let h = handle(model)?;
        let input = slice(input, len, "input")?;
        let label = if label.is_null() { None } else { Some(string(label, "label")?) };
        let o = h.model.step(input, label)?;
        if let Some(out) = out.as_mut() {
            *out = GwrStepOutcome {
                bmu: o.bmu.0,
                second: o.second.0,
                distance: o.distance,
                activity: o.activity,
                inserted: o.inserted.is_some(),
                inserted_id: o.inserted.map_or(0, |n| n.0),
                neuron_count: h.model.network.len(),
            };
        }
        Ok(())
    })
}

/// Clears the training context; call between sequences.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_reset_context(model: *mut GwrModel) -> GwrStatus {
    guard(|| {
        handle(model)?.model.network.reset_context();
        Ok(())
    })
}

/// Clears the classification context; call between test sequences.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_reset_eval_context(model: *mut GwrModel) -> GwrStatus {
    guard(|| {
        let h = handle(model)?;
        h.eval = h.model.eval_context();
        Ok(())
    })
}

/// Classifies one frame without changing the model.
///
/// The predicted label is copied NUL-terminated into `buf` (capacity
/// `buf_len`); `*found` is false and `buf` holds an empty string when the
/// winner has no label. `*needed` receives the buffer size the label
/// requires; when it exceeds `buf_len` the call fails with
/// `GWR_STATUS_BUFFER_TOO_SMALL` and the classification context is left
/// unchanged, so the call can be retried.
///
/// # Safety
/// `model` must be a live handle, `input` must hold `len` doubles, `buf`
/// must have `buf_len` writable bytes, `found` and `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_classify(
    model: *mut GwrModel,
    input: *const f64,
    len: usize,
    buf: *mut c_char,
    buf_len: usize,
    found: *mut bool,
    needed: *mut usize,
) -> GwrStatus {
    guard(|| {
        let h = handle(model)?;
        let input = slice(input, len, "input")?;
        if buf.is_null() && buf_len > 0 {
            return Err(Failure::null("buf"));
        }
        if found.is_null() || needed.is_null() {
            return Err(Failure::null(if found.is_null() { "found" } else { "needed" }));
        }
        let mut ctx = h.eval.clone();
        let label = h.model.classify(&mut ctx, input)?;
        let bytes = label.unwrap_or("").as_bytes();
        needed.write(bytes.len() + 1);
        if bytes.len() + 1 > buf_len {
            return Err(Failure::new(
                GwrStatus::BufferTooSmall,
                format!("label needs {} bytes, buffer has {buf_len}", bytes.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        buf.add(bytes.len()).write(0);
        found.write(label.is_some());
        h.eval = ctx;
        Ok(())
    })
}

/// Runs one replay episode; `steps` (nullable) receives the number of
/// replayed patterns.
///
/// # Safety
/// `model` must be a live handle and `steps` null or writable.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_replay(model: *mut GwrModel, steps: *mut usize) -> GwrStatus {
    guard(|| {
        let report = handle(model)?.model.replay()?;
        if let Some(s) = steps.as_mut() {
            *s = report.steps;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_neuron_count(model: *const GwrModel, out: *mut usize) -> GwrStatus {
    guard(|| {
        let h = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        write_out(out, h.model.network.len(), "out")
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_dim(model: *const GwrModel, out: *mut usize) -> GwrStatus {
    guard(|| {
        let h = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        write_out(out, h.model.network.dim(), "out")
    })
}

/// Copies the weight vector of neuron `id` into `out` (capacity `len`, which
/// must equal the input dimension).
///
/// # Safety
/// `model` must be a live handle and `out` must have `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_weight(model: *const GwrModel, id: u32, out: *mut f64, len: usize) -> GwrStatus {
    guard(|| {
        let h = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        let neuron = h.model.network.neuron(NeuronId(id))?;
        if len != neuron.weight.len() {
            return Err(GwrError::DimensionMismatch {
                expected: neuron.weight.len(),
                found: len,
            }
            .into());
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        ptr::copy_nonoverlapping(neuron.weight.as_ptr(), out, len);
        Ok(())
    })
}

/// Writes a JSON snapshot of the model to `path`.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_save(model: *const GwrModel, path: *const c_char) -> GwrStatus {
    guard(|| {
        let h = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        let path = PathBuf::from(string(path, "path")?);
        snapshot::save(&h.model, &path)?;
        Ok(())
    })
}

/// Loads a snapshot written by `gwr_model_save` or the command line.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn gwr_model_load(path: *const c_char, out: *mut *mut GwrModel) -> GwrStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let model = snapshot::load(&path)?;
        out.write(GwrModel::boxed(model));
        Ok(())
    })
}
