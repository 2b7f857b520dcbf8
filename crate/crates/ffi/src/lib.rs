//! C ABI over the `lucelab` engines.
//!
//! Every entry point returns a [`LucelabStatus`]; on failure the message is
//! available from [`lucelab_last_error_message`] on the same thread. Models are
//! opaque handles created by [`lucelab_model_new`] and released with
//! [`lucelab_model_free`]. Option indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lucelab::{
    luce_choice_probability, run_experiment, select_presentation, DirichletLucePosterior,
    DirichletPosterior, Error, Learner, LuceLearner, OptionId, PolicyKind, PreferenceModel,
    PreferenceVector, Presentation, PresentationConstraint, ScenarioConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LucelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownOption = 3,
    OptionNotPresented = 4,
    InfeasibleConstraint = 5,
    SamplerDivergence = 6,
    InvalidConfig = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LucelabModelKind {
    DirichletLuce = 0,
    DirichletMultinomial = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LucelabPolicy {
    Thompson = 0,
    Greedy = 1,
}

/// Opaque posterior handle with its own random stream.
pub struct LucelabModel {
    learner: Learner,
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(LucelabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root_cause() {
            Error::UnknownOption { .. } => LucelabStatus::UnknownOption,
            Error::OptionNotPresented { .. } => LucelabStatus::OptionNotPresented,
            Error::InfeasibleConstraint(_) => LucelabStatus::InfeasibleConstraint,
            Error::SamplerDivergence { .. } => LucelabStatus::SamplerDivergence,
            Error::InvalidConfig(_) => LucelabStatus::InvalidConfig,
            _ => LucelabStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LucelabStatus::NullPointer, format!("{what} is null"))
}

fn guard<F>(body: F) -> LucelabStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            clear_last_error();
            LucelabStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {message}"));
            LucelabStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a, T>(data: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn model_mut<'a>(model: *mut LucelabModel) -> Result<&'a mut LucelabModel, Failure> {
    model.as_mut().ok_or_else(|| null("model"))
}

fn write_vector(values: &[f64], out: &mut [f64]) -> Result<(), Failure> {
    if out.len() < values.len() {
        return Err(Failure(
            LucelabStatus::BufferTooSmall,
            format!("output holds {} values, need {}", out.len(), values.len()),
        ));
    }
    out[..values.len()].copy_from_slice(values);
    Ok(())
}

/// Message describing the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn lucelab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a model with prior `Dirichlet(alpha[0..k])`, seeded with `seed`.
///
/// # Safety
/// `alpha` must point to `k` readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_new(
    kind: LucelabModelKind,
    alpha: *const f64,
    k: usize,
    seed: u64,
    out: *mut *mut LucelabModel,
) -> LucelabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let alpha = slice(alpha, k, "alpha")?.to_vec();
        let learner = match kind {
            LucelabModelKind::DirichletLuce => {
                Learner::Luce(LuceLearner::new(DirichletLucePosterior::new(alpha)?))
            }
            LucelabModelKind::DirichletMultinomial => {
                Learner::Multinomial(DirichletPosterior::new(alpha)?)
            }
        };
        let model = LucelabModel {
            learner,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        *out = Box::into_raw(Box::new(model));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must come from [`lucelab_model_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_free(model: *mut LucelabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of options the model covers, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_k(model: *const LucelabModel) -> usize {
    model.as_ref().map_or(0, |m| m.learner.k())
}

/// Records that `chosen` was picked from the options in `presented[0..len]`.
///
/// # Safety
/// `model` must be a live handle and `presented` must point to `len` indices.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_observe(
    model: *mut LucelabModel,
    presented: *const usize,
    len: usize,
    chosen: usize,
) -> LucelabStatus {
    guard(|| {
        let model = model_mut(model)?;
        let options = slice(presented, len, "presented")?;
        let k = model.learner.k();
        let presentation = Presentation::new(options.iter().map(|&i| OptionId(i)), k)?;
        model.learner.observe(&presentation, OptionId(chosen))?;
        Ok(())
    })
}

/// Writes one posterior draw of the preference vector into `out[0..out_len]`.
///
/// # Safety
/// `model` must be a live handle and `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_sample(
    model: *mut LucelabModel,
    out: *mut f64,
    out_len: usize,
) -> LucelabStatus {
    guard(|| {
        let model = model_mut(model)?;
        let out = slice_mut(out, out_len, "out")?;
        let weights = model.learner.sample_weights(&mut model.rng)?;
        let theta = PreferenceVector::from_unnormalized(&weights)?;
        write_vector(theta.as_slice(), out)
    })
}

/// Writes the posterior mean into `out[0..out_len]`. For the Luce model this
/// is a Monte Carlo estimate with the default budget.
///
/// # Safety
/// `model` must be a live handle and `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_posterior_mean(
    model: *mut LucelabModel,
    out: *mut f64,
    out_len: usize,
) -> LucelabStatus {
    guard(|| {
        let model = model_mut(model)?;
        let out = slice_mut(out, out_len, "out")?;
        let mean = model.learner.final_estimate(&mut model.rng)?;
        write_vector(mean.as_slice(), out)
    })
}

/// Picks the next `l` options to show without constraints and writes them,
/// sorted, into `out[0..l]`.
///
/// # Safety
/// `model` must be a live handle and `out` must point to `l` writable indices.
#[no_mangle]
pub unsafe extern "C" fn lucelab_model_select(
    model: *mut LucelabModel,
    policy: LucelabPolicy,
    l: usize,
    out: *mut usize,
) -> LucelabStatus {
    guard(|| {
        let model = model_mut(model)?;
        let out = slice_mut(out, l, "out")?;
        let kind = match policy {
            LucelabPolicy::Thompson => PolicyKind::Thompson,
            LucelabPolicy::Greedy => PolicyKind::Greedy,
        };
        let constraint = PresentationConstraint::unconstrained(model.learner.k());
        let presentation =
            select_presentation(&mut model.learner, kind, l, &constraint, &mut model.rng)?;
        for (slot, option) in out.iter_mut().zip(presentation.iter()) {
            *slot = option.0;
        }
        Ok(())
    })
}

/// Luce probability that `chosen` is picked from `presented` under `theta`.
///
/// # Safety
/// `theta` must point to `k` doubles, `presented` to `len` indices and
/// `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn lucelab_luce_choice_probability(
    theta: *const f64,
    k: usize,
    presented: *const usize,
    len: usize,
    chosen: usize,
    out: *mut f64,
) -> LucelabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let theta = PreferenceVector::new(slice(theta, k, "theta")?.to_vec())?;
        let options = slice(presented, len, "presented")?;
        let presentation = Presentation::new(options.iter().map(|&i| OptionId(i)), k)?;
        *out = luce_choice_probability(&theta, &presentation, OptionId(chosen))?;
        Ok(())
    })
}

/// Runs a full experiment from a JSON configuration and returns the summary
/// as JSON in `*out_json`. Unset fields take their defaults. `workers == 0`
/// uses every core. Free the result with [`lucelab_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out_json` a writable slot.
#[no_mangle]
pub unsafe extern "C" fn lucelab_run_experiment_json(
    config_json: *const c_char,
    workers: usize,
    out_json: *mut *mut c_char,
) -> LucelabStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let text = CStr::from_ptr(config_json).to_str().map_err(|e| {
            Failure(
                LucelabStatus::InvalidArgument,
                format!("config is not UTF-8: {e}"),
            )
        })?;
        let config = ScenarioConfig::from_json(text)?;
        let workers = (workers > 0).then_some(workers);
        let summary = run_experiment(&config, workers, false)?;
        let json = serde_json::to_string(&summary)
            .map_err(|e| Failure(LucelabStatus::InvalidConfig, e.to_string()))?;
        let c = CString::new(json)
            .map_err(|e| Failure(LucelabStatus::InvalidArgument, e.to_string()))?;
        *out_json = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lucelab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
