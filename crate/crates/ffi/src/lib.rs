//! C ABI over `gdarb`.
//!
//! Models live behind the opaque `GdarbModel` handle. Every fallible call
//! returns a `GdarbStatus`; on failure the message is kept per thread and
//! can be fetched with `gdarb_last_error`. Strings handed out by the library
//! must be released with `gdarb_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gdarb::arbitrage::{build_nu, build_theta, build_theta_bar, market_verdicts, FeedbackStrategy, NuBundle};
use gdarb::backtest::{classify_ip, BacktestConfig, Verdict};
use gdarb::catalog::find;
use gdarb::config::parse_model_file;
use gdarb::model::{to_natural_scale, validate, DiffusionSpec, NaturalScaleModel};
use gdarb::simulate::McConfig;
use gdarb::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdarbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ModelError = 4,
    Unsupported = 5,
    NumericError = 6,
    SimulationError = 7,
    IoError = 8,
    Panic = 9,
}

impl From<&Error> for GdarbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Model(_) => GdarbStatus::ModelError,
            Error::Unsupported(_) => GdarbStatus::Unsupported,
            Error::Argument(_) => GdarbStatus::InvalidArgument,
            Error::Numeric(_) => GdarbStatus::NumericError,
            Error::Simulation(_) => GdarbStatus::SimulationError,
            Error::Parse { .. } => GdarbStatus::ParseError,
            Error::Io(_) => GdarbStatus::IoError,
        }
    }
}

/// A validated model together with its ν.
pub struct GdarbModel {
    label: String,
    model: NaturalScaleModel,
    bundle: NuBundle,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdarbVerdicts {
    pub nip: bool,
    pub qvip_exists: bool,
    pub rp_holds: bool,
    pub nu_total_variation: f64,
    pub nu_ac_total_variation: f64,
    pub lambda_zero_set: f64,
    pub lambda_zero_set_with_density: f64,
    /// The density part of ν was cut to the simulation window.
    pub truncated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdarbStrategy {
    Theta = 0,
    ThetaBar = 1,
    NegTheta = 2,
    Hold = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdarbMcConfig {
    pub n_paths: usize,
    pub h: f64,
    pub horizon: f64,
    pub seed: u64,
    pub tol_route: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdarbVerdict {
    IncreasingProfit = 0,
    Not = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdarbIpReport {
    pub verdict: GdarbVerdict,
    pub condition_i: bool,
    pub condition_ii: bool,
    pub identically_zero: bool,
    pub n_paths: usize,
    pub monotone_fraction: f64,
    pub p_positive: f64,
    pub se_positive: f64,
    pub p_negative: f64,
    pub se_negative: f64,
    /// Mean relative discrepancy of the two value routes; NaN when only the
    /// integral route applies.
    pub route_error: f64,
    pub mean_value: f64,
    pub dominated_fraction: f64,
    pub window_fraction: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (GdarbStatus, String)>) -> GdarbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GdarbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GdarbStatus::Panic
        }
    }
}

fn fail(e: Error) -> (GdarbStatus, String) {
    (GdarbStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (GdarbStatus, String) {
    (GdarbStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GdarbStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (GdarbStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn make_model(label: String, spec: &DiffusionSpec) -> Result<GdarbModel, Error> {
    let model = to_natural_scale(spec)?;
    let report = validate(&model);
    if !report.all_passed() {
        let names: Vec<_> = report.failures().iter().map(|c| c.name.clone()).collect();
        return Err(Error::Model(format!("{label} fails validation: {}", names.join(", "))));
    }
    let bundle = build_nu(&model)?;
    Ok(GdarbModel { label, model, bundle })
}

/// # Safety
/// `out` must be non-null and writable.
unsafe fn hand_out(m: GdarbModel, out: *mut *mut GdarbModel) {
    *out = Box::into_raw(Box::new(m));
}

/// Builds a catalog example. `keys` and `values` hold `n_params` parameter
/// overrides; both may be null when `n_params` is 0.
///
/// # Safety
/// Pointers must be valid for the stated lengths; strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_from_catalog(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    n_params: usize,
    out: *mut *mut GdarbModel,
) -> GdarbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        if n_params > 0 && (keys.is_null() || values.is_null()) {
            return Err(null("keys/values"));
        }
        let mut overrides = Vec::with_capacity(n_params);
        for i in 0..n_params {
            overrides.push((str_arg(*keys.add(i), "parameter name")?, *values.add(i)));
        }
        let entry = find(name).map_err(fail)?;
        let params = entry.resolve(overrides).map_err(fail)?;
        let spec = entry.build(&params).map_err(fail)?;
        hand_out(make_model(entry.name.to_string(), &spec).map_err(fail)?, out);
        Ok(())
    })
}

/// Parses a model file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_from_file(path: *const c_char, out: *mut *mut GdarbModel) -> GdarbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let spec = parse_model_file(Path::new(path)).map_err(fail)?;
        hand_out(make_model(path.to_string(), &spec).map_err(fail)?, out);
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_free(model: *mut GdarbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Name of the model (catalog name or file path). Free with `gdarb_string_free`.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_label(model: *const GdarbModel) -> *mut c_char {
    match model.as_ref() {
        Some(m) => CString::new(m.label.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_verdicts(model: *const GdarbModel, out: *mut GdarbVerdicts) -> GdarbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = market_verdicts(&m.model, &m.bundle).map_err(fail)?;
        *out = GdarbVerdicts {
            nip: v.nip,
            qvip_exists: v.qvip_exists,
            rp_holds: v.rp_holds,
            nu_total_variation: v.evidence.nu_total_variation,
            nu_ac_total_variation: v.evidence.nu_ac_total_variation,
            lambda_zero_set: v.evidence.lambda_zero,
            lambda_zero_set_with_density: v.evidence.lambda_zero_with_density,
            truncated: v.evidence.truncated,
        };
        Ok(())
    })
}

/// Copies up to `capacity` atoms of ν (natural-scale location, mass) and
/// stores the total number in `count`. Pass `capacity = 0` to query the count.
///
/// # Safety
/// `locations` and `masses` must hold `capacity` doubles; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_nu_atoms(
    model: *const GdarbModel,
    locations: *mut f64,
    masses: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> GdarbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        if capacity > 0 && (locations.is_null() || masses.is_null()) {
            return Err(null("locations/masses"));
        }
        let atoms = m.bundle.nu.atoms();
        for (i, &(x, w)) in atoms.iter().take(capacity).enumerate() {
            *locations.add(i) = x;
            *masses.add(i) = w;
        }
        *count = atoms.len();
        Ok(())
    })
}

/// The defaults used by the command line.
#[no_mangle]
pub extern "C" fn gdarb_mc_config_default() -> GdarbMcConfig {
    let d = BacktestConfig::default();
    GdarbMcConfig { n_paths: d.mc.n_paths, h: d.mc.h, horizon: d.mc.horizon, seed: d.mc.seed, tol_route: d.tol_route }
}

/// Backtests one of the built-in strategies (a `GdarbStrategy` value) and
/// classifies it.
///
/// # Safety
/// `model` must be a live handle; `config` readable or null for defaults;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gdarb_model_backtest(
    model: *const GdarbModel,
    strategy: i32,
    config: *const GdarbMcConfig,
    out: *mut GdarbIpReport,
) -> GdarbStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = config.as_ref().copied().unwrap_or_else(|| gdarb_mc_config_default());
        let cfg = BacktestConfig {
            mc: McConfig { n_paths: c.n_paths, h: c.h, horizon: c.horizon, seed: c.seed, ..McConfig::default() },
            tol_route: c.tol_route,
            ..BacktestConfig::default()
        };
        let h = match strategy {
            s if s == GdarbStrategy::Theta as i32 => build_theta(&m.bundle),
            s if s == GdarbStrategy::ThetaBar as i32 => build_theta_bar(&m.bundle),
            s if s == GdarbStrategy::NegTheta as i32 => build_theta(&m.bundle).negated(),
            s if s == GdarbStrategy::Hold as i32 => FeedbackStrategy::constant(1.0),
            s => return Err((GdarbStatus::InvalidArgument, format!("unknown strategy {s}"))),
        };
        let r = classify_ip(&m.model, &m.bundle, &h, &cfg).map_err(fail)?;
        *out = GdarbIpReport {
            verdict: match r.verdict {
                Verdict::IncreasingProfit => GdarbVerdict::IncreasingProfit,
                Verdict::Not => GdarbVerdict::Not,
                Verdict::Inconclusive => GdarbVerdict::Inconclusive,
            },
            condition_i: r.condition_i_ok,
            condition_ii: r.condition_ii_ok,
            identically_zero: r.identically_zero,
            n_paths: r.n_paths,
            monotone_fraction: r.monotone_fraction,
            p_positive: r.p_positive_terminal.p,
            se_positive: r.p_positive_terminal.se,
            p_negative: r.p_negative_terminal.p,
            se_negative: r.p_negative_terminal.se,
            route_error: r.route_agreement.unwrap_or(f64::NAN),
            mean_value: r.mean_integral,
            dominated_fraction: r.dominated_fraction,
            window_fraction: r.window_fraction,
        };
        Ok(())
    })
}

/// Copy of the calling thread's last error message, or null if there was
/// none. Free with `gdarb_string_free`.
#[no_mangle]
pub extern "C" fn gdarb_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gdarb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn gdarb_status_name(status: GdarbStatus) -> *const c_char {
    let s: &'static CStr = match status {
        GdarbStatus::Ok => c"ok",
        GdarbStatus::NullArgument => c"null argument",
        GdarbStatus::InvalidArgument => c"invalid argument",
        GdarbStatus::ParseError => c"parse error",
        GdarbStatus::ModelError => c"model error",
        GdarbStatus::Unsupported => c"unsupported",
        GdarbStatus::NumericError => c"numeric error",
        GdarbStatus::SimulationError => c"simulation error",
        GdarbStatus::IoError => c"i/o error",
        GdarbStatus::Panic => c"panic",
    };
    s.as_ptr()
}
