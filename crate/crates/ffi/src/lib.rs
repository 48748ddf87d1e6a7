//! C ABI for the su11 interferometer models.
//!
//! Configurations live behind an opaque [`Su11Config`] handle created by
//! [`su11_config_new`] and released with [`su11_config_free`]. Every other
//! call returns a [`Su11Status`] and writes its result through an out
//! pointer; on failure [`su11_last_error_message`] describes what went wrong
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use su11_core::analytic::{self, AnalyticError};
use su11_core::bogoliubov;
use su11_core::comparison::{self, AdvantageKind, ComparisonError, Region};
use su11_core::fock::{self, FockError};
use su11_core::model::{validate, InterferometerConfig, ModelError, Observable, ValidatedConfig};

/// Opaque validated interferometer configuration.
pub struct Su11Config {
    inner: ValidatedConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su11Status {
    Ok = 0,
    NullPointer = 1,
    OutOfRange = 2,
    OutOfRegime = 3,
    Unsupported = 4,
    Numerical = 5,
    InvalidArgument = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su11Observable {
    SinglesA = 0,
    SinglesB = 1,
    Coincidences = 2,
}

impl From<Su11Observable> for Observable {
    fn from(o: Su11Observable) -> Self {
        match o {
            Su11Observable::SinglesA => Observable::SinglesA,
            Su11Observable::SinglesB => Observable::SinglesB,
            Su11Observable::Coincidences => Observable::Coincidences,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su11AdvantageKind {
    Conditional = 0,
    Unconditional = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su11Region {
    BetaOnly = 0,
    AlphaOrBeta = 1,
    Always = 2,
    Never = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Su11ClickProbabilities {
    pub p_a: f64,
    pub p_b: f64,
    pub p_cc: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Su11Visibilities {
    pub v_a: f64,
    pub v_b: f64,
    pub v_cc: f64,
    pub defined_a: bool,
    pub defined_b: bool,
    pub defined_cc: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Su11FisherReport {
    pub fi_at_phi: f64,
    pub fi_max: f64,
    pub phi_star: f64,
    pub defined: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Su11Moments {
    pub n_a: f64,
    pub n_b: f64,
    pub n_ab: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Su11Advantage {
    pub holds: bool,
    /// False when the validity condition fails; `threshold_gain_ratio` is then NaN.
    pub has_threshold: bool,
    pub threshold_gain_ratio: f64,
    pub condition_value: f64,
    pub condition_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su11RegionVerdict {
    pub region: Su11Region,
    /// NaN when the region has no such boundary.
    pub alpha: f64,
    pub beta: f64,
    /// True when the other mode's efficiency is 1 and only the limiting
    /// region is reported.
    pub limit_only: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

fn fail(status: Su11Status, message: impl Into<String>) -> Su11Status {
    set_error(message);
    status
}

fn model_status(e: &ModelError) -> Su11Status {
    match e {
        ModelError::OutOfRange { .. } => Su11Status::OutOfRange,
    }
}

fn analytic_status(e: &AnalyticError) -> Su11Status {
    match e {
        AnalyticError::ModelOutOfRegime { .. } => Su11Status::OutOfRegime,
        AnalyticError::NonZeroPumpPhase { .. } => Su11Status::Unsupported,
    }
}

fn fock_status(e: &FockError) -> Su11Status {
    match e {
        FockError::Model(m) => model_status(m),
        FockError::DerivativeUnstable { .. } => Su11Status::Numerical,
        _ => Su11Status::InvalidArgument,
    }
}

/// Run `f`, turning panics into [`Su11Status::Panic`].
fn guard(f: impl FnOnce() -> Su11Status) -> Su11Status {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(Su11Status::Panic, "internal panic"))
}

/// # Safety
/// `ptr` must be null or point to a live handle from [`su11_config_new`].
unsafe fn config<'a>(ptr: *const Su11Config) -> Result<&'a ValidatedConfig, Su11Status> {
    ptr.as_ref()
        .map(|c| &c.inner)
        .ok_or_else(|| fail(Su11Status::NullPointer, "config handle is null"))
}

/// # Safety
/// `ptr` must be null or valid for writes of `T`.
unsafe fn write<T>(ptr: *mut T, value: T) -> Su11Status {
    match ptr.as_mut() {
        Some(slot) => {
            *slot = value;
            Su11Status::Ok
        }
        None => fail(Su11Status::NullPointer, "output pointer is null"),
    }
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Validate a configuration and return a new handle through `out`.
///
/// # Safety
/// `out` must be valid for writes of a pointer.
#[no_mangle]
pub unsafe extern "C" fn su11_config_new(
    g1: f64,
    g2: f64,
    t_a: f64,
    t_b: f64,
    eta_a: f64,
    eta_b: f64,
    phi: f64,
    theta: f64,
    out: *mut *mut Su11Config,
) -> Su11Status {
    guard(|| {
        if out.is_null() {
            return fail(Su11Status::NullPointer, "output pointer is null");
        }
        let raw = InterferometerConfig {
            g1,
            g2,
            t_a,
            t_b,
            eta_a,
            eta_b,
            phi,
            theta,
        };
        match validate(raw) {
            Ok(inner) => write(out, Box::into_raw(Box::new(Su11Config { inner }))),
            Err(e) => {
                *out = ptr::null_mut();
                fail(model_status(&e), e.to_string())
            }
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `config` must be null or a handle from [`su11_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su11_config_free(config: *mut Su11Config) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Replace the second-stage gain.
///
/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn su11_config_set_g2(config: *mut Su11Config, g2: f64) -> Su11Status {
    guard(|| {
        let Some(handle) = config.as_mut() else {
            return fail(Su11Status::NullPointer, "config handle is null");
        };
        match handle.inner.with_g2(g2) {
            Ok(c) => {
                handle.inner = c;
                Su11Status::Ok
            }
            Err(e) => fail(model_status(&e), e.to_string()),
        }
    })
}

/// Closed-form low-gain click probabilities.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_analytic_click_probabilities(
    config: *const Su11Config,
    out: *mut Su11ClickProbabilities,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        match analytic::click_probabilities(c) {
            Ok(p) => write(
                out,
                Su11ClickProbabilities {
                    p_a: p.p_a,
                    p_b: p.p_b,
                    p_cc: p.p_cc,
                },
            ),
            Err(e) => fail(analytic_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_analytic_visibilities(
    config: *const Su11Config,
    out: *mut Su11Visibilities,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        let v = analytic::visibilities(c);
        write(
            out,
            Su11Visibilities {
                v_a: v.v_a,
                v_b: v.v_b,
                v_cc: v.v_cc,
                defined_a: v.defined_a,
                defined_b: v.defined_b,
                defined_cc: v.defined_cc,
            },
        )
    })
}

/// Closed-form Fisher information at the configured phase and its maximum.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_analytic_fisher(
    config: *const Su11Config,
    observable: Su11Observable,
    out: *mut Su11FisherReport,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        match analytic::fisher_report(c, observable.into()) {
            Ok(r) => write(
                out,
                Su11FisherReport {
                    fi_at_phi: r.fi_at_phi,
                    fi_max: r.fi_max,
                    phi_star: r.phi_star,
                    defined: r.defined,
                },
            ),
            Err(e) => fail(analytic_status(&e), e.to_string()),
        }
    })
}

/// Exact `⟨n_a⟩`, `⟨n_b⟩`, `⟨n_a n_b⟩` at any gain.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_bogoliubov_moments(config: *const Su11Config, out: *mut Su11Moments) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        let m = bogoliubov::moments(c);
        write(
            out,
            Su11Moments {
                n_a: m.n_a,
                n_b: m.n_b,
                n_ab: m.n_ab,
            },
        )
    })
}

/// `‖T Σ T† − Σ‖` of the composed transfer matrix.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_bogoliubov_pseudo_unitarity_defect(
    config: *const Su11Config,
    out: *mut f64,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        write(out, bogoliubov::pseudo_unitarity_defect(&bogoliubov::compose(c)))
    })
}

/// Click probabilities simulated at Fock cutoff `cutoff`. The truncation
/// leakage estimate goes to `leakage` when it is not null.
///
/// # Safety
/// `config` must be a live handle, `out` valid for writes and `leakage` null
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_fock_click_probabilities(
    config: *const Su11Config,
    cutoff: usize,
    out: *mut Su11ClickProbabilities,
    leakage: *mut f64,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        match fock::PhaseResponse::new(c, cutoff) {
            Ok(r) => {
                let p = r.click_probabilities(c.phi);
                if let Some(slot) = leakage.as_mut() {
                    *slot = r.leakage();
                }
                write(
                    out,
                    Su11ClickProbabilities {
                        p_a: p.p_a,
                        p_b: p.p_b,
                        p_cc: p.p_cc,
                    },
                )
            }
            Err(e) => fail(fock_status(&e), e.to_string()),
        }
    })
}

/// Numeric Fisher information from the Fock simulation, with central
/// differences of step `phi_step`.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_fock_fisher(
    config: *const Su11Config,
    cutoff: usize,
    observable: Su11Observable,
    phi_step: f64,
    out: *mut Su11FisherReport,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        match fock::fisher_numeric(c, cutoff, observable.into(), phi_step) {
            Ok(r) => write(
                out,
                Su11FisherReport {
                    fi_at_phi: r.fi_at_phi,
                    fi_max: r.fi_max,
                    phi_star: r.phi_star,
                    defined: r.defined,
                },
            ),
            Err(e) => fail(fock_status(&e), e.to_string()),
        }
    })
}

/// Advantage over the SU(2) reference whose detector efficiency is
/// `su2_eta_max`.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_advantage(
    config: *const Su11Config,
    su2_eta_max: f64,
    observable: Su11Observable,
    kind: Su11AdvantageKind,
    out: *mut Su11Advantage,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        if !(0.0..=1.0).contains(&su2_eta_max) {
            return fail(Su11Status::OutOfRange, format!("su2_eta_max = {su2_eta_max} outside [0, 1]"));
        }
        let kind = match kind {
            Su11AdvantageKind::Conditional => AdvantageKind::Conditional,
            Su11AdvantageKind::Unconditional => AdvantageKind::Unconditional,
        };
        let v = comparison::advantage_threshold(c, su2_eta_max, observable.into(), kind);
        write(
            out,
            Su11Advantage {
                holds: v.holds,
                has_threshold: v.threshold_gain_ratio.is_some(),
                threshold_gain_ratio: v.threshold_gain_ratio.unwrap_or(f64::NAN),
                condition_value: v.condition_value,
                condition_bound: v.condition_bound,
            },
        )
    })
}

/// Region of `g2²/g1²` where singles of `observable` beat coincidences.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn su11_singles_region(
    config: *const Su11Config,
    observable: Su11Observable,
    out: *mut Su11RegionVerdict,
) -> Su11Status {
    guard(|| {
        let c = try_status!(self::config(config));
        let (verdict, limit_only) = match comparison::singles_vs_coincidence_region(c, observable.into()) {
            Ok(v) => (v, false),
            Err(ComparisonError::EfficiencyOne { limit }) => (limit, true),
            Err(e) => return fail(Su11Status::InvalidArgument, e.to_string()),
        };
        let region = match verdict.region {
            Region::BetaOnly => Su11Region::BetaOnly,
            Region::AlphaOrBeta => Su11Region::AlphaOrBeta,
            Region::Always => Su11Region::Always,
            Region::Never => Su11Region::Never,
        };
        write(
            out,
            Su11RegionVerdict {
                region,
                alpha: verdict.alpha.unwrap_or(f64::NAN),
                beta: verdict.beta.unwrap_or(f64::NAN),
                limit_only,
            },
        )
    })
}

/// Message of the last failed call on this thread, or null. The string
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn su11_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
