//! C ABI over `faultroute`.
//!
//! Conventions:
//! * Every fallible function returns an [`FrStatus`]; results go through out
//!   pointers. On failure [`fr_last_error`] describes the error.
//! * Objects are opaque handles created by `fr_*_new`/`fr_simulate` and
//!   released by the matching `fr_*_free`. Freeing `NULL` is a no-op.
//! * Mode distributions are passed as `double[4]` in mode order 1..4.
//! * Panics never cross the boundary; they surface as `FR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use faultroute::closed_form;
use faultroute::model::{stationary_distribution, FaultMode, Link, ModeDistribution, NetworkParams, RateMatrix};
use faultroute::sim::{self, SimConfig, Trajectory};
use faultroute::stability::{self, Classification};
use faultroute::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrStatus {
    Ok = 0,
    InvalidParams = 1,
    Domain = 2,
    NotErgodic = 3,
    Numerical = 4,
    NonMonotone = 5,
    CertificateInvalid = 6,
    Inconsistent = 7,
    NullPointer = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrClassification {
    CertifiedStable = 0,
    CertifiedUnstable = 1,
    Indeterminate = 2,
}

/// Network parameters.
pub struct FrParams(NetworkParams);

/// Mode transition rates.
pub struct FrRates(RateMatrix);

/// A simulated trajectory.
pub struct FrTrajectory(Trajectory);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrVerdict {
    pub necessary_holds: bool,
    /// `F1 − lhs1`, `F2 − lhs2`, `1 − η`.
    pub slacks: [f64; 3],
    /// First violated necessary inequality, 1..3, or 0.
    pub violated: u32,
    pub sufficient_holds: bool,
    /// Valid when `sufficient_holds`.
    pub theta: [f64; 2],
    pub drift: f64,
    pub classification: FrClassification,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrBounds {
    pub lower: f64,
    pub upper: f64,
    pub upper_violation: u32,
    pub tolerance: f64,
    pub has_witness: bool,
    pub theta: [f64; 2],
    pub drift: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrSimConfig {
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    /// When false, the run starts at the congestion floors.
    pub has_x0: bool,
    pub x0: [f64; 2],
    /// Initial mode, 1..4.
    pub s0: u8,
    pub sample_interval: f64,
    pub divergence_cap: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrSample {
    pub t: f64,
    pub mode: u8,
    pub x1: f64,
    pub x2: f64,
    pub avg_abs_x: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FrTrajectorySummary {
    pub samples: usize,
    pub jumps: usize,
    pub mode_occupancy: [f64; 4],
    pub avg_abs_x: f64,
    pub diverged: bool,
    /// Valid when `diverged`.
    pub diverged_at: f64,
    pub end_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FrStatus {
    match e {
        Error::InvalidParams(_) => FrStatus::InvalidParams,
        Error::Domain(_) => FrStatus::Domain,
        Error::NotErgodic(_) => FrStatus::NotErgodic,
        Error::Numerical(_) => FrStatus::Numerical,
        Error::NonMonotone { .. } => FrStatus::NonMonotone,
        Error::CertificateInvalid(_) => FrStatus::CertificateInvalid,
        Error::Inconsistent(_) => FrStatus::Inconsistent,
    }
}

impl From<Error> for FrStatus {
    fn from(e: Error) -> Self {
        set_error(&e.to_string());
        status_of(&e)
    }
}

fn null(what: &str) -> FrStatus {
    set_error(&format!("null pointer: {what}"));
    FrStatus::NullPointer
}

fn guard(f: impl FnOnce() -> Result<(), FrStatus>) -> FrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FrStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            FrStatus::Panic
        }
    }
}

unsafe fn read<'a, T>(p: *const T, what: &str) -> Result<&'a T, FrStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), FrStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn distribution(p: *const f64) -> Result<ModeDistribution, FrStatus> {
    if p.is_null() {
        return Err(null("mode distribution"));
    }
    let arr: [f64; 4] = ptr::read(p as *const [f64; 4]);
    Ok(ModeDistribution::new(arr)?)
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fr_params_new(f1: f64, f2: f64, beta: f64, eta: f64, out: *mut *mut FrParams) -> FrStatus {
    guard(|| {
        let params = NetworkParams::new(f1, f2, beta, eta)?;
        write(out, Box::into_raw(Box::new(FrParams(params))), "out")
    })
}

/// # Safety
/// `params` must be null or come from [`fr_params_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fr_params_free(params: *mut FrParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// `lambda` is row-major `λ[s][s']`, 16 entries, zero diagonal.
///
/// # Safety
/// `lambda` must point to 16 doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fr_rates_new(lambda: *const f64, out: *mut *mut FrRates) -> FrStatus {
    guard(|| {
        if lambda.is_null() {
            return Err(null("lambda"));
        }
        let m: [[f64; 4]; 4] = ptr::read(lambda as *const [[f64; 4]; 4]);
        let rates = RateMatrix::new(m)?;
        write(out, Box::into_raw(Box::new(FrRates(rates))), "out")
    })
}

/// Chain `λ_{s,s'} = κ p_{s'}` with stationary distribution `p`.
///
/// # Safety
/// `p` must point to 4 doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fr_rates_from_distribution(p: *const f64, kappa: f64, out: *mut *mut FrRates) -> FrStatus {
    guard(|| {
        let dist = distribution(p)?;
        let rates = RateMatrix::from_distribution(&dist, kappa)?;
        write(out, Box::into_raw(Box::new(FrRates(rates))), "out")
    })
}

/// # Safety
/// `rates` must be null or come from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fr_rates_free(rates: *mut FrRates) {
    if !rates.is_null() {
        drop(Box::from_raw(rates));
    }
}

/// # Safety
/// `rates` must be a live handle; `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fr_stationary_distribution(rates: *const FrRates, out: *mut f64) -> FrStatus {
    guard(|| {
        let r = read(rates, "rates")?;
        let p = stationary_distribution(&r.0)?;
        write(out as *mut [f64; 4], *p.as_array(), "out")
    })
}

/// Congestion floors of both links; an unbounded floor is `INFINITY`.
///
/// # Safety
/// `params` must be a live handle; `out` must point to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fr_congestion_floor(params: *const FrParams, out: *mut f64) -> FrStatus {
    guard(|| {
        let p = read(params, "params")?;
        let floor = [
            stability::solve_congestion_floor(&p.0, Link::One)?,
            stability::solve_congestion_floor(&p.0, Link::Two)?,
        ];
        write(out as *mut [f64; 2], floor, "out")
    })
}

/// Sufficient-condition drift at `theta`.
///
/// # Safety
/// `params` must be a live handle, `p` 4 doubles, `theta` 2 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_sufficient_value(params: *const FrParams, p: *const f64, theta: *const f64, out: *mut f64) -> FrStatus {
    guard(|| {
        let params = read(params, "params")?;
        let dist = distribution(p)?;
        let theta = *read(theta as *const [f64; 2], "theta")?;
        write(out, stability::sufficient_value(&params.0, &dist, theta)?, "out")
    })
}

/// Necessary and sufficient tests at the demand stored in `params`.
///
/// # Safety
/// `params` must be a live handle, `p` 4 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_check(params: *const FrParams, p: *const f64, out: *mut FrVerdict) -> FrStatus {
    guard(|| {
        let params = read(params, "params")?;
        let dist = distribution(p)?;
        let v = stability::assess(&params.0, &dist)?;
        let verdict = FrVerdict {
            necessary_holds: v.necessary.holds,
            slacks: v.necessary.slacks,
            violated: v.necessary.violated.unwrap_or(0) as u32,
            sufficient_holds: v.sufficient.is_some(),
            theta: v.sufficient.map_or([f64::NAN; 2], |w| w.theta),
            drift: v.sufficient.map_or(f64::NAN, |w| w.drift_value),
            classification: match v.classification {
                Classification::CertifiedStable => FrClassification::CertifiedStable,
                Classification::CertifiedUnstable => FrClassification::CertifiedUnstable,
                Classification::Indeterminate => FrClassification::Indeterminate,
            },
        };
        write(out, verdict, "out")
    })
}

/// Numeric throughput bounds; the demand stored in `params` is ignored.
///
/// # Safety
/// `params` must be a live handle, `p` 4 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_throughput_bounds(params: *const FrParams, p: *const f64, out: *mut FrBounds) -> FrStatus {
    guard(|| {
        let params = read(params, "params")?;
        let dist = distribution(p)?;
        let b = stability::throughput_bounds(&params.0, &dist)?;
        let bounds = FrBounds {
            lower: b.lower,
            upper: b.upper,
            upper_violation: b.upper_violation as u32,
            tolerance: b.tolerance,
            has_witness: b.lower_witness.is_some(),
            theta: b.lower_witness.map_or([f64::NAN; 2], |w| w.theta),
            drift: b.lower_witness.map_or(f64::NAN, |w| w.drift_value),
        };
        write(out, bounds, "out")
    })
}

/// `1 / (1 + p2 + p3)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_homogeneous_lower_bound(p2: f64, p3: f64, out: *mut f64) -> FrStatus {
    guard(|| write(out, closed_form::homogeneous_lower_bound(p2, p3)?, "out"))
}

/// `1 / (1 + 2p(1 − p − ρ))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_correlation_bound(p: f64, rho: f64, out: *mut f64) -> FrStatus {
    guard(|| write(out, closed_form::correlation_bound(p, rho)?, "out"))
}

/// Lower bound for `F1 − F2 = d_f`, `p3 = p2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_hetero_lower_bound(d_f: f64, p1: f64, p2: f64, out: *mut f64) -> FrStatus {
    guard(|| write(out, closed_form::hetero_lower_bound(d_f, p1, p2)?, "out"))
}

/// Default simulation settings.
#[no_mangle]
pub extern "C" fn fr_sim_config_default() -> FrSimConfig {
    let d = SimConfig::default();
    FrSimConfig {
        horizon: d.horizon,
        step: d.step,
        seed: d.seed,
        has_x0: false,
        x0: [0.0; 2],
        s0: d.s0.number(),
        sample_interval: d.sample_interval,
        divergence_cap: d.divergence_cap,
    }
}

/// # Safety
/// `params` and `rates` must be live handles, `cfg` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_simulate(
    params: *const FrParams,
    rates: *const FrRates,
    cfg: *const FrSimConfig,
    out: *mut *mut FrTrajectory,
) -> FrStatus {
    guard(|| {
        let params = read(params, "params")?;
        let rates = read(rates, "rates")?;
        let c = read(cfg, "cfg")?;
        let cfg = SimConfig {
            horizon: c.horizon,
            step: c.step,
            seed: c.seed,
            x0: c.has_x0.then_some(c.x0),
            s0: FaultMode::from_number(c.s0)?,
            sample_interval: c.sample_interval,
            divergence_cap: c.divergence_cap,
        };
        let traj = sim::simulate(&params.0, &rates.0, &cfg)?;
        write(out, Box::into_raw(Box::new(FrTrajectory(traj))), "out")
    })
}

/// # Safety
/// `traj` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_trajectory_summary(traj: *const FrTrajectory, out: *mut FrTrajectorySummary) -> FrStatus {
    guard(|| {
        let t = &read(traj, "trajectory")?.0;
        let summary = FrTrajectorySummary {
            samples: t.samples.len(),
            jumps: t.jumps.len(),
            mode_occupancy: t.mode_occupancy,
            avg_abs_x: t.avg_abs_x,
            diverged: t.diverged.is_some(),
            diverged_at: t.diverged.unwrap_or(f64::NAN),
            end_time: t.end_time,
        };
        write(out, summary, "out")
    })
}

/// # Safety
/// `traj` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fr_trajectory_sample(traj: *const FrTrajectory, index: usize, out: *mut FrSample) -> FrStatus {
    guard(|| {
        let t = &read(traj, "trajectory")?.0;
        let Some(s) = t.samples.get(index) else {
            set_error(&format!("sample index {index} out of range ({} samples)", t.samples.len()));
            return Err(FrStatus::OutOfRange);
        };
        let sample = FrSample { t: s.t, mode: s.mode.number(), x1: s.x1, x2: s.x2, avg_abs_x: s.avg_abs_x };
        write(out, sample, "out")
    })
}

/// # Safety
/// `traj` must be null or come from [`fr_simulate`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fr_trajectory_free(traj: *mut FrTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
