//! C ABI for the circulation simulator, the streaming LVEDP detector and the
//! two pump-speed controllers.
//!
//! Every object is an opaque heap handle created by `*_new` and released by
//! `*_free`. Functions return an [`LvadStatus`]; on failure a description is
//! kept per thread and can be copied out with [`lvad_last_error_message`].
//! Handles are not thread-safe; use one per thread or lock externally.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lvad_core::control::{Mfac, MfacConfig, Pid, PidConfig};
use lvad_core::detector::{DetectorConfig, LvedpDetector};
use lvad_core::params::CvsParameters;
use lvad_core::pump::PumpParameters;
use lvad_core::sim::{Simulator, DEFAULT_DT};
use lvad_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoBeat = 3,
    NonFinite = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut msg = msg.into();
    msg.retain(|c| c != '\0');
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

fn fail(status: LvadStatus, msg: impl Into<String>) -> LvadStatus {
    set_error(msg);
    status
}

fn from_core(e: Error) -> LvadStatus {
    let status = match e {
        Error::InvalidParameter { .. } | Error::UnknownKey(_) => LvadStatus::InvalidArgument,
        Error::NoBeat => LvadStatus::NoBeat,
        Error::NonFinite { .. } | Error::NonFiniteSample(_) => LvadStatus::NonFinite,
        _ => LvadStatus::Internal,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `Panic` and errors into their status.
fn guard(f: impl FnOnce() -> Result<(), LvadStatus>) -> LvadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LvadStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(LvadStatus::Panic, msg)
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), LvadStatus> {
    if p.is_null() {
        Err(fail(LvadStatus::NullPointer, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LvadStatus> {
    non_null(p, what)?;
    Ok(&mut *p)
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), LvadStatus> {
    non_null(out, what)?;
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn lvad_status_str(status: LvadStatus) -> *const c_char {
    let s: &'static CStr = match status {
        LvadStatus::Ok => c"ok",
        LvadStatus::NullPointer => c"null pointer",
        LvadStatus::InvalidArgument => c"invalid argument",
        LvadStatus::NoBeat => c"no beat established",
        LvadStatus::NonFinite => c"non-finite value",
        LvadStatus::BufferTooSmall => c"buffer too small",
        LvadStatus::Internal => c"internal error",
        LvadStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf`. `needed` (optional) receives the size including the NUL. Returns
/// `BufferTooSmall` if `cap` is short; `buf` may be NULL when `cap` is 0.
///
/// # Safety
/// `buf` must be valid for `cap` bytes; `needed` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_last_error_message(buf: *mut c_char, cap: usize, needed: *mut usize) -> LvadStatus {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes_with_nul();
        if !needed.is_null() {
            needed.write(bytes.len());
        }
        if cap < bytes.len() {
            return LvadStatus::BufferTooSmall;
        }
        if buf.is_null() {
            return LvadStatus::NullPointer;
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        LvadStatus::Ok
    })
}

// ---------------------------------------------------------------- simulator

/// Circulation + pump model.
pub struct LvadSimulator(Simulator);

/// One observation, pressures mmHg, flows mL/s, volumes mL.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LvadSample {
    pub t: f64,
    pub p_lv: f64,
    pub p_la: f64,
    pub p_ao: f64,
    pub p_pa: f64,
    pub v_lv: f64,
    pub q_pump: f64,
    /// Ventricular activation in [0, 1].
    pub activation: f64,
}

fn sample_of(sim: &Simulator) -> LvadSample {
    let h = sim.hemodynamics();
    LvadSample {
        t: sim.time(),
        p_lv: h.p_lv,
        p_la: h.p_la,
        p_ao: h.p_ao,
        p_pa: h.p_pa,
        v_lv: sim.state.v_lv,
        q_pump: sim.state.q_pump,
        activation: h.act_v,
    }
}

/// Nominal patient with the default pump, at rest at t = 0.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_new(out: *mut *mut LvadSimulator) -> LvadStatus {
    guard(|| {
        non_null(out, "out")?;
        let sim = Simulator::new(CvsParameters::nominal(), PumpParameters::default(), DEFAULT_DT).map_err(from_core)?;
        put(out, boxed(LvadSimulator(sim)), "out")
    })
}

/// # Safety
/// `sim` must come from `lvad_simulator_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_free(sim: *mut LvadSimulator) {
    free(sim)
}

/// Sets a circulation or pump parameter by name and restarts the simulation
/// from t = 0. On an unknown name or a value that fails validation the
/// simulator is left untouched.
///
/// # Safety
/// `sim` a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_set_param(
    sim: *mut LvadSimulator,
    name: *const c_char,
    value: f64,
) -> LvadStatus {
    guard(|| {
        let sim = handle(sim, "sim")?;
        non_null(name, "name")?;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(LvadStatus::InvalidArgument, "name is not UTF-8"))?;
        let mut params = sim.0.params.clone();
        let mut pump = sim.0.pump.clone();
        if params.get(name).is_some() {
            params.set(name, value).map_err(from_core)?;
        } else if pump.get(name).is_some() {
            pump.set(name, value).map_err(from_core)?;
        } else {
            return Err(fail(LvadStatus::InvalidArgument, format!("unknown parameter `{name}`")));
        }
        sim.0 = Simulator::new(params, pump, sim.0.dt()).map_err(from_core)?;
        Ok(())
    })
}

/// Reads a circulation or pump parameter by name.
///
/// # Safety
/// `sim` a live handle; `name` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_get_param(
    sim: *const LvadSimulator,
    name: *const c_char,
    out: *mut f64,
) -> LvadStatus {
    guard(|| {
        non_null(sim, "sim")?;
        non_null(name, "name")?;
        let sim = &*sim;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(LvadStatus::InvalidArgument, "name is not UTF-8"))?;
        let v = sim
            .0
            .params
            .get(name)
            .or_else(|| sim.0.pump.get(name))
            .ok_or_else(|| fail(LvadStatus::InvalidArgument, format!("unknown parameter `{name}`")))?;
        put(out, v, "out")
    })
}

/// Advances one 5 ms sample with pump speed (rpm) and external volume
/// transfer (mL/s) held, then writes the new observation to `out` (optional).
///
/// # Safety
/// `sim` a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_advance(
    sim: *mut LvadSimulator,
    speed_rpm: f64,
    transfer_ml_s: f64,
    out: *mut LvadSample,
) -> LvadStatus {
    guard(|| {
        let sim = handle(sim, "sim")?;
        if !speed_rpm.is_finite() || !transfer_ml_s.is_finite() {
            return Err(fail(LvadStatus::InvalidArgument, "speed and transfer must be finite"));
        }
        sim.0.advance_sample(speed_rpm, transfer_ml_s).map_err(from_core)?;
        if !out.is_null() {
            out.write(sample_of(&sim.0));
        }
        Ok(())
    })
}

/// Current observation without advancing.
///
/// # Safety
/// `sim` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_sample(sim: *const LvadSimulator, out: *mut LvadSample) -> LvadStatus {
    guard(|| {
        non_null(sim, "sim")?;
        put(out, sample_of(&(*sim).0), "out")
    })
}

/// Total volume minus its initial value and net transfers, mL.
///
/// # Safety
/// `sim` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_simulator_conservation_error(sim: *const LvadSimulator, out: *mut f64) -> LvadStatus {
    guard(|| {
        non_null(sim, "sim")?;
        put(out, (*sim).0.conservation_error(), "out")
    })
}

// ----------------------------------------------------------------- detector

/// Causal LVEDP detector over a 200 Hz LV pressure stream.
pub struct LvadDetector(LvedpDetector);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LvadEvent {
    pub cycle_index: usize,
    /// When the detector fired, s.
    pub detection_time: f64,
    /// Estimated time of end-diastole, s.
    pub actual_time: f64,
    /// Estimated LVEDP, mmHg.
    pub value: f64,
}

/// Default detector with the given step-5 scale and threshold scale. Pass
/// NaN for either to keep its default.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_detector_new(alpha: f64, beta: f64, out: *mut *mut LvadDetector) -> LvadStatus {
    guard(|| {
        non_null(out, "out")?;
        let mut cfg = DetectorConfig::default();
        if !alpha.is_nan() {
            cfg.alpha = alpha;
        }
        if !beta.is_nan() {
            cfg.beta = beta;
        }
        let det = LvedpDetector::new(cfg).map_err(from_core)?;
        put(out, boxed(LvadDetector(det)), "out")
    })
}

/// # Safety
/// `det` must come from `lvad_detector_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lvad_detector_free(det: *mut LvadDetector) {
    free(det)
}

/// Feeds one LVP sample (mmHg). `found` receives whether a detection fired;
/// if so `event` is filled.
///
/// # Safety
/// `det` a live handle; `event` and `found` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_detector_push(
    det: *mut LvadDetector,
    lvp: f64,
    event: *mut LvadEvent,
    found: *mut bool,
) -> LvadStatus {
    guard(|| {
        let det = handle(det, "det")?;
        non_null(event, "event")?;
        non_null(found, "found")?;
        let e = det.0.push(lvp).map_err(from_core)?;
        found.write(e.is_some());
        if let Some(e) = e {
            event.write(LvadEvent {
                cycle_index: e.cycle_index,
                detection_time: e.detection_time,
                actual_time: e.actual_time,
                value: e.value,
            });
        }
        Ok(())
    })
}

/// Latest beat period estimate, s; `NoBeat` before two peaks were seen.
///
/// # Safety
/// `det` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_detector_beat_period(det: *const LvadDetector, out: *mut f64) -> LvadStatus {
    guard(|| {
        non_null(det, "det")?;
        let p = (*det).0.beat_period().map_err(from_core)?;
        put(out, p, "out")
    })
}

// -------------------------------------------------------------- controllers

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvadMfacConfig {
    pub rho: f64,
    pub lambda: f64,
    pub eta: f64,
    pub mu: f64,
    /// Initial and reset value of the pseudo-partial derivative.
    pub phi1: f64,
    pub epsilon: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl From<LvadMfacConfig> for MfacConfig {
    fn from(c: LvadMfacConfig) -> Self {
        Self {
            rho: c.rho,
            lambda: c.lambda,
            eta: c.eta,
            mu: c.mu,
            phi1: c.phi1,
            epsilon: c.epsilon,
            u_min: c.u_min,
            u_max: c.u_max,
        }
    }
}

impl From<MfacConfig> for LvadMfacConfig {
    fn from(c: MfacConfig) -> Self {
        Self {
            rho: c.rho,
            lambda: c.lambda,
            eta: c.eta,
            mu: c.mu,
            phi1: c.phi1,
            epsilon: c.epsilon,
            u_min: c.u_min,
            u_max: c.u_max,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvadPidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Output for a zero error history, rpm.
    pub bias: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl From<LvadPidConfig> for PidConfig {
    fn from(c: LvadPidConfig) -> Self {
        Self { kp: c.kp, ki: c.ki, kd: c.kd, bias: c.bias, u_min: c.u_min, u_max: c.u_max }
    }
}

impl From<PidConfig> for LvadPidConfig {
    fn from(c: PidConfig) -> Self {
        Self { kp: c.kp, ki: c.ki, kd: c.kd, bias: c.bias, u_min: c.u_min, u_max: c.u_max }
    }
}

/// Compact-form dynamic-linearisation MFAC.
pub struct LvadMfac(Mfac);

/// Discrete PID with clamped output.
pub struct LvadPid(Pid);

#[no_mangle]
pub extern "C" fn lvad_mfac_default_config() -> LvadMfacConfig {
    MfacConfig::default().into()
}

#[no_mangle]
pub extern "C" fn lvad_pid_default_config() -> LvadPidConfig {
    PidConfig::default().into()
}

/// # Safety
/// `cfg` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_mfac_new(cfg: *const LvadMfacConfig, u0: f64, out: *mut *mut LvadMfac) -> LvadStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let cfg = MfacConfig::from(*cfg);
        cfg.validate().map_err(from_core)?;
        if !u0.is_finite() {
            return Err(fail(LvadStatus::InvalidArgument, "u0 must be finite"));
        }
        put(out, boxed(LvadMfac(Mfac::new(cfg, u0))), "out")
    })
}

/// # Safety
/// `c` must come from `lvad_mfac_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lvad_mfac_free(c: *mut LvadMfac) {
    free(c)
}

/// One update from the measured output `y` toward `y_star`; writes the new
/// command to `u`.
///
/// # Safety
/// `c` a live handle; `u` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_mfac_tick(c: *mut LvadMfac, y: f64, y_star: f64, u: *mut f64) -> LvadStatus {
    guard(|| {
        let c = handle(c, "controller")?;
        non_null(u, "u")?;
        if !y.is_finite() || !y_star.is_finite() {
            return Err(fail(LvadStatus::NonFinite, "y and y_star must be finite"));
        }
        put(u, c.0.tick(y, y_star), "u")
    })
}

/// Current pseudo-partial-derivative estimate.
///
/// # Safety
/// `c` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_mfac_phi(c: *const LvadMfac, out: *mut f64) -> LvadStatus {
    guard(|| {
        non_null(c, "controller")?;
        put(out, (*c).0.state.phi_hat, "out")
    })
}

/// # Safety
/// `cfg` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_pid_new(cfg: *const LvadPidConfig, out: *mut *mut LvadPid) -> LvadStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let cfg = PidConfig::from(*cfg);
        cfg.validate().map_err(from_core)?;
        put(out, boxed(LvadPid(Pid::new(cfg))), "out")
    })
}

/// # Safety
/// `c` must come from `lvad_pid_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lvad_pid_free(c: *mut LvadPid) {
    free(c)
}

/// One update with tracking error `error` over `dt` seconds; writes the
/// clamped command to `u`.
///
/// # Safety
/// `c` a live handle; `u` writable.
#[no_mangle]
pub unsafe extern "C" fn lvad_pid_tick(c: *mut LvadPid, error: f64, dt: f64, u: *mut f64) -> LvadStatus {
    guard(|| {
        let c = handle(c, "controller")?;
        non_null(u, "u")?;
        if !error.is_finite() {
            return Err(fail(LvadStatus::NonFinite, "error must be finite"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(fail(LvadStatus::InvalidArgument, "dt must be positive and finite"));
        }
        put(u, c.0.tick(error, dt), "u")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_strings_are_distinct() {
        let all = [
            LvadStatus::Ok,
            LvadStatus::NullPointer,
            LvadStatus::InvalidArgument,
            LvadStatus::NoBeat,
            LvadStatus::NonFinite,
            LvadStatus::BufferTooSmall,
            LvadStatus::Internal,
            LvadStatus::Panic,
        ];
        let mut seen: Vec<String> = all
            .iter()
            .map(|&s| unsafe { CStr::from_ptr(lvad_status_str(s)) }.to_str().unwrap().to_string())
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), all.len());
    }

    #[test]
    fn panic_becomes_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, LvadStatus::Panic);
        let mut buf = [0 as c_char; 16];
        assert_eq!(unsafe { lvad_last_error_message(buf.as_mut_ptr(), buf.len(), std::ptr::null_mut()) }, LvadStatus::Ok);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "boom");
    }

    #[test]
    fn config_round_trip() {
        let m = lvad_mfac_default_config();
        assert_eq!(MfacConfig::from(m), MfacConfig::default());
        let p = lvad_pid_default_config();
        assert_eq!(PidConfig::from(p), PidConfig::default());
    }
}
