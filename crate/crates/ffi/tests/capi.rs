use std::ffi::{c_char, CStr};
use std::ptr;

use lvad_ffi::*;

fn last_error() -> String {
    let mut needed = 0usize;
    unsafe {
        assert_eq!(lvad_last_error_message(ptr::null_mut(), 0, &mut needed), LvadStatus::BufferTooSmall);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(lvad_last_error_message(buf.as_mut_ptr(), buf.len(), ptr::null_mut()), LvadStatus::Ok);
        CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_string()
    }
}

#[test]
fn simulator_runs_and_conserves_volume() {
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(lvad_simulator_new(&mut sim), LvadStatus::Ok);
        let mut s = LvadSample::default();
        let mut q_sum = 0.0;
        for k in 0..2000 {
            assert_eq!(lvad_simulator_advance(sim, 2400.0, 0.0, &mut s), LvadStatus::Ok);
            if k >= 1000 {
                q_sum += s.q_pump;
            }
        }
        assert!((s.t - 10.0).abs() < 1e-9, "{}", s.t);
        assert!(s.p_ao > 50.0 && s.p_ao < 150.0, "{s:?}");
        assert!(q_sum / 1000.0 > 30.0, "{}", q_sum / 1000.0);
        let mut err = f64::NAN;
        assert_eq!(lvad_simulator_conservation_error(sim, &mut err), LvadStatus::Ok);
        assert!(err.abs() < 0.1, "{err}");
        let mut s2 = LvadSample::default();
        assert_eq!(lvad_simulator_sample(sim, &mut s2), LvadStatus::Ok);
        assert_eq!(s, s2);
        lvad_simulator_free(sim);
    }
}

#[test]
fn matches_core_simulator() {
    use lvad_core::params::CvsParameters;
    use lvad_core::pump::PumpParameters;
    use lvad_core::sim::{Simulator, DEFAULT_DT};
    let mut core = Simulator::new(CvsParameters::nominal(), PumpParameters::default(), DEFAULT_DT).unwrap();
    unsafe {
        let mut sim = ptr::null_mut();
        lvad_simulator_new(&mut sim);
        let mut s = LvadSample::default();
        for k in 0..400 {
            let speed = 2000.0 + k as f64;
            lvad_simulator_advance(sim, speed, 0.0, &mut s);
            core.advance_sample(speed, 0.0).unwrap();
        }
        assert_eq!(s.p_lv.to_bits(), core.hemodynamics().p_lv.to_bits());
        lvad_simulator_free(sim);
    }
}

#[test]
fn set_param_validates_and_restarts() {
    unsafe {
        let mut sim = ptr::null_mut();
        lvad_simulator_new(&mut sim);
        lvad_simulator_advance(sim, 2400.0, 0.0, ptr::null_mut());
        let name = c"Rsa";
        let mut before = 0.0;
        assert_eq!(lvad_simulator_get_param(sim, name.as_ptr(), &mut before), LvadStatus::Ok);
        assert_eq!(lvad_simulator_set_param(sim, name.as_ptr(), -1.0), LvadStatus::InvalidArgument);
        assert!(last_error().contains("Rsa"), "{}", last_error());
        let mut after = 0.0;
        lvad_simulator_get_param(sim, name.as_ptr(), &mut after);
        assert_eq!(before, after);

        assert_eq!(lvad_simulator_set_param(sim, name.as_ptr(), before * 1.5), LvadStatus::Ok);
        let mut s = LvadSample::default();
        lvad_simulator_sample(sim, &mut s);
        assert_eq!(s.t, 0.0);

        assert_eq!(lvad_simulator_set_param(sim, c"nope".as_ptr(), 1.0), LvadStatus::InvalidArgument);
        assert!(last_error().contains("nope"));
        lvad_simulator_free(sim);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut s = LvadSample::default();
        assert_eq!(lvad_simulator_advance(ptr::null_mut(), 2400.0, 0.0, &mut s), LvadStatus::NullPointer);
        assert_eq!(lvad_simulator_new(ptr::null_mut()), LvadStatus::NullPointer);
        let mut u = 0.0;
        assert_eq!(lvad_pid_tick(ptr::null_mut(), 1.0, 0.005, &mut u), LvadStatus::NullPointer);
        assert_eq!(lvad_mfac_tick(ptr::null_mut(), 1.0, 1.0, &mut u), LvadStatus::NullPointer);
        let (mut e, mut f) = (LvadEvent::default(), false);
        assert_eq!(lvad_detector_push(ptr::null_mut(), 1.0, &mut e, &mut f), LvadStatus::NullPointer);
        // Freeing NULL is a no-op.
        lvad_simulator_free(ptr::null_mut());
        lvad_detector_free(ptr::null_mut());
        lvad_mfac_free(ptr::null_mut());
        lvad_pid_free(ptr::null_mut());
    }
}

#[test]
fn detector_finds_beats_in_simulated_pressure() {
    unsafe {
        let (mut sim, mut det) = (ptr::null_mut(), ptr::null_mut());
        lvad_simulator_new(&mut sim);
        assert_eq!(lvad_detector_new(f64::NAN, f64::NAN, &mut det), LvadStatus::Ok);
        let mut period = 0.0;
        assert_eq!(lvad_detector_beat_period(det, &mut period), LvadStatus::NoBeat);
        let mut s = LvadSample::default();
        let mut events = Vec::new();
        for _ in 0..4000 {
            lvad_simulator_advance(sim, 2400.0, 0.0, &mut s);
            let (mut e, mut found) = (LvadEvent::default(), false);
            assert_eq!(lvad_detector_push(det, s.p_lv, &mut e, &mut found), LvadStatus::Ok);
            if found {
                events.push(e);
            }
        }
        // 20 s at 60 bpm; the first beats only seed the peak tracker.
        assert!((17..=20).contains(&events.len()), "{}", events.len());
        assert!(events.iter().all(|e| e.detection_time >= e.actual_time && e.value > -5.0 && e.value < 30.0));
        assert_eq!(lvad_detector_beat_period(det, &mut period), LvadStatus::Ok);
        assert!((period - 1.0).abs() < 0.05, "{period}");
        lvad_simulator_free(sim);
        lvad_detector_free(det);
    }
}

#[test]
fn detector_rejects_bad_config_and_samples() {
    unsafe {
        let mut det = ptr::null_mut();
        assert_eq!(lvad_detector_new(-1.0, f64::NAN, &mut det), LvadStatus::InvalidArgument);
        assert!(det.is_null());
        lvad_detector_new(f64::NAN, f64::NAN, &mut det);
        let (mut e, mut f) = (LvadEvent::default(), false);
        assert_eq!(lvad_detector_push(det, f64::INFINITY, &mut e, &mut f), LvadStatus::NonFinite);
        lvad_detector_free(det);
    }
}

#[test]
fn controllers_clamp_and_validate() {
    unsafe {
        let cfg = lvad_pid_default_config();
        let mut pid = ptr::null_mut();
        assert_eq!(lvad_pid_new(&cfg, &mut pid), LvadStatus::Ok);
        let mut u = 0.0;
        assert_eq!(lvad_pid_tick(pid, 0.0, 0.005, &mut u), LvadStatus::Ok);
        assert_eq!(u, cfg.bias);
        lvad_pid_tick(pid, 1e6, 0.005, &mut u);
        assert_eq!(u, cfg.u_max);
        assert_eq!(lvad_pid_tick(pid, 1.0, 0.0, &mut u), LvadStatus::InvalidArgument);
        lvad_pid_free(pid);

        let bad = LvadPidConfig { u_min: 3000.0, u_max: 1800.0, ..cfg };
        let mut pid = ptr::null_mut();
        assert_eq!(lvad_pid_new(&bad, &mut pid), LvadStatus::InvalidArgument);

        let m = lvad_mfac_default_config();
        let mut mfac = ptr::null_mut();
        assert_eq!(lvad_mfac_new(&m, 2400.0, &mut mfac), LvadStatus::Ok);
        let mut phi = 0.0;
        lvad_mfac_phi(mfac, &mut phi);
        assert_eq!(phi, m.phi1);
        for _ in 0..50 {
            assert_eq!(lvad_mfac_tick(mfac, -20.0, -8.0, &mut u), LvadStatus::Ok);
            assert!((m.u_min..=m.u_max).contains(&u));
        }
        assert_eq!(lvad_mfac_tick(mfac, f64::NAN, -8.0, &mut u), LvadStatus::NonFinite);
        lvad_mfac_free(mfac);

        let bad = LvadMfacConfig { lambda: -1.0, ..m };
        let mut mfac = ptr::null_mut();
        assert_eq!(lvad_mfac_new(&bad, 2400.0, &mut mfac), LvadStatus::InvalidArgument);
    }
}
