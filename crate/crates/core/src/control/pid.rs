use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Output when the error history is zero, rpm.
    pub bias: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self { kp: 133.09, ki: 17.17, kd: 10.21, bias: 2400.0, u_min: 1800.0, u_max: 3000.0 }
    }
}

impl PidConfig {
    pub fn validate(&self) -> Result<()> {
        let gains_ok = [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite() && *g >= 0.0);
        if !gains_ok {
            return Err(Error::InvalidParameter {
                name: "controller.pid".into(),
                reason: "gains must be finite and >= 0".into(),
            });
        }
        if !(self.u_min < self.u_max) {
            return Err(Error::InvalidParameter {
                name: "controller.pid.u_min".into(),
                reason: "must be below u_max".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// ∫e dt, mmHg·s.
    pub integrator: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

/// Contributions of one PID evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidOutput {
    pub p: f64,
    pub i: f64,
    pub d: f64,
    pub unclamped: f64,
    pub command: f64,
}

/// Parallel PID with conditional integration: the integrator holds whenever
/// the unclamped output is saturated in the direction the error pushes.
pub fn pid_control(state: &mut PidState, error: f64, dt: f64, cfg: &PidConfig) -> PidOutput {
    debug_assert!(dt > 0.0);
    let prev = if state.initialized { state.prev_error } else { error };
    let p = cfg.kp * error;
    let d = cfg.kd * (error - prev) / dt;
    let candidate = state.integrator + error * dt;
    let unclamped = cfg.bias + p + cfg.ki * candidate + d;
    let winding_up = (unclamped > cfg.u_max && error > 0.0) || (unclamped < cfg.u_min && error < 0.0);
    if !winding_up {
        state.integrator = candidate;
    }
    let i = cfg.ki * state.integrator;
    let unclamped = cfg.bias + p + i + d;
    state.prev_error = error;
    state.initialized = true;
    PidOutput { p, i, d, unclamped, command: unclamped.clamp(cfg.u_min, cfg.u_max) }
}

#[derive(Debug, Clone)]
pub struct Pid {
    pub cfg: PidConfig,
    pub state: PidState,
}

impl Pid {
    pub fn new(cfg: PidConfig) -> Self {
        Self { cfg, state: PidState::default() }
    }

    pub fn tick(&mut self, error: f64, dt: f64) -> f64 {
        pid_control(&mut self.state, error, dt, &self.cfg).command
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_holds_bias() {
        let cfg = PidConfig::default();
        let mut s = PidState::default();
        for _ in 0..100 {
            let out = pid_control(&mut s, 0.0, 0.005, &cfg);
            assert_eq!(out.command, 2400.0);
        }
        assert_eq!(s.integrator, 0.0);
    }

    #[test]
    fn first_tick_proportional() {
        let cfg = PidConfig::default();
        let mut s = PidState::default();
        let out = pid_control(&mut s, 1.0, 0.005, &cfg);
        assert!((out.p - 133.09).abs() < 1e-12);
        assert_eq!(out.d, 0.0);
    }

    #[test]
    fn integrator_frozen_at_saturation() {
        let cfg = PidConfig::default();
        let mut s = PidState::default();
        let out = pid_control(&mut s, 10.0, 0.005, &cfg);
        assert_eq!(out.command, 3000.0);
        let held = s.integrator;
        for _ in 0..50 {
            let out = pid_control(&mut s, 10.0, 0.005, &cfg);
            assert_eq!(out.command, 3000.0);
            assert_eq!(s.integrator, held);
        }
        // Once the error reverses the integrator unwinds.
        let out = pid_control(&mut s, -0.1, 0.005, &cfg);
        assert!(out.command < 3000.0);
        pid_control(&mut s, -0.1, 0.005, &cfg);
        assert!(s.integrator < held);
    }

    #[test]
    fn linear_in_error_when_integrator_frozen() {
        let cfg = PidConfig { ki: 0.0, ..Default::default() };
        let run = |scale: f64| {
            let mut s = PidState::default();
            pid_control(&mut s, 0.3 * scale, 0.005, &cfg);
            pid_control(&mut s, 0.5 * scale, 0.005, &cfg)
        };
        let a = run(1.0);
        let b = run(2.0);
        assert!((b.p - 2.0 * a.p).abs() < 1e-9);
        assert!((b.d - 2.0 * a.d).abs() < 1e-9);
    }
}
