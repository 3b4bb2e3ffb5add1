//! Compact-form dynamic-linearization model-free adaptive control (SISO).
//!
//! The plant is treated as `y(k+1) = y(k) + φ(k)·Δu(k)`. Each tick first
//! refreshes the pseudo-partial-derivative estimate φ̂ with a projection
//! update and reset rule, then applies the one-step-ahead control law.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfacConfig {
    /// Control step constant ρ.
    pub rho: f64,
    /// Control-increment weighting λ.
    pub lambda: f64,
    /// Estimation step constant η, in (0, 1].
    pub eta: f64,
    /// Estimation weighting μ.
    pub mu: f64,
    /// Initial PPD φ̂(1); its sign is the assumed control direction.
    pub phi1: f64,
    /// Reset tolerance ε.
    pub epsilon: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for MfacConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            lambda: 0.1,
            eta: 1.0,
            mu: 0.1,
            phi1: 0.001,
            epsilon: 1e-4,
            u_min: 1800.0,
            u_max: 3000.0,
        }
    }
}

impl MfacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter { name: format!("controller.mfac.{name}"), reason: reason.into() })
        };
        if !(self.mu > 0.0) {
            return bad("mu", "must be > 0");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta", "must lie in (0, 1]");
        }
        if !(self.lambda > 0.0) {
            return bad("lambda", "must be > 0");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be > 0");
        }
        if !(self.phi1.abs() > self.epsilon) {
            return bad("phi1", "magnitude must exceed epsilon");
        }
        if !(self.rho > 0.0) {
            return bad("rho", "must be > 0");
        }
        if !(self.u_min < self.u_max) {
            return bad("u_min", "must be below u_max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfacState {
    pub phi_hat: f64,
    pub u_prev: f64,
    pub u_prev2: f64,
    pub y_prev: f64,
    pub initialized: bool,
}

impl MfacState {
    /// Fresh state whose command history sits at `u0`.
    pub fn new(cfg: &MfacConfig, u0: f64) -> Self {
        Self { phi_hat: cfg.phi1, u_prev: u0, u_prev2: u0, y_prev: 0.0, initialized: false }
    }
}

/// Projection update of φ̂ followed by the reset rule.
pub fn mfac_estimate_ppd(state: &MfacState, du_prev: f64, dy: f64, cfg: &MfacConfig) -> f64 {
    let phi = state.phi_hat + cfg.eta * du_prev * (dy - state.phi_hat * du_prev) / (cfg.mu + du_prev * du_prev);
    let sign_flipped = phi.signum() != cfg.phi1.signum();
    if phi.abs() <= cfg.epsilon || du_prev.abs() <= cfg.epsilon || sign_flipped {
        cfg.phi1
    } else {
        phi
    }
}

/// Control law using the current φ̂; commits the clamped command to the state.
pub fn mfac_control(state: &mut MfacState, y: f64, y_star: f64, cfg: &MfacConfig) -> f64 {
    let phi = state.phi_hat;
    let u = state.u_prev + cfg.rho * phi * (y_star - y) / (cfg.lambda + phi * phi);
    let u = u.clamp(cfg.u_min, cfg.u_max);
    state.u_prev2 = state.u_prev;
    state.u_prev = u;
    state.y_prev = y;
    u
}

/// Stateful MFAC controller: one estimate + control step per tick.
#[derive(Debug, Clone)]
pub struct Mfac {
    pub cfg: MfacConfig,
    pub state: MfacState,
}

impl Mfac {
    pub fn new(cfg: MfacConfig, u0: f64) -> Self {
        Self { state: MfacState::new(&cfg, u0), cfg }
    }

    pub fn tick(&mut self, y: f64, y_star: f64) -> f64 {
        if self.state.initialized {
            let du_prev = self.state.u_prev - self.state.u_prev2;
            let dy = y - self.state.y_prev;
            self.state.phi_hat = mfac_estimate_ppd(&self.state, du_prev, dy, &self.cfg);
        } else {
            self.state.phi_hat = self.cfg.phi1;
            self.state.initialized = true;
        }
        mfac_control(&mut self.state, y, y_star, &self.cfg)
    }
}
