//! Pump-speed controllers acting on the held LVEDP estimate.

pub mod mfac;
pub mod pid;

pub use mfac::{mfac_control, mfac_estimate_ppd, Mfac, MfacConfig, MfacState};
pub use pid::{pid_control, Pid, PidConfig, PidOutput, PidState};

/// Which controller drives the pump after the constant-speed warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    /// Constant speed for the whole run.
    None,
    Pid,
    Mfac,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::None => "none",
            ControllerKind::Pid => "pid",
            ControllerKind::Mfac => "mfac",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "pid" => Some(Self::Pid),
            "mfac" => Some(Self::Mfac),
            _ => None,
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A speed controller in the LVEDP loop. Pump speed lowers LVEDP, so both
/// controllers see the reverse-acting error `measured − setpoint`.
#[derive(Debug, Clone)]
pub enum SpeedController {
    Constant(f64),
    Pid(Pid),
    Mfac(Mfac),
}

impl SpeedController {
    pub fn new(kind: ControllerKind, speed0: f64, pid: PidConfig, mfac: MfacConfig) -> Self {
        match kind {
            ControllerKind::None => Self::Constant(speed0),
            ControllerKind::Pid => Self::Pid(Pid::new(PidConfig { bias: speed0, ..pid })),
            ControllerKind::Mfac => Self::Mfac(Mfac::new(mfac, speed0)),
        }
    }

    pub fn tick(&mut self, measured: f64, setpoint: f64, dt: f64) -> f64 {
        match self {
            Self::Constant(u) => *u,
            Self::Pid(pid) => pid.tick(measured - setpoint, dt),
            // Output negated so the PPD keeps the positive sign of φ̂(1).
            Self::Mfac(mfac) => mfac.tick(-measured, -setpoint),
        }
    }
}
