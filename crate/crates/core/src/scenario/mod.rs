//! Hemodynamic scenarios, virtual patients and parameter sensitivity.

pub mod patient;
pub mod sensitivity;

use crate::params::CvsParameters;
use crate::units::dyn_to_mmhg;

pub use patient::{generate_patient, PatientSpec};
pub use sensitivity::{run_sensitivity, sensitivity_coefficient, SensitivityRow, SIGNIFICANCE_THRESHOLD};

/// Time constant of every gradual change, s.
pub const TRANSITION_TAU: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleMode {
    Step,
    FirstOrder { tau: f64 },
}

/// Value of a parameter moving from `x0` to `x1` starting at `t0`.
pub fn schedule_value(t: f64, x0: f64, x1: f64, t0: f64, mode: ScheduleMode) -> f64 {
    if t < t0 {
        return x0;
    }
    match mode {
        ScheduleMode::Step => x1,
        ScheduleMode::FirstOrder { tau } => x0 + (x1 - x0) * (1.0 - (-(t - t0) / tau).exp()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    RpaUp,
    RpaDown,
    RsaUp,
    RsaDown,
    RestToExercise,
    PosturalChange,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::RpaUp,
        ScenarioKind::RpaDown,
        ScenarioKind::RsaUp,
        ScenarioKind::RsaDown,
        ScenarioKind::RestToExercise,
        ScenarioKind::PosturalChange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::RpaUp => "rpa-up",
            ScenarioKind::RpaDown => "rpa-down",
            ScenarioKind::RsaUp => "rsa-up",
            ScenarioKind::RsaDown => "rsa-down",
            ScenarioKind::RestToExercise => "exercise",
            ScenarioKind::PosturalChange => "posture",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::RpaUp => "Rpa increase",
            ScenarioKind::RpaDown => "Rpa decrease",
            ScenarioKind::RsaUp => "Rsa increase",
            ScenarioKind::RsaDown => "Rsa decrease",
            ScenarioKind::RestToExercise => "Rest to exercise",
            ScenarioKind::PosturalChange => "Postural change",
        }
    }

    /// Parameters perturbed when generating patients for this scenario.
    pub fn default_significant(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::RpaUp => &[
                "Eesrvf", "Esa", "Esv", "Evc", "Rsv", "Rmt", "Vusv", "Vupu", "Vusa", "Vuvc", "Vtotal", "λlvf", "λrvf",
            ],
            ScenarioKind::RpaDown => &["Eesrvf", "Eesra", "Esv", "Rsv", "Vusv", "Vtotal", "λra", "λrvf"],
            ScenarioKind::RsaUp => &["Esa", "Vusv", "Vtotal", "λrvf"],
            ScenarioKind::RsaDown => &[
                "Eeslvf", "Eesrvf", "Eesra", "Esa", "Esv", "Evc", "Rsv", "V0lvf", "Vdlvf", "Rmt", "Vusv", "P0lvf",
                "P0rvf", "Vtotal", "λlvf", "λra", "λrvf",
            ],
            ScenarioKind::RestToExercise => &[
                "Eeslvf", "Eesrvf", "Eesla", "Eesra", "Esv", "Evc", "Rsv", "V0lvf", "Rmt", "Vusv", "Vtotal", "λla",
                "λra", "λrvf",
            ],
            ScenarioKind::PosturalChange => &[
                "Eeslvf", "Eesrvf", "Esv", "Evc", "Rsv", "V0lvf", "Vdlvf", "Rmt", "Vusv", "P0lvf", "Vtotal", "λla",
                "λlvf", "λrvf",
            ],
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One scheduled parameter change, in model units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSchedule {
    pub name: &'static str,
    pub from: f64,
    pub to: f64,
    pub mode: ScheduleMode,
}

/// External blood exchange through the right atrium. The rate decays with
/// `tau` so that the total exchanged approaches `volume` (negative removes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidTransfer {
    pub volume: f64,
    pub tau: f64,
}

impl FluidTransfer {
    /// Inflow rate, mL/s.
    pub fn rate(&self, t: f64, t0: f64) -> f64 {
        if t < t0 {
            0.0
        } else {
            self.volume / self.tau * (-(t - t0) / self.tau).exp()
        }
    }

    /// Exact volume exchanged by time `t`, mL.
    pub fn cumulative(&self, t: f64, t0: f64) -> f64 {
        if t < t0 {
            0.0
        } else {
            self.volume * (1.0 - (-(t - t0) / self.tau).exp())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub onset: f64,
    pub schedules: Vec<ParameterSchedule>,
    pub transfer: Option<FluidTransfer>,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, onset: f64) -> Self {
        let step = ScheduleMode::Step;
        let slow = ScheduleMode::FirstOrder { tau: TRANSITION_TAU };
        let res = |name, from, to, mode| ParameterSchedule {
            name,
            from: dyn_to_mmhg(from),
            to: dyn_to_mmhg(to),
            mode,
        };
        let (schedules, transfer) = match kind {
            ScenarioKind::RpaUp => (vec![res("Rpa", 100.0, 500.0, step)], None),
            ScenarioKind::RpaDown => (vec![res("Rpa", 100.0, 40.0, step)], None),
            ScenarioKind::RsaUp => (vec![res("Rsa", 1300.0, 2600.0, step)], None),
            ScenarioKind::RsaDown => (vec![res("Rsa", 1300.0, 600.0, step)], None),
            ScenarioKind::RestToExercise => (
                vec![
                    ParameterSchedule { name: "HR", from: 60.0, to: 80.0, mode: slow },
                    res("Rpa", 100.0, 40.0, slow),
                    res("Rsa", 1300.0, 670.0, slow),
                ],
                Some(FluidTransfer { volume: 500.0, tau: TRANSITION_TAU }),
            ),
            ScenarioKind::PosturalChange => (vec![], Some(FluidTransfer { volume: -300.0, tau: TRANSITION_TAU })),
        };
        Self { kind, onset, schedules, transfer }
    }

    /// Rescales each schedule so it starts from `base` instead of the nominal
    /// value, keeping the relative change. Patients and sensitivity
    /// perturbations of a scheduled parameter then survive the scenario.
    pub fn rebase(mut self, base: &CvsParameters) -> Self {
        for s in &mut self.schedules {
            let b = base.get(s.name).expect("scenario schedules only name model parameters");
            s.to *= b / s.from;
            s.from = b;
        }
        self
    }

    /// Writes every scheduled parameter's value at time `t` into `params`.
    pub fn apply(&self, params: &mut CvsParameters, t: f64) {
        for s in &self.schedules {
            let v = schedule_value(t, s.from, s.to, self.onset, s.mode);
            *params.get_mut(s.name).expect("scenario schedules only name model parameters") = v;
        }
    }

    pub fn transfer_rate(&self, t: f64) -> f64 {
        self.transfer.map_or(0.0, |f| f.rate(t, self.onset))
    }
}
