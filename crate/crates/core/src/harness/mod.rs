//! Closed-loop protocol runs, tracking and safety metrics, cohorts.

pub mod cohort;
pub mod compare;
pub mod detection;
pub mod plot;
pub mod pump_sweep;
pub mod stats;

use crate::control::{ControllerKind, MfacConfig, PidConfig, SpeedController};
use crate::detector::{evaluate, DetectorConfig, DetectorMetrics, LvedpDetector, LvedpEvent, NoiseSource};
use crate::error::{Error, Result};
use crate::params::CvsParameters;
use crate::pump::PumpParameters;
use crate::scenario::{PatientSpec, Scenario, ScenarioKind};
use crate::sim::{Simulator, SAMPLE_RATE};
use crate::trace::{TraceRow, WaveformTrace};

pub use cohort::{run_cohort, CohortOptions, CohortOutcome};
pub use compare::{run_compare, CompareOptions};
pub use detection::{detection_table, DetectionRow};
pub use pump_sweep::{pump_sweep, PumpPoint};
pub use stats::{
    box_stats, safety_flags, sae, wilcoxon_paired, BoxStats, SafetyFlags, Wilcoxon, CONGESTION_THRESHOLD,
    SUCTION_THRESHOLD,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// End of the constant-speed phase and start of closed-loop control, s.
    pub controller_on: f64,
    pub scenario_onset: f64,
    pub run_end: f64,
    /// Setpoint = LVEDP measured at activation + this, mmHg.
    pub setpoint_offset: f64,
    pub lvedp_low: f64,
    pub lvedp_high: f64,
    /// Pump speed before the controller takes over, rpm.
    pub warmup_speed: f64,
    /// White-noise variance added to the measured LVP, mmHg².
    pub noise_variance: f64,
    /// Internal integration step, s.
    pub dt: f64,
    /// Stop runs whose activation-time LVEDP lies outside the normal range.
    pub enforce_eligibility: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            controller_on: 100.0,
            scenario_onset: 250.0,
            run_end: 400.0,
            setpoint_offset: 0.2,
            lvedp_low: 3.0,
            lvedp_high: 15.0,
            warmup_speed: 2400.0,
            noise_variance: 0.0,
            dt: crate::sim::DEFAULT_DT,
            enforce_eligibility: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter { name: format!("protocol.{name}"), reason: reason.into() })
        };
        if !(0.0 < self.controller_on && self.controller_on < self.scenario_onset && self.scenario_onset < self.run_end) {
            return bad("controller_on", "need 0 < controller_on < scenario_onset < run_end");
        }
        if !(self.lvedp_low < self.lvedp_high) {
            return bad("lvedp_low", "must be below lvedp_high");
        }
        if !(self.noise_variance >= 0.0) {
            return bad("noise_variance", "must be >= 0");
        }
        Ok(())
    }

    fn samples(&self, t: f64) -> usize {
        (t * SAMPLE_RATE).round() as usize
    }
}

/// Everything a run needs besides the patient, scenario and controller choice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Workbench {
    pub cvs: CvsParameters,
    pub pump: PumpParameters,
    pub detector: DetectorConfig,
    pub pid: PidConfig,
    pub mfac: MfacConfig,
    pub protocol: ProtocolConfig,
}

impl Workbench {
    pub fn validate(&self) -> Result<()> {
        self.cvs.validate()?;
        self.pump.validate()?;
        self.detector.validate()?;
        self.pid.validate()?;
        self.mfac.validate()?;
        self.protocol.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// LVEDP at activation outside the normal range; no closed-loop phase.
    Ineligible,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Ineligible => "ineligible",
            RunStatus::Failed => "failed",
        }
    }
}

/// Waveforms and detector output kept when a run is recorded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub trace: WaveformTrace,
    pub events: Vec<LvedpEvent>,
    /// True (time, LVEDP) per cycle.
    pub truth: Vec<(f64, f64)>,
    /// Held LVEDP estimate at each sample after activation.
    pub measured: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub scenario: Option<ScenarioKind>,
    pub controller: ControllerKind,
    pub status: RunStatus,
    pub message: String,
    /// Held LVEDP when the controller was switched on, mmHg.
    pub lvedp_at_activation: f64,
    pub setpoint: f64,
    pub sae: f64,
    pub safety: SafetyFlags,
    pub detector: Option<DetectorMetrics>,
    /// Largest |Σ volumes − (Vtotal + transfers)| seen, mL.
    pub max_volume_error: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub record: Option<RunRecord>,
}

impl RunResult {
    fn new(seed: u64, scenario: Option<ScenarioKind>, controller: ControllerKind) -> Self {
        Self {
            seed,
            scenario,
            controller,
            status: RunStatus::Completed,
            message: String::new(),
            lvedp_at_activation: f64::NAN,
            setpoint: f64::NAN,
            sae: f64::NAN,
            safety: SafetyFlags::default(),
            detector: None,
            max_volume_error: 0.0,
            speed_min: f64::INFINITY,
            speed_max: f64::NEG_INFINITY,
            record: None,
        }
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Seed of the measurement-noise stream for a patient.
fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x6e6f_6973_655f_6c76
}

/// Runs the full protocol: constant speed until `controller_on`, then closed
/// loop on the held LVEDP estimate, scenario from `scenario_onset` to the end.
///
/// Simulation blow-ups and ineligible setpoints are reported in the result's
/// status, never as errors; `Err` is reserved for invalid configuration.
pub fn run_protocol(
    wb: &Workbench,
    patient: &PatientSpec,
    scenario: Option<ScenarioKind>,
    controller: ControllerKind,
    record: bool,
) -> Result<RunResult> {
    wb.validate()?;
    let params = patient.apply(&wb.cvs)?;
    let proto = &wb.protocol;
    let scenario_model = scenario.map(|k| Scenario::new(k, proto.scenario_onset).rebase(&params));
    let mut sim = Simulator::new(params, wb.pump.clone(), proto.dt)?;
    let dt_sample = 1.0 / SAMPLE_RATE;
    let mut detector = LvedpDetector::new(wb.detector.clone())?.with_start_time(dt_sample);
    let mut noise = NoiseSource::new(noise_seed(patient.seed), proto.noise_variance)?;
    let mut ctrl = SpeedController::new(controller, proto.warmup_speed, wb.pid, wb.mfac);

    let mut out = RunResult::new(patient.seed, scenario, controller);
    let mut rec = record.then(|| RunRecord {
        trace: WaveformTrace::with_capacity(SAMPLE_RATE, proto.samples(proto.run_end)),
        ..Default::default()
    });
    let mut events = Vec::new();
    let mut truth = Vec::new();

    let n_total = proto.samples(proto.run_end);
    let k_on = proto.samples(proto.controller_on);
    let mut held = f64::NAN;
    let mut setpoint = f64::NAN;
    let mut prev_act = 0.0;
    let mut prev_plv = f64::NAN;
    let mut latest_truth = f64::NAN;
    let (mut sae_sum, mut congestion_n, mut suction_n, mut closed_loop_n) = (0.0, 0usize, 0usize, 0usize);

    for k in 0..n_total {
        let t_now = k as f64 * dt_sample;
        if k == k_on {
            out.lvedp_at_activation = held;
            let eligible = held.is_finite() && (proto.lvedp_low..=proto.lvedp_high).contains(&held);
            if !eligible && proto.enforce_eligibility {
                out.status = RunStatus::Ineligible;
                out.message = format!("LVEDP at activation {held:.3} mmHg outside [{}, {}]", proto.lvedp_low, proto.lvedp_high);
                break;
            }
            setpoint = held + proto.setpoint_offset;
            out.setpoint = setpoint;
        }
        let speed = if k >= k_on && held.is_finite() {
            wb.pump.clamp_speed(ctrl.tick(held, setpoint, dt_sample))
        } else {
            wb.pump.clamp_speed(proto.warmup_speed)
        };
        out.speed_min = out.speed_min.min(speed);
        out.speed_max = out.speed_max.max(speed);

        let mut rate = 0.0;
        if let Some(s) = &scenario_model {
            s.apply(&mut sim.params, t_now);
            rate = s.transfer_rate(t_now);
        }
        if let Err(e) = sim.advance_sample(speed, rate) {
            out.status = RunStatus::Failed;
            out.message = e.to_string();
            break;
        }
        out.max_volume_error = out.max_volume_error.max(sim.conservation_error().abs());

        let t = (k + 1) as f64 * dt_sample;
        let h = sim.hemodynamics();
        if prev_act <= 0.0 && h.act_v > 0.0 && prev_plv.is_finite() {
            latest_truth = prev_plv;
            truth.push((t - dt_sample, prev_plv));
        }
        prev_act = h.act_v;
        prev_plv = h.p_lv;

        let measured_lvp = h.p_lv + noise.sample();
        match detector.push(measured_lvp) {
            Ok(Some(ev)) => {
                held = ev.value;
                events.push(ev);
            }
            Ok(None) => {}
            Err(e) => {
                out.status = RunStatus::Failed;
                out.message = e.to_string();
                break;
            }
        }

        if k >= k_on {
            sae_sum += (setpoint - held).abs();
            congestion_n += usize::from(held > CONGESTION_THRESHOLD);
            suction_n += usize::from(held < SUCTION_THRESHOLD);
            closed_loop_n += 1;
            if let Some(r) = &mut rec {
                r.measured.push(held);
            }
        }
        if let Some(r) = &mut rec {
            r.trace.push(TraceRow {
                t,
                plv: h.p_lv,
                pla: h.p_la,
                pao: h.p_ao,
                vlv: sim.state.v_lv,
                qpump: sim.state.q_pump,
                speed,
                activation: h.act_v,
                lvedp_true: latest_truth,
            });
        }
    }

    if out.status == RunStatus::Completed {
        out.sae = sae_sum;
        out.safety = SafetyFlags {
            congestion: congestion_n > 0,
            congestion_duration: congestion_n as f64 * dt_sample,
            suction: suction_n > 0,
            suction_duration: suction_n as f64 * dt_sample,
        };
        debug_assert_eq!(closed_loop_n, n_total - k_on);
        let lo = proto.controller_on;
        let hi = proto.run_end - 1.0;
        let tr: Vec<_> = truth.iter().copied().filter(|&(t, _)| (lo..hi).contains(&t)).collect();
        out.detector = evaluate(&events, &tr).ok();
    }
    if let Some(mut r) = rec {
        r.events = events;
        r.truth = truth;
        out.record = Some(r);
    }
    Ok(out)
}
