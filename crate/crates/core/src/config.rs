//! Run configuration as flat `key = value` text.
//!
//! ```text
//! # exercise with the adaptive controller
//! controller = mfac
//! scenario = exercise
//! seed = 7
//! controller.mfac.lambda = 0.1
//! cvs.Vtotal = 5200
//! ```
//!
//! `controller`, `scenario` and `seed` are required; everything else falls
//! back to the defaults. Unknown keys are rejected so typos do not silently
//! run the default. The PID bias is not a key: it always equals
//! `protocol.warmup_speed` so the switch to closed loop is bumpless.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::control::ControllerKind;
use crate::detector::Step5Signal;
use crate::error::{Error, Result};
use crate::harness::Workbench;
use crate::params::CvsParameters;
use crate::scenario::ScenarioKind;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfiguration {
    pub workbench: Workbench,
    pub controller: ControllerKind,
    /// `None` runs the protocol without a scenario.
    pub scenario: Option<ScenarioKind>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfiguration {
    pub fn new(controller: ControllerKind, scenario: Option<ScenarioKind>, seed: u64) -> Self {
        Self { workbench: Workbench::default(), controller, scenario, seed, output_dir: PathBuf::from("out") }
    }
}

type Field = fn(&mut Workbench) -> &mut f64;

/// Every numeric key outside `cvs.*`, in output order.
const NUMERIC: &[(&str, Field)] = &[
    ("pump.r_in", |w| &mut w.pump.r_in),
    ("pump.r_out", |w| &mut w.pump.r_out),
    ("pump.l_in", |w| &mut w.pump.l_in),
    ("pump.l_out", |w| &mut w.pump.l_out),
    ("pump.a0", |w| &mut w.pump.a0),
    ("pump.a1", |w| &mut w.pump.a1),
    ("pump.a2", |w| &mut w.pump.a2),
    ("pump.suction_gain", |w| &mut w.pump.suction_gain),
    ("pump.suction_threshold", |w| &mut w.pump.suction_threshold),
    ("pump.speed_min", |w| &mut w.pump.speed_min),
    ("pump.speed_max", |w| &mut w.pump.speed_max),
    ("detector.fs", |w| &mut w.detector.fs),
    ("detector.pass_freq", |w| &mut w.detector.pass_freq),
    ("detector.stop_freq", |w| &mut w.detector.stop_freq),
    ("detector.pass_db", |w| &mut w.detector.pass_db),
    ("detector.stop_db", |w| &mut w.detector.stop_db),
    ("detector.alpha", |w| &mut w.detector.alpha),
    ("detector.beta", |w| &mut w.detector.beta),
    ("detector.peak_fraction", |w| &mut w.detector.peak_fraction),
    ("detector.peak_refractory", |w| &mut w.detector.peak_refractory),
    ("detector.max_half_life", |w| &mut w.detector.max_half_life),
    ("detector.refractory_fraction", |w| &mut w.detector.refractory_fraction),
    ("detector.lookback_fraction", |w| &mut w.detector.lookback_fraction),
    ("detector.max_lookback", |w| &mut w.detector.max_lookback),
    ("controller.pid.kp", |w| &mut w.pid.kp),
    ("controller.pid.ki", |w| &mut w.pid.ki),
    ("controller.pid.kd", |w| &mut w.pid.kd),
    ("controller.pid.u_min", |w| &mut w.pid.u_min),
    ("controller.pid.u_max", |w| &mut w.pid.u_max),
    ("controller.mfac.rho", |w| &mut w.mfac.rho),
    ("controller.mfac.lambda", |w| &mut w.mfac.lambda),
    ("controller.mfac.eta", |w| &mut w.mfac.eta),
    ("controller.mfac.mu", |w| &mut w.mfac.mu),
    ("controller.mfac.phi1", |w| &mut w.mfac.phi1),
    ("controller.mfac.epsilon", |w| &mut w.mfac.epsilon),
    ("controller.mfac.u_min", |w| &mut w.mfac.u_min),
    ("controller.mfac.u_max", |w| &mut w.mfac.u_max),
    ("protocol.controller_on", |w| &mut w.protocol.controller_on),
    ("protocol.scenario_onset", |w| &mut w.protocol.scenario_onset),
    ("protocol.run_end", |w| &mut w.protocol.run_end),
    ("protocol.setpoint_offset", |w| &mut w.protocol.setpoint_offset),
    ("protocol.lvedp_low", |w| &mut w.protocol.lvedp_low),
    ("protocol.lvedp_high", |w| &mut w.protocol.lvedp_high),
    ("protocol.warmup_speed", |w| &mut w.protocol.warmup_speed),
    ("protocol.noise_variance", |w| &mut w.protocol.noise_variance),
    ("protocol.dt", |w| &mut w.protocol.dt),
];

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigSyntax { line, message: message.into() }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| syntax(line, format!("`{key}` expects a number, got `{v}`")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| syntax(line, format!("`{key}` expects a non-negative integer, got `{v}`")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(syntax(line, format!("`{key}` expects true or false, got `{v}`"))),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfiguration> {
    let mut cfg = RunConfiguration::new(ControllerKind::None, None, 0);
    let (mut has_controller, mut has_scenario, mut has_seed) = (false, false, false);
    let mut seen = std::collections::HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| syntax(line, format!("expected `key = value`, got `{body}`")))?;
        if key.is_empty() {
            return Err(syntax(line, "empty key"));
        }
        if !seen.insert(key.to_string()) {
            return Err(syntax(line, format!("duplicate key `{key}`")));
        }
        let wb = &mut cfg.workbench;
        match key {
            "controller" => {
                cfg.controller = ControllerKind::parse(value)
                    .ok_or_else(|| syntax(line, format!("unknown controller `{value}` (pid, mfac, none)")))?;
                has_controller = true;
            }
            "scenario" => {
                cfg.scenario = match value {
                    "none" => None,
                    v => Some(ScenarioKind::parse(v).ok_or_else(|| syntax(line, format!("unknown scenario `{v}`")))?),
                };
                has_scenario = true;
            }
            "seed" => {
                cfg.seed = value.parse().map_err(|_| syntax(line, format!("`seed` expects an integer, got `{value}`")))?;
                has_seed = true;
            }
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "detector.window" => wb.detector.window = parse_usize(line, key, value)?,
            "detector.top_k" => wb.detector.top_k = parse_usize(line, key, value)?,
            "detector.step5" => {
                wb.detector.step5 = Step5Signal::parse(value)
                    .ok_or_else(|| syntax(line, format!("`detector.step5` is sflvp or flvp, got `{value}`")))?
            }
            "protocol.enforce_eligibility" => wb.protocol.enforce_eligibility = parse_bool(line, key, value)?,
            _ => {
                if let Some(name) = key.strip_prefix("cvs.") {
                    let v = parse_f64(line, key, value)?;
                    *wb.cvs.get_mut(name).ok_or_else(|| Error::UnknownKey(key.to_string()))? = v;
                } else if let Some((_, field)) = NUMERIC.iter().find(|(k, _)| *k == key) {
                    *field(wb) = parse_f64(line, key, value)?;
                } else {
                    return Err(Error::UnknownKey(key.to_string()));
                }
            }
        }
    }
    for (present, key) in [(has_controller, "controller"), (has_scenario, "scenario"), (has_seed, "seed")] {
        if !present {
            return Err(Error::MissingKey(key.into()));
        }
    }
    cfg.workbench.pid.bias = cfg.workbench.protocol.warmup_speed;
    cfg.workbench.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfiguration> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Writes every key. Floats use Rust's shortest round-trip formatting, so
/// `parse_config(&render_config(c)) == c`.
pub fn render_config(cfg: &RunConfiguration) -> String {
    let mut s = String::new();
    let mut wb = cfg.workbench.clone();
    let _ = writeln!(s, "controller = {}", cfg.controller);
    let _ = writeln!(s, "scenario = {}", cfg.scenario.map_or("none", ScenarioKind::as_str));
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "output_dir = {}", cfg.output_dir.display());
    s.push('\n');
    for name in CvsParameters::NAMES {
        let _ = writeln!(s, "cvs.{name} = {}", wb.cvs.get(name).expect("listed name"));
    }
    s.push('\n');
    let mut section = "";
    for (key, field) in NUMERIC {
        let head = key.rsplit_once('.').map_or("", |(h, _)| h);
        if head != section && !section.is_empty() {
            s.push('\n');
        }
        section = head;
        let _ = writeln!(s, "{key} = {}", field(&mut wb));
        if *key == "detector.beta" {
            let _ = writeln!(s, "detector.window = {}", wb.detector.window);
            let _ = writeln!(s, "detector.top_k = {}", wb.detector.top_k);
            let _ = writeln!(s, "detector.step5 = {}", wb.detector.step5.as_str());
        }
    }
    let _ = writeln!(s, "protocol.enforce_eligibility = {}", wb.protocol.enforce_eligibility);
    s
}

pub fn save_config(path: &Path, cfg: &RunConfiguration) -> Result<()> {
    std::fs::write(path, render_config(cfg)).map_err(|e| Error::io(path, e))
}
