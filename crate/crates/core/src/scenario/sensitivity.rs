//! One-at-a-time local sensitivity of PID tracking error to each circulation
//! parameter.

use std::path::Path;

use rayon::prelude::*;

use super::{PatientSpec, ScenarioKind};
use crate::control::ControllerKind;
use crate::error::{Error, Result};
use crate::harness::{run_protocol, RunStatus, Workbench};
use crate::params::CvsParameters;

/// A parameter is significant when `|S+| + |S−|` reaches this.
pub const SIGNIFICANCE_THRESHOLD: f64 = 0.45;
/// Relative perturbation applied in each direction.
pub const PERTURBATION: f64 = 0.2;

/// Normalised sensitivity `(θ/F0)·(ΔF/Δθ)`.
pub fn sensitivity_coefficient(f0: f64, f_perturbed: f64, theta: f64, delta_theta: f64) -> Result<f64> {
    if f0 == 0.0 {
        return Err(Error::DivisionByZero("sensitivity: F0 = 0"));
    }
    if delta_theta == 0.0 {
        return Err(Error::DivisionByZero("sensitivity: zero perturbation"));
    }
    Ok(theta / f0 * (f_perturbed - f0) / delta_theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub parameter: String,
    pub s_plus: f64,
    pub s_minus: f64,
    pub significant: bool,
    /// Why a coefficient is missing (failed or invalid perturbed run).
    pub error: Option<String>,
}

/// PID SAE of one run with eligibility not enforced.
fn objective(wb: &Workbench, scenario: ScenarioKind, patient: &PatientSpec) -> std::result::Result<f64, String> {
    let r = run_protocol(wb, patient, Some(scenario), ControllerKind::Pid, false).map_err(|e| e.to_string())?;
    match r.status {
        RunStatus::Completed if r.sae.is_finite() => Ok(r.sae),
        RunStatus::Completed => Err("LVEDP never detected after activation".into()),
        _ => Err(r.message),
    }
}

/// Perturbs each of the 43 table parameters by ±20 % and reports the
/// normalised change of PID SAE for `scenario`.
pub fn run_sensitivity(wb: &Workbench, scenario: ScenarioKind, threads: Option<usize>) -> Result<Vec<SensitivityRow>> {
    let mut wb = wb.clone();
    wb.protocol.enforce_eligibility = false;
    wb.validate()?;
    let names: Vec<&'static str> = CvsParameters::table_names().collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidParameter { name: "threads".into(), reason: e.to_string() })?;

    let f0 = objective(&wb, scenario, &PatientSpec::nominal())
        .map_err(|m| Error::InvalidParameter { name: "nominal run".into(), reason: m })?;

    let jobs: Vec<(&str, f64)> =
        names.iter().flat_map(|&n| [(n, 1.0 + PERTURBATION), (n, 1.0 - PERTURBATION)]).collect();
    let values: Vec<std::result::Result<f64, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(name, f)| {
                let p = PatientSpec { seed: 0, factors: vec![(name.to_string(), f)] };
                objective(&wb, scenario, &p)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(names.len());
    for (i, &name) in names.iter().enumerate() {
        let theta = wb.cvs.get(name).expect("table names are model parameters");
        let coef = |v: &std::result::Result<f64, String>, sign: f64| -> std::result::Result<f64, String> {
            let fp = v.clone()?;
            sensitivity_coefficient(f0, fp, theta, sign * PERTURBATION * theta).map_err(|e| e.to_string())
        };
        let plus = coef(&values[2 * i], 1.0);
        let minus = coef(&values[2 * i + 1], -1.0);
        let error = match (&plus, &minus) {
            (Err(a), _) => Some(format!("+20%: {a}")),
            (_, Err(b)) => Some(format!("-20%: {b}")),
            _ => None,
        };
        let s_plus = plus.unwrap_or(f64::NAN);
        let s_minus = minus.unwrap_or(f64::NAN);
        rows.push(SensitivityRow {
            parameter: name.to_string(),
            s_plus,
            s_minus,
            significant: s_plus.abs() + s_minus.abs() >= SIGNIFICANCE_THRESHOLD,
            error,
        });
    }
    Ok(rows)
}

pub fn write_sensitivity_csv(path: &Path, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "S_plus", "S_minus", "significant", "error"])?;
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            r.s_plus.to_string(),
            r.s_minus.to_string(),
            r.significant.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
