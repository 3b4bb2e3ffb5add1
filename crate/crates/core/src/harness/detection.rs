//! Detector accuracy and latency against measurement noise, replayed on
//! recorded closed-loop pressure traces.

use std::path::Path;

use rayon::prelude::*;

use super::{noise_seed, run_protocol, RunStatus, Workbench};
use crate::control::ControllerKind;
use crate::detector::{add_noise, detect, evaluate, snr_db, DetectorMetrics};
use crate::error::{Error, Result};
use crate::scenario::{PatientSpec, ScenarioKind};
use crate::trace::true_lvedp;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub scenario: Option<ScenarioKind>,
    pub variance: f64,
    /// Mean over runs; NaN without noise.
    pub snr_db: f64,
    /// Runs that produced metrics.
    pub runs: usize,
    /// Runs whose simulation failed or whose detections did not match the
    /// true cycles.
    pub failures: usize,
    pub cycles: usize,
    pub latency_mean_ms: f64,
    pub latency_std_ms: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

/// Combines per-run (n, mean, sample std) into pooled per-cycle statistics.
pub fn pool_mean_std(groups: &[(usize, f64, f64)]) -> (f64, f64) {
    let n: usize = groups.iter().map(|g| g.0).sum();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = groups.iter().map(|&(k, m, _)| k as f64 * m).sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = groups
        .iter()
        .map(|&(k, m, s)| (k.saturating_sub(1)) as f64 * s * s + k as f64 * (m - mean).powi(2))
        .sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// For each patient × scenario, records one noise-free run under `controller`
/// (eligibility not enforced), then replays the detector on the pressure
/// trace with white noise of each variance added. The same unit-normal draws
/// are reused across variances. Scoring covers `[controller_on, run_end − 1)`.
pub fn detection_table(
    wb: &Workbench,
    scenarios: &[Option<ScenarioKind>],
    variances: &[f64],
    patients: &[PatientSpec],
    controller: ControllerKind,
    threads: Option<usize>,
) -> Result<Vec<DetectionRow>> {
    if patients.is_empty() || scenarios.is_empty() || variances.is_empty() {
        return Err(Error::Usage("detection table needs patients, scenarios and variances".into()));
    }
    let mut wb = wb.clone();
    wb.protocol.enforce_eligibility = false;
    wb.protocol.noise_variance = 0.0;
    wb.validate()?;
    let pool = super::cohort::pool(threads)?;
    let window = (wb.protocol.controller_on, wb.protocol.run_end - 1.0);

    let jobs: Vec<(usize, &PatientSpec)> =
        (0..scenarios.len()).flat_map(|s| patients.iter().map(move |p| (s, p))).collect();
    // Per job: one entry per variance, `None` when the run or match failed.
    let results: Vec<Vec<Option<(DetectorMetrics, f64)>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, patient)| -> Result<Vec<Option<(DetectorMetrics, f64)>>> {
                let r = run_protocol(&wb, patient, scenarios[si], controller, true)?;
                if r.status != RunStatus::Completed {
                    return Ok(vec![None; variances.len()]);
                }
                let trace = r.record.expect("recorded run").trace;
                let truth: Vec<_> =
                    true_lvedp(&trace)?.into_iter().filter(|&(t, _)| (window.0..window.1).contains(&t)).collect();
                let seed = noise_seed(patient.seed) ^ si as u64;
                let lo = trace.t.partition_point(|&t| t < window.0);
                let hi = trace.t.partition_point(|&t| t < window.1);
                variances
                    .iter()
                    .map(|&var| {
                        let x = add_noise(&trace.plv, var, seed)?;
                        let events = detect(&x, trace.t[0], &wb.detector)?;
                        Ok(evaluate(&events, &truth).ok().map(|m| (m, snr_db(&trace.plv[lo..hi], var))))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    for (si, &scenario) in scenarios.iter().enumerate() {
        for (vi, &variance) in variances.iter().enumerate() {
            let cell: Vec<_> = jobs
                .iter()
                .zip(&results)
                .filter(|((s, _), _)| *s == si)
                .map(|(_, r)| r[vi])
                .collect();
            let ok: Vec<_> = cell.iter().flatten().collect();
            let (latency_mean_ms, latency_std_ms) =
                pool_mean_std(&ok.iter().map(|(m, _)| (m.matched, m.latency_mae_ms, m.latency_std_ms)).collect::<Vec<_>>());
            let (accuracy_mean, accuracy_std) =
                pool_mean_std(&ok.iter().map(|(m, _)| (m.matched, m.accuracy_mean, m.accuracy_std)).collect::<Vec<_>>());
            let snr = if ok.is_empty() { f64::NAN } else { ok.iter().map(|(_, s)| s).sum::<f64>() / ok.len() as f64 };
            rows.push(DetectionRow {
                scenario,
                variance,
                snr_db: snr,
                runs: ok.len(),
                failures: cell.len() - ok.len(),
                cycles: ok.iter().map(|(m, _)| m.matched).sum(),
                latency_mean_ms,
                latency_std_ms,
                accuracy_mean,
                accuracy_std,
            });
        }
    }
    Ok(rows)
}

pub fn write_detection_csv(path: &Path, rows: &[DetectionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "variance",
        "snr_db",
        "runs",
        "failures",
        "cycles",
        "latency_mean_ms",
        "latency_std_ms",
        "accuracy_mean",
        "accuracy_std",
    ])?;
    for r in rows {
        w.write_record([
            r.scenario.map_or("none", ScenarioKind::as_str).to_string(),
            r.variance.to_string(),
            r.snr_db.to_string(),
            r.runs.to_string(),
            r.failures.to_string(),
            r.cycles.to_string(),
            r.latency_mean_ms.to_string(),
            r.latency_std_ms.to_string(),
            r.accuracy_mean.to_string(),
            r.accuracy_std.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
