use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::stats::{box_stats, wilcoxon_paired, BoxStats, Wilcoxon};
use super::{run_protocol, RunResult, RunStatus, Workbench};
use crate::control::ControllerKind;
use crate::error::{Error, Result};
use crate::scenario::{generate_patient, ScenarioKind};

/// Controllers compared in every cohort, in output order.
pub const COMPARED: [ControllerKind; 2] = [ControllerKind::Pid, ControllerKind::Mfac];

#[derive(Debug, Clone, PartialEq)]
pub struct CohortOptions {
    pub scenario: ScenarioKind,
    /// Eligible patients wanted.
    pub patients: usize,
    /// First candidate seed; later candidates count up from it.
    pub seed: u64,
    /// Give up after this many candidates per requested patient.
    pub max_attempts_per_patient: usize,
    /// Parameters to perturb; the scenario default when `None`.
    pub significant: Option<Vec<String>>,
    pub threads: Option<usize>,
}

impl CohortOptions {
    pub fn new(scenario: ScenarioKind, patients: usize, seed: u64) -> Self {
        Self { scenario, patients, seed, max_attempts_per_patient: 10, significant: None, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortOutcome {
    pub scenario: ScenarioKind,
    /// Accepted patients' runs, sorted by seed then controller.
    pub runs: Vec<RunResult>,
    /// Candidate seeds rejected for an out-of-range activation LVEDP.
    pub excluded: Vec<(u64, f64)>,
}

impl CohortOutcome {
    pub fn patients(&self) -> usize {
        self.runs.len() / COMPARED.len()
    }

    /// Completed SAE values of one controller, by seed.
    pub fn sae_of(&self, controller: ControllerKind) -> Vec<(u64, f64)> {
        self.runs
            .iter()
            .filter(|r| r.controller == controller && r.is_completed())
            .map(|r| (r.seed, r.sae))
            .collect()
    }

    /// SAE pairs (PID, MFAC) for patients where both runs completed.
    pub fn paired_sae(&self) -> (Vec<f64>, Vec<f64>) {
        let mfac = self.sae_of(ControllerKind::Mfac);
        let mut pid_out = Vec::new();
        let mut mfac_out = Vec::new();
        for (seed, p) in self.sae_of(ControllerKind::Pid) {
            if let Some((_, m)) = mfac.iter().find(|(s, _)| *s == seed) {
                pid_out.push(p);
                mfac_out.push(*m);
            }
        }
        (pid_out, mfac_out)
    }

    pub fn wilcoxon(&self) -> Result<Wilcoxon> {
        let (pid, mfac) = self.paired_sae();
        wilcoxon_paired(&pid, &mfac)
    }

    pub fn box_stats(&self, controller: ControllerKind) -> Option<BoxStats> {
        let v: Vec<f64> = self.sae_of(controller).into_iter().map(|(_, s)| s).collect();
        box_stats(&v)
    }

    pub fn congestion_runs(&self, controller: ControllerKind) -> usize {
        self.runs.iter().filter(|r| r.controller == controller && r.is_completed() && r.safety.congestion).count()
    }

    pub fn suction_runs(&self, controller: ControllerKind) -> usize {
        self.runs.iter().filter(|r| r.controller == controller && r.is_completed() && r.safety.suction).count()
    }
}

pub(super) fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::InvalidParameter { name: "threads".into(), reason: e.to_string() })
}

/// Runs PID and MFAC on the same virtual patients until `patients` eligible
/// ones are found. Runs execute in parallel; results are ordered by seed so
/// the outcome does not depend on scheduling.
pub fn run_cohort(wb: &Workbench, opts: &CohortOptions) -> Result<CohortOutcome> {
    if opts.patients == 0 {
        return Err(Error::Usage("cohort needs at least one patient".into()));
    }
    wb.validate()?;
    let names: Vec<&str> = match &opts.significant {
        Some(v) => v.iter().map(String::as_str).collect(),
        None => opts.scenario.default_significant().to_vec(),
    };
    let pool = pool(opts.threads)?;
    let max_candidates = opts.patients * opts.max_attempts_per_patient.max(1);
    let mut next = 0usize;
    let mut runs = Vec::new();
    let mut excluded = Vec::new();
    let mut accepted = 0usize;

    while accepted < opts.patients && next < max_candidates {
        let batch = (opts.patients - accepted).min(max_candidates - next);
        let seeds: Vec<u64> = (next..next + batch).map(|i| opts.seed.wrapping_add(i as u64)).collect();
        next += batch;
        let jobs: Vec<(u64, ControllerKind)> =
            seeds.iter().flat_map(|&s| COMPARED.iter().map(move |&c| (s, c))).collect();
        let results: Vec<Result<RunResult>> = pool.install(|| {
            jobs.par_iter()
                .map(|&(seed, controller)| {
                    let patient = generate_patient(seed, &names)?;
                    match run_protocol(wb, &patient, Some(opts.scenario), controller, false) {
                        Err(Error::InvalidParameter { name, reason }) => Ok(invalid_patient(seed, opts.scenario, controller, name, reason)),
                        other => other,
                    }
                })
                .collect()
        });
        let results: Vec<RunResult> = results.into_iter().collect::<Result<_>>()?;
        for pair in results.chunks(COMPARED.len()) {
            if pair.iter().any(|r| r.status == RunStatus::Ineligible) {
                excluded.push((pair[0].seed, pair[0].lvedp_at_activation));
            } else {
                accepted += 1;
                runs.extend(pair.iter().cloned());
            }
        }
    }
    Ok(CohortOutcome { scenario: opts.scenario, runs, excluded })
}

/// Patients whose perturbed parameters violate the model's invariants are
/// treated like out-of-range setpoints: excluded and replaced.
fn invalid_patient(seed: u64, scenario: ScenarioKind, controller: ControllerKind, name: String, reason: String) -> RunResult {
    let mut r = RunResult::new(seed, Some(scenario), controller);
    r.status = RunStatus::Ineligible;
    r.message = format!("invalid patient parameter `{name}`: {reason}");
    r
}

/// Shortest representation that parses back to the same value.
fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        v.to_string()
    }
}

pub fn write_runs_csv(path: &Path, cohorts: &[CohortOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "controller",
        "seed",
        "status",
        "lvedp_activation",
        "setpoint",
        "sae",
        "congestion",
        "congestion_s",
        "suction",
        "suction_s",
        "latency_ms",
        "accuracy_mmhg",
        "max_volume_error_ml",
        "speed_min",
        "speed_max",
        "message",
    ])?;
    for c in cohorts {
        for r in &c.runs {
            let (lat, acc) = r.detector.map_or((f64::NAN, f64::NAN), |m| (m.latency_mae_ms, m.accuracy_mean));
            w.write_record([
                c.scenario.as_str().to_string(),
                r.controller.as_str().to_string(),
                r.seed.to_string(),
                r.status.as_str().to_string(),
                num(r.lvedp_at_activation),
                num(r.setpoint),
                num(r.sae),
                r.safety.congestion.to_string(),
                num(r.safety.congestion_duration),
                r.safety.suction.to_string(),
                num(r.safety.suction_duration),
                num(lat),
                num(acc),
                num(r.max_volume_error),
                num(r.speed_min),
                num(r.speed_max),
                r.message.clone(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(path: &Path, cohorts: &[CohortOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "controller",
        "n",
        "mean",
        "std",
        "median",
        "q1",
        "q3",
        "whisker_low",
        "whisker_high",
        "outliers",
        "congestion_runs",
        "suction_runs",
        "excluded",
        "wilcoxon_p",
    ])?;
    for c in cohorts {
        let p = c.wilcoxon().map_or("NaN".to_string(), |w| num(w.p_value));
        for ctrl in COMPARED {
            let mut row = vec![c.scenario.as_str().to_string(), ctrl.as_str().to_string()];
            match c.box_stats(ctrl) {
                Some(b) => row.extend([
                    b.n.to_string(),
                    num(b.mean),
                    num(b.std),
                    num(b.median),
                    num(b.q1),
                    num(b.q3),
                    num(b.whisker_low),
                    num(b.whisker_high),
                    b.outliers.len().to_string(),
                ]),
                None => {
                    row.push("0".into());
                    row.extend(std::iter::repeat_n("absent".to_string(), 8));
                }
            }
            row.extend([
                c.congestion_runs(ctrl).to_string(),
                c.suction_runs(ctrl).to_string(),
                c.excluded.len().to_string(),
                p.clone(),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_boxplot_csv(path: &Path, cohorts: &[CohortOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "controller", "whisker_low", "q1", "median", "q3", "whisker_high", "outliers"])?;
    for c in cohorts {
        for ctrl in COMPARED {
            if let Some(b) = c.box_stats(ctrl) {
                let outliers: Vec<String> = b.outliers.iter().map(|&v| num(v)).collect();
                w.write_record([
                    c.scenario.as_str().to_string(),
                    ctrl.as_str().to_string(),
                    num(b.whisker_low),
                    num(b.q1),
                    num(b.median),
                    num(b.q3),
                    num(b.whisker_high),
                    outliers.join(";"),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_excluded_csv(path: &Path, cohorts: &[CohortOutcome]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut body = String::from("scenario,seed,lvedp_activation\n");
    for c in cohorts {
        for (seed, lvedp) in &c.excluded {
            body.push_str(&format!("{},{},{}\n", c.scenario, seed, num(*lvedp)));
        }
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}
