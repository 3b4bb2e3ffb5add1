//! The `compare` pipeline: one PID/MFAC cohort per scenario plus every
//! output file, so that the CLI and tests run identical code.

use std::path::Path;

use super::cohort::{write_boxplot_csv, write_excluded_csv, write_runs_csv, write_summary_csv, COMPARED};
use super::plot::{render_svg, BoxSummary, Panel};
use super::{run_cohort, CohortOptions, CohortOutcome, Workbench};
use crate::error::{Error, Result};
use crate::scenario::ScenarioKind;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub scenarios: Vec<ScenarioKind>,
    pub patients: usize,
    pub seed: u64,
    pub max_attempts_per_patient: usize,
    pub threads: Option<usize>,
}

impl CompareOptions {
    pub fn new(scenarios: Vec<ScenarioKind>, patients: usize, seed: u64) -> Self {
        Self { scenarios, patients, seed, max_attempts_per_patient: 10, threads: None }
    }
}

/// Runs the cohorts and writes `runs.csv`, `summary.csv`, `boxplot.csv`,
/// `excluded.csv` and `boxplot_<scenario>.svg` into `out`.
pub fn run_compare(wb: &Workbench, opts: &CompareOptions, out: &Path) -> Result<Vec<CohortOutcome>> {
    if opts.scenarios.is_empty() {
        return Err(Error::Usage("compare needs at least one scenario".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut cohorts = Vec::with_capacity(opts.scenarios.len());
    for &sc in &opts.scenarios {
        let mut co = CohortOptions::new(sc, opts.patients, opts.seed);
        co.max_attempts_per_patient = opts.max_attempts_per_patient;
        co.threads = opts.threads;
        let c = run_cohort(wb, &co)?;
        let boxes: Vec<BoxSummary> = COMPARED
            .iter()
            .filter_map(|&k| c.box_stats(k).map(|b| BoxSummary::from_stats(format!("{} {sc}", k.as_str().to_uppercase()), &b)))
            .collect();
        let svg = render_svg(&[Panel { title: sc.label().to_string(), boxes }]);
        let path = out.join(format!("boxplot_{sc}.svg"));
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        cohorts.push(c);
    }
    write_runs_csv(&out.join("runs.csv"), &cohorts)?;
    write_summary_csv(&out.join("summary.csv"), &cohorts)?;
    write_boxplot_csv(&out.join("boxplot.csv"), &cohorts)?;
    write_excluded_csv(&out.join("excluded.csv"), &cohorts)?;
    Ok(cohorts)
}
