use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lvad_core::config::{load_config, save_config, RunConfiguration};
use lvad_core::control::ControllerKind;
use lvad_core::detector::{calibrate, write_events_csv, CalibrationGrid, CalibrationTarget};
use lvad_core::harness::detection::write_detection_csv;
use lvad_core::harness::plot::{read_boxplot_csv, render_svg, summary_panels};
use lvad_core::harness::{
    detection_table, pump_sweep, run_compare, run_protocol, CompareOptions, ProtocolConfig, RunStatus, Workbench,
};
use lvad_core::scenario::sensitivity::write_sensitivity_csv;
use lvad_core::scenario::{generate_patient, run_sensitivity, PatientSpec, ScenarioKind};
use lvad_core::{Error, Result};

/// LVAD pump-speed control workbench.
#[derive(Parser)]
#[command(name = "lvadbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One full protocol run; writes trace, events, metadata and a config snapshot.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detector latency and accuracy against noise variance, per scenario.
    DetectEval {
        #[command(flatten)]
        common: Common,
        /// Comma-separated noise variances, mmHg².
        #[arg(long, default_value = "0,1,2,3,4")]
        variances: String,
        /// `all` or a comma-separated list of scenario names.
        #[arg(long, default_value = "all")]
        scenario: String,
        /// Random patients in addition to the nominal one.
        #[arg(long, default_value_t = 0)]
        patients: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "pid")]
        controller: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// ±20 % one-at-a-time sensitivity of PID tracking error.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// PID vs MFAC on a virtual-patient cohort.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long, default_value_t = 20)]
        patients: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Candidates tried per requested patient before giving up.
        #[arg(long, default_value_t = 10)]
        max_attempts: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Three-panel SVG box plot from a `compare` output directory.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<input>/summary.svg`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constant-speed flow and LVEDP of the nominal patient.
    CalibratePump {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1800.0)]
        from: f64,
        #[arg(long, default_value_t = 3000.0)]
        to: f64,
        #[arg(long, default_value_t = 100.0)]
        step: f64,
        #[arg(long, default_value_t = 60.0)]
        settle: f64,
        #[arg(long, default_value_t = 10.0)]
        average: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search of the detector's α and β on the nominal patient.
    CalibrateDetector {
        #[command(flatten)]
        common: Common,
        /// Length of the recorded constant-speed trace, s.
        #[arg(long, default_value_t = 100.0)]
        duration: f64,
        #[arg(long, default_value = "1,1.5,2,3,4,6")]
        alphas: String,
        #[arg(long, default_value = "0.05,0.08,0.1,0.15,0.2,0.3,0.4")]
        betas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration; only its model, detector, controller and protocol
    /// keys are used here.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; falls back to WORKBENCH_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn workbench(&self) -> Result<Workbench> {
        match &self.config {
            Some(p) => Ok(load_config(p)?.workbench),
            None => Ok(Workbench::default()),
        }
    }

    fn threads(&self) -> Result<Option<usize>> {
        if self.threads.is_some() {
            return Ok(self.threads);
        }
        match std::env::var("WORKBENCH_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("WORKBENCH_THREADS must be a positive integer, got `{v}`"))),
            Err(_) => Ok(None),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) => 1,
        Error::ConfigSyntax { .. } | Error::UnknownKey(_) | Error::MissingKey(_) | Error::InvalidParameter { .. } => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("lvadbench: {e}");
            ExitCode::from(code)
        }
    }
}

/// Errors paired with the exit code they map to.
type CliResult = std::result::Result<(), (u8, Error)>;

fn fail(e: Error) -> (u8, Error) {
    (exit_code(&e), e)
}

fn config_fail(e: Error) -> (u8, Error) {
    let code = match e {
        Error::Usage(_) => 1,
        _ => 2,
    };
    (code, e)
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Simulate { config, out } => {
            let mut cfg = load_config(&config).map_err(config_fail)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            simulate(&cfg).map_err(fail)
        }
        Command::DetectEval { common, variances, scenario, patients, seed, controller, out } => {
            let wb = common.workbench().map_err(config_fail)?;
            let threads = common.threads().map_err(fail)?;
            let variances = parse_list(&variances, "variances").map_err(fail)?;
            let scenarios = parse_scenarios(&scenario).map_err(fail)?;
            let controller = ControllerKind::parse(&controller)
                .ok_or_else(|| fail(Error::Usage(format!("unknown controller `{controller}`"))))?;
            detect_eval(&wb, &variances, &scenarios, patients, seed, controller, threads, &out).map_err(fail)
        }
        Command::Sensitivity { common, scenario, out } => {
            let wb = common.workbench().map_err(config_fail)?;
            let threads = common.threads().map_err(fail)?;
            let scenarios = parse_scenarios(&scenario).map_err(fail)?;
            sensitivity(&wb, &scenarios, threads, &out).map_err(fail)
        }
        Command::Compare { common, scenario, patients, seed, max_attempts, out } => {
            let wb = common.workbench().map_err(config_fail)?;
            let threads = common.threads().map_err(fail)?;
            let scenarios = parse_scenarios(&scenario).map_err(fail)?;
            let opts = CompareOptions { scenarios, patients, seed, max_attempts_per_patient: max_attempts, threads };
            compare(&wb, &opts, &out).map_err(fail)
        }
        Command::Report { input, out } => {
            let out = out.unwrap_or_else(|| input.join("summary.svg"));
            report(&input, &out).map_err(fail)
        }
        Command::CalibratePump { common, from, to, step, settle, average, out } => {
            let wb = common.workbench().map_err(config_fail)?;
            calibrate_pump(&wb, from, to, step, settle, average, out.as_deref()).map_err(fail)
        }
        Command::CalibrateDetector { common, duration, alphas, betas, out } => {
            let wb = common.workbench().map_err(config_fail)?;
            let grid = CalibrationGrid {
                alphas: parse_list(&alphas, "alphas").map_err(fail)?,
                betas: parse_list(&betas, "betas").map_err(fail)?,
            };
            calibrate_detector(&wb, duration, &grid, out.as_deref()).map_err(fail)
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Usage(format!("{what}: `{x}` is not a number"))))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Usage(format!("{what}: empty list")));
    }
    Ok(v)
}

fn parse_scenarios(s: &str) -> Result<Vec<ScenarioKind>> {
    if s == "all" {
        return Ok(ScenarioKind::ALL.to_vec());
    }
    s.split(',')
        .map(|x| {
            ScenarioKind::parse(x.trim()).ok_or_else(|| {
                let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::Usage(format!("unknown scenario `{x}` (expected all or {})", names.join(", ")))
            })
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Seed 0 is the nominal patient; other seeds draw a patient over the
/// scenario's significant parameters.
fn patient_for(seed: u64, scenario: Option<ScenarioKind>) -> Result<PatientSpec> {
    match scenario {
        Some(s) if seed != 0 => generate_patient(seed, s.default_significant()),
        _ => Ok(PatientSpec { seed, factors: Vec::new() }),
    }
}

fn simulate(cfg: &RunConfiguration) -> Result<()> {
    let patient = patient_for(cfg.seed, cfg.scenario)?;
    let r = run_protocol(&cfg.workbench, &patient, cfg.scenario, cfg.controller, true)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let rec = r.record.as_ref().expect("recorded run");
    rec.trace.write_csv(&dir.join("trace.csv"))?;
    write_events_csv(&dir.join("events.csv"), &rec.events)?;
    save_config(&dir.join("config.txt"), cfg)?;

    let mut meta = String::new();
    let mut kv = |k: &str, v: String| {
        meta.push_str(k);
        meta.push_str(" = ");
        meta.push_str(&v);
        meta.push('\n');
    };
    kv("status", r.status.as_str().into());
    kv("message", r.message.clone());
    kv("controller", r.controller.to_string());
    kv("scenario", cfg.scenario.map_or("none".into(), |s| s.to_string()));
    kv("seed", r.seed.to_string());
    for (name, f) in &patient.factors {
        kv(&format!("patient.{name}"), f.to_string());
    }
    kv("lvedp_at_activation", r.lvedp_at_activation.to_string());
    kv("setpoint", r.setpoint.to_string());
    kv("sae", r.sae.to_string());
    kv("congestion", r.safety.congestion.to_string());
    kv("congestion_s", r.safety.congestion_duration.to_string());
    kv("suction", r.safety.suction.to_string());
    kv("suction_s", r.safety.suction_duration.to_string());
    kv("speed_min", r.speed_min.to_string());
    kv("speed_max", r.speed_max.to_string());
    kv("max_volume_error_ml", r.max_volume_error.to_string());
    if let Some(m) = r.detector {
        kv("detector.cycles", m.matched.to_string());
        kv("detector.latency_ms", m.latency_mae_ms.to_string());
        kv("detector.accuracy_mmhg", m.accuracy_mean.to_string());
    }
    let path = dir.join("metadata.txt");
    std::fs::write(&path, meta).map_err(|e| Error::io(&path, e))?;

    println!(
        "{}: {} rows, {} beats detected, SAE {:.1} mmHg -> {}",
        r.status.as_str(),
        rec.trace.len(),
        rec.events.len(),
        r.sae,
        dir.display()
    );
    if r.status == RunStatus::Failed {
        return Err(Error::NonFinite { t: f64::NAN, what: "simulation failed; see metadata.txt" });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn detect_eval(
    wb: &Workbench,
    variances: &[f64],
    scenarios: &[ScenarioKind],
    patients: usize,
    seed: u64,
    controller: ControllerKind,
    threads: Option<usize>,
    out: &Path,
) -> Result<()> {
    let mut rows = Vec::new();
    for &sc in scenarios {
        let mut specs = vec![PatientSpec::nominal()];
        for i in 0..patients {
            specs.push(generate_patient(seed.wrapping_add(i as u64), sc.default_significant())?);
        }
        rows.extend(detection_table(wb, &[Some(sc)], variances, &specs, controller, threads)?);
    }
    create_dir(out)?;
    write_detection_csv(&out.join("detection.csv"), &rows)?;
    println!("{:<10} {:>5} {:>7} {:>5} {:>16} {:>16}", "scenario", "var", "SNR dB", "fail", "latency ms", "accuracy mmHg");
    for r in &rows {
        println!(
            "{:<10} {:>5} {:>7.1} {:>5} {:>7.1} ± {:<6.1} {:>7.2} ± {:<6.2}",
            r.scenario.map_or("none", ScenarioKind::as_str),
            r.variance,
            r.snr_db,
            r.failures,
            r.latency_mean_ms,
            r.latency_std_ms,
            r.accuracy_mean,
            r.accuracy_std
        );
    }
    Ok(())
}

fn sensitivity(wb: &Workbench, scenarios: &[ScenarioKind], threads: Option<usize>, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut sets = csv::Writer::from_path(out.join("significant_sets.csv"))?;
    sets.write_record(["scenario", "computed", "default", "vtotal_significant"])?;
    for &sc in scenarios {
        let rows = run_sensitivity(wb, sc, threads)?;
        write_sensitivity_csv(&out.join(format!("sensitivity_{sc}.csv")), &rows)?;
        let computed: Vec<&str> = rows.iter().filter(|r| r.significant).map(|r| r.parameter.as_str()).collect();
        let failed = rows.iter().filter(|r| r.error.is_some()).count();
        let has_vtotal = computed.contains(&"Vtotal");
        println!(
            "{sc}: {} significant [{}]{}{}",
            computed.len(),
            computed.join(" "),
            if failed > 0 { format!(", {failed} perturbations failed") } else { String::new() },
            if has_vtotal { "" } else { "  (Vtotal not significant)" }
        );
        sets.write_record([
            sc.as_str().to_string(),
            computed.join(";"),
            sc.default_significant().join(";"),
            has_vtotal.to_string(),
        ])?;
    }
    sets.flush().map_err(|e| Error::io(out, e))
}

fn compare(wb: &Workbench, opts: &CompareOptions, out: &Path) -> Result<()> {
    let cohorts = run_compare(wb, opts, out)?;
    for c in &cohorts {
        let sc = c.scenario;
        let mean = |k| c.box_stats(k).map_or(f64::NAN, |b| b.mean);
        let p = c.wilcoxon().map_or(f64::NAN, |w| w.p_value);
        println!(
            "{sc}: {} patients ({} excluded)  PID {:.0}  MFAC {:.0}  p = {:.3e}  congestion runs PID {} MFAC {}",
            c.patients(),
            c.excluded.len(),
            mean(ControllerKind::Pid),
            mean(ControllerKind::Mfac),
            p,
            c.congestion_runs(ControllerKind::Pid),
            c.congestion_runs(ControllerKind::Mfac),
        );
        if c.patients() < opts.patients {
            eprintln!("warning: {sc}: only {} of {} eligible patients found", c.patients(), opts.patients);
        }
    }
    Ok(())
}

fn report(input: &Path, out: &Path) -> Result<()> {
    let rows = read_boxplot_csv(&input.join("boxplot.csv"))?;
    if rows.is_empty() {
        return Err(Error::Usage(format!("{} holds no box-plot rows", input.display())));
    }
    let svg = render_svg(&summary_panels(&rows));
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn calibrate_pump(
    wb: &Workbench,
    from: f64,
    to: f64,
    step: f64,
    settle: f64,
    average: f64,
    out: Option<&Path>,
) -> Result<()> {
    if !(step > 0.0 && from <= to) {
        return Err(Error::Usage("need step > 0 and from <= to".into()));
    }
    let n = ((to - from) / step).floor() as usize;
    let speeds: Vec<f64> = (0..=n).map(|i| from + i as f64 * step).collect();
    let pts = pump_sweep(wb, &speeds, settle, average)?;
    println!("{:>6} {:>10} {:>10} {:>8}", "rpm", "flow mL/s", "LVEDP", "MAP");
    for p in &pts {
        println!("{:>6.0} {:>10.2} {:>10.2} {:>8.1}", p.speed, p.flow, p.lvedp, p.map);
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["speed", "flow_ml_s", "lvedp", "map"])?;
        for p in &pts {
            w.write_record([p.speed.to_string(), p.flow.to_string(), p.lvedp.to_string(), p.map.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn calibrate_detector(wb: &Workbench, duration: f64, grid: &CalibrationGrid, out: Option<&Path>) -> Result<()> {
    // Constant speed throughout: the protocol switches on after `duration`.
    let mut wb = wb.clone();
    wb.protocol = ProtocolConfig {
        controller_on: duration,
        scenario_onset: duration + 1.0,
        run_end: duration + 2.0,
        enforce_eligibility: false,
        noise_variance: 0.0,
        ..wb.protocol
    };
    let r = run_protocol(&wb, &PatientSpec::nominal(), None, ControllerKind::None, true)?;
    let mut trace = r.record.expect("recorded run").trace;
    trace = trace.window(trace.t[0], duration);
    let pts = calibrate(&trace, &wb.detector, grid, &CalibrationTarget::default())?;
    println!("{:>6} {:>6} {:>10} {:>10} {:>8}  note", "alpha", "beta", "latency", "accuracy", "cost");
    for p in &pts {
        println!(
            "{:>6} {:>6} {:>10.1} {:>10.3} {:>8.3}  {}",
            p.alpha,
            p.beta,
            p.noisy_latency_ms,
            p.noisy_accuracy,
            p.cost,
            p.error.as_deref().unwrap_or("")
        );
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["alpha", "beta", "latency_ms", "accuracy_mmhg", "cost", "error"])?;
        for p in &pts {
            w.write_record([
                p.alpha.to_string(),
                p.beta.to_string(),
                p.noisy_latency_ms.to_string(),
                p.noisy_accuracy.to_string(),
                p.cost.to_string(),
                p.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    match pts.first().filter(|p| p.cost.is_finite()) {
        Some(best) => {
            println!("best: detector.alpha = {}  detector.beta = {}", best.alpha, best.beta);
            Ok(())
        }
        None => Err(Error::InvalidParameter { name: "detector grid".into(), reason: "no point detected every beat".into() }),
    }
}
