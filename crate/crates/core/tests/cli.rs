use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lvadbench");

/// 30 s protocol: control from 15 s, scenario from 20 s.
const SHORT: &str = "protocol.controller_on = 15\nprotocol.scenario_onset = 20\nprotocol.run_end = 30\n";

fn lvadbench(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("WORKBENCH_THREADS").output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn simulate_writes_trace_events_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), &format!("controller = mfac\nscenario = exercise\nseed = 0\n{SHORT}"));
    let o = lvadbench(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "t,Plv,Pla,Pao,Vlv,Qpump,speed,activation,lvedp_true");
    assert_eq!(lines.count(), 30 * 200);
    let events = fs::read_to_string(out.join("events.csv")).unwrap();
    assert!(events.starts_with("cycle,detection_t,actual_t,value\n"));
    assert!(events.lines().count() > 20);

    // The snapshot is itself a valid config that reproduces the run.
    let again = dir.path().join("again");
    let snap = out.join("config.txt");
    let o = lvadbench(&["simulate", "--config", snap.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(out.join("trace.csv")).unwrap(), fs::read(again.join("trace.csv")).unwrap());
    let meta = fs::read_to_string(out.join("metadata.txt")).unwrap();
    assert!(meta.contains("status = completed"), "{meta}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for body in [
        "controller = pid\nseed = 1\n",                              // missing scenario
        "controller = pid\nscenario = none\nseed = 1\nbogus = 3\n",  // unknown key
        "controller = pid\nscenario = none\nseed = 1\nseed = 2\n",   // duplicate
        "controller = pid\nscenario = none\nseed = 1\ncvs.Rsa = -1\n", // invalid value
    ] {
        let cfg = write_config(dir.path(), body);
        let o = lvadbench(&["simulate", "--config", &cfg, "--out", out]);
        assert_eq!(code(&o), 2, "{body}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = lvadbench(&["simulate", "--config", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&lvadbench(&[])), 1);
    assert_eq!(code(&lvadbench(&["compare"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let o = lvadbench(&["compare", "--scenario", "nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let o = Command::new(BIN)
        .args(["compare", "--out", dir.path().to_str().unwrap()])
        .env("WORKBENCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert_eq!(code(&lvadbench(&["--version"])), 0);
}

#[test]
fn compare_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("controller = pid\nscenario = none\nseed = 1\n{SHORT}"));
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = lvadbench(&[
            "compare", "--config", &cfg, "--scenario", "exercise,rpa-up", "--patients", "2", "--seed", "7",
            "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "2");
    for f in ["runs.csv", "summary.csv", "boxplot.csv", "excluded.csv", "boxplot_exercise.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = lvadbench(&["report", "--input", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(a.join("summary.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("Exercise"));
}

#[test]
fn report_without_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = lvadbench(&["report", "--input", dir.path().to_str().unwrap()]);
    assert_ne!(code(&o), 0);
}

#[test]
fn detect_eval_and_calibration_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("controller = pid\nscenario = none\nseed = 1\n{SHORT}"));
    let out = dir.path().join("det");
    let o = lvadbench(&[
        "detect-eval", "--config", &cfg, "--scenario", "rpa-down", "--variances", "0,4", "--threads", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("detection.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let pump = dir.path().join("pump.csv");
    let o = lvadbench(&[
        "calibrate-pump", "--from", "2300", "--to", "2500", "--step", "100", "--settle", "5", "--average", "3",
        "--out", pump.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&pump).unwrap().lines().count(), 4);

    let o = lvadbench(&["calibrate-detector", "--duration", "20", "--alphas", "3", "--betas", "0.08,0.2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
