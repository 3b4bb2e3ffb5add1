//! Uniformly sampled waveform record and its CSV form.

use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 9] = ["t", "Plv", "Pla", "Pao", "Vlv", "Qpump", "speed", "activation", "lvedp_true"];

/// One row per sample. `lvedp_true` holds the most recent ground-truth LVEDP
/// (NaN before the first beat).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveformTrace {
    pub fs: f64,
    pub t: Vec<f64>,
    pub plv: Vec<f64>,
    pub pla: Vec<f64>,
    pub pao: Vec<f64>,
    pub vlv: Vec<f64>,
    pub qpump: Vec<f64>,
    pub speed: Vec<f64>,
    pub activation: Vec<f64>,
    pub lvedp_true: Vec<f64>,
}

/// One sample, in header order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub plv: f64,
    pub pla: f64,
    pub pao: f64,
    pub vlv: f64,
    pub qpump: f64,
    pub speed: f64,
    pub activation: f64,
    pub lvedp_true: f64,
}

impl WaveformTrace {
    pub fn new(fs: f64) -> Self {
        Self { fs, ..Default::default() }
    }

    pub fn with_capacity(fs: f64, n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            fs,
            t: v(),
            plv: v(),
            pla: v(),
            pao: v(),
            vlv: v(),
            qpump: v(),
            speed: v(),
            activation: v(),
            lvedp_true: v(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, r: TraceRow) {
        self.t.push(r.t);
        self.plv.push(r.plv);
        self.pla.push(r.pla);
        self.pao.push(r.pao);
        self.vlv.push(r.vlv);
        self.qpump.push(r.qpump);
        self.speed.push(r.speed);
        self.activation.push(r.activation);
        self.lvedp_true.push(r.lvedp_true);
    }

    pub fn row(&self, i: usize) -> TraceRow {
        TraceRow {
            t: self.t[i],
            plv: self.plv[i],
            pla: self.pla[i],
            pao: self.pao[i],
            vlv: self.vlv[i],
            qpump: self.qpump[i],
            speed: self.speed[i],
            activation: self.activation[i],
            lvedp_true: self.lvedp_true[i],
        }
    }

    /// Samples with `t` in `[start, end)`.
    pub fn window(&self, start: f64, end: f64) -> WaveformTrace {
        let mut out = WaveformTrace::new(self.fs);
        for i in 0..self.len() {
            if self.t[i] >= start && self.t[i] < end {
                out.push(self.row(i));
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(TRACE_HEADER)?;
        for i in 0..self.len() {
            let r = self.row(i);
            let fields = [r.t, r.plv, r.pla, r.pao, r.vlv, r.qpump, r.speed, r.activation, r.lvedp_true];
            w.write_record(fields.iter().map(|v| v.to_string()))?;
        }
        Ok(())
    }

    /// Reads a trace written by [`write_csv`](Self::write_csv). The sample
    /// rate is inferred from the first two time stamps.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(Error::ConfigSyntax {
                line: 1,
                message: format!("expected trace header {}", TRACE_HEADER.join(",")),
            });
        }
        let mut trace = WaveformTrace::new(0.0);
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut vals = [0.0; 9];
            for (slot, field) in vals.iter_mut().zip(rec.iter()) {
                *slot = field.trim().parse().map_err(|_| Error::ConfigSyntax {
                    line: line + 2,
                    message: format!("not a number: `{field}`"),
                })?;
            }
            trace.push(TraceRow {
                t: vals[0],
                plv: vals[1],
                pla: vals[2],
                pao: vals[3],
                vlv: vals[4],
                qpump: vals[5],
                speed: vals[6],
                activation: vals[7],
                lvedp_true: vals[8],
            });
        }
        if trace.len() >= 2 {
            trace.fs = 1.0 / (trace.t[1] - trace.t[0]);
        }
        Ok(trace)
    }
}

/// Ground-truth LVEDP per cycle: LVP at the last sample with zero
/// ventricular activation before activation rises.
pub fn true_lvedp(trace: &WaveformTrace) -> Result<Vec<(f64, f64)>> {
    let a = &trace.activation;
    let events: Vec<(f64, f64)> = (1..a.len())
        .filter(|&i| a[i - 1] <= 0.0 && a[i] > 0.0)
        .map(|i| (trace.t[i - 1], trace.plv[i - 1]))
        .collect();
    if events.is_empty() {
        return Err(Error::TraceTooShort(format!(
            "no activation onset in {} samples",
            trace.len()
        )));
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(onsets: &[f64], plv: impl Fn(f64) -> f64) -> WaveformTrace {
        let mut tr = WaveformTrace::new(200.0);
        for i in 0..400 {
            let t = i as f64 / 200.0;
            let active = onsets.iter().any(|&o| t > o + 1e-9 && t < o + 0.3);
            tr.push(TraceRow {
                t,
                plv: plv(t),
                activation: if active { 0.5 } else { 0.0 },
                ..Default::default()
            });
        }
        tr
    }

    #[test]
    fn onset_location() {
        let tr = synthetic(&[0.3], |t| t);
        let ev = true_lvedp(&tr).unwrap();
        assert_eq!(ev.len(), 1);
        assert!((ev[0].0 - 0.3).abs() <= 1.0 / 200.0 + 1e-12);
        assert!((ev[0].1 - ev[0].0).abs() < 1e-12);
    }

    #[test]
    fn constant_pressure() {
        let tr = synthetic(&[0.3, 1.3], |_| 7.25);
        let ev = true_lvedp(&tr).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|&(_, v)| v == 7.25));
    }

    #[test]
    fn too_short() {
        let tr = synthetic(&[], |_| 1.0);
        assert!(matches!(true_lvedp(&tr), Err(Error::TraceTooShort(_))));
    }

    #[test]
    fn csv_round_trip() {
        let tr = synthetic(&[0.3], |t| (t * 7.0).sin() * 13.0 + 1.0 / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        tr.write_csv(&path).unwrap();
        let back = WaveformTrace::read_csv(&path).unwrap();
        assert_eq!(back.plv, tr.plv);
        assert!((back.fs - 200.0).abs() < 1e-6);
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("t,Plv,Pla,Pao,Vlv,Qpump,speed,activation,lvedp_true\n"));
    }
}
