//! Real-time LVEDP detection on a sampled left-ventricular pressure stream.

pub mod calibrate;
pub mod filter;
pub mod stream;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
pub use filter::{butterworth_order, Biquad, SosFilter};
pub use calibrate::{calibrate, CalibrationGrid, CalibrationPoint, CalibrationTarget};
pub use stream::{detect, LvedpDetector};

/// Left-hand side of the candidate test `x ≥ α·MSFLVP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step5Signal {
    /// Slope of the filtered pressure (default).
    Slope,
    /// Filtered pressure itself.
    Pressure,
}

impl Step5Signal {
    pub fn as_str(self) -> &'static str {
        match self {
            Step5Signal::Slope => "sflvp",
            Step5Signal::Pressure => "flvp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sflvp" => Some(Self::Slope),
            "flvp" => Some(Self::Pressure),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub fs: f64,
    pub pass_freq: f64,
    pub stop_freq: f64,
    /// Maximum attenuation at `pass_freq`, dB.
    pub pass_db: f64,
    /// Minimum attenuation at `stop_freq`, dB.
    pub stop_db: f64,
    /// Samples in the MSFLVP rolling mean.
    pub window: usize,
    /// SFLVP values averaged for the adaptive threshold.
    pub top_k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub step5: Step5Signal,
    /// Beat peaks must exceed this fraction of the running SFLVP maximum.
    pub peak_fraction: f64,
    /// Minimum spacing of beat peaks, s.
    pub peak_refractory: f64,
    /// Half-life of the running maximum, s.
    pub max_half_life: f64,
    /// Dead time after a detection, as a fraction of the beat period.
    pub refractory_fraction: f64,
    /// Furthest look-back for the actual time, as a fraction of the period.
    pub lookback_fraction: f64,
    /// Retained history, s. Caps the look-back.
    pub max_lookback: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            fs: 200.0,
            pass_freq: 5.0,
            stop_freq: 20.0,
            pass_db: 3.0,
            stop_db: 20.0,
            window: 10,
            top_k: 15,
            alpha: 3.0,
            beta: 0.08,
            step5: Step5Signal::Slope,
            peak_fraction: 0.5,
            peak_refractory: 0.25,
            max_half_life: 5.0,
            refractory_fraction: 0.5,
            lookback_fraction: 0.5,
            max_lookback: 2.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: String| {
            Err(Error::InvalidParameter { name: format!("detector.{name}"), reason })
        };
        if !(self.fs > 0.0) {
            return bad("fs", "must be > 0".into());
        }
        if !(self.pass_freq > 0.0 && self.pass_freq < self.stop_freq && self.stop_freq < self.fs / 2.0) {
            return bad("pass_freq", "need 0 < pass_freq < stop_freq < fs/2".into());
        }
        if !(self.alpha > 0.0) {
            return bad("alpha", format!("must be > 0 (got {})", self.alpha));
        }
        if !(self.beta > 0.0) {
            return bad("beta", format!("must be > 0 (got {})", self.beta));
        }
        if self.window == 0 || self.top_k == 0 {
            return bad("window", "window and top_k must be >= 1".into());
        }
        if !(self.peak_fraction > 0.0 && self.peak_fraction < 1.0) {
            return bad("peak_fraction", "must lie in (0, 1)".into());
        }
        if !(self.peak_refractory > 0.0 && self.max_half_life > 0.0 && self.refractory_fraction > 0.0) {
            return bad("peak_refractory", "timing constants must be > 0".into());
        }
        if !(self.lookback_fraction > 0.0 && self.max_lookback > 0.0) {
            return bad("lookback_fraction", "must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvedpEvent {
    pub cycle_index: usize,
    pub detection_time: f64,
    pub actual_time: f64,
    pub value: f64,
}

impl LvedpEvent {
    pub fn latency(&self) -> f64 {
        self.detection_time - self.actual_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorMetrics {
    pub matched: usize,
    pub dropped: usize,
    pub spurious: usize,
    /// Mean absolute latency, ms.
    pub latency_mae_ms: f64,
    pub latency_std_ms: f64,
    /// Mean and std of |value − true LVEDP|, mmHg.
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pairs each true cycle `(time, lvedp)` with the detection whose actual time
/// is closest, within 0.4 of the median cycle length. Fails when dropped plus
/// spurious detections exceed 5% of the true cycles. Events further than that
/// tolerance outside the span of `truth` are ignored, so a caller scoring a
/// window only needs to restrict `truth`.
pub fn evaluate(events: &[LvedpEvent], truth: &[(f64, f64)]) -> Result<DetectorMetrics> {
    if truth.is_empty() {
        return Err(Error::NotEnoughSamples("no true cycles to evaluate against".into()));
    }
    let mut gaps: Vec<f64> = truth.windows(2).map(|w| w[1].0 - w[0].0).collect();
    gaps.sort_by(f64::total_cmp);
    let tol = 0.4 * gaps.get(gaps.len() / 2).copied().unwrap_or(1.0);

    let (first, last) = (truth[0].0, truth[truth.len() - 1].0);
    let events: Vec<LvedpEvent> =
        events.iter().copied().filter(|e| (first - tol..=last + tol).contains(&e.actual_time)).collect();
    let mut used = vec![false; events.len()];
    let mut latencies = Vec::with_capacity(truth.len());
    let mut errors = Vec::with_capacity(truth.len());
    let mut start = 0;
    for &(t, v) in truth {
        while start < events.len() && events[start].actual_time < t - tol {
            start += 1;
        }
        let best = (start..events.len())
            .take_while(|&j| events[j].actual_time <= t + tol)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (events[a].actual_time - t).abs().total_cmp(&(events[b].actual_time - t).abs()));
        if let Some(j) = best {
            used[j] = true;
            latencies.push(events[j].latency().abs() * 1e3);
            errors.push((events[j].value - v).abs());
        }
    }
    let matched = latencies.len();
    let dropped = truth.len() - matched;
    let spurious = events.len() - matched;
    if (dropped + spurious) as f64 > 0.05 * truth.len() as f64 {
        return Err(Error::CycleMismatch { events: events.len(), truth: truth.len() });
    }
    let (latency_mae_ms, latency_std_ms) = mean_std(&latencies);
    let (accuracy_mean, accuracy_std) = mean_std(&errors);
    Ok(DetectorMetrics { matched, dropped, spurious, latency_mae_ms, latency_std_ms, accuracy_mean, accuracy_std })
}

/// Seeded zero-mean white Gaussian noise. The underlying unit-normal sequence
/// depends only on the seed, so different variances scale the same draws.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    sd: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "noise variance".into(),
                reason: format!("must be finite and >= 0 (got {variance})"),
            });
        }
        Ok(Self { rng: ChaCha8Rng::seed_from_u64(seed), sd: variance.sqrt() })
    }

    pub fn sample(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.sd * z
    }
}

pub fn add_noise(signal: &[f64], variance: f64, seed: u64) -> Result<Vec<f64>> {
    let mut src = NoiseSource::new(seed, variance)?;
    Ok(signal.iter().map(|x| x + src.sample()).collect())
}

/// Mean signal power over noise variance, dB. NaN for zero variance.
pub fn snr_db(signal: &[f64], variance: f64) -> f64 {
    if variance <= 0.0 || signal.is_empty() {
        return f64::NAN;
    }
    let power = signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64;
    10.0 * (power / variance).log10()
}

pub fn write_events_csv(path: &Path, events: &[LvedpEvent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cycle", "detection_t", "actual_t", "value"])?;
    for e in events {
        w.write_record([
            e.cycle_index.to_string(),
            e.detection_time.to_string(),
            e.actual_time.to_string(),
            e.value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(i: usize, t: f64, late: f64, value: f64) -> LvedpEvent {
        LvedpEvent { cycle_index: i, detection_time: t + late, actual_time: t, value }
    }

    fn truth(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| (i as f64, 5.0 + i as f64 * 0.1)).collect()
    }

    #[test]
    fn identical_is_zero() {
        let tr = truth(20);
        let ev: Vec<_> = tr.iter().enumerate().map(|(i, &(t, v))| event(i, t, 0.0, v)).collect();
        let m = evaluate(&ev, &tr).unwrap();
        assert_eq!(m.matched, 20);
        assert_eq!((m.latency_mae_ms, m.accuracy_mean, m.accuracy_std), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_samples_late() {
        let tr = truth(20);
        let ev: Vec<_> = tr.iter().enumerate().map(|(i, &(t, v))| event(i, t, 2.0 / 200.0, v)).collect();
        assert!((evaluate(&ev, &tr).unwrap().latency_mae_ms - 10.0).abs() < 1e-9);
    }

    #[test]
    fn hand_latencies() {
        let tr = truth(3);
        let ev = vec![event(0, 0.0, 0.010, 5.0), event(1, 1.0, 0.020, 5.1), event(2, 2.0, 0.030, 5.2)];
        let m = evaluate(&ev, &tr).unwrap();
        assert!((m.latency_mae_ms - 20.0).abs() < 1e-9);
        assert!((m.latency_std_ms - 10.0).abs() < 1e-9);
    }

    #[test]
    fn dropped_cycles_signal_mismatch() {
        let tr = truth(20);
        let ev: Vec<_> = tr.iter().enumerate().step_by(2).map(|(i, &(t, v))| event(i, t, 0.0, v)).collect();
        assert!(matches!(evaluate(&ev, &tr), Err(Error::CycleMismatch { events: 10, truth: 20 })));
        // One miss in 20 stays within the 5% allowance.
        let ev: Vec<_> = tr.iter().enumerate().skip(1).map(|(i, &(t, v))| event(i, t, 0.0, v)).collect();
        let m = evaluate(&ev, &tr).unwrap();
        assert_eq!((m.matched, m.dropped, m.spurious), (19, 1, 0));
    }

    #[test]
    fn events_outside_truth_span_ignored() {
        let tr: Vec<_> = truth(10).into_iter().skip(3).take(4).collect();
        let all: Vec<_> = truth(10).iter().enumerate().map(|(i, &(t, v))| event(i, t, 0.01, v)).collect();
        let m = evaluate(&all, &tr).unwrap();
        assert_eq!((m.matched, m.dropped, m.spurious), (4, 0, 0));
        // An extra detection inside the span still counts.
        let mut extra = all.clone();
        extra.push(event(99, tr[1].0 + 0.5, 0.01, 0.0));
        extra.sort_by(|a, b| a.actual_time.total_cmp(&b.actual_time));
        assert!(matches!(evaluate(&extra, &tr), Err(Error::CycleMismatch { .. })));
    }

    #[test]
    fn noise_is_seeded_and_scaled() {
        let x = vec![0.0; 1000];
        let a = add_noise(&x, 1.0, 7).unwrap();
        let b = add_noise(&x, 4.0, 7).unwrap();
        assert_eq!(a, add_noise(&x, 1.0, 7).unwrap());
        assert!(a.iter().zip(&b).all(|(a, b)| (2.0 * a - b).abs() < 1e-12));
        let (m, s) = mean_std(&a);
        assert!(m.abs() < 0.1 && (s - 1.0).abs() < 0.1);
        assert!(add_noise(&x, -1.0, 7).is_err());
    }

    #[test]
    fn snr_convention() {
        assert!(snr_db(&[10.0; 4], 0.0).is_nan());
        assert!((snr_db(&[10.0; 4], 1.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        assert!(DetectorConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig { stop_freq: 150.0, ..Default::default() }.validate().is_err());
        assert_eq!(Step5Signal::parse("flvp"), Some(Step5Signal::Pressure));
    }
}
