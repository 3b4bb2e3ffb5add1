//! Grid search for the step-5 scale α and threshold scale β.
//!
//! Works on a pre-recorded pressure trace so every grid point replays the
//! same beats; only the detector and the added noise vary.

use super::{add_noise, detect, evaluate, mean_std, DetectorConfig, DetectorMetrics};
use crate::error::{Error, Result};
use crate::trace::{true_lvedp, WaveformTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    pub latency_ms: f64,
    /// Mean |value error|, mmHg.
    pub accuracy: f64,
    /// Noise variance the targets refer to, mmHg².
    pub variance: f64,
    /// Noise realisations averaged per grid point.
    pub noise_seeds: Vec<u64>,
    /// Beats before this time are left out of the scoring, s.
    pub skip: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self { latency_ms: 30.0, accuracy: 1.2, variance: 4.0, noise_seeds: vec![1, 2, 3], skip: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            alphas: vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
            betas: vec![0.05, 0.08, 0.1, 0.15, 0.2, 0.3, 0.4],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPoint {
    pub alpha: f64,
    pub beta: f64,
    /// Noise-free metrics; the point is rejected unless every beat is found once.
    pub clean: Option<DetectorMetrics>,
    pub noisy_latency_ms: f64,
    pub noisy_accuracy: f64,
    /// Squared relative distance to the target; infinite when rejected.
    pub cost: f64,
    pub error: Option<String>,
}

fn score(samples: &[f64], t0: f64, truth: &[(f64, f64)], cfg: &DetectorConfig) -> Result<DetectorMetrics> {
    evaluate(&detect(samples, t0, cfg)?, truth)
}

/// Evaluates every (α, β) pair on `trace` and returns the points sorted by
/// cost, best first.
pub fn calibrate(
    trace: &WaveformTrace,
    base: &DetectorConfig,
    grid: &CalibrationGrid,
    target: &CalibrationTarget,
) -> Result<Vec<CalibrationPoint>> {
    if target.noise_seeds.is_empty() {
        return Err(Error::InvalidParameter { name: "noise_seeds".into(), reason: "need at least one".into() });
    }
    let t0 = *trace.t.first().ok_or_else(|| Error::TraceTooShort("empty trace".into()))?;
    // The final second is dropped: its last beat may end before detection.
    let window = (target.skip, trace.t[trace.len() - 1] - 1.0);
    let truth: Vec<_> = true_lvedp(trace)?.into_iter().filter(|&(t, _)| (window.0..window.1).contains(&t)).collect();
    let truth = &truth[..];
    let noisy: Vec<Vec<f64>> = target
        .noise_seeds
        .iter()
        .map(|&s| add_noise(&trace.plv, target.variance, s))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for &alpha in &grid.alphas {
        for &beta in &grid.betas {
            let cfg = DetectorConfig { alpha, beta, ..base.clone() };
            cfg.validate()?;
            let mut p = CalibrationPoint {
                alpha,
                beta,
                clean: None,
                noisy_latency_ms: f64::NAN,
                noisy_accuracy: f64::NAN,
                cost: f64::INFINITY,
                error: None,
            };
            match score(&trace.plv, t0, truth, &cfg) {
                Ok(m) if m.dropped + m.spurious == 0 => p.clean = Some(m),
                Ok(m) => p.error = Some(format!("noise-free: {} dropped, {} spurious", m.dropped, m.spurious)),
                Err(e) => p.error = Some(format!("noise-free: {e}")),
            }
            if p.error.is_none() {
                let runs: Result<Vec<_>> = noisy.iter().map(|x| score(x, t0, truth, &cfg)).collect();
                match runs {
                    Ok(ms) => {
                        let lat: Vec<f64> = ms.iter().map(|m| m.latency_mae_ms).collect();
                        let acc: Vec<f64> = ms.iter().map(|m| m.accuracy_mean).collect();
                        p.noisy_latency_ms = mean_std(&lat).0;
                        p.noisy_accuracy = mean_std(&acc).0;
                        p.cost = ((p.noisy_latency_ms - target.latency_ms) / target.latency_ms).powi(2)
                            + ((p.noisy_accuracy - target.accuracy) / target.accuracy).powi(2);
                    }
                    Err(e) => p.error = Some(format!("noisy: {e}")),
                }
            }
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    Ok(points)
}
