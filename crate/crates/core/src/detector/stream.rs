use std::collections::VecDeque;

use super::filter::SosFilter;
use super::{DetectorConfig, LvedpEvent, Step5Signal};
use crate::error::{Error, Result};

/// Causal LVEDP detector for one LVP stream.
///
/// Per sample: low-pass (FLVP), slope (SFLVP), beat-peak tracking, then the
/// candidate and adaptive-threshold tests. A detection looks back to the
/// nearest SFLVP local minimum, which becomes the event's actual time.
#[derive(Debug, Clone)]
pub struct LvedpDetector {
    cfg: DetectorConfig,
    filter: SosFilter,
    t0: f64,
    n: usize,
    prev_flvp: Option<f64>,
    /// Recent (FLVP, SFLVP), newest at the back.
    history: VecDeque<(f64, f64)>,
    history_cap: usize,
    /// Sum over the last `window` SFLVP values preceding the current one.
    window_sum: f64,
    running_max: f64,
    max_decay: f64,
    last_peak: Option<usize>,
    period: Option<f64>,
    /// Largest SFLVP values since the previous detection, descending.
    top: Vec<f64>,
    since_cycle_start: usize,
    last_detection: Option<usize>,
    cycle: usize,
}

impl LvedpDetector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let filter = SosFilter::design(cfg.fs, cfg.pass_freq, cfg.stop_freq, cfg.pass_db, cfg.stop_db)?;
        let history_cap = ((cfg.max_lookback * cfg.fs).ceil() as usize).max(cfg.window + 2) + 2;
        Ok(Self {
            max_decay: 0.5f64.powf(1.0 / (cfg.max_half_life * cfg.fs)),
            top: Vec::with_capacity(cfg.top_k + 1),
            cfg,
            filter,
            t0: 0.0,
            n: 0,
            prev_flvp: None,
            history: VecDeque::with_capacity(history_cap + 1),
            history_cap,
            window_sum: 0.0,
            running_max: 0.0,
            last_peak: None,
            period: None,
            since_cycle_start: 0,
            last_detection: None,
            cycle: 0,
        })
    }

    /// Time stamp of sample 0.
    pub fn with_start_time(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn filter(&self) -> &SosFilter {
        &self.filter
    }

    pub fn samples_seen(&self) -> usize {
        self.n
    }

    /// Latest inter-peak interval of the SFLVP, s.
    pub fn beat_period(&self) -> Result<f64> {
        self.period.ok_or(Error::NoBeat)
    }

    /// Latest (FLVP, SFLVP).
    pub fn latest(&self) -> Option<(f64, f64)> {
        self.history.back().copied()
    }

    fn time_of(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.cfg.fs
    }

    /// SFLVP of absolute sample `i`; must still be in the history.
    fn slope_at(&self, i: usize) -> f64 {
        self.history[self.history.len() - (self.n - i)].1
    }

    fn flvp_at(&self, i: usize) -> f64 {
        self.history[self.history.len() - (self.n - i)].0
    }

    pub fn push(&mut self, x: f64) -> Result<Option<LvedpEvent>> {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample(self.n));
        }
        let flvp = self.filter.process(x);
        let sflvp = match self.prev_flvp {
            Some(p) => (flvp - p) * self.cfg.fs,
            None => 0.0,
        };
        self.prev_flvp = Some(flvp);

        let window = self.cfg.window;
        let msflvp = if self.history.len() >= window { self.window_sum / window as f64 } else { f64::NAN };

        self.history.push_back((flvp, sflvp));
        self.window_sum += sflvp;
        if self.history.len() > window {
            self.window_sum -= self.history[self.history.len() - 1 - window].1;
        }
        if self.history.len() > self.history_cap {
            self.history.pop_front();
        }
        let i = self.n;
        self.n += 1;

        self.track_peaks(i);
        self.insert_top(sflvp);
        self.since_cycle_start += 1;

        let Some(period) = self.period else { return Ok(None) };
        if !msflvp.is_finite() || self.since_cycle_start < self.cfg.top_k {
            return Ok(None);
        }
        if let Some(last) = self.last_detection {
            let refractory = (self.cfg.refractory_fraction * period).max(self.cfg.peak_refractory);
            if ((i - last) as f64) < refractory * self.cfg.fs {
                return Ok(None);
            }
        }

        let lhs = match self.cfg.step5 {
            Step5Signal::Slope => sflvp,
            Step5Signal::Pressure => flvp,
        };
        let candidate = lhs >= self.cfg.alpha * msflvp;
        let th = self.cfg.beta * self.top.iter().sum::<f64>() / self.top.len() as f64;
        if !(candidate && sflvp >= th && sflvp > 0.0) {
            return Ok(None);
        }

        let lookback = ((period * self.cfg.lookback_fraction * self.cfg.fs) as usize).min(self.history.len() - 1);
        let actual = self.nearest_slope_minimum(i, lookback);
        let event = LvedpEvent {
            cycle_index: self.cycle,
            detection_time: self.time_of(i),
            actual_time: self.time_of(actual),
            value: self.flvp_at(actual),
        };
        self.cycle += 1;
        self.last_detection = Some(i);
        self.top.clear();
        self.since_cycle_start = 0;
        Ok(Some(event))
    }

    fn track_peaks(&mut self, i: usize) {
        self.running_max *= self.max_decay;
        if self.history.len() < 3 {
            return;
        }
        let (s0, s1, s2) = (self.slope_at(i - 2), self.slope_at(i - 1), self.slope_at(i));
        if !(s1 > s0 && s1 >= s2) {
            self.running_max = self.running_max.max(s2);
            return;
        }
        self.running_max = self.running_max.max(s1).max(s2);
        if s1 < self.cfg.peak_fraction * self.running_max || s1 <= 0.0 {
            return;
        }
        let refractory = (self.cfg.peak_refractory * self.cfg.fs) as usize;
        match self.last_peak {
            Some(p) if i - 1 - p < refractory => {}
            Some(p) => {
                self.period = Some((i - 1 - p) as f64 / self.cfg.fs);
                self.last_peak = Some(i - 1);
            }
            None => self.last_peak = Some(i - 1),
        }
    }

    fn insert_top(&mut self, v: f64) {
        let k = self.cfg.top_k;
        if self.top.len() == k && v <= self.top[k - 1] {
            return;
        }
        let pos = self.top.partition_point(|&x| x >= v);
        self.top.insert(pos, v);
        self.top.truncate(k);
    }

    /// Closest sample before `i` (at most `lookback` back) where the SFLVP has
    /// a local minimum; falls back to the smallest SFLVP in that span.
    fn nearest_slope_minimum(&self, i: usize, lookback: usize) -> usize {
        let lo = i - lookback;
        let mut j = i - 1;
        while j > lo {
            let s = self.slope_at(j);
            if s <= self.slope_at(j + 1) && s < self.slope_at(j - 1) {
                return j;
            }
            j -= 1;
        }
        (lo..i).min_by(|&a, &b| self.slope_at(a).total_cmp(&self.slope_at(b))).unwrap_or(i)
    }
}

/// Runs a fresh detector over a whole record sampled from `t0`.
pub fn detect(samples: &[f64], t0: f64, cfg: &DetectorConfig) -> Result<Vec<LvedpEvent>> {
    let mut det = LvedpDetector::new(cfg.clone())?.with_start_time(t0);
    let mut events = Vec::new();
    for &x in samples {
        if let Some(e) = det.push(x)? {
            events.push(e);
        }
    }
    det.beat_period()?;
    Ok(events)
}
