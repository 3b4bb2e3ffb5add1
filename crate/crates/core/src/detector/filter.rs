//! Digital Butterworth low-pass realized as cascaded biquads (bilinear
//! transform with frequency prewarping).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One second-order section, transposed direct form II. `a0` is normalized
/// to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub fn new(b: [f64; 3], a: [f64; 2]) -> Self {
        Self { b, a, z1: 0.0, z2: 0.0 }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.z1;
        self.z1 = self.b[1] * x - self.a[0] * y + self.z2;
        self.z2 = self.b[2] * x - self.a[1] * y;
        y
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Put the section in steady state for a constant input `x`.
    fn settle(&mut self, x: f64) {
        let y = self.dc_gain() * x;
        self.z2 = self.b[2] * x - self.a[1] * y;
        self.z1 = self.b[1] * x - self.a[0] * y + self.z2;
    }

    fn response(&self, w: f64) -> (f64, f64) {
        // H(e^{jw}) as (re, im).
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let nr = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let ni = self.b[1] * s1 + self.b[2] * s2;
        let dr = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let di = self.a[0] * s1 + self.a[1] * s2;
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    }
}

/// Minimum Butterworth order meeting `pass_db` attenuation at `pass` Hz and at
/// least `stop_db` at `stop` Hz, plus the -3 dB-style cutoff that meets the
/// passband edge exactly.
pub fn butterworth_order(fs: f64, pass: f64, stop: f64, pass_db: f64, stop_db: f64) -> Result<(usize, f64)> {
    if !(pass > 0.0 && pass < stop && stop < fs / 2.0) {
        return Err(Error::InvalidParameter {
            name: "detector.pass_freq".into(),
            reason: format!("need 0 < pass ({pass}) < stop ({stop}) < fs/2 ({})", fs / 2.0),
        });
    }
    if !(pass_db > 0.0 && stop_db > pass_db) {
        return Err(Error::InvalidParameter {
            name: "detector.stop_db".into(),
            reason: "stopband attenuation must exceed passband attenuation".into(),
        });
    }
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let (wp, ws) = (warp(pass), warp(stop));
    let ep = 10f64.powf(pass_db / 10.0) - 1.0;
    let es = 10f64.powf(stop_db / 10.0) - 1.0;
    let order = ((es / ep).log10() / (2.0 * (ws / wp).log10())).ceil().max(1.0) as usize;
    let wc = wp / ep.powf(1.0 / (2.0 * order as f64));
    let fc = fs / PI * (wc / (2.0 * fs)).atan();
    Ok((order, fc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub fs: f64,
    pub cutoff: f64,
    pub order: usize,
    primed: bool,
}

impl SosFilter {
    /// Butterworth low-pass of the given order and cutoff.
    pub fn butterworth(order: usize, cutoff: f64, fs: f64) -> Self {
        let k = 2.0 * fs;
        let wc = k * (PI * cutoff / fs).tan();
        let mut sections = Vec::new();
        for i in 0..order / 2 {
            let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
            let (re, mag2) = (wc * theta.cos(), wc * wc);
            let a0 = k * k - 2.0 * re * k + mag2;
            let b = [mag2 / a0, 2.0 * mag2 / a0, mag2 / a0];
            let a = [(2.0 * mag2 - 2.0 * k * k) / a0, (k * k + 2.0 * re * k + mag2) / a0];
            sections.push(Biquad::new(b, a));
        }
        if order % 2 == 1 {
            let a0 = k + wc;
            sections.push(Biquad::new([wc / a0, wc / a0, 0.0], [(wc - k) / a0, 0.0]));
        }
        Self { sections, fs, cutoff, order, primed: false }
    }

    /// Minimum-order design from band edges.
    pub fn design(fs: f64, pass: f64, stop: f64, pass_db: f64, stop_db: f64) -> Result<Self> {
        let (order, fc) = butterworth_order(fs, pass, stop, pass_db, stop_db)?;
        Ok(Self::butterworth(order, fc, fs))
    }

    /// Filters one sample. The first sample primes every section at DC steady
    /// state so a constant input passes through without a start-up transient.
    pub fn process(&mut self, x: f64) -> f64 {
        if !self.primed {
            let mut v = x;
            for s in &mut self.sections {
                s.settle(v);
                v *= s.dc_gain();
            }
            self.primed = true;
        }
        self.sections.iter_mut().fold(x, |v, s| s.process(v))
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.z1 = 0.0;
            s.z2 = 0.0;
        }
        self.primed = false;
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        let w = 2.0 * PI * f / self.fs;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                re.hypot(im)
            })
            .product()
    }

    fn phase(&self, f: f64) -> f64 {
        let w = 2.0 * PI * f / self.fs;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                im.atan2(re)
            })
            .sum()
    }

    /// Group delay, s, by central difference of the phase.
    pub fn group_delay(&self, f: f64) -> f64 {
        let h = 1e-3;
        let f = f.max(h);
        -(self.phase(f + h) - self.phase(f - h)) / (2.0 * PI * 2.0 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvp_filter() -> SosFilter {
        SosFilter::design(200.0, 5.0, 20.0, 3.0, 20.0).unwrap()
    }

    fn amplitude_after(f: &mut SosFilter, freq: f64) -> f64 {
        let n = 4000;
        let out: Vec<f64> = (0..n).map(|i| f.process((2.0 * PI * freq * i as f64 / 200.0).sin())).collect();
        out[n / 2..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn minimum_order_is_two() {
        let (order, fc) = butterworth_order(200.0, 5.0, 20.0, 3.0, 20.0).unwrap();
        assert_eq!(order, 2);
        assert!((fc - 5.0).abs() < 0.01, "{fc}");
    }

    #[test]
    fn band_edges_met() {
        let f = lvp_filter();
        assert!(20.0 * f.magnitude(5.0).log10() >= -3.0 - 1e-9);
        assert!(20.0 * f.magnitude(20.0).log10() <= -20.0);
        assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_converges() {
        let mut f = lvp_filter();
        let y = (0..200).map(|_| f.process(7.5)).last().unwrap();
        assert!((y - 7.5).abs() < 1e-9);
        let mut f = lvp_filter();
        f.process(0.0);
        let y = (0..400).map(|_| f.process(7.5)).last().unwrap();
        assert!((y - 7.5).abs() < 1e-6);
    }

    #[test]
    fn sine_attenuation() {
        assert!(amplitude_after(&mut lvp_filter(), 20.0) <= 0.1);
        assert!(amplitude_after(&mut lvp_filter(), 1.0) >= 0.95);
    }

    #[test]
    fn matches_simulated_response() {
        let mut f = lvp_filter();
        let sim = amplitude_after(&mut f, 8.0);
        assert!((sim - f.magnitude(8.0)).abs() < 5e-3);
    }

    #[test]
    fn group_delay_reported() {
        let f = lvp_filter();
        let d = f.group_delay(0.0);
        // Second-order Butterworth: √2 / ωc at DC.
        assert!((d - 2f64.sqrt() / (2.0 * PI * 5.0)).abs() < 2e-3, "{d}");
    }

    #[test]
    fn higher_orders() {
        for order in 1..=6 {
            let f = SosFilter::butterworth(order, 10.0, 200.0);
            assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
            assert!((f.magnitude(10.0) - 0.5f64.sqrt()).abs() < 1e-9, "order {order}");
        }
    }

    #[test]
    fn bad_band_edges() {
        assert!(SosFilter::design(200.0, 20.0, 5.0, 3.0, 20.0).is_err());
        assert!(SosFilter::design(200.0, 5.0, 120.0, 3.0, 20.0).is_err());
    }
}
