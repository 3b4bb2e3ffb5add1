//! Constant-speed operating points, for checking pump coefficients.

use rayon::prelude::*;

use super::Workbench;
use crate::error::{Error, Result};
use crate::sim::{Simulator, SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPoint {
    pub speed: f64,
    /// Mean pump flow, mL/s.
    pub flow: f64,
    /// Mean true LVEDP over the averaging window, mmHg.
    pub lvedp: f64,
    /// Mean aortic pressure, mmHg.
    pub map: f64,
}

/// Runs the nominal patient at each constant speed for `settle` seconds, then
/// averages over the next `average` seconds.
pub fn pump_sweep(wb: &Workbench, speeds: &[f64], settle: f64, average: f64) -> Result<Vec<PumpPoint>> {
    if !(settle >= 0.0 && average > 0.0) {
        return Err(Error::Usage("settle must be >= 0 and average > 0".into()));
    }
    wb.cvs.validate()?;
    wb.pump.validate()?;
    speeds
        .par_iter()
        .map(|&speed| {
            let mut sim = Simulator::new(wb.cvs.clone(), wb.pump.clone(), wb.protocol.dt)?;
            let n_settle = (settle * SAMPLE_RATE).round() as usize;
            let n_avg = (average * SAMPLE_RATE).round() as usize;
            let (mut q, mut p, mut ed, mut beats) = (0.0, 0.0, 0.0, 0usize);
            let mut prev = (0.0, f64::NAN);
            for k in 0..n_settle + n_avg {
                sim.advance_sample(speed, 0.0)?;
                let h = sim.hemodynamics();
                if k >= n_settle {
                    q += sim.state.q_pump;
                    p += h.p_ao;
                    if prev.0 <= 0.0 && h.act_v > 0.0 && prev.1.is_finite() {
                        ed += prev.1;
                        beats += 1;
                    }
                }
                prev = (h.act_v, h.p_lv);
            }
            Ok(PumpPoint {
                speed,
                flow: q / n_avg as f64,
                lvedp: if beats > 0 { ed / beats as f64 } else { f64::NAN },
                map: p / n_avg as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faster_pump_unloads_the_ventricle() {
        let pts = pump_sweep(&Workbench::default(), &[2100.0, 2700.0], 20.0, 5.0).unwrap();
        assert!(pts[1].flow > pts[0].flow);
        assert!(pts[1].lvedp < pts[0].lvedp);
        assert!(pump_sweep(&Workbench::default(), &[2400.0], 1.0, 0.0).is_err());
    }
}
