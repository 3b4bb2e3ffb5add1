//! Centrifugal LVAD between the LV apex and the aorta.
//!
//! The pump and both cannulae form a single inertial branch:
//!
//! ```text
//! (Lin + Lout + a0)·dQ/dt = Plv − Pao + a2·ω² − (a1 + Rin + Rout + Rsuc(Plv))·Q
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PumpParameters {
    /// Inlet cannula resistance, mmHg·s/mL.
    pub r_in: f64,
    /// Outlet cannula resistance, mmHg·s/mL.
    pub r_out: f64,
    /// Inlet cannula inertance, mmHg·s²/mL.
    pub l_in: f64,
    /// Outlet cannula inertance, mmHg·s²/mL.
    pub l_out: f64,
    /// Head coefficient on speed², mmHg/rpm².
    pub a2: f64,
    /// Head loss per unit flow, mmHg·s/mL.
    pub a1: f64,
    /// Head loss per unit flow acceleration, mmHg·s²/mL.
    pub a0: f64,
    /// Suction resistance slope, (mmHg·s/mL) per mmHg below threshold.
    pub suction_gain: f64,
    /// LV pressure below which the inlet starts to collapse, mmHg.
    pub suction_threshold: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for PumpParameters {
    /// Frozen calibration; see `lvadbench calibrate-pump`.
    fn default() -> Self {
        Self {
            r_in: 0.02,
            r_out: 0.02,
            l_in: 0.01,
            l_out: 0.01,
            a2: 1.8e-5,
            a1: 0.1,
            a0: 0.005,
            suction_gain: 3.5,
            suction_threshold: 1.0,
            speed_min: 1800.0,
            speed_max: 3000.0,
        }
    }
}

impl PumpParameters {
    pub const NAMES: &'static [&'static str] = &[
        "Rin",
        "Rout",
        "Lin",
        "Lout",
        "a2",
        "a1",
        "a0",
        "Rlsuc_gain",
        "P_suc_threshold",
        "speed_min",
        "speed_max",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "Rin" => &mut self.r_in,
            "Rout" => &mut self.r_out,
            "Lin" => &mut self.l_in,
            "Lout" => &mut self.l_out,
            "a2" => &mut self.a2,
            "a1" => &mut self.a1,
            "a0" => &mut self.a0,
            "Rlsuc_gain" => &mut self.suction_gain,
            "P_suc_threshold" => &mut self.suction_threshold,
            "speed_min" => &mut self.speed_min,
            "speed_max" => &mut self.speed_max,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.clone().slot(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        *self
            .slot(name)
            .ok_or_else(|| Error::UnknownKey(format!("pump.{name}")))? = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("Rin", self.r_in),
            ("Rout", self.r_out),
            ("Lin", self.l_in),
            ("Lout", self.l_out),
            ("a2", self.a2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("pump.{name}"),
                    reason: format!("must be > 0 (got {v})"),
                });
            }
        }
        if !(self.speed_min < self.speed_max) {
            return Err(Error::InvalidParameter {
                name: "pump.speed_min".into(),
                reason: "speed_min must be below speed_max".into(),
            });
        }
        if self.a1 < 0.0 || self.a0 < 0.0 || self.suction_gain < 0.0 {
            return Err(Error::InvalidParameter {
                name: "pump.a1/a0/Rlsuc_gain".into(),
                reason: "must be >= 0".into(),
            });
        }
        Ok(())
    }

    /// Pressure rise across the impeller.
    pub fn head(&self, speed: f64, flow: f64, flow_rate: f64) -> f64 {
        self.a2 * speed * speed - self.a1 * flow - self.a0 * flow_rate
    }

    /// Extra inlet resistance once LV pressure falls below the suction threshold.
    pub fn suction_resistance(&self, p_lv: f64) -> f64 {
        if p_lv >= self.suction_threshold {
            0.0
        } else {
            self.suction_gain * (self.suction_threshold - p_lv)
        }
    }

    pub fn clamp_speed(&self, command: f64) -> f64 {
        command.clamp(self.speed_min, self.speed_max)
    }

    /// Time derivative of pump flow for the given LV and aortic pressures.
    pub fn flow_derivative(&self, speed: f64, flow: f64, p_lv: f64, p_ao: f64) -> f64 {
        let resistance = self.a1 + self.r_in + self.r_out + self.suction_resistance(p_lv);
        let drive = p_lv - p_ao + self.a2 * speed * speed - resistance * flow;
        drive / (self.l_in + self.l_out + self.a0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn head_examples() {
        let p = PumpParameters::default();
        assert_eq!(p.head(0.0, 0.0, 0.0), 0.0);
        assert!(p.head(3000.0, 80.0, 0.0) > p.head(1800.0, 80.0, 0.0));
    }

    #[test]
    fn suction_law() {
        let mut p = PumpParameters::default();
        assert_eq!(p.suction_resistance(p.suction_threshold), 0.0);
        assert_eq!(p.suction_resistance(p.suction_threshold + 5.0), 0.0);
        p.suction_gain = 3.5;
        assert!((p.suction_resistance(p.suction_threshold - 2.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn clamp_examples() {
        let p = PumpParameters::default();
        assert_eq!(p.clamp_speed(2400.0), 2400.0);
        assert_eq!(p.clamp_speed(1700.0), 1800.0);
        assert_eq!(p.clamp_speed(3100.0), 3000.0);
    }

    #[test]
    fn head_monotone_on_grid() {
        let p = PumpParameters::default();
        for speed in (1800..=3000).step_by(100).map(f64::from) {
            for q in (-50..=200).step_by(10).map(f64::from) {
                assert!(p.head(speed + 50.0, q, 0.0) - p.head(speed, q, 0.0) > 0.0);
                assert!(p.head(speed, q + 5.0, 0.0) - p.head(speed, q, 0.0) < 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn clamp_idempotent_and_monotone(a in -1e4f64..1e4, b in -1e4f64..1e4) {
            let p = PumpParameters::default();
            let ca = p.clamp_speed(a);
            prop_assert_eq!(p.clamp_speed(ca), ca);
            prop_assert!((1800.0..=3000.0).contains(&ca));
            if a <= b {
                prop_assert!(ca <= p.clamp_speed(b));
            }
        }
    }
}
