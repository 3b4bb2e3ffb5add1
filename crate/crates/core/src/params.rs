//! Physiological parameter set of the circulation model.
//!
//! Every parameter is addressable by its conventional name (`Eeslvf`,
//! `λrvf`, ...) so that configuration files and the sensitivity sweep can
//! refer to them without a second lookup table.

use crate::error::{Error, Result};
use crate::units::dyn_to_mmhg;

/// Physical class of a parameter; drives validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Elastance,
    Resistance,
    Inertance,
    Volume,
    TotalVolume,
    Stiffness,
    PressureScale,
    Time,
    Pressure,
    Rate,
}

macro_rules! cvs_parameters {
    ($( $field:ident : $name:literal, $kind:ident, $default:expr, $table:literal; )*) => {
        /// Parameters of the closed-loop circulation.
        ///
        /// Units: elastances mmHg/mL, resistances mmHg·s/mL, inertances
        /// mmHg·s²/mL, volumes mL, stiffness coefficients 1/mL, stiffness
        /// scaling terms mmHg, times s, heart rate bpm.
        #[derive(Debug, Clone, PartialEq)]
        pub struct CvsParameters {
            $( pub $field: f64, )*
        }

        impl CvsParameters {
            /// Names of every parameter, in canonical order.
            pub const NAMES: &'static [&'static str] = &[$( $name, )*];

            /// The 43 parameters of the published normal-value table, which
            /// the sensitivity sweep and patient generator range over.
            pub fn table_names() -> impl Iterator<Item = &'static str> {
                const TABLE: &[(&str, bool)] = &[$( ($name, $table), )*];
                TABLE.iter().filter(|(_, t)| *t).map(|(n, _)| *n)
            }

            pub fn nominal() -> Self {
                Self { $( $field: $default, )* }
            }

            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    $( $name => Some(self.$field), )*
                    _ => None,
                }
            }

            pub fn get_mut(&mut self, name: &str) -> Option<&mut f64> {
                match name {
                    $( $name => Some(&mut self.$field), )*
                    _ => None,
                }
            }

            pub fn kind(name: &str) -> Option<ParamKind> {
                match name {
                    $( $name => Some(ParamKind::$kind), )*
                    _ => None,
                }
            }

            pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
                [$( ($name, self.$field), )*].into_iter()
            }
        }
    };
}

cvs_parameters! {
    ees_lvf:  "Eeslvf", Elastance, 3.54, true;
    ees_rvf:  "Eesrvf", Elastance, 1.75, true;
    e_ao:     "Eao",    Elastance, 1.04, true;
    ees_la:   "Eesla",  Elastance, 0.2, true;
    ees_ra:   "Eesra",  Elastance, 0.2, true;
    e_pa:     "Epa",    Elastance, 0.15, true;
    e_pu:     "Epu",    Elastance, 0.04, true;
    e_sa:     "Esa",    Elastance, 0.37, true;
    e_sv:     "Esv",    Elastance, 0.013, true;
    e_vc:     "Evc",    Elastance, 0.03, true;
    r_ao:     "Rao",    Resistance, 0.2, true;
    r_ra:     "Rra",    Resistance, 0.012, true;
    r_pv:     "Rpv",    Resistance, 0.02, true;
    r_sv:     "Rsv",    Resistance, 0.12, true;
    tc:       "Tc",     Time, 1.0, true;
    tsys0:    "Tsys0",  Time, 0.5, true;
    v0_la:    "V0la",   Volume, 20.0, true;
    v0_lvf:   "V0lvf",  Volume, 40.0, true;
    v0_ra:    "V0ra",   Volume, 20.0, true;
    v0_rvf:   "V0rvf",  Volume, 50.0, true;
    vd_la:    "Vdla",   Volume, 10.0, true;
    vd_lvf:   "Vdlvf",  Volume, 16.77, true;
    vd_ra:    "Vdra",   Volume, 10.0, true;
    vd_rvf:   "Vdrvf",  Volume, 40.0, true;
    r_mt:     "Rmt",    Resistance, 0.01, true;
    r_av:     "Rav",    Resistance, 0.02, true;
    vu_ao:    "Vuao",   Volume, 230.88, true;
    vu_pa:    "Vupa",   Volume, 91.67, true;
    vu_pu:    "Vupu",   Volume, 132.39, true;
    vu_sa:    "Vusa",   Volume, 231.04, true;
    vu_sv:    "Vusv",   Volume, 1976.1, true;
    vu_vc:    "Vuvc",   Volume, 136.17, true;
    p0_la:    "P0la",   PressureScale, 0.5, true;
    p0_lvf:   "P0lvf",  PressureScale, 0.98, true;
    p0_ra:    "P0ra",   PressureScale, 0.5, true;
    p0_rvf:   "P0rvf",  PressureScale, 0.91, true;
    v_total:  "Vtotal", TotalVolume, 5200.0, true;
    lambda_la:  "λla",  Stiffness, 0.025, true;
    lambda_lvf: "λlvf", Stiffness, 0.028, true;
    lambda_ra:  "λra",  Stiffness, 0.025, true;
    lambda_rvf: "λrvf", Stiffness, 0.028, true;
    l_ao:     "Lao",    Inertance, 0.0001, true;
    l_pa:     "Lpa",    Inertance, 7.70e-05, true;
    r_sa:     "Rsa",    Resistance, dyn_to_mmhg(1300.0), false;
    r_pa:     "Rpa",    Resistance, dyn_to_mmhg(100.0), false;
    r_vc:     "Rvc",    Resistance, 0.001, false;
    r_pu:     "Rpu",    Resistance, 0.005, false;
    p_thor:   "Pthor",  Pressure, -4.0, false;
    heart_rate: "HR",   Rate, 60.0, false;
}

impl Default for CvsParameters {
    fn default() -> Self {
        Self::nominal()
    }
}

impl CvsParameters {
    /// Heart period in seconds: `Tc` at 60 bpm, scaled by the current rate.
    pub fn heart_period(&self) -> f64 {
        self.tc * 60.0 / self.heart_rate
    }

    /// Sum of all unstressed / zero-pressure volumes.
    pub fn unstressed_total(&self) -> f64 {
        self.vu_ao
            + self.vu_pa
            + self.vu_pu
            + self.vu_sa
            + self.vu_sv
            + self.vu_vc
            + self.v0_la
            + self.v0_lvf
            + self.v0_ra
            + self.v0_rvf
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = self.get_mut(name).ok_or_else(|| Error::UnknownKey(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.iter() {
            let kind = Self::kind(name).expect("name from iter");
            let bad = |reason: &str| Error::InvalidParameter {
                name: name.to_string(),
                reason: format!("{reason} (got {value})"),
            };
            if !value.is_finite() {
                return Err(bad("must be finite"));
            }
            let ok = match kind {
                ParamKind::Volume => value >= 0.0,
                ParamKind::Pressure => true,
                _ => value > 0.0,
            };
            if !ok {
                return Err(bad(match kind {
                    ParamKind::Volume => "must be >= 0",
                    _ => "must be > 0",
                }));
            }
        }
        if self.v_total <= self.unstressed_total() {
            return Err(Error::InvalidParameter {
                name: "Vtotal".into(),
                reason: format!(
                    "must exceed the unstressed volume total {:.2} mL",
                    self.unstressed_total()
                ),
            });
        }
        let act = crate::cvs::ActivationSpec::from_params(self);
        if !(act.tsys > 0.0 && act.tsys < act.period) {
            return Err(Error::InvalidParameter {
                name: "Tsys0".into(),
                reason: format!("systole {:.3} s must lie inside the period {:.3} s", act.tsys, act.period),
            });
        }
        Ok(())
    }
}
