//! Resistance unit conversion between CGS (dyn·s·cm⁻⁵) and mmHg·s·mL⁻¹.

/// dyn·cm⁻² per mmHg.
pub const DYN_PER_MMHG: f64 = 1333.22;

pub const fn dyn_to_mmhg(dyn_s_cm5: f64) -> f64 {
    dyn_s_cm5 / DYN_PER_MMHG
}

pub const fn mmhg_to_dyn(mmhg_s_ml: f64) -> f64 {
    mmhg_s_ml * DYN_PER_MMHG
}
