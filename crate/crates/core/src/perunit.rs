//! Per-unit base system for single-phase 16⅔ Hz railway grids.
//!
//! The impedance base is `v_base² / s_base` with `v_base` the line voltage
//! of the single-phase system.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Nominal railway frequency, 50/3 Hz.
pub const RAILWAY_FREQUENCY_HZ: f64 = 50.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSystem {
    s_base: f64,
    v_base: f64,
    f_base: f64,
    z_base: f64,
}

impl BaseSystem {
    /// `s_base` in MVA, `v_base` in kV, `f_base` in Hz.
    pub fn new(s_base: f64, v_base: f64, f_base: f64) -> Result<Self> {
        for (name, v) in [("s_base", s_base), ("v_base", v_base), ("f_base", f_base)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self {
            s_base,
            v_base,
            f_base,
            z_base: v_base * v_base / s_base,
        })
    }

    /// 10 MVA, 16.5 kV, 50/3 Hz.
    pub fn railway_default() -> Self {
        Self::new(10.0, 16.5, RAILWAY_FREQUENCY_HZ).expect("valid default base")
    }

    pub fn s_base(&self) -> f64 {
        self.s_base
    }

    pub fn v_base(&self) -> f64 {
        self.v_base
    }

    pub fn f_base(&self) -> f64 {
        self.f_base
    }

    /// Impedance base in Ω.
    pub fn z_base(&self) -> f64 {
        self.z_base
    }
}

/// Ω → p.u.
pub fn impedance_to_pu(z: Complex64, base: &BaseSystem) -> Complex64 {
    z / base.z_base
}

/// p.u. → Ω.
pub fn pu_to_impedance(z: Complex64, base: &BaseSystem) -> Complex64 {
    z * base.z_base
}

/// Reactance in p.u. of an inductance `l` (H) at the base frequency.
pub fn inductance_to_pu(l: f64, base: &BaseSystem) -> f64 {
    2.0 * PI * base.f_base * l / base.z_base
}

/// Re-expresses a reactance given on the rating `s_rated` on the power base
/// `s_base` (both MVA, same voltage base).
pub fn rebase_reactance(x: f64, s_rated: f64, s_base: f64) -> Result<f64> {
    if !(s_rated.is_finite() && s_rated > 0.0) {
        return Err(Error::invalid("s_rated", format!("must be positive, got {s_rated}")));
    }
    Ok(x * s_base / s_rated)
}

/// MW → p.u. active power.
pub fn power_to_pu(p_mw: f64, base: &BaseSystem) -> f64 {
    p_mw / base.s_base
}
