//! Steady-state references that make the converter behave like a
//! synchronous-synchronous rotary converter at its railway-side terminal.

use crate::error::{Error, Result};

/// Denominators smaller than this are treated as degenerate.
pub const DEGENERATE_THRESHOLD: f64 = 1e-9;

/// Machine data of the emulated rotary converter.
///
/// `xq_m` and `xq_g` are the effective quadrature reactances (transformer
/// leakage already folded in) on the system power base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfcParams {
    pub xq_m: f64,
    pub xq_g: f64,
    /// Droop, p.u. voltage per p.u. reactive power.
    pub k_u: f64,
    /// No-load voltage magnitude.
    pub u0: f64,
}

impl RfcParams {
    pub fn new(xq_m: f64, xq_g: f64, k_u: f64, u0: f64) -> Result<Self> {
        let p = Self { xq_m, xq_g, k_u, u0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xq_m.is_finite() && self.xq_m > 0.0) {
            return Err(Error::invalid("xq_m", "must be positive"));
        }
        if !(self.xq_g.is_finite() && self.xq_g > 0.0) {
            return Err(Error::invalid("xq_g", "must be positive"));
        }
        if !(self.k_u.is_finite() && self.k_u >= 0.0) {
            return Err(Error::invalid("k_u", "must be non-negative"));
        }
        if !(self.u0.is_finite() && self.u0 > 0.0) {
            return Err(Error::invalid("u0", "must be positive"));
        }
        Ok(())
    }
}

fn load_angle(xq: f64, p: f64, q: f64, u: f64, context: &'static str) -> Result<f64> {
    let den = u * u + xq * q;
    if den.abs() < DEGENERATE_THRESHOLD {
        return Err(Error::DegenerateDenominator { context, value: den });
    }
    Ok((xq * p / den).atan())
}

/// Phase shift ψ across the rotary converter: motor load angle (in 50 Hz
/// radians, hence the 1/3) plus generator load angle.
pub fn phase_shift(
    params: &RfcParams,
    p_m: f64,
    q_m: f64,
    u_m: f64,
    p_g: f64,
    q_g: f64,
    u_g: f64,
) -> Result<f64> {
    let motor = load_angle(params.xq_m, p_m, q_m, u_m, "motor load angle")?;
    let generator = load_angle(params.xq_g, p_g, q_g, u_g, "generator load angle")?;
    Ok(motor / 3.0 + generator)
}

/// Terminal angle the converter should hold at PoC16.
///
/// The motor side sits on an infinite bus, so its denominator is unity and
/// it carries the railway-side active power (lossless converter).
pub fn angle_reference(params: &RfcParams, theta_50: f64, p_g: f64, q_g: f64, u_g: f64) -> Result<f64> {
    let generator = load_angle(params.xq_g, p_g, q_g, u_g, "generator load angle")?;
    Ok(theta_50 / 3.0 - (params.xq_m * p_g).atan() / 3.0 - generator)
}

/// Droop law: voltage falls linearly with injected reactive power.
pub fn voltage_reference(params: &RfcParams, q_g: f64) -> f64 {
    params.u0 - params.k_u * q_g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> RfcParams {
        RfcParams::new(0.49, 0.53, 0.03, 1.0).unwrap()
    }

    #[test]
    fn phase_shift_zero_power() {
        let p = params();
        assert_eq!(phase_shift(&p, 0.0, 0.3, 1.0, 0.0, -0.2, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn phase_shift_unit_power() {
        let psi = phase_shift(&params(), 1.0, 0.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(psi, 0.639_230_463_908_931_8, max_relative = 1e-14);
        let neg = phase_shift(&params(), -1.0, 0.0, 1.0, -1.0, 0.0, 1.0).unwrap();
        assert_eq!(neg, -psi);
    }

    #[test]
    fn phase_shift_degenerate() {
        let p = params();
        // u² + xq·q = 0
        let q = -1.0 / 0.53;
        let err = phase_shift(&p, 0.0, 0.0, 1.0, 0.5, q, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }));
    }

    #[test]
    fn angle_reference_examples() {
        let p = params();
        assert_eq!(angle_reference(&p, 0.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(angle_reference(&p, 0.3, 0.0, 0.0, 1.0).unwrap(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(
            angle_reference(&p, 0.0, 0.5, 0.0, 1.0).unwrap(),
            -0.339_134_821_416_119_3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn voltage_reference_examples() {
        let p = params();
        assert_eq!(voltage_reference(&p, 0.0), 1.0);
        assert_relative_eq!(voltage_reference(&p, 1.0), 0.97, max_relative = 1e-15);
        assert_relative_eq!(voltage_reference(&p, -1.0), 1.03, max_relative = 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(RfcParams::new(0.0, 0.53, 0.03, 1.0).is_err());
        assert!(RfcParams::new(0.49, -0.1, 0.03, 1.0).is_err());
        assert!(RfcParams::new(0.49, 0.53, -0.01, 1.0).is_err());
        assert!(RfcParams::new(0.49, 0.53, 0.03, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn phase_shift_increasing_in_p(p1 in -2.0f64..2.0, dp in 1e-6f64..1.0, q in -0.5f64..0.5, u in 0.6f64..1.2) {
            let par = params();
            let a = phase_shift(&par, 0.2, q, u, p1, q, u).unwrap();
            let b = phase_shift(&par, 0.2, q, u, p1 + dp, q, u).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn zero_power_reference_is_pure_shift(theta in -3.0f64..3.0, q in -0.5f64..0.5, u in 0.5f64..1.5) {
            prop_assert_eq!(angle_reference(&params(), theta, 0.0, q, u).unwrap(), theta / 3.0);
        }

        #[test]
        fn droop_is_affine(q in -2.0f64..2.0, dq in 1e-3f64..1.0) {
            let par = params();
            let slope = (voltage_reference(&par, q + dq) - voltage_reference(&par, q)) / dq;
            prop_assert!((slope + par.k_u).abs() < 1e-9);
        }
    }
}
