//! Inverter control: PI angle and voltage regulators, the current limiter
//! and the first-order converter lag that produces the internal phasor E∠δ.
//!
//! Everything here is a pure function of the continuous state, the
//! measurements at PoC16 and the discrete limiter mode. The simulator owns
//! the mode and applies the integrator reset on mode exit.

use crate::error::{Error, Result};
use crate::network::Phasor;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    pub kp_v: f64,
    /// 1/s
    pub ki_v: f64,
    pub kp_a: f64,
    /// 1/s
    pub ki_a: f64,
    pub kp_cl: f64,
    /// 1/s
    pub ki_cl: f64,
    /// Converter lag time constant, s.
    pub t_c: f64,
    /// Current-limit output filter time constant, s.
    pub t_i: f64,
    pub e_max: f64,
    pub i_max: f64,
    pub anti_windup_voltage: bool,
    pub anti_windup_angle: bool,
}

impl Default for ControlGains {
    /// Tuned regulator settings of the measured converter.
    fn default() -> Self {
        Self {
            kp_v: 0.02,
            ki_v: 2.0,
            kp_a: 0.02,
            ki_a: 2.0,
            kp_cl: 12.0,
            ki_cl: 75.0,
            t_c: 0.050,
            t_i: 0.02e-3,
            e_max: 1.15,
            i_max: 2.0,
            anti_windup_voltage: false,
            anti_windup_angle: false,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("kp_v", self.kp_v),
            ("ki_v", self.ki_v),
            ("kp_a", self.kp_a),
            ("ki_a", self.ki_a),
            ("kp_cl", self.kp_cl),
            ("ki_cl", self.ki_cl),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        // The load flow preloads integrators as command / ki.
        if self.ki_v == 0.0 {
            return Err(Error::invalid("ki_v", "must be non-zero"));
        }
        if self.ki_a == 0.0 {
            return Err(Error::invalid("ki_a", "must be non-zero"));
        }
        let positive = [("t_c", self.t_c), ("t_i", self.t_i), ("e_max", self.e_max), ("i_max", self.i_max)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Continuous controller state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SfcState {
    pub int_v: f64,
    pub int_a: f64,
    pub int_cl: f64,
    pub lag_e: f64,
    pub lag_d: f64,
    pub filt_de: f64,
    pub filt_dd: f64,
}

pub const STATE_LEN: usize = 7;

impl SfcState {
    pub fn to_array(&self) -> [f64; STATE_LEN] {
        [
            self.int_v,
            self.int_a,
            self.int_cl,
            self.lag_e,
            self.lag_d,
            self.filt_de,
            self.filt_dd,
        ]
    }

    pub fn from_array(a: &[f64; STATE_LEN]) -> Self {
        Self {
            int_v: a[0],
            int_a: a[1],
            int_cl: a[2],
            lag_e: a[3],
            lag_d: a[4],
            filt_de: a[5],
            filt_dd: a[6],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Quantities measured at PoC16 and at the inverter terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    pub u_g: f64,
    pub theta_g: f64,
    pub p_g: f64,
    pub q_g: f64,
    pub i_mag: f64,
    pub gamma: f64,
}

impl Measurements {
    fn is_finite(&self) -> bool {
        [self.u_g, self.theta_g, self.p_g, self.q_g, self.i_mag, self.gamma]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct References {
    pub theta_ref: f64,
    pub u_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverterOutput {
    pub e_mag: f64,
    pub delta: f64,
    pub limiting: bool,
}

impl InverterOutput {
    pub fn phasor(&self) -> Phasor {
        Phasor::from_polar(self.e_mag, self.delta)
    }
}

/// Output of the current limiter for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentLimitAction {
    pub d_int_cl: f64,
    pub target_de: f64,
    pub target_dd: f64,
    pub limiting: bool,
}

/// Wraps an angle difference into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Current limiter with the mode taken from the measured current.
pub fn current_limit_update(
    state: &SfcState,
    meas: &Measurements,
    out: &InverterOutput,
    gains: &ControlGains,
) -> CurrentLimitAction {
    current_limit_action(state, meas, out, gains, meas.i_mag > gains.i_max)
}

/// Current limiter with an externally held mode.
///
/// The PI error is `i_max - i_mag`, so overcurrent gives a negative output.
/// The two channels are weighted by the sensitivities of |I| to |E| and δ
/// (reactance folded into the gains), which are both positive for
/// 0 < δ-γ < π/2, so a negative output lowers the current.
pub fn current_limit_action(
    state: &SfcState,
    meas: &Measurements,
    out: &InverterOutput,
    gains: &ControlGains,
    limiting: bool,
) -> CurrentLimitAction {
    if !limiting {
        return CurrentLimitAction {
            d_int_cl: 0.0,
            target_de: 0.0,
            target_dd: 0.0,
            limiting: false,
        };
    }
    let err = gains.i_max - meas.i_mag;
    let pi_out = gains.kp_cl * err + gains.ki_cl * state.int_cl;
    let (s, c) = (out.delta - meas.gamma).sin_cos();
    CurrentLimitAction {
        d_int_cl: err,
        target_de: pi_out * s,
        target_dd: pi_out * c * out.e_mag,
        limiting: true,
    }
}

/// Clears the limiter integrator. Filter states are left to decay.
pub fn reset_current_limit(state: &SfcState) -> SfcState {
    SfcState { int_cl: 0.0, ..*state }
}

pub fn inverter_output(state: &SfcState, gains: &ControlGains, limiting: bool) -> InverterOutput {
    InverterOutput {
        e_mag: state.lag_e.clamp(0.0, gains.e_max),
        delta: state.lag_d,
        limiting,
    }
}

/// Inverter current through transformer and filter, `(E - U) / j(X_T + X_f)`.
pub fn current_from_phasors(e: Phasor, u: Phasor, x_t: f64, x_f: f64) -> Result<Phasor> {
    let x = x_t + x_f;
    if !(x > 0.0) {
        return Err(Error::invalid("x_t + x_f", format!("must be positive, got {x}")));
    }
    Ok((e - u) / Phasor::new(0.0, x))
}

/// Current magnitude from the real-part relation
/// `|I| = (|E| sin(δ-γ) - |U| sin(θ-γ)) / X`.
pub fn current_magnitude_projected(e: Phasor, u: Phasor, gamma: f64, x: f64) -> f64 {
    (e.norm() * (e.arg() - gamma).sin() - u.norm() * (u.arg() - gamma).sin()) / x
}

/// Intermediate signals of one controller evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSignals {
    /// Voltage PI output |E_ref|.
    pub e_ref: f64,
    /// Angle PI output δ_ref.
    pub delta_ref: f64,
    /// Clamped magnitude command fed to the converter lag.
    pub target_e: f64,
    pub target_d: f64,
    pub current_limit: CurrentLimitAction,
    pub voltage_integrating: bool,
    pub angle_integrating: bool,
}

pub fn control_signals(
    state: &SfcState,
    meas: &Measurements,
    refs: &References,
    gains: &ControlGains,
    limiting: bool,
) -> ControlSignals {
    let err_v = refs.u_ref - meas.u_g;
    let err_a = wrap_angle(refs.theta_ref - meas.theta_g);

    let e_ref = gains.kp_v * err_v + gains.ki_v * state.int_v;
    let delta_ref = gains.kp_a * err_a + gains.ki_a * state.int_a;

    let cmd_e = e_ref + state.filt_de;
    let target_e = cmd_e.clamp(0.0, gains.e_max);
    let target_d = delta_ref + state.filt_dd;

    let out = inverter_output(state, gains, limiting);
    let current_limit = current_limit_action(state, meas, &out, gains, limiting);

    // Conditional integration: the voltage loop stops integrating while the
    // magnitude command is clamped in the direction of its error, or while the
    // current limiter overrides it.
    let clamped = (cmd_e >= gains.e_max && err_v > 0.0) || (cmd_e <= 0.0 && err_v < 0.0);
    let voltage_integrating = !(gains.anti_windup_voltage && (clamped || limiting));
    let angle_integrating = !(gains.anti_windup_angle && limiting);

    ControlSignals {
        e_ref,
        delta_ref,
        target_e,
        target_d,
        current_limit,
        voltage_integrating,
        angle_integrating,
    }
}

/// Time derivatives of the controller state.
pub fn control_derivatives(
    state: &SfcState,
    meas: &Measurements,
    refs: &References,
    gains: &ControlGains,
    limiting: bool,
) -> Result<SfcState> {
    if !meas.is_finite() || !refs.theta_ref.is_finite() || !refs.u_ref.is_finite() {
        return Err(Error::NonFinite {
            t: f64::NAN,
            context: "controller input signals".into(),
        });
    }
    if !state.is_finite() {
        return Err(Error::NonFinite {
            t: f64::NAN,
            context: "controller state".into(),
        });
    }
    let sig = control_signals(state, meas, refs, gains, limiting);
    let err_v = refs.u_ref - meas.u_g;
    let err_a = wrap_angle(refs.theta_ref - meas.theta_g);
    Ok(SfcState {
        int_v: if sig.voltage_integrating { err_v } else { 0.0 },
        int_a: if sig.angle_integrating { err_a } else { 0.0 },
        int_cl: sig.current_limit.d_int_cl,
        lag_e: (sig.target_e - state.lag_e) / gains.t_c,
        lag_d: (sig.target_d - state.lag_d) / gains.t_c,
        filt_de: (sig.current_limit.target_de - state.filt_de) / gains.t_i,
        filt_dd: (sig.current_limit.target_dd - state.filt_dd) / gains.t_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn meas(u_g: f64, theta_g: f64, i_mag: f64, gamma: f64) -> Measurements {
        Measurements {
            u_g,
            theta_g,
            p_g: 0.0,
            q_g: 0.0,
            i_mag,
            gamma,
        }
    }

    #[test]
    fn equilibrium_has_zero_derivatives() {
        let g = ControlGains::default();
        let d = control_derivatives(
            &SfcState::default(),
            &meas(1.0, 0.0, 0.0, 0.0),
            &References { theta_ref: 0.0, u_ref: 1.0 },
            &g,
            false,
        )
        .unwrap();
        assert_eq!(d, SfcState::default());
    }

    #[test]
    fn angle_error_drives_integrator_and_lag() {
        let g = ControlGains::default();
        let s = SfcState::default();
        let m = meas(1.0, 0.0, 0.0, 0.0);
        let r = References { theta_ref: 0.01, u_ref: 1.0 };
        let sig = control_signals(&s, &m, &r, &g, false);
        assert_abs_diff_eq!(sig.target_d, 2.0e-4, epsilon = 1e-15);
        let d = control_derivatives(&s, &m, &r, &g, false).unwrap();
        assert_abs_diff_eq!(d.int_a, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(d.lag_d, 2.0e-4 / 0.05, epsilon = 1e-12);
    }

    #[test]
    fn voltage_pi_output() {
        let g = ControlGains::default();
        let s = SfcState { int_v: 0.1, ..Default::default() };
        let sig = control_signals(&s, &meas(0.95, 0.0, 0.0, 0.0), &References { theta_ref: 0.0, u_ref: 1.0 }, &g, false);
        assert_abs_diff_eq!(sig.e_ref, 0.201, epsilon = 1e-12);
        assert_abs_diff_eq!(sig.target_e, 0.201, epsilon = 1e-12);
    }

    #[test]
    fn magnitude_command_is_clamped() {
        let g = ControlGains::default();
        let s = SfcState { int_v: 1.0, ..Default::default() };
        let sig = control_signals(&s, &meas(1.0, 0.0, 0.0, 0.0), &References { theta_ref: 0.0, u_ref: 1.0 }, &g, false);
        assert_eq!(sig.target_e, 1.15);
        let s = SfcState { int_v: -1.0, ..Default::default() };
        let sig = control_signals(&s, &meas(1.0, 0.0, 0.0, 0.0), &References { theta_ref: 0.0, u_ref: 1.0 }, &g, false);
        assert_eq!(sig.target_e, 0.0);
    }

    #[test]
    fn limiter_below_threshold() {
        let g = ControlGains::default();
        let s = SfcState::default();
        let out = InverterOutput { e_mag: 1.0, delta: 0.0, limiting: false };
        let a = current_limit_update(&s, &meas(1.0, 0.0, 1.0, 0.0), &out, &g);
        assert!(!a.limiting);
        assert_eq!((a.target_de, a.target_dd), (0.0, 0.0));
    }

    #[test]
    fn limiter_magnitude_channel() {
        let g = ControlGains::default();
        let s = SfcState::default();
        let out = InverterOutput { e_mag: 1.1, delta: FRAC_PI_2, limiting: true };
        let a = current_limit_update(&s, &meas(1.0, 0.0, 2.5, 0.0), &out, &g);
        assert!(a.limiting);
        assert_abs_diff_eq!(a.target_de, -6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.target_dd, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.d_int_cl, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn limiter_angle_channel() {
        let g = ControlGains::default();
        let out = InverterOutput { e_mag: 1.0, delta: 0.3, limiting: true };
        let a = current_limit_update(&SfcState::default(), &meas(1.0, 0.0, 2.5, 0.3), &out, &g);
        assert_abs_diff_eq!(a.target_de, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.target_dd, -6.0, epsilon = 1e-12);
    }

    #[test]
    fn limiter_integrator_contributes() {
        let g = ControlGains::default();
        let s = SfcState { int_cl: -0.01, ..Default::default() };
        let out = InverterOutput { e_mag: 1.0, delta: FRAC_PI_2, limiting: true };
        let a = current_limit_action(&s, &meas(1.0, 0.0, 2.0, 0.0), &out, &g, true);
        assert_abs_diff_eq!(a.target_de, -0.75, epsilon = 1e-12);
    }

    #[test]
    fn reset_clears_only_integrator() {
        let s = SfcState { int_cl: 0.7, filt_de: 0.3, filt_dd: -0.2, lag_e: 1.0, ..Default::default() };
        let r = reset_current_limit(&s);
        assert_eq!(r.int_cl, 0.0);
        assert_eq!((r.filt_de, r.filt_dd, r.lag_e), (0.3, -0.2, 1.0));
        let z = SfcState::default();
        assert_eq!(reset_current_limit(&z), z);
    }

    #[test]
    fn output_clamp() {
        let g = ControlGains::default();
        let out = |e| inverter_output(&SfcState { lag_e: e, lag_d: 0.2, ..Default::default() }, &g, false);
        assert_eq!(out(1.0).e_mag, 1.0);
        assert_eq!(out(1.30).e_mag, 1.15);
        assert_eq!(out(-0.05).e_mag, 0.0);
        assert_eq!(out(1.0).delta, 0.2);
    }

    #[test]
    fn current_examples() {
        let u = Phasor::from_polar(1.0, 0.0);
        assert_eq!(current_from_phasors(u, u, 0.1, 0.1).unwrap(), Phasor::new(0.0, 0.0));

        let i = current_from_phasors(Phasor::from_polar(1.0, FRAC_PI_2), u, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(i.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(i.im, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(i.norm(), 2f64.sqrt(), epsilon = 1e-15);

        let e = Phasor::from_polar(1.1, 0.1);
        let i = current_from_phasors(e, u, 0.0957, 0.1232).unwrap();
        let proj = current_magnitude_projected(e, u, i.arg(), 0.0957 + 0.1232);
        assert_abs_diff_eq!(i.norm(), proj, epsilon = 1e-12);

        assert!(current_from_phasors(e, u, 0.0, 0.0).is_err());
    }

    #[test]
    fn non_finite_measurement_is_reported() {
        let g = ControlGains::default();
        let r = control_derivatives(
            &SfcState::default(),
            &meas(f64::NAN, 0.0, 0.0, 0.0),
            &References { theta_ref: 0.0, u_ref: 1.0 },
            &g,
            false,
        );
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn windup_and_anti_windup() {
        let mut g = ControlGains::default();
        // Saturated: integrator at the clamp, sustained undervoltage.
        let s = SfcState { int_v: 1.0, lag_e: 1.15, ..Default::default() };
        let m = meas(0.5, 0.0, 1.0, 0.0);
        let r = References { theta_ref: 0.0, u_ref: 1.0 };
        assert!(control_derivatives(&s, &m, &r, &g, false).unwrap().int_v > 0.0);
        g.anti_windup_voltage = true;
        assert_eq!(control_derivatives(&s, &m, &r, &g, false).unwrap().int_v, 0.0);
        // Limiting also suspends integration with anti-windup on.
        let s = SfcState { int_v: 0.5, lag_e: 1.0, ..Default::default() };
        assert_eq!(control_derivatives(&s, &m, &r, &g, true).unwrap().int_v, 0.0);
        assert!(control_derivatives(&s, &m, &r, &g, false).unwrap().int_v > 0.0);
    }

    #[test]
    fn gains_validation() {
        assert!(ControlGains::default().validate().is_ok());
        let g = ControlGains { t_i: 0.0, ..Default::default() };
        assert!(g.validate().is_err());
        let g = ControlGains { e_max: -1.0, ..Default::default() };
        assert!(g.validate().is_err());
        let g = ControlGains { kp_v: f64::INFINITY, ..Default::default() };
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn projected_magnitude_matches_division(
            em in 0.0f64..2.0, ea in -3.0f64..3.0, um in 0.0f64..2.0, ua in -3.0f64..3.0, x in 0.01f64..1.0,
        ) {
            let e = Phasor::from_polar(em, ea);
            let u = Phasor::from_polar(um, ua);
            let i = current_from_phasors(e, u, x * 0.4, x * 0.6).unwrap();
            let proj = current_magnitude_projected(e, u, i.arg(), x);
            prop_assert!((i.norm() - proj).abs() < 1e-10 * (1.0 + i.norm()));
        }

        #[test]
        fn wrap_stays_in_range(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            prop_assert!(((a - w) / (2.0 * PI) - ((a - w) / (2.0 * PI)).round()).abs() < 1e-9);
        }
    }
}
