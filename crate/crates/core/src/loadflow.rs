//! Pre-fault operating point.
//!
//! PoC16 is treated as a voltage-controlled bus whose magnitude follows the
//! droop law and whose angle follows the rotary-converter angle law. The
//! train is a constant-power load during the iteration; its admittance is
//! refreshed from the load-node voltage until the PoC16 phasor settles.

use crate::control::{ControlGains, SfcState};
use crate::error::{Error, Result};
use crate::network::{build_admittance, FeederModel, Phasor};
use crate::rfc::{angle_reference, voltage_reference, RfcParams};
use num_complex::Complex64;

/// Load-node voltage (p.u.) below which the load is declared infeasible.
const COLLAPSE_VOLTAGE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadFlowOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LoadFlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadFlowResult {
    pub e_inv0: Phasor,
    pub u_poc0: Phasor,
    pub u_load0: Phasor,
    pub i_inv0: Phasor,
    pub p_g0: f64,
    pub q_g0: f64,
    pub y_load: Complex64,
    pub controller_init: SfcState,
    pub iterations: usize,
}

impl LoadFlowResult {
    /// The feeder with the converged load admittance.
    pub fn feeder(&self, template: &FeederModel) -> FeederModel {
        FeederModel {
            y_load: self.y_load,
            ..*template
        }
    }

    /// Whether the equilibrium needs more inverter voltage than available.
    pub fn exceeds_e_max(&self, gains: &ControlGains) -> bool {
        self.e_inv0.norm() > gains.e_max
    }
}

/// Solves the operating point for a train drawing `s_load` (p.u.).
///
/// The fault fields of `feeder` are ignored; its `y_load` is overwritten.
pub fn solve_loadflow(
    feeder: &FeederModel,
    s_load: Complex64,
    rfc: &RfcParams,
    theta_50: f64,
    gains: &ControlGains,
    opts: LoadFlowOptions,
) -> Result<LoadFlowResult> {
    let u_start = Phasor::from_polar(rfc.u0, theta_50 / 3.0);
    solve_loadflow_from(feeder, s_load, rfc, theta_50, gains, opts, u_start)
}

/// As [`solve_loadflow`], starting the iteration from the PoC16 guess `u_start`.
pub fn solve_loadflow_from(
    feeder: &FeederModel,
    s_load: Complex64,
    rfc: &RfcParams,
    theta_50: f64,
    gains: &ControlGains,
    opts: LoadFlowOptions,
    u_start: Phasor,
) -> Result<LoadFlowResult> {
    rfc.validate()?;
    gains.validate()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("loadflow options", "tol must be positive and max_iter non-zero"));
    }
    if !(s_load.re.is_finite() && s_load.im.is_finite()) || s_load.re < 0.0 {
        return Err(Error::invalid("s_load", "active power must be finite and non-negative"));
    }
    let infeasible = || Error::InfeasibleLoad {
        p_pu: s_load.re,
        q_pu: s_load.im,
    };

    let mut template = feeder.clear_fault();
    let mut u = u_start;
    let mut y_load = s_load.conj() / u.norm_sqr().max(COLLAPSE_VOLTAGE * COLLAPSE_VOLTAGE);
    let mut residual = f64::INFINITY;

    for it in 1..=opts.max_iter {
        template.y_load = y_load;
        let net = build_admittance(&template)?;
        let (v, i_g) = net.solve_with_poc_voltage(u)?;
        let u_load = v[net.load_node()];
        if !u_load.norm().is_finite() || u_load.norm() < COLLAPSE_VOLTAGE * rfc.u0 {
            return Err(infeasible());
        }
        let s_g = u * i_g.conj();
        let (p_g, q_g) = (s_g.re, s_g.im);

        let u_mag = voltage_reference(rfc, q_g);
        if !(u_mag > 0.0) {
            return Err(infeasible());
        }
        let theta = angle_reference(rfc, theta_50, p_g, q_g, u.norm())?;
        let u_new = Phasor::from_polar(u_mag, theta);
        let y_new = s_load.conj() / u_load.norm_sqr();

        residual = (u_new - u).norm().max((y_new - y_load).norm());
        let load_mismatch = (u_load.norm_sqr() * y_load.conj() - s_load).norm();
        u = u_new;
        y_load = y_new;

        if residual < opts.tol && load_mismatch < opts.tol {
            template.y_load = y_load;
            return finish(&template, u, gains, it);
        }
    }
    Err(Error::LoadFlowNonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

fn finish(
    feeder: &FeederModel,
    u: Phasor,
    gains: &ControlGains,
    iterations: usize,
) -> Result<LoadFlowResult> {
    let net = build_admittance(feeder)?;
    let (v, i_g) = net.solve_with_poc_voltage(u)?;
    let s = u * i_g.conj();
    let e = u + Complex64::new(0.0, feeder.x_total()) * i_g;
    let (e_mag, delta) = e.to_polar();

    // Zero error at equilibrium: the integrators alone carry the commands.
    let controller_init = SfcState {
        int_v: e_mag / gains.ki_v,
        int_a: delta / gains.ki_a,
        int_cl: 0.0,
        lag_e: e_mag,
        lag_d: delta,
        filt_de: 0.0,
        filt_dd: 0.0,
    };
    Ok(LoadFlowResult {
        e_inv0: e,
        u_poc0: u,
        u_load0: v[net.load_node()],
        i_inv0: i_g,
        p_g0: s.re,
        q_g0: s.im,
        y_load: feeder.y_load,
        controller_init,
        iterations,
    })
}
