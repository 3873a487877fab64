//! Dormand–Prince 5(4) with the 4th-order continuous extension of
//! Hairer, Nørsett & Wanner (`dopri5`).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i]))))
    }
}

/// Result of one trial step.
pub struct Trial<const N: usize> {
    pub y1: [f64; N],
    /// Derivative at the new point (first stage of the next step).
    pub k7: [f64; N],
    /// Scaled RMS error norm; accept when ≤ 1.
    pub err: f64,
    pub dense: DenseSegment<N>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

/// Attempts one step of size `h` from `(t, y)` with `k1 = f(t, y)`.
pub fn trial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trial<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y1)?;

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = atol + rtol * y[i].abs().max(y1[i].abs());
        sum += (e / sk).powi(2);
    }
    let err = (sum / N as f64).sqrt();

    let mut rcont = [[0.0; N]; 5];
    for i in 0..N {
        let ydiff = y1[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * k7[i] - bspl;
        rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(Trial {
        y1,
        k7,
        err,
        dense: DenseSegment { t0: t, h, rcont },
    })
}

/// PI step-size controller.
#[derive(Debug, Clone, Copy)]
pub struct StepController {
    fac_old: f64,
}

impl Default for StepController {
    fn default() -> Self {
        Self { fac_old: 1e-4 }
    }
}

impl StepController {
    /// Next step size after an accepted step with error `err`.
    pub fn accept(&mut self, h: f64, err: f64) -> f64 {
        let fac11 = err.max(1e-300).powf(0.2 - BETA * 0.75);
        let fac = (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        self.fac_old = err.max(1e-4);
        h / fac
    }

    /// Next step size after a rejected step with error `err`.
    pub fn reject(&self, h: f64, err: f64) -> f64 {
        let fac11 = err.powf(0.2 - BETA * 0.75);
        h / (fac11 / SAFETY).min(1.0 / FAC_MIN)
    }

    pub fn reset(&mut self) {
        self.fac_old = 1e-4;
    }
}

/// Initial step size guess (Hairer's heuristic).
pub fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    rtol: f64,
    atol: f64,
    h_max: f64,
) -> Result<f64>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let sk: [f64; N] = std::array::from_fn(|i| atol + rtol * y[i].abs());
    let norm = |v: &[f64; N]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(y);
    let d1 = norm(k1);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(h_max);
    let y1: [f64; N] = std::array::from_fn(|i| y[i] + h0 * k1[i]);
    let k2 = f(t + h0, &y1)?;
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1).min(h_max);
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::StepSizeUnderflow { t, h });
    }
    Ok(h)
}
