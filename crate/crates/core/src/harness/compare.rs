//! Quantitative comparison of a simulated trace with a measured recording.

use super::io::MeasuredTrace;
use crate::error::{Error, Result};
use crate::simulator::TraceSet;
use std::fmt::Write as _;

/// Both series on the measured sample grid, after alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    /// Measured minus simulated time, s. Positive when the recording lags.
    pub offset_s: f64,
    /// Simulation time of each grid point.
    pub time: Vec<f64>,
    pub u_sim: Vec<f64>,
    pub i_sim: Vec<f64>,
    pub u_meas: Vec<f64>,
    pub i_meas: Vec<f64>,
    pub fault: Vec<bool>,
}

/// Linear interpolation; `t` must lie within `time`.
fn interp(time: &[f64], v: &[f64], t: f64) -> f64 {
    let k = time.partition_point(|&x| x <= t);
    if k == 0 {
        return v[0];
    }
    if k >= time.len() {
        return v[time.len() - 1];
    }
    let (t0, t1) = (time[k - 1], time[k]);
    let w = (t - t0) / (t1 - t0);
    v[k - 1] + w * (v[k] - v[k - 1])
}

fn median_step(time: &[f64]) -> f64 {
    let mut d: Vec<f64> = time.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Overlap of the shifted recording with the simulation: indices of
/// measured samples whose simulation time lies inside the trace.
fn overlap(sim: &TraceSet, meas: &MeasuredTrace, offset: f64) -> Vec<usize> {
    let (a, b) = (sim.time[0], sim.time[sim.len() - 1]);
    (0..meas.len())
        .filter(|&k| {
            let t = meas.time[k] - offset;
            t >= a && t <= b
        })
        .collect()
}

fn voltage_rmse(sim: &TraceSet, meas: &MeasuredTrace, offset: f64, idx: &[usize]) -> f64 {
    let ss: f64 = idx
        .iter()
        .map(|&k| (interp(&sim.time, &sim.u_mag, meas.time[k] - offset) - meas.u_mag[k]).powi(2))
        .sum();
    (ss / idx.len() as f64).sqrt()
}

/// Resamples the simulation onto the measured grid, choosing the time offset
/// within `±max_offset` that minimizes the voltage RMSE. The offset grid
/// step is the finer of the two median sample spacings; ties go to the
/// smaller offset.
pub fn resample_align(sim: &TraceSet, measured: &MeasuredTrace, max_offset: f64) -> Result<AlignedPair> {
    sim.validate()?;
    measured.validate()?;
    if !(max_offset.is_finite() && max_offset >= 0.0) {
        return Err(Error::invalid("max_offset", "must be non-negative"));
    }
    let step = median_step(&sim.time).min(median_step(&measured.time));
    let n = (max_offset / step + 1e-9).floor() as i64;
    let mut best: Option<(f64, f64)> = None;
    // increasing |k| so that ties keep the smaller shift
    for m in 0..=2 * n {
        let k = if m % 2 == 0 { -(m / 2) } else { m / 2 + 1 };
        if k.abs() > n {
            continue;
        }
        let off = k as f64 * step;
        let idx = overlap(sim, measured, off);
        if idx.len() < 2 {
            continue;
        }
        let e = voltage_rmse(sim, measured, off, &idx);
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((off, e));
        }
    }
    let (offset_s, _) = best.ok_or(Error::NoOverlap)?;
    let idx = overlap(sim, measured, offset_s);
    let time: Vec<f64> = idx.iter().map(|&k| measured.time[k] - offset_s).collect();
    let fault = time
        .iter()
        .map(|&t| sim.fault[sim.time.partition_point(|&x| x <= t).saturating_sub(1)])
        .collect();
    Ok(AlignedPair {
        offset_s,
        u_sim: time.iter().map(|&t| interp(&sim.time, &sim.u_mag, t)).collect(),
        i_sim: time.iter().map(|&t| interp(&sim.time, &sim.i_mag, t)).collect(),
        u_meas: idx.iter().map(|&k| measured.u_mag[k]).collect(),
        i_meas: idx.iter().map(|&k| measured.i_mag[k]).collect(),
        time,
        fault,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    PreFault,
    DuringFault,
    PostFault,
}

impl Window {
    pub const ALL: [Window; 3] = [Window::PreFault, Window::DuringFault, Window::PostFault];

    pub fn key(&self) -> &'static str {
        match self {
            Window::PreFault => "pre_fault",
            Window::DuringFault => "during_fault",
            Window::PostFault => "post_fault",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorMetrics {
    pub n_points: usize,
    pub rmse_u: f64,
    pub rmse_i: f64,
    pub max_err_u: f64,
    pub max_err_i: f64,
}

impl ErrorMetrics {
    fn from_points(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut m = ErrorMetrics::default();
        let (mut su, mut si) = (0.0, 0.0);
        for (du, di) in points {
            m.n_points += 1;
            su += du * du;
            si += di * di;
            m.max_err_u = m.max_err_u.max(du.abs());
            m.max_err_i = m.max_err_i.max(di.abs());
        }
        if m.n_points > 0 {
            m.rmse_u = (su / m.n_points as f64).sqrt();
            m.rmse_i = (si / m.n_points as f64).sqrt();
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub offset_s: f64,
    pub overall: ErrorMetrics,
    /// Indexed like [`Window::ALL`].
    pub windows: [ErrorMetrics; 3],
}

impl ComparisonReport {
    pub fn window(&self, w: Window) -> &ErrorMetrics {
        &self.windows[w as usize]
    }

    pub fn rmse_u(&self) -> f64 {
        self.overall.rmse_u
    }

    pub fn rmse_i(&self) -> f64 {
        self.overall.rmse_i
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alignment offset: {:.6} s", self.offset_s);
        let _ = writeln!(
            s,
            "{:<14}{:>8}{:>14}{:>14}{:>14}{:>14}",
            "window", "points", "rmse_u", "max_err_u", "rmse_i", "max_err_i"
        );
        let rows = std::iter::once(("overall", &self.overall))
            .chain(Window::ALL.iter().map(|w| (w.key(), self.window(*w))));
        for (name, m) in rows {
            let _ = writeln!(
                s,
                "{:<14}{:>8}{:>14.6e}{:>14.6e}{:>14.6e}{:>14.6e}",
                name, m.n_points, m.rmse_u, m.max_err_u, m.rmse_i, m.max_err_i
            );
        }
        s
    }

    /// Flat `key = value` document (valid TOML).
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "offset_s = {:?}", self.offset_s);
        let rows = std::iter::once(("", &self.overall)).chain(Window::ALL.iter().map(|w| (w.key(), self.window(*w))));
        for (prefix, m) in rows {
            let p = if prefix.is_empty() { String::new() } else { format!("{prefix}_") };
            let _ = writeln!(s, "{p}n_points = {}", m.n_points);
            let _ = writeln!(s, "{p}rmse_u = {:?}", m.rmse_u);
            let _ = writeln!(s, "{p}rmse_i = {:?}", m.rmse_i);
            let _ = writeln!(s, "{p}max_err_u = {:?}", m.max_err_u);
            let _ = writeln!(s, "{p}max_err_i = {:?}", m.max_err_i);
        }
        s
    }
}

/// Error metrics of an aligned pair, split at the fault flag of the
/// simulation into pre-fault, faulted and post-fault points.
pub fn report(pair: &AlignedPair) -> ComparisonReport {
    let first_fault = pair.fault.iter().position(|&f| f).unwrap_or(pair.time.len());
    let window_of = |k: usize| {
        if pair.fault[k] {
            Window::DuringFault
        } else if k < first_fault {
            Window::PreFault
        } else {
            Window::PostFault
        }
    };
    let err = |k: usize| (pair.u_sim[k] - pair.u_meas[k], pair.i_sim[k] - pair.i_meas[k]);
    let n = pair.time.len();
    let windows = Window::ALL.map(|w| ErrorMetrics::from_points((0..n).filter(|&k| window_of(k) == w).map(err)));
    ComparisonReport {
        offset_s: pair.offset_s,
        overall: ErrorMetrics::from_points((0..n).map(err)),
        windows,
    }
}

/// Aligns and scores `measured` against `sim`.
pub fn compare(sim: &TraceSet, measured: &MeasuredTrace, max_offset: f64) -> Result<ComparisonReport> {
    Ok(report(&resample_align(sim, measured, max_offset)?))
}
