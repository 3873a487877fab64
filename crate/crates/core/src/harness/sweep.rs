//! Parameter sweeps and trace summaries.

use super::super::scenario::{
    default_t_end, load_scenario_with_base,
    units::{parse_quantity, parse_real_quantity, Dimension, Unit},
    ImpedanceSpec, Scenario,
};
use crate::error::{Error, Result};
use crate::simulator::TraceSet;
use rayon::prelude::*;

/// Scalar features of one simulated trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    /// PoC16 voltage just before the first fault.
    pub pre_fault_u: f64,
    pub min_u: f64,
    pub max_i: f64,
    pub max_e: f64,
    /// Highest voltage after the last fault cleared.
    pub max_u_post: f64,
    /// `max_u_post - pre_fault_u`.
    pub overshoot: f64,
    /// Traced time spent with the current limiter active, s.
    pub limiting_time_s: f64,
    pub final_u: f64,
}

impl TraceSummary {
    pub const FIELDS: [&'static str; 8] = [
        "pre_fault_u",
        "min_u",
        "max_i",
        "max_e",
        "max_u_post",
        "overshoot",
        "limiting_time_s",
        "final_u",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.pre_fault_u,
            self.min_u,
            self.max_i,
            self.max_e,
            self.max_u_post,
            self.overshoot,
            self.limiting_time_s,
            self.final_u,
        ]
    }
}

pub fn summarize(trace: &TraceSet) -> Result<TraceSummary> {
    trace.validate()?;
    let n = trace.len();
    let first_fault = trace.fault.iter().position(|&f| f);
    let last_fault = trace.fault.iter().rposition(|&f| f);
    let pre = first_fault.map(|k| k.saturating_sub(1)).unwrap_or(0);
    let post_start = last_fault.map(|k| k + 1).unwrap_or(n);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pre_fault_u = trace.u_mag[pre];
    let max_u_post = if post_start < n { max(&trace.u_mag[post_start..]) } else { f64::NAN };
    let limiting_time_s = (1..n)
        .filter(|&k| trace.limiting[k])
        .fold(0.0, |acc, k| acc + trace.time[k] - trace.time[k - 1]);
    Ok(TraceSummary {
        pre_fault_u,
        min_u: trace.u_mag.iter().copied().fold(f64::INFINITY, f64::min),
        max_i: max(&trace.i_mag),
        max_e: max(&trace.e_mag),
        max_u_post,
        overshoot: max_u_post - pre_fault_u,
        limiting_time_s,
        final_u: trace.u_mag[n - 1],
    })
}

fn fault_dimension(key: &str) -> Option<Dimension> {
    Some(match key {
        "impedance" => Dimension::Impedance,
        "position" => Dimension::Length,
        "start" | "duration" => Dimension::Time,
        _ => return None,
    })
}

/// Sets one scenario parameter addressed as `section.key`, with the value
/// written as in a scenario file (`"2 MW"`, `"0.03"`, `"true"`).
///
/// `fault.<key>` changes every fault. When a fault would then outlast the
/// simulation, `t_end` is extended to the default post-fault margin.
pub fn set_parameter(sc: &mut Scenario, path: &str, value: &str) -> Result<()> {
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| Error::Scenario(format!("parameter `{path}` must be written as section.key")))?;
    if section == "fault" {
        let dim = fault_dimension(key).ok_or_else(|| Error::Scenario(format!("unknown fault parameter `{key}`")))?;
        if sc.faults.is_empty() {
            return Err(Error::Scenario("scenario has no fault to modify".into()));
        }
        let err = |m: String| Error::Scenario(format!("{path}: {m}"));
        for f in &mut sc.faults {
            match key {
                "impedance" => {
                    let q = parse_quantity(value, dim).map_err(err)?;
                    f.impedance = match q.unit {
                        Unit::Pu => ImpedanceSpec::Pu(q.value),
                        _ => ImpedanceSpec::Ohm(q.value),
                    };
                }
                "position" => f.pos_km = parse_real_quantity(value, dim).map_err(err)?,
                "start" => f.start_s = parse_real_quantity(value, dim).map_err(err)?,
                _ => f.duration_s = parse_real_quantity(value, dim).map_err(err)?,
            }
        }
        sc.config.t_end = sc.config.t_end.max(default_t_end(&sc.faults));
        return sc.validate();
    }
    let literal = if value.parse::<f64>().is_ok() || value == "true" || value == "false" {
        value.to_string()
    } else {
        format!("{value:?}")
    };
    let overlay = format!("[{section}]\n{key} = {literal}\n");
    *sc = load_scenario_with_base(&overlay, sc.clone())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: String,
    pub summary: Result<TraceSummary>,
}

/// Runs `base` once per value of `param`, in parallel on at most `threads`
/// workers (all cores when `None`). Results keep the order of `values` and
/// do not depend on the number of workers.
pub fn sweep(base: &Scenario, param: &str, values: &[String], threads: Option<usize>) -> Result<Vec<SweepPoint>> {
    let scenarios = values
        .iter()
        .map(|v| {
            let mut sc = base.clone();
            set_parameter(&mut sc, param, v)?;
            Ok(sc)
        })
        .collect::<Result<Vec<_>>>()?;
    let job = || -> Vec<SweepPoint> {
        scenarios
            .par_iter()
            .zip(values.par_iter())
            .map(|(sc, v)| SweepPoint {
                value: v.clone(),
                summary: sc.run_with_stats(&sc.config).and_then(|r| summarize(&r.trace)),
            })
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Scenario(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

/// Sweep results as CSV: value, status, then the summary fields.
pub fn write_sweep<W: std::io::Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["value", "status"];
    header.extend(TraceSummary::FIELDS);
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.value.clone()];
        match &p.summary {
            Ok(s) => {
                row.push("ok".into());
                row.extend(s.values().iter().map(f64::to_string));
            }
            Err(e) => {
                row.push(format!("error: {e}"));
                row.extend(std::iter::repeat_n(String::new(), TraceSummary::FIELDS.len()));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
