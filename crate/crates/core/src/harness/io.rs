//! CSV trace files.

use crate::error::{Error, Result};
use crate::simulator::{Sample, TraceSet};
use std::io::{Read, Write};

/// Column order of written traces.
pub const TRACE_COLUMNS: [&str; 12] = [
    "time_s",
    "u_pu",
    "theta_rad",
    "i_pu",
    "p_pu",
    "q_pu",
    "e_pu",
    "delta_rad",
    "limiting",
    "int_v",
    "int_cl",
    "fault",
];

/// Required columns of a measured trace.
pub const MEASURED_COLUMNS: [&str; 3] = ["time_s", "u_pu", "i_pu"];

/// A measured RMS recording.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasuredTrace {
    pub time: Vec<f64>,
    pub u_mag: Vec<f64>,
    pub i_mag: Vec<f64>,
}

impl MeasuredTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Voltage and current columns of a simulated trace.
    pub fn from_trace(trace: &TraceSet) -> Self {
        Self {
            time: trace.time.clone(),
            u_mag: trace.u_mag.clone(),
            i_mag: trace.i_mag.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_series(&self.time, &[&self.u_mag, &self.i_mag])
    }
}

fn check_series(time: &[f64], cols: &[&Vec<f64>]) -> Result<()> {
    if time.len() < 2 {
        return Err(Error::Csv("a trace needs at least two samples".into()));
    }
    for (k, w) in time.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Csv(format!("time is not strictly increasing at row {}", k + 2)));
        }
    }
    for (k, _) in time.iter().enumerate() {
        if !time[k].is_finite() || cols.iter().any(|c| !c[k].is_finite()) {
            return Err(Error::Csv(format!("non-finite value at row {}", k + 1)));
        }
    }
    Ok(())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes `trace` with full `f64` precision.
pub fn write_trace<W: Write>(trace: &TraceSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for s in trace.samples() {
        w.write_record([
            s.time.to_string(),
            s.u_mag.to_string(),
            s.theta_g.to_string(),
            s.i_mag.to_string(),
            s.p_g.to_string(),
            s.q_g.to_string(),
            s.e_mag.to_string(),
            s.delta.to_string(),
            flag(s.limiting).into(),
            s.int_v.to_string(),
            s.int_cl.to_string(),
            flag(s.fault).into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = r.headers()?.iter().map(str::to_owned).collect();
        let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(format!("missing column `{name}`")))
    }

    fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let s = r.get(c).unwrap_or("");
                s.parse::<f64>()
                    .map_err(|_| Error::Csv(format!("row {}: `{s}` in column `{name}` is not a number", k + 2)))
            })
            .collect()
    }

    fn flags(&self, name: &str) -> Result<Vec<bool>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| match r.get(c).unwrap_or("") {
                "0" | "false" => Ok(false),
                "1" | "true" => Ok(true),
                s => Err(Error::Csv(format!("row {}: `{s}` in column `{name}` is not a flag", k + 2))),
            })
            .collect()
    }
}

/// Reads a trace written by [`write_trace`].
pub fn read_trace<R: Read>(input: R) -> Result<TraceSet> {
    let t = Table::read(input)?;
    let time = t.floats("time_s")?;
    let cols: Vec<Vec<f64>> = ["u_pu", "theta_rad", "i_pu", "p_pu", "q_pu", "e_pu", "delta_rad", "int_v", "int_cl"]
        .iter()
        .map(|c| t.floats(c))
        .collect::<Result<_>>()?;
    let limiting = t.flags("limiting")?;
    let fault = t.flags("fault")?;
    let mut trace = TraceSet::default();
    for k in 0..time.len() {
        trace.push(Sample {
            time: time[k],
            u_mag: cols[0][k],
            theta_g: cols[1][k],
            i_mag: cols[2][k],
            p_g: cols[3][k],
            q_g: cols[4][k],
            e_mag: cols[5][k],
            delta: cols[6][k],
            limiting: limiting[k],
            int_v: cols[7][k],
            int_cl: cols[8][k],
            fault: fault[k],
        });
    }
    check_series(&trace.time, &[&trace.u_mag, &trace.i_mag])?;
    Ok(trace)
}

/// Reads a measured trace with columns `time_s`, `u_pu`, `i_pu`. Other
/// columns are ignored, so simulated traces are accepted as well.
pub fn read_measured<R: Read>(input: R) -> Result<MeasuredTrace> {
    let t = Table::read(input)?;
    let m = MeasuredTrace {
        time: t.floats("time_s")?,
        u_mag: t.floats("u_pu")?,
        i_mag: t.floats("i_pu")?,
    };
    m.validate()?;
    Ok(m)
}
