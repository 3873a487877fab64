//! Trace files, comparison against recordings and batch runs.

pub mod compare;
pub mod io;
pub mod sweep;

pub use compare::{compare, report, resample_align, AlignedPair, ComparisonReport, ErrorMetrics, Window};
pub use io::{read_measured, read_trace, write_trace, MeasuredTrace, MEASURED_COLUMNS, TRACE_COLUMNS};
pub use sweep::{set_parameter, summarize, sweep, write_sweep, SweepPoint, TraceSummary};

/// Environment variable capping the number of parallel runs.
pub const THREADS_ENV: &str = "RAIL_SIM_THREADS";

/// Worker count from [`THREADS_ENV`]; `None` when unset or not a positive
/// integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}
