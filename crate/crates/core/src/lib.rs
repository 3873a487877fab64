//! Phasor-domain simulation of a static frequency converter feeding a
//! 16⅔ Hz railway grid.
//!
//! The converter emulates the steady state of a rotary converter (phase
//! shift and voltage droop) through PI regulation of its inverter voltage,
//! with a current limiter that takes over during faults. The feeder is an
//! algebraic phasor network; the controller states are integrated with an
//! adaptive Runge–Kutta scheme that stops exactly at fault events and
//! limiter mode switches.

// `!(x > 0.0)` checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod harness;
pub mod loadflow;
pub mod network;
pub mod perunit;
pub mod rfc;
pub mod scenario;
pub mod simulator;

pub use control::{ControlGains, InverterOutput, Measurements, References, SfcState};
pub use error::{Error, Result};
pub use harness::{ComparisonReport, MeasuredTrace, TraceSummary};
pub use loadflow::{solve_loadflow, LoadFlowOptions, LoadFlowResult};
pub use network::{FeederModel, NetworkSolution, NetworkSolver, Phasor};
pub use perunit::BaseSystem;
pub use rfc::RfcParams;
pub use scenario::{builtin_case, load_scenario, Scenario};
pub use simulator::{Event, EventKind, SimConfig, SimResult, Simulator, TraceSet};
