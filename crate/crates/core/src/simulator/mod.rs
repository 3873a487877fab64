//! Hybrid integration of the converter controller against the algebraic
//! network.
//!
//! The continuous state is advanced with an adaptive Dormand–Prince pair.
//! Each derivative evaluation solves the network for the current inverter
//! phasor. Two kinds of discrete change interrupt the integration: timed
//! fault events, which are hit exactly, and current-limiter mode switches,
//! located by bisection on the dense output. Stepping restarts after both.

pub mod dopri;
pub mod events;

pub use events::{locate_mode_switch, SWITCH_TOLERANCE};

use crate::control::{
    control_derivatives, inverter_output, reset_current_limit, ControlGains, Measurements, References, SfcState,
    STATE_LEN,
};
use crate::error::{Error, Result};
use crate::network::{FeederModel, NetworkSolution, NetworkSolver};
use crate::rfc::{angle_reference, voltage_reference, RfcParams};
use dopri::{initial_step, trial_step, DenseSegment, StepController};
use num_complex::Complex64;

type State = [f64; STATE_LEN];

/// Consecutive mode switches without time progress before giving up.
const MAX_STALLED_SWITCHES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub output_dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 4.0,
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            max_step: 0.010,
            output_dt: 0.001,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("t_end", self.t_end),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("output_dt", self.output_dt),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    ApplyFault { z_fault: Complex64, pos_km: f64 },
    ClearFault,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Time series sampled at PoC16 and at the inverter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSet {
    pub time: Vec<f64>,
    pub u_mag: Vec<f64>,
    pub theta_g: Vec<f64>,
    pub i_mag: Vec<f64>,
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    pub e_mag: Vec<f64>,
    pub delta: Vec<f64>,
    pub limiting: Vec<bool>,
    pub int_v: Vec<f64>,
    pub int_cl: Vec<f64>,
    pub fault: Vec<bool>,
}

/// One row of a [`TraceSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub u_mag: f64,
    pub theta_g: f64,
    pub i_mag: f64,
    pub p_g: f64,
    pub q_g: f64,
    pub e_mag: f64,
    pub delta: f64,
    pub limiting: bool,
    pub int_v: f64,
    pub int_cl: f64,
    pub fault: bool,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn push(&mut self, s: Sample) {
        self.time.push(s.time);
        self.u_mag.push(s.u_mag);
        self.theta_g.push(s.theta_g);
        self.i_mag.push(s.i_mag);
        self.p_g.push(s.p_g);
        self.q_g.push(s.q_g);
        self.e_mag.push(s.e_mag);
        self.delta.push(s.delta);
        self.limiting.push(s.limiting);
        self.int_v.push(s.int_v);
        self.int_cl.push(s.int_cl);
        self.fault.push(s.fault);
    }

    pub fn sample(&self, k: usize) -> Sample {
        Sample {
            time: self.time[k],
            u_mag: self.u_mag[k],
            theta_g: self.theta_g[k],
            i_mag: self.i_mag[k],
            p_g: self.p_g[k],
            q_g: self.q_g[k],
            e_mag: self.e_mag[k],
            delta: self.delta[k],
            limiting: self.limiting[k],
            int_v: self.int_v[k],
            int_cl: self.int_cl[k],
            fault: self.fault[k],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        (0..self.len()).map(|k| self.sample(k))
    }

    /// Checks equal column lengths and strictly increasing time.
    pub fn validate(&self) -> Result<()> {
        let n = self.time.len();
        let lens = [
            self.u_mag.len(),
            self.theta_g.len(),
            self.i_mag.len(),
            self.p_g.len(),
            self.q_g.len(),
            self.e_mag.len(),
            self.delta.len(),
            self.limiting.len(),
            self.int_v.len(),
            self.int_cl.len(),
            self.fault.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::invalid("trace", "columns have different lengths"));
        }
        if self.time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trace", "time must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Times at which the current limiter engaged or released.
    pub mode_switches: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: TraceSet,
    pub stats: SimStats,
    pub final_state: SfcState,
}

/// Parameters of the plant seen by the integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub rfc: RfcParams,
    pub gains: ControlGains,
    pub theta_50: f64,
}

/// Algebraic quantities at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot {
    pub solution: NetworkSolution,
    pub meas: Measurements,
    pub e_mag: f64,
    pub delta: f64,
}

impl Plant {
    pub fn snapshot(&self, solver: &NetworkSolver, state: &SfcState, limiting: bool) -> Snapshot {
        let out = inverter_output(state, &self.gains, limiting);
        let solution = solver.solve(out.phasor());
        let meas = Measurements {
            u_g: solution.u_poc.norm(),
            theta_g: solution.u_poc.arg(),
            p_g: solution.p_g,
            q_g: solution.q_g,
            i_mag: solution.i_inv.norm(),
            gamma: solution.i_inv.arg(),
        };
        Snapshot {
            solution,
            meas,
            e_mag: out.e_mag,
            delta: out.delta,
        }
    }

    pub fn references(&self, meas: &Measurements) -> Result<References> {
        Ok(References {
            theta_ref: angle_reference(&self.rfc, self.theta_50, meas.p_g, meas.q_g, meas.u_g)?,
            u_ref: voltage_reference(&self.rfc, meas.q_g),
        })
    }

    /// State derivatives with the limiter mode held at `limiting`.
    pub fn derivatives(&self, solver: &NetworkSolver, state: &SfcState, limiting: bool) -> Result<SfcState> {
        let snap = self.snapshot(solver, state, limiting);
        let refs = self.references(&snap.meas)?;
        control_derivatives(state, &snap.meas, &refs, &self.gains, limiting)
    }
}

/// One configured simulation.
#[derive(Debug, Clone)]
pub struct Simulator {
    plant: Plant,
    feeder: FeederModel,
    initial: SfcState,
    events: Vec<Event>,
    config: SimConfig,
}

impl Simulator {
    pub fn new(plant: Plant, feeder: FeederModel, initial: SfcState, mut events: Vec<Event>, config: SimConfig) -> Result<Self> {
        plant.rfc.validate()?;
        plant.gains.validate()?;
        feeder.validate()?;
        config.validate()?;
        if !initial.is_finite() {
            return Err(Error::invalid("initial state", "must be finite"));
        }
        for e in &events {
            if !(e.time.is_finite() && e.time >= 0.0 && e.time <= config.t_end) {
                return Err(Error::invalid("event time", format!("{} s is outside [0, t_end]", e.time)));
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self {
            plant,
            feeder,
            initial,
            events,
            config,
        })
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn run(&self) -> Result<SimResult> {
        Run::new(self)?.execute()
    }
}

struct Run<'a> {
    sim: &'a Simulator,
    feeder: FeederModel,
    solver: NetworkSolver,
    limiting: bool,
    t: f64,
    y: State,
    trace: TraceSet,
    stats: SimStats,
    next_sample: u64,
}

impl<'a> Run<'a> {
    fn new(sim: &'a Simulator) -> Result<Self> {
        let solver = NetworkSolver::new(&sim.feeder)?;
        Ok(Self {
            sim,
            feeder: sim.feeder,
            solver,
            limiting: false,
            t: 0.0,
            y: sim.initial.to_array(),
            trace: TraceSet::default(),
            stats: SimStats::default(),
            next_sample: 0,
        })
    }

    fn plant(&self) -> &Plant {
        &self.sim.plant
    }

    fn overcurrent(&self, y: &State) -> f64 {
        let snap = self.plant().snapshot(&self.solver, &SfcState::from_array(y), self.limiting);
        snap.meas.i_mag - self.plant().gains.i_max
    }

    fn rhs(&self, t: f64, y: &State) -> Result<State> {
        let d = self
            .plant()
            .derivatives(&self.solver, &SfcState::from_array(y), self.limiting)
            .map_err(|e| match e {
                Error::NonFinite { context, .. } => Error::NonFinite { t, context },
                other => other,
            })?;
        let d = d.to_array();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t,
                context: format!("state derivatives at state {y:?}"),
            });
        }
        Ok(d)
    }

    fn record(&mut self, time: f64, y: &State) {
        let state = SfcState::from_array(y);
        let snap = self.plant().snapshot(&self.solver, &state, self.limiting);
        self.trace.push(Sample {
            time,
            u_mag: snap.meas.u_g,
            theta_g: snap.meas.theta_g,
            i_mag: snap.meas.i_mag,
            p_g: snap.meas.p_g,
            q_g: snap.meas.q_g,
            e_mag: snap.e_mag,
            delta: snap.delta,
            limiting: self.limiting,
            int_v: state.int_v,
            int_cl: state.int_cl,
            fault: self.feeder.fault_active(),
        });
    }

    /// Emits every output sample in `(t_a, t_b]`.
    fn emit(&mut self, dense: &DenseSegment<STATE_LEN>, t_b: f64, y_b: &State) {
        let dt = self.sim.config.output_dt;
        let eps = 1e-9 * dt;
        loop {
            let ts = self.next_sample as f64 * dt;
            if ts > t_b + eps || ts > self.sim.config.t_end + eps {
                break;
            }
            let y = if (ts - t_b).abs() <= eps { *y_b } else { dense.eval(ts) };
            self.record(ts, &y);
            self.next_sample += 1;
        }
    }

    fn set_mode(&mut self, limiting: bool) {
        if self.limiting != limiting {
            self.stats.mode_switches.push(self.t);
        }
        if self.limiting && !limiting {
            self.y = reset_current_limit(&SfcState::from_array(&self.y)).to_array();
        }
        self.limiting = limiting;
    }

    fn apply(&mut self, event: &Event) -> Result<()> {
        self.feeder = match event.kind {
            EventKind::ApplyFault { z_fault, pos_km } => self.feeder.set_fault(z_fault, pos_km)?,
            EventKind::ClearFault => self.feeder.clear_fault(),
        };
        self.solver = NetworkSolver::new(&self.feeder)?;
        Ok(())
    }

    fn execute(mut self) -> Result<SimResult> {
        let cfg = self.sim.config;
        let events = self.sim.events.clone();
        let mut next_event = 0;

        let y0 = self.y;
        self.limiting = self.overcurrent(&y0) > 0.0;
        self.record(0.0, &y0);
        self.next_sample = 1;

        let mut h: Option<f64> = None;
        let mut ctl = StepController::default();
        loop {
            let mut changed = false;
            while next_event < events.len() && events[next_event].time <= self.t {
                self.apply(&events[next_event])?;
                next_event += 1;
                changed = true;
            }
            if changed {
                let y = self.y;
                let over = self.overcurrent(&y) > 0.0;
                self.set_mode(over);
                ctl.reset();
            }
            if self.t >= cfg.t_end {
                break;
            }
            let t_stop = events
                .get(next_event)
                .map(|e| e.time.min(cfg.t_end))
                .unwrap_or(cfg.t_end);
            self.integrate_to(t_stop, &mut h, &mut ctl)?;
        }
        Ok(SimResult {
            trace: self.trace,
            stats: self.stats,
            final_state: SfcState::from_array(&self.y),
        })
    }

    fn integrate_to(&mut self, t_stop: f64, h: &mut Option<f64>, ctl: &mut StepController) -> Result<()> {
        let cfg = self.sim.config;
        let (rtol, atol) = (cfg.rel_tol, cfg.abs_tol);
        let mut k1 = self.rhs(self.t, &self.y)?;
        let mut step = match *h {
            Some(v) => v,
            None => {
                let (t, y) = (self.t, self.y);
                let mut f = |t: f64, y: &State| self.rhs(t, y);
                initial_step(&mut f, t, &y, &k1, rtol, atol, cfg.max_step)?
            }
        };
        let mut stalled = 0usize;

        while self.t < t_stop {
            let mut hh = step.min(cfg.max_step);
            let remaining = t_stop - self.t;
            let last = hh >= remaining * (1.0 - 1e-12);
            if last {
                hh = remaining;
            } else if hh < 1e-13 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t, h: hh });
            }

            let (t, y) = (self.t, self.y);
            let trial = {
                let mut f = |t: f64, y: &State| self.rhs(t, y);
                trial_step(&mut f, t, &y, &k1, hh, rtol, atol)?
            };
            if !(trial.err <= 1.0) {
                if !trial.err.is_finite() {
                    step = hh * 0.1;
                } else {
                    step = ctl.reject(hh, trial.err);
                }
                self.stats.rejected_steps += 1;
                continue;
            }
            self.stats.accepted_steps += 1;
            let t_new = if last { t_stop } else { t + hh };

            let g1 = self.overcurrent(&trial.y1);
            let crossing = (!self.limiting && g1 > 0.0) || (self.limiting && g1 < 0.0);
            if crossing {
                let dense = trial.dense;
                let t_sw = locate_mode_switch(|s| self.overcurrent(&dense.eval(s)), t, t_new, SWITCH_TOLERANCE)
                    .unwrap_or(t_new);
                let y_sw = if t_sw >= t_new { trial.y1 } else { dense.eval(t_sw) };
                self.emit(&dense, t_sw, &y_sw);
                if t_sw > t {
                    stalled = 0;
                } else {
                    stalled += 1;
                    if stalled > MAX_STALLED_SWITCHES {
                        return Err(Error::Chattering { t });
                    }
                }
                self.t = if t_sw >= t_new { t_new } else { t_sw };
                self.y = y_sw;
                let next_mode = !self.limiting;
                self.set_mode(next_mode);
                k1 = self.rhs(self.t, &self.y)?;
                ctl.reset();
                step = hh;
                continue;
            }

            self.emit(&trial.dense, t_new, &trial.y1);
            self.t = t_new;
            self.y = trial.y1;
            k1 = trial.k7;
            step = ctl.accept(hh, trial.err);
            if !last {
                *h = Some(step);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig { t_end: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { output_dt: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn trace_validation() {
        let mut t = TraceSet::default();
        let s = Sample {
            time: 0.0,
            u_mag: 1.0,
            theta_g: 0.0,
            i_mag: 0.0,
            p_g: 0.0,
            q_g: 0.0,
            e_mag: 1.0,
            delta: 0.0,
            limiting: false,
            int_v: 0.5,
            int_cl: 0.0,
            fault: false,
        };
        t.push(s);
        t.push(Sample { time: 0.1, ..s });
        assert!(t.validate().is_ok());
        t.push(Sample { time: 0.1, ..s });
        assert!(t.validate().is_err());
    }
}
