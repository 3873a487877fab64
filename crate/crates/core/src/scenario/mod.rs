//! Experiment descriptions: system data, controller settings, feeder
//! geometry, train load and fault sequence.
//!
//! A [`Scenario`] keeps the data as it is published (machine ratings,
//! percent leakages, Ω impedances) and resolves it to per-unit on demand,
//! so that the conversions live in one place.

mod schema;
pub mod units;

pub use schema::{load_scenario, load_scenario_with_base, to_toml, FILE_SCHEMA_VERSION};

use crate::control::ControlGains;
use crate::error::{Error, Result};
use crate::loadflow::{solve_loadflow, LoadFlowOptions, LoadFlowResult};
use crate::network::FeederModel;
use crate::perunit::{impedance_to_pu, inductance_to_pu, power_to_pu, rebase_reactance, BaseSystem};
use crate::rfc::RfcParams;
use crate::simulator::{Event, EventKind, Plant, SimConfig, SimResult, Simulator, TraceSet};
use num_complex::Complex64;
use std::path::PathBuf;

/// Onset of builtin faults, s.
pub const DEFAULT_FAULT_START: f64 = 1.0;
/// Simulated time after the last fault clears, s.
pub const POST_FAULT_TIME: f64 = 2.0;
/// Default distance of the train beyond the (first) fault, km.
pub const LOAD_BEYOND_FAULT_KM: f64 = 5.0;

/// An impedance given either in Ω or directly in p.u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpedanceSpec {
    Ohm(Complex64),
    Pu(Complex64),
}

impl ImpedanceSpec {
    pub fn to_pu(&self, base: &BaseSystem) -> Complex64 {
        match *self {
            ImpedanceSpec::Ohm(z) => impedance_to_pu(z, base),
            ImpedanceSpec::Pu(z) => z,
        }
    }
}

/// Converter transformer and inductive filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterHardware {
    pub transformer_rating_mva: f64,
    /// Leakage reactance on the transformer rating, p.u.
    pub transformer_leakage: f64,
    pub filter_inductance_h: f64,
}

impl Default for ConverterHardware {
    fn default() -> Self {
        Self {
            transformer_rating_mva: 17.4,
            transformer_leakage: 0.1665,
            filter_inductance_h: 0.032,
        }
    }
}

/// Data of the rotary converter whose steady state is emulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotaryMachines {
    pub xq_motor: f64,
    pub motor_transformer_leakage: f64,
    pub motor_transformer_rating_mva: f64,
    pub xq_generator: f64,
    pub generator_transformer_leakage: f64,
    pub generator_transformer_rating_mva: f64,
    /// Add the rebased transformer leakages to the quadrature reactances.
    pub include_transformer_leakage: bool,
    pub droop: f64,
    pub no_load_voltage: f64,
}

impl Default for RotaryMachines {
    fn default() -> Self {
        Self {
            xq_motor: 0.49,
            motor_transformer_leakage: 0.079,
            motor_transformer_rating_mva: 10.7,
            xq_generator: 0.53,
            generator_transformer_leakage: 0.042,
            generator_transformer_rating_mva: 10.0,
            include_transformer_leakage: true,
            droop: 0.03,
            no_load_voltage: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeederGeometry {
    pub z_init: ImpedanceSpec,
    pub z_per_km: ImpedanceSpec,
    pub load_pos_km: f64,
}

impl Default for FeederGeometry {
    /// AT catenary.
    fn default() -> Self {
        Self {
            z_init: ImpedanceSpec::Ohm(Complex64::new(0.189, 0.293)),
            z_per_km: ImpedanceSpec::Ohm(Complex64::new(0.0335, 0.031)),
            load_pos_km: LOAD_BEYOND_FAULT_KM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoadSpec {
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub impedance: ImpedanceSpec,
    pub pos_km: f64,
    pub start_s: f64,
    pub duration_s: f64,
}

impl FaultSpec {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub base: BaseSystem,
    /// Angle of the 50 Hz infinite bus, rad.
    pub theta_50: f64,
    pub converter: ConverterHardware,
    pub machines: RotaryMachines,
    pub gains: ControlGains,
    pub feeder: FeederGeometry,
    pub load: LoadSpec,
    pub faults: Vec<FaultSpec>,
    pub config: SimConfig,
    pub measured: Option<PathBuf>,
}

impl Default for Scenario {
    /// Shared system data with no train and no fault.
    fn default() -> Self {
        Self {
            name: "default".into(),
            base: BaseSystem::railway_default(),
            theta_50: 0.0,
            converter: ConverterHardware::default(),
            machines: RotaryMachines::default(),
            gains: ControlGains::default(),
            feeder: FeederGeometry::default(),
            load: LoadSpec::default(),
            faults: Vec::new(),
            config: SimConfig::default(),
            measured: None,
        }
    }
}

/// `(duration s, fault impedance p.u., distance km, train load MW)`
const CASES: [(f64, Complex64, f64, f64); 4] = [
    (0.060, Complex64::new(0.47, 0.15), 25.0, 2.4),
    (0.080, Complex64::new(0.5, 0.2), 25.0, 2.75),
    (0.120, Complex64::new(0.0, 0.13), 15.0, 4.25),
    (0.270, Complex64::new(0.0, 0.15), 20.0, 1.5),
];

/// Number of builtin validation cases.
pub const BUILTIN_CASES: usize = CASES.len();

/// One of the four fault recordings used for validation.
pub fn builtin_case(n: usize) -> Result<Scenario> {
    let (duration, z_fault, pos, p_mw) = *CASES
        .get(n.wrapping_sub(1))
        .ok_or_else(|| Error::Scenario(format!("unknown builtin case {n}; expected 1..={}", CASES.len())))?;
    let fault = FaultSpec {
        impedance: ImpedanceSpec::Pu(z_fault),
        pos_km: pos,
        start_s: DEFAULT_FAULT_START,
        duration_s: duration,
    };
    Ok(Scenario {
        name: format!("case{n}"),
        feeder: FeederGeometry {
            load_pos_km: pos + LOAD_BEYOND_FAULT_KM,
            ..Default::default()
        },
        load: LoadSpec { p_mw, q_mvar: 0.0 },
        config: SimConfig {
            t_end: default_t_end(std::slice::from_ref(&fault)),
            ..Default::default()
        },
        faults: vec![fault],
        ..Default::default()
    })
}

/// End of the last fault plus [`POST_FAULT_TIME`].
pub fn default_t_end(faults: &[FaultSpec]) -> f64 {
    faults
        .iter()
        .map(|f| f.end_s() + POST_FAULT_TIME)
        .reduce(f64::max)
        .unwrap_or(SimConfig::default().t_end)
}

impl Scenario {
    /// Converter transformer reactance on the system base.
    pub fn x_t(&self) -> Result<f64> {
        rebase_reactance(
            self.converter.transformer_leakage,
            self.converter.transformer_rating_mva,
            self.base.s_base(),
        )
    }

    /// Filter reactance on the system base.
    pub fn x_f(&self) -> f64 {
        inductance_to_pu(self.converter.filter_inductance_h, &self.base)
    }

    /// Effective rotary-converter parameters.
    pub fn rfc(&self) -> Result<RfcParams> {
        let m = &self.machines;
        let (mut xq_m, mut xq_g) = (m.xq_motor, m.xq_generator);
        if m.include_transformer_leakage {
            xq_m += rebase_reactance(m.motor_transformer_leakage, m.motor_transformer_rating_mva, self.base.s_base())?;
            xq_g += rebase_reactance(
                m.generator_transformer_leakage,
                m.generator_transformer_rating_mva,
                self.base.s_base(),
            )?;
        }
        RfcParams::new(xq_m, xq_g, m.droop, m.no_load_voltage)
    }

    pub fn plant(&self) -> Result<Plant> {
        Ok(Plant {
            rfc: self.rfc()?,
            gains: self.gains,
            theta_50: self.theta_50,
        })
    }

    /// Train load in p.u.
    pub fn s_load(&self) -> Complex64 {
        Complex64::new(power_to_pu(self.load.p_mw, &self.base), power_to_pu(self.load.q_mvar, &self.base))
    }

    /// Pre-fault feeder without load admittance.
    pub fn feeder_template(&self) -> Result<FeederModel> {
        let f = FeederModel {
            x_t: self.x_t()?,
            x_f: self.x_f(),
            z_init: self.feeder.z_init.to_pu(&self.base),
            z_per_km: self.feeder.z_per_km.to_pu(&self.base),
            fault_pos_km: self.faults.first().map(|f| f.pos_km).unwrap_or(0.0),
            load_pos_km: self.feeder.load_pos_km,
            y_load: Complex64::new(0.0, 0.0),
            y_fault: Complex64::new(0.0, 0.0),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn events(&self) -> Vec<Event> {
        let mut ev = Vec::with_capacity(2 * self.faults.len());
        for f in &self.faults {
            ev.push(Event {
                time: f.start_s,
                kind: EventKind::ApplyFault {
                    z_fault: f.impedance.to_pu(&self.base),
                    pos_km: f.pos_km,
                },
            });
            ev.push(Event {
                time: f.end_s(),
                kind: EventKind::ClearFault,
            });
        }
        ev.sort_by(|a, b| a.time.total_cmp(&b.time));
        ev
    }

    /// Checks every parameter before anything is simulated.
    pub fn validate(&self) -> Result<()> {
        self.rfc()?;
        self.gains.validate()?;
        self.config.validate()?;
        let feeder = self.feeder_template()?;
        if !(self.theta_50.is_finite()) {
            return Err(Error::invalid("theta_50", "must be finite"));
        }
        if !(self.load.p_mw.is_finite() && self.load.p_mw >= 0.0 && self.load.q_mvar.is_finite()) {
            return Err(Error::invalid("load", "active power must be non-negative and finite"));
        }
        if !(self.converter.filter_inductance_h.is_finite() && self.converter.filter_inductance_h >= 0.0) {
            return Err(Error::invalid("filter_inductance", "must be non-negative"));
        }
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for f in &self.faults {
            if !(f.start_s.is_finite() && f.start_s >= 0.0) {
                return Err(Error::invalid("fault.start", "must be non-negative"));
            }
            if !(f.duration_s.is_finite() && f.duration_s > 0.0) {
                return Err(Error::invalid("fault.duration", "must be positive"));
            }
            if f.end_s() > self.config.t_end {
                return Err(Error::invalid("fault.duration", "fault must clear before t_end"));
            }
            feeder.set_fault(f.impedance.to_pu(&self.base), f.pos_km)?;
            if windows.iter().any(|&(a, b)| f.start_s < b && a < f.end_s()) {
                return Err(Error::invalid("fault", "fault windows overlap"));
            }
            windows.push((f.start_s, f.end_s()));
        }
        Ok(())
    }

    pub fn loadflow(&self) -> Result<LoadFlowResult> {
        self.validate()?;
        solve_loadflow(
            &self.feeder_template()?,
            self.s_load(),
            &self.rfc()?,
            self.theta_50,
            &self.gains,
            LoadFlowOptions::default(),
        )
    }

    /// Simulator started from the load-flow operating point.
    pub fn simulator(&self, config: &SimConfig) -> Result<Simulator> {
        let lf = self.loadflow()?;
        let feeder = lf.feeder(&self.feeder_template()?);
        Simulator::new(self.plant()?, feeder, lf.controller_init, self.events(), *config)
    }

    pub fn run_with_stats(&self, config: &SimConfig) -> Result<SimResult> {
        self.simulator(config)?.run()
    }
}

/// Runs `scenario` with `config`.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<TraceSet> {
    Ok(scenario.run_with_stats(config)?.trace)
}
