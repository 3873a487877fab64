//! TOML scenario files.
//!
//! Every physical quantity is a string carrying its unit (`"60 ms"`,
//! `"0.47+0.15j pu"`). Controller gains are bare numbers. Any key left out
//! keeps the value of the base scenario: the defaults, or the builtin case
//! named by `base_case`.

use super::units::{format_complex, parse_quantity, Dimension, Unit};
use super::{builtin_case, default_t_end, FaultSpec, ImpedanceSpec, Scenario, LOAD_BEYOND_FAULT_KM};
use crate::error::{Error, Result};
use crate::perunit::BaseSystem;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use toml::Spanned;

pub const FILE_SCHEMA_VERSION: i64 = 1;

type Q = Option<Spanned<String>>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFile {
    schema_version: Option<Spanned<i64>>,
    name: Option<String>,
    base_case: Option<Spanned<i64>>,
    system: Option<RawSystem>,
    converter: Option<RawConverter>,
    rfc: Option<RawRfc>,
    control: Option<RawControl>,
    feeder: Option<RawFeeder>,
    load: Option<RawLoad>,
    fault: Option<Vec<RawFault>>,
    simulation: Option<RawSimulation>,
    reference: Option<RawReference>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    s_base: Q,
    v_base: Q,
    f_base: Q,
    theta_50: Q,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConverter {
    transformer_rating: Q,
    transformer_leakage: Q,
    filter_inductance: Q,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRfc {
    xq_motor: Q,
    motor_transformer_leakage: Q,
    motor_transformer_rating: Q,
    xq_generator: Q,
    generator_transformer_leakage: Q,
    generator_transformer_rating: Q,
    include_transformer_leakage: Option<bool>,
    droop: Q,
    u0: Q,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawControl {
    kp_v: Option<f64>,
    ki_v: Option<f64>,
    kp_a: Option<f64>,
    ki_a: Option<f64>,
    kp_cl: Option<f64>,
    ki_cl: Option<f64>,
    t_c: Q,
    t_i: Q,
    e_max: Q,
    i_max: Q,
    anti_windup_voltage: Option<bool>,
    anti_windup_angle: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFeeder {
    z_init: Q,
    z_per_km: Q,
    load_position: Q,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLoad {
    p: Q,
    q: Q,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFault {
    impedance: Spanned<String>,
    position: Spanned<String>,
    start: Q,
    duration: Spanned<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    t_end: Q,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_step: Q,
    output_dt: Q,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawReference {
    measured: Option<String>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, path: &str, span: std::ops::Range<usize>, msg: impl std::fmt::Display) -> Error {
        Error::Scenario(format!("{path} (line {}): {msg}", self.line(span.start)))
    }

    fn quantity(&self, path: &str, s: &Spanned<String>, dim: Dimension) -> Result<(num_complex::Complex64, Unit)> {
        parse_quantity(s.get_ref(), dim)
            .map(|q| (q.value, q.unit))
            .map_err(|m| self.err(path, s.span(), m))
    }

    fn real(&self, path: &str, s: &Spanned<String>, dim: Dimension) -> Result<f64> {
        self.quantity(path, s, dim).map(|(v, _)| v.re)
    }

    fn set(&self, target: &mut f64, path: &str, s: &Q, dim: Dimension) -> Result<()> {
        if let Some(s) = s {
            *target = self.real(path, s, dim)?;
        }
        Ok(())
    }

    fn impedance(&self, path: &str, s: &Spanned<String>, dim: Dimension) -> Result<ImpedanceSpec> {
        let (v, unit) = self.quantity(path, s, dim)?;
        Ok(match unit {
            Unit::Pu | Unit::PuPerKm => ImpedanceSpec::Pu(v),
            _ => ImpedanceSpec::Ohm(v),
        })
    }
}

/// Parses a scenario file; `base_case` selects the starting point.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
    let ctx = Ctx { text };
    let base = match &raw.base_case {
        Some(n) => {
            let k = usize::try_from(*n.get_ref()).map_err(|_| ctx.err("base_case", n.span(), "must be 1..=4"))?;
            builtin_case(k).map_err(|e| ctx.err("base_case", n.span(), e))?
        }
        None => Scenario::default(),
    };
    apply(&ctx, raw, base)
}

/// Parses a scenario file on top of `base`; `base_case` is not allowed.
pub fn load_scenario_with_base(text: &str, base: Scenario) -> Result<Scenario> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
    let ctx = Ctx { text };
    if let Some(n) = &raw.base_case {
        return Err(ctx.err("base_case", n.span(), "not allowed when a base scenario is given"));
    }
    apply(&ctx, raw, base)
}

fn apply(ctx: &Ctx<'_>, raw: RawFile, mut sc: Scenario) -> Result<Scenario> {
    use Dimension::*;
    if let Some(v) = &raw.schema_version {
        if *v.get_ref() != FILE_SCHEMA_VERSION {
            return Err(ctx.err(
                "schema_version",
                v.span(),
                format!("unsupported version {}, expected {FILE_SCHEMA_VERSION}", v.get_ref()),
            ));
        }
    }
    if let Some(name) = raw.name {
        sc.name = name;
    }

    let sys = raw.system.unwrap_or_default();
    let (mut s, mut v, mut f) = (sc.base.s_base(), sc.base.v_base(), sc.base.f_base());
    ctx.set(&mut s, "system.s_base", &sys.s_base, ApparentPower)?;
    ctx.set(&mut v, "system.v_base", &sys.v_base, Voltage)?;
    ctx.set(&mut f, "system.f_base", &sys.f_base, Frequency)?;
    sc.base = BaseSystem::new(s, v, f).map_err(|e| Error::Scenario(format!("system: {e}")))?;
    ctx.set(&mut sc.theta_50, "system.theta_50", &sys.theta_50, Angle)?;

    let conv = raw.converter.unwrap_or_default();
    let c = &mut sc.converter;
    ctx.set(&mut c.transformer_rating_mva, "converter.transformer_rating", &conv.transformer_rating, ApparentPower)?;
    ctx.set(&mut c.transformer_leakage, "converter.transformer_leakage", &conv.transformer_leakage, Ratio)?;
    ctx.set(&mut c.filter_inductance_h, "converter.filter_inductance", &conv.filter_inductance, Inductance)?;

    let rfc = raw.rfc.unwrap_or_default();
    let m = &mut sc.machines;
    ctx.set(&mut m.xq_motor, "rfc.xq_motor", &rfc.xq_motor, Ratio)?;
    ctx.set(&mut m.motor_transformer_leakage, "rfc.motor_transformer_leakage", &rfc.motor_transformer_leakage, Ratio)?;
    ctx.set(&mut m.motor_transformer_rating_mva, "rfc.motor_transformer_rating", &rfc.motor_transformer_rating, ApparentPower)?;
    ctx.set(&mut m.xq_generator, "rfc.xq_generator", &rfc.xq_generator, Ratio)?;
    ctx.set(
        &mut m.generator_transformer_leakage,
        "rfc.generator_transformer_leakage",
        &rfc.generator_transformer_leakage,
        Ratio,
    )?;
    ctx.set(
        &mut m.generator_transformer_rating_mva,
        "rfc.generator_transformer_rating",
        &rfc.generator_transformer_rating,
        ApparentPower,
    )?;
    if let Some(b) = rfc.include_transformer_leakage {
        m.include_transformer_leakage = b;
    }
    ctx.set(&mut m.droop, "rfc.droop", &rfc.droop, Ratio)?;
    ctx.set(&mut m.no_load_voltage, "rfc.u0", &rfc.u0, PerUnit)?;

    let ctl = raw.control.unwrap_or_default();
    let g = &mut sc.gains;
    for (dst, src) in [
        (&mut g.kp_v, ctl.kp_v),
        (&mut g.ki_v, ctl.ki_v),
        (&mut g.kp_a, ctl.kp_a),
        (&mut g.ki_a, ctl.ki_a),
        (&mut g.kp_cl, ctl.kp_cl),
        (&mut g.ki_cl, ctl.ki_cl),
    ] {
        if let Some(x) = src {
            *dst = x;
        }
    }
    ctx.set(&mut g.t_c, "control.t_c", &ctl.t_c, Time)?;
    ctx.set(&mut g.t_i, "control.t_i", &ctl.t_i, Time)?;
    ctx.set(&mut g.e_max, "control.e_max", &ctl.e_max, PerUnit)?;
    ctx.set(&mut g.i_max, "control.i_max", &ctl.i_max, PerUnit)?;
    if let Some(b) = ctl.anti_windup_voltage {
        g.anti_windup_voltage = b;
    }
    if let Some(b) = ctl.anti_windup_angle {
        g.anti_windup_angle = b;
    }

    let load = raw.load.unwrap_or_default();
    ctx.set(&mut sc.load.p_mw, "load.p", &load.p, ActivePower)?;
    ctx.set(&mut sc.load.q_mvar, "load.q", &load.q, ReactivePower)?;
    // per-unit powers come back in p.u.; convert to MW
    if let Some(p) = &load.p {
        if ctx.quantity("load.p", p, ActivePower)?.1 == Unit::Pu {
            sc.load.p_mw *= sc.base.s_base();
        }
    }
    if let Some(q) = &load.q {
        if ctx.quantity("load.q", q, ReactivePower)?.1 == Unit::Pu {
            sc.load.q_mvar *= sc.base.s_base();
        }
    }

    let faults_given = raw.fault.is_some();
    if let Some(list) = raw.fault {
        sc.faults.clear();
        for (i, rf) in list.iter().enumerate() {
            let p = |k: &str| format!("fault[{i}].{k}");
            let start = match &rf.start {
                Some(s) => ctx.real(&p("start"), s, Time)?,
                None => super::DEFAULT_FAULT_START,
            };
            sc.faults.push(FaultSpec {
                impedance: ctx.impedance(&p("impedance"), &rf.impedance, Impedance)?,
                pos_km: ctx.real(&p("position"), &rf.position, Length)?,
                start_s: start,
                duration_s: ctx.real(&p("duration"), &rf.duration, Time)?,
            });
        }
    }

    let fd = raw.feeder.unwrap_or_default();
    if let Some(z) = &fd.z_init {
        sc.feeder.z_init = ctx.impedance("feeder.z_init", z, Impedance)?;
    }
    if let Some(z) = &fd.z_per_km {
        sc.feeder.z_per_km = ctx.impedance("feeder.z_per_km", z, ImpedancePerLength)?;
    }
    match &fd.load_position {
        Some(s) => sc.feeder.load_pos_km = ctx.real("feeder.load_position", s, Length)?,
        None if faults_given => {
            if let Some(f) = sc.faults.first() {
                sc.feeder.load_pos_km = f.pos_km + LOAD_BEYOND_FAULT_KM;
            }
        }
        None => {}
    }

    let sim = raw.simulation.unwrap_or_default();
    let cfg = &mut sc.config;
    match &sim.t_end {
        Some(s) => cfg.t_end = ctx.real("simulation.t_end", s, Time)?,
        None if faults_given => cfg.t_end = default_t_end(&sc.faults),
        None => {}
    }
    if let Some(x) = sim.rel_tol {
        cfg.rel_tol = x;
    }
    if let Some(x) = sim.abs_tol {
        cfg.abs_tol = x;
    }
    ctx.set(&mut cfg.max_step, "simulation.max_step", &sim.max_step, Time)?;
    ctx.set(&mut cfg.output_dt, "simulation.output_dt", &sim.output_dt, Time)?;

    if let Some(r) = raw.reference {
        sc.measured = r.measured.map(PathBuf::from);
    }

    sc.validate().map_err(|e| match e {
        Error::Scenario(_) => e,
        other => Error::Scenario(format!("{}: {other}", sc.name)),
    })?;
    Ok(sc)
}

fn imp(z: &ImpedanceSpec, per_km: bool) -> String {
    let suffix = if per_km { "/km" } else { "" };
    match z {
        ImpedanceSpec::Ohm(v) => format!("{} ohm{suffix}", format_complex(*v)),
        ImpedanceSpec::Pu(v) => format!("{} pu{suffix}", format_complex(*v)),
    }
}

/// Writes `sc` with every field in its canonical unit, so that
/// [`load_scenario`] reproduces it exactly.
pub fn to_toml(sc: &Scenario) -> String {
    let mut o = String::new();
    let b = &sc.base;
    let c = &sc.converter;
    let m = &sc.machines;
    let g = &sc.gains;
    let cfg = &sc.config;
    let _ = writeln!(o, "schema_version = {FILE_SCHEMA_VERSION}");
    let _ = writeln!(o, "name = {:?}", sc.name);
    let _ = writeln!(o, "\n[system]");
    let _ = writeln!(o, "s_base = \"{} MVA\"", b.s_base());
    let _ = writeln!(o, "v_base = \"{} kV\"", b.v_base());
    let _ = writeln!(o, "f_base = \"{} Hz\"", b.f_base());
    let _ = writeln!(o, "theta_50 = \"{} rad\"", sc.theta_50);
    let _ = writeln!(o, "\n[converter]");
    let _ = writeln!(o, "transformer_rating = \"{} MVA\"", c.transformer_rating_mva);
    let _ = writeln!(o, "transformer_leakage = \"{} pu\"", c.transformer_leakage);
    let _ = writeln!(o, "filter_inductance = \"{} H\"", c.filter_inductance_h);
    let _ = writeln!(o, "\n[rfc]");
    let _ = writeln!(o, "xq_motor = \"{} pu\"", m.xq_motor);
    let _ = writeln!(o, "motor_transformer_leakage = \"{} pu\"", m.motor_transformer_leakage);
    let _ = writeln!(o, "motor_transformer_rating = \"{} MVA\"", m.motor_transformer_rating_mva);
    let _ = writeln!(o, "xq_generator = \"{} pu\"", m.xq_generator);
    let _ = writeln!(o, "generator_transformer_leakage = \"{} pu\"", m.generator_transformer_leakage);
    let _ = writeln!(o, "generator_transformer_rating = \"{} MVA\"", m.generator_transformer_rating_mva);
    let _ = writeln!(o, "include_transformer_leakage = {}", m.include_transformer_leakage);
    let _ = writeln!(o, "droop = \"{} pu\"", m.droop);
    let _ = writeln!(o, "u0 = \"{} pu\"", m.no_load_voltage);
    let _ = writeln!(o, "\n[control]");
    for (k, v) in [
        ("kp_v", g.kp_v),
        ("ki_v", g.ki_v),
        ("kp_a", g.kp_a),
        ("ki_a", g.ki_a),
        ("kp_cl", g.kp_cl),
        ("ki_cl", g.ki_cl),
    ] {
        let _ = writeln!(o, "{k} = {v:?}");
    }
    let _ = writeln!(o, "t_c = \"{} s\"", g.t_c);
    let _ = writeln!(o, "t_i = \"{} s\"", g.t_i);
    let _ = writeln!(o, "e_max = \"{} pu\"", g.e_max);
    let _ = writeln!(o, "i_max = \"{} pu\"", g.i_max);
    let _ = writeln!(o, "anti_windup_voltage = {}", g.anti_windup_voltage);
    let _ = writeln!(o, "anti_windup_angle = {}", g.anti_windup_angle);
    let _ = writeln!(o, "\n[feeder]");
    let _ = writeln!(o, "z_init = \"{}\"", imp(&sc.feeder.z_init, false));
    let _ = writeln!(o, "z_per_km = \"{}\"", imp(&sc.feeder.z_per_km, true));
    let _ = writeln!(o, "load_position = \"{} km\"", sc.feeder.load_pos_km);
    let _ = writeln!(o, "\n[load]");
    let _ = writeln!(o, "p = \"{} MW\"", sc.load.p_mw);
    let _ = writeln!(o, "q = \"{} Mvar\"", sc.load.q_mvar);
    for f in &sc.faults {
        let _ = writeln!(o, "\n[[fault]]");
        let _ = writeln!(o, "impedance = \"{}\"", imp(&f.impedance, false));
        let _ = writeln!(o, "position = \"{} km\"", f.pos_km);
        let _ = writeln!(o, "start = \"{} s\"", f.start_s);
        let _ = writeln!(o, "duration = \"{} s\"", f.duration_s);
    }
    let _ = writeln!(o, "\n[simulation]");
    let _ = writeln!(o, "t_end = \"{} s\"", cfg.t_end);
    let _ = writeln!(o, "rel_tol = {:?}", cfg.rel_tol);
    let _ = writeln!(o, "abs_tol = {:?}", cfg.abs_tol);
    let _ = writeln!(o, "max_step = \"{} s\"", cfg.max_step);
    let _ = writeln!(o, "output_dt = \"{} s\"", cfg.output_dt);
    if let Some(p) = &sc.measured {
        let _ = writeln!(o, "\n[reference]");
        let _ = writeln!(o, "measured = {:?}", p.display().to_string());
    }
    o
}
