//! Unit-annotated quantities such as `"32 mH"`, `"0.47+0.15j pu"` or
//! `"0.0335+0.031j ohm/km"`.

use num_complex::Complex64;
use std::fmt;

/// Physical dimension a field expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Impedance,
    ImpedancePerLength,
    ActivePower,
    ReactivePower,
    ApparentPower,
    Voltage,
    Inductance,
    Time,
    Length,
    Angle,
    Frequency,
    /// Percent or per-unit ratio.
    Ratio,
    /// Per-unit magnitude (voltage, current).
    PerUnit,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Impedance => "impedance (ohm, pu)",
            Dimension::ImpedancePerLength => "impedance per length (ohm/km, pu/km)",
            Dimension::ActivePower => "active power (MW, kW, pu)",
            Dimension::ReactivePower => "reactive power (Mvar, kvar, pu)",
            Dimension::ApparentPower => "apparent power (MVA, kVA)",
            Dimension::Voltage => "voltage (kV, V)",
            Dimension::Inductance => "inductance (H, mH)",
            Dimension::Time => "time (s, ms)",
            Dimension::Length => "length (km, m)",
            Dimension::Angle => "angle (rad, deg)",
            Dimension::Frequency => "frequency (Hz)",
            Dimension::Ratio => "ratio (%, pu)",
            Dimension::PerUnit => "per-unit value (pu)",
        };
        f.write_str(s)
    }
}

/// Unit a value was written in, after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Ohm,
    OhmPerKm,
    Pu,
    PuPerKm,
    /// Value in the field's canonical SI-ish unit (MW, Mvar, MVA, kV, H, s,
    /// km, rad, Hz or plain ratio) after scaling.
    Canonical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: Complex64,
    pub unit: Unit,
}

/// Returns (multiplier, divisor, unit). Sub-units divide so that e.g.
/// `60 ms` gives exactly `0.06`.
fn unit_table(dim: Dimension, unit: &str) -> Option<(f64, f64, Unit)> {
    use Dimension::*;
    let u = unit.trim();
    let lower = u.to_ascii_lowercase();
    let is_pu = matches!(lower.as_str(), "pu" | "p.u.");
    Some(match dim {
        Impedance => match lower.as_str() {
            "ohm" | "ω" => (1.0, 1.0, Unit::Ohm),
            _ if u == "Ω" => (1.0, 1.0, Unit::Ohm),
            _ if is_pu => (1.0, 1.0, Unit::Pu),
            _ => return None,
        },
        ImpedancePerLength => match lower.as_str() {
            "ohm/km" => (1.0, 1.0, Unit::OhmPerKm),
            "ohm/m" => (1e3, 1.0, Unit::OhmPerKm),
            "pu/km" | "p.u./km" => (1.0, 1.0, Unit::PuPerKm),
            _ if u == "Ω/km" => (1.0, 1.0, Unit::OhmPerKm),
            _ => return None,
        },
        ActivePower => match u {
            "MW" => (1.0, 1.0, Unit::Canonical),
            "kW" => (1.0, 1e3, Unit::Canonical),
            "W" => (1.0, 1e6, Unit::Canonical),
            _ if is_pu => (1.0, 1.0, Unit::Pu),
            _ => return None,
        },
        ReactivePower => match lower.as_str() {
            "mvar" => (1.0, 1.0, Unit::Canonical),
            "kvar" => (1.0, 1e3, Unit::Canonical),
            "var" => (1.0, 1e6, Unit::Canonical),
            _ if is_pu => (1.0, 1.0, Unit::Pu),
            _ => return None,
        },
        ApparentPower => match u {
            "MVA" => (1.0, 1.0, Unit::Canonical),
            "kVA" => (1.0, 1e3, Unit::Canonical),
            _ => return None,
        },
        Voltage => match u {
            "kV" => (1.0, 1.0, Unit::Canonical),
            "V" => (1.0, 1e3, Unit::Canonical),
            _ => return None,
        },
        Inductance => match u {
            "H" => (1.0, 1.0, Unit::Canonical),
            "mH" => (1.0, 1e3, Unit::Canonical),
            "uH" | "µH" => (1.0, 1e6, Unit::Canonical),
            _ => return None,
        },
        Time => match u {
            "s" => (1.0, 1.0, Unit::Canonical),
            "ms" => (1.0, 1e3, Unit::Canonical),
            _ => return None,
        },
        Length => match u {
            "km" => (1.0, 1.0, Unit::Canonical),
            "m" => (1.0, 1e3, Unit::Canonical),
            _ => return None,
        },
        Angle => match lower.as_str() {
            "rad" => (1.0, 1.0, Unit::Canonical),
            "deg" | "°" => (std::f64::consts::PI, 180.0, Unit::Canonical),
            _ => return None,
        },
        Frequency => match u {
            "Hz" => (1.0, 1.0, Unit::Canonical),
            _ => return None,
        },
        Ratio => match u {
            "%" => (1.0, 100.0, Unit::Canonical),
            _ if is_pu => (1.0, 1.0, Unit::Canonical),
            _ => return None,
        },
        PerUnit => match u {
            _ if is_pu => (1.0, 1.0, Unit::Pu),
            _ => return None,
        },
    })
}

fn parse_real(s: &str) -> Option<f64> {
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (a.parse::<f64>().ok()?, b.parse::<f64>().ok()?);
        return if b != 0.0 { Some(a / b) } else { None };
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Imaginary part with optional sign: `0.15j`, `-j0.13`, `+j`.
fn parse_imag(s: &str) -> Option<f64> {
    let (sign, body) = match s.as_bytes().first()? {
        b'+' => (1.0, &s[1..]),
        b'-' => (-1.0, &s[1..]),
        _ => (1.0, s),
    };
    let mag = body.strip_suffix('j').or_else(|| body.strip_prefix('j'))?;
    let mag = if mag.is_empty() { 1.0 } else { parse_real(mag)? };
    Some(sign * mag)
}

/// Parses `a`, `a+bj`, `a-bj`, `bj`, `a+jb`, `jb`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if !s.contains('j') {
        return parse_real(s).map(|r| Complex64::new(r, 0.0));
    }
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = s.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => Some(Complex64::new(parse_real(&s[..i])?, parse_imag(&s[i..])?)),
        None => parse_imag(s).map(|im| Complex64::new(0.0, im)),
    }
}

/// Parses `"<number> <unit>"`; the unit is mandatory.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<Quantity, String> {
    let text = text.trim();
    let (num, unit) = text
        .split_once(char::is_whitespace)
        .ok_or_else(|| format!("`{text}` has no unit; expected {dim}"))?;
    let value = parse_complex(num).ok_or_else(|| format!("`{num}` is not a number"))?;
    let (mul, div, unit) =
        unit_table(dim, unit).ok_or_else(|| format!("unit `{}` is not valid for {dim}", unit.trim()))?;
    let complex_ok = matches!(dim, Dimension::Impedance | Dimension::ImpedancePerLength);
    if !complex_ok && value.im != 0.0 {
        return Err(format!("`{num}` must be real for {dim}"));
    }
    Ok(Quantity {
        value: value * mul / div,
        unit,
    })
}

/// Real-valued quantity in the canonical unit of `dim`.
pub fn parse_real_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    parse_quantity(text, dim).map(|q| q.value.re)
}

/// Formats a complex number so that [`parse_complex`] reads it back exactly.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}
