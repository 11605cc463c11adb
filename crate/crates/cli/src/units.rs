//! Quantities with unit suffixes: `"3 THz"`, `"2pi*100 GHz"`, `"333 ps"`.
//!
//! Frequencies are angular (rad/s). A bare `THz`/`GHz` figure is read as
//! that many rad/s times the prefix, so `"3 THz"` is `3e12` rad/s; write
//! `2pi*` in front to convert from cycles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A config value given either as a bare SI number or as text with a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

// Suffix and decimal exponent.
const FREQUENCY: &[(&str, i32)] = &[("rad/s", 0), ("THz", 12), ("GHz", 9), ("MHz", 6), ("kHz", 3), ("Hz", 0)];

const TIME: &[(&str, i32)] = &[
    ("fs", -15),
    ("ps", -12),
    ("ns", -9),
    ("us", -6),
    ("µs", -6),
    ("ms", -3),
    ("s", 0),
];

const TWO_PI_PREFIXES: &[&str] = &["2pi*", "2*pi*", "2π*", "2π×", "2pi ", "2π "];

fn parse(text: &str, units: &[(&str, i32)], kind: &str) -> Result<f64, String> {
    let mut rest = text.trim();
    let mut two_pi = false;
    for p in TWO_PI_PREFIXES {
        if let Some(r) = rest.strip_prefix(p) {
            two_pi = true;
            rest = r.trim_start();
            break;
        }
    }
    let mut best: Option<(&str, i32)> = None;
    for &(suffix, exp) in units {
        if rest.ends_with(suffix) && best.is_none_or(|(b, _)| suffix.len() > b.len()) {
            best = Some((suffix, exp));
        }
    }
    let (number, shift) = match best {
        Some((suffix, exp)) => (rest[..rest.len() - suffix.len()].trim(), exp),
        None => (rest, 0),
    };
    let bad = || {
        let known: Vec<&str> = units.iter().map(|u| u.0).collect();
        format!(
            "cannot read {kind} `{text}` (expected a number with one of: {})",
            known.join(", ")
        )
    };
    // Fold the unit into the decimal exponent so "333 ps" reads exactly as 333e-12.
    let (mantissa, exp) = match number.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (number, 0),
    };
    if mantissa.is_empty() || mantissa.contains(|c: char| !(c.is_ascii_digit() || ".+-".contains(c))) {
        return Err(bad());
    }
    let value: f64 = format!("{mantissa}e{}", exp + shift).parse().map_err(|_| bad())?;
    Ok(if two_pi { 2.0 * PI * value } else { value })
}

pub fn frequency(q: &Quantity) -> Result<f64, String> {
    match q {
        Quantity::Number(v) => Ok(*v),
        Quantity::Text(t) if matches!(t.trim(), "inf" | "infinite" | "all-pass") => Ok(f64::INFINITY),
        Quantity::Text(t) => parse(t, FREQUENCY, "frequency"),
    }
}

pub fn time(q: &Quantity) -> Result<f64, String> {
    match q {
        Quantity::Number(v) => Ok(*v),
        Quantity::Text(t) => parse(t, TIME, "duration"),
    }
}

/// Representation that reads back to exactly `v`.
pub fn exact(v: f64) -> Quantity {
    if v.is_infinite() {
        Quantity::Text("inf".into())
    } else {
        Quantity::Number(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Quantity {
        Quantity::Text(s.into())
    }

    #[test]
    fn frequencies() {
        assert_eq!(frequency(&text("3 THz")).unwrap(), 3e12);
        assert_eq!(frequency(&text("10GHz")).unwrap(), 1e10);
        assert_eq!(frequency(&text("2pi*100 GHz")).unwrap(), 2.0 * PI * 100e9);
        assert_eq!(frequency(&text("2π×50 GHz")).unwrap(), 2.0 * PI * 50e9);
        assert_eq!(frequency(&text("1e13 rad/s")).unwrap(), 1e13);
        assert_eq!(frequency(&Quantity::Number(5.0)).unwrap(), 5.0);
        assert!(frequency(&text("inf")).unwrap().is_infinite());
        assert!(frequency(&text("3 THZ")).is_err());
    }

    #[test]
    fn durations() {
        assert_eq!(time(&text("333 ps")).unwrap(), 333e-12);
        assert_eq!(time(&text("3.17e0 ps")).unwrap(), 3.17e-12);
        assert_eq!(time(&text("100 fs")).unwrap(), 100e-15);
        assert_eq!(time(&text("1 ns")).unwrap(), 1e-9);
        assert_eq!(time(&text("2 s")).unwrap(), 2.0);
        assert!(time(&text("3 parsecs")).is_err());
    }
}
