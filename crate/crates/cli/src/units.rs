//! Quantities with unit suffixes, converted to angular frequency in rad/µs or time in µs.

use std::f64::consts::TAU;

use toml::Value;

/// Longest suffix first so that `MHz` is not read as `Hz`.
const FREQUENCY: &[(&str, f64)] = &[
    ("rad/us", 1.0),
    ("rad/µs", 1.0),
    ("MHz", TAU),
    ("kHz", TAU * 1e-3),
    ("Hz", TAU * 1e-6),
];

const TIME: &[(&str, f64)] = &[("us", 1.0), ("µs", 1.0), ("ns", 1e-3), ("ps", 1e-6), ("ms", 1e3)];

fn with_suffix(text: &str, units: &[(&str, f64)]) -> Option<Result<f64, String>> {
    let s = text.trim();
    let (unit, scale) = units.iter().find(|(u, _)| s.ends_with(u))?;
    let number = s[..s.len() - unit.len()].trim();
    Some(
        number
            .parse::<f64>()
            .map(|x| x * scale)
            .map_err(|_| format!("cannot read {number:?} as a number")),
    )
}

fn quantity(v: &Value, units: &[(&str, f64)], kind: &str, example: &str) -> Result<f64, String> {
    let names: Vec<&str> = units.iter().map(|(u, _)| *u).collect();
    match v {
        Value::String(s) => with_suffix(s, units)
            .unwrap_or_else(|| Err(format!("{s:?} has no {kind} unit (expected one of {})", names.join(", ")))),
        Value::Integer(_) | Value::Float(_) => {
            Err(format!("{kind} {v} needs a unit suffix, e.g. \"{v} {example}\""))
        }
        _ => Err(format!("expected a {kind} string such as \"10 {example}\"")),
    }
}

/// Angular frequency `2π·ν` in rad/µs from `"63.5 MHz"`, `"40 kHz"`, `"1 Hz"` or `"3 rad/us"`.
pub fn frequency(v: &Value) -> Result<f64, String> {
    quantity(v, FREQUENCY, "frequency", "MHz")
}

/// Time in µs from `"9.4 us"`, `"125 ns"`, `"1 ms"` or `"5 ps"`.
pub fn time(v: &Value) -> Result<f64, String> {
    quantity(v, TIME, "time", "us")
}

pub fn number(v: &Value) -> Result<f64, String> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        _ => Err(format!("expected a number, found {v}")),
    }
}

/// A number or a fraction string such as `"4/15"`.
pub fn ratio(v: &Value) -> Result<f64, String> {
    match v {
        Value::String(s) => {
            let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("cannot read {s:?} as a fraction"));
            match s.split_once('/') {
                Some((a, b)) => {
                    let d = parse(b)?;
                    if d == 0.0 {
                        return Err(format!("{s:?} divides by zero"));
                    }
                    Ok(parse(a)? / d)
                }
                None => parse(s),
            }
        }
        _ => number(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Value {
        Value::String(x.into())
    }

    #[test]
    fn frequencies_are_angular() {
        assert!((frequency(&s("63.5 MHz")).unwrap() - TAU * 63.5).abs() < 1e-12);
        assert!((frequency(&s("40kHz")).unwrap() - TAU * 0.04).abs() < 1e-15);
        assert!((frequency(&s("-403 MHz")).unwrap() + TAU * 403.0).abs() < 1e-12);
        assert_eq!(frequency(&s("2 rad/us")).unwrap(), 2.0);
        assert!((frequency(&s("1e6 Hz")).unwrap() - TAU).abs() < 1e-12);
    }

    #[test]
    fn times_are_microseconds() {
        assert_eq!(time(&s("9.4 us")).unwrap(), 9.4);
        assert!((time(&s("125 ns")).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(time(&s("1 ms")).unwrap(), 1000.0);
    }

    #[test]
    fn missing_or_wrong_units_are_rejected() {
        assert!(frequency(&Value::Float(63.5)).is_err());
        assert!(frequency(&s("63.5 GHz")).is_err());
        assert!(time(&s("5 MHz")).is_err());
        assert!(time(&s("five us")).is_err());
    }

    #[test]
    fn fractions() {
        assert!((ratio(&s("4/15")).unwrap() - 4.0 / 15.0).abs() < 1e-16);
        assert_eq!(ratio(&Value::Float(0.5)).unwrap(), 0.5);
        assert!(ratio(&s("1/0")).is_err());
    }
}
