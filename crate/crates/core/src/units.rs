//! SI-prefixed quantity strings such as `"110 nA"`, `"10us"` or `"-32 dBm"`.
//!
//! Parsing goes through a decimal string so that `"1.5 uV"` yields exactly the
//! same `f64` as the literal `1.5e-6`. Formatting is the inverse and round-trips
//! bit-identically.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitError {
    #[error("missing unit in {0:?} (expected a quantity in {1})")]
    MissingUnit(String, &'static str),
    #[error("wrong unit in {0:?} (expected a quantity in {1})")]
    WrongUnit(String, &'static str),
    #[error("unknown SI prefix {prefix:?} in {input:?}")]
    UnknownPrefix { input: String, prefix: String },
    #[error("invalid number in {0:?}")]
    BadNumber(String),
}

const PREFIXES: &[(&str, i32)] = &[
    ("f", -15),
    ("p", -12),
    ("n", -9),
    ("u", -6),
    ("µ", -6),
    ("μ", -6),
    ("m", -3),
    ("", 0),
    ("k", 3),
    ("M", 6),
    ("G", 9),
];

fn prefix_exponent(prefix: &str) -> Option<i32> {
    PREFIXES.iter().find(|(p, _)| *p == prefix).map(|(_, e)| *e)
}

fn prefix_for(exp: i32) -> &'static str {
    PREFIXES
        .iter()
        .find(|(p, e)| *e == exp && !p.starts_with(['µ', 'μ']))
        .map(|(p, _)| *p)
        .unwrap_or("")
}

/// Splits `"12.5 mV"` into the numeric part and the unit part.
fn split(input: &str) -> (&str, &str) {
    let s = input.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E') && is_exponent_marker(s, i)))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    (s[..end].trim(), s[end..].trim())
}

// `e` counts as an exponent only when followed by a digit or sign, so that
// units starting with `e` are not swallowed.
fn is_exponent_marker(s: &str, i: usize) -> bool {
    i > 0
        && s[i + 1..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+')
}

fn decimal_scaled(number: &str, exp: i32) -> Option<f64> {
    if number.is_empty() {
        return None;
    }
    let v: f64 = if exp == 0 {
        number.parse().ok()?
    } else if number.contains(['e', 'E']) {
        let (m, e) = number.split_once(['e', 'E'])?;
        let e: i32 = e.parse().ok()?;
        format!("{m}e{}", e + exp).parse().ok()?
    } else {
        format!("{number}e{exp}").parse().ok()?
    };
    v.is_finite().then_some(v)
}

/// Parses a quantity in `unit`, returning it scaled to `10^target_exp` units.
///
/// `parse_quantity("0.35 uA", "A", -9)` gives `350.0` (nanoamperes).
pub fn parse_quantity(input: &str, unit: &'static str, target_exp: i32) -> Result<f64, UnitError> {
    let (number, suffix) = split(input);
    if suffix.is_empty() {
        return Err(UnitError::MissingUnit(input.to_string(), unit));
    }
    if number.is_empty() {
        return Err(UnitError::BadNumber(input.to_string()));
    }
    let Some(prefix) = suffix.strip_suffix(unit) else {
        return Err(UnitError::WrongUnit(input.to_string(), unit));
    };
    let exp = prefix_exponent(prefix).ok_or_else(|| UnitError::UnknownPrefix {
        input: input.to_string(),
        prefix: prefix.to_string(),
    })?;
    decimal_scaled(number, exp - target_exp).ok_or_else(|| UnitError::BadNumber(input.to_string()))
}

/// Parses a quantity whose unit takes no SI prefix (`dBm`, `dB`).
pub fn parse_unprefixed(input: &str, unit: &'static str) -> Result<f64, UnitError> {
    let (number, suffix) = split(input);
    if suffix.is_empty() {
        return Err(UnitError::MissingUnit(input.to_string(), unit));
    }
    if suffix != unit {
        return Err(UnitError::WrongUnit(input.to_string(), unit));
    }
    decimal_scaled(number, 0).ok_or_else(|| UnitError::BadNumber(input.to_string()))
}

pub fn parse_dbm(input: &str) -> Result<f64, UnitError> {
    parse_unprefixed(input, "dBm")
}

pub fn parse_db(input: &str) -> Result<f64, UnitError> {
    parse_unprefixed(input, "dB")
}

/// Microseconds from a time string (`"10us"`, `"1 ms"`, `"2 s"`).
pub fn parse_micros(input: &str) -> Result<f64, UnitError> {
    parse_quantity(input, "s", -6)
}

pub fn parse_seconds(input: &str) -> Result<f64, UnitError> {
    parse_quantity(input, "s", 0)
}

pub fn parse_meters(input: &str) -> Result<f64, UnitError> {
    parse_quantity(input, "m", 0)
}

pub fn parse_hertz(input: &str) -> Result<f64, UnitError> {
    parse_quantity(input, "Hz", 0)
}

pub fn parse_volts(input: &str) -> Result<f64, UnitError> {
    parse_quantity(input, "V", 0)
}

/// Bit rate in bits/s. A bare count is accepted as bits per second.
pub fn parse_bit_rate(input: &str) -> Result<f64, UnitError> {
    let (number, suffix) = split(input);
    if suffix.is_empty() {
        return decimal_scaled(number, 0).ok_or_else(|| UnitError::BadNumber(input.to_string()));
    }
    parse_quantity(input, "bps", 0)
}

/// Formats `value` (expressed in `10^value_exp` units) with an engineering
/// prefix, e.g. `format_quantity(1.5e-6, 0, "V") == "1.5 uV"`.
///
/// The output parses back to exactly `value` with [`parse_quantity`].
pub fn format_quantity(value: f64, value_exp: i32, unit: &str) -> String {
    if value == 0.0 {
        return format!("0 {unit}");
    }
    let sci = format!("{value:e}");
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let total = exp + value_exp;
    let eng = (total.div_euclid(3) * 3).clamp(-15, 9);
    let shift = total - eng;

    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches('-');
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    // decimal point sits after `1 + shift` digits
    let point = 1 + shift;
    let text = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    let sign = if negative { "-" } else { "" };
    format!("{sign}{text} {}{unit}", prefix_for(eng))
}
