//! Lossless hexadecimal floating-point text (`0x1.91eb851eb851fp+1`).
//!
//! Output always carries the full 13-digit fraction; input accepts 0..=13
//! fraction digits with a leading `1` (normal) or `0` (zero/subnormal).

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HexFloatError(pub String);

impl fmt::Display for HexFloatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid hex float `{}`", self.0)
    }
}

impl std::error::Error for HexFloatError {}

const FRAC_BITS: u32 = 52;
const FRAC_MASK: u64 = (1 << FRAC_BITS) - 1;

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let biased = ((bits >> FRAC_BITS) & 0x7ff) as i32;
    let frac = bits & FRAC_MASK;
    if biased == 0 {
        if frac == 0 {
            return format!("{sign}0x0p+0");
        }
        return format!("{sign}0x0.{frac:013x}p-1022");
    }
    let exp = biased - 1023;
    format!("{sign}0x1.{frac:013x}p{exp:+}")
}

pub fn parse(s: &str) -> Result<f64, HexFloatError> {
    let err = || HexFloatError(s.to_string());
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let apply_sign = |v: f64| if negative { -v } else { v };
    match body {
        "inf" => return Ok(apply_sign(f64::INFINITY)),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").ok_or_else(err)?;
    let (mantissa, exponent) = body.split_once('p').ok_or_else(err)?;
    let exponent: i32 = exponent.parse().map_err(|_| err())?;
    let (lead, frac_digits) = match mantissa.split_once('.') {
        Some((lead, frac)) => (lead, frac),
        None => (mantissa, ""),
    };
    if frac_digits.len() > 13 || !frac_digits.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(err());
    }
    let frac = if frac_digits.is_empty() {
        0
    } else {
        u64::from_str_radix(frac_digits, 16).map_err(|_| err())? << (4 * (13 - frac_digits.len()))
    };
    let bits = match lead {
        "1" => {
            if !(-1022..=1023).contains(&exponent) {
                return Err(err());
            }
            (((exponent + 1023) as u64) << FRAC_BITS) | frac
        }
        "0" if frac == 0 => 0,
        "0" if exponent == -1022 => frac,
        _ => return Err(err()),
    };
    Ok(apply_sign(f64::from_bits(bits)))
}
