//! Exact decimal rendering of `f64` values for the text formats.
//!
//! Every value is printed with the shortest digit string that parses back to
//! the same double, optionally with the decimal point shifted by a power of
//! ten. Shifting is done on the digit string, so a frequency written in MHz
//! and read back with a `e6` scale is bit-identical to the original Hz value.

/// Shortest round-trip decimal for `value / 10^shift`.
pub(crate) fn decimal(value: f64, shift: i32) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return if value.is_nan() {
            "nan".to_string()
        } else if value > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{value:e}");
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("LowerExp exponent is an integer");
    let exp = exp - shift;
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();

    if !(-7..16).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }

    let point = exp + 1;
    let n = digits.len() as i32;
    if point <= 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-point) as usize))
    } else if point >= n {
        format!("{sign}{digits}{}", "0".repeat((point - n) as usize))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{sign}{a}.{b}")
    }
}

/// Parses `token` and multiplies it by `10^shift` without a rounding step,
/// by folding the shift into the decimal exponent before conversion.
pub(crate) fn parse_scaled(token: &str, shift: i32) -> Option<f64> {
    if shift == 0 {
        return token.parse().ok();
    }
    let (mantissa, exp) = match token.find(['e', 'E']) {
        Some(i) => (&token[..i], token[i + 1..].parse::<i32>().ok()?),
        None => (token, 0),
    };
    if mantissa.is_empty() || mantissa.contains(['e', 'E']) {
        return None;
    }
    // Reject things like "inf" or "nan" that have no decimal mantissa.
    if !mantissa
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '+' | '-'))
    {
        return None;
    }
    format!("{mantissa}e{}", exp + shift).parse().ok()
}
