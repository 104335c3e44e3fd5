//! Exact cycle arithmetic and the display/file formatting rules for it.
//!
//! All occupations, throughputs and latencies are `Ratio<i64>` internally;
//! floats only ever appear at the text boundary.

use num_rational::Ratio;
use num_traits::Zero;

/// Cycles (or cycles per instruction) as an exact rational.
pub type Cy = Ratio<i64>;

/// Shorthand constructor.
pub fn cy(num: i64, den: i64) -> Cy {
    Ratio::new(num, den)
}

/// Parse a number as written in model files and measurement logs.
///
/// Accepts plain integers (`4`), decimals (`0.5`, `5.011`, `-1.25`) and
/// fractions (`1/3`). Decimals are converted exactly.
pub fn parse_cy(s: &str) -> Option<Cy> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s),
    };
    if let Some((int, frac)) = body.split_once('.') {
        if frac.len() > 12 || frac.chars().any(|c| !c.is_ascii_digit()) {
            return None;
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let frac_num: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        Some(Ratio::new(sign * (int * den + frac_num), den))
    } else {
        let v: i64 = body.parse().ok()?;
        Some(Ratio::from_integer(sign * v))
    }
}

/// Render with the fewest digits that are exact: `0` stays `0`, halves and
/// quarters come out as `0.5` / `0.25`, and denominators that do not divide a
/// power of ten fall back to `n/d` form.
pub fn format_exact(v: Cy) -> String {
    if v.is_zero() {
        return "0".to_string();
    }
    match decimal_digits(v) {
        Some(0) => v.numer().to_string(),
        Some(digits) => format_fixed(v, digits),
        None => format!("{}/{}", v.numer(), v.denom()),
    }
}

/// Like [`format_exact`] but always keeps at least one fractional digit, so
/// integers render as `4.0`. Used for the rTP/latency fields of entry lines.
pub fn format_exact_min1(v: Cy) -> String {
    match decimal_digits(v) {
        Some(0) => format!("{}.0", v.numer()),
        Some(digits) => format_fixed(v, digits),
        None => format!("{}/{}", v.numer(), v.denom()),
    }
}

/// Two-decimal display rounding, round-half-even. `1/3` renders as `0.33`,
/// `2` as `2.00`.
pub fn format_two_decimals(v: Cy) -> String {
    let scaled = v * Ratio::from_integer(100);
    let floor = scaled.floor().to_integer();
    let rem = scaled - Ratio::from_integer(floor);
    let half = Ratio::new(1, 2);
    let rounded = if rem > half || (rem == half && floor % 2 != 0) {
        floor + 1
    } else {
        floor
    };
    let neg = rounded < 0;
    let abs = rounded.abs();
    format!(
        "{}{}.{:02}",
        if neg { "-" } else { "" },
        abs / 100,
        abs % 100
    )
}

/// Number of fractional decimal digits needed for an exact rendering, if the
/// reduced denominator is of the form 2^a * 5^b.
fn decimal_digits(v: Cy) -> Option<u32> {
    let mut den = *v.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den == 1 {
        Some(twos.max(fives))
    } else {
        None
    }
}

fn format_fixed(v: Cy, digits: u32) -> String {
    let scale = 10i64.pow(digits);
    let scaled = (v * Ratio::from_integer(scale)).to_integer();
    let neg = scaled < 0;
    let abs = scaled.abs();
    let int = abs / scale;
    let frac = abs % scale;
    format!(
        "{}{}.{:0width$}",
        if neg { "-" } else { "" },
        int,
        frac,
        width = digits as usize
    )
}
