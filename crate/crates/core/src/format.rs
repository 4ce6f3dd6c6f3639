//! Number formatting for CSV tables.

/// Formats `x` with `digits` significant digits using C's `%g` rules:
/// scientific notation when the decimal exponent is < -4 or >= `digits`,
/// trailing zeros removed.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    // Round first so that e.g. 9.999996 -> 1e1 picks the right exponent.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats an optional statistic, writing `undefined` for missing values.
pub fn sig_or_undefined(x: Option<f64>, digits: usize) -> String {
    match x {
        Some(v) => sig(v, digits),
        None => "undefined".to_string(),
    }
}
