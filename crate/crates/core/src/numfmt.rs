//! `%g`-style number formatting used by the LP writer and model digests.

/// Significant digits used for every number written to an LP file.
pub const LP_DIGITS: usize = 12;

/// Formats `value` like C's `%.{digits}g`: shortest of fixed/scientific
/// notation, trailing zeros stripped. Infinities print as `inf`/`-inf`.
pub fn format_g(value: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if value == 0.0 {
        return "0".to_string();
    }
    // Round once in scientific form so the exponent reflects the rounded value.
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{value:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Shorthand for [`format_g`] at LP precision.
pub fn lp_number(value: f64) -> String {
    let s = format_g(value, LP_DIGITS);
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(format_g(2.0, 12), "2");
        assert_eq!(format_g(0.5, 12), "0.5");
        assert_eq!(format_g(-3.25, 12), "-3.25");
        assert_eq!(format_g(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_g(116.448536269514722, 12), "116.44853627");
        assert_eq!(format_g(1e-5, 12), "1e-05");
        assert_eq!(format_g(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_g(999999999999.5, 12), "1e+12");
        assert_eq!(format_g(0.0001, 12), "0.0001");
        assert_eq!(format_g(f64::INFINITY, 12), "inf");
        assert_eq!(lp_number(-0.0), "0");
    }

    #[test]
    fn reparse_is_stable() {
        for v in [1.0 / 7.0, 2.0f64.sqrt() * 1e7, -5.5e-9, 42.0, 1e300] {
            let s = lp_number(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(lp_number(back), s);
        }
    }
}
