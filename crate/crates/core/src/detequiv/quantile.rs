//! Standard normal CDF and its inverse.

use super::DetEquivError;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `erf(x)` by its Maclaurin series; used for |x| < 2, where cancellation in `1 - erf` stays small.
fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `erfc(x)` for x >= 2 by the Laplace continued fraction (modified Lentz).
fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...)))))
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}

fn erfc(x: f64) -> f64 {
    if x >= 2.0 {
        erfc_continued_fraction(x)
    } else if x <= -2.0 {
        2.0 - erfc_continued_fraction(-x)
    } else {
        1.0 - erf_series(x)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Inverse standard normal CDF by bisection on `[-10, 10]`.
///
/// The result satisfies `|normal_cdf(z) - alpha| <= 1e-10`.
pub fn normal_quantile(alpha: f64) -> Result<f64, DetEquivError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DetEquivError::DomainError(alpha));
    }
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = normal_cdf(mid);
        if p == alpha {
            return Ok(mid);
        }
        if p < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_center() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn domain() {
        for bad in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(bad), Err(DetEquivError::DomainError(_))));
        }
    }

    #[test]
    fn branches_agree_at_switch_point() {
        let below = 1.0 - erf_series(2.0);
        let above = erfc_continued_fraction(2.0);
        assert!((below - above).abs() < 1e-12, "{below} vs {above}");
    }

    #[test]
    fn tails() {
        assert!(normal_cdf(-9.0) > 0.0 && normal_cdf(-9.0) < 1e-18);
        assert!((normal_cdf(5.0) - 0.999_999_713_348_428_1).abs() < 1e-15);
    }
}
