//! Chi-squared distribution with one degree of freedom.
//!
//! The survival function uses `P(chi2_1 > x) = erfc(sqrt(x / 2))`. `erfc` is
//! evaluated with the positive-term Taylor series of `erf` for small
//! arguments and a Lentz continued fraction in the tail.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const SERIES_CUTOFF: f64 = 2.0;

/// Complementary error function for `z >= 0`.
pub fn erfc(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < SERIES_CUTOFF {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

// erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_n 2^n z^(2n+1) / (2n+1)!!
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-z2).exp() * sum
}

// erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
fn erfc_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 * 0.5;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
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
    (-z * z).exp() / PI.sqrt() / f
}

/// `P(chi2_1 > x)`; equals 1 for `x <= 0`.
pub fn survival(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erfc((0.5 * x).sqrt())
    }
}

/// Density `exp(-x/2) / sqrt(2 pi x)` for `x > 0`.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x).exp() / (2.0 * PI * x).sqrt()
}

/// `x * pdf(x)`, continuously extended by 0 at `x = 0`.
pub fn x_pdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.sqrt() * (-0.5 * x).exp() / (2.0 * PI).sqrt()
    }
}

/// Upper quantile: the `a` with `P(chi2_1 > a) = q`, for `q` in `(0, 1]`.
///
/// Bisects on the survival function until the bracket collapses to a few
/// ulps, which also bounds `|survival(a) - q|` well below `1e-12`.
pub fn quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Numerical(format!(
            "chi-squared quantile needs q in (0, 1], got {q}"
        )));
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while survival(hi) > q {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical(format!("no quantile bracket for q = {q}")));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi {
            let a = if (survival(lo) - q).abs() <= (survival(hi) - q).abs() {
                lo
            } else {
                hi
            };
            if (survival(a) - q).abs() > 1e-12 {
                return Err(Error::Numerical(format!(
                    "quantile bisection stalled at q = {q}"
                )));
            }
            return Ok(a);
        }
        if survival(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "quantile bisection did not converge for q = {q}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_at_zero_is_one() {
        assert_eq!(survival(0.0), 1.0);
    }

    #[test]
    fn pdf_at_one() {
        assert!((pdf(1.0) - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn erfc_known_values() {
        // Abramowitz & Stegun table values.
        assert!((erfc(0.5) - 0.479_500_122_186_953_5).abs() < 1e-15);
        assert!((erfc(1.0) - 0.157_299_207_050_285_1).abs() < 1e-15);
        let tail = 4.677_734_981_047_266e-3;
        assert!((erfc(2.0) - tail).abs() / tail < 1e-13);
        let tail = 1.537_459_794_428_034_8e-12;
        assert!((erfc(5.0) - tail).abs() / tail < 1e-12);
    }

    #[test]
    fn erfc_branches_agree_at_cutoff() {
        let z = SERIES_CUTOFF;
        let a = 1.0 - erf_series(z);
        let b = erfc_continued_fraction(z);
        assert!((a - b).abs() / b < 1e-12);
    }

    #[test]
    fn quantile_rejects_bad_probability() {
        assert!(quantile(0.0).is_err());
        assert!(quantile(1.5).is_err());
        assert_eq!(quantile(1.0).unwrap(), 0.0);
    }

    #[test]
    fn x_pdf_vanishes_at_zero() {
        assert_eq!(x_pdf(0.0), 0.0);
        assert!(x_pdf(1e-12) < 1e-6);
        assert!((x_pdf(2.0) - 2.0 * pdf(2.0)).abs() < 1e-15);
    }
}
