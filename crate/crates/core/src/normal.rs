//! Standard normal density, distribution function and its logarithm.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x) through `erfc`, accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// ln Φ(x) without underflow for very negative `x`.
pub fn ln_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -5.0 {
        cdf(x).ln()
    } else {
        ln_pdf(x) + mills_ratio(-x).ln()
    }
}

/// Mills ratio (1 − Φ(t)) / φ(t) for t ≥ 5 by its continued fraction.
fn mills_ratio(t: f64) -> f64 {
    let mut r = t;
    for k in (1..=200).rev() {
        r = t + k as f64 / r;
    }
    1.0 / r
}

/// ln(eᵃ + eᵇ) for possibly −∞ arguments.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(1 + eˣ) evaluated without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// 1 / (1 + e⁻ˣ) evaluated without overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 50-digit evaluation of 0.5*erfc(-x/sqrt(2)).
    const CDF_TABLE: [(f64, f64); 6] = [
        (0.0, 0.5),
        (1.0, 0.841_344_746_068_542_9),
        (-1.2, 0.115_069_670_221_708_1),
        (-2.0, 0.022_750_131_948_179_2),
        (-3.75, 8.841_728_520_080_376e-5),
        (2.25, 0.987_775_527_344_955_5),
    ];

    #[test]
    fn cdf_matches_reference_table() {
        for (x, want) in CDF_TABLE {
            assert!((cdf(x) - want).abs() < 1e-14, "x={x}: {} vs {want}", cdf(x));
        }
    }

    #[test]
    fn ln_cdf_is_continuous_across_branches() {
        for x in [-4.999_999, -5.0, -5.000_001, -8.0, -20.0] {
            let direct = cdf(x).ln();
            assert!((ln_cdf(x) - direct).abs() < 1e-9 * direct.abs(), "x={x}");
        }
        assert!((ln_cdf(3.0) - cdf(3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn ln_cdf_survives_underflow() {
        let v = ln_cdf(-60.0);
        assert!(v.is_finite());
        // Leading asymptotics: −x²/2 − ln(−x) − ln√(2π).
        let lead = -1800.0 - 60f64.ln() - LN_SQRT_2PI;
        assert!((v - lead).abs() < 1e-3);
        assert_eq!(cdf(-60.0), 0.0);
    }

    #[test]
    fn stable_logistic_helpers() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.3) + sigmoid(-0.3) - 1.0).abs() < 1e-15);
    }
}
