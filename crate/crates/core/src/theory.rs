//! Analytic predictions: limit-direction tables, regime checks and exact
//! classifier errors on the Gaussian-cluster data.

use serde::{Deserialize, Serialize};

use crate::datasets::GaussianSpec;
use crate::normal::{cdf, ln_add_exp, ln_cdf, ln_pdf};
use crate::optim::Algorithm;
use crate::quad;
use crate::{Error, Result};

/// `p(ω) = arctan((ω²−1)/(2ω))/π`.
pub fn p_of_omega(omega: f64) -> f64 {
    ((omega * omega - 1.0) / (2.0 * omega)).atan() / std::f64::consts::PI
}

/// Interval the Adam-column constant `s` must fall in.
pub const S_INTERVAL: (f64, f64) = (0.72, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEntry {
    pub direction: [f64; 2],
    pub probability: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionTable {
    pub entries: Vec<DirectionEntry>,
    pub algorithm: String,
    pub regime: String,
    pub source: String,
}

impl DirectionTable {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Probabilities in [0,1] summing to 1 and unit-norm directions.
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if !(0.0..=1.0).contains(&e.probability) {
                return Err(Error::invalid("probability", format!("{} out of [0,1] for {}", e.probability, e.label)));
            }
            let n = e.direction[0].hypot(e.direction[1]);
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("direction", format!("{} has norm {n}", e.label)));
            }
        }
        let total = self.total_probability();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("probability", format!("table sums to {total}")));
        }
        Ok(())
    }

    /// Combined mass of entries whose direction has `|x2| < tol`.
    pub fn axis_mass(&self, tol: f64) -> f64 {
        self.entries.iter().filter(|e| e.direction[1].abs() < tol).map(|e| e.probability).sum()
    }
}

fn unit(x: f64, y: f64) -> [f64; 2] {
    let n = x.hypot(y);
    [x / n, y / n]
}

fn entry(direction: [f64; 2], probability: f64, label: &str) -> DirectionEntry {
    DirectionEntry {
        direction,
        probability,
        label: label.to_string(),
    }
}

/// Limit-direction distribution on the toy data. `s` is only used by the
/// Adam column (directions `(s, ±1)/√(s²+1)`).
pub fn predicted_toy_table(algorithm: Algorithm, omega: f64, s: f64) -> DirectionTable {
    let p = p_of_omega(omega);
    let w2 = omega * omega;
    let entries = match algorithm {
        Algorithm::Gd => vec![
            entry([1.0, 0.0], 0.25 + p / 2.0, "(1,0)"),
            entry([-1.0, 0.0], 0.5, "(-1,0)"),
            entry(unit(w2 - 1.0, 2.0 * omega), 0.125 - p / 4.0, "z2 direction"),
            entry(unit(w2 - 1.0, -2.0 * omega), 0.125 - p / 4.0, "z3 direction"),
        ],
        Algorithm::SignGd => vec![
            entry([1.0, 0.0], p, "(1,0)"),
            entry([-1.0, 0.0], 0.5, "(-1,0)"),
            entry(unit(1.0, 1.0), 0.25 - p / 2.0, "(1,1)"),
            entry(unit(1.0, -1.0), 0.25 - p / 2.0, "(1,-1)"),
        ],
        Algorithm::Adam => vec![
            entry([1.0, 0.0], p, "(1,0)"),
            entry([-1.0, 0.0], 0.5, "(-1,0)"),
            entry(unit(1.0, 1.0), 0.125 - p / 4.0, "(1,1)"),
            entry(unit(1.0, -1.0), 0.125 - p / 4.0, "(1,-1)"),
            entry(unit(s, 1.0), 0.125 - p / 4.0, "(s,1)"),
            entry(unit(s, -1.0), 0.125 - p / 4.0, "(s,-1)"),
        ],
    };
    DirectionTable {
        entries,
        algorithm: algorithm.name().to_string(),
        regime: format!("toy, omega = {omega}"),
        source: "toy limit table".to_string(),
    }
}

/// Gradient-flow limit on isotropic Gaussian data: `sign(a)·(1, 0)`.
pub fn predicted_gd_gaussian(a_sign: f64) -> [f64; 2] {
    if a_sign >= 0.0 {
        [1.0, 0.0]
    } else {
        [-1.0, 0.0]
    }
}

/// signGD limit on isotropic Gaussian data, keyed on `sign(a)` and the sign
/// of `sin θ₀` of the initial neuron.
pub fn predicted_signgd_gaussian(a_sign: f64, sin_theta0: f64) -> [f64; 2] {
    if a_sign < 0.0 {
        return [-1.0, 0.0];
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    if sin_theta0 > 0.0 {
        [r, r]
    } else if sin_theta0 < 0.0 {
        [r, -r]
    } else {
        [1.0, 0.0]
    }
}

/// Quadrant rule for signGD iterates: `sign(sin θ_{t+1}) = sign(a)·sign(sin θ_t)`.
pub fn signgd_next_sin_sign(a_sign: f64, sin_sign: f64) -> f64 {
    a_sign.signum() * sin_sign.signum()
}

/// Hypothesis flags for each theorem, computed from the data parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub omega_ge_2: bool,
    pub ratio_ge_0_8: bool,
    pub ratio_le_1_5: bool,
    pub isotropic: bool,
    /// `sup ‖w₀‖ < η/2`; `None` when no initialization was supplied.
    pub init_below_half_eta: Option<bool>,
    pub toy_window: bool,
    pub theorem3_window: bool,
}

impl RegimeCheck {
    pub fn theorem1(&self) -> bool {
        self.isotropic && self.omega_ge_2 && self.ratio_ge_0_8
    }

    pub fn theorem2(&self) -> bool {
        self.isotropic && self.omega_ge_2 && self.ratio_ge_0_8 && self.ratio_le_1_5 && self.init_below_half_eta != Some(false)
    }
}

pub fn regime_check(spec: &GaussianSpec, eta: Option<f64>, max_init_norm: Option<f64>) -> RegimeCheck {
    let ratio = if spec.sigma_x > 0.0 { spec.mu / spec.sigma_x } else { f64::INFINITY };
    let w2 = spec.omega * spec.omega;
    RegimeCheck {
        omega_ge_2: spec.omega >= 2.0,
        ratio_ge_0_8: ratio >= 0.8,
        ratio_le_1_5: ratio <= 1.5,
        isotropic: spec.is_isotropic(),
        init_below_half_eta: match (eta, max_init_norm) {
            (Some(e), Some(n)) => Some(n < e / 2.0),
            _ => None,
        },
        toy_window: 1.0 + 2.0 / 3f64.sqrt() < w2 && w2 < 3.0 + 2.0 * 2f64.sqrt(),
        theorem3_window: theorem3_regime(spec),
    }
}

/// Largest initial neuron norm for which the toy limit tables are proven.
pub fn toy_init_bound(mu: f64, omega: f64, eta: f64) -> f64 {
    let w2 = omega * omega;
    let a = (3.0 * w2 + 1.0) * (w2 - 1.0) - 4.0 * w2;
    let b = 4.0 * w2 - (w2 - 1.0).powi(2);
    let c = 8.0 * omega / mu * (2.0 * omega + 1.0 - w2);
    eta * mu / (8.0 * omega * (w2 - 1.0)) * a.min(b).min(c)
}

/// Per-step first-coordinate coefficient of the `(s, ±1)` neurons for Adam
/// with β → 1: `(A + (τ−1)B) / √(τ(A² + (τ−1)B²))`, `A = 3ω²+1`, `B = ω²−1`.
pub fn adam_s_coefficient(omega: f64, tau: u64) -> f64 {
    let w2 = omega * omega;
    let (a, b) = (3.0 * w2 + 1.0, w2 - 1.0);
    let t = tau as f64;
    (a + (t - 1.0) * b) / (t * (a * a + (t - 1.0) * b * b)).sqrt()
}

/// Cesàro mean of [`adam_s_coefficient`] over `τ = 1..=horizon`.
pub fn adam_s_horizon(omega: f64, horizon: u64) -> f64 {
    (1..=horizon).map(|t| adam_s_coefficient(omega, t)).sum::<f64>() / horizon as f64
}

fn require_sigma_y(spec: &GaussianSpec) -> Result<()> {
    if !(spec.sigma_y > 0.0) || !(spec.sigma_x > 0.0) {
        return Err(Error::invalid("sigma", "classifier errors need sigma_x, sigma_y > 0"));
    }
    Ok(())
}

/// `ln` of the exact error of `sign(a·x1 + b·x2)`.
pub fn ln_linear_error(spec: &GaussianSpec, a: f64, b: f64) -> Result<f64> {
    require_sigma_y(spec)?;
    if a == 0.0 && b == 0.0 {
        return Err(Error::invalid("a, b", "both coefficients are zero"));
    }
    let s = spec.sigma_y * (a * a * spec.kappa + b * b).sqrt();
    let (mu1, mu3, mu) = (spec.mu1(), spec.mu3(), spec.mu);
    let t_plus = -(a * mu1 + b * mu) / s;
    let t_minus = -(a * mu1 - b * mu) / s;
    let t_zero = -(a * mu3) / s;
    let ln_q = (0.25f64).ln();
    let pos = ln_add_exp(ln_q + ln_cdf(t_plus), ln_q + ln_cdf(t_minus));
    Ok(ln_add_exp(pos, 0.5f64.ln() + ln_cdf(t_zero)).min(0.0))
}

/// Exact error of the linear rule `sign(a·x1 + b·x2)`.
pub fn linear_error(spec: &GaussianSpec, a: f64, b: f64) -> Result<f64> {
    ln_linear_error(spec, a, b).map(f64::exp)
}

/// Error of a classifier computed by quadrature, kept in log space because
/// the values underflow deep inside the separable regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorValue {
    pub value: f64,
    pub ln_value: f64,
    /// Absolute quadrature error bound on `value`.
    pub abs_error: f64,
}

/// `ln ∫₀^∞ N(u; m, σ²) Φ(α + βu) du` plus an absolute error bound.
///
/// The integrand is log-concave with curvature at least `1/σ²`, so after
/// locating its peak a ±12σ window captures it up to `e^{-72}`.
fn ln_half_line(m: f64, sigma: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let h = |u: f64| ln_pdf((u - m) / sigma) - sigma.ln() + ln_cdf(alpha + beta * u);
    let dh = |u: f64| {
        let t = alpha + beta * u;
        -(u - m) / (sigma * sigma) + beta * (ln_pdf(t) - ln_cdf(t)).exp()
    };
    let peak = if dh(0.0) <= 0.0 {
        0.0
    } else {
        let mut hi = m.max(0.0) + sigma;
        while dh(hi) > 0.0 {
            hi = 2.0 * hi + sigma;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dh(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.max(sigma) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let h_peak = h(peak);
    let lo = (peak - 12.0 * sigma).max(0.0);
    let hi = peak + 12.0 * sigma;
    let res = quad::integrate(|u| (h(u) - h_peak).exp(), lo, hi, 1e-14 * sigma, 1e-12, 2000)?;
    Ok((h_peak + res.value.ln(), h_peak.exp() * res.error))
}

/// Exact error of the piecewise-linear rule `sign(a·x1 + b·|x2|)`, `b ≥ 0`.
///
/// Conditioning on `x2` leaves a Gaussian tail in `x1`, so the error is a
/// sum of one-dimensional integrals over each half-line of `x2`.
pub fn piecewise_error(spec: &GaussianSpec, a: f64, b: f64) -> Result<ErrorValue> {
    require_sigma_y(spec)?;
    if !(b >= 0.0) {
        return Err(Error::invalid("b", format!("must be >= 0, got {b}")));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::invalid("a, b", "both coefficients are zero"));
    }
    if a == 0.0 {
        // b|x2| > 0 almost surely: everything is labelled +1
        return Ok(ErrorValue {
            value: 0.5,
            ln_value: 0.5f64.ln(),
            abs_error: 0.0,
        });
    }
    let (sx, sy) = (spec.sigma_x, spec.sigma_y);
    let (mu1, mu3, mu) = (spec.mu1(), spec.mu3(), spec.mu);
    let r = b / a.abs();
    // Inner probabilities take the form Φ(α + β|x2|).
    let (alpha_pos, beta_pos, alpha_neg, beta_neg) = if a > 0.0 {
        (-mu1 / sx, -r / sx, -mu3 / sx, r / sx)
    } else {
        (mu1 / sx, -r / sx, mu3 / sx, r / sx)
    };
    let (p1, e1) = ln_half_line(mu, sy, alpha_pos, beta_pos)?;
    let (p2, e2) = ln_half_line(-mu, sy, alpha_pos, beta_pos)?;
    let (n1, e3) = ln_half_line(0.0, sy, alpha_neg, beta_neg)?;
    // x2 ~ N(0, σy²) is symmetric: both half-lines give the same integral
    let ln_pos = ln_add_exp(p1, p2);
    let ln_neg = n1 + 2f64.ln();
    // rounding can push a certain error a hair above 1
    let ln_value = (0.5f64.ln() + ln_add_exp(ln_pos, ln_neg)).min(0.0);
    Ok(ErrorValue {
        value: ln_value.exp(),
        ln_value,
        abs_error: 0.5 * (e1 + e2 + 2.0 * e3),
    })
}

/// `ω ∈ [2,12]`, `κ ∈ [1/ω², 1]`, `μ/σy ≥ 0.8√κ·ω`.
pub fn theorem3_regime(spec: &GaussianSpec) -> bool {
    let (w, k) = (spec.omega, spec.kappa);
    let tol = 1e-12;
    spec.sigma_y > 0.0
        && (2.0..=12.0).contains(&w)
        && k >= 1.0 / (w * w) * (1.0 - tol)
        && k <= 1.0 + tol
        && spec.mu / spec.sigma_y >= 0.8 * k.sqrt() * w * (1.0 - tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Gap {
    /// `piecewise_error(3,1) − linear_error(1,0)`; may underflow to 0.
    pub gap: f64,
    /// `ln(piecewise / linear)`; negative iff the gap is negative.
    pub ln_ratio: f64,
    pub piecewise: ErrorValue,
    pub linear: f64,
    pub ln_linear: f64,
    pub regime_ok: bool,
}

pub fn theorem3_gap(spec: &GaussianSpec) -> Result<Theorem3Gap> {
    let piecewise = piecewise_error(spec, 3.0, 1.0)?;
    let ln_linear = ln_linear_error(spec, 1.0, 0.0)?;
    Ok(Theorem3Gap {
        gap: piecewise.value - ln_linear.exp(),
        ln_ratio: piecewise.ln_value - ln_linear,
        piecewise,
        linear: ln_linear.exp(),
        ln_linear,
        regime_ok: theorem3_regime(spec),
    })
}

/// One point of the Theorem 3 scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub omega: f64,
    pub kappa: f64,
    /// `μ/σy` as a multiple of `√κ·ω`.
    pub ratio_factor: f64,
    pub spec: GaussianSpec,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// `n³` grid: `ω ∈ [2,12]`, `κ ∈ [1/ω²,1]`, `μ/σy = c·√κ·ω` with
/// `c ∈ [c_lo, c_hi]`; `σy = 1`.
pub fn theorem3_grid(n: usize, c_lo: f64, c_hi: f64) -> Result<Vec<GridPoint>> {
    let mut out = Vec::with_capacity(n * n * n);
    for omega in linspace(2.0, 12.0, n) {
        for kappa in linspace(1.0 / (omega * omega), 1.0, n) {
            for c in linspace(c_lo, c_hi, n) {
                let mu = c * kappa.sqrt() * omega;
                out.push(GridPoint {
                    omega,
                    kappa,
                    ratio_factor: c,
                    spec: GaussianSpec::with_kappa(mu, omega, kappa, 1.0, 0.0, 2)?,
                });
            }
        }
    }
    Ok(out)
}

/// Exact error of the Bayes rule is not available in closed form; this is the
/// error of `sign(x1)` expressed directly through Φ, used as a cross-check.
pub fn sign_x1_error(spec: &GaussianSpec) -> f64 {
    0.5 * cdf(-spec.mu1() / spec.sigma_x) + 0.5 * cdf(-spec.mu3() / spec.sigma_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn p_of_omega_values() {
        assert_abs_diff_eq!(p_of_omega(2.0), 0.75f64.atan() / std::f64::consts::PI, epsilon = 1e-16);
        assert_abs_diff_eq!(p_of_omega(2.0), 0.204_832_764, epsilon = 1e-9);
        assert!(p_of_omega(1.0 + 1e-9) < 1e-9);
        assert!((p_of_omega(1e9) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn toy_tables_are_normalized() {
        for alg in [Algorithm::Gd, Algorithm::SignGd, Algorithm::Adam] {
            for &omega in &[1.5, 2.0, 2.3] {
                let t = predicted_toy_table(alg, omega, 0.85);
                t.validate().unwrap();
            }
        }
        let gd = predicted_toy_table(Algorithm::Gd, 2.0, 1.0);
        assert_abs_diff_eq!(gd.entries[0].probability, 0.352_416_382, epsilon = 1e-9);
    }

    #[test]
    fn gd_puts_more_mass_on_the_axis_than_signgd() {
        let (lo, hi) = ((1.0 + 2.0 / 3f64.sqrt()).sqrt(), (3.0 + 2.0 * 2f64.sqrt()).sqrt());
        for i in 1..100 {
            let omega = lo + (hi - lo) * i as f64 / 100.0;
            let gd = predicted_toy_table(Algorithm::Gd, omega, 1.0);
            let sg = predicted_toy_table(Algorithm::SignGd, omega, 1.0);
            assert!(gd.entries[0].probability > sg.entries[0].probability);
            assert!(gd.axis_mass(1e-12) > sg.axis_mass(1e-12));
        }
    }

    #[test]
    fn gaussian_predictions() {
        assert_eq!(predicted_gd_gaussian(1.0), [1.0, 0.0]);
        assert_eq!(predicted_gd_gaussian(-1.0), [-1.0, 0.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(predicted_signgd_gaussian(1.0, 0.3), [r, r]);
        assert_eq!(predicted_signgd_gaussian(1.0, -0.3), [r, -r]);
        assert_eq!(predicted_signgd_gaussian(1.0, 0.0), [1.0, 0.0]);
        assert_eq!(predicted_signgd_gaussian(-1.0, 0.3), [-1.0, 0.0]);
        assert_eq!(predicted_signgd_gaussian(-1.0, -0.3), [-1.0, 0.0]);
        assert_eq!(signgd_next_sin_sign(-1.0, 1.0), -1.0);
        assert_eq!(signgd_next_sin_sign(1.0, -1.0), -1.0);
    }

    #[test]
    fn regime_flags() {
        let r = regime_check(&GaussianSpec::isotropic(0.3, 1.5, 0.1, 2).unwrap(), None, None);
        assert!(!r.theorem1());
        let r = regime_check(&GaussianSpec::isotropic(0.05, 2.0, 0.1, 2).unwrap(), None, None);
        assert!(!r.theorem1());
        let r = regime_check(&GaussianSpec::isotropic(0.3, 2.0, 0.1, 2).unwrap(), None, None);
        assert!(r.theorem1() && !r.theorem2());
        let r = regime_check(&GaussianSpec::isotropic(0.12, 2.0, 0.1, 2).unwrap(), Some(0.01), Some(0.001));
        assert!(r.theorem2());
        let r = regime_check(&GaussianSpec::isotropic(0.12, 2.0, 0.1, 2).unwrap(), Some(0.01), Some(0.006));
        assert!(!r.theorem2());
        assert!(r.toy_window);
    }

    #[test]
    fn toy_init_bound_value() {
        assert_abs_diff_eq!(toy_init_bound(0.3, 2.0, 1.0), 0.043_75, epsilon = 1e-15);
    }

    #[test]
    fn adam_s_sequence() {
        assert_eq!(adam_s_coefficient(2.0, 1), 1.0);
        for tau in 2..1000 {
            let f = adam_s_coefficient(2.0, tau);
            assert!(f <= 1.0 && f > 0.0);
        }
        let s = adam_s_horizon(2.0, 15_000);
        assert!(s > S_INTERVAL.0 && s <= S_INTERVAL.1);
        assert!(adam_s_horizon(2.0, 100_000) > s);
    }

    #[test]
    fn linear_error_example() {
        // κ = 1, ω = 2, μ/σy = 1.6 → 0.5Φ(−1.2) + 0.5Φ(−2)
        let spec = GaussianSpec::with_kappa(1.6, 2.0, 1.0, 1.0, 0.0, 2).unwrap();
        let want = 0.5 * 0.115_069_670_221_708_1 + 0.5 * 0.022_750_131_948_179_2;
        assert_abs_diff_eq!(linear_error(&spec, 1.0, 0.0).unwrap(), want, epsilon = 1e-14);
        assert_abs_diff_eq!(want, 0.068_909_9, epsilon = 1e-7);
        assert_abs_diff_eq!(sign_x1_error(&spec), want, epsilon = 1e-14);
    }

    #[test]
    fn linear_error_limits() {
        let far = GaussianSpec::with_kappa(1e3, 2.0, 1.0, 1.0, 0.0, 2).unwrap();
        assert!(linear_error(&far, 1.0, 0.0).unwrap() < 1e-300);
        let near = GaussianSpec::with_kappa(1e-12, 2.0, 1.0, 1.0, 0.0, 2).unwrap();
        assert_abs_diff_eq!(linear_error(&near, 1.0, 0.3).unwrap(), 0.5, epsilon = 1e-11);
        assert!(linear_error(&near, 0.0, 0.0).is_err());
    }

    #[test]
    fn linear_error_monotone_in_separation() {
        for &omega in &[2.0, 5.0, 12.0] {
            for &kappa in &[1.0 / (omega * omega), 0.5, 1.0] {
                let mut prev = 1.0;
                for i in 1..200 {
                    let spec = GaussianSpec::with_kappa(0.05 * i as f64, omega, kappa, 1.0, 0.0, 2).unwrap();
                    let e = linear_error(&spec, 1.0, 0.0).unwrap();
                    assert!(e <= prev);
                    prev = e;
                }
            }
        }
    }

    #[test]
    fn piecewise_collapses_to_linear() {
        for &(mu, omega, kappa) in &[(1.6, 2.0, 1.0), (0.5, 3.0, 0.3), (4.0, 7.0, 0.05)] {
            let spec = GaussianSpec::with_kappa(mu, omega, kappa, 1.0, 0.0, 2).unwrap();
            for a in [1.0, 2.5, -1.0] {
                let pw = piecewise_error(&spec, a, 0.0).unwrap();
                let lin = linear_error(&spec, a, 0.0).unwrap();
                assert_abs_diff_eq!(pw.value, lin, epsilon = 1e-12);
                assert!(pw.abs_error < 1e-8);
            }
        }
    }

    #[test]
    fn piecewise_beats_linear_in_regime_example() {
        let spec = GaussianSpec::with_kappa(1.6, 2.0, 1.0, 1.0, 0.0, 2).unwrap();
        let g = theorem3_gap(&spec).unwrap();
        assert!(g.regime_ok);
        assert!(g.gap < 0.0 && g.ln_ratio < 0.0);
    }

    #[test]
    fn gap_vanishes_with_separation() {
        let g = theorem3_gap(&GaussianSpec::with_kappa(60.0, 2.0, 1.0, 1.0, 0.0, 2).unwrap()).unwrap();
        assert!(g.gap.abs() < 1e-100);
        assert!(g.ln_ratio < 0.0);
    }

    #[test]
    fn piecewise_handles_negative_leading_coefficient() {
        // sign(−x1 + b|x2|) is the mirror of a poor rule: error above ½
        let spec = GaussianSpec::with_kappa(1.6, 2.0, 1.0, 1.0, 0.0, 2).unwrap();
        let e = piecewise_error(&spec, -3.0, 1.0).unwrap();
        assert!(e.value > 0.5);
    }

    #[test]
    fn grid_shape() {
        let g = theorem3_grid(10, 0.5, 3.0).unwrap();
        assert_eq!(g.len(), 1000);
        let inside = g.iter().filter(|p| theorem3_regime(&p.spec)).count();
        // c ∈ {0.5, 0.78} fall outside, the rest inside
        assert_eq!(inside, 800);
    }

    proptest! {
        #[test]
        fn errors_are_probabilities(mu in 0.01f64..20.0, omega in 1.0f64..12.0, kappa in 0.01f64..1.0, a in -4.0f64..4.0, b in 0.0f64..4.0) {
            prop_assume!(a.abs() > 1e-3);
            let spec = GaussianSpec::with_kappa(mu, omega, kappa, 1.0, 0.0, 2).unwrap();
            let l = linear_error(&spec, a, b).unwrap();
            let p = piecewise_error(&spec, a, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&l));
            prop_assert!((0.0..=1.0).contains(&p.value));
        }
    }
}
