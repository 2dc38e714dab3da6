//! Population gradients: the closed form for isotropic Gaussian clusters, a
//! plain Monte Carlo estimator, and exact sums for the three-point toy data.
//!
//! All gradients here are of the correlation loss, `−a·E[𝟙[wᵀx ≥ 0] y x]`,
//! except where a [`LossKind`] is taken explicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{for_each_gaussian, GaussianSpec, ToySpec};
use crate::matrix::{dot, norm, Matrix};
use crate::network::{gate, relu, LossKind, TwoLayerNet};
use crate::normal::{cdf, pdf};
use crate::rng::{self, Rng};
use crate::{Error, Result};

fn require_isotropic(spec: &GaussianSpec) -> Result<f64> {
    if !spec.is_isotropic() {
        return Err(Error::invalid("spec", "closed-form population gradient needs sigma_x = sigma_y = sigma_z"));
    }
    if !(spec.sigma_x > 0.0) {
        return Err(Error::invalid("sigma", "closed-form population gradient needs sigma > 0"));
    }
    Ok(spec.sigma_x)
}

/// Closed-form `−a·E[𝟙[wᵀx ≥ 0] y x]` for isotropic noise.
pub fn population_grad(spec: &GaussianSpec, w: &[f64], a: f64) -> Result<Vec<f64>> {
    let sigma = require_isotropic(spec)?;
    if w.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: w.len() });
    }
    let nw = norm(w);
    if !(nw > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let lambda = spec.lambda().expect("isotropic");
    let wb: Vec<f64> = w.iter().map(|v| v / nw).collect();
    let [up, um, u0] = spec.unit_means();
    let (tp, tm, t0) = (lambda * dot(&up, &wb), lambda * dot(&um, &wb), lambda * dot(&u0, &wb));
    let (cp, cm, c0) = (cdf(tp) * lambda, cdf(tm) * lambda, -2.0 * cdf(t0) * lambda);
    let dens = pdf(tp) + pdf(tm) - 2.0 * pdf(t0);
    let scale = -a * sigma / 4.0;
    Ok((0..spec.dim)
        .map(|j| scale * (cp * up[j] + cm * um[j] + c0 * u0[j] + dens * wb[j]))
        .collect())
}

/// Exact `E[y·relu(wᵀx)]` for isotropic noise (negated, this is the
/// correlation loss contributed by one unit-head neuron).
pub fn population_correlation(spec: &GaussianSpec, w: &[f64]) -> Result<f64> {
    let sigma = require_isotropic(spec)?;
    let s = sigma * norm(w);
    let [mp, mm, m0] = spec.cluster_means();
    let e_relu = |mean: [f64; 2]| {
        let m = w[0] * mean[0] + w[1] * mean[1];
        if s > 0.0 {
            m * cdf(m / s) + s * pdf(m / s)
        } else {
            relu(m)
        }
    };
    Ok(0.25 * e_relu(mp) + 0.25 * e_relu(mm) - 0.5 * e_relu(m0))
}

/// Monte Carlo mean with per-coordinate standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub samples: usize,
}

/// Samples per independent stream; fixed so results do not depend on the
/// thread count.
pub const MC_CHUNK: usize = 1 << 16;

/// Plain Monte Carlo estimate of `−a·E[𝟙[wᵀx ≥ 0] y x]`.
pub fn mc_grad(spec: &GaussianSpec, w: &[f64], a: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    spec.validate()?;
    if w.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: w.len() });
    }
    if n_samples < 1000 {
        return Err(Error::invalid("n_samples", format!("need at least 1000, got {n_samples}")));
    }
    let d = spec.dim;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut rng = rng::substream(seed, c as u64);
            let mut s1 = vec![0.0; d];
            let mut s2 = vec![0.0; d];
            for_each_gaussian(spec, len, &mut rng, |x, y| {
                if gate(dot(w, x)) {
                    for j in 0..d {
                        let v = -a * y * x[j];
                        s1[j] += v;
                        s2[j] += v * v;
                    }
                }
            });
            (s1, s2)
        })
        .collect();
    let mut s1 = vec![0.0; d];
    let mut s2 = vec![0.0; d];
    for (p1, p2) in &partial {
        for j in 0..d {
            s1[j] += p1[j];
            s2[j] += p2[j];
        }
    }
    let n = n_samples as f64;
    let mean: Vec<f64> = s1.iter().map(|s| s / n).collect();
    let se = s2
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(McEstimate { mean, se, samples: n_samples })
}

/// Exact `−a·Σ_p prob_p 𝟙[wᵀz_p ≥ 0] y_p z_p` over the three point masses.
pub fn toy_exact_grad(spec: &ToySpec, w: &[f64], a: f64) -> Result<[f64; 2]> {
    if w.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: w.len() });
    }
    if !(norm(w) > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(toy_sum(spec, w, a))
}

fn toy_sum(spec: &ToySpec, w: &[f64], a: f64) -> [f64; 2] {
    let mut g = [0.0; 2];
    for p in spec.points() {
        if gate(w[0] * p.x[0] + w[1] * p.x[1]) {
            g[0] -= a * p.prob * p.y * p.x[0];
            g[1] -= a * p.prob * p.y * p.x[1];
        }
    }
    g
}

/// Which of the toy points `z1` (S1), `z2` (S2), `z3` (S3) a neuron fires on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyRegion {
    S1,
    S2,
    S3,
    S2S3,
    S1S2,
    S3S1,
}

impl ToyRegion {
    pub const ALL: [ToyRegion; 6] = [
        ToyRegion::S2S3,
        ToyRegion::S2,
        ToyRegion::S1S2,
        ToyRegion::S1,
        ToyRegion::S3S1,
        ToyRegion::S3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToyRegion::S1 => "S1",
            ToyRegion::S2 => "S2",
            ToyRegion::S3 => "S3",
            ToyRegion::S2S3 => "S2+S3",
            ToyRegion::S1S2 => "S1+S2",
            ToyRegion::S3S1 => "S3+S1",
        }
    }
}

/// Activation region of `w` (boundary-inclusive gate).
pub fn toy_region(spec: &ToySpec, w: &[f64]) -> Result<ToyRegion> {
    if !(norm(w) > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let [z1, z2, z3] = spec.points();
    let on = |p: [f64; 2]| gate(w[0] * p[0] + w[1] * p[1]);
    match (on(z1.x), on(z2.x), on(z3.x)) {
        (true, false, false) => Ok(ToyRegion::S1),
        (false, true, false) => Ok(ToyRegion::S2),
        (false, false, true) => Ok(ToyRegion::S3),
        (false, true, true) => Ok(ToyRegion::S2S3),
        (true, true, false) => Ok(ToyRegion::S1S2),
        (true, false, true) => Ok(ToyRegion::S3S1),
        _ => Err(Error::invalid("w", "no proper activation region (ω = 1?)")),
    }
}

/// Probability that an isotropic random neuron lands in `region`.
pub fn toy_region_probability(region: ToyRegion, omega: f64) -> f64 {
    let p = crate::theory::p_of_omega(omega);
    match region {
        ToyRegion::S2S3 | ToyRegion::S1 => p,
        _ => 0.25 - p / 2.0,
    }
}

/// Tabulated `E[𝟙[x ∈ S] y x]` per activation region.
pub fn toy_region_expectation(spec: &ToySpec, region: ToyRegion) -> [f64; 2] {
    let (m1, m2, m3) = (spec.mu1(), spec.mu, spec.mu3());
    match region {
        ToyRegion::S2S3 => [0.5 * m1, 0.0],
        ToyRegion::S2 => [0.25 * m1, 0.25 * m2],
        ToyRegion::S1S2 => [0.25 * (m1 + 2.0 * m3), 0.25 * m2],
        ToyRegion::S1 => [0.5 * m3, 0.0],
        ToyRegion::S3S1 => [0.25 * (m1 + 2.0 * m3), -0.25 * m2],
        ToyRegion::S3 => [0.25 * m1, -0.25 * m2],
    }
}

/// Gradient oracle for whole networks under the data distribution.
pub enum PopulationOracle {
    /// Closed form; correlation loss, isotropic noise only.
    Gaussian(GaussianSpec),
    /// Fresh Monte Carlo draws every step (any noise, any loss).
    GaussianMc { spec: GaussianSpec, samples: usize, rng: Rng },
    /// Exact finite sum over the three point masses (any loss).
    Toy(ToySpec),
}

impl PopulationOracle {
    pub fn gaussian(spec: GaussianSpec) -> Result<Self> {
        require_isotropic(&spec)?;
        Ok(PopulationOracle::Gaussian(spec))
    }

    pub fn gaussian_mc(spec: GaussianSpec, samples: usize, seed: u64) -> Self {
        PopulationOracle::GaussianMc {
            spec,
            samples,
            rng: rng::stream(seed),
        }
    }

    /// Gradient of the population loss into `out`; returns the loss (NaN if
    /// not available in closed form).
    pub fn net_grad(&mut self, net: &TwoLayerNet, loss: LossKind, out: &mut Matrix) -> Result<f64> {
        match self {
            PopulationOracle::Gaussian(spec) => {
                if loss != LossKind::Correlation {
                    return Err(Error::invalid("loss", "closed-form population gradient is for the correlation loss"));
                }
                if net.dim() != spec.dim {
                    return Err(Error::DimensionMismatch { expected: spec.dim, got: net.dim() });
                }
                let mut total = 0.0;
                for k in 0..net.width() {
                    let w = net.neuron(k);
                    let a = net.head()[k];
                    let row = out.row_mut(k);
                    if norm(w) > 0.0 {
                        row.copy_from_slice(&population_grad(spec, w, a)?);
                    } else {
                        // every sample is gated on: −a·E[y x]
                        row.fill(0.0);
                        row[0] = -a * 0.5 * (spec.mu1() + spec.mu3());
                    }
                    total -= a * population_correlation(spec, w)?;
                }
                Ok(total)
            }
            PopulationOracle::GaussianMc { spec, samples, rng } => {
                let data = crate::datasets::sample_gaussian_with(spec, *samples, rng)?;
                net.grad_into(&data, None, loss, out)
            }
            PopulationOracle::Toy(spec) => {
                if net.dim() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: net.dim() });
                }
                out.fill(0.0);
                let pts = spec.points();
                let mut total = 0.0;
                for p in &pts {
                    let f = net.forward(&p.x);
                    let z = -p.y * f;
                    total += p.prob * loss.value(z);
                    let c = p.prob * loss.derivative(z) * p.y;
                    for k in 0..net.width() {
                        if gate(dot(net.neuron(k), &p.x)) {
                            let coef = -c * net.head()[k];
                            let row = out.row_mut(k);
                            row[0] += coef * p.x[0];
                            row[1] += coef * p.x[1];
                        }
                    }
                }
                Ok(total)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Dataset;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig2_spec() -> GaussianSpec {
        GaussianSpec::isotropic(0.3, 2.0, 0.1, 2).unwrap()
    }

    #[test]
    fn hand_value_along_x1() {
        // λ = 3.75; Φ(2.25), φ(2.25), Φ(−3.75), φ(−3.75) evaluated separately
        let (big_phi_p, phi_p) = (0.987_775_527_344_955_3, 0.031_739_651_835_667_42);
        let (big_phi_0, phi_0) = (8.841_728_520_080_377e-5, 3.525_956_823_674_454_6e-4);
        let want = -(0.1 / 4.0) * (2.0 * big_phi_p * 3.75 * 0.6 + 2.0 * big_phi_0 * 3.75 + 2.0 * phi_p - 2.0 * phi_0);
        let g = population_grad(&fig2_spec(), &[1.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(g[0], want, epsilon = 1e-14);
        assert_abs_diff_eq!(g[0], -0.11271, epsilon = 1e-5);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn zero_norm_is_rejected() {
        assert!(matches!(population_grad(&fig2_spec(), &[0.0, 0.0], 1.0), Err(Error::ZeroNorm)));
        assert!(population_grad(&GaussianSpec::new(0.3, 2.0, 0.2, 0.1, 0.1, 2).unwrap(), &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn closed_form_matches_mc_in_five_dims() {
        let spec = GaussianSpec::isotropic(0.3, 2.0, 0.15, 5).unwrap();
        let w = [0.3, -0.7, 0.2, 0.5, -0.1];
        let cf = population_grad(&spec, &w, 1.0).unwrap();
        let mc = mc_grad(&spec, &w, 1.0, 1_000_000, 4).unwrap();
        for j in 0..5 {
            let z = (mc.mean[j] - cf[j]) / mc.se[j];
            assert!(z.abs() < 4.0, "coord {j}: z = {z}");
        }
    }

    #[test]
    fn noise_coordinates_vanish_for_axis_neuron() {
        let spec = GaussianSpec::isotropic(0.3, 2.0, 0.1, 5).unwrap();
        let w = [1.0, 0.4, 0.0, 0.0, 0.0];
        let cf = population_grad(&spec, &w, 1.0).unwrap();
        assert_eq!(&cf[2..], &[0.0, 0.0, 0.0]);
        let mc = mc_grad(&spec, &w, 1.0, 200_000, 9).unwrap();
        for j in 2..5 {
            assert!(mc.mean[j].abs() < 4.0 * mc.se[j]);
        }
    }

    #[test]
    fn mc_head_sign_flips_exactly() {
        let spec = fig2_spec();
        let a = mc_grad(&spec, &[0.2, 1.0], 0.5, 5000, 1).unwrap();
        let b = mc_grad(&spec, &[0.2, 1.0], -0.5, 5000, 1).unwrap();
        for j in 0..2 {
            assert_eq!(a.mean[j], -b.mean[j]);
            assert_eq!(a.se[j], b.se[j]);
        }
    }

    #[test]
    fn population_correlation_matches_mc() {
        let spec = fig2_spec();
        let w = [0.4, 0.9];
        let exact = population_correlation(&spec, &w).unwrap();
        let mut rng = rng::stream(5);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for_each_gaussian(&spec, n, &mut rng, |x, y| {
            let v = y * relu(dot(&w, x));
            s += v;
            s2 += v * v;
        });
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * se);
    }

    #[test]
    fn toy_table_rows() {
        let spec = ToySpec::new(0.3, 2.0).unwrap();
        let g = toy_exact_grad(&spec, &[1.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(g[0], -0.1125, epsilon = 1e-15);
        assert_eq!(g[1], 0.0);
        assert_eq!(toy_region(&spec, &[1.0, 0.0]).unwrap(), ToyRegion::S2S3);

        let g = toy_exact_grad(&spec, &[-1.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(g[0], -0.5 * spec.mu3(), epsilon = 1e-15);
        assert_eq!(toy_region(&spec, &[-1.0, 0.0]).unwrap(), ToyRegion::S1);

        // (0, 1) sits on z1's boundary and the inclusive gate adds it;
        // a slight tilt toward +x1 gives the pure S2 row.
        assert_eq!(toy_region(&spec, &[0.0, 1.0]).unwrap(), ToyRegion::S1S2);
        let g = toy_exact_grad(&spec, &[0.01, 1.0], 1.0).unwrap();
        assert_abs_diff_eq!(g[0], -0.25 * spec.mu1(), epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], -0.25 * spec.mu, epsilon = 1e-15);
    }

    #[test]
    fn region_probabilities_sum_to_one_and_match_angles() {
        for &omega in &[1.5, 2.0, 2.3] {
            let total: f64 = ToyRegion::ALL.iter().map(|&r| toy_region_probability(r, omega)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            // uniform angle sweep as an independent count
            let spec = ToySpec::new(0.3, omega).unwrap();
            let n = 720_000;
            let mut counts = std::collections::HashMap::new();
            for i in 0..n {
                let th = (i as f64 + 0.5) / n as f64 * std::f64::consts::TAU;
                *counts.entry(toy_region(&spec, &[th.cos(), th.sin()]).unwrap()).or_insert(0usize) += 1;
            }
            for r in ToyRegion::ALL {
                let frac = counts[&r] as f64 / n as f64;
                assert!((frac - toy_region_probability(r, omega)).abs() < 2e-6, "{r:?}");
            }
        }
    }

    #[test]
    fn toy_grad_matches_region_table_and_empirical_sum() {
        let spec = ToySpec::new(0.3, 2.0).unwrap();
        let [z1, z2, z3] = spec.points();
        // z1 twice gives exact masses ½, ¼, ¼
        let data = Dataset::new(
            2,
            [z1.x, z1.x, z2.x, z3.x].concat(),
            vec![z1.y, z1.y, z2.y, z3.y],
            None,
        )
        .unwrap();
        for i in 0..360 {
            let th = (i as f64 + 0.25).to_radians();
            let w = [th.cos(), th.sin()];
            let g = toy_exact_grad(&spec, &w, 1.0).unwrap();
            let region = toy_region(&spec, &w).unwrap();
            let e = toy_region_expectation(&spec, region);
            assert!((g[0] + e[0]).abs() < 1e-14 && (g[1] + e[1]).abs() < 1e-14);
            let net = TwoLayerNet::from_rows(&[w.to_vec()], &[1.0]).unwrap();
            let emp = net.grad(&data, LossKind::Correlation).unwrap();
            assert!((emp.get(0, 0) - g[0]).abs() < 1e-14 && (emp.get(0, 1) - g[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn toy_oracle_handles_logistic_loss() {
        let spec = ToySpec::new(0.3, 2.0).unwrap();
        let [z1, z2, z3] = spec.points();
        let data = Dataset::new(2, [z1.x, z1.x, z2.x, z3.x].concat(), vec![-1.0, -1.0, 1.0, 1.0], None).unwrap();
        let net = crate::network::init_net(8, 2, 1.0, crate::network::HeadMode::Balanced, 2).unwrap();
        let mut out = Matrix::zeros(8, 2);
        let loss = PopulationOracle::Toy(spec).net_grad(&net, LossKind::Logistic, &mut out).unwrap();
        let emp = net.grad(&data, LossKind::Logistic).unwrap();
        assert_abs_diff_eq!(loss, net.loss(&data, LossKind::Logistic), epsilon = 1e-14);
        for (a, b) in out.as_slice().iter().zip(emp.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn scale_invariance(th in 0.0f64..std::f64::consts::TAU, c in 0.01f64..100.0) {
            let spec = fig2_spec();
            let w = [th.cos(), th.sin()];
            let g1 = population_grad(&spec, &w, 1.0).unwrap();
            let g2 = population_grad(&spec, &[7.3 * w[0] * c, 7.3 * w[1] * c], 1.0).unwrap();
            for j in 0..2 {
                prop_assert!((g1[j] - g2[j]).abs() < 1e-14);
            }
        }

        #[test]
        fn reflection_equivariance(th in 0.0f64..std::f64::consts::TAU, omega in 1.0f64..5.0, lam in 0.3f64..5.0) {
            let spec = GaussianSpec::isotropic(lam * 0.1, omega, 0.1, 2).unwrap();
            let g = population_grad(&spec, &[th.cos(), th.sin()], 1.0).unwrap();
            let r = population_grad(&spec, &[th.cos(), -th.sin()], 1.0).unwrap();
            prop_assert!((g[0] - r[0]).abs() < 1e-15);
            prop_assert!((g[1] + r[1]).abs() < 1e-15);
        }
    }
}
