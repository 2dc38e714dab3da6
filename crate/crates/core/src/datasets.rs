//! Synthetic data families and their Bayes-optimal rules.
//!
//! Three generators live here:
//!
//! * the Gaussian-cluster distribution: one negative cluster at `[-μ3, 0]`
//!   and two positive clusters at `[μ1, ±μ]`, with per-axis noise;
//! * its zero-variance limit, three point masses ([`ToySpec`]);
//! * the Boolean staircase task with a core and a spurious feature block.

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Rng};
use crate::{label_sign, Error, Result};

/// Means placing the Bayes boundary through the origin: returns `(μ1, μ3)`.
pub fn realizable_means(mu: f64, omega: f64, kappa: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
    }
    if !(omega >= 1.0) {
        return Err(Error::invalid("omega", format!("must be >= 1, got {omega}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
    }
    let mu1 = 0.5 * mu * (kappa * omega - 1.0 / omega);
    let mu3 = 0.5 * mu * (kappa * omega + 1.0 / omega);
    Ok((mu1, mu3))
}

/// Parameters of the Gaussian-cluster distribution under realizability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mu: f64,
    pub omega: f64,
    /// σx² / σy²; 1 when both are zero.
    pub kappa: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_z: f64,
    pub dim: usize,
}

impl GaussianSpec {
    pub fn new(mu: f64, omega: f64, sigma_x: f64, sigma_y: f64, sigma_z: f64, dim: usize) -> Result<Self> {
        let kappa = if sigma_y > 0.0 {
            sigma_x * sigma_x / (sigma_y * sigma_y)
        } else if sigma_x == 0.0 {
            1.0
        } else {
            return Err(Error::invalid("sigma_y", "zero sigma_y needs zero sigma_x"));
        };
        let spec = GaussianSpec {
            mu,
            omega,
            kappa,
            sigma_x,
            sigma_y,
            sigma_z,
            dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// σx = σy = σz = σ.
    pub fn isotropic(mu: f64, omega: f64, sigma: f64, dim: usize) -> Result<Self> {
        Self::new(mu, omega, sigma, sigma, sigma, dim)
    }

    /// Parameterized by anisotropy: σx = √κ·σy.
    pub fn with_kappa(mu: f64, omega: f64, kappa: f64, sigma_y: f64, sigma_z: f64, dim: usize) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
        }
        let spec = GaussianSpec {
            mu,
            omega,
            kappa,
            sigma_x: kappa.sqrt() * sigma_y,
            sigma_y,
            sigma_z,
            dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        realizable_means(self.mu, self.omega, self.kappa)?;
        for (name, s) in [("sigma_x", self.sigma_x), ("sigma_y", self.sigma_y), ("sigma_z", self.sigma_z)] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::invalid(name, format!("must be a finite nonnegative real, got {s}")));
            }
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim", format!("must be >= 2, got {}", self.dim)));
        }
        if self.sigma_y > 0.0 {
            let k = self.sigma_x * self.sigma_x / (self.sigma_y * self.sigma_y);
            if (k - self.kappa).abs() > 1e-9 * k.max(1.0) {
                return Err(Error::invalid("kappa", format!("{} disagrees with sigma_x²/sigma_y² = {k}", self.kappa)));
            }
        }
        Ok(())
    }

    pub fn mu1(&self) -> f64 {
        0.5 * self.mu * (self.kappa * self.omega - 1.0 / self.omega)
    }

    pub fn mu3(&self) -> f64 {
        0.5 * self.mu * (self.kappa * self.omega + 1.0 / self.omega)
    }

    pub fn is_isotropic(&self) -> bool {
        self.sigma_x == self.sigma_y && (self.dim == 2 || self.sigma_z == self.sigma_x)
    }

    /// λ = (μ/σ)(ω²+1)/(2ω); only defined for isotropic noise.
    pub fn lambda(&self) -> Option<f64> {
        if !self.is_isotropic() || self.sigma_x == 0.0 {
            return None;
        }
        let w = self.omega;
        Some(self.mu / self.sigma_x * (w * w + 1.0) / (2.0 * w))
    }

    /// Cluster means `(μ₊, μ₋, μ₀)` in the first two coordinates.
    pub fn cluster_means(&self) -> [[f64; 2]; 3] {
        [[self.mu1(), self.mu], [self.mu1(), -self.mu], [-self.mu3(), 0.0]]
    }

    /// Unit vectors `(μ̄₊, μ̄₋, μ̄₀)` padded to `dim`.
    pub fn unit_means(&self) -> [Vec<f64>; 3] {
        let w = self.omega;
        let den = w * w + 1.0;
        let mut plus = vec![0.0; self.dim];
        let mut minus = vec![0.0; self.dim];
        let mut zero = vec![0.0; self.dim];
        plus[0] = (w * w - 1.0) / den;
        plus[1] = 2.0 * w / den;
        minus[0] = plus[0];
        minus[1] = -plus[1];
        zero[0] = -1.0;
        [plus, minus, zero]
    }

    #[inline]
    fn draw_into(&self, rng: &mut Rng, x: &mut [f64]) -> (f64, f64) {
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let eps = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let n0: f64 = rng.sample(StandardNormal);
        let n1: f64 = rng.sample(StandardNormal);
        let (m1, m2) = if y > 0.0 { (self.mu1(), eps * self.mu) } else { (-self.mu3(), 0.0) };
        x[0] = m1 + self.sigma_x * n0;
        x[1] = m2 + self.sigma_y * n1;
        for xj in x.iter_mut().skip(2) {
            let n: f64 = rng.sample(StandardNormal);
            *xj = self.sigma_z * n;
        }
        (y, eps)
    }
}

/// One labelled draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
    pub eps: f64,
}

/// Column-major-free storage of `n` samples: `x` is `n × dim` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    eps: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<f64>, eps: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || x.len() != y.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: y.len() * dim,
                got: x.len(),
            });
        }
        if let Some(e) = &eps {
            if e.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: y.len(),
                    got: e.len(),
                });
            }
        }
        Ok(Dataset { dim, x, y, eps })
    }

    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        let dim = samples.first().ok_or(Error::Empty("samples"))?.x.len();
        let mut x = Vec::with_capacity(samples.len() * dim);
        for s in samples {
            if s.x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.x.len() });
            }
            x.extend_from_slice(&s.x);
        }
        let y = samples.iter().map(|s| s.y).collect();
        let eps = Some(samples.iter().map(|s| s.eps).collect());
        Dataset::new(dim, x, y, eps)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn eps(&self, i: usize) -> Option<f64> {
        self.eps.as_ref().map(|e| e[i])
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn inputs(&self) -> &[f64] {
        &self.x
    }

    pub fn samples(&self) -> Vec<Sample> {
        (0..self.len())
            .map(|i| Sample {
                x: self.x(i).to_vec(),
                y: self.y[i],
                eps: self.eps(i).unwrap_or(0.0),
            })
            .collect()
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(idx.len() * self.dim);
        let mut y = Vec::with_capacity(idx.len());
        let mut eps = self.eps.as_ref().map(|_| Vec::with_capacity(idx.len()));
        for &i in idx {
            x.extend_from_slice(self.x(i));
            y.push(self.y[i]);
            if let (Some(out), Some(src)) = (eps.as_mut(), self.eps.as_ref()) {
                out.push(src[i]);
            }
        }
        Dataset { dim: self.dim, x, y, eps }
    }

    /// CSV with header `x1,...,xd,y,eps`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for j in 1..=self.dim {
            out.push_str(&format!("x{j},"));
        }
        out.push_str("y,eps\n");
        for i in 0..self.len() {
            for v in self.x(i) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},{}\n", self.y[i], self.eps(i).unwrap_or(0.0)));
        }
        write_file(path, out.as_bytes())
    }

    /// CSV with header `b1,...,bd,y` and ±1 entries.
    pub fn write_boolean_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for j in 1..=self.dim {
            out.push_str(&format!("b{j},"));
        }
        out.push_str("y\n");
        for i in 0..self.len() {
            for v in self.x(i) {
                out.push_str(if *v > 0.0 { "1," } else { "-1," });
            }
            out.push_str(if self.y[i] > 0.0 { "1\n" } else { "-1\n" });
        }
        write_file(path, out.as_bytes())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn sample_gaussian(spec: &GaussianSpec, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng::stream(seed);
    sample_gaussian_with(spec, n, &mut rng)
}

pub fn sample_gaussian_with(spec: &GaussianSpec, n: usize, rng: &mut Rng) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Empty("sample count"));
    }
    spec.validate()?;
    let d = spec.dim;
    let mut x = vec![0.0; n * d];
    let mut y = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    for row in x.chunks_exact_mut(d) {
        let (yi, ei) = spec.draw_into(rng, row);
        y.push(yi);
        eps.push(ei);
    }
    Dataset::new(d, x, y, Some(eps))
}

/// Streams `n` draws through `visit(x, y)` without allocating per sample.
pub fn for_each_gaussian<F: FnMut(&[f64], f64)>(spec: &GaussianSpec, n: usize, rng: &mut Rng, mut visit: F) {
    let mut x = vec![0.0; spec.dim];
    for _ in 0..n {
        let (y, _) = spec.draw_into(rng, &mut x);
        visit(&x, y);
    }
}

/// Decision value of the Bayes rule; the predicted label is `sign(value)`
/// with ties going to +1. Only the first two coordinates are read.
///
/// Requires σx, σy > 0. The `|x2|` form makes the value exactly even in x2.
pub fn bayes_decision(spec: &GaussianSpec, x: &[f64]) -> f64 {
    let (mu1, mu3, mu2) = (spec.mu1(), spec.mu3(), spec.mu);
    let sx2 = spec.sigma_x * spec.sigma_x;
    let sy2 = spec.sigma_y * spec.sigma_y;
    let k = sx2 / sy2;
    let a2 = x[1].abs();
    // ln(0.5(1 + e^{-t})) with t = 2μ|x2|/σy² ≥ 0
    let t = 2.0 * mu2 * a2 / sy2;
    let log_term = crate::normal::softplus(-t) - std::f64::consts::LN_2;
    let lhs = (mu1 + mu3) * x[0] + k * mu2 * a2;
    let rhs = 0.5 * (mu1 * mu1 - mu3 * mu3) + 0.5 * mu2 * mu2 * k - sx2 * log_term;
    lhs - rhs
}

pub fn bayes_label(spec: &GaussianSpec, x: &[f64]) -> f64 {
    label_sign(bayes_decision(spec, x))
}

/// Zero-variance limit: three point masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySpec {
    pub mu: f64,
    pub omega: f64,
}

/// A point mass of the toy distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub x: [f64; 2],
    pub y: f64,
    pub prob: f64,
}

impl ToySpec {
    pub fn new(mu: f64, omega: f64) -> Result<Self> {
        realizable_means(mu, omega, 1.0)?;
        Ok(ToySpec { mu, omega })
    }

    pub fn validate(&self) -> Result<()> {
        realizable_means(self.mu, self.omega, 1.0).map(|_| ())
    }

    pub fn mu1(&self) -> f64 {
        0.5 * self.mu * (self.omega - 1.0 / self.omega)
    }

    pub fn mu3(&self) -> f64 {
        0.5 * self.mu * (self.omega + 1.0 / self.omega)
    }

    /// `[z1, z2, z3]` with labels −1, +1, +1 and masses ½, ¼, ¼.
    pub fn points(&self) -> [PointMass; 3] {
        let h = 0.5 * self.mu;
        let w = self.omega;
        [
            PointMass { x: [-h * (w + 1.0 / w), 0.0], y: -1.0, prob: 0.5 },
            PointMass { x: [h * (w - 1.0 / w), self.mu], y: 1.0, prob: 0.25 },
            PointMass { x: [h * (w - 1.0 / w), -self.mu], y: 1.0, prob: 0.25 },
        ]
    }

    /// Window `1 + 2/√3 < ω² < 3 + 2√2` required by the toy limit tables.
    pub fn in_theorem_window(&self) -> bool {
        let w2 = self.omega * self.omega;
        1.0 + 2.0 / 3f64.sqrt() < w2 && w2 < 3.0 + 2.0 * 2f64.sqrt()
    }
}

pub fn sample_toy(spec: &ToySpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Empty("sample count"));
    }
    spec.validate()?;
    let pts = spec.points();
    let mut rng = rng::stream(seed);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    for _ in 0..n {
        let yi = rng.random::<bool>();
        let ei = rng.random::<bool>();
        let p = match (yi, ei) {
            (false, _) => &pts[0],
            (true, true) => &pts[1],
            (true, false) => &pts[2],
        };
        x.extend_from_slice(&p.x);
        y.push(p.y);
        eps.push(if ei { 1.0 } else { -1.0 });
    }
    Dataset::new(2, x, y, Some(eps))
}

/// Piecewise-linear Bayes rule of the toy distribution: `sign(ωx1 + |x2|)`.
pub fn toy_bayes_decision(spec: &ToySpec, x: &[f64]) -> f64 {
    spec.omega * x[0] + x[1].abs()
}

pub fn toy_bayes_label(spec: &ToySpec, x: &[f64]) -> f64 {
    label_sign(toy_bayes_decision(spec, x))
}

/// Boolean task: `x ∈ {±1}^d` split into core, spurious and unrelated blocks,
/// in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BooleanTaskSpec {
    pub dim: usize,
    pub d_core: usize,
    pub d_spurious: usize,
    /// Probability of drawing from the agreeing set.
    pub lambda: f64,
}

/// Cap on rejected draws per accepted Boolean sample.
pub const REJECTION_CAP: usize = 1_000_000;

impl BooleanTaskSpec {
    pub fn new(dim: usize, d_core: usize, d_spurious: usize, lambda: f64) -> Result<Self> {
        let spec = BooleanTaskSpec {
            dim,
            d_core,
            d_spurious,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_core == 0 || self.d_spurious == 0 {
            return Err(Error::invalid("d_core/d_spurious", "staircase degrees must be >= 1"));
        }
        if self.d_core + self.d_spurious > self.dim {
            return Err(Error::invalid(
                "dim",
                format!("{} < d_core + d_spurious = {}", self.dim, self.d_core + self.d_spurious),
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid("lambda", format!("must lie in [0,1], got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn d_unrelated(&self) -> usize {
        self.dim - self.d_core - self.d_spurious
    }

    pub fn core(&self, x: &[f64]) -> f64 {
        staircase_unchecked(&x[..self.d_core])
    }

    pub fn spurious(&self, x: &[f64]) -> f64 {
        staircase_unchecked(&x[self.d_core..self.d_core + self.d_spurious])
    }
}

/// Threshold staircase of degree `k` on the first `k` signs of `x`:
/// +1 iff `x1 + x1x2 + … + x1⋯xk ≥ 0`.
pub fn staircase(x: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > x.len() {
        return Err(Error::invalid("k", format!("degree {k} not in 1..={}", x.len())));
    }
    Ok(staircase_unchecked(&x[..k]))
}

fn staircase_unchecked(x: &[f64]) -> f64 {
    let mut prod = 1.0;
    let mut sum = 0.0;
    for v in x {
        prod *= v;
        sum += prod;
    }
    label_sign(sum)
}

fn uniform_signs(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
}

/// Uniform draws from `{±1}^d`, labelled by `label(x)`.
pub fn sample_hypercube<F: Fn(&[f64]) -> f64>(dim: usize, n: usize, seed: u64, label: F) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Empty("sample count"));
    }
    let mut rng = rng::stream(seed);
    let mut x = vec![0.0; n * dim];
    let mut y = Vec::with_capacity(n);
    for row in x.chunks_exact_mut(dim) {
        uniform_signs(&mut rng, row);
        y.push(label(row));
    }
    Dataset::new(dim, x, y, None)
}

/// Mixture of the agreeing set (probability λ) and the disagreeing set, each
/// uniform; labels are the core staircase.
pub fn sample_boolean(spec: &BooleanTaskSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Empty("sample count"));
    }
    spec.validate()?;
    let mut rng = rng::stream(seed);
    let d = spec.dim;
    let mut x = vec![0.0; n * d];
    let mut y = Vec::with_capacity(n);
    let blocks = spec.d_core + spec.d_spurious;
    for row in x.chunks_exact_mut(d) {
        let want_same = rng.random::<f64>() < spec.lambda;
        let mut tries = 0;
        loop {
            uniform_signs(&mut rng, &mut row[..blocks]);
            let same = spec.core(row) == spec.spurious(row);
            if same == want_same {
                break;
            }
            tries += 1;
            if tries >= REJECTION_CAP {
                return Err(Error::RejectionCap(REJECTION_CAP));
            }
        }
        uniform_signs(&mut rng, &mut row[blocks..]);
        y.push(spec.core(row));
    }
    Dataset::new(d, x, y, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn realizable_means_examples() {
        let (m1, m3) = realizable_means(0.3, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(m1, 0.225, epsilon = 1e-15);
        assert_abs_diff_eq!(m3, 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!((m1 + m3) / 0.3, 2.0, epsilon = 1e-14);

        let (m1, m3) = realizable_means(0.7, 1.0, 1.0).unwrap();
        assert_eq!(m1, 0.0);
        assert_abs_diff_eq!(m3, 0.7, epsilon = 1e-15);

        // κω = 1/ω here, so the first mean vanishes
        let (m1, m3) = realizable_means(0.3, 2.0, 0.25).unwrap();
        assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m3, 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!((m1 + m3) / (0.25 * 0.3), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn omega_below_one_is_rejected() {
        assert!(realizable_means(0.3, 0.99, 1.0).is_err());
        assert!(GaussianSpec::isotropic(0.3, 0.5, 0.1, 2).is_err());
    }

    #[test]
    fn unit_means_have_unit_norm() {
        let spec = GaussianSpec::isotropic(0.3, 2.7, 0.1, 5).unwrap();
        let [p, m, z] = spec.unit_means();
        for v in [&p, &m, &z] {
            assert_abs_diff_eq!(crate::matrix::norm(v), 1.0, epsilon = 1e-15);
        }
        assert_eq!(z[0], -1.0);
        // μ̄₊ is the normalized positive cluster mean when κ = 1
        let [cp, _, _] = spec.cluster_means();
        let n = (cp[0] * cp[0] + cp[1] * cp[1]).sqrt();
        assert_abs_diff_eq!(cp[0] / n, p[0], epsilon = 1e-15);
        assert_abs_diff_eq!(cp[1] / n, p[1], epsilon = 1e-15);
        assert_abs_diff_eq!(spec.lambda().unwrap() * 0.1, n, epsilon = 1e-15);
    }

    #[test]
    fn zero_variance_draws_sit_on_the_means() {
        let spec = GaussianSpec::new(0.3, 2.0, 0.0, 0.0, 0.0, 3).unwrap();
        let data = sample_gaussian(&spec, 500, 3).unwrap();
        for i in 0..data.len() {
            if data.y(i) > 0.0 {
                assert_eq!(data.x(i)[0], spec.mu1());
                assert_eq!(data.x(i)[1], data.eps(i).unwrap() * spec.mu);
            } else {
                assert_eq!(data.x(i)[0], -spec.mu3());
                assert_eq!(data.x(i)[1], 0.0);
            }
            assert_eq!(data.x(i)[2], 0.0);
        }
    }

    #[test]
    fn positive_cluster_mean_converges() {
        let spec = GaussianSpec::new(0.3, 2.0, 0.2, 0.15, 0.1, 2).unwrap();
        let n = 1_000_000;
        let data = sample_gaussian(&spec, n, 11).unwrap();
        let (mut sum, mut cnt, mut eps_pos) = (0.0, 0usize, 0usize);
        for i in 0..n {
            if data.y(i) > 0.0 {
                sum += data.x(i)[0];
                cnt += 1;
                if data.eps(i) == Some(1.0) {
                    eps_pos += 1;
                }
            }
        }
        let mean = sum / cnt as f64;
        assert!((mean - spec.mu1()).abs() < 4.0 * 0.2 / (cnt as f64).sqrt());
        assert!((eps_pos as f64 / cnt as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn per_coordinate_moments_within_five_standard_errors() {
        let spec = GaussianSpec::new(0.3, 2.0, 0.2, 0.15, 0.05, 3).unwrap();
        let n = 1_000_000;
        let data = sample_gaussian(&spec, n, 5).unwrap();
        // Conditional on (y, ε) each coordinate is normal with known mean/variance.
        let mut groups = [[0.0f64; 6]; 3]; // [count, Σx0, Σx0², Σx1, Σx1², Σx2]
        for i in 0..n {
            let g = match (data.y(i) > 0.0, data.eps(i) == Some(1.0)) {
                (true, true) => 0,
                (true, false) => 1,
                (false, _) => 2,
            };
            let x = data.x(i);
            let s = &mut groups[g];
            s[0] += 1.0;
            s[1] += x[0];
            s[2] += x[0] * x[0];
            s[3] += x[1];
            s[4] += x[1] * x[1];
            s[5] += x[2];
        }
        let means = spec.cluster_means();
        for (g, s) in groups.iter().enumerate() {
            let c = s[0];
            let m0 = s[1] / c;
            let m1 = s[3] / c;
            let v0 = s[2] / c - m0 * m0;
            let v1 = s[4] / c - m1 * m1;
            assert!((m0 - means[g][0]).abs() < 5.0 * 0.2 / c.sqrt());
            assert!((m1 - means[g][1]).abs() < 5.0 * 0.15 / c.sqrt());
            // var of sample variance ≈ 2σ⁴/n
            assert!((v0 - 0.04).abs() < 5.0 * 0.04 * (2.0 / c).sqrt());
            assert!((v1 - 0.0225).abs() < 5.0 * 0.0225 * (2.0 / c).sqrt());
            assert!((s[5] / c).abs() < 5.0 * 0.05 / c.sqrt());
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = GaussianSpec::isotropic(0.3, 2.0, 0.1, 4).unwrap();
        assert_eq!(sample_gaussian(&spec, 64, 9).unwrap(), sample_gaussian(&spec, 64, 9).unwrap());
        assert_ne!(sample_gaussian(&spec, 64, 9).unwrap(), sample_gaussian(&spec, 64, 10).unwrap());
    }

    #[test]
    fn bayes_origin_and_asymptote() {
        let spec = GaussianSpec::isotropic(0.3, 2.0, 0.1, 2).unwrap();
        assert_abs_diff_eq!(bayes_decision(&spec, &[0.0, 0.0]), 0.0, epsilon = 1e-15);
        assert_eq!(bayes_label(&spec, &[0.0, 0.0]), 1.0);

        // Far along +x2 the boundary is ωx1 + x2 = (σ²/μ) ln 2.
        let x2 = 50.0;
        let x1 = ((0.01 / 0.3) * std::f64::consts::LN_2 - x2) / 2.0;
        // decision value is (μ1+μ3)·(ωx1 + x2 − (σ²/μ)ln2)/ω-scaled; zero at the asymptote
        assert_abs_diff_eq!(bayes_decision(&spec, &[x1, x2]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn realizable_isotropic_form_matches() {
        let spec = GaussianSpec::isotropic(0.25, 3.0, 0.12, 2).unwrap();
        let (mu, s2, w): (f64, f64, f64) = (0.25, 0.0144, 3.0);
        for &(x1, x2) in &[(0.1, 0.2), (-0.3, -0.05), (0.02, -0.4), (-0.01, 0.0)] {
            let reduced = w * x1 + x2 + s2 / mu * (0.5 * (1.0 + (-2.0 * mu * x2 / s2).exp())).ln();
            // full decision = μ·ω·(reduced) up to positive scale (μ1+μ3 = ωμ)
            let full = bayes_decision(&spec, &[x1, x2]);
            assert_abs_diff_eq!(full, mu * reduced, epsilon = 1e-12);
        }
    }

    /// Brute-force oracle: compare the class densities directly.
    fn density_label(spec: &GaussianSpec, x: &[f64]) -> (f64, f64) {
        let g = |m: [f64; 2]| {
            let a = (x[0] - m[0]) / spec.sigma_x;
            let b = (x[1] - m[1]) / spec.sigma_y;
            -0.5 * (a * a + b * b)
        };
        let [p, m, z] = spec.cluster_means();
        let pos = crate::normal::ln_add_exp(g(p), g(m)) - std::f64::consts::LN_2;
        let neg = g(z);
        (label_sign(pos - neg), pos - neg)
    }

    #[test]
    fn bayes_rule_matches_density_comparison_on_grid() {
        for spec in [
            GaussianSpec::new(0.3, 2.0, 0.2, 0.15, 0.0, 2).unwrap(),
            GaussianSpec::isotropic(0.3, 2.0, 0.1, 2).unwrap(),
            GaussianSpec::new(0.5, 3.0, 0.1, 0.3, 0.0, 2).unwrap(),
        ] {
            let r = 3.0 * spec.mu1().max(spec.mu3()).max(spec.mu);
            let mut checked = 0;
            for i in 0..200 {
                for j in 0..200 {
                    let x = [-r + 2.0 * r * i as f64 / 199.0, -r + 2.0 * r * j as f64 / 199.0];
                    let (want, margin) = density_label(&spec, &x);
                    if margin.abs() < 1e-9 {
                        continue;
                    }
                    assert_eq!(bayes_label(&spec, &x), want, "{x:?}");
                    checked += 1;
                }
            }
            assert!(checked > 39_000);
        }
    }

    #[test]
    fn toy_points_and_rule() {
        let spec = ToySpec::new(0.3, 2.0).unwrap();
        let [z1, z2, z3] = spec.points();
        assert_eq!(toy_bayes_label(&spec, &z1.x), -1.0);
        assert_eq!(toy_bayes_label(&spec, &z2.x), 1.0);
        assert_eq!(toy_bayes_label(&spec, &z3.x), 1.0);
        assert_eq!(toy_bayes_decision(&spec, &[0.0, 0.0]), 0.0);
        assert_eq!(z2.x[0], z3.x[0]);
        assert_eq!(z2.x[1], -z3.x[1]);
        assert_abs_diff_eq!(z1.prob + z2.prob + z3.prob, 1.0);
        assert!(spec.in_theorem_window());
        assert!(!ToySpec::new(0.3, 1.2).unwrap().in_theorem_window());
    }

    #[test]
    fn toy_frequencies() {
        let spec = ToySpec::new(0.3, 2.0).unwrap();
        let data = sample_toy(&spec, 100_000, 1).unwrap();
        let pts = spec.points();
        let mut counts = [0usize; 3];
        for i in 0..data.len() {
            let k = pts.iter().position(|p| p.x == [data.x(i)[0], data.x(i)[1]]).unwrap();
            assert_eq!(pts[k].y, data.y(i));
            counts[k] += 1;
        }
        for (c, p) in counts.iter().zip(&pts) {
            assert!((*c as f64 / 1e5 - p.prob).abs() < 0.01);
        }
    }

    #[test]
    fn staircase_examples() {
        for k in 1..=6 {
            assert_eq!(staircase(&[1.0; 6], k).unwrap(), 1.0);
        }
        assert_eq!(staircase(&[-1.0, 1.0, 1.0], 3).unwrap(), -1.0);
        assert_eq!(staircase(&[1.0, -1.0, 1.0], 3).unwrap(), -1.0);
        assert!(staircase(&[1.0, 1.0], 3).is_err());
        assert!(staircase(&[1.0, 1.0], 0).is_err());
    }

    #[test]
    fn boolean_agreement_rates() {
        let spec = BooleanTaskSpec::new(50, 8, 1, 1.0).unwrap();
        let data = sample_boolean(&spec, 2000, 4).unwrap();
        for i in 0..data.len() {
            assert_eq!(spec.core(data.x(i)), spec.spurious(data.x(i)));
            assert_eq!(data.y(i), spec.core(data.x(i)));
        }

        let spec = BooleanTaskSpec::new(50, 8, 1, 0.9).unwrap();
        let n = 100_000;
        let data = sample_boolean(&spec, n, 5).unwrap();
        let agree = (0..n).filter(|&i| spec.core(data.x(i)) == spec.spurious(data.x(i))).count();
        assert!((agree as f64 / n as f64 - 0.9).abs() < 0.01);

        // unrelated coordinates carry no label information
        for j in 9..50 {
            let corr: f64 = (0..n).map(|i| data.x(i)[j] * data.y(i)).sum::<f64>() / n as f64;
            assert!(corr.abs() < 0.02, "coord {j}: {corr}");
        }
    }

    #[test]
    fn boolean_spec_validation() {
        assert!(BooleanTaskSpec::new(5, 4, 2, 0.5).is_err());
        assert!(BooleanTaskSpec::new(5, 4, 1, 1.5).is_err());
        assert_eq!(BooleanTaskSpec::new(50, 8, 1, 0.9).unwrap().d_unrelated(), 41);
    }

    proptest! {
        #[test]
        fn omega_roundtrip(mu in 0.01f64..5.0, omega in 1.0f64..20.0, kappa in 0.01f64..4.0) {
            let (m1, m3) = realizable_means(mu, omega, kappa).unwrap();
            let back = (m1 + m3) / (kappa * mu);
            prop_assert!((back - omega).abs() <= 1e-12 * omega);
        }

        #[test]
        fn bayes_even_in_x2(x1 in -2.0f64..2.0, x2 in -2.0f64..2.0, sx in 0.05f64..0.5, sy in 0.05f64..0.5) {
            let spec = GaussianSpec::new(0.3, 2.0, sx, sy, 0.0, 2).unwrap();
            prop_assert_eq!(bayes_decision(&spec, &[x1, x2]), bayes_decision(&spec, &[x1, -x2]));
        }

        #[test]
        fn origin_on_both_boundaries(mu in 0.05f64..3.0, omega in 1.0f64..10.0, sigma in 0.01f64..1.0) {
            let spec = GaussianSpec::isotropic(mu, omega, sigma, 2).unwrap();
            prop_assert!(bayes_decision(&spec, &[0.0, 0.0]).abs() < 1e-12 * mu * mu * omega);
            let toy = ToySpec::new(mu, omega).unwrap();
            prop_assert_eq!(toy_bayes_decision(&toy, &[0.0, 0.0]), 0.0);
        }

        #[test]
        fn toy_points_reproduce_coordinates(mu in 0.01f64..5.0, omega in 1.0f64..10.0) {
            let toy = ToySpec::new(mu, omega).unwrap();
            let [z1, z2, z3] = toy.points();
            let (m1, m3) = realizable_means(mu, omega, 1.0).unwrap();
            prop_assert!((z1.x[0] + m3).abs() <= 1e-15 * m3.max(1.0));
            prop_assert!((z2.x[0] - m1).abs() <= 1e-15 * m3.max(1.0));
            prop_assert_eq!(z2.x[1], mu);
            prop_assert_eq!(z3.x[1], -mu);
            prop_assert_eq!(z1.x[1], 0.0);
        }
    }
}
