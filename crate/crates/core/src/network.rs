//! Two-layer ReLU network `f(W; x) = Σ_k a_k relu(w_kᵀx)` with a fixed head.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datasets::{write_file, Dataset};
use crate::matrix::{dot, Matrix};
use crate::normal::{sigmoid, softplus};
use crate::rng;
use crate::{Error, Result};

/// Loss applied to `z = −y·f(W;x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `ℓ(z) = z`
    Correlation,
    /// `ℓ(z) = log(1 + e^z)`
    Logistic,
}

impl LossKind {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            LossKind::Correlation => z,
            LossKind::Logistic => softplus(z),
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            LossKind::Correlation => 1.0,
            LossKind::Logistic => sigmoid(z),
        }
    }
}

/// How the ±1 head signs are chosen at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    /// Alternating +, −, +, … (exactly m/2 of each; m must be even).
    Balanced,
    /// Independent fair coin per neuron.
    Random,
}

#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// ReLU gate with the convention `σ'(0) = 1`.
#[inline]
pub fn gate(z: f64) -> bool {
    z >= 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerNet {
    w: Matrix,
    a: Vec<f64>,
    alpha: f64,
    seed: Option<u64>,
}

impl TwoLayerNet {
    /// `head_signs` are ±1; the stored head is `sign/√m`.
    pub fn new(w: Matrix, head_signs: &[f64]) -> Result<Self> {
        if w.rows() == 0 || w.cols() == 0 {
            return Err(Error::Empty("weight matrix"));
        }
        if head_signs.len() != w.rows() {
            return Err(Error::DimensionMismatch {
                expected: w.rows(),
                got: head_signs.len(),
            });
        }
        let scale = 1.0 / (w.rows() as f64).sqrt();
        let mut a = Vec::with_capacity(head_signs.len());
        for &s in head_signs {
            if s != 1.0 && s != -1.0 {
                return Err(Error::invalid("head_signs", format!("entries must be ±1, got {s}")));
            }
            a.push(s * scale);
        }
        Ok(TwoLayerNet {
            w,
            a,
            alpha: 0.0,
            seed: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], head_signs: &[f64]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("weight rows"));
        }
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: r.len() });
        }
        Self::new(Matrix::from_rows(rows), head_signs)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.w.cols()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    /// Mutable access to the trainable rows only; the head stays fixed.
    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.w
    }

    pub fn head(&self) -> &[f64] {
        &self.a
    }

    pub fn head_sign(&self, k: usize) -> f64 {
        self.a[k].signum()
    }

    pub fn head_signs(&self) -> Vec<f64> {
        self.a.iter().map(|a| a.signum()).collect()
    }

    pub fn neuron(&self, k: usize) -> &[f64] {
        self.w.row(k)
    }

    #[inline]
    pub fn forward(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.w.iter_rows().zip(&self.a).map(|(w, a)| a * relu(dot(w, x))).sum()
    }

    pub fn try_forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.forward(x))
    }

    pub fn forward_batch(&self, data: &Dataset) -> Vec<f64> {
        (0..data.len()).map(|i| self.forward(data.x(i))).collect()
    }

    /// `y_i · f(W; x_i)` per sample.
    pub fn margins(&self, data: &Dataset) -> Vec<f64> {
        (0..data.len()).map(|i| data.y(i) * self.forward(data.x(i))).collect()
    }

    pub fn loss(&self, data: &Dataset, kind: LossKind) -> f64 {
        let n = data.len() as f64;
        (0..data.len()).map(|i| kind.value(-data.y(i) * self.forward(data.x(i)))).sum::<f64>() / n
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let hits = (0..data.len())
            .filter(|&i| crate::label_sign(self.forward(data.x(i))) == data.y(i))
            .count();
        hits as f64 / data.len() as f64
    }

    /// Mean-loss gradient with respect to `W` over the full dataset.
    pub fn grad(&self, data: &Dataset, kind: LossKind) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.width(), self.dim());
        self.grad_into(data, None, kind, &mut out)?;
        Ok(out)
    }

    /// Gradient over `data` (or the rows listed in `batch`) written into `out`.
    ///
    /// Returns the mean loss over the same samples.
    pub fn grad_into(&self, data: &Dataset, batch: Option<&[usize]>, kind: LossKind, out: &mut Matrix) -> Result<f64> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        if !out.same_shape(&self.w) {
            return Err(Error::DimensionMismatch {
                expected: self.w.as_slice().len(),
                got: out.as_slice().len(),
            });
        }
        let n = batch.map_or(data.len(), <[usize]>::len);
        if n == 0 {
            return Err(Error::Empty("batch"));
        }
        out.fill(0.0);
        let m = self.width();
        let d = self.dim();
        let mut pre = vec![0.0; m];
        let mut loss = 0.0;
        for s in 0..n {
            let i = batch.map_or(s, |b| b[s]);
            let x = data.x(i);
            let y = data.y(i);
            let mut f = 0.0;
            for (k, p) in pre.iter_mut().enumerate() {
                *p = dot(self.w.row(k), x);
                f += self.a[k] * relu(*p);
            }
            let z = -y * f;
            loss += kind.value(z);
            let c = kind.derivative(z) * y;
            let g = out.as_mut_slice();
            for (k, &p) in pre.iter().enumerate() {
                if gate(p) {
                    let coef = c * self.a[k];
                    let row = &mut g[k * d..(k + 1) * d];
                    for (r, xj) in row.iter_mut().zip(x) {
                        *r += coef * xj;
                    }
                }
            }
        }
        out.scale(-1.0 / n as f64);
        Ok(loss / n as f64)
    }

    /// CSV rows of `W` plus a JSON header with shape, init and head signs.
    pub fn write_checkpoint(&self, csv_path: &Path, header_path: &Path) -> Result<()> {
        let mut csv = String::new();
        for j in 1..=self.dim() {
            csv.push_str(&format!("w{j}"));
            csv.push(if j == self.dim() { '\n' } else { ',' });
        }
        for row in self.w.iter_rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            csv.push_str(&line.join(","));
            csv.push('\n');
        }
        write_file(csv_path, csv.as_bytes())?;
        let header = CheckpointHeader {
            m: self.width(),
            d: self.dim(),
            alpha: self.alpha,
            seed: self.seed,
            head_signs: self.head_signs(),
        };
        write_file(header_path, serde_json::to_string_pretty(&header)?.as_bytes())
    }

    pub fn read_checkpoint(csv_path: &Path, header_path: &Path) -> Result<Self> {
        let header_text = std::fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
        let header: CheckpointHeader = serde_json::from_str(&header_text)?;
        let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut data = Vec::with_capacity(header.m * header.d);
        for (lineno, line) in text.lines().skip(1).enumerate() {
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Config {
                    path: format!("{}:{}", csv_path.display(), lineno + 2),
                    reason: format!("not a number: {field:?}"),
                })?;
                data.push(v);
            }
        }
        if data.len() != header.m * header.d {
            return Err(Error::DimensionMismatch {
                expected: header.m * header.d,
                got: data.len(),
            });
        }
        let mut net = TwoLayerNet::new(Matrix::from_vec(header.m, header.d, data), &header.head_signs)?;
        net.alpha = header.alpha;
        net.seed = header.seed;
        Ok(net)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub m: usize,
    pub d: usize,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub head_signs: Vec<f64>,
}

/// Rows i.i.d. `N(0, (α/√d)² I)`; head signs per `head`.
pub fn init_net(m: usize, d: usize, alpha: f64, head: HeadMode, seed: u64) -> Result<TwoLayerNet> {
    if m == 0 || d == 0 {
        return Err(Error::Empty("network shape"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    if head == HeadMode::Balanced && m % 2 != 0 {
        return Err(Error::invalid("m", format!("balanced head needs an even width, got {m}")));
    }
    let mut rng = rng::stream(seed);
    let std = alpha / (d as f64).sqrt();
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m * d {
        let z: f64 = rng.sample(StandardNormal);
        data.push(std * z);
    }
    let signs: Vec<f64> = match head {
        HeadMode::Balanced => (0..m).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        HeadMode::Random => (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    };
    let mut net = TwoLayerNet::new(Matrix::from_vec(m, d, data), &signs)?;
    net.alpha = alpha;
    net.seed = Some(seed);
    Ok(net)
}

pub fn forward(net: &TwoLayerNet, x: &[f64]) -> Result<f64> {
    net.try_forward(x)
}

pub fn empirical_grad(net: &TwoLayerNet, batch: &Dataset, loss: LossKind) -> Result<Matrix> {
    net.grad(batch, loss)
}

pub fn margins(net: &TwoLayerNet, batch: &Dataset) -> Vec<f64> {
    net.margins(batch)
}
