//! Small fully connected network with a scalar output, used for the Boolean
//! staircase experiments. All parameters live in one flat vector so the
//! optimizers in [`crate::optim`] apply unchanged.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::network::LossKind;
use crate::optim::{OptimState, StepSpec, DIVERGENCE_LIMIT};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    /// Derivative with the `σ'(0) = 1` convention.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Offset of the `outputs × inputs` weight block; biases follow it.
    offset: usize,
}

impl Layer {
    fn bias_offset(&self) -> usize {
        self.offset + self.inputs * self.outputs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    activation: Activation,
    params: Vec<f64>,
}

/// Per-sample activations kept for backpropagation.
struct Tape {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl MlpNet {
    /// `sizes = [d, h1, …, hk, 1]`; hidden layers use `activation`, the
    /// output is linear. Weights `N(0, (α√(2/fan_in))²)`, biases zero.
    pub fn new(sizes: &[usize], activation: Activation, alpha: f64, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("sizes", format!("need >= 2 positive layer sizes, got {sizes:?}")));
        }
        if *sizes.last().unwrap() != 1 {
            return Err(Error::invalid("sizes", "output layer must have width 1"));
        }
        let mut layers = Vec::new();
        let mut offset = 0;
        for pair in sizes.windows(2) {
            layers.push(Layer {
                inputs: pair[0],
                outputs: pair[1],
                offset,
            });
            offset += pair[0] * pair[1] + pair[1];
        }
        let mut params = vec![0.0; offset];
        let mut r = rng::stream(seed);
        for l in &layers {
            let std = alpha * (2.0 / l.inputs as f64).sqrt();
            for p in &mut params[l.offset..l.bias_offset()] {
                let z: f64 = r.sample(StandardNormal);
                *p = std * z;
            }
        }
        Ok(MlpNet {
            sizes: sizes.to_vec(),
            layers,
            activation,
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Width of the representation feeding the last layer.
    pub fn feature_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 2]
    }

    fn layer_forward(&self, l: &Layer, input: &[f64], out: &mut [f64]) {
        let w = &self.params[l.offset..l.bias_offset()];
        let b = &self.params[l.bias_offset()..l.bias_offset() + l.outputs];
        for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(l.inputs).zip(b)) {
            *o = bias + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
        }
    }

    fn run(&self, x: &[f64], tape: &mut Tape) -> f64 {
        let last = self.layers.len() - 1;
        tape.post[0].copy_from_slice(x);
        for (i, l) in self.layers.iter().enumerate() {
            let (head, tail) = tape.post.split_at_mut(i + 1);
            let input = &head[i];
            let pre = &mut tape.pre[i];
            self.layer_forward(l, input, pre);
            let out = &mut tail[0];
            if i == last {
                out.copy_from_slice(pre);
            } else {
                for (o, z) in out.iter_mut().zip(pre.iter()) {
                    *o = self.activation.apply(*z);
                }
            }
        }
        tape.post[last + 1][0]
    }

    fn tape(&self) -> Tape {
        Tape {
            pre: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            post: self.sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut tape = self.tape();
        self.run(x, &mut tape)
    }

    /// Penultimate representation (input to the last layer).
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut tape = self.tape();
        self.run(x, &mut tape);
        tape.post[self.sizes.len() - 2].clone()
    }

    /// Replaces the last layer's weights and bias.
    pub fn set_last_layer(&mut self, weights: &[f64], bias: f64) -> Result<()> {
        let l = *self.layers.last().unwrap();
        if weights.len() != l.inputs {
            return Err(Error::DimensionMismatch { expected: l.inputs, got: weights.len() });
        }
        self.params[l.offset..l.bias_offset()].copy_from_slice(weights);
        self.params[l.bias_offset()] = bias;
        Ok(())
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let mut tape = self.tape();
        let hits = (0..data.len())
            .filter(|&i| crate::label_sign(self.run(data.x(i), &mut tape)) == data.y(i))
            .count();
        hits as f64 / data.len() as f64
    }

    pub fn loss(&self, data: &Dataset, kind: LossKind) -> f64 {
        let mut tape = self.tape();
        (0..data.len())
            .map(|i| kind.value(-data.y(i) * self.run(data.x(i), &mut tape)))
            .sum::<f64>()
            / data.len() as f64
    }

    /// Mean-loss gradient over `data` (or the rows in `batch`) into `grad`;
    /// returns the mean loss.
    pub fn grad_into(&self, data: &Dataset, batch: Option<&[usize]>, kind: LossKind, grad: &mut [f64]) -> Result<f64> {
        if data.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: data.dim(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let n = batch.map_or(data.len(), <[usize]>::len);
        if n == 0 {
            return Err(Error::Empty("batch"));
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut tape = self.tape();
        let mut delta: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        let last = self.layers.len() - 1;
        let inv_n = 1.0 / n as f64;
        let mut loss = 0.0;
        for s in 0..n {
            let i = batch.map_or(s, |b| b[s]);
            let y = data.y(i);
            let f = self.run(data.x(i), &mut tape);
            let z = -y * f;
            loss += kind.value(z);
            delta[last][0] = -y * kind.derivative(z) * inv_n;
            for li in (0..self.layers.len()).rev() {
                let l = self.layers[li];
                let input = &tape.post[li];
                let (w_block, rest) = grad[l.offset..].split_at_mut(l.inputs * l.outputs);
                for (o, &dlt) in delta[li].iter().enumerate() {
                    rest[o] += dlt;
                    let row = &mut w_block[o * l.inputs..(o + 1) * l.inputs];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += dlt * x;
                    }
                }
                if li > 0 {
                    let w = &self.params[l.offset..l.bias_offset()];
                    let (lower, upper) = delta.split_at_mut(li);
                    let prev = &mut lower[li - 1];
                    prev.iter_mut().for_each(|v| *v = 0.0);
                    for (o, &dlt) in upper[0].iter().enumerate() {
                        let row = &w[o * l.inputs..(o + 1) * l.inputs];
                        for (p, wv) in prev.iter_mut().zip(row) {
                            *p += dlt * wv;
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&tape.pre[li - 1]) {
                        *p *= self.activation.derivative(*z);
                    }
                }
            }
        }
        Ok(loss * inv_n)
    }
}

/// Training options for [`train_mlp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpTrainSettings {
    pub steps: usize,
    /// Minibatch size (drawn with replacement); `None` for full batch.
    #[serde(default)]
    pub batch: Option<usize>,
    pub loss: LossKind,
    /// Full training loss is evaluated every `record_every` steps.
    pub record_every: usize,
    /// Stop at the first evaluation where the training loss is at most this.
    #[serde(default)]
    pub target_loss: Option<f64>,
    /// Keep a copy of the parameters at every evaluation.
    #[serde(default)]
    pub keep_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpTrainLog {
    /// `(step, full training loss)` at each evaluation.
    pub losses: Vec<(usize, f64)>,
    pub steps_done: usize,
    pub final_loss: f64,
    pub reached_target: bool,
    /// Parameters at each entry of `losses` when snapshots were requested.
    #[serde(skip)]
    pub snapshots: Vec<Vec<f64>>,
}

/// Trains every parameter of `net` on `data` with the given update rule.
pub fn train_mlp(net: &mut MlpNet, data: &Dataset, spec: &StepSpec, settings: &MlpTrainSettings, seed: u64) -> Result<MlpTrainLog> {
    if settings.record_every == 0 {
        return Err(Error::invalid("record_every", "must be >= 1"));
    }
    if settings.batch == Some(0) {
        return Err(Error::invalid("batch", "must be >= 1"));
    }
    let mut opt = OptimState::new(spec, net.num_params())?;
    let mut grad = vec![0.0; net.num_params()];
    let mut r = rng::stream(seed);
    let mut idx = Vec::new();
    let mut losses = Vec::new();
    let mut steps_done = 0;
    let mut reached_target = false;
    let mut snapshots = Vec::new();
    loop {
        if steps_done % settings.record_every == 0 || steps_done == settings.steps {
            let l = net.loss(data, settings.loss);
            losses.push((steps_done, l));
            if settings.keep_snapshots {
                snapshots.push(net.params().to_vec());
            }
            if settings.target_loss.is_some_and(|t| l <= t) {
                reached_target = true;
                break;
            }
        }
        if steps_done == settings.steps {
            break;
        }
        let batch = match settings.batch {
            Some(b) => {
                idx.clear();
                idx.extend((0..b).map(|_| r.random_range(0..data.len())));
                Some(idx.as_slice())
            }
            None => None,
        };
        net.grad_into(data, batch, settings.loss, &mut grad)?;
        opt.step(net.params_mut(), &grad);
        steps_done += 1;
        let peak = net.params().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(peak <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step: steps_done, value: peak });
        }
    }
    let final_loss = losses.last().map_or(f64::NAN, |l| l.1);
    Ok(MlpTrainLog {
        losses,
        steps_done,
        final_loss,
        reached_target,
        snapshots,
    })
}
