use rand::Rng;
use rand_distr::StandardNormal;

use super::{gradient_difference_hessian, Batch, Dataset, Objective, HESSIAN_LIMIT};
use crate::error::{Error, Result};
use crate::math::{stream_rng, Stream, SymMatrix};

/// Fully connected tanh network with a softmax cross-entropy head and
/// label smoothing. Parameters are laid out layer by layer as the weight
/// matrix (row-major, `out × in`) followed by the bias.
#[derive(Clone, Debug)]
pub struct Mlp {
    widths: Vec<usize>,
    label_smoothing: f64,
    data: Dataset,
    p: usize,
}

pub fn mlp_objective(
    widths: &[usize],
    num_classes: usize,
    label_smoothing: f64,
    data: Dataset,
) -> Result<Mlp> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::ShapeMismatch(format!("invalid layer widths {widths:?}")));
    }
    if widths[0] != data.d {
        return Err(Error::ShapeMismatch(format!(
            "input width {} does not match data dimension {}",
            widths[0], data.d
        )));
    }
    if *widths.last().unwrap() != num_classes {
        return Err(Error::ShapeMismatch(format!(
            "output width {} does not match {num_classes} classes",
            widths.last().unwrap()
        )));
    }
    if data.targets.iter().any(|&t| t >= num_classes) {
        return Err(Error::ShapeMismatch("label out of range".into()));
    }
    if !(0.0..1.0).contains(&label_smoothing) {
        return Err(Error::InvalidConfig(format!(
            "label_smoothing must lie in [0, 1), got {label_smoothing}"
        )));
    }
    let p = widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
    Ok(Mlp {
        widths: widths.to_vec(),
        label_smoothing,
        data,
        p,
    })
}

impl Mlp {
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn num_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Glorot-normal weights, zero biases.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, Stream::Init);
        let mut theta = Vec::with_capacity(self.p);
        for w in self.widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                theta.push(std * rng.sample::<f64, _>(StandardNormal));
            }
            theta.extend(std::iter::repeat_n(0.0, fan_out));
        }
        theta
    }

    /// Activations of every layer; the last entry holds the logits.
    fn forward(&self, theta: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.widths.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        let mut offset = 0;
        for (l, w) in self.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &theta[offset..offset + fan_in * fan_out];
            let bias = &theta[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let prev = &acts[l];
            let mut z: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &weights[o * fan_in..(o + 1) * fan_in];
                    bias[o] + row.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if l + 1 < layers {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    fn smoothed_targets(&self, label: usize) -> Vec<f64> {
        let k = self.num_classes();
        let ls = self.label_smoothing;
        (0..k)
            .map(|j| ls / k as f64 + if j == label { 1.0 - ls } else { 0.0 })
            .collect()
    }

    fn example_loss(&self, logits: &[f64], label: usize) -> (f64, Vec<f64>) {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        let targets = self.smoothed_targets(label);
        let loss = -targets
            .iter()
            .zip(logits)
            .map(|(t, z)| t * (z - log_z))
            .sum::<f64>();
        let dlogits = logits
            .iter()
            .zip(&targets)
            .map(|(z, t)| (z - log_z).exp() - t)
            .collect();
        (loss, dlogits)
    }

    /// Adds `scale · ∇ loss_i` into `grad`; returns the example loss.
    fn accumulate_example(&self, theta: &[f64], x: &[f64], label: usize, scale: f64, grad: &mut [f64]) -> f64 {
        let acts = self.forward(theta, x);
        let (loss, mut delta) = self.example_loss(acts.last().unwrap(), label);
        let mut offsets: Vec<usize> = Vec::with_capacity(self.widths.len() - 1);
        let mut off = 0;
        for w in self.widths.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        for l in (0..self.widths.len() - 1).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let base = offsets[l];
            let prev = &acts[l];
            for o in 0..fan_out {
                let d = delta[o] * scale;
                let row = &mut grad[base + o * fan_in..base + (o + 1) * fan_in];
                for (g, a) in row.iter_mut().zip(prev) {
                    *g += d * a;
                }
                grad[base + fan_in * fan_out + o] += d;
            }
            if l > 0 {
                let weights = &theta[base..base + fan_in * fan_out];
                delta = (0..fan_in)
                    .map(|i| {
                        let back: f64 = (0..fan_out).map(|o| weights[o * fan_in + i] * delta[o]).sum();
                        back * (1.0 - prev[i] * prev[i])
                    })
                    .collect();
            }
        }
        loss
    }

    fn indices<'a>(&'a self, batch: Batch<'a>) -> Box<dyn Iterator<Item = usize> + 'a> {
        match batch {
            Batch::Full => Box::new(0..self.data.n),
            Batch::Indices(idx) => Box::new(idx.iter().copied()),
        }
    }

    fn batch_len(&self, batch: Batch<'_>) -> usize {
        match batch {
            Batch::Full => self.data.n,
            Batch::Indices(idx) => idx.len(),
        }
    }

    pub fn predict(&self, theta: &[f64], x: &[f64]) -> usize {
        let acts = self.forward(theta, x);
        let logits = acts.last().unwrap();
        let mut best = 0;
        for (k, z) in logits.iter().enumerate() {
            if *z > logits[best] {
                best = k;
            }
        }
        best
    }

    /// Mean smoothed cross-entropy and accuracy on an arbitrary dataset of
    /// matching shape.
    pub fn evaluate(&self, theta: &[f64], data: &Dataset) -> (f64, f64) {
        let mut loss = 0.0;
        let mut correct = 0usize;
        for i in 0..data.n {
            let acts = self.forward(theta, data.row(i));
            let logits = acts.last().unwrap();
            loss += self.example_loss(logits, data.targets[i]).0;
            if self.predict(theta, data.row(i)) == data.targets[i] {
                correct += 1;
            }
        }
        let n = data.n.max(1) as f64;
        (loss / n, correct as f64 / n)
    }
}

impl Objective for Mlp {
    fn dim(&self) -> usize {
        self.p
    }

    fn value(&self, theta: &[f64], batch: Batch<'_>) -> f64 {
        let m = self.batch_len(batch).max(1) as f64;
        self.indices(batch)
            .map(|i| {
                let acts = self.forward(theta, self.data.row(i));
                self.example_loss(acts.last().unwrap(), self.data.targets[i]).0
            })
            .sum::<f64>()
            / m
    }

    fn gradient(&self, theta: &[f64], batch: Batch<'_>) -> Vec<f64> {
        self.value_and_gradient(theta, batch).1
    }

    fn value_and_gradient(&self, theta: &[f64], batch: Batch<'_>) -> (f64, Vec<f64>) {
        let m = self.batch_len(batch).max(1) as f64;
        let mut grad = vec![0.0; self.p];
        let mut loss = 0.0;
        for i in self.indices(batch) {
            loss += self.accumulate_example(theta, self.data.row(i), self.data.targets[i], 1.0 / m, &mut grad);
        }
        (loss / m, grad)
    }

    fn per_example_gradients(&self, theta: &[f64], batch: Batch<'_>) -> Option<Vec<Vec<f64>>> {
        Some(
            self.indices(batch)
                .map(|i| {
                    let mut g = vec![0.0; self.p];
                    self.accumulate_example(theta, self.data.row(i), self.data.targets[i], 1.0, &mut g);
                    g
                })
                .collect(),
        )
    }

    /// Central differences of the analytic gradient (accurate to roughly
    /// 1e-8), offered for small networks only.
    fn hessian(&self, theta: &[f64], batch: Batch<'_>) -> Option<SymMatrix> {
        (self.p <= HESSIAN_LIMIT).then(|| gradient_difference_hessian(self, theta, batch))
    }
}
