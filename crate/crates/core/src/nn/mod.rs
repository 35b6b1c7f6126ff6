//! Feedforward ReLU regressor for uniform-heating CHF.
//!
//! Inputs are `[D, L, P, G, x]` (SI units, equilibrium quality at the CHF
//! location), z-scored with statistics from the training split. The target is
//! CHF in W/m2, also z-scored. Hidden layers use ReLU, the output is linear.
//! Training minimizes mean squared error on normalized targets with Adam.

mod file;
mod train;

pub use file::{load_model, read_model, save_model, write_model, MAGIC, VERSION};
pub use train::{train, History, PlateauScheduler, Sample, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Default topology: 5 inputs, eight hidden layers, one output.
pub const DEFAULT_LAYERS: [usize; 10] = [5, 61, 51, 28, 39, 26, 21, 20, 14, 1];
pub const N_FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("expected {expected} features per sample, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("non-finite input in sample {0}")]
    NonFiniteInput(usize),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("target of sample {index} must be positive, got {value}")]
    NonPositiveTarget { index: usize, value: f64 },
    #[error("loss became non-finite at epoch {0}")]
    Divergence(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model file format error: {0}")]
    Format(String),
    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Per-column affine normalization `(v - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(width: usize) -> Self {
        Self { mean: vec![0.0; width], scale: vec![1.0; width] }
    }

    /// Column means and population standard deviations. Columns with no
    /// spread get scale 1.
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, width: usize) -> Self {
        let n = rows.clone().count().max(1) as f64;
        let mut mean = vec![0.0; width];
        for r in rows.clone() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * m.abs().max(1e-300) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..v.len() {
            out[i] = (v[i] - self.mean[i]) / self.scale[i];
        }
    }
}

/// Fully connected network with flat parameter storage.
///
/// Layer `l` maps `sizes[l]` to `sizes[l + 1]` units; its weights are stored
/// row-major (one row per output unit) followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NnModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
    pub input_norm: Normalization,
    /// `(mean, scale)` of the target.
    pub output_norm: (f64, f64),
    pub seed: u64,
}

pub fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Forward-pass mode.
pub enum Mode<'a> {
    Infer,
    /// Inverted dropout after the first hidden layer.
    Train { rng: &'a mut ChaCha8Rng, dropout: f64 },
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub(crate) struct Trace {
    /// Post-activation values per layer (index 0 is the normalized input).
    acts: Vec<Vec<f64>>,
    /// Dropout multipliers for the first hidden layer, if any.
    mask: Option<Vec<f64>>,
}

impl NnModel {
    /// He-initialized weights, zero biases.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) || *sizes.last().unwrap() != 1 {
            return Err(NnError::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(parameter_count(sizes));
        for w in sizes.windows(2) {
            let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
            params.extend((0..w[0] * w[1]).map(|_| normal.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            input_norm: Normalization::identity(sizes[0]),
            output_norm: (0.0, 1.0),
            seed,
        })
    }

    /// Default-topology model.
    pub fn init_default(seed: u64) -> Self {
        Self::init(&DEFAULT_LAYERS, seed).expect("default topology is valid")
    }

    pub(crate) fn from_parts(
        sizes: Vec<usize>,
        params: Vec<f64>,
        input_norm: Normalization,
        output_norm: (f64, f64),
        seed: u64,
    ) -> Self {
        Self { sizes, params, input_norm, output_norm, seed }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offset(&self, layer: usize) -> usize {
        parameter_count(&self.sizes[..=layer])
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let o = self.offset(layer);
        &self.params[o..o + self.sizes[layer] * self.sizes[layer + 1]]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let o = self.offset(layer) + self.sizes[layer] * self.sizes[layer + 1];
        &self.params[o..o + self.sizes[layer + 1]]
    }

    /// Sets normalization statistics from raw feature rows and targets.
    pub fn fit_normalization(&mut self, features: &[Vec<f64>], targets: &[f64]) {
        self.input_norm = Normalization::fit(features.iter().map(|r| r.as_slice()), self.sizes[0]);
        let t = Normalization::fit(targets.iter().map(std::slice::from_ref), 1);
        self.output_norm = (t.mean[0], t.scale[0]);
    }

    fn check_batch(&self, features: &[Vec<f64>]) -> Result<(), NnError> {
        let width = self.sizes[0];
        for (i, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(NnError::Shape { expected: width, found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFiniteInput(i));
            }
        }
        Ok(())
    }

    /// Network output in target units for a batch of raw feature rows.
    pub fn forward(&self, features: &[Vec<f64>], mut mode: Mode<'_>) -> Result<Vec<f64>, NnError> {
        self.check_batch(features)?;
        let mut trace = Trace::default();
        let mut input = vec![0.0; self.sizes[0]];
        let (mu, sigma) = self.output_norm;
        Ok(features
            .iter()
            .map(|row| {
                self.input_norm.apply(row, &mut input);
                let mask = match &mut mode {
                    Mode::Infer => None,
                    Mode::Train { rng, dropout } => Some(dropout_mask(rng, self.sizes[1], *dropout)),
                };
                mu + sigma * self.forward_normalized(&input, mask, &mut trace)
            })
            .collect())
    }

    /// Deterministic inference.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<f64>, NnError> {
        self.forward(features, Mode::Infer)
    }

    pub fn predict_one(&self, features: &[f64]) -> Result<f64, NnError> {
        Ok(self.predict(&[features.to_vec()])?[0])
    }

    /// Forward pass on an already-normalized input; returns the normalized
    /// output and fills `trace`.
    pub(crate) fn forward_normalized(&self, input: &[f64], mask: Option<Vec<f64>>, trace: &mut Trace) -> f64 {
        let n_layers = self.sizes.len() - 1;
        trace.acts.resize(n_layers + 1, Vec::new());
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(input);
        for l in 0..n_layers {
            let (w, b) = (self.weights(l), self.biases(l));
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (prev, rest) = trace.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let out = &mut rest[0];
            out.clear();
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let mut z = b[j];
                for (wi, xi) in row.iter().zip(x) {
                    z += wi * xi;
                }
                out.push(if l + 1 < n_layers { z.max(0.0) } else { z });
            }
            if l == 0 {
                if let Some(m) = &mask {
                    out.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
                }
            }
        }
        trace.mask = mask;
        trace.acts[n_layers][0]
    }

    /// Accumulates `d_out * d(output)/d(params)` into `grad`.
    pub(crate) fn backward(&self, trace: &Trace, d_out: f64, grad: &mut [f64], delta: &mut Vec<f64>, next: &mut Vec<f64>) {
        let n_layers = self.sizes.len() - 1;
        delta.clear();
        delta.push(d_out);
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w_off = self.offset(l);
            let b_off = w_off + n_in * n_out;
            let x = &trace.acts[l];
            for j in 0..n_out {
                let d = delta[j];
                if d == 0.0 {
                    continue;
                }
                let g = &mut grad[w_off + j * n_in..w_off + (j + 1) * n_in];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += d * xi;
                }
                grad[b_off + j] += d;
            }
            if l == 0 {
                break;
            }
            // propagate through layer l's weights and the ReLU of layer l - 1's output
            let w = self.weights(l);
            next.clear();
            next.resize(n_in, 0.0);
            for j in 0..n_out {
                let d = delta[j];
                if d == 0.0 {
                    continue;
                }
                for (ni, wi) in next.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                    *ni += d * wi;
                }
            }
            for (i, ni) in next.iter_mut().enumerate() {
                // a unit sitting exactly at zero is treated as inactive
                if x[i] <= 0.0 {
                    *ni = 0.0;
                } else if l == 1 {
                    if let Some(m) = &trace.mask {
                        *ni *= m[i];
                    }
                }
            }
            std::mem::swap(delta, next);
        }
    }

    /// Loss `0.5 * (y - t)^2` on normalized values and its parameter gradient.
    pub fn loss_and_gradient(&self, features: &[f64], target: f64) -> Result<(f64, Vec<f64>), NnError> {
        self.check_batch(&[features.to_vec()])?;
        let mut input = vec![0.0; self.sizes[0]];
        self.input_norm.apply(features, &mut input);
        let t = (target - self.output_norm.0) / self.output_norm.1;
        let mut trace = Trace::default();
        let y = self.forward_normalized(&input, None, &mut trace);
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&trace, y - t, &mut grad, &mut Vec::new(), &mut Vec::new());
        Ok((0.5 * (y - t) * (y - t), grad))
    }

    fn loss(&self, input: &[f64], target: f64) -> f64 {
        let mut trace = Trace::default();
        let y = self.forward_normalized(input, None, &mut trace);
        0.5 * (y - target) * (y - target)
    }
}

pub(crate) fn dropout_mask(rng: &mut ChaCha8Rng, width: usize, rate: f64) -> Vec<f64> {
    if rate <= 0.0 {
        return vec![1.0; width];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..width).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}

/// Worst disagreement between analytic and finite-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub worst_parameter: usize,
    pub checked: usize,
}

pub const GRADIENT_STEP: f64 = 1e-5;

/// Central-difference check of backpropagation on one sample over `count`
/// randomly chosen parameters (all when `count` exceeds the total).
///
/// Where a perturbation crosses a ReLU kink the two one-sided differences
/// disagree; there the analytic value only has to lie between them.
pub fn gradient_check(model: &NnModel, features: &[f64], target: f64, count: usize, seed: u64) -> Result<GradientCheck, NnError> {
    gradient_check_with(model, features, target, count, seed, |_| {})
}

/// As [`gradient_check`], with `tamper` applied to the analytic gradient
/// before comparison.
pub fn gradient_check_with(
    model: &NnModel,
    features: &[f64],
    target: f64,
    count: usize,
    seed: u64,
    tamper: impl FnOnce(&mut [f64]),
) -> Result<GradientCheck, NnError> {
    let (_, mut grad) = model.loss_and_gradient(features, target)?;
    tamper(&mut grad);
    let mut input = vec![0.0; model.sizes[0]];
    model.input_norm.apply(features, &mut input);
    let t = (target - model.output_norm.0) / model.output_norm.1;

    let n = model.params.len();
    let mut indices: Vec<usize> = (0..n).collect();
    if count < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(indices.as_mut_slice(), &mut rng);
        indices.truncate(count);
    }

    let h = GRADIENT_STEP;
    let mut probe = model.clone();
    let l0 = model.loss(&input, t);
    let mut worst = (0.0, 0usize);
    for &i in &indices {
        let p = model.params[i];
        probe.params[i] = p + h;
        let lp = probe.loss(&input, t);
        probe.params[i] = p - h;
        let lm = probe.loss(&input, t);
        probe.params[i] = p;

        let a = grad[i];
        let central = (lp - lm) / (2.0 * h);
        let right = (lp - l0) / h;
        let left = (l0 - lm) / h;
        let floor = 1e-6;
        let kink = (right - left).abs() > 1e-3 * right.abs().max(left.abs()).max(floor);
        let err = if kink {
            let (lo, hi) = (left.min(right), left.max(right));
            let dist = if a < lo { lo - a } else if a > hi { a - hi } else { 0.0 };
            dist / a.abs().max(hi.abs()).max(lo.abs()).max(floor)
        } else {
            (a - central).abs() / a.abs().max(central.abs()).max(floor)
        };
        if err > worst.0 {
            worst = (err, i);
        }
    }
    Ok(GradientCheck { max_relative_error: worst.0, worst_parameter: worst.1, checked: indices.len() })
}

/// Model inputs `[D, L, P, G, x]` for a case at equilibrium quality `quality`.
pub fn case_features(case: &crate::dataset::TestCase, quality: f64) -> Vec<f64> {
    vec![case.diameter, case.length, case.pressure, case.mass_flux, quality]
}
