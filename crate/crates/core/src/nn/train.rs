//! Minibatch Adam training with plateau learning-rate decay and early stop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dropout_mask, NnError, NnModel, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    /// CHF [W/m2]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub early_stop_patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            plateau_patience: 20,
            plateau_factor: 0.5,
            min_learning_rate: 1e-5,
            dropout: 0.01,
            batch_size: 64,
            max_epochs: 2000,
            early_stop_patience: 100,
            validation_fraction: 0.2,
            seed: 42,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::Config(m.into()));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad("plateau factor must be in (0, 1)");
        }
        if !(self.learning_rate > 0.0) || self.min_learning_rate < 0.0 {
            return bad("learning rates must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation fraction must be in [0, 1)");
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// a relative improvement of at least `threshold` in the monitored loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub patience: usize,
    pub factor: f64,
    pub min_lr: f64,
    pub threshold: f64,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, patience: usize, factor: f64, min_lr: f64) -> Self {
        Self { lr, patience, factor, min_lr, threshold: 1e-4, best: f64::INFINITY, wait: 0 }
    }

    /// Records one epoch's loss; returns the learning rate for the next epoch.
    pub fn step(&mut self, loss: f64) -> f64 {
        if loss < self.best * (1.0 - self.threshold) {
            self.best = loss;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.wait = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub learning_rate: Vec<f64>,
    /// Epoch (0-based) whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize, c: &TrainConfig) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: c.beta1, beta2: c.beta2, eps: c.epsilon }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

fn normalized_rows(model: &NnModel, data: &[Sample], idx: &[usize]) -> Vec<(Vec<f64>, f64)> {
    let (mu, sigma) = model.output_norm;
    idx.iter()
        .map(|&i| {
            let mut x = vec![0.0; data[i].features.len()];
            model.input_norm.apply(&data[i].features, &mut x);
            (x, (data[i].target - mu) / sigma)
        })
        .collect()
}

fn mean_loss(model: &NnModel, rows: &[(Vec<f64>, f64)], trace: &mut Trace) -> f64 {
    let sum: f64 = rows
        .iter()
        .map(|(x, t)| {
            let y = model.forward_normalized(x, None, trace);
            (y - t) * (y - t)
        })
        .sum();
    sum / rows.len() as f64
}

/// Trains `model` on `data`. Normalization statistics are refit on the
/// training split. Returns the weights from the epoch with the lowest
/// validation loss (training loss when there is no validation split).
pub fn train(mut model: NnModel, data: &[Sample], config: &TrainConfig) -> Result<(NnModel, History), NnError> {
    config.check()?;
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let width = model.layer_sizes()[0];
    for (i, s) in data.iter().enumerate() {
        if s.features.len() != width {
            return Err(NnError::Shape { expected: width, found: s.features.len() });
        }
        if s.features.iter().any(|v| !v.is_finite()) || !s.target.is_finite() {
            return Err(NnError::NonFiniteInput(i));
        }
        if s.target <= 0.0 {
            return Err(NnError::NonPositiveTarget { index: i, value: s.target });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if data.len() > 1 { (config.validation_fraction * data.len() as f64).round() as usize } else { 0 };
    let n_val = n_val.min(data.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let (val_idx, train_idx) = (val_idx.to_vec(), train_idx.to_vec());

    let feats: Vec<Vec<f64>> = train_idx.iter().map(|&i| data[i].features.clone()).collect();
    let targets: Vec<f64> = train_idx.iter().map(|&i| data[i].target).collect();
    model.fit_normalization(&feats, &targets);

    let train_rows_all = normalized_rows(&model, data, &(0..data.len()).collect::<Vec<_>>());
    let val_rows: Vec<(Vec<f64>, f64)> = val_idx.iter().map(|&i| train_rows_all[i].clone()).collect();

    let n_params = model.parameter_count();
    let mut adam = Adam::new(n_params, config);
    let mut sched = PlateauScheduler::new(config.learning_rate, config.plateau_patience, config.plateau_factor, config.min_learning_rate);
    let mut lr = config.learning_rate;
    let mut history = History { train_indices: train_idx.clone(), validation_indices: val_idx.clone(), ..History::default() };
    let mut best = (f64::INFINITY, model.params().to_vec(), 0usize);
    let mut since_best = 0usize;
    let mut grad = vec![0.0; n_params];
    let mut trace = Trace::default();
    let (mut delta, mut next) = (Vec::new(), Vec::new());
    let train_rows: Vec<(Vec<f64>, f64)> = train_idx.iter().map(|&i| train_rows_all[i].clone()).collect();

    for epoch in 0..config.max_epochs {
        let mut epoch_loss = 0.0;
        let mut pos: Vec<usize> = (0..train_rows.len()).collect();
        pos.shuffle(&mut rng);
        for batch in pos.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / batch.len() as f64;
            for &b in batch {
                let (x, t) = &train_rows[b];
                let mask = (config.dropout > 0.0).then(|| dropout_mask(&mut rng, model.layer_sizes()[1], config.dropout));
                let y = model.forward_normalized(x, mask, &mut trace);
                epoch_loss += (y - t) * (y - t);
                model.backward(&trace, scale * (y - t), &mut grad, &mut delta, &mut next);
            }
            adam.step(model.params_mut(), &grad, lr);
        }
        let train_loss = epoch_loss / train_rows.len() as f64;
        let monitored = if val_rows.is_empty() { mean_loss(&model, &train_rows, &mut trace) } else { mean_loss(&model, &val_rows, &mut trace) };
        if !train_loss.is_finite() || !monitored.is_finite() {
            return Err(NnError::Divergence(epoch));
        }
        history.train_loss.push(train_loss);
        history.validation_loss.push(if val_rows.is_empty() { f64::NAN } else { monitored });
        history.learning_rate.push(lr);

        if monitored < best.0 {
            best = (monitored, model.params().to_vec(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.early_stop_patience {
                history.stopped_early = true;
                break;
            }
        }
        lr = sched.step(monitored);
    }
    model.params_mut().copy_from_slice(&best.1);
    history.best_epoch = best.2;
    Ok((model, history))
}
