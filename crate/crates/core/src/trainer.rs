//! A `d_in -> hidden -> classes` perceptron with a relu hidden layer, trained
//! by Adam on softmax cross-entropy, and the training loop that reselects the
//! core set on a fixed epoch schedule.
//!
//! The relu hidden activation is the embedding handed to the selectors.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{check_fraction, read_json, write_json, FeatureDataset, Matrix};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport};
use crate::selection::{EpochTrace, Method, Selector};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Parameters laid out flat as `[w1 | b1 | w2 | b2]`; `w1` is `d_in x hidden`
/// and `w2` is `hidden x classes`, both row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierState {
    d_in: usize,
    hidden: usize,
    classes: usize,
    params: Vec<f64>,
    rng: ChaCha8Rng,
}

impl ClassifierState {
    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.d_in * self.hidden;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden * self.classes;
        (b1, w2, b2)
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[..self.d_in * self.hidden]
    }

    pub fn b1(&self) -> &[f64] {
        let (b1, w2, _) = self.offsets();
        &self.params[b1..w2]
    }

    pub fn w2(&self) -> &[f64] {
        let (_, w2, b2) = self.offsets();
        &self.params[w2..b2]
    }

    pub fn b2(&self) -> &[f64] {
        let (_, _, b2) = self.offsets();
        &self.params[b2..]
    }

    /// Xavier-uniform bounds for `w1` and `w2`.
    pub fn init_bounds(&self) -> (f64, f64) {
        (
            (6.0 / (self.d_in + self.hidden) as f64).sqrt(),
            (6.0 / (self.hidden + self.classes) as f64).sqrt(),
        )
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let model: Self = read_json(path)?;
        let expected = model.d_in * model.hidden + model.hidden + model.hidden * model.classes + model.classes;
        if model.params.len() != expected {
            return Err(Error::shape("model parameters", expected, model.params.len()));
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("model has non-finite parameters".into()));
        }
        Ok(model)
    }

    fn check_features(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.d_in {
            return Err(Error::shape("feature dims", self.d_in, features.cols()));
        }
        Ok(())
    }

    /// Pre-activation hidden layer and logits for one sample.
    fn forward_one(&self, x: &[f64], z1: &mut [f64], logits: &mut [f64]) {
        let (h, j) = (self.hidden, self.classes);
        z1.copy_from_slice(self.b1());
        let w1 = self.w1();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (z, &w) in z1.iter_mut().zip(&w1[i * h..(i + 1) * h]) {
                *z += xi * w;
            }
        }
        logits.copy_from_slice(self.b2());
        let w2 = self.w2();
        for (k, &z) in z1.iter().enumerate() {
            let a = z.max(0.0);
            if a == 0.0 {
                continue;
            }
            for (l, &w) in logits.iter_mut().zip(&w2[k * j..(k + 1) * j]) {
                *l += a * w;
            }
        }
    }
}

/// Seeded Xavier-uniform weights, zero biases.
pub fn init_model(d_in: usize, hidden: usize, classes: usize, seed: u64) -> Result<ClassifierState> {
    for (field, v) in [("d_in", d_in), ("hidden_width", hidden), ("num_classes", classes)] {
        if v == 0 {
            return Err(Error::validation(field, "must be positive"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ClassifierState {
        d_in,
        hidden,
        classes,
        params: vec![0.0; d_in * hidden + hidden + hidden * classes + classes],
        rng: ChaCha8Rng::seed_from_u64(0),
    };
    let (bound1, bound2) = model.init_bounds();
    let (b1, w2, b2) = model.offsets();
    for p in &mut model.params[..b1] {
        *p = rng.random_range(-bound1..=bound1);
    }
    for p in &mut model.params[w2..b2] {
        *p = rng.random_range(-bound2..=bound2);
    }
    model.rng = rng;
    Ok(model)
}

/// Hidden relu activations, one row per input row.
pub fn embed(model: &ClassifierState, features: &Matrix) -> Result<Matrix> {
    model.check_features(features)?;
    let mut out = Matrix::zeros(features.rows(), model.hidden);
    let mut logits = vec![0.0; model.classes];
    for (r, x) in features.iter_rows().enumerate() {
        let z1 = out.row_mut(r);
        model.forward_one(x, z1, &mut logits);
        for z in z1.iter_mut() {
            *z = z.max(0.0);
        }
    }
    Ok(out)
}

pub fn forward(model: &ClassifierState, features: &Matrix) -> Result<Matrix> {
    model.check_features(features)?;
    let mut out = Matrix::zeros(features.rows(), model.classes);
    let mut z1 = vec![0.0; model.hidden];
    for (r, x) in features.iter_rows().enumerate() {
        model.forward_one(x, &mut z1, out.row_mut(r));
    }
    Ok(out)
}

/// Index of the largest entry; ties go to the smaller index.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &ClassifierState, features: &Matrix) -> Result<Vec<usize>> {
    let logits = forward(model, features)?;
    Ok(logits.iter_rows().map(argmax).collect())
}

/// Mean cross-entropy over `rows` and its exact gradient in the flat
/// parameter layout.
pub fn loss_and_grad(
    model: &ClassifierState,
    features: &Matrix,
    labels: &[usize],
    rows: &[usize],
) -> Result<(f64, Vec<f64>)> {
    model.check_features(features)?;
    if rows.is_empty() {
        return Err(Error::validation("batch", "empty batch"));
    }
    if labels.len() != features.rows() {
        return Err(Error::shape("labels", features.rows(), labels.len()));
    }
    let (d, h, j) = (model.d_in, model.hidden, model.classes);
    let (o_b1, o_w2, o_b2) = model.offsets();
    let mut grad = vec![0.0; model.params.len()];
    let mut z1 = vec![0.0; h];
    let mut logits = vec![0.0; j];
    let mut dz1 = vec![0.0; h];
    let scale = 1.0 / rows.len() as f64;
    let mut loss = 0.0;
    let w2 = model.w2();

    for &r in rows {
        let x = features.row(r);
        let y = labels[r];
        if y >= j {
            return Err(Error::validation("labels", format!("label {y} out of range for {j} classes")));
        }
        model.forward_one(x, &mut z1, &mut logits);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - logits[y];

        // dlogits = (softmax - onehot) / batch
        for (c, l) in logits.iter_mut().enumerate() {
            let p = (*l - log_z).exp();
            *l = (p - if c == y { 1.0 } else { 0.0 }) * scale;
        }
        let dlogits = &logits;
        for (c, &g) in dlogits.iter().enumerate() {
            grad[o_b2 + c] += g;
        }
        for k in 0..h {
            let a = z1[k].max(0.0);
            let w_row = &w2[k * j..(k + 1) * j];
            let g_row = &mut grad[o_w2 + k * j..o_w2 + (k + 1) * j];
            let mut da = 0.0;
            for c in 0..j {
                g_row[c] += a * dlogits[c];
                da += w_row[c] * dlogits[c];
            }
            dz1[k] = if z1[k] > 0.0 { da } else { 0.0 };
        }
        for k in 0..h {
            grad[o_b1 + k] += dz1[k];
        }
        for (i, &xi) in x.iter().enumerate().take(d) {
            if xi == 0.0 {
                continue;
            }
            for (g, &dz) in grad[i * h..(i + 1) * h].iter_mut().zip(&dz1) {
                *g += xi * dz;
            }
        }
    }
    let loss = loss * scale;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite loss or gradient (loss = {loss})")));
    }
    Ok((loss, grad))
}

/// Adam without weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            lr,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub reselect_interval: usize,
    pub hidden_width: usize,
    pub seed: u64,
    pub method: Method,
    pub fraction: f64,
    /// Full-data epochs run before the first selection; not part of `epochs`.
    #[serde(default)]
    pub warmup_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            epochs: 50,
            batch_size: 64,
            reselect_interval: 10,
            hidden_width: 32,
            seed: 0,
            method: Method::Full,
            fraction: 1.0,
            warmup_epochs: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation("learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size", "must be at least 1"));
        }
        if self.reselect_interval == 0 || self.reselect_interval > self.epochs {
            return Err(Error::validation("reselect_interval", "must be in 1..=epochs"));
        }
        if self.hidden_width == 0 {
            return Err(Error::validation("hidden_width", "must be positive"));
        }
        check_fraction(self.fraction)
    }

    /// Epochs at which the core set is recomputed.
    pub fn reselection_epochs(&self) -> Vec<usize> {
        (0..self.epochs).step_by(self.reselect_interval.max(1)).collect()
    }
}

/// Wall-clock split of a run. Kept out of serialized reports so they stay
/// reproducible byte for byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub selection_seconds: f64,
    pub training_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub method: Method,
    pub fraction: f64,
    pub seed: u64,
    pub losses: Vec<f64>,
    pub core_sizes: Vec<usize>,
    pub reselection_epochs: Vec<usize>,
    pub train_accuracy: Vec<f64>,
    pub metrics: Option<MetricsReport>,
    #[serde(skip)]
    pub trace: EpochTrace,
    #[serde(skip)]
    pub timing: Timing,
}

/// Seed handed to the selector at `epoch`.
pub fn selection_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn train_epoch(
    model: &mut ClassifierState,
    adam: &mut Adam,
    train: &FeatureDataset,
    core_rows: &[usize],
    batch_size: usize,
) -> Result<f64> {
    let mut order = core_rows.to_vec();
    order.shuffle(&mut model.rng);
    let mut total = 0.0;
    for (b, batch) in order.chunks(batch_size).enumerate() {
        let (loss, grad) = loss_and_grad(model, train.features(), train.labels(), batch)
            .map_err(|e| Error::Numeric(format!("batch {b}: {e}")))?;
        adam.update(&mut model.params, &grad);
        total += loss * batch.len() as f64;
    }
    Ok(total / order.len() as f64)
}

/// Trains on a core set that `selector` recomputes from full-training-set
/// embeddings every `reselect_interval` epochs. Correctness on the full
/// training set is recorded after every epoch; `heldout`, when given, is
/// scored once at the end.
pub fn train_with_reselection(
    train: &FeatureDataset,
    heldout: Option<&FeatureDataset>,
    config: &TrainConfig,
    selector: &Selector,
) -> Result<(ClassifierState, TrainReport)> {
    config.validate()?;
    let fraction = if matches!(selector, Selector::Full) { 1.0 } else { config.fraction };
    let mut model = init_model(train.dims(), config.hidden_width, train.num_classes(), config.seed)?;
    let mut adam = Adam::new(model.num_params(), config.learning_rate);
    let all_rows: Vec<usize> = (0..train.len()).collect();
    let mut timing = Timing::default();

    for w in 0..config.warmup_epochs {
        let t = Instant::now();
        train_epoch(&mut model, &mut adam, train, &all_rows, config.batch_size)
            .map_err(|e| Error::Numeric(format!("warmup epoch {w}: {e}")))?;
        timing.training_seconds += t.elapsed().as_secs_f64();
    }

    let schedule = config.reselection_epochs();
    let mut core_rows = all_rows.clone();
    let mut losses = Vec::with_capacity(config.epochs);
    let mut core_sizes = Vec::with_capacity(config.epochs);
    let mut train_accuracy = Vec::with_capacity(config.epochs);
    let mut flags = vec![Vec::with_capacity(config.epochs); train.len()];

    for epoch in 0..config.epochs {
        if schedule.contains(&epoch) {
            let t = Instant::now();
            let embeddings = if selector.needs_embeddings() {
                Some(embed(&model, train.features()).map_err(|e| e.at_epoch(epoch))?)
            } else {
                None
            };
            let selection = selector
                .select(train, embeddings.as_ref(), fraction, selection_seed(config.seed, epoch))
                .map_err(|e| e.at_epoch(epoch))?;
            core_rows = train.rows_of(selection.indices())?;
            timing.selection_seconds += t.elapsed().as_secs_f64();
        }

        let t = Instant::now();
        let loss = train_epoch(&mut model, &mut adam, train, &core_rows, config.batch_size)
            .map_err(|e| e.at_epoch(epoch))?;
        losses.push(loss);
        core_sizes.push(core_rows.len());

        let preds = predict(&model, train.features())?;
        let mut correct = 0usize;
        for ((f, &p), &y) in flags.iter_mut().zip(&preds).zip(train.labels()) {
            f.push(p == y);
            correct += usize::from(p == y);
        }
        train_accuracy.push(correct as f64 / train.len() as f64);
        timing.training_seconds += t.elapsed().as_secs_f64();
    }

    let metrics = heldout
        .map(|test| {
            let preds = predict(&model, test.features())?;
            metrics::report(test.labels(), &preds, test.num_classes())
        })
        .transpose()?;
    let report = TrainReport {
        method: selector.method(),
        fraction,
        seed: config.seed,
        losses,
        core_sizes,
        reselection_epochs: schedule,
        train_accuracy,
        metrics,
        trace: EpochTrace::new(train.ids().to_vec(), flags)?,
        timing,
    };
    Ok((model, report))
}
