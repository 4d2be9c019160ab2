//! Dataset, selection and configuration types, plus file IO and the seeded
//! synthetic generator.
//!
//! Dataset files are comma-separated text with the header
//! `id,label,f0,...,f{d-1}` and one row per sample. Feature values are written
//! with 9 significant digits. Selection files are JSON objects with the
//! fields `method`, `fraction`, `seed` and `indices` (strictly increasing).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape("matrix data", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::shape("matrix row", cols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Gathers the given rows, in the given order, into a new matrix.
    pub fn gather_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }
}

/// `n` labeled feature vectors with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    features: Matrix,
    labels: Vec<usize>,
    ids: Vec<u64>,
    num_classes: usize,
}

impl FeatureDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, ids: Vec<u64>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::validation("num_classes", format!("need at least 2, got {num_classes}")));
        }
        if labels.len() != features.rows() {
            return Err(Error::shape("labels", features.rows(), labels.len()));
        }
        if ids.len() != features.rows() {
            return Err(Error::shape("ids", features.rows(), ids.len()));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::validation("ids", format!("duplicate sample id {id}")));
            }
        }
        let mut counts = vec![0usize; num_classes];
        for &label in &labels {
            if label >= num_classes {
                return Err(Error::validation(
                    "labels",
                    format!("label {label} out of range for {num_classes} classes"),
                ));
            }
            counts[label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::validation("labels", format!("class {empty} has no samples")));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("features", "non-finite feature value"));
        }
        Ok(Self {
            features,
            labels,
            ids,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row positions of the given ids, in the order given.
    pub fn rows_of(&self, ids: &[u64]) -> Result<Vec<usize>> {
        let lookup: std::collections::HashMap<u64, usize> =
            self.ids.iter().enumerate().map(|(row, &id)| (id, row)).collect();
        ids.iter()
            .map(|id| {
                lookup
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::validation("indices", format!("id {id} not in dataset")))
            })
            .collect()
    }

    /// A new dataset made of the given rows; ids are carried over unchanged.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        FeatureDataset::new(
            self.features.gather_rows(rows),
            rows.iter().map(|&r| self.labels[r]).collect(),
            rows.iter().map(|&r| self.ids[r]).collect(),
            self.num_classes,
        )
    }

    /// Stratified seeded split into (train, validation, test) by the integer
    /// ratio `ratio`. Every part receives at least one sample of every class.
    pub fn split(&self, ratio: (u32, u32, u32), seed: u64) -> Result<(Self, Self, Self)> {
        let (a, b, c) = ratio;
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::validation("ratio", "all split parts must be positive"));
        }
        let total = f64::from(a + b + c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for class in 0..self.num_classes {
            let mut rows: Vec<usize> = (0..self.len()).filter(|&r| self.labels[r] == class).collect();
            let n = rows.len();
            if n < 3 {
                return Err(Error::validation(
                    "split",
                    format!("class {class} has {n} samples, need at least 3"),
                ));
            }
            rand::seq::SliceRandom::shuffle(rows.as_mut_slice(), &mut rng);
            let n_val = round_half_away(n as f64 * f64::from(b) / total).max(1);
            let n_test = round_half_away(n as f64 * f64::from(c) / total).max(1);
            if n_val + n_test >= n {
                return Err(Error::validation(
                    "split",
                    format!("class {class} is too small for ratio {a}:{b}:{c}"),
                ));
            }
            val.extend_from_slice(&rows[..n_val]);
            test.extend_from_slice(&rows[n_val..n_val + n_test]);
            train.extend_from_slice(&rows[n_val + n_test..]);
        }
        for part in [&mut train, &mut val, &mut test] {
            part.sort_unstable();
        }
        Ok((self.subset(&train)?, self.subset(&val)?, self.subset(&test)?))
    }
}

/// `round()` with halves rounded away from zero, for nonnegative inputs.
pub fn round_half_away(x: f64) -> usize {
    x.round() as usize
}

/// Core-set size for fraction `fraction` of `n` samples: `max(1, round(fraction * n))`.
pub fn core_set_size(fraction: f64, n: usize) -> usize {
    round_half_away(fraction * n as f64).clamp(1, n.max(1))
}

pub(crate) fn check_fraction(fraction: f64) -> Result<()> {
    if fraction.is_finite() && fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation("fraction", format!("must be in (0, 1], got {fraction}")))
    }
}

/// Chosen core-set ids together with how they were chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    indices: Vec<u64>,
    fraction: f64,
    method: String,
    seed: u64,
    scores: Option<crate::divergence::ScoreTable>,
}

impl SelectionResult {
    /// Sorts `indices` and rejects duplicates.
    pub fn new(mut indices: Vec<u64>, fraction: f64, method: impl Into<String>, seed: u64) -> Result<Self> {
        check_fraction(fraction)?;
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation("indices", format!("duplicate index {}", w[0])));
        }
        Ok(Self {
            indices,
            fraction,
            method: method.into(),
            seed,
            scores: None,
        })
    }

    pub fn with_scores(mut self, scores: crate::divergence::ScoreTable) -> Self {
        self.scores = Some(scores);
        self
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scores(&self) -> Option<&crate::divergence::ScoreTable> {
        self.scores.as_ref()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Checks membership and cardinality against the dataset it was drawn from.
    pub fn validate_against(&self, dataset: &FeatureDataset) -> Result<()> {
        dataset.rows_of(&self.indices)?;
        let k = core_set_size(self.fraction, dataset.len());
        if self.indices.len() != k {
            return Err(Error::shape("selection size", k, self.indices.len()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SelectionFile {
    method: String,
    fraction: f64,
    seed: u64,
    indices: Vec<u64>,
}

pub fn save_selection(result: &SelectionResult, path: &Path) -> Result<()> {
    let doc = SelectionFile {
        method: result.method.clone(),
        fraction: result.fraction,
        seed: result.seed,
        indices: result.indices.clone(),
    };
    write_json(path, &doc)
}

pub fn load_selection(path: &Path) -> Result<SelectionResult> {
    let doc: SelectionFile = read_json(path)?;
    if let Some(w) = doc.indices.windows(2).find(|w| w[0] >= w[1]) {
        return Err(if w[0] == w[1] {
            Error::validation("indices", format!("duplicate index {}", w[0]))
        } else {
            Error::validation("indices", "indices must be sorted ascending")
        });
    }
    SelectionResult::new(doc.indices, doc.fraction, doc.method, doc.seed)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::json(path, e))
}

/// Formats `x` with 9 significant digits, `%.9g` style.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if (-5..9).contains(&exp) {
        let body = if exp >= 0 {
            let split = (exp + 1) as usize;
            format!("{}.{}", &digits[..split], &digits[split..])
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        let body = body.trim_end_matches('0').trim_end_matches('.');
        format!("{sign}{body}")
    } else {
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{}e{exp}", &digits[..1])
        } else {
            format!("{sign}{}.{frac}e{exp}", &digits[..1])
        }
    }
}

pub fn save_dataset(dataset: &FeatureDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = String::from("id,label");
    for j in 0..dataset.dims() {
        header.push_str(&format!(",f{j}"));
    }
    writeln!(w, "{header}").map_err(io)?;
    for (i, row) in dataset.features.iter_rows().enumerate() {
        let mut line = format!("{},{}", dataset.ids[i], dataset.labels[i]);
        for &v in row {
            line.push(',');
            line.push_str(&format_sig9(v));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Loads a dataset file. When `num_classes` is `None` it is inferred as
/// `max(label) + 1`.
pub fn load_dataset(path: &Path, num_classes: Option<usize>) -> Result<FeatureDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::parse(path, 1, "header must be id,label,f0,...,f{d-1}"));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::parse(path, 1, format!("expected column f{j}, found {name:?}")));
        }
    }
    let dims = header.len() - 2;

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dims + 2 {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} columns, found {}", dims + 2, record.len()),
            ));
        }
        let id: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad id {:?}", &record[0])))?;
        if !seen.insert(id) {
            return Err(Error::parse(path, line, format!("duplicate id {id}")));
        }
        let label: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad label {:?}", &record[1])))?;
        if let Some(j) = num_classes {
            if label >= j {
                return Err(Error::parse(path, line, format!("label {label} out of range for {j} classes")));
            }
        }
        for field in record.iter().skip(2) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad feature value {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line, format!("non-finite feature value {field:?}")));
            }
            data.push(v);
        }
        ids.push(id);
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::parse(path, 1, "no samples"));
    }
    let num_classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    let rows = labels.len();
    FeatureDataset::new(Matrix::new(rows, dims, data)?, labels, ids, num_classes)
}

/// Parameters of the synthetic Gaussian-cluster generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub dims: usize,
    pub cluster_spread: f64,
    pub center_separation: f64,
    pub label_noise_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::validation("num_classes", "need at least 2 classes"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::validation("samples_per_class", "must be positive"));
        }
        if self.dims == 0 {
            return Err(Error::validation("dims", "must be positive"));
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread > 0.0) {
            return Err(Error::validation("cluster_spread", "must be finite and positive"));
        }
        if !(self.center_separation.is_finite() && self.center_separation > 0.0) {
            return Err(Error::validation("center_separation", "must be finite and positive"));
        }
        if !(0.0..1.0).contains(&self.label_noise_rate) {
            return Err(Error::validation("label_noise_rate", "must be in [0, 1)"));
        }
        Ok(())
    }

    /// Class centers. With `num_classes <= dims` they sit on scaled basis
    /// vectors so every pair is exactly `center_separation` apart; otherwise
    /// they are spread on a circle in the first two dimensions (or a line when
    /// `dims == 1`) with nearest neighbours `center_separation` apart.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let (j, d, sep) = (self.num_classes, self.dims, self.center_separation);
        (0..j)
            .map(|c| {
                let mut center = vec![0.0; d];
                if j <= d {
                    center[c] = sep / std::f64::consts::SQRT_2;
                } else if d == 1 {
                    center[0] = c as f64 * sep;
                } else {
                    let radius = sep / (2.0 * (std::f64::consts::PI / j as f64).sin());
                    let angle = 2.0 * std::f64::consts::PI * c as f64 / j as f64;
                    center[0] = radius * angle.cos();
                    center[1] = radius * angle.sin();
                }
                center
            })
            .collect()
    }
}

/// Generator output with the pre-noise labels kept alongside.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: FeatureDataset,
    pub clean_labels: Vec<usize>,
}

impl SyntheticDataset {
    pub fn flipped_ids(&self) -> Vec<u64> {
        self.dataset
            .labels()
            .iter()
            .zip(&self.clean_labels)
            .zip(self.dataset.ids())
            .filter(|((a, b), _)| a != b)
            .map(|(_, &id)| id)
            .collect()
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureDataset> {
    generate_synthetic_detailed(spec).map(|s| s.dataset)
}

pub fn generate_synthetic_detailed(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let n = spec.num_classes * spec.samples_per_class;
    let centers = spec.centers();

    let mut feature_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Matrix::zeros(n, spec.dims);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let row = features.row_mut(labels.len());
            for (x, &c) in row.iter_mut().zip(center) {
                let z: f64 = feature_rng.sample(StandardNormal);
                *x = c + spec.cluster_spread * z;
            }
            labels.push(class);
        }
    }
    let clean_labels = labels.clone();

    // separate stream so the noise draw never perturbs the features
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);
    let n_flip = round_half_away(spec.label_noise_rate * n as f64);
    let mut flipped = index::sample(&mut noise_rng, n, n_flip).into_vec();
    flipped.sort_unstable();
    for row in flipped {
        let r = noise_rng.random_range(0..spec.num_classes - 1);
        let old = labels[row];
        labels[row] = if r >= old { r + 1 } else { r };
    }

    let ids = (0..n as u64).collect();
    let dataset = FeatureDataset::new(features, labels, ids, spec.num_classes)?;
    Ok(SyntheticDataset { dataset, clean_labels })
}
