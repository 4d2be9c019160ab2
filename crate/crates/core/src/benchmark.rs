//! Method x fraction x seed sweep over the full train/select/evaluate
//! pipeline.
//!
//! The sweep produces two documents. [`BenchmarkReport`] holds everything
//! that is a function of the inputs (metrics, summaries, plot series) and is
//! reproducible byte for byte. [`BenchmarkTiming`] holds the wall-clock
//! selection and training seconds of each cell.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{check_fraction, read_json, write_json, FeatureDataset};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricsReport};
use crate::selection::{EpochTrace, JscdsOptions, Method, Selector};
use crate::trainer::{train_with_reselection, Timing, TrainConfig};

pub const DEFAULT_FRACTIONS: [f64; 4] = [0.1, 0.3, 0.5, 0.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGrid {
    pub methods: Vec<Method>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template; `seed`, `method` and `fraction` are overridden per cell.
    pub config: TrainConfig,
    pub split_seed: u64,
    pub split_ratio: (u32, u32, u32),
}

impl BenchmarkGrid {
    pub fn new(methods: Vec<Method>, fractions: Vec<f64>, seeds: Vec<u64>, config: TrainConfig) -> Self {
        Self {
            methods,
            fractions,
            seeds,
            config,
            split_seed: 0,
            split_ratio: (8, 1, 1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::validation("methods", "empty method list"));
        }
        if self.fractions.is_empty() {
            return Err(Error::validation("fractions", "empty fraction list"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("seeds", "empty seed list"));
        }
        for &f in &self.fractions {
            check_fraction(f)?;
        }
        self.config.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: Method,
    pub fraction: f64,
    pub seed: u64,
    pub metrics: Option<MetricsReport>,
    pub final_core_size: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub fraction: f64,
    pub cells_ok: usize,
    pub metrics: BTreeMap<String, MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub fraction: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub samples: usize,
    pub dims: usize,
    pub classes: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: DatasetSummary,
    pub grid: BenchmarkGrid,
    /// Full-data runs, one per seed.
    pub reference: Vec<CellResult>,
    pub reference_summary: SummaryRow,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    /// metric name -> method name -> points ordered by fraction.
    pub series: BTreeMap<String, BTreeMap<String, Vec<SeriesPoint>>>,
    pub failures: usize,
}

impl BenchmarkReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn summary_for(&self, method: Method, fraction: f64) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method && r.fraction == fraction)
    }

    /// Writes one `series_<metric>.csv` per metric with columns
    /// `method,fraction,mean,std`.
    pub fn write_series(&self, dir: &Path) -> Result<()> {
        for (metric, by_method) in &self.series {
            let path = dir.join(format!("series_{metric}.csv"));
            let mut out = String::from("method,fraction,mean,std\n");
            for (method, points) in by_method {
                for p in points {
                    out.push_str(&format!("{method},{},{},{}\n", p.fraction, p.mean, p.std));
                }
            }
            std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub method: Method,
    pub fraction: f64,
    pub seed: u64,
    pub selection_seconds: f64,
    pub training_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTiming {
    pub reference: Vec<CellTiming>,
    pub cells: Vec<CellTiming>,
    pub total_seconds: f64,
}

impl BenchmarkTiming {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub report: BenchmarkReport,
    pub timing: BenchmarkTiming,
}

fn summarize(method: Method, fraction: f64, cells: &[&CellResult]) -> SummaryRow {
    let ok: Vec<&MetricsReport> = cells.iter().filter_map(|c| c.metrics.as_ref()).collect();
    let metrics = Metric::ALL
        .iter()
        .filter_map(|&m| {
            let values: Vec<f64> = ok.iter().map(|r| r.get(m)).collect();
            MeanStd::of(&values).map(|s| (m.name().to_string(), s))
        })
        .collect();
    SummaryRow {
        method,
        fraction,
        cells_ok: ok.len(),
        metrics,
    }
}

fn cell_timing(method: Method, fraction: f64, seed: u64, t: Timing) -> CellTiming {
    CellTiming {
        method,
        fraction,
        seed,
        selection_seconds: t.selection_seconds,
        training_seconds: t.training_seconds,
    }
}

/// Runs the whole grid. Individual cell failures are recorded in the report
/// and do not stop the sweep.
pub fn run_benchmark(dataset: &FeatureDataset, grid: &BenchmarkGrid) -> Result<BenchmarkOutput> {
    grid.validate()?;
    let started = Instant::now();
    let (train, val, test) = dataset.split(grid.split_ratio, grid.split_seed)?;

    let mut reference = Vec::new();
    let mut reference_timing = Vec::new();
    let mut traces: BTreeMap<u64, EpochTrace> = BTreeMap::new();
    for &seed in &grid.seeds {
        let config = TrainConfig {
            seed,
            method: Method::Full,
            fraction: 1.0,
            ..grid.config.clone()
        };
        match train_with_reselection(&train, Some(&test), &config, &Selector::Full) {
            Ok((_, report)) => {
                reference_timing.push(cell_timing(Method::Full, 1.0, seed, report.timing));
                traces.insert(seed, report.trace);
                reference.push(CellResult {
                    method: Method::Full,
                    fraction: 1.0,
                    seed,
                    metrics: report.metrics,
                    final_core_size: report.core_sizes.last().copied(),
                    error: None,
                });
            }
            Err(e) => reference.push(CellResult {
                method: Method::Full,
                fraction: 1.0,
                seed,
                metrics: None,
                final_core_size: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let mut cells = Vec::new();
    let mut cell_timings = Vec::new();
    for &method in &grid.methods {
        for &fraction in &grid.fractions {
            for &seed in &grid.seeds {
                let selector = match method {
                    Method::Full => Ok(Selector::Full),
                    Method::Jscds => Ok(Selector::Jscds(JscdsOptions::default())),
                    Method::Random => Ok(Selector::Random),
                    Method::Moderate => Ok(Selector::Moderate),
                    Method::KCenterGreedy => Ok(Selector::KCenterGreedy),
                    Method::Forgetting => traces
                        .get(&seed)
                        .cloned()
                        .map(Selector::Forgetting)
                        .ok_or_else(|| Error::Config(format!("no full-data trace for seed {seed}"))),
                };
                let config = TrainConfig {
                    seed,
                    method,
                    fraction,
                    ..grid.config.clone()
                };
                let outcome = selector.and_then(|s| train_with_reselection(&train, Some(&test), &config, &s));
                match outcome {
                    Ok((_, report)) => {
                        cell_timings.push(cell_timing(method, fraction, seed, report.timing));
                        cells.push(CellResult {
                            method,
                            fraction,
                            seed,
                            metrics: report.metrics,
                            final_core_size: report.core_sizes.last().copied(),
                            error: None,
                        });
                    }
                    Err(e) => cells.push(CellResult {
                        method,
                        fraction,
                        seed,
                        metrics: None,
                        final_core_size: None,
                        error: Some(e.to_string()),
                    }),
                }
            }
        }
    }

    let reference_refs: Vec<&CellResult> = reference.iter().collect();
    let reference_summary = summarize(Method::Full, 1.0, &reference_refs);
    let mut summary = Vec::new();
    for &method in &grid.methods {
        for &fraction in &grid.fractions {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.method == method && c.fraction == fraction)
                .collect();
            summary.push(summarize(method, fraction, &group));
        }
    }

    let mut series: BTreeMap<String, BTreeMap<String, Vec<SeriesPoint>>> = BTreeMap::new();
    for metric in Metric::ALL {
        let by_method = series.entry(metric.name().to_string()).or_default();
        for row in summary.iter().chain(std::iter::once(&reference_summary)) {
            if let Some(s) = row.metrics.get(metric.name()) {
                by_method.entry(row.method.name().to_string()).or_default().push(SeriesPoint {
                    fraction: row.fraction,
                    mean: s.mean,
                    std: s.std,
                });
            }
        }
        for points in by_method.values_mut() {
            points.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
        }
    }

    let failures = cells.iter().chain(&reference).filter(|c| c.error.is_some()).count();
    let report = BenchmarkReport {
        dataset: DatasetSummary {
            samples: dataset.len(),
            dims: dataset.dims(),
            classes: dataset.num_classes(),
            train: train.len(),
            val: val.len(),
            test: test.len(),
        },
        grid: grid.clone(),
        reference,
        reference_summary,
        cells,
        summary,
        series,
        failures,
    };
    let timing = BenchmarkTiming {
        reference: reference_timing,
        cells: cell_timings,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(BenchmarkOutput { report, timing })
}

/// Whether `values` rises (weakly) to a single peak and then falls (weakly).
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}
