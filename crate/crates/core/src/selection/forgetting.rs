//! Forgetting-event counts from per-epoch correctness traces.
//!
//! Trace files are comma-separated with header `id,e0,e1,...` and one 0/1
//! flag per epoch.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{result_from_rows, Method};
use crate::data::{check_fraction, core_set_size, FeatureDataset, SelectionResult};
use crate::divergence::{ScoreDirection, ScoreTable};
use crate::error::{Error, Result};

/// Per-sample correctness over the epochs of a training run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochTrace {
    ids: Vec<u64>,
    flags: Vec<Vec<bool>>,
}

impl EpochTrace {
    pub fn new(ids: Vec<u64>, flags: Vec<Vec<bool>>) -> Result<Self> {
        if ids.len() != flags.len() {
            return Err(Error::shape("trace rows", ids.len(), flags.len()));
        }
        let epochs = flags.first().map_or(0, Vec::len);
        if let Some(bad) = flags.iter().find(|f| f.len() != epochs) {
            return Err(Error::shape("trace epochs", epochs, bad.len()));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation("trace", format!("duplicate id {}", w[0])));
        }
        Ok(Self { ids, flags })
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn flags(&self) -> &[Vec<bool>] {
        &self.flags
    }

    pub fn epochs(&self) -> usize {
        self.flags.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Correctness sequence for `id`.
    pub fn get(&self, id: u64) -> Option<&[bool]> {
        self.ids.iter().position(|&i| i == id).map(|p| self.flags[p].as_slice())
    }
}

/// Number of correct-to-incorrect transitions; `None` when the sample was
/// never classified correctly.
pub fn forgetting_count(flags: &[bool]) -> Option<usize> {
    if !flags.iter().any(|&c| c) {
        return None;
    }
    Some(flags.windows(2).filter(|w| w[0] && !w[1]).count())
}

/// Forgetting counts for every dataset row; never-learned samples score
/// `+inf`.
pub fn forgetting_counts(dataset: &FeatureDataset, trace: &EpochTrace) -> Result<ScoreTable> {
    if trace.epochs() < 2 {
        return Err(Error::validation("trace", format!("need at least 2 epochs, got {}", trace.epochs())));
    }
    if trace.len() != dataset.len() {
        return Err(Error::validation(
            "trace",
            format!("trace has {} samples, dataset has {}", trace.len(), dataset.len()),
        ));
    }
    let by_id: HashMap<u64, &[bool]> = trace.ids.iter().copied().zip(trace.flags.iter().map(Vec::as_slice)).collect();
    let scores = dataset
        .ids()
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .map(|flags| forgetting_count(flags).map_or(f64::INFINITY, |c| c as f64))
                .ok_or_else(|| Error::validation("trace", format!("dataset id {id} missing from trace")))
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreTable::new(dataset.ids().to_vec(), scores, "forgetting", ScoreDirection::HigherIsForgettable)
}

/// Keeps the `k` most-forgotten samples. `seed` is recorded only.
pub fn select_forgetting(dataset: &FeatureDataset, trace: &EpochTrace, fraction: f64, seed: u64) -> Result<SelectionResult> {
    check_fraction(fraction)?;
    let table = forgetting_counts(dataset, trace)?;
    let k = core_set_size(fraction, dataset.len());
    let ids = dataset.ids();
    let scores = table.scores();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(ids[a].cmp(&ids[b])));
    order.truncate(k);
    Ok(result_from_rows(dataset, &order, fraction, Method::Forgetting, seed)?.with_scores(table))
}

pub fn save_trace(trace: &EpochTrace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = String::from("id");
    for e in 0..trace.epochs() {
        header.push_str(&format!(",e{e}"));
    }
    writeln!(w, "{header}").map_err(io)?;
    for (id, flags) in trace.ids.iter().zip(&trace.flags) {
        let mut line = id.to_string();
        for &f in flags {
            line.push_str(if f { ",1" } else { ",0" });
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_trace(path: &Path) -> Result<EpochTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let header = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "id" {
        return Err(Error::parse(path, 1, "header must be id,e0,e1,..."));
    }
    let epochs = header.len() - 1;
    let mut ids = Vec::new();
    let mut flags = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != epochs + 1 {
            return Err(Error::parse(path, line, format!("expected {} columns, found {}", epochs + 1, record.len())));
        }
        let id = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad id {:?}", &record[0])))?;
        let row = record
            .iter()
            .skip(1)
            .map(|f| match f.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::parse(path, line, format!("flag must be 0 or 1, found {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ids.push(id);
        flags.push(row);
    }
    EpochTrace::new(ids, flags)
}
