use serde::{Deserialize, Serialize};

use super::{apportion, check_embeddings, result_from_rows, rows_by_class, ClusterCenterSet, Method};
use crate::data::{check_fraction, core_set_size, FeatureDataset, Matrix, SelectionResult};
use crate::divergence::{mi_scores, softmax_rows, ProbabilityVector, ScoreTable};
use crate::error::{Error, Result};

/// How the kept band around the average score is cut.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JscdsWindow {
    /// The `k` samples with smallest `|MI - AvgMI|`.
    #[default]
    NearestToAverage,
    /// A contiguous run of `k` samples in descending-MI rank order, centered
    /// on the sample nearest the average.
    RankWindow,
}

/// Whether the band is cut over the whole pool or per class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JscdsScope {
    #[default]
    Global,
    /// Per-class quotas by largest remainder, each filled by the members
    /// nearest the global average.
    Stratified,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JscdsOptions {
    pub window: JscdsWindow,
    pub scope: JscdsScope,
}

/// Mean distribution of each class.
pub fn cluster_centers(distributions: &[ProbabilityVector], labels: &[usize], num_classes: usize) -> Result<ClusterCenterSet> {
    if distributions.len() != labels.len() {
        return Err(Error::shape("cluster_centers labels", distributions.len(), labels.len()));
    }
    let dims = distributions.first().map_or(0, ProbabilityVector::len);
    let mut sums = vec![vec![0.0; dims]; num_classes];
    let mut counts = vec![0usize; num_classes];
    for (dist, &label) in distributions.iter().zip(labels) {
        if dist.len() != dims {
            return Err(Error::shape("cluster_centers dims", dims, dist.len()));
        }
        let sum = sums
            .get_mut(label)
            .ok_or_else(|| Error::Config(format!("label {label} out of range for {num_classes} classes")))?;
        for (s, &p) in sum.iter_mut().zip(dist.as_slice()) {
            *s += p;
        }
        counts[label] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Config(format!("class {empty} has no samples")));
    }
    let centers = sums
        .into_iter()
        .zip(&counts)
        .map(|(sum, &count)| ProbabilityVector::from_raw(sum.into_iter().map(|s| s / count as f64).collect()))
        .collect();
    ClusterCenterSet::new(centers, counts)
}

/// Arithmetic mean of all scores.
pub fn avg_mi(scores: &ScoreTable) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::validation("scores", "cannot average an empty score table"));
    }
    Ok(scores.scores().iter().sum::<f64>() / scores.len() as f64)
}

/// Softmax each embedding row, build class centers, and score every sample
/// by its JSD to its own class center.
pub fn jscds_scores(dataset: &FeatureDataset, embeddings: &Matrix) -> Result<ScoreTable> {
    check_embeddings(dataset, embeddings)?;
    let distributions = softmax_rows(embeddings)?;
    let centers = cluster_centers(&distributions, dataset.labels(), dataset.num_classes())?;
    mi_scores(&distributions, dataset.labels(), dataset.ids(), &centers)
}

pub fn select_jscds(dataset: &FeatureDataset, embeddings: &Matrix, fraction: f64, seed: u64) -> Result<SelectionResult> {
    select_jscds_with(dataset, embeddings, fraction, seed, &JscdsOptions::default())
}

/// `seed` is recorded in the result but not used.
pub fn select_jscds_with(
    dataset: &FeatureDataset,
    embeddings: &Matrix,
    fraction: f64,
    seed: u64,
    opts: &JscdsOptions,
) -> Result<SelectionResult> {
    check_fraction(fraction)?;
    let table = jscds_scores(dataset, embeddings)?;
    let avg = avg_mi(&table)?;
    let k = core_set_size(fraction, dataset.len());
    let ids = dataset.ids();
    let scores = table.scores();

    let rows = match opts.scope {
        JscdsScope::Global => {
            let pool: Vec<usize> = (0..dataset.len()).collect();
            band(&pool, scores, ids, avg, k, opts.window)
        }
        JscdsScope::Stratified => {
            let groups = rows_by_class(dataset);
            let counts: Vec<usize> = groups.iter().map(Vec::len).collect();
            let quotas = apportion(&counts, k);
            groups
                .iter()
                .zip(quotas)
                .flat_map(|(pool, q)| band(pool, scores, ids, avg, q, opts.window))
                .collect()
        }
    };
    Ok(result_from_rows(dataset, &rows, fraction, Method::Jscds, seed)?.with_scores(table))
}

fn band(pool: &[usize], scores: &[f64], ids: &[u64], avg: f64, k: usize, window: JscdsWindow) -> Vec<usize> {
    if k == 0 || pool.is_empty() {
        return Vec::new();
    }
    let gap = |r: usize| (scores[r] - avg).abs();
    match window {
        JscdsWindow::NearestToAverage => {
            let mut order = pool.to_vec();
            order.sort_by(|&a, &b| gap(a).total_cmp(&gap(b)).then(ids[a].cmp(&ids[b])));
            order.truncate(k);
            order
        }
        JscdsWindow::RankWindow => {
            let mut ranked = pool.to_vec();
            ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(ids[a].cmp(&ids[b])));
            let pivot = (0..ranked.len())
                .min_by(|&a, &b| {
                    gap(ranked[a])
                        .total_cmp(&gap(ranked[b]))
                        .then(ids[ranked[a]].cmp(&ids[ranked[b]]))
                })
                .expect("non-empty pool");
            let k = k.min(ranked.len());
            let start = pivot.saturating_sub(k / 2).min(ranked.len() - k);
            ranked[start..start + k].to_vec()
        }
    }
}
