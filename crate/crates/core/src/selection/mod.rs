//! Core-set selectors.
//!
//! Every selector is a pure function of its inputs and returns exactly
//! `max(1, round(fraction * n))` unique ids. Ties anywhere break toward the
//! smaller sample id.

mod forgetting;
mod jscds;
mod kcenter;
mod moderate;
mod random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forgetting::{forgetting_count, forgetting_counts, load_trace, save_trace, select_forgetting, EpochTrace};
pub use jscds::{avg_mi, cluster_centers, jscds_scores, select_jscds, select_jscds_with, JscdsOptions, JscdsScope, JscdsWindow};
pub use kcenter::{kcenter_greedy_order, select_kcenter_greedy};
pub use moderate::{centroid_distances, select_moderate};
pub use random::select_random;

use crate::data::{FeatureDataset, Matrix, SelectionResult};
use crate::divergence::ProbabilityVector;
use crate::error::{Error, Result};

/// Per-class center distributions (means of member distributions).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCenterSet {
    centers: Vec<ProbabilityVector>,
    counts: Vec<usize>,
}

impl ClusterCenterSet {
    pub fn new(centers: Vec<ProbabilityVector>, counts: Vec<usize>) -> Result<Self> {
        if centers.len() != counts.len() {
            return Err(Error::shape("cluster centers", counts.len(), centers.len()));
        }
        if let Some(j) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Config(format!("class {j} has no samples")));
        }
        Ok(Self { centers, counts })
    }

    pub fn center(&self, class: usize) -> Option<&ProbabilityVector> {
        self.centers.get(class)
    }

    pub fn centers(&self) -> &[ProbabilityVector] {
        &self.centers
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.centers.len()
    }
}

/// Selector names accepted on the command line and written into reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Full,
    Jscds,
    Random,
    Moderate,
    #[serde(rename = "kcenter")]
    KCenterGreedy,
    Forgetting,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Full,
        Method::Jscds,
        Method::Random,
        Method::Moderate,
        Method::KCenterGreedy,
        Method::Forgetting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Jscds => "jscds",
            Method::Random => "random",
            Method::Moderate => "moderate",
            Method::KCenterGreedy => "kcenter",
            Method::Forgetting => "forgetting",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "none" => Ok(Method::Full),
            "jscds" => Ok(Method::Jscds),
            "random" => Ok(Method::Random),
            "moderate" => Ok(Method::Moderate),
            "kcenter" | "kcentergreedy" | "kcenter_greedy" => Ok(Method::KCenterGreedy),
            "forgetting" => Ok(Method::Forgetting),
            other => Err(Error::validation("method", format!("unknown selector {other:?}"))),
        }
    }
}

/// A configured selector, ready to be invoked by the training loop.
#[derive(Debug, Clone)]
pub enum Selector {
    /// No pruning: always the whole dataset.
    Full,
    Jscds(JscdsOptions),
    Random,
    Moderate,
    KCenterGreedy,
    Forgetting(EpochTrace),
}

impl Selector {
    pub fn method(&self) -> Method {
        match self {
            Selector::Full => Method::Full,
            Selector::Jscds(_) => Method::Jscds,
            Selector::Random => Method::Random,
            Selector::Moderate => Method::Moderate,
            Selector::KCenterGreedy => Method::KCenterGreedy,
            Selector::Forgetting(_) => Method::Forgetting,
        }
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(self, Selector::Jscds(_) | Selector::Moderate | Selector::KCenterGreedy)
    }

    pub fn select(
        &self,
        dataset: &FeatureDataset,
        embeddings: Option<&Matrix>,
        fraction: f64,
        seed: u64,
    ) -> Result<SelectionResult> {
        let embeddings = || {
            embeddings.ok_or_else(|| Error::Config(format!("selector {} needs embeddings", self.method())))
        };
        match self {
            Selector::Full => SelectionResult::new(dataset.ids().to_vec(), 1.0, Method::Full.name(), seed),
            Selector::Jscds(opts) => select_jscds_with(dataset, embeddings()?, fraction, seed, opts),
            Selector::Random => select_random(dataset, fraction, seed),
            Selector::Moderate => select_moderate(dataset, embeddings()?, fraction, seed),
            Selector::KCenterGreedy => select_kcenter_greedy(dataset, embeddings()?, fraction, seed),
            Selector::Forgetting(trace) => select_forgetting(dataset, trace, fraction, seed),
        }
    }
}

pub(crate) fn check_embeddings(dataset: &FeatureDataset, embeddings: &Matrix) -> Result<()> {
    if embeddings.rows() != dataset.len() {
        return Err(Error::shape("embedding rows", dataset.len(), embeddings.rows()));
    }
    if embeddings.cols() == 0 {
        return Err(Error::shape("embedding dims", 1, 0));
    }
    if embeddings.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite embedding value".into()));
    }
    Ok(())
}

/// Splits `k` across classes in proportion to `counts` by largest remainder.
/// Remainder ties go to the smaller class id; no quota exceeds its class.
pub fn apportion(counts: &[usize], k: usize) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return vec![0; counts.len()];
    }
    let exact: Vec<f64> = counts.iter().map(|&c| k as f64 * c as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().zip(counts).map(|(&e, &c)| (e.floor() as usize).min(c)).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = k.saturating_sub(quotas.iter().sum());
    while remaining > 0 {
        let before = remaining;
        for &c in &order {
            if remaining == 0 {
                break;
            }
            if quotas[c] < counts[c] {
                quotas[c] += 1;
                remaining -= 1;
            }
        }
        if remaining == before {
            break;
        }
    }
    quotas
}

/// Row indices grouped by class label.
pub(crate) fn rows_by_class(dataset: &FeatureDataset) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); dataset.num_classes()];
    for (row, &label) in dataset.labels().iter().enumerate() {
        groups[label].push(row);
    }
    groups
}

pub(crate) fn result_from_rows(
    dataset: &FeatureDataset,
    rows: &[usize],
    fraction: f64,
    method: Method,
    seed: u64,
) -> Result<SelectionResult> {
    let ids = rows.iter().map(|&r| dataset.ids()[r]).collect();
    SelectionResult::new(ids, fraction, method.name(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_matches_total() {
        assert_eq!(apportion(&[5, 5], 3), vec![2, 1]);
        assert_eq!(apportion(&[10, 20, 30], 30), vec![5, 10, 15]);
        assert_eq!(apportion(&[1, 1, 1], 1), vec![1, 0, 0]);
        assert_eq!(apportion(&[3, 3, 4], 7), vec![2, 2, 3]);
        for k in 0..=10 {
            assert_eq!(apportion(&[3, 3, 4], k).iter().sum::<usize>(), k);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
