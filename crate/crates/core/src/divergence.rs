//! Probability vectors, KL and Jensen-Shannon divergence, and per-sample
//! scoring against class centers.
//!
//! All logarithms are natural, so `jsd` lies in `[0, ln 2]`. The per-sample
//! score is called "mutual information" (MI) throughout the crate: it is the
//! JSD between a sample's distribution and its class center, not the
//! classical `I(X;Y)`.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::selection::ClusterCenterSet;

/// Lower clamp applied to softmax outputs before renormalization.
pub const EPS_FLOOR: f64 = 1e-12;

/// Tolerance on `sum == 1` accepted by [`ProbabilityVector::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A distribution over embedding dimensions: every entry at least
/// [`EPS_FLOOR`], entries summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("distribution", "empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < EPS_FLOOR) {
            return Err(Error::validation(
                "distribution",
                format!("entry {v} is below the floor {EPS_FLOOR:e} or not finite"),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation("distribution", format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Used for means of valid distributions, which stay valid.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Numerically stable softmax, clamped at [`EPS_FLOOR`] and renormalized.
pub fn softmax(v: &[f64]) -> Result<ProbabilityVector> {
    if v.is_empty() {
        return Err(Error::Numeric("softmax of an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("softmax input is not finite".into()));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    let mut floored = false;
    for p in &mut out {
        *p /= sum;
        if *p < EPS_FLOOR {
            *p = EPS_FLOOR;
            floored = true;
        }
    }
    if floored {
        let sum: f64 = out.iter().sum();
        for p in &mut out {
            *p /= sum;
        }
    }
    Ok(ProbabilityVector(out))
}

/// Softmax of every row.
pub fn softmax_rows(m: &Matrix) -> Result<Vec<ProbabilityVector>> {
    m.iter_rows().map(softmax).collect()
}

fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pw, &qw)| if pw == 0.0 { 0.0 } else { pw * (pw / qw).ln() })
        .sum()
}

/// `KL(p || q)` in nats.
pub fn kl(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape("kl", p.len(), q.len()));
    }
    Ok(kl_slices(&p.0, &q.0))
}

/// Jensen-Shannon divergence, `KL(p||g)/2 + KL(q||g)/2` with `g = (p+q)/2`.
pub fn jsd(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape("jsd", p.len(), q.len()));
    }
    Ok(jsd_slices(&p.0, &q.0))
}

pub(crate) fn jsd_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pw, &qw) in p.iter().zip(q) {
        let g = 0.5 * (pw + qw);
        let p_term = if pw > 0.0 { pw * (pw / g).ln() } else { 0.0 };
        let q_term = if qw > 0.0 { qw * (qw / g).ln() } else { 0.0 };
        // a + b == b + a in IEEE arithmetic, so swapping p and q is exact
        total += p_term + q_term;
    }
    0.5 * total
}

/// Which end of a score ordering marks the samples a method cares about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDirection {
    /// Larger divergence from the class center, more ambiguous sample.
    HigherIsAmbiguous,
    /// Larger score, more often forgotten.
    HigherIsForgettable,
    /// Larger distance to the class centroid.
    HigherIsFarther,
}

/// Per-sample scores, aligned with a dataset's row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    ids: Vec<u64>,
    scores: Vec<f64>,
    method: String,
    direction: ScoreDirection,
}

impl ScoreTable {
    pub fn new(ids: Vec<u64>, scores: Vec<f64>, method: impl Into<String>, direction: ScoreDirection) -> Result<Self> {
        if ids.len() != scores.len() {
            return Err(Error::shape("score table", ids.len(), scores.len()));
        }
        Ok(Self {
            ids,
            scores,
            method: method.into(),
            direction,
        })
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn direction(&self) -> ScoreDirection {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<f64> {
        self.ids.iter().position(|&i| i == id).map(|p| self.scores[p])
    }

    /// (min, mean, max), or `None` when empty.
    pub fn summary(&self) -> Option<(f64, f64, f64)> {
        if self.scores.is_empty() {
            return None;
        }
        let min = self.scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = self.scores.iter().sum::<f64>() / self.scores.len() as f64;
        Some((min, mean, max))
    }
}

/// JSD of each sample's distribution against the center of its class.
pub fn mi_scores(
    distributions: &[ProbabilityVector],
    labels: &[usize],
    ids: &[u64],
    centers: &ClusterCenterSet,
) -> Result<ScoreTable> {
    if distributions.len() != labels.len() {
        return Err(Error::shape("mi_scores labels", distributions.len(), labels.len()));
    }
    if distributions.len() != ids.len() {
        return Err(Error::shape("mi_scores ids", distributions.len(), ids.len()));
    }
    let scores = distributions
        .iter()
        .zip(labels)
        .map(|(dist, &label)| {
            let center = centers
                .center(label)
                .ok_or_else(|| Error::Config(format!("no cluster center for class {label}")))?;
            if center.len() != dist.len() {
                return Err(Error::shape("mi_scores dims", center.len(), dist.len()));
            }
            let s = jsd_slices(dist.as_slice(), center.as_slice());
            if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::Numeric(format!("non-finite score for class {label}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreTable::new(ids.to_vec(), scores, "jscds", ScoreDirection::HigherIsAmbiguous)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap().as_slice(), &[0.5, 0.5]);
        for c in [-700.0, -3.0, 0.0, 12.5, 1e6] {
            let p = softmax(&[c; 4]).unwrap();
            for &x in p.as_slice() {
                assert!((x - 0.25).abs() < 1e-15);
            }
        }
        let p = softmax(&[1f64.ln(), 3f64.ln()]).unwrap();
        assert!((p.as_slice()[0] - 0.25).abs() < 1e-15);
        assert!((p.as_slice()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(softmax(&[0.0, f64::NAN]), Err(Error::Numeric(_))));
        assert!(matches!(softmax(&[f64::INFINITY]), Err(Error::Numeric(_))));
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn softmax_floors_underflow() {
        let p = softmax(&[0.0, -1000.0]).unwrap();
        assert!(p.as_slice()[1] >= EPS_FLOOR * (1.0 - 1e-12));
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = pv(&[0.5, 0.5]);
        let q = pv(&[0.25, 0.75]);
        assert!(kl(&p, &p).unwrap().abs() < 1e-12);
        // direct summation of p ln(p/q)
        let pq = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let qp = 0.25 * (0.25f64 / 0.5).ln() + 0.75 * (0.75f64 / 0.5).ln();
        assert!((kl(&p, &q).unwrap() - pq).abs() < 1e-15);
        assert!((kl(&q, &p).unwrap() - qp).abs() < 1e-15);
        assert!((pq - 0.143841).abs() < 1e-6);
        assert!((qp - 0.130812).abs() < 1e-6);
    }

    #[test]
    fn jsd_examples() {
        let p = pv(&[0.5, 0.5]);
        let q = pv(&[0.25, 0.75]);
        assert!(jsd(&p, &p).unwrap().abs() < 1e-12);
        // direct summation over both KL terms against the midpoint (0.375, 0.625)
        assert!((jsd(&p, &q).unwrap() - 0.033_822_075_568_605_2).abs() < 1e-12);
        let e = EPS_FLOOR;
        let a = pv(&[1.0 - e, e]);
        let b = pv(&[e, 1.0 - e]);
        assert!((jsd(&a, &b).unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let p = pv(&[0.5, 0.5]);
        let q = pv(&[0.2, 0.3, 0.5]);
        assert!(matches!(kl(&p, &q), Err(Error::Shape { .. })));
        assert!(matches!(jsd(&p, &q), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_mass_terms_vanish() {
        assert!((kl_slices(&[0.0, 1.0], &[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.0]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
    }

    #[test]
    fn mi_scores_missing_center_is_config_error() {
        let centers = ClusterCenterSet::new(vec![pv(&[0.5, 0.5])], vec![1]).unwrap();
        let d = vec![pv(&[0.5, 0.5]), pv(&[0.3, 0.7])];
        let err = mi_scores(&d, &[0, 1], &[0, 1], &centers).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
