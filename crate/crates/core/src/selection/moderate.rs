//! Moderate coreset: keep, per class, the samples whose distance to the class
//! centroid sits around the class median distance.

use super::{apportion, check_embeddings, result_from_rows, rows_by_class, Method};
use crate::data::{check_fraction, core_set_size, FeatureDataset, Matrix, SelectionResult};
use crate::error::Result;

/// Euclidean distance of every row to the centroid of its class, in row order.
pub fn centroid_distances(dataset: &FeatureDataset, embeddings: &Matrix) -> Result<Vec<f64>> {
    check_embeddings(dataset, embeddings)?;
    let dims = embeddings.cols();
    let mut centroids = vec![vec![0.0; dims]; dataset.num_classes()];
    let counts = dataset.class_counts();
    for (row, &label) in embeddings.iter_rows().zip(dataset.labels()) {
        for (c, &x) in centroids[label].iter_mut().zip(row) {
            *c += x;
        }
    }
    for (centroid, &count) in centroids.iter_mut().zip(&counts) {
        for c in centroid.iter_mut() {
            *c /= count as f64;
        }
    }
    Ok(embeddings
        .iter_rows()
        .zip(dataset.labels())
        .map(|(row, &label)| {
            row.iter()
                .zip(&centroids[label])
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

pub fn select_moderate(dataset: &FeatureDataset, embeddings: &Matrix, fraction: f64, seed: u64) -> Result<SelectionResult> {
    check_fraction(fraction)?;
    let distances = centroid_distances(dataset, embeddings)?;
    let k = core_set_size(fraction, dataset.len());
    let groups = rows_by_class(dataset);
    let counts: Vec<usize> = groups.iter().map(Vec::len).collect();
    let quotas = apportion(&counts, k);
    let ids = dataset.ids();

    let mut rows = Vec::with_capacity(k);
    for (mut members, quota) in groups.into_iter().zip(quotas) {
        members.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(ids[a].cmp(&ids[b])));
        // window of `quota` centered on the median position
        let start = (members.len() - quota) / 2;
        rows.extend_from_slice(&members[start..start + quota]);
    }
    result_from_rows(dataset, &rows, fraction, Method::Moderate, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(labels: Vec<usize>) -> FeatureDataset {
        let n = labels.len();
        FeatureDataset::new(Matrix::zeros(n, 1), labels, (0..n as u64).collect(), 2).unwrap()
    }

    fn column(xs: &[f64]) -> Matrix {
        Matrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn keeps_the_median_sample() {
        // class 0 at {0,1,5}: centroid 2, distances {2,1,3}, median is id 0
        // class 1 at {100,101,102}: distances {1,0,1}, median is id 3
        let ds = dataset(vec![0, 0, 0, 1, 1, 1]);
        let emb = column(&[0.0, 1.0, 5.0, 100.0, 101.0, 102.0]);
        let r = select_moderate(&ds, &emb, 1.0 / 3.0, 0).unwrap();
        assert_eq!(r.indices(), &[0, 3]);
    }

    #[test]
    fn one_dimensional_median_window() {
        // class 0 at {0,1,2,3,10}: centroid 3.2, distances {3.2,2.2,1.2,0.2,6.8}
        // distance order: ids 3,2,1,0,4; the 3-wide window centered on the median is {2,1,0}
        let ds = dataset(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let emb = column(&[0.0, 1.0, 2.0, 3.0, 10.0, 50.0, 51.0, 52.0, 53.0, 54.0]);
        let d = centroid_distances(&ds, &emb).unwrap();
        for (a, b) in d.iter().zip([3.2, 2.2, 1.2, 0.2, 6.8]) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = select_moderate(&ds, &emb, 0.6, 0).unwrap();
        let class0: Vec<u64> = r.indices().iter().copied().filter(|&id| id < 5).collect();
        assert_eq!(class0, vec![0, 1, 2]);
        assert_eq!(r.len(), 6);
    }

    #[test]
    fn full_fraction_is_everything() {
        let ds = dataset(vec![0, 1, 0, 1]);
        let emb = column(&[0.0, 1.0, 5.0, 2.0]);
        assert_eq!(select_moderate(&ds, &emb, 1.0, 0).unwrap().indices(), &[0, 1, 2, 3]);
    }
}
