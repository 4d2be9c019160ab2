use super::{check_embeddings, result_from_rows, Method};
use crate::data::{check_fraction, core_set_size, FeatureDataset, Matrix, SelectionResult};
use crate::error::Result;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Rows in greedy max-min order: starts from the smallest id, then keeps
/// adding the row farthest from everything chosen so far.
pub fn kcenter_greedy_order(embeddings: &Matrix, ids: &[u64], k: usize) -> Vec<usize> {
    let n = embeddings.rows();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let mut chosen = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let mut order = Vec::with_capacity(k);
    let mut next = (0..n).min_by_key(|&r| ids[r]).expect("non-empty");
    loop {
        chosen[next] = true;
        order.push(next);
        if order.len() == k {
            break;
        }
        let center = embeddings.row(next);
        let mut best: Option<usize> = None;
        for r in 0..n {
            if chosen[r] {
                continue;
            }
            let d = sq_dist(embeddings.row(r), center);
            if d < min_dist[r] {
                min_dist[r] = d;
            }
            best = match best {
                None => Some(r),
                Some(b) if min_dist[r] > min_dist[b] || (min_dist[r] == min_dist[b] && ids[r] < ids[b]) => Some(r),
                keep => keep,
            };
        }
        next = best.expect("k <= n leaves a candidate");
    }
    order
}

/// Greedy k-center cover in Euclidean embedding space. `seed` is recorded
/// only; the start point is the smallest id.
pub fn select_kcenter_greedy(
    dataset: &FeatureDataset,
    embeddings: &Matrix,
    fraction: f64,
    seed: u64,
) -> Result<SelectionResult> {
    check_fraction(fraction)?;
    check_embeddings(dataset, embeddings)?;
    let k = core_set_size(fraction, dataset.len());
    let rows = kcenter_greedy_order(embeddings, dataset.ids(), k);
    result_from_rows(dataset, &rows, fraction, Method::KCenterGreedy, seed)
}
