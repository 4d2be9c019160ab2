//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code paths it checks: sums run in different
//! orders, selections are decided by rank counting instead of sorting, and
//! the JSD uses the closed form with `log(2p / (p + q))` terms.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `0.5 * sum p log(2p/(p+q)) + 0.5 * sum q log(2q/(p+q))`.
pub fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut left = 0.0;
    let mut right = 0.0;
    for w in 0..p.len() {
        let denom = p[w] + q[w];
        if p[w] > 0.0 {
            left += p[w] * (2.0 * p[w] / denom).ln();
        }
        if q[w] > 0.0 {
            right += q[w] * (2.0 * q[w] / denom).ln();
        }
    }
    0.5 * left + 0.5 * right
}

pub fn kl_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in (0..p.len()).rev() {
        if p[w] > 0.0 {
            total += p[w] * (p[w].ln() - q[w].ln());
        }
    }
    total
}

pub fn softmax_oracle(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::MIN, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().rev().sum();
    e.iter().map(|x| x / s).collect()
}

/// Pairwise (tree) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

pub fn random_distribution<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let logits: Vec<f64> = (0..d).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    softmax_oracle(&logits)
}

/// `max(1, round_half_away(fraction * n))`.
pub fn expected_k(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    let floor = raw.floor();
    let k = if raw - floor >= 0.5 { floor + 1.0 } else { floor };
    (k as usize).max(1)
}

/// Positions `i` whose key ranks among the `k` smallest, where `before(a, b)`
/// says `a` strictly precedes `b`. Decided by counting, not sorting.
pub fn smallest_k_by_counting(n: usize, k: usize, before: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    (0..n)
        .filter(|&i| (0..n).filter(|&j| j != i && before(j, i)).count() < k)
        .collect()
}

/// Random labeled instance with every class present and shuffled unique ids.
pub struct Instance {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub ids: Vec<u64>,
    pub classes: usize,
}

pub fn random_instance<R: Rng>(rng: &mut R, n_max: usize) -> Instance {
    let classes = rng.random_range(2..=4);
    let n = rng.random_range(classes * 2..=n_max);
    let d = rng.random_range(2..=8);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let labels = (0..n)
        .map(|i| if i < classes { i } else { rng.random_range(0..classes) })
        .collect();
    let mut ids: Vec<u64> = (0..n as u64).map(|i| i * 7 + 3).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    Instance {
        rows,
        labels,
        ids,
        classes,
    }
}

/// JSD-band selection recomputed from scratch. Returns selected ids, sorted.
pub fn jscds_oracle(inst: &Instance, fraction: f64) -> Vec<u64> {
    let n = inst.rows.len();
    let dists: Vec<Vec<f64>> = inst.rows.iter().map(|r| softmax_oracle(r)).collect();
    let d = dists[0].len();
    let mut centers = vec![vec![0.0; d]; inst.classes];
    let mut counts = vec![0usize; inst.classes];
    for i in (0..n).rev() {
        counts[inst.labels[i]] += 1;
        for w in 0..d {
            centers[inst.labels[i]][w] += dists[i][w];
        }
    }
    for c in 0..inst.classes {
        for w in 0..d {
            centers[c][w] /= counts[c] as f64;
        }
    }
    let scores: Vec<f64> = (0..n).map(|i| jsd_oracle(&dists[i], &centers[inst.labels[i]])).collect();
    let avg = pairwise_sum(&scores) / n as f64;
    let gap: Vec<f64> = scores.iter().map(|s| (s - avg).abs()).collect();
    let k = expected_k(fraction, n);
    let mut chosen: Vec<u64> = smallest_k_by_counting(n, k, |a, b| {
        gap[a] < gap[b] || (gap[a] == gap[b] && inst.ids[a] < inst.ids[b])
    })
    .into_iter()
    .map(|i| inst.ids[i])
    .collect();
    chosen.sort_unstable();
    chosen
}

/// Hamilton (largest remainder) apportionment of `k` seats.
pub fn hamilton(counts: &[usize], k: usize) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let quotas: Vec<f64> = counts.iter().map(|&c| (k * c) as f64 / n as f64).collect();
    let mut seats: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = k - seats.iter().sum::<usize>();
    let mut taken = vec![false; counts.len()];
    while left > 0 {
        let mut best: Option<usize> = None;
        for c in 0..counts.len() {
            if taken[c] || seats[c] >= counts[c] {
                continue;
            }
            let r = quotas[c] - quotas[c].floor();
            let better = match best {
                None => true,
                Some(b) => r > quotas[b] - quotas[b].floor(),
            };
            if better {
                best = Some(c);
            }
        }
        let c = best.expect("a class with spare room");
        seats[c] += 1;
        taken[c] = true;
        left -= 1;
    }
    seats
}

/// Moderate recomputed from scratch: per class, the `quota` members whose
/// distance rank lies in the window centered on the median rank.
pub fn moderate_oracle(inst: &Instance, fraction: f64) -> Vec<u64> {
    let n = inst.rows.len();
    let d = inst.rows[0].len();
    let k = expected_k(fraction, n);
    let mut counts = vec![0usize; inst.classes];
    for &l in &inst.labels {
        counts[l] += 1;
    }
    let quotas = hamilton(&counts, k);
    let mut chosen = Vec::new();
    for c in 0..inst.classes {
        let members: Vec<usize> = (0..n).filter(|&i| inst.labels[i] == c).collect();
        let mut centroid = vec![0.0; d];
        for &i in members.iter().rev() {
            for w in 0..d {
                centroid[w] += inst.rows[i][w] / members.len() as f64;
            }
        }
        let dist: Vec<f64> = members
            .iter()
            .map(|&i| {
                (0..d)
                    .map(|w| (inst.rows[i][w] - centroid[w]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let m = members.len();
        let start = (m - quotas[c]) / 2;
        for a in 0..m {
            let rank = (0..m)
                .filter(|&b| b != a && (dist[b] < dist[a] || (dist[b] == dist[a] && inst.ids[members[b]] < inst.ids[members[a]])))
                .count();
            if rank >= start && rank < start + quotas[c] {
                chosen.push(inst.ids[members[a]]);
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Checks every greedy step attains the max-min distance by exhaustive scan.
/// Returns a description of the first violation.
pub fn check_kcenter_steps(rows: &[Vec<f64>], ids: &[u64], order: &[usize]) -> Result<(), String> {
    let first = (0..rows.len()).min_by_key(|&i| ids[i]).unwrap();
    if order.first() != Some(&first) {
        return Err(format!("start {:?} is not the smallest id row {first}", order.first()));
    }
    for step in 1..order.len() {
        let selected = &order[..step];
        let min_to_selected = |i: usize| selected.iter().map(|&s| euclid(&rows[i], &rows[s])).fold(f64::INFINITY, f64::min);
        let best = (0..rows.len())
            .filter(|i| !selected.contains(i))
            .map(min_to_selected)
            .fold(f64::NEG_INFINITY, f64::max);
        let got = min_to_selected(order[step]);
        if selected.contains(&order[step]) {
            return Err(format!("step {step} repeats row {}", order[step]));
        }
        if got < best - 1e-12 * best.max(1.0) {
            return Err(format!("step {step}: chose min-distance {got}, best is {best}"));
        }
    }
    Ok(())
}

/// Correct-to-incorrect transitions, or `None` if never correct.
pub fn forgetting_oracle(flags: &[bool]) -> Option<usize> {
    let mut ever = false;
    let mut events = 0;
    for e in 0..flags.len() {
        ever |= flags[e];
        if e > 0 && flags[e - 1] && !flags[e] {
            events += 1;
        }
    }
    ever.then_some(events)
}

/// Max relative error between analytic and central-difference gradients.
/// Builds a random tiny classifier and batch from `seed`.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=8);
    let h = rng.random_range(1..=8);
    let j = rng.random_range(2..=8);
    let n = rng.random_range(1..=6);
    let mut model = jscds::trainer::init_model(d, h, j, seed).unwrap();
    for p in model.params_mut() {
        *p = rng.sample::<f64, _>(StandardNormal);
    }
    let x = jscds::Matrix::new(n, d, (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).unwrap();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..j)).collect();
    let rows: Vec<usize> = (0..n).collect();
    let (_, grad) = jscds::trainer::loss_and_grad(&model, &x, &labels, &rows).unwrap();

    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..model.num_params() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + step;
        let (up, _) = jscds::trainer::loss_and_grad(&model, &x, &labels, &rows).unwrap();
        model.params_mut()[i] = orig - step;
        let (down, _) = jscds::trainer::loss_and_grad(&model, &x, &labels, &rows).unwrap();
        model.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    worst
}
