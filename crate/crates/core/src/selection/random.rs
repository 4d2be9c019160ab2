use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{result_from_rows, Method};
use crate::data::{check_fraction, core_set_size, FeatureDataset, SelectionResult};
use crate::error::Result;

/// Uniform sample without replacement, seeded.
pub fn select_random(dataset: &FeatureDataset, fraction: f64, seed: u64) -> Result<SelectionResult> {
    check_fraction(fraction)?;
    let k = core_set_size(fraction, dataset.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = index::sample(&mut rng, dataset.len(), k).into_vec();
    result_from_rows(dataset, &rows, fraction, Method::Random, seed)
}
