use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot sample {requested} documents from a corpus of {available}")]
pub struct SampleError {
    pub requested: usize,
    pub available: usize,
}

/// Indices of a uniform sample of `n` items out of `len`, without
/// replacement, in ascending order. The same seed gives the same sample.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>, SampleError> {
    if n > len {
        return Err(SampleError {
            requested: n,
            available: len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, len, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// A seeded sample of `n` items, kept in their original order.
pub fn sample_split<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>, SampleError> {
    Ok(sample_indices(items.len(), n, seed)?
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}
