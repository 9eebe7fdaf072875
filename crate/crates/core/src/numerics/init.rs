//! Seeded parameter initialization.
//!
//! All randomness flows through ChaCha8 streams keyed by an explicit seed, so
//! identical seeds give bitwise-identical parameters on every platform. Leaf
//! seeds are derived from (root seed, path), making initialization independent
//! of registration order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::tensor::Tensor;
use crate::NumericsError;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a leaf seed from a root seed and a parameter path.
pub fn derive_seed(root: u64, path: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(path.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Xavier (Glorot) uniform initialization for a 2-D (fan_in, fan_out) shape:
/// values uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
pub fn xavier_init(shape: &[usize], seed: u64) -> Result<Tensor, NumericsError> {
    if shape.len() != 2 {
        return Err(NumericsError::UnsupportedShape {
            expected: "2-D (fan_in, fan_out)",
            got: shape.to_vec(),
        });
    }
    let (fan_in, fan_out) = (shape[0], shape[1]);
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = seeded_rng(seed);
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Ok(Tensor::new(shape.to_vec(), data))
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Uniform values in [-bound, bound]; used for embeddings and row tokens.
pub fn uniform_init(shape: &[usize], bound: f64, seed: u64) -> Tensor {
    let mut rng = seeded_rng(seed);
    let numel: usize = shape.iter().product();
    let data = (0..numel).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data)
}
