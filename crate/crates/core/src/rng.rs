//! Per-throw random streams.
//!
//! Every throw draws from its own ChaCha8 stream keyed by the experiment
//! seed and selected by the throw id, so the draws of throw `i` do not
//! depend on how throws are distributed over workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type ThrowRng = ChaCha8Rng;

pub fn throw_stream(seed: u64, throw_id: u64) -> ThrowRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(throw_id);
    rng
}

/// Bernoulli draw: true with probability `p`.
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Index drawn from non-negative `weights` summing to one.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // rounding left u above the cumulative sum
    last_positive
}
