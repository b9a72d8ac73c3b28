use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// `n` coordinates uniform in `[-1, 1)`, drawn from SplitMix64 seeded with
/// `seed`. Each coordinate uses the top 53 bits of one output.
pub fn random_start(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            2.0 * unit - 1.0
        })
        .collect()
}
