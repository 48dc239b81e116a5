//! Seeded randomness. One master seed per run; every concurrent agent (drop,
//! ant, walker, vehicle-route request) draws from its own substream derived
//! here, so results never depend on scheduling or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream cipher RNG: fast, portable, identical output on every platform.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the substream seed for agent `(a, b)` of a run keyed by `seed`.
/// Stable mixing; distinct `(a, b)` pairs get decorrelated streams.
pub fn substream(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(seed ^ splitmix64(a ^ splitmix64(b)))
}

/// Draws a Poisson-distributed count with the given mean (Knuth's product
/// method; exact, and fast for the small per-tick means the simulator uses).
pub fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    debug_assert!(mean >= 0.0 && mean.is_finite());
    if mean <= 0.0 {
        return 0;
    }
    let limit = (-mean).exp();
    let mut product = 1.0;
    let mut count = 0u64;
    loop {
        product *= rng.gen::<f64>();
        if product <= limit {
            return count;
        }
        count += 1;
    }
}
