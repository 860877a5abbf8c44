//! Deterministic seed derivation for independent random substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere randomness is needed.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a root seed together with a path of stream labels.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub fn rng_for(root: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(root, path))
}
