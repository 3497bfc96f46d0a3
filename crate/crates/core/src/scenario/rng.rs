use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep the random draws of unrelated stages apart.
pub const STRESS_STREAM: u64 = 1;
pub const DENSITY_STREAM: u64 = 2;
pub const HETEROGENEITY_STREAM: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices into an independent seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &part| splitmix64(acc ^ splitmix64(part)))
}

pub fn derived_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
