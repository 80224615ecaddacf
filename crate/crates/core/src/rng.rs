use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent streams derived from one seed. ChaCha keeps the output
/// stable across platforms and crate releases.
pub mod stream {
    pub const COVARIATES: u64 = 0;
    pub const RESPONSE: u64 = 1;
    pub const UNIFORM: u64 = 2;
    pub const RESAMPLE: u64 = 3;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
