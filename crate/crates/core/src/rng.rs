use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed and stream selecting one reproducible random stream.
///
/// Draws come from ChaCha8 (`rand_chacha`), a counter-based generator whose
/// output is defined bit-for-bit independent of platform. The stream id maps
/// onto ChaCha's stream counter, so `(seed, stream)` pairs never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, different stream.
    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}
