//! Counter-based random streams.
//!
//! Every `(seed, path, period)` triple addresses its own block of the ChaCha
//! keystream, so a path's draws do not depend on which worker runs it or in
//! which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved for one period of one path.
const PERIOD_WORDS: u32 = 36;

#[derive(Clone, Debug)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn path(&self, path: u64) -> PathRng {
        let mut rng = self.base.clone();
        rng.set_stream(path);
        PathRng { rng }
    }
}

/// The stream of one simulation path.
#[derive(Clone, Debug)]
pub struct PathRng {
    rng: ChaCha8Rng,
}

impl PathRng {
    /// Generator positioned at the start of `period`'s sub-stream.
    pub fn period(&mut self, period: usize) -> &mut ChaCha8Rng {
        self.rng.set_word_pos((period as u128) << PERIOD_WORDS);
        &mut self.rng
    }
}
