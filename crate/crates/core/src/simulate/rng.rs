//! Counter-based random streams keyed by `(seed, path, step, substream)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved per `(step, substream)` block.
const SUBSTREAM_SHIFT: u32 = 19;
const STEP_SHIFT: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Substream {
    Gaussian = 0,
    Jump = 1,
}

/// Source of per-path generators. The ChaCha key comes from the seed, the
/// stream id is the path index, and the word position encodes the step and
/// substream, so draws never depend on scheduling.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn path(&self, path_id: u64) -> PathRng {
        let mut rng = self.base.clone();
        rng.set_stream(path_id);
        PathRng { rng }
    }
}

#[derive(Debug, Clone)]
pub struct PathRng {
    rng: ChaCha8Rng,
}

impl PathRng {
    /// Positions the generator at the start of the given block.
    pub fn seek(&mut self, step: u64, sub: Substream) -> &mut ChaCha8Rng {
        let pos = ((step as u128) << STEP_SHIFT) | ((sub as u128) << SUBSTREAM_SHIFT);
        self.rng.set_word_pos(pos);
        &mut self.rng
    }
}
