//! Seeded, splittable random streams.
//!
//! Every random draw in a simulation comes from a substream addressed by
//! `(purpose, index, lane)`: for channel fields `index` is the trial and
//! `lane` the antenna pair. Two runs with the same master seed therefore see
//! the same numbers no matter how work is scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    /// Channel realizations that are evaluated.
    Field,
    /// Channel realizations used only to collect codebook training data.
    TrainingField,
    /// Codebook initialization and empty-cell repair.
    Codebook,
    /// Test-channel noise of the rate-distortion reference curves.
    TheoryNoise,
    /// Anything else (oracle checks, ad hoc sampling).
    Auxiliary,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Field => 0x01,
            StreamKind::TrainingField => 0x02,
            StreamKind::Codebook => 0x03,
            StreamKind::TheoryNoise => 0x04,
            StreamKind::Auxiliary => 0x05,
        }
    }
}

/// Factory of independent random streams.
pub trait StreamSource: Sync {
    type Rng: RngCore + Send;

    fn stream(&self, kind: StreamKind, index: u64, lane: u64) -> Self::Rng;
}

/// Default stream source: one ChaCha8 key per `(seed, kind, index)` and one
/// ChaCha stream id per lane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChaChaStreams {
    seed: u64,
}

impl ChaChaStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl StreamSource for ChaChaStreams {
    type Rng = ChaCha8Rng;

    fn stream(&self, kind: StreamKind, index: u64, lane: u64) -> ChaCha8Rng {
        let key = mix(mix(self.seed ^ kind.tag().rotate_left(56)) ^ index);
        lane_rng(key, lane)
    }
}

/// ChaCha8 generator keyed by `key` on stream `lane`.
pub fn lane_rng(key: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(lane);
    rng
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
