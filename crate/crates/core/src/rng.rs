//! Seed handling. Every stochastic phase draws from its own ChaCha stream
//! derived from a master seed, so phases stay reproducible in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent sub-streams of a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Base,
    Matching,
    RefinerInit,
    Untrained,
    Folds,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Base => 0x6261_7365,
            Phase::Matching => 0x6d61_7463,
            Phase::RefinerInit => 0x696e_6974,
            Phase::Untrained => 0x756e_7472,
            Phase::Folds => 0x666f_6c64,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn phase_seed(master: u64, phase: Phase) -> u64 {
    mix64(master ^ mix64(phase.tag()))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
