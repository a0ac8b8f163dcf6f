//! Seeded random streams.
//!
//! Every consumer of randomness asks for its own child stream, identified by a
//! domain tag and up to two integer coordinates (class, client, round, ...).
//! A child stream is a ChaCha8 generator whose 32-byte key is built from four
//! SplitMix64 outputs over `(seed, domain, a, b)`. Adding a new consumer never
//! shifts the numbers seen by an existing one, so a plan stays stable when
//! only part of it is regenerated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags for child streams. The numeric values are part of the
/// reproducibility contract and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Downsample = 1,
    ClassShuffle = 2,
    ClassSelection = 3,
    ClientSelection = 4,
    LocalShuffle = 5,
    ModelInit = 6,
    Synth = 7,
    CentralShuffle = 8,
    SynthTest = 9,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the child stream for `(seed, domain, a, b)`.
pub fn stream(seed: u64, domain: Domain, a: u64, b: u64) -> StreamRng {
    let mut state = seed;
    let mut mix = splitmix64(&mut state);
    for word in [domain as u64, a, b] {
        state ^= word.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ mix;
        mix = splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Derive a 64-bit seed rather than a generator.
pub fn derive_seed(seed: u64, domain: Domain, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    stream(seed, domain, a, b).next_u64()
}
