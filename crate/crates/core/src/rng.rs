//! Counter-addressed random streams.
//!
//! A stream is identified by a master seed and a text label; within a
//! stream, `counter` (a time index, path index, ...) selects an
//! independent ChaCha block sequence. Any draw can therefore be
//! regenerated without replaying earlier ones, which is what makes suffix
//! reseeding and thread-count-independent Monte Carlo possible.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// 256-bit key for `(seed, label)`.
pub fn stream_key(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// Generator for `(seed, label, counter)`.
pub fn stream(seed: u64, label: &str, counter: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(stream_key(seed, label));
    rng.set_stream(counter);
    rng
}

/// Derives a child seed from a labeled stream.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let key = stream_key(seed, label);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}
