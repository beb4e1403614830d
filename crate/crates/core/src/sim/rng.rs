//! Seed expansion for replications.
//!
//! A replication seed feeds one ChaCha8 generator per named stream; the
//! streams differ only in their ChaCha stream id, so each is an independent
//! keystream and adding a stream never shifts the draws of another.
//!
//! Per-lorry draws (one prevalence, one selection per station) are taken
//! when the lorry is created, in lorry order. A lorry's fate draws are
//! therefore the same in every mode, whatever the timing.
//!
//! Check outcomes reuse the prevalence draw. A positive lorry's draw `u`
//! rescaled to `u / p_positive` is uniform on `[0, 1)`; a check finds the
//! lorry when this value lies in the top `detection_probability` share, and
//! a cleared lorry carries the value rescaled onto the remaining bottom
//! share to its next check. Each check is still an independent Bernoulli
//! trial, and the set of lorries that slip through every check stays nested
//! as scenario probabilities move.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamId {
    Prevalence = 0,
    Selection = 1,
    Arrivals = 2,
    Service = 3,
}

pub fn stream(seed: u64, id: StreamId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

/// All random streams of one replication.
#[derive(Debug, Clone)]
pub struct Streams {
    pub prevalence: ChaCha8Rng,
    pub selection: ChaCha8Rng,
    pub arrivals: ChaCha8Rng,
    pub service: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams {
            prevalence: stream(seed, StreamId::Prevalence),
            selection: stream(seed, StreamId::Selection),
            arrivals: stream(seed, StreamId::Arrivals),
            service: stream(seed, StreamId::Service),
        }
    }
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Seed for replication `rep` of `cell` under `method`: the first eight bytes
/// of SHA-256 over the root seed and method name followed by the cell and
/// replication indices, integers little-endian.
pub fn replication_seed(root: u64, method: &str, cell: u64, rep: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(method.as_bytes());
    hasher.update(cell.to_le_bytes());
    hasher.update(rep.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
