//! Seeded, splittable random streams.
//!
//! A stream is named by a master seed and a path of `(label, index)` pairs.
//! The generator key is the SHA-256 digest of that name, so a stream depends
//! only on its name: replications are reproducible regardless of the order
//! or the thread they run on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<(String, u64)>,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, path: Vec::new() }
    }

    /// Substream `label[index]` below this one.
    pub fn child(&self, label: &str, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push((label.to_owned(), index));
        Self { master_seed: self.master_seed, path }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[(String, u64)] {
        &self.path
    }

    pub fn key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"podd-rng-v1");
        hasher.update(self.master_seed.to_le_bytes());
        for (label, index) in &self.path {
            hasher.update((label.len() as u64).to_le_bytes());
            hasher.update(label.as_bytes());
            hasher.update(index.to_le_bytes());
        }
        hasher.finalize().into()
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.key())
    }
}
