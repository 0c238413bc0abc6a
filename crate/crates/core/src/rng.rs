//! Deterministic random streams keyed by `(seed, stream index)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A reproducible random stream. Streams with the same seed and different
/// indices are independent; the same pair always yields the same output.
#[derive(Clone, Debug)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        RngStream(rng)
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    pub fn uniform_open01(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `1..=k`.
    pub fn uniform_int(&mut self, k: usize) -> usize {
        use rand::Rng;
        self.0.random_range(1..=k)
    }

    /// Standard normal variate (Box-Muller, one of the pair discarded).
    pub fn standard_normal(&mut self) -> f64 {
        let u = self.uniform_open01();
        let v = self.uniform_open01();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}

/// Runs `f(stream)` for replicates `0..count`, each on its own stream of
/// `seed`. Output order is by replicate index, so results do not depend on
/// the number of worker threads.
pub fn run_replicates<T, F>(seed: u64, first_stream: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|i| f(&mut RngStream::new(seed, first_stream + i)))
        .collect()
}
