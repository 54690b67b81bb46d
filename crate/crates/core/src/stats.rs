//! Streaming moments and the deterministic parallel Monte Carlo driver.
//!
//! Every path `i` draws from ChaCha stream `i` of the key derived from
//! `seed`, and paths are grouped into fixed-size chunks whose statistics are
//! merged in chunk order. Results are therefore bit-identical for a given seed no
//! matter how rayon schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Paths per work unit. Part of the reproducibility contract: changing it
/// changes the floating-point summation order.
pub const CHUNK_PATHS: u64 = 1024;

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        self.mean += delta * other.n as f64 / nf;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / nf;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Generator for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of an independent run `stream` derived from `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs `n_paths` independent paths in parallel. `path` receives the path
/// index and an output slice of length `width`; one [`RunningStats`] per
/// output column is returned.
pub fn parallel_paths<F>(n_paths: u64, width: usize, path: F) -> Vec<RunningStats>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let n_chunks = n_paths.div_ceil(CHUNK_PATHS);
    let partials: Vec<Vec<RunningStats>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_PATHS;
            let end = (start + CHUNK_PATHS).min(n_paths);
            let mut acc = vec![RunningStats::new(); width];
            let mut out = vec![0.0; width];
            for i in start..end {
                path(i, &mut out);
                for (a, &x) in acc.iter_mut().zip(&out) {
                    a.push(x);
                }
            }
            acc
        })
        .collect();

    let mut total = vec![RunningStats::new(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}
