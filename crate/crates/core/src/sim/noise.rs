//! Counter-addressed Brownian increments.
//!
//! Particle `i` owns ChaCha8 stream `i` under a key derived from the run seed.
//! Step `k` always reads the same fixed-size window of that stream, so the
//! increment is a pure function of `(seed, i, k)` whether it is drawn by
//! seeking or by advancing a per-particle generator step by step.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two u64 draws (four 32-bit words) per pair of normals.
const WORDS_PER_PAIR: u128 = 4;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    pairs_per_step: usize,
}

impl NoiseStream {
    /// Positioned at step 0.
    pub fn new(seed: u64, particle: u64, noise_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(particle);
        Self {
            rng,
            pairs_per_step: noise_dim.div_ceil(2),
        }
    }

    pub fn seek(&mut self, step: u64) {
        self.rng
            .set_word_pos(step as u128 * self.pairs_per_step as u128 * WORDS_PER_PAIR);
    }

    /// Fills `out` with N(0, dt) draws for the current step and advances to
    /// the next one.
    #[inline]
    pub fn next_increment(&mut self, sqrt_dt: f64, out: &mut [f64]) {
        let mut filled = 0;
        for _ in 0..self.pairs_per_step {
            let (z0, z1) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            if filled < out.len() {
                out[filled] = z0 * sqrt_dt;
                filled += 1;
            }
            if filled < out.len() {
                out[filled] = z1 * sqrt_dt;
                filled += 1;
            }
        }
    }
}

/// Standard normal pair from two uniform 64-bit words.
#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Increment `ΔB^i` over step `k`: an `m`-vector of N(0, dt) draws.
pub fn brownian_increment(seed: u64, particle: u64, step: u64, m: usize, dt: f64) -> Vec<f64> {
    let mut stream = NoiseStream::new(seed, particle, m);
    stream.seek(step);
    let mut out = vec![0.0; m];
    stream.next_increment(dt.sqrt(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_function_of_indices() {
        let a = brownian_increment(42, 3, 17, 3, 0.01);
        let b = brownian_increment(42, 3, 17, 3, 0.01);
        assert_eq!(a, b);
        assert_ne!(a, brownian_increment(42, 3, 18, 3, 0.01));
        assert_ne!(a, brownian_increment(42, 4, 17, 3, 0.01));
        assert_ne!(a, brownian_increment(43, 3, 17, 3, 0.01));
    }

    #[test]
    fn sequential_stream_matches_seeking() {
        for m in [1, 2, 3] {
            let mut stream = NoiseStream::new(9, 5, m);
            let mut out = vec![0.0; m];
            for k in 0..50 {
                stream.next_increment(0.1f64.sqrt(), &mut out);
                assert_eq!(out, brownian_increment(9, 5, k, m, 0.1), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn variance_matches_dt() {
        let dt: f64 = 1e-3;
        let n = 1_000_000;
        let mut stream = NoiseStream::new(1, 0, 1);
        let mut out = [0.0];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            stream.next_increment(dt.sqrt(), &mut out);
            s1 += out[0];
            s2 += out[0] * out[0];
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((var / dt - 1.0).abs() < 0.01, "var/dt = {}", var / dt);
        assert!(mean.abs() < 5.0 * (dt / n as f64).sqrt());
    }

    #[test]
    fn particle_streams_uncorrelated() {
        let n = 100_000;
        let mut s0 = NoiseStream::new(77, 0, 1);
        let mut s1 = NoiseStream::new(77, 1, 1);
        let (mut a, mut b) = ([0.0], [0.0]);
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            s0.next_increment(1.0, &mut a);
            s1.next_increment(1.0, &mut b);
            sa += a[0];
            sb += b[0];
            saa += a[0] * a[0];
            sbb += b[0] * b[0];
            sab += a[0] * b[0];
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 0.01, "corr = {corr}");
    }
}
