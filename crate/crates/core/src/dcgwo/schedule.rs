// SPDX-License-Identifier: Apache-2.0
//! Iteration schedules and random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::OptimizerConfig;

/// Linearly decays from 2 at iteration 0 to 0 at the cap.
pub fn scaling_factor(iter: usize, max_iter: usize) -> f64 {
    2.0 - 2.0 * iter as f64 / max_iter as f64
}

/// `(2 r - 1) a` for `r ~ U(0, 1)`, so `|A| <= a`.
pub fn encircling_coeff<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    encircling_from(a, rng.gen::<f64>())
}

pub fn encircling_from(a: f64, r1: f64) -> f64 {
    (2.0 * r1 - 1.0) * a
}

/// Error bound in force at `iter`: `min(e_max, b iter^2 + e_0)`.
pub fn relax_bound(iter: usize, cfg: &OptimizerConfig) -> f64 {
    let it = iter as f64;
    cfg.e_max.min(cfg.relaxation() * it * it + cfg.initial_bound())
}

/// What a derived random stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Chase = 2,
    LeaderSearch = 3,
    Vectors = 4,
    FreshVectors = 5,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream owned by one (iteration, slot, purpose) triple.
pub fn stream_seed(seed: u64, iter: usize, slot: usize, purpose: Purpose) -> u64 {
    let mut h = mix(seed);
    h = mix(h ^ iter as u64);
    h = mix(h ^ slot as u64);
    mix(h ^ purpose as u64)
}

pub fn stream(seed: u64, iter: usize, slot: usize, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, iter, slot, purpose))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_endpoints() {
        assert_eq!(scaling_factor(0, 20), 2.0);
        assert_eq!(scaling_factor(20, 20), 0.0);
        assert_eq!(scaling_factor(10, 20), 1.0);
    }

    #[test]
    fn encircling_bounds() {
        assert_eq!(encircling_from(0.0, 0.37), 0.0);
        assert_eq!(encircling_from(2.0, 1.0), 2.0);
        let mut rng = stream(9, 0, 0, Purpose::Chase);
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let a = encircling_coeff(2.0, &mut rng);
            assert!(a.abs() <= 2.0);
            sum += a;
        }
        assert!((sum / 10_000.0).abs() <= 0.05);
    }

    #[test]
    fn relaxation_schedule() {
        let cfg = OptimizerConfig { e_max: 0.0244, iterations: 20, ..Default::default() };
        assert_eq!(relax_bound(0, &cfg), 0.0244 / 4.0);
        assert_eq!(relax_bound(20, &cfg), 0.0244);
        let mut prev = 0.0;
        for i in 0..=20 {
            let b = relax_bound(i, &cfg);
            assert!(b >= prev);
            prev = b;
        }
        let zero = OptimizerConfig { e_max: 0.0, ..Default::default() };
        assert_eq!(relax_bound(7, &zero), 0.0);
    }

    #[test]
    fn streams_are_distinct_and_stable() {
        let a = stream_seed(1, 2, 3, Purpose::Chase);
        assert_eq!(a, stream_seed(1, 2, 3, Purpose::Chase));
        assert_ne!(a, stream_seed(1, 3, 2, Purpose::Chase));
        assert_ne!(a, stream_seed(1, 2, 3, Purpose::Init));
    }
}
