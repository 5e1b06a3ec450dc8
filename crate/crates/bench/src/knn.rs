//! One-nearest-neighbour estimate of `D_KL(Q̂ ‖ Q)` from samples of `Q̂`
//! and a reference sample of `Q`.
//!
//! With `ρ_i` the distance from `x_i` to its nearest other sample and `ν_i`
//! the distance to the nearest reference point, the one-dimensional
//! estimator is `(1/n) Σ ln(ν_i / ρ_i) + ln(m / (n - 1))` nats.

use std::f64::consts::LN_2;

use grc_core::Distribution1D;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::stats::{summarize, Summary};

/// Reference points drawn from `Q` per seed group.
pub const REFERENCE_SIZE: usize = 10_000;

fn nearest_gap(sorted: &[f64], x: f64, exclude_self: bool) -> f64 {
    let i = sorted.partition_point(|&v| v < x);
    let mut best = f64::INFINITY;
    let lo = i.saturating_sub(2);
    let hi = (i + 2).min(sorted.len());
    let mut skipped = !exclude_self;
    for &v in &sorted[lo..hi] {
        if !skipped && v == x {
            skipped = true;
            continue;
        }
        best = best.min((v - x).abs());
    }
    best.max(f64::MIN_POSITIVE)
}

/// Estimate in bits.
pub fn kl_1nn_bits(samples: &[f64], reference: &[f64]) -> f64 {
    assert!(samples.len() >= 2 && !reference.is_empty(), "need at least two samples");
    let mut own = samples.to_vec();
    own.sort_by(|a, b| a.total_cmp(b));
    let mut refs = reference.to_vec();
    refs.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let m = reference.len() as f64;
    let mean_log: f64 = samples
        .iter()
        .map(|&x| (nearest_gap(&refs, x, false) / nearest_gap(&own, x, true)).ln())
        .sum::<f64>()
        / n;
    (mean_log + (m / (n - 1.0)).ln()) / LN_2
}

/// Reference sample of `target` for seed group `group`.
pub fn reference_sample(target: &Distribution1D, seed: u64, group: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(grc_core::engine::derive_seed(seed, group));
    let normal = Normal::new(target.location(), target.scale()).expect("valid scale");
    (0..REFERENCE_SIZE).map(|_| normal.sample(&mut rng)).collect()
}

/// Estimates per seed group, averaged with a standard error across groups.
pub fn kl_bias_estimate(groups: &[Vec<f64>], target: &Distribution1D, seed: u64) -> (Summary, Vec<f64>) {
    let per_group: Vec<f64> = groups
        .iter()
        .enumerate()
        .map(|(g, xs)| kl_1nn_bits(xs, &reference_sample(target, seed, g as u64)))
        .collect();
    (summarize(&per_group), per_group)
}
