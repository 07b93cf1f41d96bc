//! Sampling helpers that stay finite for tiny Dirichlet parameters.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log G` for `G ~ Gamma(shape, 1)`; `-inf` when `shape == 0`.
///
/// Shapes below one use `G = G' * U^(1/shape)` with `G' ~ Gamma(shape + 1, 1)`
/// so the result is representable even when `G` underflows.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 0.0 && shape.is_finite(), "gamma shape {shape}");
    if shape <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if shape >= 1.0 {
        return Gamma::new(shape, 1.0).unwrap().sample(rng).ln();
    }
    let boosted: f64 = Gamma::new(shape + 1.0, 1.0).unwrap().sample(rng);
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    boosted.ln() + u.ln() / shape
}

/// Draw from a Dirichlet with the given parameters; zero parameters give zero mass.
pub fn sample_dirichlet<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Vec<f64> {
    let logs: Vec<f64> = params.iter().map(|&a| sample_log_gamma(a, rng)).collect();
    let norm = log_sum_exp(&logs);
    logs.iter().map(|l| (l - norm).exp()).collect()
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate).unwrap().sample(rng)
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b).unwrap().sample(rng)
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Index drawn proportionally to nonnegative `weights`; falls back to the argmax
/// when the total is zero.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return weights
            .iter()
            .enumerate()
            .fold(0, |best, (i, &w)| if w > weights[best] { i } else { best });
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Number of occupied tables after seating `customers` in a Chinese restaurant
/// with concentration `strength`.
pub fn sample_table_count<R: Rng + ?Sized>(customers: u64, strength: f64, rng: &mut R) -> u64 {
    if customers == 0 {
        return 0;
    }
    if strength <= 0.0 {
        return 1;
    }
    (0..customers)
        .filter(|&i| rng.random::<f64>() < strength / (strength + i as f64))
        .count() as u64
}

pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    (0..n).filter(|_| rng.random::<f64>() < p).count() as u64
}
