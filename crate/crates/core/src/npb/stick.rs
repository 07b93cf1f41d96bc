use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::sample_beta;
use super::Hyperparameters;
use crate::{Error, Result};

/// Truncated stick-breaking weights with the unbroken remainder kept explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickWeights {
    pub weights: Vec<f64>,
    pub remainder: f64,
}

impl StickWeights {
    /// Breaks the stick at the given fractions `v_k`: `w_k = v_k * prod_{l<k} (1 - v_l)`.
    pub fn from_fractions(fractions: &[f64]) -> Self {
        let mut remainder = 1.0;
        let weights = fractions
            .iter()
            .map(|&v| {
                let w = v * remainder;
                remainder *= 1.0 - v;
                w
            })
            .collect();
        Self { weights, remainder }
    }

    /// A finite distribution with no remainder.
    pub fn from_probabilities(weights: Vec<f64>) -> Self {
        Self {
            weights,
            remainder: 0.0,
        }
    }

    pub fn truncation(&self) -> usize {
        self.weights.len()
    }

    /// Weights with the remainder folded onto the last atom.
    pub fn closed(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        if let Some(last) = w.last_mut() {
            *last += self.remainder;
        }
        w
    }
}

/// `GEM(concentration)` truncated to `k` atoms.
pub fn sample_gem<R: Rng + ?Sized>(concentration: f64, k: usize, rng: &mut R) -> Result<StickWeights> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "GEM concentration must be positive, got {concentration}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("GEM truncation must be at least 1".into()));
    }
    let fractions: Vec<f64> = (0..k).map(|_| sample_beta(1.0, concentration, rng)).collect();
    Ok(StickWeights::from_fractions(&fractions))
}

/// Base measure `(alpha * beta + kappa * delta_j) / (alpha + kappa)` for transition row `j`.
pub fn sticky_transition_prior(beta: &StickWeights, j: usize, hyper: &Hyperparameters) -> Result<Vec<f64>> {
    let k = beta.truncation();
    if j >= k {
        return Err(Error::InvalidArgument(format!("state {j} out of range for truncation {k}")));
    }
    let (alpha, kappa) = (hyper.alpha, hyper.kappa);
    if kappa == 0.0 {
        return Ok(beta.weights.clone());
    }
    if !(alpha >= 0.0 && kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need alpha >= 0 and kappa >= 0 with alpha + kappa > 0, got {alpha}, {kappa}"
        )));
    }
    let total = alpha + kappa;
    Ok(beta
        .weights
        .iter()
        .enumerate()
        .map(|(i, &b)| (alpha * b + if i == j { kappa } else { 0.0 }) / total)
        .collect())
}
