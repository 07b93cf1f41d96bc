use serde::{Deserialize, Serialize};

use super::gaussian::{Covariance, CovarianceKind, NiwPrior};
use super::Variant;
use crate::features::FEATURE_DIM;
use crate::{Error, Result};

/// Concentrations and base measure of the sticky HDP-HMM / DHDP-HMM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    /// Global transition DP concentration.
    pub gamma: f64,
    /// Transition DP concentration.
    pub alpha: f64,
    /// Self-transition bias.
    pub kappa: f64,
    /// Per-state emission DP concentration.
    pub sigma: f64,
    /// Global emission DP concentration (shared pool).
    pub tau: f64,
    pub niw: NiwPrior,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha: 1.0,
            kappa: 10.0,
            sigma: 1.0,
            tau: 1.0,
            niw: NiwPrior {
                mean: vec![0.0; FEATURE_DIM],
                kappa: 0.01,
                dof: FEATURE_DIM as f64 + 2.0,
                scatter: Covariance::Diagonal(vec![1.0; FEATURE_DIM]),
            },
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("sigma", self.sigma),
            ("tau", self.tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be nonnegative, got {}", self.kappa)));
        }
        self.niw.validate()
    }

    /// Sticky fraction `kappa / (alpha + kappa)`.
    pub fn rho(&self) -> f64 {
        self.kappa / (self.alpha + self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

/// Hyperpriors for concentration resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcentrationPriors {
    pub gamma: GammaPrior,
    pub alpha_plus_kappa: GammaPrior,
    pub sigma: GammaPrior,
    pub tau: GammaPrior,
    /// Prior on `kappa / (alpha + kappa)`.
    pub sticky: BetaPrior,
}

impl Default for ConcentrationPriors {
    fn default() -> Self {
        let vague = GammaPrior { shape: 1.0, rate: 0.01 };
        Self {
            gamma: vague,
            alpha_plus_kappa: vague,
            sigma: vague,
            tau: vague,
            sticky: BetaPrior { a: 10.0, b: 1.0 },
        }
    }
}

/// Truncation levels and sampler switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSettings {
    pub variant: Variant,
    /// Weak-limit state truncation.
    pub truncation: usize,
    /// States used by the uniform random initial assignment.
    pub init_states: usize,
    /// Mixture truncation per state (HDPHMM).
    pub components_per_state: usize,
    /// Shared Gaussian pool truncation (DHDPHMM).
    pub pool_size: usize,
    /// When false a DHDPHMM state may only use the pool entry with its own index.
    pub share_components: bool,
    pub covariance: CovarianceKind,
    pub resample_concentrations: bool,
    pub priors: ConcentrationPriors,
    /// Auxiliary-variable rounds per concentration update.
    pub aux_iterations: usize,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            variant: Variant::Hdphmm,
            truncation: 300,
            init_states: 50,
            components_per_state: 1,
            pool_size: 300,
            share_components: true,
            covariance: CovarianceKind::Diagonal,
            resample_concentrations: true,
            priors: ConcentrationPriors::default(),
            aux_iterations: 20,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 || self.init_states == 0 {
            return Err(Error::Config("truncation and init_states must be positive".into()));
        }
        if self.components_per_state == 0 || self.pool_size == 0 {
            return Err(Error::Config("mixture truncations must be positive".into()));
        }
        if self.variant == Variant::Dhdphmm && !self.share_components && self.pool_size != self.truncation {
            return Err(Error::Config(
                "without sharing the pool needs exactly one component per state".into(),
            ));
        }
        Ok(())
    }

    /// Components available to each state.
    pub fn mixture_width(&self) -> usize {
        match self.variant {
            Variant::Hdphmm => self.components_per_state,
            Variant::Dhdphmm => self.pool_size,
        }
    }
}
