use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dist::log_sum_exp;
use super::gaussian::{GaussianComponent, COVARIANCE_FLOOR};
use super::{Hyperparameters, StickWeights};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"ADUMODEL";
const MODEL_VERSION: u32 = 1;
const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Each state owns a private Gaussian mixture.
    #[default]
    Hdphmm,
    /// States mix over one shared Gaussian pool.
    Dhdphmm,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hdphmm" => Ok(Variant::Hdphmm),
            "dhdphmm" => Ok(Variant::Dhdphmm),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Emissions {
    Private {
        /// `weights[j][c]`: weight of component `c` in state `j`.
        weights: Vec<Vec<f64>>,
        components: Vec<Vec<GaussianComponent>>,
    },
    Shared {
        /// Global weights over the pool.
        pool_weights: StickWeights,
        /// `weights[j][p]`: weight of pool entry `p` in state `j`.
        weights: Vec<Vec<f64>>,
        pool: Vec<GaussianComponent>,
    },
}

impl Emissions {
    pub fn weights(&self) -> &[Vec<f64>] {
        match self {
            Emissions::Private { weights, .. } | Emissions::Shared { weights, .. } => weights,
        }
    }

    fn components(&self) -> Box<dyn Iterator<Item = &GaussianComponent> + '_> {
        match self {
            Emissions::Private { components, .. } => Box::new(components.iter().flatten()),
            Emissions::Shared { pool, .. } => Box::new(pool.iter()),
        }
    }
}

/// Seed and sweep count that produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Lineage {
    pub seed: u64,
    pub sweeps: u64,
}

/// A truncated HDPHMM or DHDPHMM: the trained transducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransducerModel {
    pub variant: Variant,
    pub dim: usize,
    /// Global transition weights.
    pub beta: StickWeights,
    /// Initial-state distribution.
    pub initial: Vec<f64>,
    /// Row-stochastic transition matrix.
    pub transitions: Vec<Vec<f64>>,
    pub emissions: Emissions,
    pub hyper: Hyperparameters,
    /// Frames assigned to each state in the last sweep.
    pub occupancy: Vec<u64>,
    /// External label of each state.
    pub unit_ids: Vec<u32>,
    pub lineage: Lineage,
}

fn check_distribution(what: &str, row: &[f64]) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::InvalidArgument(format!("{what} is not a distribution (sum {sum})")));
    }
    Ok(())
}

impl TransducerModel {
    /// Assembles a model from explicit parameters; state `j` gets unit id `j`.
    pub fn new(
        variant: Variant,
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        emissions: Emissions,
        hyper: Hyperparameters,
    ) -> Result<Self> {
        let k = transitions.len();
        let dim = emissions
            .components()
            .next()
            .map(|g| g.dim())
            .ok_or_else(|| Error::InvalidArgument("model has no Gaussian components".into()))?;
        let model = Self {
            variant,
            dim,
            beta: StickWeights::from_probabilities(vec![1.0 / k as f64; k]),
            initial,
            transitions,
            emissions,
            hyper,
            occupancy: vec![0; k],
            unit_ids: (0..k as u32).collect(),
            lineage: Lineage::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    /// States with nonzero occupancy.
    pub fn state_count(&self) -> usize {
        self.occupancy.iter().filter(|&&n| n > 0).count()
    }

    /// States holding more than `min_fraction` of all frames.
    pub fn active_states(&self, min_fraction: f64) -> Vec<usize> {
        let total: u64 = self.occupancy.iter().sum();
        self.occupancy
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n > 0 && n as f64 > min_fraction * total as f64)
            .map(|(j, _)| j)
            .collect()
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let k = self.num_states();
        if k == 0 {
            return Err(Error::InvalidArgument("model has no states".into()));
        }
        let width_ok = self.beta.truncation() == k
            && self.initial.len() == k
            && self.occupancy.len() == k
            && self.unit_ids.len() == k
            && self.transitions.iter().all(|r| r.len() == k)
            && self.emissions.weights().len() == k;
        if !width_ok {
            return Err(Error::InvalidArgument(format!("inconsistent state count (expected {k})")));
        }
        check_distribution("initial distribution", &self.initial)?;
        for (j, row) in self.transitions.iter().enumerate() {
            check_distribution(&format!("transition row {j}"), row)?;
        }
        for (j, row) in self.emissions.weights().iter().enumerate() {
            check_distribution(&format!("mixture weights of state {j}"), row)?;
        }
        match &self.emissions {
            Emissions::Private { weights, components } => {
                if components.len() != k || components.iter().zip(weights).any(|(c, w)| c.len() != w.len()) {
                    return Err(Error::InvalidArgument("mixture weights do not match components".into()));
                }
            }
            Emissions::Shared {
                pool_weights,
                weights,
                pool,
            } => {
                if pool_weights.truncation() != pool.len() || weights.iter().any(|w| w.len() != pool.len()) {
                    return Err(Error::InvalidArgument("state weights reference missing pool entries".into()));
                }
                check_distribution("pool weights", &pool_weights.closed())?;
            }
        }
        for g in self.emissions.components() {
            if g.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: g.dim(),
                });
            }
            if g.min_eigenvalue() < COVARIANCE_FLOOR * (1.0 - 1e-6) {
                return Err(Error::InvalidArgument("covariance below floor".into()));
            }
        }
        Ok(())
    }

    /// `log sum_c psi_jc N(frame; theta_jc)`.
    pub fn emission_loglik(&self, state: usize, frame: &[f64]) -> f64 {
        let terms: Vec<f64> = match &self.emissions {
            Emissions::Private { weights, components } => weights[state]
                .iter()
                .zip(&components[state])
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, g)| w.ln() + g.log_density(frame))
                .collect(),
            Emissions::Shared { weights, pool, .. } => weights[state]
                .iter()
                .zip(pool)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, g)| w.ln() + g.log_density(frame))
                .collect(),
        };
        log_sum_exp(&terms)
    }

    /// Emission log-likelihoods for a row-major `T x dim` block, as a row-major `T x K` table.
    pub fn log_emission_table(&self, frames: &[f64]) -> Vec<f64> {
        let k = self.num_states();
        let t_len = frames.len() / self.dim;
        let mut out = vec![0.0; t_len * k];
        match &self.emissions {
            Emissions::Private { weights, components } => {
                let log_w: Vec<Vec<f64>> = weights
                    .iter()
                    .map(|row| row.iter().map(|w| w.ln()).collect())
                    .collect();
                let mut terms = Vec::new();
                for (t, x) in frames.chunks_exact(self.dim).enumerate() {
                    for j in 0..k {
                        out[t * k + j] = if components[j].len() == 1 {
                            components[j][0].log_density(x)
                        } else {
                            terms.clear();
                            terms.extend(
                                components[j]
                                    .iter()
                                    .zip(&log_w[j])
                                    .filter(|(_, lw)| lw.is_finite())
                                    .map(|(g, lw)| lw + g.log_density(x)),
                            );
                            log_sum_exp(&terms)
                        };
                    }
                }
            }
            Emissions::Shared { weights, pool, .. } => {
                let mut dens = vec![0.0; pool.len()];
                for (t, x) in frames.chunks_exact(self.dim).enumerate() {
                    shared_state_logliks(weights, pool, x, &mut dens, &mut out[t * k..(t + 1) * k]);
                }
            }
        }
        out
    }

    /// Restricts the model to `keep` (in order), renormalizing transition rows.
    pub fn compact(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("cannot compact to zero states".into()));
        }
        let restrict = |row: &[f64]| -> Vec<f64> {
            let sub: Vec<f64> = keep.iter().map(|&i| row[i]).collect();
            let sum: f64 = sub.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                sub.iter().map(|p| p / sum).collect()
            } else {
                vec![1.0 / keep.len() as f64; keep.len()]
            }
        };
        let emissions = match &self.emissions {
            Emissions::Private { weights, components } => Emissions::Private {
                weights: keep.iter().map(|&j| weights[j].clone()).collect(),
                components: keep.iter().map(|&j| components[j].clone()).collect(),
            },
            Emissions::Shared {
                pool_weights,
                weights,
                pool,
            } => Emissions::Shared {
                pool_weights: pool_weights.clone(),
                weights: keep.iter().map(|&j| weights[j].clone()).collect(),
                pool: pool.clone(),
            },
        };
        let model = Self {
            variant: self.variant,
            dim: self.dim,
            beta: StickWeights::from_probabilities(restrict(&self.beta.weights)),
            initial: restrict(&self.initial),
            transitions: keep.iter().map(|&j| restrict(&self.transitions[j])).collect(),
            emissions,
            hyper: self.hyper.clone(),
            occupancy: keep.iter().map(|&j| self.occupancy[j]).collect(),
            unit_ids: keep.iter().map(|&j| self.unit_ids[j]).collect(),
            lineage: self.lineage,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = MODEL_MAGIC.to_vec();
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend(bincode::serialize(self)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MODEL_MAGIC {
            return Err(Error::MalformedHeader("not a model file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != MODEL_VERSION {
            return Err(Error::MalformedHeader(format!("unsupported model version {version}")));
        }
        let model: Self = bincode::deserialize(&bytes[12..])?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::ModelNotFound(path.to_path_buf()));
        }
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Per-state mixture log-likelihoods over a shared pool, mixing in linear space
/// after a max shift.
pub(crate) fn shared_state_logliks(
    weights: &[Vec<f64>],
    pool: &[GaussianComponent],
    x: &[f64],
    dens: &mut [f64],
    out: &mut [f64],
) {
    for (d, g) in dens.iter_mut().zip(pool) {
        *d = g.log_density(x);
    }
    let max = dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for d in dens.iter_mut() {
        *d = (*d - max).exp();
    }
    for (o, w) in out.iter_mut().zip(weights) {
        let s: f64 = w.iter().zip(dens.iter()).map(|(w, d)| w * d).sum();
        *o = if s > 0.0 {
            max + s.ln()
        } else {
            let terms: Vec<f64> = w
                .iter()
                .zip(pool)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, g)| w.ln() + g.log_density(x))
                .collect();
            log_sum_exp(&terms)
        };
    }
}
