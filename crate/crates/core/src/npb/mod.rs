//! Nonparametric Bayesian model core: stick-breaking weights, sticky
//! HDP-HMM / DHDP-HMM state spaces, and their Gibbs sampler.

mod dist;
mod gaussian;
mod gibbs;
mod hyper;
mod model;
mod stick;

pub use dist::log_sum_exp;
pub use gaussian::{Covariance, CovarianceKind, GaussianComponent, NiwPrior, SuffStats, COVARIANCE_FLOOR};
pub use gibbs::{gibbs_iteration, initialize, LatentAssignment};
pub use hyper::{BetaPrior, ConcentrationPriors, GammaPrior, Hyperparameters, SamplerSettings};
pub use model::{Emissions, Lineage, TransducerModel, Variant, MODEL_MAGIC};
pub use stick::{sample_gem, sticky_transition_prior, StickWeights};
