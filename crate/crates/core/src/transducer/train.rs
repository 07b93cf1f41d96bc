//! Training driver: initialization, Gibbs sweeps, and compaction to the
//! states that actually explain the data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureSequence;
use crate::npb::{gibbs_iteration, initialize, Hyperparameters, LatentAssignment, NiwPrior, SamplerSettings, TransducerModel};
use crate::{Error, Result};

/// Emission prior fitted to the corpus: mean at the data mean, expected
/// covariance `scatter_scale` times the per-dimension data variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPrior {
    pub kappa: f64,
    pub scatter_scale: f64,
}

impl Default for DataPrior {
    fn default() -> Self {
        Self {
            kappa: 0.01,
            scatter_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingOptions {
    pub settings: SamplerSettings,
    /// Concentrations; the NIW part is replaced when `data_prior` is set.
    pub hyper: Hyperparameters,
    pub data_prior: Option<DataPrior>,
    pub sweeps: usize,
    pub seed: u64,
    /// States with at most this fraction of frames are dropped after training.
    pub min_occupancy: f64,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            settings: SamplerSettings::default(),
            hyper: Hyperparameters::default(),
            data_prior: Some(DataPrior::default()),
            sweeps: 1000,
            seed: 0,
            min_occupancy: 0.001,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    /// Model restricted to active states; unit ids index the full model.
    pub model: TransducerModel,
    pub full_model: TransducerModel,
    /// `log p(X | parameters)` of every sweep.
    pub trace: Vec<f64>,
    /// Occupied states after every sweep.
    pub state_counts: Vec<usize>,
    pub assignments: Vec<LatentAssignment>,
}

pub fn train_transducer(corpus: &[FeatureSequence], options: &TrainingOptions) -> Result<TrainingOutcome> {
    if corpus.is_empty() {
        return Err(Error::MissingInput("training corpus is empty".into()));
    }
    if !(0.0..1.0).contains(&options.min_occupancy) {
        return Err(Error::Config(format!(
            "min_occupancy must lie in [0, 1), got {}",
            options.min_occupancy
        )));
    }
    let mut hyper = options.hyper.clone();
    if let Some(p) = options.data_prior {
        let dim = corpus[0].frame(0).len();
        hyper.niw = NiwPrior::from_data(
            corpus.iter().flat_map(|s| s.frames()),
            dim,
            options.settings.covariance,
            p.kappa,
            p.scatter_scale,
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (mut model, mut assignments) = initialize(corpus, hyper, &options.settings, options.seed, &mut rng)?;
    let mut trace = Vec::with_capacity(options.sweeps);
    let mut state_counts = Vec::with_capacity(options.sweeps);
    for sweep in 0..options.sweeps {
        let ll = gibbs_iteration(&mut model, &options.settings, corpus, &mut assignments, &mut rng)?;
        trace.push(ll);
        state_counts.push(model.state_count());
        if sweep % 50 == 0 || sweep + 1 == options.sweeps {
            log::info!("sweep {sweep}: log-likelihood {ll:.2}, {} states", model.state_count());
        }
    }
    let keep = model.active_states(options.min_occupancy);
    let keep = if keep.is_empty() { model.active_states(0.0) } else { keep };
    let compact = model.compact(&keep)?;
    Ok(TrainingOutcome {
        model: compact,
        full_model: model,
        trace,
        state_counts,
        assignments,
    })
}
