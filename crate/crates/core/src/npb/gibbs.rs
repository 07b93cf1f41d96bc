//! Blocked Gibbs sampler for the weak-limit sticky HDP-HMM and DHDP-HMM.
//!
//! One sweep resamples, in order: state sequences by backward filtering and
//! forward sampling, mixture components given states, global transition
//! weights (through auxiliary table counts), transition rows, emission
//! weights, Gaussian parameters, and finally the concentrations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{
    sample_beta, sample_binomial, sample_categorical, sample_dirichlet, sample_gamma, sample_table_count,
};
use super::gaussian::GaussianComponent;
use super::log_sum_exp;
use super::hyper::GammaPrior;
use super::model::{Emissions, Lineage, TransducerModel, Variant};
use super::{sample_gem, Hyperparameters, SamplerSettings, StickWeights};
use crate::features::FeatureSequence;
use crate::{Error, Result};

/// Latent state and component of every frame of one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentAssignment {
    pub utterance_id: String,
    pub z: Vec<u32>,
    pub s: Vec<u32>,
}

/// Random initial assignment plus a first draw of every global parameter.
pub fn initialize<R: Rng + ?Sized>(
    corpus: &[FeatureSequence],
    hyper: Hyperparameters,
    settings: &SamplerSettings,
    seed: u64,
    rng: &mut R,
) -> Result<(TransducerModel, Vec<LatentAssignment>)> {
    settings.validate()?;
    hyper.validate()?;
    let k = settings.truncation;
    let width = settings.mixture_width();
    let init_states = settings.init_states.min(k);
    let dim = hyper.niw.dim();
    for seq in corpus {
        if seq.frame(0).len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: seq.frame(0).len(),
            });
        }
    }
    let mut assignments: Vec<LatentAssignment> = corpus
        .iter()
        .map(|seq| {
            let z: Vec<u32> = (0..seq.len()).map(|_| rng.random_range(0..init_states) as u32).collect();
            LatentAssignment {
                utterance_id: seq.utterance_id.clone(),
                s: vec![0; z.len()],
                z,
            }
        })
        .collect();
    for a in assignments.iter_mut() {
        for (s, &z) in a.s.iter_mut().zip(&a.z) {
            *s = match (settings.variant, settings.share_components) {
                (Variant::Dhdphmm, false) => z,
                _ => rng.random_range(0..width) as u32,
            };
        }
    }

    let prior_component = hyper.niw.sample_posterior(&hyper.niw.empty_stats(), rng)?;
    let uniform = |n: usize| vec![1.0 / n as f64; n];
    let emissions = match settings.variant {
        Variant::Hdphmm => Emissions::Private {
            weights: vec![uniform(width); k],
            components: vec![vec![prior_component; width]; k],
        },
        Variant::Dhdphmm => Emissions::Shared {
            pool_weights: StickWeights::from_probabilities(sample_gem(hyper.tau, width, rng)?.closed()),
            weights: vec![uniform(width); k],
            pool: vec![prior_component; width],
        },
    };
    let mut model = TransducerModel {
        variant: settings.variant,
        dim,
        beta: StickWeights::from_probabilities(sample_gem(hyper.gamma, k, rng)?.closed()),
        initial: uniform(k),
        transitions: vec![uniform(k); k],
        emissions,
        hyper,
        occupancy: vec![0; k],
        unit_ids: (0..k as u32).collect(),
        lineage: Lineage { seed, sweeps: 0 },
    };
    if !corpus.is_empty() {
        let stats = Counts::collect(&model, settings, corpus, &assignments);
        resample_globals(&mut model, settings, &stats, false, rng)?;
    }
    Ok((model, assignments))
}

/// One full sweep. Returns `log p(X | parameters)` summed over utterances,
/// evaluated with the parameters the sweep started from.
pub fn gibbs_iteration<R: Rng + ?Sized>(
    model: &mut TransducerModel,
    settings: &SamplerSettings,
    corpus: &[FeatureSequence],
    assignments: &mut [LatentAssignment],
    rng: &mut R,
) -> Result<f64> {
    if corpus.is_empty() {
        return Ok(0.0);
    }
    if corpus.len() != assignments.len() {
        return Err(Error::InvalidArgument(format!(
            "{} utterances but {} assignments",
            corpus.len(),
            assignments.len()
        )));
    }
    for (seq, a) in corpus.iter().zip(assignments.iter()) {
        if seq.len() != a.z.len() || seq.len() != a.s.len() {
            return Err(Error::InvalidArgument(format!(
                "assignment length mismatch for {}",
                seq.utterance_id
            )));
        }
        if seq.frame(0).len() != model.dim {
            return Err(Error::DimensionMismatch {
                expected: model.dim,
                found: seq.frame(0).len(),
            });
        }
    }

    let seeds: Vec<u64> = corpus.iter().map(|_| rng.random()).collect();
    let snapshot = Snapshot::new(model, settings);
    let sampled: Vec<(Vec<u32>, Vec<u32>, f64)> = corpus
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(seq, &seed)| snapshot.sample_utterance(seq, &mut ChaCha8Rng::seed_from_u64(seed)))
        .collect();
    let mut log_lik = 0.0;
    for ((seq, a), (z, s, ll)) in corpus.iter().zip(assignments.iter_mut()).zip(sampled) {
        if !ll.is_finite() {
            return Err(Error::NonFiniteLikelihood(seq.utterance_id.clone()));
        }
        a.z = z;
        a.s = s;
        log_lik += ll;
    }

    let stats = Counts::collect(model, settings, corpus, assignments);
    resample_globals(model, settings, &stats, settings.resample_concentrations, rng)?;
    model.lineage.sweeps += 1;
    Ok(log_lik)
}

/// Immutable view of the parameters used for state-sequence sampling.
struct Snapshot<'a> {
    model: &'a TransducerModel,
    /// Row-major `K x K`.
    transitions: Vec<f64>,
    shared_fixed: bool,
}

impl<'a> Snapshot<'a> {
    fn new(model: &'a TransducerModel, settings: &SamplerSettings) -> Self {
        Self {
            model,
            transitions: model.transitions.iter().flatten().copied().collect(),
            shared_fixed: settings.variant == Variant::Dhdphmm && !settings.share_components,
        }
    }

    fn sample_utterance<R: Rng>(&self, seq: &FeatureSequence, rng: &mut R) -> (Vec<u32>, Vec<u32>, f64) {
        let model = self.model;
        let k = model.num_states();
        let t_len = seq.len();
        let frames = seq.to_f64();
        let table = model.log_emission_table(&frames);

        // scaled likelihoods: lik[t][j] = exp(table[t][j] - shift[t])
        let mut lik = table;
        let mut log_lik = 0.0;
        for row in lik.chunks_exact_mut(k) {
            let shift = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            log_lik += shift;
            for v in row.iter_mut() {
                *v = (*v - shift).exp();
            }
        }

        // normalized backward messages
        let mut back = vec![1.0; t_len * k];
        let mut weighted = vec![0.0; k];
        for t in (0..t_len.saturating_sub(1)).rev() {
            for j in 0..k {
                weighted[j] = lik[(t + 1) * k + j] * back[(t + 1) * k + j];
            }
            let mut norm = 0.0;
            for i in 0..k {
                let row = &self.transitions[i * k..(i + 1) * k];
                let m: f64 = row.iter().zip(&weighted).map(|(a, w)| a * w).sum();
                back[t * k + i] = m;
                norm += m;
            }
            if !(norm > 0.0 && norm.is_finite()) {
                return self.sample_utterance_log(&frames, &model.log_emission_table(&frames), rng);
            }
            log_lik += norm.ln();
            for v in &mut back[t * k..(t + 1) * k] {
                *v /= norm;
            }
        }

        let mut z = Vec::with_capacity(t_len);
        let mut probs = vec![0.0; k];
        for t in 0..t_len {
            let prior = match z.last() {
                None => &model.initial[..],
                Some(&prev) => &self.transitions[prev as usize * k..(prev as usize + 1) * k],
            };
            for j in 0..k {
                probs[j] = prior[j] * lik[t * k + j] * back[t * k + j];
            }
            if t == 0 {
                let total = probs.iter().sum::<f64>();
                if !(total > 0.0 && total.is_finite()) {
                    return self.sample_utterance_log(&frames, &model.log_emission_table(&frames), rng);
                }
                log_lik += total.ln();
            }
            z.push(sample_categorical(&probs, rng) as u32);
        }

        let s = self.sample_components(&frames, &z, rng);
        (z, s, log_lik)
    }

    /// Same draw as `sample_utterance` with every message kept in log space.
    fn sample_utterance_log<R: Rng>(&self, frames: &[f64], table: &[f64], rng: &mut R) -> (Vec<u32>, Vec<u32>, f64) {
        let model = self.model;
        let k = model.num_states();
        let t_len = table.len() / k;
        let log_trans: Vec<f64> = self.transitions.iter().map(|p| p.ln()).collect();
        let mut back = vec![0.0; t_len * k];
        let mut terms = vec![0.0; k];
        for t in (0..t_len.saturating_sub(1)).rev() {
            for i in 0..k {
                for j in 0..k {
                    terms[j] = log_trans[i * k + j] + table[(t + 1) * k + j] + back[(t + 1) * k + j];
                }
                back[t * k + i] = log_sum_exp(&terms);
            }
        }
        let mut z: Vec<u32> = Vec::with_capacity(t_len);
        let mut log_lik = f64::NEG_INFINITY;
        for t in 0..t_len {
            for j in 0..k {
                let prior = match z.last() {
                    None => model.initial[j].ln(),
                    Some(&prev) => log_trans[prev as usize * k + j],
                };
                terms[j] = prior + table[t * k + j] + back[t * k + j];
            }
            let norm = log_sum_exp(&terms);
            if t == 0 {
                log_lik = norm;
            }
            let probs: Vec<f64> = terms.iter().map(|v| (v - norm).exp()).collect();
            z.push(sample_categorical(&probs, rng) as u32);
        }
        let s = self.sample_components(frames, &z, rng);
        (z, s, log_lik)
    }

    fn sample_components<R: Rng>(&self, frames: &[f64], z: &[u32], rng: &mut R) -> Vec<u32> {
        let dim = self.model.dim;
        let mut logp = Vec::new();
        z.iter()
            .zip(frames.chunks_exact(dim))
            .map(|(&state, x)| {
                let state = state as usize;
                let (weights, components): (&[f64], Box<dyn Iterator<Item = &GaussianComponent>>) =
                    match &self.model.emissions {
                        Emissions::Private { weights, components } => {
                            if components[state].len() == 1 {
                                return 0;
                            }
                            (&weights[state], Box::new(components[state].iter()))
                        }
                        Emissions::Shared { weights, pool, .. } => {
                            if self.shared_fixed {
                                return state as u32;
                            }
                            (&weights[state], Box::new(pool.iter()))
                        }
                    };
                logp.clear();
                logp.extend(
                    weights
                        .iter()
                        .zip(components)
                        .map(|(w, g)| if *w > 0.0 { w.ln() + g.log_density(x) } else { f64::NEG_INFINITY }),
                );
                let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for v in logp.iter_mut() {
                    *v = (*v - max).exp();
                }
                sample_categorical(&logp, rng) as u32
            })
            .collect()
    }
}

/// Counts and sufficient statistics gathered from the current assignments.
struct Counts {
    initial: Vec<u64>,
    /// Row-major `K x K`.
    transitions: Vec<u64>,
    occupancy: Vec<u64>,
    /// Row-major `K x width`.
    components: Vec<u64>,
    stats: Vec<super::gaussian::SuffStats>,
}

impl Counts {
    fn collect(
        model: &TransducerModel,
        settings: &SamplerSettings,
        corpus: &[FeatureSequence],
        assignments: &[LatentAssignment],
    ) -> Self {
        let k = model.num_states();
        let width = settings.mixture_width();
        let niw = &model.hyper.niw;
        let n_stats = match settings.variant {
            Variant::Hdphmm => k * width,
            Variant::Dhdphmm => width,
        };
        let mut counts = Counts {
            initial: vec![0; k],
            transitions: vec![0; k * k],
            occupancy: vec![0; k],
            components: vec![0; k * width],
            stats: vec![niw.empty_stats(); n_stats],
        };
        let mut x = vec![0.0; model.dim];
        for (seq, a) in corpus.iter().zip(assignments) {
            for t in 0..a.z.len() {
                let (z, s) = (a.z[t] as usize, a.s[t] as usize);
                if t == 0 {
                    counts.initial[z] += 1;
                } else {
                    counts.transitions[a.z[t - 1] as usize * k + z] += 1;
                }
                counts.occupancy[z] += 1;
                counts.components[z * width + s] += 1;
                for (xi, &v) in x.iter_mut().zip(seq.frame(t)) {
                    *xi = v as f64;
                }
                let slot = match settings.variant {
                    Variant::Hdphmm => z * width + s,
                    Variant::Dhdphmm => s,
                };
                niw.accumulate(&mut counts.stats[slot], &x);
            }
        }
        counts
    }
}

fn resample_globals<R: Rng + ?Sized>(
    model: &mut TransducerModel,
    settings: &SamplerSettings,
    counts: &Counts,
    resample_concentrations: bool,
    rng: &mut R,
) -> Result<()> {
    let k = model.num_states();
    let width = settings.mixture_width();
    let hyper = model.hyper.clone();
    let sticky = hyper.kappa > 0.0;
    let rho = hyper.rho();

    // auxiliary table counts for the transition groups
    let mut tables = vec![0u64; k * k];
    let mut row_tables = vec![0u64; k];
    let mut overrides = vec![0u64; k];
    for j in 0..k {
        for i in 0..k {
            let n = counts.transitions[j * k + i];
            if n == 0 {
                continue;
            }
            let strength = hyper.alpha * model.beta.weights[i] + if i == j { hyper.kappa } else { 0.0 };
            let m = sample_table_count(n, strength, rng);
            tables[j * k + i] = m;
            row_tables[j] += m;
        }
        if sticky {
            let m_jj = tables[j * k + j];
            let p = rho / (rho + model.beta.weights[j] * (1.0 - rho));
            overrides[j] = sample_binomial(m_jj, p, rng);
        }
    }
    let mut top_counts = vec![0.0; k];
    for j in 0..k {
        for i in 0..k {
            let m = tables[j * k + i] - if i == j { overrides[j] } else { 0 };
            top_counts[i] += m as f64;
        }
    }
    for i in 0..k {
        let n = counts.initial[i];
        if n > 0 {
            top_counts[i] += sample_table_count(n, hyper.alpha * model.beta.weights[i], rng) as f64;
        }
    }

    let beta_params: Vec<f64> = top_counts.iter().map(|m| hyper.gamma / k as f64 + m).collect();
    model.beta = StickWeights::from_probabilities(sample_dirichlet(&beta_params, rng));

    for j in 0..k {
        let params: Vec<f64> = (0..k)
            .map(|i| {
                hyper.alpha * model.beta.weights[i]
                    + if i == j { hyper.kappa } else { 0.0 }
                    + counts.transitions[j * k + i] as f64
            })
            .collect();
        model.transitions[j] = sample_dirichlet(&params, rng);
    }
    let init_params: Vec<f64> = (0..k)
        .map(|i| hyper.alpha * model.beta.weights[i] + counts.initial[i] as f64)
        .collect();
    model.initial = sample_dirichlet(&init_params, rng);

    // emission weights and components
    let mut emission_groups: Vec<(u64, u64)> = Vec::new();
    let mut pool_tables = vec![0u64; width];
    let niw = &hyper.niw;
    match &mut model.emissions {
        Emissions::Private { weights, components } => {
            for j in 0..k {
                let row = &counts.components[j * width..(j + 1) * width];
                weights[j] = if width == 1 {
                    vec![1.0]
                } else {
                    let params: Vec<f64> = row.iter().map(|&n| hyper.sigma / width as f64 + n as f64).collect();
                    sample_dirichlet(&params, rng)
                };
                let occupied = row.iter().filter(|&&n| n > 0).count() as u64;
                if occupied > 0 {
                    emission_groups.push((row.iter().sum(), occupied));
                }
                for c in 0..width {
                    components[j][c] = niw.sample_posterior(&counts.stats[j * width + c], rng)?;
                }
            }
        }
        Emissions::Shared {
            pool_weights,
            weights,
            pool,
        } => {
            for j in 0..k {
                let row = &counts.components[j * width..(j + 1) * width];
                let mut group_tables = 0;
                for (p, &n) in row.iter().enumerate() {
                    let m = sample_table_count(n, hyper.sigma * pool_weights.weights[p], rng);
                    pool_tables[p] += m;
                    group_tables += m;
                }
                if group_tables > 0 {
                    emission_groups.push((row.iter().sum(), group_tables));
                }
            }
            let xi_params: Vec<f64> = pool_tables
                .iter()
                .map(|&m| hyper.tau / width as f64 + m as f64)
                .collect();
            *pool_weights = StickWeights::from_probabilities(sample_dirichlet(&xi_params, rng));
            for j in 0..k {
                weights[j] = if settings.share_components {
                    let params: Vec<f64> = (0..width)
                        .map(|p| hyper.sigma * pool_weights.weights[p] + counts.components[j * width + p] as f64)
                        .collect();
                    sample_dirichlet(&params, rng)
                } else {
                    let mut own = vec![0.0; width];
                    own[j] = 1.0;
                    own
                };
            }
            for (p, g) in pool.iter_mut().enumerate() {
                *g = niw.sample_posterior(&counts.stats[p], rng)?;
            }
        }
    }
    model.occupancy = counts.occupancy.clone();

    if resample_concentrations {
        let priors = &settings.priors;
        let iters = settings.aux_iterations.max(1);
        let groups: Vec<(u64, u64)> = (0..k)
            .map(|j| (counts.transitions[j * k..(j + 1) * k].iter().sum(), row_tables[j]))
            .filter(|&(n, _)| n > 0)
            .collect();
        let total = hyper.alpha + hyper.kappa;
        let total = resample_grouped(total, priors.alpha_plus_kappa, &groups, iters, rng);
        let new_rho = if sticky {
            let w: u64 = overrides.iter().sum();
            let m: u64 = row_tables.iter().sum();
            sample_beta(priors.sticky.a + w as f64, priors.sticky.b + (m - w) as f64, rng)
        } else {
            0.0
        };
        model.hyper.alpha = total * (1.0 - new_rho);
        model.hyper.kappa = total * new_rho;

        let used = top_counts.iter().filter(|&&m| m > 0.0).count() as u64;
        let top_total = top_counts.iter().sum::<f64>() as u64;
        model.hyper.gamma = resample_top_level(hyper.gamma, priors.gamma, used, top_total, iters, rng);

        let sigma_applies = match settings.variant {
            Variant::Hdphmm => width > 1,
            Variant::Dhdphmm => settings.share_components,
        };
        if sigma_applies {
            model.hyper.sigma = resample_grouped(hyper.sigma, priors.sigma, &emission_groups, iters, rng);
        }
        if settings.variant == Variant::Dhdphmm {
            let used = pool_tables.iter().filter(|&&m| m > 0).count() as u64;
            let total: u64 = pool_tables.iter().sum();
            model.hyper.tau = resample_top_level(hyper.tau, priors.tau, used, total, iters, rng);
        }
    }
    Ok(())
}

/// Concentration shared by several DPs, each group given as `(customers, tables)`.
fn resample_grouped<R: Rng + ?Sized>(
    mut value: f64,
    prior: GammaPrior,
    groups: &[(u64, u64)],
    iterations: usize,
    rng: &mut R,
) -> f64 {
    if groups.is_empty() {
        return value;
    }
    let tables: u64 = groups.iter().map(|g| g.1).sum();
    for _ in 0..iterations {
        let mut log_r = 0.0;
        let mut s = 0u64;
        for &(n, _) in groups {
            let n = n as f64;
            log_r += sample_beta(value + 1.0, n, rng).max(f64::MIN_POSITIVE).ln();
            if rng.random::<f64>() < n / (n + value) {
                s += 1;
            }
        }
        value = sample_gamma(prior.shape + (tables - s) as f64, prior.rate - log_r, rng);
    }
    value.max(f64::MIN_POSITIVE)
}

/// Concentration of a single DP with `used` occupied atoms out of `customers` draws.
fn resample_top_level<R: Rng + ?Sized>(
    mut value: f64,
    prior: GammaPrior,
    used: u64,
    customers: u64,
    iterations: usize,
    rng: &mut R,
) -> f64 {
    if used == 0 || customers == 0 {
        return value;
    }
    for _ in 0..iterations {
        let eta = sample_beta(value + 1.0, customers as f64, rng).max(f64::MIN_POSITIVE);
        let rate = prior.rate - eta.ln();
        let shape_hi = prior.shape + used as f64;
        let shape_lo = shape_hi - 1.0;
        let odds = shape_lo / (customers as f64 * rate);
        let use_hi = shape_lo <= 0.0 || rng.random::<f64>() < odds / (1.0 + odds);
        value = sample_gamma(if use_hi { shape_hi } else { shape_lo }, rate, rng);
    }
    value.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_DIM;

    fn settings(truncation: usize) -> SamplerSettings {
        SamplerSettings {
            truncation,
            init_states: truncation,
            ..SamplerSettings::default()
        }
    }

    fn constant(id: &str, t: usize, v: f64) -> FeatureSequence {
        FeatureSequence::from_rows(id, &vec![vec![v; FEATURE_DIM]; t]).unwrap()
    }

    #[test]
    fn empty_corpus_leaves_model_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = settings(5);
        let (mut model, mut assign) = initialize(&[], Hyperparameters::default(), &s, 1, &mut rng).unwrap();
        let before = model.clone();
        let ll = gibbs_iteration(&mut model, &s, &[], &mut assign, &mut rng).unwrap();
        assert_eq!(ll, 0.0);
        assert_eq!(model, before);
    }

    #[test]
    fn one_frame_one_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = settings(10);
        let corpus = vec![constant("u", 1, 0.0)];
        let (mut model, mut assign) = initialize(&corpus, Hyperparameters::default(), &s, 2, &mut rng).unwrap();
        gibbs_iteration(&mut model, &s, &corpus, &mut assign, &mut rng).unwrap();
        assert_eq!(model.state_count(), 1);
        model.validate().unwrap();
    }

    #[test]
    fn invariants_hold_for_both_variants() {
        for variant in [Variant::Hdphmm, Variant::Dhdphmm] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let s = SamplerSettings {
                variant,
                truncation: 8,
                init_states: 8,
                components_per_state: 2,
                pool_size: 6,
                ..SamplerSettings::default()
            };
            let corpus: Vec<_> = (0..4)
                .map(|u| {
                    let rows: Vec<Vec<f64>> = (0..30)
                        .map(|t| vec![((t / 10) as f64) * 3.0 + 0.01 * (u * t) as f64; FEATURE_DIM])
                        .collect();
                    FeatureSequence::from_rows(format!("u{u}"), &rows).unwrap()
                })
                .collect();
            let (mut model, mut assign) = initialize(&corpus, Hyperparameters::default(), &s, 3, &mut rng).unwrap();
            for _ in 0..5 {
                let ll = gibbs_iteration(&mut model, &s, &corpus, &mut assign, &mut rng).unwrap();
                assert!(ll.is_finite());
                model.validate().unwrap();
                assert!(model.hyper.validate().is_ok());
            }
            assert_eq!(model.lineage.sweeps, 5);
        }
    }

    #[test]
    fn mismatched_assignments_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = settings(4);
        let corpus = vec![constant("a", 3, 0.0)];
        let (mut model, mut assign) = initialize(&corpus, Hyperparameters::default(), &s, 4, &mut rng).unwrap();
        assign[0].z.pop();
        assert!(gibbs_iteration(&mut model, &s, &corpus, &mut assign, &mut rng).is_err());
    }

    #[test]
    fn grouped_concentration_tracks_table_rate() {
        // many groups, each with 100 customers seated at 5 tables: 5 ≈ c * ln(1 + 100 / c)
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let groups = vec![(100u64, 5u64); 200];
        let prior = GammaPrior { shape: 1.0, rate: 0.01 };
        let mut v = 1.0;
        let mut acc = 0.0;
        for i in 0..400 {
            v = resample_grouped(v, prior, &groups, 1, &mut rng);
            if i >= 100 {
                acc += v;
            }
        }
        let mean = acc / 300.0;
        let expected_tables = mean * (1.0 + 100.0 / mean).ln();
        assert!((expected_tables - 5.0).abs() < 0.6, "mean {mean}, tables {expected_tables}");
    }
}
