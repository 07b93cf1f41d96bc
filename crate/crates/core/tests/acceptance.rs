//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion does.
//!
//! Set `ADU_TIMIT_ROOT` to a TIMIT tree to add the full-corpus check.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use adu_core::cli::config::PipelineConfig;
use adu_core::cli::pipeline::{evaluate, run_keyword_pipeline, search_keywords, KeywordCorpus};
use adu_core::cli::synth::{generate, SynthConfig};
use adu_core::eval::{align_confusion, eer, PhoneTranscript, TimedPhone};
use adu_core::features::{FeatureSequence, FEATURE_DIM};
use adu_core::npb::{
    sample_gem, sticky_transition_prior, Covariance, Emissions, GaussianComponent, Hyperparameters, SamplerSettings,
    StickWeights, TransducerModel, Variant,
};
use adu_core::search::{frame_cost, subsequence_dtw, subsequence_dtw_costs, DtwMatch};
use adu_core::transducer::{
    decode, posteriorgram, state_posteriors, train_transducer, viterbi, Posteriorgram, TrainingOptions, POSTERIOR_FLOOR,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn training(seed: u64, sweeps: usize) -> TrainingOptions {
    TrainingOptions {
        settings: SamplerSettings {
            truncation: 50,
            init_states: 50,
            pool_size: 50,
            ..Default::default()
        },
        sweeps,
        seed,
        min_occupancy: 0.01,
        ..Default::default()
    }
}

// ---------------------------------------------------------------- 1, 2

fn gem_normalization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for draw in 0..1000 {
        let k = 1 + draw % 300;
        let conc = 0.1 + 10.0 * rng.random::<f64>();
        let s = sample_gem(conc, k, &mut rng).map_err(|e| e.to_string())?;
        worst = worst.max((s.weights.iter().sum::<f64>() + s.remainder - 1.0).abs());
    }
    check(worst <= 1e-12, || format!("sum + remainder off by {worst:e}"))?;
    let forced = StickWeights::from_fractions(&[0.5, 0.5, 0.5]);
    check(forced.weights == [0.5, 0.25, 0.125], || format!("forced draw gave {:?}", forced.weights))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max |sum + remainder - 1| = {worst:.1e}"))
}

fn sticky_reduction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let beta = sample_gem(2.0, 8, &mut rng).map_err(|e| e.to_string())?;
        let hyper = Hyperparameters {
            alpha: 0.5 + rng.random::<f64>(),
            kappa: 0.0,
            ..Default::default()
        };
        for j in 0..8 {
            let prior = sticky_transition_prior(&beta, j, &hyper).map_err(|e| e.to_string())?;
            check(prior == beta.weights, || format!("kappa = 0 row {j} differs from beta"))?;
        }
    }
    let uniform = StickWeights::from_probabilities(vec![0.25; 4]);
    let hyper = Hyperparameters {
        alpha: 1.0,
        kappa: 1.0,
        ..Default::default()
    };
    let row = sticky_transition_prior(&uniform, 2, &hyper).map_err(|e| e.to_string())?;
    check(row == [0.125, 0.125, 0.625, 0.125], || format!("alpha = kappa row: {row:?}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("kappa = 0 reproduces beta; alpha = kappa gives 0.625 / 0.125".into())
}

// ---------------------------------------------------------------- 3, 4

fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// A fully connected model with close unit-variance Gaussians, so the
/// posteriors stay far from one-hot.
fn random_model(rng: &mut ChaCha8Rng, k: usize) -> TransducerModel {
    let components = (0..k)
        .map(|_| {
            let mean = (0..FEATURE_DIM).map(|_| rng.random_range(-0.3..0.3)).collect();
            let var = (0..FEATURE_DIM).map(|_| rng.random_range(0.8..1.2)).collect();
            vec![GaussianComponent::new(mean, Covariance::Diagonal(var)).unwrap()]
        })
        .collect();
    let transitions = (0..k).map(|_| random_distribution(rng, k)).collect();
    TransducerModel::new(
        Variant::Hdphmm,
        random_distribution(rng, k),
        transitions,
        Emissions::Private {
            weights: vec![vec![1.0]; k],
            components,
        },
        Hyperparameters::default(),
    )
    .unwrap()
}

fn random_features(rng: &mut ChaCha8Rng, id: &str, t: usize) -> FeatureSequence {
    let rows: Vec<Vec<f64>> = (0..t)
        .map(|_| (0..FEATURE_DIM).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    FeatureSequence::from_rows(id, &rows).unwrap()
}

/// Every state path of length `t` over `k` states, in lexicographic order.
fn all_paths(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![vec![]];
    for _ in 0..t {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    paths
}

/// Path score accumulated in the same order as the recursion.
fn path_score(li: &[f64], lt: &[f64], le: &[f64], k: usize, path: &[usize]) -> f64 {
    let mut s = li[path[0]] + le[path[0]];
    for t in 1..path.len() {
        s = s + lt[path[t - 1] * k + path[t]] + le[t * k + path[t]];
    }
    s
}

/// Best path by enumeration; equal scores go to the path that is smaller
/// when read from the last frame backwards.
fn brute_viterbi(li: &[f64], lt: &[f64], le: &[f64], k: usize) -> Vec<usize> {
    let t = le.len() / k;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for path in all_paths(k, t) {
        let s = path_score(li, lt, le, k, &path);
        let better = match &best {
            None => true,
            Some((bs, bp)) => s > *bs || (s == *bs && path.iter().rev().lt(bp.iter().rev())),
        };
        if better {
            best = Some((s, path));
        }
    }
    best.unwrap().1
}

fn model_tables(model: &TransducerModel, feats: &FeatureSequence) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        model.initial.iter().map(|p| p.ln()).collect(),
        model.transitions.iter().flatten().map(|p| p.ln()).collect(),
        model.log_emission_table(&feats.to_f64()),
    )
}

fn viterbi_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ties = 0;
    for case in 0..200 {
        let k = rng.random_range(1..=4);
        let t = rng.random_range(1..=6);
        if case % 2 == 0 {
            // Real models through the public decoder.
            let model = random_model(&mut rng, k);
            let feats = random_features(&mut rng, "u", t);
            let got = decode(&model, &feats).map_err(|e| e.to_string())?.labels();
            let (li, lt, le) = model_tables(&model, &feats);
            let want: Vec<u32> = brute_viterbi(&li, &lt, &le, k).iter().map(|&j| j as u32).collect();
            check(got == want, || format!("case {case}: decoded {got:?}, enumeration {want:?}"))?;
        } else {
            // Small integer scores are exact in floating point and tie constantly.
            let mut ints = |n: usize| -> Vec<f64> { (0..n).map(|_| -(rng.random_range(0..3) as f64)).collect() };
            let (li, lt, le) = (ints(k), ints(k * k), ints(t * k));
            let (got, _) = viterbi(&li, &lt, &le);
            let want = brute_viterbi(&li, &lt, &le, k);
            let best = path_score(&li, &lt, &le, k, &want);
            if all_paths(k, t).iter().filter(|p| path_score(&li, &lt, &le, k, p) == best).count() > 1 {
                ties += 1;
            }
            check(got == want, || format!("case {case}: viterbi {got:?}, enumeration {want:?}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("200 models agree, {ties} with tied optima"))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn posteriorgram_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut worst_sum): (f64, f64) = (0.0, 0.0);
    for case in 0..100 {
        let k = rng.random_range(1..=3);
        let t = rng.random_range(1..=5);
        let model = random_model(&mut rng, k);
        let feats = random_features(&mut rng, "u", t);
        let (li, lt, le) = model_tables(&model, &feats);
        let paths = all_paths(k, t);
        let scores: Vec<f64> = paths.iter().map(|p| path_score(&li, &lt, &le, k, p)).collect();
        let total = log_sum_exp(&scores);
        let mut post = vec![0.0; t * k];
        for (p, s) in paths.iter().zip(&scores) {
            let w = (s - total).exp();
            for (f, &j) in p.iter().enumerate() {
                post[f * k + j] += w;
            }
        }
        let pg = posteriorgram(&model, &feats).map_err(|e| e.to_string())?;
        let raw = state_posteriors(&model, &feats).map_err(|e| e.to_string())?;
        let scale = 1.0 - k as f64 * POSTERIOR_FLOOR;
        for f in 0..t {
            let row = pg.row(f);
            worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
            for j in 0..k {
                let want = scale * post[f * k + j] + POSTERIOR_FLOOR;
                worst = worst.max((row[j] - want).abs()).max((raw[f * k + j] - post[f * k + j]).abs());
            }
        }
        check(worst <= 1e-8, || format!("case {case}: deviation {worst:e}"))?;
        check(worst_sum <= 1e-6, || format!("case {case}: row sum off by {worst_sum:e}"))?;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("max deviation {worst:.1e}, max row-sum error {worst_sum:.1e}"))
}

// ---------------------------------------------------------------- 5, 6

/// Cheapest warping path from `(0, a)` to `(n - 1, b)` by enumeration.
fn cheapest_path(cost: &[f64], m: usize, n: usize, a: usize, b: usize) -> f64 {
    let mut best = f64::INFINITY;
    let mut stack = vec![(0, a, cost[a])];
    while let Some((i, j, acc)) = stack.pop() {
        if i == n - 1 && j == b {
            best = best.min(acc);
            continue;
        }
        for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < n && nj <= b {
                stack.push((ni, nj, acc + cost[ni * m + nj]));
            }
        }
    }
    best
}

/// Minimum over all spans; ties go to the smaller end, then the larger start.
fn brute_dtw(cost: &[f64], n: usize, m: usize) -> DtwMatch {
    let mut best: Option<DtwMatch> = None;
    for b in 0..m {
        for a in (0..=b).rev() {
            let d = cheapest_path(cost, m, n, a, b);
            if best.is_none_or(|x| d < x.distance) {
                best = Some(DtwMatch {
                    distance: d,
                    a_star: a,
                    b_star: b,
                });
            }
        }
    }
    best.unwrap()
}

fn random_posteriorgram(rng: &mut ChaCha8Rng, id: &str, frames: usize, u: usize) -> Posteriorgram {
    let values = (0..frames).flat_map(|_| random_distribution(rng, u)).collect();
    Posteriorgram::new(id, (0..u as u32).collect(), 10.0, values)
        .unwrap()
        .floored(POSTERIOR_FLOOR)
        .unwrap()
}

fn dtw_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=8);
        let u = rng.random_range(2..=5);
        let q = random_posteriorgram(&mut rng, "q", n, u);
        let x = random_posteriorgram(&mut rng, "x", m, u);
        let got = subsequence_dtw(&q, &x).map_err(|e| e.to_string())?;
        let cost: Vec<f64> = q
            .rows()
            .flat_map(|a| x.rows().map(|b| frame_cost(a, b).unwrap()).collect::<Vec<_>>())
            .collect();
        let want = brute_dtw(&cost, n, m);
        check(got == want, || format!("posteriorgram case {case}: {got:?} vs {want:?}"))?;
    }
    // Integer costs add exactly, so ties are common and must resolve identically.
    let mut tied = 0;
    for case in 0..500 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=8);
        let cost: Vec<f64> = (0..n * m).map(|_| rng.random_range(0..3) as f64).collect();
        let got = subsequence_dtw_costs(&cost, n, m).map_err(|e| e.to_string())?;
        let want = brute_dtw(&cost, n, m);
        let spans = (0..m)
            .flat_map(|b| (0..=b).map(move |a| (a, b)))
            .filter(|&(a, b)| cheapest_path(&cost, m, n, a, b) == want.distance)
            .count();
        if spans > 1 {
            tied += 1;
        }
        check(got == want, || format!("integer case {case}: {got:?} vs {want:?}"))?;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("1000 pairs agree exactly, {tied} with tied spans"))
}

fn cost_identities() -> Outcome {
    let one_hot = [0.0, 1.0, 0.0];
    let c = frame_cost(&one_hot, &one_hot).map_err(|e| e.to_string())?;
    check(c == 0.0, || format!("one-hot self cost {c}"))?;
    let uniform = [0.25; 4];
    let c = frame_cost(&uniform, &uniform).map_err(|e| e.to_string())?;
    let want = -(0.25f64.ln());
    check((c - want).abs() <= 1e-12, || format!("uniform cost {c}, expected {want}"))?;
    Ok(format!("one-hot 0, uniform U=4 {c:.12}"))
}

// ---------------------------------------------------------------- 7

/// Utterances from a sticky 3-state HMM whose state `k` shifts every
/// dimension `d` with `d % 3 == k` by 4.
fn three_state_corpus(seed: u64) -> Vec<FeatureSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..50)
        .map(|u| {
            let mut state = rng.random_range(0..3);
            let rows: Vec<Vec<f64>> = (0..100)
                .map(|_| {
                    if rng.random::<f64>() >= 0.9 {
                        state = (state + rng.random_range(1..3)) % 3;
                    }
                    (0..FEATURE_DIM)
                        .map(|d| normal.sample(&mut rng) + if d % 3 == state { 4.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            FeatureSequence::from_rows(format!("u{u:02}"), &rows).unwrap()
        })
        .collect()
}

fn synthetic_recovery() -> Outcome {
    let start = Instant::now();
    let mut exact = 0;
    let mut counts = Vec::new();
    let mut rising = true;
    for seed in 0..10 {
        let corpus = three_state_corpus(100 + seed);
        let out = train_transducer(&corpus, &training(seed, 200)).map_err(|e| e.to_string())?;
        let k = out.model.num_states();
        counts.push(k);
        if k == 3 {
            exact += 1;
        }
        let head: f64 = out.trace[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = out.trace[out.trace.len() - 10..].iter().sum::<f64>() / 10.0;
        rising &= tail > head;
    }
    check(exact >= 9, || format!("3 states in only {exact}/10 runs: {counts:?}"))?;
    check(rising, || "a likelihood trace did not rise".into())?;
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!("state counts {counts:?}, {:.0?}", start.elapsed()))
}

// ---------------------------------------------------------------- 8, 10

fn pipeline_config(seed: u64, sweeps: usize) -> PipelineConfig {
    PipelineConfig {
        training: TrainingOptions {
            min_occupancy: TrainingOptions::default().min_occupancy,
            ..training(seed, sweeps)
        },
        ..Default::default()
    }
}

fn planted_queries() -> Outcome {
    let start = Instant::now();
    let synth = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let corpus = KeywordCorpus::from_synth(&synth);
    let config = pipeline_config(1, 200);
    let run = run_keyword_pipeline(&corpus, &config).map_err(|e| e.to_string())?;
    for k in &run.report.keywords {
        check(k.precision.value == 1.0, || format!("{}: P@N {}", k.keyword, k.precision.value))?;
        check(k.det.eer == 0.0, || format!("{}: EER {}", k.keyword, k.det.eer))?;
    }

    // Same model, search utterances with Gaussian noise at a quarter of
    // each dimension's standard deviation.
    let feats = &run.search_features;
    let frames: Vec<Vec<f64>> = feats.iter().flat_map(|f| f.frames().map(|r| r.iter().map(|&v| v as f64).collect())).collect();
    let count = frames.len() as f64;
    let std: Vec<f64> = (0..FEATURE_DIM)
        .map(|d| {
            let mean = frames.iter().map(|r| r[d]).sum::<f64>() / count;
            (frames.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / count).sqrt()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let noisy = feats
        .iter()
        .map(|f| {
            let rows: Vec<Vec<f64>> = f
                .frames()
                .map(|r| r.iter().enumerate().map(|(d, &v)| v as f64 + 0.25 * std[d] * normal.sample(&mut rng)).collect())
                .collect();
            let seq = FeatureSequence::from_rows(f.utterance_id.clone(), &rows)?;
            posteriorgram(&run.model, &seq)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let results = search_keywords(&run.model, &corpus.queries, &noisy, &config).map_err(|e| e.to_string())?;
    let report = evaluate(&results, &corpus.truth).map_err(|e| e.to_string())?;
    let noisy_p: Vec<f64> = report.keywords.iter().map(|k| k.precision.value).collect();
    for k in &report.keywords {
        check(k.precision.value >= 0.8, || format!("noisy {}: P@N {}", k.keyword, k.precision.value))?;
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "clean P@N 1, EER 0 for {} keywords; noisy P@N {noisy_p:?}",
        run.report.keywords.len()
    ))
}

fn determinism() -> Outcome {
    let synth = generate(&SynthConfig {
        occurrences_per_keyword: 2,
        distractors: 6,
        num_keywords: 3,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let corpus = KeywordCorpus::from_synth(&synth);
    let config = pipeline_config(11, 30);
    let artifacts = || -> Result<(Vec<u8>, String), String> {
        let run = run_keyword_pipeline(&corpus, &config).map_err(|e| e.to_string())?;
        let tsv: String = run.results.iter().map(|r| r.to_tsv()).collect();
        Ok((run.model.to_bytes().map_err(|e| e.to_string())?, tsv))
    };
    let (m1, r1) = artifacts()?;
    let (m2, r2) = artifacts()?;
    check(m1 == m2, || "model bytes differ".into())?;
    check(r1 == r2, || "search TSVs differ".into())?;
    Ok(format!("{} model bytes and {} TSV bytes identical", m1.len(), r1.len()))
}

// ---------------------------------------------------------------- 9

/// FAR and FRR at every distinct score and at `+inf`, counted directly.
fn brute_eer(scores: &[(f64, bool)]) -> f64 {
    let mut thresholds: Vec<f64> = scores.iter().map(|s| s.0).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let pos = scores.iter().filter(|s| s.1).count() as f64;
    let neg = scores.len() as f64 - pos;
    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&th| {
            let fa = scores.iter().filter(|s| !s.1 && s.0 >= th).count() as f64;
            let fr = scores.iter().filter(|s| s.1 && s.0 < th).count() as f64;
            (fa / neg, fr / pos)
        })
        .collect();
    let i = rates.iter().position(|(fa, fr)| fa - fr <= 0.0).unwrap();
    let (fa, fr) = rates[i];
    if fa == fr || i == 0 {
        return fa;
    }
    let (pa, pr) = rates[i - 1];
    let (d0, d1) = (pa - pr, fa - fr);
    pa + d0 / (d0 - d1) * (fa - pa)
}

fn eer_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(2..40);
        let mut scores: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                let positive = rng.random::<bool>();
                let shift = if positive { 4 } else { 0 };
                ((rng.random_range(0..12) + shift) as f64, positive)
            })
            .collect();
        scores[0].1 = true;
        scores[1].1 = false;
        let got = eer(&scores).map_err(|e| e.to_string())?.eer;
        let want = brute_eer(&scores);
        worst = worst.max((got - want).abs());
        check((got - want).abs() <= 1e-12, || format!("case {case}: {got} vs {want}"))?;
        let transforms: [fn(f64) -> f64; 3] = [|x| 3.0 * x - 7.0, |x| (x / 4.0).exp(), |x| x * x * x + x];
        for f in transforms {
            let moved: Vec<(f64, bool)> = scores.iter().map(|&(s, l)| (f(s), l)).collect();
            let e = eer(&moved).map_err(|e| e.to_string())?.eer;
            check(e == got, || format!("case {case}: transform changed EER {got} -> {e}"))?;
        }
    }
    Ok(format!("100 sets, max deviation {worst:.1e}, invariant under 3 transforms"))
}

// ---------------------------------------------------------------- 11

const PHONEMES: [&str; 5] = ["aa", "iy", "m", "s", "t"];

/// Phone strings whose frames come from one Gaussian per phoneme, with
/// millisecond boundaries placed so frame centres fall inside their phone.
fn phoneme_corpus(seed: u64) -> (Vec<FeatureSequence>, Vec<PhoneTranscript>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (mut feats, mut transcripts) = (Vec::new(), Vec::new());
    for u in 0..40 {
        let id = format!("p{u:02}");
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut spans: Vec<(usize, usize, usize)> = Vec::new();
        let mut prev = usize::MAX;
        for _ in 0..rng.random_range(6..=10) {
            let mut p = rng.random_range(0..PHONEMES.len());
            while p == prev {
                p = rng.random_range(0..PHONEMES.len());
            }
            prev = p;
            let len = rng.random_range(5..=15);
            spans.push((p, rows.len(), rows.len() + len));
            for _ in 0..len {
                rows.push(
                    (0..FEATURE_DIM)
                        .map(|d| normal.sample(&mut rng) + if d % PHONEMES.len() == p { 4.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
        let last = rows.len();
        let phones = spans
            .iter()
            .map(|&(p, s, e)| TimedPhone {
                label: PHONEMES[p].into(),
                start_ms: if s == 0 { 0.0 } else { s as f64 * 10.0 + 7.5 },
                end_ms: if e == last { (last - 1) as f64 * 10.0 + 25.0 } else { e as f64 * 10.0 + 7.5 },
            })
            .collect();
        transcripts.push(PhoneTranscript::new(id.clone(), phones).unwrap());
        feats.push(FeatureSequence::from_rows(id, &rows).unwrap());
    }
    (feats, transcripts)
}

fn confusion_alignment() -> Outcome {
    let (feats, transcripts) = phoneme_corpus(11);
    let out = train_transducer(&feats, &training(3, 200)).map_err(|e| e.to_string())?;
    let units = feats
        .iter()
        .map(|f| decode(&out.model, f))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let matrix = align_confusion(&units, &transcripts, 10.0, 25.0).map_err(|e| e.to_string())?;
    let fractions: BTreeMap<&str, f64> = matrix
        .phoneme_ids
        .iter()
        .enumerate()
        .map(|(p, id)| (id.as_str(), (matrix.dominant_fraction(p) * 1000.0).round() / 1000.0))
        .collect();
    for (id, f) in &fractions {
        check(*f >= 0.8, || format!("phoneme {id}: dominant unit holds {f}"))?;
    }
    Ok(format!("{} units, dominant fractions {fractions:?}", out.model.num_states()))
}

// ---------------------------------------------------------------- TIMIT

fn timit(root: &str) -> Outcome {
    use adu_core::cli::timit::ingest_timit_layout;
    let index = ingest_timit_layout(std::path::Path::new(root)).map_err(|e| e.to_string())?;
    let corpus = KeywordCorpus::from_timit(&index, None).map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        training: TrainingOptions { seed: 1, ..Default::default() },
        ..Default::default()
    };
    let run = run_keyword_pipeline(&corpus, &config).map_err(|e| e.to_string())?;
    let (p, e) = (run.report.mean_precision, run.report.mean_eer);
    check(p >= 0.5, || format!("average P@N {p}"))?;
    check(e <= 0.2, || format!("average EER {e}"))?;
    Ok(format!("average P@N {p:.4}, EER {e:.4}"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("1 GEM normalization", gem_normalization),
        ("2 sticky prior reduction", sticky_reduction),
        ("3 Viterbi oracle", viterbi_oracle),
        ("4 posteriorgram oracle", posteriorgram_oracle),
        ("5 subsequence DTW oracle", dtw_oracle),
        ("6 cost identities", cost_identities),
        ("7 synthetic recovery", synthetic_recovery),
        ("8 planted queries", planted_queries),
        ("9 EER oracle", eer_oracle),
        ("10 determinism", determinism),
        ("11 confusion alignment", confusion_alignment),
    ];
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome, elapsed: Duration| match outcome {
        Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
        Err(why) => {
            failed += 1;
            println!("FAIL  {name}: {why} [{elapsed:.2?}]");
        }
    };
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        report(name, outcome, start.elapsed());
    }
    match std::env::var("ADU_TIMIT_ROOT") {
        Ok(root) => {
            let start = Instant::now();
            let outcome = timit(&root);
            report("TIMIT keyword search", outcome, start.elapsed());
        }
        Err(_) => println!("SKIP  TIMIT keyword search: ADU_TIMIT_ROOT not set"),
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
