//! Corpus-level steps shared by the subcommands and the integration tests.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::synth::SynthCorpus;
use super::timit::{Split, TimitIndex, QUERY_WORDS};
use crate::eval::{average_keyword_metrics, eer, labelled_scores, precision_at_n, DetCurve, GroundTruth, PrecisionAtN};
use crate::features::{apply_cepstral_mean_norm, extract_mfcc, read_audio, AudioClip, FeatureConfig, FeatureSequence};
use crate::npb::TransducerModel;
use crate::search::{search_keyword, SearchResult};
use crate::transducer::{decode, posteriorgram_with, train_transducer, PosteriorMode, Posteriorgram, UnitSequence};
use crate::{Error, Result};

/// MFCCs for every clip, in input order.
pub fn extract_corpus(clips: &[AudioClip], config: &FeatureConfig) -> Result<Vec<FeatureSequence>> {
    let mut feats = clips
        .par_iter()
        .map(|c| extract_mfcc(c, config))
        .collect::<Result<Vec<_>>>()?;
    if config.cepstral_mean_norm {
        apply_cepstral_mean_norm(&mut feats);
    }
    Ok(feats)
}

/// Unit strings and posteriorgrams for every utterance, in input order.
pub fn decode_corpus(
    model: &TransducerModel,
    corpus: &[FeatureSequence],
    mode: PosteriorMode,
) -> Result<Vec<(UnitSequence, Posteriorgram)>> {
    corpus
        .par_iter()
        .map(|f| Ok((decode(model, f)?, posteriorgram_with(model, f, mode)?)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct KeywordReport {
    pub keyword: String,
    pub precision: PrecisionAtN,
    pub det: DetCurve,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub keywords: Vec<KeywordReport>,
    pub mean_precision: f64,
    pub mean_eer: f64,
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("keyword\tn\tp_at_n\teer\ttruncated\n");
        for k in &self.keywords {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                k.keyword, k.precision.n, k.precision.value, k.det.eer, k.precision.truncated
            );
        }
        let _ = writeln!(out, "average\t\t{}\t{}\t", self.mean_precision, self.mean_eer);
        out
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut out = format!("{:<16}{:>6}{:>10}{:>10}\n", "keyword", "N", "P@N", "EER");
        for k in &self.keywords {
            let flag = if k.precision.truncated { " (short)" } else { "" };
            let _ = writeln!(
                out,
                "{:<16}{:>6}{:>9.2}%{:>9.2}%{flag}",
                k.keyword,
                k.precision.n,
                100.0 * k.precision.value,
                100.0 * k.det.eer
            );
        }
        let _ = writeln!(
            out,
            "{:<16}{:>6}{:>9.2}%{:>9.2}%",
            "average",
            "",
            100.0 * self.mean_precision,
            100.0 * self.mean_eer
        );
        out
    }
}

/// P@N and EER per keyword; a result's query id names its keyword.
/// Every result must score the whole search corpus (no threshold or top-n cut)
/// for the EER to be meaningful.
pub fn evaluate(results: &[SearchResult], truth: &GroundTruth) -> Result<EvalReport> {
    let keywords = results
        .iter()
        .map(|r| {
            let precision = precision_at_n(r, truth, &r.query_id, None)?;
            let det = eer(&labelled_scores(r, truth, &r.query_id))?;
            Ok(KeywordReport {
                keyword: r.query_id.clone(),
                precision,
                det,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = keywords.iter().map(|k| (k.precision.value, k.det.eer)).collect();
    let (mean_precision, mean_eer) = average_keyword_metrics(&pairs)?;
    Ok(EvalReport {
        keywords,
        mean_precision,
        mean_eer,
    })
}

/// Audio and answers for one keyword-search experiment.
#[derive(Debug, Clone)]
pub struct KeywordCorpus {
    /// Audio the transducer is trained on.
    pub train: Vec<AudioClip>,
    /// Utterances searched.
    pub search: Vec<AudioClip>,
    /// Spoken examples per keyword.
    pub queries: Vec<(String, Vec<AudioClip>)>,
    /// Word occurrences in `search`.
    pub truth: GroundTruth,
}

impl KeywordCorpus {
    /// Trains on and searches the same utterances; the planted waveforms are the queries.
    pub fn from_synth(corpus: &SynthCorpus) -> Self {
        let search: Vec<AudioClip> = corpus.utterances.iter().map(|u| u.audio.clone()).collect();
        Self {
            train: search.clone(),
            search,
            queries: corpus
                .keywords
                .iter()
                .zip(&corpus.queries)
                .map(|(k, q)| (k.clone(), vec![q.clone()]))
                .collect(),
            truth: corpus.truth(),
        }
    }

    /// Trains on (at most `max_train`) training utterances, takes query
    /// examples from the training split and searches the test split.
    pub fn from_timit(index: &TimitIndex, max_train: Option<usize>) -> Result<Self> {
        let train = index
            .split(Split::Train)
            .take(max_train.unwrap_or(usize::MAX))
            .map(|u| read_audio(&u.audio).map(|mut c| {
                c.id = u.id.clone();
                c
            }))
            .collect::<Result<Vec<_>>>()?;
        let search = index
            .split(Split::Test)
            .map(|u| read_audio(&u.audio).map(|mut c| {
                c.id = u.id.clone();
                c
            }))
            .collect::<Result<Vec<_>>>()?;
        if train.is_empty() || search.is_empty() {
            return Err(Error::MissingInput("TIMIT corpus needs both TRAIN and TEST utterances".into()));
        }
        let mut queries = Vec::new();
        for (word, _, _) in QUERY_WORDS {
            let clips = index.query_clips(word, Split::Train)?;
            if clips.is_empty() {
                log::warn!("no training examples of {word:?}; keyword skipped");
                continue;
            }
            queries.push((word.to_string(), clips));
        }
        Ok(Self {
            train,
            search,
            queries,
            truth: index.truth(Split::Test),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub model: TransducerModel,
    pub trace: Vec<f64>,
    pub search_features: Vec<FeatureSequence>,
    pub units: Vec<UnitSequence>,
    pub posteriorgrams: Vec<Posteriorgram>,
    /// Unthresholded, untruncated results, one per keyword.
    pub results: Vec<SearchResult>,
    pub report: EvalReport,
}

/// Searches precomputed posteriorgrams with every keyword's examples.
pub fn search_keywords(
    model: &TransducerModel,
    queries: &[(String, Vec<AudioClip>)],
    targets: &[Posteriorgram],
    config: &PipelineConfig,
) -> Result<Vec<SearchResult>> {
    queries
        .iter()
        .map(|(keyword, clips)| {
            let feats = extract_corpus(clips, &config.features)?;
            let examples = feats
                .iter()
                .map(|f| posteriorgram_with(model, f, config.decode.mode))
                .collect::<Result<Vec<_>>>()?;
            search_keyword(keyword, &examples, targets, config.search.combine, None)
        })
        .collect()
}

/// Features, training, decoding, search and evaluation.
pub fn run_keyword_pipeline(corpus: &KeywordCorpus, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let train_features = extract_corpus(&corpus.train, &config.features)?;
    let outcome = train_transducer(&train_features, &config.training)?;
    drop(train_features);
    let search_features = extract_corpus(&corpus.search, &config.features)?;
    let (units, posteriorgrams): (Vec<_>, Vec<_>) =
        decode_corpus(&outcome.model, &search_features, config.decode.mode)?.into_iter().unzip();
    let results = search_keywords(&outcome.model, &corpus.queries, &posteriorgrams, config)?;
    let report = evaluate(&results, &corpus.truth)?;
    Ok(PipelineRun {
        model: outcome.model,
        trace: outcome.trace,
        search_features,
        units,
        posteriorgrams,
        results,
        report,
    })
}
