//! Command-line pipeline: configuration, corpus handling, and subcommands.
//!
//! Every subcommand writes its outputs plus a `manifest.json` into one output
//! directory. Errors map to exit codes through [`crate::Error::exit_code`].

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod synth;
pub mod timit;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::eval::{align_confusion, GroundTruth, PhoneTranscript};
use crate::features::{read_audio, read_feature_file, write_feature_file, AudioClip, FeatureSequence};
use crate::npb::{TransducerModel, Variant};
use crate::search::{search_keyword, Combine, SearchResult};
use crate::transducer::{
    posteriorgram_with, read_posteriorgram_file, train_transducer, write_posteriorgram_file, PosteriorMode,
    Posteriorgram, UnitSequence,
};
use crate::{Error, Result};

pub use config::PipelineConfig;
pub use manifest::{ManifestBuilder, RunManifest};
use pipeline::{decode_corpus, evaluate, extract_corpus, run_keyword_pipeline, KeywordCorpus};

pub const MODEL_FILE: &str = "model.adu";
pub const RESULTS_FILE: &str = "results.tsv";

#[derive(Debug, Parser)]
#[command(name = "adu", version, about = "Acoustic unit discovery and query-by-example spoken term detection")]
pub struct Cli {
    /// Pipeline configuration (TOML). Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract 39-dim MFCC features from audio files or directories.
    Features {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a transducer on a directory of feature files.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Decode features into unit strings and, optionally, posteriorgrams.
    Decode {
        #[arg(long)]
        model: PathBuf,
        /// Feature file or directory.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also write posteriorgram files.
        #[arg(long)]
        posteriorgram: bool,
        /// Posteriorgram rows: forward-backward or viterbi-one-hot.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Search a posteriorgram corpus with spoken examples.
    Search {
        /// Query posteriorgrams or audio; all are examples of one keyword.
        #[arg(long, num_args = 1.., required_unless_present = "queries")]
        query: Vec<PathBuf>,
        /// Directory of queries; `<keyword>[_<suffix>].{pgram,wav}` files group by keyword.
        #[arg(long, conflicts_with = "query")]
        queries: Option<PathBuf>,
        /// Keyword name for `--query` (defaults to the first file stem).
        #[arg(long)]
        query_id: Option<String>,
        /// Directory of target posteriorgrams.
        #[arg(long)]
        corpus: PathBuf,
        /// Needed for audio queries.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        #[arg(long)]
        top: Option<usize>,
        /// Example combination: max or mean.
        #[arg(long)]
        combine: Option<String>,
    },
    /// Score search results against ground truth.
    Eval {
        #[arg(long)]
        results: PathBuf,
        /// TSV of utterance_id, word, start_ms, end_ms.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Unit tables from `decode`, for the unit/phone confusion matrix.
        #[arg(long, requires = "phones")]
        units: Option<PathBuf>,
        /// Phone timing files (`start end label`, in samples).
        #[arg(long, requires = "units")]
        phones: Option<PathBuf>,
        #[arg(long, default_value_t = 16_000)]
        sample_rate: u32,
    },
    /// Write the synthetic keyword corpus.
    SynthCorpus {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// White noise level in PCM16 units.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Run features, training, decoding, search and evaluation in one go.
    Pipeline {
        /// Corpus written by `synth-corpus`.
        #[arg(long, required_unless_present = "with_timit", conflicts_with = "with_timit")]
        corpus: Option<PathBuf>,
        /// Root of a TIMIT-layout corpus.
        #[arg(long)]
        with_timit: Option<PathBuf>,
        /// Cap on TIMIT training utterances.
        #[arg(long)]
        max_train: Option<usize>,
        #[arg(long)]
        work: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// hdphmm or dhdphmm.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub truncation: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, config: &mut PipelineConfig) -> Result<()> {
        let t = &mut config.training;
        if let Some(s) = self.seed {
            t.seed = s;
        }
        if let Some(s) = self.sweeps {
            t.sweeps = s;
        }
        if let Some(v) = &self.variant {
            t.settings.variant = v.parse::<Variant>()?;
        }
        if let Some(k) = self.truncation {
            t.settings.truncation = k;
            t.settings.pool_size = k;
            t.settings.init_states = t.settings.init_states.min(k);
        }
        config.validate()
    }
}

fn parse_mode(s: &str) -> Result<PosteriorMode> {
    match s {
        "forward-backward" | "fb" => Ok(PosteriorMode::ForwardBackward),
        "viterbi-one-hot" | "viterbi" => Ok(PosteriorMode::ViterbiOneHot),
        other => Err(Error::Config(format!(
            "unknown posteriorgram mode {other:?}; use forward-backward or viterbi-one-hot"
        ))),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

/// Files under `dir` (recursively) with one of `exts`, sorted by path.
fn list_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if has_extension(&path, exts) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Files at `path` (one file, or every match in a directory).
fn inputs(path: &Path, exts: &[&str], what: &str) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        return Err(Error::MissingInput(format!("{what} not found: {}", path.display())));
    }
    let files = if path.is_dir() {
        list_files(path, exts)?
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::MissingInput(format!("no {what} in {}", path.display())));
    }
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("utt").to_string()
}

/// Utterance id of an audio file: its path below `root` without extension,
/// components joined by `_`.
fn audio_id(path: &Path, root: &Path) -> String {
    if root == path {
        return file_stem(path);
    }
    let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("_")
}

fn read_audio_as(path: &Path, id: String) -> Result<AudioClip> {
    let mut clip = read_audio(path)?;
    clip.id = id;
    Ok(clip)
}

pub fn load_features(path: &Path, manifest: &mut ManifestBuilder) -> Result<Vec<FeatureSequence>> {
    inputs(path, &["feat"], "feature files")?
        .iter()
        .map(|p| {
            manifest.input(p)?;
            read_feature_file(p)
        })
        .collect()
}

pub fn load_posteriorgrams(path: &Path, manifest: &mut ManifestBuilder) -> Result<Vec<Posteriorgram>> {
    inputs(path, &["pgram"], "posteriorgram files")?
        .iter()
        .map(|p| {
            manifest.input(p)?;
            read_posteriorgram_file(p)
        })
        .collect()
}

fn load_model(path: &Path, manifest: &mut ManifestBuilder) -> Result<TransducerModel> {
    let model = TransducerModel::load(path)?;
    manifest.input(path)?;
    Ok(model)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = PipelineConfig::load_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::Features { input, output } => cmd_features(&config, &input, &output),
        Command::Train {
            features,
            output,
            overrides,
        } => {
            overrides.apply(&mut config)?;
            cmd_train(&config, &features, &output)
        }
        Command::Decode {
            model,
            features,
            output,
            posteriorgram,
            mode,
        } => {
            if let Some(m) = mode {
                config.decode.mode = parse_mode(&m)?;
            }
            cmd_decode(&config, &model, &features, &output, posteriorgram)
        }
        Command::Search {
            query,
            queries,
            query_id,
            corpus,
            model,
            output,
            threshold,
            top,
            combine,
        } => {
            if threshold.is_some() {
                config.search.threshold = threshold;
            }
            if top.is_some() {
                config.search.top = top;
            }
            if let Some(c) = combine {
                config.search.combine = c.parse::<Combine>()?;
            }
            config.validate()?;
            let groups = match queries {
                Some(dir) => group_query_dir(&dir)?,
                None => {
                    let id = query_id.unwrap_or_else(|| file_stem(&query[0]));
                    vec![(id, query)]
                }
            };
            cmd_search(&config, &groups, &corpus, model.as_deref(), &output)
        }
        Command::Eval {
            results,
            truth,
            output,
            units,
            phones,
            sample_rate,
        } => cmd_eval(&config, &results, &truth, &output, units.zip(phones), sample_rate),
        Command::SynthCorpus { output, seed, noise } => {
            let mut cfg = synth::SynthConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = noise {
                cfg.noise = n;
            }
            cmd_synth(&config, &cfg, &output)
        }
        Command::Pipeline {
            corpus,
            with_timit,
            max_train,
            work,
            overrides,
        } => {
            overrides.apply(&mut config)?;
            cmd_pipeline(&config, corpus.as_deref(), with_timit.as_deref(), max_train, &work)
        }
        Command::DefaultConfig => {
            print!("{}", PipelineConfig::default().to_toml()?);
            Ok(())
        }
    }
}

pub fn cmd_features(config: &PipelineConfig, input: &[PathBuf], output: &Path) -> Result<()> {
    let mut manifest = ManifestBuilder::start("features", config, None);
    let mut clips = Vec::new();
    for root in input {
        for path in inputs(root, &["wav", "sph"], "audio files")? {
            manifest.input(&path)?;
            clips.push(read_audio_as(&path, audio_id(&path, root))?);
        }
    }
    let mut ids: Vec<&str> = clips.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("duplicate utterance id {}", w[0])));
    }
    let feats = extract_corpus(&clips, &config.features)?;
    create_dir(output)?;
    for f in &feats {
        let path = output.join(format!("{}.feat", f.utterance_id));
        write_feature_file(f, &path)?;
        manifest.output(&path)?;
    }
    log::info!("wrote {} feature files to {}", feats.len(), output.display());
    manifest.finish(output)?;
    Ok(())
}

pub fn cmd_train(config: &PipelineConfig, features: &Path, output: &Path) -> Result<()> {
    let mut manifest = ManifestBuilder::start("train", config, Some(config.training.seed));
    let corpus = load_features(features, &mut manifest)?;
    let outcome = train_transducer(&corpus, &config.training)?;
    create_dir(output)?;
    let model_path = output.join(MODEL_FILE);
    outcome.model.save(&model_path)?;
    manifest.output(&model_path)?;
    let mut trace = String::from("sweep\tlog_likelihood\tstates\n");
    for (i, (ll, k)) in outcome.trace.iter().zip(&outcome.state_counts).enumerate() {
        trace.push_str(&format!("{}\t{ll}\t{k}\n", i + 1));
    }
    let trace_path = output.join("trace.tsv");
    write_text(&trace_path, &trace)?;
    manifest.output(&trace_path)?;
    println!(
        "trained {} units ({} occupied states) over {} sweeps",
        outcome.model.num_states(),
        outcome.full_model.state_count(),
        config.training.sweeps
    );
    manifest.finish(output)?;
    Ok(())
}

pub fn cmd_decode(
    config: &PipelineConfig,
    model: &Path,
    features: &Path,
    output: &Path,
    with_posteriorgram: bool,
) -> Result<()> {
    let mut manifest = ManifestBuilder::start("decode", config, None);
    let model = load_model(model, &mut manifest)?;
    let corpus = load_features(features, &mut manifest)?;
    let decoded = decode_corpus(&model, &corpus, config.decode.mode)?;
    create_dir(output)?;
    for (units, pg) in &decoded {
        let path = output.join(format!("{}.units.tsv", units.utterance_id));
        write_text(&path, &units.to_tsv())?;
        manifest.output(&path)?;
        if with_posteriorgram {
            let path = output.join(format!("{}.pgram", pg.utterance_id));
            write_posteriorgram_file(pg, &path)?;
            manifest.output(&path)?;
        }
    }
    manifest.finish(output)?;
    Ok(())
}

/// Groups a query directory by keyword: the file stem up to its first `_`.
fn group_query_dir(dir: &Path) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for path in inputs(dir, &["pgram", "wav", "sph"], "query files")? {
        let stem = file_stem(&path);
        let keyword = stem.split('_').next().unwrap_or(&stem).to_string();
        match groups.iter_mut().find(|g| g.0 == keyword) {
            Some(g) => g.1.push(path),
            None => groups.push((keyword, vec![path])),
        }
    }
    Ok(groups)
}

fn query_posteriorgram(
    config: &PipelineConfig,
    path: &Path,
    model: Option<&TransducerModel>,
) -> Result<Posteriorgram> {
    if has_extension(path, &["pgram"]) {
        return read_posteriorgram_file(path);
    }
    let model = model.ok_or_else(|| Error::MissingInput(format!("audio query {} needs --model", path.display())))?;
    let clip = read_audio_as(path, file_stem(path))?;
    let feats = extract_corpus(std::slice::from_ref(&clip), &config.features)?;
    posteriorgram_with(model, &feats[0], config.decode.mode)
}

pub fn cmd_search(
    config: &PipelineConfig,
    groups: &[(String, Vec<PathBuf>)],
    corpus: &Path,
    model: Option<&Path>,
    output: &Path,
) -> Result<()> {
    let mut manifest = ManifestBuilder::start("search", config, None);
    let model = model.map(|m| load_model(m, &mut manifest)).transpose()?;
    let targets = load_posteriorgrams(corpus, &mut manifest)?;
    let mut tsv = format!("{}\n", SearchResult::TSV_HEADER);
    for (keyword, files) in groups {
        let examples = files
            .iter()
            .map(|p| {
                manifest.input(p)?;
                query_posteriorgram(config, p, model.as_ref())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut result = search_keyword(keyword, &examples, &targets, config.search.combine, config.search.threshold)?;
        if let Some(top) = config.search.top {
            result.truncate(top);
        }
        tsv.push_str(&result.tsv_rows());
    }
    create_dir(output)?;
    let path = output.join(RESULTS_FILE);
    write_text(&path, &tsv)?;
    manifest.output(&path)?;
    manifest.finish(output)?;
    Ok(())
}

pub fn cmd_eval(
    config: &PipelineConfig,
    results: &Path,
    truth: &Path,
    output: &Path,
    confusion: Option<(PathBuf, PathBuf)>,
    sample_rate: u32,
) -> Result<()> {
    let mut manifest = ManifestBuilder::start("eval", config, None);
    manifest.input(results)?;
    manifest.input(truth)?;
    let text = fs::read_to_string(results).map_err(|e| Error::io(results, e))?;
    let results = SearchResult::parse_tsv(&text)?;
    let truth = GroundTruth::read(truth)?;
    let report = evaluate(&results, &truth)?;
    create_dir(output)?;
    write_report(&report, output, &mut manifest)?;
    if let Some((units_dir, phones_dir)) = confusion {
        let mut units = Vec::new();
        let mut transcripts = Vec::new();
        for path in inputs(&units_dir, &["tsv"], "unit tables")? {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let Some(id) = name.strip_suffix(".units.tsv") else {
                continue;
            };
            manifest.input(&path)?;
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            units.push(UnitSequence::from_tsv(id, &text)?);
            let phn = phones_dir.join(format!("{id}.phn"));
            let text = fs::read_to_string(&phn).map_err(|e| Error::io(&phn, e))?;
            manifest.input(&phn)?;
            transcripts.push(PhoneTranscript::parse_timit(id, &text, sample_rate)?);
        }
        let matrix = align_confusion(
            &units,
            &transcripts,
            config.features.frame_shift_ms,
            config.features.frame_length_ms,
        )?;
        let path = output.join("confusion.tsv");
        write_text(&path, &matrix.to_tsv())?;
        manifest.output(&path)?;
    }
    print!("{}", report.summary());
    manifest.finish(output)?;
    Ok(())
}

fn write_report(report: &pipeline::EvalReport, output: &Path, manifest: &mut ManifestBuilder) -> Result<()> {
    let path = output.join("summary.tsv");
    write_text(&path, &report.to_tsv())?;
    manifest.output(&path)?;
    for k in &report.keywords {
        let path = output.join(format!("det_{}.tsv", k.keyword));
        write_text(&path, &k.det.to_tsv())?;
        manifest.output(&path)?;
    }
    Ok(())
}

pub fn cmd_synth(config: &PipelineConfig, synth_config: &synth::SynthConfig, output: &Path) -> Result<()> {
    let manifest = ManifestBuilder::start("synth-corpus", config, Some(synth_config.seed));
    let corpus = synth::generate(synth_config)?;
    corpus.write(output)?;
    let path = output.join("synth.toml");
    write_text(
        &path,
        &toml::to_string_pretty(synth_config).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    let mut manifest = manifest;
    for f in list_files(output, &["wav", "phn", "tsv", "txt", "toml"])? {
        manifest.output(&f)?;
    }
    println!(
        "wrote {} utterances and {} keyword queries to {}",
        corpus.utterances.len(),
        corpus.queries.len(),
        output.display()
    );
    manifest.finish(output)?;
    Ok(())
}

/// Reads a directory written by `synth-corpus`.
pub fn load_synth_dir(dir: &Path, manifest: &mut ManifestBuilder) -> Result<KeywordCorpus> {
    let truth_path = dir.join("truth.tsv");
    manifest.input(&truth_path)?;
    let truth = GroundTruth::read(&truth_path)?;
    let audio_dir = dir.join("audio");
    let mut search = Vec::new();
    for p in inputs(&audio_dir, &["wav"], "audio files")? {
        manifest.input(&p)?;
        search.push(read_audio_as(&p, file_stem(&p))?);
    }
    let mut queries: Vec<(String, Vec<AudioClip>)> = Vec::new();
    for (keyword, files) in group_query_dir(&dir.join("queries"))? {
        let clips = files
            .iter()
            .map(|p| {
                manifest.input(p)?;
                read_audio_as(p, file_stem(p))
            })
            .collect::<Result<Vec<_>>>()?;
        queries.push((keyword, clips));
    }
    Ok(KeywordCorpus {
        train: search.clone(),
        search,
        queries,
        truth,
    })
}

pub fn cmd_pipeline(
    config: &PipelineConfig,
    corpus: Option<&Path>,
    timit_root: Option<&Path>,
    max_train: Option<usize>,
    work: &Path,
) -> Result<()> {
    let mut manifest = ManifestBuilder::start("pipeline", config, Some(config.training.seed));
    let data = match (corpus, timit_root) {
        (Some(dir), _) => load_synth_dir(dir, &mut manifest)?,
        (None, Some(root)) => {
            let index = timit::ingest_timit_layout(root)?;
            KeywordCorpus::from_timit(&index, max_train)?
        }
        (None, None) => return Err(Error::Config("pipeline needs --corpus or --with-timit".into())),
    };
    let run = run_keyword_pipeline(&data, config)?;
    create_dir(work)?;
    let model_path = work.join(MODEL_FILE);
    run.model.save(&model_path)?;
    manifest.output(&model_path)?;
    let mut tsv = format!("{}\n", SearchResult::TSV_HEADER);
    for r in &run.results {
        tsv.push_str(&r.tsv_rows());
    }
    let path = work.join(RESULTS_FILE);
    write_text(&path, &tsv)?;
    manifest.output(&path)?;
    write_report(&run.report, work, &mut manifest)?;
    println!("{} units", run.model.num_states());
    print!("{}", run.report.summary());
    manifest.finish(work)?;
    Ok(())
}
