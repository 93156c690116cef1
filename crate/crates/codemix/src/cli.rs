//! The `codemix` command line. Commands write to caller-supplied streams so
//! they can be driven in-process.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use codemix_core::cg::{self, CodeMixedSentence, GenerateOptions, Prepared};
use codemix_core::game::{self, GameOptions, GateMode, SimilarityTarget};
use codemix_core::inflect_hi::RuleTable;
use codemix_core::metrics::{self, MetricScores, StddevMode};
use codemix_core::providers::wire::ProviderRequest;
use codemix_core::text::preprocess;
use codemix_core::vocab::Scoring;
use codemix_core::{Cmd, FrequencyVocab, HomonymDictionary, LanguagePair};
use serde::Serialize;
use serde_json::json;

use crate::batch::{run_ordered, DEFAULT_WORKERS};
use crate::cache::{read_records, CacheMode};
use crate::config::{ProviderConfig, Session};
use crate::formats::{check_dataset, read_jsonl, EvalPair, Group, LineError};
use crate::vocab_io;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// An error in how the tool was invoked, as opposed to a failure while
/// running. Exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(
    name = "codemix",
    version,
    about = "Controlled code-mixed generation and gold-standard-agnostic evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency vocabularies from code-mixed corpora.
    #[command(subcommand)]
    Vocab(VocabCommand),
    /// Generate code-mixed sentences at one or more code-mixing degrees.
    Generate(GenerateArgs),
    /// Score code-mixed candidates against English references with GAME.
    Evaluate(EvaluateArgs),
    /// Compare the spread of GAME and BLEU over groups of equivalent variants.
    Compare(CompareArgs),
    /// Check parallel dataset files.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Inspect provider cache files.
    #[command(subcommand)]
    Cache(CacheCommand),
}

#[derive(Debug, Subcommand)]
pub enum VocabCommand {
    Build {
        /// One utterance per line; may be repeated.
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        pair: LanguagePair,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    Validate {
        #[arg(long)]
        file: PathBuf,
    },
    Stats {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheCommand {
    /// Record counts per backend and task.
    Stats {
        #[arg(long)]
        cache: PathBuf,
    },
    /// Recompute every request hash.
    Verify {
        #[arg(long)]
        cache: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Record,
    Replay,
    Live,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Provider configuration (JSON).
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Record/replay cache (JSONL).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Defaults to `replay` when a cache is given, `live` otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

impl ProviderArgs {
    fn open(&self) -> anyhow::Result<Session> {
        let path = self
            .providers
            .as_ref()
            .ok_or_else(|| usage("--providers is required"))?;
        require_file(path, "--providers")?;
        let mode = match (self.mode, &self.cache) {
            (Some(ModeArg::Record), _) => CacheMode::Record,
            (Some(ModeArg::Replay), _) | (None, Some(_)) => CacheMode::Replay,
            (Some(ModeArg::Live), _) | (None, None) => CacheMode::Live,
        };
        if mode != CacheMode::Live && self.cache.is_none() {
            return Err(usage(format!("--mode {mode:?} needs --cache").to_lowercase()));
        }
        if mode == CacheMode::Replay {
            require_file(self.cache.as_ref().unwrap(), "--cache")?;
        }
        let config = ProviderConfig::load(path).map_err(|e| usage(format!("{e:#}")))?;
        Session::open(&config, self.cache.as_deref(), mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GateArg {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Reconstruction,
    FirstTranslation,
}

#[derive(Debug, Args)]
pub struct GameArgs {
    #[arg(long, value_enum, default_value = "strict")]
    pub gate: GateArg,
    /// What the reference is compared with.
    #[arg(long, value_enum, default_value = "reconstruction")]
    pub target: TargetArg,
    /// Extra homonym dictionary, merged over the bundled one.
    #[arg(long)]
    pub homonyms: Option<PathBuf>,
}

impl GameArgs {
    fn options(&self) -> GameOptions {
        GameOptions {
            gate: match self.gate {
                GateArg::Strict => GateMode::Strict,
                GateArg::Lenient => GateMode::Lenient,
            },
            target: match self.target {
                TargetArg::Reconstruction => SimilarityTarget::Reconstruction,
                TargetArg::FirstTranslation => SimilarityTarget::FirstTranslation,
            },
        }
    }

    fn homonyms(&self, pair: &LanguagePair) -> anyhow::Result<HomonymDictionary> {
        let mut dict = HomonymDictionary::defaults(pair);
        if let Some(path) = &self.homonyms {
            require_file(path, "--homonyms")?;
            let extra = HomonymDictionary::from_json(&std::fs::read_to_string(path)?)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            if extra.pair != *pair {
                return Err(usage(format!("{} is for {}, not {pair}", path.display(), extra.pair)));
            }
            dict.extend(&extra);
        }
        Ok(dict)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// English sentences, one per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub pair: LanguagePair,
    /// A value in [0, 1], or `sweep a:b:step`.
    #[arg(long)]
    pub cmd: String,
    #[arg(long, conflicts_with = "uniform")]
    pub vocab: Option<PathBuf>,
    /// Without a corpus: every word scores as never seen in the matrix language.
    #[arg(long)]
    pub uniform: bool,
    /// Look up English lemmas instead of surface forms in the vocabulary.
    #[arg(long)]
    pub lemma: bool,
    /// `en` keeps English as the matrix language.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Hindi verb inflection, with the bundled rule table or the given file.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    pub hindi_rules: Option<String>,
    /// Also drop words that are rarely switched in practice.
    #[arg(long)]
    pub drop_optional_words: bool,
    #[command(flatten)]
    pub providers: ProviderArgs,
    /// Full generation records (JSONL).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
    /// Stop at the first failed sentence.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL of {reference, candidate[, id]}.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub pair: LanguagePair,
    #[command(flatten)]
    pub providers: ProviderArgs,
    #[command(flatten)]
    pub game: GameArgs,
    /// Include every intermediate artifact in the JSON records.
    #[arg(long)]
    pub trace: bool,
    /// Per-row JSON records (JSONL). With --trace and no --out they go to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Game,
    Bleu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    None,
    Add1,
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StddevArg {
    Population,
    Sample,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// JSONL of {english, variants, references}.
    #[arg(long)]
    pub groups: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "game,bleu")]
    pub metrics: Vec<MetricArg>,
    #[arg(long)]
    pub pair: LanguagePair,
    #[command(flatten)]
    pub providers: ProviderArgs,
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_enum, default_value = "add1")]
    pub smoothing: SmoothingArg,
    #[arg(long, value_enum, default_value = "population")]
    pub stddev: StddevArg,
    /// Full comparison (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
    #[arg(long)]
    pub strict: bool,
}

/// Parses and runs a command line, returning the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Vocab(VocabCommand::Build {
            corpus,
            pair,
            out: path,
        }) => vocab_build(&corpus, &pair, &path, out),
        Command::Generate(a) => generate(&a, out, err),
        Command::Evaluate(a) => evaluate(&a, out, err),
        Command::Compare(a) => compare(&a, out, err),
        Command::Dataset(DatasetCommand::Validate { file }) => dataset(&file, false, out),
        Command::Dataset(DatasetCommand::Stats { file }) => dataset(&file, true, out),
        Command::Cache(CacheCommand::Stats { cache }) => cache_stats(&cache, out),
        Command::Cache(CacheCommand::Verify { cache }) => cache_verify(&cache, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_PARTIAL
            }
        }
    }
}

fn require_file(path: &Path, flag: &str) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{flag}: no such file {}", path.display())))
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn vocab_build(corpora: &[PathBuf], pair: &LanguagePair, path: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    for c in corpora {
        require_file(c, "--corpus")?;
    }
    let paths: Vec<&Path> = corpora.iter().map(PathBuf::as_path).collect();
    let (vocab, stats) = vocab_io::build_vocab(&paths, Some(pair.clone()))?;
    let mut file = create(path)?;
    vocab_io::write_vocab(&vocab, &mut file)?;
    writeln!(out, "lines\t{}", stats.lines)?;
    writeln!(out, "skipped\t{}", stats.skipped_lines)?;
    writeln!(out, "tokens\t{}", vocab.total_tokens())?;
    writeln!(out, "types\t{}", vocab.len())?;
    Ok(EXIT_OK)
}

/// `0.7`, or `sweep a:b:step` (the `sweep` keyword is optional).
pub fn parse_cmd_spec(spec: &str) -> Result<Vec<Cmd>, String> {
    let body = spec.trim();
    let body = body.strip_prefix("sweep").map(str::trim).unwrap_or(body);
    let body = body.strip_prefix(':').unwrap_or(body);
    let bad = |what: &str| format!("bad --cmd `{spec}`: {what}");
    if !body.contains(':') {
        return body.parse::<Cmd>().map(|c| vec![c]).map_err(|e| bad(&e.to_string()));
    }
    let parts: Vec<f64> = body
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("expected a:b:step"))?;
    let [a, b, step] = parts[..] else {
        return Err(bad("expected a:b:step"));
    };
    if step.is_nan() || step <= 0.0 || a > b {
        return Err(bad("need a <= b and step > 0"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| {
            let v = ((a + i as f64 * step) * 1e10).round() / 1e10;
            Cmd::new(v).map_err(|e| bad(&e.to_string()))
        })
        .collect()
}

#[derive(Serialize)]
struct GenerationRecord<'a> {
    line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a CodeMixedSentence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn generate(a: &GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    require_file(&a.input, "--input")?;
    let cmds = parse_cmd_spec(&a.cmd).map_err(usage)?;
    let english_matrix = match a.matrix.as_deref() {
        None => false,
        Some("en") => true,
        Some(m) if m == a.pair.matrix() => false,
        Some(m) => {
            return Err(usage(format!(
                "--matrix must be `en` or `{}`, got `{m}`",
                a.pair.matrix()
            )))
        }
    };
    let rules = match a.hindi_rules.as_deref() {
        None => None,
        Some(_) if a.pair.matrix() != "hi" => return Err(usage("--hindi-rules needs --pair en-hi")),
        Some(_) if english_matrix => return Err(usage("--hindi-rules cannot be combined with --matrix en")),
        Some("") => Some(RuleTable::builtin()),
        Some(path) => {
            require_file(Path::new(path), "--hindi-rules")?;
            let json = std::fs::read_to_string(path)?;
            Some(RuleTable::from_json(&json).map_err(|e| usage(format!("{path}: {e}")))?)
        }
    };
    let vocab: Option<FrequencyVocab> = match (&a.vocab, a.uniform) {
        (Some(path), _) => {
            require_file(path, "--vocab")?;
            let v = vocab_io::load_vocab(path).with_context(|| path.display().to_string())?;
            if let Some(p) = v.pair() {
                if *p != a.pair {
                    return Err(usage(format!("vocabulary is for {p}, not {}", a.pair)));
                }
            }
            Some(v)
        }
        (None, true) => None,
        (None, false) => return Err(usage("give --vocab, or --uniform to generate without a corpus")),
    };
    let scoring = match &vocab {
        Some(vocab) => Scoring::Corpus {
            vocab,
            use_lemma: a.lemma,
        },
        None => Scoring::Uniform,
    };
    let session = a.providers.open()?;
    let providers = session.providers();
    let options = GenerateOptions {
        hindi_rules: rules.as_ref(),
        drop_optional_words: a.drop_optional_words,
    };

    let text = std::fs::read_to_string(&a.input)?;
    let sentences: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim()))
        .collect();
    let results = run_ordered(&sentences, a.workers, |_, &(_, english)| {
        let prepared: Prepared = if english_matrix {
            cg::prepare_english_matrix(english, &a.pair, &scoring, &providers)?
        } else {
            cg::prepare(english, &a.pair, &scoring, &providers, &options)?
        };
        cmds.iter()
            .map(|&cmd| prepared.realize(cmd, &scoring, &providers, &options))
            .collect::<Result<Vec<_>, _>>()
    });

    let mut report = a.report.as_deref().map(create).transpose()?;
    let mut failed = 0;
    for ((line, _), result) in sentences.iter().zip(&results) {
        match result {
            Ok(outputs) => {
                for s in outputs {
                    if cmds.len() == 1 {
                        writeln!(out, "{}", s.text)?;
                    } else {
                        writeln!(out, "{}\t{}", s.cmd, s.text)?;
                    }
                    if let Some(r) = report.as_mut() {
                        let rec = GenerationRecord {
                            line: *line,
                            result: Some(s),
                            error: None,
                        };
                        writeln!(r, "{}", serde_json::to_string(&rec)?)?;
                    }
                }
            }
            Err(e) => {
                failed += 1;
                writeln!(err, "line {line}: {e}")?;
                if let Some(r) = report.as_mut() {
                    let rec = GenerationRecord {
                        line: *line,
                        result: None,
                        error: Some(e.to_string()),
                    };
                    writeln!(r, "{}", serde_json::to_string(&rec)?)?;
                }
                if a.strict {
                    break;
                }
            }
        }
    }
    if let Some(mut r) = report {
        r.flush()?;
    }
    if failed > 0 {
        writeln!(err, "{failed} of {} sentences failed", sentences.len())?;
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EvaluationRecord {
    row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    display: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<game::Gate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<game::GameTrace>,
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    require_file(&a.pairs, "--pairs")?;
    let homonyms = a.game.homonyms(&a.pair)?;
    let options = a.game.options();
    let rows = read_jsonl::<EvalPair>(&a.pairs)?;
    let session = a.providers.open()?;
    let providers = session.providers();
    let results = run_ordered(&rows, a.workers, |_, row| match row {
        Ok((_, p)) => Some(game::evaluate(
            &p.reference,
            &p.candidate,
            &a.pair,
            &providers,
            &homonyms,
            &options,
        )),
        Err(_) => None,
    });

    let json_to_stdout = a.trace && a.out.is_none();
    let mut records = a.out.as_deref().map(create).transpose()?;
    let (mut scored, mut skipped) = (Vec::new(), 0);
    for (row, result) in rows.iter().zip(results) {
        let (line, id) = match row {
            Ok((line, p)) => (*line, p.id.clone()),
            Err(e) => (e.line, None),
        };
        let label = id.clone().unwrap_or_else(|| line.to_string());
        let mut rec = EvaluationRecord {
            row: line,
            id,
            q: None,
            display: None,
            gate: None,
            error: None,
            trace: None,
        };
        match (row, result) {
            (Err(_), _) | (_, None) => {
                let e = match row {
                    Err(e) => e.clone(),
                    Ok(_) => LineError {
                        line,
                        message: "unparsed".into(),
                    },
                };
                skipped += 1;
                writeln!(err, "row {label} skipped: {}", e.message)?;
                rec.error = Some(json!({"stage": "input", "message": e.message}));
            }
            (_, Some(Ok(trace))) => {
                scored.push(trace.display);
                rec.q = Some(trace.q);
                rec.display = Some(trace.display);
                rec.gate = Some(trace.gate);
                if !json_to_stdout {
                    writeln!(out, "{label}\t{:.2}", trace.display)?;
                }
                if a.trace {
                    rec.trace = Some(trace);
                }
            }
            (_, Some(Err(e))) => {
                skipped += 1;
                writeln!(err, "row {label} skipped during {}: {}", e.stage, e.error)?;
                if !json_to_stdout {
                    writeln!(out, "{label}\tskipped")?;
                }
                rec.error = Some(json!({"stage": e.stage, "message": e.error.to_string()}));
                if a.trace {
                    rec.trace = Some(*e.trace);
                }
            }
        }
        let line_json = serde_json::to_string(&rec)?;
        if json_to_stdout {
            writeln!(out, "{line_json}")?;
        }
        if let Some(r) = records.as_mut() {
            writeln!(r, "{line_json}")?;
        }
        if a.strict && skipped > 0 {
            break;
        }
    }
    if let Some(mut r) = records {
        r.flush()?;
    }
    if !json_to_stdout {
        let mean = if scored.is_empty() {
            0.0
        } else {
            scored.iter().sum::<f64>() / scored.len() as f64
        };
        writeln!(out, "mean\t{mean:.2}\t{} scored\t{skipped} skipped", scored.len())?;
    }
    Ok(if skipped > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn smoothing(arg: SmoothingArg) -> metrics::Smoothing {
    match arg {
        SmoothingArg::None => metrics::Smoothing::None,
        SmoothingArg::Add1 => metrics::Smoothing::Add1,
        SmoothingArg::Epsilon => metrics::Smoothing::Epsilon,
    }
}

/// Scores of every variant of one group, per metric (×100).
type GroupScores = Result<(Vec<Option<f64>>, Vec<Option<f64>>, Vec<String>), String>;

fn compare(a: &CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    require_file(&a.groups, "--groups")?;
    let want_game = a.metrics.contains(&MetricArg::Game);
    let want_bleu = a.metrics.contains(&MetricArg::Bleu);
    let homonyms = a.game.homonyms(&a.pair)?;
    let options = a.game.options();
    let smoothing = smoothing(a.smoothing);
    let mode = match a.stddev {
        StddevArg::Population => StddevMode::Population,
        StddevArg::Sample => StddevMode::Sample,
    };
    let rows = read_jsonl::<Group>(&a.groups)?;
    let session = if want_game { Some(a.providers.open()?) } else { None };
    let providers = session.as_ref().map(Session::providers);

    let results: Vec<GroupScores> = run_ordered(&rows, a.workers, |_, row| {
        let (_, group) = row.as_ref().map_err(|e| e.message.clone())?;
        if group.variants.is_empty() {
            return Err("group has no variants".into());
        }
        let mut problems = Vec::new();
        let game_scores: Vec<Option<f64>> = group
            .variants
            .iter()
            .map(|v| match (&providers, want_game) {
                (Some(p), true) => match game::evaluate(&group.english, v, &a.pair, p, &homonyms, &options) {
                    Ok(t) => Some(t.display),
                    Err(e) => {
                        problems.push(format!("variant `{v}` skipped during {}: {}", e.stage, e.error));
                        None
                    }
                },
                _ => Some(0.0),
            })
            .collect();
        let bleu_scores: Vec<Option<f64>> = if want_bleu {
            if group.references.is_empty() {
                return Err("BLEU needs at least one reference".into());
            }
            let refs: Vec<Vec<String>> = group.references.iter().map(|r| preprocess(r).tokens).collect();
            group
                .variants
                .iter()
                .map(|v| {
                    let hyp = preprocess(v).tokens;
                    match metrics::sentence_bleu_multi(&refs, &hyp, smoothing) {
                        Ok(b) => Some(100.0 * b.value),
                        Err(e) => {
                            problems.push(format!("variant `{v}` has no BLEU: {e}"));
                            None
                        }
                    }
                })
                .collect()
        } else {
            vec![Some(0.0); group.variants.len()]
        };
        Ok((game_scores, bleu_scores, problems))
    });

    let mut game_groups = Vec::new();
    let mut bleu_groups = Vec::new();
    let mut lines = Vec::new();
    let mut failures = 0;
    for (row, result) in rows.iter().zip(results) {
        let line = match row {
            Ok((l, _)) => *l,
            Err(e) => e.line,
        };
        match result {
            Ok((g, b, problems)) => {
                for p in &problems {
                    writeln!(err, "group at line {line}: {p}")?;
                }
                failures += problems.len();
                // A variant is kept only if every requested metric scored it.
                let kept: Vec<(f64, f64)> = g.into_iter().zip(b).filter_map(|(g, b)| Some((g?, b?))).collect();
                if kept.is_empty() {
                    writeln!(err, "group at line {line} skipped: no variant could be scored")?;
                    continue;
                }
                game_groups.push(kept.iter().map(|p| p.0).collect::<Vec<_>>());
                bleu_groups.push(kept.iter().map(|p| p.1).collect::<Vec<_>>());
                lines.push(line);
            }
            Err(e) => {
                failures += 1;
                writeln!(err, "group at line {line} skipped: {e}")?;
            }
        }
        if a.strict && failures > 0 {
            return Ok(EXIT_PARTIAL);
        }
    }
    if lines.is_empty() {
        return Err(anyhow!("no group could be scored"));
    }
    let mut scores = Vec::new();
    if want_game {
        scores.push(MetricScores {
            name: "game".into(),
            groups: game_groups,
        });
    }
    if want_bleu {
        scores.push(MetricScores {
            name: "bleu".into(),
            groups: bleu_groups,
        });
    }
    let comparison = metrics::compare_metrics(&scores, mode).map_err(|e| anyhow!("{e}"))?;
    writeln!(out, "line\tmetric\tn\tmean\tstddev")?;
    for (i, line) in lines.iter().enumerate() {
        for m in &comparison.metrics {
            let g = &m.groups[i];
            writeln!(
                out,
                "{line}\t{}\t{}\t{:.2}\t{:.2}",
                m.name,
                g.scores.len(),
                g.mean,
                g.stddev
            )?;
        }
    }
    for m in &comparison.metrics {
        writeln!(
            out,
            "average\t{}\t{}\t\t{:.2}",
            m.name,
            m.groups.len(),
            m.average_stddev
        )?;
    }
    if let Some(path) = &a.out {
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &json!({"lines": lines, "comparison": comparison}))?;
        writeln!(f)?;
        f.flush()?;
    }
    Ok(if failures > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn dataset(path: &Path, stats: bool, out: &mut dyn Write) -> anyhow::Result<i32> {
    require_file(path, "--file")?;
    let report = check_dataset(path)?;
    for v in &report.violations {
        writeln!(out, "{v}")?;
    }
    if stats {
        for (pair, n) in &report.per_pair {
            writeln!(out, "{pair}\t{n}")?;
        }
        writeln!(out, "total\t{}", report.records)?;
        writeln!(out, "duplicate ids\t{}", report.duplicate_ids.len())?;
        writeln!(out, "duplicate records\t{}", report.duplicate_records.len())?;
    } else {
        writeln!(
            out,
            "{} records, {} violations",
            report.records,
            report.violations.len()
        )?;
    }
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cache_stats(path: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    require_file(path, "--cache")?;
    let records = read_records(path)?;
    let mut by_backend: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut hashes = std::collections::HashSet::new();
    for r in &records {
        hashes.insert(r.request_hash.clone());
        let task = serde_json::from_value::<ProviderRequest>(r.request.clone())
            .map(|q| q.task().to_string())
            .unwrap_or_else(|_| "unknown".into());
        *by_backend.entry((r.provider_id.clone(), task)).or_insert(0) += 1;
    }
    writeln!(out, "records\t{}", records.len())?;
    writeln!(out, "distinct\t{}", hashes.len())?;
    for ((backend, task), n) in by_backend {
        writeln!(out, "{backend}\t{task}\t{n}")?;
    }
    Ok(EXIT_OK)
}

fn cache_verify(path: &Path, out: &mut dyn Write) -> anyhow::Result<i32> {
    require_file(path, "--cache")?;
    let records = read_records(path)?;
    let bad: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_consistent())
        .map(|(i, _)| i + 1)
        .collect();
    for i in &bad {
        writeln!(out, "record {i}: request hash does not match the request")?;
    }
    writeln!(out, "{} records, {} inconsistent", records.len(), bad.len())?;
    Ok(if bad.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmd_specs() {
        let v = |s| parse_cmd_spec(s).unwrap().iter().map(|c| c.value()).collect::<Vec<_>>();
        assert_eq!(v("0.7"), vec![0.7]);
        assert_eq!(
            v("sweep 0:1:0.1"),
            vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
        );
        assert_eq!(v("0.5:1:0.25"), vec![0.5, 0.75, 1.0]);
        assert_eq!(v("sweep:0:0.3:0.1"), vec![0.0, 0.1, 0.2, 0.3]);
        for bad in ["1.5", "sweep 0:1", "0:1:0", "1:0:0.1", "0:2:1", "x"] {
            assert!(parse_cmd_spec(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            [
                "codemix",
                "vocab",
                "build",
                "--corpus",
                "/nonexistent",
                "--pair",
                "en-hi",
                "--out",
                "/tmp/x",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_USAGE);
        assert_eq!(run(["codemix", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["codemix", "--version"], &mut out, &mut err), EXIT_OK);
    }
}
