//! Command-line interface: thin subcommands wired over the library modules.
//!
//! Option layering: an explicit flag beats the JSON config file, which beats
//! the built-in default. Flags are checked strictly — a hyperparameter flag
//! that the chosen estimator cannot use is an error — while unused values in
//! the config file are simply ignored, so one config can serve several
//! subcommands. Diagnostics go to stderr; data goes to files or stdout.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bench::{format_table, run_benchmark, BenchConfig, CorpusSource, DEFAULT_REPEATS};
use crate::corpus::{
    extract_bigrams, extract_ne_left_contexts, generate_synthetic_corpus, parse_tagged_corpus,
    write_tagged_corpus, Bigram, ContextClass, Sentence, SynthParams,
};
use crate::counts::CountTable;
use crate::estimators::{estimate_batch, EstimatorSpec};
use crate::eval::{
    judge, rank, rank_recall_curve, read_curve_csv, tune, write_curve_csv, write_ranked_csv,
    ReferenceSet, ScoredList,
};
use crate::plot::{render_rank_recall_svg, PlotSeries};
use crate::{io_err, Error, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_NE_CLASS: &str = "LOC";
pub const DEFAULT_TOP_K: usize = 4000;

/// Hyperparameter grid searched for the l2 estimator when no explicit value
/// is given: one candidate per decade.
pub const LAMBDA_GRID: [f64; 9] = [1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
/// Threshold grid searched for the threshold and l1 estimators.
pub const THETA_GRID: std::ops::RangeInclusive<u64> = 1..=9;

#[derive(Debug, Parser)]
#[command(
    name = "lrtk",
    version,
    about = "Likelihood-ratio estimation over word bigrams: synthesize corpora, count, \
             rank, tune, benchmark, and plot."
)]
pub struct Cli {
    /// JSON file supplying defaults for shared options.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic tagged corpus.
    Synth(SynthArgs),
    /// Count bigram frequencies from a tagged corpus into a table snapshot.
    Count(CountArgs),
    /// Score and rank the bigrams of an evaluation corpus; write ranked and
    /// rank-recall CSVs.
    Run(RunArgs),
    /// Grid-search an estimator hyperparameter by validation-set area under
    /// the rank-recall curve.
    Tune(TuneArgs),
    /// Time the store+estimate pipeline and report its storage footprint.
    Bench(BenchArgs),
    /// Render rank-recall curve CSVs as a single SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Random seed for corpus generation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of distinct background word types.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Number of background tokens to draw.
    #[arg(long)]
    pub token_count: Option<usize>,
    /// Zipf exponent of the background word distribution.
    #[arg(long)]
    pub zipf_exponent: Option<f64>,
    /// Output corpus path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Tagged corpus to count.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Entity class whose left contexts form the numerator sample.
    #[arg(long)]
    pub ne_class: Option<String>,
    /// Prune numerator entries with count <= theta and drop denominator
    /// entries left without a numerator counterpart.
    #[arg(long)]
    pub theta: Option<u64>,
    /// Output snapshot path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Estimator selection shared by `run`, `tune`, and `bench`.
#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Estimator kind: mle, threshold, l2, or l1.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Frequency threshold; only meaningful for threshold and l1.
    #[arg(long)]
    pub theta: Option<u64>,
    /// Regularization weight; only meaningful for l2.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Count-table snapshot produced by `count`.
    #[arg(long)]
    pub table: PathBuf,
    /// Tagged evaluation corpus.
    #[arg(long)]
    pub eval: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Ranking depth to judge and write.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub ne_class: Option<String>,
    /// Output prefix: writes <PREFIX>.ranked.csv and <PREFIX>.curve.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Count-table snapshot produced by `count`.
    #[arg(long)]
    pub table: PathBuf,
    /// Tagged validation corpus.
    #[arg(long)]
    pub valid: PathBuf,
    /// Estimator kind selects the default grid; an explicit --theta or
    /// --lambda narrows it to that single candidate.
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub ne_class: Option<String>,
    /// JSON report output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Benchmark corpus file; a corpus is generated from the synthesis
    /// options when absent.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Number of timed repetitions.
    #[arg(long)]
    pub repeats: Option<u32>,
    #[arg(long)]
    pub ne_class: Option<String>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub token_count: Option<usize>,
    #[arg(long)]
    pub zipf_exponent: Option<f64>,
    /// Also sample the process resident-set size (platform-dependent).
    #[arg(long)]
    pub rss: bool,
    /// JSON report output path; the text table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Rank-recall curve CSV files, rendered as one polyline each.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    /// Comma-separated legend labels; file stems by default.
    #[arg(long)]
    pub labels: Option<String>,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Optional defaults loaded from `--config <JSON>`. Unknown keys are
/// rejected so typos fail loudly.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub ne_class: Option<String>,
    pub top_k: Option<usize>,
    pub estimator: Option<String>,
    pub theta: Option<u64>,
    pub lambda: Option<f64>,
    pub repeats: Option<u32>,
    pub vocab_size: Option<usize>,
    pub token_count: Option<usize>,
    pub zipf_exponent: Option<f64>,
    pub context_classes: Option<Vec<ContextClass>>,
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: invalid config file: {e}", path.display())))
}

fn resolve_synth_params(
    seed: Option<u64>,
    vocab_size: Option<usize>,
    token_count: Option<usize>,
    zipf_exponent: Option<f64>,
    config: &ConfigFile,
) -> SynthParams {
    let defaults = SynthParams::default();
    SynthParams {
        vocab_size: vocab_size.or(config.vocab_size).unwrap_or(defaults.vocab_size),
        token_count: token_count
            .or(config.token_count)
            .unwrap_or(defaults.token_count),
        zipf_exponent: zipf_exponent
            .or(config.zipf_exponent)
            .unwrap_or(defaults.zipf_exponent),
        context_classes: config
            .context_classes
            .clone()
            .unwrap_or(defaults.context_classes),
        seed: seed.or(config.seed).unwrap_or(DEFAULT_SEED),
    }
}

fn resolve_ne_class(flag: &Option<String>, config: &ConfigFile) -> String {
    flag.clone()
        .or_else(|| config.ne_class.clone())
        .unwrap_or_else(|| DEFAULT_NE_CLASS.to_string())
}

fn resolve_top_k(flag: Option<usize>, config: &ConfigFile) -> usize {
    flag.or(config.top_k).unwrap_or(DEFAULT_TOP_K)
}

/// Reject hyperparameter flags the chosen estimator kind cannot use. Only
/// explicit flags are checked; stale values in a shared config file are
/// ignored.
fn check_param_flags(kind: &str, args: &EstimatorArgs) -> Result<()> {
    if args.theta.is_some() && !matches!(kind, "threshold" | "l1") {
        return Err(Error::Config(
            "--theta is only valid with the threshold and l1 estimators".into(),
        ));
    }
    if args.lambda.is_some() && kind != "l2" {
        return Err(Error::Config(
            "--lambda is only valid with the l2 estimator".into(),
        ));
    }
    Ok(())
}

fn resolve_kind(args: &EstimatorArgs, config: &ConfigFile) -> Result<String> {
    args.estimator
        .clone()
        .or_else(|| config.estimator.clone())
        .ok_or_else(|| {
            Error::Config(
                "no estimator chosen: pass --estimator or set \"estimator\" in the config file"
                    .into(),
            )
        })
}

/// Resolve a single estimator from flags and config.
fn resolve_estimator(args: &EstimatorArgs, config: &ConfigFile) -> Result<EstimatorSpec> {
    let kind = resolve_kind(args, config)?;
    check_param_flags(&kind, args)?;
    let spec = match kind.as_str() {
        "mle" => EstimatorSpec::Mle,
        "threshold" | "l1" => {
            let theta = args.theta.or(config.theta).ok_or_else(|| {
                Error::Config(format!(
                    "estimator {kind} needs a threshold: pass --theta or set \"theta\" in the \
                     config file"
                ))
            })?;
            if kind == "l1" {
                EstimatorSpec::L1 { theta }
            } else {
                EstimatorSpec::Threshold { theta }
            }
        }
        "l2" => {
            let lambda = args.lambda.or(config.lambda).ok_or_else(|| {
                Error::Config(
                    "estimator l2 needs a regularization weight: pass --lambda or set \
                     \"lambda\" in the config file"
                        .into(),
                )
            })?;
            EstimatorSpec::L2 { lambda }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown estimator kind '{other}' (expected mle, threshold, l2, or l1)"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// The candidate grid for `tune`: the kind's default grid, narrowed to a
/// singleton by an explicit hyperparameter.
fn resolve_tune_grid(args: &EstimatorArgs, config: &ConfigFile) -> Result<Vec<EstimatorSpec>> {
    let kind = resolve_kind(args, config)?;
    check_param_flags(&kind, args)?;
    let grid = match kind.as_str() {
        "mle" => vec![EstimatorSpec::Mle],
        "threshold" => match args.theta.or(config.theta) {
            Some(theta) => vec![EstimatorSpec::Threshold { theta }],
            None => THETA_GRID.map(|theta| EstimatorSpec::Threshold { theta }).collect(),
        },
        "l1" => match args.theta.or(config.theta) {
            Some(theta) => vec![EstimatorSpec::L1 { theta }],
            None => THETA_GRID.map(|theta| EstimatorSpec::L1 { theta }).collect(),
        },
        "l2" => match args.lambda.or(config.lambda) {
            Some(lambda) => vec![EstimatorSpec::L2 { lambda }],
            None => LAMBDA_GRID
                .iter()
                .map(|&lambda| EstimatorSpec::L2 { lambda })
                .collect(),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown estimator kind '{other}' (expected mle, threshold, l2, or l1)"
            )))
        }
    };
    for spec in &grid {
        spec.validate()?;
    }
    Ok(grid)
}

fn read_corpus(path: &Path) -> Result<Vec<Sentence>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_tagged_corpus(BufReader::new(file)).map_err(|e| e.in_file(path))
}

fn read_table(path: &Path) -> Result<CountTable> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    CountTable::read_snapshot(BufReader::new(file)).map_err(|e| e.in_file(path))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("cannot encode JSON report: {e}")))?;
    json.push('\n');
    fs::write(path, json).map_err(|e| io_err(path, e))
}

/// `prefix` + `.suffix`, keeping the prefix's directory.
fn out_with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".");
    name.push(suffix);
    prefix.with_file_name(name)
}

/// All distinct bigrams of a corpus, sorted for reproducibility.
fn distinct_bigrams(sentences: &[Sentence]) -> Vec<Bigram> {
    let mut elements: Vec<Bigram> = sentences.iter().flat_map(extract_bigrams).collect();
    elements.sort_unstable();
    elements.dedup();
    elements
}

fn cmd_synth(args: &SynthArgs, config: &ConfigFile) -> Result<()> {
    let params = resolve_synth_params(
        args.seed,
        args.vocab_size,
        args.token_count,
        args.zipf_exponent,
        config,
    );
    let sentences = generate_synthetic_corpus(&params)?;
    let file = File::create(&args.out).map_err(|e| io_err(&args.out, e))?;
    let mut writer = BufWriter::new(file);
    write_tagged_corpus(&sentences, &mut writer).map_err(|e| io_err(&args.out, e))?;
    writer.flush().map_err(|e| io_err(&args.out, e))?;
    eprintln!(
        "wrote {} sentences to {}",
        sentences.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_count(args: &CountArgs, config: &ConfigFile) -> Result<()> {
    let ne_class = resolve_ne_class(&args.ne_class, config);
    let sentences = read_corpus(&args.corpus)?;
    let de: Vec<Bigram> = sentences.iter().flat_map(extract_bigrams).collect();
    let nu: Vec<Bigram> = sentences
        .iter()
        .flat_map(|s| extract_ne_left_contexts(s, &ne_class))
        .collect();
    let theta = args.theta.or(config.theta);
    let table = CountTable::build(de.iter(), nu.iter(), theta);
    let file = File::create(&args.out).map_err(|e| io_err(&args.out, e))?;
    let mut writer = BufWriter::new(file);
    table
        .write_snapshot(&mut writer)
        .and_then(|()| writer.flush())
        .map_err(|e| io_err(&args.out, e))?;
    let fp = table.footprint();
    eprintln!(
        "stored {}/{} entries (de/nu) to {}",
        fp.entry_count_de,
        fp.entry_count_nu,
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs, config: &ConfigFile) -> Result<()> {
    let spec = resolve_estimator(&args.estimator, config)?;
    let ne_class = resolve_ne_class(&args.ne_class, config);
    let top_k = resolve_top_k(args.top_k, config);
    let table = read_table(&args.table)?;
    let eval_sentences = read_corpus(&args.eval)?;
    let reference = ReferenceSet::from_sentences(&eval_sentences, &ne_class);
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let elements = distinct_bigrams(&eval_sentences);
    let ranked = rank(estimate_batch(&table, &spec, &elements)?);
    let judgment = judge(&ranked, &reference, top_k);
    if judgment.truncated {
        eprintln!(
            "warning: top-k {top_k} exceeds the {} scored elements; outputs are truncated",
            ranked.len()
        );
    }
    let curve = rank_recall_curve(&judgment.labels, reference.len())?;

    let depth = judgment.labels.len();
    let head = ScoredList {
        entries: ranked.entries[..depth].to_vec(),
    };
    let ranked_path = out_with_suffix(&args.out, "ranked.csv");
    let file = File::create(&ranked_path).map_err(|e| io_err(&ranked_path, e))?;
    write_ranked_csv(&head, BufWriter::new(file))?;
    let curve_path = out_with_suffix(&args.out, "curve.csv");
    let file = File::create(&curve_path).map_err(|e| io_err(&curve_path, e))?;
    write_curve_csv(&curve, BufWriter::new(file))?;
    eprintln!(
        "wrote {} and {}",
        ranked_path.display(),
        curve_path.display()
    );
    Ok(())
}

fn cmd_tune(args: &TuneArgs, config: &ConfigFile) -> Result<()> {
    let grid = resolve_tune_grid(&args.estimator, config)?;
    let ne_class = resolve_ne_class(&args.ne_class, config);
    let top_k = resolve_top_k(args.top_k, config);
    let table = read_table(&args.table)?;
    let validation = read_corpus(&args.valid)?;
    let report = tune(&grid, &table, &validation, &ne_class, top_k)?;
    write_json(&report, &args.out)?;
    eprintln!(
        "winner: {} {} (of {} candidates)",
        report.winner.kind_name(),
        report.winner.param_display(),
        report.results.len()
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs, config: &ConfigFile) -> Result<()> {
    let spec = resolve_estimator(&args.estimator, config)?;
    let source = match &args.corpus {
        Some(path) => CorpusSource::File(path.clone()),
        None => CorpusSource::Synth(resolve_synth_params(
            args.seed,
            args.vocab_size,
            args.token_count,
            args.zipf_exponent,
            config,
        )),
    };
    let bench_config = BenchConfig {
        spec,
        repeats: args.repeats.or(config.repeats).unwrap_or(DEFAULT_REPEATS),
        source,
        ne_class: resolve_ne_class(&args.ne_class, config),
        top_k: resolve_top_k(args.top_k, config),
    };
    let report = run_benchmark(&bench_config, args.rss)?;
    print!("{}", format_table(std::slice::from_ref(&report)));
    if let Some(out) = &args.out {
        write_json(&report, out)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let labels: Vec<String> = match &args.labels {
        Some(joined) => {
            let labels: Vec<String> = joined.split(',').map(|l| l.trim().to_string()).collect();
            if labels.len() != args.curves.len() {
                return Err(Error::Config(format!(
                    "{} labels given for {} curve files",
                    labels.len(),
                    args.curves.len()
                )));
            }
            labels
        }
        None => args
            .curves
            .iter()
            .map(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string())
            })
            .collect(),
    };
    let mut series = Vec::with_capacity(args.curves.len());
    for (path, label) in args.curves.iter().zip(labels) {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let curve = read_curve_csv(BufReader::new(file)).map_err(|e| e.in_file(path))?;
        series.push(PlotSeries { label, curve });
    }
    let svg = render_rank_recall_svg(&series);
    fs::write(&args.out, svg).map_err(|e| io_err(&args.out, e))?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

/// Dispatch a parsed invocation.
pub fn run_cli(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Synth(args) => cmd_synth(args, &config),
        Command::Count(args) => cmd_count(args, &config),
        Command::Run(args) => cmd_run(args, &config),
        Command::Tune(args) => cmd_tune(args, &config),
        Command::Bench(args) => cmd_bench(args, &config),
        Command::Plot(args) => cmd_plot(args),
    }
}
