//! Wall-clock and storage benchmarking of the count-then-estimate pipeline.
//!
//! A benchmark run times exactly two phases — building the frequency table
//! (the "store" step) and scoring every distinct bigram of the corpus (the
//! "estimate" step). Corpus loading, tokenization and bigram extraction are
//! done once up front so parsing cost never leaks into the timings. Each
//! configuration is run once as an untimed warm-up and then `repeats` times
//! on identical inputs; the storage footprint is taken from the final run's
//! table and is deterministic, unlike the times.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    extract_bigrams, extract_ne_left_contexts, generate_synthetic_corpus, parse_tagged_corpus,
    Bigram, Sentence, SynthParams,
};
use crate::counts::{CountTable, Footprint};
use crate::estimators::{estimate_batch, EstimatorSpec};
use crate::{io_err, Error, Result};

/// Default number of timed repetitions.
pub const DEFAULT_REPEATS: u32 = 10;

/// Where the benchmark corpus comes from: a tagged corpus file on disk, or
/// parameters for generating one in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    File(PathBuf),
    Synth(SynthParams),
}

/// One benchmark configuration: which estimator to run, how often, and on
/// what corpus. The same corpus provides both the training counts and the
/// universe of elements to score, so a single source describes a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub spec: EstimatorSpec,
    pub repeats: u32,
    pub source: CorpusSource,
    pub ne_class: String,
    pub top_k: usize,
}

/// Results of one benchmark configuration. Times vary run to run; the
/// footprint is a pure function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub mean_time_seconds: f64,
    pub per_run_times: Vec<f64>,
    pub footprint: Footprint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rss_kilobytes: Option<u64>,
}

fn load_corpus(source: &CorpusSource) -> Result<Vec<Sentence>> {
    match source {
        CorpusSource::File(path) => {
            let file = File::open(path).map_err(|e| io_err(path, e))?;
            parse_tagged_corpus(BufReader::new(file)).map_err(|e| e.in_file(path))
        }
        CorpusSource::Synth(params) => generate_synthetic_corpus(params),
    }
}

/// Resident-set size of this process in kilobytes, if the platform exposes
/// it. Allocator- and platform-dependent, hence opt-in.
fn read_vm_rss_kilobytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// Run one benchmark configuration.
///
/// The timed region covers `CountTable::build` over the corpus bigrams
/// (thresholded at the estimator's own numerator threshold, so thresholded
/// estimators store a pruned table exactly as they would in production) plus
/// `estimate_batch` over every distinct bigram of the corpus. Runs are
/// strictly sequential on the calling thread. When `probe_rss` is set, the
/// process resident-set size is sampled once after the last run.
pub fn run_benchmark(config: &BenchConfig, probe_rss: bool) -> Result<BenchReport> {
    config.spec.validate()?;
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let sentences = load_corpus(&config.source)?;

    // Pre-materialized inputs, shared by every run.
    let train: Vec<Bigram> = sentences.iter().flat_map(extract_bigrams).collect();
    let contexts: Vec<Bigram> = sentences
        .iter()
        .flat_map(|s| extract_ne_left_contexts(s, &config.ne_class))
        .collect();
    let mut eval_elements = train.clone();
    eval_elements.sort_unstable();
    eval_elements.dedup();

    let theta = match config.spec.nu_threshold() {
        0 => None,
        t => Some(t),
    };

    let mut per_run_times = Vec::with_capacity(config.repeats as usize);
    let mut last_table: Option<CountTable> = None;
    // Run 0 is the warm-up; it populates caches and is excluded from the
    // statistics.
    for run in 0..=config.repeats {
        let start = Instant::now();
        let table = CountTable::build(train.iter(), contexts.iter(), theta);
        let scored = estimate_batch(&table, &config.spec, &eval_elements)?;
        std::hint::black_box(&scored);
        let elapsed = start.elapsed().as_secs_f64();
        if run > 0 {
            per_run_times.push(elapsed);
        }
        // Dropping the previous run's table and the scored list happens
        // outside the timed region.
        last_table = Some(table);
        drop(scored);
    }
    let table = last_table.expect("at least one benchmark run");
    let footprint = table.footprint();
    let mean_time_seconds = per_run_times.iter().sum::<f64>() / per_run_times.len() as f64;
    let rss_kilobytes = if probe_rss {
        read_vm_rss_kilobytes()
    } else {
        None
    };
    Ok(BenchReport {
        config: config.clone(),
        mean_time_seconds,
        per_run_times,
        footprint,
        rss_kilobytes,
    })
}

/// Render reports as a fixed-width text table with one row per
/// configuration: estimator, its threshold parameter, mean time, stored
/// entries per side, and the byte estimate in KB.
#[must_use]
pub fn format_table(reports: &[BenchReport]) -> String {
    let header = [
        "Estimator".to_string(),
        "Threshold".to_string(),
        "Time [sec]".to_string(),
        "Entries (de/nu)".to_string(),
        "Est. KB".to_string(),
    ];
    let mut rows = vec![header];
    for report in reports {
        rows.push([
            report.config.spec.kind_name().to_string(),
            report.config.spec.param_display(),
            format!("{:.4}", report.mean_time_seconds),
            format!(
                "{}/{}",
                report.footprint.entry_count_de, report.footprint.entry_count_nu
            ),
            format!("{:.1}", report.footprint.estimated_bytes as f64 / 1024.0),
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &rows {
        for (width, cell) in widths.iter_mut().zip(row.iter()) {
            *width = (*width).max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line = row
            .iter()
            .zip(widths.iter())
            .map(|(cell, width)| format!("{cell:<width$}"))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}
