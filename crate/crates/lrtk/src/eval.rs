//! Ranking and evaluation: order scored elements, judge them against a
//! reference set, and summarize the result as a rank–recall curve and its
//! area under the curve.
//!
//! Rank–recall curve CSV format: a `rank,recall,precision` header followed
//! by one row per rank. Ranked-list CSV format: `first,second,estimate`
//! with estimates in shortest round-trip decimal.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::Serialize;

use crate::corpus::{extract_bigrams, extract_ne_left_contexts, Bigram, Sentence};
use crate::counts::CountTable;
use crate::estimators::{estimate_batch, EstimatorSpec};
use crate::{Error, Result};

/// One scored element. `f_nu` is carried along because the ranking policy
/// uses it to break estimate ties.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub element: Bigram,
    pub estimate: f64,
    pub f_nu: u64,
}

/// Scored elements, one entry per element of the evaluation set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredList {
    pub entries: Vec<ScoredEntry>,
}

impl ScoredList {
    #[must_use]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sort by estimate descending; ties break by numerator frequency
/// descending, then by lexicographic element order, giving one deterministic
/// total order for any input permutation.
#[must_use]
pub fn rank(mut scored: ScoredList) -> ScoredList {
    scored.entries.sort_by(|a, b| {
        b.estimate
            .total_cmp(&a.estimate)
            .then_with(|| b.f_nu.cmp(&a.f_nu))
            .then_with(|| a.element.cmp(&b.element))
    });
    scored
}

/// The elements counted as correct when judging a ranking.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceSet {
    elements: HashSet<Bigram>,
}

impl ReferenceSet {
    pub fn new<I: IntoIterator<Item = Bigram>>(elements: I) -> ReferenceSet {
        ReferenceSet {
            elements: elements.into_iter().collect(),
        }
    }

    /// Every bigram observed at least once as the left context of an
    /// `ne_class` span.
    pub fn from_sentences(sentences: &[Sentence], ne_class: &str) -> ReferenceSet {
        ReferenceSet::new(
            sentences
                .iter()
                .flat_map(|s| extract_ne_left_contexts(s, ne_class)),
        )
    }

    #[must_use]
    pub fn contains(&self, element: &Bigram) -> bool {
        self.elements.contains(element)
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Correctness labels for the top `k` of a ranking. `truncated` reports
/// that the ranking was shorter than the requested depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Judgment {
    pub labels: Vec<bool>,
    pub truncated: bool,
}

/// Label the top `k` entries of a ranked list by reference membership.
#[must_use]
pub fn judge(ranked: &ScoredList, reference: &ReferenceSet, k: usize) -> Judgment {
    let depth = k.min(ranked.len());
    Judgment {
        labels: ranked.entries[..depth]
            .iter()
            .map(|e| reference.contains(&e.element))
            .collect(),
        truncated: k > ranked.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub rank: usize,
    pub recall: f64,
    pub precision: f64,
}

/// Recall and precision at every rank of a judged prefix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankRecallCurve {
    pub points: Vec<CurvePoint>,
}

impl RankRecallCurve {
    /// The evaluation depth (number of judged ranks).
    #[must_use]
    pub fn depth(&self) -> usize {
        self.points.len()
    }
}

/// Accumulate labels into a curve: at rank `k`, recall is the number of
/// correct entries so far over the reference size, precision the same count
/// over `k`. Fails on an empty reference set, where recall is undefined.
pub fn rank_recall_curve(labels: &[bool], reference_size: usize) -> Result<RankRecallCurve> {
    if reference_size == 0 {
        return Err(Error::EmptyReference);
    }
    let mut hits = 0u64;
    let points = labels
        .iter()
        .enumerate()
        .map(|(idx, &correct)| {
            if correct {
                hits += 1;
            }
            let rank = idx + 1;
            CurvePoint {
                rank,
                recall: hits as f64 / reference_size as f64,
                precision: hits as f64 / rank as f64,
            }
        })
        .collect();
    Ok(RankRecallCurve { points })
}

/// Normalized rectangle-rule area: the mean recall over all judged ranks.
/// An empty curve has zero area.
#[must_use]
pub fn auc(curve: &RankRecallCurve) -> f64 {
    if curve.points.is_empty() {
        return 0.0;
    }
    let sum: f64 = curve.points.iter().map(|p| p.recall).sum();
    sum / curve.points.len() as f64
}

/// One tuning candidate and the area it achieved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub candidate: EstimatorSpec,
    pub auc: f64,
}

/// Outcome of a grid search: every candidate's area plus the winner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub winner: EstimatorSpec,
    pub results: Vec<CandidateScore>,
}

fn conservativeness(spec: &EstimatorSpec) -> f64 {
    match spec {
        EstimatorSpec::Mle => 0.0,
        EstimatorSpec::Threshold { theta } | EstimatorSpec::L1 { theta } => *theta as f64,
        EstimatorSpec::L2 { lambda } => *lambda,
    }
}

/// Evaluate every candidate against the validation sentences (all their
/// bigrams form the element set, their entity left contexts the reference)
/// and pick the candidate with the largest rank–recall area. Exact area
/// ties go to the more conservative candidate — the larger threshold or
/// regularizer weight.
pub fn tune(
    candidates: &[EstimatorSpec],
    table: &CountTable,
    validation: &[Sentence],
    ne_class: &str,
    top_k: usize,
) -> Result<TuneReport> {
    if candidates.is_empty() {
        return Err(Error::Config("candidate grid is empty".into()));
    }
    let reference = ReferenceSet::from_sentences(validation, ne_class);
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let mut elements: Vec<Bigram> = validation.iter().flat_map(extract_bigrams).collect();
    elements.sort();
    elements.dedup();

    let mut results = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let ranked = rank(estimate_batch(table, candidate, &elements)?);
        let judgment = judge(&ranked, &reference, top_k);
        let curve = rank_recall_curve(&judgment.labels, reference.len())?;
        results.push(CandidateScore {
            candidate: *candidate,
            auc: auc(&curve),
        });
    }
    let winner = results
        .iter()
        .fold(&results[0], |best, current| {
            if current.auc > best.auc
                || (current.auc == best.auc
                    && conservativeness(&current.candidate) > conservativeness(&best.candidate))
            {
                current
            } else {
                best
            }
        })
        .candidate;
    Ok(TuneReport { winner, results })
}

/// Write a ranked list as `first,second,estimate` CSV.
pub fn write_ranked_csv<W: Write>(ranked: &ScoredList, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let io_error = |e: csv::Error| Error::Config(format!("cannot write ranked CSV: {e}"));
    writer
        .write_record(["first", "second", "estimate"])
        .map_err(io_error)?;
    for entry in &ranked.entries {
        writer
            .write_record([
                entry.element.first.as_str(),
                entry.element.second.as_str(),
                entry.estimate.to_string().as_str(),
            ])
            .map_err(io_error)?;
    }
    writer.flush().map_err(|e| Error::Config(format!("cannot write ranked CSV: {e}")))?;
    Ok(())
}

/// Write a curve as `rank,recall,precision` CSV.
pub fn write_curve_csv<W: Write>(curve: &RankRecallCurve, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let io_error = |e: csv::Error| Error::Config(format!("cannot write curve CSV: {e}"));
    writer
        .write_record(["rank", "recall", "precision"])
        .map_err(io_error)?;
    for point in &curve.points {
        writer
            .write_record([
                point.rank.to_string().as_str(),
                point.recall.to_string().as_str(),
                point.precision.to_string().as_str(),
            ])
            .map_err(io_error)?;
    }
    writer.flush().map_err(|e| Error::Config(format!("cannot write curve CSV: {e}")))?;
    Ok(())
}

/// Read a curve written by [`write_curve_csv`].
pub fn read_curve_csv<R: Read>(input: R) -> Result<RankRecallCurve> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut points = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header occupies line 1
        let record = record.map_err(|e| Error::Parse {
            line,
            reason: format!("bad CSV record: {e}"),
        })?;
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 3 columns, found {}", record.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                reason: format!("invalid {what} `{s}`"),
            })
        };
        points.push(CurvePoint {
            rank: parse(&record[0], "rank")? as usize,
            recall: parse(&record[1], "recall")?,
            precision: parse(&record[2], "precision")?,
        });
    }
    Ok(RankRecallCurve { points })
}
