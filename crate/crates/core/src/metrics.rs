//! BLEU (sentence, corpus and best-pair corpus) and the per-group spread
//! statistics used to compare metrics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::preprocess;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} scores, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("metric `{0}` has a different number of groups")]
    Misaligned(String),
}

/// How zero n-gram matches are kept from zeroing the geometric mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Add one to numerator and denominator for orders 2..=4.
    #[default]
    Add1,
    /// Replace a zero match count with 0.1.
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub value: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hypothesis_len: usize,
    pub reference_len: usize,
}

/// Clipped n-gram matches and totals, poolable across sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NgramStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hypothesis_len: usize,
    pub reference_len: usize,
}

impl NgramStats {
    fn add(&mut self, other: &NgramStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hypothesis_len += other.hypothesis_len;
        self.reference_len += other.reference_len;
    }
}

fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> BTreeMap<Vec<&str>, u64> {
    let mut counts = BTreeMap::new();
    for window in tokens.windows(n) {
        *counts.entry(window.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Counts against several references: each n-gram is clipped by its largest
/// count in any reference, and the reference length is the one closest to
/// the hypothesis (the shorter on ties).
pub fn ngram_stats<R: AsRef<[S]>, S: AsRef<str>>(
    references: &[R],
    hypothesis: &[S],
) -> Result<NgramStats, MetricsError> {
    if hypothesis.is_empty() || references.is_empty() || references.iter().any(|r| r.as_ref().is_empty()) {
        return Err(MetricsError::EmptyInput);
    }
    let mut stats = NgramStats {
        hypothesis_len: hypothesis.len(),
        reference_len: references
            .iter()
            .map(|r| r.as_ref().len())
            .min_by_key(|&len| (len.abs_diff(hypothesis.len()), len))
            .unwrap_or(0),
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let hyp = ngrams(hypothesis, n);
        let mut max_ref: BTreeMap<Vec<&str>, u64> = BTreeMap::new();
        for r in references {
            for (gram, count) in ngrams(r.as_ref(), n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
        stats.totals[n - 1] = hypothesis.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = hyp
            .iter()
            .map(|(gram, &count)| count.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    Ok(stats)
}

/// Combines counts into a score. Orders the hypothesis is too short to have
/// contribute a neutral precision of 1.
pub fn bleu_from_stats(stats: &NgramStats, smoothing: Smoothing) -> BleuScore {
    let mut precisions = [1.0; MAX_ORDER];
    for (n, p) in precisions.iter_mut().enumerate() {
        let (m, t) = (stats.matches[n] as f64, stats.totals[n] as f64);
        if t == 0.0 {
            continue;
        }
        *p = match smoothing {
            Smoothing::None => m / t,
            Smoothing::Add1 if n > 0 => (m + 1.0) / (t + 1.0),
            Smoothing::Add1 => m / t,
            Smoothing::Epsilon if m == 0.0 => 0.1 / t,
            Smoothing::Epsilon => m / t,
        };
    }
    let (c, r) = (stats.hypothesis_len as f64, stats.reference_len as f64);
    let brevity_penalty = if c < r { libm::exp(1.0 - r / c) } else { 1.0 };
    let value = if precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|&p| libm::log(p)).sum::<f64>() / MAX_ORDER as f64;
        (brevity_penalty * libm::exp(mean_log)).clamp(0.0, 1.0)
    };
    BleuScore {
        value,
        precisions,
        brevity_penalty,
        hypothesis_len: stats.hypothesis_len,
        reference_len: stats.reference_len,
    }
}

pub fn sentence_bleu<S: AsRef<str>>(
    reference: &[S],
    hypothesis: &[S],
    smoothing: Smoothing,
) -> Result<BleuScore, MetricsError> {
    Ok(bleu_from_stats(&ngram_stats(&[reference], hypothesis)?, smoothing))
}

pub fn sentence_bleu_multi<R: AsRef<[S]>, S: AsRef<str>>(
    references: &[R],
    hypothesis: &[S],
    smoothing: Smoothing,
) -> Result<BleuScore, MetricsError> {
    Ok(bleu_from_stats(&ngram_stats(references, hypothesis)?, smoothing))
}

/// Corpus BLEU over (reference, hypothesis) pairs with pooled counts and a
/// pooled brevity penalty.
pub fn corpus_bleu<S: AsRef<str>>(pairs: &[(&[S], &[S])], smoothing: Smoothing) -> Result<BleuScore, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut pooled = NgramStats::default();
    for (r, h) in pairs {
        pooled.add(&ngram_stats(&[*r], h)?);
    }
    Ok(bleu_from_stats(&pooled, smoothing))
}

/// References and hypotheses for one source sentence, already tokenized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuGroup {
    pub references: Vec<Vec<String>>,
    pub hypotheses: Vec<Vec<String>>,
}

impl BleuGroup {
    /// Tokenizes raw sentences with the shared normalization.
    pub fn from_sentences<R: AsRef<str>, H: AsRef<str>>(references: &[R], hypotheses: &[H]) -> Self {
        BleuGroup {
            references: references.iter().map(|s| preprocess(s.as_ref()).tokens).collect(),
            hypotheses: hypotheses.iter().map(|s| preprocess(s.as_ref()).tokens).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPairBleu {
    pub score: BleuScore,
    /// `(reference, hypothesis)` index chosen in each group.
    pub selections: Vec<(usize, usize)>,
}

/// The (reference, hypothesis) pair with the highest sentence BLEU; the
/// first in row-major order on ties.
pub fn best_pair(group: &BleuGroup, smoothing: Smoothing) -> Result<(usize, usize), MetricsError> {
    let mut best: Option<((usize, usize), f64)> = None;
    for (i, r) in group.references.iter().enumerate() {
        for (j, h) in group.hypotheses.iter().enumerate() {
            let v = sentence_bleu(r, h, smoothing)?.value;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some(((i, j), v));
            }
        }
    }
    best.map(|(ij, _)| ij).ok_or(MetricsError::EmptyInput)
}

/// Picks the best pair of every group, then scores the picks as a corpus.
pub fn corpus_bleu_best_pair(groups: &[BleuGroup], smoothing: Smoothing) -> Result<BestPairBleu, MetricsError> {
    if groups.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let selections = groups
        .iter()
        .map(|g| best_pair(g, smoothing))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(&[String], &[String])> = groups
        .iter()
        .zip(&selections)
        .map(|(g, &(i, j))| (g.references[i].as_slice(), g.hypotheses[j].as_slice()))
        .collect();
    Ok(BestPairBleu {
        score: corpus_bleu(&pairs, smoothing)?,
        selections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StddevMode {
    #[default]
    Population,
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
}

pub fn group_stddev(scores: &[f64], mode: StddevMode) -> Result<GroupStats, MetricsError> {
    let needed = match mode {
        StddevMode::Population => 1,
        StddevMode::Sample => 2,
    };
    if scores.len() < needed {
        return Err(MetricsError::InsufficientData {
            needed,
            got: scores.len(),
        });
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let stddev = if scores.iter().all(|&s| s == scores[0]) {
        0.0
    } else {
        let ss: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum();
        let dof = match mode {
            StddevMode::Population => n,
            StddevMode::Sample => n - 1.0,
        };
        libm::sqrt(ss / dof)
    };
    Ok(GroupStats {
        scores: scores.to_vec(),
        mean,
        stddev,
    })
}

/// Scores of one metric, one list per source sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub name: String,
    pub groups: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub groups: Vec<GroupStats>,
    pub average_stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub mode: StddevMode,
    pub metrics: Vec<MetricSummary>,
}

/// Per-group spread of each metric and its average over groups. A group
/// with a single score has no spread, in either mode.
pub fn compare_metrics(metrics: &[MetricScores], mode: StddevMode) -> Result<Comparison, MetricsError> {
    let expected = metrics.first().map_or(0, |m| m.groups.len());
    let mut out = Vec::with_capacity(metrics.len());
    for metric in metrics {
        if metric.groups.len() != expected {
            return Err(MetricsError::Misaligned(metric.name.clone()));
        }
        let groups = metric
            .groups
            .iter()
            .map(|g| match (g.len(), mode) {
                (1, StddevMode::Sample) => Ok(GroupStats {
                    scores: g.clone(),
                    mean: g[0],
                    stddev: 0.0,
                }),
                _ => group_stddev(g, mode),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let average_stddev = if groups.is_empty() {
            0.0
        } else {
            groups.iter().map(|g| g.stddev).sum::<f64>() / groups.len() as f64
        };
        out.push(MetricSummary {
            name: metric.name.clone(),
            groups,
            average_stddev,
        });
    }
    Ok(Comparison { mode, metrics: out })
}
