//! Corpus word frequencies and the replacement score `s = f(en) / f(x)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lang::LanguagePair;
use crate::providers::WordEntry;
use crate::text::preprocess;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("`{0}` is not a single normalized token")]
    NotAToken(String),
    #[error("count overflow for `{0}`")]
    Overflow(String),
    #[error("vocabularies for different pairs ({0} vs {1})")]
    PairMismatch(String, String),
}

/// Token counts from a real-world code-mixed corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencyVocab {
    pair: Option<LanguagePair>,
    counts: BTreeMap<String, u64>,
    total_tokens: u64,
}

impl FrequencyVocab {
    pub fn new(pair: Option<LanguagePair>) -> Self {
        FrequencyVocab {
            pair,
            counts: BTreeMap::new(),
            total_tokens: 0,
        }
    }

    /// Counts token occurrences over normalized lines.
    pub fn build<I, S>(lines: I, pair: Option<LanguagePair>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = FrequencyVocab::new(pair);
        for line in lines {
            vocab.add_line(line.as_ref());
        }
        vocab
    }

    pub fn add_line(&mut self, line: &str) {
        for token in preprocess(line).tokens {
            self.total_tokens += 1;
            *self.counts.entry(token).or_insert(0) += 1;
        }
    }

    /// Adds `count` occurrences of an already normalized token.
    pub fn add_count(&mut self, token: &str, count: u64) -> Result<(), VocabError> {
        let norm = preprocess(token);
        if norm.tokens.len() != 1 || norm.text != token {
            return Err(VocabError::NotAToken(token.into()));
        }
        let overflow = || VocabError::Overflow(token.into());
        self.total_tokens = self.total_tokens.checked_add(count).ok_or_else(overflow)?;
        let slot = self.counts.entry(norm.text).or_insert(0);
        *slot = slot.checked_add(count).ok_or_else(overflow)?;
        Ok(())
    }

    /// Pointwise sum of counts, for sharded builds.
    pub fn merge(&mut self, other: &FrequencyVocab) -> Result<(), VocabError> {
        match (&self.pair, &other.pair) {
            (Some(a), Some(b)) if a != b => return Err(VocabError::PairMismatch(a.code(), b.code())),
            (None, Some(b)) => self.pair = Some(b.clone()),
            _ => {}
        }
        for (token, &count) in &other.counts {
            self.add_count(token, count)?;
        }
        Ok(())
    }

    /// Occurrences of `word` after normalization; 0 when absent.
    pub fn count(&self, word: &str) -> u64 {
        let norm = preprocess(word);
        self.counts.get(&norm.text).copied().unwrap_or(0)
    }

    pub fn pair(&self) -> Option<&LanguagePair> {
        self.pair.as_ref()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Number of distinct tokens.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Tokens with their counts in byte order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Replacement priority of an entry. `Infinite` ranks above every finite
/// value.
#[derive(Debug, Clone, Copy)]
pub enum Score {
    Finite(f64),
    Infinite,
}

impl Score {
    pub fn ratio(f_en: u64, f_x: u64) -> Score {
        if f_x == 0 {
            Score::Infinite
        } else {
            Score::Finite(f_en as f64 / f_x as f64)
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Score::Infinite)
    }

    pub fn value(self) -> f64 {
        match self {
            Score::Finite(v) => v,
            Score::Infinite => f64::INFINITY,
        }
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::Infinite, Score::Infinite) => Ordering::Equal,
            (Score::Infinite, _) => Ordering::Greater,
            (_, Score::Infinite) => Ordering::Less,
            (Score::Finite(a), Score::Finite(b)) => a.total_cmp(b),
        }
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Finite(v) => write!(f, "{v}"),
            Score::Infinite => f.write_str("inf"),
        }
    }
}

// JSON has no infinity, so the infinite score travels as the string "inf".
impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Score::Finite(v) => s.serialize_f64(*v),
            Score::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() && v >= 0.0 => Ok(Score::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Score::Infinite),
            _ => Err(serde::de::Error::custom(
                "score must be a non-negative number or \"inf\"",
            )),
        }
    }
}

/// The frequencies behind one score, kept for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frequencies {
    pub f_en: u64,
    pub f_x: u64,
}

/// Sum of the counts of the distinct spellings of an entry.
pub fn matrix_frequency(entry: &WordEntry, vocab: &FrequencyVocab) -> u64 {
    let distinct: BTreeSet<String> = entry.roman_variants.iter().map(|v| preprocess(v).text).collect();
    distinct.iter().map(|v| vocab.count(v)).sum()
}

/// How entries are scored.
#[derive(Debug, Clone, Copy)]
pub enum Scoring<'a> {
    Corpus {
        vocab: &'a FrequencyVocab,
        /// Look up `base_eng` instead of the surface English word.
        use_lemma: bool,
    },
    /// No corpus available: every entry scores `Infinite`.
    Uniform,
}

impl<'a> Scoring<'a> {
    pub fn corpus(vocab: &'a FrequencyVocab) -> Self {
        Scoring::Corpus {
            vocab,
            use_lemma: false,
        }
    }

    pub fn frequencies(&self, entry: &WordEntry) -> Option<Frequencies> {
        match *self {
            Scoring::Corpus { vocab, use_lemma } => {
                let english = if use_lemma { &entry.base_eng } else { &entry.eng };
                Some(Frequencies {
                    f_en: vocab.count(english),
                    f_x: matrix_frequency(entry, vocab),
                })
            }
            Scoring::Uniform => None,
        }
    }

    pub fn score(&self, entry: &WordEntry) -> Score {
        match self.frequencies(entry) {
            Some(f) => Score::ratio(f.f_en, f.f_x),
            None => Score::Infinite,
        }
    }
}

/// `f(en) / Σ f(var_i)` with the surface English word.
pub fn score_entry(entry: &WordEntry, vocab: &FrequencyVocab) -> Score {
    Scoring::corpus(vocab).score(entry)
}
