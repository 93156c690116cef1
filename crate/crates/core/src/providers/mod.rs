//! Interfaces to the external capabilities the pipelines consume.
//!
//! Every capability is a small object-safe trait. [`Providers`] bundles one
//! implementation of each and enforces the calling contract (non-empty
//! inputs, non-empty outputs, script preconditions) so that backends only
//! have to move bytes.

mod base;
pub mod mock;
pub mod wire;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{LanguagePair, ENGLISH};

pub use base::{
    base_create, parse_base_creation, render_prompt, render_prompt_a, BaseCreation, BaseMode, CompletionRequest,
    LLM_TEMPERATURE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("response does not match the expected schema: {0}")]
    Schema(String),
    #[error("provider returned an empty response")]
    EmptyResponse,
    #[error("no cached response for {provider} request {hash}")]
    CacheMiss { provider: String, hash: String },
    #[error("embedding dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("no table entry for {0}")]
    Missing(String),
    #[error("provider is offline: {0}")]
    Offline(String),
}

/// Coarse part-of-speech class of an English word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosClass {
    Noun,
    Adjective,
    Adverb,
    Conjunction,
    Interjection,
    Verb,
    Other,
}

impl PosClass {
    /// Accepts Penn Treebank tags (`NN`, `VBZ`, ...), Universal tags (`NOUN`,
    /// `CCONJ`, ...) and plain English class names.
    pub fn from_tag(tag: &str) -> PosClass {
        let upper: String = tag.trim().chars().map(|c| c.to_ascii_uppercase()).collect();
        match upper.as_str() {
            "NOUN" | "PROPN" | "PROPER NOUN" => PosClass::Noun,
            "ADJ" | "ADJECTIVE" => PosClass::Adjective,
            "ADV" | "ADVERB" => PosClass::Adverb,
            "CC" | "CCONJ" | "CONJ" | "CONJUNCTION" => PosClass::Conjunction,
            "UH" | "INTJ" | "INTERJECTION" => PosClass::Interjection,
            "VERB" => PosClass::Verb,
            t if t.starts_with("NN") => PosClass::Noun,
            t if t.starts_with("JJ") => PosClass::Adjective,
            t if t.starts_with("RB") => PosClass::Adverb,
            t if t.starts_with("VB") => PosClass::Verb,
            _ => PosClass::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerbVoice {
    #[serde(rename = "ACTIVE")]
    Active,
    #[serde(rename = "PASSIVE")]
    Passive,
    #[serde(rename = "NA")]
    NotApplicable,
}

/// One replaceable word from base creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordEntry {
    pub eng: String,
    pub base_eng: String,
    pub pos_tag: String,
    pub matrix_word: String,
    /// Three romanized spellings of `matrix_word`, lowercase.
    pub roman_variants: [String; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb_voice: Option<VerbVoice>,
    /// False when `matrix_word` could not be located in the matrix sentence.
    pub anchored: bool,
}

impl WordEntry {
    pub fn pos_class(&self) -> PosClass {
        PosClass::from_tag(&self.pos_tag)
    }

    /// A verb carrying the Hindi-specific lemma and voice fields.
    pub fn is_inflectable_verb(&self) -> bool {
        self.pos_class() == PosClass::Verb && self.base_matrix.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToMatrixScript,
    ToRoman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordLanguage {
    English,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ProviderError> {
        if values.is_empty() {
            return Err(ProviderError::Schema("embedding has no components".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProviderError::Schema("embedding has non-finite components".into()));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Cosine similarity in double precision, clamped to `[-1, 1]`. A zero
/// vector has similarity 0 with everything.
pub fn similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, ProviderError> {
    if a.dim() != b.dim() {
        return Err(ProviderError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (libm::sqrt(na) * libm::sqrt(nb))).clamp(-1.0, 1.0))
}

pub trait Llm: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String, ProviderError>;

    /// Translates a single word in the sense given by its PoS tag.
    fn translate_word_pos(&self, word: &str, pos: &str, src: &str, dst: &str) -> Result<String, ProviderError>;
}

pub trait Transliterator: Send + Sync {
    fn transliterate(&self, text: &str, pair: &LanguagePair, direction: Direction) -> Result<String, ProviderError>;
}

pub trait LanguageIdentifier: Send + Sync {
    fn identify(&self, word: &str, pair: &LanguagePair) -> Result<WordLanguage, ProviderError>;
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedToken>, ProviderError>;
}

pub trait Embedder: Send + Sync {
    fn embed(&self, sentence: &str) -> Result<EmbeddingVector, ProviderError>;
}

/// One implementation of every capability.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub llm: &'a dyn Llm,
    pub translator: &'a dyn Translator,
    pub transliterator: &'a dyn Transliterator,
    pub lid: &'a dyn LanguageIdentifier,
    pub tagger: &'a dyn PosTagger,
    pub embedder: &'a dyn Embedder,
}

impl fmt::Debug for Providers<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Providers { .. }")
    }
}

fn non_empty(out: String) -> Result<String, ProviderError> {
    if out.trim().is_empty() {
        Err(ProviderError::EmptyResponse)
    } else {
        Ok(out)
    }
}

impl<'a> Providers<'a> {
    pub fn base_create(
        &self,
        english: &str,
        pair: &LanguagePair,
        mode: BaseMode,
    ) -> Result<BaseCreation, ProviderError> {
        base_create(self.llm, english, pair, mode)
    }

    pub fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String, ProviderError> {
        if src == dst {
            return Err(ProviderError::InvalidRequest(alloc::format!(
                "source and target language are both `{src}`"
            )));
        }
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyResponse);
        }
        non_empty(self.translator.translate(text, src, dst)?)
    }

    pub fn translate_word_pos(&self, word: &str, pos: &str, src: &str, dst: &str) -> Result<String, ProviderError> {
        if src == dst {
            return Err(ProviderError::InvalidRequest(alloc::format!(
                "source and target language are both `{src}`"
            )));
        }
        if word.split_whitespace().count() != 1 {
            return Err(ProviderError::InvalidRequest(alloc::format!(
                "`{word}` is not a single token"
            )));
        }
        non_empty(self.translator.translate_word_pos(word, pos, src, dst)?)
    }

    /// Script conversion. Only meaningful for pairs whose matrix language is
    /// not written in Latin script; callers skip it for Roman pairs.
    pub fn transliterate(
        &self,
        text: &str,
        pair: &LanguagePair,
        direction: Direction,
    ) -> Result<String, ProviderError> {
        if pair.is_roman() {
            return Err(ProviderError::InvalidRequest(alloc::format!(
                "{pair} is written in Latin script; transliteration does not apply"
            )));
        }
        if text.trim().is_empty() {
            return Ok(String::new());
        }
        let out = non_empty(self.transliterator.transliterate(text, pair, direction)?)?;
        let (before, after) = (text.split_whitespace().count(), out.split_whitespace().count());
        if before != after {
            log::warn!("transliteration changed token count {before} -> {after}: `{text}` -> `{out}`");
        }
        Ok(out)
    }

    pub fn lid(&self, word: &str, pair: &LanguagePair) -> Result<WordLanguage, ProviderError> {
        self.lid.identify(word, pair)
    }

    pub fn tag(&self, sentence: &str) -> Result<Vec<TaggedToken>, ProviderError> {
        if sentence.trim().is_empty() {
            return Ok(Vec::new());
        }
        self.tagger.tag(sentence)
    }

    pub fn embed(&self, sentence: &str) -> Result<EmbeddingVector, ProviderError> {
        let v = self.embedder.embed(sentence)?;
        EmbeddingVector::new(v.values)
    }

    pub fn to_english(&self, text: &str, pair: &LanguagePair) -> Result<String, ProviderError> {
        self.translate(text, pair.matrix(), ENGLISH)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn pos_classes() {
        assert_eq!(PosClass::from_tag("NNS"), PosClass::Noun);
        assert_eq!(PosClass::from_tag("PROPN"), PosClass::Noun);
        assert_eq!(PosClass::from_tag("JJR"), PosClass::Adjective);
        assert_eq!(PosClass::from_tag("RB"), PosClass::Adverb);
        assert_eq!(PosClass::from_tag("CC"), PosClass::Conjunction);
        assert_eq!(PosClass::from_tag("UH"), PosClass::Interjection);
        assert_eq!(PosClass::from_tag("VBZ"), PosClass::Verb);
        assert_eq!(PosClass::from_tag("verb"), PosClass::Verb);
        assert_eq!(PosClass::from_tag("DT"), PosClass::Other);
        assert_eq!(PosClass::from_tag("CD"), PosClass::Other);
    }

    #[test]
    fn cosine_examples() {
        let x = v(&[0.3, -1.2, 4.0]);
        assert!((similarity(&x, &x).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(similarity(&v(&[1.0, 0.0]), &v(&[0.0, 2.0])).unwrap(), 0.0);
        assert!((similarity(&v(&[1.0, 2.0]), &v(&[-2.0, -4.0])).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(
            similarity(&v(&[1.0]), &v(&[1.0, 0.0])),
            Err(ProviderError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn embedding_rejects_non_finite() {
        assert!(EmbeddingVector::new(vec![f64::NAN]).is_err());
        assert!(EmbeddingVector::new(vec![]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cosine_symmetric_bounded_scale_invariant(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
            k in 0.01f64..100.0,
        ) {
            let (va, vb) = (v(&a), v(&b));
            let s = similarity(&va, &vb).unwrap();
            proptest::prop_assert!((-1.0..=1.0).contains(&s));
            proptest::prop_assert!((s - similarity(&vb, &va).unwrap()).abs() < 1e-12);
            let scaled = v(&a.iter().map(|x| x * k).collect::<Vec<_>>());
            proptest::prop_assert!((s - similarity(&scaled, &vb).unwrap()).abs() < 1e-9);
        }
    }
}
