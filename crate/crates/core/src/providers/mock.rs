//! Deterministic table-driven providers.
//!
//! Each mock is a pure function of its tables and is freely shareable across
//! threads. Call counters exist so tests can assert which capabilities a
//! pipeline touched.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use super::{
    render_prompt, BaseMode, CompletionRequest, Direction, Embedder, EmbeddingVector, LanguageIdentifier, Llm,
    PosTagger, ProviderError, TaggedToken, Translator, Transliterator, WordLanguage,
};
use crate::lang::LanguagePair;
use crate::text::{fold, preprocess, word_tokens};

fn missing(what: impl core::fmt::Display) -> ProviderError {
    ProviderError::Missing(alloc::format!("{what}"))
}

/// Maps each whitespace token's core through `lookup`, keeping attached
/// punctuation. Tokens that map to an empty string are dropped.
fn map_tokens(text: &str, mut lookup: impl FnMut(&str) -> Option<String>) -> String {
    let mut out: Vec<String> = Vec::new();
    for tok in word_tokens(text) {
        let core = tok.core(text);
        let mapped = if core.is_empty() { None } else { lookup(core) };
        match mapped {
            Some(m) if m.is_empty() => {}
            Some(m) => {
                let mut s = String::from(&text[tok.start..tok.core_start]);
                s.push_str(&m);
                s.push_str(tok.trailing(text));
                out.push(s);
            }
            None => out.push(tok.text.to_string()),
        }
    }
    out.join(" ")
}

#[derive(Debug, Default)]
pub struct MockLlm {
    responses: BTreeMap<String, Vec<String>>,
    calls: AtomicUsize,
}

impl MockLlm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Attempt `i` receives `responses[min(i, len - 1)]`.
    pub fn with_responses(mut self, prompt: &str, responses: Vec<String>) -> Self {
        self.responses.insert(prompt.to_string(), responses);
        self
    }

    pub fn with_base_creation(self, english: &str, pair: &LanguagePair, mode: BaseMode, json: &str) -> Self {
        let prompt = render_prompt(english, pair, mode);
        self.with_responses(&prompt, vec![json.to_string()])
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Llm for MockLlm {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let replies = self
            .responses
            .get(&request.prompt)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| missing("prompt"))?;
        let i = (request.attempt as usize).min(replies.len() - 1);
        Ok(replies[i].clone())
    }
}

/// What a table mock does when a lookup misses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    Error,
    Identity,
    /// Translate token by token through the word table, keeping unknown
    /// tokens as they are.
    Tokenwise,
}

type LangKey = (String, String, String);

#[derive(Debug, Default)]
pub struct MockTranslator {
    sentences: BTreeMap<LangKey, String>,
    words: BTreeMap<LangKey, String>,
    pos_words: BTreeMap<(String, String, String, String), String>,
    fallback: Fallback,
    calls: AtomicUsize,
}

impl MockTranslator {
    pub fn new(fallback: Fallback) -> Self {
        MockTranslator {
            fallback,
            ..Default::default()
        }
    }

    pub fn sentence(mut self, src: &str, dst: &str, text: &str, out: &str) -> Self {
        self.sentences.insert((src.into(), dst.into(), text.into()), out.into());
        self
    }

    pub fn word(mut self, src: &str, dst: &str, word: &str, out: &str) -> Self {
        self.words.insert((src.into(), dst.into(), fold(word)), out.into());
        self
    }

    pub fn word_pos(mut self, src: &str, dst: &str, word: &str, pos: &str, out: &str) -> Self {
        self.pos_words
            .insert((src.into(), dst.into(), fold(word), pos.into()), out.into());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn lookup_word(&self, src: &str, dst: &str, word: &str) -> Option<String> {
        self.words.get(&(src.into(), dst.into(), fold(word))).cloned()
    }
}

impl Translator for MockTranslator {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if let Some(out) = self.sentences.get(&(src.into(), dst.into(), text.into())) {
            return Ok(out.clone());
        }
        match self.fallback {
            Fallback::Error => self
                .lookup_word(src, dst, text)
                .ok_or_else(|| missing(alloc::format!("{src}->{dst} `{text}`"))),
            Fallback::Identity => Ok(self.lookup_word(src, dst, text).unwrap_or_else(|| text.to_string())),
            Fallback::Tokenwise => Ok(map_tokens(text, |w| self.lookup_word(src, dst, w))),
        }
    }

    fn translate_word_pos(&self, word: &str, pos: &str, src: &str, dst: &str) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if let Some(out) = self.pos_words.get(&(src.into(), dst.into(), fold(word), pos.into())) {
            return Ok(out.clone());
        }
        match (self.lookup_word(src, dst, word), self.fallback) {
            (Some(out), _) => Ok(out),
            (None, Fallback::Error) => Err(missing(alloc::format!("{src}->{dst} `{word}`/{pos}"))),
            (None, _) => Ok(word.to_string()),
        }
    }
}

/// Token-level script conversion from a symmetric roman/native word table.
#[derive(Debug, Default)]
pub struct MockTransliterator {
    to_native: BTreeMap<String, String>,
    to_roman: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl MockTransliterator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a word in both directions. The first roman spelling given
    /// for a native word wins for the reverse direction.
    pub fn word(mut self, roman: &str, native: &str) -> Self {
        self.to_native.insert(fold(roman), native.into());
        self.to_roman.entry(fold(native)).or_insert_with(|| roman.into());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Transliterator for MockTransliterator {
    fn transliterate(&self, text: &str, _pair: &LanguagePair, direction: Direction) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let table = match direction {
            Direction::ToMatrixScript => &self.to_native,
            Direction::ToRoman => &self.to_roman,
        };
        Ok(map_tokens(text, |w| table.get(&fold(w)).cloned()))
    }
}

/// Labels a word English when it is in the lexicon, matrix otherwise.
#[derive(Debug, Default)]
pub struct MockLid {
    english: BTreeSet<String>,
    calls: AtomicUsize,
}

impl MockLid {
    pub fn new<'a>(english: impl IntoIterator<Item = &'a str>) -> Self {
        MockLid {
            english: english.into_iter().map(fold).collect(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl LanguageIdentifier for MockLid {
    fn identify(&self, word: &str, _pair: &LanguagePair) -> Result<WordLanguage, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(if self.english.contains(&fold(word)) {
            WordLanguage::English
        } else {
            WordLanguage::Matrix
        })
    }
}

#[derive(Debug, Default)]
pub struct MockTagger {
    tags: BTreeMap<String, String>,
    default_tag: Option<String>,
}

impl MockTagger {
    /// Tokens outside the table get `default_tag`, or are left out when it
    /// is `None`.
    pub fn new(default_tag: Option<&str>) -> Self {
        MockTagger {
            tags: BTreeMap::new(),
            default_tag: default_tag.map(String::from),
        }
    }

    pub fn tag_word(mut self, word: &str, tag: &str) -> Self {
        self.tags.insert(fold(word), tag.into());
        self
    }
}

impl PosTagger for MockTagger {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedToken>, ProviderError> {
        Ok(preprocess(sentence)
            .tokens
            .into_iter()
            .filter_map(|token| {
                let tag = self.tags.get(&token).cloned().or_else(|| self.default_tag.clone())?;
                Some(TaggedToken { token, tag })
            })
            .collect())
    }
}

/// Sentence embeddings from a table keyed by normalized text, falling back to
/// signed feature hashing of the tokens when `hash_dim` is set.
#[derive(Debug, Default)]
pub struct MockEmbedder {
    table: BTreeMap<String, Vec<f64>>,
    hash_dim: Option<usize>,
    calls: AtomicUsize,
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl MockEmbedder {
    pub fn table_only() -> Self {
        Self::default()
    }

    pub fn hashed(dim: usize) -> Self {
        MockEmbedder {
            hash_dim: Some(dim.max(1)),
            ..Default::default()
        }
    }

    pub fn vector(mut self, sentence: &str, values: &[f64]) -> Self {
        self.table.insert(preprocess(sentence).text, values.to_vec());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Embedder for MockEmbedder {
    fn embed(&self, sentence: &str) -> Result<EmbeddingVector, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let key = preprocess(sentence);
        if let Some(v) = self.table.get(&key.text) {
            return EmbeddingVector::new(v.clone());
        }
        let dim = self
            .hash_dim
            .ok_or_else(|| missing(alloc::format!("embedding for `{}`", key.text)))?;
        let mut values = vec![0.0; dim];
        for token in &key.tokens {
            let h = fnv1a(token.as_bytes());
            let sign = if (h >> 63) == 1 { -1.0 } else { 1.0 };
            values[(h % dim as u64) as usize] += sign;
        }
        EmbeddingVector::new(values)
    }
}

/// Refuses every call and counts the attempts. Stands in for the network
/// when nothing should reach it.
#[derive(Debug, Default)]
pub struct Offline {
    calls: AtomicUsize,
}

impl Offline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn refuse<T>(&self, what: &str) -> Result<T, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Err(ProviderError::Offline(what.to_string()))
    }
}

impl Llm for Offline {
    fn complete(&self, _: &CompletionRequest) -> Result<String, ProviderError> {
        self.refuse("llm")
    }
}

impl Translator for Offline {
    fn translate(&self, _: &str, _: &str, _: &str) -> Result<String, ProviderError> {
        self.refuse("translate")
    }

    fn translate_word_pos(&self, _: &str, _: &str, _: &str, _: &str) -> Result<String, ProviderError> {
        self.refuse("translate_pos")
    }
}

impl Transliterator for Offline {
    fn transliterate(&self, _: &str, _: &LanguagePair, _: Direction) -> Result<String, ProviderError> {
        self.refuse("transliterate")
    }
}

impl LanguageIdentifier for Offline {
    fn identify(&self, _: &str, _: &LanguagePair) -> Result<WordLanguage, ProviderError> {
        self.refuse("lid")
    }
}

impl PosTagger for Offline {
    fn tag(&self, _: &str) -> Result<Vec<TaggedToken>, ProviderError> {
        self.refuse("pos")
    }
}

impl Embedder for Offline {
    fn embed(&self, _: &str) -> Result<EmbeddingVector, ProviderError> {
        self.refuse("embed")
    }
}
