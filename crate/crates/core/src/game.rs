//! GAME: score a code-mixed candidate against an English reference without a
//! gold code-mixed sentence. English words in the candidate are translated
//! into the matrix language, the now monolingual sentence is translated back
//! to English, and the reconstruction is compared with the reference by
//! sentence-embedding cosine similarity.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{LanguagePair, ENGLISH};
use crate::providers::{similarity, Direction, ProviderError, Providers, WordLanguage};
use crate::text::{fold, has_non_roman, preprocess, NormalizedSentence};

const HOMONYMS_HI: &str = include_str!("../data/homonyms/en-hi.json");
const HOMONYMS_ES: &str = include_str!("../data/homonyms/en-es.json");

/// Words spelled the same in English and the matrix language, with the
/// matrix-language form to use for each. Consulted before language
/// identification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomonymDictionary {
    pub pair: LanguagePair,
    pub entries: BTreeMap<String, String>,
}

impl HomonymDictionary {
    pub fn empty(pair: LanguagePair) -> Self {
        HomonymDictionary {
            pair,
            entries: BTreeMap::new(),
        }
    }

    /// The bundled dictionary for the pair, or an empty one.
    pub fn defaults(pair: &LanguagePair) -> Self {
        let bundled = match pair.matrix() {
            "hi" => Some(HOMONYMS_HI),
            "es" => Some(HOMONYMS_ES),
            _ => None,
        };
        bundled
            .and_then(|json| HomonymDictionary::from_json(json).ok())
            .filter(|d| d.pair == *pair)
            .unwrap_or_else(|| HomonymDictionary::empty(pair.clone()))
    }

    /// Parses `{"pair": "en-xx", "entries": {word: replacement}}`, folding keys.
    pub fn from_json(json: &str) -> Result<Self, String> {
        let raw: HomonymDictionary = serde_json::from_str(json).map_err(|e| alloc::format!("{e}"))?;
        let mut dict = HomonymDictionary::empty(raw.pair);
        for (w, t) in &raw.entries {
            dict.insert(w, t);
        }
        dict.validate()?;
        Ok(dict)
    }

    /// Adds every entry of `other`, overriding existing keys.
    pub fn extend(&mut self, other: &HomonymDictionary) {
        for (w, t) in &other.entries {
            self.insert(w, t);
        }
    }

    pub fn insert(&mut self, word: &str, replacement: &str) {
        self.entries.insert(fold(word.trim()), replacement.into());
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.entries.get(word).map(String::as_str)
    }

    /// Keys must be single lowercase tokens.
    pub fn validate(&self) -> Result<(), String> {
        for key in self.entries.keys() {
            let norm = preprocess(key);
            if norm.tokens.len() != 1 || norm.text != *key {
                return Err(alloc::format!("homonym key `{key}` is not a normalized single token"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Score only candidates with `0 < ctr < tokens`.
    #[default]
    Strict,
    /// Score every Roman-script candidate, even monolingual ones.
    Lenient,
}

/// What the reference is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityTarget {
    /// The English reconstruction.
    #[default]
    Reconstruction,
    /// The word-replaced candidate, as the step-by-step listing computes it.
    FirstTranslation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GameOptions {
    pub gate: GateMode,
    pub target: SimilarityTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Ok,
    NonRoman,
    NotCodeMixed,
}

/// The pipeline step an evaluation was in when it failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    PosTags,
    ReplaceWords,
    Reconstruct,
    Similarity,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::PosTags => "pos tags",
            Stage::ReplaceWords => "word replacement",
            Stage::Reconstruct => "reconstruction",
            Stage::Similarity => "similarity",
        })
    }
}

/// Every intermediate artifact of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub reference: String,
    pub candidate: String,
    pub pair: LanguagePair,
    pub s_r: NormalizedSentence,
    pub s_cm: NormalizedSentence,
    /// Candidate translated to English whole, for PoS tags.
    pub s_temp: Option<String>,
    /// Tags for candidate tokens that also occur in `s_temp`.
    pub pos_map: BTreeMap<String, String>,
    pub first_translation: Vec<String>,
    /// English reconstruction.
    pub s_en: Option<String>,
    /// Number of tokens identified as English.
    pub ctr: usize,
    pub gate: Gate,
    pub q: f64,
    /// `100 q` rounded to two decimals.
    pub display: f64,
}

impl GameTrace {
    fn new(reference: &str, candidate: &str, pair: &LanguagePair) -> Self {
        GameTrace {
            reference: reference.into(),
            candidate: candidate.into(),
            pair: pair.clone(),
            s_r: preprocess(reference),
            s_cm: preprocess(candidate),
            s_temp: None,
            pos_map: BTreeMap::new(),
            first_translation: Vec::new(),
            s_en: None,
            ctr: 0,
            gate: Gate::Ok,
            q: 0.0,
            display: 0.0,
        }
    }

    fn zero(mut self, gate: Gate) -> Self {
        self.gate = gate;
        self.q = 0.0;
        self.display = 0.0;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("GAME failed during {stage}: {error}")]
pub struct GameError {
    pub stage: Stage,
    pub error: ProviderError,
    /// Everything computed before the failure.
    pub trace: alloc::boxed::Box<GameTrace>,
}

pub fn display_score(q: f64) -> f64 {
    libm::round(q * 10_000.0) / 100.0
}

/// Round-trips the candidate through the matrix language to obtain an
/// English sentence to tag, and tags the candidate words it shares.
pub fn acquire_pos_tags(
    s_cm: &NormalizedSentence,
    pair: &LanguagePair,
    providers: &Providers<'_>,
) -> Result<(String, BTreeMap<String, String>), ProviderError> {
    let matrix = if pair.is_roman() {
        s_cm.text.clone()
    } else {
        providers.transliterate(&s_cm.text, pair, Direction::ToMatrixScript)?
    };
    let s_temp = providers.to_english(&matrix, pair)?;
    let mut tags: BTreeMap<String, String> = BTreeMap::new();
    for tagged in providers.tag(&s_temp)? {
        for token in preprocess(&tagged.token).tokens {
            tags.entry(token).or_insert_with(|| tagged.tag.clone());
        }
    }
    let pos_map = s_cm
        .tokens
        .iter()
        .filter_map(|t| tags.get(t).map(|tag| (t.clone(), tag.clone())))
        .collect();
    Ok((preprocess(&s_temp).text, pos_map))
}

/// Translates English tokens into the matrix language, leaving matrix tokens
/// alone. Returns the new tokens and how many were English.
pub fn replace_words(
    s_cm: &NormalizedSentence,
    pos_map: &BTreeMap<String, String>,
    homonyms: &HomonymDictionary,
    pair: &LanguagePair,
    providers: &Providers<'_>,
) -> Result<(Vec<String>, usize), ProviderError> {
    let mut out = Vec::with_capacity(s_cm.tokens.len());
    let mut ctr = 0;
    for token in &s_cm.tokens {
        if let Some(t) = homonyms.get(token) {
            out.push(t.to_string());
            continue;
        }
        match providers.lid(token, pair)? {
            WordLanguage::English => {
                ctr += 1;
                let translated = match pos_map.get(token) {
                    Some(tag) => providers.translate_word_pos(token, tag, ENGLISH, pair.matrix())?,
                    None => providers.translate(token, ENGLISH, pair.matrix())?,
                };
                out.push(translated.trim().to_string());
            }
            WordLanguage::Matrix => out.push(token.clone()),
        }
    }
    Ok((out, ctr))
}

/// Translates the word-replaced candidate back to English.
pub fn reconstruct(
    first_translation: &[String],
    pair: &LanguagePair,
    providers: &Providers<'_>,
) -> Result<String, ProviderError> {
    let joined = preprocess(&first_translation.join(" "));
    if joined.is_empty() {
        return Err(ProviderError::InvalidRequest("nothing to reconstruct".into()));
    }
    let matrix = if pair.is_roman() {
        joined.text
    } else {
        providers.transliterate(&joined.text, pair, Direction::ToMatrixScript)?
    };
    Ok(preprocess(&providers.to_english(&matrix, pair)?).text)
}

/// Scores `candidate` against `reference`; `q` is in `[-1, 1]` and 0 whenever
/// a gate rejects the candidate.
pub fn evaluate(
    reference: &str,
    candidate: &str,
    pair: &LanguagePair,
    providers: &Providers<'_>,
    homonyms: &HomonymDictionary,
    options: &GameOptions,
) -> Result<GameTrace, GameError> {
    let mut trace = GameTrace::new(reference, candidate, pair);
    let fail = |stage, error, trace: &GameTrace| GameError {
        stage,
        error,
        trace: alloc::boxed::Box::new(trace.clone()),
    };
    if trace.s_r.is_empty() {
        let err = ProviderError::InvalidRequest("empty reference".into());
        return Err(fail(Stage::Input, err, &trace));
    }
    if has_non_roman(&trace.s_cm) {
        return Ok(trace.zero(Gate::NonRoman));
    }
    if trace.s_cm.is_empty() {
        return Ok(trace.zero(Gate::NotCodeMixed));
    }

    let (s_temp, pos_map) =
        acquire_pos_tags(&trace.s_cm, pair, providers).map_err(|e| fail(Stage::PosTags, e, &trace))?;
    trace.s_temp = Some(s_temp);
    trace.pos_map = pos_map;

    let (first, ctr) = replace_words(&trace.s_cm, &trace.pos_map, homonyms, pair, providers)
        .map_err(|e| fail(Stage::ReplaceWords, e, &trace))?;
    trace.first_translation = first;
    trace.ctr = ctr;

    let code_mixed = 0 < ctr && ctr < trace.s_cm.len();
    if options.gate == GateMode::Strict && !code_mixed {
        return Ok(trace.zero(Gate::NotCodeMixed));
    }

    let s_en =
        reconstruct(&trace.first_translation, pair, providers).map_err(|e| fail(Stage::Reconstruct, e, &trace))?;
    trace.s_en = Some(s_en);

    let target = match options.target {
        SimilarityTarget::Reconstruction => trace.s_en.clone().unwrap_or_default(),
        SimilarityTarget::FirstTranslation => trace.first_translation.join(" "),
    };
    let q = providers
        .embed(&trace.s_r.text)
        .and_then(|a| Ok((a, providers.embed(&target)?)))
        .and_then(|(a, b)| similarity(&a, &b))
        .map_err(|e| fail(Stage::Similarity, e, &trace))?;
    trace.q = q;
    trace.display = display_score(q);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::{
        Fallback, MockEmbedder, MockLid, MockLlm, MockTagger, MockTranslator, MockTransliterator, Offline,
    };
    use alloc::vec;

    struct FactMocks {
        llm: MockLlm,
        translator: MockTranslator,
        transliterator: MockTransliterator,
        lid: MockLid,
        tagger: MockTagger,
        embedder: MockEmbedder,
    }

    impl FactMocks {
        fn new() -> Self {
            let words = [
                ("yeh", "यह"),
                ("tathya", "तथ्य"),
                ("sambhavna", "संभावना"),
                ("par", "पर"),
                ("adharit", "आधारित"),
                ("hai", "है"),
                ("fact", "फैक्ट"),
                ("possibility", "पॉसिबिलिटी"),
                ("based", "बेस्ड"),
            ];
            FactMocks {
                llm: MockLlm::new(),
                translator: MockTranslator::new(Fallback::Error)
                    .sentence(
                        "hi",
                        "en",
                        "यह फैक्ट पॉसिबिलिटी पर बेस्ड है",
                        "This fact is based on possibility.",
                    )
                    .sentence(
                        "hi",
                        "en",
                        "यह तथ्य संभावना पर आधारित है",
                        "This fact is based on possibility.",
                    )
                    .sentence("hi", "en", "यह पर है", "This is on.")
                    .word_pos("en", "hi", "fact", "NN", "तथ्य")
                    .word_pos("en", "hi", "possibility", "NN", "संभावना")
                    .word_pos("en", "hi", "based", "VBN", "आधारित"),
                transliterator: words.iter().fold(MockTransliterator::new(), |t, (r, n)| t.word(r, n)),
                lid: MockLid::new(["fact", "possibility", "based"]),
                tagger: MockTagger::new(None)
                    .tag_word("this", "DT")
                    .tag_word("fact", "NN")
                    .tag_word("is", "VBZ")
                    .tag_word("based", "VBN")
                    .tag_word("on", "IN")
                    .tag_word("possibility", "NN"),
                embedder: MockEmbedder::hashed(256),
            }
        }

        fn providers(&self) -> Providers<'_> {
            Providers {
                llm: &self.llm,
                translator: &self.translator,
                transliterator: &self.transliterator,
                lid: &self.lid,
                tagger: &self.tagger,
                embedder: &self.embedder,
            }
        }
    }

    const REF: &str = "This fact is based on possibility.";
    const CAND: &str = "Yeh fact possibility par based hai.";

    #[test]
    fn fact_sentence_reconstructs_exactly() {
        let f = FactMocks::new();
        let hi = LanguagePair::hindi();
        let trace = evaluate(
            REF,
            CAND,
            &hi,
            &f.providers(),
            &HomonymDictionary::defaults(&hi),
            &GameOptions::default(),
        )
        .unwrap();
        assert_eq!(
            trace.first_translation,
            vec!["yeh", "तथ्य", "संभावना", "पर", "आधारित", "hai"]
        );
        assert_eq!(trace.ctr, 3);
        assert_eq!(trace.pos_map.get("fact").map(String::as_str), Some("NN"));
        assert!(!trace.pos_map.contains_key("yeh"));
        assert_eq!(trace.s_en.as_deref(), Some("this fact is based on possibility"));
        assert_eq!(trace.gate, Gate::Ok);
        assert!((trace.q - 1.0).abs() < 1e-6);
        assert_eq!(trace.display, 100.0);
        // "par" is a homonym: five LID calls for six tokens.
        assert_eq!(f.lid.calls(), 5);
    }

    #[test]
    fn punctuation_invariance() {
        let f = FactMocks::new();
        let hi = LanguagePair::hindi();
        let h = HomonymDictionary::defaults(&hi);
        let o = GameOptions::default();
        let a = evaluate(REF, CAND, &hi, &f.providers(), &h, &o).unwrap();
        let b = evaluate(
            "This fact is based on possibility..",
            "Yeh fact possibility par based hai.!",
            &hi,
            &f.providers(),
            &h,
            &o,
        )
        .unwrap();
        assert_eq!(a.q, b.q);
        assert_eq!(a.first_translation, b.first_translation);
    }

    #[test]
    fn homonyms_never_reach_lid() {
        let off = Offline::new();
        let lid = MockLid::new(["x"]);
        let p = Providers {
            llm: &off,
            translator: &off,
            transliterator: &off,
            lid: &lid,
            tagger: &off,
            embedder: &off,
        };
        let hi = LanguagePair::hindi();
        let (out, ctr) = replace_words(
            &preprocess("par Par"),
            &BTreeMap::new(),
            &HomonymDictionary::defaults(&hi),
            &hi,
            &p,
        )
        .unwrap();
        assert_eq!(out, vec!["पर", "पर"]);
        assert_eq!((ctr, lid.calls(), off.calls()), (0, 0, 0));
    }

    #[test]
    fn gates() {
        let f = FactMocks::new();
        let hi = LanguagePair::hindi();
        let h = HomonymDictionary::defaults(&hi);
        let strict = GameOptions::default();
        let t = evaluate(
            REF,
            "यह fact possibility par based hai",
            &hi,
            &f.providers(),
            &h,
            &strict,
        )
        .unwrap();
        assert_eq!((t.gate, t.q), (Gate::NonRoman, 0.0));
        assert!(t.s_temp.is_none());

        let t = evaluate(REF, "yeh par hai", &hi, &f.providers(), &h, &strict).unwrap();
        assert_eq!((t.gate, t.q, t.ctr), (Gate::NotCodeMixed, 0.0, 0));
        assert!(t.s_en.is_none());

        let t = evaluate(REF, "", &hi, &f.providers(), &h, &strict).unwrap();
        assert_eq!(t.gate, Gate::NotCodeMixed);
    }

    #[test]
    fn lenient_scores_monolingual_candidates() {
        let hi = LanguagePair::hindi();
        let lenient = GameOptions {
            gate: GateMode::Lenient,
            ..Default::default()
        };
        let f2 = FactMocks {
            translator: MockTranslator::new(Fallback::Error).sentence(
                "hi",
                "en",
                "यह तथ्य संभावना पर आधारित है",
                "This fact is based on possibility.",
            ),
            ..FactMocks::new()
        };
        let t = evaluate(
            REF,
            "yeh tathya sambhavna par adharit hai",
            &hi,
            &f2.providers(),
            &HomonymDictionary::defaults(&hi),
            &lenient,
        )
        .unwrap();
        assert_eq!(t.ctr, 0);
        assert_eq!(t.gate, Gate::Ok);
        assert!((t.q - 1.0).abs() < 1e-9);
    }

    #[test]
    fn failure_keeps_partial_trace() {
        let f = FactMocks {
            translator: MockTranslator::new(Fallback::Error).sentence(
                "hi",
                "en",
                "यह फैक्ट पॉसिबिलिटी पर बेस्ड है",
                "This fact is based on possibility.",
            ),
            ..FactMocks::new()
        };
        let hi = LanguagePair::hindi();
        let err = evaluate(
            REF,
            CAND,
            &hi,
            &f.providers(),
            &HomonymDictionary::defaults(&hi),
            &GameOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.stage, Stage::ReplaceWords);
        assert!(err.trace.s_temp.is_some());
        assert!(err.trace.first_translation.is_empty());
    }

    #[test]
    fn first_translation_target() {
        let f = FactMocks::new();
        let hi = LanguagePair::hindi();
        let opts = GameOptions {
            target: SimilarityTarget::FirstTranslation,
            ..Default::default()
        };
        let t = evaluate(REF, CAND, &hi, &f.providers(), &HomonymDictionary::defaults(&hi), &opts).unwrap();
        assert!(t.q < 0.5);
    }

    #[test]
    fn bundled_dictionaries() {
        assert_eq!(
            HomonymDictionary::defaults(&LanguagePair::hindi()).get("par"),
            Some("पर")
        );
        assert_eq!(
            HomonymDictionary::defaults(&LanguagePair::spanish()).get("soy"),
            Some("am")
        );
        assert!(HomonymDictionary::defaults(&LanguagePair::french()).entries.is_empty());
        assert!(HomonymDictionary::from_json(r#"{"pair": "en-hi", "entries": {"two words": "x"}}"#).is_err());
    }

    #[test]
    fn display_rounding() {
        assert_eq!(display_score(0.97391), 97.39);
        assert_eq!(display_score(1.0), 100.0);
        assert_eq!(display_score(-0.123456), -12.35);
    }
}
