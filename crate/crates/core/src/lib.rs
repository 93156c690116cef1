//! Controlled generation and gold-standard-agnostic evaluation of code-mixed
//! sentences.
//!
//! This crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! toolkit: text normalization, frequency scoring, replacement planning, the
//! Hindi verb-inflection rule engine, the GAME evaluation pipeline and the BLEU
//! baseline. External services (LLMs, translation, transliteration, language
//! identification, PoS tagging, sentence embeddings) are reached only through
//! the traits in [`providers`]; the `codemix` crate supplies HTTP backends, a
//! record/replay cache, file formats and the command-line interface.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cg;
pub mod game;
pub mod inflect_hi;
pub mod lang;
pub mod metrics;
pub mod providers;
pub mod text;
pub mod vocab;

pub use cg::{Cmd, CodeMixedSentence, ReplacementPlan};
pub use game::{GameOptions, GameTrace, HomonymDictionary};
pub use lang::{LanguagePair, ScriptClass};
pub use providers::{ProviderError, Providers, WordEntry};
pub use text::{preprocess, NormalizedSentence};
pub use vocab::{FrequencyVocab, Score};
