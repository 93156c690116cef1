//! Canonical request and response shapes for every provider call.
//!
//! The record/replay cache keys on these and the generic JSON backend sends
//! them as-is, so a sidecar service only has to understand this module.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, Direction, TaggedToken, WordLanguage};
use crate::lang::LanguagePair;

/// The capability a request is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Llm,
    Translate,
    TranslatePos,
    Transliterate,
    Lid,
    Pos,
    Embed,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::Llm,
        Task::Translate,
        Task::TranslatePos,
        Task::Transliterate,
        Task::Lid,
        Task::Pos,
        Task::Embed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Llm => "llm",
            Task::Translate => "translate",
            Task::TranslatePos => "translate_pos",
            Task::Transliterate => "transliterate",
            Task::Lid => "lid",
            Task::Pos => "pos",
            Task::Embed => "embed",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ProviderRequest {
    Complete(CompletionRequest),
    Translate {
        text: String,
        src: String,
        dst: String,
    },
    TranslateWordPos {
        word: String,
        pos: String,
        src: String,
        dst: String,
    },
    Transliterate {
        text: String,
        pair: String,
        direction: Direction,
    },
    Identify {
        word: String,
        pair: String,
    },
    Tag {
        sentence: String,
    },
    Embed {
        sentence: String,
    },
}

impl ProviderRequest {
    pub fn task(&self) -> Task {
        match self {
            ProviderRequest::Complete(_) => Task::Llm,
            ProviderRequest::Translate { .. } => Task::Translate,
            ProviderRequest::TranslateWordPos { .. } => Task::TranslatePos,
            ProviderRequest::Transliterate { .. } => Task::Transliterate,
            ProviderRequest::Identify { .. } => Task::Lid,
            ProviderRequest::Tag { .. } => Task::Pos,
            ProviderRequest::Embed { .. } => Task::Embed,
        }
    }

    /// The `en-xx` pair the request belongs to, when it has one.
    pub fn pair(&self) -> Option<String> {
        match self {
            ProviderRequest::Complete(r) => r.pair.clone(),
            ProviderRequest::Translate { src, dst, .. } | ProviderRequest::TranslateWordPos { src, dst, .. } => {
                let other = if src == crate::lang::ENGLISH { dst } else { src };
                Some(alloc::format!("{}-{other}", crate::lang::ENGLISH))
            }
            ProviderRequest::Transliterate { pair, .. } | ProviderRequest::Identify { pair, .. } => Some(pair.clone()),
            ProviderRequest::Tag { .. } | ProviderRequest::Embed { .. } => None,
        }
    }

    pub fn transliterate(text: &str, pair: &LanguagePair, direction: Direction) -> Self {
        ProviderRequest::Transliterate {
            text: text.into(),
            pair: pair.code(),
            direction,
        }
    }

    pub fn identify(word: &str, pair: &LanguagePair) -> Self {
        ProviderRequest::Identify {
            word: word.into(),
            pair: pair.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub label: WordLanguage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagsResponse {
    pub tokens: Vec<TaggedToken>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub values: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_json_shape() {
        let req = ProviderRequest::Translate {
            text: "bonjour".into(),
            src: "fr".into(),
            dst: "en".into(),
        };
        let json = serde_json::to_string(&req).unwrap();
        assert_eq!(json, r#"{"op":"translate","text":"bonjour","src":"fr","dst":"en"}"#);
        assert_eq!(req.pair().as_deref(), Some("en-fr"));
        let back: ProviderRequest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, req);
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
        }
    }
}
