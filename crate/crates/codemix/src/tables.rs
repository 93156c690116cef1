//! Mock backends described by a JSON table file.

use std::collections::BTreeMap;
use std::path::Path;

use codemix_core::providers::mock::{
    Fallback, MockEmbedder, MockLid, MockLlm, MockTagger, MockTranslator, MockTransliterator,
};
use codemix_core::providers::BaseMode;
use codemix_core::LanguagePair;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::wire::Local;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockTables {
    #[serde(default)]
    pub llm: Vec<PromptResponses>,
    #[serde(default)]
    pub base_creations: Vec<BaseCreationFixture>,
    #[serde(default)]
    pub translate: TranslateTable,
    /// `[roman, native]` word pairs.
    #[serde(default)]
    pub transliterate: Vec<(String, String)>,
    /// Words the LID mock labels English; everything else is matrix.
    #[serde(default)]
    pub lid_english: Vec<String>,
    #[serde(default)]
    pub pos: PosTable,
    #[serde(default)]
    pub embed: EmbedTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptResponses {
    pub prompt: String,
    pub responses: Vec<String>,
}

/// An LLM answer keyed by the base-creation prompt it would be asked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseCreationFixture {
    pub english: String,
    pub pair: LanguagePair,
    #[serde(default = "generic")]
    pub mode: BaseMode,
    /// Raw completion text, or a JSON value that is serialized as the text.
    pub response: Value,
}

fn generic() -> BaseMode {
    BaseMode::Generic
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackName {
    #[default]
    Error,
    Identity,
    Tokenwise,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateTable {
    #[serde(default)]
    pub fallback: FallbackName,
    #[serde(default)]
    pub sentences: Vec<SentenceRow>,
    #[serde(default)]
    pub words: Vec<SentenceRow>,
    #[serde(default)]
    pub word_pos: Vec<WordPosRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub src: String,
    pub dst: String,
    pub text: String,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPosRow {
    pub src: String,
    pub dst: String,
    pub word: String,
    pub pos: String,
    pub out: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PosTable {
    #[serde(default)]
    pub default: Option<String>,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbedTable {
    /// Feature-hashing dimension for sentences missing from `vectors`.
    #[serde(default)]
    pub hash_dim: Option<usize>,
    #[serde(default)]
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl MockTables {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn into_local(self, id: &str) -> Local {
        let mut llm = MockLlm::new();
        for p in self.llm {
            llm = llm.with_responses(&p.prompt, p.responses);
        }
        for b in self.base_creations {
            let response = match b.response {
                Value::String(s) => s,
                other => other.to_string(),
            };
            llm = llm.with_base_creation(&b.english, &b.pair, b.mode, &response);
        }
        let fallback = match self.translate.fallback {
            FallbackName::Error => Fallback::Error,
            FallbackName::Identity => Fallback::Identity,
            FallbackName::Tokenwise => Fallback::Tokenwise,
        };
        let mut translator = MockTranslator::new(fallback);
        for r in &self.translate.sentences {
            translator = translator.sentence(&r.src, &r.dst, &r.text, &r.out);
        }
        for r in &self.translate.words {
            translator = translator.word(&r.src, &r.dst, &r.text, &r.out);
        }
        for r in &self.translate.word_pos {
            translator = translator.word_pos(&r.src, &r.dst, &r.word, &r.pos, &r.out);
        }
        let transliterator = self
            .transliterate
            .iter()
            .fold(MockTransliterator::new(), |t, (roman, native)| t.word(roman, native));
        let mut tagger = MockTagger::new(self.pos.default.as_deref());
        for (w, t) in &self.pos.tags {
            tagger = tagger.tag_word(w, t);
        }
        let mut embedder = match self.embed.hash_dim {
            Some(dim) => MockEmbedder::hashed(dim),
            None => MockEmbedder::table_only(),
        };
        for (s, v) in &self.embed.vectors {
            embedder = embedder.vector(s, v);
        }
        let mut local = Local::new(id);
        local.llm = Box::new(llm);
        local.translator = Box::new(translator);
        local.transliterator = Box::new(transliterator);
        local.lid = Box::new(MockLid::new(self.lid_english.iter().map(String::as_str)));
        local.tagger = Box::new(tagger);
        local.embedder = Box::new(embedder);
        local
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::WireProviders;
    use codemix_core::providers::Direction;

    #[test]
    fn tables_drive_every_capability() {
        let tables: MockTables = serde_json::from_str(
            r#"{
                "translate": {"fallback": "tokenwise", "words": [{"src": "fr", "dst": "en", "text": "chat", "out": "cat"}]},
                "transliterate": [["yeh", "यह"]],
                "lid_english": ["Fact"],
                "pos": {"default": "X", "tags": {"fact": "NN"}},
                "embed": {"hash_dim": 8}
            }"#,
        )
        .unwrap();
        let wire = WireProviders::new(tables.into_local("m"));
        let p = wire.providers();
        let hi = LanguagePair::hindi();
        assert_eq!(p.translate("le chat", "fr", "en").unwrap(), "le cat");
        assert_eq!(p.transliterate("yeh", &hi, Direction::ToMatrixScript).unwrap(), "यह");
        assert_eq!(p.transliterate("यह", &hi, Direction::ToRoman).unwrap(), "yeh");
        assert_eq!(
            p.lid("fact", &hi).unwrap(),
            codemix_core::providers::WordLanguage::English
        );
        assert_eq!(p.tag("fact two").unwrap()[1].tag, "X");
        assert_eq!(p.embed("anything").unwrap().dim(), 8);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<MockTables>(r#"{"translations": []}"#).is_err());
    }
}
