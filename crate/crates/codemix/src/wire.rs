//! Core provider traits on top of a [`Transport`], and the reverse: a
//! transport answered in-process by core provider implementations.

use codemix_core::providers::wire::{EmbeddingResponse, LabelResponse, ProviderRequest, TagsResponse, TextResponse};
use codemix_core::providers::{
    CompletionRequest, Direction, Embedder, EmbeddingVector, LanguageIdentifier, Llm, PosTagger, Providers,
    TaggedToken, Translator, Transliterator, WordLanguage,
};
use codemix_core::{LanguagePair, ProviderError};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::transport::Transport;

fn decode<T: DeserializeOwned>(value: Value) -> Result<T, ProviderError> {
    serde_json::from_value(value).map_err(|e| ProviderError::Schema(e.to_string()))
}

fn encode<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("response types serialize")
}

/// Every capability served by one transport (usually a router).
pub struct WireProviders<T> {
    transport: T,
}

impl<T: Transport> WireProviders<T> {
    pub fn new(transport: T) -> Self {
        WireProviders { transport }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn providers(&self) -> Providers<'_> {
        Providers {
            llm: self,
            translator: self,
            transliterator: self,
            lid: self,
            tagger: self,
            embedder: self,
        }
    }

    fn text(&self, request: ProviderRequest) -> Result<String, ProviderError> {
        decode::<TextResponse>(self.transport.call(&request)?).map(|r| r.text)
    }
}

impl<T: Transport> Llm for WireProviders<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.text(ProviderRequest::Complete(request.clone()))
    }
}

impl<T: Transport> Translator for WireProviders<T> {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String, ProviderError> {
        self.text(ProviderRequest::Translate {
            text: text.into(),
            src: src.into(),
            dst: dst.into(),
        })
    }

    fn translate_word_pos(&self, word: &str, pos: &str, src: &str, dst: &str) -> Result<String, ProviderError> {
        self.text(ProviderRequest::TranslateWordPos {
            word: word.into(),
            pos: pos.into(),
            src: src.into(),
            dst: dst.into(),
        })
    }
}

impl<T: Transport> Transliterator for WireProviders<T> {
    fn transliterate(&self, text: &str, pair: &LanguagePair, direction: Direction) -> Result<String, ProviderError> {
        self.text(ProviderRequest::transliterate(text, pair, direction))
    }
}

impl<T: Transport> LanguageIdentifier for WireProviders<T> {
    fn identify(&self, word: &str, pair: &LanguagePair) -> Result<WordLanguage, ProviderError> {
        let value = self.transport.call(&ProviderRequest::identify(word, pair))?;
        decode::<LabelResponse>(value).map(|r| r.label)
    }
}

impl<T: Transport> PosTagger for WireProviders<T> {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedToken>, ProviderError> {
        let value = self.transport.call(&ProviderRequest::Tag {
            sentence: sentence.into(),
        })?;
        decode::<TagsResponse>(value).map(|r| r.tokens)
    }
}

impl<T: Transport> Embedder for WireProviders<T> {
    fn embed(&self, sentence: &str) -> Result<EmbeddingVector, ProviderError> {
        let value = self.transport.call(&ProviderRequest::Embed {
            sentence: sentence.into(),
        })?;
        EmbeddingVector::new(decode::<EmbeddingResponse>(value)?.values)
    }
}

fn parse_pair(code: &str) -> Result<LanguagePair, ProviderError> {
    code.parse()
        .map_err(|e: codemix_core::lang::PairError| ProviderError::InvalidRequest(e.to_string()))
}

/// Answers requests with in-process implementations, e.g. the table mocks.
pub struct Local {
    id: String,
    pub llm: Box<dyn Llm>,
    pub translator: Box<dyn Translator>,
    pub transliterator: Box<dyn Transliterator>,
    pub lid: Box<dyn LanguageIdentifier>,
    pub tagger: Box<dyn PosTagger>,
    pub embedder: Box<dyn Embedder>,
}

impl Local {
    /// Starts with every capability offline.
    pub fn new(id: &str) -> Self {
        use codemix_core::providers::mock::Offline;
        Local {
            id: id.into(),
            llm: Box::new(Offline::new()),
            translator: Box::new(Offline::new()),
            transliterator: Box::new(Offline::new()),
            lid: Box::new(Offline::new()),
            tagger: Box::new(Offline::new()),
            embedder: Box::new(Offline::new()),
        }
    }
}

impl Transport for Local {
    fn id(&self) -> &str {
        &self.id
    }

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        let text = |text: String| Ok(encode(&TextResponse { text }));
        match request {
            ProviderRequest::Complete(r) => text(self.llm.complete(r)?),
            ProviderRequest::Translate { text: t, src, dst } => text(self.translator.translate(t, src, dst)?),
            ProviderRequest::TranslateWordPos { word, pos, src, dst } => {
                text(self.translator.translate_word_pos(word, pos, src, dst)?)
            }
            ProviderRequest::Transliterate {
                text: t,
                pair,
                direction,
            } => text(self.transliterator.transliterate(t, &parse_pair(pair)?, *direction)?),
            ProviderRequest::Identify { word, pair } => Ok(encode(&LabelResponse {
                label: self.lid.identify(word, &parse_pair(pair)?)?,
            })),
            ProviderRequest::Tag { sentence } => Ok(encode(&TagsResponse {
                tokens: self.tagger.tag(sentence)?,
            })),
            ProviderRequest::Embed { sentence } => Ok(encode(&EmbeddingResponse {
                values: self.embedder.embed(sentence)?.values,
            })),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use codemix_core::providers::mock::{Fallback, MockEmbedder, MockLid, MockTranslator};

    #[test]
    fn round_trip_through_local() {
        let mut local = Local::new("mock");
        local.translator = Box::new(MockTranslator::new(Fallback::Error).sentence("fr", "en", "bonjour", "hello"));
        local.lid = Box::new(MockLid::new(["fact"]));
        local.embedder = Box::new(
            MockEmbedder::table_only()
                .vector("a", &[1.0, 0.0])
                .vector("b", &[-2.0, 0.0]),
        );
        let wire = WireProviders::new(local);
        let p = wire.providers();
        assert_eq!(p.translate("bonjour", "fr", "en").unwrap(), "hello");
        assert_eq!(p.lid("fact", &LanguagePair::hindi()).unwrap(), WordLanguage::English);
        assert_eq!(p.lid("yeh", &LanguagePair::hindi()).unwrap(), WordLanguage::Matrix);
        let (a, b) = (p.embed("a").unwrap(), p.embed("b").unwrap());
        assert_eq!(codemix_core::providers::similarity(&a, &b).unwrap(), -1.0);
        assert!(matches!(p.tag("x y"), Err(ProviderError::Offline(_))));
    }
}
