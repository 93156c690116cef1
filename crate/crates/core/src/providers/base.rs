//! Base creation: one LLM call that translates the English sentence into the
//! matrix language and lists the replaceable words with their switch points
//! and romanized spellings.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Llm, ProviderError, VerbVoice, WordEntry};
use crate::lang::LanguagePair;
use crate::text::{bind_anchors, fold};

/// LLM calls are pinned to greedy decoding.
pub const LLM_TEMPERATURE: f64 = 0.0;

/// Number of attempts for a response that is empty or violates the schema.
const ATTEMPTS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    /// 0 for the first try, 1 for the retry. Part of the cache key so a replay
    /// reproduces the same sequence of responses.
    pub attempt: u32,
    /// Language pair the call is made for, used to route to a backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMode {
    Generic,
    /// Adds verbs with their Hindi lemma and voice. English-Hindi only.
    HindiSpecific,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseCreation {
    pub matrix_sentence: String,
    pub entries: Vec<WordEntry>,
}

impl BaseCreation {
    pub fn unanchored(&self) -> impl Iterator<Item = &WordEntry> {
        self.entries.iter().filter(|e| !e.anchored)
    }
}

fn capitalized(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Renders the single-JSON base-creation prompt for `english`.
pub fn render_prompt(english: &str, pair: &LanguagePair, mode: BaseMode) -> String {
    let lang = pair.matrix_name();
    let cap = capitalized(lang);
    match mode {
        BaseMode::Generic => {
            let spelling = if pair.is_roman() {
                format!("Also, for each {lang} word give three spellings that can be found in social media or twitter.")
            } else {
                format!("Also, for each {lang} word, transliterate it into three different spellings that can be seen in twitter.")
            };
            format!(
                "For the given English sentence, do the following:\n\
                 create this RFC8259 compliant json dictionary in the format \
                 {{\"{lang}_trans\": <{lang} translation>,\"Word_Dict\":[{{\"eng\":<eng word>,\
                 \"base_eng\":<base form of the english word>,\"eng_pos_tag\":<English PoS Tag>,\
                 \"{lang}\":<{lang} word>,\"roman_{lang}\": <three different spellings of roman transliteration for {lang} word>}}]}}\n\
                 by doing PoS tagging of english sentence and then only choosing the words which are either \
                 Noun (NN), Adjective (JJ), Adverb (RB), CC, or Interjection (UH).\n\
                 And then translating the english sentence into {cap} and then looking for the corresponding \
                 meaning of these english words in that. {spelling}\n\
                 The output should be RFC8259 compliant json dictionary without any additional words or description\n\n\
                 english sentence : {english}"
            )
        }
        BaseMode::HindiSpecific => format!(
            "For the given English sentence, do the following:\n\
             create this RFC8259 compliant json dictionary in the format \
             {{\"{lang}_trans\": <{lang} translation>,\"Word_Dict\":[{{\"eng\":<eng word>,\
             \"base_eng\":<base form of the english word>,\"eng_pos_tag\":<English PoS Tag>,\
             \"{lang}\":<{lang} word>,\"base_hin\":<base form of the {lang} word>,\
             \"hin_verb_type\":<ACTIVE or PASSIVE or NA>,\
             \"roman_{lang}\": <three different spellings of roman transliteration for {lang} word>}}]}}\n\
             by doing PoS tagging of english sentence and then only choosing the words which are either \
             Verb, Noun (NN), Adjective (JJ), Adverb (RB), CC, or Interjection (UH).\n\n\
             And then translating the english sentence into {cap} and then looking for the corresponding \
             meaning of these english words in that.\n\n\
             Also, for the english words that are verbs, check in the {lang} sentence, if the respective \
             {lang} verb is active or passive, or if it isn't verb then 'NA'\n\n\
             The output should be RFC8259 compliant json dictionary without any additional words or description\n\n\
             english sentence : {english}"
        ),
    }
}

/// The step-by-step alternate prompt. Its output interleaves reasoning with
/// a final JSON list and has no parser here.
pub fn render_prompt_a(english: &str, pair: &LanguagePair) -> String {
    let m = capitalized(pair.matrix_name());
    let step5 = if pair.is_roman() {
        format!("for each {m} word in {m}_eng_dict give three spellings that can be found in social media or twitter and add that in the dictionary.")
    } else {
        format!("Transliterate each {m} word in {m}_eng_dict in Roman in three ways or spellings and add that in the dictionary.")
    };
    format!(
        "For the given English sentence, do the following:\n\
         1. POS Tagging of the sentence\n\
         2. For the words which are either Noun (NN), Adjective (JJ), Adverb (RB), CC, or Interjection (UH), create a dictionary Imp_Eng\n\
         3. Translate the original English sentence into {m}\n\
         4. From Imp_Eng, look for the corresponding meaning in {m} and look them up in the {m} sentence. Create a dictionary {m}_eng_dict\n\
         5. {step5}\n\
         6. Format above as RFC8259 compliant json dictionary, in the format \
         [{{\"eng\": <eng_word>, \"pos_tag\": <PoS Tag>, \"{m}\": <{m}_word>, \"roman_{m}\": <transliterations>}}]\n\n\
         English sentence : {english}"
    )
}

fn schema(msg: impl Into<String>) -> ProviderError {
    ProviderError::Schema(msg.into())
}

fn string_field(obj: &Map<String, Value>, key: &str, at: &str) -> Result<String, ProviderError> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        Some(Value::String(_)) => Err(schema(format!("{at}: field `{key}` is empty"))),
        Some(_) => Err(schema(format!("{at}: field `{key}` is not a string"))),
        None => Err(schema(format!("{at}: missing field `{key}`"))),
    }
}

/// Strictly parses a base-creation response. The whole response must be the
/// JSON object; nothing is repaired except lowercasing the spellings.
pub fn parse_base_creation(raw: &str, pair: &LanguagePair, mode: BaseMode) -> Result<BaseCreation, ProviderError> {
    if raw.trim().is_empty() {
        return Err(ProviderError::EmptyResponse);
    }
    let value: Value = serde_json::from_str(raw.trim()).map_err(|e| schema(format!("not JSON: {e}")))?;
    let root = value.as_object().ok_or_else(|| schema("top level is not an object"))?;
    let lang = pair.matrix_name();
    let sentence_key = format!("{lang}_trans");
    let roman_key = format!("roman_{lang}");
    let matrix_sentence = string_field(root, &sentence_key, "root")?;
    let items = match root.get("Word_Dict") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(schema("`Word_Dict` is not an array")),
        None => return Err(schema("missing field `Word_Dict`")),
    };

    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let at = format!("Word_Dict[{i}]");
        let obj = item
            .as_object()
            .ok_or_else(|| schema(format!("{at} is not an object")))?;
        let variants = match obj.get(&roman_key) {
            Some(Value::Array(vs)) => vs,
            Some(_) => return Err(schema(format!("{at}: `{roman_key}` is not an array"))),
            None => return Err(schema(format!("{at}: missing field `{roman_key}`"))),
        };
        if variants.len() != 3 {
            return Err(schema(format!(
                "{at}: `{roman_key}` has {} spellings, expected 3",
                variants.len()
            )));
        }
        let mut roman: [String; 3] = Default::default();
        for (slot, v) in roman.iter_mut().zip(variants) {
            match v.as_str().map(str::trim) {
                Some(s) if !s.is_empty() => *slot = fold(s),
                _ => {
                    return Err(schema(format!(
                        "{at}: `{roman_key}` holds an empty or non-string spelling"
                    )))
                }
            }
        }
        let (base_matrix, verb_voice) = match mode {
            BaseMode::Generic => (None, None),
            BaseMode::HindiSpecific => {
                let base = string_field(obj, "base_hin", &at)?;
                let voice = match string_field(obj, "hin_verb_type", &at)?.to_ascii_uppercase().as_str() {
                    "ACTIVE" => VerbVoice::Active,
                    "PASSIVE" => VerbVoice::Passive,
                    "NA" => VerbVoice::NotApplicable,
                    other => return Err(schema(format!("{at}: `hin_verb_type` is `{other}`"))),
                };
                (Some(base), Some(voice))
            }
        };
        entries.push(WordEntry {
            eng: string_field(obj, "eng", &at)?,
            base_eng: string_field(obj, "base_eng", &at)?,
            pos_tag: string_field(obj, "eng_pos_tag", &at)?,
            matrix_word: string_field(obj, lang, &at)?,
            roman_variants: roman,
            base_matrix,
            verb_voice,
            anchored: false,
        });
    }

    let words: Vec<&str> = entries.iter().map(|e| e.matrix_word.as_str()).collect();
    let anchors = bind_anchors(&matrix_sentence, &words);
    for (entry, anchor) in entries.iter_mut().zip(anchors) {
        entry.anchored = anchor.is_some();
        if !entry.anchored {
            log::warn!(
                "`{}` (for `{}`) does not occur in `{}`",
                entry.matrix_word,
                entry.eng,
                matrix_sentence
            );
        }
    }
    Ok(BaseCreation {
        matrix_sentence,
        entries,
    })
}

/// Issues the base-creation prompt and parses the reply, retrying once on
/// an empty or non-conforming response.
pub fn base_create(
    llm: &dyn Llm,
    english: &str,
    pair: &LanguagePair,
    mode: BaseMode,
) -> Result<BaseCreation, ProviderError> {
    if english.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("empty English sentence".into()));
    }
    if mode == BaseMode::HindiSpecific && pair.matrix() != "hi" {
        return Err(ProviderError::InvalidRequest(format!(
            "Hindi-specific base creation requested for {pair}"
        )));
    }
    let prompt = render_prompt(english, pair, mode);
    let mut last = ProviderError::EmptyResponse;
    for attempt in 0..ATTEMPTS {
        let request = CompletionRequest {
            prompt: prompt.clone(),
            temperature: LLM_TEMPERATURE,
            attempt,
            pair: Some(pair.code()),
        };
        let reply = llm.complete(&request)?;
        match parse_base_creation(&reply, pair, mode) {
            Ok(base) => return Ok(base),
            Err(e @ (ProviderError::Schema(_) | ProviderError::EmptyResponse)) => {
                log::warn!("base creation attempt {attempt} rejected: {e}");
                last = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}
