//! Normalization, tokenization and script classification shared by every
//! pipeline stage.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};
use unicode_script::{Script, UnicodeScript};

/// A lowercase, punctuation-free, whitespace-collapsed NFC sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NormalizedSentence {
    pub text: String,
    pub tokens: Vec<String>,
}

impl NormalizedSentence {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }
}

/// Unicode punctuation (`P*`) and symbol (`S*`) categories.
pub fn is_punctuation(c: char) -> bool {
    matches!(
        c.general_category_group(),
        GeneralCategoryGroup::Punctuation | GeneralCategoryGroup::Symbol
    )
}

/// Lowercases, strips punctuation and symbols, collapses whitespace and
/// applies NFC.
pub fn preprocess(raw: &str) -> NormalizedSentence {
    let composed: String = raw.nfc().collect();
    let mut cleaned = String::with_capacity(composed.len());
    for c in composed.chars().flat_map(char::to_lowercase) {
        if !is_punctuation(c) {
            cleaned.push(c);
        }
    }
    // Removing a symbol can bring a base character next to a combining mark.
    let recomposed: String = cleaned.nfc().collect();
    let tokens: Vec<String> = recomposed.split_whitespace().map(String::from).collect();
    NormalizedSentence {
        text: tokens.join(" "),
        tokens,
    }
}

/// Whitespace tokenization of a normalized sentence.
pub fn tokenize(s: &NormalizedSentence) -> Vec<&str> {
    s.text.split_whitespace().collect()
}

/// True when the sentence holds anything besides Latin-script letters, ASCII
/// digits and whitespace. Combining marks are accepted when they follow a
/// Latin letter, so decomposed accents stay Roman.
pub fn has_non_roman(s: &NormalizedSentence) -> bool {
    contains_non_roman(&s.text)
}

pub(crate) fn contains_non_roman(text: &str) -> bool {
    let mut after_latin = false;
    for c in text.chars() {
        let ok = if c.is_whitespace() || c.is_ascii_digit() {
            after_latin = false;
            true
        } else if c.is_alphabetic() && c.script() == Script::Latin {
            after_latin = true;
            true
        } else {
            after_latin && c.general_category_group() == GeneralCategoryGroup::Mark
        };
        if !ok {
            return true;
        }
    }
    false
}

/// Canonical composition only.
pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// NFC + lowercase form used when matching words across providers.
pub fn fold(word: &str) -> String {
    word.nfc().flat_map(char::to_lowercase).nfc().collect()
}

/// A whitespace-delimited token with its punctuation-trimmed core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordToken<'a> {
    pub text: &'a str,
    /// Byte offset of the token in the source string.
    pub start: usize,
    /// Byte range of the core (token minus leading/trailing punctuation).
    pub core_start: usize,
    pub core_end: usize,
}

impl<'a> WordToken<'a> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }

    pub fn core<'s>(&self, source: &'s str) -> &'s str {
        &source[self.core_start..self.core_end]
    }

    /// Punctuation after the core, e.g. a trailing danda.
    pub fn trailing<'s>(&self, source: &'s str) -> &'s str {
        &source[self.core_end..self.end()]
    }
}

pub fn word_tokens(source: &str) -> Vec<WordToken<'_>> {
    let mut out = Vec::new();
    let mut iter = source.char_indices().peekable();
    while let Some(&(i, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        let start = i;
        let mut end = i;
        while let Some(&(j, c)) = iter.peek() {
            if c.is_whitespace() {
                break;
            }
            end = j + c.len_utf8();
            iter.next();
        }
        let text = &source[start..end];
        let lead = text.len() - text.trim_start_matches(is_punctuation).len();
        let core = text.trim_start_matches(is_punctuation).trim_end_matches(is_punctuation);
        out.push(WordToken {
            text,
            start,
            core_start: start + lead,
            core_end: start + lead + core.len(),
        });
    }
    out
}

/// Where a (possibly multi-word) phrase sits in a sentence, in token units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub first_token: usize,
    pub token_count: usize,
    /// Which occurrence of the phrase (0-based) this anchor binds.
    pub occurrence: usize,
}

fn phrase_cores(phrase: &str) -> Vec<String> {
    word_tokens(phrase)
        .iter()
        .map(|t| fold(t.core(phrase)))
        .filter(|c| !c.is_empty())
        .collect()
}

/// Start indices of every occurrence of `phrase`, matching whole token cores
/// case-insensitively.
pub fn find_occurrences(tokens: &[WordToken<'_>], source: &str, phrase: &str) -> Vec<usize> {
    let wanted = phrase_cores(phrase);
    if wanted.is_empty() || wanted.len() > tokens.len() {
        return Vec::new();
    }
    let folded: Vec<String> = tokens.iter().map(|t| fold(t.core(source))).collect();
    (0..=folded.len() - wanted.len())
        .filter(|&i| folded[i..i + wanted.len()] == wanted[..])
        .collect()
}

/// Checks that `anchor` still designates `phrase` in `source`.
pub fn anchor_matches(tokens: &[WordToken<'_>], source: &str, anchor: &Anchor, phrase: &str) -> bool {
    let wanted = phrase_cores(phrase);
    if wanted.len() != anchor.token_count || anchor.first_token + anchor.token_count > tokens.len() {
        return false;
    }
    tokens[anchor.first_token..anchor.first_token + anchor.token_count]
        .iter()
        .zip(&wanted)
        .all(|(t, w)| fold(t.core(source)) == *w)
}

/// Binds each phrase to an occurrence in `sentence`, in order. The k-th
/// phrase naming a repeated word takes the first occurrence no earlier
/// phrase has claimed; phrases with nothing left to bind get `None`.
pub fn bind_anchors<S: AsRef<str>>(sentence: &str, phrases: &[S]) -> Vec<Option<Anchor>> {
    let tokens = word_tokens(sentence);
    let mut bound = alloc::vec![false; tokens.len()];
    phrases
        .iter()
        .map(|phrase| {
            let phrase = phrase.as_ref();
            let len = phrase_cores(phrase).len();
            let occurrences = find_occurrences(&tokens, sentence, phrase);
            let (occurrence, &first) = occurrences
                .iter()
                .enumerate()
                .find(|(_, &start)| !bound[start..start + len].iter().any(|&b| b))?;
            bound[first..first + len].iter_mut().for_each(|b| *b = true);
            Some(Anchor {
                first_token: first,
                token_count: len,
                occurrence,
            })
        })
        .collect()
}
