//! English–Hindi verb handling: drop words that should stay Hindi, and add
//! the auxiliary (करता, होने, किया, ...) that turns an English verb root into
//! a Hindi conjunct verb.
//!
//! The suffix rules live in `data/hindi_inflection_rules.json` so they can be
//! patched without touching code; [`RuleTable::from_json`] loads a variant.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cg::{splice, Applied, Edit, RemovalReason, RemovedEntry, ReplacementPlan, Segment};
use crate::providers::{BaseMode, VerbVoice, WordEntry};
use crate::text::{fold, nfc, word_tokens, Anchor};

const BUILTIN: &str = include_str!("../data/hindi_inflection_rules.json");
const NA: &str = "ना";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InflectError {
    #[error("stem `{stem}` of `{base}` is not a prefix of `{word}`")]
    StemMismatch { word: String, base: String, stem: String },
    #[error("no rule handles suffix `{0}`")]
    UnhandledSuffix(String),
    #[error("empty verb form")]
    Empty,
    #[error("bad rule table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixAnalysis {
    pub stem: String,
    pub suffix: String,
    /// The lemma ends in ना, so the verb takes an auxiliary.
    pub base_ends_na: bool,
}

/// Splits `matrix_word` into the lemma's stem and the inflection suffix.
pub fn analyze_suffix(matrix_word: &str, base_matrix: &str) -> Result<SuffixAnalysis, InflectError> {
    let (word, base) = (nfc(matrix_word.trim()), nfc(base_matrix.trim()));
    if word.is_empty() || base.is_empty() {
        return Err(InflectError::Empty);
    }
    let Some(stem) = base.strip_suffix(NA) else {
        return Ok(SuffixAnalysis {
            stem: base,
            suffix: String::new(),
            base_ends_na: false,
        });
    };
    match word.strip_prefix(stem) {
        Some(suffix) => Ok(SuffixAnalysis {
            suffix: suffix.into(),
            stem: stem.into(),
            base_ends_na: true,
        }),
        None => Err(InflectError::StemMismatch {
            stem: stem.into(),
            word,
            base,
        }),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Condition {
    #[serde(default)]
    voice: Option<VerbVoice>,
    #[serde(default)]
    next_word: Option<Vec<String>>,
    #[serde(default)]
    suffix: Option<Vec<String>>,
    #[serde(default)]
    sentence_end: Option<bool>,
}

impl Condition {
    fn is_unconditional(&self) -> bool {
        *self == Condition::default()
    }

    fn holds(&self, suffix: &str, ctx: &Context<'_>) -> bool {
        let voice_ok = self.voice.is_none_or(|v| ctx.voice == Some(v));
        let next_ok = self
            .next_word
            .as_ref()
            .is_none_or(|list| ctx.next_word.is_some_and(|n| list.iter().any(|w| *w == n)));
        let suffix_ok = self.suffix.as_ref().is_none_or(|list| list.iter().any(|s| s == suffix));
        let end_ok = self.sentence_end.is_none_or(|e| e == ctx.sentence_end);
        voice_ok && next_ok && suffix_ok && end_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Case {
    #[serde(default)]
    when: Condition,
    /// The auxiliary; `{suffix}` is replaced by the verb's suffix.
    add: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Rule {
    id: u32,
    suffixes: Vec<String>,
    cases: Vec<Case>,
}

/// Where the verb sits in the Hindi sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context<'a> {
    pub voice: Option<VerbVoice>,
    pub next_word: Option<&'a str>,
    pub sentence_end: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inflection {
    pub added_word: String,
    pub rule: u32,
    /// The suffix is listed under more than one rule; the first one won.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleTable {
    version: u32,
    sentence_end_words: Vec<String>,
    stopwords: Vec<String>,
    optional_words: Vec<String>,
    rules: Vec<Rule>,
}

impl RuleTable {
    pub fn builtin() -> RuleTable {
        RuleTable::from_json(BUILTIN).expect("bundled rule table is valid")
    }

    /// Parses and checks a rule table. Every rule must end with an
    /// unconditional case so that each listed suffix always has an outcome.
    pub fn from_json(json: &str) -> Result<RuleTable, InflectError> {
        let mut table: RuleTable = serde_json::from_str(json).map_err(|e| InflectError::Table(e.to_string()))?;
        for rule in &mut table.rules {
            if !rule.cases.last().is_some_and(|c| c.when.is_unconditional()) {
                return Err(InflectError::Table(format!("rule {} has no fallback case", rule.id)));
            }
            rule.suffixes.iter_mut().for_each(|s| *s = nfc(s));
            for case in &mut rule.cases {
                case.add = nfc(&case.add);
                for list in [&mut case.when.next_word, &mut case.when.suffix].into_iter().flatten() {
                    list.iter_mut().for_each(|s| *s = nfc(s));
                }
            }
        }
        table.sentence_end_words.iter_mut().for_each(|s| *s = nfc(s));
        table.stopwords.iter_mut().for_each(|s| *s = fold(s));
        table.optional_words.iter_mut().for_each(|s| *s = fold(s));
        Ok(table)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Every suffix some rule handles, in rule order.
    pub fn suffixes(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().flat_map(|r| r.suffixes.iter().map(String::as_str))
    }

    /// Words the conditions look at, for exhaustive testing.
    pub fn trigger_words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self
            .rules
            .iter()
            .flat_map(|r| &r.cases)
            .filter_map(|c| c.when.next_word.as_ref())
            .flatten()
            .chain(&self.sentence_end_words)
            .map(String::as_str)
            .collect();
        words.sort_unstable();
        words.dedup();
        words
    }

    pub fn is_sentence_end_word(&self, word: &str) -> bool {
        self.sentence_end_words.iter().any(|w| w == word)
    }

    /// The auxiliary to place after the English root. The first rule listing
    /// the suffix decides.
    pub fn inflect(&self, analysis: &SuffixAnalysis, ctx: &Context<'_>) -> Result<Inflection, InflectError> {
        if !analysis.base_ends_na {
            return Ok(Inflection {
                added_word: String::new(),
                rule: 0,
                ambiguous: false,
            });
        }
        let suffix = nfc(&analysis.suffix);
        let mut matching = self.rules.iter().filter(|r| r.suffixes.contains(&suffix));
        let rule = matching
            .next()
            .ok_or_else(|| InflectError::UnhandledSuffix(suffix.clone()))?;
        let ambiguous = matching.next().is_some();
        let case = rule
            .cases
            .iter()
            .find(|c| c.when.holds(&suffix, ctx))
            .ok_or_else(|| InflectError::Table(format!("rule {} has no fallback case", rule.id)))?;
        Ok(Inflection {
            added_word: case.add.replace("{suffix}", &suffix),
            rule: rule.id,
            ambiguous,
        })
    }

    /// Removes function words, entries with PoS tags the Hindi prompt did
    /// not ask for and, optionally, verbs bilingual speakers keep in Hindi.
    pub fn clean_entries(
        &self,
        entries: Vec<WordEntry>,
        drop_optional: bool,
        removed: &mut Vec<RemovedEntry>,
    ) -> Vec<WordEntry> {
        let allowed = crate::cg::replaceable_classes(BaseMode::HindiSpecific);
        entries
            .into_iter()
            .filter(|e| {
                let eng = fold(e.eng.trim());
                let reason = if self.stopwords.contains(&eng) {
                    Some(RemovalReason::Stopword)
                } else if !allowed.contains(&e.pos_class()) {
                    Some(RemovalReason::PosTag)
                } else if drop_optional && self.optional_words.contains(&eng) {
                    Some(RemovalReason::Optional)
                } else {
                    None
                };
                if let Some(reason) = reason {
                    removed.push(RemovedEntry {
                        eng: e.eng.clone(),
                        pos_tag: e.pos_tag.clone(),
                        reason,
                    });
                }
                reason.is_none()
            })
            .collect()
    }
}

/// [`RuleTable::inflect`] with the bundled table.
pub fn added_word(
    analysis: &SuffixAnalysis,
    voice: Option<VerbVoice>,
    next_word: Option<&str>,
    at_sentence_end: bool,
) -> Result<String, InflectError> {
    let ctx = Context {
        voice,
        next_word,
        sentence_end: at_sentence_end,
    };
    RuleTable::builtin().inflect(analysis, &ctx).map(|i| i.added_word)
}

/// [`RuleTable::clean_entries`] with the bundled table.
pub fn clean_entries(entries: Vec<WordEntry>, drop_optional: bool, removed: &mut Vec<RemovedEntry>) -> Vec<WordEntry> {
    RuleTable::builtin().clean_entries(entries, drop_optional, removed)
}

/// The word after the anchored phrase and whether the phrase ends the
/// sentence (last token, followed by a connector, or carrying a danda).
fn context_of(sentence: &str, anchor: Anchor, rules: &RuleTable) -> (Option<String>, bool) {
    let tokens = word_tokens(sentence);
    let last = anchor.first_token + anchor.token_count - 1;
    let danda_attached = tokens.get(last).is_some_and(|t| t.trailing(sentence).contains('।'));
    let next = tokens.get(last + 1).map(|t| {
        let core = t.core(sentence);
        if core.is_empty() {
            nfc(t.text)
        } else {
            fold(core)
        }
    });
    let end = danda_attached || next.as_deref().is_none_or(|w| rules.is_sentence_end_word(w));
    (next, end)
}

fn verb_edit(
    entry: &WordEntry,
    anchor: Option<Anchor>,
    sentence: &str,
    rules: &RuleTable,
    notes: &mut Vec<String>,
) -> Vec<Segment> {
    let root = Segment {
        text: entry.base_eng.clone(),
        inserted: true,
    };
    let (Some(base), Some(anchor)) = (entry.base_matrix.as_deref(), anchor) else {
        return vec![root];
    };
    let analysis = match analyze_suffix(&entry.matrix_word, base) {
        Ok(a) => a,
        Err(e) => {
            log::warn!("`{}`: {e}; replacing without an auxiliary", entry.eng);
            notes.push(format!("{}: {e}", entry.eng));
            return vec![root];
        }
    };
    let (next, sentence_end) = context_of(sentence, anchor, rules);
    let ctx = Context {
        voice: entry.verb_voice,
        next_word: next.as_deref(),
        sentence_end,
    };
    match rules.inflect(&analysis, &ctx) {
        Ok(inflection) => {
            if inflection.ambiguous {
                notes.push(format!(
                    "{}: suffix `{}` is listed under several rules; applied rule {}",
                    entry.eng, analysis.suffix, inflection.rule
                ));
            }
            if inflection.added_word.is_empty() {
                vec![root]
            } else {
                vec![
                    root,
                    Segment {
                        text: format!(" {}", inflection.added_word),
                        inserted: false,
                    },
                ]
            }
        }
        Err(e) => {
            log::warn!("`{}`: {e}; replacing without an auxiliary", entry.eng);
            notes.push(format!("{}: {e}", entry.eng));
            vec![root]
        }
    }
}

/// Like [`crate::cg::apply_plan_segments`], but replaced verbs become their
/// English root followed by the auxiliary the suffix rules pick.
pub fn apply_hindi_inflection_segments(matrix_sentence: &str, plan: &ReplacementPlan, rules: &RuleTable) -> Applied {
    let mut applied = Applied::default();
    let edits = plan
        .replaced()
        .map(|s| {
            let replacement = if s.entry.is_inflectable_verb() {
                verb_edit(&s.entry, s.anchor, matrix_sentence, rules, &mut applied.notes)
            } else {
                vec![Segment {
                    text: s.entry.eng.clone(),
                    inserted: true,
                }]
            };
            Edit {
                anchor: s.anchor,
                phrase: s.entry.matrix_word.clone(),
                replacement,
            }
        })
        .collect();
    splice(matrix_sentence, edits, &mut applied);
    applied
}

pub fn apply_hindi_inflection(matrix_sentence: &str, plan: &ReplacementPlan, rules: &RuleTable) -> String {
    apply_hindi_inflection_segments(matrix_sentence, plan, rules).text()
}
