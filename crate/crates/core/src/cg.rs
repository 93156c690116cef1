//! Controlled generation: choose which switch points to flip for a given
//! code-mixing degree, splice the English words into the matrix sentence and
//! romanize the result.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::inflect_hi::{self, RuleTable};
use crate::lang::LanguagePair;
use crate::providers::{BaseCreation, BaseMode, Direction, PosClass, ProviderError, Providers, WordEntry};
use crate::text::{anchor_matches, bind_anchors, preprocess, word_tokens, Anchor};
use crate::vocab::{Frequencies, Score, Scoring};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CgError {
    #[error("code-mixing degree {0} is outside [0, 1]")]
    InvalidCmd(f64),
    #[error("empty English sentence")]
    EmptyInput,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Code-mixing degree in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Cmd(f64);

impl Cmd {
    pub const ZERO: Cmd = Cmd(0.0);
    pub const ONE: Cmd = Cmd(1.0);

    pub fn new(value: f64) -> Result<Cmd, CgError> {
        if (0.0..=1.0).contains(&value) {
            // Normalizes -0.0.
            Ok(Cmd(value + 0.0))
        } else {
            Err(CgError::InvalidCmd(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Cmd {
    type Error = CgError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Cmd::new(value)
    }
}

impl From<Cmd> for f64 {
    fn from(c: Cmd) -> f64 {
        c.0
    }
}

impl fmt::Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Cmd {
    type Err = CgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s.trim().parse().map_err(|_| CgError::InvalidCmd(f64::NAN))?;
        Cmd::new(v)
    }
}

/// `floor(cmd · n)`.
pub fn replacement_budget(cmd: Cmd, n: usize) -> usize {
    libm::floor(cmd.0 * n as f64) as usize
}

/// Which end of the score order is switched first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    /// Matrix language sentence, English words inserted: high `s` first and
    /// every infinite score regardless of budget.
    HighFirst,
    /// English sentence, matrix words inserted: low `s` first.
    LowFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub entry: WordEntry,
    pub score: Score,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Frequencies>,
    /// Location of the word being replaced in the sentence being edited.
    pub anchor: Option<Anchor>,
}

impl ScoredEntry {
    fn position(&self) -> usize {
        self.anchor.map_or(usize::MAX, |a| a.first_token)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(flatten)]
    pub scored: ScoredEntry,
    pub replace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementPlan {
    pub priority: Priority,
    /// In priority order; ties go to the leftmost word.
    pub decisions: Vec<Decision>,
    pub budget: usize,
    pub n_replaced: usize,
}

impl ReplacementPlan {
    pub fn empty() -> Self {
        ReplacementPlan {
            priority: Priority::HighFirst,
            decisions: Vec::new(),
            budget: 0,
            n_replaced: 0,
        }
    }

    pub fn replaced(&self) -> impl Iterator<Item = &ScoredEntry> {
        self.decisions.iter().filter(|d| d.replace).map(|d| &d.scored)
    }
}

fn ordered(entries: Vec<ScoredEntry>, priority: Priority) -> Vec<ScoredEntry> {
    let mut entries = entries;
    // Stable: entries at the same position keep their input order.
    entries.sort_by(|a, b| {
        let by_score = match priority {
            Priority::HighFirst => b.score.cmp(&a.score),
            Priority::LowFirst => a.score.cmp(&b.score),
        };
        by_score.then(a.position().cmp(&b.position()))
    });
    entries
}

/// Marks every infinite-score entry, then the highest finite scores until
/// `floor(cmd · n)` entries are marked. Nothing is marked at `cmd = 0`.
pub fn plan_replacements(entries: Vec<ScoredEntry>, cmd: Cmd) -> ReplacementPlan {
    let budget = replacement_budget(cmd, entries.len());
    let mut n_replaced = 0;
    let decisions = ordered(entries, Priority::HighFirst)
        .into_iter()
        .map(|scored| {
            let replace = cmd.0 > 0.0 && (scored.score.is_infinite() || n_replaced < budget);
            n_replaced += usize::from(replace);
            Decision { scored, replace }
        })
        .collect();
    ReplacementPlan {
        priority: Priority::HighFirst,
        decisions,
        budget,
        n_replaced,
    }
}

/// Marks the `floor(cmd · n)` lowest-scoring entries.
pub fn plan_english_matrix(entries: Vec<ScoredEntry>, cmd: Cmd) -> ReplacementPlan {
    let budget = replacement_budget(cmd, entries.len());
    let decisions: Vec<Decision> = ordered(entries, Priority::LowFirst)
        .into_iter()
        .enumerate()
        .map(|(i, scored)| Decision {
            scored,
            replace: i < budget,
        })
        .collect();
    ReplacementPlan {
        priority: Priority::LowFirst,
        n_replaced: budget.min(decisions.len()),
        decisions,
        budget,
    }
}

/// A run of output text, tagged with the language it is written in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub text: String,
    /// Inserted from the other language; passes through romanization as is.
    pub inserted: bool,
}

/// One substitution carried out on a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub first_token: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub word: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Applied {
    pub segments: Vec<Segment>,
    pub replacements: Vec<Replacement>,
    pub skipped: Vec<Skipped>,
    /// Observations worth auditing, such as ambiguous inflection suffixes.
    pub notes: Vec<String>,
}

impl Applied {
    pub fn text(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }
}

/// A planned substitution: the phrase expected at `anchor` and what it
/// becomes.
pub(crate) struct Edit {
    pub anchor: Option<Anchor>,
    pub phrase: String,
    pub replacement: Vec<Segment>,
}

fn push_segment(out: &mut Vec<Segment>, text: &str, inserted: bool) {
    if text.is_empty() {
        return;
    }
    match out.last_mut() {
        Some(last) if last.inserted == inserted => last.text.push_str(text),
        _ => out.push(Segment {
            text: text.into(),
            inserted,
        }),
    }
}

/// Replaces the token cores designated by each edit, leaving punctuation and
/// every other byte of `source` untouched. Edits whose anchor no longer
/// matches, or that overlap an earlier edit, are skipped.
pub(crate) fn splice(source: &str, edits: Vec<Edit>, applied: &mut Applied) {
    let tokens = word_tokens(source);
    let mut valid: Vec<(Anchor, Edit)> = Vec::new();
    for edit in edits {
        let reason = match edit.anchor {
            None => "not found in the sentence",
            Some(a) if a.token_count > 0 && anchor_matches(&tokens, source, &a, &edit.phrase) => {
                valid.push((a, edit));
                continue;
            }
            Some(_) => "anchor does not match the sentence",
        };
        log::warn!("skipping `{}`: {reason}", edit.phrase);
        applied.skipped.push(Skipped {
            word: edit.phrase,
            reason: reason.into(),
        });
    }
    valid.sort_by_key(|(a, _)| a.first_token);

    let mut out = Vec::new();
    let mut cursor = 0;
    let mut next_free_token = 0;
    for (anchor, edit) in valid {
        if anchor.first_token < next_free_token {
            log::warn!("skipping `{}`: overlaps an earlier replacement", edit.phrase);
            applied.skipped.push(Skipped {
                word: edit.phrase,
                reason: "overlaps an earlier replacement".into(),
            });
            continue;
        }
        let last = anchor.first_token + anchor.token_count - 1;
        let (start, end) = (tokens[anchor.first_token].core_start, tokens[last].core_end);
        push_segment(&mut out, &source[cursor..start], false);
        let mut to = String::new();
        for seg in &edit.replacement {
            push_segment(&mut out, &seg.text, seg.inserted);
            to.push_str(&seg.text);
        }
        applied.replacements.push(Replacement {
            first_token: anchor.first_token,
            from: source[start..end].to_string(),
            to,
        });
        cursor = end;
        next_free_token = last + 1;
    }
    push_segment(&mut out, &source[cursor..], false);
    applied.segments = out;
}

/// Substitutes each replaced entry's matrix word, at its anchor, with the
/// English word.
pub fn apply_plan_segments(matrix_sentence: &str, plan: &ReplacementPlan) -> Applied {
    let edits = plan
        .replaced()
        .map(|s| Edit {
            anchor: s.anchor,
            phrase: s.entry.matrix_word.clone(),
            replacement: alloc::vec![Segment {
                text: s.entry.eng.clone(),
                inserted: true,
            }],
        })
        .collect();
    let mut applied = Applied::default();
    splice(matrix_sentence, edits, &mut applied);
    applied
}

pub fn apply_plan(matrix_sentence: &str, plan: &ReplacementPlan) -> String {
    apply_plan_segments(matrix_sentence, plan).text()
}

/// Converts the matrix-script runs of a mixed sentence to Latin script.
/// Inserted English runs are copied verbatim; Roman pairs need no work.
pub fn romanize(segments: &[Segment], pair: &LanguagePair, providers: &Providers<'_>) -> Result<String, ProviderError> {
    let mut out = String::new();
    for seg in segments {
        if seg.inserted || pair.is_roman() {
            out.push_str(&seg.text);
            continue;
        }
        let core = seg.text.trim();
        if core.is_empty() {
            out.push_str(&seg.text);
            continue;
        }
        let lead = seg.text.len() - seg.text.trim_start().len();
        out.push_str(&seg.text[..lead]);
        out.push_str(&providers.transliterate(core, pair, Direction::ToRoman)?);
        out.push_str(&seg.text[lead + core.len()..]);
    }
    Ok(out)
}

/// Why an entry from base creation was not considered for replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    PosTag,
    Stopword,
    Optional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedEntry {
    pub eng: String,
    pub pos_tag: String,
    pub reason: RemovalReason,
}

/// PoS classes eligible for switching.
pub fn replaceable_classes(mode: BaseMode) -> &'static [PosClass] {
    match mode {
        BaseMode::Generic => &[
            PosClass::Noun,
            PosClass::Adjective,
            PosClass::Adverb,
            PosClass::Conjunction,
            PosClass::Interjection,
        ],
        BaseMode::HindiSpecific => &[
            PosClass::Noun,
            PosClass::Adjective,
            PosClass::Adverb,
            PosClass::Conjunction,
            PosClass::Interjection,
            PosClass::Verb,
        ],
    }
}

pub fn filter_pos(entries: Vec<WordEntry>, mode: BaseMode, removed: &mut Vec<RemovedEntry>) -> Vec<WordEntry> {
    let allowed = replaceable_classes(mode);
    entries
        .into_iter()
        .filter(|e| {
            let keep = allowed.contains(&e.pos_class());
            if !keep {
                removed.push(RemovedEntry {
                    eng: e.eng.clone(),
                    pos_tag: e.pos_tag.clone(),
                    reason: RemovalReason::PosTag,
                });
            }
            keep
        })
        .collect()
}

/// Scores entries and anchors each one to the word it replaces in
/// `sentence`, picking the text to anchor with `phrase`.
pub fn score_entries(
    entries: Vec<WordEntry>,
    sentence: &str,
    phrase: impl Fn(&WordEntry) -> &str,
    scoring: &Scoring<'_>,
) -> Vec<ScoredEntry> {
    let anchors = bind_anchors(sentence, &entries.iter().map(&phrase).collect::<Vec<_>>());
    entries
        .into_iter()
        .zip(anchors)
        .map(|(entry, anchor)| ScoredEntry {
            score: scoring.score(&entry),
            frequencies: scoring.frequencies(&entry),
            entry,
            anchor,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenerateOptions<'r> {
    /// Enables Hindi-specific base creation and verb inflection.
    pub hindi_rules: Option<&'r RuleTable>,
    /// Also drop words that bilingual speakers rarely switch ("said", "go", ...).
    pub drop_optional_words: bool,
}

/// Full provenance of one generated sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeMixedSentence {
    pub english: String,
    pub pair: LanguagePair,
    pub cmd: Cmd,
    pub matrix_sentence: String,
    pub plan: ReplacementPlan,
    /// The edited sentence before romanization.
    pub mixed: String,
    pub text: String,
    pub replacements: Vec<Replacement>,
    pub removed: Vec<RemovedEntry>,
    pub skipped: Vec<Skipped>,
    pub notes: Vec<String>,
}

/// Base creation, scoring and cleaning, shared by every CMD value.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub english: String,
    pub pair: LanguagePair,
    pub base: BaseCreation,
    pub scored: Vec<ScoredEntry>,
    pub removed: Vec<RemovedEntry>,
    english_matrix: bool,
}

fn base_mode(options: &GenerateOptions<'_>) -> BaseMode {
    if options.hindi_rules.is_some() {
        BaseMode::HindiSpecific
    } else {
        BaseMode::Generic
    }
}

/// Runs base creation once so that a CMD sweep costs a single LLM call.
pub fn prepare(
    english: &str,
    pair: &LanguagePair,
    scoring: &Scoring<'_>,
    providers: &Providers<'_>,
    options: &GenerateOptions<'_>,
) -> Result<Prepared, CgError> {
    if english.trim().is_empty() {
        return Err(CgError::EmptyInput);
    }
    let mode = base_mode(options);
    let base = providers.base_create(english, pair, mode)?;
    let mut removed = Vec::new();
    let entries = match options.hindi_rules {
        Some(rules) => rules.clean_entries(base.entries.clone(), options.drop_optional_words, &mut removed),
        None => filter_pos(base.entries.clone(), mode, &mut removed),
    };
    let scored = score_entries(entries, &base.matrix_sentence, |e| &e.matrix_word, scoring);
    Ok(Prepared {
        english: english.into(),
        pair: pair.clone(),
        base,
        scored,
        removed,
        english_matrix: false,
    })
}

/// Like [`prepare`], anchoring entries to the English sentence instead.
pub fn prepare_english_matrix(
    english: &str,
    pair: &LanguagePair,
    scoring: &Scoring<'_>,
    providers: &Providers<'_>,
) -> Result<Prepared, CgError> {
    if english.trim().is_empty() {
        return Err(CgError::EmptyInput);
    }
    let base = providers.base_create(english, pair, BaseMode::Generic)?;
    let mut removed = Vec::new();
    let entries = filter_pos(base.entries.clone(), BaseMode::Generic, &mut removed);
    let scored = score_entries(entries, english, |e| &e.eng, scoring);
    Ok(Prepared {
        english: english.into(),
        pair: pair.clone(),
        base,
        scored,
        removed,
        english_matrix: true,
    })
}

impl Prepared {
    /// Realizes the sentence at one CMD value. Only romanization touches
    /// providers here.
    pub fn realize(
        &self,
        cmd: Cmd,
        scoring: &Scoring<'_>,
        providers: &Providers<'_>,
        options: &GenerateOptions<'_>,
    ) -> Result<CodeMixedSentence, CgError> {
        let (plan, applied, text) = if self.english_matrix {
            let plan = plan_english_matrix(self.scored.clone(), cmd);
            let applied = apply_english_matrix(&self.english, &plan, scoring);
            let text = applied.text();
            (plan, applied, text)
        } else {
            let plan = plan_replacements(self.scored.clone(), cmd);
            let applied = match options.hindi_rules {
                Some(rules) => inflect_hi::apply_hindi_inflection_segments(&self.base.matrix_sentence, &plan, rules),
                None => apply_plan_segments(&self.base.matrix_sentence, &plan),
            };
            let text = preprocess(&romanize(&applied.segments, &self.pair, providers)?).text;
            (plan, applied, text)
        };
        Ok(CodeMixedSentence {
            english: self.english.clone(),
            pair: self.pair.clone(),
            cmd,
            matrix_sentence: self.base.matrix_sentence.clone(),
            mixed: applied.text(),
            text,
            plan,
            replacements: applied.replacements,
            removed: self.removed.clone(),
            skipped: applied.skipped,
            notes: applied.notes,
        })
    }
}

/// English sentence in, code-mixed sentence in Latin script out, with the
/// matrix language governing the grammar.
pub fn generate(
    english: &str,
    pair: &LanguagePair,
    cmd: Cmd,
    scoring: &Scoring<'_>,
    providers: &Providers<'_>,
    options: &GenerateOptions<'_>,
) -> Result<CodeMixedSentence, CgError> {
    prepare(english, pair, scoring, providers, options)?.realize(cmd, scoring, providers, options)
}

/// English stays the matrix language; low-scoring words are swapped for
/// their most frequent romanized matrix-language spelling.
pub fn generate_english_matrix(
    english: &str,
    pair: &LanguagePair,
    cmd: Cmd,
    scoring: &Scoring<'_>,
    providers: &Providers<'_>,
) -> Result<CodeMixedSentence, CgError> {
    prepare_english_matrix(english, pair, scoring, providers)?.realize(
        cmd,
        scoring,
        providers,
        &GenerateOptions::default(),
    )
}

/// The spelling with the highest corpus count; the first listed on ties or
/// without a corpus.
pub fn preferred_spelling<'e>(entry: &'e WordEntry, scoring: &Scoring<'_>) -> &'e str {
    let count = |v: &str| match scoring {
        Scoring::Corpus { vocab, .. } => vocab.count(v),
        Scoring::Uniform => 0,
    };
    let mut best = &entry.roman_variants[0];
    for v in &entry.roman_variants[1..] {
        if count(v) > count(best) {
            best = v;
        }
    }
    best
}

fn match_case(template: &str, word: &str) -> String {
    let mut chars = word.chars();
    match (template.chars().next(), chars.next()) {
        (Some(t), Some(first)) if t.is_uppercase() => first.to_uppercase().chain(chars).collect(),
        _ => word.to_string(),
    }
}

fn apply_english_matrix(english: &str, plan: &ReplacementPlan, scoring: &Scoring<'_>) -> Applied {
    let tokens = word_tokens(english);
    let edits = plan
        .replaced()
        .map(|s| {
            let spelling = preferred_spelling(&s.entry, scoring);
            let original = s
                .anchor
                .and_then(|a| tokens.get(a.first_token))
                .map_or("", |t| t.core(english));
            Edit {
                anchor: s.anchor,
                phrase: s.entry.eng.clone(),
                replacement: alloc::vec![Segment {
                    text: match_case(original, spelling),
                    inserted: true,
                }],
            }
        })
        .collect();
    let mut applied = Applied::default();
    splice(english, edits, &mut applied);
    applied
}
