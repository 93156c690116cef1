//! Vocabulary files and corpus ingestion.
//!
//! A vocabulary file is JSONL: a header `{"pair", "total_tokens"}` followed
//! by one `{"token", "count"}` line per distinct token in byte order, so the
//! same corpus always produces the same bytes.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use codemix_core::vocab::VocabError;
use codemix_core::{FrequencyVocab, LanguagePair};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum VocabFileError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    pair: Option<LanguagePair>,
    total_tokens: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    token: String,
    count: u64,
}

pub fn write_vocab<W: Write>(vocab: &FrequencyVocab, mut out: W) -> std::io::Result<()> {
    let header = Header {
        pair: vocab.pair().cloned(),
        total_tokens: vocab.total_tokens(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for (token, count) in vocab.iter() {
        let row = Row {
            token: token.into(),
            count,
        };
        writeln!(out, "{}", serde_json::to_string(&row)?)?;
    }
    out.flush()
}

pub fn read_vocab<R: BufRead>(input: R) -> Result<FrequencyVocab, VocabFileError> {
    let fmt = |line: usize, message: String| VocabFileError::Format { line, message };
    let mut vocab: Option<FrequencyVocab> = None;
    let mut declared_total = 0;
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let (n, line) = (i + 1, line?);
        if line.trim().is_empty() {
            continue;
        }
        match vocab.as_mut() {
            None => {
                let h: Header = serde_json::from_str(&line).map_err(|e| fmt(n, format!("bad header: {e}")))?;
                declared_total = h.total_tokens;
                vocab = Some(FrequencyVocab::new(h.pair));
            }
            Some(v) => {
                let row: Row = serde_json::from_str(&line).map_err(|e| fmt(n, e.to_string()))?;
                if !seen.insert(row.token.clone()) {
                    return Err(fmt(n, format!("duplicate token `{}`", row.token)));
                }
                v.add_count(&row.token, row.count)
                    .map_err(|e: VocabError| fmt(n, e.to_string()))?;
            }
        }
    }
    let vocab = vocab.unwrap_or_default();
    if vocab.total_tokens() != declared_total {
        return Err(fmt(
            1,
            format!(
                "header total_tokens {declared_total} but counts sum to {}",
                vocab.total_tokens()
            ),
        ));
    }
    Ok(vocab)
}

pub fn load_vocab(path: &Path) -> Result<FrequencyVocab, VocabFileError> {
    read_vocab(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub lines: usize,
    /// Lines that were not valid UTF-8 and were left out.
    pub skipped_lines: usize,
}

/// Counts tokens of a one-utterance-per-line corpus.
pub fn count_corpus<R: Read>(input: R, vocab: &mut FrequencyVocab) -> std::io::Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for (i, raw) in BufReader::new(input).split(b'\n').enumerate() {
        let raw = raw?;
        stats.lines += 1;
        match std::str::from_utf8(&raw) {
            Ok(line) => vocab.add_line(line),
            Err(_) => {
                stats.skipped_lines += 1;
                log::warn!("corpus line {} is not UTF-8; skipped", i + 1);
            }
        }
    }
    Ok(stats)
}

pub fn build_vocab(corpora: &[&Path], pair: Option<LanguagePair>) -> std::io::Result<(FrequencyVocab, CorpusStats)> {
    let mut vocab = FrequencyVocab::new(pair);
    let mut total = CorpusStats::default();
    for path in corpora {
        let s = count_corpus(File::open(path)?, &mut vocab)?;
        total.lines += s.lines;
        total.skipped_lines += s.skipped_lines;
    }
    Ok((vocab, total))
}
