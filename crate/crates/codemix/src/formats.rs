//! JSONL inputs: evaluation pairs, comparison groups and the parallel
//! dataset.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use codemix_core::LanguagePair;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// A problem with one line of an input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parses every non-blank line; bad lines are returned, not fatal.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> std::io::Result<Vec<Result<(usize, T), LineError>>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map(|v| (i + 1, v)).map_err(|e| LineError {
            line: i + 1,
            message: e.to_string(),
        }));
    }
    Ok(out)
}

/// Like [`read_jsonl`] but stops at the first bad line.
pub fn read_jsonl_strict<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    read_jsonl(path)?
        .into_iter()
        .map(|r| {
            r.map(|(_, v)| v)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalPair {
    #[serde(default)]
    pub id: Option<String>,
    pub reference: String,
    pub candidate: String,
}

/// One English sentence with its code-mixed variants and optional gold
/// code-mixed references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub english: String,
    pub variants: Vec<String>,
    #[serde(default)]
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Gupta2020,
    TwitterCorrected,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub pair: LanguagePair,
    pub english: String,
    pub codemixed: String,
    pub source: Source,
}

impl DatasetRecord {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (field, value) in [
            ("id", &self.id),
            ("english", &self.english),
            ("codemixed", &self.codemixed),
        ] {
            if value.trim().is_empty() {
                v.push(format!("`{field}` is empty"));
            }
        }
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatasetReport {
    pub records: usize,
    pub per_pair: BTreeMap<String, usize>,
    pub violations: Vec<LineError>,
    /// Ids used by more than one record.
    pub duplicate_ids: Vec<String>,
    /// Records repeating an earlier (pair, english, codemixed) triple, by line.
    pub duplicate_records: Vec<usize>,
}

impl DatasetReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_dataset(path: &Path) -> std::io::Result<DatasetReport> {
    let mut report = DatasetReport::default();
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for row in read_jsonl::<DatasetRecord>(path)? {
        let (line, record) = match row {
            Ok(r) => r,
            Err(e) => {
                report.violations.push(e);
                continue;
            }
        };
        let problems = record.violations();
        if !problems.is_empty() {
            report
                .violations
                .extend(problems.into_iter().map(|message| LineError { line, message }));
            continue;
        }
        report.records += 1;
        *report.per_pair.entry(record.pair.code()).or_insert(0) += 1;
        *ids.entry(record.id.clone()).or_insert(0) += 1;
        if !seen.insert((record.pair.code(), record.english, record.codemixed)) {
            report.duplicate_records.push(line);
        }
    }
    report.duplicate_ids = ids.into_iter().filter(|(_, n)| *n > 1).map(|(id, _)| id).collect();
    Ok(report)
}
