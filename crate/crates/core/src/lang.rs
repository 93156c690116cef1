//! Language pairs supported by the pipelines.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// The embedded language of every pair in this toolkit.
pub const ENGLISH: &str = "en";

/// Whether a matrix language is written in the Latin script.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptClass {
    Roman,
    NonRoman,
}

/// An English-X language pair. English is always the embedded language.
///
/// Serialized as its `en-xx` code; only registered codes round-trip through
/// serialization, custom pairs built with [`LanguagePair::custom`] do not.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguagePair {
    matrix: String,
    name: String,
    script: ScriptClass,
}

const REGISTRY: &[(&str, &str, ScriptClass)] = &[
    ("hi", "hindi", ScriptClass::NonRoman),
    ("bn", "bengali", ScriptClass::NonRoman),
    ("fr", "french", ScriptClass::Roman),
    ("es", "spanish", ScriptClass::Roman),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairError {
    #[error("unknown language pair `{0}` (expected one of en-hi, en-bn, en-fr, en-es)")]
    Unknown(String),
    #[error("matrix language must differ from the embedded language")]
    SameLanguage,
    #[error("language code must be non-empty lowercase ascii: `{0}`")]
    BadCode(String),
}

impl LanguagePair {
    /// Looks up a registered matrix language code (`hi`, `bn`, `fr`, `es`).
    pub fn from_matrix(code: &str) -> Result<Self, PairError> {
        REGISTRY
            .iter()
            .find(|(c, _, _)| *c == code)
            .map(|&(c, name, script)| LanguagePair {
                matrix: c.to_string(),
                name: name.to_string(),
                script,
            })
            .ok_or_else(|| {
                if code == ENGLISH {
                    PairError::SameLanguage
                } else {
                    PairError::Unknown(format!("{ENGLISH}-{code}"))
                }
            })
    }

    /// Registers an ad-hoc pair. `name` is the lowercase English name of the
    /// matrix language, used in base-creation prompts and JSON field names.
    pub fn custom(matrix: &str, name: &str, script: ScriptClass) -> Result<Self, PairError> {
        if matrix == ENGLISH {
            return Err(PairError::SameLanguage);
        }
        let valid = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b == b'_');
        if !valid(matrix) {
            return Err(PairError::BadCode(matrix.to_string()));
        }
        if !valid(name) {
            return Err(PairError::BadCode(name.to_string()));
        }
        Ok(LanguagePair {
            matrix: matrix.to_string(),
            name: name.to_string(),
            script,
        })
    }

    pub fn hindi() -> Self {
        Self::from_matrix("hi").expect("registered")
    }

    pub fn bengali() -> Self {
        Self::from_matrix("bn").expect("registered")
    }

    pub fn french() -> Self {
        Self::from_matrix("fr").expect("registered")
    }

    pub fn spanish() -> Self {
        Self::from_matrix("es").expect("registered")
    }

    pub fn embedded(&self) -> &str {
        ENGLISH
    }

    pub fn matrix(&self) -> &str {
        &self.matrix
    }

    /// Lowercase English name of the matrix language, e.g. `hindi`.
    pub fn matrix_name(&self) -> &str {
        &self.name
    }

    pub fn matrix_script(&self) -> ScriptClass {
        self.script
    }

    pub fn is_roman(&self) -> bool {
        self.script == ScriptClass::Roman
    }

    /// The `en-xx` code.
    pub fn code(&self) -> String {
        format!("{ENGLISH}-{}", self.matrix)
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{ENGLISH}-{}", self.matrix)
    }
}

impl FromStr for LanguagePair {
    type Err = PairError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (embedded, matrix) = s.split_once('-').ok_or_else(|| PairError::Unknown(s.to_string()))?;
        if embedded != ENGLISH {
            return Err(PairError::Unknown(s.to_string()));
        }
        Self::from_matrix(matrix)
    }
}

impl TryFrom<String> for LanguagePair {
    type Error = PairError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<LanguagePair> for String {
    fn from(pair: LanguagePair) -> String {
        pair.code()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registered_scripts() {
        for (code, roman) in [("en-hi", false), ("en-bn", false), ("en-fr", true), ("en-es", true)] {
            let pair: LanguagePair = code.parse().unwrap();
            assert_eq!(pair.is_roman(), roman, "{code}");
            assert_ne!(pair.matrix(), pair.embedded());
            assert_eq!(pair.code(), code);
        }
    }

    #[test]
    fn rejects_bad_codes() {
        assert_eq!("en-en".parse::<LanguagePair>(), Err(PairError::SameLanguage));
        assert!(matches!("hi-en".parse::<LanguagePair>(), Err(PairError::Unknown(_))));
        assert!(matches!("en-xx".parse::<LanguagePair>(), Err(PairError::Unknown(_))));
        assert_eq!(
            LanguagePair::custom("en", "english", ScriptClass::Roman),
            Err(PairError::SameLanguage)
        );
    }

    #[test]
    fn custom_pair() {
        let de = LanguagePair::custom("de", "german", ScriptClass::Roman).unwrap();
        assert_eq!(de.code(), "en-de");
        assert_eq!(de.matrix_name(), "german");
    }

    #[test]
    fn serde_as_code() {
        let json = serde_json::to_string(&LanguagePair::bengali()).unwrap();
        assert_eq!(json, "\"en-bn\"");
        let back: LanguagePair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, LanguagePair::bengali());
    }
}
