//! Rejection of recurrent non-term emphasis: abbreviations, Latin locutions
//! and list markers.

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Abbreviation,
    LatinLocution,
    ListEntry,
    /// Empty, pure punctuation, pure digits, or a single character.
    Trivial,
    /// Pattern from a configuration file without a section header.
    Custom,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Abbreviation => "abbreviation",
            Self::LatinLocution => "latin-locution",
            Self::ListEntry => "list-entry",
            Self::Trivial => "trivial",
            Self::Custom => "custom",
        }
    }

    fn from_section(name: &str) -> Option<Self> {
        Some(match name {
            "abbreviation" => Self::Abbreviation,
            "latin-locution" => Self::LatinLocution,
            "list-entry" => Self::ListEntry,
            "custom" => Self::Custom,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_keep(self) -> bool {
        self == Verdict::Keep
    }
}

#[derive(Debug, Error)]
pub enum FilterConfigError {
    #[error("line {line}: invalid pattern: {source}")]
    Pattern {
        line: usize,
        #[source]
        source: regex::Error,
    },
    #[error("line {line}: unknown section [{name}]")]
    Section { line: usize, name: String },
}

const DEFAULT_RULES: &[(RejectReason, &str)] = &[
    (RejectReason::Abbreviation, r"i\.?\s*e\.?,?"),
    (RejectReason::Abbreviation, r"e\.?\s*g\.?,?"),
    (RejectReason::Abbreviation, r"cf\.?"),
    (RejectReason::Abbreviation, r"resp\.?"),
    (RejectReason::Abbreviation, r"etc\.?"),
    (RejectReason::LatinLocution, r"et\.?\s+al\.?"),
    (RejectReason::LatinLocution, r"a\s+priori"),
    (RejectReason::LatinLocution, r"ad\s+hoc"),
    (RejectReason::LatinLocution, r"per\s+se"),
    (RejectReason::LatinLocution, r"vice\s+versa"),
    (RejectReason::ListEntry, r"\(?(?:[ivxlc]+|[a-z]|\d+)\)"),
    (RejectReason::ListEntry, r"(?:[ivxlc]+|[a-z]|\d+)\."),
];

/// Term-level noise filter. Patterns are full-match, case-insensitive, and
/// applied to the whitespace-normalized term.
#[derive(Debug, Clone)]
pub struct NoiseFilter {
    rules: Vec<(RejectReason, Regex)>,
}

fn compile(pattern: &str) -> Result<Regex, regex::Error> {
    Regex::new(&format!(r"(?i)^(?:{pattern})$"))
}

impl Default for NoiseFilter {
    fn default() -> Self {
        Self {
            rules: DEFAULT_RULES
                .iter()
                .map(|(reason, p)| (*reason, compile(p).expect("default patterns compile")))
                .collect(),
        }
    }
}

impl NoiseFilter {
    /// Parses a filter file: one regex per line, `#` comments, optional
    /// `[abbreviation]` / `[latin-locution]` / `[list-entry]` / `[custom]`
    /// section headers. The result replaces the default lists entirely.
    pub fn from_config(contents: &str) -> Result<Self, FilterConfigError> {
        let mut rules = Vec::new();
        let mut reason = RejectReason::Custom;
        for (i, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                reason = RejectReason::from_section(name.trim()).ok_or_else(|| FilterConfigError::Section {
                    line: i + 1,
                    name: name.to_string(),
                })?;
                continue;
            }
            let re = compile(line).map_err(|source| FilterConfigError::Pattern { line: i + 1, source })?;
            rules.push((reason, re));
        }
        Ok(Self { rules })
    }

    pub fn check(&self, term: &str) -> Verdict {
        let norm = normalize_whitespace(term);
        if let Some((reason, _)) = self.rules.iter().find(|(_, re)| re.is_match(&norm)) {
            return Verdict::Reject(*reason);
        }
        let core = norm.trim_matches(|c: char| !c.is_alphanumeric());
        let trivial = core.chars().count() <= 1 || core.chars().all(|c| c.is_ascii_digit());
        if trivial {
            Verdict::Reject(RejectReason::Trivial)
        } else {
            Verdict::Keep
        }
    }
}

/// Checks a term against the default lists.
pub fn filter_noise(term: &str) -> Verdict {
    thread_local! {
        static DEFAULT: NoiseFilter = NoiseFilter::default();
    }
    DEFAULT.with(|f| f.check(term))
}
