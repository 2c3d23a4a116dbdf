//! Token-level IOB2 datasets built from rendered definition texts.

mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{NoiseFilter, RejectReason, Verdict};
use crate::pipeline::DefinitionRecord;
use crate::text::char_slice;
use crate::timestamp;

pub use split::{
    apply_corrections, kfold, plan_splits, reserve_test, sort_chronological, split_id, subsample, Correction,
    Reservation, SplitConfig, SplitError, SplitOutcome, SplitSpec, SubsampleSpec,
};

pub const DEFAULT_MAX_TOKENS: usize = 500;

/// Characters split off the edges of whitespace-delimited words.
const EDGE_PUNCT: &[char] = &[
    '.', ',', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '"', '“', '”', '‘', '’',
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Character range in the rendered text.
    pub range: Range<usize>,
}

/// Splits on whitespace, then peels leading and trailing punctuation into
/// single-character tokens. Hyphens, slashes and symbols inside a word stay
/// attached, so `non-k-equivalent` is one token.
pub fn tokenize_text(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let (mut a, mut b) = (start, i);
        while a < b && EDGE_PUNCT.contains(&chars[a]) {
            tokens.push(single(chars[a], a));
            a += 1;
        }
        let mut trailing = Vec::new();
        while b > a && EDGE_PUNCT.contains(&chars[b - 1]) {
            b -= 1;
            trailing.push(single(chars[b], b));
        }
        if a < b {
            tokens.push(Token {
                surface: chars[a..b].iter().collect(),
                range: a..b,
            });
        }
        tokens.extend(trailing.into_iter().rev());
    }
    tokens
}

fn single(c: char, at: usize) -> Token {
    Token {
        surface: c.to_string(),
        range: at..at + 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Iob2Tag {
    #[serde(rename = "B-MATH_TERM")]
    Begin,
    #[serde(rename = "I-MATH_TERM")]
    Inside,
    #[serde(rename = "O")]
    Outside,
}

impl Iob2Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Begin => "B-MATH_TERM",
            Self::Inside => "I-MATH_TERM",
            Self::Outside => "O",
        }
    }
}

impl fmt::Display for Iob2Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// No `I` at the start or right after `O`.
pub fn is_valid_iob2(tags: &[Iob2Tag]) -> bool {
    let mut prev = Iob2Tag::Outside;
    for &tag in tags {
        if tag == Iob2Tag::Inside && prev == Iob2Tag::Outside {
            return false;
        }
        prev = tag;
    }
    true
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("span {span:?} lies outside text of length {len}")]
    SpanOutOfBounds { span: Range<usize>, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub tags: Vec<Iob2Tag>,
    /// Merged spans that touch no token.
    pub unmatched: Vec<Range<usize>>,
}

/// Unions overlapping ranges; touching ranges stay separate and empty
/// ranges are discarded.
pub fn merge_spans(spans: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut sorted: Vec<_> = spans.iter().filter(|r| r.start < r.end).cloned().collect();
    sorted.sort_by_key(|r| (r.start, r.end));
    let mut merged: Vec<Range<usize>> = Vec::new();
    for r in sorted {
        match merged.last_mut() {
            Some(last) if r.start < last.end => last.end = last.end.max(r.end),
            _ => merged.push(r),
        }
    }
    merged
}

/// Tags tokens against character spans. A token overlapping a span by at
/// least one character is inside it; a token continues the previous chunk
/// only when both overlap the same (merged) span.
pub fn label_iob2(tokens: &[Token], spans: &[Range<usize>], text_len: usize) -> Result<Labeling, LabelError> {
    if let Some(bad) = spans.iter().find(|s| s.end > text_len || s.start > s.end) {
        return Err(LabelError::SpanOutOfBounds {
            span: bad.clone(),
            len: text_len,
        });
    }
    let merged = merge_spans(spans);
    let mut hit = vec![false; merged.len()];
    let mut tags = Vec::with_capacity(tokens.len());
    let mut prev: Option<Range<usize>> = None;
    let mut lo = 0;
    for tok in tokens {
        while lo < merged.len() && merged[lo].end <= tok.range.start {
            lo += 1;
        }
        let mut hi = lo;
        while hi < merged.len() && merged[hi].start < tok.range.end {
            hi += 1;
        }
        let overlapping = lo..hi;
        let tag = match &prev {
            _ if overlapping.is_empty() => Iob2Tag::Outside,
            Some(p) if p.contains(&lo) => Iob2Tag::Inside,
            _ => Iob2Tag::Begin,
        };
        for s in overlapping.clone() {
            hit[s] = true;
        }
        prev = (!overlapping.is_empty()).then_some(overlapping);
        tags.push(tag);
    }
    let unmatched = merged
        .iter()
        .zip(&hit)
        .filter(|(_, &h)| !h)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(Labeling { tags, unmatched })
}

/// Regroups tagged tokens into terms. With `text`, a term is the text slice
/// from its first to its last token; without it, surfaces are space-joined.
pub fn decode_iob2(tokens: &[Token], tags: &[Iob2Tag], text: Option<&str>) -> Vec<String> {
    let mut chunks: Vec<Range<usize>> = Vec::new();
    let mut prev = Iob2Tag::Outside;
    for (k, &tag) in tags.iter().enumerate().take(tokens.len()) {
        match tag {
            Iob2Tag::Outside => {}
            Iob2Tag::Inside if prev != Iob2Tag::Outside => {
                if let Some(last) = chunks.last_mut() {
                    last.end = k + 1;
                }
            }
            _ => chunks.push(k..k + 1),
        }
        prev = tag;
    }
    chunks
        .into_iter()
        .map(|c| match text {
            Some(text) => char_slice(text, tokens[c.start].range.start..tokens[c.end - 1].range.end),
            None => tokens[c].iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    /// `paper_id#block_index`
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub tags: Vec<Iob2Tag>,
    pub terms: Vec<String>,
    pub last_updated: Option<DateTime<Utc>>,
}

impl LabeledExample {
    pub fn paper_id(&self) -> &str {
        split_id(&self.id).0
    }

    pub fn decoded_terms(&self) -> Vec<String> {
        decode_iob2(&self.tokens, &self.tags, Some(&self.text))
    }

    pub fn to_record(&self) -> ExampleRecord {
        ExampleRecord {
            id: self.id.clone(),
            tokens: self.tokens.iter().map(|t| t.surface.clone()).collect(),
            tags: self.tags.clone(),
            terms: self.terms.clone(),
            last_updated: self.last_updated,
        }
    }
}

/// Line of the dataset JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub tags: Vec<Iob2Tag>,
    pub terms: Vec<String>,
    #[serde(with = "timestamp::iso_opt", default)]
    pub last_updated: Option<DateTime<Utc>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("example {id}: {tokens} tokens but {tags} tags")]
    LengthMismatch { id: String, tokens: usize, tags: usize },
    #[error("example {id}: tag sequence is not valid IOB2")]
    InvalidIob2 { id: String },
}

impl ExampleRecord {
    /// Rebuilds an in-memory example. Token offsets refer to the surfaces
    /// joined by single spaces, since the original text is not stored.
    pub fn into_example(self) -> Result<LabeledExample, RecordError> {
        if self.tokens.len() != self.tags.len() {
            return Err(RecordError::LengthMismatch {
                id: self.id,
                tokens: self.tokens.len(),
                tags: self.tags.len(),
            });
        }
        if !is_valid_iob2(&self.tags) {
            return Err(RecordError::InvalidIob2 { id: self.id });
        }
        let mut text = String::new();
        let mut tokens = Vec::with_capacity(self.tokens.len());
        let mut at = 0;
        for surface in self.tokens {
            if !text.is_empty() {
                text.push(' ');
                at += 1;
            }
            let len = surface.chars().count();
            text.push_str(&surface);
            tokens.push(Token {
                surface,
                range: at..at + len,
            });
            at += len;
        }
        Ok(LabeledExample {
            id: self.id,
            text,
            tokens,
            tags: self.tags,
            terms: self.terms,
            last_updated: self.last_updated,
        })
    }
}

/// Writes CoNLL blocks: `# id = <id>`, then `surface<TAB>tag` per token,
/// then a blank line.
pub fn to_conll(examples: &[LabeledExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&format!("# id = {}\n", ex.id));
        for (tok, tag) in ex.tokens.iter().zip(&ex.tags) {
            out.push_str(&tok.surface);
            out.push('\t');
            out.push_str(tag.as_str());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub max_tokens: usize,
    pub drop_empty: bool,
    pub filter: NoiseFilter,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            drop_empty: false,
            filter: NoiseFilter::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub blocks: usize,
    pub kept: usize,
    pub dropped_over_length: usize,
    pub dropped_empty: usize,
    /// Over all blocks, before the length filter.
    pub mean_tokens: f64,
    pub max_tokens: usize,
    pub terms: usize,
    pub rejected_terms: BTreeMap<String, usize>,
    pub unmatched_spans: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOutput {
    pub examples: Vec<LabeledExample>,
    pub stats: BuildStats,
}

/// Filters candidate terms, tokenizes, labels and applies the length limit
/// (blocks with more than `max_tokens` tokens are dropped).
pub fn build_examples(records: &[DefinitionRecord], opts: &BuildOptions) -> BuildOutput {
    let mut out = BuildOutput::default();
    let mut total_tokens = 0usize;
    for rec in records {
        out.stats.blocks += 1;
        let tokens = tokenize_text(&rec.text);
        total_tokens += tokens.len();
        out.stats.max_tokens = out.stats.max_tokens.max(tokens.len());
        if tokens.len() > opts.max_tokens {
            out.stats.dropped_over_length += 1;
            continue;
        }
        let mut spans = Vec::new();
        for span in &rec.spans {
            match opts.filter.check(&span.term) {
                Verdict::Keep => spans.push(span.start..span.end),
                Verdict::Reject(reason) => {
                    *out.stats.rejected_terms.entry(reason_key(reason)).or_default() += 1;
                }
            }
        }
        let text_len = rec.text.chars().count();
        // Spans from extraction always lie inside the text; clamp defensively
        // for hand-edited definition files.
        let spans: Vec<_> = spans
            .into_iter()
            .map(|r| r.start.min(text_len)..r.end.min(text_len))
            .collect();
        let labeling = label_iob2(&tokens, &spans, text_len).expect("spans clamped to text");
        out.stats.unmatched_spans += labeling.unmatched.len();
        let terms = decode_iob2(&tokens, &labeling.tags, Some(&rec.text));
        if terms.is_empty() && opts.drop_empty {
            out.stats.dropped_empty += 1;
            continue;
        }
        out.stats.terms += terms.len();
        out.examples.push(LabeledExample {
            id: format!("{}#{}", rec.paper_id, rec.block_index),
            text: rec.text.clone(),
            tokens,
            tags: labeling.tags,
            terms,
            last_updated: rec.last_updated,
        });
    }
    out.stats.kept = out.examples.len();
    if out.stats.blocks > 0 {
        out.stats.mean_tokens = total_tokens as f64 / out.stats.blocks as f64;
    }
    out
}

fn reason_key(reason: RejectReason) -> String {
    reason.as_str().to_string()
}
