//! Definition blocks and definiendum candidates.
//!
//! Definition blocks are the bodies of `definition` environments (plus any
//! extra environment names the caller asks for). Candidates are the contents
//! of `\emph{}` / `\textit{}` in a block and the environment's optional
//! argument. When emphasis is glued to surrounding word characters, as in
//! `\emph{non}-k-equivalent`, the candidate grows to the whole
//! whitespace-delimited word.

mod noise;

use std::ops::Range;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::PaperEntry;
use crate::diag::Diagnostic;
use crate::tex::{find_environments, strip_comments, tokenize_tex, Imbalance, TokenKind};
use crate::text::char_slice;

pub use noise::{filter_noise, FilterConfigError, NoiseFilter, RejectReason, Verdict};

pub const DEFAULT_ENV: &str = "definition";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinitionBlock {
    pub paper_id: String,
    pub block_index: usize,
    /// Environment body with comments removed.
    pub raw_latex: String,
    pub optional_arg: Option<String>,
    /// Body location in the (input-resolved) paper source.
    pub source_span: Range<usize>,
    pub last_updated: DateTime<Utc>,
}

impl DefinitionBlock {
    pub fn id(&self) -> String {
        format!("{}#{}", self.paper_id, self.block_index)
    }
}

/// Collects definition blocks from a paper source, in document order.
pub fn extract_definition_blocks(
    paper: &PaperEntry,
    source: &str,
    env_names: &[String],
) -> (Vec<DefinitionBlock>, Vec<Diagnostic>) {
    extract_blocks_from(&paper.paper_id, paper.last_updated, source, env_names)
}

pub fn extract_blocks_from(
    paper_id: &str,
    last_updated: DateTime<Utc>,
    source: &str,
    env_names: &[String],
) -> (Vec<DefinitionBlock>, Vec<Diagnostic>) {
    let tokens = tokenize_tex(source);
    let mut found = Vec::new();
    let mut warnings = Vec::new();
    let mut names: Vec<&str> = env_names.iter().map(String::as_str).collect();
    names.sort_unstable();
    names.dedup();
    for name in names {
        let scan = find_environments(&tokens, name);
        for u in scan.unbalanced {
            let detail = match u.kind {
                Imbalance::MissingEnd => format!("\\begin{{{}}} without matching \\end", u.name),
                Imbalance::MissingBegin => format!("\\end{{{}}} without matching \\begin", u.name),
            };
            warnings.push(Diagnostic::new(paper_id, "unbalanced-environment", detail).at(u.offset));
        }
        found.extend(scan.blocks);
    }
    found.sort_by_key(|b| (b.begin_span.start, b.body_span.end));

    let mut blocks = Vec::with_capacity(found.len());
    for env in found {
        let raw_latex = strip_comments(&env.body);
        if raw_latex.trim().is_empty() {
            warnings.push(
                Diagnostic::new(paper_id, "empty-definition", "environment body is empty").at(env.begin_span.start),
            );
            continue;
        }
        blocks.push(DefinitionBlock {
            paper_id: paper_id.to_string(),
            block_index: blocks.len(),
            raw_latex,
            optional_arg: env.optional_arg.map(|a| strip_comments(&a)),
            source_span: env.body_span,
            last_updated,
        });
    }
    (blocks, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpanKind {
    Emph,
    Textit,
    OptionalArg,
}

/// A definiendum candidate. For `Emph`/`Textit`, ranges are character
/// offsets in the block's `raw_latex`; for `OptionalArg` they are offsets in
/// the optional argument itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatexSpan {
    pub kind: SpanKind,
    /// Candidate extent, including compound extension.
    pub range: Range<usize>,
    /// The braced argument content alone.
    pub content: Range<usize>,
    pub term_latex: String,
}

impl LatexSpan {
    pub fn is_extended(&self) -> bool {
        self.range != self.content
    }
}

const MATH_ENVS: &[&str] = &[
    "equation", "equation*", "align", "align*", "gather", "gather*", "multline", "multline*",
    "eqnarray", "eqnarray*", "displaymath", "math",
];

fn adjacent_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

fn word_stop(c: char) -> bool {
    c.is_whitespace() || c == '~'
}

fn match_forward(chars: &[char], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = open;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 1,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn match_backward(chars: &[char], close: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = close + 1;
    while i > 0 {
        i -= 1;
        let escaped = i > 0 && chars[i - 1] == '\\';
        match chars[i] {
            '}' if !escaped => depth += 1,
            '{' if !escaped => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Grows `markup` (the full `\emph{...}` extent) to the enclosing
/// whitespace-delimited word when it touches word characters.
fn extend_to_word(chars: &[char], markup: Range<usize>, floor: usize) -> Range<usize> {
    let n = chars.len();
    let mut end = markup.end;
    if end < n && adjacent_word_char(chars[end]) {
        while end < n {
            let c = chars[end];
            if word_stop(c) || c == '}' {
                break;
            }
            if c == '{' {
                match match_forward(chars, end) {
                    Some(close) => end = close + 1,
                    None => break,
                }
            } else if c == '\\' {
                match chars.get(end + 1) {
                    Some(a) if a.is_ascii_alphabetic() => {
                        end += 1;
                        while end < n && chars[end].is_ascii_alphabetic() {
                            end += 1;
                        }
                    }
                    Some(',' | ';' | ':' | '!' | ' ' | '\\') | None => break,
                    Some(_) => end += 2,
                }
            } else {
                end += 1;
            }
        }
        while end > markup.end && matches!(chars[end - 1], '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']' | '\'' | '"') {
            end -= 1;
        }
    }

    let mut start = markup.start;
    if start > floor && adjacent_word_char(chars[start - 1]) {
        while start > floor {
            let c = chars[start - 1];
            if word_stop(c) || c == '{' {
                break;
            }
            if c == '}' {
                let Some(open) = match_backward(chars, start - 1) else { break };
                let mut s = open;
                while s > floor && chars[s - 1].is_ascii_alphabetic() {
                    s -= 1;
                }
                start = if s > floor && s < open && chars[s - 1] == '\\' { s - 1 } else { open };
                if start < floor {
                    start = floor;
                    break;
                }
            } else {
                start -= 1;
            }
        }
        while start < markup.start && matches!(chars[start], '(' | '[' | '`' | '\'' | '"') {
            start += 1;
        }
    }
    start..end
}

/// Definiendum candidates of one block, in document order: the optional
/// argument first, then every outermost `\emph{}`/`\textit{}`.
pub fn extract_definienda_spans(block: &DefinitionBlock) -> (Vec<LatexSpan>, Vec<Diagnostic>) {
    let mut spans = Vec::new();
    let mut warnings = Vec::new();
    if let Some(arg) = &block.optional_arg {
        if !arg.trim().is_empty() {
            let len = arg.chars().count();
            spans.push(LatexSpan {
                kind: SpanKind::OptionalArg,
                range: 0..len,
                content: 0..len,
                term_latex: arg.clone(),
            });
        }
    }

    let raw = &block.raw_latex;
    let chars: Vec<char> = raw.chars().collect();
    let tokens = tokenize_tex(raw);
    let mut math = false;
    let mut resume_at = 0usize;
    let mut floor = 0usize;
    for (idx, tok) in tokens.iter().enumerate() {
        match &tok.kind {
            TokenKind::MathShift => math = !math,
            TokenKind::Command(c) if c == "(" || c == "[" => math = true,
            TokenKind::Command(c) if c == ")" || c == "]" => math = false,
            TokenKind::EnvBegin { name, .. } if MATH_ENVS.contains(&name.as_str()) => math = true,
            TokenKind::EnvEnd { name } if MATH_ENVS.contains(&name.as_str()) => math = false,
            _ => {}
        }
        if tok.span.start < resume_at {
            continue;
        }
        let kind = if tok.is_command("emph") {
            SpanKind::Emph
        } else if tok.is_command("textit") {
            SpanKind::Textit
        } else {
            continue;
        };
        let mut j = idx + 1;
        if tokens
            .get(j)
            .is_some_and(|t| t.kind == TokenKind::Text && t.lexeme.trim().is_empty())
        {
            j += 1;
        }
        if tokens.get(j).map(|t| &t.kind) != Some(&TokenKind::GroupOpen) {
            continue;
        }
        let mut depth = 0usize;
        let close = tokens[j..].iter().position(|t| {
            match t.kind {
                TokenKind::GroupOpen => depth += 1,
                TokenKind::GroupClose => depth -= 1,
                _ => {}
            }
            depth == 0
        });
        let Some(close) = close.map(|c| j + c) else {
            warnings.push(
                Diagnostic::new(&block.paper_id, "unbalanced-markup", format!("\\{} argument never closes", tok.lexeme.trim_start_matches('\\')))
                    .at(tok.span.start),
            );
            resume_at = usize::MAX;
            continue;
        };
        if math {
            warnings.push(
                Diagnostic::new(&block.paper_id, "emphasis-in-math", "emphasis inside math mode kept as candidate")
                    .at(tok.span.start),
            );
        }
        let content = tokens[j].span.end..tokens[close].span.start;
        let markup = tok.span.start..tokens[close].span.end;
        let extended = extend_to_word(&chars, markup.clone(), floor);
        let range = if extended == markup { content.clone() } else { extended };
        resume_at = range.end.max(markup.end);
        floor = resume_at;
        spans.push(LatexSpan {
            kind,
            term_latex: char_slice(raw, range.clone()),
            range,
            content,
        });
    }
    (spans, warnings)
}
