//! Lossless LaTeX tokenizer and balanced environment locator.
//!
//! All spans are character (Unicode scalar) offsets into the source, not
//! byte offsets. Concatenating the lexemes of a token stream in order always
//! reproduces the input exactly.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Environments whose bodies are opaque to the tokenizer.
const VERBATIM_ENVS: &[&str] = &["verbatim", "verbatim*", "Verbatim", "lstlisting", "comment"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Text,
    /// Control word or control symbol, name without the backslash.
    Command(String),
    GroupOpen,
    GroupClose,
    MathShift,
    /// `\begin{name}` with the character range of the `[...]` content, if any.
    EnvBegin {
        name: String,
        optional_arg: Option<Range<usize>>,
    },
    EnvEnd {
        name: String,
    },
    Comment,
    Verbatim,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TexToken {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Range<usize>,
}

impl TexToken {
    pub fn is_command(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Command(n) if n == name)
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    text_start: Option<usize>,
    tokens: Vec<TexToken>,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Self {
            chars: source.chars().collect(),
            pos: 0,
            text_start: None,
            tokens: Vec::new(),
        }
    }

    fn lexeme(&self, span: &Range<usize>) -> String {
        self.chars[span.clone()].iter().collect()
    }

    fn flush_text(&mut self) {
        if let Some(start) = self.text_start.take() {
            let span = start..self.pos;
            self.tokens.push(TexToken {
                kind: TokenKind::Text,
                lexeme: self.lexeme(&span),
                span,
            });
        }
    }

    fn push(&mut self, kind: TokenKind, end: usize) {
        self.flush_text();
        let span = self.pos..end;
        self.tokens.push(TexToken {
            kind,
            lexeme: self.lexeme(&span),
            span,
        });
        self.pos = end;
    }

    fn text_char(&mut self) {
        if self.text_start.is_none() {
            self.text_start = Some(self.pos);
        }
        self.pos += 1;
    }

    fn run(mut self) -> Vec<TexToken> {
        while self.pos < self.chars.len() {
            match self.chars[self.pos] {
                '%' => {
                    let end = self.chars[self.pos..]
                        .iter()
                        .position(|&c| c == '\n')
                        .map_or(self.chars.len(), |off| self.pos + off);
                    self.push(TokenKind::Comment, end);
                }
                '{' => self.push(TokenKind::GroupOpen, self.pos + 1),
                '}' => self.push(TokenKind::GroupClose, self.pos + 1),
                '$' => {
                    let len = if self.chars.get(self.pos + 1) == Some(&'$') { 2 } else { 1 };
                    self.push(TokenKind::MathShift, self.pos + len);
                }
                '\\' => self.backslash(),
                _ => self.text_char(),
            }
        }
        self.flush_text();
        self.tokens
    }

    fn backslash(&mut self) {
        let start = self.pos;
        let Some(&next) = self.chars.get(start + 1) else {
            self.text_char();
            return;
        };
        if !next.is_ascii_alphabetic() {
            self.push(TokenKind::Command(next.to_string()), start + 2);
            return;
        }
        let mut end = start + 1;
        while end < self.chars.len() && self.chars[end].is_ascii_alphabetic() {
            end += 1;
        }
        let name: String = self.chars[start + 1..end].iter().collect();
        match name.as_str() {
            "begin" | "end" => {
                if let Some((env, close)) = self.env_name(end) {
                    if name == "end" {
                        self.push(TokenKind::EnvEnd { name: env }, close + 1);
                    } else if VERBATIM_ENVS.contains(&env.as_str()) {
                        let stop = self.find_verbatim_end(close + 1, &env);
                        self.push(TokenKind::Verbatim, stop);
                    } else {
                        let (token_end, optional_arg) = match self.optional_arg(close + 1) {
                            Some((arg, close_bracket)) => (close_bracket + 1, Some(arg)),
                            None => (close + 1, None),
                        };
                        self.push(
                            TokenKind::EnvBegin {
                                name: env,
                                optional_arg,
                            },
                            token_end,
                        );
                    }
                    return;
                }
            }
            "verb" => {
                if let Some(stop) = self.verb_end(end) {
                    self.push(TokenKind::Verbatim, stop);
                    return;
                }
            }
            _ => {}
        }
        self.push(TokenKind::Command(name), end);
    }

    /// Parses `{name}` after `\begin`/`\end`, allowing spaces before the brace.
    fn env_name(&self, mut at: usize) -> Option<(String, usize)> {
        while matches!(self.chars.get(at), Some(' ' | '\t')) {
            at += 1;
        }
        if self.chars.get(at) != Some(&'{') {
            return None;
        }
        let name_start = at + 1;
        let mut i = name_start;
        while let Some(&c) = self.chars.get(i) {
            if c == '}' {
                break;
            }
            if !(c.is_alphanumeric() || matches!(c, '*' | '@' | ':' | '_' | '-')) {
                return None;
            }
            i += 1;
        }
        if i == name_start || i >= self.chars.len() {
            return None;
        }
        Some((self.chars[name_start..i].iter().collect(), i))
    }

    /// Finds `[...]` right after an environment opener. Spaces and at most one
    /// line break may precede the bracket. Returns the content range and the
    /// index of the closing bracket.
    fn optional_arg(&self, mut at: usize) -> Option<(Range<usize>, usize)> {
        let mut newlines = 0;
        while let Some(&c) = self.chars.get(at) {
            match c {
                ' ' | '\t' | '\r' => {}
                '\n' => {
                    newlines += 1;
                    if newlines > 1 {
                        return None;
                    }
                }
                _ => break,
            }
            at += 1;
        }
        if self.chars.get(at) != Some(&'[') {
            return None;
        }
        let mut depth = 0usize;
        let mut i = at + 1;
        while let Some(&c) = self.chars.get(i) {
            match c {
                '\\' => i += 1,
                '{' => depth += 1,
                '}' => depth = depth.checked_sub(1)?,
                ']' if depth == 0 => return Some((at + 1..i, i)),
                _ => {}
            }
            i += 1;
        }
        None
    }

    fn find_verbatim_end(&self, from: usize, env: &str) -> usize {
        let closer: Vec<char> = format!("\\end{{{env}}}").chars().collect();
        let n = closer.len();
        (from..self.chars.len().saturating_sub(n - 1))
            .find(|&i| self.chars[i..i + n] == closer[..])
            .map_or(self.chars.len(), |i| i + n)
    }

    fn verb_end(&self, mut at: usize) -> Option<usize> {
        if self.chars.get(at) == Some(&'*') {
            at += 1;
        }
        let delim = *self.chars.get(at)?;
        if delim.is_ascii_alphabetic() || delim.is_whitespace() {
            return None;
        }
        let rest = &self.chars[at + 1..];
        let off = rest.iter().take_while(|&&c| c != '\n').position(|&c| c == delim)?;
        Some(at + 1 + off + 1)
    }
}

/// Splits `source` into a lossless token stream.
pub fn tokenize_tex(source: &str) -> Vec<TexToken> {
    Lexer::new(source).run()
}

/// Removes comment tokens (from `%` up to, not including, the line break).
pub fn strip_comments(source: &str) -> String {
    tokenize_tex(source)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Comment)
        .map(|t| t.lexeme)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvBlock {
    pub name: String,
    /// Raw LaTeX inside the `[...]` following `\begin{name}`.
    pub optional_arg: Option<String>,
    /// Span of the whole `\begin{name}[...]` opener.
    pub begin_span: Range<usize>,
    /// Content strictly between the opener and `\end{name}`.
    pub body_span: Range<usize>,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Imbalance {
    MissingEnd,
    MissingBegin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnbalancedEnv {
    pub name: String,
    pub offset: usize,
    pub kind: Imbalance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnvScan {
    pub blocks: Vec<EnvBlock>,
    pub unbalanced: Vec<UnbalancedEnv>,
}

/// Locates every balanced occurrence of the environment `name` (exact,
/// case-sensitive). Nested occurrences are all reported; blocks come back in
/// order of their opening delimiter.
pub fn find_environments(tokens: &[TexToken], name: &str) -> EnvScan {
    let mut open: Vec<usize> = Vec::new();
    let mut scan = EnvScan::default();
    for (idx, tok) in tokens.iter().enumerate() {
        match &tok.kind {
            TokenKind::EnvBegin { name: n, .. } if n == name => open.push(idx),
            TokenKind::EnvEnd { name: n } if n == name => match open.pop() {
                Some(begin_idx) => scan.blocks.push(make_block(tokens, begin_idx, idx)),
                None => scan.unbalanced.push(UnbalancedEnv {
                    name: name.to_string(),
                    offset: tok.span.start,
                    kind: Imbalance::MissingBegin,
                }),
            },
            _ => {}
        }
    }
    for begin_idx in open {
        scan.unbalanced.push(UnbalancedEnv {
            name: name.to_string(),
            offset: tokens[begin_idx].span.start,
            kind: Imbalance::MissingEnd,
        });
    }
    scan.blocks.sort_by_key(|b| b.begin_span.start);
    scan.unbalanced.sort_by_key(|u| u.offset);
    scan
}

fn make_block(tokens: &[TexToken], begin_idx: usize, end_idx: usize) -> EnvBlock {
    let begin = &tokens[begin_idx];
    let TokenKind::EnvBegin { name, optional_arg } = &begin.kind else {
        unreachable!("begin index always points at an EnvBegin token");
    };
    let optional_arg = optional_arg.as_ref().map(|r| {
        begin
            .lexeme
            .chars()
            .skip(r.start - begin.span.start)
            .take(r.len())
            .collect()
    });
    let body: String = tokens[begin_idx + 1..end_idx]
        .iter()
        .map(|t| t.lexeme.as_str())
        .collect();
    EnvBlock {
        name: name.clone(),
        optional_arg,
        begin_span: begin.span.clone(),
        body_span: begin.span.end..tokens[end_idx].span.start,
        body,
    }
}
