//! LaTeX fragment → plain Unicode text, with an offset map back into the
//! fragment so that spans located in LaTeX coordinates can be carried into
//! rendered-text coordinates.
//!
//! The conversion is deliberately shallow: known symbol commands become
//! Unicode, accents compose, styling commands disappear while their argument
//! stays, and anything unknown degrades to its braced content. Whitespace is
//! collapsed (runs → one space, blank lines and explicit breaks → one `\n`)
//! and trimmed at both ends.

mod symbols;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::compose;

use crate::tex::{tokenize_tex, TexToken, TokenKind};
use crate::text::char_slice;

pub use symbols::{SymbolTable, SymbolTableError};

/// One contiguous correspondence between a LaTeX range and a text range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub latex: Range<usize>,
    pub text: Range<usize>,
}

impl Segment {
    /// Character-for-character correspondence (plain text passed through).
    fn is_identity(&self) -> bool {
        self.latex.len() == self.text.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetMap {
    segments: Vec<Segment>,
}

impl OffsetMap {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderWarningKind {
    UnbalancedBrace,
    /// `\ref`, `\cite` and friends: the argument is kept as text.
    ReferenceCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderWarning {
    pub kind: RenderWarningKind,
    pub offset: usize,
    pub detail: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("span {0:?} vanished in rendering")]
    SpanVanished(Range<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedText {
    pub text: String,
    pub map: OffsetMap,
    pub warnings: Vec<RenderWarning>,
}

impl RenderedText {
    /// Smallest text range covering everything rendered from `latex`,
    /// trimmed of surrounding whitespace.
    pub fn map_span(&self, latex: Range<usize>) -> Result<Range<usize>, RenderError> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for seg in &self.map.segments {
            if seg.latex.start >= latex.end || latex.start >= seg.latex.end {
                continue;
            }
            let covered = if seg.is_identity() {
                let s = latex.start.max(seg.latex.start) - seg.latex.start;
                let e = latex.end.min(seg.latex.end) - seg.latex.start;
                seg.text.start + s..seg.text.start + e
            } else {
                seg.text.clone()
            };
            lo = lo.min(covered.start);
            hi = hi.max(covered.end);
        }
        if lo >= hi {
            return Err(RenderError::SpanVanished(latex));
        }
        let chars: Vec<char> = self.text.chars().skip(lo).take(hi - lo).collect();
        let lead = chars.iter().take_while(|c| c.is_whitespace()).count();
        let trail = chars.iter().rev().take_while(|c| c.is_whitespace()).count();
        if lead == chars.len() {
            return Err(RenderError::SpanVanished(latex));
        }
        Ok(lo + lead..hi - trail)
    }

    pub fn slice(&self, range: Range<usize>) -> String {
        char_slice(&self.text, range)
    }
}

const DROP_ARGUMENT: &[&str] = &[
    "vspace", "hspace", "index", "phantom", "hphantom", "vphantom", "color", "textcolor", "href",
    "nocite", "label", "includegraphics", "bibliographystyle", "bibliography", "pagestyle", "thispagestyle",
];

const REFERENCE: &[&str] = &[
    "ref", "eqref", "pageref", "cite", "citep", "citet", "autoref", "cref", "Cref",
];

const HARD_BREAK: &[&str] = &[
    "par", "newline", "linebreak", "item", "smallskip", "medskip", "bigskip", "newpage",
];

const DISPLAY_ENVS: &[&str] = &[
    "equation", "equation*", "align", "align*", "alignat", "alignat*", "gather", "gather*",
    "multline", "multline*", "eqnarray", "eqnarray*", "displaymath", "flalign", "flalign*",
    "itemize", "enumerate", "description", "center",
];

const MATH_ENVS: &[&str] = &[
    "equation", "equation*", "align", "align*", "alignat", "alignat*", "gather", "gather*",
    "multline", "multline*", "eqnarray", "eqnarray*", "displaymath", "math", "flalign", "flalign*",
];

fn symbol_accent(name: &str) -> Option<char> {
    Some(match name {
        "'" => '\u{301}',
        "`" => '\u{300}',
        "^" => '\u{302}',
        "\"" => '\u{308}',
        "~" => '\u{303}',
        "=" => '\u{304}',
        "." => '\u{307}',
        _ => return None,
    })
}

fn letter_accent(name: &str) -> Option<char> {
    Some(match name {
        "u" => '\u{306}',
        "v" => '\u{30C}',
        "H" => '\u{30B}',
        "c" => '\u{327}',
        "k" => '\u{328}',
        "r" => '\u{30A}',
        "d" => '\u{323}',
        "b" => '\u{331}',
        _ => return None,
    })
}

/// A token stream where every text character is its own item, so commands
/// can consume single characters of following text (accents, `*`).
#[derive(Clone, Copy)]
enum Item<'t> {
    Char(char, usize),
    Tok(&'t TexToken),
}

fn expand(tokens: &[TexToken]) -> Vec<Item<'_>> {
    let mut items = Vec::with_capacity(tokens.len() * 4);
    for tok in tokens {
        if tok.kind == TokenKind::Text {
            items.extend(tok.lexeme.chars().enumerate().map(|(k, c)| Item::Char(c, tok.span.start + k)));
        } else {
            items.push(Item::Tok(tok));
        }
    }
    items
}

struct Emit {
    ch: char,
    src: Range<usize>,
    hard: bool,
}

#[derive(Default)]
struct State {
    out: Vec<Emit>,
    warnings: Vec<RenderWarning>,
    groups: Vec<(usize, Option<char>)>,
    math: bool,
    eat_newline: bool,
}

impl State {
    fn emit(&mut self, ch: char, src: Range<usize>) {
        self.out.push(Emit { ch, src, hard: false });
    }

    fn emit_str(&mut self, s: &str, src: Range<usize>) {
        for ch in s.chars() {
            self.emit(ch, src.clone());
        }
    }

    fn hard_break(&mut self, src: Range<usize>) {
        self.out.push(Emit {
            ch: '\n',
            src,
            hard: true,
        });
    }
}

fn is_group_open(item: Option<&Item<'_>>) -> bool {
    matches!(item, Some(Item::Tok(t)) if t.kind == TokenKind::GroupOpen)
}

/// Index of the item closing the group opened at `open`.
fn matching_close(items: &[Item<'_>], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, item) in items.iter().enumerate().skip(open) {
        if let Item::Tok(t) = item {
            match t.kind {
                TokenKind::GroupOpen => depth += 1,
                TokenKind::GroupClose => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(j);
                    }
                }
                _ => {}
            }
        }
    }
    None
}

fn item_end(item: &Item<'_>) -> usize {
    match item {
        Item::Char(_, pos) => pos + 1,
        Item::Tok(t) => t.span.end,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Renderer {
    symbols: SymbolTable,
}

impl Renderer {
    pub fn new(symbols: SymbolTable) -> Self {
        Self { symbols }
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn render(&self, fragment: &str) -> RenderedText {
        let tokens = tokenize_tex(fragment);
        let items = expand(&tokens);
        let mut st = State::default();
        let mut i = 0;
        while i < items.len() {
            i = self.step(&items, i, &mut st);
        }
        for (offset, _) in std::mem::take(&mut st.groups) {
            st.warnings.push(RenderWarning {
                kind: RenderWarningKind::UnbalancedBrace,
                offset,
                detail: "unclosed group".into(),
            });
        }
        let (text, segments) = normalize(st.out);
        RenderedText {
            text,
            map: OffsetMap { segments },
            warnings: st.warnings,
        }
    }

    fn step(&self, items: &[Item<'_>], i: usize, st: &mut State) -> usize {
        match items[i] {
            Item::Char(c, pos) => {
                if st.eat_newline {
                    st.eat_newline = c == '\n' || c == ' ' || c == '\t';
                    if st.eat_newline {
                        return i + 1;
                    }
                }
                self.text_char(items, i, c, pos, st)
            }
            Item::Tok(tok) => {
                st.eat_newline = false;
                match &tok.kind {
                    TokenKind::Command(name) => self.command(items, i, tok, name, st),
                    TokenKind::GroupOpen => {
                        st.groups.push((tok.span.start, None));
                        i + 1
                    }
                    TokenKind::GroupClose => {
                        match st.groups.pop() {
                            Some((_, Some(ch))) => st.emit(ch, tok.span.clone()),
                            Some((_, None)) => {}
                            None => st.warnings.push(RenderWarning {
                                kind: RenderWarningKind::UnbalancedBrace,
                                offset: tok.span.start,
                                detail: "unmatched closing brace".into(),
                            }),
                        }
                        i + 1
                    }
                    TokenKind::MathShift => {
                        st.math = !st.math;
                        i + 1
                    }
                    TokenKind::EnvBegin { name, .. } | TokenKind::EnvEnd { name } => {
                        let begin = matches!(tok.kind, TokenKind::EnvBegin { .. });
                        if MATH_ENVS.contains(&name.as_str()) {
                            st.math = begin;
                        }
                        if DISPLAY_ENVS.contains(&name.as_str()) {
                            st.hard_break(tok.span.clone());
                        } else {
                            st.emit(' ', tok.span.clone());
                        }
                        let column_spec = begin && matches!(name.as_str(), "tabular" | "array" | "tabularx");
                        if column_spec && is_group_open(items.get(i + 1)) {
                            if let Some(close) = matching_close(items, i + 1) {
                                return close + 1;
                            }
                        }
                        i + 1
                    }
                    TokenKind::Comment => {
                        st.eat_newline = true;
                        i + 1
                    }
                    TokenKind::Verbatim => {
                        emit_verbatim(tok, st);
                        i + 1
                    }
                    TokenKind::Text => unreachable!("text tokens are expanded"),
                }
            }
        }
    }

    fn text_char(&self, items: &[Item<'_>], i: usize, c: char, pos: usize, st: &mut State) -> usize {
        let next_is = |k: usize, want: char| matches!(items.get(i + k), Some(Item::Char(c, _)) if *c == want);
        match c {
            '~' | '&' => st.emit(' ', pos..pos + 1),
            '-' if !st.math => {
                let run = if next_is(1, '-') { if next_is(2, '-') { 3 } else { 2 } } else { 1 };
                let ch = match run {
                    3 => '—',
                    2 => '–',
                    _ => '-',
                };
                st.emit(ch, pos..pos + run);
                return i + run;
            }
            '`' if !st.math => {
                if next_is(1, '`') {
                    st.emit('“', pos..pos + 2);
                    return i + 2;
                }
                st.emit('‘', pos..pos + 1);
            }
            '\'' if !st.math && next_is(1, '\'') => {
                st.emit('”', pos..pos + 2);
                return i + 2;
            }
            _ => st.emit(c, pos..pos + 1),
        }
        i + 1
    }

    fn command(&self, items: &[Item<'_>], i: usize, tok: &TexToken, name: &str, st: &mut State) -> usize {
        let span = tok.span.clone();
        match name {
            "\\" => {
                st.hard_break(span);
                return i + 1;
            }
            "%" | "&" | "$" | "#" | "_" | "{" | "}" => {
                st.emit_str(name, span);
                return i + 1;
            }
            " " | "," | ";" | ":" | ">" => {
                st.emit(' ', span);
                return i + 1;
            }
            "|" => {
                st.emit('‖', span);
                return i + 1;
            }
            "(" | "[" => {
                st.math = true;
                st.emit(' ', span);
                return i + 1;
            }
            ")" | "]" => {
                st.math = false;
                st.emit(' ', span);
                return i + 1;
            }
            _ => {}
        }
        if let Some(mark) = symbol_accent(name) {
            return self.accent(items, i, mark, false, st);
        }
        if let Some(mark) = letter_accent(name) {
            if let Some(next) = self.try_accent(items, i, mark, true, st) {
                return next;
            }
        }
        if HARD_BREAK.contains(&name) {
            st.hard_break(span);
            return i + 1;
        }
        let mut next = i + 1;
        if matches!(items.get(next), Some(Item::Char('*', _))) {
            next += 1;
        }
        if DROP_ARGUMENT.contains(&name) && is_group_open(items.get(next)) {
            if let Some(close) = matching_close(items, next) {
                return close + 1;
            }
        }
        if REFERENCE.contains(&name) {
            st.warnings.push(RenderWarning {
                kind: RenderWarningKind::ReferenceCommand,
                offset: span.start,
                detail: format!("\\{name} argument kept as text"),
            });
        }
        match name {
            "frac" | "dfrac" | "tfrac" | "binom" if is_group_open(items.get(next)) => {
                let sep = if name == "binom" { ',' } else { '/' };
                if let Item::Tok(open) = items[next] {
                    st.groups.push((open.span.start, Some(sep)));
                }
                return next + 1;
            }
            "sqrt" => st.emit('√', span),
            _ => {
                if let Some(sym) = self.symbols.get(name) {
                    st.emit_str(sym, span);
                }
            }
        }
        next
    }

    fn accent(&self, items: &[Item<'_>], i: usize, mark: char, letter: bool, st: &mut State) -> usize {
        self.try_accent(items, i, mark, letter, st).unwrap_or(i + 1)
    }

    /// Applies an accent to the following character or single-character
    /// group. Returns `None` when there is nothing to accent.
    fn try_accent(&self, items: &[Item<'_>], i: usize, mark: char, letter: bool, st: &mut State) -> Option<usize> {
        let Item::Tok(accent_tok) = items[i] else { return None };
        let start = accent_tok.span.start;
        let mut j = i + 1;
        if letter {
            while matches!(items.get(j), Some(Item::Char(' ', _))) {
                j += 1;
            }
            // A letter accent needs either a group or a space before its base.
            if j == i + 1 && !is_group_open(items.get(j)) {
                return None;
            }
        }
        let base_of = |item: &Item<'_>| match item {
            Item::Char(c, _) if !c.is_whitespace() => Some(*c),
            Item::Tok(t) if t.is_command("i") => Some('i'),
            Item::Tok(t) if t.is_command("j") => Some('j'),
            _ => None,
        };
        let (base, last) = if is_group_open(items.get(j)) {
            let close = matching_close(items, j)?;
            if close != j + 2 {
                return None;
            }
            (base_of(&items[j + 1])?, close)
        } else {
            (base_of(items.get(j)?)?, j)
        };
        let src = start..item_end(&items[last]);
        match compose(base, mark) {
            Some(ch) => st.emit(ch, src),
            None => {
                st.emit(base, src.clone());
                st.emit(mark, src);
            }
        }
        Some(last + 1)
    }
}

fn emit_verbatim(tok: &TexToken, st: &mut State) {
    let chars: Vec<char> = tok.lexeme.chars().collect();
    let (from, to) = if tok.lexeme.starts_with("\\verb") {
        let delim_at = if chars.get(5) == Some(&'*') { 6 } else { 5 };
        (delim_at + 1, chars.len() - 1)
    } else {
        let open_end = chars.iter().position(|&c| c == '}').map_or(0, |p| p + 1);
        let close_len = tok.lexeme.rfind("\\end{").map_or(0, |b| tok.lexeme[b..].chars().count());
        (open_end, chars.len().saturating_sub(close_len).max(open_end))
    };
    for (k, &c) in chars.iter().enumerate().take(to).skip(from) {
        let pos = tok.span.start + k;
        st.emit(c, pos..pos + 1);
    }
}

/// Collapses whitespace, trims both ends and builds the offset segments.
fn normalize(out: Vec<Emit>) -> (String, Vec<Segment>) {
    let mut chars: Vec<(char, Range<usize>)> = Vec::with_capacity(out.len());
    let mut k = 0;
    while k < out.len() {
        let e = &out[k];
        if !(e.hard || e.ch.is_whitespace()) {
            chars.push((e.ch, e.src.clone()));
            k += 1;
            continue;
        }
        let start = k;
        let mut hard = false;
        let mut newlines = 0;
        while k < out.len() && (out[k].hard || out[k].ch.is_whitespace()) {
            hard |= out[k].hard;
            newlines += usize::from(!out[k].hard && out[k].ch == '\n');
            k += 1;
        }
        if chars.is_empty() || k == out.len() {
            continue;
        }
        let ch = if hard || newlines >= 2 { '\n' } else { ' ' };
        chars.push((ch, out[start].src.start..out[k - 1].src.end));
    }

    let mut text = String::with_capacity(chars.len());
    let mut segments: Vec<Segment> = Vec::new();
    for (idx, (ch, src)) in chars.into_iter().enumerate() {
        text.push(ch);
        if let Some(last) = segments.last_mut() {
            if last.latex == src {
                last.text.end = idx + 1;
                continue;
            }
            let cur = Segment {
                latex: src.clone(),
                text: idx..idx + 1,
            };
            if last.is_identity() && cur.is_identity() && last.latex.end == src.start {
                last.latex.end = src.end;
                last.text.end = idx + 1;
                continue;
            }
        }
        segments.push(Segment {
            latex: src,
            text: idx..idx + 1,
        });
    }
    (text, segments)
}

/// Renders with the built-in symbol table.
pub fn render_plain_text(fragment: &str) -> RenderedText {
    Renderer::default().render(fragment)
}
