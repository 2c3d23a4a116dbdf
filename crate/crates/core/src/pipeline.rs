//! Per-block glue between extraction and rendering, plus JSONL helpers.

use std::io::{self, BufRead, Write};
use std::ops::Range;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{read_paper_source, CorpusError, PaperEntry};
use crate::diag::Diagnostic;
use crate::extract::{extract_definienda_spans, extract_definition_blocks, DefinitionBlock, SpanKind};
use crate::render::Renderer;
use crate::text::find_word_occurrences;
use crate::timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSpan {
    pub start: usize,
    pub end: usize,
    pub term: String,
}

/// One line of the definitions JSONL file. Span offsets are characters in
/// `text`; spans are unfiltered candidates in text order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinitionRecord {
    pub paper_id: String,
    pub block_index: usize,
    pub latex: String,
    pub optional_arg: Option<String>,
    pub text: String,
    pub spans: Vec<RecordSpan>,
    #[serde(with = "timestamp::iso_opt", default)]
    pub last_updated: Option<DateTime<Utc>>,
}

impl DefinitionRecord {
    pub fn id(&self) -> String {
        format!("{}#{}", self.paper_id, self.block_index)
    }
}

/// Renders a block and maps its candidate spans into the rendered text.
/// Optional-argument terms are located by a case-insensitive word search;
/// the first occurrence is tagged unless emphasis already covers it.
pub fn process_block(block: &DefinitionBlock, renderer: &Renderer) -> (DefinitionRecord, Vec<Diagnostic>) {
    let rendered = renderer.render(&block.raw_latex);
    let mut warnings: Vec<Diagnostic> = rendered
        .warnings
        .iter()
        .filter(|w| w.kind != crate::render::RenderWarningKind::ReferenceCommand)
        .map(|w| Diagnostic::new(&block.paper_id, "render", format!("block {}: {}", block.block_index, w.detail)).at(w.offset))
        .collect();
    let (latex_spans, span_warnings) = extract_definienda_spans(block);
    warnings.extend(span_warnings);

    let mut ranges: Vec<Range<usize>> = Vec::new();
    let mut deferred = Vec::new();
    for span in &latex_spans {
        if span.kind == SpanKind::OptionalArg {
            deferred.push(span);
            continue;
        }
        match rendered.map_span(span.range.clone()) {
            Ok(r) => ranges.push(r),
            Err(e) => warnings.push(
                Diagnostic::new(&block.paper_id, "span-vanished", format!("block {}: {e}", block.block_index))
                    .at(span.range.start),
            ),
        }
    }
    for span in deferred {
        let term = renderer.render(&span.term_latex).text;
        match find_word_occurrences(&rendered.text, &term, true).into_iter().next() {
            Some(r) if ranges.iter().any(|o| o.start < r.end && r.start < o.end) => {}
            Some(r) => ranges.push(r),
            None => warnings.push(Diagnostic::new(
                &block.paper_id,
                "optional-arg-not-in-text",
                format!("block {}: {term:?}", block.block_index),
            )),
        }
    }
    ranges.sort_by_key(|r| (r.start, r.end));
    ranges.dedup();

    let spans = ranges
        .into_iter()
        .map(|r| RecordSpan {
            term: rendered.slice(r.clone()),
            start: r.start,
            end: r.end,
        })
        .collect();
    let record = DefinitionRecord {
        paper_id: block.paper_id.clone(),
        block_index: block.block_index,
        latex: block.raw_latex.clone(),
        optional_arg: block.optional_arg.clone(),
        text: rendered.text,
        spans,
        last_updated: Some(block.last_updated),
    };
    (record, warnings)
}

/// Reads, extracts and renders one paper.
pub fn extract_paper(
    entry: &PaperEntry,
    renderer: &Renderer,
    env_names: &[String],
) -> Result<(Vec<DefinitionRecord>, Vec<Diagnostic>), CorpusError> {
    let source = read_paper_source(entry)?;
    let mut warnings = source.warnings;
    let (blocks, block_warnings) = extract_definition_blocks(entry, &source.text, env_names);
    warnings.extend(block_warnings);
    let mut records = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let (rec, w) = process_block(block, renderer);
        records.push(rec);
        warnings.extend(w);
    }
    Ok((records, warnings))
}

/// Outcome of extracting a whole corpus; `failed` lists papers that could
/// not be read.
#[derive(Debug, Default)]
pub struct CorpusExtraction {
    pub records: Vec<DefinitionRecord>,
    pub warnings: Vec<Diagnostic>,
    pub processed: usize,
    pub failed: Vec<(String, String)>,
}

/// Extracts papers in parallel, keeping manifest order.
pub fn extract_corpus(entries: &[PaperEntry], renderer: &Renderer, env_names: &[String]) -> CorpusExtraction {
    let results: Vec<_> = entries
        .par_iter()
        .map(|e| (e.paper_id.clone(), extract_paper(e, renderer, env_names)))
        .collect();
    let mut out = CorpusExtraction::default();
    for (id, res) in results {
        match res {
            Ok((records, warnings)) => {
                log::debug!("{id}: {} definitions", records.len());
                out.processed += 1;
                out.records.extend(records);
                out.warnings.extend(warnings);
            }
            Err(e) => {
                log::debug!("{id}: {e}");
                out.warnings.push(Diagnostic::new(&id, "paper-failed", e.to_string()));
                out.failed.push((id, e.to_string()));
            }
        }
    }
    log::info!("extracted {} definitions from {} papers", out.records.len(), out.processed);
    out
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Schema {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Schema { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::extract_blocks_from;
    use crate::timestamp::parse_timestamp;

    fn records(src: &str) -> Vec<DefinitionRecord> {
        let when = parse_timestamp("2020-01-01").unwrap();
        let (blocks, _) = extract_blocks_from("p", when, src, &["definition".to_string()]);
        let r = Renderer::default();
        blocks.iter().map(|b| process_block(b, &r).0).collect()
    }

    fn terms(rec: &DefinitionRecord) -> Vec<&str> {
        rec.spans.iter().map(|s| s.term.as_str()).collect()
    }

    #[test]
    fn emphasis_maps_to_text() {
        let recs = records("\\begin{definition}A \\emph{spread} of $G$ is a set of \\textit{components}.\\end{definition}");
        assert_eq!(terms(&recs[0]), ["spread", "components"]);
        for s in &recs[0].spans {
            assert_eq!(crate::text::char_slice(&recs[0].text, s.start..s.end), s.term);
        }
    }

    #[test]
    fn compound_term() {
        let recs = records("\\begin{definition}Two graphs are \\emph{non}-k-equivalent if ...\\end{definition}");
        assert_eq!(terms(&recs[0]), ["non-k-equivalent"]);
    }

    #[test]
    fn optional_argument_located() {
        let recs = records("\\begin{definition}[Graph coloring]A graph coloring is a map.\\end{definition}");
        assert_eq!(terms(&recs[0]), ["graph coloring"]);
        let recs = records("\\begin{definition}[Hall condition]A family is nice.\\end{definition}");
        assert!(recs[0].spans.is_empty());
    }

    #[test]
    fn optional_argument_already_emphasized() {
        let recs = records("\\begin{definition}[spread]A \\emph{spread} is a spread.\\end{definition}");
        assert_eq!(terms(&recs[0]), ["spread"]);
        assert_eq!(recs[0].spans[0].start, 2);
    }

    #[test]
    fn jsonl_round_trip_and_schema_error() {
        let recs = records("\\begin{definition}A \\emph{spread}.\\end{definition}");
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"paper_id":"p","block_index":0,"latex":"#));
        assert!(text.ends_with("\"last_updated\":\"2020-01-01T00:00:00Z\"}\n"));
        let back: Vec<DefinitionRecord> = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, recs);
        let bad = format!("{text}{{\"paper_id\": 3}}\n");
        match read_jsonl::<DefinitionRecord, _>(bad.as_bytes()) {
            Err(JsonlError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
