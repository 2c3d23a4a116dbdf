//! Discovery of per-paper LaTeX sources and the corpus manifest.
//!
//! A corpus root holds one directory per paper, named by its identifier.
//! Each paper's entry file is the first `.tex` file (in path order) that
//! contains `\documentclass`, or failing that `\begin{document}`. All other
//! `.tex` files in a paper directory are auxiliary and may be pulled in by
//! one level of `\input`/`\include` resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::tex::{strip_comments, tokenize_tex, TokenKind};
use crate::timestamp::{self, parse_timestamp};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    RootMissing(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("metadata line {line}: {detail}")]
    Metadata { line: usize, detail: String },
    #[error("{path}: undecodable byte at offset {offset}")]
    Decode { path: PathBuf, offset: usize },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampSource {
    Metadata,
    /// Fallback to the entry file's modification time.
    Mtime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperEntry {
    pub paper_id: String,
    pub entry_tex: PathBuf,
    pub aux_tex: Vec<PathBuf>,
    #[serde(with = "timestamp::iso")]
    pub last_updated: DateTime<Utc>,
    pub category: String,
    pub timestamp_source: TimestampSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: PathBuf,
    /// Newest modification time among the scanned entry files, so rescanning
    /// an unchanged tree reproduces the manifest byte for byte.
    #[serde(with = "timestamp::iso")]
    pub scanned_at: DateTime<Utc>,
    pub entries: Vec<PaperEntry>,
}

impl CorpusManifest {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("manifest serializes");
        out.push('\n');
        out
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperEntry> {
        self.entries
            .binary_search_by(|e| e.paper_id.as_str().cmp(paper_id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub manifest: CorpusManifest,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataRow {
    pub last_updated: DateTime<Utc>,
    pub category: Option<String>,
}

/// Parses the `paper_id<TAB>timestamp[<TAB>category]` table. Blank lines,
/// `#` comments and a leading `paper_id` header row are skipped.
pub fn parse_metadata(contents: &str) -> Result<BTreeMap<String, MetadataRow>, CorpusError> {
    let mut rows = BTreeMap::new();
    for (i, line) in contents.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if rows.is_empty() && cols[0].trim() == "paper_id" {
            continue;
        }
        if cols.len() < 2 {
            return Err(CorpusError::Metadata {
                line: line_no,
                detail: "expected paper_id<TAB>timestamp".into(),
            });
        }
        let paper_id = cols[0].trim();
        if paper_id.is_empty() {
            return Err(CorpusError::Metadata {
                line: line_no,
                detail: "empty paper_id".into(),
            });
        }
        let last_updated = parse_timestamp(cols[1]).ok_or_else(|| CorpusError::Metadata {
            line: line_no,
            detail: format!("invalid timestamp {:?}", cols[1]),
        })?;
        let category = cols.get(2).map(|c| c.trim().to_string()).filter(|c| !c.is_empty());
        rows.insert(
            paper_id.to_string(),
            MetadataRow {
                last_updated,
                category,
            },
        );
    }
    Ok(rows)
}

/// Decodes as UTF-8, falling back to Latin-1. Bytes in the C1 control range
/// (0x80-0x9F) never occur in genuine Latin-1 text, so their presence means
/// the file is in neither encoding.
pub fn decode_source(bytes: &[u8]) -> Result<String, usize> {
    match std::str::from_utf8(bytes) {
        Ok(s) => Ok(s.to_string()),
        Err(_) => match bytes.iter().position(|b| (0x80..0xA0).contains(b)) {
            Some(offset) => Err(offset),
            None => Ok(bytes.iter().map(|&b| b as char).collect()),
        },
    }
}

fn read_decoded(path: &Path) -> Result<String, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    decode_source(&bytes).map_err(|offset| CorpusError::Decode {
        path: path.to_path_buf(),
        offset,
    })
}

fn collect_tex_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_tex_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tex")) {
            out.push(path);
        }
    }
    Ok(())
}

fn mtime(path: &Path) -> Option<DateTime<Utc>> {
    let modified = fs::metadata(path).ok()?.modified().ok()?;
    Some(DateTime::<Utc>::from(modified))
}

struct ScannedPaper {
    entry: Option<(PaperEntry, DateTime<Utc>)>,
    warnings: Vec<Diagnostic>,
}

fn scan_paper(dir: &Path, paper_id: &str, metadata: &BTreeMap<String, MetadataRow>) -> ScannedPaper {
    let mut warnings = Vec::new();
    let mut files = Vec::new();
    if let Err(e) = collect_tex_files(dir, &mut files) {
        warnings.push(Diagnostic::new(paper_id, "unreadable-dir", e.to_string()));
        return ScannedPaper { entry: None, warnings };
    }
    files.sort();

    let mut readable = Vec::new();
    let mut with_documentclass = None;
    let mut with_begin_document = None;
    for path in files {
        match read_decoded(&path) {
            Ok(text) => {
                let text = strip_comments(&text);
                if with_documentclass.is_none() && text.contains("\\documentclass") {
                    with_documentclass = Some(readable.len());
                }
                if with_begin_document.is_none() && text.contains("\\begin{document}") {
                    with_begin_document = Some(readable.len());
                }
                readable.push(path);
            }
            Err(e) => warnings.push(Diagnostic::new(paper_id, "unreadable-file", e.to_string())),
        }
    }
    let Some(entry_idx) = with_documentclass.or(with_begin_document) else {
        warnings.push(Diagnostic::new(
            paper_id,
            "no-entry-file",
            "no .tex file contains \\documentclass or \\begin{document}",
        ));
        return ScannedPaper { entry: None, warnings };
    };
    let entry_tex = readable.remove(entry_idx);
    let file_mtime = mtime(&entry_tex).unwrap_or_else(timestamp::epoch);

    let (last_updated, category, timestamp_source) = match metadata.get(paper_id) {
        Some(row) => (
            row.last_updated,
            row.category.clone().unwrap_or_default(),
            TimestampSource::Metadata,
        ),
        None => {
            warnings.push(Diagnostic::new(
                paper_id,
                "timestamp-fallback",
                "paper missing from metadata; using file modification time",
            ));
            (file_mtime, String::new(), TimestampSource::Mtime)
        }
    };
    ScannedPaper {
        entry: Some((
            PaperEntry {
                paper_id: paper_id.to_string(),
                entry_tex,
                aux_tex: readable,
                last_updated,
                category,
                timestamp_source,
            },
            file_mtime,
        )),
        warnings,
    }
}

/// Builds the manifest for every paper directory under `root`.
pub fn scan_corpus(root: &Path, metadata: Option<&Path>) -> Result<ScanResult, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::RootMissing(root.to_path_buf()));
    }
    let metadata = match metadata {
        Some(path) => parse_metadata(&read_decoded(path)?)?,
        None => BTreeMap::new(),
    };

    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| CorpusError::io(root, e))? {
        let path = entry.map_err(|e| CorpusError::io(root, e))?.path();
        if path.is_dir() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                dirs.push((name.to_string(), path.clone()));
            }
        }
    }
    dirs.sort();

    let scanned: Vec<ScannedPaper> = dirs
        .par_iter()
        .map(|(id, dir)| scan_paper(dir, id, &metadata))
        .collect();

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    let mut newest = timestamp::epoch();
    for paper in scanned {
        warnings.extend(paper.warnings);
        if let Some((entry, file_mtime)) = paper.entry {
            newest = newest.max(file_mtime);
            entries.push(entry);
        }
    }
    log::info!("{} of {} paper directories have an entry file", entries.len(), dirs.len());
    Ok(ScanResult {
        manifest: CorpusManifest {
            root: root.to_path_buf(),
            scanned_at: newest,
            entries,
        },
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperSource {
    pub text: String,
    /// Auxiliary files inlined into `text`, in order of appearance.
    pub inlined: Vec<PathBuf>,
    pub warnings: Vec<Diagnostic>,
}

fn lexical_normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for comp in path.components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// Reads the entry file and inlines `\input{X}`/`\include{X}` targets found
/// among the entry's auxiliary files. Only one level is resolved; inlined
/// content is not scanned again.
pub fn read_paper_source(entry: &PaperEntry) -> Result<PaperSource, CorpusError> {
    let text = read_decoded(&entry.entry_tex)?;
    let base = entry.entry_tex.parent().unwrap_or(Path::new(""));
    let aux: BTreeSet<PathBuf> = entry.aux_tex.iter().map(|p| lexical_normalize(p)).collect();
    let lookup = |target: &str| -> Option<PathBuf> {
        let direct = lexical_normalize(&base.join(target));
        let with_ext = lexical_normalize(&base.join(format!("{target}.tex")));
        [direct, with_ext].into_iter().find(|p| aux.contains(p))
    };

    let tokens = tokenize_tex(&text);
    let mut out = String::with_capacity(text.len());
    let mut inlined = Vec::new();
    let mut warnings = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let is_input = tok.is_command("input") || tok.is_command("include");
        if is_input
            && tokens.get(i + 1).map(|t| &t.kind) == Some(&TokenKind::GroupOpen)
            && tokens.get(i + 2).map(|t| &t.kind) == Some(&TokenKind::Text)
            && tokens.get(i + 3).map(|t| &t.kind) == Some(&TokenKind::GroupClose)
        {
            let target = tokens[i + 2].lexeme.trim();
            match lookup(target) {
                Some(path) => {
                    out.push_str(&read_decoded(&path)?);
                    inlined.push(path);
                }
                None => {
                    warnings.push(
                        Diagnostic::new(&entry.paper_id, "missing-input", format!("target {target:?} not found"))
                            .at(tok.span.start),
                    );
                    for t in &tokens[i..i + 4] {
                        out.push_str(&t.lexeme);
                    }
                }
            }
            i += 4;
            continue;
        }
        out.push_str(&tok.lexeme);
        i += 1;
    }
    Ok(PaperSource {
        text: out,
        inlined,
        warnings,
    })
}
