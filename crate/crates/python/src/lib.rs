//! Python bindings for the defitex pipeline and evaluator.

use std::collections::HashMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use defitex::dataset::{self, BuildOptions, Iob2Tag, LabeledExample};
use defitex::eval::{self, EvalReport, PredictionRecord};
use defitex::extract::{self, Verdict};
use defitex::pipeline::{self, DefinitionRecord};
use defitex::render::{self, SymbolTable};
use defitex::timestamp;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, name = "Renderer")]
struct PyRenderer {
    inner: render::Renderer,
}

#[pymethods]
impl PyRenderer {
    /// `symbols` maps `\command` names to replacement text, on top of the
    /// built-in table.
    #[new]
    #[pyo3(signature = (symbols = None))]
    fn new(symbols: Option<HashMap<String, String>>) -> Self {
        let mut table = SymbolTable::builtin();
        for (k, v) in symbols.unwrap_or_default() {
            table.insert(&k, v);
        }
        Self {
            inner: render::Renderer::new(table),
        }
    }

    fn render(&self, latex: &str) -> PyRendered {
        PyRendered {
            inner: self.inner.render(latex),
        }
    }
}

#[pyclass(frozen, name = "Rendered")]
struct PyRendered {
    inner: render::RenderedText,
}

#[pymethods]
impl PyRendered {
    #[getter]
    fn text(&self) -> &str {
        &self.inner.text
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.iter().map(|w| w.detail.clone()).collect()
    }

    /// Maps a character range of the LaTeX input to the rendered text.
    fn map_span(&self, start: usize, end: usize) -> PyResult<(usize, usize)> {
        let r = self.inner.map_span(start..end).map_err(value_err)?;
        Ok((r.start, r.end))
    }

    fn __repr__(&self) -> String {
        format!("Rendered({:?})", self.inner.text)
    }
}

#[pyclass(frozen, from_py_object, name = "Definition")]
#[derive(Clone)]
struct PyDefinition {
    inner: DefinitionRecord,
}

#[pymethods]
impl PyDefinition {
    #[getter]
    fn id(&self) -> String {
        self.inner.id()
    }

    #[getter]
    fn paper_id(&self) -> &str {
        &self.inner.paper_id
    }

    #[getter]
    fn block_index(&self) -> usize {
        self.inner.block_index
    }

    #[getter]
    fn latex(&self) -> &str {
        &self.inner.latex
    }

    #[getter]
    fn optional_arg(&self) -> Option<&str> {
        self.inner.optional_arg.as_deref()
    }

    #[getter]
    fn text(&self) -> &str {
        &self.inner.text
    }

    /// `(start, end, term)` triples, character offsets into `text`.
    #[getter]
    fn spans(&self) -> Vec<(usize, usize, String)> {
        self.inner.spans.iter().map(|s| (s.start, s.end, s.term.clone())).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Definition({}, {:?})", self.inner.id(), self.inner.text)
    }
}

#[pyclass(frozen, from_py_object, name = "Example")]
#[derive(Clone)]
struct PyExample {
    inner: LabeledExample,
}

#[pymethods]
impl PyExample {
    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn text(&self) -> &str {
        &self.inner.text
    }

    #[getter]
    fn tokens(&self) -> Vec<String> {
        self.inner.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    #[getter]
    fn tags(&self) -> Vec<&'static str> {
        self.inner.tags.iter().map(|t| t.as_str()).collect()
    }

    #[getter]
    fn terms(&self) -> Vec<String> {
        self.inner.terms.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_record()).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Example({}, terms={:?})", self.inner.id, self.inner.terms)
    }
}

#[pyclass(frozen, name = "Report")]
struct PyReport {
    inner: EvalReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn precision(&self) -> f64 {
        self.inner.precision
    }

    #[getter]
    fn recall(&self) -> f64 {
        self.inner.recall
    }

    #[getter]
    fn f1(&self) -> f64 {
        self.inner.f1
    }

    #[getter]
    fn tp(&self) -> usize {
        self.inner.tp
    }

    #[getter]
    fn tp_split(&self) -> usize {
        self.inner.tp_split
    }

    #[getter]
    fn cut_off(&self) -> usize {
        self.inner.cut_off
    }

    #[getter]
    fn too_long(&self) -> usize {
        self.inner.too_long
    }

    #[getter]
    fn n_expected(&self) -> usize {
        self.inner.n_expected
    }

    #[getter]
    fn n_extracted(&self) -> usize {
        self.inner.n_extracted
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(P={:.4}, R={:.4}, F1={:.4})",
            self.inner.precision, self.inner.recall, self.inner.f1
        )
    }
}

/// Returns `None` for a plausible term, else the rejection reason.
#[pyfunction]
fn filter_noise(term: &str) -> Option<&'static str> {
    match extract::filter_noise(term) {
        Verdict::Keep => None,
        Verdict::Reject(r) => Some(r.as_str()),
    }
}

/// `(surface, start, end)` per token.
#[pyfunction]
fn tokenize_text(text: &str) -> Vec<(String, usize, usize)> {
    dataset::tokenize_text(text)
        .into_iter()
        .map(|t| (t.surface, t.range.start, t.range.end))
        .collect()
}

/// IOB2 tags for the tokens of `text`, given character spans of terms.
#[pyfunction]
fn label_iob2(text: &str, spans: Vec<(usize, usize)>) -> PyResult<Vec<&'static str>> {
    let tokens = dataset::tokenize_text(text);
    let ranges: Vec<_> = spans.into_iter().map(|(a, b)| a..b).collect();
    let labeling = dataset::label_iob2(&tokens, &ranges, text.chars().count()).map_err(value_err)?;
    Ok(labeling.tags.iter().map(|t| t.as_str()).collect())
}

#[pyfunction]
fn is_valid_iob2(tags: Vec<String>) -> PyResult<bool> {
    let parsed: Vec<Iob2Tag> = tags
        .iter()
        .map(|t| serde_json::from_value(serde_json::Value::String(t.clone())).map_err(value_err))
        .collect::<PyResult<_>>()?;
    Ok(dataset::is_valid_iob2(&parsed))
}

/// Definition blocks of one LaTeX source with rendered text and candidate
/// definienda spans.
#[pyfunction]
#[pyo3(signature = (source, paper_id = "paper", env_names = None, last_updated = None, renderer = None))]
fn extract_definitions(
    source: &str,
    paper_id: &str,
    env_names: Option<Vec<String>>,
    last_updated: Option<&str>,
    renderer: Option<&PyRenderer>,
) -> PyResult<Vec<PyDefinition>> {
    let ts = match last_updated {
        Some(raw) => timestamp::parse_timestamp(raw).ok_or_else(|| value_err(format!("bad timestamp {raw:?}")))?,
        None => timestamp::epoch(),
    };
    let envs = env_names.unwrap_or_else(|| vec![extract::DEFAULT_ENV.to_string()]);
    let default;
    let renderer = match renderer {
        Some(r) => &r.inner,
        None => {
            default = render::Renderer::new(SymbolTable::builtin());
            &default
        }
    };
    let (blocks, _) = extract::extract_blocks_from(paper_id, ts, source, &envs);
    Ok(blocks
        .iter()
        .map(|b| PyDefinition {
            inner: pipeline::process_block(b, renderer).0,
        })
        .collect())
}

/// Filters terms, tokenizes and labels definitions into examples.
#[pyfunction]
#[pyo3(signature = (definitions, max_tokens = dataset::DEFAULT_MAX_TOKENS, drop_empty = false))]
fn build_examples(definitions: Vec<PyDefinition>, max_tokens: usize, drop_empty: bool) -> Vec<PyExample> {
    let records: Vec<_> = definitions.into_iter().map(|d| d.inner).collect();
    let opts = BuildOptions {
        max_tokens,
        drop_empty,
        ..BuildOptions::default()
    };
    dataset::build_examples(&records, &opts)
        .examples
        .into_iter()
        .map(|inner| PyExample { inner })
        .collect()
}

/// Reads a dataset JSONL file.
#[pyfunction]
fn load_dataset(path: &str) -> PyResult<Vec<PyExample>> {
    let file = std::fs::File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    let records: Vec<dataset::ExampleRecord> =
        pipeline::read_jsonl(std::io::BufReader::new(file)).map_err(value_err)?;
    records
        .into_iter()
        .map(|r| r.into_example().map(|inner| PyExample { inner }).map_err(value_err))
        .collect()
}

/// Scores predicted terms (keyed by example id) against examples.
#[pyfunction]
fn evaluate(examples: Vec<PyExample>, predictions: HashMap<String, Vec<String>>) -> PyResult<PyReport> {
    let gt: Vec<_> = examples.into_iter().map(|e| e.inner).collect();
    let mut preds: Vec<_> = predictions
        .into_iter()
        .map(|(id, terms)| PredictionRecord { id, terms })
        .collect();
    preds.sort_by(|a, b| a.id.cmp(&b.id));
    let (inner, _) = eval::evaluate_run(&gt, &preds).map_err(value_err)?;
    Ok(PyReport { inner })
}

/// Scores one list of extracted terms against one list of expected terms.
#[pyfunction]
fn score_terms(expected: Vec<String>, extracted: Vec<String>) -> PyResult<PyReport> {
    let expected = eval::dedupe_terms(&expected);
    let extracted = eval::dedupe_terms(&extracted);
    let (counts, _) = eval::count_matches(&expected, &extracted);
    let inner = EvalReport::from_counts(counts, extracted.len(), expected.len()).map_err(value_err)?;
    Ok(PyReport { inner })
}

/// `(precision, recall, f1)`.
#[pyfunction]
fn compute_metrics(tp_split: usize, n_extracted: usize, n_expected: usize) -> PyResult<(f64, f64, f64)> {
    let m = eval::compute_metrics(tp_split, n_extracted, n_expected).map_err(value_err)?;
    Ok((m.precision, m.recall, m.f1))
}

#[pyfunction]
#[pyo3(signature = (items, k, seed = 42))]
fn kfold(items: Vec<String>, k: usize, seed: u64) -> PyResult<Vec<Vec<String>>> {
    dataset::kfold(&items, k, seed).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "defitex")]
fn defitex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRenderer>()?;
    m.add_class::<PyRendered>()?;
    m.add_class::<PyDefinition>()?;
    m.add_class::<PyExample>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(filter_noise, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize_text, m)?)?;
    m.add_function(wrap_pyfunction!(label_iob2, m)?)?;
    m.add_function(wrap_pyfunction!(is_valid_iob2, m)?)?;
    m.add_function(wrap_pyfunction!(extract_definitions, m)?)?;
    m.add_function(wrap_pyfunction!(build_examples, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(score_terms, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(kfold, m)?)?;
    Ok(())
}
