//! Term-level scoring: exact, cut-off, too-long and split matches, with
//! micro-averaged precision/recall/F1 and cross-run aggregation.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::dataset::LabeledExample;
use crate::text::normalize_whitespace;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("empty ground truth")]
    EmptyGroundTruth,
    #[error("no reports to aggregate")]
    NoReports,
    #[error("duplicate prediction ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("predictions for unknown ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub terms: Vec<String>,
}

pub fn normalize_term(term: &str) -> String {
    normalize_whitespace(&term.to_lowercase())
}

/// Lowercased, whitespace-normalized, non-empty terms in first-occurrence
/// order.
pub fn dedupe_terms<S: AsRef<str>>(terms: &[S]) -> Vec<String> {
    let mut seen = HashSet::new();
    terms
        .iter()
        .map(|t| normalize_term(t.as_ref()))
        .filter(|t| !t.is_empty() && seen.insert(t.clone()))
        .collect()
}

pub fn dedupe_expected(example: &LabeledExample) -> Vec<String> {
    dedupe_terms(&example.terms)
}

fn no_space(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Outcome of the four tests for one expected term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMatch {
    pub expected: String,
    pub tp: bool,
    pub cut_off: bool,
    pub too_long: bool,
    pub tp_split: bool,
    /// The split match needed text from more than one extracted term.
    pub split_across_terms: bool,
    /// Extracted terms involved in any of the matches.
    pub matching: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub tp_split: usize,
    pub too_long: usize,
    pub cut_off: usize,
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.tp_split += o.tp_split;
        self.too_long += o.too_long;
        self.cut_off += o.cut_off;
    }
}

/// Runs the four independent tests for each expected term. Both sides are
/// expected lowercased. Categories may overlap.
pub fn count_matches<E: AsRef<str>, X: AsRef<str>>(expected: &[E], extracted: &[X]) -> (MatchCounts, Vec<TermMatch>) {
    let pieces: Vec<String> = extracted.iter().map(|x| no_space(x.as_ref())).collect();
    let mut owner = Vec::new();
    let mut joined = String::new();
    for (k, p) in pieces.iter().enumerate() {
        joined.push_str(p);
        owner.extend(std::iter::repeat_n(k, p.len()));
    }

    let mut counts = MatchCounts::default();
    let mut details = Vec::with_capacity(expected.len());
    for e in expected {
        let e = e.as_ref();
        let mut m = TermMatch {
            expected: e.to_string(),
            tp: false,
            cut_off: false,
            too_long: false,
            tp_split: false,
            split_across_terms: false,
            matching: Vec::new(),
        };
        let mut involved: Vec<usize> = Vec::new();
        for (k, x) in extracted.iter().enumerate() {
            let x = x.as_ref();
            let hit = if x == e {
                m.tp = true;
                true
            } else {
                let cut = !x.is_empty() && e.contains(x);
                let long = x.contains(e);
                m.cut_off |= cut;
                m.too_long |= long;
                cut || long
            };
            if hit {
                involved.push(k);
            }
        }
        let e_ns = no_space(e);
        m.tp_split = m.tp;
        if !m.tp && !e_ns.is_empty() {
            if let Some(at) = joined.find(&e_ns) {
                m.tp_split = true;
                let first = owner[at];
                let last = owner[at + e_ns.len() - 1];
                m.split_across_terms = first != last;
                involved.extend(first..=last);
            }
        }
        involved.sort_unstable();
        involved.dedup();
        m.matching = involved.into_iter().map(|k| extracted[k].as_ref().to_string()).collect();

        counts.tp += m.tp as usize;
        counts.tp_split += m.tp_split as usize;
        counts.cut_off += m.cut_off as usize;
        counts.too_long += m.too_long as usize;
        details.push(m);
    }
    (counts, details)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Micro-averaged metrics over the split-tolerant true-positive count.
pub fn compute_metrics(tp_split: usize, n_extracted: usize, n_expected: usize) -> Result<Metrics, EvalError> {
    if n_expected == 0 {
        return Err(EvalError::EmptyGroundTruth);
    }
    let precision = if n_extracted == 0 { 0.0 } else { tp_split as f64 / n_extracted as f64 };
    let recall = tp_split as f64 / n_expected as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics { precision, recall, f1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_expected: usize,
    pub n_extracted: usize,
    pub tp: usize,
    pub tp_split: usize,
    pub too_long: usize,
    pub cut_off: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    pub fn from_counts(counts: MatchCounts, n_extracted: usize, n_expected: usize) -> Result<Self, EvalError> {
        let m = compute_metrics(counts.tp_split, n_extracted, n_expected)?;
        Ok(Self {
            n_expected,
            n_extracted,
            tp: counts.tp,
            tp_split: counts.tp_split,
            too_long: counts.too_long,
            cut_off: counts.cut_off,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        })
    }

    /// Report JSON with metrics at four decimals.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            n_expected: usize,
            n_extracted: usize,
            tp: usize,
            tp_split: usize,
            too_long: usize,
            cut_off: usize,
            precision: Box<RawValue>,
            recall: Box<RawValue>,
            f1: Box<RawValue>,
            metadata: Metadata<'a>,
        }
        let out = Out {
            n_expected: self.n_expected,
            n_extracted: self.n_extracted,
            tp: self.tp,
            tp_split: self.tp_split,
            too_long: self.too_long,
            cut_off: self.cut_off,
            precision: fixed4(self.precision),
            recall: fixed4(self.recall),
            f1: fixed4(self.f1),
            metadata: Metadata::default(),
        };
        serde_json::to_string_pretty(&out).expect("report serializes") + "\n"
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    dedup_extracted: bool,
    category_semantics: &'a str,
}

impl Default for Metadata<'_> {
    fn default() -> Self {
        Self {
            dedup_extracted: true,
            category_semantics: "independent",
        }
    }
}

fn fixed4(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.4}")).expect("a decimal literal is valid JSON")
}

/// Per-expected-term record of the detail stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleDetail {
    pub id: String,
    #[serde(flatten)]
    pub term: TermMatch,
}

/// Scores predictions against ground truth. Examples without a prediction
/// count as having extracted nothing.
pub fn evaluate_run(
    ground_truth: &[LabeledExample],
    predictions: &[PredictionRecord],
) -> Result<(EvalReport, Vec<ExampleDetail>), EvalError> {
    let known: HashSet<&str> = ground_truth.iter().map(|e| e.id.as_str()).collect();
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    let mut dups = Vec::new();
    let mut unknown = Vec::new();
    for p in predictions {
        if by_id.insert(p.id.as_str(), p).is_some() {
            dups.push(p.id.clone());
        }
        if !known.contains(p.id.as_str()) {
            unknown.push(p.id.clone());
        }
    }
    if !dups.is_empty() {
        dups.sort();
        dups.dedup();
        return Err(EvalError::DuplicateIds(dups));
    }
    if !unknown.is_empty() {
        unknown.sort();
        return Err(EvalError::UnknownIds(unknown));
    }

    let scored: Vec<_> = ground_truth
        .par_iter()
        .map(|ex| {
            let expected = dedupe_expected(ex);
            let extracted = by_id.get(ex.id.as_str()).map(|p| dedupe_terms(&p.terms)).unwrap_or_default();
            let (counts, details) = count_matches(&expected, &extracted);
            (expected.len(), extracted.len(), counts, details)
        })
        .collect();

    let mut counts = MatchCounts::default();
    let (mut n_expected, mut n_extracted) = (0, 0);
    let mut details = Vec::new();
    for (ex, (ne, nx, c, d)) in ground_truth.iter().zip(scored) {
        n_expected += ne;
        n_extracted += nx;
        counts += c;
        details.extend(d.into_iter().map(|term| ExampleDetail { id: ex.id.clone(), term }));
    }
    Ok((EvalReport::from_counts(counts, n_extracted, n_expected)?, details))
}

/// Predictions equal to the deduplicated, lowercased gold terms.
pub fn oracle_predictions(ground_truth: &[LabeledExample]) -> Vec<PredictionRecord> {
    ground_truth
        .iter()
        .map(|ex| PredictionRecord {
            id: ex.id.clone(),
            terms: dedupe_expected(ex),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and sample standard deviation (zero for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub n_expected: Stat,
    pub n_extracted: Stat,
    pub tp: Stat,
    pub tp_split: Stat,
    pub too_long: Stat,
    pub cut_off: Stat,
    pub precision: Stat,
    pub recall: Stat,
    pub f1: Stat,
}

pub fn aggregate_folds(reports: &[EvalReport]) -> Result<AggregateReport, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let stat = |f: fn(&EvalReport) -> f64| Stat::of(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(AggregateReport {
        n_runs: reports.len(),
        n_expected: stat(|r| r.n_expected as f64),
        n_extracted: stat(|r| r.n_extracted as f64),
        tp: stat(|r| r.tp as f64),
        tp_split: stat(|r| r.tp_split as f64),
        too_long: stat(|r| r.too_long as f64),
        cut_off: stat(|r| r.cut_off as f64),
        precision: stat(|r| r.precision),
        recall: stat(|r| r.recall),
        f1: stat(|r| r.f1),
    })
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct S {
            mean: Box<RawValue>,
            std: Box<RawValue>,
        }
        let s = |x: Stat| S {
            mean: fixed4(x.mean),
            std: fixed4(x.std),
        };
        let fields = [
            ("n_expected", self.n_expected),
            ("n_extracted", self.n_extracted),
            ("tp", self.tp),
            ("tp_split", self.tp_split),
            ("too_long", self.too_long),
            ("cut_off", self.cut_off),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ];
        let mut map = serde_json::Map::new();
        map.insert("n_runs".into(), self.n_runs.into());
        for (name, stat) in fields {
            map.insert(name.into(), serde_json::to_value(s(stat)).expect("stat serializes"));
        }
        map.insert("metadata".into(), serde_json::to_value(Metadata::default()).expect("metadata serializes"));
        serde_json::to_string_pretty(&map).expect("aggregate serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(e: &[&str], x: &[&str]) -> MatchCounts {
        count_matches(e, x).0
    }

    #[test]
    fn canonical_matrix() {
        let c = counts(&["spread"], &["spread"]);
        assert_eq!(c, MatchCounts { tp: 1, tp_split: 1, too_long: 0, cut_off: 0 });
        let c = counts(&["graph coloring"], &["coloring"]);
        assert_eq!(c, MatchCounts { tp: 0, tp_split: 0, too_long: 0, cut_off: 1 });
        let c = counts(&["coloring"], &["graph coloring"]);
        assert_eq!(c, MatchCounts { tp: 0, tp_split: 1, too_long: 1, cut_off: 0 });
        let c = counts(&["k-connected graph"], &["k-connected", "graph"]);
        assert_eq!(c.tp, 0);
        assert_eq!(c.tp_split, 1);
    }

    #[test]
    fn split_detail_flags_joined_match() {
        let (_, d) = count_matches(&["k-connected graph"], &["k-connected", "graph", "tree"]);
        assert!(d[0].split_across_terms);
        assert_eq!(d[0].matching, ["k-connected", "graph"]);
        let (_, d) = count_matches(&["coloring"], &["graph coloring"]);
        assert!(!d[0].split_across_terms);
    }

    #[test]
    fn dedupe() {
        assert_eq!(dedupe_terms(&["Spread", "spread", "components"]), ["spread", "components"]);
        assert_eq!(dedupe_terms(&["A  B", "a b", " "]), ["a b"]);
        assert!(dedupe_terms::<&str>(&[]).is_empty());
    }

    #[test]
    fn metrics_arithmetic() {
        let m = compute_metrics(0, 5, 3).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        let m = compute_metrics(10, 10, 10).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(compute_metrics(1, 1, 0), Err(EvalError::EmptyGroundTruth));
        assert_eq!(compute_metrics(0, 0, 4).unwrap().precision, 0.0);
    }

    #[test]
    fn aggregation() {
        let r = |f1: f64| EvalReport {
            n_expected: 10,
            n_extracted: 10,
            tp: 5,
            tp_split: 6,
            too_long: 0,
            cut_off: 0,
            precision: f1,
            recall: f1,
            f1,
        };
        let a = aggregate_folds(&[r(0.6), r(0.8)]).unwrap();
        assert!((a.f1.mean - 0.7).abs() < 1e-12);
        assert!((a.f1.std - 0.141_421_356).abs() < 1e-6);
        let a = aggregate_folds(&[r(0.6)]).unwrap();
        assert_eq!((a.f1.mean, a.f1.std), (0.6, 0.0));
        let a = aggregate_folds(&vec![r(0.5); 10]).unwrap();
        assert_eq!(a.f1.std, 0.0);
        assert_eq!(a.tp.std, 0.0);
        assert_eq!(aggregate_folds(&[]), Err(EvalError::NoReports));
    }

    #[test]
    fn report_json_shape() {
        let r = EvalReport::from_counts(
            MatchCounts { tp: 1, tp_split: 1, too_long: 0, cut_off: 0 },
            3,
            2,
        )
        .unwrap();
        let json = r.to_json();
        assert!(json.contains("\"precision\": 0.3333"));
        assert!(json.contains("\"f1\": 0.4000"));
        assert!(json.contains("\"category_semantics\": \"independent\""));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["metadata"]["dedup_extracted"], true);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn adding_a_term_never_loses_split_matches(
            expected in prop::collection::vec("[ab ]{1,4}", 1..4),
            extracted in prop::collection::vec("[ab ]{1,4}", 0..4),
            extra in "[ab ]{1,4}",
            at in 0usize..5,
        ) {
            let (before, d0) = count_matches(&expected, &extracted);
            let mut more = extracted.clone();
            more.insert(at.min(more.len()), extra);
            let (after, d1) = count_matches(&expected, &more);
            prop_assert!(after.tp >= before.tp);
            // Inserting in the middle can break a join, appending cannot.
            if at >= extracted.len() {
                for (a, b) in d0.iter().zip(&d1) {
                    prop_assert!(!a.tp_split || b.tp_split);
                }
            }
            prop_assert!(before.tp <= before.tp_split);
            prop_assert!(before.tp_split <= expected.len());
        }

        #[test]
        fn cut_off_mirrors_too_long(e in "[abc]{1,5}", x in "[abc]{1,5}") {
            let forward = count_matches(&[&e], &[&x]).0;
            let swapped = count_matches(&[&x], &[&e]).0;
            prop_assert_eq!(forward.cut_off, swapped.too_long);
            prop_assert_eq!(forward.too_long, swapped.cut_off);
            let strict = e != x && e.contains(x.as_str());
            prop_assert_eq!(forward.cut_off == 1, strict);
        }

        #[test]
        fn f1_is_harmonic_mean(tp in 0usize..50, extra_x in 0usize..50, extra_e in 1usize..50) {
            let m = compute_metrics(tp, tp + extra_x, tp + extra_e).unwrap();
            if tp == 0 {
                prop_assert_eq!(m.f1, 0.0);
            } else {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - h).abs() < 1e-12);
            }
        }
    }
}
