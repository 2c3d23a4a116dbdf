//! Chronological test reservation, corrections, k-fold splits and subsamples.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{decode_iob2, label_iob2, LabeledExample};
use crate::diag::Diagnostic;
use crate::text::find_word_occurrences;
use crate::timestamp::epoch;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("cannot build {k} folds from {n} examples (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("corrections reference unknown ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),
}

/// Splits `paper#3` into `("paper", Some(3))`.
pub fn split_id(id: &str) -> (&str, Option<usize>) {
    match id.rsplit_once('#') {
        Some((paper, idx)) => match idx.parse() {
            Ok(n) => (paper, Some(n)),
            Err(_) => (id, None),
        },
        None => (id, None),
    }
}

/// Ascending by (last update, paper id, block index). Examples without a
/// timestamp sort as if updated at the Unix epoch.
pub fn sort_chronological(mut examples: Vec<LabeledExample>) -> (Vec<LabeledExample>, Vec<Diagnostic>) {
    let mut warnings = Vec::new();
    let mut warned = HashSet::new();
    for ex in &examples {
        if ex.last_updated.is_none() && warned.insert(ex.paper_id().to_string()) {
            warnings.push(Diagnostic::new(
                ex.paper_id(),
                "timestamp-fallback",
                "no last-update time; sorted at the epoch",
            ));
        }
    }
    examples.sort_by(|a, b| {
        let (pa, ia) = split_id(&a.id);
        let (pb, ib) = split_id(&b.id);
        a.last_updated
            .unwrap_or_else(epoch)
            .cmp(&b.last_updated.unwrap_or_else(epoch))
            .then_with(|| pa.cmp(pb))
            .then_with(|| ia.cmp(&ib))
            .then_with(|| a.id.cmp(&b.id))
    });
    (examples, warnings)
}

#[derive(Debug, Clone)]
pub struct Reservation<T> {
    pub test: Vec<T>,
    pub remainder: Vec<T>,
    pub warning: Option<Diagnostic>,
}

/// The earliest `n` items become the test pool.
pub fn reserve_test<T>(mut ordered: Vec<T>, n: usize) -> Reservation<T> {
    let warning = (ordered.len() < n).then(|| {
        Diagnostic::new(
            "",
            "test-underflow",
            format!("only {} examples available for a test pool of {n}", ordered.len()),
        )
    });
    let remainder = ordered.split_off(n.min(ordered.len()));
    Reservation {
        test: ordered,
        remainder,
        warning,
    }
}

/// One line of a corrections file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Correction {
    Drop { id: String },
    Replace { id: String, terms: Vec<String> },
}

impl Correction {
    pub fn id(&self) -> &str {
        match self {
            Self::Drop { id } | Self::Replace { id, .. } => id,
        }
    }
}

/// Drops or relabels test examples. A replacement is tagged at every
/// word-bounded exact occurrence of each new term in the example text.
pub fn apply_corrections(
    pool: Vec<LabeledExample>,
    corrections: &[Correction],
) -> Result<(Vec<LabeledExample>, Vec<Diagnostic>), SplitError> {
    let known: HashSet<&str> = pool.iter().map(|e| e.id.as_str()).collect();
    let mut unknown: Vec<String> = corrections
        .iter()
        .map(Correction::id)
        .filter(|id| !known.contains(id))
        .map(str::to_string)
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(SplitError::UnknownIds(unknown));
    }
    // A later correction for the same id wins.
    let by_id: HashMap<&str, &Correction> = corrections.iter().map(|c| (c.id(), c)).collect();
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(pool.len());
    for mut ex in pool {
        match by_id.get(ex.id.as_str()) {
            None => out.push(ex),
            Some(Correction::Drop { .. }) => {}
            Some(Correction::Replace { terms, .. }) => {
                let mut spans = Vec::new();
                for term in terms {
                    let found = find_word_occurrences(&ex.text, term, false);
                    if found.is_empty() {
                        warnings.push(Diagnostic::new(
                            ex.paper_id(),
                            "correction-term-missing",
                            format!("{}: {term:?} does not occur in the text", ex.id),
                        ));
                    }
                    spans.extend(found);
                }
                let len = ex.text.chars().count();
                let labeling = label_iob2(&ex.tokens, &spans, len).expect("occurrences lie inside the text");
                ex.terms = decode_iob2(&ex.tokens, &labeling.tags, Some(&ex.text));
                ex.tags = labeling.tags;
                out.push(ex);
            }
        }
    }
    Ok((out, warnings))
}

/// Seeded shuffle, then round-robin assignment into `k` folds whose sizes
/// differ by at most one.
pub fn kfold<T: Clone>(items: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>, SplitError> {
    if k < 2 || k > items.len() {
        return Err(SplitError::InvalidFoldCount { k, n: items.len() });
    }
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(items.len() / k + 1); k];
    for (i, item) in shuffled.into_iter().enumerate() {
        folds[i % k].push(item);
    }
    Ok(folds)
}

/// Seeded sample without replacement of `min(n, len)` items, in input
/// order. The flag is true when `n` exceeded the set size.
pub fn subsample<T: Clone>(items: &[T], n: usize, seed: u64, stream: u64) -> (Vec<T>, bool) {
    if n >= items.len() {
        return (items.to_vec(), n > items.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut picked = index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    (picked.into_iter().map(|i| items[i].clone()).collect(), false)
}

/// The splits file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub test: Vec<String>,
    pub folds: Vec<Vec<String>>,
    /// Which end of the chronological order the test pool was taken from.
    #[serde(default = "earliest")]
    pub test_selection: String,
}

fn earliest() -> String {
    "earliest".to_string()
}

/// Training subsamples: for each size, one id list per fold, drawn from
/// that fold's training set (all other folds).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleSpec {
    pub seed: u64,
    pub samples: BTreeMap<usize, Vec<Vec<String>>>,
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub test_size: usize,
    pub k: usize,
    pub seed: u64,
    pub subsample_sizes: Vec<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_size: 1024,
            k: 10,
            seed: 42,
            subsample_sizes: vec![1024, 2048, 10240],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub ground_truth: Vec<LabeledExample>,
    pub spec: SplitSpec,
    pub subsamples: SubsampleSpec,
    pub warnings: Vec<Diagnostic>,
}

/// Sort, reserve, correct, fold and subsample in one deterministic pass.
pub fn plan_splits(
    examples: Vec<LabeledExample>,
    corrections: &[Correction],
    cfg: &SplitConfig,
) -> Result<SplitOutcome, SplitError> {
    let (ordered, mut warnings) = sort_chronological(examples);
    let reservation = reserve_test(ordered, cfg.test_size);
    warnings.extend(reservation.warning);
    let (ground_truth, fix_warnings) = apply_corrections(reservation.test, corrections)?;
    warnings.extend(fix_warnings);

    let remainder: Vec<String> = reservation.remainder.into_iter().map(|e| e.id).collect();
    let folds = kfold(&remainder, cfg.k, cfg.seed)?;

    let mut samples = BTreeMap::new();
    for &size in &cfg.subsample_sizes {
        let mut per_fold = Vec::with_capacity(folds.len());
        for i in 0..folds.len() {
            let training: Vec<String> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, f)| f.iter().cloned())
                .collect();
            let (sample, short) = subsample(&training, size, cfg.seed, i as u64);
            if short {
                warnings.push(Diagnostic::new(
                    "",
                    "subsample-underflow",
                    format!("fold {i}: training set of {} is smaller than {size}", training.len()),
                ));
            }
            per_fold.push(sample);
        }
        samples.insert(size, per_fold);
    }

    Ok(SplitOutcome {
        spec: SplitSpec {
            seed: cfg.seed,
            test: ground_truth.iter().map(|e| e.id.clone()).collect(),
            folds,
            test_selection: earliest(),
        },
        subsamples: SubsampleSpec { seed: cfg.seed, samples },
        ground_truth,
        warnings,
    })
}
