use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use serde::de::DeserializeOwned;
use serde::Serialize;

use defitex::corpus::{scan_corpus, CorpusError, CorpusManifest};
use defitex::dataset::{
    build_examples, plan_splits, to_conll, BuildOptions, Correction, ExampleRecord, Iob2Tag, LabeledExample,
    SplitConfig, SplitError,
};
use defitex::diag::Diagnostic;
use defitex::eval::{aggregate_folds, evaluate_run, normalize_term, oracle_predictions, EvalError, PredictionRecord};
use defitex::extract::NoiseFilter;
use defitex::pipeline::{extract_corpus, read_jsonl, write_jsonl, DefinitionRecord};
use defitex::render::{Renderer, SymbolTable};

use crate::config::PipelineConfig;
use crate::error::{CliError, EXIT_ID_MISMATCH};
use crate::{BuildArgs, EvaluateArgs, ExtractArgs, OracleArgs, ScanArgs, SplitArgs, StatsArgs};

pub struct Context {
    pub quiet: bool,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items).map_err(|e| CliError::io(path, e))?;
    write_bytes(path, &buf)
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| CliError::jsonl(path, e))
}

fn read_examples(path: &Path) -> Result<Vec<LabeledExample>, CliError> {
    read_lines::<ExampleRecord>(path)?
        .into_iter()
        .map(|r| r.into_example().map_err(|e| CliError::schema(format!("{}: {e}", path.display()))))
        .collect()
}

fn sidecar(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    output.with_file_name(format!("{stem}.warnings.jsonl"))
}

/// Writes warnings next to `output` and reports their number.
fn emit_warnings(ctx: &Context, output: &Path, warnings: &[Diagnostic]) -> Result<(), CliError> {
    let path = sidecar(output);
    write_lines(&path, warnings)?;
    for w in warnings {
        debug!("{} {}: {}", w.paper_id, w.kind, w.detail);
    }
    if !ctx.quiet && !warnings.is_empty() {
        eprintln!("defitex: {} warnings written to {}", warnings.len(), path.display());
    }
    Ok(())
}

pub fn scan(ctx: &Context, cfg: &PipelineConfig, args: &ScanArgs) -> Result<(), CliError> {
    let root = cfg
        .root
        .as_deref()
        .ok_or_else(|| CliError::new(crate::error::EXIT_IO, "no corpus root given (--root)"))?;
    let result = scan_corpus(root, cfg.metadata.as_deref()).map_err(|e| match e {
        CorpusError::Metadata { .. } => CliError::schema(e.to_string()),
        other => CliError::new(crate::error::EXIT_IO, other.to_string()),
    })?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out("manifest.json"));
    write_bytes(&out, result.manifest.to_json().as_bytes())?;
    info!("scanned {} papers", result.manifest.entries.len());
    emit_warnings(ctx, &out, &result.warnings)
}

fn load_renderer(cfg: &PipelineConfig) -> Result<Renderer, CliError> {
    let mut symbols = SymbolTable::builtin();
    if let Some(path) = &cfg.symbols {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        symbols
            .merge_json(&text)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    }
    Ok(Renderer::new(symbols))
}

pub fn extract(ctx: &Context, cfg: &PipelineConfig, args: &ExtractArgs) -> Result<(), CliError> {
    let manifest_path = args.manifest.clone().unwrap_or_else(|| cfg.out("manifest.json"));
    let text = fs::read_to_string(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    let manifest: CorpusManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::schema(format!("{}: {e}", manifest_path.display())))?;
    let renderer = load_renderer(cfg)?;

    let result = extract_corpus(&manifest.entries, &renderer, &cfg.env);
    let out = args.out.clone().unwrap_or_else(|| cfg.out("definitions.jsonl"));
    write_lines(&out, &result.records)?;
    emit_warnings(ctx, &out, &result.warnings)?;
    info!(
        "{} definitions from {} papers ({} failed)",
        result.records.len(),
        result.processed,
        result.failed.len()
    );
    if result.processed == 0 {
        return Err(CliError::empty("no paper could be processed"));
    }
    if result.records.is_empty() {
        return Err(CliError::empty("no definition environments found"));
    }
    Ok(())
}

pub fn build(ctx: &Context, cfg: &PipelineConfig, args: &BuildArgs) -> Result<(), CliError> {
    let defs_path = args.definitions.clone().unwrap_or_else(|| cfg.out("definitions.jsonl"));
    let records: Vec<DefinitionRecord> = read_lines(&defs_path)?;
    let filter = match &cfg.filter {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            NoiseFilter::from_config(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?
        }
        None => NoiseFilter::default(),
    };
    let opts = BuildOptions {
        max_tokens: cfg.max_tokens,
        drop_empty: args.drop_empty,
        filter,
    };
    let output = build_examples(&records, &opts);

    let dataset = cfg.out("dataset.jsonl");
    let lines: Vec<ExampleRecord> = output.examples.iter().map(LabeledExample::to_record).collect();
    write_lines(&dataset, &lines)?;
    write_bytes(&cfg.out("dataset.conll"), to_conll(&output.examples).as_bytes())?;
    write_pretty(&cfg.out("build_stats.json"), &output.stats)?;

    let warnings: Vec<Diagnostic> = output
        .examples
        .iter()
        .filter(|ex| ex.tokens.is_empty())
        .map(|ex| Diagnostic::new(ex.paper_id(), "empty-text", format!("{} renders to no tokens", ex.id)))
        .collect();
    emit_warnings(ctx, &dataset, &warnings)?;
    if output.examples.is_empty() {
        return Err(CliError::empty("every block was filtered out"));
    }
    Ok(())
}

pub fn split(ctx: &Context, cfg: &PipelineConfig, args: &SplitArgs) -> Result<(), CliError> {
    let dataset = args.dataset.clone().unwrap_or_else(|| cfg.out("dataset.jsonl"));
    let examples = read_examples(&dataset)?;
    let corrections: Vec<Correction> = match &args.corrections {
        Some(path) => read_lines(path)?,
        None => Vec::new(),
    };
    let split_cfg = SplitConfig {
        test_size: cfg.test_size,
        k: cfg.folds,
        seed: cfg.seed,
        subsample_sizes: cfg.subsample_sizes.clone(),
    };
    let outcome = plan_splits(examples, &corrections, &split_cfg).map_err(|e| match e {
        SplitError::UnknownIds(_) => CliError::schema(e.to_string()),
        SplitError::InvalidFoldCount { .. } => CliError::empty(e.to_string()),
    })?;

    let splits = cfg.out("splits.json");
    write_pretty(&splits, &outcome.spec)?;
    write_pretty(&cfg.out("subsamples.json"), &outcome.subsamples)?;
    let truth: Vec<ExampleRecord> = outcome.ground_truth.iter().map(LabeledExample::to_record).collect();
    write_lines(&cfg.out("ground_truth.jsonl"), &truth)?;
    info!(
        "test pool {} (after corrections), {} folds",
        truth.len(),
        outcome.spec.folds.len()
    );
    emit_warnings(ctx, &splits, &outcome.warnings)
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::DuplicateIds(_) | EvalError::UnknownIds(_) => CliError::new(EXIT_ID_MISMATCH, e.to_string()),
        EvalError::EmptyGroundTruth | EvalError::NoReports => CliError::empty(e.to_string()),
    }
}

pub fn evaluate(ctx: &Context, cfg: &PipelineConfig, args: &EvaluateArgs) -> Result<(), CliError> {
    let gt_path = args.ground_truth.clone().unwrap_or_else(|| cfg.out("ground_truth.jsonl"));
    let truth = read_examples(&gt_path)?;

    if let Some(dir) = &args.aggregate {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        let mut reports = Vec::with_capacity(files.len());
        for file in &files {
            let preds: Vec<PredictionRecord> = read_lines(file)?;
            let (report, _) = evaluate_run(&truth, &preds).map_err(|e| {
                let err = eval_error(e);
                CliError::new(err.code, format!("{}: {}", file.display(), err.message))
            })?;
            reports.push(report);
        }
        let agg = aggregate_folds(&reports).map_err(eval_error)?;
        let out = args.out.clone().unwrap_or_else(|| cfg.out("aggregate.json"));
        write_bytes(&out, agg.to_json().as_bytes())?;
        if !ctx.quiet {
            println!(
                "runs={} F1={:.4}±{:.4} P={:.4} R={:.4}",
                agg.n_runs, agg.f1.mean, agg.f1.std, agg.precision.mean, agg.recall.mean
            );
        }
        return Ok(());
    }

    let pred_path = args.predictions.clone().unwrap_or_else(|| cfg.out("predictions.jsonl"));
    let preds: Vec<PredictionRecord> = read_lines(&pred_path)?;
    let (report, details) = evaluate_run(&truth, &preds).map_err(eval_error)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out("report.json"));
    write_bytes(&out, report.to_json().as_bytes())?;
    if let Some(path) = &args.per_example {
        write_lines(path, &details)?;
    }
    if !ctx.quiet {
        println!("P={:.4} R={:.4} F1={:.4}", report.precision, report.recall, report.f1);
    }
    Ok(())
}

#[derive(Serialize)]
struct DatasetStats {
    examples: usize,
    tokens_total: usize,
    tokens_mean: f64,
    tokens_max: usize,
    examples_without_terms: usize,
    terms: usize,
    unique_terms: usize,
    tags: BTreeMap<&'static str, usize>,
}

pub fn stats(cfg: &PipelineConfig, args: &StatsArgs) -> Result<(), CliError> {
    let path = args.dataset.clone().unwrap_or_else(|| cfg.out("dataset.jsonl"));
    let examples = read_examples(&path)?;
    let tokens_total: usize = examples.iter().map(|e| e.tokens.len()).sum();
    let mut tags = BTreeMap::new();
    for tag in [Iob2Tag::Begin, Iob2Tag::Inside, Iob2Tag::Outside] {
        tags.insert(tag.as_str(), 0);
    }
    for t in examples.iter().flat_map(|e| &e.tags) {
        *tags.entry(t.as_str()).or_default() += 1;
    }
    let unique: HashSet<String> = examples.iter().flat_map(|e| &e.terms).map(|t| normalize_term(t)).collect();
    let s = DatasetStats {
        examples: examples.len(),
        tokens_total,
        tokens_mean: if examples.is_empty() { 0.0 } else { tokens_total as f64 / examples.len() as f64 },
        tokens_max: examples.iter().map(|e| e.tokens.len()).max().unwrap_or(0),
        examples_without_terms: examples.iter().filter(|e| e.terms.is_empty()).count(),
        terms: examples.iter().map(|e| e.terms.len()).sum(),
        unique_terms: unique.len(),
        tags,
    };
    match &args.out {
        Some(out) => write_pretty(out, &s),
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            serde_json::to_writer_pretty(&mut w, &s).expect("stats serialize");
            writeln!(w).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn oracle(cfg: &PipelineConfig, args: &OracleArgs) -> Result<(), CliError> {
    let gt_path = args.ground_truth.clone().unwrap_or_else(|| cfg.out("ground_truth.jsonl"));
    let truth = read_examples(&gt_path)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out("predictions.jsonl"));
    write_lines(&out, &oracle_predictions(&truth))
}
