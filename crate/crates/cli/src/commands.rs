use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use glyphctl_core::bench::{
    build_bench, build_buckets, default_creative_templates, emit_bench, read_frequency_list,
    read_templates, BenchError, BenchOptions, CASES_FILE,
};
use glyphctl_core::curation::{build_manifest, split_dataset, CurationError, RejectReason};
use glyphctl_core::metrics::{evaluate_bench, EvalCase, EvalInputs, MetricError, OcrPrediction};
use glyphctl_core::{parse_instructions, render, validate, DatasetManifest, EmbeddingSet};
use serde_json::json;

use crate::args::{BenchArgs, CurateArgs, EvalArgs, ImageFormat, RenderArgs, StatsArgs};
use crate::{CmdResult, Failure};

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::io(path, e))
}

fn write_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn render_cmd(args: &RenderArgs) -> CmdResult {
    let raw = std::fs::read(&args.instructions).map_err(|e| Failure::io(&args.instructions, e))?;
    let set = parse_instructions(&raw)
        .map_err(|e| Failure::invalid(format!("{}: {e}", args.instructions.display())))?;
    let report = validate(&set);
    for w in &report.warnings {
        eprintln!("warning: box {}: {}: {}", w.box_index, w.code, w.message);
    }
    if !report.errors.is_empty() {
        for e in &report.errors {
            eprintln!("error: box {}: {}: {}", e.box_index, e.code, e.message);
        }
        return Err(Failure::invalid(format!(
            "{}: {} validation error(s), no image written",
            args.instructions.display(),
            report.errors.len()
        )));
    }
    let image = render(&set);
    let bytes = match args.format {
        ImageFormat::Png => image.to_png_bytes(),
        ImageFormat::Raw => image.to_raw_bytes(),
    };
    std::fs::write(&args.out, bytes).map_err(|e| Failure::io(&args.out, e))
}

fn curation_failure(path: &Path, e: CurationError) -> Failure {
    match e {
        CurationError::InvalidConfig(_) | CurationError::InsufficientRecords { .. } => {
            Failure::invalid(e.to_string())
        }
        CurationError::MalformedRecord(_) => Failure::data(path, e),
        CurationError::Io(_) | CurationError::Image(_) => Failure::io(path, e),
    }
}

fn reject_counts(m: &DatasetManifest) -> BTreeMap<RejectReason, usize> {
    let mut counts = BTreeMap::new();
    for r in &m.rejected {
        *counts.entry(r.reason).or_insert(0) += 1;
    }
    counts
}

fn print_counts(m: &DatasetManifest) {
    println!("{} kept / {} rejected", m.kept.len(), m.rejected.len());
    for (reason, n) in reject_counts(m) {
        println!("  {reason:?}: {n}");
    }
}

pub fn curate_cmd(args: &CurateArgs) -> CmdResult {
    let input = open(&args.records)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let manifest = build_manifest(input, &args.thresholds.config(), Some(&args.out))
        .map_err(|e| curation_failure(&args.out, e))?;
    manifest
        .write_to(&args.out)
        .map_err(|e| curation_failure(&args.out, e))?;
    if !args.splits.is_empty() {
        let splits = split_dataset(&manifest, &args.splits, args.seed)
            .map_err(|e| curation_failure(&args.out, e))?;
        for (i, s) in splits.iter().enumerate() {
            let dir = args.out.join("splits").join(i.to_string());
            s.write_to(&dir).map_err(|e| curation_failure(&dir, e))?;
        }
    }
    print_counts(&manifest);
    Ok(())
}

pub fn stats_cmd(args: &StatsArgs) -> CmdResult {
    let input = open(&args.records)?;
    let manifest = build_manifest(input, &args.thresholds.config(), None)
        .map_err(|e| curation_failure(&args.records, e))?;
    let rejected: BTreeMap<String, usize> = reject_counts(&manifest)
        .into_iter()
        .map(|(r, n)| (format!("{r:?}"), n))
        .collect();
    let summary = json!({
        "kept": manifest.kept.len(),
        "rejected": rejected,
        "histograms": manifest.stats,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_output(args.out.as_deref(), &text)
}

fn bench_failure(path: &Path, e: BenchError) -> Failure {
    match e {
        BenchError::IoFailure(_) | BenchError::Image(_) => Failure::io(path, e),
        _ => Failure::data(path, e),
    }
}

pub fn bench_cmd(args: &BenchArgs) -> CmdResult {
    let freq = read_frequency_list(open(&args.freq)?).map_err(|e| bench_failure(&args.freq, e))?;
    let templates = match &args.templates {
        Some(p) => read_templates(open(p)?).map_err(|e| bench_failure(p, e))?,
        None => default_creative_templates(),
    };
    let buckets = build_buckets(&freq).map_err(|e| bench_failure(&args.freq, e))?;
    let opts = BenchOptions {
        kind: args.kind.into(),
        words_per_bucket: args.words_per_bucket,
        seed: args.seed,
        preset: args.font_preset.into(),
        templates,
    };
    let cases = build_bench(&buckets, &opts).map_err(|e| bench_failure(&args.freq, e))?;
    emit_bench(&cases, &args.out).map_err(|e| bench_failure(&args.out, e))?;
    println!(
        "{} cases across {} buckets written to {}",
        cases.len(),
        buckets.len(),
        args.out.join(CASES_FILE).display()
    );
    Ok(())
}

fn metric_failure(path: &Path, e: MetricError) -> Failure {
    match e {
        MetricError::Io(_) => Failure::io(path, e),
        _ => Failure::data(path, e),
    }
}

fn read_embeddings(path: &Path) -> Result<EmbeddingSet, Failure> {
    EmbeddingSet::read(open(path)?).map_err(|e| metric_failure(path, e))
}

fn check_rows(path: &Path, set: &EmbeddingSet, cases: usize) -> CmdResult {
    if set.count() == cases {
        Ok(())
    } else {
        Err(metric_failure(
            path,
            MetricError::DimensionMismatch(format!("{} rows for {cases} cases", set.count())),
        ))
    }
}

pub fn eval_cmd(args: &EvalArgs) -> CmdResult {
    let cases =
        EvalCase::read_jsonl(open(&args.cases)?).map_err(|e| metric_failure(&args.cases, e))?;
    let predictions = OcrPrediction::read_jsonl(open(&args.predictions)?)
        .map_err(|e| metric_failure(&args.predictions, e))?;
    let clip = match (&args.clip_image, &args.clip_text) {
        (Some(i), Some(t)) => {
            let (images, texts) = (read_embeddings(i)?, read_embeddings(t)?);
            check_rows(i, &images, cases.len())?;
            check_rows(t, &texts, cases.len())?;
            if images.dim() != texts.dim() {
                return Err(metric_failure(
                    t,
                    MetricError::DimensionMismatch(format!(
                        "dimension {} differs from {} in {}",
                        texts.dim(),
                        images.dim(),
                        i.display()
                    )),
                ));
            }
            Some((images, texts))
        }
        _ => None,
    };
    let fid = match (&args.fid_real, &args.fid_gen) {
        (Some(r), Some(g)) => {
            let (real, generated) = (read_embeddings(r)?, read_embeddings(g)?);
            for (path, set) in [(r, &real), (g, &generated)] {
                if set.count() < 2 {
                    return Err(metric_failure(
                        path,
                        MetricError::TooFewSamples(set.count()),
                    ));
                }
            }
            Some((real, generated))
        }
        _ => None,
    };
    let culprit = |e: &MetricError| -> &Path {
        match e {
            MetricError::Schema(m) if m.contains("prediction") => &args.predictions,
            MetricError::ZeroVector { side: "image", .. } => {
                args.clip_image.as_deref().unwrap_or(&args.cases)
            }
            MetricError::ZeroVector { .. } => args.clip_text.as_deref().unwrap_or(&args.cases),
            MetricError::DimensionMismatch(_)
            | MetricError::TooFewSamples(_)
            | MetricError::NotSymmetric(_)
            | MetricError::IndefiniteBeyondTolerance(_)
            | MetricError::NonFinite(_) => args.fid_gen.as_deref().unwrap_or(&args.cases),
            _ => &args.cases,
        }
    };
    let report = evaluate_bench(&EvalInputs {
        cases,
        predictions,
        clip,
        fid,
    })
    .map_err(|e| {
        let path = culprit(&e).to_path_buf();
        metric_failure(&path, e)
    })?;
    if report.missing_predictions > 0 {
        eprintln!(
            "warning: {} case(s) had no prediction and were scored as empty OCR output",
            report.missing_predictions
        );
    }
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    write_output(args.out.as_deref(), &text)
}
