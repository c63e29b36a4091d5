//! Joins benchmark cases with external OCR predictions and embeddings into
//! an [`EvalReport`].

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{
    aggregate_with_clip, clip_score, evaluate_case, fid, reading_order, EmbeddingSet, EvalReport,
    MetricError, OcrWord,
};
use crate::bench::Bucket;

/// The fields of a benchmark case that scoring needs. Other case fields are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: String,
    pub word: String,
    pub bucket: Bucket,
}

/// OCR output for one generated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrPrediction {
    pub case_id: String,
    pub words: Vec<OcrWord>,
}

impl EvalCase {
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Self>, MetricError> {
        read_jsonl(input, "case")
    }
}

impl OcrPrediction {
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Self>, MetricError> {
        read_jsonl(input, "prediction")
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(
    input: R,
    what: &str,
) -> Result<Vec<T>, MetricError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| MetricError::Schema(format!("{what} line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Everything one evaluation run consumes.
#[derive(Debug, Clone, Default)]
pub struct EvalInputs {
    pub cases: Vec<EvalCase>,
    pub predictions: Vec<OcrPrediction>,
    /// Image and text embeddings aligned row-for-row with `cases`.
    pub clip: Option<(EmbeddingSet, EmbeddingSet)>,
    /// Real and generated feature sets.
    pub fid: Option<(EmbeddingSet, EmbeddingSet)>,
}

/// Scores every case. A case without a prediction is scored as if the OCR
/// engine returned nothing.
pub fn evaluate_bench(inputs: &EvalInputs) -> Result<EvalReport, MetricError> {
    let mut by_case: HashMap<&str, &OcrPrediction> = HashMap::new();
    for p in &inputs.predictions {
        if by_case.insert(p.case_id.as_str(), p).is_some() {
            return Err(MetricError::Schema(format!(
                "duplicate prediction for case `{}`",
                p.case_id
            )));
        }
    }
    let mut seen = HashMap::new();
    for (i, c) in inputs.cases.iter().enumerate() {
        if seen.insert(c.case_id.as_str(), i).is_some() {
            return Err(MetricError::Schema(format!(
                "duplicate case id `{}`",
                c.case_id
            )));
        }
    }

    let mut grouped: BTreeMap<Bucket, Vec<_>> = BTreeMap::new();
    let mut missing = 0;
    for c in &inputs.cases {
        let words = match by_case.get(c.case_id.as_str()) {
            Some(p) => reading_order(&p.words),
            None => {
                missing += 1;
                Vec::new()
            }
        };
        let gt: Vec<&str> = c.word.split_whitespace().collect();
        let words: Vec<&str> = words.iter().map(String::as_str).collect();
        let result = evaluate_case(&c.case_id, &gt, &words)?;
        grouped.entry(c.bucket).or_default().push(result);
    }
    let unmatched = inputs
        .predictions
        .iter()
        .filter(|p| !seen.contains_key(p.case_id.as_str()))
        .count();

    let mut clip = BTreeMap::new();
    if let Some((images, texts)) = &inputs.clip {
        if images.count() != inputs.cases.len() {
            return Err(MetricError::DimensionMismatch(format!(
                "{} embedding rows for {} cases",
                images.count(),
                inputs.cases.len()
            )));
        }
        let scores = clip_score(images, texts)?;
        for (c, s) in inputs.cases.iter().zip(scores.per_case) {
            clip.insert(c.case_id.clone(), s);
        }
    }

    let mut report = aggregate_with_clip(&grouped, &clip)?;
    report.missing_predictions = missing;
    report.unmatched_predictions = unmatched;
    if let Some((real, generated)) = &inputs.fid {
        report.fid = Some(fid(real, generated)?);
    }
    if !clip.is_empty() {
        report
            .notes
            .push("clip_score is 100 x cosine similarity without clamping at 0".to_string());
    }
    Ok(report)
}
