//! OCR accuracy (case-sensitive and case-insensitive exact match), per-word
//! Levenshtein distance, CLIP score and FID.

mod embedding;
mod eval;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::Bucket;
use crate::geometry::{bounding_rect, Point};

pub use embedding::{clip_score, fid, matrix_sqrt_psd, ClipScores, EmbeddingSet};
pub use eval::{evaluate_bench, EvalCase, EvalInputs, OcrPrediction};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("bucket {0} has no cases")]
    EmptyBucket(Bucket),
    #[error("row {row} of the {side} embeddings has zero norm")]
    ZeroVector { side: &'static str, row: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("at least 2 samples are needed, got {0}")]
    TooFewSamples(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix has eigenvalue {0:e} below the PSD tolerance")]
    IndefiniteBeyondTolerance(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("malformed embedding file: {0}")]
    MalformedEmbedding(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance(&a, &b, |x, y| x == y)
}

/// Two-row edit distance with a caller-supplied equality.
pub fn edit_distance<T>(a: &[T], b: &[T], eq: impl Fn(&T, &T) -> bool) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(!eq(x, y));
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn word_eq(case_sensitive: bool) -> impl Fn(&&str, &&str) -> bool {
    move |a: &&str, b: &&str| {
        if case_sensitive {
            a == b
        } else {
            a == b || a.to_lowercase() == b.to_lowercase()
        }
    }
}

/// Word-level edit distance divided by the ground-truth length.
pub fn word_error_rate<S: AsRef<str>>(
    gt: &[S],
    pred: &[S],
    case_sensitive: bool,
) -> Result<f64, MetricError> {
    if gt.is_empty() {
        return Err(MetricError::EmptyGroundTruth);
    }
    let gt: Vec<&str> = gt.iter().map(AsRef::as_ref).collect();
    let pred: Vec<&str> = pred.iter().map(AsRef::as_ref).collect();
    Ok(edit_distance(&gt, &pred, word_eq(case_sensitive)) as f64 / gt.len() as f64)
}

/// One recognized word with its detection quad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrWord {
    pub text: String,
    pub quad: [Point; 4],
    #[serde(default)]
    pub conf: f64,
}

/// Linearizes OCR output: boxes sorted by the top then the left edge of
/// their bounding rectangles, each box's text split on whitespace.
pub fn reading_order(words: &[OcrWord]) -> Vec<String> {
    let mut keyed: Vec<(f64, f64, &OcrWord)> = words
        .iter()
        .map(|w| {
            let r = bounding_rect(&w.quad).expect("four points");
            (r.y, r.x, w)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keyed
        .into_iter()
        .flat_map(|(_, _, w)| w.text.split_whitespace().map(str::to_string))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub exact: bool,
    pub exact_ci: bool,
    /// Mean character edit distance per ground-truth word.
    pub ld: f64,
    /// Continuous `1 - WER` (case-sensitive), clamped at 0.
    pub word_accuracy: f64,
    /// Lenient match: every ground-truth word appears somewhere in the OCR
    /// output.
    pub contains_word: bool,
    /// Ground-truth words with their aligned prediction.
    pub matched: Vec<(String, Option<String>)>,
}

/// Aligns `gt` to `pred` with a full word-level table. On ties the
/// backtrace prefers match/substitute, then dropping a ground-truth word.
fn align<'a>(gt: &[&'a str], pred: &[&'a str]) -> Vec<(&'a str, Option<&'a str>)> {
    let (n, m) = (gt.len(), pred.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, v) in d[0].iter_mut().enumerate() {
        *v = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(gt[i - 1] != pred[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut out = Vec::with_capacity(n);
    let (mut i, mut j) = (n, m);
    while i > 0 {
        if j > 0 && d[i][j] == d[i - 1][j - 1] + usize::from(gt[i - 1] != pred[j - 1]) {
            out.push((gt[i - 1], Some(pred[j - 1])));
            i -= 1;
            j -= 1;
        } else if d[i][j] == d[i - 1][j] + 1 {
            out.push((gt[i - 1], None));
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// Scores one case from ground-truth words and OCR words in reading order.
pub fn evaluate_case<S: AsRef<str>>(
    case_id: &str,
    gt_words: &[S],
    ocr_words: &[S],
) -> Result<CaseResult, MetricError> {
    let gt: Vec<&str> = gt_words.iter().map(AsRef::as_ref).collect();
    let pred: Vec<&str> = ocr_words.iter().map(AsRef::as_ref).collect();
    let wer = word_error_rate(&gt, &pred, true)?;
    let wer_ci = word_error_rate(&gt, &pred, false)?;
    let matched = align(&gt, &pred);
    let total: usize = matched
        .iter()
        .map(|(g, p)| match p {
            Some(p) => levenshtein(g, p),
            None => g.chars().count(),
        })
        .sum();
    Ok(CaseResult {
        case_id: case_id.to_string(),
        exact: wer == 0.0,
        exact_ci: wer_ci == 0.0,
        ld: total as f64 / gt.len() as f64,
        word_accuracy: (1.0 - wer).max(0.0),
        contains_word: gt.iter().all(|g| pred.contains(g)),
        matched: matched
            .into_iter()
            .map(|(g, p)| (g.to_string(), p.map(str::to_string)))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketMetrics {
    pub cases: usize,
    pub acc: f64,
    pub acc_ci: f64,
    pub ld: f64,
    pub word_accuracy: f64,
    pub contains_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    /// Buckets the overall block averages over.
    pub buckets: usize,
    pub acc: f64,
    pub acc_ci: f64,
    pub ld: f64,
    pub word_accuracy: f64,
    pub contains_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub buckets: BTreeMap<Bucket, BucketMetrics>,
    pub overall: OverallMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fid: Option<f64>,
    /// Cases without any OCR prediction, scored as empty output.
    #[serde(default)]
    pub missing_predictions: usize,
    /// Predictions whose case id matched no case.
    #[serde(default)]
    pub unmatched_predictions: usize,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Per-bucket means, then an unweighted mean over the buckets present.
pub fn aggregate(results: &BTreeMap<Bucket, Vec<CaseResult>>) -> Result<EvalReport, MetricError> {
    aggregate_with_clip(results, &BTreeMap::new())
}

/// Like [`aggregate`], with per-case CLIP scores keyed by case id.
pub fn aggregate_with_clip(
    results: &BTreeMap<Bucket, Vec<CaseResult>>,
    clip: &BTreeMap<String, f64>,
) -> Result<EvalReport, MetricError> {
    let mut buckets = BTreeMap::new();
    for (&bucket, cases) in results {
        if cases.is_empty() {
            return Err(MetricError::EmptyBucket(bucket));
        }
        let mut sorted: Vec<&CaseResult> = cases.iter().collect();
        sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let clip_values: Vec<f64> = sorted
            .iter()
            .filter_map(|c| clip.get(&c.case_id).copied())
            .collect();
        buckets.insert(
            bucket,
            BucketMetrics {
                cases: sorted.len(),
                acc: mean(sorted.iter().map(|c| f64::from(u8::from(c.exact)))),
                acc_ci: mean(sorted.iter().map(|c| f64::from(u8::from(c.exact_ci)))),
                ld: mean(sorted.iter().map(|c| c.ld)),
                word_accuracy: mean(sorted.iter().map(|c| c.word_accuracy)),
                contains_rate: mean(sorted.iter().map(|c| f64::from(u8::from(c.contains_word)))),
                clip_score: (!clip_values.is_empty()).then(|| mean(clip_values.into_iter())),
            },
        );
    }
    let b = || buckets.values();
    let clip_means: Vec<f64> = b().filter_map(|m| m.clip_score).collect();
    let overall = OverallMetrics {
        buckets: buckets.len(),
        acc: mean(b().map(|m| m.acc)),
        acc_ci: mean(b().map(|m| m.acc_ci)),
        ld: mean(b().map(|m| m.ld)),
        word_accuracy: mean(b().map(|m| m.word_accuracy)),
        contains_rate: mean(b().map(|m| m.contains_rate)),
        clip_score: (!clip_means.is_empty()).then(|| mean(clip_means.into_iter())),
    };
    Ok(EvalReport {
        buckets,
        overall,
        fid: None,
        missing_predictions: 0,
        unmatched_predictions: 0,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("same", "same"), 0);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    #[test]
    fn wer_examples() {
        assert_eq!(
            word_error_rate(&["free", "beer"], &["free", "bear"], true).unwrap(),
            0.5
        );
        assert_eq!(
            word_error_rate(&["a", "b"], &["a", "b"], true).unwrap(),
            0.0
        );
        assert_eq!(word_error_rate(&["hi"], &[], true).unwrap(), 1.0);
        assert_eq!(word_error_rate(&["Hi"], &["HI"], false).unwrap(), 0.0);
        assert_eq!(word_error_rate(&["Hi"], &["HI"], true).unwrap(), 1.0);
        let empty: [&str; 0] = [];
        assert!(matches!(
            word_error_rate(&empty, &["x"], true),
            Err(MetricError::EmptyGroundTruth)
        ));
    }

    #[test]
    fn case_examples() {
        let r = evaluate_case("c", &["Hello"], &["HELLO"]).unwrap();
        assert!(!r.exact && r.exact_ci);
        assert_eq!(r.ld, 4.0);

        let r = evaluate_case("c", &["Hello"], &["Hello"]).unwrap();
        assert!(r.exact && r.exact_ci);
        assert_eq!(r.ld, 0.0);

        let empty: [&str; 0] = [];
        let r = evaluate_case("c", &["Hello"], &empty).unwrap();
        assert!(!r.exact && !r.exact_ci);
        assert_eq!(r.ld, 5.0);
        assert_eq!(r.matched, vec![("Hello".to_string(), None)]);
    }

    #[test]
    fn extra_words_break_exactness_but_not_containment() {
        let r = evaluate_case("c", &["OPEN"], &["OPEN", "24h"]).unwrap();
        assert!(!r.exact);
        assert!(r.contains_word);
        assert_eq!(r.ld, 0.0);
        assert_eq!(r.word_accuracy, 0.0);
    }

    #[test]
    fn alignment_handles_deletions() {
        let r = evaluate_case("c", &["free", "cold", "beer"], &["free", "beer"]).unwrap();
        assert_eq!(
            r.matched,
            vec![
                ("free".into(), Some("free".into())),
                ("cold".into(), None),
                ("beer".into(), Some("beer".into())),
            ]
        );
        assert!((r.ld - 4.0 / 3.0).abs() < 1e-12);
    }

    fn result(id: &str, exact: bool, exact_ci: bool, ld: f64) -> CaseResult {
        CaseResult {
            case_id: id.into(),
            exact,
            exact_ci,
            ld,
            word_accuracy: f64::from(u8::from(exact)),
            contains_word: exact,
            matched: vec![],
        }
    }

    #[test]
    fn aggregate_means() {
        let r = BTreeMap::from([(
            Bucket::Top1k,
            vec![
                result("a", true, true, 0.0),
                result("b", false, false, 2.0),
                result("c", true, true, 0.0),
                result("d", false, true, 1.0),
            ],
        )]);
        let rep = aggregate(&r).unwrap();
        let m = &rep.buckets[&Bucket::Top1k];
        assert_eq!(m.acc, 0.5);
        assert_eq!(m.acc_ci, 0.75);
        assert_eq!(m.ld, 0.75);
        assert_eq!(rep.overall.acc, 0.5);
        assert_eq!(rep.overall.buckets, 1);
        assert_eq!(rep.buckets.len(), 1);
    }

    #[test]
    fn overall_is_mean_of_bucket_means() {
        let mut r = BTreeMap::new();
        for (b, acc) in Bucket::ALL.into_iter().zip([0.2, 0.4, 0.6, 0.8]) {
            let n = 10;
            let hits = (acc * n as f64).round() as usize;
            // uneven bucket sizes must not weight the overall figure
            let extra = if b == Bucket::Top1k { 10 } else { 0 };
            let cases = (0..n + extra)
                .map(|i| {
                    let exact = if b == Bucket::Top1k {
                        i % 5 == 0
                    } else {
                        i < hits
                    };
                    result(&format!("{b}-{i}"), exact, exact, 0.0)
                })
                .collect();
            r.insert(b, cases);
        }
        let rep = aggregate(&r).unwrap();
        assert!((rep.buckets[&Bucket::Top1k].acc - 0.2).abs() < 1e-12);
        assert!((rep.overall.acc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_bucket_is_an_error() {
        let r = BTreeMap::from([(Bucket::Above100k, vec![])]);
        assert!(matches!(
            aggregate(&r),
            Err(MetricError::EmptyBucket(Bucket::Above100k))
        ));
    }

    #[test]
    fn reading_order_is_top_then_left() {
        let q = |x: f64, y: f64| {
            [
                Point::new(x, y),
                Point::new(x + 10.0, y),
                Point::new(x + 10.0, y + 5.0),
                Point::new(x, y + 5.0),
            ]
        };
        let words = vec![
            OcrWord {
                text: "third".into(),
                quad: q(0.0, 50.0),
                conf: 0.9,
            },
            OcrWord {
                text: "second".into(),
                quad: q(40.0, 10.0),
                conf: 0.9,
            },
            OcrWord {
                text: "first one".into(),
                quad: q(5.0, 10.0),
                conf: 0.9,
            },
        ];
        assert_eq!(
            reading_order(&words),
            vec!["first", "one", "second", "third"]
        );
    }
}
