//! OCR-annotated dataset curation: filter rules, manifest construction,
//! histograms and seeded splits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::font::Font;
use crate::geometry::{self, Point};
use crate::instruction::from_ocr_record;
use crate::render::{render_with_log, ImageIoError};

/// One recognized text region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrBox {
    pub quad: [Point; 4],
    pub text: String,
    pub conf: f64,
}

/// One image's OCR output as ingested from JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub caption: String,
    pub aesthetic: f64,
    pub boxes: Vec<OcrBox>,
}

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("malformed OCR record: {0}")]
    MalformedRecord(String),
    #[error("invalid curation config: {0}")]
    InvalidConfig(String),
    #[error("requested {requested} records but only {available} are available")]
    InsufficientRecords { requested: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

impl OcrRecord {
    /// Parses one JSONL line, checks invariants and clamps quads into the
    /// image.
    pub fn from_json_line(line: &str) -> Result<Self, CurationError> {
        let mut rec: OcrRecord = serde_json::from_str(line)
            .map_err(|e| CurationError::MalformedRecord(e.to_string()))?;
        if rec.width == 0 || rec.height == 0 {
            return Err(CurationError::MalformedRecord(format!(
                "{}: image dimensions must be positive",
                rec.image_id
            )));
        }
        if !rec.aesthetic.is_finite() {
            return Err(CurationError::MalformedRecord(format!(
                "{}: aesthetic score must be finite",
                rec.image_id
            )));
        }
        let (w, h) = (f64::from(rec.width), f64::from(rec.height));
        for (i, b) in rec.boxes.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(&b.conf) {
                return Err(CurationError::MalformedRecord(format!(
                    "{}: box {i} confidence {} outside [0, 1]",
                    rec.image_id, b.conf
                )));
            }
            for p in &mut b.quad {
                if !p.x.is_finite() || !p.y.is_finite() {
                    return Err(CurationError::MalformedRecord(format!(
                        "{}: box {i} has a non-finite coordinate",
                        rec.image_id
                    )));
                }
                p.x = p.x.clamp(0.0, w);
                p.y = p.y.clamp(0.0, h);
            }
        }
        Ok(rec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    pub aesthetic_min: f64,
    pub area_min_frac: f64,
    pub max_boxes: usize,
    pub border_margin_frac: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            aesthetic_min: 4.5,
            area_min_frac: 0.05,
            max_boxes: 5,
            border_margin_frac: 0.02,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<(), CurationError> {
        let bad = |m: &str| Err(CurationError::InvalidConfig(m.to_string()));
        if self.aesthetic_min.is_nan() || self.aesthetic_min <= 0.0 {
            return bad("aesthetic_min must be positive");
        }
        if !(self.area_min_frac > 0.0 && self.area_min_frac < 1.0) {
            return bad("area_min_frac must be in (0, 1)");
        }
        if self.max_boxes == 0 {
            return bad("max_boxes must be positive");
        }
        if !(self.border_margin_frac > 0.0 && self.border_margin_frac < 0.5) {
            return bad("border_margin_frac must be in (0, 0.5)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    NoBoxes,
    LowAesthetic,
    BorderOnly,
    SmallArea,
    TooManyBoxes,
    MalformedRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Reject(RejectReason),
}

/// Summed quad area over image area. Overlapping quads count twice.
pub fn box_area_fraction(boxes: &[OcrBox], width: u32, height: u32) -> f64 {
    let total: f64 = boxes.iter().map(|b| geometry::polygon_area(&b.quad)).sum();
    total / (f64::from(width) * f64::from(height))
}

/// True when there is at least one box and every box's bounding rectangle
/// reaches into the border band of thickness
/// `margin_frac × min(width, height)`.
pub fn all_boxes_on_border(boxes: &[OcrBox], width: u32, height: u32, margin_frac: f64) -> bool {
    let (w, h) = (f64::from(width), f64::from(height));
    let band = margin_frac * w.min(h);
    !boxes.is_empty()
        && boxes.iter().all(|b| {
            let r = geometry::bounding_rect(&b.quad).expect("quads have four points");
            r.x <= band || r.y <= band || r.right() >= w - band || r.bottom() >= h - band
        })
}

/// Applies the rules in order and reports the first one that fails.
pub fn filter_record(record: &OcrRecord, config: &CurationConfig) -> Decision {
    let (w, h) = (record.width, record.height);
    if record.boxes.is_empty() {
        Decision::Reject(RejectReason::NoBoxes)
    } else if record.aesthetic <= config.aesthetic_min {
        // kept images score strictly higher than the threshold
        Decision::Reject(RejectReason::LowAesthetic)
    } else if all_boxes_on_border(&record.boxes, w, h, config.border_margin_frac) {
        Decision::Reject(RejectReason::BorderOnly)
    } else if box_area_fraction(&record.boxes, w, h) < config.area_min_frac {
        Decision::Reject(RejectReason::SmallArea)
    } else if record.boxes.len() > config.max_boxes {
        Decision::Reject(RejectReason::TooManyBoxes)
    } else {
        Decision::Keep
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCounts {
    pub chars: usize,
    pub words: usize,
    pub boxes: usize,
}

impl RecordCounts {
    pub fn of(record: &OcrRecord) -> Self {
        Self {
            chars: record
                .boxes
                .iter()
                .map(|b| b.text.chars().filter(|c| !c.is_whitespace()).count())
                .sum(),
            words: record
                .boxes
                .iter()
                .map(|b| b.text.split_whitespace().count())
                .sum(),
            boxes: record.boxes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptRecord {
    #[serde(skip)]
    pub seq: usize,
    pub image_id: String,
    pub glyph_path: String,
    pub caption: String,
    #[serde(skip)]
    pub counts: Option<RecordCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    #[serde(skip)]
    pub seq: usize,
    pub image_id: String,
    pub reason: RejectReason,
}

/// Unit-bin histograms over kept records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub chars: BTreeMap<usize, usize>,
    pub words: BTreeMap<usize, usize>,
    pub boxes: BTreeMap<usize, usize>,
}

impl DatasetStats {
    pub fn add(&mut self, c: RecordCounts) {
        *self.chars.entry(c.chars).or_default() += 1;
        *self.words.entry(c.words).or_default() += 1;
        *self.boxes.entry(c.boxes).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.boxes.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub kept: Vec<KeptRecord>,
    pub rejected: Vec<RejectedRecord>,
    pub stats: DatasetStats,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const REJECTS_FILE: &str = "rejects.jsonl";
pub const STATS_FILE: &str = "stats.json";
pub const GLYPH_DIR: &str = "glyphs";

impl DatasetManifest {
    pub fn reject_count(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|r| r.reason == reason).count()
    }

    /// Writes the manifest, reject log and stats into `out_dir`.
    pub fn write_to(&self, out_dir: &Path) -> Result<(), CurationError> {
        std::fs::create_dir_all(out_dir)?;
        write_jsonl(&out_dir.join(MANIFEST_FILE), &self.kept)?;
        write_jsonl(&out_dir.join(REJECTS_FILE), &self.rejected)?;
        let stats = serde_json::to_string_pretty(&self.stats).expect("stats serialize");
        std::fs::write(out_dir.join(STATS_FILE), stats + "\n")?;
        Ok(())
    }
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn sanitize_file_stem(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .take(96)
        .collect();
    if cleaned.is_empty() {
        "_".to_string()
    } else {
        cleaned
    }
}

enum Outcome {
    Kept(KeptRecord),
    Rejected(RejectedRecord),
}

/// Runs the filter over a JSONL stream. Kept records get a glyph image under
/// `glyph_root/glyphs/` when `glyph_root` is given. Malformed lines become
/// `MalformedRecord` rejections. Work runs on the current rayon pool; output
/// order always follows input order.
pub fn build_manifest<R: BufRead>(
    input: R,
    config: &CurationConfig,
    glyph_root: Option<&Path>,
) -> Result<DatasetManifest, CurationError> {
    config.validate()?;
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    if let Some(root) = glyph_root {
        std::fs::create_dir_all(root.join(GLYPH_DIR))?;
    }
    let outcomes = lines
        .par_iter()
        .enumerate()
        .map(|(seq, line)| process_line(seq, line, config, glyph_root))
        .collect::<Result<Vec<_>, CurationError>>()?;

    let mut manifest = DatasetManifest::default();
    for outcome in outcomes {
        match outcome {
            Outcome::Kept(k) => {
                if let Some(c) = k.counts {
                    manifest.stats.add(c);
                }
                manifest.kept.push(k);
            }
            Outcome::Rejected(r) => manifest.rejected.push(r),
        }
    }
    Ok(manifest)
}

fn process_line(
    seq: usize,
    line: &str,
    config: &CurationConfig,
    glyph_root: Option<&Path>,
) -> Result<Outcome, CurationError> {
    let record = match OcrRecord::from_json_line(line) {
        Ok(r) => r,
        Err(_) => {
            let image_id = serde_json::from_str::<Value>(line)
                .ok()
                .and_then(|v| {
                    v.get("image_id")
                        .and_then(Value::as_str)
                        .map(str::to_string)
                })
                .unwrap_or_else(|| format!("line:{}", seq + 1));
            return Ok(Outcome::Rejected(RejectedRecord {
                seq,
                image_id,
                reason: RejectReason::MalformedRecord,
            }));
        }
    };
    match filter_record(&record, config) {
        Decision::Reject(reason) => Ok(Outcome::Rejected(RejectedRecord {
            seq,
            image_id: record.image_id,
            reason,
        })),
        Decision::Keep => {
            let rel: PathBuf = PathBuf::from(GLYPH_DIR).join(format!(
                "{seq:06}_{}.png",
                sanitize_file_stem(&record.image_id)
            ));
            if let Some(root) = glyph_root {
                let (set, _skipped) = from_ocr_record(&record);
                let (image, _failures) = render_with_log(&set, Font::bundled());
                image.save_png(root.join(&rel))?;
            }
            Ok(Outcome::Kept(KeptRecord {
                seq,
                glyph_path: rel.to_string_lossy().replace('\\', "/"),
                counts: Some(RecordCounts::of(&record)),
                image_id: record.image_id,
                caption: record.caption,
            }))
        }
    }
}

/// Seeded shuffle of the kept records followed by contiguous slices of the
/// requested sizes.
pub fn split_dataset(
    manifest: &DatasetManifest,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<DatasetManifest>, CurationError> {
    let requested: usize = sizes.iter().sum();
    if requested > manifest.kept.len() {
        return Err(CurationError::InsufficientRecords {
            requested,
            available: manifest.kept.len(),
        });
    }
    let mut pool = manifest.kept.clone();
    pool.sort_by_key(|k| k.seq);
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut start = 0;
    Ok(sizes
        .iter()
        .map(|&n| {
            let kept = pool[start..start + n].to_vec();
            start += n;
            let mut stats = DatasetStats::default();
            for c in kept.iter().filter_map(|k| k.counts) {
                stats.add(c);
            }
            DatasetManifest {
                kept,
                rejected: Vec::new(),
                stats,
            }
        })
        .collect())
}
