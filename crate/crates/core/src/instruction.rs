//! Glyph instructions: the canvas plus ordered text boxes that every other
//! module consumes.
//!
//! Positions and widths are fractions of the canvas so that one instruction
//! file renders the same layout at any resolution.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::curation::OcrRecord;
use crate::font::Font;
use crate::geometry::{self, convex_intersection_area, Point, AREA_EPS};
use crate::render::{self, BoxLayout};

pub const DEFAULT_CANVAS: u32 = 512;
pub const MIN_CANVAS: u32 = 64;
/// Fitted sizes below this trigger a `TinyFont` warning.
pub const TINY_FONT_PX: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanvasSpec {
    pub width: u32,
    pub height: u32,
}

impl Default for CanvasSpec {
    fn default() -> Self {
        Self {
            width: DEFAULT_CANVAS,
            height: DEFAULT_CANVAS,
        }
    }
}

/// One placed group of text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TextBox {
    pub text: String,
    /// Top-left corner as a fraction of canvas width, in `[0, 1)`.
    pub x: f64,
    /// Top-left corner as a fraction of canvas height, in `[0, 1)`.
    pub y: f64,
    /// Box width as a fraction of canvas width, in `(0, 1]`.
    pub width: f64,
    /// Width-to-height ratio; `None` lets the font's natural line height
    /// decide the box height.
    pub ratio: Option<f64>,
    /// Counterclockwise rotation about the top-left corner, in degrees.
    pub yaw_deg: f64,
    pub rows: u32,
}

impl TextBox {
    pub fn new(text: impl Into<String>, x: f64, y: f64, width: f64) -> Self {
        Self {
            text: text.into(),
            x,
            y,
            width,
            ratio: None,
            yaw_deg: 0.0,
            rows: 1,
        }
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.ratio = Some(ratio);
        self
    }

    pub fn with_yaw(mut self, yaw_deg: f64) -> Self {
        self.yaw_deg = yaw_deg;
        self
    }

    pub fn with_rows(mut self, rows: u32) -> Self {
        self.rows = rows;
        self
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }

    /// First violated numeric invariant, as `(field, message)`.
    fn range_violation(&self) -> Option<(&'static str, String)> {
        if !self.x.is_finite() || !(0.0..1.0).contains(&self.x) {
            return Some(("x", format!("x must be in [0, 1), got {}", self.x)));
        }
        if !self.y.is_finite() || !(0.0..1.0).contains(&self.y) {
            return Some(("y", format!("y must be in [0, 1), got {}", self.y)));
        }
        if !self.width.is_finite() || self.width <= 0.0 || self.width > 1.0 {
            return Some((
                "width",
                format!("width must be in (0, 1], got {}", self.width),
            ));
        }
        if let Some(r) = self.ratio {
            if !r.is_finite() || r <= 0.0 {
                return Some(("ratio", format!("ratio must be positive, got {r}")));
            }
        }
        if !self.yaw_deg.is_finite() || !(-180.0..=180.0).contains(&self.yaw_deg) {
            return Some((
                "yaw_deg",
                format!("yaw_deg must be in [-180, 180], got {}", self.yaw_deg),
            ));
        }
        if self.rows < 1 {
            return Some(("rows", "rows must be at least 1".to_string()));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Value")]
pub struct GlyphInstructionSet {
    pub canvas: CanvasSpec,
    pub boxes: Vec<TextBox>,
}

impl GlyphInstructionSet {
    pub fn new(canvas: CanvasSpec, boxes: Vec<TextBox>) -> Self {
        Self { canvas, boxes }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instruction sets always serialize")
    }
}

impl TryFrom<Value> for GlyphInstructionSet {
    type Error = ParseError;

    fn try_from(value: Value) -> Result<Self, Self::Error> {
        from_value(&value)
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum ParseError {
    #[error("malformed instruction file: {message}")]
    MalformedSyntax { message: String },
    #[error("schema violation{}: {message}", location(.box_index, .field))]
    SchemaViolation {
        box_index: Option<usize>,
        field: String,
        message: String,
    },
    #[error("value out of range{}: {message}", location(.box_index, .field))]
    OutOfRange {
        box_index: Option<usize>,
        field: String,
        message: String,
    },
}

fn location(box_index: &Option<usize>, field: &str) -> String {
    match box_index {
        Some(i) => format!(" in box {i} field `{field}`"),
        None => format!(" in field `{field}`"),
    }
}

impl ParseError {
    pub fn box_index(&self) -> Option<usize> {
        match self {
            ParseError::MalformedSyntax { .. } => None,
            ParseError::SchemaViolation { box_index, .. }
            | ParseError::OutOfRange { box_index, .. } => *box_index,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ParseError::MalformedSyntax { .. } => None,
            ParseError::SchemaViolation { field, .. } | ParseError::OutOfRange { field, .. } => {
                Some(field)
            }
        }
    }
}

fn schema(box_index: Option<usize>, field: &str, message: impl Into<String>) -> ParseError {
    ParseError::SchemaViolation {
        box_index,
        field: field.to_string(),
        message: message.into(),
    }
}

fn out_of_range(box_index: Option<usize>, field: &str, message: impl Into<String>) -> ParseError {
    ParseError::OutOfRange {
        box_index,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Parses an instruction file. Never panics on arbitrary input.
pub fn parse_instructions(raw: &[u8]) -> Result<GlyphInstructionSet, ParseError> {
    let text = std::str::from_utf8(raw).map_err(|e| ParseError::MalformedSyntax {
        message: format!("not UTF-8: {e}"),
    })?;
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::MalformedSyntax {
        message: e.to_string(),
    })?;
    from_value(&value)
}

fn reject_unknown(
    obj: &Map<String, Value>,
    allowed: &[&str],
    box_index: Option<usize>,
    prefix: &str,
) -> Result<(), ParseError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(
            box_index,
            &format!("{prefix}{k}"),
            format!("unknown field `{k}`"),
        )),
        None => Ok(()),
    }
}

fn from_value(value: &Value) -> Result<GlyphInstructionSet, ParseError> {
    let root = value
        .as_object()
        .ok_or_else(|| schema(None, "", "top level must be an object"))?;
    reject_unknown(root, &["canvas", "boxes"], None, "")?;

    let canvas = match root.get("canvas") {
        None | Some(Value::Null) => CanvasSpec::default(),
        Some(v) => parse_canvas(v)?,
    };
    let boxes = root
        .get("boxes")
        .ok_or_else(|| schema(None, "boxes", "missing required field `boxes`"))?
        .as_array()
        .ok_or_else(|| schema(None, "boxes", "`boxes` must be an array"))?
        .iter()
        .enumerate()
        .map(|(i, b)| parse_box(i, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GlyphInstructionSet { canvas, boxes })
}

fn parse_canvas(v: &Value) -> Result<CanvasSpec, ParseError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(None, "canvas", "`canvas` must be an object"))?;
    reject_unknown(obj, &["width", "height"], None, "canvas.")?;
    let dim = |name: &str| -> Result<u32, ParseError> {
        let field = format!("canvas.{name}");
        match obj.get(name) {
            None => Ok(DEFAULT_CANVAS),
            Some(v) => {
                let n = v
                    .as_i64()
                    .ok_or_else(|| schema(None, &field, format!("`{field}` must be an integer")))?;
                if n < i64::from(MIN_CANVAS) || n > i64::from(u32::MAX) {
                    return Err(out_of_range(
                        None,
                        &field,
                        format!("`{field}` must be at least {MIN_CANVAS}, got {n}"),
                    ));
                }
                Ok(n as u32)
            }
        }
    };
    Ok(CanvasSpec {
        width: dim("width")?,
        height: dim("height")?,
    })
}

fn parse_box(index: usize, v: &Value) -> Result<TextBox, ParseError> {
    let at = Some(index);
    let obj = v
        .as_object()
        .ok_or_else(|| schema(at, "", "box must be an object"))?;
    reject_unknown(
        obj,
        &["text", "x", "y", "width", "ratio", "yaw_deg", "rows"],
        at,
        "",
    )?;

    let text = match obj.get("text") {
        None => return Err(schema(at, "text", "missing required field `text`")),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema(at, "text", "`text` must be a string")),
    };
    if text.trim().is_empty() {
        return Err(schema(
            at,
            "text",
            "`text` must contain a non-whitespace character",
        ));
    }
    let number = |name: &str, required: bool| -> Result<Option<f64>, ParseError> {
        match obj.get(name) {
            None if required => Err(schema(at, name, format!("missing required field `{name}`"))),
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| schema(at, name, format!("`{name}` must be a number"))),
        }
    };
    let x = number("x", true)?.unwrap_or_default();
    let y = number("y", true)?.unwrap_or_default();
    let width = number("width", true)?.unwrap_or_default();
    let ratio = match obj.get("ratio") {
        None | Some(Value::Null) => None,
        Some(_) => number("ratio", false)?,
    };
    let yaw_deg = number("yaw_deg", false)?.unwrap_or(0.0);
    let rows = match obj.get("rows") {
        None => 1,
        Some(v) => {
            let n = v
                .as_i64()
                .ok_or_else(|| schema(at, "rows", "`rows` must be an integer"))?;
            if n < 1 || n > i64::from(u32::MAX) {
                return Err(out_of_range(
                    at,
                    "rows",
                    format!("rows must be at least 1, got {n}"),
                ));
            }
            n as u32
        }
    };

    let tb = TextBox {
        text,
        x,
        y,
        width,
        ratio,
        yaw_deg,
        rows,
    };
    if let Some((field, message)) = tb.range_violation() {
        return Err(out_of_range(at, field, message));
    }
    Ok(tb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    OutOfRange,
    EmptyText,
    RowsExceedWords,
    BoxExceedsCanvas,
    Overlap,
    TinyFont,
    BorderClip,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub box_index: usize,
    /// The second box of an `Overlap` pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_box: Option<usize>,
    pub code: IssueCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_renderable(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_warning(&self, code: IssueCode) -> bool {
        self.warnings.iter().any(|w| w.code == code)
    }

    pub fn has_error(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|e| e.code == code)
    }

    fn error(&mut self, box_index: usize, code: IssueCode, message: String) {
        self.errors.push(Issue {
            box_index,
            other_box: None,
            code,
            message,
        });
    }

    fn warn(&mut self, box_index: usize, code: IssueCode, message: String) {
        self.warnings.push(Issue {
            box_index,
            other_box: None,
            code,
            message,
        });
    }
}

/// Checks every box for renderability and flags layout hazards.
pub fn validate(set: &GlyphInstructionSet) -> ValidationReport {
    validate_with_font(set, Font::bundled())
}

pub fn validate_with_font(set: &GlyphInstructionSet, font: &Font) -> ValidationReport {
    let mut report = ValidationReport::default();
    let canvas_w = f64::from(set.canvas.width);
    let canvas_h = f64::from(set.canvas.height);
    let mut layouts: Vec<Option<BoxLayout>> = Vec::with_capacity(set.boxes.len());

    for (i, tb) in set.boxes.iter().enumerate() {
        layouts.push(None);
        if let Some((field, message)) = tb.range_violation() {
            report.error(i, IssueCode::OutOfRange, format!("{field}: {message}"));
            continue;
        }
        let words = tb.word_count();
        if words == 0 {
            report.error(i, IssueCode::EmptyText, "text is blank".to_string());
            continue;
        }
        if tb.rows as usize > words {
            report.error(
                i,
                IssueCode::RowsExceedWords,
                format!("{} rows requested for {words} word(s)", tb.rows),
            );
            continue;
        }
        let layout = match render::layout_box(tb, &set.canvas, font) {
            Ok(layout) => layout,
            Err(e) => {
                report.error(i, IssueCode::OutOfRange, format!("width/ratio: {e}"));
                continue;
            }
        };
        let rect = layout.rect;
        let right = rect.origin.x + rect.width;
        let bottom = rect.origin.y + rect.height;
        if right > canvas_w + 1e-9 {
            report.error(
                i,
                IssueCode::BoxExceedsCanvas,
                format!(
                    "box spans x {:.1}..{right:.1} px on a {canvas_w} px canvas",
                    rect.origin.x
                ),
            );
            continue;
        }
        if tb.ratio.is_some() && bottom > canvas_h + 1e-9 {
            report.error(
                i,
                IssueCode::BoxExceedsCanvas,
                format!(
                    "box spans y {:.1}..{bottom:.1} px on a {canvas_h} px canvas",
                    rect.origin.y
                ),
            );
            continue;
        }
        if layout.font_size < TINY_FONT_PX {
            report.warn(
                i,
                IssueCode::TinyFont,
                format!(
                    "fitted font size {} px is below {TINY_FONT_PX} px",
                    layout.font_size
                ),
            );
        }
        let clipped = rect
            .corners()
            .iter()
            .any(|c| c.x < -1e-9 || c.y < -1e-9 || c.x > canvas_w + 1e-9 || c.y > canvas_h + 1e-9);
        if clipped {
            report.warn(
                i,
                IssueCode::BorderClip,
                "a corner of the rotated box lies outside the canvas".to_string(),
            );
        }
        layouts[i] = Some(layout);
    }

    for i in 0..layouts.len() {
        let Some(a) = &layouts[i] else { continue };
        let ca = a.rect.corners();
        for (j, b) in layouts.iter().enumerate().skip(i + 1) {
            let Some(b) = b else { continue };
            let area = convex_intersection_area(&ca, &b.rect.corners());
            if area > AREA_EPS {
                report.warnings.push(Issue {
                    box_index: i,
                    other_box: Some(j),
                    code: IssueCode::Overlap,
                    message: format!("boxes {i} and {j} overlap by {area:.1} px²"),
                });
            }
        }
    }
    report
}

/// An OCR quad that could not become a text box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedQuad {
    pub quad_index: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    DegenerateQuad,
    BlankText,
}

/// Derives instructions from OCR detections, one box per quad in record
/// order. Zero-area quads and blank strings are skipped and reported.
pub fn from_ocr_record(record: &OcrRecord) -> (GlyphInstructionSet, Vec<SkippedQuad>) {
    let w = f64::from(record.width);
    let h = f64::from(record.height);
    let mut boxes = Vec::with_capacity(record.boxes.len());
    let mut skipped = Vec::new();
    for (i, det) in record.boxes.iter().enumerate() {
        let quad: Vec<Point> = det
            .quad
            .iter()
            .map(|p| Point::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h)))
            .collect();
        if geometry::polygon_area(&quad) <= AREA_EPS {
            skipped.push(SkippedQuad {
                quad_index: i,
                reason: SkipReason::DegenerateQuad,
            });
            continue;
        }
        if det.text.trim().is_empty() {
            skipped.push(SkippedQuad {
                quad_index: i,
                reason: SkipReason::BlankText,
            });
            continue;
        }
        let bounds = geometry::bounding_rect(&quad).expect("non-empty quad");
        boxes.push(TextBox {
            text: det.text.clone(),
            x: bounds.x / w,
            y: bounds.y / h,
            width: bounds.width / w,
            ratio: Some(bounds.width / bounds.height),
            yaw_deg: dominant_edge_angle(&quad),
            rows: 1,
        });
    }
    let set = GlyphInstructionSet {
        canvas: CanvasSpec::default(),
        boxes,
    };
    (set, skipped)
}

/// Angle of the longest side; the earliest side wins ties.
fn dominant_edge_angle(quad: &[Point]) -> f64 {
    let mut best = (0.0, 0.0);
    for i in 0..quad.len() {
        let (a, b) = (quad[i], quad[(i + 1) % quad.len()]);
        let len = a.distance(b);
        if len > best.0 {
            best = (len, geometry::line_angle_deg(a, b));
        }
    }
    // -0.0 would serialize oddly
    best.1 + 0.0
}
