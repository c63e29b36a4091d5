//! The single bundled font (DejaVu Sans) and the metrics the layout needs.

use std::sync::OnceLock;

use ttf_parser::{Face, GlyphId, OutlineBuilder};

use crate::geometry::Point;

static DEJAVU_SANS: &[u8] = include_bytes!("../assets/DejaVuSans.ttf");

/// One outline command in font units (y up, as stored in the font).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathSeg {
    MoveTo(Point),
    LineTo(Point),
    QuadTo(Point, Point),
    CubicTo(Point, Point, Point),
    Close,
}

/// Immutable font handle; shareable across threads.
pub struct Font {
    face: Face<'static>,
    units_per_em: f64,
    ascender: f64,
    descender: f64,
    line_gap: f64,
}

impl std::fmt::Debug for Font {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Font")
            .field("units_per_em", &self.units_per_em)
            .field("ascender", &self.ascender)
            .field("descender", &self.descender)
            .finish()
    }
}

impl Font {
    /// The bundled sans-serif font. Parsed once on first use.
    pub fn bundled() -> &'static Font {
        static FONT: OnceLock<Font> = OnceLock::new();
        FONT.get_or_init(|| {
            let face = Face::parse(DEJAVU_SANS, 0).expect("bundled font parses");
            Font::from_face(face)
        })
    }

    fn from_face(face: Face<'static>) -> Font {
        Font {
            units_per_em: f64::from(face.units_per_em()),
            ascender: f64::from(face.ascender()),
            descender: f64::from(face.descender()),
            line_gap: f64::from(face.line_gap()),
            face,
        }
    }

    pub fn units_per_em(&self) -> f64 {
        self.units_per_em
    }

    /// Distance from the top of a line to its baseline at `size` px.
    pub fn ascent(&self, size: f64) -> f64 {
        self.ascender * size / self.units_per_em
    }

    /// Natural line advance at `size` px.
    pub fn line_height(&self, size: f64) -> f64 {
        (self.ascender - self.descender + self.line_gap) * size / self.units_per_em
    }

    fn glyph(&self, ch: char) -> GlyphId {
        self.face.glyph_index(ch).unwrap_or(GlyphId(0))
    }

    /// Horizontal advance of `ch` in font units.
    pub fn advance_units(&self, ch: char) -> u32 {
        self.face
            .glyph_hor_advance(self.glyph(ch))
            .map(u32::from)
            .unwrap_or(0)
    }

    /// Sum of glyph advances of `text` in font units. No kerning is applied.
    pub fn text_advance_units(&self, text: &str) -> u64 {
        text.chars().map(|c| u64::from(self.advance_units(c))).sum()
    }

    /// Pen advance of `text` at `size` px.
    pub fn advance(&self, text: &str, size: f64) -> f64 {
        self.text_advance_units(text) as f64 * size / self.units_per_em
    }

    /// Outline of `ch` in font units; empty for blank glyphs.
    pub fn outline(&self, ch: char) -> Vec<PathSeg> {
        let mut sink = Collector(Vec::new());
        self.face.outline_glyph(self.glyph(ch), &mut sink);
        sink.0
    }
}

struct Collector(Vec<PathSeg>);

fn pt(x: f32, y: f32) -> Point {
    Point::new(f64::from(x), f64::from(y))
}

impl OutlineBuilder for Collector {
    fn move_to(&mut self, x: f32, y: f32) {
        self.0.push(PathSeg::MoveTo(pt(x, y)));
    }

    fn line_to(&mut self, x: f32, y: f32) {
        self.0.push(PathSeg::LineTo(pt(x, y)));
    }

    fn quad_to(&mut self, x1: f32, y1: f32, x: f32, y: f32) {
        self.0.push(PathSeg::QuadTo(pt(x1, y1), pt(x, y)));
    }

    fn curve_to(&mut self, x1: f32, y1: f32, x2: f32, y2: f32, x: f32, y: f32) {
        self.0
            .push(PathSeg::CubicTo(pt(x1, y1), pt(x2, y2), pt(x, y)));
    }

    fn close(&mut self) {
        self.0.push(PathSeg::Close);
    }
}
