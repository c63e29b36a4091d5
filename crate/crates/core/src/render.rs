//! Deterministic rasterization of glyph instructions into whiteboard glyph
//! images: white background, text as black antialiased regions, one font.

use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::font::{Font, PathSeg};
use crate::geometry::{Point, RotatedRect};
use crate::instruction::{CanvasSpec, GlyphInstructionSet, TextBox};
use crate::raster::{self, Path};

/// Upper bound on fitted font sizes; only reached by boxes whose height is
/// unconstrained.
pub const MAX_FONT_SIZE: u32 = 2048;
pub const WHITE: u8 = 255;
/// Pixels darker than this count as ink.
pub const INK_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RenderError {
    #[error("{rows} rows requested but the text has only {words} word(s)")]
    RowsExceedWords { rows: usize, words: usize },
    #[error("text does not fit the box even at 1 px")]
    Unrenderable,
}

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("png encoding failed: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported image: {0}")]
    Unsupported(String),
}

/// Row-major 8-bit grayscale image; 255 is background, 0 is full ink.
#[derive(Clone, PartialEq, Eq)]
pub struct GlyphImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GlyphImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GlyphImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GlyphImage {
    pub fn blank(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![WHITE; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == width as usize * height as usize).then_some(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn write_png<W: Write>(&self, out: W) -> Result<(), ImageIoError> {
        let mut enc = png::Encoder::new(out, self.width, self.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.pixels)?;
        writer.finish()?;
        Ok(())
    }

    pub fn to_png_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_png(&mut buf).expect("in-memory png encoding");
        buf
    }

    pub fn save_png(&self, path: impl AsRef<FsPath>) -> Result<(), ImageIoError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_png(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Decodes an 8-bit grayscale PNG.
    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self, ImageIoError> {
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder.read_info()?;
        let info = reader.info();
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(ImageIoError::Unsupported(format!(
                "{:?} {:?}",
                info.color_type, info.bit_depth
            )));
        }
        let (w, h) = (info.width, info.height);
        let mut pixels = vec![0; w as usize * h as usize];
        reader.next_frame(&mut pixels)?;
        Ok(Self {
            width: w,
            height: h,
            pixels,
        })
    }

    /// Raw format: width u32 LE, height u32 LE, then the pixel bytes.
    pub fn to_raw_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.pixels.len());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_raw_bytes(bytes: &[u8]) -> Result<Self, ImageIoError> {
        if bytes.len() < 8 {
            return Err(ImageIoError::Unsupported(
                "raw image header truncated".into(),
            ));
        }
        let w = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes"));
        let h = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        Self::from_pixels(w, h, bytes[8..].to_vec()).ok_or_else(|| {
            ImageIoError::Unsupported(format!("raw payload does not hold {w}x{h} pixels"))
        })
    }
}

/// Splits `text` into exactly `rows` lines of whole words, minimizing the
/// longest line (in characters). Among optimal splits the earliest line
/// breaks win.
pub fn split_rows(text: &str, rows: usize) -> Result<Vec<String>, RenderError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let n = words.len();
    if rows == 0 || rows > n {
        return Err(RenderError::RowsExceedWords { rows, words: n });
    }
    let lens: Vec<usize> = words.iter().map(|w| w.chars().count()).collect();
    let mut prefix = vec![0usize; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + lens[i];
    }
    // characters in words[i..j] joined by single spaces
    let line_len = |i: usize, j: usize| prefix[j] - prefix[i] + (j - i - 1);

    // best[k][i]: minimal longest line when words[i..] fill k lines
    let mut best = vec![vec![usize::MAX; n + 1]; rows + 1];
    for (i, b) in best[1].iter_mut().enumerate().take(n) {
        *b = line_len(i, n);
    }
    for k in 2..=rows {
        for i in 0..n {
            for j in i + 1..=n - (k - 1) {
                let rest = best[k - 1][j];
                if rest == usize::MAX {
                    continue;
                }
                best[k][i] = best[k][i].min(line_len(i, j).max(rest));
            }
        }
    }

    let target = best[rows][0];
    let mut out = Vec::with_capacity(rows);
    let mut start = 0;
    for k in (2..=rows).rev() {
        let end = (start + 1..=n - (k - 1))
            .find(|&j| line_len(start, j) <= target && best[k - 1][j] <= target)
            .expect("an optimal break exists");
        out.push(words[start..end].join(" "));
        start = end;
    }
    out.push(words[start..].join(" "));
    Ok(out)
}

fn fits(rows: &[String], box_w: f64, box_h: Option<f64>, font: &Font, size: u32) -> bool {
    let s = f64::from(size);
    let width_ok = rows.iter().all(|r| font.advance(r, s) <= box_w);
    let height_ok = box_h.is_none_or(|h| rows.len() as f64 * font.line_height(s) <= h);
    width_ok && height_ok
}

/// Largest integer font size at which every row fits `box_width_px` and the
/// stacked lines fit `box_height_px` when given.
pub fn fit_font_size(
    rows: &[String],
    box_width_px: f64,
    box_height_px: Option<f64>,
    font: &Font,
) -> Result<u32, RenderError> {
    if box_width_px.is_nan() || box_width_px < 1.0 {
        return Err(RenderError::Unrenderable);
    }
    let upem = font.units_per_em();
    let widest = rows
        .iter()
        .map(|r| font.text_advance_units(r))
        .max()
        .unwrap_or(0);
    let mut estimate = f64::from(MAX_FONT_SIZE);
    if widest > 0 {
        estimate = estimate.min(box_width_px * upem / widest as f64);
    }
    if let Some(h) = box_height_px {
        let unit_line = font.line_height(1.0);
        estimate = estimate.min(h / (rows.len().max(1) as f64 * unit_line));
    }
    let mut size = (estimate.floor().max(1.0) as u32).min(MAX_FONT_SIZE);
    while size < MAX_FONT_SIZE && fits(rows, box_width_px, box_height_px, font, size + 1) {
        size += 1;
    }
    while size >= 1 && !fits(rows, box_width_px, box_height_px, font, size) {
        size -= 1;
    }
    if size == 0 {
        Err(RenderError::Unrenderable)
    } else {
        Ok(size)
    }
}

/// One laid-out line of a box, in the box's unrotated local frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacedLine {
    pub text: String,
    pub font_size: u32,
    /// Pen position at the start of the baseline.
    pub baseline: Point,
    pub advance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxLayout {
    pub rect: RotatedRect,
    pub font_size: u32,
    pub lines: Vec<PlacedLine>,
}

/// Resolves a text box to pixels: box rectangle, font size and line
/// positions.
pub fn layout_box(
    tb: &TextBox,
    canvas: &CanvasSpec,
    font: &Font,
) -> Result<BoxLayout, RenderError> {
    let cw = f64::from(canvas.width);
    let ch = f64::from(canvas.height);
    let rows = split_rows(&tb.text, tb.rows as usize)?;
    let box_w = tb.width * cw;
    let fixed_h = tb.ratio.map(|r| box_w / r);
    let size = fit_font_size(&rows, box_w, fixed_h, font)?;
    let s = f64::from(size);
    let line_h = font.line_height(s);
    let block_h = rows.len() as f64 * line_h;
    let box_h = fixed_h.unwrap_or(block_h);
    let top = (box_h - block_h) / 2.0;
    let ascent = font.ascent(s);
    let lines = rows
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let advance = font.advance(&text, s);
            PlacedLine {
                baseline: Point::new((box_w - advance) / 2.0, top + i as f64 * line_h + ascent),
                font_size: size,
                advance,
                text,
            }
        })
        .collect();
    Ok(BoxLayout {
        rect: RotatedRect {
            origin: Point::new(tb.x * cw, tb.y * ch),
            width: box_w,
            height: box_h,
            yaw_deg: tb.yaw_deg,
        },
        font_size: size,
        lines,
    })
}

/// A box the renderer had to skip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderFailure {
    pub box_index: usize,
    pub error: RenderError,
}

/// Renders with the bundled font; boxes that cannot be laid out are left
/// out of the image.
pub fn render(set: &GlyphInstructionSet) -> GlyphImage {
    render_with_log(set, Font::bundled()).0
}

pub fn render_with_log(set: &GlyphInstructionSet, font: &Font) -> (GlyphImage, Vec<RenderFailure>) {
    let mut image = GlyphImage::blank(set.canvas.width, set.canvas.height);
    let mut failures = Vec::new();
    for (i, tb) in set.boxes.iter().enumerate() {
        match layout_box(tb, &set.canvas, font) {
            Ok(layout) => paint_box(&mut image, &layout, font),
            Err(error) => failures.push(RenderFailure {
                box_index: i,
                error,
            }),
        }
    }
    (image, failures)
}

fn paint_box(image: &mut GlyphImage, layout: &BoxLayout, font: &Font) {
    let mut path = Path::new();
    for line in &layout.lines {
        let scale = f64::from(line.font_size) / font.units_per_em();
        let mut pen_units = 0u64;
        for ch in line.text.chars() {
            let pen_x = line.baseline.x + pen_units as f64 * scale;
            let map = |p: Point| {
                layout.rect.to_image(Point::new(
                    pen_x + p.x * scale,
                    line.baseline.y - p.y * scale,
                ))
            };
            for seg in font.outline(ch) {
                match seg {
                    PathSeg::MoveTo(p) => path.move_to(map(p)),
                    PathSeg::LineTo(p) => path.line_to(map(p)),
                    PathSeg::QuadTo(c, p) => path.quad_to(map(c), map(p)),
                    PathSeg::CubicTo(c1, c2, p) => path.cubic_to(map(c1), map(c2), map(p)),
                    PathSeg::Close => path.close(),
                }
            }
            path.close();
            pen_units += u64::from(font.advance_units(ch));
        }
    }
    let Some(cov) = raster::fill(
        &path,
        &layout.rect,
        image.width as usize,
        image.height as usize,
    ) else {
        return;
    };
    for y in 0..cov.height {
        for x in 0..cov.width {
            let alpha = cov.alpha(x, y);
            if alpha == 0 {
                continue;
            }
            let (gx, gy) = ((x + cov.x0) as u32, (y + cov.y0) as u32);
            let v = WHITE - alpha;
            if v < image.get(gx, gy) {
                image.set(gx, gy, v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InkMeasure {
    pub count: usize,
    pub bounds: Option<PixelRect>,
}

/// Counts ink pixels (value below 128) and their tight bounding rectangle.
pub fn measure_ink(image: &GlyphImage) -> InkMeasure {
    let mut count = 0;
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for y in 0..image.height {
        for x in 0..image.width {
            if image.get(x, y) < INK_THRESHOLD {
                count += 1;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    let bounds = (count > 0).then(|| PixelRect {
        x: x0,
        y: y0,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
    });
    InkMeasure { count, bounds }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn split_rows_examples() {
        assert_eq!(
            split_rows("hello world foo", 2).unwrap(),
            strings(&["hello", "world foo"])
        );
        assert_eq!(split_rows("a b", 2).unwrap(), strings(&["a", "b"]));
        assert_eq!(split_rows("single", 1).unwrap(), strings(&["single"]));
        assert_eq!(
            split_rows("  spaced   out  ", 1).unwrap(),
            strings(&["spaced out"])
        );
        assert_eq!(
            split_rows("a b", 3),
            Err(RenderError::RowsExceedWords { rows: 3, words: 2 })
        );
    }

    #[test]
    fn split_rows_prefers_earlier_breaks_on_ties() {
        // "ab cd ef": splits after word 1 or 2 both give a longest row of 5
        assert_eq!(
            split_rows("ab cd ef", 2).unwrap(),
            strings(&["ab", "cd ef"])
        );
    }

    /// Linear scan over every size, independent of the estimate-and-adjust
    /// path used by `fit_font_size`.
    fn scan_oracle(rows: &[String], w: f64, h: Option<f64>, max: u32) -> Option<u32> {
        let font = Font::bundled();
        (1..=max)
            .filter(|&s| {
                let sf = f64::from(s);
                rows.iter().all(|r| font.advance(r, sf) <= w)
                    && h.is_none_or(|h| rows.len() as f64 * font.line_height(sf) <= h)
            })
            .max()
    }

    #[test]
    fn fit_font_size_matches_scan() {
        let font = Font::bundled();
        let hi = strings(&["Hi"]);
        let s = fit_font_size(&hi, 200.0, None, font).unwrap();
        assert_eq!(Some(s), scan_oracle(&hi, 200.0, None, 400));
        let s2 = fit_font_size(&hi, 400.0, None, font).unwrap();
        assert!(s2 >= 2 * s - 1 && s2 <= 2 * s + 1, "{s} -> {s2}");

        let x = strings(&["x"]);
        assert_eq!(
            fit_font_size(&x, 1.0, None, font).ok(),
            scan_oracle(&x, 1.0, None, 400)
        );

        let two = strings(&["hello", "world"]);
        for (w, h) in [
            (100.0, Some(30.0)),
            (300.0, Some(500.0)),
            (57.0, None),
            (9.0, Some(9.0)),
        ] {
            assert_eq!(
                fit_font_size(&two, w, h, font).ok(),
                scan_oracle(&two, w, h, 400)
            );
        }
    }

    #[test]
    fn unrenderable_when_box_too_small() {
        let font = Font::bundled();
        let rows = strings(&["wide text"]);
        assert_eq!(
            fit_font_size(&rows, 0.5, None, font),
            Err(RenderError::Unrenderable)
        );
        assert_eq!(
            fit_font_size(&rows, 4.0, None, font),
            Err(RenderError::Unrenderable)
        );
        assert_eq!(
            fit_font_size(&rows, 500.0, Some(0.5), font),
            Err(RenderError::Unrenderable)
        );
    }

    #[test]
    fn layout_lines_fit_the_box() {
        let tb = TextBox::new("the quick brown fox jumps", 0.1, 0.1, 0.6).with_rows(3);
        let layout = layout_box(&tb, &CanvasSpec::default(), Font::bundled()).unwrap();
        assert_eq!(layout.lines.len(), 3);
        for line in &layout.lines {
            assert!(line.advance <= layout.rect.width + 0.5);
            assert!(line.baseline.x >= 0.0);
        }
    }

    #[test]
    fn empty_set_is_white() {
        let img = render(&GlyphInstructionSet::default());
        assert_eq!((img.width(), img.height()), (512, 512));
        assert!(img.pixels().iter().all(|&p| p == WHITE));
        assert_eq!(
            measure_ink(&img),
            InkMeasure {
                count: 0,
                bounds: None
            }
        );
    }

    #[test]
    fn measure_single_pixel() {
        let mut img = GlyphImage::blank(64, 64);
        img.set(10, 20, 0);
        img.set(11, 20, 200);
        let m = measure_ink(&img);
        assert_eq!(m.count, 1);
        assert_eq!(
            m.bounds,
            Some(PixelRect {
                x: 10,
                y: 20,
                width: 1,
                height: 1
            })
        );
    }

    #[test]
    fn rendered_text_stays_in_its_box() {
        let set = GlyphInstructionSet::new(
            CanvasSpec::default(),
            vec![TextBox::new("TEST", 0.25, 0.25, 0.5)],
        );
        let img = render(&set);
        let m = measure_ink(&img);
        assert!(m.count > 0);
        let layout = layout_box(&set.boxes[0], &set.canvas, Font::bundled()).unwrap();
        let b = m.bounds.unwrap();
        let r = layout.rect.bounds().dilate(2.0);
        assert!(f64::from(b.x) >= r.x && f64::from(b.x + b.width) <= r.right());
        assert!(f64::from(b.y) >= r.y && f64::from(b.y + b.height) <= r.bottom());
    }

    #[test]
    fn failures_are_logged() {
        let set = GlyphInstructionSet::new(
            CanvasSpec::default(),
            vec![
                TextBox::new("one", 0.1, 0.1, 0.3).with_rows(2),
                TextBox::new("ok", 0.1, 0.5, 0.3),
            ],
        );
        let (img, log) = render_with_log(&set, Font::bundled());
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].box_index, 0);
        assert!(measure_ink(&img).count > 0);
    }

    #[test]
    fn png_and_raw_round_trip() {
        let set = GlyphInstructionSet::new(
            CanvasSpec {
                width: 96,
                height: 64,
            },
            vec![TextBox::new("Ab", 0.1, 0.1, 0.5)],
        );
        let img = render(&set);
        let back = GlyphImage::from_png_bytes(&img.to_png_bytes()).unwrap();
        assert_eq!(back, img);
        let raw = img.to_raw_bytes();
        assert_eq!(&raw[..8], &[96, 0, 0, 0, 64, 0, 0, 0]);
        assert_eq!(GlyphImage::from_raw_bytes(&raw).unwrap(), img);
        assert!(GlyphImage::from_raw_bytes(&raw[..20]).is_err());
    }
}
