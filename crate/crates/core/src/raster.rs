//! Scanline coverage rasterizer for glyph outlines.
//!
//! Coverage is sampled on a fixed 4×4 grid per pixel with the non-zero
//! winding rule. There is no hinting, and every step is plain IEEE
//! arithmetic, so output bytes match on every platform.

use crate::geometry::{Point, RotatedRect};

/// Sub-samples per pixel along each axis.
pub const OVERSAMPLE: usize = 4;
const SAMPLES: u32 = (OVERSAMPLE * OVERSAMPLE) as u32;
/// Maximum chord deviation when flattening curves, in pixels.
const FLATTEN_TOLERANCE: f64 = 0.05;
const MAX_SUBDIVISIONS: usize = 128;

#[derive(Debug, Clone, Copy)]
struct Edge {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    winding: i32,
}

/// A set of closed polylines in image space, filled together.
#[derive(Debug, Default)]
pub struct Path {
    edges: Vec<Edge>,
    start: Option<Point>,
    current: Option<Point>,
}

impl Path {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn move_to(&mut self, p: Point) {
        self.close();
        self.start = Some(p);
        self.current = Some(p);
    }

    pub fn line_to(&mut self, p: Point) {
        if let Some(c) = self.current {
            self.push_edge(c, p);
        } else {
            self.start = Some(p);
        }
        self.current = Some(p);
    }

    pub fn quad_to(&mut self, ctrl: Point, to: Point) {
        let Some(from) = self.current else {
            return self.move_to(to);
        };
        let dd = (from.x - 2.0 * ctrl.x + to.x).hypot(from.y - 2.0 * ctrl.y + to.y);
        let n = subdivisions(dd / (8.0 * FLATTEN_TOLERANCE));
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let mt = 1.0 - t;
            let p = Point::new(
                mt * mt * from.x + 2.0 * mt * t * ctrl.x + t * t * to.x,
                mt * mt * from.y + 2.0 * mt * t * ctrl.y + t * t * to.y,
            );
            self.line_to(if i == n { to } else { p });
        }
    }

    pub fn cubic_to(&mut self, c1: Point, c2: Point, to: Point) {
        let Some(from) = self.current else {
            return self.move_to(to);
        };
        let dd1 = (from.x - 2.0 * c1.x + c2.x).hypot(from.y - 2.0 * c1.y + c2.y);
        let dd2 = (c1.x - 2.0 * c2.x + to.x).hypot(c1.y - 2.0 * c2.y + to.y);
        let n = subdivisions(3.0 * dd1.max(dd2) / (4.0 * FLATTEN_TOLERANCE));
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let mt = 1.0 - t;
            let (a, b, c, d) = (mt * mt * mt, 3.0 * mt * mt * t, 3.0 * mt * t * t, t * t * t);
            let p = Point::new(
                a * from.x + b * c1.x + c * c2.x + d * to.x,
                a * from.y + b * c1.y + c * c2.y + d * to.y,
            );
            self.line_to(if i == n { to } else { p });
        }
    }

    pub fn close(&mut self) {
        if let (Some(s), Some(c)) = (self.start, self.current) {
            if s != c {
                self.push_edge(c, s);
            }
        }
        self.current = self.start;
    }

    fn push_edge(&mut self, a: Point, b: Point) {
        if a.y == b.y {
            return;
        }
        let (winding, (p, q)) = if a.y < b.y { (1, (a, b)) } else { (-1, (b, a)) };
        self.edges.push(Edge {
            x0: p.x,
            y0: p.y,
            x1: q.x,
            y1: q.y,
            winding,
        });
    }
}

fn subdivisions(sq: f64) -> usize {
    (sq.sqrt().ceil() as usize).clamp(1, MAX_SUBDIVISIONS)
}

/// Per-pixel sample counts over a rectangular window of the canvas.
#[derive(Debug)]
pub struct Coverage {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    counts: Vec<u8>,
}

impl Coverage {
    /// 8-bit ink value (0 = no ink, 255 = full) at window coordinates.
    pub fn alpha(&self, x: usize, y: usize) -> u8 {
        let c = u32::from(self.counts[y * self.width + x]);
        ((c * 255 + SAMPLES / 2) / SAMPLES) as u8
    }
}

/// Fills `path` with the non-zero rule, restricted to samples that fall
/// inside `clip` and the `canvas_w × canvas_h` canvas.
pub fn fill(path: &Path, clip: &RotatedRect, canvas_w: usize, canvas_h: usize) -> Option<Coverage> {
    if path.is_empty() {
        return None;
    }
    let b = clip.bounds();
    let x0 = b.x.floor().max(0.0) as usize;
    let y0 = b.y.floor().max(0.0) as usize;
    let x1 = (b.right().ceil().max(0.0) as usize).min(canvas_w);
    let y1 = (b.bottom().ceil().max(0.0) as usize).min(canvas_h);
    if x0 >= x1 || y0 >= y1 {
        return None;
    }
    let (width, height) = (x1 - x0, y1 - y0);
    let mut counts = vec![0u8; width * height];
    let clip_edges = clip.corners();
    let os = OVERSAMPLE as f64;
    let sample_lo = (x0 * OVERSAMPLE) as i64;
    let sample_hi = (x1 * OVERSAMPLE) as i64;

    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for sub_row in y0 * OVERSAMPLE..y1 * OVERSAMPLE {
        let sy = (sub_row as f64 + 0.5) / os;
        let Some((cl, cr)) = horizontal_extent(&clip_edges, sy) else {
            continue;
        };
        crossings.clear();
        for e in &path.edges {
            if e.y0 <= sy && sy < e.y1 {
                let x = e.x0 + (sy - e.y0) * (e.x1 - e.x0) / (e.y1 - e.y0);
                crossings.push((x, e.winding));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let row = (sub_row / OVERSAMPLE - y0) * width;
        let mut winding = 0;
        for pair in crossings.windows(2) {
            winding += pair[0].1;
            if winding == 0 {
                continue;
            }
            let xa = pair[0].0.max(cl);
            let xb = pair[1].0.min(cr);
            if xa >= xb {
                continue;
            }
            // sample k has its center at (k + 0.5) / OVERSAMPLE
            let k_start = ((xa * os - 0.5).ceil() as i64).max(sample_lo);
            let k_end = ((xb * os - 0.5).ceil() as i64).min(sample_hi);
            for k in k_start..k_end {
                let px = k as usize / OVERSAMPLE - x0;
                counts[row + px] += 1;
            }
        }
    }
    Some(Coverage {
        x0,
        y0,
        width,
        height,
        counts,
    })
}

/// Closed x-interval where the horizontal line `y = sy` meets a convex
/// polygon.
fn horizontal_extent(poly: &[Point], sy: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (ymin, ymax) = (a.y.min(b.y), a.y.max(b.y));
        if sy < ymin || sy > ymax {
            continue;
        }
        if a.y == b.y {
            lo = lo.min(a.x.min(b.x));
            hi = hi.max(a.x.max(b.x));
        } else {
            let x = a.x + (sy - a.y) * (b.x - a.x) / (b.y - a.y);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}
