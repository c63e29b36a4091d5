//! Planar geometry shared by the renderer, validation and curation rules.
//!
//! All coordinates are pixels in image space: x grows to the right and y grows
//! downward. Angles are degrees, counterclockwise as seen on screen.

use serde::{Deserialize, Serialize};

/// Tolerance used when deciding that an area is "positive".
pub const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rotates `self` counterclockwise (on screen) by `deg` about `pivot`.
    pub fn rotate_about(self, pivot: Point, deg: f64) -> Point {
        let (sin, cos) = sin_cos_deg(deg);
        let dx = self.x - pivot.x;
        let dy = self.y - pivot.y;
        // y points down, so a visual CCW turn is a clockwise turn in the
        // usual math orientation.
        Point::new(pivot.x + dx * cos + dy * sin, pivot.y - dx * sin + dy * cos)
    }
}

/// Sine and cosine of an angle in degrees.
///
/// Quarter turns are exact and everything else goes through `libm`, so the
/// result does not depend on the platform's math library.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let turn = deg.rem_euclid(360.0);
    match turn {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        _ => libm::sincos(deg.to_radians()),
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle with an inclusive origin and exclusive far edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn dilate(&self, by: f64) -> Rect {
        Rect {
            x: self.x - by,
            y: self.y - by,
            width: self.width + 2.0 * by,
            height: self.height + 2.0 * by,
        }
    }

    /// Closed-interval intersection test; touching edges count.
    pub fn touches(&self, other: &Rect) -> bool {
        self.x <= other.right()
            && other.x <= self.right()
            && self.y <= other.bottom()
            && other.y <= self.bottom()
    }
}

/// Signed shoelace area; positive when the vertices run clockwise on screen.
pub fn signed_area(points: &[Point]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        let q = points[(i + 1) % points.len()];
        acc += p.x * q.y - q.x * p.y;
    }
    acc / 2.0
}

pub fn polygon_area(points: &[Point]) -> f64 {
    signed_area(points).abs()
}

pub fn bounding_rect(points: &[Point]) -> Option<Rect> {
    let first = points.first()?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in &points[1..] {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    Some(Rect {
        x: x0,
        y: y0,
        width: x1 - x0,
        height: y1 - y0,
    })
}

/// A rectangle of size `width × height` anchored at `origin` (its top-left
/// corner before rotation) and rotated by `yaw_deg` about that corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub origin: Point,
    pub width: f64,
    pub height: f64,
    pub yaw_deg: f64,
}

impl RotatedRect {
    /// Maps a point in the box's local frame (origin top-left, unrotated
    /// axes) into image space.
    pub fn to_image(&self, local: Point) -> Point {
        Point::new(self.origin.x + local.x, self.origin.y + local.y)
            .rotate_about(self.origin, self.yaw_deg)
    }

    /// Inverse of [`RotatedRect::to_image`].
    pub fn to_local(&self, image: Point) -> Point {
        let p = image.rotate_about(self.origin, -self.yaw_deg);
        Point::new(p.x - self.origin.x, p.y - self.origin.y)
    }

    /// Corners in order top-left, top-right, bottom-right, bottom-left.
    pub fn corners(&self) -> [Point; 4] {
        [
            self.to_image(Point::new(0.0, 0.0)),
            self.to_image(Point::new(self.width, 0.0)),
            self.to_image(Point::new(self.width, self.height)),
            self.to_image(Point::new(0.0, self.height)),
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        let l = self.to_local(p);
        l.x >= 0.0 && l.y >= 0.0 && l.x <= self.width && l.y <= self.height
    }

    /// Distance-to-rectangle test used by the containment invariant.
    pub fn contains_dilated(&self, p: Point, by: f64) -> bool {
        let l = self.to_local(p);
        let dx = (-l.x).max(l.x - self.width).max(0.0);
        let dy = (-l.y).max(l.y - self.height).max(0.0);
        dx.hypot(dy) <= by
    }

    pub fn bounds(&self) -> Rect {
        bounding_rect(&self.corners()).expect("four corners")
    }
}

/// Clips `subject` against the convex polygon `clip` (Sutherland-Hodgman).
///
/// Both polygons must be convex and share the same winding.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let orientation = signed_area(clip).signum();
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let inside = |p: Point| orientation * cross(a, b, p) >= 0.0;
        let input = std::mem::take(&mut output);
        for (j, &cur) in input.iter().enumerate() {
            let prev = input[(j + input.len() - 1) % input.len()];
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(segment_line_intersection(prev, cur, a, b)),
                (false, true) => {
                    output.push(segment_line_intersection(prev, cur, a, b));
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    output
}

/// Area of the intersection of two convex polygons.
pub fn convex_intersection_area(a: &[Point], b: &[Point]) -> f64 {
    let (a, b) = (oriented(a), oriented(b));
    polygon_area(&clip_convex(&a, &b))
}

fn oriented(points: &[Point]) -> Vec<Point> {
    let mut v = points.to_vec();
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

fn cross(a: Point, b: Point, p: Point) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

fn segment_line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let cp = cross(a, b, p);
    let cq = cross(a, b, q);
    let denom = cp - cq;
    if denom == 0.0 {
        return q;
    }
    let t = cp / denom;
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Screen-space CCW angle of the segment `a → b`, folded into [-90, 90].
pub fn line_angle_deg(a: Point, b: Point) -> f64 {
    let mut deg = libm::atan2(-(b.y - a.y), b.x - a.x).to_degrees();
    if deg > 90.0 {
        deg -= 180.0;
    } else if deg < -90.0 {
        deg += 180.0;
    }
    deg
}
