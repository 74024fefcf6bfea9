//! Planar geometry over pixel coordinates: convex hulls, polygon clipping and
//! pixel-center rasterization.
//!
//! Pixel `(x, y)` covers `[x, x+1) × [y, y+1)`; a pixel belongs to a polygon
//! when its center `(x + 0.5, y + 0.5)` does (even-odd rule).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned pixel rectangle, serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        Self { x: v[0], y: v[1], w: v[2], h: v[3] }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    /// Intersection with `[0, width) × [0, height)`.
    pub fn clamp_to(&self, width: usize, height: usize) -> BBox {
        let x0 = self.x.clamp(0.0, width as f64);
        let y0 = self.y.clamp(0.0, height as f64);
        let x1 = (self.x + self.w).clamp(0.0, width as f64);
        let y1 = (self.y + self.h).clamp(0.0, height as f64);
        BBox { x: x0, y: y0, w: x1 - x0, h: y1 - y0 }
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Collinear points are dropped; the result is
/// counter-clockwise in a y-up frame and contains no repeated vertex.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Even-odd point-in-polygon test.
pub fn polygon_contains(poly: &[Point], p: Point) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    (p.x - cx).hypot(p.y - cy)
}

/// Distance from `p` to the polygon boundary (or to the point / segment for
/// degenerate inputs). Infinite for an empty polygon.
pub fn boundary_distance(poly: &[Point], p: Point) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => (p.x - poly[0].x).hypot(p.y - poly[0].y),
        n => (0..n).map(|i| segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min),
    }
}

/// Sutherland–Hodgman clip against `[0, width] × [0, height]`.
pub fn clip_to_rect(poly: &[Point], width: f64, height: f64) -> Vec<Point> {
    type Edge = (fn(Point, f64) -> bool, fn(Point, Point, f64) -> Point);
    fn lerp_x(a: Point, b: Point, x: f64) -> Point {
        let t = (x - a.x) / (b.x - a.x);
        Point::new(x, a.y + t * (b.y - a.y))
    }
    fn lerp_y(a: Point, b: Point, y: f64) -> Point {
        let t = (y - a.y) / (b.y - a.y);
        Point::new(a.x + t * (b.x - a.x), y)
    }
    let edges: [(Edge, f64); 4] = [
        ((|p, v| p.x >= v, lerp_x), 0.0),
        ((|p, v| p.x <= v, lerp_x), width),
        ((|p, v| p.y >= v, lerp_y), 0.0),
        ((|p, v| p.y <= v, lerp_y), height),
    ];
    let mut out = poly.to_vec();
    for ((inside, intersect), v) in edges {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            match (inside(cur, v), inside(prev, v)) {
                (true, true) => out.push(cur),
                (true, false) => {
                    out.push(intersect(prev, cur, v));
                    out.push(cur);
                }
                (false, true) => out.push(intersect(prev, cur, v)),
                (false, false) => {}
            }
            prev = cur;
        }
    }
    out
}

/// Calls `f(x, y)` for every pixel whose center lies inside `poly` or within
/// `dilation` pixels of its boundary. Visits in row-major order.
pub fn rasterize(poly: &[Point], width: usize, height: usize, dilation: f64, mut f: impl FnMut(usize, usize)) {
    if poly.is_empty() || width == 0 || height == 0 {
        return;
    }
    if poly.len() < 3 && dilation <= 0.0 {
        return;
    }
    let pad = dilation.max(0.0);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let lo = |v: f64| (v - pad - 0.5).floor().max(0.0) as usize;
    let hi = |v: f64, limit: usize| ((v + pad - 0.5).ceil().max(-1.0) as i64).min(limit as i64 - 1);
    let (px0, py0) = (lo(x0), lo(y0));
    let (px1, py1) = (hi(x1, width), hi(y1, height));
    if px1 < 0 || py1 < 0 {
        return;
    }
    for y in py0..=py1 as usize {
        for x in px0..=px1 as usize {
            let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
            if polygon_contains(poly, c) || (pad > 0.0 && boundary_distance(poly, c) <= pad) {
                f(x, y);
            }
        }
    }
}

/// Shoelace area (absolute).
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice.abs() / 2.0
}

pub fn centroid(points: &[Point]) -> Point {
    let n = points.len().max(1) as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}
