//! Planar primitives shared by the mesh, weight and integration code: points,
//! axis-aligned rectangles and half-plane clipping of convex polygons.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// Axis-aligned open rectangle `(x0, x1) x (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, lo, hi)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn is_valid(&self) -> bool {
        self.x0.is_finite()
            && self.x1.is_finite()
            && self.y0.is_finite()
            && self.y1.is_finite()
            && self.x1 > self.x0
            && self.y1 > self.y0
    }

    /// The rectangle grown by `d` on every side.
    pub fn inflate(&self, d: f64) -> Self {
        Self::new(self.x0 - d, self.x1 + d, self.y0 - d, self.y1 + d)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.x0.max(other.x0),
            self.x1.min(other.x1),
            self.y0.max(other.y0),
            self.y1.min(other.y1),
        );
        r.is_valid().then_some(r)
    }

    /// Clip a convex polygon to the closed rectangle.
    pub fn clip(&self, poly: &[Point]) -> Vec<Point> {
        let mut out = clip_half_plane(poly, [1.0, 0.0], -self.x0);
        out = clip_half_plane(&out, [-1.0, 0.0], self.x1);
        out = clip_half_plane(&out, [0.0, 1.0], -self.y0);
        clip_half_plane(&out, [0.0, -1.0], self.y1)
    }
}

/// Bounding box of a point set as `(xmin, xmax, ymin, ymax)`.
pub fn bounding_box(pts: &[Point]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        b.0 = b.0.min(p[0]);
        b.1 = b.1.max(p[0]);
        b.2 = b.2.min(p[1]);
        b.3 = b.3.max(p[1]);
    }
    b
}

/// Sutherland-Hodgman step: keep the part of `poly` where `n . x + c >= 0`.
pub fn clip_half_plane(poly: &[Point], n: [f64; 2], c: f64) -> Vec<Point> {
    let len = poly.len();
    if len == 0 {
        return Vec::new();
    }
    let side = |p: &Point| n[0] * p[0] + n[1] * p[1] + c;
    let mut out = Vec::with_capacity(len + 2);
    for i in 0..len {
        let cur = poly[i];
        let next = poly[(i + 1) % len];
        let sc = side(&cur);
        let sn = side(&next);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc >= 0.0) != (sn >= 0.0) {
            let t = sc / (sc - sn);
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Fan triangulation of a convex polygon; degenerate slivers are dropped.
pub fn fan_triangles(poly: &[Point]) -> impl Iterator<Item = [Point; 3]> + '_ {
    (1..poly.len().saturating_sub(1))
        .map(move |i| [poly[0], poly[i], poly[i + 1]])
        .filter(|t| triangle_area(t[0], t[1], t[2]) > 0.0)
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_unit_square_by_rect() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let r = Rect::square(0.25, 0.5);
        let c = r.clip(&sq);
        assert!((signed_area(&c) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn clip_triangle_half_plane() {
        let tri = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // x <= 0.5
        let c = clip_half_plane(&tri, [-1.0, 0.0], 0.5);
        assert!((signed_area(&c) - (0.5 - 0.125)).abs() < 1e-15);
        // fully outside
        assert!(clip_half_plane(&tri, [1.0, 0.0], -2.0).is_empty());
    }

    #[test]
    fn inflate_and_intersect() {
        let r = Rect::square(0.375, 0.625).inflate(0.125);
        assert_eq!(r, Rect::square(0.25, 0.75));
        assert!(Rect::square(0.0, 1.0).intersection(&Rect::square(2.0, 3.0)).is_none());
    }
}
