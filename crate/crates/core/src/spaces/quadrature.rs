//! Symmetric positive-weight triangle rules, Gauss-Legendre rules on `[0,1]`,
//! and element integration with geometric grading toward singular vertices.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{triangle_area, Point};

pub const MAX_DEGREE: usize = 10;
/// Degree used on the geometrically graded pieces next to a singular vertex.
/// Each piece sees the singularity at a quarter of its diameter, where a
/// degree-10 rule only reaches about 6e-6 relative accuracy for `r^{-2/3}`.
pub const SINGULAR_DEGREE: usize = 20;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub degree_exact: usize,
    /// Barycentric coordinates of the points.
    pub points: Vec<[f64; 3]>,
    /// Weights summing to one; multiply by the element area at use.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate `f` over the triangle `tri`.
    pub fn integrate(&self, tri: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        let area = triangle_area(tri[0], tri[1], tri[2]);
        let mut s = 0.0;
        for (b, w) in self.points.iter().zip(&self.weights) {
            s += w * f(bary_to_point(tri, *b));
        }
        s * area
    }
}

pub fn bary_to_point(tri: &[Point; 3], b: [f64; 3]) -> Point {
    [
        b[0] * tri[0][0] + b[1] * tri[1][0] + b[2] * tri[2][0],
        b[0] * tri[0][1] + b[1] * tri[1][1] + b[2] * tri[2][1],
    ]
}

fn build_rule(degree: usize) -> QuadratureRule {
    // Reference triangle of the rule tables is (-1,-1), (1,-1), (-1,1), area 2.
    let (w, p) = fenris_quadrature::polyquad::triangle(degree)
        .expect("rule tables cover degrees up to 20");
    let points = p
        .iter()
        .map(|[r, s]| {
            let l1 = 0.5 * (r + 1.0);
            let l2 = 0.5 * (s + 1.0);
            [1.0 - l1 - l2, l1, l2]
        })
        .collect();
    let weights = w.iter().map(|w| 0.5 * w).collect();
    QuadratureRule {
        degree_exact: degree,
        points,
        weights,
    }
}

/// Symmetric rule on the reference triangle exact for polynomials of total
/// degree `degree_exact`.
pub fn quadrature_rule(degree_exact: usize) -> Result<&'static QuadratureRule> {
    if !(1..=MAX_DEGREE).contains(&degree_exact) {
        return Err(Error::UnsupportedDegree(degree_exact));
    }
    Ok(rule_any(degree_exact))
}

/// Rules up to degree 20, used internally for graded corner pieces.
fn rule_any(degree_exact: usize) -> &'static QuadratureRule {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=SINGULAR_DEGREE).map(build_rule).collect());
    &rules[degree_exact.clamp(1, SINGULAR_DEGREE) - 1]
}

/// Gauss-Legendre rule with `n` points on `[0,1]` (weights sum to one).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (w, x) = fenris_quadrature::univariate::gauss(n);
    (
        w.iter().map(|w| 0.5 * w).collect(),
        x.iter().map(|[x]| 0.5 * (x + 1.0)).collect(),
    )
}

/// Element integration that grades geometrically toward singular vertices.
///
/// A triangle with a vertex at one of `singular_points` is split into the
/// corner triangle scaled by `ratio` and the remaining trapezoid; the corner
/// piece is split again `levels` times before the base rule is applied.
#[derive(Clone, Debug)]
pub struct Integrator {
    pub degree: usize,
    pub singular_points: Vec<Point>,
    pub levels: usize,
    pub ratio: f64,
}

impl Integrator {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            singular_points: Vec::new(),
            levels: 8,
            ratio: 0.25,
        }
    }

    pub fn with_singular_points(mut self, pts: &[Point]) -> Self {
        self.singular_points = pts.to_vec();
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }


    fn singular_vertex(&self, tri: &[Point; 3]) -> Option<usize> {
        let scale = crate::geometry::dist(tri[0], tri[1]).max(crate::geometry::dist(tri[1], tri[2]));
        self.singular_points.iter().find_map(|s| {
            tri.iter()
                .position(|v| crate::geometry::dist(*v, *s) <= 1e-12 * scale)
        })
    }

    /// Visit `(point, weight)` pairs whose weights sum to the triangle area.
    pub fn for_each(&self, tri: &[Point; 3], mut f: impl FnMut(Point, f64)) {
        let singular = self.singular_vertex(tri);
        let rule = rule_any(if singular.is_some() { SINGULAR_DEGREE } else { self.degree });
        let mut apply = |t: &[Point; 3]| {
            let area = triangle_area(t[0], t[1], t[2]);
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                f(bary_to_point(t, *b), w * area);
            }
        };
        match singular {
            None => apply(tri),
            Some(i) => {
                let s = tri[i];
                let mut b = tri[(i + 1) % 3];
                let mut c = tri[(i + 2) % 3];
                let lerp = |p: Point, t: f64| [s[0] + t * (p[0] - s[0]), s[1] + t * (p[1] - s[1])];
                for _ in 0..self.levels {
                    let b2 = lerp(b, self.ratio);
                    let c2 = lerp(c, self.ratio);
                    apply(&[b2, b, c]);
                    apply(&[b2, c, c2]);
                    b = b2;
                    c = c2;
                }
                apply(&[s, b, c]);
            }
        }
    }

    pub fn integrate(&self, tri: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        let mut s = 0.0;
        self.for_each(tri, |p, w| s += w * f(p));
        s
    }
}
