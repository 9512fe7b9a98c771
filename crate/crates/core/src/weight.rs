//! Piecewise-linear cutoff `alpha = min(ramp_x(x), ramp_y(y))` for a
//! rectangle `S` with band width `epsilon`, and exact weighted integration.
//!
//! Each ramp is 1 on `[a, b]`, 0 outside `[a - eps, b + eps]` and linear in
//! between. Elements are cut along the eight ramp lines and, inside each
//! cell, along the locus `ramp_x = ramp_y`, so that `alpha` is a single
//! linear function on every piece.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, clip_half_plane, fan_triangles, signed_area, Point, Rect};
use crate::mesh::TriMesh;
use crate::spaces::quadrature::{quadrature_rule, Integrator};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFn {
    pub s: Rect,
    pub epsilon: f64,
    /// Support of `alpha`: `S` grown by `epsilon` in the max norm.
    pub omega_prime: Rect,
    pub grad_linf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    ExactClipped,
    QuadratureFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormResult {
    pub value: f64,
    pub integration_mode: IntegrationMode,
    pub elements_clipped: usize,
}

/// Linear function `c0 + c1 * coordinate` of one ramp on one interval.
#[derive(Clone, Copy, Debug)]
struct Piece {
    lo: f64,
    hi: f64,
    c0: f64,
    c1: f64,
}

fn ramp_pieces(a: f64, b: f64, eps: f64) -> [Piece; 3] {
    [
        Piece { lo: a - eps, hi: a, c0: 1.0 - a / eps, c1: 1.0 / eps },
        Piece { lo: a, hi: b, c0: 1.0, c1: 0.0 },
        Piece { lo: b, hi: b + eps, c0: 1.0 + b / eps, c1: -1.0 / eps },
    ]
}

fn ramp(x: f64, a: f64, b: f64, eps: f64) -> f64 {
    if x <= a - eps || x >= b + eps {
        0.0
    } else if x < a {
        1.0 + (x - a) / eps
    } else if x <= b {
        1.0
    } else {
        1.0 - (x - b) / eps
    }
}

impl WeightFn {
    pub fn alpha(&self, p: Point) -> f64 {
        let s = &self.s;
        ramp(p[0], s.x0, s.x1, self.epsilon).min(ramp(p[1], s.y0, s.y1, self.epsilon))
    }

    /// Split the convex polygon `poly` into pieces on which `alpha` is the
    /// linear function `c[0] + c[1] x + c[2] y`.
    fn linear_pieces(&self, poly: &[Point], out: &mut Vec<(Vec<Point>, [f64; 3])>) {
        let s = &self.s;
        for px in ramp_pieces(s.x0, s.x1, self.epsilon) {
            let cx = clip_half_plane(&clip_half_plane(poly, [1.0, 0.0], -px.lo), [-1.0, 0.0], px.hi);
            if cx.is_empty() {
                continue;
            }
            for py in ramp_pieces(s.y0, s.y1, self.epsilon) {
                let c = clip_half_plane(&clip_half_plane(&cx, [0.0, 1.0], -py.lo), [0.0, -1.0], py.hi);
                if c.is_empty() {
                    continue;
                }
                let lx = [px.c0, px.c1, 0.0];
                let ly = [py.c0, 0.0, py.c1];
                if px.c1 == 0.0 && py.c1 == 0.0 {
                    out.push((c, lx));
                    continue;
                }
                // where lx - ly >= 0 the minimum is ly
                let n = [lx[1] - ly[1], lx[2] - ly[2]];
                let k = lx[0] - ly[0];
                let a = clip_half_plane(&c, n, k);
                if !a.is_empty() {
                    out.push((a, ly));
                }
                let b = clip_half_plane(&c, [-n[0], -n[1]], -k);
                if !b.is_empty() {
                    out.push((b, lx));
                }
            }
        }
    }
}

/// Cutoff for the rectangle `s` (intersected with the mesh domain when
/// integrating) and band width `epsilon`.
pub fn make_weight(s: Rect, epsilon: f64, mesh: &TriMesh) -> Result<WeightFn> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("band width must be positive, got {epsilon}")));
    }
    if !s.is_valid() {
        return Err(Error::InvalidArgument(format!("invalid subdomain rectangle {s:?}")));
    }
    let (x0, x1, y0, y1) = bounding_box(mesh.vertices());
    if s.intersection(&Rect::new(x0, x1, y0, y1)).is_none() {
        return Err(Error::InvalidArgument("subdomain does not meet the domain".into()));
    }
    Ok(WeightFn {
        s,
        epsilon,
        omega_prime: s.inflate(epsilon),
        grad_linf: 1.0 / epsilon,
    })
}

fn tri_polygon(mesh: &TriMesh, t: usize) -> Vec<Point> {
    mesh.tri_points(t).to_vec()
}

fn poly_bbox_inside(poly: &[Point], r: &Rect) -> bool {
    poly.iter().all(|p| r.contains_closed(*p))
}

fn poly_bbox_outside(poly: &[Point], r: &Rect) -> bool {
    let (x0, x1, y0, y1) = bounding_box(poly);
    x1 <= r.x0 || x0 >= r.x1 || y1 <= r.y0 || y0 >= r.y1
}

/// `int alpha |g|^2` for an integrand that is a polynomial of degree at most
/// `poly_degree` on every element.
pub fn weighted_integral(
    mesh: &TriMesh,
    alpha: &WeightFn,
    poly_degree: usize,
    g: &dyn Fn(usize, Point) -> [f64; 2],
) -> Result<WeightedNormResult> {
    let rule = quadrature_rule((2 * poly_degree + 1).max(1))?;
    let fallback = quadrature_rule(8)?;
    let mut total = 0.0;
    let mut mode = IntegrationMode::ExactClipped;
    let mut clipped = 0;
    let mut pieces = Vec::new();
    for t in 0..mesh.num_triangles() {
        let poly = tri_polygon(mesh, t);
        if poly_bbox_outside(&poly, &alpha.omega_prime) {
            continue;
        }
        pieces.clear();
        alpha.linear_pieces(&poly, &mut pieces);
        let support = alpha.omega_prime.clip(&poly);
        let covered: f64 = pieces.iter().map(|(p, _)| signed_area(p)).sum();
        let expected = signed_area(&support);
        if (covered - expected).abs() > 1e-12 * mesh.area(t) {
            mode = IntegrationMode::QuadratureFallback;
            total += fallback.integrate(&mesh.tri_points(t), |p| {
                let v = g(t, p);
                alpha.alpha(p) * (v[0] * v[0] + v[1] * v[1])
            });
            continue;
        }
        if pieces.len() > 1 || !poly_bbox_inside(&poly, &alpha.s) {
            clipped += 1;
        }
        for (piece, c) in &pieces {
            for tri in fan_triangles(piece) {
                total += rule.integrate(&tri, |p| {
                    let v = g(t, p);
                    (c[0] + c[1] * p[0] + c[2] * p[1]) * (v[0] * v[0] + v[1] * v[1])
                });
            }
        }
    }
    Ok(WeightedNormResult {
        value: total.max(0.0),
        integration_mode: mode,
        elements_clipped: clipped,
    })
}

/// `|g|_alpha = sqrt(int alpha |g|^2)`.
pub fn weighted_seminorm(
    mesh: &TriMesh,
    alpha: &WeightFn,
    poly_degree: usize,
    g: &dyn Fn(usize, Point) -> [f64; 2],
) -> Result<WeightedNormResult> {
    let mut r = weighted_integral(mesh, alpha, poly_degree, g)?;
    r.value = r.value.sqrt();
    Ok(r)
}

/// `int_{region} h` over the mesh domain, elements cut by the region
/// boundary. `None` integrates over the whole domain.
pub fn region_integral(
    mesh: &TriMesh,
    region: Option<&Rect>,
    integ: &Integrator,
    h: &dyn Fn(usize, Point) -> f64,
) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.tri_points(t);
        match region {
            None => total += integ.integrate(&tri, |p| h(t, p)),
            Some(r) => {
                if poly_bbox_outside(&tri, r) {
                    continue;
                }
                if poly_bbox_inside(&tri, r) {
                    total += integ.integrate(&tri, |p| h(t, p));
                } else {
                    let c = r.clip(&tri);
                    for piece in fan_triangles(&c) {
                        total += integ.integrate(&piece, |p| h(t, p));
                    }
                }
            }
        }
    }
    total
}

/// L2 norm of a vector integrand over `region` (or the whole domain).
pub fn vector_norm(
    mesh: &TriMesh,
    region: Option<&Rect>,
    integ: &Integrator,
    g: &dyn Fn(usize, Point) -> [f64; 2],
) -> f64 {
    region_integral(mesh, region, integ, &|t, p| {
        let v = g(t, p);
        v[0] * v[0] + v[1] * v[1]
    })
    .sqrt()
}
