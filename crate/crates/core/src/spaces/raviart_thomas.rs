//! Local Raviart-Thomas bases of degree 0 and 1.
//!
//! Fields are expanded in monomials of the scaled local coordinate
//! `xi = (x - centroid) / scale`:
//! degree 0: `(1,0), (0,1), xi`;
//! degree 1: `(1,0), (0,1), (xi1,0), (xi2,0), (0,xi1), (0,xi2), xi1*xi, xi2*xi`.
//!
//! Degrees of freedom use the global edge normal (the outward normal of the
//! lower-indexed triangle). Degree 0: the flux through each edge. Degree 1:
//! two moments per edge against `1` and `2s-1` (`s` runs from the lower to the
//! higher global vertex), then the element means of both components.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::TriMesh;
use crate::spaces::quadrature::{gauss_legendre_unit, quadrature_rule};

pub const MAX_LOCAL: usize = 8;

pub fn local_dim(degree: usize) -> usize {
    match degree {
        0 => 3,
        1 => 8,
        _ => unreachable!("degree checked by the space descriptor"),
    }
}

/// Values of the monomial fields at scaled coordinate `xi`.
pub fn monomials(degree: usize, xi: Point) -> [[f64; 2]; MAX_LOCAL] {
    let [a, b] = xi;
    let mut m = [[0.0; 2]; MAX_LOCAL];
    m[0] = [1.0, 0.0];
    m[1] = [0.0, 1.0];
    if degree == 0 {
        m[2] = [a, b];
    } else {
        m[2] = [a, 0.0];
        m[3] = [b, 0.0];
        m[4] = [0.0, a];
        m[5] = [0.0, b];
        m[6] = [a * a, a * b];
        m[7] = [a * b, b * b];
    }
    m
}

/// Divergences of the monomial fields times `scale`.
pub fn monomial_divergences(degree: usize, xi: Point) -> [f64; MAX_LOCAL] {
    let mut d = [0.0; MAX_LOCAL];
    if degree == 0 {
        d[2] = 2.0;
    } else {
        d[2] = 1.0;
        d[5] = 1.0;
        d[6] = 3.0 * xi[0];
        d[7] = 3.0 * xi[1];
    }
    d
}

/// Local frame and basis of one element.
#[derive(Clone, Debug)]
pub struct RtElement {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
    /// Column `j` holds the monomial coefficients of local basis function `j`.
    pub basis: DMatrix<f64>,
    /// Global dof index of each local dof.
    pub dofs: [usize; MAX_LOCAL],
    /// Sign relating the global edge normal to the outward normal of this
    /// element, per local edge.
    pub signs: [f64; 3],
}

impl RtElement {
    pub fn new(mesh: &TriMesh, t: usize, degree: usize) -> Result<Self> {
        if degree > 1 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let tri = mesh.tri_points(t);
        let center = mesh.centroid(t);
        let scale = mesh.element_geometry(t).h;
        let n = local_dim(degree);
        let signs = mesh.tri_edge_signs(t);
        let edges = mesh.tri_edges(t);
        let mut dofs = [0usize; MAX_LOCAL];
        let ne = mesh.num_edges();
        for i in 0..3 {
            if degree == 0 {
                dofs[i] = edges[i];
            } else {
                dofs[2 * i] = 2 * edges[i];
                dofs[2 * i + 1] = 2 * edges[i] + 1;
            }
        }
        if degree == 1 {
            dofs[6] = 2 * ne + 2 * t;
            dofs[7] = 2 * ne + 2 * t + 1;
        }
        let to_xi = |p: Point| [(p[0] - center[0]) / scale, (p[1] - center[1]) / scale];

        // Vandermonde matrix: v[(i, j)] = dof_i(monomial_j).
        let mut v = DMatrix::<f64>::zeros(n, n);
        let (gw, gx) = gauss_legendre_unit(3);
        for i in 0..3 {
            let e = edges[i];
            let [lo, hi] = mesh.edges()[e];
            let a = mesh.vertex(lo);
            let b = mesh.vertex(hi);
            let len = mesh.edge_length(e);
            // outward normal of local edge i, then flipped to the global normal
            let p = tri[(i + 1) % 3];
            let q = tri[(i + 2) % 3];
            let nrm = [(q[1] - p[1]) / len * signs[i], -(q[0] - p[0]) / len * signs[i]];
            for (w, s) in gw.iter().zip(&gx) {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let m = monomials(degree, to_xi(x));
                for j in 0..n {
                    let mn = m[j][0] * nrm[0] + m[j][1] * nrm[1];
                    if degree == 0 {
                        v[(i, j)] += w * len * mn;
                    } else {
                        v[(2 * i, j)] += w * len * mn;
                        v[(2 * i + 1, j)] += w * len * mn * (2.0 * s - 1.0);
                    }
                }
            }
        }
        if degree == 1 {
            let rule = quadrature_rule(2)?;
            for (bc, w) in rule.points.iter().zip(&rule.weights) {
                let x = crate::spaces::quadrature::bary_to_point(&tri, *bc);
                let m = monomials(degree, to_xi(x));
                for j in 0..n {
                    v[(6, j)] += w * m[j][0];
                    v[(7, j)] += w * m[j][1];
                }
            }
        }
        let basis = v
            .try_inverse()
            .ok_or_else(|| Error::InvalidMesh(format!("degenerate element {t}")))?;
        Ok(Self {
            degree,
            center,
            scale,
            basis,
            dofs,
            signs,
        })
    }

    pub fn dim(&self) -> usize {
        local_dim(self.degree)
    }

    pub fn xi(&self, p: Point) -> Point {
        [(p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale]
    }

    /// Values of all local basis functions at the physical point `p`.
    pub fn basis_values(&self, p: Point) -> [[f64; 2]; MAX_LOCAL] {
        let m = monomials(self.degree, self.xi(p));
        let n = self.dim();
        let mut out = [[0.0; 2]; MAX_LOCAL];
        for (j, o) in out.iter_mut().enumerate().take(n) {
            for l in 0..n {
                let c = self.basis[(l, j)];
                o[0] += c * m[l][0];
                o[1] += c * m[l][1];
            }
        }
        out
    }

    pub fn basis_divergences(&self, p: Point) -> [f64; MAX_LOCAL] {
        let d = monomial_divergences(self.degree, self.xi(p));
        let n = self.dim();
        let mut out = [0.0; MAX_LOCAL];
        for (j, o) in out.iter_mut().enumerate().take(n) {
            for l in 0..n {
                *o += self.basis[(l, j)] * d[l];
            }
            *o /= self.scale;
        }
        out
    }

    /// Monomial coefficients of the field with local dof values `g`.
    pub fn monomial_coefficients(&self, g: &[f64]) -> [f64; MAX_LOCAL] {
        let n = self.dim();
        let mut c = [0.0; MAX_LOCAL];
        for (l, cl) in c.iter_mut().enumerate().take(n) {
            for (j, gj) in g.iter().enumerate().take(n) {
                *cl += self.basis[(l, j)] * gj;
            }
        }
        c
    }
}
