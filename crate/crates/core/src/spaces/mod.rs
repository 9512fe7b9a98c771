//! Finite element spaces on a [`TriMesh`]: continuous Lagrange P1/P2,
//! discontinuous P0/P1 and Raviart-Thomas RT0/RT1, with the elementwise L2
//! projection onto the discontinuous spaces.

pub mod lagrange;
pub mod quadrature;
pub mod raviart_thomas;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{BoundaryKind, TriMesh};
pub use quadrature::{quadrature_rule, Integrator, QuadratureRule};
use raviart_thomas::{monomial_divergences, monomials, RtElement, MAX_LOCAL};

/// Scalar data such as a load or boundary function.
pub type ScalarFn = dyn Fn(Point) -> f64 + Send + Sync;
/// Vector data such as an exact gradient.
pub type VectorFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lagrange,
    Discontinuous,
    RaviartThomas,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceDescriptor {
    pub family: Family,
    pub degree: usize,
    pub dof_count: usize,
    pub dirichlet_dofs: Vec<usize>,
    pub mean_zero_constrained: bool,
    mesh_counts: [usize; 3],
}

fn counts(mesh: &TriMesh) -> [usize; 3] {
    [mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles()]
}

impl SpaceDescriptor {
    /// Continuous Lagrange space; Dirichlet dofs are taken from the mesh
    /// markers and the mean-zero flag is set when there are none.
    pub fn lagrange(mesh: &TriMesh, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let nv = mesh.num_vertices();
        let dof_count = if degree == 1 { nv } else { nv + mesh.num_edges() };
        let mut dir = Vec::new();
        for (e, kind) in mesh.boundary_edges() {
            if kind == BoundaryKind::Dirichlet {
                dir.extend_from_slice(&mesh.edges()[e]);
                if degree == 2 {
                    dir.push(nv + e);
                }
            }
        }
        dir.sort_unstable();
        dir.dedup();
        Ok(Self {
            family: Family::Lagrange,
            degree,
            dof_count,
            mean_zero_constrained: !mesh.has_dirichlet(),
            dirichlet_dofs: dir,
            mesh_counts: counts(mesh),
        })
    }

    /// Discontinuous P0 or P1. `mean_zero` marks the pure-Neumann multiplier space.
    pub fn discontinuous(mesh: &TriMesh, degree: usize, mean_zero: bool) -> Result<Self> {
        if degree > 1 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let nt = mesh.num_triangles();
        Ok(Self {
            family: Family::Discontinuous,
            degree,
            dof_count: if degree == 0 { nt } else { 3 * nt },
            dirichlet_dofs: Vec::new(),
            mean_zero_constrained: mean_zero,
            mesh_counts: counts(mesh),
        })
    }

    pub fn raviart_thomas(mesh: &TriMesh, degree: usize) -> Result<Self> {
        if degree > 1 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();
        Ok(Self {
            family: Family::RaviartThomas,
            degree,
            dof_count: if degree == 0 { ne } else { 2 * ne + 2 * nt },
            dirichlet_dofs: Vec::new(),
            mean_zero_constrained: false,
            mesh_counts: counts(mesh),
        })
    }

    pub fn matches(&self, mesh: &TriMesh) -> bool {
        self.mesh_counts == counts(mesh)
    }

    fn check(&self, mesh: &TriMesh) -> Result<()> {
        if self.matches(mesh) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("space was built on a different mesh".into()))
        }
    }

    /// Number of local basis functions per element.
    pub fn local_dim(&self) -> usize {
        match self.family {
            Family::Lagrange => lagrange::local_dim(self.degree),
            Family::Discontinuous => lagrange::local_dim(self.degree),
            Family::RaviartThomas => raviart_thomas::local_dim(self.degree),
        }
    }

    /// Global indices of the scalar dofs on element `t` (Lagrange and
    /// discontinuous families).
    pub fn local_dofs(&self, mesh: &TriMesh, t: usize) -> [usize; 6] {
        let mut d = [0usize; 6];
        match (self.family, self.degree) {
            (Family::Lagrange, k) => {
                d[..3].copy_from_slice(&mesh.triangles()[t]);
                if k == 2 {
                    let nv = mesh.num_vertices();
                    for (i, e) in mesh.tri_edges(t).iter().enumerate() {
                        d[3 + i] = nv + e;
                    }
                }
            }
            (Family::Discontinuous, 0) => d[0] = t,
            (Family::Discontinuous, _) => d[..3].copy_from_slice(&[3 * t, 3 * t + 1, 3 * t + 2]),
            (Family::RaviartThomas, _) => unreachable!("vector space has no scalar dofs"),
        }
        d
    }
}

/// Scalar finite element function.
#[derive(Clone, Debug)]
pub struct Field {
    pub space: SpaceDescriptor,
    pub coefficients: Vec<f64>,
}

impl Field {
    pub fn new(space: SpaceDescriptor, coefficients: Vec<f64>) -> Result<Self> {
        if space.family == Family::RaviartThomas {
            return Err(Error::InvalidArgument("use Flux for Raviart-Thomas fields".into()));
        }
        if coefficients.len() != space.dof_count {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                space.dof_count,
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("field coefficients"));
        }
        Ok(Self { space, coefficients })
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        let n = space.dof_count;
        Self {
            space,
            coefficients: vec![0.0; n],
        }
    }

    /// Nodal interpolant in a Lagrange space.
    pub fn interpolate(mesh: &TriMesh, space: SpaceDescriptor, f: &ScalarFn) -> Result<Self> {
        space.check(mesh)?;
        if space.family != Family::Lagrange {
            return Err(Error::InvalidArgument("interpolation needs a Lagrange space".into()));
        }
        let nv = mesh.num_vertices();
        let mut c: Vec<f64> = mesh.vertices().iter().map(|p| f(*p)).collect();
        if space.degree == 2 {
            for [a, b] in mesh.edges() {
                let (p, q) = (mesh.vertex(*a), mesh.vertex(*b));
                c.push(f([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]));
            }
        }
        debug_assert_eq!(c.len(), nv + if space.degree == 2 { mesh.num_edges() } else { 0 });
        Self::new(space, c)
    }

    fn local(&self, mesh: &TriMesh, t: usize) -> ([f64; 6], usize) {
        let n = self.space.local_dim();
        let dofs = self.space.local_dofs(mesh, t);
        let mut c = [0.0; 6];
        for i in 0..n {
            c[i] = self.coefficients[dofs[i]];
        }
        (c, n)
    }

    /// Value on element `t` at barycentric point `l`.
    pub fn value_bary(&self, mesh: &TriMesh, t: usize, l: [f64; 3]) -> f64 {
        let (c, n) = self.local(mesh, t);
        if self.space.degree == 0 {
            return c[0];
        }
        let mut phi = [0.0; 6];
        lagrange::basis_values(self.space.degree, l, &mut phi);
        (0..n).map(|i| c[i] * phi[i]).sum()
    }

    pub fn grad_bary(&self, mesh: &TriMesh, t: usize, l: [f64; 3]) -> [f64; 2] {
        if self.space.degree == 0 {
            return [0.0, 0.0];
        }
        let (c, n) = self.local(mesh, t);
        let gl = lagrange::barycentric_gradients(&mesh.tri_points(t));
        let mut g = [[0.0; 2]; 6];
        lagrange::basis_gradients(self.space.degree, l, &gl, &mut g);
        let mut out = [0.0; 2];
        for i in 0..n {
            out[0] += c[i] * g[i][0];
            out[1] += c[i] * g[i][1];
        }
        out
    }

    pub fn value_at(&self, mesh: &TriMesh, t: usize, p: Point) -> f64 {
        self.value_bary(mesh, t, lagrange::barycentric(&mesh.tri_points(t), p))
    }

    pub fn grad_at(&self, mesh: &TriMesh, t: usize, p: Point) -> [f64; 2] {
        self.grad_bary(mesh, t, lagrange::barycentric(&mesh.tri_points(t), p))
    }

    /// Checked evaluation of value and gradient.
    pub fn evaluate(&self, mesh: &TriMesh, t: usize, l: [f64; 3]) -> Result<(f64, [f64; 2])> {
        self.space.check(mesh)?;
        if t >= mesh.num_triangles() {
            return Err(Error::InvalidArgument(format!("element {t} out of range")));
        }
        Ok((self.value_bary(mesh, t, l), self.grad_bary(mesh, t, l)))
    }

    /// Integral of the field over the domain.
    pub fn integral(&self, mesh: &TriMesh) -> f64 {
        (0..mesh.num_triangles())
            .map(|t| {
                let a = mesh.area(t);
                match (self.space.family, self.space.degree) {
                    (_, 0) => a * self.coefficients[t],
                    (Family::Discontinuous, _) | (Family::Lagrange, 1) => {
                        let (c, _) = self.local(mesh, t);
                        a * (c[0] + c[1] + c[2]) / 3.0
                    }
                    _ => {
                        // P2: vertex functions integrate to 0, edge functions to a/3.
                        let (c, _) = self.local(mesh, t);
                        a * (c[3] + c[4] + c[5]) / 3.0
                    }
                }
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct LocalRt {
    center: Point,
    scale: f64,
    coef: [f64; MAX_LOCAL],
}

/// Raviart-Thomas vector field. The global normal of an edge points out of
/// its lower-indexed triangle.
#[derive(Clone, Debug)]
pub struct Flux {
    pub space: SpaceDescriptor,
    pub coefficients: Vec<f64>,
    local: Vec<LocalRt>,
}

impl Flux {
    pub fn new(mesh: &TriMesh, space: SpaceDescriptor, coefficients: Vec<f64>) -> Result<Self> {
        space.check(mesh)?;
        if space.family != Family::RaviartThomas {
            return Err(Error::InvalidArgument("flux needs a Raviart-Thomas space".into()));
        }
        if coefficients.len() != space.dof_count {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                space.dof_count,
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("flux coefficients"));
        }
        let mut local = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let el = RtElement::new(mesh, t, space.degree)?;
            let n = el.dim();
            let g: Vec<f64> = el.dofs[..n].iter().map(|&d| coefficients[d]).collect();
            local.push(LocalRt {
                center: el.center,
                scale: el.scale,
                coef: el.monomial_coefficients(&g),
            });
        }
        Ok(Self {
            space,
            coefficients,
            local,
        })
    }

    pub fn zeros(mesh: &TriMesh, degree: usize) -> Result<Self> {
        let space = SpaceDescriptor::raviart_thomas(mesh, degree)?;
        let n = space.dof_count;
        Self::new(mesh, space, vec![0.0; n])
    }

    /// Canonical interpolant of a smooth vector field (degree-0 or degree-1
    /// dofs computed with Gauss quadrature).
    pub fn interpolate(mesh: &TriMesh, degree: usize, q: &VectorFn) -> Result<Self> {
        let space = SpaceDescriptor::raviart_thomas(mesh, degree)?;
        let mut c = vec![0.0; space.dof_count];
        let (gw, gx) = quadrature::gauss_legendre_unit(6);
        for (e, [lo, hi]) in mesh.edges().iter().enumerate() {
            let (a, b) = (mesh.vertex(*lo), mesh.vertex(*hi));
            let len = mesh.edge_length(e);
            let (t, _) = mesh.edge_triangles(e);
            let tri = mesh.tri_points(t);
            let i = mesh.tri_edges(t).iter().position(|&x| x == e).expect("incident edge");
            let p = tri[(i + 1) % 3];
            let r = tri[(i + 2) % 3];
            let nrm = [(r[1] - p[1]) / len, -(r[0] - p[0]) / len];
            for (w, s) in gw.iter().zip(&gx) {
                let v = q([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                let vn = v[0] * nrm[0] + v[1] * nrm[1];
                if degree == 0 {
                    c[e] += w * len * vn;
                } else {
                    c[2 * e] += w * len * vn;
                    c[2 * e + 1] += w * len * vn * (2.0 * s - 1.0);
                }
            }
        }
        if degree == 1 {
            let ne = mesh.num_edges();
            let rule = quadrature_rule(8)?;
            for t in 0..mesh.num_triangles() {
                let tri = mesh.tri_points(t);
                for (bc, w) in rule.points.iter().zip(&rule.weights) {
                    let v = q(quadrature::bary_to_point(&tri, *bc));
                    c[2 * ne + 2 * t] += w * v[0];
                    c[2 * ne + 2 * t + 1] += w * v[1];
                }
            }
        }
        Self::new(mesh, space, c)
    }

    pub fn degree(&self) -> usize {
        self.space.degree
    }

    /// Value on element `t` at the physical point `p`.
    pub fn value_at(&self, t: usize, p: Point) -> [f64; 2] {
        let l = &self.local[t];
        let m = monomials(self.space.degree, [(p[0] - l.center[0]) / l.scale, (p[1] - l.center[1]) / l.scale]);
        let mut out = [0.0; 2];
        for (c, mj) in l.coef.iter().zip(&m) {
            out[0] += c * mj[0];
            out[1] += c * mj[1];
        }
        out
    }

    pub fn div_at(&self, t: usize, p: Point) -> f64 {
        let l = &self.local[t];
        let d = monomial_divergences(self.space.degree, [(p[0] - l.center[0]) / l.scale, (p[1] - l.center[1]) / l.scale]);
        l.coef.iter().zip(&d).map(|(c, d)| c * d).sum::<f64>() / l.scale
    }

    /// Checked evaluation of value and divergence at a barycentric point.
    pub fn evaluate(&self, mesh: &TriMesh, t: usize, l: [f64; 3]) -> Result<([f64; 2], f64)> {
        self.space.check(mesh)?;
        if t >= mesh.num_triangles() {
            return Err(Error::InvalidArgument(format!("element {t} out of range")));
        }
        let p = mesh.to_physical(t, l);
        Ok((self.value_at(t, p), self.div_at(t, p)))
    }
}

/// Elementwise L2 projection onto the discontinuous space `target`.
///
/// For a mean-zero target the data must integrate to zero (to 1e-8 relative
/// to its L1 norm); the projection is then shifted to mean zero.
pub fn project_pi(
    mesh: &TriMesh,
    f: &ScalarFn,
    target: &SpaceDescriptor,
    integrator: &Integrator,
) -> Result<Field> {
    target.check(mesh)?;
    if target.family != Family::Discontinuous {
        return Err(Error::InvalidArgument("projection target must be discontinuous".into()));
    }
    let k = target.degree;
    let mut c = vec![0.0; target.dof_count];
    let mut total = 0.0;
    let mut total_abs = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.tri_points(t);
        let a = mesh.area(t);
        let mut b = [0.0; 3];
        let mut bad = false;
        integrator.for_each(&tri, |p, w| {
            let v = f(p);
            if !v.is_finite() {
                bad = true;
            }
            total_abs += w * v.abs();
            if k == 0 {
                b[0] += w * v;
            } else {
                let l = lagrange::barycentric(&tri, p);
                for i in 0..3 {
                    b[i] += w * v * l[i];
                }
            }
        });
        if bad {
            return Err(Error::NonFinite("projected function"));
        }
        if k == 0 {
            c[t] = b[0] / a;
            total += b[0];
        } else {
            let s = b[0] + b[1] + b[2];
            for i in 0..3 {
                c[3 * t + i] = 3.0 / a * (4.0 * b[i] - s);
            }
            total += s;
        }
    }
    if target.mean_zero_constrained {
        if total.abs() > 1e-8 * total_abs.max(1.0) {
            return Err(Error::Incompatible { residual: total.abs() });
        }
        let shift = total / mesh.total_area();
        c.iter_mut().for_each(|v| *v -= shift);
    }
    Field::new(target.clone(), c)
}

#[cfg(test)]
mod tests;
