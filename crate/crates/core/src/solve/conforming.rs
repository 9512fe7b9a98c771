//! Conforming Lagrange P1/P2 Galerkin solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{BoundaryKind, TriMesh};
use crate::solve::sparse::SparseSpd;
use crate::solve::ProblemSpec;
use crate::spaces::lagrange::{barycentric, barycentric_gradients, basis_gradients, basis_values};
use crate::spaces::quadrature::{gauss_legendre_unit, quadrature_rule};
use crate::spaces::{project_pi, Family, Field, Integrator, ScalarFn, SpaceDescriptor};

/// Load used in the Galerkin right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// `(f, v)` with the data itself.
    ExactF,
    /// `(pi_h f, v)` with the discontinuous projection of degree `k-1`.
    PiHF,
}

const NONE: usize = usize::MAX;

/// Stiffness matrix of a Lagrange space with Dirichlet dofs eliminated,
/// factored once. On a mesh without Dirichlet edges dof 0 is pinned and
/// solutions are shifted to mean zero.
#[derive(Debug)]
pub struct ConformingOperator {
    space: SpaceDescriptor,
    free_index: Vec<usize>,
    solver: SparseSpd,
    /// Couplings `(free row, Dirichlet dof, value)`.
    coupling: Vec<(usize, usize, f64)>,
    /// `int phi_j` for every dof.
    basis_integrals: Vec<f64>,
    pure_neumann: bool,
    area: f64,
}

/// Local stiffness matrix (at most 6x6).
pub fn local_stiffness(mesh: &TriMesh, t: usize, degree: usize) -> [[f64; 6]; 6] {
    let tri = mesh.tri_points(t);
    let gl = barycentric_gradients(&tri);
    let a = mesh.area(t);
    let mut k = [[0.0; 6]; 6];
    if degree == 1 {
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] = a * (gl[i][0] * gl[j][0] + gl[i][1] * gl[j][1]);
            }
        }
        return k;
    }
    let rule = quadrature_rule(2).expect("degree 2 rule");
    let mut g = [[0.0; 2]; 6];
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        basis_gradients(2, *l, &gl, &mut g);
        for i in 0..6 {
            for j in 0..6 {
                k[i][j] += w * a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    }
    k
}

impl ConformingOperator {
    pub fn new(mesh: &TriMesh, degree: usize) -> Result<Self> {
        let space = SpaceDescriptor::lagrange(mesh, degree)?;
        let n = space.dof_count;
        let pure_neumann = space.dirichlet_dofs.is_empty();
        let mut is_dir = vec![false; n];
        for &d in &space.dirichlet_dofs {
            is_dir[d] = true;
        }
        if pure_neumann {
            is_dir[0] = true;
        }
        let mut free_index = vec![NONE; n];
        let mut nfree = 0;
        for (i, f) in free_index.iter_mut().enumerate() {
            if !is_dir[i] {
                *f = nfree;
                nfree += 1;
            }
        }
        let nloc = space.local_dim();
        let mut trip = Vec::with_capacity(mesh.num_triangles() * nloc * nloc);
        let mut coupling = Vec::new();
        let mut basis_integrals = vec![0.0; n];
        let int_local: [f64; 6] = if degree == 1 {
            [1.0 / 3.0; 6]
        } else {
            [0.0, 0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]
        };
        for t in 0..mesh.num_triangles() {
            let k = local_stiffness(mesh, t, degree);
            let dofs = space.local_dofs(mesh, t);
            let a = mesh.area(t);
            for i in 0..nloc {
                basis_integrals[dofs[i]] += a * int_local[i];
                let fi = free_index[dofs[i]];
                if fi == NONE {
                    continue;
                }
                for j in 0..nloc {
                    let fj = free_index[dofs[j]];
                    if fj == NONE {
                        if !(pure_neumann && dofs[j] == 0) {
                            coupling.push((fi, dofs[j], k[i][j]));
                        }
                    } else {
                        trip.push((fi, fj, k[i][j]));
                    }
                }
            }
        }
        let solver = SparseSpd::from_triplets(nfree, &trip)?;
        Ok(Self {
            space,
            free_index,
            solver,
            coupling,
            basis_integrals,
            pure_neumann,
            area: mesh.total_area(),
        })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    /// `int phi_j` for every dof.
    pub fn basis_integrals(&self) -> &[f64] {
        &self.basis_integrals
    }

    /// Solve `K u = b` on the free dofs with `u = values` on Dirichlet dofs.
    /// `values` is only read at Dirichlet dofs and may be empty for
    /// homogeneous data.
    pub fn solve(&self, load: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        self.solve_with(load, values, true)
    }

    fn solve_with(&self, load: &[f64], values: &[f64], refine: bool) -> Result<Vec<f64>> {
        let n = self.space.dof_count;
        if load.len() != n || !(values.is_empty() || values.len() == n) {
            return Err(Error::InvalidArgument("load or boundary vector length".into()));
        }
        let mut b = load.to_vec();
        if self.pure_neumann {
            let total: f64 = b.iter().sum();
            let scale: f64 = b.iter().map(|v| v.abs()).sum();
            if total.abs() > 1e-8 * scale.max(1.0) {
                return Err(Error::Incompatible { residual: total.abs() });
            }
            for (bj, ij) in b.iter_mut().zip(&self.basis_integrals) {
                *bj -= total * ij / self.area;
            }
        }
        let mut rhs = vec![0.0; self.solver.dim()];
        for (j, bj) in b.iter().enumerate() {
            let f = self.free_index[j];
            if f != NONE {
                rhs[f] += bj;
            }
        }
        if !values.is_empty() {
            for &(fi, d, k) in &self.coupling {
                rhs[fi] -= k * values[d];
            }
        }
        let x = self.solver.solve_with(&rhs, refine)?;
        let mut u = vec![0.0; n];
        for j in 0..n {
            let f = self.free_index[j];
            u[j] = if f != NONE {
                x[f]
            } else if self.pure_neumann || values.is_empty() {
                0.0
            } else {
                values[j]
            };
        }
        if self.pure_neumann {
            let mean = u.iter().zip(&self.basis_integrals).map(|(u, i)| u * i).sum::<f64>() / self.area;
            u.iter_mut().for_each(|v| *v -= mean);
        }
        Ok(u)
    }

    /// P1 potential for a piecewise-constant load with homogeneous data.
    pub fn solve_dg0(&self, mesh: &TriMesh, fh: &[f64]) -> Result<Vec<f64>> {
        if self.space.degree != 1 || fh.len() != mesh.num_triangles() {
            return Err(Error::InvalidArgument("P1 operator and one value per element expected".into()));
        }
        let mut b = vec![0.0; self.space.dof_count];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let v = fh[t] * mesh.area(t) / 3.0;
            for &i in tri {
                b[i] += v;
            }
        }
        self.solve_with(&b, &[], false)
    }
}

/// `b_j = int f phi_j`.
pub fn load_from_fn(mesh: &TriMesh, space: &SpaceDescriptor, f: &ScalarFn, integ: &Integrator) -> Result<Vec<f64>> {
    let mut b = vec![0.0; space.dof_count];
    let nloc = space.local_dim();
    let mut phi = [0.0; 6];
    let mut bad = false;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.tri_points(t);
        let dofs = space.local_dofs(mesh, t);
        integ.for_each(&tri, |p, w| {
            let v = f(p);
            bad |= !v.is_finite();
            basis_values(space.degree, barycentric(&tri, p), &mut phi);
            for i in 0..nloc {
                b[dofs[i]] += w * v * phi[i];
            }
        });
    }
    if bad {
        return Err(Error::NonFinite("load function"));
    }
    Ok(b)
}

/// `b_j = int fh phi_j` for a discontinuous field `fh`, integrated exactly.
pub fn load_from_dg(mesh: &TriMesh, space: &SpaceDescriptor, fh: &Field) -> Result<Vec<f64>> {
    if fh.space.family != Family::Discontinuous || !fh.space.matches(mesh) {
        return Err(Error::InvalidArgument("load must be a discontinuous field on the mesh".into()));
    }
    let rule = quadrature_rule(space.degree + fh.space.degree)?;
    let nloc = space.local_dim();
    let mut b = vec![0.0; space.dof_count];
    let mut phi = [0.0; 6];
    for t in 0..mesh.num_triangles() {
        let a = mesh.area(t);
        let dofs = space.local_dofs(mesh, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let v = fh.value_bary(mesh, t, *l);
            basis_values(space.degree, *l, &mut phi);
            for i in 0..nloc {
                b[dofs[i]] += w * a * v * phi[i];
            }
        }
    }
    Ok(b)
}

/// Add `int_{Gamma_N} g phi_j`.
pub fn add_neumann_load(mesh: &TriMesh, space: &SpaceDescriptor, g: &ScalarFn, b: &mut [f64]) {
    let (gw, gx) = gauss_legendre_unit(6);
    let nloc = space.local_dim();
    let mut phi = [0.0; 6];
    for (e, kind) in mesh.boundary_edges() {
        if kind != BoundaryKind::Neumann {
            continue;
        }
        let (t, _) = mesh.edge_triangles(e);
        let tri = mesh.tri_points(t);
        let dofs = space.local_dofs(mesh, t);
        let [a, c] = mesh.edges()[e];
        let (pa, pc) = (mesh.vertex(a), mesh.vertex(c));
        let len = mesh.edge_length(e);
        for (w, s) in gw.iter().zip(&gx) {
            let p: Point = [pa[0] + s * (pc[0] - pa[0]), pa[1] + s * (pc[1] - pa[1])];
            let v = g(p);
            basis_values(space.degree, barycentric(&tri, p), &mut phi);
            for i in 0..nloc {
                b[dofs[i]] += w * len * v * phi[i];
            }
        }
    }
}

/// Values of `g_D` at the Lagrange nodes (only Dirichlet entries matter).
fn dirichlet_values(problem: &ProblemSpec, mesh: &TriMesh, space: &SpaceDescriptor) -> Vec<f64> {
    if problem.g_d.is_none() || space.dirichlet_dofs.is_empty() {
        return Vec::new();
    }
    let nv = mesh.num_vertices();
    let mut v = vec![0.0; space.dof_count];
    for &d in &space.dirichlet_dofs {
        let p = if d < nv {
            mesh.vertex(d)
        } else {
            let [a, b] = mesh.edges()[d - nv];
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        };
        v[d] = problem.dirichlet_value(p);
    }
    v
}

/// Degree-`k-1` discontinuous projection of the problem's load; mean-zero
/// constrained on pure-Neumann problems without Neumann data.
pub fn project_load(problem: &ProblemSpec, mesh: &TriMesh, degree: usize) -> Result<Field> {
    let mean_zero = ProblemSpec::pure_neumann(mesh) && problem.g_n.is_none();
    let target = SpaceDescriptor::discontinuous(mesh, degree, mean_zero)?;
    project_pi(mesh, problem.f.as_ref(), &target, &problem.integrator(2 * degree + 6))
}

/// Galerkin solution in the Lagrange space of degree `k`.
pub fn solve_conforming(problem: &ProblemSpec, mesh: &TriMesh, degree: usize, rhs_mode: RhsMode) -> Result<Field> {
    problem.check_mesh(mesh)?;
    let op = ConformingOperator::new(mesh, degree)?;
    let load = match rhs_mode {
        RhsMode::ExactF => load_from_fn(mesh, op.space(), problem.f.as_ref(), &problem.integrator(2 * degree + 6))?,
        RhsMode::PiHF => load_from_dg(mesh, op.space(), &project_load(problem, mesh, degree - 1)?)?,
    };
    solve_with_load(problem, mesh, &op, load)
}

/// Galerkin solve with a precomputed interior load vector.
pub fn solve_with_load(problem: &ProblemSpec, mesh: &TriMesh, op: &ConformingOperator, mut load: Vec<f64>) -> Result<Field> {
    if let Some(g) = &problem.g_n {
        add_neumann_load(mesh, op.space(), g.as_ref(), &mut load);
    }
    let values = dirichlet_values(problem, mesh, op.space());
    let u = op.solve(&load, &values)?;
    Field::new(op.space().clone(), u)
}

/// Gradient of the P1 solution with homogeneous data and piecewise-constant
/// load `fh`, one vector per element.
pub fn apply_rh(mesh: &TriMesh, fh: &Field) -> Result<Vec<[f64; 2]>> {
    if fh.space.family != Family::Discontinuous || fh.space.degree != 0 {
        return Err(Error::InvalidArgument("apply_rh expects a P0 field".into()));
    }
    let op = ConformingOperator::new(mesh, 1)?;
    let u = op.solve_dg0(mesh, &fh.coefficients)?;
    let uf = Field::new(op.space().clone(), u)?;
    Ok((0..mesh.num_triangles()).map(|t| uf.grad_bary(mesh, t, [1.0 / 3.0; 3])).collect())
}
