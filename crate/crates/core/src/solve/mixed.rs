//! Mixed Raviart-Thomas solves by hybridization.
//!
//! The flux is sought in the broken RT space with a Lagrange multiplier
//! `lambda` in `P_r(e)` on every edge (basis `1, 2s-1`). Element unknowns are
//! eliminated locally; the remaining system for `lambda` is symmetric
//! positive definite. The recovered flux has exactly the elementwise
//! divergence `-load`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, TriMesh};
use crate::solve::sparse::SparseSpd;
use crate::solve::ProblemSpec;
use crate::spaces::quadrature::{gauss_legendre_unit, quadrature_rule};
use crate::spaces::raviart_thomas::RtElement;
use crate::spaces::{Family, Field, Flux, ScalarFn, SpaceDescriptor};

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct MixedSolution {
    pub flux: Flux,
    /// Discontinuous multiplier (the potential), degree `r`.
    pub multiplier: Field,
    /// Load actually equilibrated: `div flux = -load` on every element.
    pub load: Field,
}

/// Factored hybridized operator for RT of degree `r` in {0, 1}.
#[derive(Debug)]
pub struct MixedOperator {
    degree: usize,
    n: usize,
    m: usize,
    l: usize,
    /// Per element, row-major: `Y` (n x l), `X` (n x m), `Q` (m x l),
    /// `S^-1` (m x m) and the divergence moments `B` (m x n).
    y: Vec<f64>,
    x: Vec<f64>,
    q: Vec<f64>,
    sinv: Vec<f64>,
    bdiv: Vec<f64>,
    signs: Vec<[f64; 3]>,
    lam_free: Vec<usize>,
    lam_dirichlet: Vec<bool>,
    solver: SparseSpd,
    pure_neumann: bool,
    area: f64,
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

impl MixedOperator {
    pub fn new(mesh: &TriMesh, degree: usize) -> Result<Self> {
        if degree > 1 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let r1 = degree + 1;
        let n = if degree == 0 { 3 } else { 8 };
        let m = if degree == 0 { 1 } else { 3 };
        let l = 3 * r1;
        let nt = mesh.num_triangles();
        let ne = mesh.num_edges();
        let pure_neumann = !mesh.has_dirichlet();

        let mut lam_dirichlet = vec![false; ne * r1];
        for (e, k) in mesh.boundary_edges() {
            if k == BoundaryKind::Dirichlet {
                for j in 0..r1 {
                    lam_dirichlet[e * r1 + j] = true;
                }
            }
        }
        let mut lam_free = vec![NONE; ne * r1];
        let mut nfree = 0;
        for (i, f) in lam_free.iter_mut().enumerate() {
            if !lam_dirichlet[i] && !(pure_neumann && i == 0) {
                *f = nfree;
                nfree += 1;
            }
        }

        let mrule = quadrature_rule(2 * degree + 2)?;
        let brule = quadrature_rule(2)?;
        let mut y = Vec::with_capacity(nt * n * l);
        let mut x = Vec::with_capacity(nt * n * m);
        let mut q = Vec::with_capacity(nt * m * l);
        let mut sinv = Vec::with_capacity(nt * m * m);
        let mut bdiv = Vec::with_capacity(nt * m * n);
        let mut signs = Vec::with_capacity(nt);
        let mut trip = Vec::with_capacity(nt * l * l);
        for t in 0..nt {
            let el = RtElement::new(mesh, t, degree)?;
            let tri = mesh.tri_points(t);
            let a = mesh.area(t);
            let mut mm = DMatrix::<f64>::zeros(n, n);
            for (bc, w) in mrule.points.iter().zip(&mrule.weights) {
                let v = el.basis_values(crate::spaces::quadrature::bary_to_point(&tri, *bc));
                for i in 0..n {
                    for j in 0..n {
                        mm[(i, j)] += w * a * (v[i][0] * v[j][0] + v[i][1] * v[j][1]);
                    }
                }
            }
            let mut bb = DMatrix::<f64>::zeros(m, n);
            for (bc, w) in brule.points.iter().zip(&brule.weights) {
                let d = el.basis_divergences(crate::spaces::quadrature::bary_to_point(&tri, *bc));
                for i in 0..m {
                    let eta = if degree == 0 { 1.0 } else { bc[i] };
                    for j in 0..n {
                        bb[(i, j)] += w * a * d[j] * eta;
                    }
                }
            }
            let mut cc = DMatrix::<f64>::zeros(l, n);
            for i in 0..3 {
                for j in 0..r1 {
                    cc[(i * r1 + j, i * r1 + j)] = el.signs[i];
                }
            }
            let minv = mm
                .cholesky()
                .ok_or_else(|| Error::Solver(format!("local mass matrix of element {t} not SPD")))?
                .inverse();
            let s = &bb * &minv * bb.transpose();
            let s_inv = s
                .cholesky()
                .ok_or_else(|| Error::Solver(format!("local Schur complement of element {t} not SPD")))?
                .inverse();
            let mct = &minv * cc.transpose();
            let xm = &minv * bb.transpose() * &s_inv;
            let ym = &mct - &xm * (&bb * &mct);
            let qm = &s_inv * &bb * &mct;
            let hk = &cc * &ym;
            let edges = mesh.tri_edges(t);
            let gidx = |k: usize| edges[k / r1] * r1 + k % r1;
            for i in 0..l {
                let fi = lam_free[gidx(i)];
                if fi == NONE {
                    continue;
                }
                for j in 0..l {
                    let fj = lam_free[gidx(j)];
                    if fj != NONE {
                        trip.push((fi, fj, hk[(i, j)]));
                    }
                }
            }
            bdiv.extend(row_major(&bb));
            y.extend(row_major(&ym));
            x.extend(row_major(&xm));
            q.extend(row_major(&qm));
            sinv.extend(row_major(&s_inv));
            signs.push(el.signs);
        }
        let solver = SparseSpd::from_triplets(nfree, &trip)?;
        Ok(Self {
            degree,
            n,
            m,
            l,
            y,
            x,
            q,
            sinv,
            bdiv,
            signs,
            lam_free,
            lam_dirichlet,
            solver,
            pure_neumann,
            area: mesh.total_area(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `(load, eta_i)_K` for the local multiplier basis.
    fn load_moments(&self, mesh: &TriMesh, t: usize, load: &[f64]) -> [f64; 3] {
        let a = mesh.area(t);
        if self.degree == 0 {
            [a * load[t], 0.0, 0.0]
        } else {
            let c = &load[3 * t..3 * t + 3];
            let s = c[0] + c[1] + c[2];
            [a / 12.0 * (c[0] + s), a / 12.0 * (c[1] + s), a / 12.0 * (c[2] + s)]
        }
    }

    fn local_y(&self, t: usize) -> &[f64] {
        &self.y[t * self.n * self.l..(t + 1) * self.n * self.l]
    }

    /// Solve with a discontinuous load of degree `r` and optional boundary data.
    pub fn solve(
        &self,
        mesh: &TriMesh,
        load: &Field,
        g_d: Option<&ScalarFn>,
        g_n: Option<&ScalarFn>,
    ) -> Result<MixedSolution> {
        let (coeffs, mu, load_c) = self.solve_parts(mesh, load, g_d, g_n, true)?;
        let space = SpaceDescriptor::raviart_thomas(mesh, self.degree)?;
        let mu_space = SpaceDescriptor::discontinuous(mesh, self.degree, self.pure_neumann)?;
        let multiplier = Field::new(mu_space, mu)?;
        let flux = Flux::new(mesh, space, coeffs)?;
        let load = Field::new(load.space.clone(), load_c)?;
        Ok(MixedSolution { flux, multiplier, load })
    }

    /// Multiplier for a piecewise-constant load with homogeneous data
    /// (degree 0 only).
    pub fn multiplier_dg0(&self, mesh: &TriMesh, fh: &[f64]) -> Result<Vec<f64>> {
        let sp = SpaceDescriptor::discontinuous(mesh, 0, self.pure_neumann)?;
        let load = Field::new(sp, fh.to_vec())?;
        Ok(self.solve_parts(mesh, &load, None, None, false)?.1)
    }

    /// Global flux dof of local dof `i` on element `t`.
    fn global_dof(&self, mesh: &TriMesh, t: usize, i: usize) -> usize {
        let r1 = self.degree + 1;
        if i < self.l {
            mesh.tri_edges(t)[i / r1] * r1 + i % r1
        } else {
            2 * mesh.num_edges() + 2 * t + (i - self.l)
        }
    }

    /// Remove the rounding-level divergence defect left by averaging the two
    /// one-sided edge fluxes. Element means are fixed by a sweep over a
    /// spanning forest of the dual graph rooted at Dirichlet edges (Neumann
    /// traces are never touched); for degree 1 the interior dofs then absorb
    /// the mean-free part.
    fn equilibrate(&self, mesh: &TriMesh, coeffs: &mut [f64], fmom: &[[f64; 3]], load_c: &mut [f64]) {
        let (n, m, l) = (self.n, self.m, self.l);
        let r1 = self.degree + 1;
        let nt = mesh.num_triangles();
        let bk = |t: usize| &self.bdiv[t * m * n..(t + 1) * m * n];
        let mut defect = vec![[0.0; 3]; nt];
        for t in 0..nt {
            let b = bk(t);
            for i in 0..m {
                let mut d = fmom[t][i];
                for j in 0..n {
                    d += b[i * n + j] * coeffs[self.global_dof(mesh, t, j)];
                }
                defect[t][i] = d;
            }
        }

        // breadth-first forest; parent[t] = local edge index toward the root
        const ROOT: usize = usize::MAX;
        let mut parent = vec![ROOT; nt];
        let mut seen = vec![false; nt];
        let mut order = Vec::with_capacity(nt);
        for t in 0..nt {
            let edges = mesh.tri_edges(t);
            if let Some(k) = (0..3).find(|&k| mesh.boundary_kind(edges[k]) == Some(BoundaryKind::Dirichlet)) {
                parent[t] = k;
                seen[t] = true;
                order.push(t);
            }
        }
        if order.is_empty() && nt > 0 {
            seen[0] = true;
            order.push(0);
        }
        let mut head = 0;
        while head < order.len() {
            let t = order[head];
            head += 1;
            for e in mesh.tri_edges(t) {
                let (a, b) = mesh.edge_triangles(e);
                let Some(b) = b else { continue };
                let nb = if a == t { b } else { a };
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = mesh.tri_edges(nb).iter().position(|&x| x == e).expect("shared edge");
                    order.push(nb);
                }
            }
        }

        let sweep = |defect: &mut Vec<[f64; 3]>, coeffs: &mut [f64]| {
            for &t in order.iter().rev() {
                let k = parent[t];
                if k == ROOT {
                    continue;
                }
                let li = k * r1;
                let b = bk(t);
                let w: f64 = (0..m).map(|i| b[i * n + li]).sum();
                let d0: f64 = defect[t].iter().take(m).sum();
                let delta = -d0 / w;
                let g = self.global_dof(mesh, t, li);
                coeffs[g] += delta;
                for i in 0..m {
                    defect[t][i] += b[i * n + li] * delta;
                }
                let e = mesh.tri_edges(t)[k];
                if let (a, Some(bn)) = mesh.edge_triangles(e) {
                    let p = if a == t { bn } else { a };
                    let kp = mesh.tri_edges(p).iter().position(|&x| x == e).expect("shared edge");
                    let bp = bk(p);
                    for i in 0..m {
                        defect[p][i] += bp[i * n + kp * r1] * delta;
                    }
                }
            }
        };
        sweep(&mut defect, coeffs);
        if parent[order[0]] == ROOT {
            // pure Neumann: the root keeps the global rounding imbalance; move
            // it into a uniform load shift and sweep again
            let root = order[0];
            let shift = defect[root].iter().take(m).sum::<f64>() / self.area;
            load_c.iter_mut().for_each(|v| *v -= shift);
            for t in 0..nt {
                let a = mesh.area(t);
                for i in 0..m {
                    defect[t][i] -= shift * a / m as f64;
                }
            }
            sweep(&mut defect, coeffs);
        }

        if self.degree == 1 {
            // least squares on the 3x2 interior block; exact for mean-free defects
            for t in 0..nt {
                let b = bk(t);
                let col = |q: usize, i: usize| b[i * n + l + q];
                let mut a = [[0.0; 2]; 2];
                let mut r = [0.0; 2];
                for i in 0..m {
                    for p in 0..2 {
                        r[p] -= col(p, i) * defect[t][i];
                        for q in 0..2 {
                            a[p][q] += col(p, i) * col(q, i);
                        }
                    }
                }
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let d = [(r[0] * a[1][1] - r[1] * a[0][1]) / det, (a[0][0] * r[1] - a[1][0] * r[0]) / det];
                for q in 0..2 {
                    coeffs[self.global_dof(mesh, t, l + q)] += d[q];
                }
            }
        }
    }

    /// Flux dofs (empty unless `recover_flux`), multiplier coefficients and
    /// the equilibrated load.
    fn solve_parts(
        &self,
        mesh: &TriMesh,
        load: &Field,
        g_d: Option<&ScalarFn>,
        g_n: Option<&ScalarFn>,
        recover_flux: bool,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let r1 = self.degree + 1;
        if load.space.family != Family::Discontinuous || load.space.degree != self.degree || !load.space.matches(mesh) {
            return Err(Error::InvalidArgument(format!(
                "load must be discontinuous of degree {} on the mesh",
                self.degree
            )));
        }
        let nt = mesh.num_triangles();
        let ne = mesh.num_edges();
        let (n, m, l) = (self.n, self.m, self.l);
        let (gw, gx) = gauss_legendre_unit(6);

        // Boundary moments: known lambda on Dirichlet edges, g_N moments on Neumann edges.
        let mut lam = vec![0.0; ne * r1];
        let mut gvec = vec![0.0; ne * r1];
        let mut neumann_total = 0.0;
        for (e, kind) in mesh.boundary_edges() {
            let g = match kind {
                BoundaryKind::Dirichlet => g_d,
                BoundaryKind::Neumann => g_n,
            };
            let Some(g) = g else { continue };
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let len = mesh.edge_length(e);
            let mut mom = [0.0; 2];
            for (w, s) in gw.iter().zip(&gx) {
                let v = g([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                if !v.is_finite() {
                    return Err(Error::NonFinite("boundary data"));
                }
                mom[0] += w * v;
                mom[1] += w * v * (2.0 * s - 1.0);
            }
            match kind {
                BoundaryKind::Dirichlet => {
                    lam[e * r1] = mom[0];
                    if r1 == 2 {
                        lam[e * r1 + 1] = 3.0 * mom[1];
                    }
                }
                BoundaryKind::Neumann => {
                    neumann_total += len * mom[0];
                    for j in 0..r1 {
                        gvec[e * r1 + j] = len * mom[j];
                    }
                }
            }
        }

        let mut load_c = load.coefficients.clone();
        if self.pure_neumann {
            let total = load.integral(mesh) + neumann_total;
            let per = load_c.len() / nt;
            let scale: f64 = (0..nt)
                .map(|t| mesh.area(t) * load_c[t * per..(t + 1) * per].iter().map(|v| v.abs()).sum::<f64>() / per as f64)
                .sum();
            if total.abs() > 1e-8 * scale.max(1.0) {
                return Err(Error::Incompatible { residual: total.abs() });
            }
            let shift = total / self.area;
            load_c.iter_mut().for_each(|v| *v -= shift);
        }

        let mut rhs = vec![0.0; self.solver.dim()];
        for (i, &f) in self.lam_free.iter().enumerate() {
            if f != NONE {
                rhs[f] += gvec[i];
            }
        }
        let mut fmom = Vec::with_capacity(nt);
        for t in 0..nt {
            let edges = mesh.tri_edges(t);
            let sg = self.signs[t];
            let fm = self.load_moments(mesh, t, &load_c);
            fmom.push(fm);
            let xk = &self.x[t * n * m..(t + 1) * n * m];
            let yk = self.local_y(t);
            // X F (local flux response to the load)
            let mut xf = [0.0; 8];
            for (i, v) in xf.iter_mut().enumerate().take(n) {
                for j in 0..m {
                    *v += xk[i * m + j] * fm[j];
                }
            }
            for i in 0..l {
                let gi = edges[i / r1] * r1 + i % r1;
                let fi = self.lam_free[gi];
                if fi == NONE {
                    continue;
                }
                let s = sg[i / r1];
                let mut v = s * xf[i];
                for j in 0..l {
                    let gj = edges[j / r1] * r1 + j % r1;
                    if self.lam_dirichlet[gj] {
                        v -= s * yk[i * l + j] * lam[gj];
                    }
                }
                rhs[fi] += v;
            }
        }
        let sol = self.solver.solve_with(&rhs, recover_flux)?;
        for (i, &f) in self.lam_free.iter().enumerate() {
            if f != NONE {
                lam[i] = sol[f];
            }
        }

        let local_lam = |t: usize| {
            let edges = mesh.tri_edges(t);
            let mut ll = [0.0; 6];
            for (i, v) in ll.iter_mut().enumerate().take(l) {
                *v = lam[edges[i / r1] * r1 + i % r1];
            }
            ll
        };
        let mut mu = vec![0.0; nt * m];
        for t in 0..nt {
            let ll = local_lam(t);
            let fm = fmom[t];
            let qk = &self.q[t * m * l..(t + 1) * m * l];
            let sk = &self.sinv[t * m * m..(t + 1) * m * m];
            for i in 0..m {
                let mut v = 0.0;
                for j in 0..l {
                    v += qk[i * l + j] * ll[j];
                }
                for j in 0..m {
                    v += sk[i * m + j] * fm[j];
                }
                mu[t * m + i] = v;
            }
        }

        let mut coeffs = Vec::new();
        if recover_flux {
            coeffs = vec![0.0; if self.degree == 0 { ne } else { 2 * ne + 2 * nt }];
            let mut hits = vec![0u8; ne * r1];
            for t in 0..nt {
                let ll = local_lam(t);
                let fm = fmom[t];
                let xk = &self.x[t * n * m..(t + 1) * n * m];
                let yk = self.local_y(t);
                for i in 0..n {
                    let mut c = 0.0;
                    for j in 0..l {
                        c += yk[i * l + j] * ll[j];
                    }
                    for j in 0..m {
                        c -= xk[i * m + j] * fm[j];
                    }
                    let g = self.global_dof(mesh, t, i);
                    if i < l {
                        hits[g] += 1;
                    }
                    coeffs[g] += c;
                }
            }
            for (c, h) in coeffs.iter_mut().zip(&hits) {
                if *h == 2 {
                    *c *= 0.5;
                }
            }
            // prescribed Neumann moments, exactly
            for (e, kind) in mesh.boundary_edges() {
                if kind == BoundaryKind::Neumann {
                    let (t, _) = mesh.edge_triangles(e);
                    let k = mesh.tri_edges(t).iter().position(|&x| x == e).expect("edge of its triangle");
                    for j in 0..r1 {
                        coeffs[e * r1 + j] = self.signs[t][k] * gvec[e * r1 + j];
                    }
                }
            }
            self.equilibrate(mesh, &mut coeffs, &fmom, &mut load_c);
        }
        if self.pure_neumann {
            let mean = (0..nt)
                .map(|t| mesh.area(t) * mu[t * m..(t + 1) * m].iter().sum::<f64>() / m as f64)
                .sum::<f64>()
                / self.area;
            mu.iter_mut().for_each(|v| *v -= mean);
        }
        Ok((coeffs, mu, load_c))
    }
}

/// Mixed solve with the degree-`r` discontinuous projection of the load.
pub fn solve_mixed(problem: &ProblemSpec, mesh: &TriMesh, rt_degree: usize) -> Result<MixedSolution> {
    problem.check_mesh(mesh)?;
    let op = MixedOperator::new(mesh, rt_degree)?;
    let load = crate::solve::conforming::project_load(problem, mesh, rt_degree)?;
    op.solve(mesh, &load, problem.g_d.as_deref(), problem.g_n.as_deref())
}

/// RT0 flux with homogeneous data and divergence `-fh`.
pub fn apply_th(mesh: &TriMesh, fh: &Field) -> Result<Flux> {
    if fh.space.family != Family::Discontinuous || fh.space.degree != 0 {
        return Err(Error::InvalidArgument("apply_th expects a P0 field".into()));
    }
    let op = MixedOperator::new(mesh, 0)?;
    Ok(op.solve(mesh, fh, None, None)?.flux)
}
