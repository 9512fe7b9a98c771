//! The constants `C0`, `kappa_h` and `C(h)` entering the error bounds.
//!
//! `kappa_h^2` is the largest eigenvalue of `G c = lambda D c` on the
//! piecewise-constant space, with `D` the diagonal mass matrix and
//! `G_ij = ((R_h - T_h) chi_i, (R_h - T_h) chi_j)`. Here `R_h f` is the
//! gradient of the P1 solution and `T_h f` the RT0 flux for load `f`. Since
//! `(R_h f, T_h f) = |R_h f|^2 = (f, u_h)` and `|T_h f|^2 = (f, mu_h)`, one
//! has `G c = |K| * mean_K(mu_h - u_h)`, so each product costs one
//! conforming and one mixed solve.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{DomainTag, TriMesh, BESSEL_J11};
use crate::solve::{ConformingOperator, MixedOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMethod {
    DenseEig,
    PowerIteration,
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChMode {
    Hypercircle,
    Lagrange0493,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub kappa_h: f64,
    #[serde(rename = "C_h")]
    pub c_h: f64,
    pub h_used: f64,
    pub method: KappaMethod,
    pub lagrange_alternative: Option<f64>,
}

impl ConstantsReport {
    /// `C0 * h`, the constant multiplying `|f - pi_h f|`.
    pub fn c0h(&self) -> f64 {
        self.c0 * self.h_used
    }
}

/// `C0 = max_K (h_K / j_{1,1}) / h`.
pub fn compute_c0(mesh: &TriMesh, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("mesh size h must be positive, got {h}")));
    }
    let hmax = (0..mesh.num_triangles())
        .map(|t| mesh.element_geometry(t).h)
        .fold(0.0, f64::max);
    Ok(hmax / BESSEL_J11 / h)
}

/// `C(h) = sqrt(kappa^2 + (C0 h)^2)`, or `0.493 h` for H2-regular problems.
pub fn compute_ch(kappa: f64, c0: f64, h: f64, mode: ChMode, domain: DomainTag) -> Result<f64> {
    if kappa < 0.0 || c0 < 0.0 || h < 0.0 || !(kappa + c0 + h).is_finite() {
        return Err(Error::InvalidArgument("constants must be non-negative and finite".into()));
    }
    match mode {
        ChMode::Hypercircle => Ok(kappa.hypot(c0 * h)),
        ChMode::Lagrange0493 if domain == DomainTag::Lshape => Err(Error::InvalidArgument(
            "the 0.493 h constant needs H2 regularity, which fails on the L-shaped domain".into(),
        )),
        ChMode::Lagrange0493 => Ok(0.493 * h),
    }
}

/// Symmetric operator `c -> G c` on piecewise constants.
pub struct KappaOperator<'a> {
    mesh: &'a TriMesh,
    conforming: ConformingOperator,
    mixed: MixedOperator,
    areas: Vec<f64>,
    pure_neumann: bool,
}

impl<'a> KappaOperator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Result<Self> {
        Ok(Self {
            mesh,
            conforming: ConformingOperator::new(mesh, 1)?,
            mixed: MixedOperator::new(mesh, 0)?,
            areas: (0..mesh.num_triangles()).map(|t| mesh.area(t)).collect(),
            pure_neumann: !mesh.has_dirichlet(),
        })
    }

    pub fn dim(&self) -> usize {
        self.areas.len()
    }

    /// Diagonal of the mass matrix `D`.
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Remove the mean on pure-Neumann meshes (identity otherwise).
    pub fn project(&self, c: &mut [f64]) {
        if self.pure_neumann {
            let total: f64 = self.areas.iter().sum();
            let mean = c.iter().zip(&self.areas).map(|(c, a)| c * a).sum::<f64>() / total;
            c.iter_mut().for_each(|v| *v -= mean);
        }
    }

    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        let u = self.conforming.solve_dg0(self.mesh, c)?;
        let mu = self.mixed.multiplier_dg0(self.mesh, c)?;
        Ok(self
            .mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| self.areas[t] * (mu[t] - (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0))
            .collect())
    }

    /// `|(R_h - T_h) f|^2 / |f|^2`.
    pub fn rayleigh(&self, c: &[f64]) -> Result<f64> {
        let g = self.apply(c)?;
        let num: f64 = g.iter().zip(c).map(|(g, c)| g * c).sum();
        let den: f64 = c.iter().zip(&self.areas).map(|(c, a)| c * c * a).sum();
        Ok(num / den)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaResult {
    pub kappa: f64,
    pub method: KappaMethod,
    pub iterations: usize,
}

/// Elements up to which the automatic choice assembles `G` densely.
pub const DENSE_LIMIT: usize = 512;

fn dense_kappa(op: &KappaOperator) -> Result<KappaResult> {
    let n = op.dim();
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        op.project(&mut e);
        let col = op.apply(&e)?;
        for i in 0..n {
            g[(i, j)] = col[i];
        }
    }
    let d: Vec<f64> = op.areas().iter().map(|a| 1.0 / a.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]) * d[i] * d[j]);
    let eig = SymmetricEigen::new(a);
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lmax.is_finite() {
        return Err(Error::NonFinite("dense eigenvalues"));
    }
    Ok(KappaResult {
        kappa: lmax.max(0.0).sqrt(),
        method: KappaMethod::DenseEig,
        iterations: n,
    })
}

/// Power iteration on `D^-1 G` in the `D` inner product, stopped when the
/// Rayleigh quotient changes by less than `tol` relatively.
fn power_kappa(op: &KappaOperator, tol: f64, max_iter: usize) -> Result<KappaResult> {
    let n = op.dim();
    let areas = op.areas();
    // deterministic, equidistributed start vector
    let golden = 0.618_033_988_749_894_9;
    let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * golden).fract() - 0.5).collect();
    op.project(&mut x);
    let dnorm = |v: &[f64]| v.iter().zip(areas).map(|(v, a)| v * v * a).sum::<f64>().sqrt();
    let s = dnorm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut lambda_old = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let gx = op.apply(&x)?;
        let lambda: f64 = gx.iter().zip(&x).map(|(g, x)| g * x).sum();
        let mut y: Vec<f64> = gx.iter().zip(areas).map(|(g, a)| g / a).collect();
        op.project(&mut y);
        let s = dnorm(&y);
        if !(s.is_finite() && lambda.is_finite()) {
            return Err(Error::NonFinite("power iteration"));
        }
        if s == 0.0 {
            return Ok(KappaResult {
                kappa: 0.0,
                method: KappaMethod::PowerIteration,
                iterations: it,
            });
        }
        y.iter_mut().for_each(|v| *v /= s);
        x = y;
        if it > 1 {
            change = ((lambda - lambda_old) / lambda).abs();
            if change < tol {
                return Ok(KappaResult {
                    kappa: lambda.max(0.0).sqrt(),
                    method: KappaMethod::PowerIteration,
                    iterations: it,
                });
            }
        }
        lambda_old = lambda;
    }
    Err(Error::EigenNoConvergence {
        iterations: max_iter,
        last_change: change,
    })
}

/// Lanczos with full reorthogonalization on `D^-1/2 G D^-1/2`.
///
/// Stops when the residual of the top Ritz pair is below `tol` times the
/// Ritz value; the eigenvalue error is then of order `tol^2` relative.
fn lanczos_kappa(op: &KappaOperator, tol: f64, max_steps: usize) -> Result<KappaResult> {
    let n = op.dim();
    let sq: Vec<f64> = op.areas().iter().map(|a| a.sqrt()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a * b).sum::<f64>();
    // mean-zero constraint in scaled variables: orthogonal to D^1/2 1
    let constraint: Option<Vec<f64>> = op.pure_neumann.then(|| {
        let s = dot(&sq, &sq).sqrt();
        sq.iter().map(|v| v / s).collect()
    });
    let orth = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            if let Some(z) = &constraint {
                let c = dot(v, z);
                v.iter_mut().zip(z).for_each(|(v, z)| *v -= c * z);
            }
            for q in basis {
                let c = dot(v, q);
                v.iter_mut().zip(q).for_each(|(v, q)| *v -= c * q);
            }
        }
    };
    let golden = 0.618_033_988_749_894_9;
    let mut v: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * golden).fract() - 0.5).collect();
    orth(&mut v, &[]);
    let s = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= s);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    let mut resid = f64::INFINITY;
    let steps = max_steps.min(n);
    for k in 0..steps {
        let c: Vec<f64> = v.iter().zip(&sq).map(|(v, s)| v / s).collect();
        let g = op.apply(&c)?;
        let mut w: Vec<f64> = g.iter().zip(&sq).map(|(g, s)| g / s).collect();
        let a = dot(&w, &v);
        if !a.is_finite() {
            return Err(Error::NonFinite("Lanczos iteration"));
        }
        alpha.push(a);
        basis.push(v);
        orth(&mut w, &basis);
        let b = dot(&w, &w).sqrt();
        // an invariant subspace has been found: the Ritz values are exact
        let exhausted = b <= 1e-14 * alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if (k + 1) % 10 == 0 || exhausted || k + 1 == steps {
            let m = alpha.len();
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (imax, theta) = eig
                .eigenvalues
                .iter()
                .cloned()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
            resid = (b * eig.eigenvectors[(m - 1, imax)]).abs();
            let converged = resid <= tol * theta.abs() || (theta - last).abs() <= 1e-15 * theta.abs();
            if converged || exhausted {
                return Ok(KappaResult {
                    kappa: theta.max(0.0).sqrt(),
                    method: KappaMethod::Lanczos,
                    iterations: m,
                });
            }
            last = theta;
        }
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }
    Err(Error::EigenNoConvergence {
        iterations: steps,
        last_change: resid,
    })
}

/// `kappa_h` for the boundary conditions carried by the mesh. `method`
/// `None` picks the dense path up to [`DENSE_LIMIT`] elements.
pub fn compute_kappa(mesh: &TriMesh, method: Option<KappaMethod>) -> Result<KappaResult> {
    let op = KappaOperator::new(mesh)?;
    if op.pure_neumann && op.dim() < 2 {
        return Err(Error::InvalidArgument("mean-zero piecewise constants need two elements".into()));
    }
    let method = method.unwrap_or(if op.dim() <= DENSE_LIMIT {
        KappaMethod::DenseEig
    } else {
        KappaMethod::Lanczos
    });
    match method {
        KappaMethod::DenseEig => dense_kappa(&op),
        KappaMethod::PowerIteration => power_kappa(&op, 1e-12, 50_000),
        KappaMethod::Lanczos => lanczos_kappa(&op, 1e-5, 2_000),
    }
}

/// All constants for one mesh with table mesh size `h`.
pub fn compute_constants(mesh: &TriMesh, h: f64, mode: ChMode, method: Option<KappaMethod>) -> Result<ConstantsReport> {
    let c0 = compute_c0(mesh, h)?;
    let k = compute_kappa(mesh, method)?;
    let c_h = compute_ch(k.kappa, c0, h, mode, mesh.domain())?;
    let lagrange_alternative = compute_ch(k.kappa, c0, h, ChMode::Lagrange0493, mesh.domain()).ok();
    Ok(ConstantsReport {
        c0,
        kappa_h: k.kappa,
        c_h,
        h_used: h,
        method: k.method,
        lagrange_alternative,
    })
}
