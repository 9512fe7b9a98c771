//! Guaranteed global and local energy-error estimators built from a
//! conforming solution `u_h` and an equilibrated flux `p_h`, plus true errors
//! for problems with a closed-form solution.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::constants::ConstantsReport;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::mesh::{BoundaryKind, TriMesh, BESSEL_J11};
use crate::solve::{MixedSolution, ProblemSpec};
use crate::spaces::quadrature::gauss_legendre_unit;
use crate::spaces::{Family, Field, Flux, Integrator};
use crate::weight::{region_integral, vector_norm, weighted_seminorm, IntegrationMode, WeightFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Rt0,
    ImprovedK2,
}

/// One row of estimator output. Optional entries are filled by the
/// auxiliary estimate and the true-error computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub h: f64,
    pub kappa_h: f64,
    pub c_h: f64,
    pub c0: f64,
    /// `C0 h |f - pi_h f|` with the piecewise-constant projection.
    pub c0_term: f64,
    /// `C0 h |f - pi_h f|` with the projection the improved flux used.
    pub c0_term_improved: Option<f64>,
    pub e1: f64,
    pub e2: f64,
    pub e1_bar: Option<f64>,
    pub e2_bar: Option<f64>,
    pub bound_aux: Option<f64>,
    pub e_hat_l: f64,
    pub e_hat_g: f64,
    pub e_l: Option<f64>,
    pub e_g: Option<f64>,
    pub beta: Option<f64>,
    pub beta_hat: f64,
    /// `|grad u_h - p_h|` on the whole domain and with the weight.
    pub residual: f64,
    pub residual_alpha: f64,
    pub variant: Variant,
    pub integration_mode: IntegrationMode,
}

impl EstimatorReport {
    /// Attach true errors and the derived ratio `beta = E_L / E_G` (percent).
    pub fn with_true_errors(mut self, e_l: f64, e_g: f64) -> Self {
        self.e_l = Some(e_l);
        self.e_g = Some(e_g);
        self.beta = (e_g > 0.0).then(|| 100.0 * e_l / e_g);
        self
    }

    /// Whether the certified bounds cover the true errors (with slack `tol`).
    pub fn bounds_hold(&self, tol: f64) -> bool {
        self.e_l.is_none_or(|e| e <= self.e_hat_l + tol) && self.e_g.is_none_or(|e| e <= self.e_hat_g + tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalEstimate {
    pub e_hat_g: f64,
    pub residual: f64,
    pub c0_term: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxEstimate {
    pub e1_bar: f64,
    pub e2_bar: f64,
    /// `sqrt(E1bar^2 + E2bar^2) + C0 h |f - pi_h f|`.
    pub bound: f64,
}

/// `C0 h = max_K h_K / j_{1,1}`, independent of the table's h convention.
pub fn c0h(mesh: &TriMesh) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| mesh.element_geometry(t).h)
        .fold(0.0, f64::max)
        / BESSEL_J11
}

/// `|f - load|` over the domain, graded toward singular points.
pub fn projection_error(mesh: &TriMesh, problem: &ProblemSpec, load: &Field) -> f64 {
    let f = problem.f.as_ref();
    region_integral(mesh, None, &problem.integrator(10), &|t, p| {
        (f(p) - load.value_at(mesh, t, p)).powi(2)
    })
    .sqrt()
}

/// Refuse fluxes whose divergence or Neumann trace does not match the data.
pub fn check_equilibrated(mesh: &TriMesh, problem: &ProblemSpec, sol: &MixedSolution) -> Result<()> {
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    // rounding level of a divergence computed from fluxes of this size
    let mut floor: f64 = 0.0;
    for t in 0..mesh.num_triangles() {
        let hk = mesh.element_geometry(t).h;
        for l in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            let p = mesh.to_physical(t, l);
            let f = sol.load.value_bary(mesh, t, l);
            defect = defect.max((sol.flux.div_at(t, p) + f).abs());
            scale = scale.max(f.abs());
            let q = sol.flux.value_at(t, p);
            floor = floor.max(q[0].hypot(q[1]) / hk);
        }
    }
    if defect > 1e-11 * scale + 1e-12 * floor {
        return Err(Error::Unequilibrated { max_defect: defect });
    }
    let (gw, gx) = gauss_legendre_unit(4);
    let mut trace: f64 = 0.0;
    for (e, kind) in mesh.boundary_edges() {
        if kind != BoundaryKind::Neumann {
            continue;
        }
        let [a, b] = mesh.edges()[e];
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let (t, _) = mesh.edge_triangles(e);
        let len = mesh.edge_length(e);
        let n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        let c = mesh.centroid(t);
        // orient the normal outward
        let s = if (c[0] - pa[0]) * n[0] + (c[1] - pa[1]) * n[1] > 0.0 { -1.0 } else { 1.0 };
        let mut mism = 0.0;
        for (w, x) in gw.iter().zip(&gx) {
            let p: Point = [pa[0] + x * (pb[0] - pa[0]), pa[1] + x * (pb[1] - pa[1])];
            let v = sol.flux.value_at(t, p);
            let g = problem.g_n.as_ref().map_or(0.0, |g| g(p));
            mism += w * len * (s * (v[0] * n[0] + v[1] * n[1]) - g);
        }
        trace = trace.max(mism.abs());
    }
    let flux_scale = sol.flux.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if trace > 1e-10 * flux_scale.max(1.0) {
        return Err(Error::Unequilibrated { max_defect: trace });
    }
    Ok(())
}

fn poly_degree(u: &Field, p: &Flux) -> usize {
    (u.space.degree - 1).max(p.degree() + 1)
}

fn diff<'a>(mesh: &'a TriMesh, u: &'a Field, p: &'a Flux) -> impl Fn(usize, Point) -> [f64; 2] + 'a {
    move |t, x| {
        let g = u.grad_at(mesh, t, x);
        let q = p.value_at(t, x);
        [g[0] - q[0], g[1] - q[1]]
    }
}

/// `|grad u - p|` over the domain, integrated exactly.
pub fn residual_norm(mesh: &TriMesh, u: &Field, p: &Flux) -> f64 {
    let deg = poly_degree(u, p);
    vector_norm(mesh, None, &Integrator::new(2 * deg), &diff(mesh, u, p))
}

fn check_inputs(mesh: &TriMesh, u: &Field, p: &Flux) -> Result<()> {
    if u.space.family != Family::Lagrange || !u.space.matches(mesh) || !p.space.matches(mesh) {
        return Err(Error::InvalidArgument("potential must be a Lagrange field on the mesh".into()));
    }
    Ok(())
}

/// `E_G_hat = |grad u_h - p_h| + C0 h |f - pi_h f|`.
pub fn estimate_global(mesh: &TriMesh, problem: &ProblemSpec, u_h: &Field, p_h: &MixedSolution) -> Result<GlobalEstimate> {
    check_inputs(mesh, u_h, &p_h.flux)?;
    check_equilibrated(mesh, problem, p_h)?;
    let residual = residual_norm(mesh, u_h, &p_h.flux);
    let c0_term = c0h(mesh) * projection_error(mesh, problem, &p_h.load);
    Ok(GlobalEstimate {
        e_hat_g: residual + c0_term,
        residual,
        c0_term,
    })
}

/// Local bound on `|grad(u - u_h)|_S`:
/// `E1 = |grad u_h - p_h|_alpha + C0 h |f - pi_h f|`,
/// `E2 = sqrt(2 sqrt2 C_h / eps) |grad u_h - p_h|`,
/// `E_L_hat = sqrt(E1^2 + E2^2) + 2 C0 h |f - pi_h f|`.
pub fn estimate_local(
    mesh: &TriMesh,
    problem: &ProblemSpec,
    u_h: &Field,
    p_h: &MixedSolution,
    alpha: &WeightFn,
    consts: &ConstantsReport,
) -> Result<EstimatorReport> {
    let g = estimate_global(mesh, problem, u_h, p_h)?;
    let deg = poly_degree(u_h, &p_h.flux);
    let wn = weighted_seminorm(mesh, alpha, deg, &diff(mesh, u_h, &p_h.flux))?;
    let e1 = wn.value + g.c0_term;
    let e2 = (2.0 * SQRT_2 * consts.c_h * alpha.grad_linf).sqrt() * g.residual;
    let e_hat_l = e1.hypot(e2) + 2.0 * g.c0_term;
    Ok(EstimatorReport {
        h: consts.h_used,
        kappa_h: consts.kappa_h,
        c_h: consts.c_h,
        c0: consts.c0,
        c0_term: g.c0_term,
        c0_term_improved: None,
        e1,
        e2,
        e1_bar: None,
        e2_bar: None,
        bound_aux: None,
        e_hat_l,
        e_hat_g: g.e_hat_g,
        e_l: None,
        e_g: None,
        beta: None,
        beta_hat: if g.e_hat_g > 0.0 { 100.0 * e_hat_l / g.e_hat_g } else { 0.0 },
        residual: g.residual,
        residual_alpha: wn.value,
        variant: Variant::Rt0,
        integration_mode: wn.integration_mode,
    })
}

/// Bound on `|grad(u - ubar_h)|_S` for the solution `ubar_h` computed with
/// the projected load: `sqrt(E1bar^2 + E2bar^2) + C0 h |f - pi_h f|`.
pub fn estimate_local_aux(
    mesh: &TriMesh,
    problem: &ProblemSpec,
    ubar_h: &Field,
    p_h: &MixedSolution,
    alpha: &WeightFn,
    consts: &ConstantsReport,
) -> Result<AuxEstimate> {
    let g = estimate_global(mesh, problem, ubar_h, p_h)?;
    let deg = poly_degree(ubar_h, &p_h.flux);
    let e1_bar = weighted_seminorm(mesh, alpha, deg, &diff(mesh, ubar_h, &p_h.flux))?.value;
    let e2_bar = (2.0 * SQRT_2 * consts.c_h * alpha.grad_linf).sqrt() * g.residual;
    Ok(AuxEstimate {
        e1_bar,
        e2_bar,
        bound: e1_bar.hypot(e2_bar) + g.c0_term,
    })
}

/// Estimator with the higher-order global term
/// `E2 = sqrt(2 sqrt2 C_h / eps |grad u_h - p~| |grad w - p~|)`, where `p~`
/// is equilibrated against the degree `k-1` projection and `w` solves the
/// degree-`k` problem with that load. `E1` and the `C0` terms keep the
/// piecewise-constant flux `p_h`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_local_improved(
    mesh: &TriMesh,
    problem: &ProblemSpec,
    u_h: &Field,
    p_h: &MixedSolution,
    p_tilde: &MixedSolution,
    w_bar: &Field,
    alpha: &WeightFn,
    consts: &ConstantsReport,
) -> Result<EstimatorReport> {
    if w_bar.space.family != Family::Lagrange || p_tilde.flux.degree() + 1 != w_bar.space.degree {
        return Err(Error::InvalidArgument(format!(
            "flux degree {} does not match potential degree {}",
            p_tilde.flux.degree(),
            w_bar.space.degree
        )));
    }
    if p_tilde.load.space.degree != p_tilde.flux.degree() || p_h.flux.degree() != 0 {
        return Err(Error::InvalidArgument("mismatched projection degrees".into()));
    }
    check_inputs(mesh, w_bar, &p_tilde.flux)?;
    check_equilibrated(mesh, problem, p_tilde)?;
    let mut rep = estimate_local(mesh, problem, u_h, p_h, alpha, consts)?;
    let a = residual_norm(mesh, u_h, &p_tilde.flux);
    let b = residual_norm(mesh, w_bar, &p_tilde.flux);
    rep.e2 = (2.0 * SQRT_2 * consts.c_h * alpha.grad_linf * a * b).sqrt();
    rep.e_hat_l = rep.e1.hypot(rep.e2) + 2.0 * rep.c0_term;
    rep.beta_hat = if rep.e_hat_g > 0.0 { 100.0 * rep.e_hat_l / rep.e_hat_g } else { 0.0 };
    rep.c0_term_improved = Some(c0h(mesh) * projection_error(mesh, problem, &p_tilde.load));
    rep.variant = if w_bar.space.degree == 2 { Variant::ImprovedK2 } else { Variant::Rt0 };
    Ok(rep)
}

/// `(E_L, E_G) = (|grad(u - u_h)|_S, |grad(u - u_h)|)`.
///
/// With singular points present the integrals are repeated with two more
/// grading levels and must agree to 1e-6 relative.
pub fn true_errors(
    mesh: &TriMesh,
    problem: &ProblemSpec,
    u_h: &Field,
    s: &Rect,
) -> Result<(f64, f64)> {
    let Some(exact) = &problem.exact else {
        return Err(Error::InvalidArgument(format!("problem '{}' has no exact solution", problem.name)));
    };
    let grad = exact.grad.as_ref();
    let g = |t: usize, p: Point| {
        let a = grad(p);
        let b = u_h.grad_at(mesh, t, p);
        [a[0] - b[0], a[1] - b[1]]
    };
    let run = |integ: &Integrator| (vector_norm(mesh, Some(s), integ, &g), vector_norm(mesh, None, integ, &g));
    let base = problem.integrator(10);
    let (el, eg) = run(&base);
    if !problem.singular_points.is_empty() {
        let (el2, eg2) = run(&base.clone().with_levels(base.levels + 2));
        for (a, b) in [(el, el2), (eg, eg2)] {
            if (a - b).abs() > 1e-6 * b.abs() {
                return Err(Error::Quadrature(format!("graded quadrature changed from {a:e} to {b:e}")));
            }
        }
        return Ok((el2, eg2));
    }
    Ok((el, eg))
}

/// Least-squares slope of `log(value)` against `log(h)`.
pub fn lsq_slope(h: &[f64], v: &[f64]) -> Option<f64> {
    if h.len() != v.len() || h.len() < 2 || v.iter().chain(h).any(|x| !(*x > 0.0 && x.is_finite())) {
        return None;
    }
    let x: Vec<f64> = h.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Orders between consecutive rows, `log(v_i/v_{i+1}) / log(h_i/h_{i+1})`.
pub fn consecutive_orders(h: &[f64], v: &[f64]) -> Vec<Option<f64>> {
    h.windows(2)
        .zip(v.windows(2))
        .map(|(h, v)| lsq_slope(h, v))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnOrder {
    pub column: String,
    pub slope: Option<f64>,
    pub consecutive: Vec<Option<f64>>,
    pub note: Option<String>,
}

/// Fitted orders of every report column; columns with zero or missing
/// values are skipped with a note.
pub fn convergence_orders(reports: &[EstimatorReport]) -> Result<Vec<ColumnOrder>> {
    if reports.len() < 3 {
        return Err(Error::InvalidArgument("at least three reports are needed".into()));
    }
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("mesh sizes must be strictly decreasing".into()));
    }
    type Getter = fn(&EstimatorReport) -> Option<f64>;
    let cols: [(&str, Getter); 9] = [
        ("kappa_h", |r| Some(r.kappa_h)),
        ("C_h", |r| Some(r.c_h)),
        ("E_L", |r| r.e_l),
        ("E1", |r| Some(r.e1)),
        ("E2", |r| Some(r.e2)),
        ("EhatL", |r| Some(r.e_hat_l)),
        ("EhatG", |r| Some(r.e_hat_g)),
        ("residual_alpha", |r| Some(r.residual_alpha)),
        ("E_G", |r| r.e_g),
    ];
    Ok(cols
        .iter()
        .map(|(name, get)| {
            let v: Option<Vec<f64>> = reports.iter().map(get).collect();
            match v {
                Some(v) if v.iter().all(|x| *x > 0.0) => ColumnOrder {
                    column: name.to_string(),
                    slope: lsq_slope(&h, &v),
                    consecutive: consecutive_orders(&h, &v),
                    note: None,
                },
                Some(_) => ColumnOrder {
                    column: name.to_string(),
                    slope: None,
                    consecutive: Vec::new(),
                    note: Some("zero values".into()),
                },
                None => ColumnOrder {
                    column: name.to_string(),
                    slope: None,
                    consecutive: Vec::new(),
                    note: Some("not computed".into()),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let v: Vec<f64> = h.iter().map(|h| 3.0 * h).collect();
        assert!((lsq_slope(&h, &v).unwrap() - 1.0).abs() < 1e-12);
        let v2: Vec<f64> = h.iter().map(|h: &f64| h.powf(1.5)).collect();
        for o in consecutive_orders(&h, &v2) {
            assert!((o.unwrap() - 1.5).abs() < 1e-12);
        }
        assert!(lsq_slope(&h, &[1.0, 0.0, 1.0, 1.0]).is_none());
    }
}
