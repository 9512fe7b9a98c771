//! Experiment configurations, named presets for the reference runs, and the
//! row runner that chains the solves, constants and estimators.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::constants::{compute_constants, ChMode, ConstantsReport, KappaMethod};
use crate::error::{Error, Result};
use crate::estimator::{
    convergence_orders, estimate_local, estimate_local_aux, estimate_local_improved, true_errors, AuxEstimate,
    ColumnOrder, EstimatorReport, Variant,
};
use crate::geometry::Rect;
use crate::mesh::{build_uniform_lshape, build_uniform_square, h_max_in, refine_locally, BoundaryKind, TriMesh};
use crate::problems;
use crate::solve::{solve_conforming, solve_mixed, MixedSolution, ProblemSpec, RhsMode};
use crate::spaces::Field;
use crate::weight::make_weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    DirichletSquare,
    NeumannSquare,
    /// Dirichlet square refined inside the support of the weight.
    SquareGraded,
    Lshape,
    /// L-shaped domain refined near the corner.
    LshapeNonuniform,
}

impl ProblemKind {
    pub fn spec(self) -> ProblemSpec {
        match self {
            ProblemKind::DirichletSquare | ProblemKind::SquareGraded => problems::dirichlet_square(),
            ProblemKind::NeumannSquare => problems::neumann_square(),
            ProblemKind::Lshape | ProblemKind::LshapeNonuniform => problems::lshape(),
        }
    }

    fn boundary(self) -> BoundaryKind {
        match self {
            ProblemKind::NeumannSquare => BoundaryKind::Neumann,
            _ => BoundaryKind::Dirichlet,
        }
    }
}

/// Which length is reported as `h` and used inside `C(h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HConvention {
    /// `1/n` on the uniform base grid.
    Leg,
    /// Largest element diameter inside the support of the weight.
    OmegaPrimeMax,
    /// Largest element diameter inside the refinement region.
    RefinedMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    /// Grading levels toward singular points.
    #[serde(default)]
    pub levels: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemKind,
    /// Base grid resolutions, ascending.
    pub n_list: Vec<usize>,
    /// Local refinement levels, one per row.
    #[serde(default)]
    pub refine_levels: Option<Vec<usize>>,
    /// Where `refine_levels` apply; defaults to the weight support.
    #[serde(default)]
    pub refine_region: Option<Rect>,
    /// When set, level `j` refines the region shrunk by `2^-j` toward this
    /// point, grading the mesh toward it.
    #[serde(default)]
    pub refine_center: Option<[f64; 2]>,
    /// Replaces the generated meshes when present (one file per row).
    #[serde(default)]
    pub mesh_files: Option<Vec<PathBuf>>,
    #[serde(rename = "S")]
    pub s: Rect,
    pub epsilon: f64,
    #[serde(default)]
    pub epsilon_sweep: Option<Sweep>,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_h")]
    pub h_convention: HConvention,
    #[serde(default)]
    pub kappa_method: Option<KappaMethod>,
    #[serde(default = "default_ch")]
    pub ch_mode: ChMode,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub quadrature: Option<QuadratureOverrides>,
}

fn default_variant() -> Variant {
    Variant::Rt0
}

fn default_h() -> HConvention {
    HConvention::Leg
}

fn default_ch() -> ChMode {
    ChMode::Hypercircle
}

pub const PRESETS: [&str; 6] = ["table1", "table2", "table3", "table4", "table5", "table7"];

impl ExperimentConfig {
    fn base(name: &str, problem: ProblemKind, n_list: Vec<usize>, s: Rect, epsilon: f64) -> Self {
        Self {
            name: name.into(),
            problem,
            n_list,
            refine_levels: None,
            refine_region: None,
            refine_center: None,
            mesh_files: None,
            s,
            epsilon,
            epsilon_sweep: None,
            variant: Variant::Rt0,
            h_convention: HConvention::Leg,
            kappa_method: None,
            ch_mode: ChMode::Hypercircle,
            output: None,
            quadrature: None,
        }
    }

    /// Named configurations reproducing the reference tables.
    pub fn preset(name: &str) -> Result<Self> {
        let uniform = vec![16, 32, 64, 128, 256];
        let s = Rect::square(0.375, 0.625);
        let s_corner = Rect::square(-0.125, 0.125);
        Ok(match name {
            "table1" => Self::base(name, ProblemKind::DirichletSquare, uniform, s, 0.15),
            "table2" => Self::base(name, ProblemKind::NeumannSquare, uniform, s, 0.10),
            "table3" => Self {
                variant: Variant::ImprovedK2,
                ..Self::base(name, ProblemKind::DirichletSquare, uniform, s, 0.15)
            },
            "table4" => Self {
                refine_levels: Some(vec![1, 2, 3, 4]),
                h_convention: HConvention::OmegaPrimeMax,
                ..Self::base(name, ProblemKind::SquareGraded, vec![4, 8, 16, 32], s, 0.125)
            },
            "table5" => Self::base(name, ProblemKind::Lshape, uniform, s_corner, 0.375),
            "table7" => Self {
                refine_levels: Some(vec![2, 3, 4, 5, 6]),
                refine_region: Some(s_corner),
                refine_center: Some([0.0, 0.0]),
                h_convention: HConvention::RefinedMax,
                ..Self::base(name, ProblemKind::LshapeNonuniform, vec![8, 16, 32, 64, 128], s_corner, 0.375)
            },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown preset '{name}' (known: {})",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::InvalidArgument(format!("{key}: {msg}")));
        let rows = self.rows();
        if rows == 0 {
            return bad("n_list", "must not be empty".into());
        }
        if self.mesh_files.is_none() {
            if self.n_list.contains(&0) {
                return bad("n_list", "resolutions must be positive".into());
            }
            if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
                return bad("n_list", "must be strictly ascending".into());
            }
        }
        if let Some(l) = &self.refine_levels {
            if l.len() != rows {
                return bad("refine_levels", format!("expected {rows} entries, got {}", l.len()));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if let Some(sw) = &self.epsilon_sweep {
            if !(sw.start > 0.0 && sw.step > 0.0 && sw.stop >= sw.start && sw.stop.is_finite()) {
                return bad("epsilon_sweep", format!("invalid range {sw:?}"));
            }
        }
        if !self.s.is_valid() {
            return bad("S", format!("invalid rectangle {:?}", self.s));
        }
        if let Some(r) = &self.refine_region {
            if !r.is_valid() {
                return bad("refine_region", format!("invalid rectangle {r:?}"));
            }
        }
        if let Some(c) = self.refine_center {
            if !self.refine_rect().contains_closed(c) {
                return bad("refine_center", format!("{c:?} is outside the refinement region"));
            }
        }
        let dom = match self.problem {
            ProblemKind::Lshape | ProblemKind::LshapeNonuniform => Rect::square(-0.5, 0.5),
            _ => Rect::square(0.0, 1.0),
        };
        if self.s.intersection(&dom).is_none() {
            return bad("S", "does not meet the domain".into());
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.mesh_files.as_ref().map_or(self.n_list.len(), Vec::len)
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        let mut p = self.problem.spec();
        if let Some(l) = self.quadrature.as_ref().and_then(|q| q.levels) {
            p.quadrature_levels = l;
        }
        p
    }

    pub fn omega_prime(&self) -> Rect {
        self.s.inflate(self.epsilon)
    }

    pub fn refine_rect(&self) -> Rect {
        self.refine_region.unwrap_or_else(|| self.omega_prime())
    }

    fn h_of(&self, mesh: &TriMesh, leg: f64) -> f64 {
        match self.h_convention {
            HConvention::Leg => leg,
            HConvention::OmegaPrimeMax => h_max_in(mesh, &self.omega_prime()),
            HConvention::RefinedMax => h_max_in(mesh, &self.refine_rect()),
        }
    }

    /// Mesh and table mesh size of row `i`.
    pub fn build_mesh(&self, i: usize) -> Result<(TriMesh, f64)> {
        if let Some(files) = &self.mesh_files {
            let mesh = TriMesh::read_file(&files[i])?;
            let h = self.h_of(&mesh, crate::mesh::mesh_size(&mesh).h_leg);
            return Ok((mesh, h));
        }
        let n = self.n_list[i];
        let base = match self.problem {
            ProblemKind::Lshape | ProblemKind::LshapeNonuniform => build_uniform_lshape(n)?,
            _ => build_uniform_square(n, self.problem.boundary())?,
        };
        let levels = self.refine_levels.as_ref().map_or(0, |l| l[i]);
        let region = self.refine_rect();
        let mesh = match self.refine_center {
            None => refine_locally(&base, &region, levels)?,
            Some(c) => {
                let mut mesh = base;
                for j in 0..levels {
                    let f = 0.5f64.powi(j as i32);
                    let r = Rect::new(
                        c[0] + f * (region.x0 - c[0]),
                        c[0] + f * (region.x1 - c[0]),
                        c[1] + f * (region.y0 - c[1]),
                        c[1] + f * (region.y1 - c[1]),
                    );
                    mesh = refine_locally(&mesh, &r, 1)?;
                }
                mesh
            }
        };
        let h = self.h_of(&mesh, 1.0 / n as f64);
        Ok((mesh, h))
    }
}

/// Discrete solutions of one row, reusable across band widths.
pub struct RowSolutions {
    pub mesh: TriMesh,
    pub h: f64,
    pub problem: ProblemSpec,
    pub u_h: Field,
    pub ubar_h: Field,
    pub p_h: MixedSolution,
    pub improved: Option<(MixedSolution, Field)>,
    pub consts: ConstantsReport,
}

impl RowSolutions {
    pub fn compute(cfg: &ExperimentConfig, i: usize) -> Result<Self> {
        let (mesh, h) = cfg.build_mesh(i)?;
        let problem = cfg.problem_spec();
        let u_h = solve_conforming(&problem, &mesh, 1, RhsMode::ExactF)?;
        let ubar_h = solve_conforming(&problem, &mesh, 1, RhsMode::PiHF)?;
        let p_h = solve_mixed(&problem, &mesh, 0)?;
        let improved = match cfg.variant {
            Variant::Rt0 => None,
            Variant::ImprovedK2 => Some((
                solve_mixed(&problem, &mesh, 1)?,
                solve_conforming(&problem, &mesh, 2, RhsMode::PiHF)?,
            )),
        };
        let consts = compute_constants(&mesh, h, cfg.ch_mode, cfg.kappa_method)?;
        Ok(Self {
            mesh,
            h,
            problem,
            u_h,
            ubar_h,
            p_h,
            improved,
            consts,
        })
    }

    /// Estimator report for band width `epsilon` (true errors not included).
    pub fn estimate(&self, s: Rect, epsilon: f64) -> Result<EstimatorReport> {
        let alpha = make_weight(s, epsilon, &self.mesh)?;
        match &self.improved {
            None => estimate_local(&self.mesh, &self.problem, &self.u_h, &self.p_h, &alpha, &self.consts),
            Some((pt, wb)) => estimate_local_improved(
                &self.mesh,
                &self.problem,
                &self.u_h,
                &self.p_h,
                pt,
                wb,
                &alpha,
                &self.consts,
            ),
        }
    }

    pub fn aux(&self, s: Rect, epsilon: f64) -> Result<AuxEstimate> {
        let alpha = make_weight(s, epsilon, &self.mesh)?;
        estimate_local_aux(&self.mesh, &self.problem, &self.ubar_h, &self.p_h, &alpha, &self.consts)
    }

    /// `max |div p + pi_h f|` over element vertices, relative to `max |pi_h f|`.
    pub fn equilibration_defect(&self) -> f64 {
        let fluxes = std::iter::once(&self.p_h).chain(self.improved.as_ref().map(|(p, _)| p));
        let mut worst: f64 = 0.0;
        for sol in fluxes {
            let (mut d, mut s): (f64, f64) = (0.0, 0.0);
            for t in 0..self.mesh.num_triangles() {
                for l in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0 / 3.0; 3]] {
                    let p = self.mesh.to_physical(t, l);
                    let f = sol.load.value_bary(&self.mesh, t, l);
                    d = d.max((sol.flux.div_at(t, p) + f).abs());
                    s = s.max(f.abs());
                }
            }
            worst = worst.max(if s > 0.0 { d / s } else { d });
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub n: usize,
    pub elements: usize,
    pub report: EstimatorReport,
    pub aux: AuxEstimate,
    pub equilibration_defect: f64,
    pub bounds_hold: bool,
}

/// One table row: solves, constants, estimators and true errors.
pub fn run_row(cfg: &ExperimentConfig, i: usize) -> Result<RowResult> {
    let sol = RowSolutions::compute(cfg, i)?;
    let mut report = sol.estimate(cfg.s, cfg.epsilon)?;
    let aux = sol.aux(cfg.s, cfg.epsilon)?;
    report.e1_bar = Some(aux.e1_bar);
    report.e2_bar = Some(aux.e2_bar);
    report.bound_aux = Some(aux.bound);
    if sol.problem.exact.is_some() {
        let (el, eg) = true_errors(&sol.mesh, &sol.problem, &sol.u_h, &cfg.s)?;
        report = report.with_true_errors(el, eg);
    }
    Ok(RowResult {
        n: cfg.n_list.get(i).copied().unwrap_or(0),
        elements: sol.mesh.num_triangles(),
        bounds_hold: report.bounds_hold(1e-9),
        report,
        aux,
        equilibration_defect: sol.equilibration_defect(),
    })
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub rows: Vec<Result<RowResult>>,
}

impl ExperimentResult {
    pub fn ok_rows(&self) -> Vec<&RowResult> {
        self.rows.iter().filter_map(|r| r.as_ref().ok()).collect()
    }

    /// Every row succeeded and every guaranteed bound held.
    pub fn certified(&self) -> bool {
        self.rows.iter().all(|r| matches!(r, Ok(r) if r.bounds_hold))
    }

    pub fn orders(&self) -> Result<Vec<ColumnOrder>> {
        let reports: Vec<EstimatorReport> = self.ok_rows().iter().map(|r| r.report.clone()).collect();
        convergence_orders(&reports)
    }
}

/// Run `job(i)` for `i < count` on up to `threads` workers; results keep
/// index order.
pub fn parallel_map<T: Send>(count: usize, threads: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = threads.clamp(1, count.max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let collected = std::sync::Mutex::new(Vec::with_capacity(count));
    std::thread::scope(|sc| {
        for _ in 0..threads {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= count {
                    break;
                }
                let r = job(i);
                collected.lock().unwrap().push((i, r));
            });
        }
    });
    for (i, r) in collected.into_inner().unwrap() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|s| s.expect("every index is visited")).collect()
}

pub fn run(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let rows = parallel_map(cfg.rows(), threads, |i| run_row(cfg, i));
    Ok(ExperimentResult { rows })
}

/// `(epsilon, E_hat_L)` for every band width of the sweep on row `row`.
pub fn run_sweep(cfg: &ExperimentConfig, row: usize) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let Some(sw) = &cfg.epsilon_sweep else {
        return Err(Error::InvalidArgument("epsilon_sweep: missing".into()));
    };
    if row >= cfg.rows() {
        return Err(Error::InvalidArgument(format!("row {row} out of range")));
    }
    let sol = RowSolutions::compute(cfg, row)?;
    sw.values()
        .into_iter()
        .map(|eps| Ok((eps, sol.estimate(cfg.s, eps)?.e_hat_l)))
        .collect()
}
