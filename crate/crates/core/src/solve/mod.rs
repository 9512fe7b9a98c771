//! Conforming Lagrange solves, hybridized mixed Raviart-Thomas solves and the
//! two discrete solution operators used for the constant `kappa_h`.

pub mod conforming;
pub mod mixed;
pub mod sparse;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{DomainTag, TriMesh};
use crate::spaces::{Integrator, ScalarFn, VectorFn};

pub use conforming::{apply_rh, solve_conforming, ConformingOperator, RhsMode};
pub use mixed::{apply_th, solve_mixed, MixedOperator, MixedSolution};
pub use sparse::SparseSpd;

/// Closed-form solution used to measure true errors.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: Arc<ScalarFn>,
    pub grad: Arc<VectorFn>,
}

/// Poisson problem `-Lap u = f` with `u = g_D` on Dirichlet edges and
/// `du/dn = g_N` on Neumann edges. The boundary partition is read from the
/// mesh markers; missing boundary data means zero.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: DomainTag,
    pub f: Arc<ScalarFn>,
    pub g_d: Option<Arc<ScalarFn>>,
    pub g_n: Option<Arc<ScalarFn>>,
    pub exact: Option<ExactSolution>,
    /// Points where `f` or the exact gradient is singular; quadrature grades
    /// toward them.
    pub singular_points: Vec<Point>,
    /// Grading levels used next to singular points.
    pub quadrature_levels: usize,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(name: &str, domain: DomainTag, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            domain,
            f: Arc::new(f),
            g_d: None,
            g_n: None,
            exact: None,
            singular_points: Vec::new(),
            quadrature_levels: 8,
        }
    }

    pub fn with_dirichlet(mut self, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.g_d = Some(Arc::new(g));
        self
    }

    pub fn with_neumann(mut self, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.g_n = Some(Arc::new(g));
        self
    }

    pub fn with_exact(
        mut self,
        u: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(ExactSolution {
            u: Arc::new(u),
            grad: Arc::new(grad),
        });
        self
    }

    pub fn with_singular_points(mut self, pts: &[Point]) -> Self {
        self.singular_points = pts.to_vec();
        self
    }

    /// Element integrator of the given degree that grades toward the
    /// problem's singular points.
    pub fn integrator(&self, degree: usize) -> Integrator {
        Integrator::new(degree)
            .with_singular_points(&self.singular_points)
            .with_levels(self.quadrature_levels)
    }

    pub fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        let d = mesh.domain();
        if self.domain != DomainTag::Custom && d != DomainTag::Custom && d != self.domain {
            return Err(Error::InvalidArgument(format!(
                "problem '{}' is posed on {:?} but the mesh is {:?}",
                self.name, self.domain, d
            )));
        }
        Ok(())
    }

    pub fn pure_neumann(mesh: &TriMesh) -> bool {
        !mesh.has_dirichlet()
    }

    pub(crate) fn dirichlet_value(&self, p: Point) -> f64 {
        self.g_d.as_ref().map_or(0.0, |g| g(p))
    }
}
