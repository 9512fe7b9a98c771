//! Model problems with closed-form solutions.

use std::f64::consts::PI;

use crate::geometry::Point;
use crate::mesh::DomainTag;
use crate::solve::ProblemSpec;

/// `u = sin(pi x) sin(pi y)` on the unit square, homogeneous Dirichlet data.
pub fn dirichlet_square() -> ProblemSpec {
    ProblemSpec::new("dirichlet_square", DomainTag::Square, |p: Point| {
        2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()
    })
    .with_exact(
        |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin(),
        |p: Point| {
            [
                PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
                PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
            ]
        },
    )
}

/// `u = cos(pi x) cos(pi y)` on the unit square, homogeneous Neumann data;
/// `u` has mean zero.
pub fn neumann_square() -> ProblemSpec {
    ProblemSpec::new("neumann_square", DomainTag::Square, |p: Point| {
        2.0 * PI * PI * (PI * p[0]).cos() * (PI * p[1]).cos()
    })
    .with_exact(
        |p: Point| (PI * p[0]).cos() * (PI * p[1]).cos(),
        |p: Point| {
            [
                -PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
                -PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
            ]
        },
    )
}

/// Polar angle in `[-pi/2, pi]`, the range covering the L-shaped domain.
fn lshape_angle(p: Point) -> f64 {
    let t = p[1].atan2(p[0]);
    if t < -0.5 * PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Corner factor `v = r^{2/3} sin(2/3 (theta + pi/2))`, harmonic in the
/// L-shaped domain and zero on the two edges meeting at the origin.
pub fn corner_factor(p: Point) -> (f64, [f64; 2]) {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return (0.0, [0.0, 0.0]);
    }
    let th = lshape_angle(p);
    let a = 2.0 / 3.0;
    let phi = th + 0.5 * PI;
    let v = r.powf(a) * (a * phi).sin();
    // grad v = a r^{a-1} (sin(a phi - theta), cos(a phi - theta))
    let c = a * r.powf(a - 1.0);
    (v, [c * (a * phi - th).sin(), c * (a * phi - th).cos()])
}

/// `u = v(r, theta) cos(pi x) cos(pi y)` on `(-0.5,0.5)^2 \ [-0.5,0]^2`;
/// `u` vanishes on the whole boundary.
pub fn lshape() -> ProblemSpec {
    let f = |p: Point| {
        let (v, gv) = corner_factor(p);
        let (cx, sx) = ((PI * p[0]).cos(), (PI * p[0]).sin());
        let (cy, sy) = ((PI * p[1]).cos(), (PI * p[1]).sin());
        let w = cx * cy;
        let gw = [-PI * sx * cy, -PI * cx * sy];
        -2.0 * (gv[0] * gw[0] + gv[1] * gw[1]) + 2.0 * PI * PI * v * w
    };
    ProblemSpec::new("lshape", DomainTag::Lshape, f)
        .with_exact(
            |p: Point| corner_factor(p).0 * (PI * p[0]).cos() * (PI * p[1]).cos(),
            |p: Point| {
                let (v, gv) = corner_factor(p);
                let (cx, sx) = ((PI * p[0]).cos(), (PI * p[0]).sin());
                let (cy, sy) = ((PI * p[1]).cos(), (PI * p[1]).sin());
                [gv[0] * cx * cy - PI * v * sx * cy, gv[1] * cx * cy - PI * v * cx * sy]
            },
        )
        .with_singular_points(&[[0.0, 0.0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn fd_laplacian(u: &dyn Fn(Point) -> f64, p: Point, h: f64) -> f64 {
        (u([p[0] + h, p[1]]) + u([p[0] - h, p[1]]) + u([p[0], p[1] + h]) + u([p[0], p[1] - h]) - 4.0 * u(p)) / (h * h)
    }

    fn fd_grad(u: &dyn Fn(Point) -> f64, p: Point, h: f64) -> [f64; 2] {
        [
            (u([p[0] + h, p[1]]) - u([p[0] - h, p[1]])) / (2.0 * h),
            (u([p[0], p[1] + h]) - u([p[0], p[1] - h])) / (2.0 * h),
        ]
    }

    #[test]
    fn lshape_load_matches_finite_differences() {
        let prob = lshape();
        let ex = prob.exact.clone().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut count = 0;
        while count < 20 {
            let p: Point = [rng.gen_range(-0.45..0.45), rng.gen_range(-0.45..0.45)];
            if (p[0] < 0.02 && p[1] < 0.02) || p[0].hypot(p[1]) < 0.1 {
                continue;
            }
            count += 1;
            // Richardson-extrapolated five-point stencil, fourth order
            let l1 = fd_laplacian(ex.u.as_ref(), p, 1e-3);
            let l2 = fd_laplacian(ex.u.as_ref(), p, 2e-3);
            let lap = (4.0 * l1 - l2) / 3.0;
            let f = (prob.f)(p);
            assert!((f + lap).abs() <= 1e-6 * f.abs().max(1.0), "{p:?}: {f} vs {}", -lap);
            let g = (ex.grad)(p);
            let gf = fd_grad(ex.u.as_ref(), p, 1e-5);
            assert!((g[0] - gf[0]).abs() < 1e-6 && (g[1] - gf[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn lshape_solution_vanishes_on_boundary() {
        let u = lshape().exact.unwrap().u;
        for s in [-0.5, -0.3, 0.0, 0.2, 0.5] {
            assert!(u([0.5, s]).abs() < 1e-15);
            assert!(u([s, 0.5]).abs() < 1e-15);
        }
        for s in [0.0, -0.1, -0.4] {
            assert!(u([s, 0.0]).abs() < 1e-15, "{s}");
            assert!(u([0.0, s]).abs() < 1e-15);
        }
    }

    #[test]
    fn square_loads_match_finite_differences() {
        for prob in [dirichlet_square(), neumann_square()] {
            let ex = prob.exact.clone().unwrap();
            let p = [0.31, 0.77];
            let lap = fd_laplacian(ex.u.as_ref(), p, 1e-3);
            assert!(((prob.f)(p) + lap).abs() < 1e-4);
        }
    }
}
