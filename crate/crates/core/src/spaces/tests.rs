use super::*;
use crate::mesh::{build_uniform_square, BoundaryKind, DomainTag, TriMesh};
use std::f64::consts::PI;

fn reference() -> TriMesh {
    TriMesh::with_uniform_boundary(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        BoundaryKind::Dirichlet,
        DomainTag::Custom,
    )
    .unwrap()
}

#[test]
fn dof_counts() {
    let m = build_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
    let (nv, ne, nt) = (m.num_vertices(), m.num_edges(), m.num_triangles());
    assert_eq!(SpaceDescriptor::lagrange(&m, 1).unwrap().dof_count, nv);
    assert_eq!(SpaceDescriptor::lagrange(&m, 2).unwrap().dof_count, nv + ne);
    assert_eq!(SpaceDescriptor::discontinuous(&m, 0, false).unwrap().dof_count, nt);
    assert_eq!(SpaceDescriptor::raviart_thomas(&m, 0).unwrap().dof_count, ne);
    assert_eq!(SpaceDescriptor::raviart_thomas(&m, 1).unwrap().dof_count, 2 * ne + 2 * nt);
    let p1 = SpaceDescriptor::lagrange(&m, 1).unwrap();
    assert_eq!(p1.dirichlet_dofs.len(), 16);
    assert!(!p1.mean_zero_constrained);
    let mn = build_uniform_square(4, BoundaryKind::Neumann).unwrap();
    assert!(SpaceDescriptor::lagrange(&mn, 1).unwrap().mean_zero_constrained);
    assert!(matches!(SpaceDescriptor::lagrange(&m, 3), Err(Error::UnsupportedDegree(3))));
}

#[test]
fn p1_nodal_basis_at_own_vertex() {
    let m = reference();
    let sp = SpaceDescriptor::lagrange(&m, 1).unwrap();
    let mut f = Field::zeros(sp);
    f.coefficients[1] = 1.0;
    let (v, g) = f.evaluate(&m, 0, [0.0, 1.0, 0.0]).unwrap();
    assert_eq!(v, 1.0);
    assert_eq!(g, [1.0, 0.0]);
    assert!(f.evaluate(&m, 1, [1.0, 0.0, 0.0]).is_err());
}

#[test]
fn rt0_basis_fluxes_and_divergence() {
    let m = reference();
    let sp = SpaceDescriptor::raviart_thomas(&m, 0).unwrap();
    for e in 0..3 {
        let mut c = vec![0.0; 3];
        c[e] = 1.0;
        let q = Flux::new(&m, sp.clone(), c).unwrap();
        let (_, div) = q.evaluate(&m, 0, [0.2, 0.3, 0.5]).unwrap();
        // single triangle: all global normals are outward
        assert!((div - 1.0 / 0.5).abs() < 1e-13);
        for f in 0..3 {
            let [a, b] = m.edges()[f];
            let (pa, pb) = (m.vertex(a), m.vertex(b));
            let len = m.edge_length(f);
            let (t, _) = m.edge_triangles(f);
            let i = m.tri_edges(t).iter().position(|&x| x == f).unwrap();
            let tri = m.tri_points(t);
            let (p, r) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            let n = [(r[1] - p[1]) / len, -(r[0] - p[0]) / len];
            // RT0 normal trace is constant: midpoint rule is exact
            let v = q.value_at(0, [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            let flux = len * (v[0] * n[0] + v[1] * n[1]);
            let e_expected = if e == f { 1.0 } else { 0.0 };
            assert!((flux - e_expected).abs() < 1e-13, "basis {e} edge {f}: {flux}");
        }
    }
}

#[test]
fn rt1_reproduces_linear_gradient() {
    let m = build_uniform_square(3, BoundaryKind::Dirichlet).unwrap();
    let q = Flux::interpolate(&m, 1, &|p: Point| [2.0 * p[0], 2.0 * p[1]]).unwrap();
    for t in 0..m.num_triangles() {
        for l in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.1, 0.8]] {
            let p = m.to_physical(t, l);
            let v = q.value_at(t, p);
            assert!((v[0] - 2.0 * p[0]).abs() < 1e-12 && (v[1] - 2.0 * p[1]).abs() < 1e-12);
            assert!((q.div_at(t, p) - 4.0).abs() < 1e-11);
        }
    }
    // RT0 cannot hold (2x, 2y) + (y, 0), but it does hold the field x.
    let q0 = Flux::interpolate(&m, 0, &|p: Point| [p[0] + 1.0, p[1] - 2.0]).unwrap();
    let p = m.to_physical(5, [0.3, 0.3, 0.4]);
    let v = q0.value_at(5, p);
    assert!((v[0] - p[0] - 1.0).abs() < 1e-12 && (v[1] - p[1] + 2.0).abs() < 1e-12);
}

#[test]
fn projection_examples() {
    let m = reference();
    let sp0 = SpaceDescriptor::discontinuous(&m, 0, false).unwrap();
    let integ = Integrator::new(6);
    let c = project_pi(&m, &|_| 3.5, &sp0, &integ).unwrap();
    assert_eq!(c.coefficients, vec![3.5]);
    let x = project_pi(&m, &|p: Point| p[0], &sp0, &integ).unwrap();
    assert!((x.coefficients[0] - 1.0 / 3.0).abs() < 1e-15);
    let bad = project_pi(&m, &|_| f64::NAN, &sp0, &integ);
    assert!(matches!(bad, Err(Error::NonFinite(_))));
}

#[test]
fn projection_error_within_c0_bound() {
    let m = build_uniform_square(16, BoundaryKind::Dirichlet).unwrap();
    let f = |p: Point| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin();
    let sp0 = SpaceDescriptor::discontinuous(&m, 0, false).unwrap();
    let integ = Integrator::new(8);
    let pf = project_pi(&m, &f, &sp0, &integ).unwrap();
    let mut err2 = 0.0;
    for t in 0..m.num_triangles() {
        err2 += integ.integrate(&m.tri_points(t), |p| (f(p) - pf.coefficients[t]).powi(2));
    }
    // |f|_{H^1}^2 = 4 pi^4 * pi^2 / 2
    let semi = (2.0 * PI.powi(6)).sqrt();
    let h = 1.0 / 16.0;
    let c0 = 2f64.sqrt() / crate::mesh::BESSEL_J11;
    assert!(err2.sqrt() <= c0 * h * semi, "{} > {}", err2.sqrt(), c0 * h * semi);
}

#[test]
fn mean_zero_projection() {
    let m = build_uniform_square(4, BoundaryKind::Neumann).unwrap();
    let sp = SpaceDescriptor::discontinuous(&m, 1, true).unwrap();
    let integ = Integrator::new(8);
    let f = |p: Point| (PI * p[0]).cos() * (PI * p[1]).cos();
    let pf = project_pi(&m, &f, &sp, &integ).unwrap();
    assert!(pf.integral(&m).abs() < 1e-14);
    let g = |p: Point| 1.0 + p[0];
    assert!(matches!(project_pi(&m, &g, &sp, &integ), Err(Error::Incompatible { .. })));
}

#[test]
fn p2_integral_matches_quadrature() {
    let m = build_uniform_square(3, BoundaryKind::Dirichlet).unwrap();
    let sp = SpaceDescriptor::lagrange(&m, 2).unwrap();
    let u = Field::interpolate(&m, sp, &|p: Point| p[0] * p[0] + 3.0 * p[0] * p[1]).unwrap();
    // exact for quadratics: int x^2 + 3xy = 1/3 + 3/4
    assert!((u.integral(&m) - (1.0 / 3.0 + 0.75)).abs() < 1e-14);
}
