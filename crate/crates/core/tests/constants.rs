use fehc_core::constants::{compute_c0, compute_ch, compute_constants, compute_kappa, ChMode, KappaMethod, KappaOperator};
use fehc_core::mesh::{build_uniform_lshape, build_uniform_square, BoundaryKind, DomainTag, TriMesh, BESSEL_J11};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kappa(mesh: &TriMesh, m: KappaMethod) -> f64 {
    compute_kappa(mesh, Some(m)).unwrap().kappa
}

#[test]
fn c0_on_reference_triangle() {
    let mesh = TriMesh::with_uniform_boundary(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        BoundaryKind::Dirichlet,
        DomainTag::Square,
    )
    .unwrap();
    let hk = 2f64.sqrt();
    let c0 = compute_c0(&mesh, hk).unwrap();
    assert!((c0 - 1.0 / BESSEL_J11).abs() < 1e-12);
    assert!((c0 - 0.2610).abs() < 1e-4);
}

#[test]
fn c0_on_uniform_square_is_scale_invariant() {
    for n in [4, 16, 64] {
        let mesh = build_uniform_square(n, BoundaryKind::Dirichlet).unwrap();
        let c0 = compute_c0(&mesh, 1.0 / n as f64).unwrap();
        assert!((c0 - 2f64.sqrt() / BESSEL_J11).abs() < 1e-12, "n={n}: {c0}");
        assert!((c0 - 0.3691).abs() < 1e-4);
    }
    let mesh = build_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
    assert!(compute_c0(&mesh, 0.0).is_err());
}

#[test]
fn ch_examples() {
    let c0 = 2f64.sqrt() / BESSEL_J11;
    let ch = compute_ch(0.030, c0, 1.0 / 16.0, ChMode::Hypercircle, DomainTag::Square).unwrap();
    assert!((ch - 0.0378).abs() < 5e-4, "{ch}");
    assert!((ch - 0.036).abs() / 0.036 < 0.07);
    assert_eq!(compute_ch(0.0, c0, 0.0, ChMode::Hypercircle, DomainTag::Square).unwrap(), 0.0);
    let lag = compute_ch(0.0, c0, 1.0 / 64.0, ChMode::Lagrange0493, DomainTag::Square).unwrap();
    assert!((lag - 0.0077).abs() < 1e-4);
    assert!(compute_ch(0.01, c0, 1.0 / 64.0, ChMode::Lagrange0493, DomainTag::Lshape).is_err());
    assert!(compute_ch(-0.01, c0, 1.0 / 64.0, ChMode::Hypercircle, DomainTag::Square).is_err());
}

#[test]
fn ch_dominates_both_terms() {
    for n in [4, 8] {
        let mesh = build_uniform_square(n, BoundaryKind::Dirichlet).unwrap();
        let h = 1.0 / n as f64;
        let r = compute_constants(&mesh, h, ChMode::Hypercircle, None).unwrap();
        assert!(r.c_h >= r.kappa_h);
        assert!(r.c_h >= r.c0 * h);
        assert!(r.kappa_h > 0.0);
        assert_eq!(r.method, KappaMethod::DenseEig);
        assert!((r.lagrange_alternative.unwrap() - 0.493 * h).abs() < 1e-15);
    }
    let l = build_uniform_lshape(4).unwrap();
    let r = compute_constants(&l, 0.25, ChMode::Hypercircle, None).unwrap();
    assert!(r.lagrange_alternative.is_none());
}

#[test]
fn dense_power_and_lanczos_agree() {
    for bc in [BoundaryKind::Dirichlet, BoundaryKind::Neumann] {
        for n in [2, 4, 8] {
            let mesh = build_uniform_square(n, bc).unwrap();
            let d = kappa(&mesh, KappaMethod::DenseEig);
            let p = kappa(&mesh, KappaMethod::PowerIteration);
            let l = kappa(&mesh, KappaMethod::Lanczos);
            let tol = if n == 2 { 1e-8 } else { 1e-6 };
            assert!(((d - p) / d).abs() < tol, "{bc:?} n={n}: dense {d} power {p}");
            assert!(((d - l) / d).abs() < 1e-6, "{bc:?} n={n}: dense {d} lanczos {l}");
        }
    }
    let mesh = build_uniform_lshape(4).unwrap();
    let d = kappa(&mesh, KappaMethod::DenseEig);
    let l = kappa(&mesh, KappaMethod::Lanczos);
    assert!(((d - l) / d).abs() < 1e-6);
}

#[test]
fn random_rayleigh_quotients_stay_below_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for bc in [BoundaryKind::Dirichlet, BoundaryKind::Neumann] {
        let mesh = build_uniform_square(4, bc).unwrap();
        let k = kappa(&mesh, KappaMethod::DenseEig);
        let op = KappaOperator::new(&mesh).unwrap();
        for _ in 0..1000 {
            let mut c: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            op.project(&mut c);
            let q = op.rayleigh(&c).unwrap().max(0.0).sqrt();
            assert!(q <= k + 1e-8, "{bc:?}: quotient {q} above kappa {k}");
        }
    }
}

#[test]
fn operator_is_symmetric() {
    let mesh = build_uniform_square(3, BoundaryKind::Dirichlet).unwrap();
    let op = KappaOperator::new(&mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ga = op.apply(&a).unwrap();
    let gb = op.apply(&b).unwrap();
    let ab: f64 = ga.iter().zip(&b).map(|(x, y)| x * y).sum();
    let ba: f64 = gb.iter().zip(&a).map(|(x, y)| x * y).sum();
    assert!((ab - ba).abs() < 1e-13 * ab.abs().max(1e-3));
}

#[test]
fn kappa_reference_values_and_halving() {
    let mut ks = Vec::new();
    let ns = [4, 8, 16, 32];
    for n in ns {
        let mesh = build_uniform_square(n, BoundaryKind::Dirichlet).unwrap();
        ks.push(kappa(&mesh, KappaMethod::Lanczos));
    }
    assert!((ks[2] - 0.030).abs() / 0.030 < 0.05, "n=16: {}", ks[2]);
    let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let slope = fehc_core::estimator::lsq_slope(&h, &ks).unwrap();
    assert!((slope - 1.0).abs() < 0.2, "slope {slope}");
    assert!(ks.windows(2).all(|w| w[1] < w[0]));

    let mesh = build_uniform_square(64, BoundaryKind::Dirichlet).unwrap();
    let k64 = kappa(&mesh, KappaMethod::Lanczos);
    assert!((k64 - 0.008).abs() / 0.008 < 0.05, "n=64: {k64}");
}

#[test]
fn neumann_needs_two_elements() {
    let mesh = TriMesh::with_uniform_boundary(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        BoundaryKind::Neumann,
        DomainTag::Square,
    )
    .unwrap();
    assert!(compute_kappa(&mesh, None).is_err());
}
