use fehc_core::experiment::{parallel_map, run, run_sweep, ExperimentConfig, HConvention, ProblemKind, Sweep, PRESETS};
use fehc_core::geometry::Rect;
use fehc_core::Error;

fn small(problem: ProblemKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset("table1").unwrap();
    c.name = "small".into();
    c.problem = problem;
    c.n_list = vec![8, 16, 32];
    c
}

fn message(e: Error) -> String {
    e.to_string()
}

#[test]
fn presets_are_valid() {
    for p in PRESETS {
        let c = ExperimentConfig::preset(p).unwrap();
        c.validate().unwrap();
        assert_eq!(c.name, p);
    }
    assert!(ExperimentConfig::preset("table6").is_err());
    let t1 = ExperimentConfig::preset("table1").unwrap();
    assert_eq!(t1.n_list, vec![16, 32, 64, 128, 256]);
    assert_eq!(t1.epsilon, 0.15);
    assert_eq!(ExperimentConfig::preset("table2").unwrap().epsilon, 0.10);
    assert_eq!(ExperimentConfig::preset("table5").unwrap().epsilon, 0.375);
}

#[test]
fn validation_names_the_key() {
    let mut c = small(ProblemKind::DirichletSquare);
    c.n_list.clear();
    assert!(message(c.validate().unwrap_err()).contains("n_list"));
    let mut c = small(ProblemKind::DirichletSquare);
    c.n_list = vec![16, 8];
    assert!(message(c.validate().unwrap_err()).contains("n_list"));
    let mut c = small(ProblemKind::DirichletSquare);
    c.epsilon = 0.0;
    assert!(message(c.validate().unwrap_err()).contains("epsilon"));
    let mut c = small(ProblemKind::DirichletSquare);
    c.s = Rect::square(2.0, 3.0);
    assert!(message(c.validate().unwrap_err()).starts_with("invalid argument: S"));
    let mut c = small(ProblemKind::DirichletSquare);
    c.refine_levels = Some(vec![1]);
    assert!(message(c.validate().unwrap_err()).contains("refine_levels"));
    let mut c = small(ProblemKind::DirichletSquare);
    c.epsilon_sweep = Some(Sweep { start: 0.3, stop: 0.1, step: 0.05 });
    assert!(message(c.validate().unwrap_err()).contains("epsilon_sweep"));
    let mut c = small(ProblemKind::DirichletSquare);
    c.refine_center = Some([5.0, 5.0]);
    assert!(message(c.validate().unwrap_err()).contains("refine_center"));
}

#[test]
fn sweep_values() {
    let s = Sweep { start: 0.05, stop: 0.30, step: 0.025 };
    let v = s.values();
    assert_eq!(v.len(), 11);
    assert!((v[10] - 0.30).abs() < 1e-12);
}

#[test]
fn mesh_size_conventions() {
    let c = small(ProblemKind::DirichletSquare);
    let (m, h) = c.build_mesh(1).unwrap();
    assert_eq!(h, 1.0 / 16.0);
    assert_eq!(m.num_triangles(), 512);

    let t4 = ExperimentConfig::preset("table4").unwrap();
    assert_eq!(t4.h_convention, HConvention::OmegaPrimeMax);
    for i in 0..t4.rows() {
        let (_, h) = t4.build_mesh(i).unwrap();
        // legs 1/(n 2^L) inside, with h_G = 1/n ~ sqrt(h)
        let n = t4.n_list[i] as f64;
        let l = t4.refine_levels.as_ref().unwrap()[i] as i32;
        assert!((h - 2f64.sqrt() / (n * 2f64.powi(l))).abs() < 1e-14, "row {i}: {h}");
        assert!((1.0 / n - (h / 2f64.sqrt() / 2.0).sqrt()).abs() < 1e-12);
    }

    let t7 = ExperimentConfig::preset("table7").unwrap();
    let mut last = f64::INFINITY;
    for i in 0..t7.rows() {
        let (m, h) = t7.build_mesh(i).unwrap();
        m.validate().unwrap();
        assert!((m.total_area() - 0.75).abs() < 1e-12);
        assert!(h < last);
        last = h;
        // elements at the corner are the finest ones
        let corner = m.vertices().iter().position(|p| p[0] == 0.0 && p[1] == 0.0).unwrap();
        let levels = t7.refine_levels.as_ref().unwrap()[i] as i32;
        let finest = 2f64.sqrt() / t7.n_list[i] as f64 / 2f64.powi(levels);
        for (t, tri) in m.triangles().iter().enumerate() {
            if tri.contains(&corner) {
                assert!(m.element_geometry(t).h <= finest + 1e-14);
            }
        }
    }
}

#[test]
fn small_runs_are_certified() {
    for p in [ProblemKind::DirichletSquare, ProblemKind::NeumannSquare, ProblemKind::Lshape] {
        let mut c = small(p);
        if p == ProblemKind::Lshape {
            c.s = Rect::square(-0.125, 0.125);
            c.epsilon = 0.375;
        }
        let r = run(&c, 2).unwrap();
        assert!(r.certified(), "{p:?}");
        let rows = r.ok_rows();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(row.equilibration_defect <= 1e-11, "{p:?}: {}", row.equilibration_defect);
            assert!(row.report.e_l.is_some());
            assert!(row.aux.bound > 0.0);
        }
        let orders = r.orders().unwrap();
        let e1 = orders.iter().find(|o| o.column == "E1").unwrap();
        assert!(e1.slope.unwrap() > 0.5);
    }
}

#[test]
fn improved_variant_run() {
    let mut c = ExperimentConfig::preset("table3").unwrap();
    c.n_list = vec![8, 16, 32];
    let r = run(&c, 1).unwrap();
    assert!(r.certified());
    let e2: Vec<f64> = r.ok_rows().iter().map(|r| r.report.e2).collect();
    assert!(e2.windows(2).all(|w| w[1] < w[0] / 3.0), "{e2:?}");
}

#[test]
fn sweep_needs_a_range() {
    let mut c = small(ProblemKind::DirichletSquare);
    assert!(message(run_sweep(&c, 0).unwrap_err()).contains("epsilon_sweep"));
    c.epsilon_sweep = Some(Sweep { start: 0.1, stop: 0.2, step: 0.05 });
    assert!(run_sweep(&c, 7).is_err());
    let v = run_sweep(&c, 0).unwrap();
    assert_eq!(v.len(), 3);
    assert!(v.iter().all(|(_, e)| *e > 0.0));
}

#[test]
fn parallel_map_keeps_order() {
    let v = parallel_map(17, 4, |i| i * i);
    assert_eq!(v, (0..17).map(|i| i * i).collect::<Vec<_>>());
    assert!(parallel_map(0, 3, |i| i).is_empty());
}
