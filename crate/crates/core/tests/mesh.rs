use std::collections::HashMap;

use fehc_core::geometry::Rect;
use fehc_core::mesh::{build_uniform_lshape, build_uniform_square, h_max_in, mesh_size, refine_locally, BoundaryKind, TriMesh};

/// Orientation, edge sharing and boundary markers by direct scan.
fn scan_invariants(m: &TriMesh) {
    m.validate().unwrap();
    let mut count: HashMap<[usize; 2], usize> = HashMap::new();
    for (t, tri) in m.triangles().iter().enumerate() {
        assert!(m.area(t) > 0.0);
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            *count.entry([a.min(b), a.max(b)]).or_default() += 1;
        }
    }
    assert_eq!(count.len(), m.num_edges());
    for (e, &[a, b]) in m.edges().iter().enumerate() {
        assert!(a < b);
        let c = count[&[a, b]];
        assert!(c == 1 || c == 2);
        assert_eq!(c == 1, m.boundary_kind(e).is_some());
    }
}

fn generated() -> Vec<(TriMesh, f64)> {
    let mut v = Vec::new();
    for n in [1, 2, 5, 16] {
        v.push((build_uniform_square(n, BoundaryKind::Dirichlet).unwrap(), 1.0));
        v.push((build_uniform_square(n, BoundaryKind::Neumann).unwrap(), 1.0));
    }
    for n in [2, 4, 16] {
        v.push((build_uniform_lshape(n).unwrap(), 0.75));
    }
    let sq = build_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
    v.push((refine_locally(&sq, &Rect::square(0.25, 0.75), 3).unwrap(), 1.0));
    v.push((refine_locally(&sq, &Rect::new(0.0, 0.4, 0.6, 1.0), 2).unwrap(), 1.0));
    let l = build_uniform_lshape(8).unwrap();
    v.push((refine_locally(&l, &Rect::square(-0.25, 0.25), 2).unwrap(), 0.75));
    v
}

#[test]
fn generated_meshes_satisfy_invariants() {
    for (m, area) in generated() {
        scan_invariants(&m);
        assert!((m.total_area() - area).abs() < 1e-12 * area);
        let h = mesh_size(&m);
        let scan = (0..m.num_edges()).map(|e| m.edge_length(e)).fold(0.0, f64::max);
        assert_eq!(h.h_max, scan);
        for t in 0..m.num_triangles() {
            let g = m.element_geometry(t);
            assert!(g.c0 <= 0.261 * g.h + 1e-12);
        }
    }
}

#[test]
fn c0_ratio_is_constant_on_uniform_meshes() {
    for n in [3, 8] {
        let m = build_uniform_square(n, BoundaryKind::Dirichlet).unwrap();
        let r0 = m.element_geometry(0).c0 / m.element_geometry(0).h;
        for t in 0..m.num_triangles() {
            let g = m.element_geometry(t);
            assert!((g.c0 / g.h - r0).abs() < 1e-15);
        }
    }
}

#[test]
fn lshape_examples() {
    let m = build_uniform_lshape(2).unwrap();
    assert_eq!(m.num_triangles(), 6);
    let m = build_uniform_lshape(4).unwrap();
    assert_eq!(m.num_triangles(), 24);
    assert!(m.boundary_edges().all(|(_, k)| k == BoundaryKind::Dirichlet));
    let m = build_uniform_lshape(16).unwrap();
    assert!((mesh_size(&m).h_leg - 1.0 / 16.0).abs() < 1e-15);
}

#[test]
fn refinement_region_size() {
    let sq = build_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
    let region = Rect::square(0.25, 0.75);
    let r = refine_locally(&sq, &region, 2).unwrap();
    // h_G = 1/4 and two levels give interior legs h_G^2
    assert!((h_max_in(&r, &region) - 2f64.sqrt() / 16.0).abs() < 1e-14);
    assert!(refine_locally(&sq, &Rect::square(2.0, 3.0), 1).is_err());
}

#[test]
fn text_format_round_trips() {
    let sq = build_uniform_square(3, BoundaryKind::Neumann).unwrap();
    let r = refine_locally(&sq, &Rect::square(0.3, 0.6), 1).unwrap();
    for m in [sq, r, build_uniform_lshape(4).unwrap()] {
        let a = m.to_text();
        let back = TriMesh::read_text(a.as_bytes()).unwrap();
        assert_eq!(back.to_text(), a);
        assert_eq!(back.num_edges(), m.num_edges());
        let first = a.lines().next().unwrap();
        let nbe = m.boundary_edges().count();
        assert_eq!(first, format!("{} {} {}", m.num_vertices(), m.num_triangles(), nbe));
    }
}
