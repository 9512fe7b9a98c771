//! Conforming triangulations of the unit square and the L-shaped domain.
//!
//! Triangles are stored counter-clockwise. Local edge `i` of a triangle is the
//! edge opposite its local vertex `i`. Global edges are stored with ascending
//! vertex indices; the global normal of an edge points out of the
//! lower-indexed adjacent triangle (outward on the boundary).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point, Rect};

/// First positive zero of the Bessel function J1.
pub const BESSEL_J11: f64 = 3.8317059702075123;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

impl BoundaryKind {
    fn marker(self) -> char {
        match self {
            BoundaryKind::Dirichlet => 'D',
            BoundaryKind::Neumann => 'N',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Square,
    Lshape,
    Custom,
}

/// Per-element geometry constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    /// Longest edge length.
    pub h: f64,
    /// Optimal constant of the piecewise-constant projection error, `h / j_{1,1}`.
    pub c0: f64,
}

#[derive(Clone, Debug)]
pub struct MeshSize {
    pub h_max: f64,
    /// Leg length for uniform right-triangle meshes, `h_max / sqrt(2)`.
    pub h_leg: f64,
    pub per_element: Vec<ElementGeometry>,
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
    edge_tris: Vec<[usize; 2]>,
    boundary: Vec<Option<BoundaryKind>>,
    domain: DomainTag,
}

impl TriMesh {
    /// Build a mesh from vertices, CCW triangles and a marker for every
    /// boundary edge (given as unordered vertex pairs).
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_markers: &[(usize, usize, BoundaryKind)],
        domain: DomainTag,
    ) -> Result<Self> {
        let markers: HashMap<[usize; 2], BoundaryKind> = boundary_markers
            .iter()
            .map(|&(a, b, k)| (sorted(a, b), k))
            .collect();
        Self::with_marker_fn(vertices, triangles, domain, |e, _| markers.get(&e).copied())
    }

    /// Build a mesh whose boundary edges are all marked with `kind`.
    pub fn with_uniform_boundary(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        kind: BoundaryKind,
        domain: DomainTag,
    ) -> Result<Self> {
        Self::with_marker_fn(vertices, triangles, domain, |_, _| Some(kind))
    }

    /// Build a mesh, asking `marker(edge, midpoint)` for the kind of every boundary edge.
    pub fn with_marker_fn(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        domain: DomainTag,
        mut marker: impl FnMut([usize; 2], Point) -> Option<BoundaryKind>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = geometry::triangle_area(a, b, c);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is not counter-clockwise (signed area {area:e})"
                )));
            }
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::NonFinite("mesh vertices"));
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_tris: Vec<[usize; 2]> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let key = sorted(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_tris.push([NONE, NONE]);
                    edges.len() - 1
                });
                let et = &mut edge_tris[e];
                if et[0] == NONE {
                    et[0] = t;
                } else if et[1] == NONE {
                    et[1] = t;
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} is shared by more than two triangles"
                    )));
                }
                *slot = e;
            }
            tri_edges.push(te);
        }

        let mut boundary = vec![None; edges.len()];
        for (e, et) in edge_tris.iter().enumerate() {
            if et[1] == NONE {
                let [a, b] = edges[e];
                let mid = [
                    0.5 * (vertices[a][0] + vertices[b][0]),
                    0.5 * (vertices[a][1] + vertices[b][1]),
                ];
                let kind = marker(edges[e], mid).ok_or_else(|| {
                    Error::InvalidMesh(format!("boundary edge {:?} has no marker", edges[e]))
                })?;
                boundary[e] = Some(kind);
            }
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            tri_edges,
            edge_tris,
            boundary,
            domain,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Vertex coordinates of triangle `t` in local order.
    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Global edge indices of triangle `t`; entry `i` is opposite local vertex `i`.
    pub fn tri_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    /// +1 where the global normal of local edge `i` is the outward normal of `t`.
    pub fn tri_edge_signs(&self, t: usize) -> [f64; 3] {
        self.tri_edges[t].map(|e| if self.edge_tris[e][0] == t { 1.0 } else { -1.0 })
    }

    /// Adjacent triangles of edge `e`: lower index first, second is `None` on the boundary.
    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        let [a, b] = self.edge_tris[e];
        (a, (b != NONE).then_some(b))
    }

    pub fn boundary_kind(&self, e: usize) -> Option<BoundaryKind> {
        self.boundary[e]
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, BoundaryKind)> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter_map(|(e, k)| k.map(|k| (e, k)))
    }

    pub fn has_dirichlet(&self) -> bool {
        self.boundary.iter().any(|k| *k == Some(BoundaryKind::Dirichlet))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        geometry::dist(self.vertices[a], self.vertices[b])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_points(t);
        geometry::triangle_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.tri_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn element_geometry(&self, t: usize) -> ElementGeometry {
        let [a, b, c] = self.tri_points(t);
        let h = geometry::dist(a, b).max(geometry::dist(b, c)).max(geometry::dist(c, a));
        ElementGeometry {
            area: geometry::triangle_area(a, b, c),
            h,
            c0: h / BESSEL_J11,
        }
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Map a barycentric point of triangle `t` to physical coordinates.
    pub fn to_physical(&self, t: usize, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.tri_points(t);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Check the structural invariants: orientation, edge sharing, boundary
    /// markers and absence of hanging vertices.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.num_triangles() {
            if !(self.area(t) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} has non-positive area")));
            }
        }
        for (e, et) in self.edge_tris.iter().enumerate() {
            let on_boundary = et[1] == NONE;
            if on_boundary != self.boundary[e].is_some() {
                return Err(Error::InvalidMesh(format!("edge {e} has an inconsistent marker")));
            }
        }
        self.check_conforming()
    }

    /// No vertex may lie in the relative interior of a boundary edge; in a
    /// nonconforming mesh every hanging vertex sits on such an edge.
    pub fn check_conforming(&self) -> Result<()> {
        let (x0, x1, y0, y1) = geometry::bounding_box(&self.vertices);
        let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
        let cells = ((self.vertices.len() as f64).sqrt().ceil() as usize).clamp(1, 4096);
        let cell = span / cells as f64;
        let key = |p: Point| {
            let i = (((p[0] - x0) / cell) as usize).min(cells - 1);
            let j = (((p[1] - y0) / cell) as usize).min(cells - 1);
            (i, j)
        };
        let mut grid: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (v, p) in self.vertices.iter().enumerate() {
            grid.entry(key(*p)).or_default().push(v);
        }
        for (e, _) in self.boundary_edges() {
            let [a, b] = self.edges[e];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len = geometry::dist(pa, pb);
            let tol = 1e-10 * len;
            let (ia, ja) = key([pa[0].min(pb[0]), pa[1].min(pb[1])]);
            let (ib, jb) = key([pa[0].max(pb[0]), pa[1].max(pb[1])]);
            for i in ia..=ib {
                for j in ja..=jb {
                    let Some(list) = grid.get(&(i, j)) else { continue };
                    for &v in list {
                        if v == a || v == b {
                            continue;
                        }
                        let p = self.vertices[v];
                        let cross = (pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0]);
                        if (cross / len).abs() > tol {
                            continue;
                        }
                        let s = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1]))
                            / (len * len);
                        if s > 1e-12 && s < 1.0 - 1e-12 {
                            return Err(Error::InvalidMesh(format!(
                                "hanging vertex {v} on edge {:?}",
                                self.edges[e]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Serialize in the plain text mesh format.
    pub fn to_text(&self) -> String {
        let nbe = self.boundary.iter().filter(|k| k.is_some()).count();
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.num_vertices(), self.num_triangles(), nbe);
        for p in &self.vertices {
            let _ = writeln!(s, "{} {}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for (e, k) in self.boundary_edges() {
            let [a, b] = self.edges[e];
            let _ = writeln!(s, "{} {} {}", a, b, k.marker());
        }
        s
    }

    pub fn write_text(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_text(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            })?;
            Ok((no, line?.split_whitespace().map(str::to_owned).collect()))
        };
        fn num<T: std::str::FromStr>(line: usize, tok: Option<&String>) -> Result<T> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
                line,
                msg: format!("bad or missing number {tok:?}"),
            })
        }
        let (no, head) = next("header")?;
        let nv: usize = num(no, head.first())?;
        let nt: usize = num(no, head.get(1))?;
        let nbe: usize = num(no, head.get(2))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (no, tok) = next("vertex")?;
            vertices.push([num(no, tok.first())?, num(no, tok.get(1))?]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (no, tok) = next("triangle")?;
            triangles.push([num(no, tok.first())?, num(no, tok.get(1))?, num(no, tok.get(2))?]);
        }
        let mut markers = Vec::with_capacity(nbe);
        for _ in 0..nbe {
            let (no, tok) = next("boundary edge")?;
            let kind = match tok.get(2).map(String::as_str) {
                Some("D") => BoundaryKind::Dirichlet,
                Some("N") => BoundaryKind::Neumann,
                other => {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("boundary marker must be D or N, got {other:?}"),
                    })
                }
            };
            markers.push((num(no, tok.first())?, num(no, tok.get(1))?, kind));
        }
        Self::new(vertices, triangles, &markers, DomainTag::Custom)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(f))
    }
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Grid coordinate `(2i - n) / (2n)` style helper: exact for dyadic grids.
fn grid_coord(i: usize, n: usize, origin2: isize) -> f64 {
    // value = (2 i + origin2 * n) / (2 n) with origin2 = 2 * origin
    (2 * i as isize + origin2 * n as isize) as f64 / (2 * n) as f64
}

/// Uniform mesh of `(0,1)^2`: `n x n` squares, each cut along the lower-left to
/// upper-right diagonal.
pub fn build_uniform_square(n: usize, bc: BoundaryKind) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([grid_coord(i, n, 0), grid_coord(j, n, 0)]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriMesh::with_uniform_boundary(vertices, triangles, bc, DomainTag::Square)
}

/// Uniform mesh of the L-shaped domain `(-0.5,0.5)^2 \ [-0.5,0]^2` with cell
/// size `1/n`. `n` must be even so that the re-entrant corner is a grid vertex.
pub fn build_uniform_lshape(n: usize) -> Result<TriMesh> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "L-shaped mesh needs an even, positive n (got {n})"
        )));
    }
    let half = n / 2;
    let removed = |i: usize, j: usize| i < half && j < half;
    let mut index = vec![NONE; (n + 1) * (n + 1)];
    let mut vertices = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<Point>| {
        let k = j * (n + 1) + i;
        if index[k] == NONE {
            index[k] = vertices.len();
            vertices.push([grid_coord(i, n, -1), grid_coord(j, n, -1)]);
        }
        index[k]
    };
    let mut triangles = Vec::with_capacity(3 * n * n / 2);
    for j in 0..n {
        for i in 0..n {
            if removed(i, j) {
                continue;
            }
            let v00 = vid(i, j, &mut vertices);
            let v10 = vid(i + 1, j, &mut vertices);
            let v11 = vid(i + 1, j + 1, &mut vertices);
            let v01 = vid(i, j + 1, &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriMesh::with_uniform_boundary(vertices, triangles, BoundaryKind::Dirichlet, DomainTag::Lshape)
}

/// Red-refine the elements whose centroid lies in `region`, `levels` times,
/// then close the mesh: elements with two or more hanging edges (or a hanging
/// edge that is itself split) are red-refined, elements with exactly one
/// hanging edge are bisected (green).
pub fn refine_locally(mesh: &TriMesh, region: &Rect, levels: usize) -> Result<TriMesh> {
    if levels == 0 {
        return Ok(mesh.clone());
    }
    if !region.is_valid() {
        return Err(Error::InvalidArgument(format!("invalid refinement region {region:?}")));
    }
    let mut r = Refiner {
        vertices: mesh.vertices.clone(),
        mids: HashMap::new(),
        markers: mesh
            .boundary_edges()
            .map(|(e, k)| (mesh.edges[e], k))
            .collect(),
    };
    let mut tris = mesh.triangles.clone();
    let mut any_marked = false;
    for _ in 0..levels {
        let marked: Vec<bool> = tris
            .iter()
            .map(|t| {
                let p = t.map(|v| r.vertices[v]);
                region.contains([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0])
            })
            .collect();
        any_marked |= marked.iter().any(|&m| m);
        tris = r.red_refine(&tris, &marked);
    }
    if !any_marked {
        return Err(Error::InvalidArgument(format!(
            "refinement region {region:?} contains no element"
        )));
    }
    loop {
        let marked: Vec<bool> = tris
            .iter()
            .map(|t| {
                let mut hanging = 0;
                let mut deep = false;
                for i in 0..3 {
                    let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                    if let Some(&m) = r.mids.get(&sorted(a, b)) {
                        hanging += 1;
                        deep |= r.mids.contains_key(&sorted(a, m)) || r.mids.contains_key(&sorted(m, b));
                    }
                }
                hanging >= 2 || deep
            })
            .collect();
        if !marked.iter().any(|&m| m) {
            break;
        }
        tris = r.red_refine(&tris, &marked);
    }
    let mut closed = Vec::with_capacity(tris.len() + tris.len() / 4);
    for t in tris {
        let split = (0..3).find_map(|i| {
            let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
            r.mids.get(&sorted(a, b)).map(|&m| (i, m))
        });
        match split {
            None => closed.push(t),
            Some((i, m)) => {
                let (a, b, c) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
                closed.push([a, b, m]);
                closed.push([a, m, c]);
            }
        }
    }
    let markers = r.markers;
    let out = TriMesh::with_marker_fn(r.vertices, closed, mesh.domain, |e, _| markers.get(&e).copied())?;
    out.check_conforming()
        .map_err(|e| Error::InvalidMesh(format!("conformity closure failed: {e}")))?;
    Ok(out)
}

struct Refiner {
    vertices: Vec<Point>,
    mids: HashMap<[usize; 2], usize>,
    markers: HashMap<[usize; 2], BoundaryKind>,
}

impl Refiner {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = sorted(a, b);
        if let Some(&m) = self.mids.get(&key) {
            return m;
        }
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let m = self.vertices.len();
        self.vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        self.mids.insert(key, m);
        if let Some(&k) = self.markers.get(&key) {
            self.markers.insert(sorted(a, m), k);
            self.markers.insert(sorted(m, b), k);
        }
        m
    }

    fn red_refine(&mut self, tris: &[[usize; 3]], marked: &[bool]) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(tris.len() + 3 * marked.iter().filter(|&&m| m).count());
        for (t, &m) in tris.iter().zip(marked) {
            if !m {
                out.push(*t);
                continue;
            }
            let [a, b, c] = *t;
            let ab = self.midpoint(a, b);
            let bc = self.midpoint(b, c);
            let ca = self.midpoint(c, a);
            out.push([a, ab, ca]);
            out.push([ab, b, bc]);
            out.push([ca, bc, c]);
            out.push([ab, bc, ca]);
        }
        out
    }
}

pub fn mesh_size(mesh: &TriMesh) -> MeshSize {
    let per_element: Vec<ElementGeometry> =
        (0..mesh.num_triangles()).map(|t| mesh.element_geometry(t)).collect();
    let h_max = per_element.iter().map(|g| g.h).fold(0.0, f64::max);
    MeshSize {
        h_max,
        h_leg: h_max / std::f64::consts::SQRT_2,
        per_element,
    }
}

/// Largest element diameter among elements whose centroid lies in `region`.
pub fn h_max_in(mesh: &TriMesh, region: &Rect) -> f64 {
    (0..mesh.num_triangles())
        .filter(|&t| region.contains(mesh.centroid(t)))
        .map(|t| mesh.element_geometry(t).h)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euler(m: &TriMesh) -> isize {
        m.num_vertices() as isize - m.num_edges() as isize + m.num_triangles() as isize
    }

    #[test]
    fn smallest_square() {
        let m = build_uniform_square(1, BoundaryKind::Dirichlet).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.num_edges()), (4, 2, 5));
        assert_eq!(m.boundary_edges().count(), 4);
        m.validate().unwrap();
    }

    #[test]
    fn square_n4_euler() {
        let m = build_uniform_square(4, BoundaryKind::Neumann).unwrap();
        // counted by hand: 25 vertices, 40 axis-parallel edges + 16 diagonals, 32 triangles
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (25, 56, 32));
        assert_eq!(euler(&m), 1);
    }

    #[test]
    fn square_n16_size() {
        let m = build_uniform_square(16, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(m.num_triangles(), 512);
        let s = mesh_size(&m);
        assert!((s.h_leg - 0.0625).abs() < 1e-15);
        assert!((s.h_max - 0.0625 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reference_triangle_geometry() {
        let m = TriMesh::with_uniform_boundary(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            BoundaryKind::Dirichlet,
            DomainTag::Custom,
        )
        .unwrap();
        let g = m.element_geometry(0);
        assert!((g.h - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.area - 0.5).abs() < 1e-15);
        assert!(g.c0 <= 0.261 * g.h + 1e-12);
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let r = TriMesh::with_uniform_boundary(
            vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
            vec![[0, 1, 2]],
            BoundaryKind::Dirichlet,
            DomainTag::Custom,
        );
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn lshape_counts_and_corner() {
        let m = build_uniform_lshape(2).unwrap();
        assert_eq!(m.num_triangles(), 6);
        let m = build_uniform_lshape(16).unwrap();
        assert_eq!(m.num_triangles(), 3 * 64 * 2);
        assert!(m.vertices().iter().any(|p| p[0] == 0.0 && p[1] == 0.0));
        assert!((mesh_size(&m).h_leg - 1.0 / 16.0).abs() < 1e-15);
        assert!((m.total_area() - 0.75).abs() < 1e-12);
        for t in 0..m.num_triangles() {
            let c = m.centroid(t);
            assert!(!(c[0] < 0.0 && c[1] < 0.0));
            for p in m.tri_points(t) {
                assert!(!(p[0] < 0.0 && p[1] < 0.0));
            }
        }
        m.validate().unwrap();
        assert!(build_uniform_lshape(3).is_err());
    }

    #[test]
    fn interior_edges_have_two_triangles() {
        let m = build_uniform_square(5, BoundaryKind::Dirichlet).unwrap();
        for e in 0..m.num_edges() {
            let (_, other) = m.edge_triangles(e);
            assert_eq!(other.is_none(), m.boundary_kind(e).is_some());
        }
        for t in 0..m.num_triangles() {
            let s = m.tri_edge_signs(t);
            for (i, &e) in m.tri_edges(t).iter().enumerate() {
                let (lo, _) = m.edge_triangles(e);
                assert_eq!(s[i] > 0.0, lo == t);
            }
        }
    }

    #[test]
    fn refine_identity_for_zero_levels() {
        let m = build_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
        let r = refine_locally(&m, &Rect::square(0.25, 0.75), 0).unwrap();
        assert_eq!(r.triangles(), m.triangles());
    }

    #[test]
    fn refine_square_two_levels() {
        let m = build_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
        let region = Rect::square(0.25, 0.75);
        let r = refine_locally(&m, &region, 2).unwrap();
        r.validate().unwrap();
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        let h_g = 0.25 * 2f64.sqrt();
        // brute-force scan by position
        let mut inner = 0.0f64;
        let mut outer = 0.0f64;
        for t in 0..r.num_triangles() {
            let h = r.element_geometry(t).h;
            if region.contains(r.centroid(t)) {
                inner = inner.max(h);
            } else {
                outer = outer.max(h);
            }
        }
        assert!((inner - h_g / 4.0).abs() < 1e-14, "{inner}");
        assert!((outer - h_g).abs() < 1e-14);
        // h_max from mesh_size equals the exhaustive edge scan
        let scan = (0..r.num_edges()).map(|e| r.edge_length(e)).fold(0.0, f64::max);
        assert_eq!(mesh_size(&r).h_max, scan);
    }

    #[test]
    fn refine_lshape_corner() {
        let m = build_uniform_lshape(8).unwrap();
        let region = Rect::square(-0.25, 0.25);
        let r = refine_locally(&m, &region, 2).unwrap();
        r.validate().unwrap();
        assert!((r.total_area() - 0.75).abs() < 1e-12);
        let h_g = 0.125 * 2f64.sqrt();
        let corner = r
            .vertices()
            .iter()
            .position(|p| p[0] == 0.0 && p[1] == 0.0)
            .unwrap();
        let mut found = 0;
        for t in 0..r.num_triangles() {
            if r.triangles()[t].contains(&corner) {
                found += 1;
                assert!(r.element_geometry(t).h <= h_g / 4.0 + 1e-14);
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn text_round_trip() {
        let m = build_uniform_square(1, BoundaryKind::Dirichlet).unwrap();
        let text = m.to_text();
        let back = TriMesh::read_text(text.as_bytes()).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.num_vertices(), 4);
    }

    #[test]
    fn text_parse_errors() {
        let bad = "3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 D\n1 2 X\n2 0 D\n";
        assert!(matches!(
            TriMesh::read_text(bad.as_bytes()),
            Err(Error::Parse { line: 7, .. })
        ));
        assert!(TriMesh::read_text("2 1".as_bytes()).is_err());
    }

    #[test]
    fn missing_marker_rejected() {
        let r = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            &[(0, 1, BoundaryKind::Dirichlet)],
            DomainTag::Custom,
        );
        assert!(r.is_err());
    }

    #[test]
    fn hanging_vertex_detected() {
        // Left square split into 2, right square into 4 pieces around a midpoint
        // on the shared edge without splitting the left side.
        let v = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 0.5],
        ];
        let t = vec![[0, 1, 2], [0, 2, 3], [1, 4, 6], [4, 5, 6], [6, 5, 2]];
        let m = TriMesh::with_uniform_boundary(v, t, BoundaryKind::Dirichlet, DomainTag::Custom).unwrap();
        assert!(m.check_conforming().is_err());
    }
}
