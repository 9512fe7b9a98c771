//! Barycentric helpers and the continuous Lagrange P1/P2 bases.

use crate::geometry::Point;

/// Gradients of the barycentric coordinates of a triangle.
pub fn barycentric_gradients(tri: &[Point; 3]) -> [[f64; 2]; 3] {
    let two_a = 2.0 * crate::geometry::triangle_area(tri[0], tri[1], tri[2]);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let p = tri[(i + 1) % 3];
        let q = tri[(i + 2) % 3];
        *gi = [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a];
    }
    g
}

/// Barycentric coordinates of `p` with respect to `tri`.
pub fn barycentric(tri: &[Point; 3], p: Point) -> [f64; 3] {
    let g = barycentric_gradients(tri);
    let mut l = [0.0; 3];
    for i in 0..3 {
        // lambda_i vanishes on the opposite edge, which contains tri[i+1].
        let q = tri[(i + 1) % 3];
        l[i] = g[i][0] * (p[0] - q[0]) + g[i][1] * (p[1] - q[1]);
    }
    l
}

pub fn local_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Values of the local Lagrange basis. Local order: vertices, then the edge
/// midpoints opposite vertex 0, 1, 2.
pub fn basis_values(degree: usize, l: [f64; 3], out: &mut [f64]) {
    match degree {
        1 => out[..3].copy_from_slice(&l),
        2 => {
            for i in 0..3 {
                out[i] = l[i] * (2.0 * l[i] - 1.0);
                out[3 + i] = 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
            }
        }
        _ => unreachable!("degree checked by the space descriptor"),
    }
}

pub fn basis_gradients(degree: usize, l: [f64; 3], gl: &[[f64; 2]; 3], out: &mut [[f64; 2]]) {
    match degree {
        1 => out[..3].copy_from_slice(gl),
        2 => {
            for i in 0..3 {
                let s = 4.0 * l[i] - 1.0;
                out[i] = [s * gl[i][0], s * gl[i][1]];
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                out[3 + i] = [
                    4.0 * (l[j] * gl[k][0] + l[k] * gl[j][0]),
                    4.0 * (l[j] * gl[k][1] + l[k] * gl[j][1]),
                ];
            }
        }
        _ => unreachable!("degree checked by the space descriptor"),
    }
}
