//! Conforming P1 triangle meshes of the square [-1,1]^2 and the unit disc,
//! with uniform red refinement. Disc boundary midpoints are placed on the
//! circle (the chord midpoint projected radially, which is the arc
//! midpoint).

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Square,
    Disc,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub geometry: Geometry,
}

impl TriMesh {
    /// 3x3 vertex grid on [-1,1]^2, each cell split along one diagonal:
    /// 9 vertices, 8 triangles.
    pub fn square_coarse() -> Self {
        let mut vertices = Vec::with_capacity(9);
        for j in 0..3 {
            for i in 0..3 {
                vertices.push([-1.0 + i as f64, -1.0 + j as f64]);
            }
        }
        let idx = |i: usize, j: usize| j * 3 + i;
        let mut triangles = Vec::with_capacity(8);
        for j in 0..2 {
            for i in 0..2 {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        TriMesh {
            vertices,
            triangles,
            geometry: Geometry::Square,
        }
    }

    /// Regular hexagon inscribed in the unit circle, fanned from the
    /// center: 7 vertices, 6 triangles.
    pub fn disc_coarse() -> Self {
        let mut vertices = vec![[0.0, 0.0]];
        for k in 0..6 {
            let t = std::f64::consts::TAU * k as f64 / 6.0;
            vertices.push([t.cos(), t.sin()]);
        }
        let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        TriMesh {
            vertices,
            triangles,
            geometry: Geometry::Disc,
        }
    }

    /// Uniform red refinement: each triangle is split into four by its edge
    /// midpoints. Boundary midpoints of the disc are moved onto the circle.
    pub fn refine(&self) -> Self {
        let boundary = self.boundary_edges();
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                let mut m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                if self.geometry == Geometry::Disc && boundary.contains_key(&key) {
                    let r = (m[0] * m[0] + m[1] * m[1]).sqrt();
                    m = [m[0] / r, m[1] / r];
                }
                vertices.push(m);
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        TriMesh {
            vertices,
            triangles,
            geometry: self.geometry,
        }
    }

    /// Refine `levels` times.
    pub fn refined(self, levels: usize) -> Self {
        (0..levels).fold(self, |m, _| m.refine())
    }

    /// Edges appearing in exactly one triangle, with their multiplicity
    /// dropped: key is the sorted vertex pair.
    pub fn boundary_edges(&self) -> HashMap<(usize, usize), ()> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                *count.entry((p.min(q), p.max(q))).or_insert(0) += 1;
            }
        }
        count
            .into_iter()
            .filter(|(_, n)| *n == 1)
            .map(|(k, _)| (k, ()))
            .collect()
    }

    /// Per-vertex boundary mask.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for (a, b) in self.boundary_edges().keys() {
            mask[*a] = true;
            mask[*b] = true;
        }
        mask
    }

    /// Signed area and P1 shape-function gradients of triangle `e`.
    /// Gradients satisfy grad(lambda_i) = g[i]; sum of the three is zero.
    pub fn tri_geometry(&self, e: usize) -> (f64, [[f64; 2]; 3]) {
        let [a, b, c] = self.triangles[e];
        let (p0, p1, p2) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = 0.5 * det;
        let g = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        (area, g)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|e| self.tri_geometry(e).0).sum()
    }

    /// Centroid of triangle `e`.
    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[e];
        let (p0, p1, p2) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts_per_level() {
        let mut mesh = TriMesh::square_coarse();
        assert_eq!(mesh.vertices.len(), 9);
        assert_eq!(mesh.triangles.len(), 8);
        for level in 1..=6 {
            mesh = mesh.refine();
            let n = 1usize << (level + 1);
            assert_eq!(mesh.vertices.len(), (n + 1) * (n + 1), "level {level}");
            assert_eq!(mesh.triangles.len(), 8 << (2 * level), "level {level}");
        }
        assert_eq!(mesh.vertices.len(), 16641);
        assert_eq!(mesh.triangles.len(), 32768);
        assert!((mesh.total_area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn disc_counts_per_level() {
        let mut mesh = TriMesh::disc_coarse();
        assert_eq!(mesh.vertices.len(), 7);
        assert_eq!(mesh.triangles.len(), 6);
        for level in 1..=6 {
            mesh = mesh.refine();
            let t = 6usize << (2 * level);
            let b = 6usize << level;
            assert_eq!(mesh.triangles.len(), t, "level {level}");
            // Euler: V = T/2 + B/2 + 1 for a disc triangulation
            assert_eq!(mesh.vertices.len(), t / 2 + b / 2 + 1, "level {level}");
        }
        assert_eq!(mesh.vertices.len(), 12481);
        assert_eq!(mesh.triangles.len(), 24576);
    }

    #[test]
    fn disc_boundary_vertices_on_circle() {
        let mesh = TriMesh::disc_coarse().refined(4);
        let mask = mesh.boundary_vertices();
        let mut n_boundary = 0;
        for (v, on) in mesh.vertices.iter().zip(&mask) {
            if *on {
                n_boundary += 1;
                let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
                assert!((r - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(n_boundary, 6 << 4);
    }

    #[test]
    fn disc_area_converges_to_pi() {
        let a3 = TriMesh::disc_coarse().refined(3).total_area();
        let a5 = TriMesh::disc_coarse().refined(5).total_area();
        let pi = std::f64::consts::PI;
        assert!((a5 - pi).abs() < (a3 - pi).abs() / 10.0);
        assert!((a5 - pi).abs() < 1e-3);
    }

    #[test]
    fn orientation_and_gradient_partition() {
        let mesh = TriMesh::square_coarse().refined(2);
        for e in 0..mesh.triangles.len() {
            let (area, g) = mesh.tri_geometry(e);
            assert!(area > 0.0);
            for d in 0..2 {
                assert!((g[0][d] + g[1][d] + g[2][d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p1_gradient_reproduces_affine_functions() {
        let mesh = TriMesh::disc_coarse().refined(3);
        // u(x) = 3 x1 - 2 x2 + 1 has gradient (3, -2) on every element
        let u: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|v| 3.0 * v[0] - 2.0 * v[1] + 1.0)
            .collect();
        for e in 0..mesh.triangles.len() {
            let (_, g) = mesh.tri_geometry(e);
            let [a, b, c] = mesh.triangles[e];
            let gx = u[a] * g[0][0] + u[b] * g[1][0] + u[c] * g[2][0];
            let gy = u[a] * g[0][1] + u[b] * g[1][1] + u[c] * g[2][1];
            assert!((gx - 3.0).abs() < 1e-11);
            assert!((gy + 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn square_boundary_count() {
        let mesh = TriMesh::square_coarse().refined(3);
        let n = mesh.boundary_vertices().iter().filter(|&&b| b).count();
        // 4 sides of a (2^{k+1}+1)-point grid minus shared corners
        assert_eq!(n, 4 * 16);
    }
}
