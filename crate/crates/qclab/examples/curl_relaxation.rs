//! Minimizes the curl-penalized functional I2 over incompatible matrix
//! fields for several penalty lengths, and projects each minimizer back
//! onto compatible deformations.

use qclab::curl::{compatible_projection, minimize_i2, CurlProblem, EdgeMesh, MatrixField};
use qclab::mesh::TriMesh;
use qclab::trust_region::TrParams;
use qclab::{EnergyDensity, Mat2};

fn main() {
    let w = EnergyDensity::WMagicPlus;
    let f0 = Mat2::diag(2.0, 0.5);
    let em = EdgeMesh::new(TriMesh::square_coarse().refined(3));
    let params = TrParams { max_iter: 200, ..TrParams::default() };

    for &length in &[0.5, 1.0, 2.0] {
        let problem = CurlProblem::new(&em, f0, w.clone(), length);
        let start = MatrixField::checkerboard(&em, f0, 0.2, 4);
        let out = minimize_i2(&problem, &start, &params);

        let nodal = compatible_projection(&em, f0, &out.field);
        let mut i1 = 0.0;
        for t in 0..em.mesh.triangles.len() {
            let (area, g) = em.mesh.tri_geometry(t);
            let tri = em.mesh.triangles[t];
            let mut grad = Mat2::ZERO;
            for k in 0..3 {
                grad = grad + Mat2::outer(nodal[tri[k]], g[k]);
            }
            i1 += area * w.value(grad);
        }
        println!(
            "L = {length}: I2 {:.4} (homogeneous I1 {:.4}), projected I1 {:.4}",
            out.i2, out.i2_affine, i1
        );
    }
}
