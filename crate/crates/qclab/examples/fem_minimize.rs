//! Finite-element energy minimization with Dirichlet data F0 x: the
//! candidate energy relaxes back to the homogeneous state, a weakened
//! density buckles into microstructure, and restarting the candidate from
//! that buckled state recovers the homogeneous gap.
//!
//! Usage: cargo run --release --example fem_minimize [levels]

use qclab::fem::{minimize, FemProblem, MaterialMap};
use qclab::mesh::TriMesh;
use qclab::trust_region::TrParams;
use qclab::{EnergyDensity, Mat2};

fn main() {
    let levels: usize = std::env::args()
        .nth(1)
        .map_or(4, |a| a.parse().expect("refinement levels"));
    let mesh = TriMesh::square_coarse().refined(levels);
    let f0 = Mat2::diag(2.0, 0.5);
    let params = TrParams { max_iter: 300, ..TrParams::default() };
    println!(
        "square mesh at level {levels}: {} vertices, {} triangles",
        mesh.vertices.len(),
        mesh.triangles.len()
    );

    let magic = MaterialMap::Uniform(EnergyDensity::WMagicPlus);
    let p = FemProblem::new(&mesh, f0, &magic);
    let out = minimize(&p, p.random_start(2e-3, 11), &params);
    println!("candidate energy from random start: gap {:+.3e}", out.gap);

    let weak = MaterialMap::Uniform(EnergyDensity::Wc { c: 1.1 });
    let pw = FemProblem::new(&mesh, f0, &weak);
    let buckled = minimize(&pw, pw.random_start(1e-3, 11), &params);
    println!("weakened energy (c = 1.1): gap {:+.3e}", buckled.gap);

    let restarted = minimize(&p, buckled.theta, &params);
    println!(
        "candidate restarted from the buckled state: gap {:+.3e}",
        restarted.gap
    );
}
