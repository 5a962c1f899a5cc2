//! P1 finite-element minimization of stored-energy functionals over
//! deformations phi = F0 x + theta with theta = 0 on the boundary. The
//! element energy is exact (the gradient is constant per triangle), the
//! element Hessian is a finite-difference of the closed-form stress.

use crate::energy::{Domain, EnergyDensity};
use crate::mat2::Mat2;
use crate::mesh::TriMesh;
use crate::sparse::Csr;
use crate::trust_region::{self, TrParams, TrProblem, TrReport};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Spatially varying energy density, resolved per element at its centroid.
#[derive(Debug, Clone)]
pub enum MaterialMap {
    Uniform(EnergyDensity),
    /// `inside` within any of the discs, `outside` elsewhere.
    Discs {
        inside: EnergyDensity,
        outside: EnergyDensity,
        discs: Vec<([f64; 2], f64)>,
    },
}

impl MaterialMap {
    pub fn at(&self, x: [f64; 2]) -> &EnergyDensity {
        match self {
            MaterialMap::Uniform(w) => w,
            MaterialMap::Discs {
                inside,
                outside,
                discs,
            } => {
                for (center, r) in discs {
                    let dx = x[0] - center[0];
                    let dy = x[1] - center[1];
                    if dx * dx + dy * dy <= r * r {
                        return inside;
                    }
                }
                outside
            }
        }
    }

    /// Three soft inclusions used by the heterogeneous square experiment.
    pub fn three_discs(inside: EnergyDensity, outside: EnergyDensity) -> Self {
        MaterialMap::Discs {
            inside,
            outside,
            discs: vec![
                ([-0.5, 0.0], 0.2),
                ([0.35, 0.35], 0.2),
                ([0.35, -0.35], 0.2),
            ],
        }
    }
}

pub struct FemProblem<'a> {
    pub mesh: &'a TriMesh,
    pub f0: Mat2,
    /// Free-dof base index per vertex (two dofs each), None on the boundary.
    free: Vec<Option<usize>>,
    n_free: usize,
    /// Per-element (area, shape gradients, energy density).
    elems: Vec<(f64, [[f64; 2]; 3], EnergyDensity)>,
}

impl<'a> FemProblem<'a> {
    pub fn new(mesh: &'a TriMesh, f0: Mat2, material: &MaterialMap) -> Self {
        let boundary = mesh.boundary_vertices();
        let mut free = Vec::with_capacity(mesh.vertices.len());
        let mut n_free = 0;
        for on_boundary in boundary {
            if on_boundary {
                free.push(None);
            } else {
                free.push(Some(2 * n_free));
                n_free += 1;
            }
        }
        let elems = (0..mesh.triangles.len())
            .map(|e| {
                let (area, g) = mesh.tri_geometry(e);
                (area, g, material.at(mesh.centroid(e)).clone())
            })
            .collect();
        FemProblem {
            mesh,
            f0,
            free,
            n_free: 2 * n_free,
            elems,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_free
    }

    /// Nodal displacement of vertex `v` under the dof vector, zero on the
    /// boundary.
    fn theta(&self, x: &[f64], v: usize) -> [f64; 2] {
        match self.free[v] {
            Some(k) => [x[k], x[k + 1]],
            None => [0.0, 0.0],
        }
    }

    /// Deformation gradient on element `e`.
    pub fn element_gradient(&self, x: &[f64], e: usize) -> Mat2 {
        let [a, b, c] = self.mesh.triangles[e];
        let (_, g, _) = &self.elems[e];
        let mut f = self.f0;
        for (v, gi) in [a, b, c].into_iter().zip(g) {
            let th = self.theta(x, v);
            f = f + Mat2::outer(th, *gi);
        }
        f
    }

    /// Energy gap against the affine deformation F0 x with the same
    /// material layout: sum_e area (W_e(F_e) - W_e(F0)).
    pub fn gap(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for e in 0..self.elems.len() {
            let (area, _, w) = &self.elems[e];
            let v = w.value(self.element_gradient(x, e));
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            total += area * (v - w.value(self.f0));
        }
        total
    }

    fn local_gradient(&self, f: Mat2, e: usize) -> [f64; 6] {
        let (area, g, w) = &self.elems[e];
        let s = w.stress(f).scale(*area);
        let mut out = [0.0; 6];
        for (i, gi) in g.iter().enumerate() {
            out[2 * i] = s.a11 * gi[0] + s.a12 * gi[1];
            out[2 * i + 1] = s.a21 * gi[0] + s.a22 * gi[1];
        }
        out
    }

    /// Random interior perturbation with amplitude `scale`, for escaping
    /// the homogeneous critical point of non-elliptic densities.
    pub fn random_start(&self, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.n_free)
            .map(|_| rng.gen_range(-scale..scale))
            .collect()
    }
}

impl TrProblem for FemProblem<'_> {
    fn dim(&self) -> usize {
        self.n_free
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for e in 0..self.elems.len() {
            let (area, _, w) = &self.elems[e];
            let v = w.value(self.element_gradient(x, e));
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            total += area * v;
        }
        total
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.elems.len() {
            let f = self.element_gradient(x, e);
            let local = self.local_gradient(f, e);
            let tri = self.mesh.triangles[e];
            for (i, v) in tri.into_iter().enumerate() {
                if let Some(k) = self.free[v] {
                    out[k] += local[2 * i];
                    out[k + 1] += local[2 * i + 1];
                }
            }
        }
    }

    fn hessian(&self, x: &[f64]) -> Csr {
        let mut trips = Vec::with_capacity(36 * self.elems.len());
        for e in 0..self.elems.len() {
            let (_, g, _) = &self.elems[e];
            let f = self.element_gradient(x, e);
            let h = 1e-6 * f.norm().max(1.0);
            // 6x6 element Hessian by central differences of the local
            // gradient; a nodal perturbation enters F as a rank-one update.
            let mut local = [[0.0; 6]; 6];
            for j in 0..6 {
                let (node, comp) = (j / 2, j % 2);
                let mut dir = [0.0, 0.0];
                dir[comp] = 1.0;
                let df = Mat2::outer(dir, g[node]);
                // near the orientation boundary the perturbed state may
                // leave det > 0; halve the step until both sides are ok
                let mut hj = h;
                if matches!(self.elems[e].2.domain(), Domain::GlPlusOnly) {
                    while ((f + df.scale(hj)).det() <= 0.0 || (f + df.scale(-hj)).det() <= 0.0)
                        && hj > 1e-14 * h
                    {
                        hj *= 0.5;
                    }
                }
                let gp = self.local_gradient(f + df.scale(hj), e);
                let gm = self.local_gradient(f + df.scale(-hj), e);
                for i in 0..6 {
                    local[i][j] = (gp[i] - gm[i]) / (2.0 * hj);
                }
            }
            let tri = self.mesh.triangles[e];
            for i in 0..6 {
                let Some(ki) = self.free[tri[i / 2]] else { continue };
                for j in 0..6 {
                    let Some(kj) = self.free[tri[j / 2]] else { continue };
                    // symmetrize
                    let v = 0.5 * (local[i][j] + local[j][i]);
                    trips.push((ki + i % 2, kj + j % 2, v));
                }
            }
        }
        Csr::from_triplets(self.n_free, &trips)
    }
}

#[derive(Debug, Clone)]
pub struct FemOutcome {
    pub report: TrReport,
    pub gap: f64,
    pub theta: Vec<f64>,
}

/// Minimizes the FEM energy from the given start (zero = homogeneous).
pub fn minimize(problem: &FemProblem, start: Vec<f64>, params: &TrParams) -> FemOutcome {
    let mut x = start;
    let report = trust_region::minimize(problem, &mut x, params);
    let gap = problem.gap(&x);
    FemOutcome {
        report,
        gap,
        theta: x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust_region::TrStatus;

    fn square_problem(levels: usize, w: EnergyDensity, f0: Mat2) -> (TriMesh, MaterialMap, Mat2) {
        let mesh = TriMesh::square_coarse().refined(levels);
        (mesh, MaterialMap::Uniform(w), f0)
    }

    #[test]
    fn homogeneous_energy_is_area_times_density() {
        let f0 = Mat2::diag(2.0f64.sqrt(), 1.0 / 2.0f64.sqrt());
        let (mesh, mat, f0) = square_problem(2, EnergyDensity::WMagicPlus, f0);
        let p = FemProblem::new(&mesh, f0, &mat);
        let x = vec![0.0; p.n_dofs()];
        let want = 4.0 * (2.0 - 2.0f64.ln());
        assert!((p.energy(&x) - want).abs() < 1e-12);
        assert!(p.gap(&x).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_state_is_critical() {
        let (mesh, mat, f0) =
            square_problem(2, EnergyDensity::WMagicPlus, Mat2::diag(1.5, 0.8));
        let p = FemProblem::new(&mesh, f0, &mat);
        let x = vec![0.0; p.n_dofs()];
        let mut g = vec![0.0; p.n_dofs()];
        p.gradient(&x, &mut g);
        let g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(g_inf < 1e-12, "gradient at affine state: {g_inf}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (mesh, mat, f0) = square_problem(1, EnergyDensity::WMagicPlus, Mat2::diag(1.3, 0.9));
        let p = FemProblem::new(&mesh, f0, &mat);
        let x = p.random_start(0.05, 11);
        let mut g = vec![0.0; p.n_dofs()];
        p.gradient(&x, &mut g);
        let h = 1e-6;
        for k in 0..p.n_dofs() {
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let fd = (p.energy(&xp) - p.energy(&xm)) / (2.0 * h);
            assert!(
                (g[k] - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                "dof {k}: grad {} vs fd {fd}",
                g[k]
            );
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let (mesh, mat, f0) = square_problem(1, EnergyDensity::WMagicPlus, Mat2::diag(1.3, 0.9));
        let p = FemProblem::new(&mesh, f0, &mat);
        let x = p.random_start(0.05, 3);
        let h = p.hessian(&x);
        let n = p.n_dofs();
        let eps = 1e-6;
        let mut hv = vec![0.0; n];
        for k in (0..n).step_by(7) {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            h.mul_vec(&e, &mut hv);
            let mut xp = x.clone();
            xp[k] += eps;
            let mut xm = x.clone();
            xm[k] -= eps;
            let mut gp = vec![0.0; n];
            let mut gm = vec![0.0; n];
            p.gradient(&xp, &mut gp);
            p.gradient(&xm, &mut gm);
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!(
                    (hv[i] - fd).abs() <= 1e-4 * (1.0 + fd.abs()),
                    "H[{i},{k}] = {} vs fd {fd}",
                    hv[i]
                );
            }
        }
    }

    #[test]
    fn magic_relaxes_back_to_affine() {
        let f0 = Mat2::diag(2.0f64.sqrt(), 1.0 / 2.0f64.sqrt());
        let (mesh, mat, f0) = square_problem(2, EnergyDensity::WMagicPlus, f0);
        let p = FemProblem::new(&mesh, f0, &mat);
        let start = p.random_start(0.02, 5);
        assert!(p.gap(&start) > 0.0);
        let out = minimize(&p, start, &TrParams::default());
        assert!(
            matches!(out.report.status, TrStatus::Converged | TrStatus::Stuck { .. }),
            "{:?}",
            out.report
        );
        assert!(out.gap.abs() < 1e-7, "gap {}", out.gap);
    }

    #[test]
    fn weakened_energy_escapes_homogeneous_state() {
        let f0 = Mat2::diag(2.0, 0.5);
        let (mesh, mat, f0) = square_problem(3, EnergyDensity::Wc { c: 1.5 }, f0);
        let p = FemProblem::new(&mesh, f0, &mat);
        // the homogeneous state is a critical point, so start off it
        let out = minimize(&p, p.random_start(1e-3, 1), &TrParams {
            max_iter: 300,
            ..TrParams::default()
        });
        assert!(out.gap < -1e-6, "gap {}", out.gap);
    }

    #[test]
    fn gap_scaling_invariance() {
        // scaling F0 and the nodal field together leaves the gap unchanged
        let (mesh, mat, f0) = square_problem(2, EnergyDensity::WMagicPlus, Mat2::diag(1.4, 0.9));
        let p = FemProblem::new(&mesh, f0, &mat);
        let x = p.random_start(0.05, 9);
        let alpha = 2.0;
        let p2 = FemProblem::new(&mesh, f0.scale(alpha), &mat);
        let x2: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let (g1, g2) = (p.gap(&x), p2.gap(&x2));
        assert!((g1 - g2).abs() <= 1e-10 * (1.0 + g1.abs()), "{g1} vs {g2}");
    }

    #[test]
    fn material_map_selects_by_centroid() {
        let mat = MaterialMap::three_discs(
            EnergyDensity::Wc { c: 1.2 },
            EnergyDensity::WMagicPlus,
        );
        assert_eq!(mat.at([-0.5, 0.0]).name(), "w_c:{c:1.2}");
        assert_eq!(mat.at([0.9, 0.9]).name(), "w_magic_plus");
        let mesh = TriMesh::square_coarse().refined(4);
        let p = FemProblem::new(&mesh, Mat2::IDENTITY, &mat);
        // with inclusions present the homogeneous identity state is still
        // feasible and has zero gap by definition
        let x = vec![0.0; p.n_dofs()];
        assert!(p.gap(&x).abs() < 1e-14);
    }
}
