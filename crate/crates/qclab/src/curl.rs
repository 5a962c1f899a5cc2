//! Relaxation over incompatible fields: each row of a matrix field P is a
//! lowest-order edge element (Whitney 1-form), the functional is
//! I2(P) = \int W(P) + (L^2/2) |curl P|^2 with one-point quadrature for W
//! and the elementwise-constant curl integrated exactly. Tangential
//! boundary dofs are fixed to those of the affine map F0 x.

use crate::energy::{Domain, EnergyDensity};
use crate::mat2::Mat2;
use crate::mesh::TriMesh;
use crate::sparse::{cg, Csr};
use crate::trust_region::{self, TrParams, TrProblem, TrReport, TrStatus};

/// Edge connectivity on top of a triangle mesh. Edges are canonically
/// oriented from the lower to the higher vertex index; the dof of a row
/// field on an edge is its line integral along that orientation.
#[derive(Debug, Clone)]
pub struct EdgeMesh {
    pub mesh: TriMesh,
    /// Sorted vertex pairs.
    pub edges: Vec<(usize, usize)>,
    /// Per triangle: the three edge indices opposite to no particular
    /// vertex, in the order (v0,v1), (v1,v2), (v2,v0).
    pub tri_edges: Vec<[usize; 3]>,
    pub boundary_edge: Vec<bool>,
}

impl EdgeMesh {
    pub fn new(mesh: TriMesh) -> Self {
        let mut index = std::collections::HashMap::new();
        let mut edges = Vec::new();
        let mut tri_edges = Vec::with_capacity(mesh.triangles.len());
        for &[a, b, c] in &mesh.triangles {
            let mut ids = [0usize; 3];
            for (k, (p, q)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
                let key = (p.min(q), p.max(q));
                ids[k] = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
            }
            tri_edges.push(ids);
        }
        let mut boundary_edge = vec![false; edges.len()];
        for (key, ()) in mesh.boundary_edges() {
            boundary_edge[index[&key]] = true;
        }
        EdgeMesh {
            mesh,
            edges,
            tri_edges,
            boundary_edge,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_vector(&self, e: usize) -> [f64; 2] {
        let (a, b) = self.edges[e];
        let (p, q) = (self.mesh.vertices[a], self.mesh.vertices[b]);
        [q[0] - p[0], q[1] - p[1]]
    }

    /// Whitney basis data of edge `k` (local slot) on triangle `t`:
    /// (value at the centroid, constant scalar curl).
    pub fn whitney(&self, t: usize, k: usize) -> ([f64; 2], f64) {
        let tri = self.mesh.triangles[t];
        let (_, g) = self.mesh.tri_geometry(t);
        let (la, lb) = match k {
            0 => (0usize, 1usize),
            1 => (1, 2),
            _ => (2, 0),
        };
        // reorder to the canonical (low, high) global orientation
        let (la, lb) = if tri[la] < tri[lb] { (la, lb) } else { (lb, la) };
        let (ga, gb) = (g[la], g[lb]);
        let value = [(gb[0] - ga[0]) / 3.0, (gb[1] - ga[1]) / 3.0];
        let curl = 2.0 * (ga[0] * gb[1] - ga[1] * gb[0]);
        (value, curl)
    }

    /// Whitney row field of edge slot `k` on triangle `t` at a point, for
    /// verification: w = lambda_a grad(lambda_b) - lambda_b grad(lambda_a).
    pub fn whitney_at(&self, t: usize, k: usize, x: [f64; 2]) -> [f64; 2] {
        let tri = self.mesh.triangles[t];
        let (_, g) = self.mesh.tri_geometry(t);
        let (la, lb) = match k {
            0 => (0usize, 1usize),
            1 => (1, 2),
            _ => (2, 0),
        };
        let (la, lb) = if tri[la] < tri[lb] { (la, lb) } else { (lb, la) };
        let bary = self.barycentric(t, x);
        [
            bary[la] * g[lb][0] - bary[lb] * g[la][0],
            bary[la] * g[lb][1] - bary[lb] * g[la][1],
        ]
    }

    fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let tri = self.mesh.triangles[t];
        let (_, g) = self.mesh.tri_geometry(t);
        let mut bary = [0.0; 3];
        for i in 0..3 {
            let p = self.mesh.vertices[tri[i]];
            bary[i] = 1.0 + g[i][0] * (x[0] - p[0]) + g[i][1] * (x[1] - p[1]);
        }
        bary
    }
}

/// Matrix field dofs, layout `dofs[2 * edge + row]`.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub dofs: Vec<f64>,
}

impl MatrixField {
    /// Tangential dofs of the affine field F0 x: line integrals of the
    /// constant rows along the edges.
    pub fn affine(em: &EdgeMesh, f0: Mat2) -> Self {
        let mut dofs = vec![0.0; 2 * em.n_edges()];
        for e in 0..em.n_edges() {
            let ev = em.edge_vector(e);
            dofs[2 * e] = f0.a11 * ev[0] + f0.a12 * ev[1];
            dofs[2 * e + 1] = f0.a21 * ev[0] + f0.a22 * ev[1];
        }
        MatrixField { dofs }
    }

    /// Affine dofs modulated by a (1 +- delta) checkerboard over a
    /// `cells x cells` partition of the bounding box, evaluated at edge
    /// midpoints. Boundary dofs are left unmodulated.
    pub fn checkerboard(em: &EdgeMesh, f0: Mat2, delta: f64, cells: usize) -> Self {
        let mut field = MatrixField::affine(em, f0);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &em.mesh.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        for e in 0..em.n_edges() {
            if em.boundary_edge[e] {
                continue;
            }
            let (a, b) = em.edges[e];
            let (p, q) = (em.mesh.vertices[a], em.mesh.vertices[b]);
            let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let cell = |d: usize| {
                (((m[d] - lo[d]) / (hi[d] - lo[d]) * cells as f64).floor() as i64)
                    .clamp(0, cells as i64 - 1)
            };
            let sign = if (cell(0) + cell(1)) % 2 == 0 { 1.0 } else { -1.0 };
            field.dofs[2 * e] *= 1.0 + delta * sign;
            field.dofs[2 * e + 1] *= 1.0 + delta * sign;
        }
        field
    }

    /// Matrix value at the centroid of triangle `t`.
    pub fn at_centroid(&self, em: &EdgeMesh, t: usize) -> Mat2 {
        let mut p = Mat2::ZERO;
        for (k, &e) in em.tri_edges[t].iter().enumerate() {
            let (w, _) = em.whitney(t, k);
            p = p + Mat2::outer([self.dofs[2 * e], self.dofs[2 * e + 1]], w);
        }
        p
    }

    /// Per-row scalar curl on triangle `t` (constant there).
    pub fn curl(&self, em: &EdgeMesh, t: usize) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (k, &e) in em.tri_edges[t].iter().enumerate() {
            let (_, curl) = em.whitney(t, k);
            c[0] += self.dofs[2 * e] * curl;
            c[1] += self.dofs[2 * e + 1] * curl;
        }
        c
    }
}

pub struct CurlProblem<'a> {
    pub em: &'a EdgeMesh,
    pub f0: Mat2,
    pub energy: EnergyDensity,
    /// Curl penalty length L: the penalty density is (L^2/2) |curl P|^2.
    pub length: f64,
    /// Fixed boundary dof values by edge index (None = free).
    fixed: Vec<Option<[f64; 2]>>,
    free: Vec<Option<usize>>,
    n_free: usize,
}

impl<'a> CurlProblem<'a> {
    pub fn new(em: &'a EdgeMesh, f0: Mat2, energy: EnergyDensity, length: f64) -> Self {
        let affine = MatrixField::affine(em, f0);
        let mut fixed = vec![None; em.n_edges()];
        let mut free = vec![None; em.n_edges()];
        let mut n_free = 0;
        for e in 0..em.n_edges() {
            if em.boundary_edge[e] {
                fixed[e] = Some([affine.dofs[2 * e], affine.dofs[2 * e + 1]]);
            } else {
                free[e] = Some(2 * n_free);
                n_free += 1;
            }
        }
        CurlProblem {
            em,
            f0,
            energy,
            length,
            fixed,
            free,
            n_free: 2 * n_free,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_free
    }

    /// Expands the free-dof vector into a full edge field.
    pub fn field(&self, x: &[f64]) -> MatrixField {
        let mut dofs = vec![0.0; 2 * self.em.n_edges()];
        for e in 0..self.em.n_edges() {
            match (self.fixed[e], self.free[e]) {
                (Some(v), _) => {
                    dofs[2 * e] = v[0];
                    dofs[2 * e + 1] = v[1];
                }
                (None, Some(k)) => {
                    dofs[2 * e] = x[k];
                    dofs[2 * e + 1] = x[k + 1];
                }
                _ => unreachable!(),
            }
        }
        MatrixField { dofs }
    }

    /// Free-dof vector extracted from a full field (boundary values are
    /// discarded; they are pinned to the affine trace).
    pub fn restrict(&self, field: &MatrixField) -> Vec<f64> {
        let mut x = vec![0.0; self.n_free];
        for e in 0..self.em.n_edges() {
            if let Some(k) = self.free[e] {
                x[k] = field.dofs[2 * e];
                x[k + 1] = field.dofs[2 * e + 1];
            }
        }
        x
    }

    fn tri_dofs(&self, x: &[f64], t: usize) -> [f64; 6] {
        let mut d = [0.0; 6];
        for (k, &e) in self.em.tri_edges[t].iter().enumerate() {
            let (d0, d1) = match (self.fixed[e], self.free[e]) {
                (Some(v), _) => (v[0], v[1]),
                (None, Some(i)) => (x[i], x[i + 1]),
                _ => unreachable!(),
            };
            d[2 * k] = d0;
            d[2 * k + 1] = d1;
        }
        d
    }

    fn centroid_det(&self, t: usize, d: &[f64; 6]) -> f64 {
        let mut p = Mat2::ZERO;
        for k in 0..3 {
            let (w, _) = self.em.whitney(t, k);
            p = p + Mat2::outer([d[2 * k], d[2 * k + 1]], w);
        }
        p.det()
    }

    fn tri_energy(&self, t: usize, d: &[f64; 6]) -> f64 {
        let (area, _) = self.em.mesh.tri_geometry(t);
        let mut p = Mat2::ZERO;
        let mut curl = [0.0; 2];
        for k in 0..3 {
            let (w, c) = self.em.whitney(t, k);
            p = p + Mat2::outer([d[2 * k], d[2 * k + 1]], w);
            curl[0] += d[2 * k] * c;
            curl[1] += d[2 * k + 1] * c;
        }
        let wv = self.energy.value(p);
        if wv == f64::INFINITY {
            return f64::INFINITY;
        }
        area * (wv + 0.5 * self.length * self.length * (curl[0] * curl[0] + curl[1] * curl[1]))
    }

    fn tri_gradient(&self, t: usize, d: &[f64; 6]) -> [f64; 6] {
        let (area, _) = self.em.mesh.tri_geometry(t);
        let mut p = Mat2::ZERO;
        let mut curl = [0.0; 2];
        for k in 0..3 {
            let (w, c) = self.em.whitney(t, k);
            p = p + Mat2::outer([d[2 * k], d[2 * k + 1]], w);
            curl[0] += d[2 * k] * c;
            curl[1] += d[2 * k + 1] * c;
        }
        let s = self.energy.stress(p);
        let l2 = self.length * self.length;
        let mut g = [0.0; 6];
        for k in 0..3 {
            let (w, c) = self.em.whitney(t, k);
            g[2 * k] = area * (s.a11 * w[0] + s.a12 * w[1] + l2 * curl[0] * c);
            g[2 * k + 1] = area * (s.a21 * w[0] + s.a22 * w[1] + l2 * curl[1] * c);
        }
        g
    }

    /// I2 evaluated on a full edge field (free and fixed dofs as given).
    pub fn functional(&self, field: &MatrixField) -> f64 {
        let mut total = 0.0;
        for t in 0..self.em.mesh.triangles.len() {
            let mut d = [0.0; 6];
            for (k, &e) in self.em.tri_edges[t].iter().enumerate() {
                d[2 * k] = field.dofs[2 * e];
                d[2 * k + 1] = field.dofs[2 * e + 1];
            }
            let te = self.tri_energy(t, &d);
            if te == f64::INFINITY {
                return f64::INFINITY;
            }
            total += te;
        }
        total
    }
}

impl TrProblem for CurlProblem<'_> {
    fn dim(&self) -> usize {
        self.n_free
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in 0..self.em.mesh.triangles.len() {
            let d = self.tri_dofs(x, t);
            let te = self.tri_energy(t, &d);
            if te == f64::INFINITY {
                return f64::INFINITY;
            }
            total += te;
        }
        total
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..self.em.mesh.triangles.len() {
            let d = self.tri_dofs(x, t);
            let g = self.tri_gradient(t, &d);
            for (k, &e) in self.em.tri_edges[t].iter().enumerate() {
                if let Some(i) = self.free[e] {
                    out[i] += g[2 * k];
                    out[i + 1] += g[2 * k + 1];
                }
            }
        }
    }

    fn hessian(&self, x: &[f64]) -> Csr {
        let mut trips = Vec::with_capacity(36 * self.em.mesh.triangles.len());
        for t in 0..self.em.mesh.triangles.len() {
            let d = self.tri_dofs(x, t);
            let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let h = 1e-6 * scale;
            let mut local = [[0.0; 6]; 6];
            for j in 0..6 {
                // back off the step when a perturbation would cross the
                // det > 0 boundary at the centroid
                let mut hj = h;
                let mut dp = d;
                let mut dm = d;
                loop {
                    dp[j] = d[j] + hj;
                    dm[j] = d[j] - hj;
                    let ok = !matches!(self.energy.domain(), Domain::GlPlusOnly)
                        || (self.centroid_det(t, &dp) > 0.0 && self.centroid_det(t, &dm) > 0.0);
                    if ok || hj <= 1e-14 * h {
                        break;
                    }
                    hj *= 0.5;
                }
                let gp = self.tri_gradient(t, &dp);
                let gm = self.tri_gradient(t, &dm);
                for i in 0..6 {
                    local[i][j] = (gp[i] - gm[i]) / (2.0 * hj);
                }
            }
            let edges = self.em.tri_edges[t];
            for i in 0..6 {
                let Some(ki) = self.free[edges[i / 2]] else { continue };
                for j in 0..6 {
                    let Some(kj) = self.free[edges[j / 2]] else { continue };
                    trips.push((ki + i % 2, kj + j % 2, 0.5 * (local[i][j] + local[j][i])));
                }
            }
        }
        Csr::from_triplets(self.n_free, &trips)
    }
}

#[derive(Debug, Clone)]
pub struct CurlOutcome {
    pub report: TrReport,
    /// Final functional value.
    pub i2: f64,
    /// Functional value of the compatible affine field, for reference.
    pub i2_affine: f64,
    /// Trust-region radius underflow before convergence: treat the iterate
    /// as a candidate only.
    pub stuck: bool,
    pub field: MatrixField,
}

/// Minimizes I2 from the given start field; boundary dofs of the start are
/// overridden by the affine trace.
pub fn minimize_i2(problem: &CurlProblem, start: &MatrixField, params: &TrParams) -> CurlOutcome {
    let mut x = problem.restrict(start);
    let report = trust_region::minimize(problem, &mut x, params);
    let field = problem.field(&x);
    let i2 = problem.functional(&field);
    let i2_affine = problem.functional(&MatrixField::affine(problem.em, problem.f0));
    CurlOutcome {
        stuck: matches!(report.status, TrStatus::Stuck { .. }),
        report,
        i2,
        i2_affine,
        field,
    }
}

/// Projects an edge field onto compatible (gradient) fields: solves one
/// Poisson least-squares problem per row for the nodal potential with
/// Dirichlet data F0 x, by conjugate gradients to relative tolerance 1e-10.
/// Returns the nodal deformation values.
pub fn compatible_projection(em: &EdgeMesh, f0: Mat2, field: &MatrixField) -> Vec<[f64; 2]> {
    let mesh = &em.mesh;
    let boundary = mesh.boundary_vertices();
    let mut free = vec![None; mesh.vertices.len()];
    let mut n_free = 0;
    for (v, &on) in boundary.iter().enumerate() {
        if !on {
            free[v] = Some(n_free);
            n_free += 1;
        }
    }
    let dirichlet = |row: usize, v: usize| {
        let p = mesh.vertices[v];
        if row == 0 {
            f0.a11 * p[0] + f0.a12 * p[1]
        } else {
            f0.a21 * p[0] + f0.a22 * p[1]
        }
    };

    let mut out: Vec<[f64; 2]> = mesh.vertices.iter().map(|_| [0.0, 0.0]).collect();
    for row in 0..2 {
        let mut trips = Vec::new();
        let mut rhs = vec![0.0; n_free];
        for t in 0..mesh.triangles.len() {
            let (area, g) = mesh.tri_geometry(t);
            let tri = mesh.triangles[t];
            // centroid value is exact for the linear Whitney rows
            let mut p = [0.0; 2];
            for (k, &e) in em.tri_edges[t].iter().enumerate() {
                let (w, _) = em.whitney(t, k);
                p[0] += field.dofs[2 * e + row] * w[0];
                p[1] += field.dofs[2 * e + row] * w[1];
            }
            for i in 0..3 {
                let Some(ri) = free[tri[i]] else { continue };
                rhs[ri] += area * (p[0] * g[i][0] + p[1] * g[i][1]);
                for j in 0..3 {
                    let kij = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    match free[tri[j]] {
                        Some(rj) => trips.push((ri, rj, kij)),
                        None => rhs[ri] -= kij * dirichlet(row, tri[j]),
                    }
                }
            }
        }
        let a = Csr::from_triplets(n_free, &trips);
        let mut u = vec![0.0; n_free];
        cg(&a, &rhs, &mut u, 1e-10, 20 * n_free.max(10)).expect("projection CG convergence");
        for v in 0..mesh.vertices.len() {
            out[v][row] = match free[v] {
                Some(k) => u[k],
                None => dirichlet(row, v),
            };
        }
    }
    out
}
