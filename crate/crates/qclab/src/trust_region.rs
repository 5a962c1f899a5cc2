//! Trust-region Newton minimization with a max-norm (box) trust region and
//! a Steihaug-style truncated conjugate-gradient subproblem solver. The
//! objective may return +inf outside its feasible set; infeasible trial
//! steps are rejected by the ratio test and the radius shrinks.

use crate::sparse::{dot, Csr};

pub trait TrProblem {
    fn dim(&self) -> usize;
    /// Objective value; +inf signals an infeasible point.
    fn energy(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    /// Symmetric Hessian approximation at x.
    fn hessian(&self, x: &[f64]) -> Csr;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrStatus {
    /// Max-norm of the gradient dropped below the tolerance.
    Converged,
    /// Trust radius underflowed without progress: the iterate is a
    /// candidate local minimizer or a degenerate point, reported as-is.
    Stuck { radius: f64 },
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct TrReport {
    pub status: TrStatus,
    pub energy: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrParams {
    pub gtol: f64,
    pub max_iter: usize,
    pub radius0: f64,
    pub radius_min: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
}

impl Default for TrParams {
    fn default() -> Self {
        TrParams {
            gtol: 1e-8,
            max_iter: 500,
            radius0: 0.1,
            radius_min: 1e-13,
            cg_tol: 1e-5,
            cg_max: 500,
        }
    }
}

/// Largest tau >= 0 with |s + tau p|_inf <= radius, for s inside the box.
fn to_boundary(s: &[f64], p: &[f64], radius: f64) -> f64 {
    let mut tau = f64::INFINITY;
    for i in 0..s.len() {
        if p[i] > 0.0 {
            tau = tau.min((radius - s[i]) / p[i]);
        } else if p[i] < 0.0 {
            tau = tau.min((-radius - s[i]) / p[i]);
        }
    }
    tau.max(0.0)
}

/// Truncated CG on the quadratic model, constrained to the max-norm box of
/// the given radius. Returns (step, predicted decrease, hit_boundary).
fn steihaug_box(h: &Csr, g: &[f64], radius: f64, tol: f64, max_iter: usize) -> (Vec<f64>, f64, bool) {
    let n = g.len();
    let mut s = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut p = r.clone();
    let mut hp = vec![0.0; n];
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return (s, 0.0, false);
    }
    let mut rs = r0 * r0;
    let model = |s: &[f64], h: &Csr, g: &[f64]| {
        let mut hs = vec![0.0; s.len()];
        h.mul_vec(s, &mut hs);
        dot(g, s) + 0.5 * dot(s, &hs)
    };
    for _ in 0..max_iter {
        h.mul_vec(&p, &mut hp);
        let curv = dot(&p, &hp);
        if curv <= 0.0 {
            // negative curvature: walk to the box boundary
            let tau = to_boundary(&s, &p, radius);
            for i in 0..n {
                s[i] += tau * p[i];
            }
            let dec = -model(&s, h, g);
            return (s, dec, true);
        }
        let alpha = rs / curv;
        let inside = s
            .iter()
            .zip(&p)
            .all(|(si, pi)| (si + alpha * pi).abs() <= radius);
        if !inside {
            let tau = to_boundary(&s, &p, radius);
            for i in 0..n {
                s[i] += tau * p[i];
            }
            let dec = -model(&s, h, g);
            return (s, dec, true);
        }
        for i in 0..n {
            s[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= tol * r0 {
            break;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let dec = -model(&s, h, g);
    (s, dec, false)
}

/// Minimizes the problem from `x`, mutating it in place. The energy
/// sequence is monotone: only strictly decreasing feasible steps are
/// accepted.
pub fn minimize(problem: &dyn TrProblem, x: &mut [f64], params: &TrParams) -> TrReport {
    let n = problem.dim();
    assert_eq!(x.len(), n);
    let mut radius = params.radius0;
    let mut energy = problem.energy(x);
    assert!(
        energy.is_finite(),
        "trust-region start must be feasible, got {energy}"
    );
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    for iter in 0..params.max_iter {
        problem.gradient(x, &mut g);
        let g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g_inf <= params.gtol {
            return TrReport {
                status: TrStatus::Converged,
                energy,
                grad_inf_norm: g_inf,
                iterations: iter,
            };
        }
        let h = problem.hessian(x);
        loop {
            let (step, predicted, hit_boundary) =
                steihaug_box(&h, &g, radius, params.cg_tol, params.cg_max);
            for i in 0..n {
                trial[i] = x[i] + step[i];
            }
            let trial_energy = problem.energy(&trial);
            let actual = energy - trial_energy;
            let rho = if trial_energy.is_finite() && predicted > 0.0 {
                actual / predicted
            } else {
                -1.0
            };
            if rho > 1e-4 && actual > 0.0 {
                x.copy_from_slice(&trial);
                energy = trial_energy;
                if rho > 0.75 && hit_boundary {
                    radius *= 2.0;
                }
                break;
            }
            radius *= 0.25;
            if radius < params.radius_min {
                return TrReport {
                    status: TrStatus::Stuck { radius },
                    energy,
                    grad_inf_norm: g_inf,
                    iterations: iter,
                };
            }
        }
    }
    problem.gradient(x, &mut g);
    TrReport {
        status: TrStatus::MaxIter,
        energy,
        grad_inf_norm: g.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        iterations: params.max_iter,
    }
}
