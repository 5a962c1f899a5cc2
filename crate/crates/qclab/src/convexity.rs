//! Rank-one convexity scanning via the Legendre-Hadamard form, invariance
//! checks for log-split energies, and the energy-gap evaluator.

use crate::energy::{Domain, EnergyDensity};
use crate::mat2::Mat2;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvexityError {
    #[error("finite-difference step underflowed at F = {0:?}")]
    StepUnderflow(Mat2),
    #[error("H is not rank one (|det H| = {0:.3e})")]
    NotRankOne(f64),
}

/// Base points `diag(sqrt(a), 1/sqrt(a))` on the det = 1 slice combined with
/// a direction grid of unit vectors at angular resolution `dtheta` (radians).
///
/// The det = 1 reduction is justified by scaling invariance of the
/// ellipticity domain for log-split energies; rotations of the base point
/// are redundant by isotropy.
#[derive(Debug, Clone)]
pub struct ScanGrid {
    pub a_values: Vec<f64>,
    pub dtheta: f64,
}

impl ScanGrid {
    /// `n_a` base points spread over `a in [1, a_max]`, directions every
    /// `dtheta_deg` degrees.
    pub fn new(a_max: f64, n_a: usize, dtheta_deg: f64) -> Self {
        assert!(a_max >= 1.0 && n_a >= 1);
        let a_values = (0..n_a)
            .map(|i| {
                if n_a == 1 {
                    a_max
                } else {
                    1.0 + (a_max - 1.0) * i as f64 / (n_a - 1) as f64
                }
            })
            .collect();
        ScanGrid {
            a_values,
            dtheta: dtheta_deg.to_radians(),
        }
    }

    pub fn base_points(&self) -> Vec<Mat2> {
        self.a_values
            .iter()
            .map(|&a| Mat2::diag(a.sqrt(), 1.0 / a.sqrt()))
            .collect()
    }

    /// Direction angles in `[0, pi)`; the LH form is even in each of xi and
    /// eta separately, so half circles suffice.
    pub fn angles(&self) -> Vec<f64> {
        let n = (std::f64::consts::PI / self.dtheta).round() as usize;
        (0..n).map(|i| i as f64 * self.dtheta).collect()
    }
}

/// One scan record: the LH value at (F, xi, eta) with the angles kept for
/// reporting.
#[derive(Debug, Clone, Copy)]
pub struct ScanSample {
    pub a: f64,
    pub theta_xi: f64,
    pub theta_eta: f64,
    pub value: f64,
}

/// Scan result: grid minimum with witness, plus counts.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub min: ScanSample,
    pub negative_below_tol: usize,
    pub evaluated: usize,
    pub failures: usize,
    pub tol: f64,
}

fn unit(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c, s]
}

/// Legendre-Hadamard form `D²W(F).(xi⊗eta, xi⊗eta)` by second-order central
/// differences of `t -> W(F + t xi⊗eta)`.
///
/// The step starts at `1e-4 max(1, ||F||)` and shrinks while stencil points
/// leave GL+(2); a Richardson pass at `h/2` controls the truncation error.
pub fn lh_form(
    w: &EnergyDensity,
    f: Mat2,
    xi: [f64; 2],
    eta: [f64; 2],
) -> Result<f64, ConvexityError> {
    let dir = Mat2::outer(xi, eta);
    let mut h = 1e-4 * f.norm().max(1.0);
    let needs_glp = w.domain() == Domain::GlPlusOnly;
    for _ in 0..60 {
        let feasible = !needs_glp
            || ((f + dir.scale(h)).det() > 0.0 && (f + dir.scale(-h)).det() > 0.0);
        if feasible {
            let w0 = w.value(f);
            let second = |step: f64| {
                (w.value(f + dir.scale(step)) - 2.0 * w0 + w.value(f + dir.scale(-step)))
                    / (step * step)
            };
            let coarse = second(h);
            let fine = second(0.5 * h);
            // Richardson on the O(h^2) truncation term.
            return Ok((4.0 * fine - coarse) / 3.0);
        }
        h *= 0.5;
        if h < 1e-12 {
            return Err(ConvexityError::StepUnderflow(f));
        }
    }
    Err(ConvexityError::StepUnderflow(f))
}

/// Exhaustive LH evaluation over the grid; deterministic, parallel over
/// base points, reduced by min-with-witness.
pub fn rank_one_scan(w: &EnergyDensity, grid: &ScanGrid, tol: f64) -> ScanReport {
    let angles = grid.angles();
    let per_base: Vec<ScanReport> = grid
        .a_values
        .par_iter()
        .map(|&a| {
            let f = Mat2::diag(a.sqrt(), 1.0 / a.sqrt());
            let mut min = ScanSample {
                a,
                theta_xi: 0.0,
                theta_eta: 0.0,
                value: f64::INFINITY,
            };
            let mut negative = 0usize;
            let mut failures = 0usize;
            let mut evaluated = 0usize;
            for &txi in &angles {
                let xi = unit(txi);
                for &teta in &angles {
                    match lh_form(w, f, xi, unit(teta)) {
                        Ok(v) => {
                            evaluated += 1;
                            if v < -tol {
                                negative += 1;
                            }
                            if v < min.value {
                                min = ScanSample {
                                    a,
                                    theta_xi: txi,
                                    theta_eta: teta,
                                    value: v,
                                };
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
            }
            ScanReport {
                min,
                negative_below_tol: negative,
                evaluated,
                failures,
                tol,
            }
        })
        .collect();
    per_base
        .into_iter()
        .reduce(|a, b| ScanReport {
            min: if b.min.value < a.min.value { b.min } else { a.min },
            negative_below_tol: a.negative_below_tol + b.negative_below_tol,
            evaluated: a.evaluated + b.evaluated,
            failures: a.failures + b.failures,
            tol,
        })
        .expect("grid nonempty")
}

/// Full per-sample scan at a single base point, for CSV dumps.
pub fn scan_samples(w: &EnergyDensity, a: f64, dtheta_deg: f64) -> Vec<ScanSample> {
    let grid = ScanGrid::new(1.0, 1, dtheta_deg);
    let angles = grid.angles();
    let f = Mat2::diag(a.sqrt(), 1.0 / a.sqrt());
    let mut out = Vec::with_capacity(angles.len() * angles.len());
    for &txi in &angles {
        for &teta in &angles {
            if let Ok(v) = lh_form(w, f, unit(txi), unit(teta)) {
                out.push(ScanSample {
                    a,
                    theta_xi: txi,
                    theta_eta: teta,
                    value: v,
                });
            }
        }
    }
    out
}

/// Both sides of the ellipticity scaling identity
/// `D²W(alpha F).(H,H) = alpha^{-2} D²W(F).(H,H)` for log-split energies
/// and rank-one H. Returns `(lhs, scaled rhs)`.
pub fn check_ellipticity_scaling(
    w: &EnergyDensity,
    f: Mat2,
    h: Mat2,
    alpha: f64,
) -> Result<(f64, f64), ConvexityError> {
    if h.det().abs() > 1e-12 * h.norm_sq() {
        return Err(ConvexityError::NotRankOne(h.det().abs()));
    }
    let scale = h.norm();
    let xi_eta = second_along(w, f, h)?;
    let lhs = second_along(w, f.scale(alpha), h)?;
    let _ = scale;
    Ok((lhs, xi_eta / (alpha * alpha)))
}

fn second_along(w: &EnergyDensity, f: Mat2, dir: Mat2) -> Result<f64, ConvexityError> {
    let mut h = 1e-4 * f.norm().max(1.0) / dir.norm().max(1e-300);
    let needs_glp = w.domain() == Domain::GlPlusOnly;
    for _ in 0..60 {
        let ok = !needs_glp
            || ((f + dir.scale(h)).det() > 0.0 && (f + dir.scale(-h)).det() > 0.0);
        if ok {
            let w0 = w.value(f);
            let second = |s: f64| {
                (w.value(f + dir.scale(s)) - 2.0 * w0 + w.value(f + dir.scale(-s))) / (s * s)
            };
            return Ok((4.0 * second(0.5 * h) - second(h)) / 3.0);
        }
        h *= 0.5;
        if h < 1e-12 {
            return Err(ConvexityError::StepUnderflow(f));
        }
    }
    Err(ConvexityError::StepUnderflow(f))
}

/// Energy gap `∫ W(F0 + ∇θ) dx − |Ω| W(F0)` for a field with piecewise
/// constant gradient, given as `(area, ∇θ)` cells. Exact quadrature.
///
/// Returns `+inf` as soon as a cell leaves GL+(2) for a GL+-only energy.
pub fn energy_gap_cells(w: &EnergyDensity, f0: Mat2, cells: &[(f64, Mat2)]) -> f64 {
    let mut total_area = 0.0;
    let mut energy = 0.0;
    for &(area, grad) in cells {
        let v = w.value(f0 + grad);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        energy += area * v;
        total_area += area;
    }
    energy - total_area * w.value(f0)
}
