//! Structured competitor families: smooth one-dimensional laminates and
//! radial deformation profiles, with their energy gaps and stationarity
//! residuals.

use crate::mat2::Mat2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("profile needs at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots must be strictly increasing")]
    KnotsNotIncreasing,
    #[error("admissibility violated: {0}")]
    Inadmissible(String),
}

/// Cubic Hermite interpolant on a strictly increasing knot grid; values and
/// derivatives are both stored so the slope constraint can be checked
/// exactly at the knots.
#[derive(Debug, Clone)]
pub struct HermiteProfile {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl HermiteProfile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self, FamilyError> {
        if knots.len() < 2 {
            return Err(FamilyError::TooFewKnots(knots.len()));
        }
        assert_eq!(knots.len(), values.len());
        assert_eq!(knots.len(), derivs.len());
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FamilyError::KnotsNotIncreasing);
        }
        Ok(HermiteProfile { knots, values, derivs })
    }

    fn segment(&self, t: f64) -> usize {
        match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i.clamp(1, self.knots.len() - 1) - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (h, u) = self.local(i, t);
        let (h00, h10, h01, h11) = hermite_basis(u);
        h00 * self.values[i]
            + h10 * h * self.derivs[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.derivs[i + 1]
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (h, u) = self.local(i, t);
        let (d00, d10, d01, d11) = hermite_basis_deriv(u);
        (d00 * self.values[i] + d01 * self.values[i + 1]) / h
            + d10 * self.derivs[i]
            + d11 * self.derivs[i + 1]
    }

    fn local(&self, i: usize, t: f64) -> (f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        (h, (t - self.knots[i]) / h)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }
}

fn hermite_basis(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        2.0 * u3 - 3.0 * u2 + 1.0,
        u3 - 2.0 * u2 + u,
        -2.0 * u3 + 3.0 * u2,
        u3 - u2,
    )
}

fn hermite_basis_deriv(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    (
        6.0 * u2 - 6.0 * u,
        3.0 * u2 - 4.0 * u + 1.0,
        -6.0 * u2 + 6.0 * u,
        3.0 * u2 - 2.0 * u,
    )
}

// ---------------------------------------------------------------------------
// Smooth one-dimensional laminates about diag(a1, a2), a1 >= a2 > 0.

/// Energy density along the family: the deformation gradient is
/// diag(a1 + g(x1), a2) and admissibility requires a1 + g >= a2, i.e. the
/// largest singular value stays a1 + g.
pub fn smooth_laminate_density(a1: f64, a2: f64, g: f64) -> f64 {
    (a1 + g) / a2 + 2.0 * a2.ln()
}

/// Mean energy of the smooth laminate with profile derivative g = f' over
/// one period, by Gauss-Legendre quadrature per knot interval. Returns an
/// error if admissibility a1 + g >= a2 fails at any quadrature point.
pub fn smooth_laminate_energy(
    a1: f64,
    a2: f64,
    g: &HermiteProfile,
) -> Result<f64, FamilyError> {
    let (lo, hi) = g.domain();
    let mut total = 0.0;
    for i in 0..g.knots.len() - 1 {
        let (xa, xb) = (g.knots[i], g.knots[i + 1]);
        total += gauss_legendre_5(xa, xb, |x| {
            smooth_laminate_density(a1, a2, g.eval(x))
        });
    }
    // spot-check admissibility on a fine grid
    for k in 0..=200 {
        let x = lo + (hi - lo) * k as f64 / 200.0;
        if a1 + g.eval(x) < a2 - 1e-12 {
            return Err(FamilyError::Inadmissible(format!(
                "a1 + g({x}) = {} < a2 = {a2}",
                a1 + g.eval(x)
            )));
        }
    }
    Ok(total / (hi - lo))
}

/// Random admissible slope profile g = f' for the smooth laminate family:
/// Hermite values in a safe band around zero, then shifted so the exact
/// mean (Gauss-Legendre per interval, exact for cubics) vanishes. The mean
/// energy of such a profile equals the base energy up to roundoff.
pub fn random_admissible_slope(
    a1: f64,
    a2: f64,
    n_knots: usize,
    rng: &mut impl rand::Rng,
) -> HermiteProfile {
    assert!(a1 > a2 && n_knots >= 2);
    let band = 0.35 * (a1 - a2);
    let knots: Vec<f64> = (0..n_knots).map(|i| i as f64 / (n_knots - 1) as f64).collect();
    let values: Vec<f64> = knots.iter().map(|_| rng.gen_range(-band..band)).collect();
    let derivs: Vec<f64> = knots
        .iter()
        .map(|_| rng.gen_range(-band..band) * (n_knots - 1) as f64 * 0.5)
        .collect();
    let g = HermiteProfile::new(knots.clone(), values.clone(), derivs.clone()).unwrap();
    let mut mean = 0.0;
    for i in 0..n_knots - 1 {
        mean += gauss_legendre_5(knots[i], knots[i + 1], |x| g.eval(x));
    }
    // the Hermite value basis sums to one, so shifting the knot values
    // shifts the function by the same constant
    let shifted: Vec<f64> = values.iter().map(|v| v - mean).collect();
    HermiteProfile::new(knots, shifted, derivs).unwrap()
}

/// Mean energy is affine in g, so every zero-mean admissible profile gives
/// exactly the energy of the affine map diag(a1, a2): the family is energy
/// stationary (in fact constant) in all admissible directions.
pub fn smooth_laminate_base_energy(a1: f64, a2: f64) -> f64 {
    a1 / a2 + 2.0 * a2.ln()
}

/// Two-phase laminate supported on diag(2 a1, a2) and diag(a2, a2) whose
/// barycenter is diag(a1, a2). Returns ((F1, w1), (F2, w2)).
pub fn two_phase_laminate(a1: f64, a2: f64) -> ((Mat2, f64), (Mat2, f64)) {
    assert!(2.0 * a1 > a2);
    let w1 = (a1 - a2) / (2.0 * a1 - a2);
    let w2 = a1 / (2.0 * a1 - a2);
    (
        (Mat2::diag(2.0 * a1, a2), w1),
        (Mat2::diag(a2, a2), w2),
    )
}

// ---------------------------------------------------------------------------
// Radial profiles on the disc of radius R.

/// Orientation of a radial competitor family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    /// v/r >= v' >= 0: angularly expanding.
    Expanding,
    /// v' >= v/r: radially expanding (inverse family).
    Contracting,
}

/// Radial deformation x -> v(|x|) x / |x| on the disc of radius R, with
/// v(R) = R.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub v: HermiteProfile,
    pub radius: f64,
    pub kind: RadialKind,
}

impl RadialProfile {
    pub fn new(v: HermiteProfile, kind: RadialKind) -> Result<Self, FamilyError> {
        let (lo, hi) = v.domain();
        if lo < 0.0 {
            return Err(FamilyError::Inadmissible("negative radius knot".into()));
        }
        if (v.eval(hi) - hi).abs() > 1e-10 {
            return Err(FamilyError::Inadmissible(format!(
                "boundary condition v(R) = R violated: v({hi}) = {}",
                v.eval(hi)
            )));
        }
        let profile = RadialProfile { v, radius: hi, kind };
        profile.check_admissible()?;
        Ok(profile)
    }

    /// Checks v > 0, v' ordering against v/r on a fine grid away from the
    /// origin.
    fn check_admissible(&self) -> Result<(), FamilyError> {
        let r_min = 1e-3 * self.radius;
        for k in 0..=400 {
            let r = r_min + (self.radius - r_min) * k as f64 / 400.0;
            let v = self.v.eval(r);
            let vp = self.v.eval_deriv(r);
            if v <= 0.0 {
                return Err(FamilyError::Inadmissible(format!("v({r}) = {v} <= 0")));
            }
            let ok = match self.kind {
                RadialKind::Expanding => v / r >= vp - 1e-10 && vp >= -1e-10,
                RadialKind::Contracting => vp >= v / r - 1e-10,
            };
            if !ok {
                return Err(FamilyError::Inadmissible(format!(
                    "slope ordering fails at r = {r}: v/r = {}, v' = {vp}",
                    v / r
                )));
            }
        }
        Ok(())
    }

    /// Principal stretches of the radial map at radius r: (v', v/r).
    pub fn stretches(&self, r: f64) -> (f64, f64) {
        (self.v.eval_deriv(r), self.v.eval(r) / r)
    }
}

/// Reduced radial integrand of the distortion energy with logarithmic
/// volume term: F(r, v, v') = r^2 v'/v + 2 r (log v - log r), so that the
/// total energy over the disc is 2*pi * \int F dr.
pub fn radial_integrand_magic(r: f64, v: f64, vp: f64) -> f64 {
    r * r * vp / v + 2.0 * r * (v.ln() - r.ln())
}

fn radial_integrand_magic_partials(r: f64, v: f64, vp: f64) -> (f64, f64) {
    // (dF/dv, dF/dv')
    (-r * r * vp / (v * v) + 2.0 * r / v, r * r / v)
}

/// Reduced Burkholder integrand: F(r, v, v') =
/// -[p/2 v' v^{p-1} / r^{p-2} + (1 - p/2) v^p / r^{p-1}].
pub fn radial_integrand_burkholder(p: f64, r: f64, v: f64, vp: f64) -> f64 {
    -(0.5 * p * vp * v.powf(p - 1.0) / r.powf(p - 2.0)
        + (1.0 - 0.5 * p) * v.powf(p) / r.powf(p - 1.0))
}

fn radial_integrand_burkholder_partials(p: f64, r: f64, v: f64, vp: f64) -> (f64, f64) {
    let dv = -(0.5 * p * (p - 1.0) * vp * v.powf(p - 2.0) / r.powf(p - 2.0)
        + (1.0 - 0.5 * p) * p * v.powf(p - 1.0) / r.powf(p - 1.0));
    let dvp = -0.5 * p * v.powf(p - 1.0) / r.powf(p - 2.0);
    (dv, dvp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialEnergy {
    Magic,
    Burkholder { p: f64 },
}

fn integrand(e: RadialEnergy, r: f64, v: f64, vp: f64) -> f64 {
    match e {
        RadialEnergy::Magic => radial_integrand_magic(r, v, vp),
        RadialEnergy::Burkholder { p } => radial_integrand_burkholder(p, r, v, vp),
    }
}

fn integrand_partials(e: RadialEnergy, r: f64, v: f64, vp: f64) -> (f64, f64) {
    match e {
        RadialEnergy::Magic => radial_integrand_magic_partials(r, v, vp),
        RadialEnergy::Burkholder { p } => radial_integrand_burkholder_partials(p, r, v, vp),
    }
}

/// Euler-Lagrange residual d/dr F_{v'} - F_v of the reduced integrand,
/// sampled on a uniform grid of `n` points on [1e-3 R, R]. The r-derivative
/// of F_{v'} is taken by central differences with step 1e-6 R. Returns the
/// max-norm of the residual.
pub fn radial_el_residual(e: RadialEnergy, profile: &RadialProfile, n: usize) -> f64 {
    let big_r = profile.radius;
    let r_min = 1e-3 * big_r;
    let h = 1e-6 * big_r;
    let fvp = |r: f64| {
        let v = profile.v.eval(r);
        let vp = profile.v.eval_deriv(r);
        integrand_partials(e, r, v, vp).1
    };
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let r = r_min + (big_r - h - r_min) * (k as f64 + 0.5) / n as f64;
        let v = profile.v.eval(r);
        let vp = profile.v.eval_deriv(r);
        let (fv, _) = integrand_partials(e, r, v, vp);
        let dfvp = (fvp(r + h) - fvp(r - h)) / (2.0 * h);
        worst = worst.max((dfvp - fv).abs());
    }
    worst
}

/// Energy gap 2*pi \int_{r_min}^{R} [F(r, v, v') - F(r, r, 1)] dr between
/// the radial competitor and the identity (whose profile is v = r), with
/// r_min = 1e-4 R excluded to avoid the coordinate singularity.
pub fn radial_energy_gap(e: RadialEnergy, profile: &RadialProfile) -> f64 {
    let big_r = profile.radius;
    let r_min = 1e-4 * big_r;
    let segments = 256;
    let mut total = 0.0;
    for k in 0..segments {
        let a = r_min + (big_r - r_min) * k as f64 / segments as f64;
        let b = r_min + (big_r - r_min) * (k + 1) as f64 / segments as f64;
        total += gauss_legendre_5(a, b, |r| {
            let v = profile.v.eval(r);
            let vp = profile.v.eval_deriv(r);
            integrand(e, r, v, vp) - integrand(e, r, r, 1.0)
        });
    }
    2.0 * std::f64::consts::PI * total
}

/// 5-point Gauss-Legendre quadrature on [a, b].
pub fn gauss_legendre_5(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 5] = [
        -0.906179845938663992797626878299,
        -0.538469310105683091036314420700,
        0.0,
        0.538469310105683091036314420700,
        0.906179845938663992797626878299,
    ];
    const W: [f64; 5] = [
        0.236926885056189087514264040720,
        0.478628670499366468041291514836,
        0.568888888888888888888888888889,
        0.478628670499366468041291514836,
        0.236926885056189087514264040720,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * X
        .iter()
        .zip(W)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Uniform-knot Hermite profile for v(r) = r^2 / R on [0, R], the quadratic
/// contracting competitor.
pub fn quadratic_radial_profile(big_r: f64, n_knots: usize) -> RadialProfile {
    let knots: Vec<f64> = (0..n_knots)
        .map(|i| big_r * i as f64 / (n_knots - 1) as f64)
        .collect();
    let values = knots.iter().map(|&r| r * r / big_r).collect();
    let derivs = knots.iter().map(|&r| 2.0 * r / big_r).collect();
    let v = HermiteProfile::new(knots, values, derivs).unwrap();
    RadialProfile::new(v, RadialKind::Contracting).unwrap()
}
