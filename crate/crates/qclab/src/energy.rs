//! Closed-form planar energy densities, distortion measures and stresses.
//!
//! Energies restricted to GL+(2) report `f64::INFINITY` outside their
//! domain; the sentinel propagates through all arithmetic so optimizers can
//! distinguish infeasible states from expensive ones.

use crate::mat2::Mat2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("unknown energy name `{0}`")]
    UnknownName(String),
    #[error("invalid parameter for `{name}`: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("malformed energy spec `{0}` (expected e.g. `w_c:{{c:1.1}}`)")]
    MalformedSpec(String),
}

/// Domain of definition of an energy density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Defined on GL+(2) only; +inf outside.
    GlPlusOnly,
    /// Finite on all of R^{2x2}.
    AllMatrices,
}

/// A planar isotropic energy density with value, stress and metadata.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyDensity {
    /// `lambda_max/lambda_min + 2 log lambda_min` on GL+(2).
    WMagicPlus,
    /// Weakened energy `K - log K + c log det F`, `c > 0`.
    Wc { c: f64 },
    /// Dacorogna-Marcellini family `||F||^{2 alpha} (||F||^2 - gamma det F)`.
    DacorognaMarcellini { gamma: f64, alpha: f64 },
    /// Ball family `||F||^{4 alpha} - 2^{2 alpha - 1} - gamma (det F)^{2 alpha}`.
    Ball { alpha: f64, gamma: f64 },
    /// Burkholder function `-[p/2 det F + (1 - p/2) |F|_op^2] |F|_op^{p-2}`.
    Burkholder { p: f64 },
    /// Convex quadratic `||F||^2`, used as a sanity reference.
    SquaredNorm,
}

impl EnergyDensity {
    /// Parse a CLI-addressable energy spec such as `w_magic_plus`,
    /// `w_c:{c:1.1}` or `dm:{gamma:2.5}`.
    pub fn parse(spec: &str) -> Result<Self, EnergyError> {
        let (name, params) = match spec.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (spec.trim(), None),
        };
        let get = |key: &str| -> Result<Option<f64>, EnergyError> {
            let Some(p) = params else { return Ok(None) };
            let body = p
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| EnergyError::MalformedSpec(spec.to_string()))?;
            for item in body.split(',') {
                let (k, v) = item
                    .split_once(':')
                    .ok_or_else(|| EnergyError::MalformedSpec(spec.to_string()))?;
                if k.trim() == key {
                    let val: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| EnergyError::MalformedSpec(spec.to_string()))?;
                    return Ok(Some(val));
                }
            }
            Ok(None)
        };
        match name {
            "w_magic_plus" => Ok(EnergyDensity::WMagicPlus),
            "w_c" => {
                let c = get("c")?.unwrap_or(1.1);
                EnergyDensity::weakened(c)
            }
            "dm" | "dacorogna_marcellini" => {
                let gamma = get("gamma")?.unwrap_or(2.0);
                let alpha = get("alpha")?.unwrap_or(1.0);
                EnergyDensity::dacorogna_marcellini(gamma, alpha)
            }
            "ball" => {
                let alpha = get("alpha")?.unwrap_or(1.0);
                let gamma = get("gamma")?.unwrap_or(1.0);
                EnergyDensity::ball(alpha, gamma)
            }
            "burkholder" => {
                let p = get("p")?.unwrap_or(2.0);
                EnergyDensity::burkholder(p)
            }
            "squared_norm" => Ok(EnergyDensity::SquaredNorm),
            other => Err(EnergyError::UnknownName(other.to_string())),
        }
    }

    pub fn weakened(c: f64) -> Result<Self, EnergyError> {
        if c > 0.0 && c.is_finite() {
            Ok(EnergyDensity::Wc { c })
        } else {
            Err(EnergyError::InvalidParameter {
                name: "w_c".into(),
                message: format!("c must be positive and finite, got {c}"),
            })
        }
    }

    pub fn dacorogna_marcellini(gamma: f64, alpha: f64) -> Result<Self, EnergyError> {
        if !gamma.is_finite() {
            return Err(EnergyError::InvalidParameter {
                name: "dm".into(),
                message: "gamma must be finite".into(),
            });
        }
        if !(alpha >= 1.0) {
            return Err(EnergyError::InvalidParameter {
                name: "dm".into(),
                message: format!("alpha must be >= 1, got {alpha}"),
            });
        }
        Ok(EnergyDensity::DacorognaMarcellini { gamma, alpha })
    }

    pub fn ball(alpha: f64, gamma: f64) -> Result<Self, EnergyError> {
        if !(alpha >= 0.25) || !(gamma >= 0.0) {
            return Err(EnergyError::InvalidParameter {
                name: "ball".into(),
                message: format!("requires alpha >= 1/4 and gamma >= 0, got ({alpha}, {gamma})"),
            });
        }
        Ok(EnergyDensity::Ball { alpha, gamma })
    }

    pub fn burkholder(p: f64) -> Result<Self, EnergyError> {
        if p >= 2.0 {
            Ok(EnergyDensity::Burkholder { p })
        } else {
            Err(EnergyError::InvalidParameter {
                name: "burkholder".into(),
                message: format!("p must be >= 2, got {p}"),
            })
        }
    }

    pub fn name(&self) -> String {
        match self {
            EnergyDensity::WMagicPlus => "w_magic_plus".into(),
            EnergyDensity::Wc { c } => format!("w_c:{{c:{c}}}"),
            EnergyDensity::DacorognaMarcellini { gamma, alpha } => {
                format!("dm:{{gamma:{gamma},alpha:{alpha}}}")
            }
            EnergyDensity::Ball { alpha, gamma } => format!("ball:{{alpha:{alpha},gamma:{gamma}}}"),
            EnergyDensity::Burkholder { p } => format!("burkholder:{{p:{p}}}"),
            EnergyDensity::SquaredNorm => "squared_norm".into(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            EnergyDensity::WMagicPlus | EnergyDensity::Wc { .. } => Domain::GlPlusOnly,
            EnergyDensity::Burkholder { .. } => Domain::AllMatrices,
            EnergyDensity::DacorognaMarcellini { .. }
            | EnergyDensity::Ball { .. }
            | EnergyDensity::SquaredNorm => Domain::AllMatrices,
        }
    }

    /// True for energies of the class with volumetric part `c log det F`,
    /// whose ellipticity and quasiconvexity domains are scaling invariant.
    pub fn is_log_split(&self) -> bool {
        matches!(self, EnergyDensity::WMagicPlus | EnergyDensity::Wc { .. })
    }

    pub fn value(&self, f: Mat2) -> f64 {
        if !f.is_finite() {
            return f64::NAN;
        }
        match self {
            EnergyDensity::WMagicPlus => w_magic_plus(f),
            EnergyDensity::Wc { c } => w_c(f, *c),
            EnergyDensity::DacorognaMarcellini { gamma, alpha } => {
                let n2 = f.norm_sq();
                n2.powf(*alpha - 1.0) * n2 * (n2 - gamma * f.det())
            }
            EnergyDensity::Ball { alpha, gamma } => {
                let n2 = f.norm_sq();
                let d = f.det();
                // (det F)^{2 alpha} = (det F)^2 raised to alpha, well defined
                // for all matrices; equals (signed lambda product)^{2 alpha}.
                n2.powf(2.0 * alpha) - (2.0f64).powf(2.0 * alpha - 1.0) - gamma * (d * d).powf(*alpha)
            }
            EnergyDensity::Burkholder { p } => {
                let op = f.op_norm();
                -((p / 2.0) * f.det() + (1.0 - p / 2.0) * op * op) * op.powf(p - 2.0)
            }
            EnergyDensity::SquaredNorm => f.norm_sq(),
        }
    }

    /// First Piola-Kirchhoff stress `S1 = DW(F)`; closed form where
    /// implemented, central finite differences otherwise.
    pub fn stress(&self, f: Mat2) -> Mat2 {
        match self {
            EnergyDensity::WMagicPlus => s1_magic_plus(f),
            EnergyDensity::Wc { c } => {
                // W_c = W_magic^+ + (c - 1) log det F
                s1_magic_plus(f) + f.inv_transpose().scale(c - 1.0)
            }
            EnergyDensity::DacorognaMarcellini { gamma, alpha } => {
                let n2 = f.norm_sq();
                let d = f.det();
                let pow = n2.powf(*alpha - 1.0);
                f.scale(2.0 * alpha * pow * (n2 - gamma * d) + 2.0 * pow * n2)
                    + f.cof().scale(-gamma * pow * n2)
            }
            EnergyDensity::SquaredNorm => f.scale(2.0),
            _ => self.stress_fd(f),
        }
    }

    /// Numeric gradient fallback, central differences entrywise.
    pub fn stress_fd(&self, f: Mat2) -> Mat2 {
        let h = 1e-6 * f.norm().max(1.0);
        let mut e = f.entries();
        let mut g = [0.0; 4];
        for i in 0..4 {
            let orig = e[i];
            e[i] = orig + h;
            let wp = self.value(Mat2::from_entries(e));
            e[i] = orig - h;
            let wm = self.value(Mat2::from_entries(e));
            e[i] = orig;
            g[i] = (wp - wm) / (2.0 * h);
        }
        Mat2::from_entries(g)
    }
}

/// `W_magic^+(F) = lambda_max/lambda_min + 2 log lambda_min` on GL+(2).
pub fn w_magic_plus(f: Mat2) -> f64 {
    if f.det() <= 0.0 {
        return f64::INFINITY;
    }
    let sv = f.singular_values();
    sv.lambda_max / sv.lambda_min + 2.0 * sv.lambda_min.ln()
}

/// Equivalent distortion form `K(F) + sqrt(K²-1) - arcosh K + log det F`
/// (capital-K here is the nonlinear distortion). Kept as an independent
/// evaluation route for cross-checking.
pub fn w_magic_plus_distortion_form(f: Mat2) -> f64 {
    let d = f.det();
    if d <= 0.0 {
        return f64::INFINITY;
    }
    let k = distortion_nonlinear(f);
    let s = (k * k - 1.0).max(0.0).sqrt();
    k + s - (k + s).ln() + d.ln()
}

/// Weakened energy `W_c(F) = K - log K + c log det F` with `K` the
/// dilatation; not rank-one convex for `c > 1`.
pub fn w_c(f: Mat2, c: f64) -> f64 {
    let d = f.det();
    if d <= 0.0 {
        return f64::INFINITY;
    }
    let sv = f.singular_values();
    let k = sv.lambda_max / sv.lambda_min;
    k - k.ln() + c * d.ln()
}

/// Nonlinear (outer) distortion `K(F) = ||F||^2 / (2 det F) >= 1`.
pub fn distortion_nonlinear(f: Mat2) -> f64 {
    let d = f.det();
    assert!(d > 0.0, "distortion requires det F > 0, got {d}");
    0.5 * f.norm_sq() / d
}

/// Linear distortion (large dilatation) `K(F) = lambda_max / lambda_min >= 1`.
pub fn distortion_linear(f: Mat2) -> f64 {
    assert!(f.det() > 0.0, "dilatation requires det F > 0");
    let sv = f.singular_values();
    sv.lambda_max / sv.lambda_min
}

/// Closed-form first Piola-Kirchhoff stress of `W_magic^+`:
/// `S1 = 2K/((K+1) det F) F - K(K-1)/(K+1) F^{-T}` with `K` the dilatation.
/// At the conformal cone `K = 1` the second factor vanishes and the closed
/// form remains finite; it is the one-sided derivative there.
pub fn s1_magic_plus(f: Mat2) -> Mat2 {
    let d = f.det();
    assert!(d > 0.0, "stress requires det F > 0");
    let k = distortion_linear(f);
    f.scale(2.0 * k / ((k + 1.0) * d)) + f.inv_transpose().scale(-k * (k - 1.0) / (k + 1.0))
}

/// Isochoric profile `Psi(t) = t + sqrt(t²-1) - arcosh t` of `W_magic^+`
/// in terms of the nonlinear distortion, with derivatives.
pub fn psi(t: f64) -> f64 {
    let s = (t * t - 1.0).max(0.0).sqrt();
    t + s - (t + s).ln()
}

pub fn psi_prime(t: f64) -> f64 {
    1.0 + ((t - 1.0) / (t + 1.0)).max(0.0).sqrt()
}

pub fn psi_second(t: f64) -> f64 {
    ((t + 1.0) / (t - 1.0)).sqrt() / ((t + 1.0) * (t + 1.0))
}
