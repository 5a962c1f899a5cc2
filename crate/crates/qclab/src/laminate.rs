//! Combined-laminate sampling, pushforward measures and the random
//! Jensen-gap search driver.

use crate::energy::EnergyDensity;
use crate::mat2::Mat2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LaminateError {
    #[error("sampling budget of {0} exhausted without a valid spec")]
    BudgetExhausted(usize),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Hat profile `h(t) = t on [0,1/2], (1-t) on [1/2,1]`, extended
/// 1-periodically to all of R. Continuous, piecewise affine, slope +-1.
pub fn hat(t: f64) -> f64 {
    let u = t - t.floor();
    if u <= 0.5 {
        u
    } else {
        1.0 - u
    }
}

/// Slope of the hat profile, left-limit convention at the kinks:
/// +1 on (0, 1/2], -1 on (1/2, 1] (so -1 at t = 0 mod 1).
pub fn hat_slope(t: f64) -> f64 {
    let u = t - t.floor();
    if u > 0.0 && u <= 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// One superposition wave `h(<x, eta> + c) xi` of a combined laminate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Wave {
    pub eta: [f64; 2],
    pub xi: [f64; 2],
    pub c: f64,
}

/// A combined laminate `phi(x) = F0 x + sum_i h(<x,eta_i> + c_i) xi_i`
/// on the unit square. All 2^N phase gradients have positive determinant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaminateSpec {
    pub f0: Mat2,
    pub waves: Vec<Wave>,
}

/// Finitely supported probability measure on 2x2 matrices.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(Mat2, f64)>,
}

impl DiscreteMeasure {
    pub fn barycenter(&self) -> Mat2 {
        self.atoms
            .iter()
            .fold(Mat2::ZERO, |acc, (m, w)| acc + m.scale(*w))
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }
}

impl LaminateSpec {
    pub fn n(&self) -> usize {
        self.waves.len()
    }

    /// Gradient value for a given sign pattern (bit i = wave i slope +1).
    pub fn phase_gradient(&self, pattern: usize) -> Mat2 {
        let mut f = self.f0;
        for (i, wave) in self.waves.iter().enumerate() {
            let s = if pattern >> i & 1 == 1 { 1.0 } else { -1.0 };
            f = f + Mat2::outer(wave.xi, wave.eta).scale(s);
        }
        f
    }

    /// All 2^N phase gradients, pattern-indexed.
    pub fn phase_gradients(&self) -> Vec<Mat2> {
        (0..1usize << self.n()).map(|p| self.phase_gradient(p)).collect()
    }

    pub fn all_phases_orientation_preserving(&self) -> bool {
        self.phase_gradients().iter().all(|f| f.det() > 0.0)
    }

    /// Sign pattern of the gradient at a point of the unit square.
    pub fn pattern_at(&self, x: [f64; 2]) -> usize {
        let mut pattern = 0;
        for (i, wave) in self.waves.iter().enumerate() {
            let t = x[0] * wave.eta[0] + x[1] * wave.eta[1] + wave.c;
            if hat_slope(t) > 0.0 {
                pattern |= 1 << i;
            }
        }
        pattern
    }

    /// Serialize as a plain text record: N, per-wave eta xi c, then F0
    /// row-major.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n());
        for w in &self.waves {
            s.push_str(&format!(
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}\n",
                w.eta[0], w.eta[1], w.xi[0], w.xi[1], w.c
            ));
        }
        let e = self.f0.entries();
        s.push_str(&format!("{:.17e} {:.17e} {:.17e} {:.17e}\n", e[0], e[1], e[2], e[3]));
        s
    }
}

/// Sampling distributions: eta uniform on the unit circle, xi Gaussian with
/// scale `sigma * ||F0||`, c uniform on [0, 1). Rejection-samples until all
/// 2^N phase gradients are orientation preserving.
pub fn sample_laminate(
    n: usize,
    f0: Mat2,
    sigma: f64,
    rng: &mut impl Rng,
    budget: usize,
) -> Result<LaminateSpec, LaminateError> {
    assert!(n >= 1);
    let scale = sigma * f0.norm();
    for _ in 0..budget {
        let waves: Vec<Wave> = (0..n)
            .map(|_| {
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let gauss = |r: &mut dyn RngCore| {
                    // Box-Muller
                    let u1: f64 = loop {
                        let v = r.gen::<f64>();
                        if v > 0.0 {
                            break v;
                        }
                    };
                    let u2: f64 = r.gen();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                };
                Wave {
                    eta: [theta.cos(), theta.sin()],
                    xi: [scale * gauss(rng), scale * gauss(rng)],
                    c: rng.gen_range(0.0..1.0),
                }
            })
            .collect();
        let spec = LaminateSpec { f0, waves };
        if spec.all_phases_orientation_preserving() {
            return Ok(spec);
        }
    }
    Err(LaminateError::BudgetExhausted(budget))
}

/// Pushforward measure of the Lebesgue measure on the unit square under the
/// gradient field: atoms are the phase gradients, weights the areas of the
/// sign-pattern regions, estimated on a uniform `resolution x resolution`
/// grid of cell midpoints.
pub fn pushforward(spec: &LaminateSpec, resolution: usize) -> DiscreteMeasure {
    let grads = spec.phase_gradients();
    let mut counts = vec![0u64; grads.len()];
    let inv = 1.0 / resolution as f64;
    for i in 0..resolution {
        let x1 = (i as f64 + 0.5) * inv;
        for j in 0..resolution {
            let x2 = (j as f64 + 0.5) * inv;
            counts[spec.pattern_at([x1, x2])] += 1;
        }
    }
    let total = (resolution * resolution) as f64;
    let atoms = grads
        .into_iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(m, c)| (m, c as f64 / total))
        .collect();
    DiscreteMeasure { atoms }
}

/// Young-measure limit of the combined laminate under fast oscillation:
/// the slope signs of distinct waves decorrelate, every sign pattern gets
/// weight exactly 2^-N and the barycenter is exactly `F0`. This product
/// measure is a laminate (split along `xi_1 eta_1^T`, then recursively
/// along the remaining waves), so its Jensen gap is nonnegative for every
/// rank-one convex energy; the finite-window pushforward above carries
/// window-boundary bias of order `||xi||` and does not share either
/// property.
pub fn limit_measure(spec: &LaminateSpec) -> DiscreteMeasure {
    let weight = 1.0 / (1usize << spec.n()) as f64;
    let atoms = spec
        .phase_gradients()
        .into_iter()
        .map(|m| (m, weight))
        .collect();
    DiscreteMeasure { atoms }
}

/// Jensen gap `∫ W dmu − W(barycenter mu)`. A strictly negative value is a
/// laminate-violating witness against quasiconvexity at the barycenter.
pub fn jensen_gap(w: &EnergyDensity, mu: &DiscreteMeasure) -> f64 {
    let mut integral = 0.0;
    for &(m, weight) in &mu.atoms {
        let v = w.value(m);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        integral += weight * v;
    }
    integral - w.value(mu.barycenter())
}

/// Search objective: the limit-measure gap, evaluated against `W(F0)`
/// directly so the barycenter enters without roundoff.
fn trial_gap(w: &EnergyDensity, spec: &LaminateSpec) -> f64 {
    let weight = 1.0 / (1usize << spec.n()) as f64;
    let mut integral = 0.0;
    for f in spec.phase_gradients() {
        let v = w.value(f);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        integral += weight * v;
    }
    integral - w.value(spec.f0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub energy: String,
    pub a_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Grid resolution for the pushforward diagnostic attached to a
    /// reported witness; the search itself scores the limit measure.
    pub resolution: usize,
    pub sigma: f64,
    pub checkpoint: Option<PathBuf>,
}

impl SearchConfig {
    pub fn new(energy: &EnergyDensity, trials: u64, seed: u64) -> Self {
        SearchConfig {
            energy: energy.name(),
            a_list: (1..=10).map(|a| a as f64).collect(),
            n_list: vec![4, 5, 6, 7],
            trials,
            seed,
            resolution: 256,
            sigma: 0.5,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchReport {
    pub min_gap: f64,
    pub best: Option<BestTrial>,
    pub trials_run: u64,
    pub sampling_failures: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestTrial {
    pub trial: u64,
    pub gap: f64,
    pub spec: LaminateSpec,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    next_trial: u64,
    report: SearchReport,
}

/// Random search over combined laminates. Deterministic given the seed:
/// every trial derives its own RNG stream from the master seed, so the
/// result is independent of the worker count. Resumable via checkpoint.
pub fn search_driver(
    w: &EnergyDensity,
    config: &SearchConfig,
) -> Result<SearchReport, LaminateError> {
    let mut start_trial = 0u64;
    let mut report = SearchReport {
        min_gap: f64::INFINITY,
        best: None,
        trials_run: 0,
        sampling_failures: 0,
    };
    if let Some(path) = &config.checkpoint {
        if path.exists() {
            let cp: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            start_trial = cp.next_trial;
            report = cp.report;
        }
    }

    let chunk = 4096u64;
    let mut t = start_trial;
    while t < config.trials {
        let hi = (t + chunk).min(config.trials);
        let results: Vec<(u64, Option<(f64, LaminateSpec)>)> = (t..hi)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(trial.wrapping_add(1));
                let a = config.a_list[rng.gen_range(0..config.a_list.len())];
                let n = config.n_list[rng.gen_range(0..config.n_list.len())];
                let f0 = Mat2::diag(a.sqrt(), 1.0 / a.sqrt());
                match sample_laminate(n, f0, config.sigma, &mut rng, 200) {
                    Ok(spec) => {
                        let gap = trial_gap(w, &spec);
                        (trial, Some((gap, spec)))
                    }
                    Err(_) => (trial, None),
                }
            })
            .collect();
        for (trial, res) in results {
            report.trials_run += 1;
            match res {
                Some((gap, spec)) => {
                    if gap < report.min_gap {
                        report.min_gap = gap;
                        report.best = Some(BestTrial { trial, gap, spec });
                    }
                }
                None => report.sampling_failures += 1,
            }
        }
        t = hi;
        if let Some(path) = &config.checkpoint {
            write_checkpoint(path, t, &report)?;
        }
    }

    Ok(report)
}

fn write_checkpoint(path: &Path, next_trial: u64, report: &SearchReport) -> Result<(), LaminateError> {
    let cp = Checkpoint {
        next_trial,
        report: report.clone(),
    };
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(serde_json::to_string_pretty(&cp)?.as_bytes())?;
    f.sync_all()?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
