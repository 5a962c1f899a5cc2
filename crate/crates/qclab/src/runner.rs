//! Experiment runner: executes a validated flat configuration, writes
//! plot-ready CSV artifacts plus a machine-readable summary record, and
//! reports a human-readable one-line result.

use crate::config::{ConfigError, ExperimentConfig};
use crate::convexity::{rank_one_scan, scan_samples, ScanGrid};
use crate::curl::{compatible_projection, minimize_i2, CurlProblem, EdgeMesh, MatrixField};
use crate::energy::{EnergyDensity, EnergyError};
use crate::families::{
    quadratic_radial_profile, radial_el_residual, radial_energy_gap, random_admissible_slope,
    smooth_laminate_base_energy, smooth_laminate_energy, two_phase_laminate, RadialEnergy,
};
use crate::fem::{FemProblem, MaterialMap};
use crate::laminate::{jensen_gap, pushforward, search_driver, SearchConfig};
use crate::mat2::Mat2;
use crate::mesh::TriMesh;
use crate::pinn::{adam_train, laminate_structure, total_energy, AdamSchedule, QuadratureGrid};
use crate::trust_region::TrParams;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Module(String),
}

/// Fixed 17-significant-digit formatting used in every CSV artifact.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn out_path(config: &ExperimentConfig, name: &str) -> PathBuf {
    let dir = config.get("out_dir").unwrap_or(".");
    std::fs::create_dir_all(dir).ok();
    Path::new(dir).join(name)
}

fn seed_of(config: &ExperimentConfig) -> Result<u64, ConfigError> {
    Ok(config.get_u64("seed")?.unwrap_or(0))
}

fn install_workers(config: &ExperimentConfig) -> Result<(), ConfigError> {
    if let Some(workers) = config.get_usize("workers")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }
    Ok(())
}

fn write_summary(
    config: &ExperimentConfig,
    fields: &[(&str, String)],
) -> Result<String, RunError> {
    let mut json = String::from("{");
    let mut human = String::new();
    for (i, (k, v)) in fields.iter().enumerate() {
        if i > 0 {
            json.push_str(", ");
            human.push_str("  ");
        }
        let quoted = v.parse::<f64>().is_err() && v != "true" && v != "false";
        if quoted {
            write!(json, "\"{k}\": \"{v}\"").unwrap();
        } else {
            write!(json, "\"{k}\": {v}").unwrap();
        }
        write!(human, "{k}={v}").unwrap();
    }
    json.push_str("}\n");
    std::fs::write(out_path(config, "summary.json"), &json)?;
    Ok(human)
}

const GLOBAL_KEYS: [&str; 4] = ["subcommand", "seed", "workers", "out_dir"];

fn allowed<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    GLOBAL_KEYS.iter().chain(extra).copied().collect()
}

/// Runs one experiment; on success returns the human-readable summary line.
pub fn run(config: &ExperimentConfig) -> Result<String, RunError> {
    install_workers(config)?;
    let start = Instant::now();
    let line = match config.require("subcommand")? {
        "scan" => run_scan(config)?,
        "laminate-search" => run_laminate_search(config)?,
        "families" => run_families(config)?,
        "pinn" => run_pinn(config)?,
        "fem" => run_fem(config)?,
        "curl" => run_curl(config)?,
        other => {
            return Err(RunError::Module(format!("unknown subcommand `{other}`")));
        }
    };
    Ok(format!("{line}  wall_time_s={:.1}", start.elapsed().as_secs_f64()))
}

fn run_scan(config: &ExperimentConfig) -> Result<String, RunError> {
    config.validate_keys(&allowed(&["energy", "a_max", "n_a", "dtheta_deg", "report"]))?;
    let w = EnergyDensity::parse(config.require("energy")?)?;
    let a_max = config.get_f64("a_max")?.unwrap_or(10.0);
    let n_a = config.get_usize("n_a")?.unwrap_or(19);
    let dtheta = config.get_f64("dtheta_deg")?.unwrap_or(1.0);
    let grid = ScanGrid::new(a_max, n_a, dtheta);
    let report = rank_one_scan(&w, &grid, 1e-6);

    let csv_name = config.get("report").unwrap_or("report.csv");
    let mut csv = String::from("a,theta_xi,theta_eta,lh\n");
    for &a in &grid.a_values {
        for s in scan_samples(&w, a, dtheta) {
            writeln!(
                csv,
                "{},{},{},{}",
                fmt17(s.a),
                fmt17(s.theta_xi),
                fmt17(s.theta_eta),
                fmt17(s.value)
            )
            .unwrap();
        }
    }
    std::fs::write(out_path(config, csv_name), csv)?;

    let s = &report.min;
    let (min_val, witness) = (
        s.value,
        format!("a={} xi={} eta={}", s.a, s.theta_xi, s.theta_eta),
    );
    write_summary(
        config,
        &[
            ("subcommand", "scan".into()),
            ("energy", w.name()),
            ("min_lh", fmt17(min_val)),
            ("negative_witness", report.negative_below_tol.to_string()),
            ("tol", fmt17(report.tol)),
            ("evaluated", report.evaluated.to_string()),
            ("failures", report.failures.to_string()),
            ("witness", witness),
        ],
    )
}

fn run_laminate_search(config: &ExperimentConfig) -> Result<String, RunError> {
    config.validate_keys(&allowed(&[
        "energy",
        "trials",
        "resolution",
        "sigma",
        "checkpoint",
        "witness",
    ]))?;
    let w = EnergyDensity::parse(config.require("energy")?)?;
    let trials = config.get_u64("trials")?.unwrap_or(100_000);
    let mut search = SearchConfig::new(&w, trials, seed_of(config)?);
    if let Some(r) = config.get_usize("resolution")? {
        search.resolution = r;
    }
    if let Some(s) = config.get_f64("sigma")? {
        search.sigma = s;
    }
    if let Some(cp) = config.get("checkpoint") {
        search.checkpoint = Some(out_path(config, cp));
    }
    let report = search_driver(&w, &search).map_err(|e| RunError::Module(e.to_string()))?;
    let witness_name = config.get("witness").unwrap_or("witness.txt");
    let mut grid_gap = f64::INFINITY;
    if let Some(best) = &report.best {
        std::fs::write(out_path(config, witness_name), best.spec.to_text())?;
        grid_gap = jensen_gap(&w, &pushforward(&best.spec, search.resolution));
    }
    write_summary(
        config,
        &[
            ("subcommand", "laminate-search".into()),
            ("energy", w.name()),
            ("trials", report.trials_run.to_string()),
            ("sampling_failures", report.sampling_failures.to_string()),
            ("min_gap", fmt17(report.min_gap)),
            ("witness_grid_gap", fmt17(grid_gap)),
            (
                "witness_file",
                if report.best.is_some() {
                    witness_name.into()
                } else {
                    "none".into()
                },
            ),
        ],
    )
}

fn run_families(config: &ExperimentConfig) -> Result<String, RunError> {
    config.validate_keys(&allowed(&["a1", "a2", "profiles", "knots", "out"]))?;
    let a1 = config.get_f64("a1")?.unwrap_or(2.0);
    let a2 = config.get_f64("a2")?.unwrap_or(1.0);
    let n_profiles = config.get_usize("profiles")?.unwrap_or(50);
    let n_knots = config.get_usize("knots")?.unwrap_or(17);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(config)?);

    let mut csv = String::from("family,index,energy,reference,residual\n");
    let base = smooth_laminate_base_energy(a1, a2);
    let mut worst_smooth: f64 = 0.0;
    for p in 0..n_profiles {
        let g = random_admissible_slope(a1, a2, n_knots, &mut rng);
        let e = smooth_laminate_energy(a1, a2, &g).map_err(|e| RunError::Module(e.to_string()))?;
        worst_smooth = worst_smooth.max((e - base).abs());
        writeln!(
            csv,
            "smooth,{p},{},{},{}",
            fmt17(e),
            fmt17(base),
            fmt17(e - base)
        )
        .unwrap();
    }
    let ((f1, w1), (f2, w2)) = two_phase_laminate(a1, a2);
    let w = EnergyDensity::WMagicPlus;
    let two_phase = w1 * w.value(f1) + w2 * w.value(f2);
    writeln!(
        csv,
        "two_phase,0,{},{},{}",
        fmt17(two_phase),
        fmt17(base),
        fmt17(two_phase - base)
    )
    .unwrap();
    let radial = quadratic_radial_profile(1.0, 129);
    let el = radial_el_residual(RadialEnergy::Magic, &radial, 200);
    let gap = radial_energy_gap(RadialEnergy::Magic, &radial);
    writeln!(csv, "radial_contracting,0,{},0,{}", fmt17(gap), fmt17(el)).unwrap();
    let out = config.get("out").unwrap_or("families.csv");
    std::fs::write(out_path(config, out), csv)?;

    write_summary(
        config,
        &[
            ("subcommand", "families".into()),
            ("a1", fmt17(a1)),
            ("a2", fmt17(a2)),
            ("smooth_max_dev", fmt17(worst_smooth)),
            ("two_phase_gap", fmt17(two_phase - base)),
            ("radial_el_residual", fmt17(el)),
            ("radial_gap", fmt17(gap)),
        ],
    )
}

fn run_pinn(config: &ExperimentConfig) -> Result<String, RunError> {
    config.validate_keys(&allowed(&["f0", "grid", "iters", "lr", "decay_at", "dump_field"]))?;
    let a = config.get_f64("f0")?.unwrap_or(3.0);
    let f0 = Mat2::diag(a, 1.0 / a);
    let n = config.get_usize("grid")?.unwrap_or(128);
    let grid = QuadratureGrid::new(n);
    let iters = config.get_usize("iters")?.unwrap_or(2000);
    let mut schedule = AdamSchedule::scaled(iters);
    if let Some(lr) = config.get_f64("lr")? {
        schedule.lr0 = lr;
    }
    if let Some(list) = config.get("decay_at") {
        schedule.decay_at = list
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| ConfigError::BadValue {
                    key: "decay_at".into(),
                    message: format!("`{s}` is not an iteration index"),
                })
            })
            .collect::<Result<_, _>>()?;
    }
    let w = EnergyDensity::WMagicPlus;
    let out = adam_train(&w, f0, grid, seed_of(config)?, &schedule)
        .map_err(|e| RunError::Module(e.to_string()))?;
    let homogeneous = w.value(f0);
    let gap = out.best_energy - homogeneous;
    let (var11, off) = laminate_structure(&out.ansatz, f0, grid);

    if let Some(dump) = config.get("dump_field") {
        let mut csv = String::from("x1,x2,theta1,theta2,g11,g12,g21,g22\n");
        for alpha in 0..n {
            for beta in 0..n {
                let x = [grid.node(alpha), grid.node(beta)];
                let (theta, g) = out.ansatz.eval(x);
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    fmt17(x[0]),
                    fmt17(x[1]),
                    fmt17(theta[0]),
                    fmt17(theta[1]),
                    fmt17(g.a11),
                    fmt17(g.a12),
                    fmt17(g.a21),
                    fmt17(g.a22)
                )
                .unwrap();
            }
        }
        std::fs::write(out_path(config, dump), csv)?;
    }
    let (final_energy, _) = total_energy(&w, &out.ansatz, f0, grid);
    write_summary(
        config,
        &[
            ("subcommand", "pinn".into()),
            ("f0_a", fmt17(a)),
            ("grid", n.to_string()),
            ("iters", iters.to_string()),
            ("energy", fmt17(final_energy)),
            ("homogeneous", fmt17(homogeneous)),
            ("gap", fmt17(gap)),
            ("rejected_steps", out.rejected_steps.to_string()),
            ("var11", fmt17(var11)),
            ("off_l2", fmt17(off)),
        ],
    )
}

fn run_fem(config: &ExperimentConfig) -> Result<String, RunError> {
    config.validate_keys(&allowed(&[
        "domain", "levels", "energy", "a", "cstar", "init", "out", "max_iter",
    ]))?;
    let domain = config.get("domain").unwrap_or("square");
    let levels = config.get_usize("levels")?.unwrap_or(4);
    let mesh = match domain {
        "square" => TriMesh::square_coarse().refined(levels),
        "disc" => TriMesh::disc_coarse().refined(levels),
        other => {
            return Err(RunError::Module(format!(
                "unknown domain `{other}` (square|disc)"
            )))
        }
    };
    let w = EnergyDensity::parse(config.get("energy").unwrap_or("w_magic_plus"))?;
    let a = config.get_f64("a")?.unwrap_or(2.0);
    let f0 = Mat2::diag(a.sqrt(), 1.0 / a.sqrt());
    let material = match config.get_f64("cstar")? {
        Some(c) => MaterialMap::three_discs(
            EnergyDensity::weakened(c).map_err(RunError::Energy)?,
            w.clone(),
        ),
        None => MaterialMap::Uniform(w.clone()),
    };
    let problem = FemProblem::new(&mesh, f0, &material);
    let start = match config.get("init").unwrap_or("homogeneous") {
        "homogeneous" => vec![0.0; problem.n_dofs()],
        other => match other.strip_prefix("random:") {
            Some(amp) => {
                let amp: f64 = amp.parse().map_err(|_| ConfigError::BadValue {
                    key: "init".into(),
                    message: format!("`{amp}` is not an amplitude"),
                })?;
                problem.random_start(amp, seed_of(config)?)
            }
            None => {
                return Err(RunError::Module(format!(
                    "unknown init `{other}` (homogeneous|random:amp)"
                )))
            }
        },
    };
    let params = TrParams {
        max_iter: config.get_usize("max_iter")?.unwrap_or(500),
        ..TrParams::default()
    };
    let outcome = crate::fem::minimize(&problem, start, &params);

    if let Some(out) = config.get("out") {
        let mut csv = String::from("element,cx,cy,det,distortion,energy_density\n");
        for e in 0..mesh.triangles.len() {
            let c = mesh.centroid(e);
            let f = problem.element_gradient(&outcome.theta, e);
            writeln!(
                csv,
                "{e},{},{},{},{},{}",
                fmt17(c[0]),
                fmt17(c[1]),
                fmt17(f.det()),
                fmt17(crate::energy::distortion_nonlinear(f)),
                fmt17(material.at(c).value(f))
            )
            .unwrap();
        }
        std::fs::write(out_path(config, out), csv)?;
    }
    write_summary(
        config,
        &[
            ("subcommand", "fem".into()),
            ("domain", domain.into()),
            ("levels", levels.to_string()),
            ("vertices", mesh.vertices.len().to_string()),
            ("triangles", mesh.triangles.len().to_string()),
            ("energy", fmt17(outcome.report.energy)),
            ("gap", fmt17(outcome.gap)),
            ("iterations", outcome.report.iterations.to_string()),
            ("status", format!("{:?}", outcome.report.status)),
        ],
    )
}

fn run_curl(config: &ExperimentConfig) -> Result<String, RunError> {
    config.validate_keys(&allowed(&[
        "domain", "levels", "energy", "a", "lc", "delta", "cells", "out", "max_iter",
    ]))?;
    let domain = config.get("domain").unwrap_or("disc");
    let levels = config.get_usize("levels")?.unwrap_or(3);
    let mesh = match domain {
        "square" => TriMesh::square_coarse().refined(levels),
        "disc" => TriMesh::disc_coarse().refined(levels),
        other => {
            return Err(RunError::Module(format!(
                "unknown domain `{other}` (square|disc)"
            )))
        }
    };
    let em = EdgeMesh::new(mesh);
    let w = EnergyDensity::parse(config.get("energy").unwrap_or("w_magic_plus"))?;
    let a = config.get_f64("a")?.unwrap_or(2.0);
    let f0 = Mat2::diag(a.sqrt(), 1.0 / a.sqrt());
    let lc = config.get_f64("lc")?.unwrap_or(1.0);
    let delta = config.get_f64("delta")?.unwrap_or(0.05);
    let cells = config.get_usize("cells")?.unwrap_or(8);
    let problem = CurlProblem::new(&em, f0, w.clone(), lc);
    let start = MatrixField::checkerboard(&em, f0, delta, cells);
    let params = TrParams {
        max_iter: config.get_usize("max_iter")?.unwrap_or(300),
        ..TrParams::default()
    };
    let outcome = minimize_i2(&problem, &start, &params);
    let phi = compatible_projection(&em, f0, &outcome.field);

    if let Some(out) = config.get("out") {
        let mut csv = String::from("element,cx,cy,p11,p12,p21,p22,curl1,curl2\n");
        for t in 0..em.mesh.triangles.len() {
            let c = em.mesh.centroid(t);
            let p = outcome.field.at_centroid(&em, t);
            let curl = outcome.field.curl(&em, t);
            writeln!(
                csv,
                "{t},{},{},{},{},{},{},{},{}",
                fmt17(c[0]),
                fmt17(c[1]),
                fmt17(p.a11),
                fmt17(p.a12),
                fmt17(p.a21),
                fmt17(p.a22),
                fmt17(curl[0]),
                fmt17(curl[1])
            )
            .unwrap();
        }
        std::fs::write(out_path(config, out), csv)?;
    }
    // energy of the projected compatible deformation, P1-exact
    let mut projected_energy = 0.0;
    for t in 0..em.mesh.triangles.len() {
        let (area, g) = em.mesh.tri_geometry(t);
        let tri = em.mesh.triangles[t];
        let mut f = Mat2::ZERO;
        for (i, v) in tri.into_iter().enumerate() {
            f = f + Mat2::outer(phi[v], g[i]);
        }
        projected_energy += area * w.value(f);
    }
    let homogeneous = em.mesh.total_area() * w.value(f0);
    write_summary(
        config,
        &[
            ("subcommand", "curl".into()),
            ("domain", domain.into()),
            ("levels", levels.to_string()),
            ("lc", fmt17(lc)),
            ("i2", fmt17(outcome.i2)),
            ("i2_affine", fmt17(outcome.i2_affine)),
            ("homogeneous_i1", fmt17(homogeneous)),
            ("projected_i1", fmt17(projected_energy)),
            ("stuck", outcome.stuck.to_string()),
            ("iterations", outcome.report.iterations.to_string()),
        ],
    )
}
