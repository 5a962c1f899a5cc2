//! Thin CLI: translates flags into a flat experiment config and hands it to
//! the library runner. All numerics live in the library; see the examples/
//! directory for the API-level entry points.

use clap::{Args, Parser, Subcommand};
use qclab::config::ExperimentConfig;
use qclab::runner;

#[derive(Parser)]
#[command(name = "qclab", version, about = "quasiconvexity experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// RNG seed for every stochastic component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory receiving CSV artifacts and the summary record.
    #[arg(long, global = true, default_value = ".")]
    out_dir: String,
    /// Optional key = value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Legendre-Hadamard rank-one convexity scan over the det=1 slice.
    Scan {
        #[arg(long, default_value = "w_magic_plus")]
        energy: String,
        #[arg(long, default_value_t = 10.0)]
        a_max: f64,
        #[arg(long, default_value_t = 19)]
        n_a: usize,
        #[arg(long, default_value_t = 1.0)]
        dtheta_deg: f64,
        #[arg(long, default_value = "report.csv")]
        report: String,
    },
    /// Random search over combined laminates for negative Jensen gaps.
    LaminateSearch {
        #[arg(long, default_value = "w_magic_plus")]
        energy: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        checkpoint: Option<String>,
        #[arg(long, default_value = "witness.txt")]
        witness: String,
    },
    /// Structured competitor families: smooth laminates and radial profiles.
    Families {
        #[arg(long, default_value_t = 2.0)]
        a1: f64,
        #[arg(long, default_value_t = 1.0)]
        a2: f64,
        #[arg(long, default_value_t = 50)]
        profiles: usize,
        #[arg(long, default_value = "families.csv")]
        out: String,
    },
    /// Neural-ansatz minimization of the periodic energy gap.
    Pinn {
        /// Builds F0 = diag(a, 1/a).
        #[arg(long, default_value_t = 3.0)]
        f0: f64,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long)]
        lr: Option<f64>,
        /// Comma-separated decay iterations, e.g. 700,1400,1800.
        #[arg(long)]
        decay_at: Option<String>,
        #[arg(long)]
        dump_field: Option<String>,
    },
    /// P1 finite-element energy minimization.
    Fem {
        #[arg(long, default_value = "square")]
        domain: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value = "w_magic_plus")]
        energy: String,
        /// Builds F0 = diag(sqrt(a), 1/sqrt(a)).
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        /// Weakened-energy parameter of the three-disc inclusions.
        #[arg(long)]
        cstar: Option<f64>,
        /// homogeneous | random:amp
        #[arg(long, default_value = "homogeneous")]
        init: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Curl-penalized relaxation over incompatible edge-element fields.
    Curl {
        #[arg(long, default_value = "disc")]
        domain: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value = "w_magic_plus")]
        energy: String,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        /// Curl penalty length L_c.
        #[arg(long, default_value_t = 1.0)]
        lc: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            ExperimentConfig::parse(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::new(),
    };
    let mut set = |k: &str, v: String| cfg.set_override(k, &v);
    set("seed", cli.global.seed.to_string());
    set("out_dir", cli.global.out_dir.clone());
    if let Some(w) = cli.global.workers {
        set("workers", w.to_string());
    }
    match &cli.command {
        Command::Scan {
            energy,
            a_max,
            n_a,
            dtheta_deg,
            report,
        } => {
            set("subcommand", "scan".into());
            set("energy", energy.clone());
            set("a_max", a_max.to_string());
            set("n_a", n_a.to_string());
            set("dtheta_deg", dtheta_deg.to_string());
            set("report", report.clone());
        }
        Command::LaminateSearch {
            energy,
            trials,
            resolution,
            sigma,
            checkpoint,
            witness,
        } => {
            set("subcommand", "laminate-search".into());
            set("energy", energy.clone());
            set("trials", trials.to_string());
            if let Some(r) = resolution {
                set("resolution", r.to_string());
            }
            if let Some(s) = sigma {
                set("sigma", s.to_string());
            }
            if let Some(cp) = checkpoint {
                set("checkpoint", cp.clone());
            }
            set("witness", witness.clone());
        }
        Command::Families {
            a1,
            a2,
            profiles,
            out,
        } => {
            set("subcommand", "families".into());
            set("a1", a1.to_string());
            set("a2", a2.to_string());
            set("profiles", profiles.to_string());
            set("out", out.clone());
        }
        Command::Pinn {
            f0,
            grid,
            iters,
            lr,
            decay_at,
            dump_field,
        } => {
            set("subcommand", "pinn".into());
            set("f0", f0.to_string());
            set("grid", grid.to_string());
            set("iters", iters.to_string());
            if let Some(lr) = lr {
                set("lr", lr.to_string());
            }
            if let Some(d) = decay_at {
                set("decay_at", d.clone());
            }
            if let Some(d) = dump_field {
                set("dump_field", d.clone());
            }
        }
        Command::Fem {
            domain,
            levels,
            energy,
            a,
            cstar,
            init,
            out,
        } => {
            set("subcommand", "fem".into());
            set("domain", domain.clone());
            set("levels", levels.to_string());
            set("energy", energy.clone());
            set("a", a.to_string());
            if let Some(c) = cstar {
                set("cstar", c.to_string());
            }
            set("init", init.clone());
            if let Some(o) = out {
                set("out", o.clone());
            }
        }
        Command::Curl {
            domain,
            levels,
            energy,
            a,
            lc,
            delta,
            out,
        } => {
            set("subcommand", "curl".into());
            set("domain", domain.clone());
            set("levels", levels.to_string());
            set("energy", energy.clone());
            set("a", a.to_string());
            set("lc", lc.to_string());
            set("delta", delta.to_string());
            if let Some(o) = out {
                set("out", o.clone());
            }
        }
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    match runner::run(&cfg) {
        Ok(line) => println!("{line}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
