//! Trains the periodic neural test field against the candidate energy at
//! F0 = diag(3, 1/3) and reports the energy gap and laminate structure.
//!
//! Usage: cargo run --release --example pinn_train [grid] [iters]

use qclab::pinn::{adam_train, laminate_structure, AdamSchedule, QuadratureGrid};
use qclab::{EnergyDensity, Mat2};
use std::time::Instant;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(32, |a| a.parse().expect("grid size"));
    let iters: usize = args.next().map_or(200, |a| a.parse().expect("iteration count"));

    let w = EnergyDensity::WMagicPlus;
    let f0 = Mat2::diag(3.0, 1.0 / 3.0);
    let grid = QuadratureGrid::new(n);
    let schedule = AdamSchedule::scaled(iters);

    let start = Instant::now();
    let out = adam_train(&w, f0, grid, 7, &schedule).expect("training");
    let elapsed = start.elapsed().as_secs_f64();

    let gap = out.best_energy - w.value(f0);
    let (var11, off) = laminate_structure(&out.ansatz, f0, grid);
    println!("grid {n}x{n}, {iters} Adam iterations in {elapsed:.1}s");
    println!("energy gap (best - homogeneous): {gap:.6e}");
    println!("laminate structure: (1,1) variation {var11:.3e}, off-component norm {off:.3e}");
    println!("rejected steps: {}", out.rejected_steps);
}
