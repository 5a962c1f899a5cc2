//! Scans the Legendre-Hadamard form of a few energy densities over the
//! det = 1 slice and prints the grid minimum with its witness direction.
//!
//! Usage: cargo run --release --example rank_one_scan [dtheta_deg]

use qclab::convexity::{rank_one_scan, ScanGrid};
use qclab::EnergyDensity;

fn main() {
    let dtheta: f64 = std::env::args()
        .nth(1)
        .map_or(1.0, |a| a.parse().expect("angular resolution in degrees"));
    let grid = ScanGrid::new(10.0, 19, dtheta);

    for w in [
        EnergyDensity::WMagicPlus,
        EnergyDensity::Wc { c: 1.1 },
        EnergyDensity::Wc { c: 2.0 },
        EnergyDensity::DacorognaMarcellini { gamma: 2.0, alpha: 1.0 },
        EnergyDensity::DacorognaMarcellini { gamma: 2.5, alpha: 1.0 },
    ] {
        let report = rank_one_scan(&w, &grid, 1e-6);
        let m = report.min;
        println!(
            "{:<16} min LH {:+.3e} at a = {:.2}, theta_xi = {:.1} deg, theta_eta = {:.1} deg \
             ({} values below -1e-6 of {} evaluated)",
            w.name(),
            m.value,
            m.a,
            m.theta_xi.to_degrees(),
            m.theta_eta.to_degrees(),
            report.negative_below_tol,
            report.evaluated,
        );
    }
}
