//! Random search over combined laminates for Jensen-gap violations: the
//! candidate energy should produce none, the weakened energy should yield
//! a strictly negative witness.
//!
//! Usage: cargo run --release --example laminate_search [trials]

use qclab::laminate::{search_driver, SearchConfig};
use qclab::EnergyDensity;

fn main() {
    let trials: u64 = std::env::args()
        .nth(1)
        .map_or(20_000, |a| a.parse().expect("trial count"));

    for w in [EnergyDensity::WMagicPlus, EnergyDensity::Wc { c: 1.5 }] {
        let report = search_driver(&w, &SearchConfig::new(&w, trials, 1)).expect("search");
        println!(
            "{:<12} min gap {:+.6e} over {} trials ({} sampling failures)",
            w.name(),
            report.min_gap,
            report.trials_run,
            report.sampling_failures
        );
        if let Some(best) = report.best {
            let label = if report.min_gap < 0.0 { "witness" } else { "min-gap trial" };
            println!(
                "  {}: trial {}, N = {} waves, F0 = {:?}",
                label,
                best.trial,
                best.spec.n(),
                best.spec.f0
            );
        }
    }
}
