//! Evaluates the analytic zero-gap families: smooth laminates, the
//! two-phase limit laminate, and radial competitors.

use qclab::families::{
    quadratic_radial_profile, radial_el_residual, radial_energy_gap, random_admissible_slope,
    smooth_laminate_base_energy, smooth_laminate_energy, two_phase_laminate, RadialEnergy,
};
use qclab::laminate::{jensen_gap, DiscreteMeasure};
use qclab::EnergyDensity;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (a1, a2) = (2.0, 1.0);
    let base = smooth_laminate_base_energy(a1, a2);
    println!("base energy for (a1, a2) = ({a1}, {a2}): {base:.12}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let g = random_admissible_slope(a1, a2, 17, &mut rng);
        let e = smooth_laminate_energy(a1, a2, &g).expect("admissible profile");
        worst = worst.max((e - base).abs());
    }
    println!("50 random smooth laminates: max |energy - base| = {worst:.3e}");

    let ((f1, w1), (f2, w2)) = two_phase_laminate(a1, a2);
    let mu = DiscreteMeasure { atoms: vec![(f1, w1), (f2, w2)] };
    println!(
        "two-phase laminate: weights ({w1:.4}, {w2:.4}), Jensen gap {:.3e}",
        jensen_gap(&EnergyDensity::WMagicPlus, &mu)
    );

    let contracting = quadratic_radial_profile(1.0, 129);
    println!(
        "contracting radial competitor: EL residual {:.3e}, energy gap {:.3e}",
        radial_el_residual(RadialEnergy::Magic, &contracting, 200),
        radial_energy_gap(RadialEnergy::Magic, &contracting)
    );
}
