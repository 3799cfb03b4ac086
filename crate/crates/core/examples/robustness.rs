//! Fabrication errors on the coupler: re-tune the flux to cancel ZZ and
//! check how localized the qubits stay.

use zzcoupler::circuit::CircuitSpec;
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::idle::{error_grid, linspace, robustness_grid, IdleObjective, IdleSearchOptions};
use zzcoupler::units::{angular_to_khz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let axis = linspace(-0.05, 0.05, 5);
    let opts = IdleSearchOptions::new((flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5)), IdleObjective::MinAbsZeta);
    let cells = robustness_grid(&CircuitSpec::reference(), &error_grid(&axis, &axis), &TruncationPolicy::new(5), &opts)?;

    println!("{:>7} {:>7} {:>11} {:>10}", "dE_C", "dE_J", "zeta kHz", "eps");
    for c in &cells {
        match c.result {
            Some(r) => println!("{:7.3} {:7.3} {:11.4} {:10.3e}", c.error.d_ec, c.error.d_ej, angular_to_khz(r.zeta), r.epsilon),
            None => println!("{:7.3} {:7.3} {:>11}", c.error.d_ec, c.error.d_ej, "-"),
        }
    }
    Ok(())
}
