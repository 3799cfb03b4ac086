//! Charging energies, mode parameters and couplings of the reference dimer
//! with the coupler at half a flux quantum.

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::units::{angular_to_ghz, angular_to_mhz};

fn main() -> zzcoupler::Result<()> {
    let spec = CircuitSpec::reference();
    let model = DimerModel::new(&spec)?;

    println!("charging energies (GHz), order Q1, +, -, Q2:");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:>10.6}", model.charging.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
    println!("qubit E_J (GHz): {:.4}, {:.4}", model.qubit_ejs[0], model.qubit_ejs[1]);

    let p = model.params_at(spec.coupler.phi_ext)?;
    for (name, m) in ["Q1", "C ", "Q2"].iter().zip(&p.modes) {
        println!(
            "{name}: omega/2pi = {:.5} GHz, U/2pi = {:8.3} MHz, K/2pi = {:.3} MHz",
            angular_to_ghz(m.omega),
            angular_to_mhz(m.anharmonicity),
            angular_to_mhz(m.cubic)
        );
    }
    println!(
        "g12 = {:.3} MHz, g1c = {:.3} MHz, g2c = {:.3} MHz",
        angular_to_mhz(p.g12()),
        angular_to_mhz(p.g1c()),
        angular_to_mhz(p.g2c())
    );
    println!("coupler E_C = {:.4} GHz", model.coupler_ec());
    for w in &p.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
