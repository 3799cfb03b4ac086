//! Coupler frequency and anharmonicity against external flux. The
//! anharmonicity turns positive as the coupler frequency drops toward
//! half a flux quantum.

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::coupler::{monotone_segments, spectrum_vs_flux};
use zzcoupler::idle::linspace;
use zzcoupler::units::{angular_to_ghz, angular_to_mhz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let model = DimerModel::new(&CircuitSpec::reference())?;
    let fluxes: Vec<f64> = linspace(0.0, 1.0, 41).into_iter().map(flux_quanta_to_rad).collect();
    let points = spectrum_vs_flux(&model.coupler_spec(0.0), &fluxes);

    println!("{:>8} {:>10} {:>10} {:>10}", "Phi/Phi0", "w_c GHz", "U_c MHz", "K_c MHz");
    for p in &points {
        let phi = p.phi_ext / std::f64::consts::TAU;
        match p.params {
            Some(c) => println!(
                "{phi:8.3} {:10.4} {:10.2} {:10.2}",
                angular_to_ghz(c.omega),
                angular_to_mhz(c.anharmonicity),
                angular_to_mhz(c.cubic)
            ),
            None => println!("{phi:8.3}   (multiple wells)"),
        }
    }
    println!("monotone segments: {:?}", monotone_segments(&points));
    Ok(())
}
