//! ZZ coupling and delocalization along the flux axis, from exact
//! diagonalization and from perturbation theory.

use rayon::prelude::*;
use zzcoupler::circuit::{CircuitSpec, DimerModel, DIMER_C};
use zzcoupler::crosstalk::DimerAnalyzer;
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::idle::linspace;
use zzcoupler::units::{angular_to_ghz, angular_to_khz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let model = DimerModel::new(&CircuitSpec::reference())?;
    let analyzer = DimerAnalyzer::new(&TruncationPolicy::dimer())?;
    let fluxes = linspace(0.40, 0.50, 21);

    let rows: Vec<_> = fluxes
        .par_iter()
        .map(|&f| {
            let p = model.params_at(flux_quanta_to_rad(f))?;
            Ok((f, p.modes[DIMER_C].omega, analyzer.report(&p)?))
        })
        .collect::<zzcoupler::Result<_>>()?;

    println!("{:>7} {:>9} {:>12} {:>12} {:>10} {:>10}", "Phi", "w_c GHz", "zeta kHz", "pert kHz", "eps", "eps pert");
    for (f, wc, r) in rows {
        println!(
            "{f:7.3} {:9.4} {:12.3} {:>12} {:10.3e} {:>10}",
            angular_to_ghz(wc),
            angular_to_khz(r.zeta_exact),
            r.zeta_pert.map_or("-".into(), |z| format!("{:.3}", angular_to_khz(z.sum()))),
            r.epsilon_exact,
            r.epsilon_pert.map_or("-".into(), |e| format!("{e:.3e}")),
        );
    }
    Ok(())
}
