//! Locate the flux bias that minimizes delocalization and report the ZZ
//! coupling left there; compare with the g_eff zeros.

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::crosstalk::{geff_zero_full, geff_zeros, DimerAnalyzer};
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::idle::{find_idle_flux, IdleObjective, IdleSearchOptions};
use zzcoupler::units::{angular_to_ghz, angular_to_khz, flux_quanta_to_rad, rad_to_flux_quanta};

fn main() -> zzcoupler::Result<()> {
    let model = DimerModel::new(&CircuitSpec::reference())?;
    let analyzer = DimerAnalyzer::new(&TruncationPolicy::dimer())?;
    let window = (flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5));

    for objective in [IdleObjective::MinEpsilon, IdleObjective::MinAbsZeta] {
        let r = find_idle_flux(&model, &analyzer, &IdleSearchOptions::new(window, objective))?;
        println!(
            "{objective:?}: Phi = {:.6} Phi0, w_c/2pi = {:.5} GHz, zeta/2pi = {:.4} kHz, eps = {:.3e} ({} evaluations)",
            rad_to_flux_quanta(r.phi_ext),
            angular_to_ghz(r.omega_c),
            angular_to_khz(r.zeta),
            r.epsilon,
            r.evaluations
        );
        if objective == IdleObjective::MinEpsilon {
            let p = model.params_at(r.phi_ext)?;
            let z = geff_zeros(&p)?;
            println!(
                "  g_eff zero: rotating-wave {:.4} GHz ({:?} branch), full {:.4} GHz",
                angular_to_ghz(z.chosen()),
                z.branch,
                angular_to_ghz(geff_zero_full(&p)?)
            );
        }
    }
    Ok(())
}
