//! Four-qubit chain: sweep each coupler with its spectators attached and
//! compare the idle points with those of the isolated pairs.

use zzcoupler::chain::{dimer_idle_fluxes, pairwise_idle_scan, ChainAnalyzer, ChainModel, ChainSpec};
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::idle::linspace;
use zzcoupler::units::{angular_to_ghz, angular_to_khz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let spec = ChainSpec::reference();
    let model = ChainModel::new(&spec)?;
    println!("adjusted shunts (fF): {:.3?}", model.shunts);

    let dimer_trunc = TruncationPolicy::dimer();
    let idle = dimer_idle_fluxes(&spec, &dimer_trunc, (flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5)))?;
    let analyzer = ChainAnalyzer::new(spec.len(), &TruncationPolicy::chain())?;
    println!("chain Hilbert space: {} states", analyzer.dim());

    let sweep: Vec<f64> = linspace(0.44, 0.50, 13).into_iter().map(flux_quanta_to_rad).collect();
    for k in 0..spec.links.len() {
        let r = pairwise_idle_scan(&model, &analyzer, &dimer_trunc, k, &idle, &sweep)?;
        println!(
            "Q{k}-Q{}: isolated idle {:.4} GHz (zeta {:.3} kHz); chain eps-min {:.4} GHz (zeta {:.3} kHz)",
            k + 1,
            angular_to_ghz(r.dimer_idle_omega_c),
            angular_to_khz(r.dimer_idle_zeta),
            angular_to_ghz(r.chain_idle_omega_c),
            angular_to_khz(r.chain_idle_zeta)
        );
        if let Some(z) = r.chain_zero {
            println!("  chain ZZ zero at {:.4} GHz, eps {:.3e}", angular_to_ghz(z.omega_c), z.epsilon);
        }
    }
    Ok(())
}
