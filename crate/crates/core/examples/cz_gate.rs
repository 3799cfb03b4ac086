//! 40 ns CZ gate from a coupler flux pulse: optimize rise time and
//! interaction frequency, then report the compensated unitary.

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::gate::{optimize_pulse, GateSimulator, PulseSearch};
use zzcoupler::idle::idle_point;
use zzcoupler::units::{angular_to_ghz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let spec = CircuitSpec::reference();
    let idle = idle_point(&spec, &TruncationPolicy::dimer(), (flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5)))?;
    let sim = GateSimulator::new(DimerModel::new(&spec)?, idle.phi_ext, &TruncationPolicy::with_cutoff(5, 5), 0.05)?;

    let start = sim.simulate(PulseSearch::cz40().scheme, &PulseSearch::cz40().initial_pulses(&sim))?;
    println!("start: infidelity {:.3e}, leakage {:.3e}", start.infidelity, start.leakage);

    let o = optimize_pulse(&sim, &PulseSearch::cz40())?;
    let r = &o.report;
    println!(
        "optimized after {} evaluations: w_int/2pi = {:.4} GHz, tau = {:.3} ns",
        r.optimizer_evaluations,
        angular_to_ghz(r.pulses.coupler.omega_int),
        r.pulses.coupler.tau
    );
    println!(
        "infidelity {:.3e}, leakage {:.3e}, decoherence bound {:.2e}",
        r.infidelity, r.leakage, r.decoherence
    );
    println!("compensated unitary (|U|, arg U):");
    for row in &r.unitary_compensated {
        let cells: Vec<String> = row
            .iter()
            .map(|&(re, im)| format!("{:.4}∠{:+.4}", re.hypot(im), im.atan2(re)))
            .collect();
        println!("  {}", cells.join("  "));
    }
    Ok(())
}
