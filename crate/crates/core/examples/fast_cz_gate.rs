//! 20 ns CZ gate through the 101 <-> 200 resonance: qubit 1 is pulsed onto
//! the resonance while the coupler opens the exchange for one full cycle.

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::gate::{optimize_pulse, GateSimulator, PulseSearch};
use zzcoupler::idle::idle_point;
use zzcoupler::units::flux_quanta_to_rad;

fn main() -> zzcoupler::Result<()> {
    let spec = CircuitSpec::reference();
    let idle = idle_point(&spec, &TruncationPolicy::dimer(), (flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5)))?;
    let sim = GateSimulator::new(DimerModel::new(&spec)?, idle.phi_ext, &TruncationPolicy::with_cutoff(5, 5), 0.05)?;

    let o = optimize_pulse(&sim, &PulseSearch::cz_fast())?;
    println!("parameters [w_c, tau_c, w_q1, tau_q1] = {:.4?}", o.x);
    println!("infidelity {:.3e}, leakage {:.3e}", o.report.infidelity, o.report.leakage);

    let tracked = vec![vec![1, 0, 1], vec![2, 0, 0], vec![1, 1, 0], vec![0, 1, 1]];
    let trace = sim.population_trace(&o.report.pulses, &[1, 0, 1], &tracked, 1.0)?;
    println!("{:>5} {:>9} {:>9} {:>9} {:>9}", "t ns", "P101", "P200", "P110", "P011");
    for (t, p) in trace.times.iter().zip(&trace.populations) {
        println!("{t:5.1} {:9.5} {:9.5} {:9.5} {:9.5}", p[0], p[1], p[2], p[3]);
    }
    Ok(())
}
