//! Dressed levels of the dimer near its idle point, with the computational
//! states picked out by overlap with bare product states.

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::crosstalk::DimerAnalyzer;
use zzcoupler::fock::{label_states, LabelOptions, TruncationPolicy};
use zzcoupler::units::{angular_to_ghz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let model = DimerModel::new(&CircuitSpec::reference())?;
    let analyzer = DimerAnalyzer::new(&TruncationPolicy::dimer())?;
    let p = model.params_at(flux_quanta_to_rad(0.4928))?;
    let spectrum = analyzer.spectrum(&p)?;

    let labels: Vec<Vec<u8>> = vec![
        vec![0, 0, 0],
        vec![0, 0, 1],
        vec![0, 1, 0],
        vec![1, 0, 0],
        vec![1, 0, 1],
        vec![2, 0, 0],
        vec![0, 0, 2],
        vec![0, 2, 0],
    ];
    let labeled = label_states(spectrum, &labels, &LabelOptions::default())?;
    let e0 = labeled.energy(&[0, 0, 0])?;
    for a in &labeled.assignments {
        println!(
            "|{}{}{}> -> eigenstate {:>3}  E/2pi = {:9.5} GHz  overlap {:.5}",
            a.label[0],
            a.label[1],
            a.label[2],
            a.eigen_index,
            angular_to_ghz(labeled.spectrum.values[a.eigen_index] - e0),
            a.overlap
        );
    }
    Ok(())
}
