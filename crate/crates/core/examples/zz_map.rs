//! Residual ZZ at the delocalization minimum over coupler junction
//! parameters, and where it crosses zero. A coarse grid; the CLI's
//! `zz-map` runs the full one.

use zzcoupler::circuit::CircuitSpec;
use zzcoupler::fock::TruncationPolicy;
use zzcoupler::idle::{linspace, zero_zz_manifold, IdleObjective, IdleSearchOptions};
use zzcoupler::units::{angular_to_khz, flux_quanta_to_rad};

fn main() -> zzcoupler::Result<()> {
    let ej = linspace(38.0, 46.0, 5);
    let alpha = linspace(0.21, 0.27, 4);
    let opts = IdleSearchOptions::new((flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5)), IdleObjective::MinEpsilon);
    let m = zero_zz_manifold(&CircuitSpec::reference(), &ej, &alpha, &TruncationPolicy::new(5), &opts, 6)?;

    print!("{:>8}", "EJ\\a");
    for a in &alpha {
        print!("{a:>10.3}");
    }
    println!();
    for (i, e) in ej.iter().enumerate() {
        print!("{e:8.1}");
        for j in 0..alpha.len() {
            match m.cell(i, j).result {
                Some(r) => print!("{:10.2}", angular_to_khz(r.zeta)),
                None => print!("{:>10}", "-"),
            }
        }
        println!();
    }
    println!("zero-ZZ points (E_J GHz, alpha):");
    for (e, a) in &m.contour {
        println!("  {e:.3}, {a:.4}");
    }
    Ok(())
}
