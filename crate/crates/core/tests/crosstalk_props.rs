//! ZZ and delocalization: closed-form small-block oracles, the sweet-spot
//! sign law, labeling invariants and the g_eff zero near the idle point.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use zzcoupler::circuit::{Coupling, CircuitSpec, DeviceParams, DimerModel, ModeKind, ModeParams, DIMER_C};
use zzcoupler::crosstalk::{geff_zero_full, uc_sweet_spot, DimerAnalyzer};
use zzcoupler::fock::{dimer_computational_labels, label_states, LabelOptions, TruncationPolicy};
use zzcoupler::idle::{find_idle_flux, IdleObjective, IdleSearchOptions};
use zzcoupler::units::{angular_to_mhz, flux_quanta_to_rad, ghz_to_angular, TWO_PI};

fn mode(kind: ModeKind, w: f64, u: f64) -> ModeParams {
    ModeParams {
        kind,
        omega: ghz_to_angular(w),
        anharmonicity: ghz_to_angular(u),
        cubic: 0.0,
        n_zpf: 1.0,
        phi_zpf: 1.0,
    }
}

fn dimer(w: [f64; 3], u: [f64; 3], g: [f64; 3]) -> DeviceParams {
    DeviceParams {
        modes: vec![
            mode(ModeKind::Qubit, w[0], u[0]),
            mode(ModeKind::Coupler, w[1], u[1]),
            mode(ModeKind::Qubit, w[2], u[2]),
        ],
        couplings: vec![
            Coupling { a: 0, b: 1, g: ghz_to_angular(g[0]) },
            Coupling { a: 0, b: 2, g: ghz_to_angular(g[1]) },
            Coupling { a: 1, b: 2, g: ghz_to_angular(g[2]) },
        ],
        warnings: vec![],
    }
}

fn lowest(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Exchange-only qubit pair: ζ from the 2×2 single-excitation block and
/// the 3×3 `{20, 11, 02}` block, each labeled by continuity with its bare
/// energy (the qubit detuning keeps them well separated).
fn exchange_zeta(w1: f64, w2: f64, u1: f64, u2: f64, g: f64) -> f64 {
    let e = |n1: f64, n2: f64| w1 * n1 + 0.5 * u1 * n1 * (n1 - 1.0) + w2 * n2 + 0.5 * u2 * n2 * (n2 - 1.0);
    let single = SymmetricEigen::new(DMatrix::from_row_slice(2, 2, &[e(1.0, 0.0), g, g, e(0.0, 1.0)])).eigenvalues;
    let s2 = std::f64::consts::SQRT_2 * g;
    let double = DMatrix::from_row_slice(3, 3, &[e(2.0, 0.0), s2, 0.0, s2, e(1.0, 1.0), s2, 0.0, s2, e(0.0, 2.0)]);
    let double = SymmetricEigen::new(double).eigenvalues;
    let nearest = |vals: &[f64], target: f64| {
        *vals.iter().min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs())).unwrap()
    };
    let e11 = nearest(double.as_slice(), e(1.0, 1.0));
    let e10 = nearest(single.as_slice(), e(1.0, 0.0));
    let e01 = nearest(single.as_slice(), e(0.0, 1.0));
    e11 - e10 - e01
}

#[test]
fn direct_exchange_zeta_matches_block_diagonalization() {
    let mut a = DimerAnalyzer::new(&TruncationPolicy::new(4)).unwrap();
    a.rwa = true;
    let p = dimer([6.6, 9.0, 6.1], [-0.21, 0.0, -0.2], [0.0, 0.02, 0.0]);
    let got = a.exact(&p).unwrap().zeta;
    let want = exchange_zeta(TWO_PI * 6.6, TWO_PI * 6.1, TWO_PI * -0.21, TWO_PI * -0.2, TWO_PI * 0.02);
    assert!((got - want).abs() < 1e-10 * want.abs().max(1e-6), "{got} vs {want}");
}

#[test]
fn ground_energy_matches_dense_reference() {
    let a = DimerAnalyzer::new(&TruncationPolicy::new(5)).unwrap();
    let p = DimerModel::new(&CircuitSpec::reference()).unwrap().params_at(flux_quanta_to_rad(0.49)).unwrap();
    let s = a.spectrum(&p).unwrap();
    let reference = lowest(a.operators().dense(&p, false).unwrap());
    assert!((s.values[0] - reference).abs() < 1e-9 * reference.abs().max(1.0));
}

#[test]
fn full_geff_zero_tracks_exact_idle_frequency() {
    let model = DimerModel::new(&CircuitSpec::reference()).unwrap();
    let analyzer = DimerAnalyzer::new(&TruncationPolicy::dimer()).unwrap();
    let opts = IdleSearchOptions::new((flux_quanta_to_rad(0.3), flux_quanta_to_rad(0.5)), IdleObjective::MinEpsilon);
    let idle = find_idle_flux(&model, &analyzer, &opts).unwrap();
    let p = model.params_at(idle.phi_ext).unwrap();
    let zero = geff_zero_full(&p).unwrap();
    let miss = angular_to_mhz(zero - p.modes[DIMER_C].omega).abs();
    assert!(miss < 30.0, "g_eff zero {miss:.2} MHz from the exact idle coupler frequency");
}

/// Draw `(U, Δ1c, Δ2c)` with the coupler far detuned on one side of both
/// qubits and `r = U / Δ12` inside (dispersive) or outside (straddling) the
/// unit interval.
fn sign_law_case() -> impl Strategy<Value = (f64, f64, f64, bool)> {
    (
        -0.35..-0.1f64,
        prop_oneof![0.02..0.8f64, 1.25..5.0f64],
        any::<bool>(),
        any::<bool>(),
        10.0..30.0f64,
    )
        .prop_map(|(u, r, r_neg, coupler_above, m)| {
            let r = if r_neg { -r } else { r };
            let d12 = u / r;
            let s = if coupler_above { -1.0 } else { 1.0 };
            let base = m * u.abs();
            let d2c = s * (base + (-s * d12).max(0.0));
            (u, d12 + d2c, d2c, r.abs() < 1.0)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sweet_spot_sign_law((u, d1c, d2c, dispersive) in sign_law_case()) {
        let uc = uc_sweet_spot(u, d1c, d2c, 0.0).unwrap();
        if dispersive {
            prop_assert!(uc * u < 0.0, "dispersive: U = {u}, U_c = {uc}");
        } else {
            prop_assert!(uc * u > 0.0, "straddling: U = {u}, U_c = {uc}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn labeling_is_injective_and_above_threshold(
        w1 in 5.5..7.0f64,
        dq in 0.3..1.0f64,
        wc in 3.5..4.5f64,
        g in 0.0..0.08f64,
        g12 in 0.0..0.01f64,
    ) {
        let p = dimer([w1, wc, w1 - dq], [-0.2, 0.1, -0.2], [g, g12, -g]);
        let a = DimerAnalyzer::new(&TruncationPolicy::new(4)).unwrap();
        let opts = LabelOptions::default();
        let l = label_states(a.spectrum(&p).unwrap(), &dimer_computational_labels(), &opts).unwrap();
        let mut seen: Vec<usize> = l.assignments.iter().map(|x| x.eigen_index).collect();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), 4);
        prop_assert!(l.assignments.iter().all(|x| x.overlap >= opts.threshold));
        let eps = a.exact(&p).unwrap().epsilon;
        prop_assert!((0.0..=1.0).contains(&eps));
    }
}
