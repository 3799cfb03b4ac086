//! Coupler potential checks against brute-force references: a dense grid
//! for the minimum, finite differences for the expansion, and a
//! position-grid diagonalization of the full cosine potential for the
//! Duffing frequencies.

use std::f64::consts::{PI, SQRT_2};

use proptest::prelude::*;

use zzcoupler::circuit::{CircuitSpec, DimerModel};
use zzcoupler::coupler::{coupler_params, find_minimum, taylor_at, CouplerSpec};
use zzcoupler::units::{angular_to_ghz, flux_quanta_to_rad};

fn reference_coupler(phi_ext: f64) -> CouplerSpec {
    DimerModel::new(&CircuitSpec::reference()).unwrap().coupler_spec(phi_ext)
}

fn grid_minimum(spec: &CouplerSpec) -> f64 {
    let n = 20_000;
    let half = PI * SQRT_2;
    let h = 2.0 * half / n as f64;
    let i = (0..n)
        .min_by(|&a, &b| {
            let va = spec.potential(-half + a as f64 * h);
            let vb = spec.potential(-half + b as f64 * h);
            va.total_cmp(&vb)
        })
        .unwrap();
    let (mut lo, mut hi) = (-half + (i as f64 - 1.0) * h, -half + (i as f64 + 1.0) * h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spec.stationarity(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix.
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for &d in &diag[1..] {
        let prev = if q == 0.0 { 1e-300 } else { q };
        q = d - x - off * off / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` levels of `4 E_C n² + V(φ)` on a uniform grid spanning one
/// period, by bisection on Sturm counts.
fn grid_levels(spec: &CouplerSpec, k: usize) -> Vec<f64> {
    let n = 40_000;
    let phi0 = find_minimum(spec).unwrap();
    let half = PI * SQRT_2;
    let h = 2.0 * half / n as f64;
    let kin = 4.0 * spec.ec / (h * h);
    let diag: Vec<f64> = (0..n).map(|i| 2.0 * kin + spec.potential(phi0 - half + i as f64 * h)).collect();
    let (lo0, hi0) = (diag.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * kin, spec.potential(phi0) + 50.0);
    (0..k)
        .map(|level| {
            let (mut lo, mut hi) = (lo0, hi0);
            while hi - lo > 1e-11 * hi.abs().max(1.0) {
                let mid = 0.5 * (lo + hi);
                if sturm_count(&diag, -kin, mid) > level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn sturm_counts_small_matrix() {
    // eigenvalues of tridiag(-1, 2, -1) of size 3: 2 - √2, 2, 2 + √2
    let d = [2.0, 2.0, 2.0];
    assert_eq!(sturm_count(&d, -1.0, 0.5), 0);
    assert_eq!(sturm_count(&d, -1.0, 1.0), 1);
    assert_eq!(sturm_count(&d, -1.0, 3.0), 2);
    assert_eq!(sturm_count(&d, -1.0, 3.5), 3);
}

#[test]
fn duffing_frequencies_match_full_potential() {
    // at half flux the cubic term vanishes and the leading neglected term is
    // c6 φ⁶, whose first-order shifts follow from ⟨n|(b + b†)⁶|n⟩ = 15, 105, 375
    let spec = reference_coupler(PI);
    let e = grid_levels(&spec, 3);
    let (w01, anh) = (e[1] - e[0], e[2] - 2.0 * e[1] + e[0]);
    let c = coupler_params(&spec).unwrap();
    let c6 = (0.25 * spec.ej - 8.0 * spec.alpha * spec.ej) / 720.0;
    let z6 = c6 * c.phi_zpf.powi(6);
    let dw = (angular_to_ghz(c.omega) + 90.0 * z6 - w01) * 1e3;
    let du = (angular_to_ghz(c.anharmonicity) + 180.0 * z6 - anh) * 1e3;
    assert!(dw.abs() < 5.0, "omega off by {dw:.3} MHz");
    assert!(du.abs() < 5.0, "anharmonicity off by {du:.3} MHz");

    // away from half flux the cubic term adds -60 c3² φ⁶ / ω at second order
    for flux in [0.47, 0.42] {
        let spec = reference_coupler(flux_quanta_to_rad(flux));
        let e = grid_levels(&spec, 3);
        let c = coupler_params(&spec).unwrap();
        let t = taylor_at(&spec, c.phi_min);
        let w = angular_to_ghz(c.omega);
        let cubic = -60.0 * t.c3 * t.c3 * c.phi_zpf.powi(6) / w;
        let dw = (w + cubic - (e[1] - e[0])) * 1e3;
        assert!(dw.abs() < 15.0, "flux {flux}: omega off by {dw:.3} MHz");
    }
}

#[test]
fn half_flux_anharmonicity_is_positive_in_full_potential() {
    let e = grid_levels(&reference_coupler(PI), 3);
    assert!(e[2] - 2.0 * e[1] + e[0] > 0.0);
}

fn spec_strategy() -> impl Strategy<Value = CouplerSpec> {
    (20.0..60.0f64, 0.13..0.49f64, 0.05..0.3f64, 0.0..(2.0 * PI)).prop_map(|(ej, alpha, ec, phi_ext)| CouplerSpec {
        ej,
        alpha,
        ec,
        phi_ext,
        phi_cor: 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn minimum_matches_grid_and_bisection(spec in spec_strategy()) {
        let got = find_minimum(&spec).unwrap();
        let want = grid_minimum(&spec);
        prop_assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn expansion_matches_finite_differences(spec in spec_strategy()) {
        let x = find_minimum(&spec).unwrap();
        let t = taylor_at(&spec, x);
        let h = 1e-2;
        let v = |k: f64| spec.potential(x + k * h);
        let d2 = (-v(2.0) + 16.0 * v(1.0) - 30.0 * v(0.0) + 16.0 * v(-1.0) - v(-2.0)) / (12.0 * h * h);
        let d3 = (-v(3.0) + 8.0 * v(2.0) - 13.0 * v(1.0) + 13.0 * v(-1.0) - 8.0 * v(-2.0) + v(-3.0)) / (8.0 * h.powi(3));
        let d4 = (-v(3.0) + 12.0 * v(2.0) - 39.0 * v(1.0) + 56.0 * v(0.0) - 39.0 * v(-1.0) + 12.0 * v(-2.0) - v(-3.0))
            / (6.0 * h.powi(4));
        let scale = spec.ej;
        prop_assert!((t.c2 - d2 / 2.0).abs() < 1e-6 * scale);
        prop_assert!((t.c3 - d3 / 6.0).abs() < 1e-5 * scale);
        prop_assert!((t.c4 - d4 / 24.0).abs() < 1e-4 * scale);
    }

    #[test]
    fn zero_flux_has_no_cubic_term(mut spec in spec_strategy()) {
        spec.phi_ext = 0.0;
        let t = taylor_at(&spec, find_minimum(&spec).unwrap());
        prop_assert!(t.c3.abs() < 1e-9 * spec.ej);
    }
}
