//! Charging energies and couplings against exact rational arithmetic and
//! randomized circuit properties.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use zzcoupler::chain::{ChainModel, ChainSpec};
use zzcoupler::circuit::{
    basis_transform, build_capacitance_matrix, transform_and_invert, Capacitances, CircuitSpec, DimerModel,
};
use zzcoupler::units::{angular_to_mhz, CHARGING_GHZ_FF};

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// Gauss-Jordan inverse over the rationals.
fn rational_inverse(m: &DMatrix<f64>) -> Vec<Vec<BigRational>> {
    let n = m.nrows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..n).map(|j| rational(m[(i, j)])).collect();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular");
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// `S C⁻¹ Sᵀ` with the inverse done exactly and only the rotation in floats.
fn oracle_charging(c: &DMatrix<f64>, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let inv = rational_inverse(c);
    let n = c.nrows();
    let inv = DMatrix::from_fn(n, n, |i, j| inv[i][j].to_f64().unwrap());
    let s = basis_transform(n, pairs);
    &s * inv * s.transpose() * CHARGING_GHZ_FF
}

#[test]
fn dimer_charging_matches_exact_inverse() {
    let cap = build_capacitance_matrix(&CircuitSpec::reference()).unwrap();
    let expected = oracle_charging(&cap.matrix, &cap.coupler_pairs);
    let got = transform_and_invert(&cap).unwrap().matrix;
    assert!((&got - &expected).amax() < 1e-12 * expected.amax(), "{got} vs {expected}");
}

#[test]
fn chain_charging_matches_exact_inverse() {
    let spec = ChainSpec::reference();
    let model = ChainModel::new(&spec).unwrap();
    let n = 3 * spec.len() - 2;
    let mut c = DMatrix::<f64>::zeros(n, n);
    let mut between = |a: usize, b: usize, v: f64| {
        c[(a, a)] += v;
        c[(b, b)] += v;
        c[(a, b)] -= v;
        c[(b, a)] -= v;
    };
    let mut pairs = Vec::new();
    let mut ground = vec![0.0; n];
    for (i, &s) in model.shunts.iter().enumerate() {
        ground[ChainSpec::qubit_node(i)] += s;
    }
    for (k, link) in spec.links.iter().enumerate() {
        let (a, b) = ChainSpec::coupler_nodes(k);
        let (qa, qb) = (ChainSpec::qubit_node(k), ChainSpec::qubit_node(k + 1));
        between(qa, a, link.caps.c1c);
        between(b, qb, link.caps.c2c);
        between(qa, qb, link.caps.c12);
        between(a, b, link.caps.c_c);
        ground[a] += link.caps.c_g;
        ground[b] += link.caps.c_g;
        pairs.push((a, b));
    }
    for (i, g) in ground.into_iter().enumerate() {
        c[(i, i)] += g;
    }
    let expected = oracle_charging(&c, &pairs);
    assert!((&model.charging.matrix - &expected).amax() < 1e-12 * expected.amax());
}

#[test]
fn exact_inverse_of_small_integer_matrix() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    let inv = rational_inverse(&m);
    let third = BigRational::new(BigInt::from(1), BigInt::from(3));
    assert_eq!(inv[0][0], &third * BigInt::from(2));
    assert_eq!(inv[0][1].abs(), third);
}

#[test]
fn reference_couplings() {
    let model = DimerModel::new(&CircuitSpec::reference()).unwrap();
    let p = model.params_at(std::f64::consts::PI).unwrap();
    for (got, want) in [(p.g12(), 14.3237), (p.g1c(), 142.867), (p.g2c(), -137.522)] {
        assert!((angular_to_mhz(got) - want).abs() < 2e-3 * want.abs(), "{} vs {want}", angular_to_mhz(got));
    }
}

fn caps_strategy() -> impl Strategy<Value = Capacitances> {
    (
        40.0..150.0f64,
        40.0..150.0f64,
        10.0..60.0f64,
        30.0..120.0f64,
        0.05..0.8f64,
        3.0..12.0f64,
        3.0..12.0f64,
    )
        .prop_map(|(c1, c2, c_c, c_g, c12, c1c, c2c)| Capacitances {
            c1,
            c2,
            c_c,
            c_g,
            c12,
            c1c,
            c2c,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn charging_matrix_is_symmetric_positive_definite(caps in caps_strategy()) {
        let mut spec = CircuitSpec::reference();
        spec.caps = caps;
        let e = transform_and_invert(&build_capacitance_matrix(&spec).unwrap()).unwrap().matrix;
        prop_assert!((&e - e.transpose()).amax() == 0.0);
        prop_assert!(e.clone().cholesky().is_some());
        prop_assert!((0..4).all(|i| e[(i, i)] > 0.0));
    }

    #[test]
    fn scaling_all_capacitances_scales_charging_inversely(caps in caps_strategy(), k in 0.5..3.0f64) {
        let mut a = CircuitSpec::reference();
        a.caps = caps;
        let mut b = a;
        b.caps = caps.scaled(k);
        let ea = transform_and_invert(&build_capacitance_matrix(&a).unwrap()).unwrap().matrix;
        let eb = transform_and_invert(&build_capacitance_matrix(&b).unwrap()).unwrap().matrix;
        prop_assert!((eb * k - &ea).amax() < 1e-12 * ea.amax());
    }

    #[test]
    fn basis_transform_is_orthogonal(n in 2usize..9, a in 0usize..8, b in 0usize..8) {
        prop_assume!(a < n && b < n && a != b);
        let s = basis_transform(n, &[(a, b)]);
        prop_assert!((&s * s.transpose() - DMatrix::<f64>::identity(n, n)).amax() < 1e-15);
    }

    #[test]
    fn coupler_couplings_have_opposite_signs(caps in caps_strategy()) {
        let mut spec = CircuitSpec::reference();
        spec.caps = caps;
        let p = DimerModel::new(&spec).unwrap().params_at(std::f64::consts::PI).unwrap();
        prop_assert!(p.g1c() * p.g2c() < 0.0);
        prop_assert!(p.modes.iter().all(|m| m.omega > 0.0));
    }
}
