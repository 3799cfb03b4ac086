//! ZZ crosstalk and state delocalization: exact values from the labeled
//! spectrum and the perturbative expressions used for design intuition.
//!
//! All perturbative formulas use the number-conserving (rotating-wave)
//! picture of the couplings, while exact values keep counter-rotating terms,
//! so the two differ at the MHz level at full coupling strength.

use serde::{Deserialize, Serialize};

use crate::circuit::{DeviceParams, DIMER_C, DIMER_Q1, DIMER_Q2};
use crate::error::{Error, Result};
use crate::fock::{
    dense_eigen, dimer_computational_labels, label_states, FockOperators, LabelOptions, LabeledSpectrum, Spectrum,
    TruncationPolicy,
};
use crate::numerics::brent_root;
use crate::units::mhz_to_angular;

/// Denominators smaller than this (rad/ns, 2π·1 MHz) are treated as poles.
pub fn pole_tolerance() -> f64 {
    mhz_to_angular(1.0)
}

fn check_pole(name: &str, value: f64) -> Result<f64> {
    if value.abs() < pole_tolerance() {
        return Err(Error::Pole {
            resonance: name.to_string(),
            magnitude: value.abs(),
        });
    }
    Ok(value)
}

/// Frequency differences and sums of a dimer (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningSet {
    pub d12: f64,
    pub d1c: f64,
    pub d2c: f64,
    pub s12: f64,
    pub s1c: f64,
    pub s2c: f64,
}

impl DetuningSet {
    pub fn new(omega1: f64, omega_c: f64, omega2: f64) -> Self {
        Self {
            d12: omega1 - omega2,
            d1c: omega1 - omega_c,
            d2c: omega2 - omega_c,
            s12: omega1 + omega2,
            s1c: omega1 + omega_c,
            s2c: omega2 + omega_c,
        }
    }

    pub fn from_params(p: &DeviceParams) -> Self {
        Self::new(p.modes[DIMER_Q1].omega, p.modes[DIMER_C].omega, p.modes[DIMER_Q2].omega)
    }
}

/// Coupler-mediated effective qubit-qubit coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoupling {
    /// Including the counter-rotating `1/Σ` terms.
    pub full: f64,
    /// Rotating-wave form, `Σ` terms dropped.
    pub rwa: f64,
}

/// `g_eff = g12 + (g1c g2c / 2)(1/Δ1c + 1/Δ2c − 1/Σ1c − 1/Σ2c)`.
pub fn g_eff_sw(p: &DeviceParams) -> Result<EffectiveCoupling> {
    let d = DetuningSet::from_params(p);
    let d1c = check_pole("Delta_1c", d.d1c)?;
    let d2c = check_pole("Delta_2c", d.d2c)?;
    let s1c = check_pole("Sigma_1c", d.s1c)?;
    let s2c = check_pole("Sigma_2c", d.s2c)?;
    let (g12, g1c, g2c) = (p.g12(), p.g1c(), p.g2c());
    let half = 0.5 * g1c * g2c;
    Ok(EffectiveCoupling {
        full: g12 + half * (1.0 / d1c + 1.0 / d2c - 1.0 / s1c - 1.0 / s2c),
        rwa: g12 + half * (1.0 / d1c + 1.0 / d2c),
    })
}

/// Which root of `g_eff(ω_c) = 0` minimizes the perturbative delocalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeffBranch {
    /// Coupler above both qubits.
    Plus,
    /// Coupler below both qubits.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeffZeros {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub branch: GeffBranch,
}

impl GeffZeros {
    pub fn chosen(&self) -> f64 {
        match self.branch {
            GeffBranch::Plus => self.omega_plus,
            GeffBranch::Minus => self.omega_minus,
        }
    }
}

/// Coupler frequencies at which the rotating-wave `g_eff` vanishes.
///
/// The branch rule assumes `Δ12 > 0`; for `Δ12 < 0` the qubits are swapped
/// internally, which leaves the formula unchanged.
pub fn geff_zeros(p: &DeviceParams) -> Result<GeffZeros> {
    let (g12, g1c, g2c) = (p.g12(), p.g1c(), p.g2c());
    if g12 == 0.0 {
        return Err(Error::Degenerate("g12 = 0: no finite coupler frequency cancels g_eff".into()));
    }
    let d = DetuningSet::from_params(p);
    let ratio = g1c * g2c / g12;
    let root = (d.d12 * d.d12 + ratio * ratio).sqrt();
    let branch = if g12 * g1c * g2c > 0.0 {
        GeffBranch::Plus
    } else {
        GeffBranch::Minus
    };
    Ok(GeffZeros {
        omega_plus: 0.5 * (d.s12 + ratio + root),
        omega_minus: 0.5 * (d.s12 + ratio - root),
        branch,
    })
}

/// Zero of the full `g_eff(ω_c)` (counter-rotating terms kept) on the branch
/// chosen by [`geff_zeros`], with couplings and qubit frequencies held fixed.
pub fn geff_zero_full(p: &DeviceParams) -> Result<f64> {
    let zeros = geff_zeros(p)?;
    let (w1, w2) = (p.modes[DIMER_Q1].omega, p.modes[DIMER_Q2].omega);
    let (g12, g1c, g2c) = (p.g12(), p.g1c(), p.g2c());
    let f = |w: f64| g12 + 0.5 * g1c * g2c * (1.0 / (w1 - w) + 1.0 / (w2 - w) - 1.0 / (w1 + w) - 1.0 / (w2 + w));
    let (lo, hi) = (w1.min(w2), w1.max(w2));
    let margin = 1e-9 * hi;
    let bracket = match zeros.branch {
        GeffBranch::Minus => (margin, lo - margin),
        GeffBranch::Plus => (hi + margin, 20.0 * hi),
    };
    brent_root(f, bracket.0, bracket.1, 1e-12, 200)
}

/// Leading-order delocalization,
/// `max[(g12 + g1c g2c/Δ1c)², (g12 + g1c g2c/Δ2c)²] / Δ12²`.
pub fn epsilon_perturbative(p: &DeviceParams) -> Result<f64> {
    let d = DetuningSet::from_params(p);
    let d12 = check_pole("Delta_12", d.d12)?;
    let d1c = check_pole("Delta_1c", d.d1c)?;
    let d2c = check_pole("Delta_2c", d.d2c)?;
    let (g12, g1c, g2c) = (p.g12(), p.g1c(), p.g2c());
    let f1 = (g12 + g1c * g2c / d1c).powi(2);
    let f2 = (g12 + g1c * g2c / d2c).powi(2);
    Ok(f1.max(f2) / (d12 * d12))
}

/// Second-, third- and fourth-order contributions to ζ (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZzTerms {
    pub second: f64,
    pub third: f64,
    pub fourth: f64,
}

impl ZzTerms {
    pub fn sum(&self) -> f64 {
        self.second + self.third + self.fourth
    }
}

/// Perturbative ZZ coupling from the dimer parameters.
pub fn zz_perturbative(p: &DeviceParams) -> Result<ZzTerms> {
    let u1 = p.modes[DIMER_Q1].anharmonicity;
    let u2 = p.modes[DIMER_Q2].anharmonicity;
    let uc = p.modes[DIMER_C].anharmonicity;
    zz_perturbative_terms(&DetuningSet::from_params(p), p.g12(), p.g1c(), p.g2c(), u1, u2, uc)
}

/// Perturbative ZZ terms for explicit detunings, couplings and anharmonicities.
pub fn zz_perturbative_terms(
    d: &DetuningSet,
    g12: f64,
    g1c: f64,
    g2c: f64,
    u1: f64,
    u2: f64,
    uc: f64,
) -> Result<ZzTerms> {
    let d12 = check_pole("Delta_12", d.d12)?;
    let d21 = -d12;
    let d1c = check_pole("Delta_1c", d.d1c)?;
    let d2c = check_pole("Delta_2c", d.d2c)?;
    let a = check_pole("Delta_12 - U_2", d12 - u2)?;
    let b = check_pole("Delta_21 - U_1", d21 - u1)?;
    let c = check_pole("Delta_1c + Delta_2c - U_c", d1c + d2c - uc)?;

    let second = g12 * g12 * (2.0 / a + 2.0 / b);
    let third = g12
        * g1c
        * g2c
        * (4.0 / (b * d2c) + 4.0 / (a * d1c) + 2.0 / (d1c * d2c) - 2.0 / (d21 * d2c) - 2.0 / (d12 * d1c));
    let fourth = g1c * g1c * g2c * g2c
        * ((1.0 / d1c + 1.0 / d2c).powi(2) * 2.0 / c
            - (1.0 / d1c).powi(2) * (1.0 / d12 + 1.0 / d2c - 2.0 / a)
            - (1.0 / d2c).powi(2) * (1.0 / d21 + 1.0 / d1c - 2.0 / b));
    Ok(ZzTerms { second, third, fourth })
}

/// Coupler anharmonicity at which the perturbative ZZ vanishes on the
/// `g_eff = 0` manifold, for qubit anharmonicities `U1 = (1+δ)U`,
/// `U2 = (1−δ)U`.
pub fn uc_sweet_spot(u: f64, d1c: f64, d2c: f64, delta: f64) -> Result<f64> {
    let d12 = check_pole("Delta_12", d1c - d2c)?;
    let dsum = check_pole("Delta_1c + Delta_2c", d1c + d2c)?;
    let r = u / d12;
    let bracket = 1.0 - r * r - u / (2.0 * dsum) + 2.0 * delta * r + 2.0 * delta * delta * r * r;
    if bracket.abs() < 1e-12 {
        return Err(Error::Pole {
            resonance: "sweet-spot bracket".into(),
            magnitude: bracket.abs(),
        });
    }
    Ok(-0.5 * u / bracket)
}

/// `ζ = E11 − E10 − E01 + E00` from labels ordered `[00, 01, 10, 11]`.
pub fn zz_from_labels(l: &LabeledSpectrum, labels: &[Vec<u8>; 4]) -> Result<f64> {
    Ok(l.energy(&labels[3])? - l.energy(&labels[2])? - l.energy(&labels[1])? + l.energy(&labels[0])?)
}

/// `ε = max(|⟨ã|b⟩|², |⟨b̃|a⟩|²)` for the two single-excitation labels.
pub fn delocalization_from_labels(l: &LabeledSpectrum, a: &[u8], b: &[u8]) -> Result<f64> {
    Ok(l.overlap(a, b)?.max(l.overlap(b, a)?))
}

fn dimer_labels() -> [Vec<u8>; 4] {
    let v = dimer_computational_labels();
    [v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()]
}

/// Exact ζ of a labeled dimer spectrum.
pub fn zz_exact(l: &LabeledSpectrum) -> Result<f64> {
    zz_from_labels(l, &dimer_labels())
}

/// Exact ε of a labeled dimer spectrum.
pub fn delocalization_exact(l: &LabeledSpectrum) -> Result<f64> {
    delocalization_from_labels(l, &[1, 0, 0], &[0, 0, 1])
}

/// Exact ζ and ε at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactCrosstalk {
    pub zeta: f64,
    pub epsilon: f64,
}

/// Reusable exact evaluator for dimers at a fixed truncation.
#[derive(Debug, Clone)]
pub struct DimerAnalyzer {
    ops: FockOperators,
    pub labels: LabelOptions,
    pub rwa: bool,
}

impl DimerAnalyzer {
    pub fn new(trunc: &TruncationPolicy) -> Result<Self> {
        Ok(Self {
            ops: FockOperators::new(3, trunc)?,
            labels: LabelOptions::default(),
            rwa: false,
        })
    }

    pub fn operators(&self) -> &FockOperators {
        &self.ops
    }

    pub fn spectrum(&self, p: &DeviceParams) -> Result<Spectrum> {
        let (values, vectors) = dense_eigen(self.ops.dense(p, self.rwa)?);
        Ok(Spectrum {
            values,
            vectors,
            basis: self.ops.basis().clone(),
        })
    }

    /// Spectrum with the four computational labels assigned.
    pub fn labeled(&self, p: &DeviceParams) -> Result<LabeledSpectrum> {
        label_states(self.spectrum(p)?, &dimer_computational_labels(), &self.labels)
    }

    pub fn exact(&self, p: &DeviceParams) -> Result<ExactCrosstalk> {
        let l = self.labeled(p)?;
        Ok(ExactCrosstalk {
            zeta: zz_exact(&l)?,
            epsilon: delocalization_exact(&l)?,
        })
    }

    pub fn report(&self, p: &DeviceParams) -> Result<CrosstalkReport> {
        let exact = self.exact(p)?;
        let mut warnings = p.warnings.clone();
        let zeta_pert = keep_ok(zz_perturbative(p), "zeta perturbative", &mut warnings);
        let epsilon_pert = keep_ok(epsilon_perturbative(p), "epsilon perturbative", &mut warnings);
        let g_eff = keep_ok(g_eff_sw(p), "g_eff", &mut warnings);
        Ok(CrosstalkReport {
            zeta_exact: exact.zeta,
            epsilon_exact: exact.epsilon,
            zeta_pert,
            epsilon_pert,
            g_eff,
            warnings,
        })
    }
}

fn keep_ok<T>(r: Result<T>, what: &str, warnings: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("{what}: {e}"));
            None
        }
    }
}

/// Exact and perturbative crosstalk at one operating point (rad/ns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkReport {
    pub zeta_exact: f64,
    pub epsilon_exact: f64,
    pub zeta_pert: Option<ZzTerms>,
    pub epsilon_pert: Option<f64>,
    pub g_eff: Option<EffectiveCoupling>,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Coupling, ModeKind, ModeParams};
    use crate::units::ghz_to_angular;

    fn dimer(w1: f64, wc: f64, w2: f64, g12: f64, g1c: f64, g2c: f64) -> DeviceParams {
        let m = |w: f64, u: f64| ModeParams {
            kind: ModeKind::Qubit,
            omega: ghz_to_angular(w),
            anharmonicity: ghz_to_angular(u),
            cubic: 0.0,
            n_zpf: 1.0,
            phi_zpf: 1.0,
        };
        DeviceParams {
            modes: vec![m(w1, -0.21), m(wc, 0.12), m(w2, -0.21)],
            couplings: vec![
                Coupling { a: 0, b: 1, g: ghz_to_angular(g1c) },
                Coupling { a: 0, b: 2, g: ghz_to_angular(g12) },
                Coupling { a: 1, b: 2, g: ghz_to_angular(g2c) },
            ],
            warnings: vec![],
        }
    }

    #[test]
    fn detuning_identity() {
        let d = DetuningSet::new(3.1, 7.4, 1.9);
        assert!((d.d12 - (d.d1c - d.d2c)).abs() < 1e-15);
    }

    #[test]
    fn geff_rwa_vanishes_on_condition() {
        let mut p = dimer(6.6, 5.1, 6.1, 0.0, 0.14, -0.137);
        let d = DetuningSet::from_params(&p);
        let g12 = -(p.g1c() * p.g2c() / 2.0) * (1.0 / d.d1c + 1.0 / d.d2c);
        p.set_coupling(0, 2, g12);
        assert!(g_eff_sw(&p).unwrap().rwa.abs() < 1e-15);
    }

    #[test]
    fn geff_sign_flip_of_g2c() {
        let p = dimer(6.6, 5.1, 6.1, 0.0, 0.14, -0.137);
        let mut q = p.clone();
        q.set_coupling(1, 2, -p.g2c());
        let (a, b) = (g_eff_sw(&p).unwrap(), g_eff_sw(&q).unwrap());
        assert!((a.full + b.full).abs() < 1e-15);
    }

    #[test]
    fn geff_zero_branches() {
        let p = dimer(6.6, 5.1, 6.1, 0.0143, 0.143, -0.1376);
        let z = geff_zeros(&p).unwrap();
        assert_eq!(z.branch, GeffBranch::Minus);
        assert!(z.chosen() < p.modes[2].omega);
        let q = dimer(6.6, 5.1, 6.1, 0.0143, 0.143, 0.1376);
        let z = geff_zeros(&q).unwrap();
        assert_eq!(z.branch, GeffBranch::Plus);
        assert!(z.chosen() > q.modes[0].omega);
        let r = dimer(6.6, 5.1, 6.1, 0.0, 0.143, 0.1376);
        assert!(matches!(geff_zeros(&r), Err(Error::Degenerate(_))));
    }

    #[test]
    fn epsilon_at_zeros_matches_closed_form() {
        let p = dimer(6.6, 5.1, 6.1, 0.0143, 0.143, -0.1376);
        let z = geff_zeros(&p).unwrap();
        let (g12, g1c, g2c) = (p.g12(), p.g1c(), p.g2c());
        let d12 = p.modes[0].omega - p.modes[2].omega;
        let ratio = g1c * g2c / g12;
        let root = (d12 * d12 + ratio * ratio).sqrt();
        for (w, sign) in [(z.omega_plus, 1.0), (z.omega_minus, -1.0)] {
            let mut q = p.clone();
            q.modes[1].omega = w;
            let expect = (g12 / (ratio + sign * root)).powi(2);
            let got = epsilon_perturbative(&q).unwrap();
            assert!((got - expect).abs() < 1e-12 * expect.max(1e-12), "{got} vs {expect}");
        }
    }

    #[test]
    fn direct_coupling_only() {
        let p = dimer(6.6, 5.1, 6.1, 0.02, 0.0, 0.0);
        let z = zz_perturbative(&p).unwrap();
        let d12 = p.modes[0].omega - p.modes[2].omega;
        let (u1, u2) = (p.modes[0].anharmonicity, p.modes[2].anharmonicity);
        let g = p.g12();
        let expect = 2.0 * g * g * (1.0 / (d12 - u2) + 1.0 / (-d12 - u1));
        assert!((z.sum() - expect).abs() < 1e-15);
        assert_eq!(z.third, 0.0);
        assert_eq!(z.fourth, 0.0);
    }

    #[test]
    fn poles_are_named() {
        // Δ12 = U2 resonance
        let p = dimer(6.39, 5.1, 6.6, 0.02, 0.1, -0.1);
        match zz_perturbative(&p) {
            Err(Error::Pole { resonance, .. }) => assert_eq!(resonance, "Delta_12 - U_2"),
            other => panic!("{other:?}"),
        }
        let p = dimer(6.6, 6.6, 6.1, 0.02, 0.1, -0.1);
        assert!(matches!(g_eff_sw(&p), Err(Error::Pole { .. })));
        // Δ1c + Δ2c = U_c
        let p = dimer(6.6, 6.29, 6.1, 0.02, 0.1, -0.1);
        match zz_perturbative(&p) {
            Err(Error::Pole { resonance, .. }) => assert_eq!(resonance, "Delta_1c + Delta_2c - U_c"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweet_spot_delta_zero_limit() {
        let (u, d1c, d2c) = (-1.3, 9.4, 6.3);
        let r = u / (d1c - d2c);
        let eq5 = -0.5 * u / (1.0 - r * r - u / (2.0 * (d1c + d2c)));
        assert_eq!(uc_sweet_spot(u, d1c, d2c, 0.0).unwrap(), eq5);
    }

    #[test]
    fn uncoupled_exact_crosstalk_vanishes() {
        let p = dimer(6.6, 5.1, 6.1, 0.0, 0.0, 0.0);
        let a = DimerAnalyzer::new(&TruncationPolicy::new(4)).unwrap();
        let e = a.exact(&p).unwrap();
        assert_eq!(e.epsilon, 0.0);
        assert!(e.zeta.abs() < 1e-12);
    }
}
