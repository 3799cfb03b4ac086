//! Flux-pulsed CZ gates: erf flattop pulses, time-ordered propagation of
//! the full circuit Hamiltonian, virtual-Z compensation, infidelity and
//! leakage, and simplex optimization of pulse parameters.
//!
//! Propagation uses a fourth-order commutator-free Magnus scheme: each step
//! samples the Hamiltonian at the two Gauss–Legendre nodes and applies two
//! exponentials of real symmetric combinations, computed by eigendecomposition.
//! This is exactly unitary and converges as `dt⁴`.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::circuit::{ej_for_frequency, quantize_modes, DeviceParams, DimerModel, DIMER_Q1, MODE_Q1};
use crate::coupler::{CouplerModeParams, FluxBranch};
use crate::error::{Error, Result};
use crate::fock::{dense_eigen, dimer_computational_labels, label_states, FockOperators, LabelOptions, Spectrum, TruncationPolicy};
use crate::numerics::{nelder_mead, NelderMeadOptions};
use crate::units::angular_to_ghz;

pub type C64 = Complex<f64>;

/// Erf flattop excursion from `omega_idle` to `omega_int` (rad/ns, ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub omega_idle: f64,
    pub omega_int: f64,
    pub tau: f64,
    pub t_gate: f64,
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_gate > 0.0) || !(self.tau > 0.0) {
            return Err(Error::Config(format!(
                "pulse needs t_gate > 0 and tau > 0, got {} and {}",
                self.t_gate, self.tau
            )));
        }
        Ok(())
    }
}

/// `ω_idle + ((ω_int − ω_idle)/4)(1 + erf((t − τ)/τ))(1 + erf((T − t − τ)/τ))`.
pub fn flattop(p: &PulseSpec, t: f64) -> f64 {
    let rise = 1.0 + libm::erf((t - p.tau) / p.tau);
    let fall = 1.0 + libm::erf((p.t_gate - t - p.tau) / p.tau);
    p.omega_idle + 0.25 * (p.omega_int - p.omega_idle) * rise * fall
}

/// Control pulses of one gate: the coupler always, qubit 1 optionally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePulses {
    pub coupler: PulseSpec,
    pub qubit1: Option<PulseSpec>,
}

impl GatePulses {
    pub fn t_gate(&self) -> f64 {
        self.coupler.t_gate
    }
}

/// Gate variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateScheme {
    /// Coupler-only flattop producing a conditional phase from ZZ.
    Cz40,
    /// Qubit 1 brought to the `101 ↔ 200` resonance while the coupler
    /// pulse drives one full oscillation.
    CzFast,
}

/// Coupler flux along a pulse, by inversion of the monotone branch.
pub fn flux_schedule(pulse: &PulseSpec, branch: &FluxBranch, times: &[f64]) -> Result<Vec<f64>> {
    pulse.validate()?;
    times.iter().map(|&t| branch.invert(flattop(pulse, t))).collect()
}

/// `1 − exp(−t_gate/τ)` with `t_gate` in ns and `τ` in µs.
pub fn decoherence_estimate(t_gate_ns: f64, tau_us: f64) -> f64 {
    -(-t_gate_ns / (tau_us * 1e3)).exp_m1()
}

/// `1 − |Tr(target† U)|/4`.
pub fn process_infidelity(u: &DMatrix<C64>, target: &DMatrix<C64>) -> f64 {
    let tr: C64 = (target.adjoint() * u).trace();
    1.0 - tr.norm() / u.nrows() as f64
}

/// `diag(1, 1, 1, −1)`.
pub fn cz_target() -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ]))
}

/// Remove the global phase and the single-qubit Z phases of a 4×4
/// computational unitary ordered `(00, 01, 10, 11)`.
pub fn virtual_z(u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    for k in 0..4 {
        let m = u[(k, k)].norm();
        if m < 0.5 {
            return Err(Error::Compensation { index: k, magnitude: m });
        }
    }
    let phase = u[(0, 0)] / u[(0, 0)].norm();
    let theta2 = (u[(1, 1)] / u[(0, 0)]).arg();
    let theta1 = (u[(2, 2)] / u[(0, 0)]).arg();
    let d = [0.0, theta2, theta1, theta1 + theta2];
    let mut out = u * phase.conj();
    for r in 0..4 {
        let f = C64::from_polar(1.0, -d[r]);
        for c in 0..4 {
            out[(r, c)] *= f;
        }
    }
    Ok(out)
}

/// Largest population lost from the computational subspace over the four
/// computational inputs (columns of `u`).
pub fn leakage(u: &DMatrix<C64>) -> f64 {
    (0..u.ncols())
        .map(|c| 1.0 - u.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .clamp(0.0, 1.0)
}

/// Outcome of one gate simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub scheme: GateScheme,
    pub pulses: GatePulses,
    /// Projected unitary, rows/columns `(000, 001, 100, 101)`, as `(re, im)`.
    pub unitary: Vec<Vec<(f64, f64)>>,
    pub unitary_compensated: Vec<Vec<(f64, f64)>>,
    pub infidelity: f64,
    pub leakage: f64,
    /// `max |ψ†ψ − I|` over the propagated computational columns.
    pub unitarity_defect: f64,
    /// Conditional phase `arg(U_11 U_00 / (U_01 U_10))` in radians.
    pub conditional_phase: f64,
    pub decoherence: f64,
    pub dt: f64,
    pub optimizer_evaluations: usize,
    pub optimizer_converged: bool,
}

fn to_pairs(m: &DMatrix<C64>) -> Vec<Vec<(f64, f64)>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| (m[(r, c)].re, m[(r, c)].im)).collect())
        .collect()
}

/// Time-dependent dimer Hamiltonian and propagator.
#[derive(Debug, Clone)]
pub struct GateSimulator {
    pub model: DimerModel,
    ops: FockOperators,
    branch: FluxBranch,
    pub idle_phi: f64,
    pub idle_params: DeviceParams,
    /// Idle eigenvectors of `000, 001, 100, 101` as columns.
    comp: DMatrix<f64>,
    idle_spectrum: Spectrum,
    /// Integration step in ns.
    pub dt: f64,
    /// Coherence time in µs used for the decoherence estimate.
    pub coherence_time_us: f64,
}

impl GateSimulator {
    pub fn new(model: DimerModel, idle_phi: f64, trunc: &TruncationPolicy, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let ops = FockOperators::new(3, trunc)?;
        let branch = FluxBranch::lower_half(&model.coupler_spec(0.0))?;
        let idle_params = model.params_at(idle_phi)?;
        let (values, vectors) = dense_eigen(ops.dense(&idle_params, false)?);
        let spectrum = Spectrum {
            values,
            vectors,
            basis: ops.basis().clone(),
        };
        let labeled = label_states(spectrum.clone(), &dimer_computational_labels(), &LabelOptions::default())?;
        let idx: Vec<usize> = labeled.assignments.iter().map(|a| a.eigen_index).collect();
        let comp = DMatrix::from_fn(spectrum.vectors.nrows(), 4, |r, c| spectrum.vectors[(r, idx[c])]);
        Ok(Self {
            model,
            ops,
            branch,
            idle_phi,
            idle_params,
            comp,
            idle_spectrum: spectrum,
            dt,
            coherence_time_us: 50.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.ops.basis().dim()
    }

    pub fn branch(&self) -> &FluxBranch {
        &self.branch
    }

    pub fn idle_spectrum(&self) -> &Spectrum {
        &self.idle_spectrum
    }

    /// Idle coupler frequency (rad/ns).
    pub fn idle_omega_c(&self) -> f64 {
        self.idle_params.modes[crate::circuit::DIMER_C].omega
    }

    /// Idle bare frequency of qubit 1 (rad/ns).
    pub fn idle_omega_q1(&self) -> f64 {
        self.idle_params.modes[DIMER_Q1].omega
    }

    /// Idle computational eigenvectors as columns `(000, 001, 100, 101)`.
    pub fn computational_basis(&self) -> &DMatrix<f64> {
        &self.comp
    }

    /// Device parameters at time `t` of the pulse sequence.
    pub fn params_at(&self, pulses: &GatePulses, t: f64) -> Result<DeviceParams> {
        let phi = self.branch.invert(flattop(&pulses.coupler, t))?;
        let coupler = self.branch.params_at(phi)?;
        self.params_with(&coupler, pulses.qubit1.map(|q| flattop(&q, t)))
    }

    fn params_with(&self, coupler: &CouplerModeParams, omega_q1: Option<f64>) -> Result<DeviceParams> {
        match omega_q1 {
            None => self.model.params_with_coupler(coupler),
            Some(w) => {
                let ej1 = ej_for_frequency(self.model.charging.get(MODE_Q1, MODE_Q1), angular_to_ghz(w))?;
                quantize_modes(&self.model.charging, [ej1, self.model.qubit_ejs[1]], coupler)
            }
        }
    }

    /// Hamiltonian matrix at time `t` (rad/ns).
    pub fn hamiltonian_at(&self, pulses: &GatePulses, t: f64) -> Result<DMatrix<f64>> {
        self.ops.dense(&self.params_at(pulses, t)?, false)
    }

    /// Propagate the columns of `psi` from `t0` to `t1`.
    pub fn propagate_interval(&self, pulses: &GatePulses, t0: f64, t1: f64, psi: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        pulses.coupler.validate()?;
        let steps = ((t1 - t0) / self.dt).round().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let s3 = 3f64.sqrt();
        let (c1, c2) = (0.5 - s3 / 6.0, 0.5 + s3 / 6.0);
        let (a1, a2) = ((3.0 - 2.0 * s3) / 12.0, (3.0 + 2.0 * s3) / 12.0);
        let mut psi = psi.clone();
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            let h1 = self.hamiltonian_at(pulses, t + c1 * h)?;
            let h2 = self.hamiltonian_at(pulses, t + c2 * h)?;
            for a in [&h1 * a2 + &h2 * a1, &h1 * a1 + &h2 * a2] {
                psi = apply_exponential(a, h, &psi);
            }
        }
        Ok(psi)
    }

    /// Full-space propagator over the whole pulse.
    pub fn full_propagator(&self, pulses: &GatePulses) -> Result<DMatrix<C64>> {
        let n = self.dim();
        let eye = DMatrix::<C64>::identity(n, n);
        self.propagate_interval(pulses, 0.0, pulses.t_gate(), &eye)
    }

    fn comp_complex(&self) -> DMatrix<C64> {
        self.comp.map(|x| C64::new(x, 0.0))
    }

    /// Propagated computational columns at the end of the gate.
    pub fn evolve_computational(&self, pulses: &GatePulses) -> Result<DMatrix<C64>> {
        self.propagate_interval(pulses, 0.0, pulses.t_gate(), &self.comp_complex())
    }

    /// Project propagated columns onto the idle computational eigenvectors.
    pub fn computational_unitary(&self, evolved: &DMatrix<C64>) -> DMatrix<C64> {
        self.comp_complex().adjoint() * evolved
    }

    pub fn simulate(&self, scheme: GateScheme, pulses: &GatePulses) -> Result<GateReport> {
        let evolved = self.evolve_computational(pulses)?;
        let gram = evolved.adjoint() * &evolved;
        let defect = (gram - DMatrix::<C64>::identity(4, 4)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let u = self.computational_unitary(&evolved);
        let comp = virtual_z(&u)?;
        let cphase = (u[(3, 3)] * u[(0, 0)] / (u[(1, 1)] * u[(2, 2)])).arg();
        Ok(GateReport {
            scheme,
            pulses: *pulses,
            unitary: to_pairs(&u),
            unitary_compensated: to_pairs(&comp),
            infidelity: process_infidelity(&comp, &cz_target()),
            leakage: leakage(&u),
            unitarity_defect: defect,
            conditional_phase: cphase,
            decoherence: decoherence_estimate(pulses.t_gate(), self.coherence_time_us),
            dt: self.dt,
            optimizer_evaluations: 0,
            optimizer_converged: false,
        })
    }
}

/// Populations of labeled idle eigenstates along a gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub labels: Vec<Vec<u8>>,
    pub times: Vec<f64>,
    /// `populations[k][j]`: label `j` at `times[k]`.
    pub populations: Vec<Vec<f64>>,
}

impl GateSimulator {
    /// Start in the idle eigenstate `initial` and record the populations of
    /// the idle eigenstates `tracked` every `sample` ns.
    pub fn population_trace(&self, pulses: &GatePulses, initial: &[u8], tracked: &[Vec<u8>], sample: f64) -> Result<PopulationTrace> {
        let mut all = tracked.to_vec();
        if !all.iter().any(|l| l.as_slice() == initial) {
            all.push(initial.to_vec());
        }
        let labeled = label_states(self.idle_spectrum.clone(), &all, &LabelOptions::default())?;
        let vectors: Vec<_> = tracked.iter().map(|l| labeled.vector(l)).collect::<Result<_>>()?;
        let start = labeled.vector(initial)?;
        let mut psi = DMatrix::from_fn(start.len(), 1, |r, _| C64::new(start[r], 0.0));
        let t_gate = pulses.t_gate();
        let n = (t_gate / sample).round().max(1.0) as usize;
        let mut times = Vec::with_capacity(n + 1);
        let mut populations = Vec::with_capacity(n + 1);
        let pops = |psi: &DMatrix<C64>| -> Vec<f64> {
            vectors
                .iter()
                .map(|v| v.iter().zip(psi.column(0).iter()).map(|(a, z)| z * *a).sum::<C64>().norm_sqr())
                .collect()
        };
        times.push(0.0);
        populations.push(pops(&psi));
        for k in 0..n {
            let (t0, t1) = (t_gate * k as f64 / n as f64, t_gate * (k + 1) as f64 / n as f64);
            psi = self.propagate_interval(pulses, t0, t1, &psi)?;
            times.push(t1);
            populations.push(pops(&psi));
        }
        Ok(PopulationTrace {
            labels: tracked.to_vec(),
            times,
            populations,
        })
    }
}

/// `exp(−i h A) ψ` for real symmetric `A`.
fn apply_exponential(a: DMatrix<f64>, h: f64, psi: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = dense_eigen(a);
    let vc = vecs.map(|x| C64::new(x, 0.0));
    let mut w = vc.transpose() * psi;
    for (r, e) in vals.iter().enumerate() {
        let f = C64::from_polar(1.0, -e * h);
        for c in 0..w.ncols() {
            w[(r, c)] *= f;
        }
    }
    vc * w
}

/// Free pulse parameters and their optimization ranges (GHz, ns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSearch {
    pub scheme: GateScheme,
    pub t_gate: f64,
    /// Coupler interaction frequency and rise time start values.
    pub coupler_int_ghz: f64,
    pub coupler_tau: f64,
    /// Qubit 1 interaction frequency and rise time start values (fast scheme).
    pub qubit_int_ghz: f64,
    pub qubit_tau: f64,
    pub leakage_weight: f64,
    pub max_evaluations: usize,
}

impl PulseSearch {
    pub fn cz40() -> Self {
        Self {
            scheme: GateScheme::Cz40,
            t_gate: 40.0,
            coupler_int_ghz: 6.0,
            coupler_tau: 3.0,
            qubit_int_ghz: 0.0,
            qubit_tau: 0.0,
            leakage_weight: 1.0,
            max_evaluations: 300,
        }
    }

    pub fn cz_fast() -> Self {
        Self {
            scheme: GateScheme::CzFast,
            t_gate: 20.0,
            coupler_int_ghz: 5.65,
            coupler_tau: 2.0,
            qubit_int_ghz: 6.30,
            qubit_tau: 1.0,
            leakage_weight: 1.0,
            max_evaluations: 300,
        }
    }

    fn x0(&self) -> Vec<f64> {
        match self.scheme {
            GateScheme::Cz40 => vec![self.coupler_int_ghz, self.coupler_tau],
            GateScheme::CzFast => vec![self.coupler_int_ghz, self.coupler_tau, self.qubit_int_ghz, self.qubit_tau],
        }
    }

    fn steps(&self) -> Vec<f64> {
        match self.scheme {
            GateScheme::Cz40 => vec![0.02, 0.5],
            GateScheme::CzFast => vec![0.02, 0.3, 0.005, 0.3],
        }
    }

    fn bounds(&self, sim: &GateSimulator) -> Vec<(f64, f64)> {
        let wc_idle = angular_to_ghz(sim.idle_omega_c());
        let (_, wc_max) = sim.branch().omega_range();
        let tau_max = 0.25 * self.t_gate;
        let coupler = (wc_idle, angular_to_ghz(wc_max));
        match self.scheme {
            GateScheme::Cz40 => vec![coupler, (0.1, tau_max)],
            GateScheme::CzFast => {
                let q1 = angular_to_ghz(sim.idle_omega_q1());
                vec![coupler, (0.1, tau_max), (q1 - 1.0, q1), (0.1, tau_max)]
            }
        }
    }

    /// Pulses for a parameter vector laid out as in the search.
    pub fn pulses(&self, sim: &GateSimulator, x: &[f64]) -> GatePulses {
        let coupler = PulseSpec {
            omega_idle: sim.idle_omega_c(),
            omega_int: crate::units::ghz_to_angular(x[0]),
            tau: x[1],
            t_gate: self.t_gate,
        };
        let qubit1 = match self.scheme {
            GateScheme::Cz40 => None,
            GateScheme::CzFast => Some(PulseSpec {
                omega_idle: sim.idle_omega_q1(),
                omega_int: crate::units::ghz_to_angular(x[2]),
                tau: x[3],
                t_gate: self.t_gate,
            }),
        };
        GatePulses { coupler, qubit1 }
    }

    /// Start pulses without optimization.
    pub fn initial_pulses(&self, sim: &GateSimulator) -> GatePulses {
        let mut x = self.x0();
        for (xi, (lo, hi)) in x.iter_mut().zip(self.bounds(sim)) {
            *xi = xi.clamp(lo, hi);
        }
        self.pulses(sim, &x)
    }
}

/// Optimization outcome: the best report and every evaluated point.
#[derive(Debug, Clone)]
pub struct PulseOptimization {
    pub report: GateReport,
    pub trace: Vec<(Vec<f64>, f64)>,
    pub x: Vec<f64>,
}

/// Nelder–Mead over the free pulse parameters, minimizing
/// `infidelity + leakage_weight · leakage`.
pub fn optimize_pulse(sim: &GateSimulator, search: &PulseSearch) -> Result<PulseOptimization> {
    let bounds = search.bounds(sim);
    let objective = |x: &[f64]| -> f64 {
        let pulses = search.pulses(sim, x);
        match sim.simulate(search.scheme, &pulses) {
            Ok(r) => r.infidelity + search.leakage_weight * r.leakage,
            Err(_) => f64::INFINITY,
        }
    };
    let opts = NelderMeadOptions {
        max_evaluations: search.max_evaluations,
        ftol: 1e-9,
        xtol: 1e-5,
    };
    let res = nelder_mead(objective, &search.x0(), &search.steps(), &bounds, &opts);
    if !res.value.is_finite() {
        return Err(Error::Convergence("no pulse in the search box produced a valid gate".into()));
    }
    let mut report = sim.simulate(search.scheme, &search.pulses(sim, &res.x))?;
    report.optimizer_evaluations = res.evaluations;
    report.optimizer_converged = res.converged;
    Ok(PulseOptimization {
        report,
        trace: res.trace,
        x: res.x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pulse() -> PulseSpec {
        PulseSpec {
            omega_idle: 32.0,
            omega_int: 37.7,
            tau: 3.0,
            t_gate: 40.0,
        }
    }

    #[test]
    fn flattop_shape() {
        let p = pulse();
        assert!((flattop(&p, 20.0) - p.omega_int).abs() < 1e-9);
        let expected0 = p.omega_idle
            + 0.25 * (p.omega_int - p.omega_idle) * (1.0 + libm::erf(-1.0)) * (1.0 + libm::erf((40.0 - 3.0) / 3.0));
        assert!((flattop(&p, 0.0) - expected0).abs() < 1e-12);
        for t in [0.0, 1.3, 7.7, 15.0] {
            assert!((flattop(&p, t) - flattop(&p, 40.0 - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn decoherence_values() {
        assert!((decoherence_estimate(40.0, 50.0) - 8e-4).abs() < 1e-6);
        assert_eq!(decoherence_estimate(0.0, 50.0), 0.0);
        assert!((decoherence_estimate(50_000.0, 50.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    fn diag(phases: [f64; 4]) -> DMatrix<C64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, phases.iter().map(|&p| C64::from_polar(1.0, p))))
    }

    #[test]
    fn single_qubit_phases_compensate_to_identity() {
        let (a, b1, b2) = (0.3, -1.1, 2.5);
        let u = diag([a, a + b2, a + b1, a + b1 + b2]);
        let c = virtual_z(&u).unwrap();
        assert!((c - DMatrix::<C64>::identity(4, 4)).iter().all(|z| z.norm() < 1e-14));
        let cz = diag([a, a + b2, a + b1, a + b1 + b2 + PI]);
        let c = virtual_z(&cz).unwrap();
        assert!(process_infidelity(&c, &cz_target()) < 1e-14);
    }

    #[test]
    fn identity_vs_cz_infidelity() {
        let eye = DMatrix::<C64>::identity(4, 4);
        assert!((process_infidelity(&eye, &cz_target()) - 0.5).abs() < 1e-15);
        assert_eq!(process_infidelity(&cz_target(), &cz_target()), 0.0);
    }

    #[test]
    fn gross_leakage_blocks_compensation() {
        let mut u = DMatrix::<C64>::identity(4, 4);
        u[(2, 2)] = C64::new(0.3, 0.0);
        assert!(matches!(virtual_z(&u), Err(Error::Compensation { index: 2, .. })));
    }

    #[test]
    fn exponential_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5]));
        let psi = DMatrix::<C64>::identity(3, 3);
        let u = apply_exponential(a, 0.7, &psi);
        for (k, e) in [1.0, -2.0, 0.5].iter().enumerate() {
            assert!((u[(k, k)] - C64::from_polar(1.0, -e * 0.7)).norm() < 1e-14);
        }
    }
}
