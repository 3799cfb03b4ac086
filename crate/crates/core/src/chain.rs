//! Linear chains of transmons joined by C-shunt flux couplers.
//!
//! Node order is `Q0, C01a, C01b, Q1, C12a, C12b, Q2, …`; after the coupler
//! rotation and dropping the `+` modes the retained modes are
//! `Q0, C01, Q1, C12, Q2, …`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    transform_and_invert, Capacitances, ChargingEnergyMatrix, CircuitSpec, CapacitanceNetwork, CouplerJunctions,
    DeviceParams, DimerModel, ModeSource, QubitJosephson, quantize_network, DIMER_C,
};
use crate::coupler::{coupler_params, CouplerSpec};
use crate::crosstalk::{delocalization_from_labels, zz_from_labels, DimerAnalyzer};
use crate::error::{Error, Result};
use crate::fock::{diagonalize_lowest, label_states, FockOperators, LabelOptions, TruncationPolicy};
use crate::idle::{find_idle_flux, IdleObjective, IdleSearchOptions};
use crate::numerics::{brent_minimize, brent_root};

/// One coupler link between neighboring qubits. Only the coupler and
/// coupling entries of `caps` are used; qubit shunts live in [`ChainSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub caps: Capacitances,
    pub coupler: CouplerJunctions,
}

/// Coupler E_J (GHz) of the outer links of [`ChainSpec::reference`].
pub const REFERENCE_OUTER_EJ: [f64; 2] = [42.2733, 44.6513];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub qubits: Vec<QubitJosephson>,
    /// Qubit shunt capacitances in fF before any adjustment.
    pub shunts: Vec<f64>,
    pub links: Vec<ChainLink>,
    /// Retune every qubit shunt so its charging energy matches the qubit's
    /// value in its isolated dimer.
    pub adjust_shunts: bool,
}

impl ChainSpec {
    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Uniform chain: every link uses `link`, qubits calibrated to `freqs_ghz`.
    pub fn uniform(freqs_ghz: &[f64], link: ChainLink, shunt: f64) -> Self {
        Self {
            qubits: freqs_ghz.iter().map(|&ghz| QubitJosephson::TargetFrequency { ghz }).collect(),
            shunts: vec![shunt; freqs_ghz.len()],
            links: vec![link; freqs_ghz.len().saturating_sub(1)],
            adjust_shunts: true,
        }
    }

    /// The four-qubit reference chain at 5.9, 6.6, 6.1, 6.5 GHz. The middle
    /// link is the reference dimer; the outer couplers use α = 0.27 with E_J
    /// retuned (see [`tune_coupler_ej`]) so each isolated pair has ζ = 0 at its
    /// ε minimum.
    pub fn reference() -> Self {
        let dimer = CircuitSpec::reference();
        let link = |alpha: f64, ej: f64| ChainLink {
            caps: dimer.caps,
            coupler: CouplerJunctions {
                ej,
                alpha,
                ..dimer.coupler
            },
        };
        let mut spec = Self::uniform(&[5.9, 6.6, 6.1, 6.5], link(dimer.coupler.alpha, dimer.coupler.ej), dimer.caps.c1);
        spec.links[0] = link(0.27, REFERENCE_OUTER_EJ[0]);
        spec.links[2] = link(0.27, REFERENCE_OUTER_EJ[1]);
        spec
    }

    fn validate(&self) -> Result<()> {
        let n = self.qubits.len();
        if n < 2 {
            return Err(Error::InvalidSpec(format!("a chain needs at least 2 qubits, got {n}")));
        }
        if self.shunts.len() != n || self.links.len() != n - 1 {
            return Err(Error::InvalidSpec(format!(
                "{n} qubits need {n} shunts and {} links, got {} and {}",
                n - 1,
                self.shunts.len(),
                self.links.len()
            )));
        }
        if let Some(c) = self.shunts.iter().find(|&&c| !(c > 0.0)) {
            return Err(Error::InvalidSpec(format!("qubit shunt must be positive, got {c}")));
        }
        Ok(())
    }

    /// The isolated dimer formed by link `k` and its two qubits.
    pub fn isolated_dimer(&self, k: usize) -> CircuitSpec {
        let link = &self.links[k];
        let mut caps = link.caps;
        caps.c1 = self.shunts[k];
        caps.c2 = self.shunts[k + 1];
        CircuitSpec {
            caps,
            qubits: [self.qubits[k], self.qubits[k + 1]],
            coupler: link.coupler,
        }
    }

    pub fn qubit_node(i: usize) -> usize {
        3 * i
    }

    pub fn coupler_nodes(k: usize) -> (usize, usize) {
        (3 * k + 1, 3 * k + 2)
    }

    /// Mode index of qubit `i` in the chain's [`DeviceParams`].
    pub fn qubit_mode(i: usize) -> usize {
        2 * i
    }

    /// Mode index of the coupler on link `k`.
    pub fn coupler_mode(k: usize) -> usize {
        2 * k + 1
    }
}

fn charging_for(spec: &ChainSpec, shunts: &[f64]) -> Result<ChargingEnergyMatrix> {
    let n = spec.len();
    let nodes = 3 * n - 2;
    let mut net = CapacitanceNetwork::new(nodes);
    for (i, &c) in shunts.iter().enumerate() {
        net.to_ground(ChainSpec::qubit_node(i), c);
    }
    let mut pairs = Vec::new();
    for (k, link) in spec.links.iter().enumerate() {
        let (a, b) = ChainSpec::coupler_nodes(k);
        let (qa, qb) = (ChainSpec::qubit_node(k), ChainSpec::qubit_node(k + 1));
        let c = &link.caps;
        for (name, v) in [("C_C", c.c_c), ("C_g", c.c_g)] {
            if !(v > 0.0) {
                return Err(Error::InvalidSpec(format!("link {k}: {name} must be positive, got {v}")));
            }
        }
        net.to_ground(a, c.c_g)
            .to_ground(b, c.c_g)
            .between(qa, a, c.c1c)
            .between(b, qb, c.c2c)
            .between(qa, qb, c.c12)
            .between(a, b, c.c_c);
        pairs.push((a, b));
    }
    transform_and_invert(&net.finish(pairs))
}

/// Flux-independent chain data: charging energies and qubit Josephson energies.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub spec: ChainSpec,
    /// Shunts after adjustment (fF).
    pub shunts: Vec<f64>,
    pub charging: ChargingEnergyMatrix,
    pub qubit_ejs: Vec<f64>,
}

impl ChainModel {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.len();
        let mut shunts = spec.shunts.clone();
        if spec.adjust_shunts {
            let targets: Vec<f64> = (0..n).map(|i| reference_ec(spec, i)).collect::<Result<_>>()?;
            for _sweep in 0..10 {
                let mut worst = 0.0f64;
                for i in 0..n {
                    let node = ChainSpec::qubit_node(i);
                    let target = targets[i];
                    let f = |c: f64| {
                        let mut s = shunts.clone();
                        s[i] = c;
                        charging_for(spec, &s).map(|e| e.get(node, node) - target).unwrap_or(f64::NAN)
                    };
                    let c0 = shunts[i];
                    shunts[i] = brent_root(f, c0 / 3.0, 3.0 * c0, 1e-12, 200)?;
                    worst = worst.max((shunts[i] - c0).abs() / c0);
                }
                if worst < 1e-12 {
                    break;
                }
            }
        }
        let charging = charging_for(spec, &shunts)?;
        let qubit_ejs = (0..n)
            .map(|i| {
                let node = ChainSpec::qubit_node(i);
                spec.qubits[i].effective_ej(charging.get(node, node))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            spec: spec.clone(),
            shunts,
            charging,
            qubit_ejs,
        })
    }

    pub fn qubit_ec(&self, i: usize) -> f64 {
        let node = ChainSpec::qubit_node(i);
        self.charging.get(node, node)
    }

    pub fn coupler_spec(&self, k: usize, phi_ext: f64) -> CouplerSpec {
        let (_, b) = ChainSpec::coupler_nodes(k);
        let j = &self.spec.links[k].coupler;
        CouplerSpec {
            ej: j.ej,
            alpha: j.alpha,
            ec: self.charging.get(b, b),
            phi_ext,
            phi_cor: j.phi_cor,
        }
    }

    /// Device parameters with coupler fluxes `fluxes` (one per link, radians).
    pub fn params_at(&self, fluxes: &[f64]) -> Result<DeviceParams> {
        let n = self.spec.len();
        if fluxes.len() != n - 1 {
            return Err(Error::InvalidSpec(format!("{} fluxes for {} links", fluxes.len(), n - 1)));
        }
        let mut modes = Vec::with_capacity(2 * n - 1);
        for i in 0..n {
            modes.push((ChainSpec::qubit_node(i), ModeSource::Transmon { ej_ghz: self.qubit_ejs[i] }));
            if i + 1 < n {
                let c = coupler_params(&self.coupler_spec(i, fluxes[i]))?;
                modes.push((ChainSpec::coupler_nodes(i).1, ModeSource::Coupler(c)));
            }
        }
        quantize_network(&self.charging, &modes)
    }
}

/// Charging energy of qubit `i` in its isolated dimer.
fn reference_ec(spec: &ChainSpec, i: usize) -> Result<f64> {
    let (k, mode) = if i == 0 {
        (0, crate::circuit::MODE_Q1)
    } else {
        (i - 1, crate::circuit::MODE_Q2)
    };
    let model = DimerModel::new(&spec.isolated_dimer(k))?;
    Ok(model.charging.get(mode, mode))
}

/// Bare labels for a pair `(k, k+1)` with every other mode in its ground state,
/// ordered `[00, 01, 10, 11]`.
pub fn pair_labels(n_qubits: usize, k: usize) -> [Vec<u8>; 4] {
    let n_modes = 2 * n_qubits - 1;
    let make = |a: u8, b: u8| {
        let mut v = vec![0u8; n_modes];
        v[ChainSpec::qubit_mode(k)] = a;
        v[ChainSpec::qubit_mode(k + 1)] = b;
        v
    };
    [make(0, 0), make(0, 1), make(1, 0), make(1, 1)]
}

/// Exact pair crosstalk inside a chain.
#[derive(Debug, Clone)]
pub struct ChainAnalyzer {
    ops: FockOperators,
    n_qubits: usize,
    /// Eigenpairs requested from the sparse solver.
    pub eigen_count: usize,
    /// Dimension at or below which dense diagonalization is used.
    pub dense_limit: usize,
    pub labels: LabelOptions,
}

impl ChainAnalyzer {
    pub fn new(n_qubits: usize, trunc: &TruncationPolicy) -> Result<Self> {
        let n_modes = 2 * n_qubits - 1;
        // every state with at most two excitations, plus margin
        let eigen_count = 1 + n_modes + n_modes * (n_modes + 1) / 2 + 4;
        Ok(Self {
            ops: FockOperators::new(n_modes, trunc)?,
            n_qubits,
            eigen_count,
            dense_limit: 400,
            labels: LabelOptions::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.ops.basis().dim()
    }

    pub fn operators(&self) -> &FockOperators {
        &self.ops
    }

    /// ζ and ε of pair `(k, k+1)`, spectators in their ground states.
    pub fn pair_crosstalk(&self, p: &DeviceParams, k: usize) -> Result<(f64, f64)> {
        let h = self.ops.hamiltonian(p, false)?;
        let spectrum = diagonalize_lowest(&h, self.eigen_count, self.dense_limit)?;
        let labels = pair_labels(self.n_qubits, k);
        let l = label_states(spectrum, &labels, &self.labels)?;
        Ok((zz_from_labels(&l, &labels)?, delocalization_from_labels(&l, &labels[2], &labels[1])?))
    }
}

/// One flux point of a pair scan (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScanPoint {
    pub phi_ext: f64,
    pub omega_c: f64,
    pub zeta_chain: Option<f64>,
    pub eps_chain: Option<f64>,
    pub zeta_dimer: Option<f64>,
    pub eps_dimer: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainZero {
    pub phi_ext: f64,
    pub omega_c: f64,
    pub zeta: f64,
    pub epsilon: f64,
}

/// Pair scan and idle points in the chain and in isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub link: usize,
    pub points: Vec<PairScanPoint>,
    /// ε-minimizing flux and coupler frequency in the chain.
    pub chain_idle_phi: f64,
    pub chain_idle_omega_c: f64,
    pub chain_idle_zeta: f64,
    pub chain_idle_eps: f64,
    /// Zero of the chain ζ nearest the ε minimum, when the sweep brackets one.
    pub chain_zero: Option<ChainZero>,
    pub dimer_idle_phi: f64,
    pub dimer_idle_omega_c: f64,
    pub dimer_idle_zeta: f64,
    pub dimer_idle_eps: f64,
}

/// Idle flux of every link's isolated dimer (ε-min within `window`).
pub fn dimer_idle_fluxes(spec: &ChainSpec, trunc: &TruncationPolicy, window: (f64, f64)) -> Result<Vec<f64>> {
    let analyzer = DimerAnalyzer::new(trunc)?;
    (0..spec.links.len())
        .into_par_iter()
        .map(|k| {
            let model = DimerModel::new(&spec.isolated_dimer(k))?;
            let r = find_idle_flux(&model, &analyzer, &IdleSearchOptions::new(window, IdleObjective::MinEpsilon))?;
            Ok(r.phi_ext)
        })
        .collect()
}

/// Sweep the flux of link `k` with the other couplers at `idle_fluxes`,
/// then refine the chain's ε-minimum around the best scanned point.
pub fn pairwise_idle_scan(
    model: &ChainModel,
    analyzer: &ChainAnalyzer,
    dimer_trunc: &TruncationPolicy,
    k: usize,
    idle_fluxes: &[f64],
    sweep: &[f64],
) -> Result<PairwiseReport> {
    let dimer_model = DimerModel::new(&model.spec.isolated_dimer(k))?;
    let dimer = DimerAnalyzer::new(dimer_trunc)?;
    let chain_at = |phi: f64| -> Result<(f64, f64)> {
        let mut f = idle_fluxes.to_vec();
        f[k] = phi;
        let p = model.params_at(&f)?;
        analyzer.pair_crosstalk(&p, k)
    };
    let points: Vec<PairScanPoint> = sweep
        .par_iter()
        .map(|&phi| {
            let omega_c = coupler_params(&model.coupler_spec(k, phi)).map(|c| c.omega).unwrap_or(f64::NAN);
            let chain = chain_at(phi).ok();
            let dim = dimer_model.params_at(phi).and_then(|p| dimer.exact(&p)).ok();
            PairScanPoint {
                phi_ext: phi,
                omega_c,
                zeta_chain: chain.map(|c| c.0),
                eps_chain: chain.map(|c| c.1),
                zeta_dimer: dim.map(|d| d.zeta),
                eps_dimer: dim.map(|d| d.epsilon),
            }
        })
        .collect();

    let best = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.eps_chain.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Convergence(format!("no labelable chain point on link {k}")))?
        .0;
    let lo = sweep[best.saturating_sub(1)];
    let hi = sweep[(best + 1).min(sweep.len() - 1)];
    let m = brent_minimize(|x| chain_at(x).map(|c| c.1).unwrap_or(f64::INFINITY), lo, hi, 1e-9, 200);
    let (chain_zeta, chain_eps) = chain_at(m.x)?;
    let chain_zero = chain_zeta_zero(&points, m.x, &chain_at)
        .map(|phi| -> Result<ChainZero> {
            let (zeta, epsilon) = chain_at(phi)?;
            Ok(ChainZero {
                phi_ext: phi,
                omega_c: coupler_params(&model.coupler_spec(k, phi))?.omega,
                zeta,
                epsilon,
            })
        })
        .transpose()?;
    let window = (sweep[0], *sweep.last().unwrap());
    let d = find_idle_flux(&dimer_model, &dimer, &IdleSearchOptions::new(window, IdleObjective::MinEpsilon))?;
    Ok(PairwiseReport {
        link: k,
        points,
        chain_idle_phi: m.x,
        chain_idle_omega_c: coupler_params(&model.coupler_spec(k, m.x))?.omega,
        chain_idle_zeta: chain_zeta,
        chain_idle_eps: chain_eps,
        chain_zero,
        dimer_idle_phi: d.phi_ext,
        dimer_idle_omega_c: d.omega_c,
        dimer_idle_zeta: d.zeta,
        dimer_idle_eps: d.epsilon,
    })
}

/// Root of the chain ζ in the scanned sign change closest to `near`.
fn chain_zeta_zero(points: &[PairScanPoint], near: f64, chain_at: &dyn Fn(f64) -> Result<(f64, f64)>) -> Option<f64> {
    let (a, b) = points
        .windows(2)
        .filter_map(|w| match (w[0].zeta_chain, w[1].zeta_chain) {
            (Some(za), Some(zb)) if za * zb <= 0.0 => Some((w[0].phi_ext, w[1].phi_ext)),
            _ => None,
        })
        .min_by(|x, y| {
            let dx = (0.5 * (x.0 + x.1) - near).abs();
            let dy = (0.5 * (y.0 + y.1) - near).abs();
            dx.total_cmp(&dy)
        })?;
    brent_root(|x| chain_at(x).map(|c| c.0).unwrap_or(f64::NAN), a, b, 1e-10, 100).ok()
}

/// Adjust the coupler Josephson energy of a dimer so that the ZZ coupling
/// vanishes at its ε-minimizing flux. `bracket` must contain a sign change of
/// that ζ with the minimum away from the window edges.
pub fn tune_coupler_ej(
    spec: &CircuitSpec,
    trunc: &TruncationPolicy,
    window: (f64, f64),
    bracket: (f64, f64),
) -> Result<f64> {
    let analyzer = DimerAnalyzer::new(trunc)?;
    let opts = IdleSearchOptions::new(window, IdleObjective::MinEpsilon);
    let zeta = |ej: f64| -> f64 {
        let mut s = *spec;
        s.coupler.ej = ej;
        DimerModel::new(&s)
            .and_then(|m| find_idle_flux(&m, &analyzer, &opts))
            .map(|r| if r.at_edge { f64::NAN } else { r.zeta })
            .unwrap_or(f64::NAN)
    };
    brent_root(zeta, bracket.0, bracket.1, 1e-9, 100)
}

/// Idle coupler frequency of an isolated dimer, for reporting.
pub fn dimer_idle_omega(spec: &CircuitSpec, phi: f64) -> Result<f64> {
    Ok(DimerModel::new(spec)?.params_at(phi)?.modes[DIMER_C].omega)
}
