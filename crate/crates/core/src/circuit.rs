//! Lumped-element circuit description and its quantization into mode
//! parameters.
//!
//! Node order of the dimer is `(φ1, φ1c, φ2c, φ2)`. The coupler node pair is
//! rotated into `φ± = (φ1c ± φ2c)/√2`; the `+` mode carries no potential and
//! is dropped after the capacitance matrix is inverted.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::coupler::{CouplerModeParams, CouplerSpec};
use crate::error::{Error, Result};
use crate::units::{ghz_to_angular, CHARGING_GHZ_FF};

/// Transformed-mode indices of the dimer charging-energy matrix.
pub const MODE_Q1: usize = 0;
pub const MODE_PLUS: usize = 1;
pub const MODE_COUPLER: usize = 2;
pub const MODE_Q2: usize = 3;

/// Capacitances of the two-qubit circuit, in fF. Junction self-capacitances
/// are taken to be already absorbed in `c1`, `c2` and `c_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capacitances {
    pub c1: f64,
    pub c2: f64,
    /// Shunt across the coupler loop, between the two coupler nodes.
    pub c_c: f64,
    /// Each coupler node to ground.
    pub c_g: f64,
    pub c12: f64,
    pub c1c: f64,
    pub c2c: f64,
}

impl Capacitances {
    /// The reference capacitance set of the C-shunt flux coupler design.
    pub fn reference() -> Self {
        Self {
            c1: 85.0,
            c2: 85.0,
            c_c: 30.0,
            c_g: 70.0,
            c12: 0.23,
            c1c: 7.9,
            c2c: 7.9,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c1: self.c1 * factor,
            c2: self.c2 * factor,
            c_c: self.c_c * factor,
            c_g: self.c_g * factor,
            c12: self.c12 * factor,
            c1c: self.c1c * factor,
            c2c: self.c2c * factor,
        }
    }

    fn validate(&self, allow_zero_coupling: bool) -> Result<()> {
        let main = [("C1", self.c1), ("C2", self.c2), ("C_C", self.c_c), ("C_g", self.c_g)];
        let coupling = [("C12", self.c12), ("C1c", self.c1c), ("C2c", self.c2c)];
        for (name, c) in main {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {c}")));
            }
        }
        for (name, c) in coupling {
            let bad = if allow_zero_coupling { !(c >= 0.0) } else { !(c > 0.0) };
            if bad || !c.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// True when `C1, C2, C_C, C_g ≫ C1c, C2c ≫ C12` holds by at least a
    /// factor of three at each step.
    pub fn hierarchy_holds(&self) -> bool {
        let big = self.c1.min(self.c2).min(self.c_c).min(self.c_g);
        let mid_hi = self.c1c.max(self.c2c);
        let mid_lo = self.c1c.min(self.c2c);
        big >= 3.0 * mid_hi && mid_lo >= 3.0 * self.c12
    }
}

/// A split (SQUID) Josephson junction of a tunable transmon. Energies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunableJunction {
    pub ej_left: f64,
    pub ej_right: f64,
}

impl TunableJunction {
    pub fn new(ej_left: f64, ej_right: f64) -> Result<Self> {
        if !(ej_left > 0.0 && ej_right > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "junction energies must be positive, got {ej_left}, {ej_right}"
            )));
        }
        Ok(Self { ej_left, ej_right })
    }

    pub fn asymmetry(&self) -> f64 {
        (self.ej_left - self.ej_right) / (self.ej_left + self.ej_right)
    }

    pub fn total(&self) -> f64 {
        self.ej_left + self.ej_right
    }
}

/// Flux-dependent Josephson energy of a split junction.
pub fn effective_qubit_ej(junction: &TunableJunction, phi_ext: f64) -> f64 {
    let d = junction.asymmetry();
    let half = 0.5 * phi_ext;
    junction.total() * (half.cos().powi(2) + d * d * half.sin().powi(2)).sqrt()
}

/// How the Josephson energy of a qubit is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QubitJosephson {
    /// Explicit split junction biased at `phi_ext` (radians).
    Junction {
        junction: TunableJunction,
        phi_ext: f64,
    },
    /// Calibrate `E_J^eff` so the bare transition sits at this frequency (GHz).
    TargetFrequency { ghz: f64 },
}

impl QubitJosephson {
    /// Effective Josephson energy in GHz, given the qubit's charging energy.
    pub fn effective_ej(&self, ec_ghz: f64) -> Result<f64> {
        match *self {
            QubitJosephson::Junction { junction, phi_ext } => {
                Ok(effective_qubit_ej(&junction, phi_ext))
            }
            QubitJosephson::TargetFrequency { ghz } => ej_for_frequency(ec_ghz, ghz),
        }
    }
}

/// Coupler junction data: `E_Jc` (GHz, in the `φ−` basis) and the small
/// junction ratio `α`, with the external and optional correction fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerJunctions {
    pub ej: f64,
    pub alpha: f64,
    pub phi_ext: f64,
    #[serde(default)]
    pub phi_cor: f64,
}

/// Full lumped-element description of the two-qubit circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub caps: Capacitances,
    pub qubits: [QubitJosephson; 2],
    pub coupler: CouplerJunctions,
}

impl CircuitSpec {
    /// The reference design: qubits calibrated to 6.6 / 6.1 GHz,
    /// `E_Jc/h = 41.2 GHz`, `α = 0.2347`, coupler biased at half a flux quantum.
    pub fn reference() -> Self {
        Self {
            caps: Capacitances::reference(),
            qubits: [
                QubitJosephson::TargetFrequency { ghz: 6.6 },
                QubitJosephson::TargetFrequency { ghz: 6.1 },
            ],
            coupler: CouplerJunctions {
                ej: 41.2,
                alpha: 0.2347,
                phi_ext: std::f64::consts::PI,
                phi_cor: 0.0,
            },
        }
    }

    pub fn with_coupler_flux(mut self, phi_ext: f64) -> Self {
        self.coupler.phi_ext = phi_ext;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.caps.validate(true)?;
        let a = self.coupler.alpha;
        if !(a > 0.125 && a < 0.5) {
            return Err(Error::Regime(format!(
                "coupler junction ratio alpha = {a} outside (1/8, 1/2)"
            )));
        }
        if !(self.coupler.ej > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "coupler E_J must be positive, got {}",
                self.coupler.ej
            )));
        }
        Ok(())
    }

    /// Soft warnings about the assumptions behind the mode transformation.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.caps.hierarchy_holds() {
            w.push("capacitance hierarchy C_i >> C_ic >> C_12 does not hold".to_string());
        }
        w
    }
}

/// Symmetric capacitance (Maxwell) matrix over circuit nodes, in fF.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceMatrix {
    pub matrix: DMatrix<f64>,
    /// Whether the coupler node pairs have been rotated into `±` modes.
    pub transformed: bool,
    /// Node-index pairs forming coupler loops (`φ_a`, `φ_b`).
    pub coupler_pairs: Vec<(usize, usize)>,
}

/// Incremental construction of a node capacitance matrix from elements.
#[derive(Debug, Clone)]
pub struct CapacitanceNetwork {
    matrix: DMatrix<f64>,
}

impl CapacitanceNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(nodes, nodes),
        }
    }

    /// Capacitor from `node` to ground.
    pub fn to_ground(&mut self, node: usize, c: f64) -> &mut Self {
        self.matrix[(node, node)] += c;
        self
    }

    /// Capacitor between two nodes.
    pub fn between(&mut self, a: usize, b: usize, c: f64) -> &mut Self {
        self.matrix[(a, a)] += c;
        self.matrix[(b, b)] += c;
        self.matrix[(a, b)] -= c;
        self.matrix[(b, a)] -= c;
        self
    }

    pub fn finish(&self, coupler_pairs: Vec<(usize, usize)>) -> CapacitanceMatrix {
        CapacitanceMatrix {
            matrix: self.matrix.clone(),
            transformed: false,
            coupler_pairs,
        }
    }
}

/// Capacitance matrix of the dimer circuit over `(φ1, φ1c, φ2c, φ2)`.
pub fn build_capacitance_matrix(spec: &CircuitSpec) -> Result<CapacitanceMatrix> {
    spec.caps.validate(true)?;
    let c = &spec.caps;
    let mut net = CapacitanceNetwork::new(4);
    net.to_ground(0, c.c1)
        .to_ground(3, c.c2)
        .to_ground(1, c.c_g)
        .to_ground(2, c.c_g)
        .between(0, 1, c.c1c)
        .between(2, 3, c.c2c)
        .between(0, 3, c.c12)
        .between(1, 2, c.c_c);
    Ok(net.finish(vec![(1, 2)]))
}

/// Orthogonal basis change that maps each coupler node pair `(a, b)` to
/// `(+, −) = ((φa + φb)/√2, (φa − φb)/√2)`, leaving other nodes untouched.
pub fn basis_transform(n: usize, coupler_pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut s = DMatrix::identity(n, n);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for &(a, b) in coupler_pairs {
        s[(a, a)] = r;
        s[(a, b)] = r;
        s[(b, a)] = r;
        s[(b, b)] = -r;
    }
    s
}

/// Charging energies `E_C = (e²/2)·C'⁻¹` over transformed modes, in GHz.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingEnergyMatrix {
    pub matrix: DMatrix<f64>,
}

impl ChargingEnergyMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v.abs()), hi.max(v.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Rotate the coupler node pairs and invert, giving charging energies.
pub fn transform_and_invert(c: &CapacitanceMatrix) -> Result<ChargingEnergyMatrix> {
    let n = c.matrix.nrows();
    let transformed = if c.transformed {
        c.matrix.clone()
    } else {
        let s = basis_transform(n, &c.coupler_pairs);
        &s * &c.matrix * s.transpose()
    };
    let condition = condition_number(&transformed);
    if !condition.is_finite() || condition > 1e12 {
        return Err(Error::Singular { condition });
    }
    let inv = transformed
        .clone()
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or(Error::Singular { condition })?;
    let mut ec = inv * CHARGING_GHZ_FF;
    // restore exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (ec[(i, j)] + ec[(j, i)]);
            ec[(i, j)] = avg;
            ec[(j, i)] = avg;
        }
    }
    Ok(ChargingEnergyMatrix { matrix: ec })
}

/// Josephson energy (GHz) that puts a transmon with charging energy
/// `ec_ghz` at bare frequency `f_ghz = √(8 E_C E_J) − E_C`.
pub fn ej_for_frequency(ec_ghz: f64, f_ghz: f64) -> Result<f64> {
    if !(ec_ghz > 0.0) || !(f_ghz > -ec_ghz) {
        return Err(Error::InvalidSpec(format!(
            "cannot calibrate E_J for f = {f_ghz} GHz with E_C = {ec_ghz} GHz"
        )));
    }
    Ok((f_ghz + ec_ghz).powi(2) / (8.0 * ec_ghz))
}

/// Role of a mode in the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    Qubit,
    Coupler,
}

/// Quantized parameters of one Duffing-like mode. Frequencies in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub kind: ModeKind,
    pub omega: f64,
    pub anharmonicity: f64,
    /// Coefficient of `b†b†b + b†bb` (zero for transmons).
    pub cubic: f64,
    pub n_zpf: f64,
    pub phi_zpf: f64,
}

impl ModeParams {
    /// Transmon mode from its charging and effective Josephson energies (GHz).
    pub fn transmon(ec_ghz: f64, ej_ghz: f64) -> Self {
        Self {
            kind: ModeKind::Qubit,
            omega: ghz_to_angular((8.0 * ec_ghz * ej_ghz).sqrt() - ec_ghz),
            anharmonicity: ghz_to_angular(-ec_ghz),
            cubic: 0.0,
            n_zpf: (ej_ghz / (32.0 * ec_ghz)).powf(0.25),
            phi_zpf: (2.0 * ec_ghz / ej_ghz).powf(0.25),
        }
    }

    pub fn coupler(p: &CouplerModeParams) -> Self {
        Self {
            kind: ModeKind::Coupler,
            omega: p.omega,
            anharmonicity: p.anharmonicity,
            cubic: p.cubic,
            n_zpf: p.n_zpf,
            phi_zpf: p.phi_zpf,
        }
    }
}

/// Capacitive coupling `−g (b_a − b_a†)(b_b − b_b†)`, `g` in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub g: f64,
}

/// Quantized device: modes plus pairwise couplings.
///
/// For the dimer the mode order is `[Q1, C, Q2]`, matching `|j k l⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub modes: Vec<ModeParams>,
    pub couplings: Vec<Coupling>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Dimer mode positions inside [`DeviceParams::modes`].
pub const DIMER_Q1: usize = 0;
pub const DIMER_C: usize = 1;
pub const DIMER_Q2: usize = 2;

impl DeviceParams {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Coupling constant between two modes (0 if absent).
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.couplings
            .iter()
            .filter(|c| (c.a == a && c.b == b) || (c.a == b && c.b == a))
            .map(|c| c.g)
            .sum()
    }

    pub fn set_coupling(&mut self, a: usize, b: usize, g: f64) {
        self.couplings.retain(|c| !((c.a == a && c.b == b) || (c.a == b && c.b == a)));
        self.couplings.push(Coupling { a: a.min(b), b: a.max(b), g });
        self.couplings.sort_by_key(|c| (c.a, c.b));
    }

    pub fn g12(&self) -> f64 {
        self.coupling(DIMER_Q1, DIMER_Q2)
    }

    pub fn g1c(&self) -> f64 {
        self.coupling(DIMER_Q1, DIMER_C)
    }

    pub fn g2c(&self) -> f64 {
        self.coupling(DIMER_Q2, DIMER_C)
    }

    /// Multiply every coupling constant by `factor`.
    pub fn with_couplings_scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        for c in &mut p.couplings {
            c.g *= factor;
        }
        p
    }
}

/// Mode source used by [`quantize_network`].
#[derive(Debug, Clone, Copy)]
pub enum ModeSource {
    /// Transmon with effective Josephson energy in GHz.
    Transmon { ej_ghz: f64 },
    Coupler(CouplerModeParams),
}

/// Quantize the retained modes of a charging-energy matrix.
///
/// `modes` lists `(index into E_C, source)` in the desired output order.
/// Couplings `g_ij = 8 E_C,ij n_i n_j` are produced for every retained pair
/// with a nonzero charging-energy entry.
pub fn quantize_network(
    ec: &ChargingEnergyMatrix,
    modes: &[(usize, ModeSource)],
) -> Result<DeviceParams> {
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(modes.len());
    for &(idx, source) in modes {
        let ec_ii = ec.get(idx, idx);
        if !(ec_ii > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "non-positive charging energy {ec_ii} on mode {idx}"
            )));
        }
        let mode = match source {
            ModeSource::Transmon { ej_ghz } => {
                if !(ej_ghz > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "non-positive Josephson energy {ej_ghz} on mode {idx}"
                    )));
                }
                let ratio = ec_ii / ej_ghz;
                if ratio > 0.1 {
                    warnings.push(format!(
                        "mode {idx}: E_C/E_J = {ratio:.3} exceeds 0.1; Duffing expansion is unreliable"
                    ));
                }
                ModeParams::transmon(ec_ii, ej_ghz)
            }
            ModeSource::Coupler(p) => {
                if p.ec_over_ej > 0.1 {
                    warnings.push(format!(
                        "coupler mode {idx}: E_C/E_J = {:.3} exceeds 0.1",
                        p.ec_over_ej
                    ));
                }
                ModeParams::coupler(&p)
            }
        };
        out.push(mode);
    }
    let mut couplings = Vec::new();
    for a in 0..modes.len() {
        for b in (a + 1)..modes.len() {
            let ec_ab = ec.get(modes[a].0, modes[b].0);
            if ec_ab != 0.0 {
                let g = 8.0 * ec_ab * out[a].n_zpf * out[b].n_zpf;
                couplings.push(Coupling {
                    a,
                    b,
                    g: ghz_to_angular(g),
                });
            }
        }
    }
    Ok(DeviceParams {
        modes: out,
        couplings,
        warnings,
    })
}

/// Quantize the dimer: qubit Josephson energies (GHz) and coupler Taylor
/// data produce `[Q1, C, Q2]` parameters.
pub fn quantize_modes(
    ec: &ChargingEnergyMatrix,
    qubit_ejs: [f64; 2],
    coupler: &CouplerModeParams,
) -> Result<DeviceParams> {
    quantize_network(
        ec,
        &[
            (MODE_Q1, ModeSource::Transmon { ej_ghz: qubit_ejs[0] }),
            (MODE_COUPLER, ModeSource::Coupler(*coupler)),
            (MODE_Q2, ModeSource::Transmon { ej_ghz: qubit_ejs[1] }),
        ],
    )
}

/// Everything flux-independent about a dimer, ready to produce
/// [`DeviceParams`] at any coupler bias.
#[derive(Debug, Clone)]
pub struct DimerModel {
    pub spec: CircuitSpec,
    pub charging: ChargingEnergyMatrix,
    pub qubit_ejs: [f64; 2],
    /// Multiplier applied to the coupler's charging energy (fabrication studies).
    pub coupler_ec_scale: f64,
}

impl DimerModel {
    pub fn new(spec: &CircuitSpec) -> Result<Self> {
        spec.validate()?;
        let cap = build_capacitance_matrix(spec)?;
        let charging = transform_and_invert(&cap)?;
        let qubit_ejs = [
            spec.qubits[0].effective_ej(charging.get(MODE_Q1, MODE_Q1))?,
            spec.qubits[1].effective_ej(charging.get(MODE_Q2, MODE_Q2))?,
        ];
        Ok(Self {
            spec: *spec,
            charging,
            qubit_ejs,
            coupler_ec_scale: 1.0,
        })
    }

    pub fn coupler_ec(&self) -> f64 {
        self.charging.get(MODE_COUPLER, MODE_COUPLER) * self.coupler_ec_scale
    }

    pub fn coupler_spec(&self, phi_ext: f64) -> CouplerSpec {
        CouplerSpec {
            ej: self.spec.coupler.ej,
            alpha: self.spec.coupler.alpha,
            ec: self.coupler_ec(),
            phi_ext,
            phi_cor: self.spec.coupler.phi_cor,
        }
    }

    /// Device parameters with the coupler biased at `phi_ext` (radians).
    pub fn params_at(&self, phi_ext: f64) -> Result<DeviceParams> {
        let coupler = crate::coupler::coupler_params(&self.coupler_spec(phi_ext))?;
        self.params_with_coupler(&coupler)
    }

    /// Device parameters for given coupler mode data.
    pub fn params_with_coupler(&self, coupler: &CouplerModeParams) -> Result<DeviceParams> {
        let mut p = quantize_modes(&self.charging, self.qubit_ejs, coupler)?;
        p.warnings.extend(self.spec.warnings());
        Ok(p)
    }

    /// Device parameters with the coupler at `phi_ext` and qubit 1 retuned to
    /// bare frequency `q1_ghz`.
    pub fn params_with_qubit1(&self, phi_ext: f64, q1_ghz: f64) -> Result<DeviceParams> {
        let coupler = crate::coupler::coupler_params(&self.coupler_spec(phi_ext))?;
        let ej1 = ej_for_frequency(self.charging.get(MODE_Q1, MODE_Q1), q1_ghz)?;
        quantize_modes(&self.charging, [ej1, self.qubit_ejs[1]], &coupler)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn literal_matrix(c: &Capacitances) -> [[f64; 4]; 4] {
        [
            [c.c1 + c.c1c + c.c12, -c.c1c, 0.0, -c.c12],
            [-c.c1c, c.c1c + c.c_g + c.c_c, -c.c_c, 0.0],
            [0.0, -c.c_c, c.c2c + c.c_c + c.c_g, -c.c2c],
            [-c.c12, 0.0, -c.c2c, c.c2 + c.c2c + c.c12],
        ]
    }

    #[test]
    fn reference_matrix_entries() {
        let spec = CircuitSpec::reference();
        let m = build_capacitance_matrix(&spec).unwrap().matrix;
        assert!((m[(0, 0)] - 93.13).abs() < 1e-12);
        assert!((m[(0, 1)] + 7.9).abs() < 1e-12);
        assert!((m[(0, 3)] + 0.23).abs() < 1e-12);
        let lit = literal_matrix(&spec.caps);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)], lit[i][j]);
            }
        }
    }

    #[test]
    fn decoupled_nodes_give_diagonal_matrix() {
        let mut spec = CircuitSpec::reference();
        spec.caps.c12 = 0.0;
        spec.caps.c1c = 0.0;
        spec.caps.c2c = 0.0;
        let m = build_capacitance_matrix(&spec).unwrap().matrix;
        let c = spec.caps;
        let expect = [c.c1, c.c_c + c.c_g, c.c_c + c.c_g, c.c2];
        for i in 0..4 {
            assert_eq!(m[(i, i)], expect[i]);
        }
        // the coupler shunt still links the two coupler nodes
        assert_eq!(m[(1, 2)], -c.c_c);
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)] {
            assert_eq!(m[(i, j)], 0.0);
        }
    }

    #[test]
    fn non_positive_capacitance_rejected() {
        let mut spec = CircuitSpec::reference();
        spec.caps.c1 = 0.0;
        assert!(matches!(
            build_capacitance_matrix(&spec),
            Err(Error::InvalidSpec(_))
        ));
        spec.caps.c1 = 85.0;
        spec.caps.c1c = -1.0;
        assert!(build_capacitance_matrix(&spec).is_err());
    }

    #[test]
    fn transform_is_orthogonal() {
        let s = basis_transform(4, &[(1, 2)]);
        let eye = &s * s.transpose();
        assert!((eye - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
        assert!((s[(1, 1)] - FRAC_1_SQRT_2).abs() < 1e-16);
        assert!((s[(2, 2)] + FRAC_1_SQRT_2).abs() < 1e-16);
    }

    #[test]
    fn block_diagonal_charging_energies() {
        let mut spec = CircuitSpec::reference();
        spec.caps.c12 = 0.0;
        spec.caps.c1c = 0.0;
        spec.caps.c2c = 0.0;
        let ec = transform_and_invert(&build_capacitance_matrix(&spec).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(ec.get(i, j).abs() < 1e-15, "({i},{j}) = {}", ec.get(i, j));
                }
            }
        }
        assert!((ec.get(MODE_Q1, MODE_Q1) - CHARGING_GHZ_FF / 85.0).abs() < 1e-12);
        // − mode: C_g + 2 C_C
        assert!((ec.get(MODE_COUPLER, MODE_COUPLER) - CHARGING_GHZ_FF / 130.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_capacitances_halves_charging_energies() {
        let spec = CircuitSpec::reference();
        let mut doubled = spec;
        doubled.caps = spec.caps.scaled(2.0);
        let a = transform_and_invert(&build_capacitance_matrix(&spec).unwrap()).unwrap();
        let b = transform_and_invert(&build_capacitance_matrix(&doubled).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.get(i, j) - 2.0 * b.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn effective_ej_limits() {
        let j = TunableJunction::new(12.0, 8.0).unwrap();
        assert!((effective_qubit_ej(&j, 0.0) - 20.0).abs() < 1e-12);
        assert!((effective_qubit_ej(&j, PI) - 4.0).abs() < 1e-12);
        let sym = TunableJunction::new(10.0, 10.0).unwrap();
        assert!((effective_qubit_ej(&sym, PI / 2.0) - 20.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(TunableJunction::new(0.0, 1.0).is_err());
    }

    #[test]
    fn calibration_hits_target() {
        let ec = 0.2094;
        let ej = ej_for_frequency(ec, 6.6).unwrap();
        let m = ModeParams::transmon(ec, ej);
        assert!((crate::units::angular_to_ghz(m.omega) - 6.6).abs() < 1e-12);
        assert!((crate::units::angular_to_ghz(m.anharmonicity) + ec).abs() < 1e-15);
    }

    #[test]
    fn zero_coupling_capacitances_give_zero_couplings() {
        let mut spec = CircuitSpec::reference();
        spec.caps.c12 = 0.0;
        spec.caps.c1c = 0.0;
        spec.caps.c2c = 0.0;
        let model = DimerModel::new(&spec).unwrap();
        let p = model.params_at(PI).unwrap();
        assert!(p.g12().abs() < 1e-14);
        assert!(p.g1c().abs() < 1e-14);
        assert!(p.g2c().abs() < 1e-14);
    }

    #[test]
    fn coupling_signs_follow_minus_mode() {
        let model = DimerModel::new(&CircuitSpec::reference()).unwrap();
        let p = model.params_at(PI).unwrap();
        assert!(p.g1c() > 0.0);
        assert!(p.g2c() < 0.0);
        assert!(p.g12() > 0.0);
        assert!(p.g12().abs() < 0.2 * p.g1c().abs());
        for q in [DIMER_Q1, DIMER_Q2] {
            assert!(p.modes[q].anharmonicity < 0.0);
        }
    }

    #[test]
    fn alpha_outside_single_well_rejected() {
        let mut spec = CircuitSpec::reference();
        spec.coupler.alpha = 0.6;
        assert!(matches!(DimerModel::new(&spec), Err(Error::Regime(_))));
    }
}
