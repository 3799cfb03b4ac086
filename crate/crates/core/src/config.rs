//! Run configuration: TOML with units in the key names, plus dotted
//! `key=value` overrides applied before validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainLink, ChainSpec};
use crate::circuit::{Capacitances, CircuitSpec, CouplerJunctions, QubitJosephson};
use crate::error::{Error, Result};
use crate::fock::TruncationPolicy;
use crate::gate::{GateScheme, PulseSearch};
use crate::idle::{IdleObjective, IdleSearchOptions};
use crate::units::flux_quanta_to_rad;

/// The bundled reference configuration.
pub const PAPER_CONFIG: &str = include_str!("../../../configs/paper.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub circuit: CircuitSection,
    pub qubits: QubitSection,
    pub coupler: CouplerSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub idle: IdleSection,
    #[serde(default)]
    pub zz_map: ZzMapSection,
    #[serde(default)]
    pub robustness: RobustnessSection,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default)]
    pub chain: ChainSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    #[serde(rename = "C1_fF")]
    pub c1: f64,
    #[serde(rename = "C2_fF")]
    pub c2: f64,
    #[serde(rename = "CC_fF")]
    pub c_c: f64,
    #[serde(rename = "Cg_fF")]
    pub c_g: f64,
    #[serde(rename = "C12_fF")]
    pub c12: f64,
    #[serde(rename = "C1c_fF")]
    pub c1c: f64,
    #[serde(rename = "C2c_fF")]
    pub c2c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    #[serde(rename = "f1_GHz")]
    pub f1: f64,
    #[serde(rename = "f2_GHz")]
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerSection {
    #[serde(rename = "EJc_GHz")]
    pub ej: f64,
    pub alpha: f64,
    /// Bias for single-point commands.
    #[serde(rename = "phi_ext_Phi0", default = "half")]
    pub phi_ext: f64,
    #[serde(rename = "phi_cor_Phi0", default)]
    pub phi_cor: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub levels: usize,
    #[serde(default)]
    pub cutoff: Option<usize>,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { levels: 6, cutoff: None }
    }
}

impl TruncationSection {
    pub fn policy(&self) -> TruncationPolicy {
        match self.cutoff {
            Some(m) => TruncationPolicy::with_cutoff(self.levels, m),
            None => TruncationPolicy::new(self.levels),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "phi_min_Phi0")]
    pub phi_min: f64,
    #[serde(rename = "phi_max_Phi0")]
    pub phi_max: f64,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            phi_min: 0.3,
            phi_max: 0.5,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Number of lowest levels listed.
    pub count: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { count: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdleSection {
    #[serde(rename = "window_min_Phi0")]
    pub window_min: f64,
    #[serde(rename = "window_max_Phi0")]
    pub window_max: f64,
    pub grid_points: usize,
    pub objective: IdleObjective,
}

impl Default for IdleSection {
    fn default() -> Self {
        Self {
            window_min: 0.3,
            window_max: 0.5,
            grid_points: 41,
            objective: IdleObjective::MinEpsilon,
        }
    }
}

impl IdleSection {
    pub fn options(&self) -> IdleSearchOptions {
        let mut o = IdleSearchOptions::new(
            (flux_quanta_to_rad(self.window_min), flux_quanta_to_rad(self.window_max)),
            self.objective,
        );
        o.grid_points = self.grid_points;
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZzMapSection {
    #[serde(rename = "EJc_min_GHz")]
    pub ej_min: f64,
    #[serde(rename = "EJc_max_GHz")]
    pub ej_max: f64,
    pub ej_points: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
    pub bisection_steps: usize,
    pub levels: usize,
}

impl Default for ZzMapSection {
    fn default() -> Self {
        Self {
            ej_min: 36.0,
            ej_max: 48.0,
            ej_points: 13,
            alpha_min: 0.20,
            alpha_max: 0.30,
            alpha_points: 11,
            bisection_steps: 8,
            levels: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSection {
    /// Half-width of the relative error range.
    pub span: f64,
    pub points: usize,
    pub levels: usize,
    pub objective: IdleObjective,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        Self {
            span: 0.05,
            points: 21,
            levels: 5,
            objective: IdleObjective::MinAbsZeta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    #[serde(rename = "t_gate_ns")]
    pub t_gate: f64,
    #[serde(rename = "coupler_int_GHz")]
    pub coupler_int: f64,
    #[serde(rename = "coupler_tau_ns")]
    pub coupler_tau: f64,
    #[serde(rename = "qubit_int_GHz", default)]
    pub qubit_int: f64,
    #[serde(rename = "qubit_tau_ns", default)]
    pub qubit_tau: f64,
}

impl PulseSection {
    fn from_search(s: &PulseSearch) -> Self {
        Self {
            t_gate: s.t_gate,
            coupler_int: s.coupler_int_ghz,
            coupler_tau: s.coupler_tau,
            qubit_int: s.qubit_int_ghz,
            qubit_tau: s.qubit_tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    #[serde(rename = "dt_ns")]
    pub dt: f64,
    pub levels: usize,
    pub cutoff: Option<usize>,
    #[serde(rename = "coherence_us")]
    pub coherence: f64,
    pub max_evaluations: usize,
    pub leakage_weight: f64,
    /// Sampling interval of the population trace.
    #[serde(rename = "sample_ns")]
    pub sample: f64,
    pub cz40: PulseSection,
    pub cz_fast: PulseSection,
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            dt: 0.05,
            levels: 5,
            cutoff: Some(5),
            coherence: 50.0,
            max_evaluations: 300,
            leakage_weight: 1.0,
            sample: 0.5,
            cz40: PulseSection::from_search(&PulseSearch::cz40()),
            cz_fast: PulseSection::from_search(&PulseSearch::cz_fast()),
        }
    }
}

impl GateSection {
    pub fn truncation(&self) -> TruncationPolicy {
        match self.cutoff {
            Some(m) => TruncationPolicy::with_cutoff(self.levels, m),
            None => TruncationPolicy::new(self.levels),
        }
    }

    pub fn search(&self, scheme: GateScheme) -> PulseSearch {
        let (mut s, p) = match scheme {
            GateScheme::Cz40 => (PulseSearch::cz40(), &self.cz40),
            GateScheme::CzFast => (PulseSearch::cz_fast(), &self.cz_fast),
        };
        s.t_gate = p.t_gate;
        s.coupler_int_ghz = p.coupler_int;
        s.coupler_tau = p.coupler_tau;
        s.qubit_int_ghz = p.qubit_int;
        s.qubit_tau = p.qubit_tau;
        s.leakage_weight = self.leakage_weight;
        s.max_evaluations = self.max_evaluations;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    #[serde(rename = "EJc_GHz")]
    pub ej: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(rename = "freqs_GHz")]
    pub freqs: Vec<f64>,
    /// Coupler junctions per link; capacitances come from `[circuit]`.
    pub links: Vec<LinkSection>,
    pub adjust_shunts: bool,
    pub levels: usize,
    pub cutoff: Option<usize>,
    pub dimer_levels: usize,
    #[serde(rename = "sweep_min_Phi0")]
    pub sweep_min: f64,
    #[serde(rename = "sweep_max_Phi0")]
    pub sweep_max: f64,
    pub sweep_points: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        let r = ChainSpec::reference();
        Self {
            freqs: vec![5.9, 6.6, 6.1, 6.5],
            links: r
                .links
                .iter()
                .map(|l| LinkSection {
                    ej: l.coupler.ej,
                    alpha: l.coupler.alpha,
                })
                .collect(),
            adjust_shunts: true,
            levels: 4,
            cutoff: Some(6),
            dimer_levels: 6,
            sweep_min: 0.44,
            sweep_max: 0.50,
            sweep_points: 21,
        }
    }
}

impl ChainSection {
    pub fn truncation(&self) -> TruncationPolicy {
        match self.cutoff {
            Some(m) => TruncationPolicy::with_cutoff(self.levels, m),
            None => TruncationPolicy::new(self.levels),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least {min}, got {v}")))
    }
}

fn ordered(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo < hi {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: minimum {lo} must be below maximum {hi}")))
    }
}

impl Config {
    /// The bundled reference configuration.
    pub fn paper() -> Self {
        Self::from_toml_str(PAPER_CONFIG, &[]).expect("bundled config is valid")
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Config = table.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.circuit;
        for (n, v) in [
            ("circuit.C1_fF", c.c1),
            ("circuit.C2_fF", c.c2),
            ("circuit.CC_fF", c.c_c),
            ("circuit.Cg_fF", c.c_g),
            ("qubits.f1_GHz", self.qubits.f1),
            ("qubits.f2_GHz", self.qubits.f2),
            ("coupler.EJc_GHz", self.coupler.ej),
            ("gate.dt_ns", self.gate.dt),
            ("gate.coherence_us", self.gate.coherence),
            ("gate.sample_ns", self.gate.sample),
            ("robustness.span", self.robustness.span),
        ] {
            positive(n, v)?;
        }
        for (n, v) in [("circuit.C12_fF", c.c12), ("circuit.C1c_fF", c.c1c), ("circuit.C2c_fF", c.c2c)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{n} must be non-negative, got {v}")));
            }
        }
        at_least("truncation.levels", self.truncation.levels, 2)?;
        at_least("sweep.points", self.sweep.points, 2)?;
        at_least("idle.grid_points", self.idle.grid_points, 3)?;
        at_least("zz_map.ej_points", self.zz_map.ej_points, 1)?;
        at_least("zz_map.alpha_points", self.zz_map.alpha_points, 1)?;
        at_least("zz_map.levels", self.zz_map.levels, 2)?;
        at_least("robustness.points", self.robustness.points, 1)?;
        at_least("robustness.levels", self.robustness.levels, 2)?;
        at_least("gate.levels", self.gate.levels, 3)?;
        at_least("chain.levels", self.chain.levels, 2)?;
        at_least("chain.sweep_points", self.chain.sweep_points, 3)?;
        ordered("sweep", self.sweep.phi_min, self.sweep.phi_max)?;
        ordered("idle window", self.idle.window_min, self.idle.window_max)?;
        ordered("zz_map EJc", self.zz_map.ej_min, self.zz_map.ej_max)?;
        ordered("zz_map alpha", self.zz_map.alpha_min, self.zz_map.alpha_max)?;
        ordered("chain sweep", self.chain.sweep_min, self.chain.sweep_max)?;
        if self.chain.freqs.len() < 2 || self.chain.links.len() + 1 != self.chain.freqs.len() {
            return Err(Error::Config(format!(
                "chain: {} qubit frequencies need {} links, got {}",
                self.chain.freqs.len(),
                self.chain.freqs.len().saturating_sub(1),
                self.chain.links.len()
            )));
        }
        for p in [&self.gate.cz40, &self.gate.cz_fast] {
            positive("gate pulse t_gate_ns", p.t_gate)?;
            positive("gate pulse coupler_tau_ns", p.coupler_tau)?;
        }
        Ok(())
    }

    pub fn capacitances(&self) -> Capacitances {
        let c = &self.circuit;
        Capacitances {
            c1: c.c1,
            c2: c.c2,
            c_c: c.c_c,
            c_g: c.c_g,
            c12: c.c12,
            c1c: c.c1c,
            c2c: c.c2c,
        }
    }

    pub fn circuit_spec(&self) -> CircuitSpec {
        CircuitSpec {
            caps: self.capacitances(),
            qubits: [
                QubitJosephson::TargetFrequency { ghz: self.qubits.f1 },
                QubitJosephson::TargetFrequency { ghz: self.qubits.f2 },
            ],
            coupler: CouplerJunctions {
                ej: self.coupler.ej,
                alpha: self.coupler.alpha,
                phi_ext: self.phi_ext(),
                phi_cor: flux_quanta_to_rad(self.coupler.phi_cor),
            },
        }
    }

    /// Coupler bias for single-point commands (radians).
    pub fn phi_ext(&self) -> f64 {
        flux_quanta_to_rad(self.coupler.phi_ext)
    }

    pub fn sweep_fluxes(&self) -> Vec<f64> {
        crate::idle::linspace(self.sweep.phi_min, self.sweep.phi_max, self.sweep.points)
            .into_iter()
            .map(flux_quanta_to_rad)
            .collect()
    }

    pub fn chain_spec(&self) -> ChainSpec {
        let caps = self.capacitances();
        let phi_cor = flux_quanta_to_rad(self.coupler.phi_cor);
        let mut spec = ChainSpec::uniform(
            &self.chain.freqs,
            ChainLink {
                caps,
                coupler: CouplerJunctions {
                    ej: self.coupler.ej,
                    alpha: self.coupler.alpha,
                    phi_ext: self.phi_ext(),
                    phi_cor,
                },
            },
            caps.c1,
        );
        for (link, l) in spec.links.iter_mut().zip(&self.chain.links) {
            link.coupler.ej = l.ej;
            link.coupler.alpha = l.alpha;
        }
        spec.adjust_shunts = self.chain.adjust_shunts;
        spec
    }

    pub fn chain_fluxes(&self) -> Vec<f64> {
        crate::idle::linspace(self.chain.sweep_min, self.chain.sweep_max, self.chain.sweep_points)
            .into_iter()
            .map(flux_quanta_to_rad)
            .collect()
    }
}

/// Apply `section.key=value`, with `value` parsed as a TOML value
/// (bare words fall back to strings).
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let path: Vec<&str> = path.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override `{item}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{item}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parse `--truncation` as `N` or `N/M` (levels per mode, excitation cutoff).
pub fn parse_truncation(s: &str) -> Result<TruncationSection> {
    let bad = || Error::Config(format!("truncation `{s}` is not N or N/M"));
    let (n, m) = match s.split_once('/') {
        Some((n, m)) => (n, Some(m)),
        None => (s, None),
    };
    let levels: usize = n.trim().parse().map_err(|_| bad())?;
    let cutoff = m.map(|m| m.trim().parse::<usize>().map_err(|_| bad())).transpose()?;
    if levels < 2 {
        return Err(bad());
    }
    Ok(TruncationSection { levels, cutoff })
}
