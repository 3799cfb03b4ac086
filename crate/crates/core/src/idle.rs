//! Idle-point search over coupler flux, the zero-ZZ manifold over coupler
//! junction parameters, and robustness against fabrication errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitSpec, DimerModel, DIMER_C};
use crate::crosstalk::{DimerAnalyzer, ExactCrosstalk};
use crate::error::{Error, Result};
use crate::fock::TruncationPolicy;
use crate::numerics::{brent_minimize, brent_root};

/// What the flux search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdleObjective {
    /// Minimal delocalization ε.
    MinEpsilon,
    /// Minimal |ζ|, preferring exact zeros.
    MinAbsZeta,
}

/// Flux search settings. Fluxes in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdleSearchOptions {
    pub window: (f64, f64),
    pub grid_points: usize,
    pub objective: IdleObjective,
    pub xtol: f64,
}

impl IdleSearchOptions {
    pub fn new(window: (f64, f64), objective: IdleObjective) -> Self {
        Self {
            window,
            grid_points: 41,
            objective,
            xtol: 1e-9,
        }
    }
}

/// Result of a flux search (rad, rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdleSearchResult {
    pub phi_ext: f64,
    pub omega_c: f64,
    pub epsilon: f64,
    pub zeta: f64,
    /// Refinement bracket around the minimizer.
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// The minimizer sits on the window edge or the objective was flat.
    pub at_edge: bool,
}

struct Evaluator<'a> {
    model: &'a DimerModel,
    analyzer: &'a DimerAnalyzer,
}

impl Evaluator<'_> {
    fn eval(&self, phi: f64) -> Result<ExactCrosstalk> {
        let p = self.model.params_at(phi)?;
        self.analyzer.exact(&p)
    }
}

/// Search the flux window for the idle point of `model`.
///
/// A uniform grid locates the best cell, then Brent refinement polishes it.
/// Grid points whose labeling fails are skipped; the search fails only when
/// every point fails.
pub fn find_idle_flux(
    model: &DimerModel,
    analyzer: &DimerAnalyzer,
    opts: &IdleSearchOptions,
) -> Result<IdleSearchResult> {
    let (lo, hi) = opts.window;
    if !(hi > lo) {
        return Err(Error::Config(format!("empty flux window [{lo}, {hi}]")));
    }
    let n = opts.grid_points.max(3);
    let ev = Evaluator { model, analyzer };
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let samples: Vec<Option<ExactCrosstalk>> = xs.iter().map(|&x| ev.eval(x).ok()).collect();
    let mut evaluations = n;
    if samples.iter().all(Option::is_none) {
        // surface the error from the first point
        ev.eval(xs[0])?;
        return Err(Error::Convergence("no flux point in the window could be labeled".into()));
    }
    let score = |c: &ExactCrosstalk| match opts.objective {
        IdleObjective::MinEpsilon => c.epsilon,
        IdleObjective::MinAbsZeta => c.zeta.abs(),
    };

    if opts.objective == IdleObjective::MinAbsZeta {
        // exact zeros first: pick the crossing whose neighbors have the smallest ε
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n - 1 {
            if let (Some(a), Some(b)) = (samples[i], samples[i + 1]) {
                if a.zeta == 0.0 || a.zeta * b.zeta < 0.0 {
                    let eps = a.epsilon.max(b.epsilon);
                    if best.is_none_or(|(_, e)| eps < e) {
                        best = Some((i, eps));
                    }
                }
            }
        }
        if let Some((i, _)) = best {
            let mut count = 0usize;
            let f = |x: f64| {
                count += 1;
                ev.eval(x).map(|c| c.zeta).unwrap_or(f64::NAN)
            };
            let root = brent_root(f, xs[i], xs[i + 1], opts.xtol, 200)?;
            evaluations += count;
            let c = ev.eval(root)?;
            return finish(model, root, c, (xs[i], xs[i + 1]), evaluations + 1, false);
        }
    }

    let mut best_i = None;
    for (i, s) in samples.iter().enumerate() {
        if let Some(c) = s {
            if best_i.is_none_or(|j: usize| score(c) < score(&samples[j].unwrap())) {
                best_i = Some(i);
            }
        }
    }
    let i = best_i.unwrap();
    let best_value = score(&samples[i].unwrap());
    let flat = samples.iter().flatten().all(|c| score(c) == best_value);
    if flat {
        return finish(model, xs[i], samples[i].unwrap(), (xs[i], xs[i]), evaluations, true);
    }
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(n - 1)];
    let mut count = 0usize;
    let m = brent_minimize(
        |x| {
            count += 1;
            ev.eval(x).map(|c| score(&c)).unwrap_or(f64::INFINITY)
        },
        a,
        b,
        opts.xtol,
        200,
    );
    evaluations += count;
    let (x, c) = if m.value <= best_value {
        (m.x, ev.eval(m.x)?)
    } else {
        (xs[i], samples[i].unwrap())
    };
    let at_edge = (x - lo).abs() <= 2.0 * opts.xtol || (hi - x).abs() <= 2.0 * opts.xtol;
    finish(model, x, c, (a, b), evaluations + 1, at_edge)
}

fn finish(
    model: &DimerModel,
    phi: f64,
    c: ExactCrosstalk,
    bracket: (f64, f64),
    evaluations: usize,
    at_edge: bool,
) -> Result<IdleSearchResult> {
    let p = model.params_at(phi)?;
    Ok(IdleSearchResult {
        phi_ext: phi,
        omega_c: p.modes[DIMER_C].omega,
        epsilon: c.epsilon,
        zeta: c.zeta,
        bracket,
        evaluations,
        at_edge,
    })
}

/// ε-minimizing idle point of a circuit.
pub fn idle_point(spec: &CircuitSpec, trunc: &TruncationPolicy, window: (f64, f64)) -> Result<IdleSearchResult> {
    let model = DimerModel::new(spec)?;
    let analyzer = DimerAnalyzer::new(trunc)?;
    find_idle_flux(&model, &analyzer, &IdleSearchOptions::new(window, IdleObjective::MinEpsilon))
}

/// One cell of the zero-ZZ manifold scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCell {
    pub ej: f64,
    pub alpha: f64,
    pub result: Option<IdleSearchResult>,
}

/// ζ at the ε-minimizing flux over an `(E_Jc, α)` grid, plus the zero contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroZzManifold {
    pub ej: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Row-major over `(ej, alpha)`.
    pub cells: Vec<ManifoldCell>,
    /// Points `(E_Jc, α)` where ζ crosses zero along grid edges.
    pub contour: Vec<(f64, f64)>,
}

impl ZeroZzManifold {
    pub fn cell(&self, i_ej: usize, i_alpha: usize) -> &ManifoldCell {
        &self.cells[i_ej * self.alpha.len() + i_alpha]
    }
}

fn zeta_at(base: &CircuitSpec, ej: f64, alpha: f64, analyzer: &DimerAnalyzer, opts: &IdleSearchOptions) -> Option<IdleSearchResult> {
    let mut spec = *base;
    spec.coupler.ej = ej;
    spec.coupler.alpha = alpha;
    let model = DimerModel::new(&spec).ok()?;
    find_idle_flux(&model, analyzer, opts).ok()
}

/// Scan `(E_Jc, α)` and locate where the ε-min idle point has zero ZZ.
///
/// Cells outside the single-well regime or without a labelable window are
/// `None`. Each sign change of ζ between neighboring cells is refined by
/// `bisection_steps` bisections along that grid edge.
pub fn zero_zz_manifold(
    base: &CircuitSpec,
    ej: &[f64],
    alpha: &[f64],
    trunc: &TruncationPolicy,
    opts: &IdleSearchOptions,
    bisection_steps: usize,
) -> Result<ZeroZzManifold> {
    let analyzer = DimerAnalyzer::new(trunc)?;
    let mut opts = *opts;
    opts.objective = IdleObjective::MinEpsilon;
    let pairs: Vec<(f64, f64)> = ej.iter().flat_map(|&e| alpha.iter().map(move |&a| (e, a))).collect();
    let cells: Vec<ManifoldCell> = pairs
        .par_iter()
        .map(|&(e, a)| ManifoldCell {
            ej: e,
            alpha: a,
            result: zeta_at(base, e, a, &analyzer, &opts),
        })
        .collect();
    let na = alpha.len();
    let mut edges = Vec::new();
    for i in 0..ej.len() {
        for j in 0..na {
            let here = &cells[i * na + j];
            let mut neighbors = Vec::new();
            if j + 1 < na {
                neighbors.push(&cells[i * na + j + 1]);
            }
            if i + 1 < ej.len() {
                neighbors.push(&cells[(i + 1) * na + j]);
            }
            for other in neighbors {
                if let (Some(r0), Some(r1)) = (here.result, other.result) {
                    if r0.zeta * r1.zeta < 0.0 {
                        edges.push(((here.ej, here.alpha, r0.zeta), (other.ej, other.alpha, r1.zeta)));
                    }
                }
            }
        }
    }
    let contour = edges
        .par_iter()
        .map(|&((e0, a0, z0), (e1, a1, _))| {
            let (mut t0, mut t1) = (0.0, 1.0);
            let mut s0 = z0.signum();
            for _ in 0..bisection_steps {
                let t = 0.5 * (t0 + t1);
                let z = zeta_at(base, e0 + t * (e1 - e0), a0 + t * (a1 - a0), &analyzer, &opts).map(|r| r.zeta);
                match z {
                    Some(z) if z.signum() == s0 => {
                        t0 = t;
                        s0 = z.signum();
                    }
                    Some(_) => t1 = t,
                    None => break,
                }
            }
            let t = 0.5 * (t0 + t1);
            (e0 + t * (e1 - e0), a0 + t * (a1 - a0))
        })
        .collect();
    Ok(ZeroZzManifold {
        ej: ej.to_vec(),
        alpha: alpha.to_vec(),
        cells,
        contour,
    })
}

/// Relative fabrication errors of the coupler, `δE = 1 − E/E_opt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FabricationError {
    pub d_ec: f64,
    /// Combined junction error `sgn(δE_J) √(δE_J² + δ(αE_J)²)`.
    pub d_ej: f64,
}

impl FabricationError {
    /// Split the combined junction error into equal and opposite errors of
    /// the large and small junctions, then apply both to `spec`.
    pub fn apply(&self, spec: &CircuitSpec) -> CircuitSpec {
        let d = self.d_ej / std::f64::consts::SQRT_2;
        let mut out = *spec;
        out.coupler.ej = spec.coupler.ej * (1.0 - d);
        out.coupler.alpha = spec.coupler.alpha * (1.0 + d) / (1.0 - d);
        out
    }

    /// Multiplier for the coupler charging energy.
    pub fn ec_scale(&self) -> f64 {
        1.0 - self.d_ec
    }
}

/// Crosstalk after re-optimizing the flux of a perturbed coupler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub error: FabricationError,
    pub result: Option<IdleSearchResult>,
}

/// Model of `spec` with a fabrication error applied to the coupler.
pub fn perturbed_model(spec: &CircuitSpec, error: &FabricationError) -> Result<DimerModel> {
    let mut model = DimerModel::new(&error.apply(spec))?;
    model.coupler_ec_scale = error.ec_scale();
    Ok(model)
}

/// Evaluate every fabrication error in `errors` with the flux re-optimized
/// for minimal |ζ| (default objective) or ε.
pub fn robustness_grid(
    spec: &CircuitSpec,
    errors: &[FabricationError],
    trunc: &TruncationPolicy,
    opts: &IdleSearchOptions,
) -> Result<Vec<RobustnessCell>> {
    let analyzer = DimerAnalyzer::new(trunc)?;
    Ok(errors
        .par_iter()
        .map(|e| RobustnessCell {
            error: *e,
            result: perturbed_model(spec, e)
                .and_then(|m| find_idle_flux(&m, &analyzer, opts))
                .ok(),
        })
        .collect())
}

/// Cartesian grid of fabrication errors, `δE_C` outer and `δE_J` inner.
pub fn error_grid(d_ec: &[f64], d_ej: &[f64]) -> Vec<FabricationError> {
    d_ec.iter()
        .flat_map(|&c| d_ej.iter().map(move |&j| FabricationError { d_ec: c, d_ej: j }))
        .collect()
}

/// `n` evenly spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_is_identity() {
        let spec = CircuitSpec::reference();
        let e = FabricationError { d_ec: 0.0, d_ej: 0.0 };
        assert_eq!(e.apply(&spec), spec);
        assert_eq!(e.ec_scale(), 1.0);
    }

    #[test]
    fn junction_split_convention() {
        let spec = CircuitSpec::reference();
        let e = FabricationError { d_ec: 0.0, d_ej: 0.04 };
        let p = e.apply(&spec);
        let d_large = 1.0 - p.coupler.ej / spec.coupler.ej;
        let small = |s: &CircuitSpec| s.coupler.alpha * s.coupler.ej;
        let d_small = 1.0 - small(&p) / small(&spec);
        assert!(d_large > 0.0 && d_small < 0.0);
        let combined = d_large.signum() * (d_large.powi(2) + d_small.powi(2)).sqrt();
        assert!((combined - 0.04).abs() < 1e-12);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-0.05, 0.05, 21);
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], -0.05);
        assert!((v[10]).abs() < 1e-17);
        assert_eq!(v[20], 0.05);
    }

    #[test]
    fn uncoupled_search_is_flat_and_flagged() {
        let mut spec = CircuitSpec::reference();
        spec.caps.c12 = 0.0;
        spec.caps.c1c = 0.0;
        spec.caps.c2c = 0.0;
        let model = DimerModel::new(&spec).unwrap();
        let analyzer = DimerAnalyzer::new(&TruncationPolicy::new(3)).unwrap();
        let mut opts = IdleSearchOptions::new((2.6, 3.14), IdleObjective::MinEpsilon);
        opts.grid_points = 5;
        let r = find_idle_flux(&model, &analyzer, &opts).unwrap();
        assert!(r.at_edge);
        assert_eq!(r.epsilon, 0.0);
        assert!(r.zeta.abs() < 1e-12);
        assert_eq!(r.phi_ext, 2.6);
    }
}
