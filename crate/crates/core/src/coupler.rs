//! C-shunt flux coupler: potential minimum, quartic Taylor expansion and the
//! resulting Duffing-mode parameters as functions of external flux.
//!
//! The potential in the `φ−` coordinate is
//! `V(φ) = −2 E_J cos(φ/√2) − α E_J cos(√2 φ + φ_ext)` (energies in GHz).

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::brent_root;
use crate::units::ghz_to_angular;

const GRID_POINTS: usize = 4096;

/// Coupler parameters at one bias point. Energies in GHz, fluxes in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub ej: f64,
    pub alpha: f64,
    /// Charging energy of the coupler mode, `E_C,cc`.
    pub ec: f64,
    pub phi_ext: f64,
    #[serde(default)]
    pub phi_cor: f64,
}

impl CouplerSpec {
    /// Small-junction ratio after the optional correction-flux rescaling.
    pub fn alpha_eff(&self) -> f64 {
        self.alpha * (0.5 * self.phi_cor).cos()
    }

    pub fn with_flux(&self, phi_ext: f64) -> Self {
        Self { phi_ext, ..*self }
    }

    pub fn potential(&self, phi: f64) -> f64 {
        let a = self.alpha_eff();
        -2.0 * self.ej * (phi / SQRT_2).cos() - a * self.ej * (SQRT_2 * phi + self.phi_ext).cos()
    }

    /// `V'(φ)/(√2 E_J)`, the dimensionless stationarity residual.
    pub fn stationarity(&self, phi: f64) -> f64 {
        (phi / SQRT_2).sin() + self.alpha_eff() * (SQRT_2 * phi + self.phi_ext).sin()
    }

    fn validate(&self) -> Result<()> {
        if !(self.ej > 0.0) || !self.ej.is_finite() {
            return Err(Error::InvalidSpec(format!("coupler E_J must be positive, got {}", self.ej)));
        }
        if !(self.ec > 0.0) {
            return Err(Error::InvalidSpec(format!("coupler E_C must be positive, got {}", self.ec)));
        }
        let a = self.alpha_eff();
        if !(a > 0.125 && a < 0.5) {
            return Err(Error::Regime(format!("effective alpha = {a:.5} outside (1/8, 1/2)")));
        }
        Ok(())
    }
}

/// Wrap into `[−π√2, π√2)`, one period of the potential.
fn wrap_phi(phi: f64) -> f64 {
    let period = 2.0 * PI * SQRT_2;
    (phi + PI * SQRT_2).rem_euclid(period) - PI * SQRT_2
}

/// Global minimum of the coupler potential in `[−π√2, π√2]`.
///
/// A periodic grid scan brackets every local minimum; more than one is
/// rejected as a multi-well configuration.
pub fn find_minimum(spec: &CouplerSpec) -> Result<f64> {
    spec.validate()?;
    let lo = -PI * SQRT_2;
    let h = 2.0 * PI * SQRT_2 / GRID_POINTS as f64;
    let values: Vec<f64> = (0..GRID_POINTS)
        .map(|i| spec.potential(lo + h * i as f64))
        .collect();
    let mut minima = Vec::new();
    for i in 0..GRID_POINTS {
        let prev = values[(i + GRID_POINTS - 1) % GRID_POINTS];
        let next = values[(i + 1) % GRID_POINTS];
        if values[i] <= prev && values[i] < next {
            minima.push(i);
        }
    }
    if minima.is_empty() {
        return Err(Error::Regime("no potential minimum bracketed".into()));
    }
    if minima.len() > 1 {
        return Err(Error::Regime(format!(
            "{} potential wells found; coupler is not single-well",
            minima.len()
        )));
    }
    let centre = lo + h * minima[0] as f64;
    polish_minimum(spec, centre, h)
}

fn polish_minimum(spec: &CouplerSpec, centre: f64, h: f64) -> Result<f64> {
    let f = |x: f64| spec.stationarity(x);
    let (a, b) = (centre - h, centre + h);
    if f(a) * f(b) > 0.0 {
        return Err(Error::Regime("stationarity equation has no sign change at the well".into()));
    }
    let mut x = brent_root(f, a, b, 1e-15, 200)?;
    // Newton polish on the dimensionless residual
    for _ in 0..3 {
        let d = (x / SQRT_2).cos() / SQRT_2
            + SQRT_2 * spec.alpha_eff() * (SQRT_2 * x + spec.phi_ext).cos();
        let r = f(x);
        if r == 0.0 || d <= 0.0 {
            break;
        }
        x -= r / d;
    }
    let x = wrap_phi(x);
    if f(x).abs() >= 1e-12 {
        return Err(Error::Convergence(format!(
            "stationarity residual {:.3e} at coupler minimum",
            f(x)
        )));
    }
    Ok(x)
}

/// Minimum search started from a nearby guess, used along smooth schedules.
/// Falls back to the full grid search if the local step does not settle.
pub fn find_minimum_near(spec: &CouplerSpec, guess: f64) -> Result<f64> {
    spec.validate()?;
    let mut x = guess;
    for _ in 0..50 {
        let r = spec.stationarity(x);
        let d = (x / SQRT_2).cos() / SQRT_2
            + SQRT_2 * spec.alpha_eff() * (SQRT_2 * x + spec.phi_ext).cos();
        if d <= 0.0 {
            return find_minimum(spec);
        }
        let step = r / d;
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if spec.stationarity(x).abs() < 1e-12 && (x - guess).abs() < 0.5 {
        Ok(wrap_phi(x))
    } else {
        find_minimum(spec)
    }
}

/// Coefficients of `φ^k` in the expansion of `V` around its minimum (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficients {
    pub phi_min: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// Analytic Taylor coefficients at a given minimum location.
pub fn taylor_at(spec: &CouplerSpec, phi_min: f64) -> TaylorCoefficients {
    let e = spec.ej;
    let a = spec.alpha_eff();
    let u = phi_min / SQRT_2;
    let v = SQRT_2 * phi_min + spec.phi_ext;
    TaylorCoefficients {
        phi_min,
        c2: 0.5 * e * (u.cos() + 2.0 * a * v.cos()),
        c3: -(e / 6.0) * (u.sin() / SQRT_2 + 2.0 * SQRT_2 * a * v.sin()),
        c4: -(e / 24.0) * (0.5 * u.cos() + 4.0 * a * v.cos()),
    }
}

pub fn taylor_coefficients(spec: &CouplerSpec) -> Result<TaylorCoefficients> {
    Ok(taylor_at(spec, find_minimum(spec)?))
}

/// Duffing-mode parameters of the coupler. Frequencies in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerModeParams {
    pub omega: f64,
    pub anharmonicity: f64,
    /// `K_c`, coefficient of `b†b†b + b†bb`.
    pub cubic: f64,
    pub phi_zpf: f64,
    pub n_zpf: f64,
    pub phi_min: f64,
    /// `E_C,cc / Ẽ` with `Ẽ = 2 c2`.
    pub ec_over_ej: f64,
}

/// Quantize the expanded potential as a Duffing oscillator.
///
/// With stiffness `Ẽ = 2 c2` the harmonic frequency is `√(8 E_C Ẽ)`; the
/// quartic and cubic terms give `U_c = 12 c4 φ_zpf⁴` and `K_c = 3 c3 φ_zpf³`
/// after normal ordering.
pub fn mode_params(coeffs: &TaylorCoefficients, ec: f64) -> Result<CouplerModeParams> {
    if !(coeffs.c2 > 0.0) {
        return Err(Error::Regime(format!(
            "non-positive curvature c2 = {:.4e} GHz at the coupler minimum",
            coeffs.c2
        )));
    }
    if !(ec > 0.0) {
        return Err(Error::InvalidSpec(format!("coupler E_C must be positive, got {ec}")));
    }
    let stiffness = 2.0 * coeffs.c2;
    let phi_zpf = (2.0 * ec / stiffness).powf(0.25);
    let n_zpf = (stiffness / (32.0 * ec)).powf(0.25);
    let omega_h = (8.0 * ec * stiffness).sqrt();
    let u_c = 12.0 * coeffs.c4 * phi_zpf.powi(4);
    let k_c = 3.0 * coeffs.c3 * phi_zpf.powi(3);
    Ok(CouplerModeParams {
        omega: ghz_to_angular(omega_h + u_c),
        anharmonicity: ghz_to_angular(u_c),
        cubic: ghz_to_angular(k_c),
        phi_zpf,
        n_zpf,
        phi_min: coeffs.phi_min,
        ec_over_ej: ec / stiffness,
    })
}

/// Minimum, expansion and quantization in one step.
pub fn coupler_params(spec: &CouplerSpec) -> Result<CouplerModeParams> {
    mode_params(&taylor_coefficients(spec)?, spec.ec)
}

/// Same as [`coupler_params`], warm-starting the minimum search.
pub fn coupler_params_near(spec: &CouplerSpec, phi_min_guess: f64) -> Result<CouplerModeParams> {
    let phi_min = find_minimum_near(spec, phi_min_guess)?;
    mode_params(&taylor_at(spec, phi_min), spec.ec)
}

/// One point of a flux sweep; `params` is `None` where the coupler left the
/// single-well regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub phi_ext: f64,
    pub params: Option<CouplerModeParams>,
}

/// Coupler frequency and anharmonicity over a list of external fluxes.
pub fn spectrum_vs_flux(spec: &CouplerSpec, fluxes: &[f64]) -> Vec<SpectrumPoint> {
    fluxes
        .par_iter()
        .map(|&phi_ext| SpectrumPoint {
            phi_ext,
            params: coupler_params(&spec.with_flux(phi_ext)).ok(),
        })
        .collect()
}

/// Index ranges `[start, end]` over which `ω_c` is strictly monotone.
pub fn monotone_segments(points: &[SpectrumPoint]) -> Vec<(usize, usize)> {
    let mut segments = Vec::new();
    let mut start = None::<usize>;
    let mut dir = 0.0f64;
    for i in 0..points.len() {
        let Some(p) = points[i].params else {
            if let Some(s) = start.take() {
                if i - 1 > s {
                    segments.push((s, i - 1));
                }
            }
            dir = 0.0;
            continue;
        };
        match start {
            None => {
                start = Some(i);
                dir = 0.0;
            }
            Some(s) => {
                let prev = points[i - 1].params.map(|q| q.omega).unwrap_or(p.omega);
                let d = (p.omega - prev).signum();
                if dir != 0.0 && d != dir {
                    segments.push((s, i - 1));
                    start = Some(i - 1);
                }
                dir = d;
            }
        }
    }
    if let Some(s) = start {
        if points.len() - 1 > s {
            segments.push((s, points.len() - 1));
        }
    }
    segments
}

/// Monotone branch of `ω_c(φ_ext)` tabulated on a dense grid, for inverting
/// frequency targets to flux.
#[derive(Debug, Clone)]
pub struct FluxBranch {
    spec: CouplerSpec,
    phis: Vec<f64>,
    omegas: Vec<f64>,
    minima: Vec<f64>,
    decreasing: bool,
}

impl FluxBranch {
    /// Tabulate `ω_c` on `[phi_lo, phi_hi]` and check it is monotone.
    pub fn new(spec: &CouplerSpec, phi_lo: f64, phi_hi: f64, points: usize) -> Result<Self> {
        let points = points.max(3);
        let fluxes: Vec<f64> = (0..points)
            .map(|i| phi_lo + (phi_hi - phi_lo) * i as f64 / (points - 1) as f64)
            .collect();
        let sweep = spectrum_vs_flux(spec, &fluxes);
        let mut omegas = Vec::with_capacity(points);
        let mut minima = Vec::with_capacity(points);
        for p in &sweep {
            let q = p.params.ok_or_else(|| {
                Error::Regime(format!("coupler leaves single-well regime at phi_ext = {}", p.phi_ext))
            })?;
            omegas.push(q.omega);
            minima.push(q.phi_min);
        }
        let decreasing = omegas[points - 1] < omegas[0];
        let monotone = omegas
            .windows(2)
            .all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] });
        if !monotone {
            return Err(Error::Regime("coupler frequency not monotone on the requested flux range".into()));
        }
        Ok(Self {
            spec: *spec,
            phis: fluxes,
            omegas,
            minima,
            decreasing,
        })
    }

    /// The branch between zero and half a flux quantum.
    pub fn lower_half(spec: &CouplerSpec) -> Result<Self> {
        Self::new(spec, 0.0, PI, 2049)
    }

    pub fn omega_range(&self) -> (f64, f64) {
        let (a, b) = (self.omegas[0], *self.omegas.last().unwrap());
        (a.min(b), a.max(b))
    }

    pub fn spec(&self) -> &CouplerSpec {
        &self.spec
    }

    /// Coupler parameters at `phi_ext` using the tabulated minimum as a warm start.
    pub fn params_at(&self, phi_ext: f64) -> Result<CouplerModeParams> {
        let guess = self.interp(&self.phis, &self.minima, phi_ext);
        coupler_params_near(&self.spec.with_flux(phi_ext), guess)
    }

    fn interp(&self, xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let n = xs.len();
        let t = ((x - xs[0]) / (xs[n - 1] - xs[0]) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        ys[i] * (1.0 - f) + ys[i + 1] * f
    }

    /// Flux whose coupler frequency equals `omega` (rad/ns), to within a
    /// residual far below 2π·10 kHz.
    pub fn invert(&self, omega: f64) -> Result<f64> {
        let (lo, hi) = self.omega_range();
        if omega < lo || omega > hi {
            return Err(Error::Unreachable {
                target_ghz: crate::units::angular_to_ghz(omega),
                min_ghz: crate::units::angular_to_ghz(lo),
                max_ghz: crate::units::angular_to_ghz(hi),
            });
        }
        // locate the bracketing table segment
        let n = self.omegas.len();
        let pos = if self.decreasing {
            self.omegas.partition_point(|&w| w > omega)
        } else {
            self.omegas.partition_point(|&w| w < omega)
        };
        let j = pos.clamp(1, n - 1);
        let (pa, pb) = (self.phis[j - 1], self.phis[j]);
        let (wa, wb) = (self.omegas[j - 1], self.omegas[j]);
        if omega == wa {
            return Ok(pa);
        }
        if omega == wb {
            return Ok(pb);
        }
        let guess_min = 0.5 * (self.minima[j - 1] + self.minima[j]);
        let f = |phi: f64| -> f64 {
            coupler_params_near(&self.spec.with_flux(phi), guess_min)
                .map(|p| p.omega - omega)
                .unwrap_or(f64::NAN)
        };
        brent_root(f, pa, pb, 1e-13, 100)
    }
}
