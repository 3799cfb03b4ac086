//! Scalar root finding, one-dimensional minimization and a Nelder–Mead
//! simplex optimizer.

use crate::error::{Error, Result};

/// Brent's method for a root of `f` in `[a, b]`. Requires a sign change.
pub fn brent_root<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{a:.6e}, {b:.6e}] (f = {fa:.3e}, {fb:.3e})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Convergence(format!(
        "Brent root finder exceeded {max_iter} iterations"
    )))
}

/// Result of a bracketed scalar minimization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Brent's parabolic/golden-section minimizer on `[a, b]`.
pub fn brent_minimize<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> ScalarMinimum
where
    F: FnMut(f64) -> f64,
{
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut evaluations = 1;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + xtol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        evaluations += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    ScalarMinimum {
        x,
        value: fx,
        evaluations,
    }
}

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub ftol: f64,
    /// Stop when every simplex vertex lies within this distance of the best
    /// one, measured in units of `initial_step` per coordinate.
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 300,
            ftol: 1e-10,
            xtol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Every evaluated point in order, with its objective value.
    pub trace: Vec<(Vec<f64>, f64)>,
}

/// Derivative-free simplex minimization within box bounds.
///
/// The initial simplex is `x0` plus one vertex per coordinate displaced by
/// `initial_step[i]`. Points are clamped into `bounds` before evaluation.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    initial_step: &[f64],
    bounds: &[(f64, f64)],
    options: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(initial_step.len(), n);
    assert_eq!(bounds.len(), n);
    let clamp = |x: &mut Vec<f64>| {
        for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *xi = xi.clamp(lo, hi);
        }
    };
    let mut trace: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut eval = |x: &Vec<f64>, trace: &mut Vec<(Vec<f64>, f64)>| {
        let v = f(x);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        trace.push((x.clone(), v));
        v
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    let v0 = eval(&start, &mut trace);
    simplex.push((start.clone(), v0));
    for i in 0..n {
        let mut p = start.clone();
        p[i] += initial_step[i];
        clamp(&mut p);
        if (p[i] - start[i]).abs() < 0.5 * initial_step[i].abs() {
            // pinned against a bound: step the other way
            p[i] = start[i] - initial_step[i];
            clamp(&mut p);
        }
        let v = eval(&p, &mut trace);
        simplex.push((p, v));
    }

    let sort = |s: &mut Vec<(Vec<f64>, f64)>| {
        // stable: ties keep the earlier vertex first
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
    };
    let mut converged = false;
    while trace.len() < options.max_evaluations {
        sort(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread_x = simplex[1..].iter().all(|(p, _)| {
            p.iter()
                .zip(&simplex[0].0)
                .zip(initial_step)
                .all(|((a, b), s)| (a - b).abs() <= options.xtol * s.abs().max(f64::MIN_POSITIVE))
        });
        if (worst - best).abs() <= options.ftol || spread_x {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut p);
            p
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut trace);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut trace);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5);
                let fc = eval(&xc, &mut trace);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut trace);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    clamp(&mut p);
                    let v = eval(&p, &mut trace);
                    *vertex = (p, v);
                }
            }
        }
    }
    sort(&mut simplex);
    // best over the whole trace, first occurrence on ties
    let (x, value) = trace
        .iter()
        .fold(None::<&(Vec<f64>, f64)>, |acc, item| match acc {
            Some(a) if a.1 <= item.1 => Some(a),
            _ => Some(item),
        })
        .map(|(x, v)| (x.clone(), *v))
        .unwrap_or((simplex[0].0.clone(), simplex[0].1));
    NelderMeadResult {
        x,
        value,
        evaluations: trace.len(),
        converged,
        trace,
    }
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(samples: &[f64], dx: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    dx * (inner + 0.5 * (samples[0] + samples[samples.len() - 1]))
}
