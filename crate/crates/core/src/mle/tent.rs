use serde::{Deserialize, Serialize};

use super::hull::{check_planar_spread, upper_hull};
use super::standardize::standardize;
use crate::density::TentDensity2D;
use crate::error::{Error, Result};
use crate::numeric::exp_divided_difference as dd;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TentOptions {
    pub max_iterations: usize,
    /// Stop after three consecutive objective decreases below this value.
    pub tol: f64,
}

impl Default for TentOptions {
    fn default() -> Self {
        TentOptions { max_iterations: 1500, tol: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TentFit {
    pub density: TentDensity2D,
    /// `−(1/n) Σ y_i + ∫ exp h̄_y` at the returned heights, in whitened coordinates.
    pub objective: f64,
    /// `∫ exp h̄_y` at the solver's last iterate, before the final shift to unit mass.
    pub raw_mass: f64,
    pub iterations: usize,
    pub converged: bool,
}


struct Problem {
    z: Vec<[f64; 2]>,
    w: Vec<f64>,
}

fn det2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    mass: f64,
    tris: Vec<[usize; 3]>,
}

impl Problem {
    fn eval(&self, y: &[f64]) -> Result<Eval> {
        let tris = upper_hull(&self.z, y)?;
        let mut grad: Vec<f64> = self.w.iter().map(|w| -w).collect();
        let mut mass = 0.0;
        for t in &tris {
            let a = det2(self.z[t[0]], self.z[t[1]], self.z[t[2]]).abs();
            let ys = [y[t[0]], y[t[1]], y[t[2]]];
            mass += a * dd(&ys);
            for k in 0..3 {
                grad[t[k]] += a * dd(&[ys[0], ys[1], ys[2], ys[k]]);
            }
        }
        let value = mass - dotv(&self.w, y);
        Ok(Eval { value, grad, mass, tris })
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dotv(a, a).sqrt()
}

/// Distinct points with relative frequencies.
fn collapse_2d(samples: &[Vec<f64>]) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(samples.len());
    for s in samples {
        if s.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: s.len() });
        }
        if !(s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::param("samples must be finite"));
        }
        pts.push([s[0], s[1]]);
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let n = pts.len() as f64;
    let mut out: Vec<[f64; 2]> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for p in pts {
        if out.last() == Some(&p) {
            *ws.last_mut().unwrap() += 1.0 / n;
        } else {
            out.push(p);
            ws.push(1.0 / n);
        }
    }
    Ok((out, ws))
}

fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let m = s_hist.len();
    let mut alpha = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / dotv(&y_hist[i], &s_hist[i]);
        alpha[i] = rho * dotv(&s_hist[i], &q);
        for (qv, yv) in q.iter_mut().zip(&y_hist[i]) {
            *qv -= alpha[i] * yv;
        }
    }
    if m > 0 {
        let gamma = dotv(&s_hist[m - 1], &y_hist[m - 1]) / dotv(&y_hist[m - 1], &y_hist[m - 1]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..m {
        let rho = 1.0 / dotv(&y_hist[i], &s_hist[i]);
        let beta = rho * dotv(&y_hist[i], &q);
        for (qv, sv) in q.iter_mut().zip(&s_hist[i]) {
            *qv += (alpha[i] - beta) * sv;
        }
    }
    q
}

/// Weak Wolfe conditions by bracketing and bisection.
fn wolfe_search(prob: &Problem, y: &[f64], cur: &Eval, d: &[f64], slope: f64) -> Result<Option<(f64, Eval)>> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut t = 1.0;
    let mut best: Option<(f64, Eval)> = None;
    for _ in 0..60 {
        let trial: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + t * b).collect();
        let e = prob.eval(&trial)?;
        if e.value > cur.value + C1 * t * slope || !e.value.is_finite() {
            hi = t;
        } else {
            if dotv(&e.grad, d) >= C2 * slope {
                return Ok(Some((t, e)));
            }
            if best.as_ref().map_or(true, |(_, b)| e.value < b.value) {
                best = Some((t, e));
            }
            lo = t;
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        if hi.is_finite() && hi - lo < 1e-16 * hi {
            break;
        }
    }
    Ok(best)
}

/// Returns the heights, the iteration count and whether the decrease criterion was met.
fn lbfgs(prob: &Problem, mut y: Vec<f64>, opts: &TentOptions) -> Result<(Vec<f64>, usize, bool)> {
    let mut cur = prob.eval(&y)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut small = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut d: Vec<f64> = two_loop(&cur.grad, &s_hist, &y_hist).iter().map(|v| -v).collect();
        let mut slope = dotv(&cur.grad, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            d = cur.grad.iter().map(|v| -v).collect();
            slope = dotv(&cur.grad, &d);
            if !(slope < 0.0) {
                return Ok((y, iterations, true));
            }
        }
        let Some((t, next)) = wolfe_search(prob, &y, &cur, &d, slope)? else {
            return Ok((y, iterations, true));
        };
        let s: Vec<f64> = d.iter().map(|v| t * v).collect();
        let g: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        if dotv(&s, &g) > 1e-16 * norm(&g) * norm(&s) {
            s_hist.push(s.clone());
            y_hist.push(g);
            if s_hist.len() > 10 {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let decrease = cur.value - next.value;
        for (a, b) in y.iter_mut().zip(&s) {
            *a += b;
        }
        cur = next;
        if decrease < opts.tol {
            small += 1;
            if small >= 3 {
                return Ok((y, iterations, true));
            }
        } else {
            small = 0;
        }
    }
    Ok((y, iterations, false))
}

/// Log-concave maximum likelihood estimate in the plane, as a tent over the sample points.
///
/// The sample is whitened first. Heights are fitted by limited-memory quasi-Newton steps with a
/// weak Wolfe bisection line search, which tolerates the kinks where the triangulation changes.
pub fn mle_2d_tent(samples: &[Vec<f64>], opts: &TentOptions) -> Result<TentFit> {
    let (pts, w) = collapse_2d(samples)?;
    if pts.len() < 3 {
        return Err(Error::DegenerateSample("need at least three distinct points".into()));
    }
    check_planar_spread(&pts)?;
    let st = standardize(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>())?;
    let z: Vec<[f64; 2]> = st.transformed.iter().map(|v| [v[0], v[1]]).collect();
    let prob = Problem { z, w };
    let y0: Vec<f64> =
        prob.z.iter().map(|p| -0.5 * (p[0] * p[0] + p[1] * p[1]) - (2.0 * std::f64::consts::PI).ln()).collect();
    let (y, iterations, converged) = lbfgs(&prob, y0, opts)?;
    let e = prob.eval(&y)?;
    // the best constant shift rescales the mass to one
    let shift = e.mass.ln();
    let objective = e.value - e.mass + 1.0 + shift;
    let jac = st.jacobian();
    let logvals: Vec<f64> = y.iter().map(|v| v - shift - jac.ln()).collect();
    let density = TentDensity2D::new(pts, logvals, e.tris)?;
    Ok(TentFit { density, objective, raw_mass: e.mass, iterations, converged })
}
