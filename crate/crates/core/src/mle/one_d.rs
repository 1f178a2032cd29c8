use serde::{Deserialize, Serialize};

use crate::density::PiecewiseLogLinear1D;
use crate::error::{Error, Result};
use crate::numeric::{exp_mean, segment_moments};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;

const NEWTON_ITERATIONS: usize = 200;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MleResult1D {
    pub density: PiecewiseLogLinear1D,
    /// `(1/n) Σ φ(X_i) − ∫ e^φ + 1` at the optimum.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
}

/// `(1/n) Σ log f(X_i) − ∫ f + 1` for a density `f`; `−∞` when a sample falls outside the support.
pub fn loglik_1d(f: &PiecewiseLogLinear1D, samples: &[f64]) -> f64 {
    let s: f64 = samples.iter().map(|&x| f.log_pdf(x)).sum();
    s / samples.len() as f64 - f.total_mass() + 1.0
}

/// Largest increase of [`loglik_1d`] from moving one knot height by `±delta` and renormalizing.
///
/// Non-positive up to rounding at a maximizer.
pub fn knot_perturbation_gain(f: &PiecewiseLogLinear1D, samples: &[f64], delta: f64) -> f64 {
    let base = loglik_1d(f, samples);
    let knots = f.knots().to_vec();
    let mut best = f64::NEG_INFINITY;
    for j in 0..knots.len() {
        for d in [delta, -delta] {
            let mut lv = f.logvals().to_vec();
            lv[j] += d;
            let g = PiecewiseLogLinear1D::normalize_unchecked(knots.clone(), lv);
            best = best.max(loglik_1d(&g, samples) - base);
        }
    }
    best
}

/// Distinct sorted values with their relative frequencies.
pub(crate) fn collapse(samples: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("samples must be finite"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut pts: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for x in xs {
        if pts.last() == Some(&x) {
            *ws.last_mut().unwrap() += 1.0;
        } else {
            pts.push(x);
            ws.push(1.0);
        }
    }
    for w in ws.iter_mut() {
        *w /= n;
    }
    Ok((pts, ws))
}

/// Log-concave maximum likelihood estimate from a one-dimensional sample.
pub fn mle_1d(samples: &[f64], tol: f64) -> Result<MleResult1D> {
    let (xs, ws) = collapse(samples)?;
    mle_1d_weighted(&xs, &ws, tol)
}

/// Estimate for distinct increasing points carrying weights that sum to one.
pub fn mle_1d_weighted(xs: &[f64], ws: &[f64], tol: f64) -> Result<MleResult1D> {
    if xs.len() != ws.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ws.len() });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateSample("need at least two distinct sample values".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("points must be strictly increasing"));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be positive, got {tol}")));
    }
    let m = xs.len();
    let range = xs[m - 1] - xs[0];
    let mut active = vec![0, m - 1];
    let mut eta = vec![-range.ln(); 2];
    eta = newton(xs, ws, &active, eta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let theta = interpolate(xs, &active, &eta);
        let h = directional_gains(xs, ws, &theta);
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut a = 0;
        for (j, &hj) in h.iter().enumerate() {
            if a < active.len() && active[a] == j {
                a += 1;
                continue;
            }
            if hj > best.1 {
                best = (j, hj);
            }
        }
        if best.1 <= tol * range {
            converged = true;
            break;
        }
        let pos = active.partition_point(|&k| k < best.0);
        active.insert(pos, best.0);
        eta.insert(pos, theta[best.0]);
        // concave start; the new knot lets Newton introduce a kink there
        loop {
            let next = newton(xs, ws, &active, eta.clone());
            let viol = kinks(xs, &active, &next);
            if viol.iter().all(|&c| c <= 0.0) {
                eta = next;
                break;
            }
            let cur = kinks(xs, &active, &eta);
            // largest step keeping every kink concave
            let mut t = 1.0;
            let mut drop = usize::MAX;
            for k in 0..cur.len() {
                if viol[k] > 0.0 {
                    let tk = if cur[k] < 0.0 { cur[k] / (cur[k] - viol[k]) } else { 0.0 };
                    if tk < t {
                        t = tk;
                        drop = k;
                    }
                }
            }
            if drop == usize::MAX {
                eta = next;
                break;
            }
            for (e, n) in eta.iter_mut().zip(&next) {
                *e += t * (n - *e);
            }
            // kink k sits at active[k + 1]; at step t it is flat and can go
            let after = kinks(xs, &active, &eta);
            let mut keep = vec![true; active.len()];
            for (k, &c) in after.iter().enumerate() {
                if k == drop || c >= 0.0 {
                    keep[k + 1] = false;
                }
            }
            let (na, ne): (Vec<usize>, Vec<f64>) =
                active.iter().zip(&eta).zip(&keep).filter(|(_, &k)| k).map(|((&a, &e), _)| (a, e)).unzip();
            active = na;
            eta = ne;
        }
    }
    let theta = interpolate(xs, &active, &eta);
    let integral: f64 = (0..active.len() - 1)
        .map(|k| (xs[active[k + 1]] - xs[active[k]]) * exp_mean(eta[k], eta[k + 1]))
        .sum();
    let loglik = ws.iter().zip(&theta).map(|(w, t)| w * t).sum::<f64>() - integral + 1.0;
    let knots: Vec<f64> = active.iter().map(|&k| xs[k]).collect();
    let density = PiecewiseLogLinear1D::construct_normalized(knots, eta)?;
    Ok(MleResult1D { density, loglik, iterations, converged, tolerance: tol })
}

/// Slope changes at interior active knots, scaled so rounding-level increases count as flat.
fn kinks(xs: &[f64], active: &[usize], eta: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = (0..active.len() - 1)
        .map(|k| (eta[k + 1] - eta[k]) / (xs[active[k + 1]] - xs[active[k]]))
        .collect();
    (1..s.len())
        .map(|k| {
            let c = s[k] - s[k - 1];
            let scale = 1f64.max(s[k].abs()).max(s[k - 1].abs());
            if c.abs() <= 1e-13 * scale {
                0.0
            } else {
                c
            }
        })
        .collect()
}

fn interpolate(xs: &[f64], active: &[usize], eta: &[f64]) -> Vec<f64> {
    let mut theta = vec![0.0; xs.len()];
    for k in 0..active.len() - 1 {
        let (a, b) = (active[k], active[k + 1]);
        let w = xs[b] - xs[a];
        for i in a..=b {
            let l = (xs[i] - xs[a]) / w;
            theta[i] = (1.0 - l) * eta[k] + l * eta[k + 1];
        }
    }
    theta
}

/// `∫_{x_1}^{x_j} (F̂ − F_n)` at every sample point; the gain from adding a kink at `x_j`.
fn directional_gains(xs: &[f64], ws: &[f64], theta: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let mut h = vec![0.0; m];
    let mut fhat = 0.0;
    let mut fn_cum = 0.0;
    for i in 0..m - 1 {
        let d = xs[i + 1] - xs[i];
        fn_cum += ws[i];
        let tail = segment_moments(theta[i + 1], theta[i])[1];
        h[i + 1] = h[i] + d * (fhat - fn_cum) + d * d * tail;
        fhat += d * exp_mean(theta[i], theta[i + 1]);
    }
    h
}

/// Weights pushed onto the active knots by linear interpolation.
fn reduced_weights(xs: &[f64], ws: &[f64], active: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; active.len()];
    for k in 0..active.len() - 1 {
        let (a, b) = (active[k], active[k + 1]);
        let w = xs[b] - xs[a];
        out[k] += ws[a];
        for i in a + 1..b {
            let l = (xs[i] - xs[a]) / w;
            out[k] += ws[i] * (1.0 - l);
            out[k + 1] += ws[i] * l;
        }
    }
    out[active.len() - 1] += ws[active[active.len() - 1]];
    out
}

/// Maximizes `Σ w̃ η − Σ Δ J(η_k, η_{k+1})` over the values at the active knots.
fn newton(xs: &[f64], ws: &[f64], active: &[usize], mut eta: Vec<f64>) -> Vec<f64> {
    let p = active.len();
    let wt = reduced_weights(xs, ws, active);
    let dx: Vec<f64> = (0..p - 1).map(|k| xs[active[k + 1]] - xs[active[k]]).collect();
    let objective = |e: &[f64]| -> f64 {
        let mut v: f64 = wt.iter().zip(e).map(|(w, x)| w * x).sum();
        for k in 0..p - 1 {
            v -= dx[k] * exp_mean(e[k], e[k + 1]);
        }
        v
    };
    let mut val = objective(&eta);
    for _ in 0..NEWTON_ITERATIONS {
        // gradient and Hessian of the negated objective
        let mut g: Vec<f64> = wt.iter().map(|w| -w).collect();
        let mut diag = vec![0.0; p];
        let mut off = vec![0.0; p - 1];
        for k in 0..p - 1 {
            let fwd = segment_moments(eta[k], eta[k + 1]);
            let bwd = segment_moments(eta[k + 1], eta[k]);
            g[k] += dx[k] * bwd[1];
            g[k + 1] += dx[k] * fwd[1];
            diag[k] += dx[k] * bwd[2];
            diag[k + 1] += dx[k] * fwd[2];
            off[k] += dx[k] * (fwd[1] - fwd[2]);
        }
        let step = solve_tridiagonal(&diag, &off, &g);
        let decrement: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
        if !(decrement > 1e-28) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = eta.iter().zip(&step).map(|(e, s)| e - t * s).collect();
            let tv = objective(&trial);
            if tv >= val + 1e-4 * t * decrement {
                eta = trial;
                val = tv;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || decrement < 1e-24 {
            break;
        }
    }
    eta
}

/// Solves a symmetric tridiagonal system by the Thomas algorithm.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
