//! Sphere packings, halfspace polytopes, spherical caps and uniform ball sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;
use crate::rng::{seeded, standard_normal};

/// Proposals per dimension used by [`greedy_sphere_packing`].
pub const PROPOSALS_PER_DIM: usize = 100_000;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpherePacking {
    pub dim: usize,
    pub eps: f64,
    pub points: Vec<Vec<f64>>,
    /// Every proposal ended within `2 eps` of some packing point.
    pub maximal: bool,
    pub proposals: usize,
    pub seed: u64,
}

impl SpherePacking {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                best = best.min(dist_sq(&self.points[i], &self.points[j]));
            }
        }
        best.sqrt()
    }

    /// Exhaustive check that all pairs are strictly more than `2 eps` apart.
    pub fn verify_separation(&self) -> bool {
        let thr = 4.0 * self.eps * self.eps;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                if dist_sq(&self.points[i], &self.points[j]) <= thr {
                    return false;
                }
            }
        }
        true
    }

    /// Largest distance from any probe point to its nearest packing point.
    pub fn covering_radius(&self, probes: &[Vec<f64>]) -> f64 {
        probes
            .iter()
            .map(|p| {
                self.points
                    .iter()
                    .map(|x| dist_sq(p, x))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
            .sqrt()
    }
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lower and upper bounds on the size of any maximal `2 eps`-packing of the unit sphere.
pub fn packing_bounds(d: usize, eps: f64) -> (u64, u64) {
    let k = (d - 1) as f64;
    let lower = (2.0 * std::f64::consts::PI).sqrt() * k.sqrt() / 3f64.sqrt() / 2f64.powf(k) * eps.powf(-k);
    let upper = 4f64.powf(k) * std::f64::consts::PI * k.sqrt() / 15f64.powf(k / 2.0) * eps.powf(-k);
    // guard against the last bit deciding a ceiling or floor
    ((lower - 1e-9).ceil() as u64, (upper + 1e-9).floor() as u64)
}

fn check_packing_params(d: usize, eps: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::param(format!("packing dimension must be at least 2, got {d}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::param(format!("packing eps must lie in (0, 1/2], got {eps}")));
    }
    Ok(())
}

pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Farthest-point greedy packing over `100000 d` seeded proposals.
pub fn greedy_sphere_packing(d: usize, eps: f64, seed: u64) -> Result<SpherePacking> {
    greedy_sphere_packing_with(d, eps, seed, PROPOSALS_PER_DIM * d)
}

pub fn greedy_sphere_packing_with(d: usize, eps: f64, seed: u64, proposals: usize) -> Result<SpherePacking> {
    check_packing_params(d, eps)?;
    if proposals == 0 {
        return Err(Error::param("proposal count must be positive"));
    }
    let mut rng = seeded(seed);
    let mut cand: Vec<f64> = Vec::with_capacity(proposals * d);
    for _ in 0..proposals {
        cand.extend(sample_unit_sphere(d, &mut rng));
    }
    let thr = 4.0 * eps * eps;
    let mut points: Vec<Vec<f64>> = Vec::new();
    // active proposals and their squared distance to the packing
    let mut active: Vec<usize> = (0..proposals).collect();
    let mut mind = vec![f64::INFINITY; proposals];
    let mut next = 0usize;
    loop {
        let p: Vec<f64> = cand[next * d..(next + 1) * d].to_vec();
        let mut best = -1.0;
        let mut best_idx = usize::MAX;
        let mut w = 0;
        for r in 0..active.len() {
            let i = active[r];
            let c = &cand[i * d..(i + 1) * d];
            let mut s = 0.0;
            for k in 0..d {
                let t = c[k] - p[k];
                s += t * t;
            }
            let m = mind[i].min(s);
            if m > thr {
                mind[i] = m;
                active[w] = i;
                w += 1;
                if m > best {
                    best = m;
                    best_idx = i;
                }
            }
        }
        active.truncate(w);
        points.push(p);
        if best_idx == usize::MAX {
            break;
        }
        next = best_idx;
    }
    let packing = SpherePacking {
        dim: d,
        eps,
        points,
        maximal: true,
        proposals,
        seed,
    };
    let (lo, hi) = packing_bounds(d, eps);
    let n = packing.len() as u64;
    if n < lo || n > hi {
        return Err(Error::numeric(format!(
            "greedy packing size {n} outside [{lo}, {hi}]; increase the proposal count"
        )));
    }
    Ok(packing)
}

/// `∫₀^{eps² − eps⁴/4} t^{(d+1)/2 − 1} (1 − t)^{−1/2} dt`.
pub fn cap_integral(d: usize, eps: f64) -> Result<f64> {
    check_packing_params(d, eps)?;
    Ok(cap_beta_integral(d, eps * eps - eps.powi(4) / 4.0))
}

/// `∫₀^u t^{(d+1)/2 − 1} (1 − t)^{−1/2} dt` for `0 ≤ u ≤ 1`.
pub(crate) fn cap_beta_integral(d: usize, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * (d as f64 + 1.0);
    if u >= 1.0 {
        return gamma(a) * gamma(0.5) / gamma(a + 0.5);
    }
    // substitute t = u s so the tolerance is relative to the result's scale
    let q = adaptive_simpson(|s| s.powf(a - 1.0) * (1.0 - u * s).powf(-0.5), 0.0, 1.0, 1e-12, 60);
    u.powf(a) * q.value
}

pub fn ball_volume(d: usize, radius: f64) -> f64 {
    let h = 0.5 * d as f64;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0) * radius.powi(d as i32)
}

/// Volume of `{x ∈ B(0, radius) : bᵀx > offset}` for a unit vector `b`.
pub fn cap_volume(d: usize, radius: f64, offset: f64) -> f64 {
    if offset >= radius {
        return 0.0;
    }
    if offset <= -radius {
        return ball_volume(d, radius);
    }
    let h = offset / radius;
    if h < 0.0 {
        return ball_volume(d, radius) - cap_volume(d, radius, -offset);
    }
    let u = (1.0 - h) * (1.0 + h);
    cap_volume_from_beta(d, radius, cap_beta_integral(d, u))
}

pub(crate) fn cap_volume_from_beta(d: usize, radius: f64, integral: f64) -> f64 {
    let k = 0.5 * (d as f64 - 1.0);
    0.5 * std::f64::consts::PI.powf(k) / gamma(k + 1.0) * integral * radius.powi(d as i32)
}

/// Uniform draw from the closed ball of the given radius.
pub fn sample_uniform_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::param("ball dimension must be at least 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!("ball radius must be positive, got {radius}")));
    }
    Ok(uniform_ball_point(d, radius, rng))
}

pub(crate) fn uniform_ball_point<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    if d == 1 {
        return vec![radius * (2.0 * rng.gen::<f64>() - 1.0)];
    }
    let u: f64 = rng.gen();
    let s = radius * u.powf(1.0 / d as f64);
    sample_unit_sphere(d, rng).into_iter().map(|x| x * s).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("halfspace normal has norm {n}, expected 1")));
        }
        if !offset.is_finite() {
            return Err(Error::param("halfspace offset must be finite"));
        }
        Ok(Halfspace { normal, offset })
    }

    /// Normalizes `normal` and rescales `offset` to match.
    pub fn from_raw(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::param("halfspace normal must be non-zero"));
        }
        Ok(Halfspace {
            normal: normal.into_iter().map(|x| x / n).collect(),
            offset: offset / n,
        })
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(b, x)| b * x).sum()
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        self.value(x) <= self.offset
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HalfspacePolytope {
    pub dim: usize,
    pub constraints: Vec<Halfspace>,
}

impl HalfspacePolytope {
    pub fn new(dim: usize, constraints: Vec<Halfspace>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::param("polytope needs at least one constraint"));
        }
        for h in &constraints {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: h.normal.len() });
            }
            Halfspace::new(h.normal.clone(), h.offset)?;
        }
        Ok(HalfspacePolytope { dim, constraints })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|h| h.contains(x))
    }

    /// Signed distance to the boundary for points inside; negative outside.
    pub fn inner_slack(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|h| h.offset - h.value(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Shrinks every offset by `eta`.
pub fn erode_polytope(p: &HalfspacePolytope, eta: f64) -> Result<HalfspacePolytope> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::param(format!("erosion depth must be non-negative, got {eta}")));
    }
    Ok(HalfspacePolytope {
        dim: p.dim,
        constraints: p
            .constraints
            .iter()
            .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset - eta })
            .collect(),
    })
}
