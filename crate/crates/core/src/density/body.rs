use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::Moments;
use crate::error::{Error, Result};
use crate::geometry::{ball_volume, cap_volume, uniform_ball_point, Halfspace};
use crate::numeric::gauss_kronrod;
use crate::rng::seeded;

/// Samples used for Monte Carlo volumes and moments.
pub const BODY_MC_SAMPLES: usize = 10_000_000;
const BODY_MC_SEED: u64 = 0x5eed_b0d7;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Zero when the value comes from the cap formula.
    pub std_error: f64,
    pub exact: bool,
    pub samples: usize,
    pub seed: Option<u64>,
}

/// Uniform density on a closed ball centred at the origin intersected with halfspaces.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "RawBody")]
pub struct ConvexBodyUniform {
    dim: usize,
    radius: f64,
    halfspaces: Vec<Halfspace>,
    volume: VolumeEstimate,
    height: f64,
    caps_disjoint: bool,
    #[serde(skip)]
    inner: f64,
}

#[derive(Deserialize)]
struct RawBody {
    dim: usize,
    radius: f64,
    halfspaces: Vec<Halfspace>,
}

impl TryFrom<RawBody> for ConvexBodyUniform {
    type Error = Error;

    fn try_from(raw: RawBody) -> Result<Self> {
        Self::new(raw.dim, raw.radius, raw.halfspaces)
    }
}

/// Caps `{bᵀx > β}` cut from the ball are pairwise disjoint when their angular radii fit
/// between the normals.
fn caps_are_disjoint(radius: f64, hs: &[Halfspace]) -> bool {
    if hs.iter().any(|h| h.offset < 0.0) {
        return false;
    }
    let ang: Vec<f64> = hs.iter().map(|h| (h.offset / radius).min(1.0).acos()).collect();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let sum = ang[i] + ang[j];
            if sum >= std::f64::consts::PI {
                return false;
            }
            let dot: f64 = hs[i].normal.iter().zip(&hs[j].normal).map(|(a, b)| a * b).sum();
            if dot > sum.cos() {
                return false;
            }
        }
    }
    true
}

impl ConvexBodyUniform {
    /// Builds the body; the volume uses the cap formula when caps are disjoint and a seeded
    /// Monte Carlo estimate otherwise.
    pub fn new(dim: usize, radius: f64, halfspaces: Vec<Halfspace>) -> Result<Self> {
        Self::validate(dim, radius, &halfspaces)?;
        let disjoint = caps_are_disjoint(radius, &halfspaces);
        let mut body = ConvexBodyUniform {
            dim,
            radius,
            halfspaces,
            volume: VolumeEstimate { value: 0.0, std_error: 0.0, exact: true, samples: 0, seed: None },
            height: 0.0,
            caps_disjoint: disjoint,
            inner: 0.0,
        };
        body.refresh_inner();
        body.volume = if disjoint {
            VolumeEstimate { value: body.exact_volume(), std_error: 0.0, exact: true, samples: 0, seed: None }
        } else {
            let (v, se) = body.volume_mc(BODY_MC_SAMPLES, BODY_MC_SEED);
            if v <= 0.0 {
                return Err(Error::param("body has no volume"));
            }
            VolumeEstimate { value: v, std_error: se, exact: false, samples: BODY_MC_SAMPLES, seed: Some(BODY_MC_SEED) }
        };
        body.height = 1.0 / body.volume.value;
        Ok(body)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, radius, Vec::new())
    }

    fn validate(dim: usize, radius: f64, hs: &[Halfspace]) -> Result<()> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param(format!("radius must be positive, got {radius}")));
        }
        for h in hs {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: h.normal.len() });
            }
            Halfspace::new(h.normal.clone(), h.offset)?;
        }
        Ok(())
    }

    fn refresh_inner(&mut self) {
        self.inner = self
            .halfspaces
            .iter()
            .map(|h| h.offset)
            .fold(self.radius, f64::min);
    }

    fn exact_volume(&self) -> f64 {
        let caps: f64 = self.halfspaces.iter().map(|h| cap_volume(self.dim, self.radius, h.offset)).sum();
        ball_volume(self.dim, self.radius) - caps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn volume(&self) -> &VolumeEstimate {
        &self.volume
    }

    pub fn caps_disjoint(&self) -> bool {
        self.caps_disjoint
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if n2 > self.radius * self.radius {
            return false;
        }
        if self.inner >= 0.0 && n2 <= self.inner * self.inner {
            return true;
        }
        self.halfspaces.iter().all(|h| h.contains(x))
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            self.height
        } else {
            0.0
        }
    }

    /// Rejection sampling from the enclosing ball.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let budget = 1_000_000usize.saturating_mul(n);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        while out.len() < n {
            if tries >= budget {
                return Err(Error::numeric("rejection sampling exhausted its budget; body is degenerate"));
            }
            tries += 1;
            let x = uniform_ball_point(self.dim, self.radius, rng);
            if self.halfspaces.iter().all(|h| h.contains(&x)) {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// Hit-or-miss volume against the enclosing ball: `(value, standard error)`.
    pub fn volume_mc(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = seeded(seed);
        let mut hits = 0usize;
        for _ in 0..samples {
            let x = uniform_ball_point(self.dim, self.radius, &mut rng);
            if self.halfspaces.iter().all(|h| h.contains(&x)) {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        let vb = ball_volume(self.dim, self.radius);
        (vb * p, vb * (p * (1.0 - p) / samples as f64).sqrt())
    }

    /// Mean and covariance; exact for disjoint caps, Monte Carlo otherwise.
    pub fn moments(&self) -> Result<Moments> {
        if self.caps_disjoint {
            Ok(self.exact_moments())
        } else {
            Ok(self.moments_mc(BODY_MC_SAMPLES, BODY_MC_SEED))
        }
    }

    pub fn moments_mc(&self, samples: usize, seed: u64) -> Moments {
        let d = self.dim;
        let mut rng = seeded(seed);
        let mut s1 = vec![0.0; d];
        let mut s2 = vec![vec![0.0; d]; d];
        let mut s4 = vec![vec![0.0; d]; d];
        let mut n = 0usize;
        while n < samples {
            let x = uniform_ball_point(d, self.radius, &mut rng);
            if !self.halfspaces.iter().all(|h| h.contains(&x)) {
                continue;
            }
            n += 1;
            for i in 0..d {
                s1[i] += x[i];
                for j in 0..d {
                    let p = x[i] * x[j];
                    s2[i][j] += p;
                    s4[i][j] += p * p;
                }
            }
        }
        let nf = n as f64;
        let mean: Vec<f64> = s1.iter().map(|s| s / nf).collect();
        let mut cov = vec![vec![0.0; d]; d];
        let mut se: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let m2 = s2[i][j] / nf;
                cov[i][j] = m2 - mean[i] * mean[j];
                let var = (s4[i][j] / nf - m2 * m2).max(0.0);
                se = se.max((var / nf).sqrt());
            }
            let var_i = (s2[i][i] / nf - mean[i] * mean[i]).max(0.0);
            se = se.max((var_i / nf).sqrt());
        }
        Moments { mean, cov, std_error: Some(se) }
    }

    /// Ball moments minus the exact moments of each removed cap.
    fn exact_moments(&self) -> Moments {
        let d = self.dim;
        let r = self.radius;
        let vb = ball_volume(d, r);
        let mut m0 = vb;
        let mut m1 = vec![0.0; d];
        let mut m2 = vec![vec![0.0; d]; d];
        for i in 0..d {
            m2[i][i] = vb * r * r / (d as f64 + 2.0);
        }
        for h in &self.halfspaces {
            let c = CapMoments::new(d, r, h.offset);
            m0 -= c.mass;
            for i in 0..d {
                m1[i] -= c.first * h.normal[i];
                for j in 0..d {
                    let bb = h.normal[i] * h.normal[j];
                    let id = if i == j { 1.0 } else { 0.0 };
                    m2[i][j] -= c.par * bb + c.perp * (id - bb);
                }
            }
        }
        let mean: Vec<f64> = m1.iter().map(|v| v / m0).collect();
        let cov = (0..d)
            .map(|i| (0..d).map(|j| m2[i][j] / m0 - mean[i] * mean[j]).collect())
            .collect();
        Moments { mean, cov, std_error: None }
    }

    /// Same body scaled by `s` about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param("scale must be positive"));
        }
        let hs = self
            .halfspaces
            .iter()
            .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset * s })
            .collect();
        let mut body = ConvexBodyUniform {
            dim: self.dim,
            radius: self.radius * s,
            halfspaces: hs,
            volume: self.volume.clone(),
            height: 0.0,
            caps_disjoint: self.caps_disjoint,
            inner: 0.0,
        };
        body.refresh_inner();
        let f = s.powi(self.dim as i32);
        body.volume.value *= f;
        body.volume.std_error *= f;
        body.height = 1.0 / body.volume.value;
        Ok(body)
    }
}

/// Moments of `{x ∈ B(0, r) : bᵀx > β}` in the frame of `b`.
struct CapMoments {
    mass: f64,
    /// `∫ bᵀx`
    first: f64,
    /// `∫ (bᵀx)²`
    par: f64,
    /// `∫ (uᵀx)²` for a unit `u ⟂ b`
    perp: f64,
}

impl CapMoments {
    fn new(d: usize, r: f64, beta: f64) -> Self {
        let h = (beta / r).clamp(-1.0, 1.0);
        if h >= 1.0 {
            return CapMoments { mass: 0.0, first: 0.0, par: 0.0, perp: 0.0 };
        }
        let df = d as f64;
        // (d−1)-ball of unit radius
        let vk = if d == 1 { 1.0 } else { std::f64::consts::PI.powf((df - 1.0) / 2.0) / gamma((df + 1.0) / 2.0) };
        let u = (1.0 - h) * (1.0 + h);
        let mass = cap_volume(d, r, beta);
        let first = r.powi(d as i32 + 1) * vk * u.powf((df + 1.0) / 2.0) / (df + 1.0);
        let par_int = gauss_kronrod(|t| t * t * (1.0 - t * t).max(0.0).powf((df - 1.0) / 2.0), h, 1.0, 1e-16, 1e-13, 400).value;
        let perp_int = gauss_kronrod(|t| (1.0 - t * t).max(0.0).powf((df + 1.0) / 2.0), h, 1.0, 1e-16, 1e-13, 400).value;
        let scale = r.powi(d as i32 + 2);
        let perp = if d == 1 { 0.0 } else { scale * vk * perp_int / (df + 1.0) };
        CapMoments { mass, first, par: scale * vk * par_int, perp }
    }
}
