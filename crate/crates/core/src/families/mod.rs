//! Adversarial density families and the Assouad and entropy lower-bound arithmetic.

mod code;

pub use code::{
    gilbert_varshamov_subset, gv_min_distance, gv_target_size, hamming, sample_separated_pair, BinaryCode,
};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::density::{lowered_radius, raised_lift, ConvexBodyUniform, Density, SemicirclePerturbation1D, Univariate};
use crate::error::{Error, Result};
use crate::geometry::{
    ball_volume, cap_integral, cap_volume_from_beta, greedy_sphere_packing, packing_bounds, Halfspace,
};
use crate::metrics::{hellinger_sq, MetricOptions};
use crate::numeric::bisect;

/// Lower bound `(3/4)(1 − 2π/9)` on the lift of the raised semicircle family.
pub const C0: f64 = 0.75 * (1.0 - 2.0 * std::f64::consts::PI / 9.0);

/// Radius of the raised semicircle family.
pub const ASSOUAD_1D_RADIUS: f64 = 2.0 / 3.0;

/// Largest cap count the rescaled entropy family will try to pack.
pub const MAX_ENTROPY_CAPS: u64 = 50_000;

/// Codes are attached to a family only up to this length.
pub const MAX_ATTACHED_CODE: usize = 24;

pub fn default_eta(d: usize) -> f64 {
    if d == 1 {
        0.99
    } else {
        0.9
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyVariant {
    #[serde(rename = "assouad-1d")]
    Assouad1d,
    AssouadBallcap,
    #[serde(rename = "entropy-1d")]
    Entropy1d,
    EntropyRescaledD,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl MomentCheck {
    fn upper(name: &str, value: f64, bound: f64) -> Self {
        MomentCheck { name: name.into(), value, bound, holds: value <= bound }
    }

    fn lower(name: &str, value: f64, bound: f64) -> Self {
        MomentCheck { name: name.into(), value, bound, holds: value >= bound }
    }
}

/// Moment inequalities verified for an entropy family at a given `eta`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MomentReport {
    pub eta: f64,
    pub checks: Vec<MomentCheck>,
}

impl MomentReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PerturbationFamily {
    pub variant: FamilyVariant,
    pub dim: usize,
    pub k: usize,
    pub eps: f64,
    /// Semicircle radius, or the rescaling radius for ball families.
    pub r: f64,
    /// `c_{r,K,ε}` for semicircle families, `c_{K,ε}` for ball families.
    pub c_const: f64,
    pub zeta_star: Option<f64>,
    pub eta: Option<f64>,
    /// Cap directions; pair `k` uses `centers[k]` and `centers[K + k]`.
    pub centers: Option<Vec<Vec<f64>>>,
    pub packing_seed: Option<u64>,
    pub moments: Option<MomentReport>,
    pub code: Option<BinaryCode>,
}

impl PerturbationFamily {
    pub fn member(&self, alpha: &[bool]) -> Result<Density> {
        if alpha.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: alpha.len() });
        }
        match self.variant {
            FamilyVariant::Assouad1d => {
                Ok(SemicirclePerturbation1D::raised(self.r, self.eps, alpha.to_vec())?.into())
            }
            FamilyVariant::Entropy1d => Ok(SemicirclePerturbation1D::lowered(self.eps, alpha.to_vec())?.into()),
            FamilyVariant::AssouadBallcap | FamilyVariant::EntropyRescaledD => {
                let centers = self.centers.as_ref().ok_or_else(|| Error::param("family has no cap centers"))?;
                let offset = 1.0 - 0.5 * self.eps * self.eps;
                let hs = alpha
                    .iter()
                    .enumerate()
                    .map(|(k, &bit)| {
                        let c = &centers[if bit { self.k + k } else { k }];
                        Halfspace { normal: c.clone(), offset }
                    })
                    .collect();
                let body = ConvexBodyUniform::new(self.dim, 1.0, hs)?;
                let body = if self.variant == FamilyVariant::EntropyRescaledD { body.scaled(self.r)? } else { body };
                Ok(body.into())
            }
        }
    }

    /// Exact squared Hellinger distance between ball-family members differing in one bit.
    pub fn one_flip_hellinger_sq(&self) -> Option<f64> {
        match self.variant {
            FamilyVariant::AssouadBallcap | FamilyVariant::EntropyRescaledD => {
                let d = self.dim as f64;
                let ci = cap_integral(self.dim, self.eps).ok()?;
                Some(std::f64::consts::PI.powf((d - 1.0) / 2.0) / gamma((d + 1.0) / 2.0) * ci / self.c_const)
            }
            _ => None,
        }
    }

    /// Per-bit squared Hellinger distances between the all-zero member and its one-bit flips.
    pub fn per_bit_hellinger_sq(&self, opts: &MetricOptions) -> Result<Vec<f64>> {
        if let Some(h) = self.one_flip_hellinger_sq() {
            return Ok(vec![h; self.k]);
        }
        let base = vec![false; self.k];
        let f = self.member(&base)?;
        (0..self.k)
            .map(|i| {
                let mut a = base.clone();
                a[i] = true;
                Ok(hellinger_sq(&f, &self.member(&a)?, opts)?.value)
            })
            .collect()
    }

    /// Squared Hellinger distance between two members.
    pub fn pair_hellinger_sq(&self, a: &[bool], b: &[bool], opts: &MetricOptions) -> Result<f64> {
        if a.len() != self.k || b.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: a.len().min(b.len()) });
        }
        if let Some(h) = self.one_flip_hellinger_sq() {
            return Ok(h * hamming(a, b) as f64);
        }
        Ok(hellinger_sq(&self.member(a)?, &self.member(b)?, opts)?.value)
    }

    /// Assouad certificate for sample size `n` using the closed-form separation constants.
    pub fn assouad_certificate(&self, n: u64) -> Result<AssouadCertificate> {
        let nf = n as f64;
        match self.variant {
            FamilyVariant::Assouad1d => {
                let base = self.r.powi(3) * self.eps.powi(5);
                assouad_bound(self.k, 31.0 / 420.0 * base, nf * base / (2.0 * C0))
            }
            FamilyVariant::AssouadBallcap => {
                let h = self.one_flip_hellinger_sq().ok_or_else(|| Error::numeric("cap integral failed"))?;
                assouad_bound(self.k, h, nf * h)
            }
            _ => Err(Error::param("Assouad certificates apply to Assouad families only")),
        }
    }

    /// Assouad certificate with separation and smallness taken from per-bit distances.
    pub fn assouad_certificate_numeric(&self, n: u64, opts: &MetricOptions) -> Result<AssouadCertificate> {
        let per_bit = self.per_bit_hellinger_sq(opts)?;
        let gamma = per_bit.iter().cloned().fold(f64::INFINITY, f64::min);
        let worst = per_bit.iter().cloned().fold(0.0, f64::max);
        assouad_bound(self.k, gamma, n as f64 * worst)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AssouadCertificate {
    pub k: usize,
    pub gamma: f64,
    pub c: f64,
    pub bound: f64,
}

/// `K/8 · (1 − √C) · γ`.
pub fn assouad_bound(k: usize, gamma: f64, c: f64) -> Result<AssouadCertificate> {
    if k == 0 {
        return Err(Error::param("K must be at least 1"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    if !(c > 0.0) {
        return Err(Error::param(format!("C must be positive, got {c}")));
    }
    if c >= 1.0 {
        return Err(Error::param(format!("C = {c} is at least 1 and the bound is vacuous; n is out of range")));
    }
    Ok(AssouadCertificate { k, gamma, c, bound: k as f64 / 8.0 * (1.0 - c.sqrt()) * gamma })
}

/// Raised semicircle family at `ε = n^{−1/5}/2`.
pub fn build_assouad_1d(n: u64) -> Result<PerturbationFamily> {
    if n < 2 {
        return Err(Error::param(format!("n must be at least 2, got {n}")));
    }
    build_assouad_1d_eps(0.5 * (n as f64).powf(-0.2))
}

pub fn build_assouad_1d_eps(eps: f64) -> Result<PerturbationFamily> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::param(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let r = ASSOUAD_1D_RADIUS;
    let k = (std::f64::consts::PI / (6.0 * eps.asin()) + 1e-12).floor() as usize;
    if k == 0 {
        return Err(Error::param("eps too large for a single perturbation pair"));
    }
    let c = raised_lift(r, k, eps);
    if c < C0 - 1e-12 {
        return Err(Error::numeric(format!("lift {c} below its lower bound {C0}")));
    }
    Ok(PerturbationFamily {
        variant: FamilyVariant::Assouad1d,
        dim: 1,
        k,
        eps,
        r,
        c_const: c,
        zeta_star: None,
        eta: None,
        centers: None,
        packing_seed: None,
        moments: None,
        code: None,
    })
}

/// Scale of the cap family for sample size `n` in dimension `d`.
pub fn ballcap_eps(d: usize, n: u64) -> f64 {
    let df = d as f64;
    let lead = (std::f64::consts::PI.sqrt() * (df - 1.0).sqrt() / 6f64.sqrt()).powf(1.0 / (df - 1.0));
    lead * 0.5 * (n as f64).powf(-1.0 / (df + 1.0))
}

/// Unit ball with one cap removed from each of `K` antipodal-free pairs of packing directions.
pub fn build_assouad_ballcap(d: usize, n: u64, seed: u64) -> Result<PerturbationFamily> {
    if d < 2 {
        return Err(Error::param(format!("dimension must be at least 2, got {d}")));
    }
    if n < d as u64 + 1 {
        return Err(Error::param(format!("n must be at least d + 1 = {}, got {n}", d + 1)));
    }
    let eps = ballcap_eps(d, n);
    ballcap_family(FamilyVariant::AssouadBallcap, d, eps, 1.0, seed)
}

fn ballcap_family(variant: FamilyVariant, d: usize, eps: f64, r: f64, seed: u64) -> Result<PerturbationFamily> {
    let packing = greedy_sphere_packing(d, eps, seed)?;
    let n_pts = packing.len();
    if n_pts < 2 {
        return Err(Error::param(format!("packing has {n_pts} points; n is out of range")));
    }
    let k = n_pts / 2;
    let v_cap = cap_volume_from_beta(d, 1.0, cap_integral(d, eps)?);
    let vd = ball_volume(d, 1.0);
    let c = vd - k as f64 * v_cap;
    if !(c >= 0.5 * vd && c <= vd) {
        return Err(Error::numeric(format!("c = {c} outside [{}, {vd}]", 0.5 * vd)));
    }
    let mut centers = packing.points;
    centers.truncate(2 * k);
    Ok(PerturbationFamily {
        variant,
        dim: d,
        k,
        eps,
        r,
        c_const: c,
        zeta_star: None,
        eta: None,
        centers: Some(centers),
        packing_seed: Some(seed),
        moments: None,
        code: None,
    })
}

/// Left side minus one of the equation defining `ζ*`.
pub fn zeta_residual(z: f64) -> f64 {
    let a = 2.0 * z - 0.5 * (4.0 * z).sin();
    let num = a - 2.0 / 3.0 * (2.0 * z).sin().powi(3) * (2.0 * z).cos();
    num / (4.0 * a * a) - 1.0
}

/// Root of [`zeta_residual`] in `[0.148, 0.149]`.
pub fn zeta_star() -> f64 {
    bisect(zeta_residual, 0.148, 0.149, 200)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param(format!("eta must lie in (0, 1), got {eta}")));
    }
    Ok(())
}

/// Lowered semicircle family with `K = ⌊ζ*/arcsin √ε⌋` pairs.
pub fn build_entropy_family_1d(eps: f64, eta: f64) -> Result<PerturbationFamily> {
    check_eta(eta)?;
    let max_eps = 1e-6f64.min(eta * eta / 400.0);
    if !(eps > 0.0 && eps <= max_eps) {
        return Err(Error::param(format!("eps must lie in (0, {max_eps}], got {eps}")));
    }
    let z = zeta_star();
    let k = (z / eps.sqrt().asin()).floor() as usize;
    let r = lowered_radius(k, eps);
    let ones = SemicirclePerturbation1D::lowered(eps, vec![true; k])?;
    let m2 = ones.second_moment();
    let mean = ones.mean().abs();
    let moments = MomentReport {
        eta,
        checks: vec![
            MomentCheck::upper("mean_abs", mean, eta.sqrt() / 2f64.sqrt()),
            MomentCheck::upper("second_moment", m2, 1.0 + eta),
            MomentCheck::lower("second_moment", m2, 1.0 - eta / 2.0),
        ],
    };
    let code = if k <= MAX_ATTACHED_CODE { Some(gilbert_varshamov_subset(k)?) } else { None };
    Ok(PerturbationFamily {
        variant: FamilyVariant::Entropy1d,
        dim: 1,
        k,
        eps,
        r,
        c_const: -r * (2.0 * k as f64 * eps.sqrt().asin()).cos(),
        zeta_star: Some(z),
        eta: Some(eta),
        centers: None,
        packing_seed: None,
        moments: Some(moments),
        code,
    })
}

/// Cap family at scale `eps` rescaled by `√(d+2)`.
pub fn build_entropy_family_d(d: usize, eps: f64, eta: f64, seed: u64) -> Result<PerturbationFamily> {
    if d < 2 {
        return Err(Error::param(format!("dimension must be at least 2, got {d}")));
    }
    check_eta(eta)?;
    let df = d as f64;
    let max_eps = 1e-4f64.min(eta.sqrt() / (4.0 * (df + 2.0).sqrt()));
    if !(eps > 0.0 && eps <= max_eps) {
        return Err(Error::param(format!("eps must lie in (0, {max_eps}], got {eps}")));
    }
    let (lo, _) = packing_bounds(d, eps);
    if lo > MAX_ENTROPY_CAPS {
        return Err(Error::param(format!("packing needs at least {lo} points, above the limit {MAX_ENTROPY_CAPS}")));
    }
    let mut fam = ballcap_family(FamilyVariant::EntropyRescaledD, d, eps, (df + 2.0).sqrt(), seed)?;
    fam.eta = Some(eta);
    let mut checks = Vec::new();
    let mut worst_mean: f64 = 0.0;
    let mut lo_eig = f64::INFINITY;
    let mut hi_eig = f64::NEG_INFINITY;
    for bit in [false, true] {
        let m = fam.member(&vec![bit; fam.k])?.moments()?;
        worst_mean = worst_mean.max(m.mean_norm());
        for e in m.cov_eigenvalues() {
            lo_eig = lo_eig.min(e);
            hi_eig = hi_eig.max(e);
        }
    }
    checks.push(MomentCheck::upper("mean_norm", worst_mean, (df + 2.0).sqrt() / 2f64.powf(df - 2.0) * eps * eps));
    checks.push(MomentCheck::lower("cov_eigenvalue", lo_eig, 1.0 - eta));
    checks.push(MomentCheck::upper("cov_eigenvalue", hi_eig, 1.0 + eta));
    fam.moments = Some(MomentReport { eta, checks });
    if fam.k <= MAX_ATTACHED_CODE && fam.k >= 8 {
        fam.code = Some(gilbert_varshamov_subset(fam.k)?);
    }
    Ok(fam)
}

#[cfg(test)]
mod tests;
