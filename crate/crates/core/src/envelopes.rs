//! Exponential envelopes for standardized log-concave classes and the one-dimensional
//! extremal density at a point.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{Density, Gaussian1D, Laplace1D, PiecewiseLogLinear1D, Univariate};
use crate::error::{Error, Result};
use crate::geometry::sample_unit_sphere;

/// Mass cut from the exponential tail of [`env2_extremal`].
pub const EXTREMAL_TAIL_MASS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeVariant {
    /// `e^{−A‖x‖ + B}` for mean zero, identity covariance.
    Standardized,
    /// Widened envelope for `‖mean‖ ≤ ξ` and covariance eigenvalues in `[1 − η, 1 + η]`.
    TildeClass,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeSpec {
    pub d: usize,
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub eta: f64,
    pub variant: EnvelopeVariant,
}

impl EnvelopeSpec {
    pub fn new(d: usize, a: f64, b: f64, xi: f64, eta: f64, variant: EnvelopeVariant) -> Result<Self> {
        let spec = EnvelopeSpec { d, a, b, xi, eta, variant };
        spec.validate()?;
        Ok(spec)
    }

    pub fn standardized(d: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(d, a, b, 0.0, 0.5, EnvelopeVariant::Standardized)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param(format!("decay rate must be positive, got {}", self.a)));
        }
        if !self.b.is_finite() {
            return Err(Error::param("offset must be finite"));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::param(format!("xi must be non-negative, got {}", self.xi)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::param(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        Ok(())
    }
}

pub fn envelope_value(spec: &EnvelopeSpec, x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    match spec.variant {
        EnvelopeVariant::Standardized => (-spec.a * norm + spec.b).exp(),
        EnvelopeVariant::TildeClass => {
            let s = (1.0 + spec.eta).sqrt();
            (1.0 - spec.eta).powf(-0.5 * spec.d as f64) * (-spec.a * norm / s + spec.a * spec.xi / s + spec.b).exp()
        }
    }
}

/// Far end of the support of [`env2_extremal`].
pub fn extremal_truncation(x0: f64) -> f64 {
    x0 * (1.0 + EXTREMAL_TAIL_MASS.ln())
}

/// Mean-zero density with the largest possible value `1/|x0|` at `x0`.
///
/// For `x0 > 0` it is `(1/x0) e^{−(x0 − x)/x0}` on `x ≤ x0`, mirrored for `x0 < 0`, with the
/// exponential tail cut where its remaining mass is [`EXTREMAL_TAIL_MASS`].
pub fn env2_extremal(x0: f64) -> Result<PiecewiseLogLinear1D> {
    if x0 == 0.0 || !x0.is_finite() {
        return Err(Error::param(format!("x0 must be finite and non-zero, got {x0}")));
    }
    let s = x0.abs();
    let far = extremal_truncation(x0);
    let far_log = -s.ln() - (x0 - far).abs() / s;
    let (knots, logvals) = if x0 > 0.0 {
        (vec![far, x0], vec![far_log, -s.ln()])
    } else {
        (vec![x0, far], vec![-s.ln(), far_log])
    };
    let f = PiecewiseLogLinear1D::construct_normalized(knots, logvals)?;
    if f.mean().abs() > 1e-9 * s.max(1.0) {
        return Err(Error::numeric(format!("extremal density has mean {}", f.mean())));
    }
    Ok(f)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Env2Report {
    pub x0: f64,
    pub value: f64,
    pub bound: f64,
    /// `bound − value`; negative on a violation.
    pub slack: f64,
    pub holds: bool,
    pub recentered: bool,
}

/// Checks `f(x0) ≤ 1/|x0|` after re-centring `f` if its mean is off by more than `1e-6`.
pub fn check_env2_bound(f: &PiecewiseLogLinear1D, x0: f64) -> Env2Report {
    let recenter = f.mean().abs() > 1e-6;
    let value = if recenter { f.recentered().pdf(x0) } else { f.pdf(x0) };
    let bound = 1.0 / x0.abs();
    Env2Report { x0, value, bound, slack: bound - value, holds: value <= bound + 1e-6, recentered: recenter }
}

/// Mean-zero competitor: log-linear on `[−a, b]` with log-slope `lambda`, then re-centred.
pub fn env2_competitor(a: f64, b: f64, lambda: f64) -> Result<PiecewiseLogLinear1D> {
    let f = PiecewiseLogLinear1D::construct_normalized(vec![-a, b], vec![0.0, lambda * (a + b)])?;
    Ok(f.recentered())
}

/// Largest value at `x0` over a `steps³` grid of competitors.
pub fn best_competitor_value(x0: f64, steps: usize) -> Result<f64> {
    if steps < 2 {
        return Err(Error::param("grid needs at least two steps"));
    }
    let s = x0.abs();
    let grid = |lo: f64, hi: f64, i: usize| lo * (hi / lo).powf(i as f64 / (steps - 1) as f64);
    let mut best: f64 = 0.0;
    for i in 0..steps {
        let a = grid(0.05 * s, 40.0 * s, i);
        for j in 0..steps {
            let b = grid(0.05 * s, 40.0 * s, j);
            for l in 0..steps {
                // log-slopes spread over both signs
                let m = grid(0.01 / s, 10.0 / s, l);
                for lambda in [m, -m] {
                    best = best.max(env2_competitor(a, b, lambda)?.pdf(x0));
                }
            }
        }
    }
    Ok(best)
}

/// Empirical envelope constants; never a certified value.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeFit {
    pub d: usize,
    pub a_hat: f64,
    pub b_hat: f64,
    pub members: usize,
    pub probes: usize,
    pub certified: bool,
}

impl EnvelopeFit {
    pub fn spec(&self) -> Result<EnvelopeSpec> {
        EnvelopeSpec::standardized(self.d, self.a_hat, self.b_hat)
    }
}

/// Probe radii for envelope fitting.
const PROBE_RADII: usize = 64;
const PROBE_MAX_RADIUS: f64 = 12.0;

fn radius_grid() -> Vec<f64> {
    (0..=PROBE_RADII).map(|i| PROBE_MAX_RADIUS * i as f64 / PROBE_RADII as f64).collect()
}

/// Probe radii plus the member's own breakpoints, where its log-density can jump.
fn member_radii(f: &Density, base: &[f64]) -> Vec<f64> {
    let mut r = base.to_vec();
    match f {
        Density::ConvexBody(b) => r.push(b.radius()),
        _ => {
            if let Some(u) = f.as_univariate() {
                r.extend(u.breakpoints().iter().map(|x| x.abs()).filter(|x| x.is_finite()));
            }
        }
    }
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r
}

fn directions<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..count).map(|_| sample_unit_sphere(d, rng)).collect()
    }
}

/// Smallest secant decay of `log f` from radius 1 to the farthest positive probe, over all
/// directions; infinite when every ray leaves the support before radius 1.
fn secant_decay(f: &Density, dirs: &[Vec<f64>], radii: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for u in dirs {
        let at = |t: f64| f.value_unchecked(&u.iter().map(|c| c * t).collect::<Vec<_>>());
        let inner = at(1.0);
        if inner <= 0.0 {
            continue;
        }
        let far = radii.iter().rev().find(|&&t| t > 1.0 && at(t) > 0.0);
        if let Some(&t) = far {
            // bounded supports in this direction do not constrain the rate
            if t < PROBE_MAX_RADIUS {
                continue;
            }
            a = a.min((inner.ln() - at(t).ln()) / (t - 1.0));
        }
    }
    a
}

/// Fits `(A_hat, B_hat)` so that `e^{−A‖x‖ + B}` dominates every generator member at every probe.
///
/// `A_hat` is the smallest tail decay among the members (1 when no member has unbounded support),
/// and `B_hat` is the smallest offset making the envelope dominate.
pub fn estimate_envelope_constants<R: Rng + ?Sized>(
    d: usize,
    generator: &[Density],
    directions_per_member: usize,
    rng: &mut R,
) -> Result<EnvelopeFit> {
    if generator.is_empty() {
        return Err(Error::param("envelope generator is empty"));
    }
    if let Some(f) = generator.iter().find(|f| f.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
    }
    let radii = radius_grid();
    let dirs: Vec<Vec<Vec<f64>>> = generator.iter().map(|_| directions(d, directions_per_member.max(1), rng)).collect();
    let a = generator
        .par_iter()
        .zip(&dirs)
        .map(|(f, u)| secant_decay(f, u, &radii))
        .reduce(|| f64::INFINITY, f64::min);
    let a_hat = if a.is_finite() && a > 0.0 { a } else { 1.0 };
    let b_hat = generator
        .par_iter()
        .zip(&dirs)
        .map(|(f, us)| {
            let mut b = f64::NEG_INFINITY;
            let rs = member_radii(f, &radii);
            for u in us {
                for &t in &rs {
                    let v = f.value_unchecked(&u.iter().map(|c| c * t).collect::<Vec<_>>());
                    if v > 0.0 {
                        b = b.max(v.ln() + a_hat * t);
                    }
                }
            }
            b
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    if !b_hat.is_finite() {
        return Err(Error::numeric("no probe point fell inside any member's support"));
    }
    let probes = dirs.iter().map(|u| u.len()).sum::<usize>() * radii.len();
    Ok(EnvelopeFit { d, a_hat, b_hat, members: generator.len(), probes, certified: false })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeViolation {
    pub member: usize,
    pub x: Vec<f64>,
    pub value: f64,
    pub envelope: f64,
}

/// Evaluates every member against the envelope at random probes and lists the violations.
pub fn envelope_violations<R: Rng + ?Sized>(
    spec: &EnvelopeSpec,
    members: &[Density],
    probes: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<EnvelopeViolation>> {
    spec.validate()?;
    let mut out = Vec::new();
    for (i, f) in members.iter().enumerate() {
        if f.dim() != spec.d {
            return Err(Error::DimensionMismatch { expected: spec.d, found: f.dim() });
        }
        for _ in 0..probes {
            let x: Vec<f64> = (0..spec.d).map(|_| rng.gen_range(-scale..scale)).collect();
            let v = f.value_unchecked(&x);
            let e = envelope_value(spec, &x);
            if v > e * (1.0 + 1e-12) {
                out.push(EnvelopeViolation { member: i, x, value: v, envelope: e });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MemberSlack {
    pub member: usize,
    /// Smallest `log envelope − log f` over the probes inside the support; negative on a violation.
    pub min_log_slack: f64,
    pub worst_x: Option<Vec<f64>>,
    pub violations: usize,
}

/// Per-member slack of the envelope at random probes in `[−scale, scale]^d`.
pub fn envelope_slack<R: Rng + ?Sized>(
    spec: &EnvelopeSpec,
    members: &[Density],
    probes: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<MemberSlack>> {
    spec.validate()?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param(format!("probe scale must be positive, got {scale}")));
    }
    let mut out = Vec::with_capacity(members.len());
    for (i, f) in members.iter().enumerate() {
        if f.dim() != spec.d {
            return Err(Error::DimensionMismatch { expected: spec.d, found: f.dim() });
        }
        let mut row = MemberSlack { member: i, min_log_slack: f64::INFINITY, worst_x: None, violations: 0 };
        for _ in 0..probes {
            let x: Vec<f64> = (0..spec.d).map(|_| rng.gen_range(-scale..scale)).collect();
            let v = f.value_unchecked(&x);
            if v <= 0.0 {
                continue;
            }
            let slack = envelope_value(spec, &x).ln() - v.ln();
            if slack < -1e-12 {
                row.violations += 1;
            }
            if slack < row.min_log_slack {
                row.min_log_slack = slack;
                row.worst_x = Some(x);
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Random concave piecewise log-linear density with mean zero.
pub fn random_mean_zero_loglinear<R: Rng + ?Sized>(rng: &mut R) -> PiecewiseLogLinear1D {
    let m = rng.gen_range(2..=9);
    let mut knots: Vec<f64> = (0..m).map(|_| rng.gen_range(-4.0..4.0)).collect();
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    if knots.len() < 2 {
        knots = vec![-1.0, 1.0];
    }
    let mut slopes: Vec<f64> = (0..knots.len() - 1).map(|_| rng.gen_range(-6.0..6.0)).collect();
    slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut logvals = vec![0.0];
    for j in 0..slopes.len() {
        let last = logvals[j];
        logvals.push(last + slopes[j] * (knots[j + 1] - knots[j]));
    }
    PiecewiseLogLinear1D::construct_normalized(knots, logvals)
        .expect("decreasing slopes give a concave density")
        .recentered()
}

/// Same density with mean zero and unit variance.
pub fn standardize_1d(f: &PiecewiseLogLinear1D) -> Result<PiecewiseLogLinear1D> {
    let sd = f.variance().sqrt();
    f.affine_pushforward(1.0 / sd, -f.mean() / sd)
}

/// Standardized one-dimensional generator: Gaussian, Laplace, uniform and random log-linear members.
pub fn standardized_generator_1d<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Vec<Density>> {
    let r3 = 3f64.sqrt();
    let mut out: Vec<Density> = vec![
        Gaussian1D::standard().into(),
        Laplace1D::standardized().into(),
        PiecewiseLogLinear1D::uniform(-r3, r3)?.into(),
    ];
    for _ in 0..count {
        out.push(standardize_1d(&random_mean_zero_loglinear(rng))?.into());
    }
    Ok(out)
}
