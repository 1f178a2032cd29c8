use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Univariate;
use crate::error::{Error, Result};
use crate::numeric::segment_moments;

/// Density `exp(φ)` with `φ` concave and linear between knots, zero off `[t₀, t_m]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "RawLogLinear")]
pub struct PiecewiseLogLinear1D {
    knots: Vec<f64>,
    logvals: Vec<f64>,
    #[serde(skip)]
    cum: Vec<f64>,
}

#[derive(Deserialize)]
struct RawLogLinear {
    knots: Vec<f64>,
    logvals: Vec<f64>,
}

impl TryFrom<RawLogLinear> for PiecewiseLogLinear1D {
    type Error = Error;

    fn try_from(raw: RawLogLinear) -> Result<Self> {
        Self::construct_normalized(raw.knots, raw.logvals)
    }
}

/// Concavity tolerance on consecutive slope increases, scaled by slope magnitude.
pub(crate) const CONCAVITY_TOL: f64 = 1e-12;

impl PiecewiseLogLinear1D {
    /// Validates the knots, checks concavity and shifts `logvals` so the density integrates to 1.
    pub fn construct_normalized(knots: Vec<f64>, logvals: Vec<f64>) -> Result<Self> {
        Self::validate_shape(&knots, &logvals)?;
        check_concave(&knots, &logvals)?;
        Ok(Self::normalize_unchecked(knots, logvals))
    }

    /// Like [`construct_normalized`](Self::construct_normalized) but skips the concavity check.
    pub(crate) fn normalize_unchecked(knots: Vec<f64>, mut logvals: Vec<f64>) -> Self {
        let mx = logvals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for j in 0..knots.len() - 1 {
            total += (knots[j + 1] - knots[j]) * segment_moments(logvals[j] - mx, logvals[j + 1] - mx)[0];
        }
        let shift = mx + total.ln();
        for v in logvals.iter_mut() {
            *v -= shift;
        }
        let mut f = PiecewiseLogLinear1D { knots, logvals, cum: Vec::new() };
        f.rebuild_cumulative();
        f
    }

    fn validate_shape(knots: &[f64], logvals: &[f64]) -> Result<()> {
        if knots.len() != logvals.len() {
            return Err(Error::param(format!(
                "{} knots but {} log-values",
                knots.len(),
                logvals.len()
            )));
        }
        if knots.len() < 2 {
            return Err(Error::param("need at least two knots"));
        }
        if knots.iter().chain(logvals).any(|v| !v.is_finite()) {
            return Err(Error::param("knots and log-values must be finite"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("knots must be strictly increasing"));
        }
        Ok(())
    }

    fn rebuild_cumulative(&mut self) {
        let mut cum = Vec::with_capacity(self.knots.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for j in 0..self.knots.len() - 1 {
            acc += self.seg_width(j) * segment_moments(self.logvals[j], self.logvals[j + 1])[0];
            cum.push(acc);
        }
        self.cum = cum;
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::construct_normalized(vec![a, b], vec![0.0, 0.0])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn logvals(&self) -> &[f64] {
        &self.logvals
    }

    pub fn slopes(&self) -> Vec<f64> {
        (0..self.knots.len() - 1).map(|j| self.slope(j)).collect()
    }

    #[inline]
    fn seg_width(&self, j: usize) -> f64 {
        self.knots[j + 1] - self.knots[j]
    }

    #[inline]
    fn slope(&self, j: usize) -> f64 {
        (self.logvals[j + 1] - self.logvals[j]) / self.seg_width(j)
    }

    /// Total mass as integrated from the stored representation.
    pub fn total_mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Largest increase between consecutive slopes (non-positive when concave).
    pub fn max_concavity_violation(&self) -> f64 {
        let s = self.slopes();
        s.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    fn segment_of(&self, x: f64) -> usize {
        let m = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(m - 2),
            Err(i) => (i.max(1) - 1).min(m - 2),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let m = self.knots.len();
        if !(x >= self.knots[0] && x <= self.knots[m - 1]) {
            return f64::NEG_INFINITY;
        }
        let j = self.segment_of(x);
        let t = (x - self.knots[j]) / self.seg_width(j);
        self.logvals[j] + t * (self.logvals[j + 1] - self.logvals[j])
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }

    /// Density of `a X + b` when `X` has this density.
    pub fn affine_pushforward(&self, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::param("affine map must be invertible"));
        }
        let la = a.abs().ln();
        let mut knots: Vec<f64> = self.knots.iter().map(|t| a * t + b).collect();
        let mut logvals: Vec<f64> = self.logvals.iter().map(|v| v - la).collect();
        if a < 0.0 {
            knots.reverse();
            logvals.reverse();
        }
        let mut f = PiecewiseLogLinear1D { knots, logvals, cum: Vec::new() };
        f.rebuild_cumulative();
        Ok(f)
    }

    /// Same density translated so its mean is zero.
    pub fn recentered(&self) -> Self {
        self.affine_pushforward(1.0, -self.mean()).expect("unit scale is invertible")
    }

    /// `∫ (x − c)^k f(x) dx` for k = 0, 1, 2, summed exactly over segments.
    fn centred_moments(&self, c: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for j in 0..self.knots.len() - 1 {
            let w = self.seg_width(j);
            let m = segment_moments(self.logvals[j], self.logvals[j + 1]);
            let a = self.knots[j] - c;
            out[0] += w * m[0];
            out[1] += w * (a * m[0] + w * m[1]);
            out[2] += w * (a * a * m[0] + 2.0 * a * w * m[1] + w * w * m[2]);
        }
        out
    }
}

fn check_concave(knots: &[f64], logvals: &[f64]) -> Result<()> {
    let slopes: Vec<f64> = (0..knots.len() - 1)
        .map(|j| (logvals[j + 1] - logvals[j]) / (knots[j + 1] - knots[j]))
        .collect();
    let mut worst = (0.0, 0usize);
    for j in 1..slopes.len() {
        let scale = 1f64.max(slopes[j].abs()).max(slopes[j - 1].abs());
        let v = slopes[j] - slopes[j - 1];
        if v > CONCAVITY_TOL * scale && v > worst.0 {
            worst = (v, j);
        }
    }
    if worst.0 > 0.0 {
        return Err(Error::NonConcave { max_violation: worst.0, index: worst.1 });
    }
    Ok(())
}

impl Univariate for PiecewiseLogLinear1D {
    fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots.clone()
    }

    fn cdf(&self, x: f64) -> f64 {
        let m = self.knots.len();
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= self.knots[m - 1] {
            return 1.0;
        }
        let j = self.segment_of(x);
        let dx = x - self.knots[j];
        let part = dx * segment_moments(self.logvals[j], self.log_pdf(x))[0];
        ((self.cum[j] + part) / self.total_mass()).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let m = self.knots.len();
        let target = p.clamp(0.0, 1.0) * self.total_mass();
        let j = match self.cum.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => i.min(m - 2),
            Err(i) => (i.max(1) - 1).min(m - 2),
        };
        let rest = target - self.cum[j];
        let w = self.seg_width(j);
        let s = self.slope(j);
        // solve ∫₀^u exp(φ_j + s v) dv = rest
        let z = rest * (-self.logvals[j]).exp();
        let u = if (s * z).abs() < 1e-8 {
            z * (1.0 - 0.5 * s * z)
        } else {
            (s * z).ln_1p() / s
        };
        let u = if u.is_finite() { u.clamp(0.0, w) } else { w };
        self.knots[j] + u
    }

    fn mean(&self) -> f64 {
        let c = self.knots[0];
        let m = self.centred_moments(c);
        c + m[1] / m[0]
    }

    fn variance(&self) -> f64 {
        let mu = self.mean();
        let m = self.centred_moments(mu);
        m[2] / m[0]
    }
}
