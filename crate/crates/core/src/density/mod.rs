//! Log-concave densities: representation, evaluation, sampling and moments.

mod body;
mod loglinear;
mod parametric;
mod semicircle;
mod tent;

pub use body::{ConvexBodyUniform, VolumeEstimate};
pub use loglinear::PiecewiseLogLinear1D;
pub use parametric::{Gaussian1D, Laplace1D};
pub use semicircle::{lowered_radius, raised_lift, SemicirclePerturbation1D, SemicircleVariant};
pub use tent::TentDensity2D;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean vector and covariance matrix of a density.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// Largest Monte Carlo standard error over all entries; `None` when exact.
    pub std_error: Option<f64>,
}

impl Moments {
    pub fn mean_norm(&self) -> f64 {
        self.mean.iter().map(|m| m * m).sum::<f64>().sqrt()
    }

    /// Eigenvalues of the covariance in ascending order.
    pub fn cov_eigenvalues(&self) -> Vec<f64> {
        let d = self.mean.len();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.cov[i][j]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// One-dimensional densities with an explicit distribution function.
pub trait Univariate {
    fn pdf(&self, x: f64) -> f64;
    /// Closed support interval; endpoints may be infinite.
    fn support(&self) -> (f64, f64);
    /// Points inside the support where the density may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64>;
    fn cdf(&self, x: f64) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;

    /// Generic quantile by bisection on the distribution function.
    fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if !lo.is_finite() {
            lo = -1.0;
            while self.cdf(lo) > p {
                lo *= 2.0;
            }
        }
        if !hi.is_finite() {
            hi = 1.0;
            while self.cdf(hi) < p {
                hi *= 2.0;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Density {
    PiecewiseLogLinear(PiecewiseLogLinear1D),
    Semicircle(SemicirclePerturbation1D),
    Gaussian(Gaussian1D),
    Laplace(Laplace1D),
    ConvexBody(ConvexBodyUniform),
    Tent(TentDensity2D),
}

impl Density {
    pub fn dim(&self) -> usize {
        match self {
            Density::ConvexBody(b) => b.dim(),
            Density::Tent(_) => 2,
            _ => 1,
        }
    }

    pub fn as_univariate(&self) -> Option<&dyn Univariate> {
        match self {
            Density::PiecewiseLogLinear(f) => Some(f),
            Density::Semicircle(f) => Some(f),
            Density::Gaussian(f) => Some(f),
            Density::Laplace(f) => Some(f),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.value_unchecked(x))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Density::PiecewiseLogLinear(f) => f.pdf(x[0]),
            Density::Semicircle(f) => f.pdf(x[0]),
            Density::Gaussian(f) => f.pdf(x[0]),
            Density::Laplace(f) => f.pdf(x[0]),
            Density::ConvexBody(b) => b.value(x),
            Density::Tent(t) => t.value(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::param("sample size must be at least 1"));
        }
        Ok(match self {
            Density::ConvexBody(b) => b.sample(n, rng)?,
            Density::Tent(t) => t.sample(n, rng),
            _ => self.sample_1d(n, rng)?.into_iter().map(|x| vec![x]).collect(),
        })
    }

    pub fn sample_1d<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::param("sample size must be at least 1"));
        }
        Ok(match self {
            Density::PiecewiseLogLinear(f) => (0..n).map(|_| f.sample_one(rng)).collect(),
            Density::Semicircle(f) => (0..n).map(|_| f.sample_one(rng)).collect(),
            Density::Gaussian(f) => (0..n).map(|_| f.sample_one(rng)).collect(),
            Density::Laplace(f) => (0..n).map(|_| f.sample_one(rng)).collect(),
            _ => return Err(Error::DimensionMismatch { expected: 1, found: self.dim() }),
        })
    }

    pub fn moments(&self) -> Result<Moments> {
        if let Some(u) = self.as_univariate() {
            return Ok(Moments {
                mean: vec![u.mean()],
                cov: vec![vec![u.variance()]],
                std_error: None,
            });
        }
        match self {
            Density::ConvexBody(b) => b.moments(),
            Density::Tent(t) => Ok(t.moments()),
            _ => unreachable!("univariate densities handled above"),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl From<PiecewiseLogLinear1D> for Density {
    fn from(f: PiecewiseLogLinear1D) -> Self {
        Density::PiecewiseLogLinear(f)
    }
}

impl From<SemicirclePerturbation1D> for Density {
    fn from(f: SemicirclePerturbation1D) -> Self {
        Density::Semicircle(f)
    }
}

impl From<Gaussian1D> for Density {
    fn from(f: Gaussian1D) -> Self {
        Density::Gaussian(f)
    }
}

impl From<Laplace1D> for Density {
    fn from(f: Laplace1D) -> Self {
        Density::Laplace(f)
    }
}

impl From<ConvexBodyUniform> for Density {
    fn from(f: ConvexBodyUniform) -> Self {
        Density::ConvexBody(f)
    }
}

impl From<TentDensity2D> for Density {
    fn from(f: TentDensity2D) -> Self {
        Density::Tent(f)
    }
}
