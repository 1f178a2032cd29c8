use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use super::Univariate;
use crate::error::{Error, Result};
use crate::rng::standard_normal;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Gaussian1D {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::param(format!("invalid normal parameters ({mean}, {sd})")));
        }
        Ok(Gaussian1D { mean, sd })
    }

    pub fn standard() -> Self {
        Gaussian1D { mean: 0.0, sd: 1.0 }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.mean + self.sd * standard_normal(rng)
    }
}

impl Univariate for Gaussian1D {
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.mean]
    }

    fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-(x - self.mean) / (self.sd * std::f64::consts::SQRT_2))
    }

    fn quantile(&self, p: f64) -> f64 {
        self.mean - self.sd * std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn variance(&self) -> f64 {
        self.sd * self.sd
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Laplace1D {
    pub loc: f64,
    pub scale: f64,
}

impl Laplace1D {
    pub fn new(loc: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && loc.is_finite()) {
            return Err(Error::param(format!("invalid Laplace parameters ({loc}, {scale})")));
        }
        Ok(Laplace1D { loc, scale })
    }

    /// Laplace law with unit variance.
    pub fn standardized() -> Self {
        Laplace1D { loc: 0.0, scale: std::f64::consts::FRAC_1_SQRT_2 }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }
}

impl Univariate for Laplace1D {
    fn pdf(&self, x: f64) -> f64 {
        (-(x - self.loc).abs() / self.scale).exp() / (2.0 * self.scale)
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.loc]
    }

    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        if z < 0.0 {
            0.5 * z.exp()
        } else {
            1.0 - 0.5 * (-z).exp()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p < 0.5 {
            self.loc + self.scale * (2.0 * p).ln()
        } else {
            self.loc - self.scale * (2.0 * (1.0 - p)).ln()
        }
    }

    fn mean(&self) -> f64 {
        self.loc
    }

    fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_roundtrip() {
        let g = Gaussian1D::standard();
        for &p in &[1e-18, 1e-6, 0.3, 0.5, 0.9] {
            assert!((g.cdf(g.quantile(p)) / p - 1.0).abs() < 1e-9);
        }
        assert!((g.pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn laplace_quantile_roundtrip() {
        let l = Laplace1D::standardized();
        for &p in &[1e-12, 0.2, 0.5, 0.99] {
            assert!((l.cdf(l.quantile(p)) - p).abs() < 1e-14);
        }
        assert!((l.variance() - 1.0).abs() < 1e-15);
    }
}
