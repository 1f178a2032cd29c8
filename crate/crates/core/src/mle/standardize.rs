use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};

/// Whitening `Z_i = Σ̂^{−1/2}(X_i − μ̂)` with sample mean and covariance (divisor `n`).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sqrt_cov: Vec<Vec<f64>>,
    pub inv_sqrt_cov: Vec<Vec<f64>>,
    pub transformed: Vec<Vec<f64>>,
}

impl Standardization {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Maps a whitened point back to the original coordinates.
    pub fn to_original(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.mean[i] + (0..d).map(|j| self.sqrt_cov[i][j] * z[j]).sum::<f64>()).collect()
    }

    pub fn to_whitened(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.inv_sqrt_cov[i][j] * (x[j] - self.mean[j])).sum::<f64>()).collect()
    }

    /// `|det Σ̂^{1/2}|`, the Jacobian of [`to_original`](Self::to_original).
    pub fn jacobian(&self) -> f64 {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.sqrt_cov[i][j]).determinant().abs()
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn standardize(samples: &[Vec<f64>]) -> Result<Standardization> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::DegenerateSample("need at least two points".into()));
    }
    let d = samples[0].len();
    if d == 0 {
        return Err(Error::param("points must have at least one coordinate"));
    }
    if let Some(x) = samples.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("samples must be finite"));
    }
    let nf = n as f64;
    let mut mean = DVector::zeros(d);
    for x in samples {
        mean += DVector::from_column_slice(x);
    }
    mean /= nf;
    let mut cov = DMatrix::zeros(d, d);
    for x in samples {
        let c = DVector::from_column_slice(x) - &mean;
        cov += &c * c.transpose();
    }
    cov /= nf;
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.max();
    if !(eig.eigenvalues.min() > 1e-12 * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateSample("sample covariance is singular".into()));
    }
    let q = &eig.eigenvectors;
    let sqrt = q * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * q.transpose();
    let inv = q * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * q.transpose();
    let transformed = samples
        .iter()
        .map(|x| {
            let z = &inv * (DVector::from_column_slice(x) - &mean);
            z.iter().copied().collect()
        })
        .collect();
    Ok(Standardization {
        mean: mean.iter().copied().collect(),
        sqrt_cov: to_rows(&sqrt),
        inv_sqrt_cov: to_rows(&inv),
        transformed,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MembershipReport {
    pub mean_norm: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub xi: f64,
    pub eta: f64,
    pub member: bool,
}

/// Whether `‖μ_f‖ ≤ ξ` and the covariance eigenvalues lie in `[1 − η, 1 + η]`.
///
/// Monte Carlo moments are given three standard errors of slack.
pub fn check_class_membership(f: &Density, xi: f64, eta: f64) -> Result<MembershipReport> {
    let m = f.moments()?;
    let slack = 3.0 * m.std_error.unwrap_or(0.0) + 1e-12;
    let eig = m.cov_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean_norm = m.mean_norm();
    let member = mean_norm <= xi + slack && lo >= 1.0 - eta - slack && hi <= 1.0 + eta + slack;
    Ok(MembershipReport { mean_norm, min_eigenvalue: lo, max_eigenvalue: hi, xi, eta, member })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::PiecewiseLogLinear1D;
    use crate::rng::{seeded, standard_normal};

    #[test]
    fn two_points() {
        let s = standardize(&[vec![0.0], vec![2.0]]).unwrap();
        assert!((s.transformed[0][0] + 1.0).abs() < 1e-15 && (s.transformed[1][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn correlated_gaussian_is_whitened() {
        let mut rng = seeded(1);
        let xs: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                let a = standard_normal(&mut rng);
                let b = standard_normal(&mut rng);
                vec![1.0 + 2.0 * a, -3.0 + 0.8 * a + 0.5 * b]
            })
            .collect();
        let s = standardize(&xs).unwrap();
        let n = xs.len() as f64;
        for i in 0..2 {
            let m: f64 = s.transformed.iter().map(|z| z[i]).sum::<f64>() / n;
            assert!(m.abs() < 1e-10);
            for j in 0..2 {
                let c: f64 = s.transformed.iter().map(|z| z[i] * z[j]).sum::<f64>() / n;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-8);
            }
        }
        let back = s.to_original(&s.transformed[17]);
        assert!((back[0] - xs[17][0]).abs() < 1e-10 && (back[1] - xs[17][1]).abs() < 1e-10);
    }

    #[test]
    fn white_sample_is_nearly_fixed() {
        let xs = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let s = standardize(&xs).unwrap();
        let r = 2f64.sqrt();
        for (z, x) in s.transformed.iter().zip(&xs) {
            assert!((z[0] - r * x[0]).abs() < 1e-12 && (z[1] - r * x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_covariance_rejected() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(standardize(&xs), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn membership_examples() {
        let knots: Vec<f64> = (0..401).map(|i| -10.0 + 0.05 * i as f64).collect();
        let lv = knots.iter().map(|x| -0.5 * x * x).collect();
        let g: Density = PiecewiseLogLinear1D::construct_normalized(knots, lv).unwrap().into();
        assert!(check_class_membership(&g, 1.0, 0.5).unwrap().member);
        let u: Density = PiecewiseLogLinear1D::uniform(0.0, 10.0).unwrap().into();
        assert!(!check_class_membership(&u, 1.0, 0.5).unwrap().member);
    }
}
