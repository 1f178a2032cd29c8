use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Least-squares line through `(ln n, ln loss)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 95% confidence interval for the slope; infinite when there is only one residual degree of freedom left.
    pub slope_ci95: (f64, f64),
}

impl RateFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::param(format!("need at least 3 points, got {}", points.len())));
    }
    for &(n, l) in points {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::param(format!("sample size must be positive, got {n}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param(format!("loss must be positive, got {l}")));
        }
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if !(sxx > 0.0) {
        return Err(Error::param("sample sizes must not all be equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let dof = m - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::numeric(e.to_string()))?.inverse_cdf(0.975);
    Ok(RateFit { slope, intercept, r_squared, slope_ci95: (slope - t * se, slope + t * se) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [500.0, 1000.0, 2000.0, 4000.0].iter().map(|&n: &f64| (n, n.powf(-0.8))).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope + 0.8).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-10 && (f.r_squared - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [10.0, 30.0, 90.0].iter().map(|&n: &f64| (n, 3.7 * n.powf(-2.0 / 3.0))).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!((f.predict(50.0) - 3.7 * 50f64.powf(-2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(10.0, 0.1), (20.0, 0.05)]).is_err());
        assert!(fit_rate(&[(10.0, 0.1), (20.0, 0.0), (40.0, 0.01)]).is_err());
        assert!(fit_rate(&[(10.0, 0.1), (20.0, -1.0), (40.0, 0.01)]).is_err());
    }

    #[test]
    fn band_matches_textbook_case() {
        // residuals ±0.1 around slope −1 on ln n = 0, 1, 2, 3
        let pts: Vec<(f64, f64)> =
            [0.1, -0.1, -0.1, 0.1].iter().enumerate().map(|(i, e)| ((i as f64).exp(), (-(i as f64) + e).exp())).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        // sse = 0.04, sxx = 5, dof = 2, t = 4.302652729911275
        let half = 4.302652729911275 * (0.04f64 / 2.0 / 5.0).sqrt();
        assert!((f.slope_ci95.1 - f.slope - half).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn recovers_any_power_law(b in -3.0f64..1.0, c in 0.01f64..100.0) {
            let pts: Vec<(f64, f64)> = [7.0, 70.0, 700.0, 7000.0].iter().map(|&n: &f64| (n, c * n.powf(b))).collect();
            let f = fit_rate(&pts).unwrap();
            prop_assert!((f.slope - b).abs() < 1e-10);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
            prop_assert!(f.slope_ci95.0 <= f.slope && f.slope <= f.slope_ci95.1);
        }
    }
}
