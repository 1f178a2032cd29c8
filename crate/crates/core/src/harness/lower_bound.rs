use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{assouad_bound, build_assouad_1d, build_assouad_ballcap, AssouadCertificate};
use crate::metrics::MetricOptions;
use crate::SCHEMA_VERSION;

/// Closed-form minimax lower-bound constant `c_d` in `c_d · n^{−rate}`.
pub fn minimax_constant(d: usize) -> f64 {
    if d == 1 {
        1.0 / 28000.0
    } else {
        (15.0f64 / 16.0).powf((d as f64 + 1.0) / 2.0) / (500.0 * 2f64.powi(d as i32))
    }
}

/// Exponent of the minimax lower bound: `4/5` for `d = 1`, `2/(d + 1)` otherwise.
pub fn minimax_rate(d: usize) -> f64 {
    if d == 1 {
        0.8
    } else {
        2.0 / (d as f64 + 1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LowerBoundRow {
    pub n: u64,
    pub eps: Option<f64>,
    pub k: Option<usize>,
    /// Certificate from per-bit distances computed by quadrature or exact cap integrals.
    pub numeric: Option<AssouadCertificate>,
    /// Certificate from the closed-form inequalities for `γ` and `C`.
    pub closed_form: Option<AssouadCertificate>,
    pub constant: f64,
    /// `constant · n^{−rate}`.
    pub target: f64,
    pub holds: bool,
    /// Numeric separation is at least the closed-form separation.
    pub gamma_dominates: Option<bool>,
    pub out_of_regime: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LowerBoundReport {
    pub schema_version: u32,
    pub d: usize,
    pub packing_seed: u64,
    pub rows: Vec<LowerBoundRow>,
}

impl LowerBoundReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

fn closed_form_ballcap(d: usize, k: usize, eps: f64, n: u64) -> Result<AssouadCertificate> {
    let df = d as f64;
    let e = eps.powf(df + 1.0);
    let gamma_cf =
        4.0 * (15.0f64 / 16.0).powf((df + 1.0) / 2.0) / (3f64.sqrt() * std::f64::consts::PI * (df + 1.0).sqrt()) * e;
    let c = 2.0 / (df + 1.0).sqrt() * n as f64 * e;
    assouad_bound(k, gamma_cf, c)
}

fn row(d: usize, n: u64, seed: u64, opts: &MetricOptions) -> LowerBoundRow {
    let constant = minimax_constant(d);
    let target = constant * (n as f64).powf(-minimax_rate(d));
    let mut r = LowerBoundRow {
        n,
        eps: None,
        k: None,
        numeric: None,
        closed_form: None,
        constant,
        target,
        holds: false,
        gamma_dominates: None,
        out_of_regime: false,
        note: None,
    };
    let family = if d == 1 { build_assouad_1d(n) } else { build_assouad_ballcap(d, n, seed) };
    let family = match family {
        Ok(f) => f,
        Err(e) => {
            r.out_of_regime = e.is_validation();
            r.note = Some(e.to_string());
            return r;
        }
    };
    r.eps = Some(family.eps);
    r.k = Some(family.k);
    let closed = if d == 1 {
        family.assouad_certificate(n)
    } else {
        closed_form_ballcap(d, family.k, family.eps, n)
    };
    match closed {
        Ok(c) => r.closed_form = Some(c),
        Err(e) => r.note = Some(format!("closed form: {e}")),
    }
    match family.assouad_certificate_numeric(n, opts) {
        Ok(c) => {
            r.holds = c.bound >= target;
            r.gamma_dominates = r.closed_form.as_ref().map(|cf| c.gamma >= cf.gamma);
            r.numeric = Some(c);
        }
        Err(e) => {
            r.out_of_regime = e.is_validation();
            r.note = Some(e.to_string());
        }
    }
    r
}

/// Assouad lower bounds for each `n`, compared with `c_d · n^{−rate}`.
///
/// Sample sizes for which the family cannot be built or `C ≥ 1` are flagged as out of regime
/// rather than failing the whole report.
pub fn lower_bound_report(d: usize, n_values: &[u64], packing_seed: u64) -> Result<LowerBoundReport> {
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    if n_values.is_empty() {
        return Err(Error::param("no sample sizes given"));
    }
    let opts = MetricOptions::relative(1e-10);
    let rows = n_values.iter().map(|&n| row(d, n, packing_seed, &opts)).collect();
    Ok(LowerBoundReport { schema_version: SCHEMA_VERSION, d, packing_seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(minimax_constant(1), 1.0 / 28000.0);
        assert!((minimax_constant(2) - (15.0f64 / 16.0).powf(1.5) / 2000.0).abs() < 1e-18);
        assert!((minimax_rate(3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_bound_holds() {
        let rep = lower_bound_report(1, &[100_000], 0).unwrap();
        let r = &rep.rows[0];
        assert!(r.holds, "{r:?}");
        assert_eq!(r.gamma_dominates, Some(true));
        assert!(r.numeric.as_ref().unwrap().bound >= r.target);
    }

    #[test]
    fn two_dimensional_bound_holds() {
        let rep = lower_bound_report(2, &[10_000], 3).unwrap();
        let r = &rep.rows[0];
        assert!(r.holds, "{r:?}");
        assert_eq!(r.gamma_dominates, Some(true));
        assert!(r.target > 0.0 && r.target < r.numeric.as_ref().unwrap().bound);
    }

    #[test]
    fn tiny_n_is_reported_not_fatal() {
        let rep = lower_bound_report(2, &[2, 10_000], 3).unwrap();
        assert!(rep.rows[0].out_of_regime && !rep.rows[0].holds);
        assert!(rep.rows[1].holds);
        assert!(lower_bound_report(0, &[10], 0).is_err());
    }
}
