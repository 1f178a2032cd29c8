use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Estimator, Metric, RiskExperimentConfig};
use super::rate::{fit_rate, RateFit};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::metrics::{hellinger_sq, MetricOptions};
use crate::mle::{check_class_membership, mle_1d, mle_2d_tent, TentOptions, DEFAULT_TOL};
use crate::rng::{derive_seed, seeded};
use crate::SCHEMA_VERSION;

/// Largest tolerated fraction of failed replications.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RiskPoint {
    pub n: usize,
    pub mean_loss: f64,
    pub std_error: f64,
    /// Loss per successful replication, in replication order.
    pub losses: Vec<f64>,
    pub reps: Vec<usize>,
    pub seeds: Vec<u64>,
    pub failures: Vec<ReplicationFailure>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RiskResult {
    pub schema_version: u32,
    pub config: RiskExperimentConfig,
    pub per_n: Vec<RiskPoint>,
    /// Power-law fit of mean loss against n; absent with fewer than three sizes.
    pub fit: Option<RateFit>,
    pub failures_total: usize,
}

impl RiskResult {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.per_n.iter().map(|p| (p.n as f64, p.mean_loss)).collect()
    }
}

pub fn replication_seed(base_seed: u64, n: usize, rep: usize) -> u64 {
    derive_seed(&[base_seed, n as u64, rep as u64])
}

/// Draws a sample of size `n` from `truth` and fits the configured estimator.
pub fn fit_replication(cfg: &RiskExperimentConfig, truth: &Density, n: usize, seed: u64) -> Result<Density> {
    let mut rng = seeded(seed);
    match cfg.estimator {
        Estimator::Mle1d => {
            let xs = truth.sample_1d(n, &mut rng)?;
            Ok(mle_1d(&xs, DEFAULT_TOL)?.density.into())
        }
        Estimator::Mle2dTent => {
            let xs = truth.sample(n, &mut rng)?;
            let mut opts = TentOptions::default();
            if let Some(m) = cfg.tent_max_iterations {
                opts.max_iterations = m;
            }
            Ok(mle_2d_tent(&xs, &opts)?.density.into())
        }
    }
}

fn loss(cfg: &RiskExperimentConfig, truth: &Density, n: usize, seed: u64) -> Result<f64> {
    let fit = fit_replication(cfg, truth, n, seed)?;
    let opts = MetricOptions::with_seed(derive_seed(&[seed, 1]));
    let v = match cfg.metric {
        Metric::HellingerSq => hellinger_sq(&fit, truth, &opts)?.value,
    };
    if !(v.is_finite()) {
        return Err(Error::numeric("non-finite loss"));
    }
    Ok(v.clamp(0.0, 2.0))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Monte Carlo estimate of `E h²(f̂_n, f)` for each configured sample size.
///
/// Replications run on the current rayon pool; results are collected in `(n, rep)` order so the
/// output does not depend on the number of threads.
pub fn run_risk_experiment(cfg: &RiskExperimentConfig) -> Result<RiskResult> {
    cfg.validate()?;
    let truth = cfg.truth.build()?;
    let tasks: Vec<(usize, usize)> =
        cfg.sample_sizes.iter().flat_map(|&n| (0..cfg.replications).map(move |r| (n, r))).collect();
    let outcomes: Vec<(usize, usize, u64, Result<f64>)> = tasks
        .par_iter()
        .map(|&(n, rep)| {
            let seed = replication_seed(cfg.base_seed, n, rep);
            (n, rep, seed, loss(cfg, &truth, n, seed))
        })
        .collect();

    let failures_total = outcomes.iter().filter(|o| o.3.is_err()).count();
    if failures_total as f64 > MAX_FAILURE_FRACTION * tasks.len() as f64 {
        let first = outcomes.iter().find_map(|o| o.3.as_ref().err()).map(|e| e.to_string()).unwrap_or_default();
        return Err(Error::numeric(format!(
            "{failures_total} of {} replications failed (first: {first})",
            tasks.len()
        )));
    }

    let mut per_n = Vec::with_capacity(cfg.sample_sizes.len());
    for &n in &cfg.sample_sizes {
        let mut p =
            RiskPoint { n, mean_loss: 0.0, std_error: 0.0, losses: vec![], reps: vec![], seeds: vec![], failures: vec![] };
        for (_, rep, seed, r) in outcomes.iter().filter(|o| o.0 == n) {
            match r {
                Ok(v) => {
                    p.losses.push(*v);
                    p.reps.push(*rep);
                    p.seeds.push(*seed);
                }
                Err(e) => p.failures.push(ReplicationFailure { rep: *rep, seed: *seed, message: e.to_string() }),
            }
        }
        if p.losses.is_empty() {
            return Err(Error::numeric(format!("every replication failed at n = {n}")));
        }
        (p.mean_loss, p.std_error) = mean_and_se(&p.losses);
        per_n.push(p);
    }
    let mut result = RiskResult { schema_version: SCHEMA_VERSION, config: cfg.clone(), per_n, fit: None, failures_total };
    if result.per_n.len() >= 3 && result.per_n.iter().all(|p| p.mean_loss > 0.0) {
        result.fit = Some(fit_rate(&result.points())?);
    }
    Ok(result)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SupremumRiskRow {
    pub n: usize,
    /// Largest mean loss over the truths considered.
    pub risk: f64,
    pub argmax_truth: String,
}

/// Maximum mean loss over a finite set of truths, per sample size.
///
/// This is a surrogate for the supremum over the whole class and only as good as the truth set.
pub fn supremum_risk(results: &[RiskResult]) -> Result<Vec<SupremumRiskRow>> {
    let first = results.first().ok_or_else(|| Error::param("no results"))?;
    let sizes = &first.config.sample_sizes;
    if results.iter().any(|r| &r.config.sample_sizes != sizes) {
        return Err(Error::param("results must share sample sizes"));
    }
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (j, risk) = results
                .iter()
                .map(|r| r.per_n[i].mean_loss)
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
            SupremumRiskRow { n, risk, argmax_truth: results[j].config.truth.label() }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ClassExitReport {
    pub n: usize,
    pub replications: usize,
    pub outside: usize,
    pub fraction: f64,
    pub xi: f64,
    pub eta: f64,
}

/// How often the fitted density leaves the moment class `‖μ‖ ≤ ξ`, `spec(Σ) ⊂ [1 − η, 1 + η]`.
pub fn class_exit_fraction(
    cfg: &RiskExperimentConfig,
    n: usize,
    replications: usize,
    xi: f64,
    eta: f64,
) -> Result<ClassExitReport> {
    let truth = cfg.truth.build()?;
    let flags: Vec<bool> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let fit = fit_replication(cfg, &truth, n, replication_seed(cfg.base_seed, n, rep))?;
            Ok(!check_class_membership(&fit, xi, eta)?.member)
        })
        .collect::<Result<_>>()?;
    let outside = flags.iter().filter(|&&b| b).count();
    Ok(ClassExitReport { n, replications, outside, fraction: outside as f64 / replications as f64, xi, eta })
}
