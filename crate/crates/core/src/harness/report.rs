use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::RiskResult;
use super::lower_bound::minimax_rate;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::param(format!("unknown report format {other:?}"))),
        }
    }
}

/// One row per successful replication: `n,rep,seed,loss`.
pub fn to_csv(result: &RiskResult) -> String {
    let mut s = String::from("n,rep,seed,loss\n");
    for p in &result.per_n {
        for ((rep, seed), loss) in p.reps.iter().zip(&p.seeds).zip(&p.losses) {
            let _ = writeln!(s, "{},{},{},{:e}", p.n, rep, seed, loss);
        }
    }
    s
}

pub fn to_json(result: &RiskResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn from_json(s: &str) -> Result<RiskResult> {
    Ok(serde_json::from_str(s)?)
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Log-log plot of mean loss with the fitted line and a guide line of the minimax slope.
pub fn to_svg(result: &RiskResult) -> String {
    let pts: Vec<(f64, f64)> = result.points().into_iter().filter(|p| p.1 > 0.0).collect();
    let target = -minimax_rate(result.config.dims);
    let guide = |n: f64| match pts.first() {
        Some(&(n0, l0)) => l0 * (n / n0).powf(target),
        None => 1.0,
    };
    let (nlo, nhi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (nlo, nhi) = if nlo < nhi { (nlo, nhi) } else { (nlo.min(1.0) * 0.5, nhi.max(1.0) * 2.0) };
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    ys.extend([guide(nlo), guide(nhi)]);
    if let Some(f) = &result.fit {
        ys.extend([f.predict(nlo), f.predict(nhi)]);
    }
    let ylo = ys.iter().cloned().fold(f64::INFINITY, f64::min).ln() - 0.1;
    let yhi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ln() + 0.1;
    let (xlo, xhi) = (nlo.ln(), nhi.ln());
    let px = |n: f64| MARGIN + (n.ln() - xlo) / (xhi - xlo) * (W - 2.0 * MARGIN);
    let py = |l: f64| H - MARGIN - (l.ln() - ylo) / (yhi - ylo) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log n</text>"#, W / 2.0, H - 20.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" transform="rotate(-90 20 {})" text-anchor="middle">log mean squared Hellinger loss</text>"#,
        H / 2.0,
        H / 2.0
    );
    for &(n, l) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, px(n), py(l));
    }
    if let Some(f) = &result.fit {
        let _ = writeln!(
            s,
            r#"<polyline class="fit" points="{:.2},{:.2} {:.2},{:.2}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
            px(nlo),
            py(f.predict(nlo)),
            px(nhi),
            py(f.predict(nhi))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="steelblue">fitted slope {:.3}</text>"#,
            W - 220.0,
            MARGIN - 20.0,
            f.slope
        );
    }
    let _ = writeln!(
        s,
        r#"<polyline class="guide" points="{:.2},{:.2} {:.2},{:.2}" stroke="gray" stroke-dasharray="6 4" fill="none"/>"#,
        px(nlo),
        py(guide(nlo)),
        px(nhi),
        py(guide(nhi))
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" fill="gray">guide slope {:.3}</text>"#, W - 220.0, MARGIN - 4.0, target);
    s.push_str("</svg>\n");
    s
}

pub fn render(result: &RiskResult, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(to_csv(result)),
        ReportFormat::Json => to_json(result),
        ReportFormat::Svg => Ok(to_svg(result)),
    }
}

pub fn emit_report(result: &RiskResult, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render(result, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Estimator, Metric, RiskExperimentConfig, TruthSpec};
    use crate::harness::experiment::RiskPoint;
    use crate::harness::rate::fit_rate;
    use crate::SCHEMA_VERSION;

    fn synthetic(sizes: &[usize]) -> RiskResult {
        let per_n: Vec<RiskPoint> = sizes
            .iter()
            .map(|&n| {
                let l = 0.3 * (n as f64).powf(-0.8);
                RiskPoint {
                    n,
                    mean_loss: l,
                    std_error: 0.1 * l,
                    losses: vec![0.9 * l, 1.1 * l],
                    reps: vec![0, 1],
                    seeds: vec![n as u64 * 7, n as u64 * 7 + 1],
                    failures: vec![],
                }
            })
            .collect();
        let mut r = RiskResult {
            schema_version: SCHEMA_VERSION,
            config: RiskExperimentConfig {
                truth: TruthSpec::Normal { mean: 0.0, sd: 1.0 },
                dims: 1,
                sample_sizes: sizes.to_vec(),
                replications: 2,
                base_seed: 9,
                estimator: Estimator::Mle1d,
                metric: Metric::HellingerSq,
                tent_max_iterations: None,
            },
            per_n,
            fit: None,
            failures_total: 0,
        };
        if sizes.len() >= 3 {
            r.fit = Some(fit_rate(&r.points()).unwrap());
        }
        r
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&synthetic(&[100, 200]));
        assert!(csv.starts_with("n,rep,seed,loss\n"));
        assert!(!csv.contains('\r'));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("100,0,700,"));
        let loss: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(loss, 0.9 * 0.3 * 100f64.powf(-0.8));
    }

    #[test]
    fn json_round_trip() {
        let r = synthetic(&[100, 200, 400, 800, 1600]);
        assert_eq!(from_json(&to_json(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn svg_has_two_lines() {
        let svg = to_svg(&synthetic(&[100, 200, 400, 800, 1600]));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches(r#"class="fit""#).count(), 1);
        assert_eq!(svg.matches(r#"class="guide""#).count(), 1);
        assert_eq!(svg.matches("<circle").count(), 5);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = synthetic(&[100, 200, 400]);
        for (f, name) in [(ReportFormat::Csv, "a.csv"), (ReportFormat::Json, "a.json"), (ReportFormat::Svg, "a.svg")] {
            let p = dir.path().join(name);
            emit_report(&r, f, &p).unwrap();
            assert!(std::fs::metadata(&p).unwrap().len() > 0);
        }
        assert!(emit_report(&r, ReportFormat::Csv, &dir.path().join("missing/a.csv")).is_err());
        assert_eq!("SVG".parse::<ReportFormat>().unwrap(), ReportFormat::Svg);
        assert!("pdf".parse::<ReportFormat>().is_err());
    }
}
