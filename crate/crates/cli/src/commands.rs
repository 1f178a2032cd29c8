use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use logconcave::density::{Density, Univariate};
use logconcave::envelopes::{
    check_env2_bound, envelope_slack, env2_extremal, estimate_envelope_constants, standardized_generator_1d,
    EnvelopeSpec,
};
use logconcave::families::{
    build_assouad_1d, build_assouad_1d_eps, build_assouad_ballcap, build_entropy_family_1d, build_entropy_family_d,
    default_eta, FamilyVariant, PerturbationFamily,
};
use logconcave::geometry::{greedy_sphere_packing, packing_bounds};
use logconcave::harness::{lower_bound_report, render, run_risk_experiment, ReportFormat, RiskExperimentConfig};
use logconcave::metrics::{hellinger_sq, l1, l2_sq, MetricOptions};
use logconcave::mle::{mle_1d, mle_2d_tent, TentOptions, DEFAULT_TOL};
use logconcave::rng::{derive_seed, seeded};
use logconcave::SCHEMA_VERSION;

use crate::{CliError, Common, Format, MetricKind};

type Result<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(c: &Common, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write_text(c, &s)
}

/// Accepts a bare density or any object carrying one under `density`.
fn density_from_value(v: Value) -> Result<Density> {
    let v = match v {
        Value::Object(mut m) if m.contains_key("density") => m.remove("density").unwrap_or(Value::Null),
        Value::Object(mut m) => {
            m.remove("schema_version");
            Value::Object(m)
        }
        other => other,
    };
    Ok(serde_json::from_value(v)?)
}

fn load_density(path: &Path) -> Result<Density> {
    density_from_value(serde_json::from_str(&read(path)?)?)
}

fn parse_samples(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| invalid(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = out.first() {
            if first.len() != row.len() {
                return Err(invalid(format!("line {}: expected {} coordinates, found {}", i + 1, first.len(), row.len())));
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(invalid("sample file is empty"));
    }
    Ok(out)
}

pub fn estimate(c: &Common, input: &Path, dim: Option<usize>, tol: Option<f64>, max_iterations: Option<usize>) -> Result<()> {
    let xs = parse_samples(&read(input)?)?;
    let found = xs[0].len();
    let d = dim.unwrap_or(found);
    if d != found {
        return Err(invalid(format!("--dim {d} but the samples have {found} coordinates")));
    }
    let out = match d {
        1 => {
            let flat: Vec<f64> = xs.iter().map(|x| x[0]).collect();
            let r = mle_1d(&flat, tol.unwrap_or(DEFAULT_TOL))?;
            json!({
                "schema_version": SCHEMA_VERSION,
                "dim": 1,
                "n": flat.len(),
                "loglik": r.loglik,
                "iterations": r.iterations,
                "converged": r.converged,
                "tolerance": r.tolerance,
                "density": Density::from(r.density),
            })
        }
        2 => {
            let mut opts = TentOptions::default();
            if let Some(t) = tol {
                opts.tol = t;
            }
            if let Some(m) = max_iterations {
                opts.max_iterations = m;
            }
            let r = mle_2d_tent(&xs, &opts)?;
            json!({
                "schema_version": SCHEMA_VERSION,
                "dim": 2,
                "n": xs.len(),
                "objective": r.objective,
                "raw_mass": r.raw_mass,
                "iterations": r.iterations,
                "converged": r.converged,
                "tolerance": opts.tol,
                "density": Density::from(r.density),
            })
        }
        _ => return Err(invalid(format!("the estimator supports dimensions 1 and 2, not {d}"))),
    };
    write_json(c, &out)
}

pub fn metrics(c: &Common, f: &Path, g: &Path, metric: MetricKind, mc_samples: Option<usize>, force_mc: bool) -> Result<()> {
    let f = load_density(f)?;
    let g = load_density(g)?;
    let mut opts = MetricOptions { seed: c.seed, force_monte_carlo: force_mc, ..Default::default() };
    if let Some(m) = mc_samples {
        opts.mc_samples = m;
    }
    let (name, r) = match metric {
        MetricKind::HellingerSq => ("hellinger-sq", hellinger_sq(&f, &g, &opts)?),
        MetricKind::L2Sq => ("l2-sq", l2_sq(&f, &g, &opts)?),
        MetricKind::L1 => ("l1", l1(&f, &g, &opts)?),
    };
    write_json(c, &json!({ "schema_version": SCHEMA_VERSION, "metric": name, "result": r }))
}

fn parse_alpha(s: &str, k: usize) -> Result<Vec<bool>> {
    let bits = s
        .chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(invalid(format!("alpha may only contain 0 and 1, found {other:?}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    if bits.len() != k {
        return Err(invalid(format!("alpha has {} bits but the family has K = {k}", bits.len())));
    }
    Ok(bits)
}

fn bit_string(alpha: &[bool]) -> String {
    alpha.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn build_family(variant: FamilyVariant, dim: usize, n: Option<u64>, eps: Option<f64>, eta: Option<f64>, seed: u64) -> Result<PerturbationFamily> {
    let need_eps = || eps.ok_or_else(|| invalid("--eps is required for this variant"));
    let need_n = || n.ok_or_else(|| invalid("--n is required for this variant"));
    let fam = match variant {
        FamilyVariant::Assouad1d => match (n, eps) {
            (Some(n), None) => build_assouad_1d(n)?,
            (None, Some(e)) => build_assouad_1d_eps(e)?,
            _ => return Err(invalid("give exactly one of --n and --eps")),
        },
        FamilyVariant::AssouadBallcap => build_assouad_ballcap(dim, need_n()?, seed)?,
        FamilyVariant::Entropy1d => build_entropy_family_1d(need_eps()?, eta.unwrap_or(default_eta(1)))?,
        FamilyVariant::EntropyRescaledD => build_entropy_family_d(dim, need_eps()?, eta.unwrap_or(default_eta(dim)), seed)?,
    };
    if fam.dim != dim {
        return Err(invalid(format!("variant lives in dimension {}, not {dim}", fam.dim)));
    }
    Ok(fam)
}

#[allow(clippy::too_many_arguments)]
pub fn family_gen(
    c: &Common,
    variant: &str,
    dim: usize,
    n: Option<u64>,
    eps: Option<f64>,
    eta: Option<f64>,
    alphas: &[String],
    members: usize,
) -> Result<()> {
    let dir = c.out.as_ref().ok_or_else(|| invalid("family-gen needs --out <directory>"))?;
    let variant: FamilyVariant = serde_json::from_value(Value::String(variant.to_string()))
        .map_err(|_| invalid(format!("unknown variant {variant:?}")))?;
    let seed = c.seed.unwrap_or(0);
    let fam = build_family(variant, dim, n, eps, eta, seed)?;

    let mut chosen: Vec<Vec<bool>> = vec![vec![false; fam.k]];
    for a in alphas {
        chosen.push(parse_alpha(a, fam.k)?);
    }
    for m in 0..members as u64 {
        chosen.push((0..fam.k as u64).map(|j| derive_seed(&[seed, m, j]) & 1 == 1).collect());
    }

    std::fs::create_dir_all(dir)?;
    let mut listed = Vec::new();
    for (i, alpha) in chosen.iter().enumerate() {
        let file = format!("member_{i:03}.json");
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "alpha": bit_string(alpha),
            "density": fam.member(alpha)?,
        });
        std::fs::write(dir.join(&file), serde_json::to_string_pretty(&doc)? + "\n")?;
        listed.push(json!({ "file": file, "alpha": bit_string(alpha) }));
    }
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "family": fam,
        "one_flip_hellinger_sq": fam.one_flip_hellinger_sq(),
        "members": listed,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn packing(c: &Common, dim: usize, eps: f64) -> Result<()> {
    let p = greedy_sphere_packing(dim, eps, c.seed.unwrap_or(0))?;
    let (lo, hi) = packing_bounds(dim, eps);
    let size = p.len() as u64;
    write_json(
        c,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "dim": dim,
            "eps": eps,
            "size": size,
            "bounds": [lo, hi],
            "within_bounds": lo <= size && size <= hi,
            "min_pairwise_distance": p.min_pairwise_distance(),
            "separated": p.verify_separation(),
            "packing": p,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn envelope(
    c: &Common,
    d: usize,
    check: Option<&Path>,
    a: Option<f64>,
    b: Option<f64>,
    probes: usize,
    scale: f64,
    x0: &[f64],
) -> Result<()> {
    let mut rng = seeded(c.seed.unwrap_or(0));
    let corpus: Vec<Density> = match check {
        Some(p) => match serde_json::from_str::<Value>(&read(p)?)? {
            Value::Array(items) => items.into_iter().map(density_from_value).collect::<Result<_>>()?,
            _ => return Err(invalid("the corpus must be a JSON array of densities")),
        },
        None if d == 1 => standardized_generator_1d(20, &mut rng)?,
        None => return Err(invalid("--check <corpus.json> is required when d > 1")),
    };
    let (spec, fit) = match (a, b) {
        (Some(a), Some(b)) => (EnvelopeSpec::standardized(d, a, b)?, None),
        (None, None) => {
            let fit = estimate_envelope_constants(d, &corpus, 64, &mut rng)?;
            (fit.spec()?, Some(fit))
        }
        _ => return Err(invalid("give both --a and --b, or neither to fit them")),
    };
    let rows = envelope_slack(&spec, &corpus, probes, scale, &mut rng)?;
    let violations: usize = rows.iter().map(|r| r.violations).sum();

    let mut pointwise = Vec::new();
    if !x0.is_empty() {
        if d != 1 {
            return Err(invalid("--x0 applies in one dimension only"));
        }
        for &x in x0 {
            if x == 0.0 || !x.is_finite() {
                return Err(invalid("x0 must be finite and non-zero"));
            }
            let extremal = env2_extremal(x)?;
            let checks: Vec<_> = corpus
                .iter()
                .filter_map(|f| match f {
                    Density::PiecewiseLogLinear(p) => Some(check_env2_bound(p, x)),
                    _ => None,
                })
                .collect();
            pointwise.push(json!({
                "x0": x,
                "bound": 1.0 / x.abs(),
                "extremal_value": extremal.pdf(x),
                "checked": checks.len(),
                "violations": checks.iter().filter(|r| !r.holds).count(),
                "checks": checks,
            }));
        }
    }
    write_json(
        c,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "d": d,
            "spec": spec,
            "fitted": fit,
            "probes_per_member": probes,
            "scale": scale,
            "total_violations": violations,
            "members": rows,
            "pointwise": pointwise,
        }),
    )
}

pub fn risk_sweep(c: &Common, config: &Path) -> Result<()> {
    let mut cfg: RiskExperimentConfig = toml::from_str(&read(config)?).map_err(|e| invalid(e.to_string()))?;
    if let Some(s) = c.seed {
        cfg.base_seed = s;
    }
    let result = run_risk_experiment(&cfg)?;
    write_json(c, &result)
}

pub fn lower_bound(c: &Common, d: usize, n: &[u64]) -> Result<()> {
    let rep = lower_bound_report(d, n, c.seed.unwrap_or(0))?;
    write_json(c, &rep)
}

pub fn report(c: &Common, input: &Path, format: Format) -> Result<()> {
    let result = logconcave::harness::from_json(&read(input)?)?;
    let f = match format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
        Format::Svg => ReportFormat::Svg,
    };
    let mut text = render(&result, f)?;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    write_text(c, &text)
}
