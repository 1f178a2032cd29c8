//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits non-zero on any FAIL.
//!
//! Select criteria by number: `cargo test --test acceptance -- 2 5`.

use std::time::Instant;

use rand::Rng;

use logconcave::density::{Density, Univariate};
use logconcave::envelopes::{check_env2_bound, env2_extremal, random_mean_zero_loglinear};
use logconcave::families::{
    build_assouad_1d_eps, build_assouad_ballcap, build_entropy_family_1d, default_eta, gilbert_varshamov_subset,
    gv_min_distance, hamming, sample_separated_pair, zeta_residual, zeta_star, C0,
};
use logconcave::geometry::{ball_volume, greedy_sphere_packing, packing_bounds};
use logconcave::harness::{
    class_exit_fraction, lower_bound_report, run_risk_experiment, Estimator, Metric, RiskExperimentConfig, RiskResult,
    TruthSpec,
};
use logconcave::metrics::{hellinger_sq, MetricOptions};
use logconcave::mle::{knot_perturbation_gain, mle_1d, DEFAULT_TOL};
use logconcave::rng::{seeded, standard_normal};

type Outcome = Result<(bool, String), String>;

fn sweep(truth: TruthSpec, dims: usize, estimator: Estimator, sizes: Vec<usize>, reps: usize) -> Result<RiskResult, String> {
    let cfg = RiskExperimentConfig {
        truth,
        dims,
        sample_sizes: sizes,
        replications: reps,
        base_seed: 20_240_501,
        estimator,
        metric: Metric::HellingerSq,
        tent_max_iterations: None,
    };
    run_risk_experiment(&cfg).map_err(|e| e.to_string())
}

fn describe(r: &RiskResult) -> String {
    let pts: Vec<String> = r.per_n.iter().map(|p| format!("n={}:{:.3e}", p.n, p.mean_loss)).collect();
    let f = r.fit.as_ref().unwrap();
    format!(
        "slope {:.3} (95% band [{:.3}, {:.3}], r2 {:.3}); failures {}; {}",
        f.slope,
        f.slope_ci95.0,
        f.slope_ci95.1,
        f.r_squared,
        r.failures_total,
        pts.join(" ")
    )
}

fn criterion_1() -> Outcome {
    let r = sweep(
        TruthSpec::Normal { mean: 0.0, sd: 1.0 },
        1,
        Estimator::Mle1d,
        vec![500, 1000, 2000, 4000, 8000],
        50,
    )?;
    let f = r.fit.as_ref().ok_or("no fit")?;
    let ok = (-1.0..=-0.6).contains(&f.slope);
    let band_ok = f.slope_ci95.0 > -2.0 && f.slope_ci95.1 < 0.0;
    Ok((ok && band_ok, format!("target slope in [-1.0, -0.6]; {}", describe(&r))))
}

fn criterion_2() -> Outcome {
    let eps = 0.1;
    let fam = build_assouad_1d_eps(eps).map_err(|e| e.to_string())?;
    let r3e5 = fam.r.powi(3) * eps.powi(5);
    let lo = 31.0 / 420.0 * r3e5;
    let hi = r3e5 / (2.0 * C0);
    let per_bit = fam.per_bit_hellinger_sq(&MetricOptions::relative(1e-9)).map_err(|e| e.to_string())?;
    let inside = per_bit.iter().all(|&h| h >= lo && h <= hi);
    let rep = lower_bound_report(1, &[100_000], 0).map_err(|e| e.to_string())?;
    let row = &rep.rows[0];
    let bound = row.numeric.as_ref().map(|c| c.bound).unwrap_or(f64::NAN);
    let (mn, mx) = per_bit.iter().fold((f64::INFINITY, 0.0f64), |a, &h| (a.0.min(h), a.1.max(h)));
    Ok((
        inside && row.holds,
        format!(
            "K={} one-flip h2 in [{mn:.6e}, {mx:.6e}] vs [{lo:.6e}, {hi:.6e}]; n=1e5 bound {bound:.4e} >= {:.4e}",
            fam.k, row.target
        ),
    ))
}

fn criterion_3() -> Outcome {
    let d = 2;
    let fam = build_assouad_ballcap(d, 1000, 11).map_err(|e| e.to_string())?;
    let mut rng = seeded(12);
    let alpha: Vec<bool> = (0..fam.k).map(|_| rng.gen()).collect();
    let member = match fam.member(&alpha).map_err(|e| e.to_string())? {
        Density::ConvexBody(b) => b,
        _ => return Err("ball-cap member is not a convex body".into()),
    };
    let samples = 10_000_000;
    let (vol, se) = member.volume_mc(samples, 13);
    let norm_err = (member.height() * vol - 1.0).abs();
    let norm_ok = norm_err < 3.0 * member.height() * se;

    let mut flipped = alpha.clone();
    flipped[0] = !flipped[0];
    let opts = MetricOptions { force_monte_carlo: true, mc_samples: samples, ..MetricOptions::with_seed(14) };
    let mc = hellinger_sq(&member.clone().into(), &fam.member(&flipped).map_err(|e| e.to_string())?, &opts)
        .map_err(|e| e.to_string())?;
    let exact = fam.one_flip_hellinger_sq().ok_or("no closed form")?;
    let flip_ok = (mc.value - exact).abs() < 3.0 * mc.abs_error_estimate;

    let vd = ball_volume(d, 1.0);
    let c_ok = 0.5 * vd <= fam.c_const && fam.c_const <= vd;
    Ok((
        norm_ok && flip_ok && c_ok,
        format!(
            "K={} |height*vol-1|={norm_err:.2e} (3se {:.2e}); one-flip MC {:.5e} vs {exact:.5e} (3se {:.2e}); c={:.6} in [{:.6}, {:.6}]",
            fam.k,
            3.0 * member.height() * se,
            mc.value,
            3.0 * mc.abs_error_estimate,
            fam.c_const,
            0.5 * vd,
            vd
        ),
    ))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        for eps in [0.05, 0.1, 0.2, 0.3, 0.5] {
            let p = greedy_sphere_packing(d, eps, 7).map_err(|e| e.to_string())?;
            let (lo, hi) = packing_bounds(d, eps);
            let n = p.len() as u64;
            let sep = p.verify_separation();
            ok &= sep && lo <= n && n <= hi;
            parts.push(format!("d{d}/{eps}:{lo}<={n}<={hi}{}", if sep { "" } else { "!sep" }));
        }
    }
    Ok((ok, parts.join(" ")))
}

fn criterion_5() -> Outcome {
    let mut rng = seeded(5);
    let points = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    let mut violations = 0;
    let mut checks = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..200 {
        let f = random_mean_zero_loglinear(&mut rng);
        let mut xs: Vec<f64> = points.to_vec();
        xs.extend((0..4).map(|_| {
            let x: f64 = rng.gen_range(0.05..4.0);
            if rng.gen() {
                x
            } else {
                -x
            }
        }));
        for x0 in xs {
            let r = check_env2_bound(&f, x0);
            checks += 1;
            min_slack = min_slack.min(r.slack);
            if !r.holds {
                violations += 1;
            }
        }
    }
    let mut worst = 0.0f64;
    for x0 in points {
        let g = env2_extremal(x0).map_err(|e| e.to_string())?;
        worst = worst.max((g.pdf(x0) - 1.0 / x0.abs()).abs());
    }
    Ok((
        violations == 0 && worst < 1e-9,
        format!("{violations} violations in {checks} checks (min slack {min_slack:.3e}); extremal error {worst:.2e}"),
    ))
}

fn criterion_6() -> Outcome {
    let z = zeta_star();
    let res = zeta_residual(z).abs();
    let mut ok = (0.148..=0.149).contains(&z) && res < 1e-12;
    let mut parts = vec![format!("zeta*={z:.10} residual {res:.1e}")];
    for k in [8usize, 16, 24] {
        let code = gilbert_varshamov_subset(k).map_err(|e| e.to_string())?;
        let need_size = ((k as f64) / 8.0).exp().ceil() as usize;
        let need_dist = k.div_ceil(4);
        let mut min_d = usize::MAX;
        for i in 0..code.len() {
            for j in i + 1..code.len() {
                min_d = min_d.min(hamming(&code.words[i], &code.words[j]));
            }
        }
        ok &= code.len() >= need_size && min_d >= need_dist;
        parts.push(format!("K={k}: size {}>={need_size} dist {min_d}>={need_dist}", code.len()));
    }
    let eps = 0.9e-6;
    let fam = build_entropy_family_1d(eps, default_eta(1)).map_err(|e| e.to_string())?;
    let dmin = gv_min_distance(fam.k);
    let mut rng = seeded(6);
    let opts = MetricOptions::relative(1e-9);
    let mut min_h = f64::INFINITY;
    for _ in 0..20 {
        let (a, b) = sample_separated_pair(fam.k, dmin, &mut rng).map_err(|e| e.to_string())?;
        let f = fam.member(&a).map_err(|e| e.to_string())?;
        let g = fam.member(&b).map_err(|e| e.to_string())?;
        min_h = min_h.min(hellinger_sq(&f, &g, &opts).map_err(|e| e.to_string())?.value);
    }
    let floor = eps * eps / 16.0;
    ok &= min_h > floor;
    parts.push(format!("entropy K={} pair h2 min {min_h:.4e} > {floor:.4e}", fam.k));
    Ok((ok, parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let (mut mass, mut mean, mut equiv, mut gain) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for seed in 0..100u64 {
        let mut rng = seeded(1000 + seed);
        let xs: Vec<f64> = (0..200).map(|_| standard_normal(&mut rng)).collect();
        let fit = mle_1d(&xs, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let f = &fit.density;
        mass = mass.max((f.total_mass() - 1.0).abs());
        let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
        mean = mean.max((f.mean() - xbar).abs());
        let (a, b) = (rng.gen_range(0.2..3.0) * if rng.gen() { 1.0 } else { -1.0 }, rng.gen_range(-5.0..5.0));
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let pushed = f.affine_pushforward(a, b).map_err(|e| e.to_string())?;
        let direct = mle_1d(&ys, DEFAULT_TOL).map_err(|e| e.to_string())?.density;
        for &y in &ys {
            equiv = equiv.max((pushed.pdf(y) - direct.pdf(y)).abs() / (1.0 + direct.pdf(y)));
        }
        gain = gain.max(knot_perturbation_gain(f, &xs, 1e-4));
    }
    Ok((
        mass < 1e-8 && mean < 1e-6 && equiv < 1e-8 && gain <= 1e-9,
        format!("mass err {mass:.1e}; mean err {mean:.1e}; equivariance err {equiv:.1e}; perturbation gain {gain:.1e}"),
    ))
}

fn criterion_8() -> Outcome {
    let r = sweep(
        TruthSpec::UniformBall { dim: 2, radius: 1.0 },
        2,
        Estimator::Mle2dTent,
        vec![200, 400, 800, 1600],
        20,
    )?;
    let f = r.fit.as_ref().ok_or("no fit")?;
    Ok(((-0.9..=-0.45).contains(&f.slope), format!("target slope in [-0.9, -0.45]; {}", describe(&r))))
}

fn criterion_9() -> Outcome {
    let cfg = RiskExperimentConfig {
        truth: TruthSpec::Normal { mean: 0.0, sd: 1.0 },
        dims: 1,
        sample_sizes: vec![1000],
        replications: 200,
        base_seed: 909,
        estimator: Estimator::Mle1d,
        metric: Metric::HellingerSq,
        tent_max_iterations: None,
    };
    let rep = class_exit_fraction(&cfg, 1000, 200, 1.0, 0.99).map_err(|e| e.to_string())?;
    Ok((rep.fraction <= 0.02, format!("{} of {} fits outside the class (fraction {:.3})", rep.outside, rep.replications, rep.fraction)))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "one-dimensional MLE rate", criterion_1),
        (2, "Assouad arithmetic in one dimension", criterion_2),
        (3, "ball-cap family in the plane", criterion_3),
        (4, "packing bounds", criterion_4),
        (5, "mean-zero envelope bound", criterion_5),
        (6, "entropy construction", criterion_6),
        (7, "MLE invariants", criterion_7),
        (8, "planar MLE rate", criterion_8),
        (9, "class exit frequency", criterion_9),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("{} criterion {id} ({name}) [{secs:.1}s]: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
