//! Squared Hellinger, squared L2 and L1 distances between densities.

use serde::{Deserialize, Serialize};

use crate::density::{ConvexBodyUniform, Density, PiecewiseLogLinear1D, TentDensity2D, Univariate};
use crate::error::{Error, Result};
use crate::geometry::{cap_volume, Halfspace};
use crate::numeric::{exp_mean, gauss_kronrod};
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMethod {
    ExactSegment,
    AdaptiveQuadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistanceResult {
    pub value: f64,
    pub method: DistanceMethod,
    pub abs_error_estimate: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub mc_samples: usize,
    /// Required whenever the Monte Carlo backend is used.
    pub seed: Option<u64>,
    pub force_monte_carlo: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions { abs_tol: 1e-10, rel_tol: 1e-10, mc_samples: 1_000_000, seed: None, force_monte_carlo: false }
    }
}

impl MetricOptions {
    pub fn with_seed(seed: u64) -> Self {
        MetricOptions { seed: Some(seed), ..Default::default() }
    }

    /// Tolerances purely relative to the integral, for distances far below `abs_tol`.
    pub fn relative(rel_tol: f64) -> Self {
        MetricOptions { abs_tol: 0.0, rel_tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Hellinger,
    L2Sq,
    L1,
}

impl Kind {
    #[inline]
    fn integrand(self, f: f64, g: f64) -> f64 {
        match self {
            Kind::Hellinger => {
                let d = f.sqrt() - g.sqrt();
                d * d
            }
            Kind::L2Sq => (f - g) * (f - g),
            Kind::L1 => (f - g).abs(),
        }
    }
}

/// `∫ (√f − √g)²`.
pub fn hellinger_sq(f: &Density, g: &Density, opts: &MetricOptions) -> Result<DistanceResult> {
    distance(f, g, opts, Kind::Hellinger)
}

/// `∫ (f − g)²`.
pub fn l2_sq(f: &Density, g: &Density, opts: &MetricOptions) -> Result<DistanceResult> {
    distance(f, g, opts, Kind::L2Sq)
}

/// `∫ |f − g|`.
pub fn l1(f: &Density, g: &Density, opts: &MetricOptions) -> Result<DistanceResult> {
    distance(f, g, opts, Kind::L1)
}

fn distance(f: &Density, g: &Density, opts: &MetricOptions, kind: Kind) -> Result<DistanceResult> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
    }
    let mut res = if opts.force_monte_carlo {
        monte_carlo(f, g, opts, kind)?
    } else {
        match (f, g) {
            (Density::PiecewiseLogLinear(a), Density::PiecewiseLogLinear(b)) => exact_loglinear(a, b, kind),
            _ if f.dim() == 1 => quadrature_1d(f, g, opts, kind)?,
            (Density::ConvexBody(a), Density::ConvexBody(b)) => match exact_bodies(a, b, kind) {
                Some(r) => r,
                None => monte_carlo(f, g, opts, kind)?,
            },
            (Density::Tent(t), Density::ConvexBody(b)) | (Density::ConvexBody(b), Density::Tent(t)) => {
                match exact_tent_body(t, b, kind) {
                    Some(r) => r,
                    None => monte_carlo(f, g, opts, kind)?,
                }
            }
            _ => monte_carlo(f, g, opts, kind)?,
        }
    };
    if res.value < 0.0 {
        res.value = 0.0;
    }
    Ok(res)
}

/// Finite interval holding all but a negligible tail of a univariate density.
fn effective_support(f: &Density) -> (f64, f64) {
    match f {
        Density::Gaussian(g) => (g.mean - 9.5 * g.sd, g.mean + 9.5 * g.sd),
        Density::Laplace(l) => (l.loc - 44.0 * l.scale, l.loc + 44.0 * l.scale),
        _ => f.as_univariate().map(|u| u.support()).unwrap_or((0.0, 0.0)),
    }
}

fn quadrature_1d(f: &Density, g: &Density, opts: &MetricOptions, kind: Kind) -> Result<DistanceResult> {
    let (uf, ug) = match (f.as_univariate(), g.as_univariate()) {
        (Some(a), Some(b)) => (a, b),
        _ => return monte_carlo(f, g, opts, kind),
    };
    let (fl, fh) = effective_support(f);
    let (gl, gh) = effective_support(g);
    let lo = fl.min(gl);
    let hi = fh.max(gh);
    let mut grid: Vec<f64> = uf
        .breakpoints()
        .into_iter()
        .chain(ug.breakpoints())
        .chain([fl, fh, gl, gh])
        .filter(|x| *x >= lo && *x <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let cells = (grid.len() - 1).max(1) as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for w in grid.windows(2) {
        let q = gauss_kronrod(
            |x| kind.integrand(uf.pdf(x), ug.pdf(x)),
            w[0],
            w[1],
            opts.abs_tol / cells,
            opts.rel_tol,
            400,
        );
        value += q.value;
        err += q.error;
    }
    Ok(DistanceResult { value, method: DistanceMethod::AdaptiveQuadrature, abs_error_estimate: err, seed: None })
}

/// Closed-form cell integrals for two piecewise log-linear densities.
fn exact_loglinear(f: &PiecewiseLogLinear1D, g: &PiecewiseLogLinear1D, kind: Kind) -> DistanceResult {
    let mut grid: Vec<f64> = f.knots().iter().chain(g.knots()).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (fl, fh) = f.support();
    let (gl, gh) = g.support();
    let mut value = 0.0;
    let mut scale = 0.0;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let width = b - a;
        let in_f = a >= fl && b <= fh;
        let in_g = a >= gl && b <= gh;
        let (fa, fb) = (f.log_pdf(a), f.log_pdf(b));
        let (ga, gb) = (g.log_pdf(a), g.log_pdf(b));
        let cell = match (in_f, in_g) {
            (false, false) => 0.0,
            (true, false) => single_cell(kind, fa, fb) * width,
            (false, true) => single_cell(kind, ga, gb) * width,
            (true, true) => {
                scale += width * (exp_mean(fa, fb) + exp_mean(ga, gb));
                paired_cell(kind, fa, fb, ga, gb, a, b)
            }
        };
        value += cell;
    }
    DistanceResult {
        value,
        method: DistanceMethod::ExactSegment,
        abs_error_estimate: 1e-14 * scale.max(1.0),
        seed: None,
    }
}

fn single_cell(kind: Kind, a: f64, b: f64) -> f64 {
    match kind {
        Kind::Hellinger | Kind::L1 => exp_mean(a, b),
        Kind::L2Sq => exp_mean(2.0 * a, 2.0 * b),
    }
}

fn paired_cell(kind: Kind, fa: f64, fb: f64, ga: f64, gb: f64, a: f64, b: f64) -> f64 {
    let width = b - a;
    match kind {
        Kind::Hellinger => {
            let v = width * (exp_mean(fa, fb) + exp_mean(ga, gb) - 2.0 * exp_mean(0.5 * (fa + ga), 0.5 * (fb + gb)));
            let mass = width * (exp_mean(fa, fb) + exp_mean(ga, gb));
            if v.abs() < 1e-6 * mass {
                // cancellation: integrate the difference directly
                gauss_kronrod(
                    |x| {
                        let t = (x - a) / width;
                        let pf = fa + t * (fb - fa);
                        let pg = ga + t * (gb - ga);
                        let d = (0.5 * pf).exp() - (0.5 * pg).exp();
                        d * d
                    },
                    a,
                    b,
                    0.0,
                    1e-12,
                    50,
                )
                .value
            } else {
                v
            }
        }
        Kind::L2Sq => {
            width * (exp_mean(2.0 * fa, 2.0 * fb) + exp_mean(2.0 * ga, 2.0 * gb) - 2.0 * exp_mean(fa + ga, fb + gb))
        }
        Kind::L1 => {
            let da = fa - ga;
            let db = fb - gb;
            if da * db < 0.0 {
                let t = da / (da - db);
                let (fm, gm) = (fa + t * (fb - fa), ga + t * (gb - ga));
                let left = t * width * (exp_mean(fa, fm) - exp_mean(ga, gm)).abs();
                let right = (1.0 - t) * width * (exp_mean(fm, fb) - exp_mean(gm, gb)).abs();
                left + right
            } else {
                width * (exp_mean(fa, fb) - exp_mean(ga, gb)).abs()
            }
        }
    }
}

fn same_halfspace(a: &Halfspace, b: &Halfspace) -> bool {
    a.offset == b.offset && a.normal == b.normal
}

/// Bodies sharing a ball whose caps are all disjoint (shared caps allowed).
fn exact_bodies(f: &ConvexBodyUniform, g: &ConvexBodyUniform, kind: Kind) -> Option<DistanceResult> {
    if f.radius() != g.radius() || !f.caps_disjoint() || !g.caps_disjoint() {
        return None;
    }
    let d = f.dim();
    let r = f.radius();
    let only_f: Vec<&Halfspace> = f
        .halfspaces()
        .iter()
        .filter(|h| !g.halfspaces().iter().any(|k| same_halfspace(h, k)))
        .collect();
    let only_g: Vec<&Halfspace> = g
        .halfspaces()
        .iter()
        .filter(|h| !f.halfspaces().iter().any(|k| same_halfspace(h, k)))
        .collect();
    // caps removed from one body only must miss every cap of the other
    for h in &only_f {
        for k in &only_g {
            let dot: f64 = h.normal.iter().zip(&k.normal).map(|(a, b)| a * b).sum();
            let ah = (h.offset / r).clamp(-1.0, 1.0).acos();
            let ak = (k.offset / r).clamp(-1.0, 1.0).acos();
            if h.offset < 0.0 || k.offset < 0.0 || dot.clamp(-1.0, 1.0).acos() < ah + ak {
                return None;
            }
        }
    }
    let cut_f: f64 = only_f.iter().map(|h| cap_volume(d, r, h.offset)).sum();
    let cut_g: f64 = only_g.iter().map(|h| cap_volume(d, r, h.offset)).sum();
    let vf = f.volume().value;
    let vg = g.volume().value;
    // |A∖B| is the caps removed from B only, and vice versa
    let a_minus_b = cut_g;
    let b_minus_a = cut_f;
    let both = vf - a_minus_b;
    let value = match kind {
        Kind::Hellinger => {
            // vf^{-1/2} − vg^{-1/2} without cancellation
            let diff = (vg - vf) / (vf.sqrt() * vg.sqrt() * (vf.sqrt() + vg.sqrt()));
            a_minus_b / vf + b_minus_a / vg + both * diff * diff
        }
        Kind::L2Sq => {
            let diff = (vg - vf) / (vf * vg);
            a_minus_b / (vf * vf) + b_minus_a / (vg * vg) + both * diff * diff
        }
        Kind::L1 => {
            let diff = (vg - vf) / (vf * vg);
            a_minus_b / vf + b_minus_a / vg + both * diff.abs()
        }
    };
    Some(DistanceResult {
        value,
        method: DistanceMethod::ExactSegment,
        abs_error_estimate: 1e-12 * value.max(1e-300),
        seed: None,
    })
}

/// Tent density supported inside a uniform body: closed forms for Hellinger and L2.
fn exact_tent_body(t: &TentDensity2D, b: &ConvexBodyUniform, kind: Kind) -> Option<DistanceResult> {
    if kind == Kind::L1 || b.dim() != 2 {
        return None;
    }
    if !t.points().iter().all(|p| b.contains(p)) {
        return None;
    }
    let c = b.height();
    let value = match kind {
        Kind::Hellinger => 2.0 - 2.0 * c.sqrt() * t.integral_of_sqrt(),
        Kind::L2Sq => t.integral_of_square() - 2.0 * c + c * c * b.volume().value,
        Kind::L1 => unreachable!(),
    };
    Some(DistanceResult {
        value,
        method: DistanceMethod::ExactSegment,
        abs_error_estimate: 1e-12 + b.volume().std_error * c,
        seed: None,
    })
}

/// Mixture importance sampling: half the draws from each density, weighted by `(f + g)/2`.
fn monte_carlo(f: &Density, g: &Density, opts: &MetricOptions, kind: Kind) -> Result<DistanceResult> {
    let seed = opts
        .seed
        .ok_or_else(|| Error::param("Monte Carlo distance requires an explicit seed"))?;
    if opts.mc_samples < 4 {
        return Err(Error::param("Monte Carlo distance needs at least 4 samples"));
    }
    // canonical order makes the estimate symmetric in its arguments
    let (a, b) = {
        let ja = serde_json::to_string(f)?;
        let jb = serde_json::to_string(g)?;
        if ja <= jb {
            (f, g)
        } else {
            (g, f)
        }
    };
    let half = opts.mc_samples / 2;
    let mut parts = [(0.0, 0.0); 2];
    for (stream, src) in [a, b].into_iter().enumerate() {
        let mut rng = seeded(derive_seed(&[seed, stream as u64]));
        let xs = src.sample(half, &mut rng)?;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for x in &xs {
            let fa = a.value_unchecked(x);
            let fb = b.value_unchecked(x);
            let m = 0.5 * (fa + fb);
            let w = if m > 0.0 { kind.integrand(fa, fb) / m } else { 0.0 };
            s += w;
            s2 += w * w;
        }
        let n = half as f64;
        let mean = s / n;
        parts[stream] = (mean, ((s2 / n - mean * mean).max(0.0) / n).sqrt());
    }
    let value = 0.5 * (parts[0].0 + parts[1].0);
    let se = 0.5 * (parts[0].1.powi(2) + parts[1].1.powi(2)).sqrt();
    Ok(DistanceResult { value, method: DistanceMethod::MonteCarlo, abs_error_estimate: se, seed: Some(seed) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Gaussian1D, SemicirclePerturbation1D};
    use proptest::prelude::*;

    fn unif(a: f64, b: f64) -> Density {
        PiecewiseLogLinear1D::uniform(a, b).unwrap().into()
    }

    #[test]
    fn identity_is_zero() {
        let f: Density = PiecewiseLogLinear1D::construct_normalized(vec![0.0, 1.0, 3.0], vec![0.0, 0.5, -1.0])
            .unwrap()
            .into();
        assert!(hellinger_sq(&f, &f, &MetricOptions::default()).unwrap().value.abs() < 1e-12);
        assert!(l2_sq(&f, &f, &MetricOptions::default()).unwrap().value.abs() < 1e-12);
        let g: Density = Gaussian1D::standard().into();
        assert!(hellinger_sq(&g, &g, &MetricOptions::default()).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn uniform_pair_closed_form() {
        let h = hellinger_sq(&unif(0.0, 1.0), &unif(0.0, 2.0), &MetricOptions::default()).unwrap();
        assert!((h.value - (2.0 - 2f64.sqrt())).abs() < 1e-9);
        assert_eq!(h.method, DistanceMethod::ExactSegment);
        assert!((l1(&unif(0.0, 1.0), &unif(1.0, 2.0), &MetricOptions::default()).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_agrees_with_exact_path() {
        // the semicircle forces the quadrature path; compare against a knot approximation
        let f: Density = PiecewiseLogLinear1D::construct_normalized(vec![-1.0, 0.0, 2.0], vec![-1.0, 0.0, -0.5])
            .unwrap()
            .into();
        let g: Density = Gaussian1D::new(0.2, 0.8).unwrap().into();
        let h = hellinger_sq(&f, &g, &MetricOptions::default()).unwrap();
        assert_eq!(h.method, DistanceMethod::AdaptiveQuadrature);
        let mc = hellinger_sq(&f, &g, &MetricOptions { force_monte_carlo: true, ..MetricOptions::with_seed(3) }).unwrap();
        assert!((h.value - mc.value).abs() < 4.0 * mc.abs_error_estimate, "{} {}", h.value, mc.value);
    }

    #[test]
    fn l1_handles_crossing() {
        let f: Density = PiecewiseLogLinear1D::construct_normalized(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap().into();
        let g = unif(0.0, 1.0);
        // ∫|eˣ/(e−1) − 1| with crossing at ln(e−1)
        let e = std::f64::consts::E;
        let c = (e - 1.0).ln();
        let exact = 2.0 * (c - (c.exp() - 1.0) / (e - 1.0));
        assert!((l1(&f, &g, &MetricOptions::default()).unwrap().value - exact).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_requires_seed() {
        let a: Density = ConvexBodyUniform::ball(2, 1.0).unwrap().into();
        let b: Density = ConvexBodyUniform::ball(2, 1.2).unwrap().into();
        assert!(hellinger_sq(&a, &b, &MetricOptions::default()).is_err());
        let r1 = hellinger_sq(&a, &b, &MetricOptions { mc_samples: 100_000, ..MetricOptions::with_seed(1) }).unwrap();
        let r2 = hellinger_sq(&b, &a, &MetricOptions { mc_samples: 100_000, ..MetricOptions::with_seed(1) }).unwrap();
        assert_eq!(r1.value, r2.value);
        // nested balls: h² = 2 − 2 (1/1.2)
        assert!((r1.value - (2.0 - 2.0 / 1.2)).abs() < 4.0 * r1.abs_error_estimate);
    }

    #[test]
    fn body_exact_path_matches_monte_carlo() {
        let cap = |n: Vec<f64>| Halfspace::from_raw(n, 0.6).unwrap();
        let a: Density = ConvexBodyUniform::new(2, 1.0, vec![cap(vec![1.0, 0.0])]).unwrap().into();
        let b: Density = ConvexBodyUniform::new(2, 1.0, vec![cap(vec![-1.0, 0.2])]).unwrap().into();
        for kind in [Kind::Hellinger, Kind::L2Sq, Kind::L1] {
            let ex = distance(&a, &b, &MetricOptions::default(), kind).unwrap();
            assert_eq!(ex.method, DistanceMethod::ExactSegment);
            let mc = distance(&a, &b, &MetricOptions { force_monte_carlo: true, ..MetricOptions::with_seed(8) }, kind).unwrap();
            assert!((ex.value - mc.value).abs() < 4.0 * mc.abs_error_estimate, "{kind:?} {} {}", ex.value, mc.value);
        }
    }

    #[test]
    fn semicircle_flip_l2_sandwich() {
        let eps: f64 = 0.1;
        let r = 2.0 / 3.0;
        let k = (std::f64::consts::PI / (6.0 * eps.asin())).floor() as usize;
        let base = SemicirclePerturbation1D::raised(r, eps, vec![false; k]).unwrap();
        let mut bits = vec![false; k];
        bits[2] = true;
        let flip = base.with_alpha(bits).unwrap();
        let l2 = l2_sq(&base.into(), &flip.into(), &MetricOptions::relative(1e-12)).unwrap().value;
        let lo = 2.0 * (31.0 / 420.0) * r.powi(3) * eps.powi(5) * 2.0;
        let hi = 2.0 * r.powi(3) * eps.powi(5);
        assert!(l2 >= lo && l2 <= hi, "{lo} <= {l2} <= {hi}");
    }

    fn random_loglinear(seed: u64) -> Density {
        use rand::Rng;
        let mut rng = seeded(seed);
        let m = rng.gen_range(2..6);
        let mut slopes: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        slopes.sort_by(|a, b| b.total_cmp(a));
        let mut knots = vec![rng.gen_range(-2.0..0.0)];
        let mut logs = vec![0.0];
        for s in &slopes {
            let w = rng.gen_range(0.1..1.5);
            knots.push(knots.last().unwrap() + w);
            logs.push(logs.last().unwrap() + s * w);
        }
        PiecewiseLogLinear1D::construct_normalized(knots, logs).unwrap().into()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hellinger_symmetric_and_triangle(s1 in 0u64..10_000, s2 in 0u64..10_000, s3 in 0u64..10_000) {
            let (f, g, h) = (random_loglinear(s1), random_loglinear(s2), random_loglinear(s3));
            let o = MetricOptions::default();
            let fg = hellinger_sq(&f, &g, &o).unwrap().value;
            let gf = hellinger_sq(&g, &f, &o).unwrap().value;
            prop_assert!((fg - gf).abs() < 1e-12);
            prop_assert!(fg <= 2.0 + 1e-12);
            let gh = hellinger_sq(&g, &h, &o).unwrap().value;
            let fh = hellinger_sq(&f, &h, &o).unwrap().value;
            prop_assert!(fg.sqrt() + gh.sqrt() - fh.sqrt() >= -1e-8);
        }

        #[test]
        fn hellinger_affine_invariant(s1 in 0u64..10_000, s2 in 0u64..10_000, a in 0.1f64..5.0, neg in proptest::bool::ANY, b in -10.0f64..10.0) {
            let (f, g) = (random_loglinear(s1), random_loglinear(s2));
            let a = if neg { -a } else { a };
            let push = |d: &Density| match d {
                Density::PiecewiseLogLinear(p) => Density::PiecewiseLogLinear(p.affine_pushforward(a, b).unwrap()),
                _ => unreachable!(),
            };
            let o = MetricOptions::default();
            let h0 = hellinger_sq(&f, &g, &o).unwrap().value;
            let h1 = hellinger_sq(&push(&f), &push(&g), &o).unwrap().value;
            prop_assert!((h0 - h1).abs() < 1e-8);
        }
    }
}
