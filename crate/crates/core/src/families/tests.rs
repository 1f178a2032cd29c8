use super::*;
use crate::metrics::l2_sq;
use crate::rng::seeded;
use proptest::prelude::*;
use rand::Rng;

fn random_alpha<R: Rng>(k: usize, rng: &mut R) -> Vec<bool> {
    (0..k).map(|_| rng.gen()).collect()
}

#[test]
fn assouad_1d_parameters() {
    let f = build_assouad_1d(100_000).unwrap();
    assert!((f.eps - 0.05).abs() < 1e-15);
    assert_eq!(f.k, (std::f64::consts::PI / (6.0 * 0.05f64.asin())).floor() as usize);
    assert!(f.c_const >= C0);
    assert!(build_assouad_1d(1).is_err());
    assert_eq!(build_assouad_1d(2).unwrap().k, 1);
}

#[test]
fn assouad_1d_members_normalized_and_concave() {
    let fam = build_assouad_1d(3000).unwrap();
    let mut rng = seeded(1);
    for _ in 0..5 {
        let a = random_alpha(fam.k, &mut rng);
        let Density::Semicircle(s) = fam.member(&a).unwrap() else { panic!() };
        assert!((s.total_mass() - 1.0).abs() < 1e-9);
        let r = fam.r;
        for _ in 0..1000 {
            let x1 = rng.gen_range(-r..r);
            let x2 = rng.gen_range(-r..r);
            let l: f64 = rng.gen();
            let mid = s.pdf(l * x1 + (1.0 - l) * x2);
            assert!(mid >= l * s.pdf(x1) + (1.0 - l) * s.pdf(x2) - 1e-9);
        }
    }
}

#[test]
fn assouad_1d_hellinger_sandwich() {
    let fam = build_assouad_1d_eps(0.1).unwrap();
    let base = fam.r.powi(3) * fam.eps.powi(5);
    let opts = MetricOptions::relative(1e-10);
    let per_bit = fam.per_bit_hellinger_sq(&opts).unwrap();
    for h in &per_bit {
        assert!(*h >= 31.0 / 420.0 * base - 1e-9 * base, "{h}");
        assert!(*h <= base / (2.0 * C0) * (1.0 + 1e-6), "{h}");
    }
    let mut rng = seeded(2);
    for _ in 0..20 {
        let a = random_alpha(fam.k, &mut rng);
        let b = random_alpha(fam.k, &mut rng);
        let h = fam.pair_hellinger_sq(&a, &b, &opts).unwrap();
        let dist = hamming(&a, &b) as f64;
        assert!(h >= 31.0 / 420.0 * base * dist * (1.0 - 1e-9) && h <= 2.0 + 1e-9);
        // flips act on disjoint arcs, so their contributions add up
        let sum: f64 = (0..fam.k).filter(|&i| a[i] != b[i]).map(|i| per_bit[i]).sum();
        assert!((h - sum).abs() < 1e-6 * sum + 1e-18, "{h} {sum}");
    }
    let zeros = vec![false; fam.k];
    let ones = vec![true; fam.k];
    let h = fam.pair_hellinger_sq(&zeros, &ones, &opts).unwrap();
    assert!(h >= 31.0 / 420.0 * fam.k as f64 * base);
}

#[test]
fn assouad_bound_arithmetic() {
    let c = assouad_bound(1, 1.0, 0.25).unwrap();
    assert_eq!(c.bound, 1.0 / 16.0);
    assert!(assouad_bound(3, 1.0, 1.0).is_err());
    assert!(assouad_bound(0, 1.0, 0.5).is_err());
    assert!(assouad_bound(3, 0.0, 0.5).is_err());
}

#[test]
fn assouad_1d_pipeline_constant() {
    for n in [1_000u64, 100_000, 10_000_000] {
        let cert = build_assouad_1d(n).unwrap().assouad_certificate(n).unwrap();
        assert!(cert.bound >= (n as f64).powf(-0.8) / 28000.0, "{n}: {}", cert.bound);
    }
}

#[test]
fn assouad_1d_numeric_certificate_dominates_closed_form() {
    let n = 100_000;
    let fam = build_assouad_1d(n).unwrap();
    let num = fam.assouad_certificate_numeric(n, &MetricOptions::relative(1e-10)).unwrap();
    let closed = fam.assouad_certificate(n).unwrap();
    assert!(num.gamma >= closed.gamma && num.c <= closed.c);
    assert!(num.bound >= closed.bound);
}

#[test]
fn ballcap_constants() {
    let fam = build_assouad_ballcap(2, 1000, 7).unwrap();
    let vd = std::f64::consts::PI;
    assert!(fam.c_const >= vd / 2.0 && fam.c_const <= vd);
    assert!((fam.eps - (std::f64::consts::PI / 6.0).sqrt() / 2.0 / 10.0).abs() < 1e-12);
    let centers = fam.centers.as_ref().unwrap();
    assert_eq!(centers.len(), 2 * fam.k);
    assert!(build_assouad_ballcap(2, 2, 7).is_err());
    assert!(build_assouad_ballcap(1, 100, 7).is_err());
}

#[test]
fn ballcap_one_flip_matches_exact_distance() {
    let fam = build_assouad_ballcap(2, 1000, 7).unwrap();
    let zeros = vec![false; fam.k];
    let mut one = zeros.clone();
    one[3] = true;
    let f = fam.member(&zeros).unwrap();
    let g = fam.member(&one).unwrap();
    let exact = hellinger_sq(&f, &g, &MetricOptions::default()).unwrap().value;
    let closed = fam.one_flip_hellinger_sq().unwrap();
    assert!((exact - closed).abs() < 1e-10 * closed, "{exact} {closed}");
    let mut opts = MetricOptions::with_seed(11);
    opts.force_monte_carlo = true;
    let mc = hellinger_sq(&f, &g, &opts).unwrap();
    assert!((mc.value - closed).abs() < 3.0 * mc.abs_error_estimate, "{} {closed}", mc.value);
    let ones = vec![true; fam.k];
    let all = hellinger_sq(&f, &fam.member(&ones).unwrap(), &MetricOptions::default()).unwrap().value;
    assert!((all - fam.k as f64 * closed).abs() < 1e-10 * all);
}

#[test]
fn ballcap_member_normalization() {
    let fam = build_assouad_ballcap(2, 200, 3).unwrap();
    let mut rng = seeded(5);
    let a = random_alpha(fam.k, &mut rng);
    let Density::ConvexBody(b) = fam.member(&a).unwrap() else { panic!() };
    let (v, se) = b.volume_mc(1_000_000, 8);
    assert!((b.height() * v - 1.0).abs() < 3.0 * b.height() * se);
}

#[test]
fn ballcap_pipeline_constant() {
    for d in [2usize, 3] {
        for n in [1_000u64, 10_000] {
            let fam = build_assouad_ballcap(d, n, 1).unwrap();
            let cert = fam.assouad_certificate(n).unwrap();
            let df = d as f64;
            let target = 1.0 / (500.0 * 2f64.powf(df)) * (15.0f64 / 16.0).powf((df + 1.0) / 2.0)
                * (n as f64).powf(-2.0 / (df + 1.0));
            assert!(cert.bound >= target, "d={d} n={n}: {} < {target}", cert.bound);
        }
    }
}

#[test]
fn zeta_star_root() {
    let z = zeta_star();
    assert!((0.148..=0.149).contains(&z));
    assert!(zeta_residual(z).abs() < 1e-12);
    assert!(zeta_residual(0.148) * zeta_residual(0.149) < 0.0);
}

#[test]
fn entropy_1d_family() {
    let eps = 0.9e-6;
    let fam = build_entropy_family_1d(eps, default_eta(1)).unwrap();
    assert_eq!(fam.k, (zeta_star() / eps.sqrt().asin()).floor() as usize);
    assert!(fam.moments.as_ref().unwrap().all_hold(), "{:?}", fam.moments);
    let mut rng = seeded(9);
    let a = random_alpha(fam.k, &mut rng);
    let Density::Semicircle(s) = fam.member(&a).unwrap() else { panic!() };
    assert!((s.total_mass() - 1.0).abs() < 1e-9);
    let opts = MetricOptions::relative(1e-9);
    let flip = fam.per_bit_hellinger_sq(&opts).unwrap();
    let lower = 31.0 / 420.0 * fam.r * fam.r * eps.powf(2.5);
    assert!(flip.iter().all(|h| *h >= lower * (1.0 - 1e-6)), "{} {lower}", flip[0]);
    for _ in 0..3 {
        let (a, b) = sample_separated_pair(fam.k, gv_min_distance(fam.k), &mut rng).unwrap();
        let h = fam.pair_hellinger_sq(&a, &b, &opts).unwrap();
        assert!(h > eps * eps / 16.0, "{h}");
    }
    assert!(build_entropy_family_1d(2e-6, 0.99).is_err());
    assert!(build_entropy_family_1d(1e-7, 1.5).is_err());
}

#[test]
fn entropy_d_family() {
    let eps = 1e-4;
    let fam = build_entropy_family_d(2, eps, default_eta(2), 21).unwrap();
    assert!((fam.r - 2.0).abs() < 1e-15);
    let report = fam.moments.as_ref().unwrap();
    assert!(report.all_hold(), "{report:?}");
    let mut rng = seeded(3);
    let (a, b) = sample_separated_pair(fam.k, gv_min_distance(fam.k), &mut rng).unwrap();
    let h = fam.pair_hellinger_sq(&a, &b, &MetricOptions::default()).unwrap();
    let bound = 15f64.powf(1.5) / (10.0 * 8.0 * 16f64.powf(1.5)) * eps * eps;
    assert!(h > bound, "{h} {bound}");
    assert!(build_entropy_family_d(2, 2e-4, 0.9, 1).is_err());
    assert!(build_entropy_family_d(3, 1e-4, 0.9, 1).is_err());
}

#[test]
fn rescaled_members_are_scaled_bodies() {
    let fam = build_entropy_family_d(2, 1e-4, 0.9, 21).unwrap();
    let ones = vec![true; fam.k];
    let f = fam.member(&ones).unwrap();
    let Density::ConvexBody(b) = &f else { panic!() };
    assert!((b.radius() - 2.0).abs() < 1e-15);
    assert!((b.volume().value - 4.0 * fam.c_const).abs() < 1e-9);
    // distances are invariant under the common rescaling
    let mut one = vec![false; fam.k];
    one[0] = true;
    let z = fam.member(&vec![false; fam.k]).unwrap();
    let h = hellinger_sq(&z, &fam.member(&one).unwrap(), &MetricOptions::default()).unwrap().value;
    assert!((h - fam.one_flip_hellinger_sq().unwrap()).abs() < 1e-6 * h, "{h} {:?}", fam.one_flip_hellinger_sq());
    assert!(l2_sq(&z, &z, &MetricOptions::default()).unwrap().value == 0.0);
}

#[test]
fn family_serializes() {
    let fam = build_assouad_ballcap(2, 100, 1).unwrap();
    let s = serde_json::to_string(&fam).unwrap();
    assert!(s.contains("\"variant\":\"assouad-ballcap\""));
    let back: PerturbationFamily = serde_json::from_str(&s).unwrap();
    assert_eq!(back, fam);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_monotone(k in 1usize..100, g in 1e-6f64..1.0, c in 0.01f64..0.98, dg in 0.0f64..1.0, dc in 0.0f64..0.01) {
        let b = assouad_bound(k, g, c).unwrap().bound;
        prop_assert!(assouad_bound(k + 1, g, c).unwrap().bound >= b);
        prop_assert!(assouad_bound(k, g + dg, c).unwrap().bound >= b);
        prop_assert!(assouad_bound(k, g, c + dc).unwrap().bound <= b);
    }
}
