//! Quadrature rules and exponential helpers shared by the density, metric and estimator code.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Simpson rule with Richardson correction.
///
/// Panels stop splitting at `max_depth`; their residual is still added to `error`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0 };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut err);
    Quadrature { value, error: err }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    let mut abs_k = rk.abs();
    let mut vals = [0.0f64; 15];
    vals[7] = fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        vals[j] = f1;
        vals[14 - j] = f2;
        rk += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * rk;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((vals[j] - mean).abs() + (vals[14 - j] - mean).abs());
    }
    let value = rk * h;
    let asc = asc * h.abs();
    let abs_k = abs_k * h.abs();
    let mut err = ((rk - rg) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_k);
    }
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature.
///
/// Bisects the panel with the largest error until the total error is below
/// `max(abs_tol, rel_tol * |value|)` or `max_panels` is reached.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0 };
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut panels = 1;
    while total_err > abs_tol.max(rel_tol * total.abs()) && panels < max_panels {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = kronrod15(&f, p.a, m);
        let (v2, e2) = kronrod15(&f, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
        panels += 1;
    }
    // re-sum to shed accumulated drift from the running totals
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error }
}

/// `[∫₀¹ u^k e^{d u} du]` for k = 0, 1, 2, assuming `d <= 0` or `|d| < 1`.
fn j_moments(d: f64) -> [f64; 3] {
    if d.abs() < 1.0 {
        let mut out = [0.0; 3];
        let mut term = 1.0;
        for n in 0..24 {
            let nf = n as f64;
            out[0] += term / (nf + 1.0);
            out[1] += term / (nf + 2.0);
            out[2] += term / (nf + 3.0);
            term *= d / (nf + 1.0);
        }
        out
    } else {
        let e = d.exp();
        [
            (e - 1.0) / d,
            (e * (d - 1.0) + 1.0) / (d * d),
            (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d),
        ]
    }
}

/// Integrals `∫₀¹ u^k exp(a + (b − a) u) du` for k = 0, 1, 2.
pub fn segment_moments(a: f64, b: f64) -> [f64; 3] {
    let d = b - a;
    if d < 1.0 {
        let j = j_moments(d);
        let s = a.exp();
        [s * j[0], s * j[1], s * j[2]]
    } else {
        // expand around the larger endpoint so nothing overflows
        let j = j_moments(-d);
        let s = b.exp();
        [s * j[0], s * (j[0] - j[1]), s * (j[0] - 2.0 * j[1] + j[2])]
    }
}

/// `∫₀¹ exp(a + (b − a) u) du`.
#[inline]
pub fn exp_mean(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let d = lo - hi;
    let j0 = if d.abs() < 1e-3 {
        1.0 + d / 2.0 + d * d / 6.0 + d * d * d / 24.0 + d * d * d * d / 120.0
    } else {
        d.exp_m1() / d
    };
    hi.exp() * j0
}

/// Divided difference of `exp` over the given nodes (repeats allowed).
///
/// Over a simplex with vertex values `z`, `∫ exp(linear) = |det| · exp[z₀,…,z_d]`,
/// and repeated nodes give the integrals against barycentric weights.
pub fn exp_divided_difference(nodes: &[f64]) -> f64 {
    let mut z = [0.0f64; 8];
    assert!(!nodes.is_empty() && nodes.len() <= z.len());
    z[..nodes.len()].copy_from_slice(nodes);
    let z = &mut z[..nodes.len()];
    z.sort_by(f64::total_cmp);
    dd_sorted(z)
}

const FACT: [f64; 40] = {
    let mut f = [1.0f64; 40];
    let mut i = 1;
    while i < 40 {
        f[i] = f[i - 1] * i as f64;
        i += 1;
    }
    f
};

fn dd_sorted(z: &[f64]) -> f64 {
    let k = z.len() - 1;
    if k == 0 {
        return z[0].exp();
    }
    let spread = z[k] - z[0];
    if spread < 1.0 {
        let m = z.iter().sum::<f64>() / z.len() as f64;
        // complete homogeneous symmetric polynomials of the centred nodes
        const TERMS: usize = 30;
        let mut h = [0.0f64; TERMS];
        h[0] = 1.0;
        for (vi, &zi) in z.iter().enumerate() {
            let s = zi - m;
            if vi == 0 {
                for j in 1..TERMS {
                    h[j] = h[j - 1] * s;
                }
            } else {
                for j in 1..TERMS {
                    h[j] += s * h[j - 1];
                }
            }
        }
        let mut sum = 0.0;
        for (j, hj) in h.iter().enumerate() {
            sum += hj / FACT[j + k];
        }
        m.exp() * sum
    } else {
        (dd_sorted(&z[1..]) - dd_sorted(&z[..k])) / spread
    }
}

/// Bisection on a sign-changing bracket; returns the midpoint of the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut flo = f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
