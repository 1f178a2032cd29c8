use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Univariate;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SemicircleVariant {
    /// Semicircle on `[−r, r]` lifted by a positive constant; angle step `arcsin ε`.
    Raised,
    /// Cap of the semicircle above `r cos w_{2K}`; angle step `arcsin √ε`.
    Lowered,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PieceKind {
    Arc,
    Line { intercept: f64, slope: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    a: f64,
    b: f64,
    kind: PieceKind,
}

/// Semicircle density with `K` symmetric pairs of arcs, one arc of each pair replaced by its chord.
///
/// Bit `alpha[k]` set keeps the arc on the positive side of pair `k` and puts the chord on the
/// negative side; cleared, it does the reverse.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "RawSemicircle")]
pub struct SemicirclePerturbation1D {
    variant: SemicircleVariant,
    r: f64,
    eps: f64,
    alpha: Vec<bool>,
    #[serde(skip)]
    step: f64,
    #[serde(skip)]
    offset: f64,
    #[serde(skip)]
    half_width: f64,
    #[serde(skip)]
    pieces: Vec<Piece>,
}

#[derive(Deserialize)]
struct RawSemicircle {
    variant: SemicircleVariant,
    r: f64,
    eps: f64,
    alpha: Vec<bool>,
}

impl TryFrom<RawSemicircle> for SemicirclePerturbation1D {
    type Error = Error;

    fn try_from(raw: RawSemicircle) -> Result<Self> {
        let f = match raw.variant {
            SemicircleVariant::Raised => Self::raised(raw.r, raw.eps, raw.alpha)?,
            SemicircleVariant::Lowered => Self::lowered(raw.eps, raw.alpha)?,
        };
        if (f.r - raw.r).abs() > 1e-9 * raw.r.abs().max(1.0) {
            return Err(Error::param(format!("radius {} inconsistent with eps and K (expected {})", raw.r, f.r)));
        }
        Ok(f)
    }
}

/// Normalizing lift `(1/(2r))[1 − πr²/2 + K r² (θ₁ − ε√(1−ε²))]` of the raised variant.
pub fn raised_lift(r: f64, k: usize, eps: f64) -> f64 {
    let t1 = eps.asin();
    (1.0 - 0.5 * std::f64::consts::PI * r * r + k as f64 * r * r * (t1 - eps * (1.0 - eps * eps).sqrt())) / (2.0 * r)
}

/// Radius making the lowered variant integrate to one.
pub fn lowered_radius(k: usize, eps: f64) -> f64 {
    let w1 = eps.sqrt().asin();
    let kf = k as f64;
    let s = kf * w1 - 0.5 * (4.0 * kf * w1).sin() + kf * (eps * (1.0 - eps)).sqrt();
    s.powf(-0.5)
}

impl SemicirclePerturbation1D {
    pub fn raised(r: f64, eps: f64, alpha: Vec<bool>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!("radius must be positive, got {r}")));
        }
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::param(format!("eps must lie in (0, 1/2], got {eps}")));
        }
        let step = eps.asin();
        Self::check_pairs(alpha.len(), step)?;
        let offset = raised_lift(r, alpha.len(), eps);
        if !(offset >= 0.0) {
            return Err(Error::param(format!("radius {r} too large: normalizing lift {offset} is negative")));
        }
        Ok(Self::assemble(SemicircleVariant::Raised, r, eps, alpha, step, offset, r))
    }

    /// Lowered variant; the radius is fixed by `eps` and `alpha.len()` through normalization.
    pub fn lowered(eps: f64, alpha: Vec<bool>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
        }
        let step = eps.sqrt().asin();
        Self::check_pairs(alpha.len(), step)?;
        let r = lowered_radius(alpha.len(), eps);
        if !r.is_finite() {
            return Err(Error::param("normalization constant is not positive"));
        }
        let top = 2.0 * alpha.len() as f64 * step;
        Ok(Self::assemble(SemicircleVariant::Lowered, r, eps, alpha, step, -r * top.cos(), r * top.sin()))
    }

    fn check_pairs(k: usize, step: f64) -> Result<()> {
        if k == 0 {
            return Err(Error::param("need at least one perturbation pair"));
        }
        if 2.0 * k as f64 * step > std::f64::consts::FRAC_PI_2 + 1e-15 {
            return Err(Error::param(format!("{k} pairs do not fit in a quarter circle at this eps")));
        }
        Ok(())
    }

    fn assemble(
        variant: SemicircleVariant,
        r: f64,
        eps: f64,
        alpha: Vec<bool>,
        step: f64,
        offset: f64,
        half_width: f64,
    ) -> Self {
        let k = alpha.len();
        let chord_dist = r * step.cos();
        let mut right = Vec::with_capacity(k + 1);
        for (i, &bit) in alpha.iter().enumerate() {
            let lo = r * (2.0 * i as f64 * step).sin();
            let hi = r * (2.0 * (i + 1) as f64 * step).sin();
            let mid = (2 * i + 1) as f64 * step;
            let kind = if bit {
                PieceKind::Arc
            } else {
                PieceKind::Line { intercept: chord_dist / mid.cos(), slope: -mid.tan() }
            };
            right.push(Piece { a: lo, b: hi, kind });
        }
        let top = r * (2.0 * k as f64 * step).sin();
        if half_width > top {
            right.push(Piece { a: top, b: half_width, kind: PieceKind::Arc });
        }
        let mut pieces = Vec::with_capacity(2 * right.len());
        for (i, p) in right.iter().enumerate().rev() {
            // mirror: the negative side of pair i carries the opposite choice
            let kind = if i < k {
                let mid = (2 * i + 1) as f64 * step;
                if alpha[i] {
                    PieceKind::Line { intercept: chord_dist / mid.cos(), slope: mid.tan() }
                } else {
                    PieceKind::Arc
                }
            } else {
                PieceKind::Arc
            };
            pieces.push(Piece { a: -p.b, b: -p.a, kind });
        }
        pieces.extend(right);
        SemicirclePerturbation1D { variant, r, eps, alpha, step, offset, half_width, pieces }
    }

    pub fn variant(&self) -> SemicircleVariant {
        self.variant
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn alpha(&self) -> &[bool] {
        &self.alpha
    }

    pub fn pairs(&self) -> usize {
        self.alpha.len()
    }

    /// Angle between consecutive breakpoints on the circle.
    pub fn angle_step(&self) -> f64 {
        self.step
    }

    /// Constant added to the semicircle (negative for the lowered variant).
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Same construction with every bit flipped.
    pub fn complement(&self) -> Self {
        let alpha = self.alpha.iter().map(|b| !b).collect();
        Self::assemble(self.variant, self.r, self.eps, alpha, self.step, self.offset, self.half_width)
    }

    pub fn with_alpha(&self, alpha: Vec<bool>) -> Result<Self> {
        if alpha.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch { expected: self.alpha.len(), found: alpha.len() });
        }
        Ok(Self::assemble(self.variant, self.r, self.eps, alpha, self.step, self.offset, self.half_width))
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let top = self.offset + self.r;
        loop {
            let x = self.half_width * (2.0 * rng.gen::<f64>() - 1.0);
            if rng.gen::<f64>() * top <= self.pdf(x) {
                return x;
            }
        }
    }

    fn piece_value(&self, p: &Piece, x: f64) -> f64 {
        let base = match p.kind {
            PieceKind::Arc => (self.r * self.r - x * x).max(0.0).sqrt(),
            PieceKind::Line { intercept, slope } => intercept + slope * x,
        };
        (self.offset + base).max(0.0)
    }

    /// `∫_lo^hi x^k f` over one piece, for k = 0, 1, 2.
    fn piece_moments(&self, p: &Piece, lo: f64, hi: f64) -> [f64; 3] {
        let c = self.offset;
        let poly = |x: f64| [x, x * x / 2.0, x * x * x / 3.0];
        let (pl, ph) = (poly(lo), poly(hi));
        let mut out = [c * (ph[0] - pl[0]), c * (ph[1] - pl[1]), c * (ph[2] - pl[2])];
        match p.kind {
            PieceKind::Arc => {
                let r = self.r;
                let prim = |x: f64| {
                    let s = (r * r - x * x).max(0.0).sqrt();
                    let asn = (x / r).clamp(-1.0, 1.0).asin();
                    [
                        0.5 * (x * s + r * r * asn),
                        -(s * s * s) / 3.0,
                        (x * (2.0 * x * x - r * r) * s + r.powi(4) * asn) / 8.0,
                    ]
                };
                let (a, b) = (prim(lo), prim(hi));
                for k in 0..3 {
                    out[k] += b[k] - a[k];
                }
            }
            PieceKind::Line { intercept, slope } => {
                let poly3 = |x: f64| [x * x * x * x / 4.0];
                out[0] += intercept * (ph[0] - pl[0]) + slope * (ph[1] - pl[1]);
                out[1] += intercept * (ph[1] - pl[1]) + slope * (ph[2] - pl[2]);
                out[2] += intercept * (ph[2] - pl[2]) + slope * (poly3(hi)[0] - poly3(lo)[0]);
            }
        }
        out
    }

    fn raw_moments(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for p in &self.pieces {
            let pm = self.piece_moments(p, p.a, p.b);
            for k in 0..3 {
                m[k] += pm[k];
            }
        }
        m
    }

    pub fn total_mass(&self) -> f64 {
        self.raw_moments()[0]
    }

    /// `∫ x² f`, the second moment about the origin.
    pub fn second_moment(&self) -> f64 {
        self.raw_moments()[2]
    }
}

impl Univariate for SemicirclePerturbation1D {
    fn pdf(&self, x: f64) -> f64 {
        if !(x.abs() <= self.half_width) {
            return 0.0;
        }
        let i = self.pieces.partition_point(|p| p.b < x).min(self.pieces.len() - 1);
        self.piece_value(&self.pieces[i], x)
    }

    fn support(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().map(|p| p.a).collect();
        v.push(self.half_width);
        v
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= -self.half_width {
            return 0.0;
        }
        if x >= self.half_width {
            return 1.0;
        }
        let mut acc = 0.0;
        for p in &self.pieces {
            if p.a >= x {
                break;
            }
            acc += self.piece_moments(p, p.a, p.b.min(x))[0];
        }
        acc.clamp(0.0, 1.0)
    }

    fn mean(&self) -> f64 {
        let m = self.raw_moments();
        m[1] / m[0]
    }

    fn variance(&self) -> f64 {
        let m = self.raw_moments();
        let mu = m[1] / m[0];
        m[2] / m[0] - mu * mu
    }
}
