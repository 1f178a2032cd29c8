use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Moments;
use crate::error::{Error, Result};
use crate::numeric::exp_divided_difference;

/// Planar density `exp(h)` with `h` affine on each triangle of a triangulated convex polygon.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "RawTent")]
pub struct TentDensity2D {
    points: Vec<[f64; 2]>,
    logvals: Vec<f64>,
    triangles: Vec<[usize; 3]>,
    #[serde(skip)]
    cum_mass: Vec<f64>,
    #[serde(skip)]
    grid: Grid,
}

#[derive(Deserialize)]
struct RawTent {
    points: Vec<[f64; 2]>,
    logvals: Vec<f64>,
    triangles: Vec<[usize; 3]>,
}

impl TryFrom<RawTent> for TentDensity2D {
    type Error = Error;

    fn try_from(raw: RawTent) -> Result<Self> {
        Self::new(raw.points, raw.logvals, raw.triangles)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Grid {
    origin: [f64; 2],
    cell: [f64; 2],
    size: usize,
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn build(points: &[[f64; 2]], tris: &[[usize; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for t in tris {
            for &v in t {
                for k in 0..2 {
                    lo[k] = lo[k].min(points[v][k]);
                    hi[k] = hi[k].max(points[v][k]);
                }
            }
        }
        let size = ((tris.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let cell = [
            ((hi[0] - lo[0]) / size as f64).max(1e-300),
            ((hi[1] - lo[1]) / size as f64).max(1e-300),
        ];
        let mut cells = vec![Vec::new(); size * size];
        let grid_tmp = Grid { origin: lo, cell, size, cells: Vec::new() };
        for (ti, t) in tris.iter().enumerate() {
            let mut tl = [f64::INFINITY; 2];
            let mut th = [f64::NEG_INFINITY; 2];
            for &v in t {
                for k in 0..2 {
                    tl[k] = tl[k].min(points[v][k]);
                    th[k] = th[k].max(points[v][k]);
                }
            }
            let (i0, j0) = grid_tmp.cell_of(tl);
            let (i1, j1) = grid_tmp.cell_of(th);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    cells[i * size + j].push(ti as u32);
                }
            }
        }
        Grid { origin: lo, cell, size, cells }
    }

    fn cell_of(&self, x: [f64; 2]) -> (usize, usize) {
        let f = |k: usize| {
            let c = ((x[k] - self.origin[k]) / self.cell[k]).floor();
            (c.max(0.0) as usize).min(self.size - 1)
        };
        (f(0), f(1))
    }
}

fn det(p: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (p[t[0]], p[t[1]], p[t[2]]);
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

impl TentDensity2D {
    /// Builds the density and shifts `logvals` so it integrates to one.
    pub fn new(points: Vec<[f64; 2]>, logvals: Vec<f64>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if points.len() != logvals.len() {
            return Err(Error::param("one log-value per point required"));
        }
        if triangles.is_empty() {
            return Err(Error::param("triangulation is empty"));
        }
        if points.iter().flatten().chain(&logvals).any(|v| !v.is_finite()) {
            return Err(Error::param("points and log-values must be finite"));
        }
        if triangles.iter().flatten().any(|&v| v >= points.len()) {
            return Err(Error::param("triangle references a missing point"));
        }
        let mut f = TentDensity2D { points, logvals, triangles, cum_mass: Vec::new(), grid: Grid::default() };
        let mx = f.logvals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = f.triangle_masses(mx).iter().sum();
        if !(total > 0.0) {
            return Err(Error::param("triangulation has zero area"));
        }
        let shift = mx + total.ln();
        for v in f.logvals.iter_mut() {
            *v -= shift;
        }
        let mut acc = 0.0;
        f.cum_mass = f
            .triangle_masses(0.0)
            .into_iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        f.grid = Grid::build(&f.points, &f.triangles);
        Ok(f)
    }

    fn triangle_masses(&self, shift: f64) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|t| {
                let z = [self.logvals[t[0]] - shift, self.logvals[t[1]] - shift, self.logvals[t[2]] - shift];
                det(&self.points, t).abs() * exp_divided_difference(&z)
            })
            .collect()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn logvals(&self) -> &[f64] {
        &self.logvals
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn total_mass(&self) -> f64 {
        *self.cum_mass.last().unwrap()
    }

    /// Area of the supporting polygon.
    pub fn support_area(&self) -> f64 {
        self.triangles.iter().map(|t| 0.5 * det(&self.points, t).abs()).sum()
    }

    /// `∫ exp(2h)`, used for squared-L2 comparisons.
    pub fn integral_of_square(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let z = [2.0 * self.logvals[t[0]], 2.0 * self.logvals[t[1]], 2.0 * self.logvals[t[2]]];
                det(&self.points, t).abs() * exp_divided_difference(&z)
            })
            .sum()
    }

    /// `∫ exp(h/2)`.
    pub fn integral_of_sqrt(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let z = [0.5 * self.logvals[t[0]], 0.5 * self.logvals[t[1]], 0.5 * self.logvals[t[2]]];
                det(&self.points, t).abs() * exp_divided_difference(&z)
            })
            .sum()
    }

    pub fn log_value(&self, x: &[f64]) -> f64 {
        let p = [x[0], x[1]];
        let (i, j) = self.grid.cell_of(p);
        let mut best = f64::NEG_INFINITY;
        for &ti in &self.grid.cells[i * self.grid.size + j] {
            let t = &self.triangles[ti as usize];
            let (a, b, c) = (self.points[t[0]], self.points[t[1]], self.points[t[2]]);
            let d = det(&self.points, t);
            if d == 0.0 {
                continue;
            }
            let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / d;
            let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / d;
            let l0 = 1.0 - l1 - l2;
            let tol = -1e-12;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                let v = l0 * self.logvals[t[0]] + l1 * self.logvals[t[1]] + l2 * self.logvals[t[2]];
                // on shared edges take the upper envelope, which is exact for a concave tent
                best = best.max(v);
            }
        }
        best
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.log_value(x).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let total = self.total_mass();
        (0..n)
            .map(|_| {
                let u = rng.gen::<f64>() * total;
                let ti = self.cum_mass.partition_point(|&c| c < u).min(self.triangles.len() - 1);
                let t = &self.triangles[ti];
                let z = [self.logvals[t[0]], self.logvals[t[1]], self.logvals[t[2]]];
                let zmax = z[0].max(z[1]).max(z[2]);
                loop {
                    let (mut s, mut r) = (rng.gen::<f64>(), rng.gen::<f64>());
                    if s + r > 1.0 {
                        s = 1.0 - s;
                        r = 1.0 - r;
                    }
                    let l0 = 1.0 - s - r;
                    let h = l0 * z[0] + s * z[1] + r * z[2];
                    if rng.gen::<f64>() <= (h - zmax).exp() {
                        let (a, b, c) = (self.points[t[0]], self.points[t[1]], self.points[t[2]]);
                        return vec![
                            l0 * a[0] + s * b[0] + r * c[0],
                            l0 * a[1] + s * b[1] + r * c[1],
                        ];
                    }
                }
            })
            .collect()
    }

    /// Exact mean and covariance from divided differences with repeated nodes.
    pub fn moments(&self) -> Moments {
        let mut m0 = 0.0;
        let mut m1 = [0.0; 2];
        let mut m2 = [[0.0; 2]; 2];
        for t in &self.triangles {
            let d = det(&self.points, t).abs();
            let z = [self.logvals[t[0]], self.logvals[t[1]], self.logvals[t[2]]];
            m0 += d * exp_divided_difference(&z);
            for a in 0..3 {
                let pa = self.points[t[a]];
                let ea = d * exp_divided_difference(&[z[0], z[1], z[2], z[a]]);
                m1[0] += pa[0] * ea;
                m1[1] += pa[1] * ea;
                for b in 0..3 {
                    let pb = self.points[t[b]];
                    let mult = if a == b { 2.0 } else { 1.0 };
                    let e = d * mult * exp_divided_difference(&[z[0], z[1], z[2], z[a], z[b]]);
                    for i in 0..2 {
                        for j in 0..2 {
                            m2[i][j] += pa[i] * pb[j] * e;
                        }
                    }
                }
            }
        }
        let mean = vec![m1[0] / m0, m1[1] / m0];
        let cov = (0..2)
            .map(|i| (0..2).map(|j| m2[i][j] / m0 - mean[i] * mean[j]).collect())
            .collect();
        Moments { mean, cov, std_error: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn square() -> TentDensity2D {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        TentDensity2D::new(pts, vec![0.3, -0.2, 0.5, 0.1], vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn uniform_square() {
        let pts = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let f = TentDensity2D::new(pts, vec![1.0; 4], vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert!((f.value(&[1.0, 0.5]) - 0.25).abs() < 1e-14);
        assert_eq!(f.value(&[2.5, 0.5]), 0.0);
        let m = f.moments();
        assert!((m.mean[0] - 1.0).abs() < 1e-13 && (m.mean[1] - 1.0).abs() < 1e-13);
        assert!((m.cov[0][0] - 4.0 / 12.0).abs() < 1e-13 && m.cov[0][1].abs() < 1e-13);
    }

    #[test]
    fn moments_match_samples() {
        let f = square();
        assert!((f.total_mass() - 1.0).abs() < 1e-13);
        let mut rng = seeded(6);
        let n = 400_000;
        let xs = f.sample(n, &mut rng);
        let m = f.moments();
        let mx = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let my = xs.iter().map(|x| x[1]).sum::<f64>() / n as f64;
        assert!((mx - m.mean[0]).abs() < 4.0 * (m.cov[0][0] / n as f64).sqrt());
        assert!((my - m.mean[1]).abs() < 4.0 * (m.cov[1][1] / n as f64).sqrt());
        let cxy = xs.iter().map(|x| (x[0] - mx) * (x[1] - my)).sum::<f64>() / n as f64;
        assert!((cxy - m.cov[0][1]).abs() < 2e-3);
    }

    #[test]
    fn serde_roundtrip() {
        let f = square();
        let g: TentDensity2D = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert!((g.value(&[0.3, 0.6]) - f.value(&[0.3, 0.6])).abs() < 1e-14);
    }
}
