//! Upper convex hull of lifted planar points, projected to a triangulation.

use std::collections::HashMap;

use robust::{orient3d, Coord3D};

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;

struct Face {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the planar convex hull in counter-clockwise order, collinear points dropped.
pub(crate) fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(points[a][1].total_cmp(&points[b][1])));
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross2(points[lower[lower.len() - 2]], points[lower[lower.len() - 1]], points[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross2(points[upper[upper.len() - 2]], points[upper[upper.len() - 1]], points[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_area(points: &[[f64; 2]], ring: &[usize]) -> f64 {
    let mut a = 0.0;
    for k in 0..ring.len() {
        let p = points[ring[k]];
        let q = points[ring[(k + 1) % ring.len()]];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

/// Fails unless the points span the plane.
pub(crate) fn check_planar_spread(points: &[[f64; 2]]) -> Result<()> {
    let ring = convex_hull_2d(points);
    let scale = bbox_scale(points);
    if ring.len() < 3 || polygon_area(points, &ring) <= 1e-12 * scale * scale {
        return Err(Error::DegenerateSample("points are collinear".into()));
    }
    Ok(())
}

fn bbox_scale(points: &[[f64; 2]]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE)
}

struct Hull<'a> {
    pts: &'a [[f64; 3]],
    faces: Vec<Face>,
    edges: HashMap<(usize, usize), usize>,
}

impl<'a> Hull<'a> {
    fn dist(&self, f: usize, p: usize) -> f64 {
        dot(self.faces[f].normal, self.pts[p]) - self.faces[f].offset
    }

    /// Exact test for `p` strictly above the plane of face `f`.
    fn sees(&self, f: usize, p: usize) -> bool {
        let c = |i: usize| Coord3D { x: self.pts[i][0], y: self.pts[i][1], z: self.pts[i][2] };
        let v = self.faces[f].v;
        orient3d(c(v[0]), c(v[1]), c(v[2]), c(p)) < 0.0
    }

    fn add_face(&mut self, v: [usize; 3]) -> Result<usize> {
        let (a, b, c) = (self.pts[v[0]], self.pts[v[1]], self.pts[v[2]]);
        let n = cross(sub(b, a), sub(c, a));
        let len = norm(n);
        if !(len > 0.0) {
            return Err(Error::numeric("degenerate hull face"));
        }
        let normal = [n[0] / len, n[1] / len, n[2] / len];
        let id = self.faces.len();
        self.faces.push(Face { v, normal, offset: dot(normal, a), outside: Vec::new(), alive: true });
        for k in 0..3 {
            if self.edges.insert((v[k], v[(k + 1) % 3]), id).is_some() {
                return Err(Error::numeric("inconsistent hull topology"));
            }
        }
        Ok(id)
    }

    fn assign(&mut self, candidates: &[usize], faces: &[usize]) {
        for &p in candidates {
            for &f in faces {
                if self.sees(f, p) {
                    self.faces[f].outside.push(p);
                    break;
                }
            }
        }
    }
}

/// Triangles of the upper hull of `(points[i], heights[i])`, counter-clockwise in the plane.
///
/// Points below the hull, or within rounding of it without being a vertex, appear in no triangle.
pub(crate) fn upper_hull(points: &[[f64; 2]], heights: &[f64]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateSample("need at least three points".into()));
    }
    check_planar_spread(points)?;
    let scale = bbox_scale(points);
    let zlo = heights.iter().copied().fold(f64::INFINITY, f64::min);
    let zhi = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(zlo.is_finite() && zhi.is_finite()) {
        return Err(Error::numeric("heights must be finite"));
    }
    let zs = if zhi > zlo { scale / (zhi - zlo) } else { 0.0 };
    // heights rescaled to the planar extent; upper faces are unchanged
    let pts: Vec<[f64; 3]> = points.iter().zip(heights).map(|(p, &h)| [p[0], p[1], (h - zlo) * zs]).collect();
    let eps = EPS * scale;

    let i0 = (0..n).min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0])).unwrap();
    let i1 = (0..n).max_by(|&a, &b| norm(sub(pts[a], pts[i0])).total_cmp(&norm(sub(pts[b], pts[i0])))).unwrap();
    let dir = sub(pts[i1], pts[i0]);
    let i2 = (0..n)
        .max_by(|&a, &b| norm(cross(dir, sub(pts[a], pts[i0]))).total_cmp(&norm(cross(dir, sub(pts[b], pts[i0])))))
        .unwrap();
    let pn = cross(dir, sub(pts[i2], pts[i0]));
    let pl = norm(pn);
    let off = |p: usize| dot(pn, sub(pts[p], pts[i0])) / pl;
    let i3 = (0..n).max_by(|&a, &b| off(a).abs().total_cmp(&off(b).abs())).unwrap();
    if off(i3).abs() <= eps {
        return Ok(flat_triangulation(points));
    }

    let mut hull = Hull { pts: &pts, faces: Vec::new(), edges: HashMap::new() };
    let tet = [i0, i1, i2, i3];
    let centroid = {
        let mut c = [0.0; 3];
        for &i in &tet {
            for k in 0..3 {
                c[k] += pts[i][k] / 4.0;
            }
        }
        c
    };
    for skip in 0..4 {
        let mut v: Vec<usize> = tet.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &i)| i).collect();
        let n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
        if dot(n, sub(centroid, pts[v[0]])) > 0.0 {
            v.swap(1, 2);
        }
        hull.add_face([v[0], v[1], v[2]])?;
    }
    let rest: Vec<usize> = (0..n).filter(|i| !tet.contains(i)).collect();
    hull.assign(&rest, &[0, 1, 2, 3]);
    let mut stack: Vec<usize> = (0..4).collect();

    while let Some(f) = stack.pop() {
        if !hull.faces[f].alive || hull.faces[f].outside.is_empty() {
            continue;
        }
        let p = *hull.faces[f]
            .outside
            .iter()
            .max_by(|&&a, &&b| hull.dist(f, a).total_cmp(&hull.dist(f, b)))
            .unwrap();
        // faces seen from p, grown from f across shared edges
        let mut visible = vec![f];
        let mut seen: HashMap<usize, bool> = HashMap::new();
        seen.insert(f, true);
        let mut k = 0;
        while k < visible.len() {
            let g = visible[k];
            k += 1;
            let v = hull.faces[g].v;
            for e in 0..3 {
                let nb = *hull.edges.get(&(v[(e + 1) % 3], v[e])).ok_or_else(|| Error::numeric("open hull edge"))?;
                if seen.contains_key(&nb) {
                    continue;
                }
                let vis = hull.sees(nb, p);
                seen.insert(nb, vis);
                if vis {
                    visible.push(nb);
                }
            }
        }
        let mut horizon = Vec::new();
        for &g in &visible {
            let v = hull.faces[g].v;
            for e in 0..3 {
                let nb = hull.edges[&(v[(e + 1) % 3], v[e])];
                if !seen[&nb] {
                    horizon.push((v[e], v[(e + 1) % 3]));
                }
            }
        }
        let mut orphans = Vec::new();
        for &g in &visible {
            hull.faces[g].alive = false;
            orphans.append(&mut hull.faces[g].outside);
            let v = hull.faces[g].v;
            for e in 0..3 {
                hull.edges.remove(&(v[e], v[(e + 1) % 3]));
            }
        }
        let mut created = Vec::with_capacity(horizon.len());
        for (a, b) in horizon {
            created.push(hull.add_face([a, b, p])?);
        }
        orphans.retain(|&q| q != p);
        hull.assign(&orphans, &created);
        stack.extend(created);
    }

    let tris: Vec<[usize; 3]> = hull.faces.iter().filter(|f| f.alive && f.normal[2] > 1e-12).map(|f| f.v).collect();
    // projected upper faces must tile the planar hull
    let ring = convex_hull_2d(points);
    let want = polygon_area(points, &ring);
    let got: f64 = tris.iter().map(|t| 0.5 * cross2(points[t[0]], points[t[1]], points[t[2]])).sum();
    if (got - want).abs() > 1e-8 * want {
        return Err(Error::numeric(format!("upper hull covers area {got}, expected {want}")));
    }
    Ok(tris)
}

/// Fan triangulation of the planar hull, used when every lifted point lies on one plane.
fn flat_triangulation(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let ring = convex_hull_2d(points);
    (1..ring.len() - 1).map(|k| [ring[0], ring[k], ring[k + 1]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn height_at(points: &[[f64; 2]], h: &[f64], tris: &[[usize; 3]], x: [f64; 2]) -> Option<f64> {
        for t in tris {
            let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
            let d = cross2(a, b, c);
            let l1 = cross2(x, b, c) / d;
            let l2 = cross2(a, x, c) / d;
            let l3 = 1.0 - l1 - l2;
            if l1 >= -1e-12 && l2 >= -1e-12 && l3 >= -1e-12 {
                return Some(l1 * h[t[0]] + l2 * h[t[1]] + l3 * h[t[2]]);
            }
        }
        None
    }

    #[test]
    fn square_with_raised_centre() {
        let p = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let tris = upper_hull(&p, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(tris.len(), 4);
        assert!(tris.iter().all(|t| t.contains(&4)));
        let low = upper_hull(&p, &[0.0, 0.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(low.len(), 2);
        assert!(low.iter().all(|t| !t.contains(&4)));
    }

    #[test]
    fn flat_heights() {
        let p = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.3, 0.6]];
        let tris = upper_hull(&p, &[2.0; 5]).unwrap();
        let area: f64 = tris.iter().map(|t| 0.5 * cross2(p[t[0]], p[t[1]], p[t[2]])).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_rejected() {
        let p = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(upper_hull(&p, &[0.0, 1.0, 0.0]), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn majorizes_random_points() {
        let mut rng = seeded(3);
        for trial in 0..20 {
            let n = 50 + 40 * trial;
            let p: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let h: Vec<f64> = p.iter().map(|x| -(x[0] * x[0] + x[1] * x[1]) + 0.3 * rng.gen::<f64>()).collect();
            let tris = upper_hull(&p, &h).unwrap();
            for (x, &hx) in p.iter().zip(&h) {
                let v = height_at(&p, &h, &tris, *x).unwrap();
                assert!(v >= hx - 1e-9);
            }
            // concave: midpoints of random pairs lie below the surface
            for _ in 0..200 {
                let a = p[rng.gen_range(0..n)];
                let b = p[rng.gen_range(0..n)];
                let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let va = height_at(&p, &h, &tris, a).unwrap();
                let vb = height_at(&p, &h, &tris, b).unwrap();
                assert!(height_at(&p, &h, &tris, m).unwrap() >= 0.5 * (va + vb) - 1e-9);
            }
        }
    }

    #[test]
    fn paraboloid_keeps_every_point() {
        let mut rng = seeded(8);
        let p: Vec<[f64; 2]> = (0..1600).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let h: Vec<f64> = p.iter().map(|x| -(x[0] * x[0] + x[1] * x[1])).collect();
        let tris = upper_hull(&p, &h).unwrap();
        let mut used = vec![false; p.len()];
        for t in &tris {
            for &v in t {
                used[v] = true;
            }
        }
        assert!(used.iter().all(|&u| u));
        assert_eq!(tris.len(), 2 * p.len() - convex_hull_2d(&p).len() - 2);
    }
}
