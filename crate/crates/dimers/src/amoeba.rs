//! Amoebas of two-variable Laurent polynomials: membership, rasters and
//! the lattice slopes of complement components.
//!
//! Everything is driven by the fiber map: at fixed `|z| = e^X` the roots of
//! `w -> P(z, w)` have log-moduli `L_1(theta) <= ... <= L_d(theta)`, each
//! continuous in `theta = arg z`. A point `(X, Y)` is in the amoeba iff some
//! `L_k` attains `Y`.

use crate::laurent::{LaurentPoly2, NewtonPolygon};
use crate::linalg::poly_roots;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;
use std::f64::consts::PI;

/// Generic angle used for exact root counts off the amoeba.
const PROBE_ANGLE: f64 = 0.377_953_1;

/// Float view of a polynomial prepared for fiber computations.
#[derive(Clone, Debug)]
pub struct Curve {
    pub terms: Vec<((i32, i32), f64)>,
    pub jmin: i32,
    pub wdeg: usize,
}

impl Curve {
    pub fn new(p: &LaurentPoly2) -> Self {
        Self::from_terms(p.float_terms())
    }

    pub fn from_terms(terms: Vec<((i32, i32), f64)>) -> Self {
        let jmin = terms.iter().map(|t| t.0 .1).min().unwrap_or(0);
        let jmax = terms.iter().map(|t| t.0 .1).max().unwrap_or(0);
        Curve { terms, jmin, wdeg: (jmax - jmin) as usize }
    }

    pub fn transpose(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|&((i, j), c)| ((j, i), c)).collect())
    }

    /// Number of distinct monomials is at most one.
    pub fn is_degenerate(&self) -> bool {
        self.terms.len() <= 1
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.terms.iter().map(|&((i, j), c)| c * z.powi(i) * w.powi(j)).sum()
    }

    /// Roots in `w` at fixed `z`, with the lowest exponent.
    pub fn fiber_roots(&self, z: Complex64) -> Vec<Complex64> {
        let (_, c) = LaurentPoly2::w_coeffs(&self.terms, z);
        poly_roots(&c)
    }

    /// Sorted `log|w|` over the roots at `z = e^{x + i theta}`.
    pub fn fiber_logs(&self, x: f64, theta: f64) -> Vec<f64> {
        let z = Complex64::from_polar(x.exp(), theta);
        let mut v: Vec<f64> = self.fiber_roots(z).iter().map(|r| r.norm().ln()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// `d R / d Y` off the amoeba: the lowest exponent plus the number of
    /// roots inside `|w| = e^Y`.
    pub fn w_slope(&self, x: f64, y: f64) -> i64 {
        self.jmin as i64 + self.fiber_logs(x, PROBE_ANGLE).iter().filter(|&&l| l < y).count() as i64
    }

    /// Exact gradient of the Ronkin function at a point off the amoeba.
    pub fn complement_slope(&self, x: f64, y: f64) -> (i64, i64) {
        (self.transpose().w_slope(y, x), self.w_slope(x, y))
    }

    /// Per root index, the range of `L_k` over the circle `|z| = e^x`,
    /// sampled on `n` angles with golden-section polishing of the extremes.
    pub fn column_ranges(&self, x: f64, n: usize) -> Vec<(f64, f64)> {
        let thetas: Vec<f64> = (0..n).map(|k| 2.0 * PI * (k as f64 + 0.5) / n as f64).collect();
        let logs: Vec<Vec<f64>> = thetas.iter().map(|&t| self.fiber_logs(x, t)).collect();
        let d = logs.iter().map(|l| l.len()).min().unwrap_or(0);
        let h = 2.0 * PI / n as f64;
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let vals: Vec<f64> = logs.iter().map(|l| l[k]).collect();
            let (imin, imax) = argminmax(&vals);
            let f = |t: f64| self.fiber_logs(x, t).get(k).copied().unwrap_or(f64::NAN);
            let lo = golden(&f, thetas[imin] - h, thetas[imin] + h).min(vals[imin]);
            let hi = (-golden(&|t| -f(t), thetas[imax] - h, thetas[imax] + h)).max(vals[imax]);
            out.push((lo, hi));
        }
        out
    }
}

fn argminmax(v: &[f64]) -> (usize, usize) {
    let mut a = 0;
    let mut b = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[a] {
            a = i;
        }
        if *x > v[b] {
            b = i;
        }
    }
    (a, b)
}

/// Minimum of `f` on `[a, b]` by golden section.
fn golden<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc.is_nan() || fd.is_nan() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Whether `(x, y)` lies within `tol` of the amoeba of `p`.
pub fn amoeba_member(p: &LaurentPoly2, x: f64, y: f64, tol: f64) -> bool {
    curve_member(&Curve::new(p), x, y, tol)
}

pub fn curve_member(c: &Curve, x: f64, y: f64, tol: f64) -> bool {
    if c.is_degenerate() {
        return false;
    }
    if c.wdeg == 0 {
        return curve_member(&c.transpose(), y, x, tol);
    }
    let n = 720;
    let h = 2.0 * PI / n as f64;
    let gap = |t: f64| c.fiber_logs(x, t).iter().map(|l| (l - y).abs()).fold(f64::INFINITY, f64::min);
    let signed: Vec<Vec<f64>> = (0..n).map(|k| c.fiber_logs(x, k as f64 * h).iter().map(|l| l - y).collect()).collect();
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    for k in 0..n {
        let (a, b) = (&signed[k], &signed[(k + 1) % n]);
        if a.len() == b.len() && a.iter().zip(b).any(|(u, v)| u * v <= 0.0 && u.is_finite() && v.is_finite()) {
            return true;
        }
        let m = a.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if m < best {
            best = m;
            best_k = k;
        }
    }
    if best < tol {
        return true;
    }
    let t0 = best_k as f64 * h;
    golden(&gap, t0 - h, t0 + h) < tol
}

/// One connected component of the raster complement.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub id: usize,
    pub cells: usize,
    pub bounded: bool,
    /// Lattice point of the Newton polygon dual to the component.
    pub slope: (i64, i64),
    /// Cell-center average.
    pub centroid: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct AmoebaRaster {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Row-major from the bottom row, `member[iy * nx + ix]`.
    pub member: Vec<bool>,
    /// Complement component of each cell, `None` on the amoeba.
    pub labels: Vec<Option<usize>>,
    pub components: Vec<Component>,
}

impl AmoebaRaster {
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let dx = (self.x_range.1 - self.x_range.0) / self.nx as f64;
        let dy = (self.y_range.1 - self.y_range.0) / self.ny as f64;
        (self.x_range.0 + (ix as f64 + 0.5) * dx, self.y_range.0 + (iy as f64 + 0.5) * dy)
    }

    pub fn bounded(&self) -> Vec<&Component> {
        self.components.iter().filter(|c| c.bounded).collect()
    }

    pub fn unbounded(&self) -> Vec<&Component> {
        self.components.iter().filter(|c| !c.bounded).collect()
    }

    /// Component containing a point of the window, if off the amoeba.
    pub fn component_at(&self, x: f64, y: f64) -> Option<&Component> {
        let fx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * self.nx as f64;
        let fy = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * self.ny as f64;
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        let id = self.labels[fy as usize * self.nx + fx as usize]?;
        self.components.get(id)
    }
}

/// Window containing every crossing of consecutive tentacle asymptotes,
/// padded by `margin`. Tentacles run along the lines where the two
/// endpoint monomials of a Newton-polygon edge balance.
pub fn auto_window(p: &LaurentPoly2, margin: f64) -> ((f64, f64), (f64, f64)) {
    let poly = p.newton_polygon();
    let v = &poly.vertices;
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    if v.len() >= 3 {
        let c = |q: (i64, i64)| {
            let r = p.coeff(q.0 as i32, q.1 as i32);
            num_traits::ToPrimitive::to_f64(&r).unwrap_or(1.0).abs().ln()
        };
        // line a.X + b.Y = r for each edge
        let lines: Vec<(f64, f64, f64)> = (0..v.len())
            .map(|k| {
                let (e1, e2) = (v[k], v[(k + 1) % v.len()]);
                ((e1.0 - e2.0) as f64, (e1.1 - e2.1) as f64, c(e2) - c(e1))
            })
            .collect();
        for k in 0..lines.len() {
            let (a1, b1, r1) = lines[k];
            let (a2, b2, r2) = lines[(k + 1) % lines.len()];
            let det = a1 * b2 - a2 * b1;
            if det.abs() > 1e-12 {
                xs.push((r1 * b2 - r2 * b1) / det);
                ys.push((a1 * r2 - a2 * r1) / det);
            }
        }
    }
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo - margin, hi + margin)
    };
    (span(&xs), span(&ys))
}

/// Rasterizes the amoeba on an `nx x ny` grid. A cell is on the amoeba when
/// the vertical fiber through its center meets its `Y` extent, or the
/// horizontal fiber through its center meets its `X` extent; the second test
/// catches tentacles thinner than a cell.
pub fn amoeba_raster(p: &LaurentPoly2, x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> AmoebaRaster {
    let c = Curve::new(p);
    let ct = c.transpose();
    let dx = (x_range.1 - x_range.0) / nx as f64;
    let dy = (y_range.1 - y_range.0) / ny as f64;
    let nt = 512;
    let degenerate = c.is_degenerate();
    let cols: Vec<Vec<(f64, f64)>> = (0..nx)
        .into_par_iter()
        .map(|ix| if degenerate || c.wdeg == 0 { Vec::new() } else { c.column_ranges(x_range.0 + (ix as f64 + 0.5) * dx, nt) })
        .collect();
    let rows: Vec<Vec<(f64, f64)>> = (0..ny)
        .into_par_iter()
        .map(|iy| if degenerate || ct.wdeg == 0 { Vec::new() } else { ct.column_ranges(y_range.0 + (iy as f64 + 0.5) * dy, nt) })
        .collect();
    let hits = |ranges: &[(f64, f64)], lo: f64, hi: f64| ranges.iter().any(|&(a, b)| a <= hi && b >= lo);
    let mut member = vec![false; nx * ny];
    for iy in 0..ny {
        let (y0, y1) = (y_range.0 + iy as f64 * dy, y_range.0 + (iy + 1) as f64 * dy);
        for ix in 0..nx {
            let (x0, x1) = (x_range.0 + ix as f64 * dx, x_range.0 + (ix + 1) as f64 * dx);
            member[iy * nx + ix] = hits(&cols[ix], y0, y1) || hits(&rows[iy], x0, x1);
        }
    }

    let mut labels: Vec<Option<usize>> = vec![None; nx * ny];
    let mut comps = Vec::new();
    for start in 0..nx * ny {
        if member[start] || labels[start].is_some() {
            continue;
        }
        let id = comps.len();
        let mut cells = Vec::new();
        let mut bounded = true;
        let mut q = VecDeque::from([start]);
        labels[start] = Some(id);
        while let Some(k) = q.pop_front() {
            cells.push(k);
            let (ix, iy) = (k % nx, k / nx);
            if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                bounded = false;
            }
            let mut push = |n: usize| {
                if !member[n] && labels[n].is_none() {
                    labels[n] = Some(id);
                    q.push_back(n);
                }
            };
            if ix > 0 {
                push(k - 1);
            }
            if ix + 1 < nx {
                push(k + 1);
            }
            if iy > 0 {
                push(k - nx);
            }
            if iy + 1 < ny {
                push(k + nx);
            }
        }
        let center = |k: usize| (x_range.0 + ((k % nx) as f64 + 0.5) * dx, y_range.0 + ((k / nx) as f64 + 0.5) * dy);
        let n = cells.len() as f64;
        let centroid = cells.iter().fold((0.0, 0.0), |acc, &k| {
            let (x, y) = center(k);
            (acc.0 + x / n, acc.1 + y / n)
        });
        // slope by majority over a few probe cells, robust to a stray cell
        let probes: Vec<usize> = (0..7).map(|i| cells[i * (cells.len() - 1) / 6]).collect();
        let mut votes: Vec<((i64, i64), usize)> = Vec::new();
        for k in probes {
            let (x, y) = center(k);
            let s = c.complement_slope(x, y);
            match votes.iter_mut().find(|v| v.0 == s) {
                Some(v) => v.1 += 1,
                None => votes.push((s, 1)),
            }
        }
        let slope = votes.iter().max_by_key(|v| v.1).map(|v| v.0).unwrap_or((0, 0));
        comps.push(Component { id, cells: cells.len(), bounded, slope, centroid });
    }
    AmoebaRaster { x_range, y_range, nx, ny, member, labels, components: comps }
}

/// Draws `count` points of the amoeba from `window` by rejection, using
/// fiber points so every sample lies on the amoeba exactly.
pub fn sample_amoeba<R: rand::Rng>(c: &Curve, count: usize, window: ((f64, f64), (f64, f64)), rng: &mut R) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < 1000 * count.max(1) {
        guard += 1;
        let x = rng.random_range(window.0 .0..window.0 .1);
        let theta = rng.random_range(0.0..2.0 * PI);
        let logs = c.fiber_logs(x, theta);
        if logs.is_empty() {
            continue;
        }
        let y = logs[rng.random_range(0..logs.len())];
        if y.is_finite() && y > window.1 .0 && y < window.1 .1 {
            out.push((x, y));
        }
    }
    out
}

/// The Newton polygon together with its boundary and interior lattice
/// points, as reported alongside a raster.
#[derive(Clone, Debug, Serialize)]
pub struct PolygonSummary {
    pub vertices: Vec<(i64, i64)>,
    pub boundary: Vec<(i64, i64)>,
    pub interior: Vec<(i64, i64)>,
}

pub fn polygon_summary(np: &NewtonPolygon) -> PolygonSummary {
    PolygonSummary {
        vertices: np.vertices.clone(),
        boundary: np.boundary_lattice_points(),
        interior: np.interior_lattice_points(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> LaurentPoly2 {
        LaurentPoly2::from_ints(&[(1, 0, 0), (1, 1, 0), (1, 0, 1)])
    }

    #[test]
    fn membership_examples() {
        assert!(amoeba_member(&line(), 0.0, 0.0, 1e-9));
        assert!(!amoeba_member(&line(), 10.0, 0.0, 1e-9));
        // 4 + z + 1/z + w + 1/w has a node at z = w = -1
        let node = LaurentPoly2::from_ints(&[(4, 0, 0), (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1)]);
        assert!(amoeba_member(&node, 0.0, 0.0, 1e-6));
        assert!(!amoeba_member(&LaurentPoly2::from_ints(&[(3, 1, 2)]), 0.0, 0.0, 1.0));
    }

    #[test]
    fn slopes_off_the_line_amoeba() {
        let c = Curve::new(&line());
        assert_eq!(c.complement_slope(-3.0, -3.0), (0, 0));
        assert_eq!(c.complement_slope(3.0, -1.0), (1, 0));
        assert_eq!(c.complement_slope(-1.0, 3.0), (0, 1));
    }

    #[test]
    fn line_raster_has_three_unbounded_components() {
        let r = amoeba_raster(&line(), (-4.0, 4.0), (-4.0, 4.0), 120, 120);
        assert_eq!(r.components.len(), 3);
        assert!(r.bounded().is_empty());
        let mut s: Vec<_> = r.components.iter().map(|c| c.slope).collect();
        s.sort();
        assert_eq!(s, vec![(0, 0), (0, 1), (1, 0)]);
    }
}
