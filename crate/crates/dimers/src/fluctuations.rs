//! Infinite-volume inverse Kasteleyn values on the honeycomb, the
//! determinantal column kernel, log-variance growth and Gaussian free field
//! moment checks.
//!
//! Weights `(a, b, c)` sit on the three edge types of the honeycomb with
//! symbol `P(z, w) = a + b z + c w`. `kinv_infinite(x, y)` is the torus
//! average of `z^-y w^x / P(z, w)`; on the lattice of [`honeycomb_torus`]
//! it is `K^-1(w_(0,0), b_(y,-x))`, so the diagonal `(k, k)` runs along the
//! cells `(k, -k)`.
//!
//! Heights use the uniform base flow `1/3` on every edge, so a height step
//! across an edge is `1_e - 1/3` and the column variance of `k` edges is the
//! variance of the height change along them.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::{honeycomb_torus, BipartiteGraph, Label};
use crate::height::{Glauber, Matching};
use crate::quad::adaptive;
use crate::sampler::{stream_rng, ChainConfig};

const KINV_TOL: f64 = 1e-13;

/// Angles of the triangle with sides `(a, b, c)`, each opposite its side,
/// or `None` when the triangle inequality fails (a frozen phase).
pub fn triangle_angles(a: f64, b: f64, c: f64) -> Option<(f64, f64, f64)> {
    if a >= b + c || b >= a + c || c >= a + b {
        return None;
    }
    let ang = |p: f64, q: f64, r: f64| ((q * q + r * r - p * p) / (2.0 * q * r)).clamp(-1.0, 1.0).acos();
    Some((ang(a, b, c), ang(b, a, c), ang(c, a, b)))
}

/// Inner `w` contour integral, `(2 pi i)^-1` times the integral of
/// `w^(x-1) / (A + c w)` over `|w| = 1`, by residues.
fn w_residue(big_a: Complex64, c: f64, x: i64) -> Complex64 {
    let w0 = -big_a / c;
    let inside = w0.norm() < 1.0;
    match (x >= 1, inside) {
        (true, true) => w0.powi((x - 1) as i32) / c,
        (false, false) => -w0.powi((x - 1) as i32) / c,
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Torus average of `z^-y w^x / (a + b z + c w)`. The `w` integral is done
/// exactly; the `z` integral is split where the `w` pole crosses the unit
/// circle. Frozen weights fall out of the same residue computation.
pub fn kinv_infinite(x: i64, y: i64, a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::Malformed("weights must be positive".into()));
    }
    let f = |t: f64| {
        let z = Complex64::from_polar(1.0, t);
        (z.powi(-y as i32) * w_residue(a + b * z, c, x)).re
    };
    // |a + b e^it| = c at cos t = (c^2 - a^2 - b^2) / (2ab)
    let ct = (c * c - a * a - b * b) / (2.0 * a * b);
    let mut cuts = vec![-PI];
    if ct.abs() < 1.0 {
        let t0 = ct.acos();
        cuts.extend([-t0, t0]);
    }
    cuts.push(PI);
    let panels = 4 + (x.unsigned_abs() + y.unsigned_abs()) as usize;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (v, ok) = adaptive(&f, w[0], w[1], panels, KINV_TOL);
        if !ok {
            return Err(Error::Tolerance(format!("kernel quadrature at ({x}, {y})")));
        }
        total += v;
    }
    Ok(total / (2.0 * PI))
}

/// The same average over the `l`-th roots of `-1` in both variables: the
/// inverse of the Kasteleyn matrix of the `l x l` honeycomb torus with
/// antiperiodic twists.
pub fn kinv_torus(l: usize, x: i64, y: i64, a: f64, b: f64, c: f64) -> f64 {
    let roots: Vec<Complex64> = (0..l).map(|j| Complex64::from_polar(1.0, PI * (2 * j + 1) as f64 / l as f64)).collect();
    let mut s = Complex64::new(0.0, 0.0);
    for &z in &roots {
        let zy = z.powi(-y as i32);
        for &w in &roots {
            s += zy * w.powi(x as i32) / (a + b * z + c * w);
        }
    }
    s.re / (l * l) as f64
}

/// Edge-occupation kernel along one column of `a` edges.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ColumnKernel {
    pub theta_a: f64,
}

impl ColumnKernel {
    pub fn new(theta_a: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta_a) {
            return Err(Error::Malformed("angle outside [0, pi]".into()));
        }
        Ok(ColumnKernel { theta_a })
    }

    pub fn uniform() -> Self {
        ColumnKernel { theta_a: PI / 3.0 }
    }

    /// `a_0 = theta/pi`, `a_k = -sin(k theta) / (pi k)`.
    pub fn entry(&self, k: i64) -> f64 {
        if k == 0 {
            self.theta_a / PI
        } else {
            -(k as f64 * self.theta_a).sin() / (PI * k as f64)
        }
    }

    /// The kernel with the sign the lattice actually produces on the
    /// diagonal: `-sin(k (pi - theta)) / (pi k)`, which is
    /// `(-1)^(k+1) a_k`.
    pub fn signed_entry(&self, k: i64) -> f64 {
        if k == 0 || k.rem_euclid(2) == 1 {
            self.entry(k)
        } else {
            -self.entry(k)
        }
    }

    /// `M_k` with entries `a_(i-j)`.
    pub fn matrix(&self, k: usize) -> Vec<Vec<f64>> {
        (0..k).map(|i| (0..k).map(|j| self.entry(i as i64 - j as i64)).collect()).collect()
    }

    /// Determinant of `a_(n_i - n_j)` over the given positions.
    pub fn joint_probability(&self, positions: &[i64], signed: bool) -> f64 {
        let k = positions.len();
        let e = |d: i64| if signed { self.signed_entry(d) } else { self.entry(d) };
        let m = nalgebra::DMatrix::from_fn(k, k, |i, j| e(positions[i] - positions[j]));
        m.determinant()
    }
}

/// `Tr M_k (I - M_k)` by the series
/// `k a_0 (1 - a_0) - 2 sum_(j<k) (k - j) a_j^2`.
pub fn column_variance(theta_a: f64, k: usize) -> f64 {
    let ker = ColumnKernel { theta_a };
    let a0 = ker.entry(0);
    let tail: f64 = (1..k).map(|j| (k - j) as f64 * ker.entry(j as i64).powi(2)).sum();
    k as f64 * a0 * (1.0 - a0) - 2.0 * tail
}

/// The same trace formed from the matrix.
pub fn column_variance_trace(theta_a: f64, k: usize) -> f64 {
    let m = ColumnKernel { theta_a }.matrix(k);
    let mut tr = 0.0;
    for i in 0..k {
        tr += m[i][i];
        for j in 0..k {
            tr -= m[i][j] * m[j][i];
        }
    }
    tr
}

/// Least-squares line of `column_variance` against `log k`.
#[derive(Clone, Debug, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<(usize, f64)>,
}

pub fn variance_log_fit(theta_a: f64, kmin: usize, kmax: usize, count: usize) -> Result<LogFit> {
    if kmin < 1 || kmax <= kmin || count < 2 {
        return Err(Error::Malformed("need 1 <= kmin < kmax and two points".into()));
    }
    let (l0, l1) = ((kmin as f64).ln(), (kmax as f64).ln());
    let mut ks: Vec<usize> = (0..count).map(|i| (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp().round() as usize).collect();
    ks.dedup();
    let points: Vec<(usize, f64)> = ks.par_iter().map(|&k| (k, column_variance(theta_a, k))).collect();
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), &(k, v)| (sx + (k as f64).ln(), sy + v));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(k, v)| {
        let dx = (k as f64).ln() - mx;
        (sxy + dx * (v - my), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    Ok(LogFit { slope, intercept: my - slope * mx, points })
}

/// The leading-order formula for uniform weights at lattice scale one,
/// taken literally in its own coordinates.
pub fn kinv_asymptotic(x: f64, y: f64) -> f64 {
    let num = Complex64::from_polar(1.0, 2.0 * PI * (x - y) / 3.0);
    let den = PI * (Complex64::from_polar(x, PI / 6.0) + Complex64::from_polar(y, 5.0 * PI / 6.0));
    (num / den).re
}

/// Leading pole contribution in the index convention of `kinv_infinite`.
pub fn kinv_asymptotic_fourier(x: f64, y: f64) -> f64 {
    let num = Complex64::from_polar(1.0, 2.0 * PI * (x + y) / 3.0);
    let den = PI * (Complex64::from_polar(y, PI / 6.0) + Complex64::from_polar(x, 5.0 * PI / 6.0));
    (num / den).re
}

/// Plane Green's function `-log|z1 - z2| / (2 pi)`.
pub fn green(z1: Complex64, z2: Complex64) -> f64 {
    -(z1 - z2).norm().ln() / (2.0 * PI)
}

fn check_moment_points(z: [Complex64; 4]) -> Result<()> {
    for i in 0..2 {
        for j in 2..4 {
            if (z[i] - z[j]).norm() < 1e-12 {
                return Err(Error::Malformed("a point of the first pair meets one of the second".into()));
            }
        }
    }
    Ok(())
}

/// Limiting `E[(h(z1) - h(z2)) (h(z3) - h(z4))]`:
/// `-log|(z2 - z4)(z1 - z3) / ((z2 - z3)(z1 - z4))| / (2 pi^2)`.
pub fn gff_second_moment(z1: Complex64, z2: Complex64, z3: Complex64, z4: Complex64) -> Result<f64> {
    check_moment_points([z1, z2, z3, z4])?;
    let cr = ((z2 - z4) * (z1 - z3)) / ((z2 - z3) * (z1 - z4));
    Ok(-cr.norm().ln() / (2.0 * PI * PI))
}

/// The same quantity as `(g13 - g14 - g23 + g24) / pi`.
pub fn gff_second_moment_green(z1: Complex64, z2: Complex64, z3: Complex64, z4: Complex64) -> Result<f64> {
    check_moment_points([z1, z2, z3, z4])?;
    Ok((green(z1, z3) - green(z1, z4) - green(z2, z3) + green(z2, z4)) / PI)
}

/// Matching of the `l x l` honeycomb torus (`3 | l`) with equal numbers of
/// each edge type, so the height against the `1/3` flow is single valued.
/// White `(i, j)` takes its `a`, `b` or `c` edge as `i - j` is 0, 2 or 1
/// mod 3.
pub fn flat_torus_matching(g: &BipartiteGraph) -> Result<Matching> {
    let l = g.periodic.as_ref().map(|p| p.l).ok_or_else(|| Error::Malformed("not a torus".into()))?;
    if l % 3 != 0 || g.nw() != l * l {
        return Err(Error::Malformed("flat matching needs a honeycomb torus with side divisible by 3".into()));
    }
    let mut edges = Vec::with_capacity(g.nw());
    for w in 0..g.nw() {
        let (i, j) = g.whites[w].cell;
        let want = match (i - j).rem_euclid(3) {
            0 => Label::A,
            2 => Label::B,
            _ => Label::C,
        };
        let e = g.white_edges(w).iter().copied().find(|&e| g.edges[e].label == want);
        edges.push(e.ok_or_else(|| Error::Malformed(format!("white {w} lacks a {} edge", want.name())))?);
    }
    Matching::from_edges(g, &edges)
}

/// Face whose centroid is closest to `p`.
pub fn nearest_face(g: &BipartiteGraph, p: (f64, f64)) -> Option<usize> {
    let d = |f: usize| {
        let c = g.faces[f].centroid;
        (c.0 - p.0).powi(2) + (c.1 - p.1).powi(2)
    };
    (0..g.faces.len()).min_by(|&a, &b| d(a).total_cmp(&d(b)))
}

/// Dual paths from one base face to each tracked face; the height of a
/// face is the sum over its path of `+-(1_e - 1/3)`.
struct HeightPaths {
    /// `(edge, sign)` steps per tracked face.
    steps: Vec<Vec<(usize, f64)>>,
}

impl HeightPaths {
    fn new(g: &BipartiteGraph, base: usize, targets: &[usize]) -> Self {
        let ef = g.edge_faces();
        let mut parent: Vec<Option<(usize, usize, f64)>> = vec![None; g.faces.len()];
        let mut seen = vec![false; g.faces.len()];
        seen[base] = true;
        let mut q = VecDeque::from([base]);
        while let Some(f) = q.pop_front() {
            for d in &g.faces[f].darts {
                let other = ef[d.edge][if d.from_white { 1 } else { 0 }];
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some((f, d.edge, if d.from_white { 1.0 } else { -1.0 }));
                    q.push_back(other);
                }
            }
        }
        let steps = targets
            .iter()
            .map(|&t| {
                let mut path = Vec::new();
                let mut f = t;
                while let Some((p, e, s)) = parent[f] {
                    path.push((e, s));
                    f = p;
                }
                path
            })
            .collect();
        HeightPaths { steps }
    }

    fn heights(&self, g: &BipartiteGraph, m: &Matching) -> Vec<f64> {
        self.steps
            .iter()
            .map(|path| path.iter().map(|&(e, s)| s * (if m.contains(g, e) { 2.0 / 3.0 } else { -1.0 / 3.0 })).sum())
            .collect()
    }
}

/// Heights at tracked faces of Glauber samples on a honeycomb torus,
/// grouped by chain.
#[derive(Clone, Debug, Serialize)]
pub struct TorusHeights {
    pub l: usize,
    pub faces: Vec<usize>,
    /// Centroids of the tracked faces.
    pub points: Vec<(f64, f64)>,
    /// `chains[c][s][i]`: height of face `i` in sample `s` of chain `c`.
    pub chains: Vec<Vec<Vec<f64>>>,
}

impl TorusHeights {
    pub fn point(&self, i: usize) -> Complex64 {
        Complex64::new(self.points[i].0, self.points[i].1)
    }

    pub fn samples(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }
}

/// Uniform dimers on the `l x l` honeycomb torus in the flat sector,
/// recording heights at the faces nearest `points`. Each chain starts at the
/// flat matching; burn-in and thinning count proposals, a zero `thin`
/// meaning one sweep.
pub fn sample_torus_heights(l: usize, points: &[(f64, f64)], cfg: ChainConfig, seed: u64) -> Result<TorusHeights> {
    let g = honeycomb_torus(l)?;
    let m0 = flat_torus_matching(&g)?;
    let faces: Vec<usize> = points.iter().map(|&p| nearest_face(&g, p).unwrap()).collect();
    let paths = HeightPaths::new(&g, 0, &faces);
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut ch = Glauber::new(&g, m0.clone(), stream_rng(seed, c as u64).random::<u64>());
            match cfg.burn_in {
                Some(n) => ch.run(n),
                None => ch.burn_in(),
            }
            let thin = if cfg.thin == 0 { ch.face_count() as u64 } else { cfg.thin };
            (0..cfg.per_chain)
                .map(|k| {
                    if k > 0 {
                        ch.run(thin);
                    }
                    paths.heights(&g, &ch.matching)
                })
                .collect()
        })
        .collect();
    let centroids = faces.iter().map(|&f| g.faces[f].centroid).collect();
    Ok(TorusHeights { l, faces, points: centroids, chains })
}

/// A Monte Carlo estimate with its jackknife standard error over chains.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl MomentEstimate {
    /// Distance from `target` in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        if self.stderr > 0.0 {
            (self.mean - target) / self.stderr
        } else if (self.mean - target).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn product_mean(rows: &[&Vec<f64>], incs: &[(usize, usize)]) -> f64 {
    let s: f64 = rows.iter().map(|h| incs.iter().map(|&(i, j)| h[i] - h[j]).product::<f64>()).sum();
    s / rows.len() as f64
}

/// Delete-one-chain jackknife of a statistic of the pooled samples.
fn jackknife(data: &TorusHeights, stat: &dyn Fn(&[&Vec<f64>]) -> f64) -> MomentEstimate {
    let all: Vec<&Vec<f64>> = data.chains.iter().flatten().collect();
    let mean = stat(&all);
    let c = data.chains.len();
    let stderr = if c < 2 {
        f64::NAN
    } else {
        let loo: Vec<f64> = (0..c)
            .map(|k| {
                let rest: Vec<&Vec<f64>> = data.chains.iter().enumerate().filter(|&(i, _)| i != k).flat_map(|(_, ch)| ch.iter()).collect();
                stat(&rest)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / c as f64;
        ((c - 1) as f64 / c as f64 * loo.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt()
    };
    MomentEstimate { mean, stderr, samples: all.len() }
}

/// `E[prod (h(f_i) - h(f_j))]` over the given increments, indices into the
/// tracked faces. Repeated or empty increments are allowed; an increment
/// `(i, i)` makes the product vanish identically.
pub fn empirical_moment(data: &TorusHeights, incs: &[(usize, usize)]) -> Result<MomentEstimate> {
    let n = data.faces.len();
    if incs.iter().any(|&(i, j)| i >= n || j >= n) {
        return Err(Error::Malformed("increment index outside the tracked faces".into()));
    }
    if data.samples() == 0 {
        return Err(Error::Malformed("no samples".into()));
    }
    Ok(jackknife(data, &|rows| product_mean(rows, incs)))
}

/// `E[X1 X2 X3 X4] - (E12 E34 + E13 E24 + E14 E23)` for four increments,
/// with every moment measured on the same samples.
pub fn wick_defect(data: &TorusHeights, incs: [(usize, usize); 4]) -> Result<MomentEstimate> {
    empirical_moment(data, &incs)?;
    Ok(jackknife(data, &|rows| {
        let e = |p: usize, q: usize| product_mean(rows, &[incs[p], incs[q]]);
        product_mean(rows, &incs) - (e(0, 1) * e(2, 3) + e(0, 2) * e(1, 3) + e(0, 3) * e(1, 2))
    }))
}

/// Measured second moment of two increments next to the cross-ratio value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentComparison {
    pub estimate: MomentEstimate,
    pub predicted: f64,
    pub z: f64,
}

pub fn compare_second_moment(data: &TorusHeights, p: (usize, usize), q: (usize, usize)) -> Result<MomentComparison> {
    let estimate = empirical_moment(data, &[p, q])?;
    let predicted = gff_second_moment(data.point(p.0), data.point(p.1), data.point(q.0), data.point(q.1))?;
    Ok(MomentComparison { estimate, predicted, z: estimate.z(predicted) })
}
