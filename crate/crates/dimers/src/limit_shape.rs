//! Honeycomb limit shapes, computed two ways: by minimizing the discrete
//! surface-tension functional on a triangulated mesh, and from the complex
//! Burgers equation through an implicit curve `Q(z, xz + yw) = 0`.
//!
//! Coordinates `(x, y)` are oblique: the slope `(s, t) = grad h` lives in
//! the triangle `s, t >= 0, s + t <= 1`, and polygon edges run along
//! `(1, 0)`, `(0, 1)` and `(1, 1)`. In the Euclidean plane these basis
//! vectors sit at 0 and 120 degrees, so `(1, 0)`, `(0, 1)` and `(-1, -1)`
//! are the cube roots of unity. The regular hexagon is
//! `|x|, |y|, |x - y| <= 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Label};
use crate::linalg::poly_roots;
use crate::ronkin::surface_tension_honeycomb;

/// Over-relaxation factor for the coordinate sweeps.
const OMEGA: f64 = 1.8;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Oblique to Euclidean coordinates.
pub fn to_euclid(p: (f64, f64)) -> (f64, f64) {
    (p.0 - p.1 / 2.0, p.1 * SQRT3_2)
}

pub fn from_euclid(p: (f64, f64)) -> (f64, f64) {
    let y = p.1 / SQRT3_2;
    (p.0 + y / 2.0, y)
}

/// Polygon in oblique coordinates, counterclockwise.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Polygon {
    pub vertices: Vec<(f64, f64)>,
}

/// Direction class of an edge vector: 0 for `(0, 1)`, 1 for `(1, 0)`,
/// 2 for `(1, 1)`, with the sign telling whether the vector is a positive
/// cube root (`(0, 1)`, `(1, 0)`, `(-1, -1)`).
fn edge_class(d: (f64, f64)) -> Option<(usize, bool)> {
    let eps = 1e-9 * (d.0.abs() + d.1.abs()).max(1.0);
    if d.0.abs() < eps && d.1.abs() > eps {
        Some((0, d.1 > 0.0))
    } else if d.1.abs() < eps && d.0.abs() > eps {
        Some((1, d.0 > 0.0))
    } else if (d.0 - d.1).abs() < eps && d.0.abs() > eps {
        Some((2, d.0 < 0.0))
    } else {
        None
    }
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Self {
        Polygon { vertices }
    }

    /// The regular hexagon `|x|, |y|, |x - y| <= r`.
    pub fn hexagon(r: f64) -> Self {
        Polygon::new(vec![(r, 0.0), (r, r), (0.0, r), (-r, 0.0), (-r, -r), (0.0, -r)])
    }

    /// A nine-sided symmetric heart: a hexagon with a notch cut from the top,
/// one reflex corner. Both lobes sit on the line `y = 1`.
    pub fn heart(scale: f64) -> Self {
        let v = [(0.0, 0.0), (0.0, 1.0), (-1.0, 1.0), (-2.0, 0.0), (-2.0, -2.0), (0.0, -2.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0)];
        Polygon::new(v.iter().map(|&(x, y)| (x * scale, y * scale)).collect())
    }

    pub fn edges(&self) -> Vec<((f64, f64), (f64, f64))> {
        let n = self.vertices.len();
        (0..n).map(|k| (self.vertices[k], self.vertices[(k + 1) % n])).collect()
    }

    /// Winding-number test, boundary counts as inside.
    pub fn contains(&self, p: (f64, f64)) -> bool {
        if self.on_boundary(p, 1e-12) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
                if x > p.0 {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn on_boundary(&self, p: (f64, f64), tol: f64) -> bool {
        self.edges().iter().any(|&(a, b)| seg_dist(p, a, b) <= tol)
    }

    /// Boundary height at the vertices: along an edge that is a positive
    /// cube root the height drops as fast as the slope triangle allows, and
    /// along a negative one it rises as fast as allowed. Starts at 0.
    pub fn vertex_heights(&self) -> Result<Vec<f64>> {
        let mut h = vec![0.0];
        for (a, b) in self.edges() {
            let d = (b.0 - a.0, b.1 - a.1);
            let dh = if d.0.abs() + d.1.abs() < 1e-12 {
                0.0
            } else {
                let (_, pos) = edge_class(d).ok_or_else(|| Error::Malformed("edge not along a lattice direction".into()))?;
                if pos {
                    -support(-d.0, -d.1)
                } else {
                    support(d.0, d.1)
                }
            };
            h.push(h.last().unwrap() + dh);
        }
        if h.last().unwrap().abs() > 1e-9 {
            return Err(Error::NoSpanningSurface);
        }
        h.pop();
        Ok(h)
    }

    /// Piecewise-linear boundary height from `vertex_heights`.
    pub fn boundary_height(&self) -> Result<impl Fn(f64, f64) -> f64 + Sync + '_> {
        let hv = self.vertex_heights()?;
        Ok(move |x: f64, y: f64| {
            let mut best = (f64::INFINITY, 0.0);
            for (k, (a, b)) in self.edges().into_iter().enumerate() {
                let d = seg_dist((x, y), a, b);
                if d < best.0 {
                    let len2 = (b.0 - a.0).powi(2) + (b.1 - a.1).powi(2);
                    let t = if len2 == 0.0 { 0.0 } else { (((x - a.0) * (b.0 - a.0) + (y - a.1) * (b.1 - a.1)) / len2).clamp(0.0, 1.0) };
                    best = (d, hv[k] + t * (hv[(k + 1) % hv.len()] - hv[k]));
                }
            }
            best.1
        })
    }
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let len2 = ex * ex + ey * ey;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * ex + (p.1 - a.1) * ey) / len2).clamp(0.0, 1.0) };
    ((p.0 - a.0 - t * ex).powi(2) + (p.1 - a.1 - t * ey).powi(2)).sqrt()
}

/// Largest height increase along `(dx, dy)` over slopes in the triangle.
fn support(dx: f64, dy: f64) -> f64 {
    0f64.max(dx).max(dy)
}

// ---------------------------------------------------------------------------
// Convex minimization

/// Triangulated grid of spacing `1 / per_unit` over a polygon.
#[derive(Clone, Debug, Serialize)]
pub struct Mesh {
    pub per_unit: usize,
    pub nodes: Vec<(i64, i64)>,
    /// `(s_from, s_to, t_from, t_to)`: the slope of a triangle is
    /// `s = (h[s_to] - h[s_from]) / delta`, likewise `t`.
    pub triangles: Vec<[usize; 4]>,
    pub boundary: Vec<bool>,
    /// Directed grid edges as `(u, v, dx, dy)` in grid units.
    pub edges: Vec<(usize, usize, i64, i64)>,
}

impl Mesh {
    pub fn delta(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let d = self.delta();
        (self.nodes[k].0 as f64 * d, self.nodes[k].1 as f64 * d)
    }

    pub fn new(poly: &Polygon, per_unit: usize) -> Result<Mesh> {
        let d = 1.0 / per_unit as f64;
        for &(x, y) in &poly.vertices {
            if ((x / d).round() - x / d).abs() > 1e-9 || ((y / d).round() - y / d).abs() > 1e-9 {
                return Err(Error::Malformed("polygon vertex off the mesh".into()));
            }
        }
        for (a, b) in poly.edges() {
            let e = (b.0 - a.0, b.1 - a.1);
            if e.0.abs() + e.1.abs() > 1e-12 && edge_class(e).is_none() {
                return Err(Error::Malformed("edge not along a lattice direction".into()));
            }
        }
        let xs = poly.vertices.iter().map(|p| (p.0 / d).round() as i64);
        let ys = poly.vertices.iter().map(|p| (p.1 / d).round() as i64);
        let (x0, x1) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
        let (y0, y1) = (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(0));
        let mut index: HashMap<(i64, i64), usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        let node = |p: (i64, i64), index: &mut HashMap<(i64, i64), usize>, nodes: &mut Vec<(i64, i64)>| {
            *index.entry(p).or_insert_with(|| {
                nodes.push(p);
                nodes.len() - 1
            })
        };
        for j in y0..y1 {
            for i in x0..x1 {
                let c1 = ((i as f64 + 2.0 / 3.0) * d, (j as f64 + 1.0 / 3.0) * d);
                let c2 = ((i as f64 + 1.0 / 3.0) * d, (j as f64 + 2.0 / 3.0) * d);
                if poly.contains(c1) && !poly.on_boundary(c1, 1e-12) {
                    let a = node((i, j), &mut index, &mut nodes);
                    let b = node((i + 1, j), &mut index, &mut nodes);
                    let c = node((i + 1, j + 1), &mut index, &mut nodes);
                    triangles.push([a, b, b, c]);
                }
                if poly.contains(c2) && !poly.on_boundary(c2, 1e-12) {
                    let a = node((i, j), &mut index, &mut nodes);
                    let b = node((i, j + 1), &mut index, &mut nodes);
                    let c = node((i + 1, j + 1), &mut index, &mut nodes);
                    triangles.push([b, c, a, b]);
                }
            }
        }
        let boundary = nodes
            .iter()
            .map(|&(i, j)| poly.on_boundary((i as f64 * d, j as f64 * d), 1e-9 * d))
            .collect();
        let mut edges = Vec::new();
        for (k, &(i, j)) in nodes.iter().enumerate() {
            for (dx, dy) in [(1, 0), (0, 1), (1, 1), (-1, 0), (0, -1), (-1, -1)] {
                if let Some(&m) = index.get(&(i + dx, j + dy)) {
                    edges.push((k, m, dx, dy));
                }
            }
        }
        // keep only edges that belong to some triangle
        let mut tri_edges = std::collections::HashSet::new();
        for t in &triangles {
            let vs = [t[0], t[1], t[2], t[3]];
            for &a in &vs {
                for &b in &vs {
                    tri_edges.insert((a, b));
                }
            }
        }
        edges.retain(|e| tri_edges.contains(&(e.0, e.1)));
        Ok(Mesh { per_unit, nodes, triangles, boundary, edges })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}

/// Multi-source shortest paths with seeds `h` on boundary nodes and edge
/// costs `delta * support(step)`. With `reverse`, costs of reversed edges.
fn extension(mesh: &Mesh, hb: &[f64], reverse: bool) -> Vec<f64> {
    let n = mesh.nodes.len();
    let d = mesh.delta();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, dx, dy) in &mesh.edges {
        if reverse {
            adj[v].push((u, d * support(dx as f64, dy as f64)));
        } else {
            adj[u].push((v, d * support(dx as f64, dy as f64)));
        }
    }
    let sign = if reverse { -1.0 } else { 1.0 };
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for k in 0..n {
        if mesh.boundary[k] {
            dist[k] = sign * hb[k];
            heap.push(Item(dist[k], k));
        }
    }
    while let Some(Item(dk, k)) = heap.pop() {
        if dk > dist[k] {
            continue;
        }
        for &(m, c) in &adj[k] {
            if dk + c < dist[m] {
                dist[m] = dk + c;
                heap.push(Item(dist[m], m));
            }
        }
    }
    dist.iter().map(|v| sign * v).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteMinimizer {
    pub mesh: Mesh,
    pub h: Vec<f64>,
    pub objective: f64,
    /// Objective after each sweep on the finest level.
    pub history: Vec<f64>,
    pub sweeps: usize,
    /// Largest discrete Euler-Lagrange residual (derivative per unit area)
    /// over interior nodes whose constraints are slack.
    pub residual: f64,
    /// `(per_unit, objective)` on each level of the coarse-to-fine solve.
    pub levels: Vec<(usize, f64)>,
}

impl DiscreteMinimizer {
    /// Aitken extrapolation of the last three level objectives, which
    /// converge geometrically under mesh halving. Falls back to the finest
    /// objective with fewer levels or a vanishing denominator.
    pub fn extrapolated_objective(&self) -> f64 {
        let n = self.levels.len();
        if n < 3 {
            return self.objective;
        }
        let (a, b, c) = (self.levels[n - 3].1, self.levels[n - 2].1, self.levels[n - 1].1);
        let den = (c - b) - (b - a);
        if den.abs() < 1e-300 {
            return c;
        }
        c - (c - b).powi(2) / den
    }
}

fn clamp_slope(s: f64, t: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    let t = t.clamp(0.0, 1.0 - s);
    (s, t)
}

fn sigma_clamped(s: f64, t: f64) -> f64 {
    let (s, t) = clamp_slope(s, t);
    surface_tension_honeycomb(s, t).unwrap_or(0.0)
}

/// Gradient and Hessian of the surface tension with slopes pushed a hair
/// inside the triangle so the logs stay finite.
fn sigma_derivs(s: f64, t: f64) -> ((f64, f64), [[f64; 2]; 2]) {
    let e = 1e-13;
    let u = (1.0 - s - t).max(e);
    let (s, t) = (s.max(e), t.max(e));
    let (ls, lt, lu) = ((PI * s).sin().ln(), (PI * t).sin().ln(), (PI * u).sin().ln());
    let cot = |x: f64| (PI * x).cos() / (PI * x).sin();
    let (a, b, c) = (cot(s), cot(t), cot(u));
    ((ls - lu, lt - lu), [[PI * (a + c), PI * c], [PI * c, PI * (b + c)]])
}

fn tri_slope(h: &[f64], tri: &[usize; 4], d: f64) -> (f64, f64) {
    ((h[tri[1]] - h[tri[0]]) / d, (h[tri[3]] - h[tri[2]]) / d)
}

pub fn mesh_objective(mesh: &Mesh, h: &[f64]) -> f64 {
    let d = mesh.delta();
    mesh.triangles.par_iter().map(|t| {
        let (s, tt) = tri_slope(h, t, d);
        d * d / 2.0 * sigma_clamped(s, tt)
    }).sum()
}

struct Local {
    tris: Vec<(usize, f64, f64)>,
    nbrs: Vec<(usize, f64, f64)>,
}

/// Minimizes the sum over triangles of `area * sigma(slope)` with the
/// given boundary heights, by exact coordinate descent: each sweep
/// minimizes over one node at a time inside the interval its edge
/// constraints allow. Solved coarse to fine while the polygon stays on the
/// coarser grids.
pub fn minimize_surface_tension<F: Fn(f64, f64) -> f64 + Sync>(
    poly: &Polygon,
    boundary: &F,
    per_unit: usize,
    max_sweeps: usize,
    tol: f64,
) -> Result<DiscreteMinimizer> {
    let mut levels = vec![per_unit];
    while levels.last().unwrap() % 2 == 0 && levels.last().unwrap() / 2 >= 2 && Mesh::new(poly, levels.last().unwrap() / 2).is_ok() {
        let next = levels.last().unwrap() / 2;
        if next < 4 {
            break;
        }
        levels.push(next);
    }
    levels.reverse();
    let mut prev: Option<(Mesh, Vec<f64>)> = None;
    let mut out: Option<DiscreteMinimizer> = None;
    let mut objectives = Vec::new();
    for &n in &levels {
        let mesh = Mesh::new(poly, n)?;
        let init = prev.as_ref().map(|(m, h)| prolong(m, h, &mesh));
        let r = minimize_on_mesh(mesh, boundary, init, max_sweeps, tol)?;
        objectives.push((n, r.objective));
        prev = Some((r.mesh.clone(), r.h.clone()));
        out = Some(r);
    }
    if let Some(r) = out.as_mut() {
        r.levels = objectives;
    }
    out.ok_or_else(|| Error::Malformed("empty mesh".into()))
}

fn prolong(coarse: &Mesh, h: &[f64], fine: &Mesh) -> Vec<f64> {
    let idx: HashMap<(i64, i64), usize> = coarse.nodes.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    fine.nodes
        .iter()
        .map(|&(i, j)| {
            let get = |a: i64, b: i64| idx.get(&(a, b)).map(|&k| h[k]);
            let v: Option<f64> = (|| match (i % 2 == 0, j % 2 == 0) {
                (true, true) => get(i / 2, j / 2),
                (false, true) => Some((get((i - 1) / 2, j / 2)? + get((i + 1) / 2, j / 2)?) / 2.0),
                (true, false) => Some((get(i / 2, (j - 1) / 2)? + get(i / 2, (j + 1) / 2)?) / 2.0),
                (false, false) => Some((get((i - 1) / 2, (j - 1) / 2)? + get((i + 1) / 2, (j + 1) / 2)?) / 2.0),
            })();
            v.unwrap_or(f64::NAN)
        })
        .collect()
}

fn minimize_on_mesh<F: Fn(f64, f64) -> f64 + Sync>(
    mesh: Mesh,
    boundary: &F,
    init: Option<Vec<f64>>,
    max_sweeps: usize,
    tol: f64,
) -> Result<DiscreteMinimizer> {
    let n = mesh.nodes.len();
    let d = mesh.delta();
    let hb: Vec<f64> = (0..n).map(|k| if mesh.boundary[k] { let p = mesh.point(k); boundary(p.0, p.1) } else { 0.0 }).collect();
    let upper = extension(&mesh, &hb, false);
    let lower = extension(&mesh, &hb, true);
    for k in 0..n {
        if mesh.boundary[k] && (upper[k] < hb[k] - 1e-9 || lower[k] > hb[k] + 1e-9) {
            return Err(Error::NoSpanningSurface);
        }
    }
    let mut h: Vec<f64> = (0..n)
        .map(|k| {
            if mesh.boundary[k] {
                hb[k]
            } else {
                let mid = (upper[k] + lower[k]) / 2.0;
                match &init {
                    Some(v) if v[k].is_finite() => v[k].clamp(lower[k], upper[k]),
                    _ => mid,
                }
            }
        })
        .collect();
    // the clamped initial guess may break edge constraints; repair by
    // falling back to the midpoint extension where it does
    let feasible = |h: &[f64]| mesh.edges.iter().all(|&(u, v, dx, dy)| h[v] - h[u] <= d * support(dx as f64, dy as f64) + 1e-12);
    if !feasible(&h) {
        for k in 0..n {
            if !mesh.boundary[k] {
                h[k] = (upper[k] + lower[k]) / 2.0;
            }
        }
    }

    let mut local: Vec<Local> = (0..n).map(|_| Local { tris: Vec::new(), nbrs: Vec::new() }).collect();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for &v in &[t[0], t[1], t[2], t[3]] {
            if local[v].tris.iter().any(|x| x.0 == ti) {
                continue;
            }
            let cs = (if v == t[1] { 1.0 } else { 0.0 } - if v == t[0] { 1.0 } else { 0.0 }) / d;
            let ct = (if v == t[3] { 1.0 } else { 0.0 } - if v == t[2] { 1.0 } else { 0.0 }) / d;
            local[v].tris.push((ti, cs, ct));
        }
    }
    for &(u, v, dx, dy) in &mesh.edges {
        // h[v] <= h[u] + up and h[v] >= h[u] - down
        let up = d * support(dx as f64, dy as f64);
        let down = d * support(-dx as f64, -dy as f64);
        local[v].nbrs.push((u, up, down));
    }
    let area = d * d / 2.0;
    let interior: Vec<usize> = (0..n).filter(|&k| !mesh.boundary[k]).collect();

    // slope of triangle `ti` with node `k` moved to `x`
    let slope_at = |h: &[f64], ti: usize, k: usize, x: f64| {
        let t = &mesh.triangles[ti];
        let val = |v: usize| if v == k { x } else { h[v] };
        ((val(t[1]) - val(t[0])) / d, (val(t[3]) - val(t[2])) / d)
    };
    let deriv = |h: &[f64], k: usize, x: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut hh = 0.0;
        for &(ti, cs, ct) in &local[k].tris {
            let (s, t) = slope_at(h, ti, k, x);
            let (gr, he) = sigma_derivs(s, t);
            g += area * (gr.0 * cs + gr.1 * ct);
            hh += area * (he[0][0] * cs * cs + 2.0 * he[0][1] * cs * ct + he[1][1] * ct * ct);
        }
        (g, hh)
    };
    let energy = |h: &[f64], k: usize, x: f64| -> f64 {
        area * local[k].tris.iter().map(|&(ti, _, _)| {
            let (s, t) = slope_at(h, ti, k, x);
            sigma_clamped(s, t)
        }).sum::<f64>()
    };
    // exact minimizer over node k inside its feasible interval, then an
    // over-relaxed step kept only if the local energy still drops
    let update = |h: &[f64], k: usize| -> f64 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &(u, up, down) in &local[k].nbrs {
            hi = hi.min(h[u] + up);
            lo = lo.max(h[u] - down);
        }
        if hi - lo <= 1e-15 {
            return (lo + hi) / 2.0;
        }
        let x = if deriv(h, k, lo).0 >= 0.0 {
            lo
        } else if deriv(h, k, hi).0 <= 0.0 {
            hi
        } else {
            // safeguarded Newton on the derivative
            let (mut a, mut b) = (lo, hi);
            let mut x = h[k].clamp(lo, hi);
            for _ in 0..60 {
                let (g, hh) = deriv(h, k, x);
                if g > 0.0 {
                    b = x;
                } else {
                    a = x;
                }
                let nx = x - g / hh;
                let nx = if hh > 0.0 && nx > a && nx < b { nx } else { (a + b) / 2.0 };
                if (nx - x).abs() < 1e-12 || b - a < 1e-12 {
                    x = nx;
                    break;
                }
                x = nx;
            }
            x
        };
        let relaxed = (h[k] + OMEGA * (x - h[k])).clamp(lo, hi);
        if relaxed == x || energy(h, k, relaxed) <= energy(h, k, h[k]) { relaxed } else { x }
    };

    // nodes of one color share no triangle, since (i + j) mod 3 differs
    // across every mesh edge, so each color is updated in parallel
    let colors: Vec<Vec<usize>> = (0..3)
        .map(|c| interior.iter().copied().filter(|&k| (mesh.nodes[k].0 + mesh.nodes[k].1).rem_euclid(3) == c).collect())
        .collect();
    let mut history = Vec::new();
    let mut sweeps = 0;
    for _ in 0..max_sweeps {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for color in &colors {
            let new: Vec<f64> = color.par_iter().map(|&k| update(&h, k)).collect();
            for (&k, x) in color.iter().zip(new) {
                change = change.max((x - h[k]).abs());
                h[k] = x;
            }
        }
        history.push(mesh_objective(&mesh, &h));
        if change < tol {
            break;
        }
    }

    let mut residual: f64 = 0.0;
    for &k in &interior {
        let slack = local[k].nbrs.iter().all(|&(u, up, down)| h[k] < h[u] + up - 1e-9 && h[k] > h[u] - down + 1e-9);
        if slack {
            residual = residual.max(deriv(&h, k, h[k]).0.abs() / (3.0 * area));
        }
    }
    let objective = mesh_objective(&mesh, &h);
    Ok(DiscreteMinimizer { mesh, h, objective, history, sweeps, residual, levels: Vec::new() })
}

// ---------------------------------------------------------------------------
// Burgers equation

/// `Q(u, v) = sum c_ij u^i v^j` with `i + j <= n`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PlaneCurveQ {
    pub degree: usize,
    pub coeffs: Vec<((usize, usize), f64)>,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

impl PlaneCurveQ {
    pub fn new(coeffs: Vec<((usize, usize), f64)>) -> Self {
        let degree = coeffs.iter().filter(|c| c.1 != 0.0).map(|c| c.0 .0 + c.0 .1).max().unwrap_or(0);
        PlaneCurveQ { degree, coeffs }
    }

    /// `1 + u + u^2 - v^2`, the regular hexagon.
    pub fn hexagon() -> Self {
        PlaneCurveQ::new(vec![((0, 0), 1.0), ((1, 0), 1.0), ((2, 0), 1.0), ((0, 2), -1.0)])
    }

    /// `1 + u^2 + v^2 + r (u + v + uv)`, a volume-constrained example.
    pub fn volume_example(r: f64) -> Self {
        PlaneCurveQ::new(vec![((0, 0), 1.0), ((2, 0), 1.0), ((0, 2), 1.0), ((1, 0), r), ((0, 1), r), ((1, 1), r)])
    }

    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        self.coeffs.iter().map(|&((i, j), c)| c * u.powi(i as i32) * v.powi(j as i32)).sum()
    }

    /// Ascending coefficients of `z -> Q(u1 z + u0, v1 z + v0)`.
    pub fn substitute(&self, u: (f64, f64), v: (f64, f64)) -> Vec<f64> {
        let lin_u = [u.1, u.0];
        let lin_v = [v.1, v.0];
        let mut pu = vec![vec![1.0]];
        let mut pv = vec![vec![1.0]];
        for k in 1..=self.degree {
            pu.push(poly_mul(&pu[k - 1], &lin_u));
            pv.push(poly_mul(&pv[k - 1], &lin_v));
        }
        let mut out = vec![0.0; self.degree + 1];
        for &((i, j), c) in &self.coeffs {
            for (k, x) in poly_mul(&pu[i], &pv[j]).iter().enumerate() {
                out[k] += c * x;
            }
        }
        out
    }

    /// Largest coefficient 1 in absolute value, constant term nonnegative.
    pub fn normalized(&self) -> Self {
        let m = self.coeffs.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
        let c00 = self.coeffs.iter().find(|c| c.0 == (0, 0)).map(|c| c.1).unwrap_or(0.0);
        let sgn = if c00 < 0.0 { -1.0 } else { 1.0 };
        let mut coeffs: Vec<((usize, usize), f64)> = self.coeffs.iter().map(|&(k, c)| (k, sgn * c / m)).collect();
        coeffs.sort_by(|a, b| a.0.cmp(&b.0));
        PlaneCurveQ { degree: self.degree, coeffs }
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs.iter().filter(|c| c.0 == (i, j)).map(|c| c.1).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    /// Slope (0, 0), only a-lozenges.
    A,
    /// Slope (1, 0).
    B,
    /// Slope (0, 1).
    C,
}

impl Facet {
    pub fn slope(self) -> (f64, f64) {
        match self {
            Facet::A => (0.0, 0.0),
            Facet::B => (1.0, 0.0),
            Facet::C => (0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BurgersPoint {
    Liquid { z: (f64, f64), w: (f64, f64), s: f64, t: f64 },
    Frozen(Facet),
}

impl BurgersPoint {
    pub fn slope(&self) -> (f64, f64) {
        match *self {
            BurgersPoint::Liquid { s, t, .. } => (s, t),
            BurgersPoint::Frozen(f) => f.slope(),
        }
    }

    pub fn is_liquid(&self) -> bool {
        matches!(self, BurgersPoint::Liquid { .. })
    }
}

const IM_TOL: f64 = 1e-10;

fn select_branch(coeffs: &[f64], x: f64, y: f64) -> Result<BurgersPoint> {
    let c: Vec<Complex64> = coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let roots = poly_roots(&c);
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let upper: Vec<Complex64> = roots.iter().copied().filter(|r| r.im > IM_TOL * scale).collect();
    match upper.len() {
        1 => {
            let z = upper[0];
            let w = -1.0 - z;
            let s = (-w).arg() / PI;
            let t = (-1.0 / z).arg() / PI;
            Ok(BurgersPoint::Liquid { z: (z.re, z.im), w: (w.re, w.im), s, t })
        }
        0 => {
            // the facet of the pair of real roots that last merged: the
            // closest pair, or the lone real root
            let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
            re.sort_by(f64::total_cmp);
            let z = if re.len() >= 2 {
                let k = (0..re.len() - 1).min_by(|&a, &b| (re[a + 1] - re[a]).total_cmp(&(re[b + 1] - re[b]))).unwrap();
                (re[k] + re[k + 1]) / 2.0
            } else if re.len() == 1 {
                re[0]
            } else {
                return Err(Error::AmbiguousBranch(x, y));
            };
            let f = if z < -1.0 {
                Facet::B
            } else if z < 0.0 {
                Facet::A
            } else {
                Facet::C
            };
            Ok(BurgersPoint::Frozen(f))
        }
        _ => Err(Error::AmbiguousBranch(x, y)),
    }
}

/// Solves `Q0(z, xz + yw) = 0` with `1 + z + w = 0`, taking the root with
/// `Im z > 0`. Slopes are `(arg(-w), arg(-1/z)) / pi`.
pub fn burgers_solve(q0: &PlaneCurveQ, x: f64, y: f64) -> Result<BurgersPoint> {
    // u = z, v = xz - y(1 + z)
    select_branch(&q0.substitute((1.0, 0.0), (x - y, -y)), x, y)
}

/// Solves `Q(e^{-cx} z, e^{-cy} w) = 0` with `1 + z + w = 0`.
pub fn burgers_solve_volume(q: &PlaneCurveQ, c: f64, x: f64, y: f64) -> Result<BurgersPoint> {
    let (a, b) = ((-c * x).exp(), (-c * y).exp());
    select_branch(&q.substitute((a, 0.0), (-b, -b)), x, y)
}

/// Burgers data on the mesh grid of a polygon.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeField {
    pub per_unit: usize,
    pub origin: (i64, i64),
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `None` outside the polygon.
    pub points: Vec<Option<BurgersPoint>>,
}

impl SlopeField {
    pub fn delta(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    pub fn coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        let d = self.delta();
        ((self.origin.0 + ix as i64) as f64 * d, (self.origin.1 + iy as i64) as f64 * d)
    }

    pub fn get(&self, ix: usize, iy: usize) -> Option<BurgersPoint> {
        self.points[iy * self.nx + ix]
    }

    pub fn at_node(&self, i: i64, j: i64) -> Option<BurgersPoint> {
        let (ix, iy) = (i - self.origin.0, j - self.origin.1);
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            return None;
        }
        self.get(ix as usize, iy as usize)
    }
}

/// Which Burgers equation to solve.
#[derive(Clone, Debug)]
pub enum Burgers {
    Plain(PlaneCurveQ),
    Volume(PlaneCurveQ, f64),
}

impl Burgers {
    fn solve_exact(&self, x: f64, y: f64) -> Result<BurgersPoint> {
        match self {
            Burgers::Plain(q) => burgers_solve(q, x, y),
            Burgers::Volume(q, c) => burgers_solve_volume(q, *c, x, y),
        }
    }

    /// Like the plain solvers, but on lines where the `z` polynomial loses
    /// all its roots (polygon sides, where the root runs off to infinity)
    /// the answer is taken from a point a hair away.
    pub fn solve(&self, x: f64, y: f64) -> Result<BurgersPoint> {
        let r = self.solve_exact(x, y);
        if r.is_ok() {
            return r;
        }
        for (dx, dy) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
            if let Ok(p) = self.solve_exact(x + 1e-9 * dx, y + 1e-9 * dy) {
                return Ok(p);
            }
        }
        r
    }
}

pub fn slope_field(eq: &Burgers, poly: &Polygon, per_unit: usize) -> Result<SlopeField> {
    let d = 1.0 / per_unit as f64;
    let xs = poly.vertices.iter().map(|p| (p.0 / d).floor() as i64);
    let ys = poly.vertices.iter().map(|p| (p.1 / d).floor() as i64);
    let (x0, x1) = (xs.clone().min().unwrap_or(0), poly.vertices.iter().map(|p| (p.0 / d).ceil() as i64).max().unwrap_or(0));
    let (y0, y1) = (ys.clone().min().unwrap_or(0), poly.vertices.iter().map(|p| (p.1 / d).ceil() as i64).max().unwrap_or(0));
    let (nx, ny) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let points: Result<Vec<Option<BurgersPoint>>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let p = ((x0 + (k % nx) as i64) as f64 * d, (y0 + (k / nx) as i64) as f64 * d);
            if poly.contains(p) {
                eq.solve(p.0, p.1).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect();
    Ok(SlopeField { per_unit, origin: (x0, y0), nx, ny, points: points? })
}

/// Frozen boundary traced on the grid: every grid edge whose endpoints
/// differ in phase contributes the crossing point, refined by bisection.
pub fn frozen_boundary(eq: &Burgers, field: &SlopeField) -> Vec<(f64, f64)> {
    let mut pairs = Vec::new();
    for iy in 0..field.ny {
        for ix in 0..field.nx {
            let Some(a) = field.get(ix, iy) else { continue };
            for (jx, jy) in [(ix + 1, iy), (ix, iy + 1)] {
                if jx >= field.nx || jy >= field.ny {
                    continue;
                }
                if let Some(b) = field.get(jx, jy) {
                    if a.is_liquid() != b.is_liquid() {
                        pairs.push((field.coords(ix, iy), field.coords(jx, jy), a.is_liquid()));
                    }
                }
            }
        }
    }
    pairs
        .par_iter()
        .filter_map(|&(p, q, p_liquid)| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let m = (lo + hi) / 2.0;
                let pt = (p.0 + m * (q.0 - p.0), p.1 + m * (q.1 - p.1));
                let liquid = eq.solve(pt.0, pt.1).ok()?.is_liquid();
                if liquid == p_liquid {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let m = (lo + hi) / 2.0;
            Some((p.0 + m * (q.0 - p.0), p.1 + m * (q.1 - p.1)))
        })
        .collect()
}

/// Point of the frozen boundary for real parameter `z` and a real root `v`
/// of `Q(z, v) = 0`: the envelope of the lines `xz - y(1 + z) = v`.
pub fn envelope_point(q: &PlaneCurveQ, z: f64, v: f64) -> Option<(f64, f64)> {
    let h = 1e-7;
    let (zc, vc) = (Complex64::new(z, 0.0), Complex64::new(v, 0.0));
    let qu = (q.eval(zc + h, vc) - q.eval(zc - h, vc)).re / (2.0 * h);
    let qv = (q.eval(zc, vc + h) - q.eval(zc, vc - h)).re / (2.0 * h);
    if qv.abs() < 1e-14 {
        return None;
    }
    let dv = -qu / qv;
    Some(((1.0 + z) * dv - v, z * dv - v))
}

/// Heights by integrating the slope field along a breadth-first tree of
/// grid edges (trapezoid rule), then checking every grid square's loop
/// integral. Fails if a loop residual exceeds `tol`.
#[derive(Clone, Debug, Serialize)]
pub struct HeightSurface {
    pub field_origin: (i64, i64),
    pub nx: usize,
    pub ny: usize,
    pub per_unit: usize,
    pub h: Vec<Option<f64>>,
    pub max_loop_residual: f64,
}

impl HeightSurface {
    pub fn at_node(&self, i: i64, j: i64) -> Option<f64> {
        let (ix, iy) = (i - self.field_origin.0, j - self.field_origin.1);
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            return None;
        }
        self.h[iy as usize * self.nx + ix as usize]
    }
}

pub fn height_from_slopefield(field: &SlopeField, base: (usize, usize), base_value: f64, tol: f64) -> Result<HeightSurface> {
    let (nx, ny) = (field.nx, field.ny);
    let d = field.delta();
    let slope = |k: usize| field.points[k].map(|p| p.slope());
    let mut h: Vec<Option<f64>> = vec![None; nx * ny];
    let b = base.1 * nx + base.0;
    if slope(b).is_none() {
        return Err(Error::Malformed("base point outside the field".into()));
    }
    h[b] = Some(base_value);
    let mut q = VecDeque::from([b]);
    while let Some(k) = q.pop_front() {
        let (ix, iy) = (k % nx, k / nx);
        let sk = slope(k).unwrap();
        let mut nb = Vec::new();
        if ix + 1 < nx {
            nb.push((k + 1, 0));
        }
        if ix > 0 {
            nb.push((k - 1, 1));
        }
        if iy + 1 < ny {
            nb.push((k + nx, 2));
        }
        if iy > 0 {
            nb.push((k - nx, 3));
        }
        for (m, dir) in nb {
            if h[m].is_some() {
                continue;
            }
            let Some(sm) = slope(m) else { continue };
            let dh = match dir {
                0 => d * (sk.0 + sm.0) / 2.0,
                1 => -d * (sk.0 + sm.0) / 2.0,
                2 => d * (sk.1 + sm.1) / 2.0,
                _ => -d * (sk.1 + sm.1) / 2.0,
            };
            h[m] = Some(h[k].unwrap() + dh);
            q.push_back(m);
        }
    }
    let mut worst: (f64, (f64, f64)) = (0.0, (0.0, 0.0));
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let ks = [iy * nx + ix, iy * nx + ix + 1, (iy + 1) * nx + ix + 1, (iy + 1) * nx + ix];
            let ss: Vec<(f64, f64)> = ks.iter().filter_map(|&k| slope(k)).collect();
            if ss.len() < 4 {
                continue;
            }
            let loop_int = d * (ss[0].0 + ss[1].0) / 2.0 + d * (ss[1].1 + ss[2].1) / 2.0 - d * (ss[2].0 + ss[3].0) / 2.0 - d * (ss[3].1 + ss[0].1) / 2.0;
            if loop_int.abs() > worst.0 {
                worst = (loop_int.abs(), field.coords(ix, iy));
            }
        }
    }
    if worst.0 > tol {
        return Err(Error::Tolerance(format!("loop residual {} at ({}, {})", worst.0, worst.1 .0, worst.1 .1)));
    }
    Ok(HeightSurface { field_origin: field.origin, nx, ny, per_unit: field.per_unit, h, max_loop_residual: worst.0 })
}

/// Surface-tension integral of the Burgers slope field by the midpoint
/// rule on a grid of spacing `1 / per_unit`.
pub fn burgers_objective(eq: &Burgers, poly: &Polygon, per_unit: usize) -> Result<f64> {
    let d = 1.0 / per_unit as f64;
    let xmin = poly.vertices.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = poly.vertices.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = poly.vertices.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = poly.vertices.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let nx = ((xmax - xmin) / d).ceil() as usize;
    let ny = ((ymax - ymin) / d).ceil() as usize;
    let rows: Result<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let mut acc = 0.0;
            for ix in 0..nx {
                let p = (xmin + (ix as f64 + 0.5) * d, ymin + (iy as f64 + 0.5) * d);
                if poly.contains(p) {
                    let (s, t) = eq.solve(p.0, p.1)?.slope();
                    acc += sigma_clamped(s, t) * d * d;
                }
            }
            Ok(acc)
        })
        .collect();
    Ok(rows?.iter().sum())
}

// ---------------------------------------------------------------------------
// Tangency fit

#[derive(Clone, Debug, Serialize)]
pub struct TangencyFit {
    pub q: PlaneCurveQ,
    /// Norm of the tangency conditions at the normalized `q`.
    pub residual: f64,
    /// Dimension of the solution space of the tangency conditions alone.
    pub free: usize,
    /// Multiple of `u (u + 1)` added to make a cubic rational.
    pub shift: Option<f64>,
}

/// Fits `Q` of degree `n` (with `3n` polygon edges, zero-length edges
/// allowed) so that its dual curve is tangent to every edge line. Tangency
/// to `y = y0` is `Q(0, -y0) = 0`, to `x = x0` is `Q(-1, -x0) = 0`, and to
/// `x - y = d0` is `Q_n(1, d0) = 0` for the top-degree part `Q_n`; each is
/// linear in the coefficients, so the fit is the smallest right singular
/// vector of the stacked conditions. Several edges on one line become a
/// root of matching multiplicity.
pub fn fit_tangency_curve(poly: &Polygon) -> Result<TangencyFit> {
    let m = poly.vertices.len();
    if m < 3 || m % 3 != 0 {
        return Err(Error::Malformed("polygon needs 3n edges".into()));
    }
    let n = m / 3;
    let mut classes = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen: HashMap<(usize, i64), usize> = HashMap::new();
    let monos: Vec<(usize, usize)> = (0..=n).flat_map(|i| (0..=n - i).map(move |j| (i, j))).collect();
    for (a, b) in poly.edges() {
        let d = (b.0 - a.0, b.1 - a.1);
        if d.0.abs() + d.1.abs() < 1e-12 {
            classes.push(None);
            continue;
        }
        let (cl, _) = edge_class(d).ok_or_else(|| Error::Malformed("edge not along a lattice direction".into()))?;
        classes.push(Some(cl));
        // a second edge on the same line is a bitangent, which needs a node
        // of Q at the matching point: both partials vanish there
        let value = match cl {
            0 => -a.0,
            1 => -a.1,
            _ => a.0 - a.1,
        };
        let key = (cl, (value * 1e9).round() as i64);
        let repeat = *seen.entry(key).and_modify(|c| *c += 1).or_insert(0usize);
        if repeat > 1 {
            return Err(Error::Malformed("more than two edges on one line".into()));
        }
        let pw = |x: f64, e: usize| if e == 0 { 1.0 } else { x.powi(e as i32) };
        let u0 = if cl == 0 { -1.0 } else { 0.0 };
        let point = |i: usize, j: usize, du: usize, dv: usize| -> f64 {
            if i < du || j < dv {
                return 0.0;
            }
            let fu: f64 = (i - du + 1..=i).map(|x| x as f64).product();
            let fv: f64 = (j - dv + 1..=j).map(|x| x as f64).product();
            fu * fv * pw(u0, i - du) * pw(value, j - dv)
        };
        let at_infinity = |i: usize, j: usize, deg: usize, dv: usize| -> f64 {
            if i + j != deg || j < dv {
                return 0.0;
            }
            let fv: f64 = (j - dv + 1..=j).map(|x| x as f64).product();
            fv * pw(value, j - dv)
        };
        let mut emit = |f: &dyn Fn(usize, usize) -> f64| rows.push(monos.iter().map(|&(i, j)| f(i, j)).collect());
        match (cl, repeat) {
            (2, 0) => emit(&|i, j| at_infinity(i, j, n, 0)),
            (2, _) => {
                emit(&|i, j| at_infinity(i, j, n, 1));
                emit(&|i, j| if n >= 1 { at_infinity(i, j, n - 1, 0) } else { 0.0 });
            }
            (_, 0) => emit(&|i, j| point(i, j, 0, 0)),
            _ => {
                emit(&|i, j| point(i, j, 1, 0));
                emit(&|i, j| point(i, j, 0, 1));
            }
        }

    }
    // classes must cycle with period 3 wherever both neighbors are present
    let start = (0..m).find_map(|k| classes[k].map(|c| (k, c))).ok_or_else(|| Error::Malformed("degenerate polygon".into()))?;
    for k in 0..m {
        if let Some(c) = classes[k] {
            let step = (k + m - start.0) % 3;
            let expected = (start.1 + step) % 3;
            if c != expected {
                return Err(Error::Malformed("edge directions out of cyclic order".into()));
            }
        }
    }
    let a = DMatrix::from_fn(rows.len(), monos.len(), |i, j| rows[i][j]);
    // multiples of u (u + 1) of degree below n meet the plain tangency
    // conditions trivially; when they survive the system they are pinned
    // separately
    let spurious: Vec<Vec<f64>> = monos
        .iter()
        .filter(|&&(i, j)| n >= 3 && i + j <= n - 3)
        .map(|&(i, j)| monos.iter().map(|&m| if m == (i + 1, j) || m == (i + 2, j) { 1.0 } else { 0.0 }).collect::<Vec<f64>>())
        .filter(|sp| (&a * DVector::from_column_slice(sp)).norm() < 1e-9)
        .collect();
    let svd = a.clone().svd(false, true);
    let sv = svd.singular_values.clone();
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    // zero rows pad an underdetermined system so the thin SVD keeps its kernel
    let nrows = (rows.len() + spurious.len()).max(monos.len());
    let full = DMatrix::from_fn(nrows, monos.len(), |i, j| match i.checked_sub(rows.len()) {
        None => rows[i][j],
        Some(k) => spurious.get(k).map_or(0.0, |sp| sp[j]),
    });
    let fsvd = full.svd(false, true);
    let vt = fsvd.v_t.ok_or_else(|| Error::Tolerance("svd failed".into()))?;
    let fsv = fsvd.singular_values;
    let best = (0..fsv.len()).min_by(|&x, &y| fsv[x].total_cmp(&fsv[y])).unwrap();
    let base: Vec<f64> = vt.row(best).iter().copied().collect();
    let mut coeffs = base.clone();
    let mut shift = None;
    if spurious.len() == 1 {
        // cubic: add the multiple of u (u + 1) that makes Q singular, hence
        // rational, choosing among candidates by how well the Burgers field
        // matches the boundary
        let to_q = |c: &[f64]| PlaneCurveQ::new(monos.iter().zip(c).map(|(&k, &v)| (k, v)).filter(|x| x.1.abs() > 1e-14).collect());
        let mut best_score = usize::MAX;
        for alpha in singular_shifts(&to_q(&base)) {
            let c: Vec<f64> = base.iter().zip(&spurious[0]).map(|(b, s)| b + alpha * s).collect();
            let score = boundary_mismatch(&Burgers::Plain(to_q(&c)), poly);
            if score < best_score {
                best_score = score;
                coeffs = c;
                shift = Some(alpha);
            }
        }
    }
    let q = PlaneCurveQ::new(monos.iter().zip(coeffs.iter()).map(|(&k, &c)| (k, c)).filter(|x| x.1.abs() > 1e-12).collect()).normalized();
    let residual = {
        let v = DVector::from_iterator(monos.len(), monos.iter().map(|&(i, j)| q.coeff(i, j)));
        (a * v).norm()
    };
    let free = sorted.iter().filter(|&&x| x < 1e-10 * sorted.last().copied().unwrap_or(1.0)).count() + monos.len().saturating_sub(rows.len());
    Ok(TangencyFit { q, residual, free, shift })
}

/// Values of `a` for which `q + a u (u + 1)` is singular: at a singular
/// point `Q_v = 0` and `Q_u S - Q S_u = 0` with `S = u (u + 1)`; real
/// solutions are found by Newton from a grid of starts.
fn singular_shifts(q: &PlaneCurveQ) -> Vec<f64> {
    let ev = |u: f64, v: f64| {
        let (z, w) = (Complex64::new(u, 0.0), Complex64::new(v, 0.0));
        q.eval(z, w).re
    };
    let grad = |u: f64, v: f64, h: f64| ((ev(u + h, v) - ev(u - h, v)) / (2.0 * h), (ev(u, v + h) - ev(u, v - h)) / (2.0 * h));
    let f = |u: f64, v: f64| {
        let (qu, qv) = grad(u, v, 1e-6);
        let (sv, su) = (u * (u + 1.0), 2.0 * u + 1.0);
        (qv, qu * sv - ev(u, v) * su)
    };
    let mut found: Vec<f64> = Vec::new();
    for i in -12..=12 {
        for j in -12..=12 {
            let (mut u, mut v) = (i as f64 * 0.37 + 0.01, j as f64 * 0.37 + 0.02);
            let mut ok = false;
            for _ in 0..60 {
                let (f1, f2) = f(u, v);
                if f1.abs() + f2.abs() < 1e-13 {
                    ok = true;
                    break;
                }
                let h = 1e-6;
                let (a1, a2) = f(u + h, v);
                let (b1, b2) = f(u, v + h);
                let j = [[(a1 - f1) / h, (b1 - f1) / h], [(a2 - f2) / h, (b2 - f2) / h]];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det.abs() < 1e-300 {
                    break;
                }
                let du = (f1 * j[1][1] - f2 * j[0][1]) / det;
                let dv = (j[0][0] * f2 - j[1][0] * f1) / det;
                u -= du;
                v -= dv;
                if !(u.is_finite() && v.is_finite()) || u.abs() > 1e6 || v.abs() > 1e6 {
                    break;
                }
            }
            let s = u * (u + 1.0);
            if ok && s.abs() > 1e-9 {
                let alpha = -ev(u, v) / s;
                if !found.iter().any(|&x| (x - alpha).abs() < 1e-7 * (1.0 + alpha.abs())) {
                    found.push(alpha);
                }
            }
        }
    }
    found
}

/// Grid points near the polygon sides whose Burgers slope disagrees with
/// the boundary height along that side, plus points where the branch is
/// ambiguous.
fn boundary_mismatch(eq: &Burgers, poly: &Polygon) -> usize {
    let per_unit = 24;
    let d = 1.0 / per_unit as f64;
    let hv = match poly.vertex_heights() {
        Ok(h) => h,
        Err(_) => return usize::MAX,
    };
    let mut bad = 0;
    for (k, (a, b)) in poly.edges().into_iter().enumerate() {
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let dir = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        let want = (hv[(k + 1) % hv.len()] - hv[k]) / len;
        // inward normal of a counterclockwise polygon
        let nrm = (-dir.1, dir.0);
        let steps = (len / d).ceil() as usize;
        for m in 1..steps {
            let f = m as f64 / steps as f64;
            let p = (a.0 + f * (b.0 - a.0) + 0.5 * d * nrm.0, a.1 + f * (b.1 - a.1) + 0.5 * d * nrm.1);
            if !poly.contains(p) {
                continue;
            }
            match eq.solve(p.0, p.1) {
                Ok(BurgersPoint::Frozen(fc)) => {
                    let (s, t) = fc.slope();
                    if (s * dir.0 + t * dir.1 - want).abs() > 1e-6 {
                        bad += 1;
                    }
                }
                Ok(_) => {}
                Err(_) => bad += 1,
            }
        }
    }
    bad
}

/// Least-squares circle through Euclidean points: center and radius.
pub fn fit_circle(pts: &[(f64, f64)]) -> Option<((f64, f64), f64)> {
    if pts.len() < 3 {
        return None;
    }
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| match j {
        0 => pts[i].0,
        1 => pts[i].1,
        _ => 1.0,
    });
    let b = DVector::from_fn(pts.len(), |i, _| -(pts[i].0 * pts[i].0 + pts[i].1 * pts[i].1));
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = cx * cx + cy * cy - sol[2];
    (r2 > 0.0).then(|| ((cx, cy), r2.sqrt()))
}

/// Largest `|dist(center, side) - r|` over the polygon's sides, all in
/// Euclidean units.
pub fn tangency_residual(poly: &Polygon, center: (f64, f64), r: f64) -> f64 {
    poly.edges()
        .iter()
        .filter_map(|&(a, b)| {
            let (a, b) = (to_euclid(a), to_euclid(b));
            let (ex, ey) = (b.0 - a.0, b.1 - a.1);
            let len = (ex * ex + ey * ey).sqrt();
            (len > 0.0).then(|| ((ex * (center.1 - a.1) - ey * (center.0 - a.0)) / len).abs() - r)
        })
        .map(f64::abs)
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Comparison with sampled tilings

/// Oblique coordinates of the point with honeycomb lattice coordinates
/// `(u, v)` in the hexagon `honeycomb_hexagon(n, n, n)`, rescaled to the
/// unit hexagon `|x|, |y|, |x - y| <= 1`.
pub fn hexagon_lattice_to_unit(n: usize, u: f64, v: f64) -> (f64, f64) {
    let n = n as f64;
    ((v - n) / n, -u / n)
}

/// Lozenge label of a frozen facet.
pub fn facet_label(f: Facet) -> Label {
    match f {
        Facet::A => Label::A,
        Facet::B => Label::B,
        Facet::C => Label::C,
    }
}

/// Label densities predicted at a point: `(p_a, p_b, p_c) = (1 - s - t, s, t)`.
pub fn predicted_densities(p: &BurgersPoint) -> [f64; 3] {
    let (s, t) = p.slope();
    [1.0 - s - t, s, t]
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityComparison {
    /// Mean over liquid bins and the three labels of the absolute
    /// difference between empirical and predicted densities.
    pub l1: f64,
    pub liquid_bins: usize,
    /// Whites whose empirical top label exceeds 0.99.
    pub frozen_checked: usize,
    /// Of those, the ones predicted liquid or on another facet and lying
    /// farther than `margin` lattice units from the frozen boundary.
    pub frozen_mismatch: usize,
}

/// Compares empirical edge frequencies on `honeycomb_hexagon(n, n, n)`
/// with the Burgers solution of `eq` (in unit-hexagon coordinates). Whites
/// are grouped in `bin x bin` lattice blocks; a block counts as liquid when
/// every white in it is predicted liquid.
pub fn compare_hexagon_density(g: &BipartiteGraph, n: usize, edge_freq: &[f64], eq: &Burgers, bin: i64, margin: f64) -> Result<DensityComparison> {
    let mut per_white = vec![[0.0f64; 3]; g.nw()];
    for (e, ed) in g.edges.iter().enumerate() {
        let k = match ed.label {
            Label::A => 0,
            Label::B => 1,
            Label::C => 2,
            _ => return Err(Error::Malformed("not a honeycomb graph".into())),
        };
        per_white[ed.white][k] += edge_freq[e];
    }
    let pred: Vec<BurgersPoint> = g
        .whites
        .par_iter()
        .map(|w| {
            let (u, v) = (w.cell.0 as f64 + 1.0 / 3.0, w.cell.1 as f64 + 1.0 / 3.0);
            let (x, y) = hexagon_lattice_to_unit(n, u, v);
            eq.solve(x, y)
        })
        .collect::<Result<_>>()?;
    let mut bins: HashMap<(i64, i64), (usize, [f64; 3], [f64; 3], bool)> = HashMap::new();
    for (w, v) in g.whites.iter().enumerate() {
        let key = (v.cell.0.div_euclid(bin), v.cell.1.div_euclid(bin));
        let ent = bins.entry(key).or_insert((0, [0.0; 3], [0.0; 3], true));
        ent.0 += 1;
        let pd = predicted_densities(&pred[w]);
        for k in 0..3 {
            ent.1[k] += per_white[w][k];
            ent.2[k] += pd[k];
        }
        ent.3 &= pred[w].is_liquid();
    }
    let full = (bin * bin) as usize;
    let liquid: Vec<f64> = bins
        .values()
        .filter(|b| b.3 && b.0 >= full)
        .map(|b| (0..3).map(|k| (b.1[k] - b.2[k]).abs() / b.0 as f64).sum::<f64>() / 3.0)
        .collect();
    let l1 = if liquid.is_empty() { f64::NAN } else { liquid.iter().sum::<f64>() / liquid.len() as f64 };

    // distance to the frozen boundary by probing a small disc of radius
    // `margin` lattice units for a liquid prediction
    let near_liquid = |w: usize| -> bool {
        let c = g.whites[w].cell;
        let (u0, v0) = (c.0 as f64 + 1.0 / 3.0, c.1 as f64 + 1.0 / 3.0);
        let steps = 8;
        (0..=steps).any(|r| {
            let rad = margin * r as f64 / steps as f64;
            (0..16).any(|k| {
                let a = 2.0 * PI * k as f64 / 16.0;
                let (x, y) = hexagon_lattice_to_unit(n, u0 + rad * a.cos(), v0 + rad * a.sin());
                eq.solve(x, y).map(|p| p.is_liquid()).unwrap_or(true)
            })
        })
    };
    let mut frozen_checked = 0;
    let mut frozen_mismatch = 0;
    for w in 0..g.nw() {
        let (k, top) = per_white[w].iter().enumerate().fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        if top <= 0.99 {
            continue;
        }
        frozen_checked += 1;
        let agrees = match pred[w] {
            BurgersPoint::Frozen(f) => facet_label(f) == [Label::A, Label::B, Label::C][k],
            _ => false,
        };
        if !agrees && !near_liquid(w) {
            frozen_mismatch += 1;
        }
    }
    Ok(DensityComparison { l1, liquid_bins: liquid.len(), frozen_checked, frozen_mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagon_boundary_heights() {
        let p = Polygon::hexagon(1.0);
        assert_eq!(p.vertex_heights().unwrap(), vec![0.0, 0.0, 0.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn center_and_corners() {
        let q = PlaneCurveQ::hexagon();
        let c = burgers_solve(&q, 0.0, 0.0).unwrap();
        let (s, t) = c.slope();
        assert!((s - 1.0 / 3.0).abs() < 1e-12 && (t - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(burgers_solve(&q, 0.95, 0.05).unwrap(), BurgersPoint::Frozen(Facet::B));
        assert_eq!(burgers_solve(&q, 0.95, 0.9).unwrap(), BurgersPoint::Frozen(Facet::A));
        assert_eq!(burgers_solve(&q, 0.05, 0.95).unwrap(), BurgersPoint::Frozen(Facet::C));
        assert_eq!(burgers_solve(&q, -0.95, -0.05).unwrap(), BurgersPoint::Frozen(Facet::B));
    }

    #[test]
    fn frozen_boundary_is_the_inscribed_ellipse() {
        let eq = Burgers::Plain(PlaneCurveQ::hexagon());
        let poly = Polygon::hexagon(1.0);
        let f = slope_field(&eq, &poly, 20).unwrap();
        let pts = frozen_boundary(&eq, &f);
        assert!(pts.len() > 20);
        for (x, y) in pts {
            assert!((x * x - x * y + y * y - 0.75).abs() < 1e-8);
        }
    }

    #[test]
    fn tangency_fit_recovers_hexagon_curve() {
        let fit = fit_tangency_curve(&Polygon::hexagon(1.0)).unwrap();
        let want = PlaneCurveQ::hexagon().normalized();
        for &((i, j), c) in &want.coeffs {
            assert!((fit.q.coeff(i, j) - c).abs() < 1e-10);
        }
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn linear_boundary_gives_linear_minimizer() {
        let poly = Polygon::hexagon(1.0);
        let (s0, t0) = (0.2, 0.5);
        let r = minimize_surface_tension(&poly, &|x, y| s0 * x + t0 * y, 8, 2000, 1e-12).unwrap();
        for (k, &h) in r.h.iter().enumerate() {
            let p = r.mesh.point(k);
            assert!((h - (s0 * p.0 + t0 * p.1)).abs() < 1e-8);
        }
        let area = 3.0;
        assert!((r.objective - area * surface_tension_honeycomb(s0, t0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn infeasible_boundary_is_rejected() {
        let poly = Polygon::hexagon(1.0);
        let r = minimize_surface_tension(&poly, &|x, _| 3.0 * x, 4, 10, 1e-9);
        assert_eq!(r.err(), Some(Error::NoSpanningSurface));
    }
}
