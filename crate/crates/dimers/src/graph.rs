//! Embedded bipartite graphs: finite lattice regions and toroidal
//! fundamental domains, with rotation systems and faces.

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    Square,
    Honeycomb,
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

/// Direction class of an edge. Square grids use horizontal/vertical,
/// honeycomb graphs use the three lozenge types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Horizontal,
    Vertical,
    A,
    B,
    C,
    Other,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Horizontal => "horizontal",
            Label::Vertical => "vertical",
            Label::A => "a",
            Label::B => "b",
            Label::C => "c",
            Label::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        Some(match s {
            "horizontal" | "h" => Label::Horizontal,
            "vertical" | "v" => Label::Vertical,
            "a" => Label::A,
            "b" => Label::B,
            "c" => Label::C,
            "other" => Label::Other,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub pos: (f64, f64),
    /// Lattice label of the cell the vertex stands for.
    pub cell: (i64, i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub white: usize,
    pub black: usize,
    pub weight: BigRational,
    pub label: Label,
    /// Exponent of the magnetic monomial `z^wx w^wy` carried by the edge on
    /// a torus. Geometrically the black end sits at its stored position
    /// shifted by `-wx * p1 - wy * p2`.
    pub wrap: (i32, i32),
}

/// One oriented traversal of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dart {
    pub edge: usize,
    pub from_white: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub darts: Vec<Dart>,
    /// Signed area of the traced polygon; positive for bounded faces.
    pub area: f64,
    pub centroid: (f64, f64),
}

impl Face {
    pub fn is_bounded(&self) -> bool {
        self.area > 1e-9
    }

    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodicity {
    pub p1: (f64, f64),
    pub p2: (f64, f64),
    /// Side of the fundamental domain in lattice cells.
    pub l: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    pub lattice: Lattice,
    pub whites: Vec<Vertex>,
    pub blacks: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Edge ids around each vertex in counterclockwise order. Whites come
    /// first, blacks are offset by `whites.len()`.
    pub rotation: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
    pub periodic: Option<Periodicity>,
}

impl BipartiteGraph {
    pub fn new(
        lattice: Lattice,
        whites: Vec<Vertex>,
        blacks: Vec<Vertex>,
        edges: Vec<Edge>,
        periodic: Option<Periodicity>,
    ) -> Result<Self> {
        for e in &edges {
            if e.white >= whites.len() || e.black >= blacks.len() {
                return Err(Error::Malformed("edge endpoint out of range".into()));
            }
            if !e.weight.is_positive() {
                return Err(Error::Malformed("edge weights must be positive".into()));
            }
        }
        let mut g = BipartiteGraph {
            lattice,
            whites,
            blacks,
            edges,
            rotation: Vec::new(),
            faces: Vec::new(),
            periodic,
        };
        g.rotation = g.rotation_system();
        g.faces = g.trace_faces();
        Ok(g)
    }

    pub fn nw(&self) -> usize {
        self.whites.len()
    }

    pub fn nb(&self) -> usize {
        self.blacks.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.nw() == self.nb()
    }

    pub fn is_torus(&self) -> bool {
        self.periodic.is_some()
    }

    /// Global vertex id of a black vertex.
    pub fn black_id(&self, b: usize) -> usize {
        self.nw() + b
    }

    /// Position of the black end of `e` as seen from its white end.
    pub fn black_pos_lifted(&self, e: usize) -> (f64, f64) {
        let ed = &self.edges[e];
        let (bx, by) = self.blacks[ed.black].pos;
        match &self.periodic {
            Some(p) => (
                bx - ed.wrap.0 as f64 * p.p1.0 - ed.wrap.1 as f64 * p.p2.0,
                by - ed.wrap.0 as f64 * p.p1.1 - ed.wrap.1 as f64 * p.p2.1,
            ),
            None => (bx, by),
        }
    }

    /// Displacement from the tail to the head of a dart.
    pub fn dart_vector(&self, d: Dart) -> (f64, f64) {
        let (wx, wy) = self.whites[self.edges[d.edge].white].pos;
        let (bx, by) = self.black_pos_lifted(d.edge);
        if d.from_white {
            (bx - wx, by - wy)
        } else {
            (wx - bx, wy - by)
        }
    }

    pub fn dart_tail(&self, d: Dart) -> usize {
        let e = &self.edges[d.edge];
        if d.from_white {
            e.white
        } else {
            self.black_id(e.black)
        }
    }

    pub fn dart_head(&self, d: Dart) -> usize {
        let e = &self.edges[d.edge];
        if d.from_white {
            self.black_id(e.black)
        } else {
            e.white
        }
    }

    fn rotation_system(&self) -> Vec<Vec<usize>> {
        let nv = self.nw() + self.nb();
        let mut rot: Vec<Vec<(f64, usize)>> = vec![Vec::new(); nv];
        for (i, e) in self.edges.iter().enumerate() {
            let (dx, dy) = self.dart_vector(Dart { edge: i, from_white: true });
            rot[e.white].push((dy.atan2(dx), i));
            rot[self.black_id(e.black)].push(((-dy).atan2(-dx), i));
        }
        rot.into_iter()
            .map(|mut v| {
                v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                v.into_iter().map(|(_, e)| e).collect()
            })
            .collect()
    }

    /// Successor of a dart along its face: at the head, take the edge just
    /// clockwise of the one we arrived on. Faces then lie to the left.
    pub fn next_dart(&self, d: Dart) -> Dart {
        let v = self.dart_head(d);
        let rot = &self.rotation[v];
        let k = rot.iter().position(|&e| e == d.edge).expect("edge in rotation");
        let deg = rot.len();
        let e = rot[(k + deg - 1) % deg];
        let from_white = v < self.nw();
        Dart { edge: e, from_white }
    }

    fn trace_faces(&self) -> Vec<Face> {
        let ne = self.edges.len();
        let mut seen = vec![[false; 2]; ne];
        let mut faces = Vec::new();
        for e in 0..ne {
            for side in 0..2 {
                if seen[e][side] {
                    continue;
                }
                let start = Dart { edge: e, from_white: side == 0 };
                let mut darts = Vec::new();
                let mut d = start;
                loop {
                    seen[d.edge][if d.from_white { 0 } else { 1 }] = true;
                    darts.push(d);
                    d = self.next_dart(d);
                    if d == start {
                        break;
                    }
                }
                let (mut x, mut y) = self.vertex_pos(self.dart_tail(start));
                let (mut area2, mut cx, mut cy) = (0.0, 0.0, 0.0);
                for &d in &darts {
                    let (dx, dy) = self.dart_vector(d);
                    area2 += x * (y + dy) - (x + dx) * y;
                    cx += x;
                    cy += y;
                    x += dx;
                    y += dy;
                }
                let n = darts.len() as f64;
                faces.push(Face { darts, area: area2 / 2.0, centroid: (cx / n, cy / n) });
            }
        }
        faces
    }

    pub fn vertex_pos(&self, v: usize) -> (f64, f64) {
        if v < self.nw() {
            self.whites[v].pos
        } else {
            self.blacks[v - self.nw()].pos
        }
    }

    pub fn bounded_faces(&self) -> impl Iterator<Item = (usize, &Face)> {
        self.faces.iter().enumerate().filter(|(_, f)| f.is_bounded())
    }

    /// Edges incident to a white vertex.
    pub fn white_edges(&self, w: usize) -> &[usize] {
        &self.rotation[w]
    }

    pub fn black_edges(&self, b: usize) -> &[usize] {
        &self.rotation[self.nw() + b]
    }

    /// Number of connected components, isolated vertices included.
    pub fn components(&self) -> usize {
        let nv = self.nw() + self.nb();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.white);
            let b = find(&mut parent, self.nw() + e.black);
            parent[a] = b;
        }
        (0..nv).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// V - E + F with every traced orbit counted as a face.
    pub fn euler_characteristic(&self) -> i64 {
        (self.nw() + self.nb()) as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// For each face, the map from edge id to the position of its dart(s).
    pub fn edge_faces(&self) -> Vec<[usize; 2]> {
        let mut out = vec![[usize::MAX; 2]; self.edges.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for d in &f.darts {
                out[d.edge][if d.from_white { 0 } else { 1 }] = fi;
            }
        }
        out
    }

    pub fn with_weights(&self, weights: &[BigRational]) -> Result<BipartiteGraph> {
        if weights.len() != self.edges.len() || weights.iter().any(|w| !w.is_positive()) {
            return Err(Error::Malformed("weight vector does not fit the graph".into()));
        }
        let mut g = self.clone();
        for (e, w) in g.edges.iter_mut().zip(weights) {
            e.weight = w.clone();
        }
        Ok(g)
    }

    pub fn weights(&self) -> Vec<BigRational> {
        self.edges.iter().map(|e| e.weight.clone()).collect()
    }

    pub fn edge_between(&self, w: usize, b: usize) -> Option<usize> {
        self.rotation[w].iter().copied().find(|&e| self.edges[e].black == b)
    }
}

fn unit() -> BigRational {
    BigRational::one()
}

/// Square grid on the given cells; a cell `(x, y)` is white when `x + y`
/// is even. Neighbouring cells are joined by horizontal or vertical edges.
pub fn square_cells(cells: &[(i64, i64)]) -> Result<BipartiteGraph> {
    let mut wi: HashMap<(i64, i64), usize> = HashMap::new();
    let mut bi: HashMap<(i64, i64), usize> = HashMap::new();
    let (mut whites, mut blacks) = (Vec::new(), Vec::new());
    let mut sorted: Vec<(i64, i64)> = cells.to_vec();
    sorted.sort_by_key(|&(x, y)| (y, x));
    sorted.dedup();
    for &(x, y) in &sorted {
        let v = Vertex { pos: (x as f64, y as f64), cell: (x, y) };
        if (x + y).rem_euclid(2) == 0 {
            wi.insert((x, y), whites.len());
            whites.push(v);
        } else {
            bi.insert((x, y), blacks.len());
            blacks.push(v);
        }
    }
    let mut edges = Vec::new();
    for (w, v) in whites.iter().enumerate() {
        let (x, y) = v.cell;
        for (dx, dy) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            if let Some(&b) = bi.get(&(x + dx, y + dy)) {
                let label = if dy == 0 { Label::Horizontal } else { Label::Vertical };
                edges.push(Edge { white: w, black: b, weight: unit(), label, wrap: (0, 0) });
            }
        }
    }
    BipartiteGraph::new(Lattice::Square, whites, blacks, edges, None)
}

pub fn square_rectangle(m: usize, n: usize) -> Result<BipartiteGraph> {
    let cells: Vec<(i64, i64)> =
        (0..n as i64).flat_map(|y| (0..m as i64).map(move |x| (x, y))).collect();
    square_cells(&cells)
}

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

fn lattice_point(u: f64, v: f64) -> (f64, f64) {
    (u + v / 2.0, v * SQRT3_2)
}

/// A honeycomb cell `(i, j, k)`: `k = 0` is the upward triangle with
/// corners at lattice points (i,j), (i+1,j), (i,j+1) and is white; `k = 1`
/// is the downward triangle (i+1,j), (i+1,j+1), (i,j+1) and is black.
pub type TriCell = (i64, i64, u8);

pub fn triangle_centroid(c: TriCell) -> (f64, f64) {
    let t = if c.2 == 0 { 1.0 / 3.0 } else { 2.0 / 3.0 };
    lattice_point(c.0 as f64 + t, c.1 as f64 + t)
}

/// Honeycomb graph on a set of triangles. The edge joining Up(i,j) to
/// Down(i,j) is type a, to Down(i-1,j) type b, to Down(i,j-1) type c.
pub fn honeycomb_cells(cells: &[TriCell]) -> Result<BipartiteGraph> {
    let mut sorted = cells.to_vec();
    sorted.sort_by_key(|&(i, j, k)| (j, i, k));
    sorted.dedup();
    let (mut whites, mut blacks) = (Vec::new(), Vec::new());
    let mut bi: HashMap<(i64, i64), usize> = HashMap::new();
    for &c in &sorted {
        let v = Vertex { pos: triangle_centroid(c), cell: (c.0, c.1) };
        if c.2 == 0 {
            whites.push(v);
        } else {
            bi.insert((c.0, c.1), blacks.len());
            blacks.push(v);
        }
    }
    let mut edges = Vec::new();
    for (w, v) in whites.iter().enumerate() {
        let (i, j) = v.cell;
        for (label, key) in [(Label::A, (i, j)), (Label::B, (i - 1, j)), (Label::C, (i, j - 1))] {
            if let Some(&b) = bi.get(&key) {
                edges.push(Edge { white: w, black: b, weight: unit(), label, wrap: (0, 0) });
            }
        }
    }
    BipartiteGraph::new(Lattice::Honeycomb, whites, blacks, edges, None)
}

/// Triangles of the hexagon with sides `a, b, c, a, b, c`.
pub fn hexagon_triangles(a: usize, b: usize, c: usize) -> Vec<TriCell> {
    let (a, b, c) = (a as i64, b as i64, c as i64);
    let inside = |u: i64, v: i64| v >= 0 && v <= b + c && u >= -c && u <= a && u + v >= 0 && u + v <= a + b;
    let mut out = Vec::new();
    for j in -1..=b + c + 1 {
        for i in -c - 1..=a + 1 {
            if inside(i, j) && inside(i + 1, j) && inside(i, j + 1) {
                out.push((i, j, 0));
            }
            if inside(i + 1, j) && inside(i + 1, j + 1) && inside(i, j + 1) {
                out.push((i, j, 1));
            }
        }
    }
    out
}

pub fn honeycomb_hexagon(a: usize, b: usize, c: usize) -> Result<BipartiteGraph> {
    honeycomb_cells(&hexagon_triangles(a, b, c))
}

/// Honeycomb torus with an `l x l` fundamental domain of up/down pairs.
pub fn honeycomb_torus(l: usize) -> Result<BipartiteGraph> {
    if l == 0 {
        return Err(Error::Malformed("torus side must be positive".into()));
    }
    let li = l as i64;
    let mut whites = Vec::new();
    let mut blacks = Vec::new();
    for j in 0..li {
        for i in 0..li {
            whites.push(Vertex { pos: triangle_centroid((i, j, 0)), cell: (i, j) });
            blacks.push(Vertex { pos: triangle_centroid((i, j, 1)), cell: (i, j) });
        }
    }
    let idx = |i: i64, j: i64| (j.rem_euclid(li) * li + i.rem_euclid(li)) as usize;
    let mut edges = Vec::new();
    for j in 0..li {
        for i in 0..li {
            let w = idx(i, j);
            edges.push(Edge { white: w, black: idx(i, j), weight: unit(), label: Label::A, wrap: (0, 0) });
            let wb = if i == 0 { (1, 0) } else { (0, 0) };
            edges.push(Edge { white: w, black: idx(i - 1, j), weight: unit(), label: Label::B, wrap: wb });
            let wc = if j == 0 { (0, 1) } else { (0, 0) };
            edges.push(Edge { white: w, black: idx(i, j - 1), weight: unit(), label: Label::C, wrap: wc });
        }
    }
    let p1 = lattice_point(l as f64, 0.0);
    let p2 = lattice_point(0.0, l as f64);
    BipartiteGraph::new(Lattice::Honeycomb, whites, blacks, edges, Some(Periodicity { p1, p2, l }))
}

/// Square-grid torus with an `l x l` fundamental domain (`l` even).
pub fn square_torus(l: usize) -> Result<BipartiteGraph> {
    if l == 0 || l % 2 == 1 {
        return Err(Error::Malformed("square torus side must be even and positive".into()));
    }
    let li = l as i64;
    let mut whites = Vec::new();
    let mut blacks = Vec::new();
    let mut wi = HashMap::new();
    let mut bi = HashMap::new();
    for y in 0..li {
        for x in 0..li {
            let v = Vertex { pos: (x as f64, y as f64), cell: (x, y) };
            if (x + y) % 2 == 0 {
                wi.insert((x, y), whites.len());
                whites.push(v);
            } else {
                bi.insert((x, y), blacks.len());
                blacks.push(v);
            }
        }
    }
    let mut edges = Vec::new();
    for (w, v) in whites.iter().enumerate() {
        let (x, y) = v.cell;
        for (dx, dy) in [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            let b = bi[&(nx.rem_euclid(li), ny.rem_euclid(li))];
            let wrap = (-(nx.div_euclid(li)) as i32, -(ny.div_euclid(li)) as i32);
            let label = if dy == 0 { Label::Horizontal } else { Label::Vertical };
            edges.push(Edge { white: w, black: b, weight: unit(), label, wrap });
        }
    }
    let per = Periodicity { p1: (l as f64, 0.0), p2: (0.0, l as f64), l };
    BipartiteGraph::new(Lattice::Square, whites, blacks, edges, Some(per))
}

/// Alternating product of weights around a face: weights of white-to-black
/// darts divided by weights of black-to-white darts.
pub fn face_weight_product(weights: &[BigRational], f: &Face) -> BigRational {
    let mut p = BigRational::one();
    for d in &f.darts {
        if d.from_white {
            p *= &weights[d.edge];
        } else {
            p /= &weights[d.edge];
        }
    }
    p
}

/// Two weight functions are gauge equivalent on a finite planar graph iff
/// every bounded face has the same alternating product under both.
pub fn gauge_equivalent(g: &BipartiteGraph, w1: &[BigRational], w2: &[BigRational]) -> bool {
    if w1.len() != g.edges.len() || w2.len() != g.edges.len() {
        return false;
    }
    g.bounded_faces()
        .all(|(_, f)| face_weight_product(w1, f) == face_weight_product(w2, f))
}

/// Scales every edge at one vertex (global id) by `lambda`.
pub fn gauge_transform(g: &BipartiteGraph, weights: &[BigRational], v: usize, lambda: &BigRational) -> Vec<BigRational> {
    let mut out = weights.to_vec();
    for &e in &g.rotation[v] {
        out[e] *= lambda;
    }
    out
}

impl BipartiteGraph {
    /// Total face degree equals 2|E|.
    pub fn check_faces(&self) -> bool {
        let total: usize = self.faces.iter().map(|f| f.darts.len()).sum();
        total == 2 * self.edges.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_square() {
        let g = square_rectangle(2, 2).unwrap();
        assert_eq!(g.nw() + g.nb(), 4);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.bounded_faces().count(), 1);
        assert_eq!(g.euler_characteristic(), 2);
    }

    #[test]
    fn honeycomb_unit_torus() {
        let g = honeycomb_torus(1).unwrap();
        assert_eq!((g.nw(), g.nb(), g.edges.len()), (1, 1, 3));
        let labels: Vec<Label> = g.edges.iter().map(|e| e.label).collect();
        assert_eq!(labels, vec![Label::A, Label::B, Label::C]);
        assert_eq!(g.euler_characteristic(), 0);
        assert!(g.faces.iter().all(|f| f.is_bounded() && f.len() == 6));
    }

    #[test]
    fn hexagon_is_balanced() {
        for (a, b, c) in [(1, 1, 1), (2, 3, 4), (3, 1, 2)] {
            let g = honeycomb_hexagon(a, b, c).unwrap();
            assert_eq!(g.nw(), a * b + b * c + c * a);
            assert_eq!(g.nb(), g.nw());
            assert_eq!(g.euler_characteristic(), 2);
            assert!(g.bounded_faces().all(|(_, f)| f.len() == 6));
        }
    }

    #[test]
    fn mutilated_board() {
        let cells: Vec<(i64, i64)> = (0..8)
            .flat_map(|y| (0..8).map(move |x| (x, y)))
            .filter(|&c| c != (0, 0) && c != (7, 7))
            .collect();
        let g = square_cells(&cells).unwrap();
        assert_eq!((g.nw(), g.nb()), (30, 32));
        assert!(!g.is_balanced());
    }

    #[test]
    fn square_torus_faces() {
        let g = square_torus(4).unwrap();
        assert_eq!(g.euler_characteristic(), 0);
        assert_eq!(g.faces.len(), 16);
        assert!(g.faces.iter().all(|f| f.len() == 4 && (f.area - 1.0).abs() < 1e-9));
    }
}
