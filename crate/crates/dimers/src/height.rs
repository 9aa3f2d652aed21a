//! Matchings, flows, height functions, tileability and face flips.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Face, Lattice};

/// A perfect matching, stored as the matched edge at each white vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    pub white_edge: Vec<usize>,
}

impl Matching {
    /// Checks that `edges` is a perfect matching of `g`.
    pub fn from_edges(g: &BipartiteGraph, edges: &[usize]) -> Result<Matching> {
        if !g.is_balanced() {
            return Err(Error::NotPerfect("graph is unbalanced".into()));
        }
        let mut we = vec![usize::MAX; g.nw()];
        let mut bseen = vec![false; g.nb()];
        for &e in edges {
            let ed = g.edges.get(e).ok_or_else(|| Error::NotPerfect(format!("edge {e} out of range")))?;
            if we[ed.white] != usize::MAX || bseen[ed.black] {
                return Err(Error::NotPerfect(format!("vertex covered twice by edge {e}")));
            }
            we[ed.white] = e;
            bseen[ed.black] = true;
        }
        if let Some(w) = we.iter().position(|&e| e == usize::MAX) {
            return Err(Error::NotPerfect(format!("white {w} uncovered")));
        }
        Ok(Matching { white_edge: we })
    }

    pub fn contains(&self, g: &BipartiteGraph, e: usize) -> bool {
        self.white_edge[g.edges[e].white] == e
    }

    pub fn edges(&self) -> Vec<usize> {
        let mut v = self.white_edge.clone();
        v.sort_unstable();
        v
    }

    pub fn weight(&self, g: &BipartiteGraph) -> BigRational {
        self.white_edge.iter().fold(BigRational::one(), |acc, &e| acc * &g.edges[e].weight)
    }
}

/// Edge flow measured from white to black.
pub type Flow = Vec<BigRational>;

/// Unit flow on matched edges.
pub fn matching_flow(g: &BipartiteGraph, m: &Matching) -> Flow {
    let mut f = vec![BigRational::zero(); g.edges.len()];
    for &e in &m.white_edge {
        f[e] = BigRational::one();
    }
    f
}

/// Net outflow at each vertex (whites first, then blacks).
pub fn divergence(g: &BipartiteGraph, flow: &[BigRational]) -> Vec<BigRational> {
    let mut d = vec![BigRational::zero(); g.nw() + g.nb()];
    for (e, ed) in g.edges.iter().enumerate() {
        d[ed.white] += &flow[e];
        d[g.nw() + ed.black] -= &flow[e];
    }
    d
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseFlow {
    Matching(Matching),
    /// `1/deg` of the lattice on every edge: 1/3 on the honeycomb, 1/4 on
    /// the square grid.
    Uniform,
    Explicit(Flow),
}

impl BaseFlow {
    fn flow(&self, g: &BipartiteGraph) -> Result<Flow> {
        Ok(match self {
            BaseFlow::Matching(m) => matching_flow(g, m),
            BaseFlow::Uniform => {
                let d: i64 = match g.lattice {
                    Lattice::Honeycomb => 3,
                    Lattice::Square => 4,
                    Lattice::Generic => {
                        return Err(Error::Malformed("uniform base flow needs a lattice graph".into()))
                    }
                };
                vec![BigRational::new(1.into(), d.into()); g.edges.len()]
            }
            BaseFlow::Explicit(f) => {
                if f.len() != g.edges.len() {
                    return Err(Error::Malformed("base flow length".into()));
                }
                f.clone()
            }
        })
    }
}

/// Heights on faces, stored multiplied by `scale` so that they are integers.
/// Faces the height is not defined on hold `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightFunction {
    pub values: Vec<Option<i64>>,
    pub base_face: usize,
    pub scale: i64,
}

impl HeightFunction {
    pub fn get(&self, f: usize) -> Option<BigRational> {
        self.values[f].map(|v| BigRational::new(v.into(), self.scale.into()))
    }
}

/// Height of `m` relative to a base flow: crossing a dart from the face on
/// its left to the face on its right adds the value of `omega_m - omega_0`
/// on the white-to-black orientation (negated for black-to-white darts).
///
/// When the base flow has the divergence of a matching at every vertex, the
/// height lives on every face including the outer one and `f0` defaults to
/// the outer face; otherwise it lives on bounded faces only.
pub fn height_function(g: &BipartiteGraph, m: &Matching, base: &BaseFlow, f0: Option<usize>) -> Result<HeightFunction> {
    let w0 = base.flow(g)?;
    let wm = matching_flow(g, m);
    let diff: Vec<BigRational> = wm.iter().zip(&w0).map(|(a, b)| a - b).collect();
    let scale = diff.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scaled: Vec<i64> = diff
        .iter()
        .map(|x| (x * BigRational::from_integer(scale.clone())).to_integer().to_i64().unwrap())
        .collect();
    let nw = g.nw();
    let div0 = divergence(g, &w0);
    let exact = div0.iter().enumerate().all(|(v, d)| {
        let want: i64 = if v < nw { 1 } else { -1 };
        *d == BigRational::from_integer(want.into())
    });
    let allowed = |f: &Face| exact || f.is_bounded();
    let base_face = match f0 {
        Some(f) => {
            if f >= g.faces.len() || !allowed(&g.faces[f]) {
                return Err(Error::Malformed(format!("face {f} cannot carry a height")));
            }
            f
        }
        None => {
            let pick = if exact {
                (0..g.faces.len()).min_by(|&a, &b| g.faces[a].area.partial_cmp(&g.faces[b].area).unwrap())
            } else {
                g.bounded_faces().map(|(i, _)| i).next()
            };
            pick.ok_or_else(|| Error::Malformed("graph has no faces".into()))?
        }
    };
    let ef = g.edge_faces();
    let mut values: Vec<Option<i64>> = vec![None; g.faces.len()];
    values[base_face] = Some(0);
    let mut q = VecDeque::from([base_face]);
    while let Some(f) = q.pop_front() {
        let h = values[f].unwrap();
        for d in &g.faces[f].darts {
            let other = ef[d.edge][if d.from_white { 1 } else { 0 }];
            if !allowed(&g.faces[other]) {
                continue;
            }
            let step = if d.from_white { scaled[d.edge] } else { -scaled[d.edge] };
            let hv = h + step;
            match values[other] {
                None => {
                    values[other] = Some(hv);
                    q.push_back(other);
                }
                Some(x) if x != hv => {
                    return Err(Error::NotSingleValued(format!("face {other} reached with heights {x} and {hv}")));
                }
                _ => {}
            }
        }
    }
    let scale = scale.to_i64().unwrap();
    Ok(HeightFunction { values, base_face, scale })
}

/// Homology class of a torus matching: the summed magnetic exponents of its
/// edges, `(h_x, h_y)`.
pub fn torus_periods(g: &BipartiteGraph, m: &Matching) -> (i64, i64) {
    m.white_edge.iter().fold((0, 0), |(x, y), &e| {
        let w = g.edges[e].wrap;
        (x + w.0 as i64, y + w.1 as i64)
    })
}

/// Maximum matching by Hopcroft-Karp; returns the matched edge per white.
pub fn maximum_matching(g: &BipartiteGraph) -> Vec<Option<usize>> {
    let (nw, nb) = (g.nw(), g.nb());
    let mut mw: Vec<Option<usize>> = vec![None; nw];
    let mut mb: Vec<Option<usize>> = vec![None; nb];
    let inf = usize::MAX;
    loop {
        let mut dist = vec![inf; nw];
        let mut q = VecDeque::new();
        for w in 0..nw {
            if mw[w].is_none() {
                dist[w] = 0;
                q.push_back(w);
            }
        }
        let mut found = false;
        while let Some(w) = q.pop_front() {
            for &e in g.white_edges(w) {
                let b = g.edges[e].black;
                match mb[b] {
                    None => found = true,
                    Some(e2) => {
                        let w2 = g.edges[e2].white;
                        if dist[w2] == inf {
                            dist[w2] = dist[w] + 1;
                            q.push_back(w2);
                        }
                    }
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; nw];
        for w in 0..nw {
            if mw[w].is_none() {
                augment(g, w, &mut dist, &mut it, &mut mw, &mut mb);
            }
        }
    }
    mw
}

fn augment(
    g: &BipartiteGraph,
    w: usize,
    dist: &mut [usize],
    it: &mut [usize],
    mw: &mut [Option<usize>],
    mb: &mut [Option<usize>],
) -> bool {
    let adj = g.white_edges(w);
    while it[w] < adj.len() {
        let e = adj[it[w]];
        it[w] += 1;
        let b = g.edges[e].black;
        let ok = match mb[b] {
            None => true,
            Some(e2) => {
                let w2 = g.edges[e2].white;
                dist[w2] == dist[w] + 1 && augment(g, w2, dist, it, mw, mb)
            }
        };
        if ok {
            mw[w] = Some(e);
            mb[b] = Some(e);
            return true;
        }
    }
    dist[w] = usize::MAX;
    false
}

/// Whether the graph has a perfect matching, with a witness when it does.
pub fn tileable(g: &BipartiteGraph) -> (bool, Option<Matching>) {
    if !g.is_balanced() {
        return (false, None);
    }
    let mw = maximum_matching(g);
    if mw.iter().all(|e| e.is_some()) {
        let m = Matching { white_edge: mw.into_iter().map(|e| e.unwrap()).collect() };
        (true, Some(m))
    } else {
        (false, None)
    }
}

/// Edges of a face, split into the two alternating classes when the face
/// is a simple even cycle.
fn face_classes(g: &BipartiteGraph, f: &Face) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut verts: Vec<usize> = f.darts.iter().map(|d| g.dart_tail(*d)).collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != f.darts.len() || f.darts.len() % 2 == 1 {
        return None;
    }
    let even = f.darts.iter().step_by(2).map(|d| d.edge).collect();
    let odd = f.darts.iter().skip(1).step_by(2).map(|d| d.edge).collect();
    Some((even, odd))
}

/// Exchanges matched and unmatched edges around an alternating face.
pub fn face_flip(g: &BipartiteGraph, m: &Matching, face: usize) -> Result<Matching> {
    let f = g.faces.get(face).ok_or(Error::FlipUnavailable)?;
    if !f.is_bounded() {
        return Err(Error::FlipUnavailable);
    }
    let (even, odd) = face_classes(g, f).ok_or(Error::FlipUnavailable)?;
    let into = if even.iter().all(|&e| m.contains(g, e)) {
        odd
    } else if odd.iter().all(|&e| m.contains(g, e)) {
        even
    } else {
        return Err(Error::FlipUnavailable);
    };
    let mut out = m.clone();
    for e in into {
        out.white_edge[g.edges[e].white] = e;
    }
    Ok(out)
}

/// Flip proposals on uniformly chosen bounded faces with Metropolis
/// acceptance `min(1, w(new)/w(old))`.
pub struct Glauber<'a> {
    g: &'a BipartiteGraph,
    faces: Vec<(Vec<usize>, Vec<usize>)>,
    weights: Vec<f64>,
    pub matching: Matching,
    black_edge: Vec<usize>,
    rng: ChaCha8Rng,
}

impl<'a> Glauber<'a> {
    pub fn new(g: &'a BipartiteGraph, m0: Matching, seed: u64) -> Self {
        let faces = g.bounded_faces().filter_map(|(_, f)| face_classes(g, f)).collect();
        let weights = g.edges.iter().map(|e| e.weight.to_f64().unwrap()).collect();
        let mut black_edge = vec![0; g.nb()];
        for &e in &m0.white_edge {
            black_edge[g.edges[e].black] = e;
        }
        Glauber { g, faces, weights, matching: m0, black_edge, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    fn matched(&self, e: usize) -> bool {
        self.matching.white_edge[self.g.edges[e].white] == e
    }

    /// One proposal; returns whether a flip happened.
    pub fn step(&mut self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let i = self.rng.random_range(0..self.faces.len());
        let (even, odd) = &self.faces[i];
        let (from, to) = if even.iter().all(|&e| self.matched(e)) {
            (even, odd)
        } else if odd.iter().all(|&e| self.matched(e)) {
            (odd, even)
        } else {
            return false;
        };
        let ratio: f64 = to.iter().map(|&e| self.weights[e]).product::<f64>()
            / from.iter().map(|&e| self.weights[e]).product::<f64>();
        let u: f64 = self.rng.random();
        if u >= ratio {
            return false;
        }
        for &e in to.iter() {
            let ed = &self.g.edges[e];
            self.matching.white_edge[ed.white] = e;
            self.black_edge[ed.black] = e;
        }
        true
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Default burn-in: `10 |faces|` sweeps of `|faces|` proposals each.
    pub fn burn_in(&mut self) {
        let n = 10 * self.faces.len() as u64 * self.faces.len().max(1) as u64;
        self.run(n);
    }
}

pub fn glauber_chain(g: &BipartiteGraph, m0: &Matching, steps: u64, seed: u64) -> Matching {
    let mut ch = Glauber::new(g, m0.clone(), seed);
    ch.run(steps);
    ch.matching
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{honeycomb_hexagon, honeycomb_torus, square_rectangle};
    use crate::oracle::graph_matchings;

    #[test]
    fn domino_heights_step_by_one_or_three() {
        let g = square_rectangle(4, 4).unwrap();
        let (_, m) = tileable(&g);
        let m = m.unwrap();
        let h = height_function(&g, &m, &BaseFlow::Uniform, None).unwrap();
        assert_eq!(h.scale, 4);
        let ef = g.edge_faces();
        for (e, sides) in ef.iter().enumerate() {
            let (a, b) = (h.values[sides[0]], h.values[sides[1]]);
            if let (Some(a), Some(b)) = (a, b) {
                let want = if m.contains(&g, e) { 3 } else { 1 };
                assert_eq!((a - b).abs(), want);
            }
        }
    }

    #[test]
    fn same_matching_zero_height() {
        let g = honeycomb_hexagon(2, 2, 2).unwrap();
        let m = tileable(&g).1.unwrap();
        let h = height_function(&g, &m, &BaseFlow::Matching(m.clone()), None).unwrap();
        assert!(h.values.iter().all(|v| *v == Some(0)));
    }

    #[test]
    fn flips_are_involutions() {
        let g = honeycomb_hexagon(1, 1, 1).unwrap();
        let ms = graph_matchings(&g);
        let m = Matching::from_edges(&g, &ms[0]).unwrap();
        let (f, _) = g.bounded_faces().next().unwrap();
        let m2 = face_flip(&g, &m, f).unwrap();
        assert_ne!(m, m2);
        assert_eq!(face_flip(&g, &m2, f).unwrap(), m);
    }

    #[test]
    fn corner_board_untileable() {
        let cells: Vec<(i64, i64)> = (0..8)
            .flat_map(|y| (0..8).map(move |x| (x, y)))
            .filter(|&c| c != (0, 0) && c != (7, 7))
            .collect();
        let g = crate::graph::square_cells(&cells).unwrap();
        assert!(!tileable(&g).0);
        assert!(tileable(&square_rectangle(5, 4).unwrap()).0);
    }

    #[test]
    fn torus_flat_periods() {
        let g = honeycomb_torus(3).unwrap();
        let bs: Vec<usize> = (0..g.edges.len()).filter(|&e| g.edges[e].label == crate::graph::Label::B).collect();
        let m = Matching::from_edges(&g, &bs).unwrap();
        assert_eq!(torus_periods(&g, &m), (3, 0));
        assert!(matches!(
            height_function(&g, &m, &BaseFlow::Uniform, None),
            Err(Error::NotSingleValued(_))
        ));
    }
}
