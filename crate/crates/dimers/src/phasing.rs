//! Kasteleyn phasings: construction, face check, and cycle signs.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::gauss::Phase;
use crate::graph::{BipartiteGraph, Face, Label, Lattice};

/// One unit phase per edge, indexed like `BipartiteGraph::edges`.
pub type Phasing = Vec<Phase>;

/// Alternating phase product around a face: `phi` on white-to-black darts,
/// `conj(phi)` on black-to-white darts.
pub fn face_phase(ph: &[Phase], f: &Face) -> Phase {
    f.darts.iter().fold(Phase::ONE, |acc, d| {
        acc * if d.from_white { ph[d.edge] } else { ph[d.edge].conj() }
    })
}

fn face_target(len: usize) -> Phase {
    if (len / 2) % 2 == 0 {
        Phase::MINUS_ONE
    } else {
        Phase::ONE
    }
}

/// True iff every bounded face of length `2k` has alternating product
/// `(-1)^(k+1)`: negative for 0 mod 4 faces, positive for 2 mod 4.
pub fn verify_phasing(g: &BipartiteGraph, ph: &[Phase]) -> bool {
    ph.len() == g.edges.len() && g.bounded_faces().all(|(_, f)| face_phase(ph, f) == face_target(f.len()))
}

/// The lattice's standard phasing: 1 on horizontal and `i` on vertical
/// square-grid edges, all +1 on the honeycomb.
pub fn canonical_phasing(g: &BipartiteGraph) -> Phasing {
    g.edges
        .iter()
        .map(|e| match e.label {
            Label::Vertical => Phase::I,
            _ => Phase::ONE,
        })
        .collect()
}

/// Canonical phasing when it satisfies the face rule (always the case for
/// simply connected lattice regions), otherwise a real sign phasing built
/// from a spanning forest.
pub fn kasteleyn_phasing(g: &BipartiteGraph) -> Phasing {
    if g.lattice != Lattice::Generic {
        let ph = canonical_phasing(g);
        if verify_phasing(g, &ph) {
            return ph;
        }
    }
    tree_phasing(g)
}

/// Spanning forest edges get +1; remaining signs are solved face by face,
/// always picking a bounded face with a single unknown edge.
pub fn tree_phasing(g: &BipartiteGraph) -> Phasing {
    let ne = g.edges.len();
    let nv = g.nw() + g.nb();
    let mut set: Vec<Option<Phase>> = vec![None; ne];
    let mut seen = vec![false; nv];
    for root in 0..nv {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for &e in &g.rotation[v] {
                let ed = &g.edges[e];
                let u = if v < g.nw() { g.black_id(ed.black) } else { ed.white };
                if !seen[u] {
                    seen[u] = true;
                    set[e] = Some(Phase::ONE);
                    q.push_back(u);
                }
            }
        }
    }
    let faces: Vec<&Face> = g.bounded_faces().map(|(_, f)| f).collect();
    let mut unknown: Vec<usize> = faces
        .iter()
        .map(|f| f.darts.iter().filter(|d| set[d.edge].is_none()).count())
        .collect();
    let mut faces_of_edge: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for (fi, f) in faces.iter().enumerate() {
        for d in &f.darts {
            faces_of_edge[d.edge].push(fi);
        }
    }
    loop {
        let Some(fi) = (0..faces.len()).find(|&i| unknown[i] == 1) else {
            match (0..ne).find(|&e| set[e].is_none()) {
                Some(e) => {
                    set[e] = Some(Phase::ONE);
                    for &fj in &faces_of_edge[e] {
                        unknown[fj] -= 1;
                    }
                    continue;
                }
                None => break,
            }
        };
        let f = faces[fi];
        let mut prod = Phase::ONE;
        let mut free = None;
        for d in &f.darts {
            match set[d.edge] {
                Some(p) => prod = prod * if d.from_white { p } else { p.conj() },
                None => free = Some(d.edge),
            }
        }
        let e = free.expect("one unknown edge");
        // real signs are self-conjugate, so dart direction does not matter
        let s = face_target(f.len()) * prod.conj();
        set[e] = Some(s);
        for &fj in &faces_of_edge[e] {
            unknown[fj] -= 1;
        }
    }
    set.into_iter().map(|p| p.unwrap_or(Phase::ONE)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleSign {
    pub sign: i32,
    /// Half the cycle length.
    pub k: usize,
    /// Vertices strictly inside the cycle.
    pub enclosed: usize,
}

impl CycleSign {
    /// The sign a Kasteleyn phasing must produce, `(-1)^(1+k+l)`.
    pub fn expected(&self) -> i32 {
        if (1 + self.k + self.enclosed) % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Alternating phase product around a simple cycle given as global vertex
/// ids, together with its half-length and the number of enclosed vertices.
pub fn cycle_sign(g: &BipartiteGraph, ph: &[Phase], cycle: &[usize]) -> Result<CycleSign> {
    let n = cycle.len();
    let nv = g.nw() + g.nb();
    if n < 4 || n % 2 == 1 {
        return Err(Error::NotACycle("length must be even and at least 4".into()));
    }
    let mut sorted = cycle.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != n || sorted.iter().any(|&v| v >= nv) {
        return Err(Error::NotACycle("vertices must be distinct and valid".into()));
    }
    let mut prod = Phase::ONE;
    for i in 0..n {
        let (u, v) = (cycle[i], cycle[(i + 1) % n]);
        let (w, b, from_white) = match (u < g.nw(), v < g.nw()) {
            (true, false) => (u, v - g.nw(), true),
            (false, true) => (v, u - g.nw(), false),
            _ => return Err(Error::NotACycle("consecutive vertices share a color".into())),
        };
        let e = g
            .edge_between(w, b)
            .ok_or_else(|| Error::NotACycle(format!("no edge between {u} and {v}")))?;
        prod = prod * if from_white { ph[e] } else { ph[e].conj() };
    }
    let sign = prod
        .sign()
        .ok_or_else(|| Error::NotACycle("alternating product is not real".into()))?;
    let poly: Vec<(f64, f64)> = cycle.iter().map(|&v| g.vertex_pos(v)).collect();
    let enclosed = (0..nv)
        .filter(|v| !cycle.contains(v))
        .filter(|&v| point_in_polygon(g.vertex_pos(v), &poly))
        .count();
    Ok(CycleSign { sign, k: n / 2, enclosed })
}

fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{honeycomb_hexagon, square_rectangle};

    #[test]
    fn all_plus_fails_on_square_face() {
        let g = square_rectangle(2, 2).unwrap();
        assert!(!verify_phasing(&g, &vec![Phase::ONE; g.edges.len()]));
        assert!(verify_phasing(&g, &canonical_phasing(&g)));
    }

    #[test]
    fn honeycomb_needs_no_signs() {
        let g = honeycomb_hexagon(2, 3, 2).unwrap();
        let ph = kasteleyn_phasing(&g);
        assert!(ph.iter().all(|&p| p == Phase::ONE));
        assert!(verify_phasing(&g, &ph));
    }

    #[test]
    fn tree_phasing_is_valid() {
        for g in [square_rectangle(4, 5).unwrap(), honeycomb_hexagon(2, 2, 3).unwrap()] {
            assert!(verify_phasing(&g, &tree_phasing(&g)));
        }
    }

    #[test]
    fn unit_face_cycle() {
        let g = square_rectangle(2, 2).unwrap();
        let ph = canonical_phasing(&g);
        // cells (0,0) (1,0) (1,1) (0,1): whites are (0,0),(1,1)
        let id = |x: i64, y: i64| {
            if let Some(w) = g.whites.iter().position(|v| v.cell == (x, y)) {
                w
            } else {
                g.nw() + g.blacks.iter().position(|v| v.cell == (x, y)).unwrap()
            }
        };
        let c = cycle_sign(&g, &ph, &[id(0, 0), id(1, 0), id(1, 1), id(0, 1)]).unwrap();
        assert_eq!((c.sign, c.k, c.enclosed), (-1, 2, 0));
        assert!(cycle_sign(&g, &ph, &[id(0, 0), id(1, 1), id(1, 0), id(0, 1)]).is_err());
    }
}
