//! Kasteleyn matrices, partition functions and local edge statistics.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gauss::{GaussRat, Phase};
use crate::graph::BipartiteGraph;
use crate::linalg::{det_gauss_rat, solve_gauss_rat};
use crate::phasing::kasteleyn_phasing;

/// Rows are black vertices, columns white vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct KasteleynMatrix {
    pub nb: usize,
    pub nw: usize,
    /// Sparse rows: `(white, entry)` pairs.
    pub rows: Vec<Vec<(usize, GaussRat)>>,
}

impl KasteleynMatrix {
    pub fn new(g: &BipartiteGraph, ph: &[Phase]) -> Self {
        let mut rows: Vec<Vec<(usize, GaussRat)>> = vec![Vec::new(); g.nb()];
        for (i, e) in g.edges.iter().enumerate() {
            let v = ph[i].times(&e.weight);
            let row = &mut rows[e.black];
            match row.iter_mut().find(|(w, _)| *w == e.white) {
                Some((_, x)) => *x = &*x + &v,
                None => row.push((e.white, v)),
            }
        }
        for r in rows.iter_mut() {
            r.sort_by_key(|(w, _)| *w);
        }
        KasteleynMatrix { nb: g.nb(), nw: g.nw(), rows }
    }

    pub fn entry(&self, b: usize, w: usize) -> GaussRat {
        self.rows[b]
            .iter()
            .find(|(x, _)| *x == w)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(GaussRat::zero)
    }

    pub fn dense(&self) -> Vec<Vec<GaussRat>> {
        let mut m = vec![vec![GaussRat::zero(); self.nw]; self.nb];
        for (b, r) in self.rows.iter().enumerate() {
            for (w, v) in r {
                m[b][*w] = v.clone();
            }
        }
        m
    }

    pub fn det(&self) -> GaussRat {
        if self.nb != self.nw {
            return GaussRat::zero();
        }
        det_gauss_rat(&self.dense())
    }
}

/// `|det K|` for a valid phasing; zero for unbalanced graphs.
pub fn partition_function(g: &BipartiteGraph, ph: &[Phase]) -> Result<BigRational> {
    if !g.is_balanced() {
        return Ok(BigRational::zero());
    }
    KasteleynMatrix::new(g, ph).det().modulus().ok_or(Error::BadPhasing)
}

/// Partition function with the graph's own Kasteleyn phasing.
pub fn count(g: &BipartiteGraph) -> Result<BigRational> {
    partition_function(g, &kasteleyn_phasing(g))
}

/// Product formula for domino tilings of an `m x n` rectangle:
/// the product of `|2cos(pi j/(m+1)) + 2i cos(pi k/(n+1))|^(1/2)`.
pub fn rectangle_z_product(m: usize, n: usize) -> f64 {
    if m % 2 == 1 && n % 2 == 1 {
        return 0.0;
    }
    let mut log = 0.0;
    for j in 1..=m {
        let x = 2.0 * (PI * j as f64 / (m as f64 + 1.0)).cos();
        for k in 1..=n {
            let y = 2.0 * (PI * k as f64 / (n as f64 + 1.0)).cos();
            log += 0.25 * (x * x + y * y).ln();
        }
    }
    log.exp()
}

/// Boxed plane partitions in an `a x b x c` box, as the exact triple product
/// of `(i+j+k-1)/(i+j+k-2)`.
pub fn macmahon_count(a: usize, b: usize, c: usize) -> BigInt {
    let mut p = BigRational::one();
    for i in 1..=a {
        for j in 1..=b {
            for k in 1..=c {
                let s = (i + j + k) as i64;
                p *= BigRational::new((s - 1).into(), (s - 2).into());
            }
        }
    }
    p.to_integer()
}

/// Volume generating function `prod (1 - q^(i+j+k-1)) / (1 - q^(i+j+k-2))`.
pub fn macmahon_q(a: usize, b: usize, c: usize, q: &BigRational) -> BigRational {
    if q.is_one() {
        return BigRational::from_integer(macmahon_count(a, b, c));
    }
    let one = BigRational::one();
    let mut p = BigRational::one();
    for i in 1..=a {
        for j in 1..=b {
            for k in 1..=c {
                let s = (i + j + k) as i32;
                p *= (&one - q.pow(s - 1)) / (&one - q.pow(s - 2));
            }
        }
    }
    p
}

/// Columns `K^{-1}(., b)` for the requested blacks, by solving `K x = e_b`.
pub fn inverse_columns(k: &KasteleynMatrix, blacks: &[usize]) -> Result<Vec<Vec<GaussRat>>> {
    if k.nb != k.nw {
        return Err(Error::NoDimerCover);
    }
    let rhs: Vec<Vec<GaussRat>> = (0..k.nb)
        .map(|r| {
            blacks
                .iter()
                .map(|&b| if b == r { GaussRat::one() } else { GaussRat::zero() })
                .collect()
        })
        .collect();
    let x = solve_gauss_rat(&k.dense(), &rhs).ok_or(Error::NoDimerCover)?;
    Ok((0..blacks.len()).map(|j| x.iter().map(|row| row[j].clone()).collect()).collect())
}

/// Exact entries `K^{-1}(w, b)` for the given `(w, b)` pairs.
pub fn inverse_entries(k: &KasteleynMatrix, pairs: &[(usize, usize)]) -> Result<Vec<GaussRat>> {
    let mut blacks: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    blacks.sort_unstable();
    blacks.dedup();
    let cols = inverse_columns(k, &blacks)?;
    Ok(pairs
        .iter()
        .map(|&(w, b)| cols[blacks.binary_search(&b).unwrap()][w].clone())
        .collect())
}

/// Probability that every edge of `x` is present:
/// `prod K(b_i, w_i) * det K^{-1}(w_i, b_j)`.
pub fn edges_probability(g: &BipartiteGraph, k: &KasteleynMatrix, x: &[usize]) -> Result<BigRational> {
    let mut ws: Vec<usize> = x.iter().map(|&e| g.edges[e].white).collect();
    let mut bs: Vec<usize> = x.iter().map(|&e| g.edges[e].black).collect();
    ws.sort_unstable();
    bs.sort_unstable();
    if ws.windows(2).any(|p| p[0] == p[1]) || bs.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::OverlappingEdges);
    }
    if x.is_empty() {
        return Ok(BigRational::one());
    }
    let blacks: Vec<usize> = x.iter().map(|&e| g.edges[e].black).collect();
    let cols = inverse_columns(k, &blacks)?;
    let minor: Vec<Vec<GaussRat>> = x
        .iter()
        .map(|&ei| (0..x.len()).map(|j| cols[j][g.edges[ei].white].clone()).collect())
        .collect();
    let mut p = det_gauss_rat(&minor);
    for &e in x {
        p = &p * &k.entry(g.edges[e].black, g.edges[e].white);
    }
    if !p.im.is_zero() || p.re.is_negative() {
        return Err(Error::BadPhasing);
    }
    Ok(p.re)
}

/// Single-edge probabilities `K(b,w) K^{-1}(w,b)` for every edge.
pub fn edge_probabilities(g: &BipartiteGraph, k: &KasteleynMatrix) -> Result<Vec<BigRational>> {
    let all: Vec<usize> = (0..g.nb()).collect();
    let cols = inverse_columns(k, &all)?;
    g.edges
        .iter()
        .map(|e| {
            let p = &k.entry(e.black, e.white) * &cols[e.black][e.white];
            if p.im.is_zero() {
                Ok(p.re)
            } else {
                Err(Error::BadPhasing)
            }
        })
        .collect()
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
