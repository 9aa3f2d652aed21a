//! Periodic dimer models: characteristic polynomial, finite torus partition
//! functions and height-change distributions.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Label, Lattice};
use crate::laurent::LaurentPoly2;
use crate::linalg::bareiss_det;
use crate::oracle::enumerate_matchings;
use crate::region::{RegionSpec, Shape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdEdge {
    pub w: usize,
    pub b: usize,
    pub weight: BigRational,
    pub sign: i8,
    /// Magnetic exponent: the edge contributes `sign * weight * z^x w^y`.
    pub exp: (i32, i32),
    pub label: Label,
}

/// One fundamental domain of a periodic bipartite graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub nw: usize,
    pub nb: usize,
    pub edges: Vec<FdEdge>,
    /// When set, the four twisted determinants of the `n x n` lift combine
    /// with signs fixed by the parity of `n * parity_unit`.
    pub parity_unit: Option<usize>,
}

impl FundamentalDomain {
    /// Reads the torus of a periodic graph. Square tori get sign -1 on the
    /// vertical edges in odd columns.
    pub fn from_graph(g: &BipartiteGraph) -> Result<Self> {
        if g.periodic.is_none() {
            return Err(Error::Malformed("graph is not periodic".into()));
        }
        let l = g.periodic.as_ref().map_or(1, |p| p.l);
        let parity_unit = match g.lattice {
            Lattice::Honeycomb => Some(l),
            Lattice::Square => Some(l / 2),
            Lattice::Generic => None,
        };
        let square = g.lattice == Lattice::Square;
        let edges = g
            .edges
            .iter()
            .map(|e| {
                let odd_col = g.whites[e.white].cell.0.rem_euclid(2) == 1;
                let sign = if square && e.label == Label::Vertical && odd_col { -1 } else { 1 };
                FdEdge { w: e.white, b: e.black, weight: e.weight.clone(), sign, exp: e.wrap, label: e.label }
            })
            .collect();
        Ok(FundamentalDomain { nw: g.nw(), nb: g.nb(), edges, parity_unit })
    }

    pub fn from_spec(spec: &RegionSpec) -> Result<Self> {
        match &spec.shape {
            Shape::FundamentalDomain { nw, nb, edges } => {
                let edges = edges
                    .iter()
                    .map(|e| {
                        if e.w >= *nw || e.b >= *nb || (e.sign != 1 && e.sign != -1) || !e.weight.0.is_positive() {
                            return Err(Error::Malformed("bad fundamental-domain edge".into()));
                        }
                        Ok(FdEdge { w: e.w, b: e.b, weight: e.weight.0.clone(), sign: e.sign, exp: e.exp, label: Label::Other })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FundamentalDomain { nw: *nw, nb: *nb, edges, parity_unit: None })
            }
            Shape::Torus { .. } => Self::from_graph(&crate::region::build_region(spec)?),
            _ => Err(Error::Malformed("expected a torus or fundamental_domain shape".into())),
        }
    }

    /// Honeycomb with one vertex of each color and edges `a, b z, c w`.
    pub fn honeycomb(a: &BigRational, b: &BigRational, c: &BigRational) -> Self {
        let e = |weight: &BigRational, exp, label| FdEdge { w: 0, b: 0, weight: weight.clone(), sign: 1, exp, label };
        FundamentalDomain {
            nw: 1,
            nb: 1,
            edges: vec![e(a, (0, 0), Label::A), e(b, (1, 0), Label::B), e(c, (0, 1), Label::C)],
            parity_unit: Some(1),
        }
    }

    /// Square grid with one white and one black vertex; `P = 1 + z + w - zw`.
    pub fn square_two_vertex() -> Self {
        let e = |sign, exp| FdEdge { w: 0, b: 0, weight: BigRational::one(), sign, exp, label: Label::Other };
        FundamentalDomain {
            nw: 1,
            nb: 1,
            edges: vec![e(1, (0, 0)), e(1, (1, 0)), e(1, (0, 1)), e(-1, (1, 1))],
            parity_unit: Some(1),
        }
    }

    /// The 3 x 2 square-grid fundamental domain with weights `a..e`, whose
    /// Kasteleyn matrix (rows white, columns black) is
    /// `[[-1 + 1/w, 1, e/z], [c, a - w, d], [z/w, 1, -b + 1/w]]`.
    pub fn square_three_by_two(a: &BigRational, b: &BigRational, c: &BigRational, d: &BigRational, e: &BigRational) -> Self {
        let one = BigRational::one();
        let mk = |w, b, weight: &BigRational, sign, exp| FdEdge { w, b, weight: weight.clone(), sign, exp, label: Label::Other };
        let edges = vec![
            mk(0, 0, &one, -1, (0, 0)),
            mk(0, 0, &one, 1, (0, -1)),
            mk(0, 1, &one, 1, (0, 0)),
            mk(0, 2, e, 1, (-1, 0)),
            mk(1, 0, c, 1, (0, 0)),
            mk(1, 1, a, 1, (0, 0)),
            mk(1, 1, &one, -1, (0, 1)),
            mk(1, 2, d, 1, (0, 0)),
            mk(2, 0, &one, 1, (1, -1)),
            mk(2, 1, &one, 1, (0, 0)),
            mk(2, 2, b, -1, (0, 0)),
            mk(2, 2, &one, 1, (0, -1)),
        ];
        FundamentalDomain { nw: 3, nb: 3, edges, parity_unit: None }
    }

    /// Kasteleyn matrix with Laurent entries, rows white.
    pub fn kasteleyn_laurent(&self) -> Vec<Vec<LaurentPoly2>> {
        let mut m = vec![vec![LaurentPoly2::zero(); self.nb]; self.nw];
        for e in &self.edges {
            let c = if e.sign < 0 { -e.weight.clone() } else { e.weight.clone() };
            m[e.w][e.b] = m[e.w][e.b].add(&LaurentPoly2::monomial(c, e.exp.0, e.exp.1));
        }
        m
    }

    /// Lifts to the `n x n` torus with twist `(-1)^sigma` across the x seam
    /// and `(-1)^tau` across the y seam. Vertices are `(cell, fd vertex)`
    /// with cell index `cy * n + cx`; entries are `(white, black, coefficient)`.
    pub fn lift(&self, n: usize, sigma: u8, tau: u8) -> Vec<(usize, usize, BigRational)> {
        let ni = n as i64;
        let mut out = Vec::new();
        for cy in 0..ni {
            for cx in 0..ni {
                for e in &self.edges {
                    let tx = cx - e.exp.0 as i64;
                    let ty = cy - e.exp.1 as i64;
                    let (kx, ky) = (tx.div_euclid(ni), ty.div_euclid(ni));
                    let cell_b = (ty.rem_euclid(ni) * ni + tx.rem_euclid(ni)) as usize;
                    let cell_w = (cy * ni + cx) as usize;
                    let flips = sigma as i64 * kx + tau as i64 * ky + if e.sign < 0 { 1 } else { 0 };
                    let c = if flips.rem_euclid(2) == 1 { -e.weight.clone() } else { e.weight.clone() };
                    out.push((cell_w * self.nw + e.w, cell_b * self.nb + e.b, c));
                }
            }
        }
        out
    }
}

/// `P(z, w) = det K(z, w)`, expanded exactly over subsets of columns.
pub fn characteristic_polynomial(fd: &FundamentalDomain) -> Result<LaurentPoly2> {
    if fd.nw != fd.nb {
        return Err(Error::Malformed("fundamental domain is unbalanced".into()));
    }
    let n = fd.nw;
    if n > 20 {
        return Err(Error::Malformed("fundamental domain too large for symbolic expansion".into()));
    }
    let k = fd.kasteleyn_laurent();
    let mut dp: Vec<LaurentPoly2> = vec![LaurentPoly2::zero(); 1 << n];
    dp[0] = LaurentPoly2::one();
    for mask in 0usize..(1 << n) {
        if dp[mask].is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        let cur = dp[mask].clone();
        for col in 0..n {
            if mask & (1 << col) != 0 || k[row][col].is_zero() {
                continue;
            }
            let above = (mask >> (col + 1)).count_ones();
            let mut t = cur.mul(&k[row][col]);
            if above % 2 == 1 {
                t = t.neg();
            }
            let nm = mask | (1 << col);
            dp[nm] = dp[nm].add(&t);
        }
    }
    Ok(dp[(1 << n) - 1].clone())
}

fn scaled_int_matrix(size: usize, entries: &[(usize, usize, BigRational)]) -> (Vec<Vec<BigInt>>, BigInt) {
    let den = entries.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.2.denom()));
    let mut m = vec![vec![BigInt::zero(); size]; size];
    for (w, b, c) in entries {
        let v = (c * BigRational::from_integer(den.clone())).to_integer();
        m[*w][*b] += v;
    }
    (m, den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistedDeterminants {
    /// Indexed `[sigma][tau]`.
    pub z: [[BigRational; 2]; 2],
    /// Largest relative gap between the exact values and the products of
    /// `P` over the twisted roots of unity.
    pub certificate_gap: f64,
}

/// Exact `Z_{sigma,tau}` from the twisted lifts, each certified against
/// `prod P(z, w)` over `z^n = (-1)^sigma`, `w^n = (-1)^tau`.
pub fn twisted_determinants(fd: &FundamentalDomain, n: usize) -> Result<TwistedDeterminants> {
    if fd.nw != fd.nb || n == 0 {
        return Err(Error::Malformed("need a balanced domain and n >= 1".into()));
    }
    let p = characteristic_polynomial(fd)?;
    let size = fd.nw * n * n;
    let combos: Vec<(u8, u8)> = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
    let vals: Vec<(BigRational, f64)> = combos
        .par_iter()
        .map(|&(s, t)| {
            let (m, den) = scaled_int_matrix(size, &fd.lift(n, s, t));
            let d = bareiss_det(m);
            let exact = BigRational::new(d, num_traits::pow(den, size));
            let mut prod = Complex64::new(1.0, 0.0);
            let mut log_scale = 0.0f64;
            for j in 0..n {
                let z = Complex64::from_polar(1.0, PI * (2 * j + s as usize) as f64 / n as f64);
                for k in 0..n {
                    let w = Complex64::from_polar(1.0, PI * (2 * k + t as usize) as f64 / n as f64);
                    let v = p.eval(z, w);
                    let a = v.norm();
                    if a == 0.0 {
                        prod = Complex64::new(0.0, 0.0);
                    } else {
                        prod *= v / a;
                        log_scale += a.ln();
                    }
                }
            }
            let approx = prod.re * log_scale.exp();
            let ex = exact.to_f64().unwrap_or(f64::NAN);
            let scale = ex.abs().max(approx.abs()).max(1e-300);
            let gap = if ex == 0.0 && approx.abs() < 1e-6 { 0.0 } else { (ex - approx).abs() / scale };
            (exact, gap)
        })
        .collect();
    let gap = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    if gap > 1e-6 {
        return Err(Error::Tolerance(format!("root-of-unity product disagrees with exact determinant ({gap:e})")));
    }
    let z = [[vals[0].0.clone(), vals[1].0.clone()], [vals[2].0.clone(), vals[3].0.clone()]];
    Ok(TwistedDeterminants { z, certificate_gap: gap })
}

/// Signs `eps[sigma][tau]` with `Z = (1/2) sum eps Z_{sigma,tau}`, for a
/// lift whose side parity `n * parity_unit` is given. The odd case is
/// `(+, +, +, -)`; the even case `(-, +, +, +)` was resolved against
/// brute-force enumeration of honeycomb and square tori and is frozen here.
pub fn combination_signs(parity: usize) -> [[i8; 2]; 2] {
    if parity % 2 == 1 {
        [[1, 1], [1, -1]]
    } else {
        [[-1, 1], [1, 1]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPartition {
    pub z: BigRational,
    pub twisted: TwistedDeterminants,
    pub signs: [[i8; 2]; 2],
}

pub fn torus_partition(fd: &FundamentalDomain, n: usize) -> Result<TorusPartition> {
    let unit = fd
        .parity_unit
        .ok_or_else(|| Error::Malformed("no frozen sign combination for this fundamental domain".into()))?;
    let signs = combination_signs(n * unit);
    torus_partition_with(fd, n, signs)
}

pub fn torus_partition_with(fd: &FundamentalDomain, n: usize, signs: [[i8; 2]; 2]) -> Result<TorusPartition> {
    let twisted = twisted_determinants(fd, n)?;
    let mut z = BigRational::zero();
    for s in 0..2 {
        for t in 0..2 {
            let v = &twisted.z[s][t];
            if signs[s][t] > 0 {
                z += v;
            } else {
                z -= v;
            }
        }
    }
    z /= BigRational::from_integer(2.into());
    Ok(TorusPartition { z, twisted, signs })
}

/// Weighted count of perfect matchings of the `n x n` lift by enumeration.
pub fn brute_torus_partition(fd: &FundamentalDomain, n: usize) -> BigRational {
    let lifted = fd.lift(n, 0, 0);
    let edges: Vec<(usize, usize)> = lifted.iter().map(|e| (e.0, e.1)).collect();
    let size = fd.nw * n * n;
    enumerate_matchings(size, fd.nb * n * n, &edges)
        .iter()
        .map(|m| m.iter().fold(BigRational::one(), |acc, &e| acc * lifted[e].2.abs()))
        .sum()
}

/// Brute-force search for signs that reproduce `z_true`; returns every
/// consistent sign table.
pub fn consistent_signs(tw: &TwistedDeterminants, z_true: &BigRational) -> Vec<[[i8; 2]; 2]> {
    let mut out = Vec::new();
    for mask in 0..16u8 {
        let s = |k: u8| if mask & (1 << k) != 0 { -1i8 } else { 1 };
        let signs = [[s(0), s(1)], [s(2), s(3)]];
        let mut z = BigRational::zero();
        for a in 0..2 {
            for b in 0..2 {
                z += &tw.z[a][b] * BigRational::from_integer(signs[a][b].into());
            }
        }
        if z == z_true * BigRational::from_integer(2.into()) {
            out.push(signs);
        }
    }
    out
}

/// Sign of the homology class `(h_x, h_y)` in the honeycomb determinant
/// expansion on the `n x n` torus: `(-1)^(gcd(h_x, h_y) + n (h_x + h_y))`.
pub fn class_sign(hx: i64, hy: i64, n: i64) -> i32 {
    let q = hx.gcd(&hy);
    if (q + n * (hx + hy)).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn circulant_det(first_row: &[BigInt]) -> BigInt {
    let n = first_row.len();
    let m: Vec<Vec<BigInt>> =
        (0..n).map(|i| (0..n).map(|j| first_row[(j + n - i) % n].clone()).collect()).collect();
    bareiss_det(m)
}

/// `det K` of the honeycomb `n x n` torus at `a = 1` and integer `b, c`,
/// through `prod_{w^n=1} (1 + bz + cw) = (1 + bz)^n - (-c)^n` and a
/// circulant determinant in `z`.
pub fn honeycomb_det_at(n: usize, b: i64, c: i64) -> BigInt {
    let bb = BigInt::from(b);
    let mut row = vec![BigInt::zero(); n];
    let mut binom = BigInt::one();
    for k in 0..=n {
        let term = &binom * num_traits::pow(bb.clone(), k);
        row[k % n] += term;
        binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    row[0] -= num_traits::pow(BigInt::from(-c), n);
    circulant_det(&row)
}

/// Counts `C_{h_x,h_y}` of honeycomb torus matchings by homology class,
/// read off the coefficient of `a^{n(n-h_x-h_y)} b^{n h_x} c^{n h_y}` in
/// `det K` with the class sign removed.
pub fn height_change_distribution(n: usize) -> Result<BTreeMap<(i64, i64), BigInt>> {
    if n == 0 {
        return Err(Error::Malformed("n must be positive".into()));
    }
    let nodes: Vec<i64> = (1..=(n as i64 + 1)).collect();
    let xs: Vec<BigRational> = nodes.iter().map(|&v| BigRational::from_integer(num_traits::pow(BigInt::from(v), n))).collect();
    let vals: Vec<Vec<BigRational>> = nodes
        .par_iter()
        .map(|&b| nodes.iter().map(|&c| BigRational::from_integer(honeycomb_det_at(n, b, c))).collect())
        .collect();
    // interpolate in c for each b, then in b for each coefficient
    let by_b: Vec<Vec<BigRational>> = vals.iter().map(|row| newton_to_monomial(&xs, row)).collect();
    let mut out = BTreeMap::new();
    for hy in 0..=n {
        let col: Vec<BigRational> = by_b.iter().map(|r| r[hy].clone()).collect();
        let coeffs = newton_to_monomial(&xs, &col);
        for (hx, c) in coeffs.into_iter().enumerate() {
            if !c.is_integer() {
                return Err(Error::Tolerance("non-integral interpolated coefficient".into()));
            }
            let c = c.to_integer();
            if c.is_zero() {
                continue;
            }
            let s = class_sign(hx as i64, hy as i64, n as i64);
            let v = if s < 0 { -c } else { c };
            if v.is_negative() {
                return Err(Error::Tolerance(format!("negative count at ({hx}, {hy})")));
            }
            out.insert((hx as i64, hy as i64), v);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub c0: f64,
    pub c: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares fit of `log C_{m+j, m+k} = c0 - c (j^2 + jk + k^2)` around
/// `m = round(n/3)`, over the hexagonal window `|j|, |k|, |j+k| <= radius`.
pub fn log_quadratic_fit(dist: &BTreeMap<(i64, i64), BigInt>, n: usize, radius: i64) -> QuadraticFit {
    let m = (n as f64 / 3.0).round() as i64;
    let mut pts = Vec::new();
    for j in -radius..=radius {
        for k in -radius..=radius {
            if (j + k).abs() > radius {
                continue;
            }
            if let Some(c) = dist.get(&(m + j, m + k)) {
                pts.push(((j * j + j * k + k * k) as f64, big_ln(c)));
            }
        }
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c0 = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - c0 - slope * p.0).powi(2)).sum();
    let sst: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    QuadraticFit { c0, c: -slope, r2, points: pts.len() }
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 900;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Monomial coefficients of the interpolating polynomial through
/// `(xs[i], ys[i])`.
fn newton_to_monomial(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - j]);
        }
    }
    let mut poly = vec![BigRational::zero(); n];
    for k in (0..n).rev() {
        // poly = poly * (x - xs[k]) + dd[k]
        let mut next = vec![BigRational::zero(); n];
        for i in 0..n {
            if poly[i].is_zero() {
                continue;
            }
            if i + 1 < n {
                next[i + 1] += &poly[i];
            }
            next[i] -= &poly[i] * &xs[k];
        }
        next[0] += &dd[k];
        poly = next;
    }
    poly
}
