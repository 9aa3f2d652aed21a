//! Laurent polynomials in two variables with exact rational coefficients,
//! and their Newton polygons.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly2 {
    /// Nonzero coefficients keyed by `(i, j)` for `z^i w^j`.
    pub terms: BTreeMap<(i32, i32), BigRational>,
}

impl LaurentPoly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn monomial(c: BigRational, i: i32, j: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((i, j), c);
        }
        LaurentPoly2 { terms }
    }

    /// From integer coefficients, convenient for fixtures.
    pub fn from_ints(t: &[(i64, i32, i32)]) -> Self {
        let mut p = Self::zero();
        for &(c, i, j) in t {
            p.add_term((i, j), &BigRational::from_integer(c.into()));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, k: (i32, i32), c: &BigRational) {
        let v = self.terms.entry(k).or_insert_with(BigRational::zero);
        *v += c;
        if v.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(*k, c);
        }
        r
    }

    pub fn neg(&self) -> Self {
        LaurentPoly2 { terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                r.add_term((k1.0 + k2.0, k1.1 + k2.1), &(c1 * c2));
            }
        }
        r
    }

    pub fn coeff(&self, i: i32, j: i32) -> BigRational {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c.to_f64().unwrap() * z.powi(i) * w.powi(j))
            .sum()
    }

    /// Coefficients as `((i, j), f64)` pairs.
    pub fn float_terms(&self) -> Vec<((i32, i32), f64)> {
        self.terms.iter().map(|(k, c)| (*k, c.to_f64().unwrap())).collect()
    }

    pub fn newton_polygon(&self) -> NewtonPolygon {
        NewtonPolygon::hull(self.terms.keys().map(|&(i, j)| (i as i64, j as i64)).collect())
    }

    /// Swaps the roles of `z` and `w`.
    pub fn transpose(&self) -> Self {
        LaurentPoly2 { terms: self.terms.iter().map(|(&(i, j), c)| ((j, i), c.clone())).collect() }
    }

    /// Polynomial in `w` at a fixed `z`: returns the lowest `w` exponent and
    /// ascending complex coefficients.
    pub fn w_coeffs(ft: &[((i32, i32), f64)], z: Complex64) -> (i32, Vec<Complex64>) {
        let jmin = ft.iter().map(|t| t.0 .1).min().unwrap_or(0);
        let jmax = ft.iter().map(|t| t.0 .1).max().unwrap_or(0);
        let mut c = vec![Complex64::new(0.0, 0.0); (jmax - jmin + 1) as usize];
        for &((i, j), v) in ft {
            c[(j - jmin) as usize] += v * z.powi(i);
        }
        (jmin, c)
    }
}

impl fmt::Display for LaurentPoly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), c) in &self.terms {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono = match (i, j) {
                (0, 0) => String::new(),
                _ => {
                    let p = |v: &str, e: i32| match e {
                        0 => String::new(),
                        1 => v.to_string(),
                        _ => format!("{v}^{e}"),
                    };
                    [p("z", i), p("w", j)].into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join("*")
                }
            };
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{a}*{mono}")?;
            }
        }
        Ok(())
    }
}

/// Serialized as a list of `[i, j, "p/q"]` triples.
impl Serialize for LaurentPoly2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(i32, i32, String)> = self.terms.iter().map(|(k, c)| (k.0, k.1, c.to_string())).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<(i32, i32, String)> = Vec::deserialize(d)?;
        let mut p = LaurentPoly2::zero();
        for (i, j, c) in v {
            let c: BigRational = c.parse().map_err(|_| serde::de::Error::custom("bad coefficient"))?;
            p.add_term((i, j), &c);
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Outside,
    Boundary,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    /// Hull vertices in counterclockwise order without collinear points.
    pub vertices: Vec<(i64, i64)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl NewtonPolygon {
    pub fn hull(mut pts: Vec<(i64, i64)>) -> Self {
        pts.sort_unstable();
        pts.dedup();
        if pts.len() <= 2 {
            return NewtonPolygon { vertices: pts };
        }
        let mut lower: Vec<(i64, i64)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(i64, i64)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        NewtonPolygon { vertices: lower }
    }

    /// Where a real point lies relative to the polygon, with slack `tol`.
    pub fn locate(&self, p: (f64, f64), tol: f64) -> Location {
        let v = &self.vertices;
        match v.len() {
            0 => return Location::Outside,
            1 => {
                let d = ((p.0 - v[0].0 as f64).powi(2) + (p.1 - v[0].1 as f64).powi(2)).sqrt();
                return if d <= tol { Location::Boundary } else { Location::Outside };
            }
            _ => {}
        }
        let n = v.len();
        let mut min_d = f64::INFINITY;
        let mut inside = n >= 3;
        for k in 0..n {
            let (a, b) = (v[k], v[(k + 1) % n]);
            let (ax, ay, bx, by) = (a.0 as f64, a.1 as f64, b.0 as f64, b.1 as f64);
            let (ex, ey) = (bx - ax, by - ay);
            let len = (ex * ex + ey * ey).sqrt();
            let c = (ex * (p.1 - ay) - ey * (p.0 - ax)) / len;
            if c < 0.0 {
                inside = false;
            }
            let t = (((p.0 - ax) * ex + (p.1 - ay) * ey) / (len * len)).clamp(0.0, 1.0);
            let d = ((p.0 - ax - t * ex).powi(2) + (p.1 - ay - t * ey).powi(2)).sqrt();
            min_d = min_d.min(d);
        }
        if min_d <= tol {
            Location::Boundary
        } else if inside {
            Location::Interior
        } else {
            Location::Outside
        }
    }

    pub fn lattice_points(&self) -> Vec<(i64, i64)> {
        if self.vertices.is_empty() {
            return Vec::new();
        }
        let xs = self.vertices.iter().map(|p| p.0);
        let ys = self.vertices.iter().map(|p| p.1);
        let (x0, x1) = (xs.clone().min().unwrap(), xs.max().unwrap());
        let (y0, y1) = (ys.clone().min().unwrap(), ys.max().unwrap());
        let mut out = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                if self.locate((x as f64, y as f64), 1e-9) != Location::Outside {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn boundary_lattice_points(&self) -> Vec<(i64, i64)> {
        self.lattice_points()
            .into_iter()
            .filter(|&(x, y)| self.locate((x as f64, y as f64), 1e-9) == Location::Boundary)
            .collect()
    }

    pub fn interior_lattice_points(&self) -> Vec<(i64, i64)> {
        self.lattice_points()
            .into_iter()
            .filter(|&(x, y)| self.locate((x as f64, y as f64), 1e-9) == Location::Interior)
            .collect()
    }
}
