//! Exact elimination (fraction-free Bareiss, Gauss-Jordan over Q(i)) and a
//! few dense floating point helpers.

use crate::gauss::{GaussInt, GaussRat};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Zero};

/// Integral domains with exact division, enough for Bareiss elimination.
pub trait ExactRing: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn mul(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div_exact(&self, d: &Self) -> Self;
}

impl ExactRing for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_exact(&self, d: &Self) -> Self {
        let (q, r) = self.div_rem(d);
        debug_assert!(Zero::is_zero(&r));
        q
    }
}

impl ExactRing for GaussInt {
    fn zero() -> Self {
        GaussInt::zero()
    }
    fn one() -> Self {
        GaussInt::one()
    }
    fn is_zero(&self) -> bool {
        GaussInt::is_zero(self)
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn div_exact(&self, d: &Self) -> Self {
        GaussInt::div_exact(self, d).expect("Bareiss division is exact")
    }
}

/// Determinant by fraction-free Bareiss elimination with row pivoting.
pub fn bareiss_det<T: ExactRing>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    if n == 0 {
        return T::one();
    }
    let mut negate = false;
    let mut prev = T::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    negate = !negate;
                }
                None => return T::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = t.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
        for row in m.iter_mut().skip(k + 1) {
            row[k] = T::zero();
        }
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        d.neg()
    } else {
        d
    }
}

/// Determinant of a matrix over Q(i): rows are scaled to Gaussian integers
/// and the Bareiss result is divided back.
pub fn det_gauss_rat(m: &[Vec<GaussRat>]) -> GaussRat {
    let mut scale: BigInt = One::one();
    let rows: Vec<Vec<GaussInt>> = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(<BigInt as One>::one(), |acc, x| acc.lcm(&x.denom_lcm()));
            scale *= &l;
            row.iter().map(|x| x.scale_to_int(&l)).collect()
        })
        .collect();
    let d = bareiss_det(rows);
    let s = num_rational::BigRational::from_integer(scale);
    GaussRat::new(
        num_rational::BigRational::from_integer(d.re) / &s,
        num_rational::BigRational::from_integer(d.im) / &s,
    )
}

/// Solves `a x = b` for several right-hand sides by Gauss-Jordan elimination.
/// Returns `None` when `a` is singular.
pub fn solve_gauss_rat(a: &[Vec<GaussRat>], b: &[Vec<GaussRat>]) -> Option<Vec<Vec<GaussRat>>> {
    let n = a.len();
    let k = b.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<GaussRat>> = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().chain(rb.iter()).cloned().collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].inv()?;
        for x in m[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..n + k {
                    let t = &f * &m[col][c];
                    m[r][c] = &m[r][c] - &t;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Dense complex inverse, `None` when numerically singular.
pub fn complex_inverse(a: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let inv = m.try_inverse()?;
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

/// Roots of `sum c[k] x^k` (coefficients in ascending order) from the
/// eigenvalues of the companion matrix. Leading zeros are trimmed.
pub fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let mut deg = c.len();
    while deg > 0 && c[deg - 1].norm() == 0.0 {
        deg -= 1;
    }
    if deg <= 1 {
        return Vec::new();
    }
    let n = deg - 1;
    let lead = c[n];
    if n == 1 {
        return vec![-c[0] / lead];
    }
    if n == 2 {
        let (a, b, cc) = (lead, c[1], c[0]);
        let disc = (b * b - 4.0 * a * cc).sqrt();
        let q = if (b.conj() * disc).re >= 0.0 {
            -0.5 * (b + disc)
        } else {
            -0.5 * (b - disc)
        };
        if q.norm() == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        return vec![q / a, cc / q];
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let roots: Vec<Complex64> = m
        .schur()
        .eigenvalues()
        .map(|v| v.iter().cloned().collect())
        .unwrap_or_default();
    roots.into_iter().map(|r| newton_polish(c, r)).collect()
}

fn newton_polish(c: &[Complex64], mut x: Complex64) -> Complex64 {
    for _ in 0..3 {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &ck in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + ck;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-3 * (1.0 + x.norm()) {
            break;
        }
        x -= step;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(n: i64) -> GaussRat {
        GaussRat::real(BigRational::from_integer(n.into()))
    }

    #[test]
    fn bareiss_matches_known_integer_determinants() {
        let m: Vec<Vec<BigInt>> = vec![
            vec![2.into(), 0.into(), 1.into()],
            vec![1.into(), 3.into(), 2.into()],
            vec![1.into(), 1.into(), 2.into()],
        ];
        assert_eq!(bareiss_det(m), BigInt::from(6));
        let pivot: Vec<Vec<BigInt>> = vec![vec![0.into(), 1.into()], vec![1.into(), 0.into()]];
        assert_eq!(bareiss_det(pivot), BigInt::from(-1));
    }

    #[test]
    fn solve_recovers_inverse_columns() {
        let a = vec![vec![r(2), r(1)], vec![r(1), r(1)]];
        let b = vec![vec![r(1), r(0)], vec![r(0), r(1)]];
        let x = solve_gauss_rat(&a, &b).unwrap();
        assert_eq!(x, vec![vec![r(1), r(-1)], vec![r(-1), r(2)]]);
        assert_eq!(det_gauss_rat(&a), r(1));
        assert!(solve_gauss_rat(&[vec![r(1), r(1)], vec![r(2), r(2)]], &b).is_none());
    }

    #[test]
    fn cubic_roots() {
        let c = [-6.0, 11.0, -6.0, 1.0].map(|x| Complex64::new(x, 0.0));
        let mut roots: Vec<f64> = poly_roots(&c).iter().map(|z| z.re).collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }
}
