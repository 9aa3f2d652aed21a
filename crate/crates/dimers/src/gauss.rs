//! Gaussian integers, Gaussian rationals and the four unit phases.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A power of `i`: the stored value `k` stands for `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase(pub u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    /// `Some(+1)` or `Some(-1)` for real phases.
    pub fn sign(self) -> Option<i32> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn times(self, q: &BigRational) -> GaussRat {
        let z = BigRational::zero();
        match self.0 {
            0 => GaussRat::new(q.clone(), z),
            1 => GaussRat::new(z, q.clone()),
            2 => GaussRat::new(-q.clone(), z),
            _ => GaussRat::new(z, -q.clone()),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, o: Phase) -> Phase {
        Phase((self.0 + o.0) % 4)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: BigInt, im: BigInt) -> Self {
        GaussInt { re, im }
    }

    pub fn from_int(re: BigInt) -> Self {
        GaussInt { re, im: BigInt::zero() }
    }

    pub fn zero() -> Self {
        GaussInt::from_int(BigInt::zero())
    }

    pub fn one() -> Self {
        GaussInt::from_int(BigInt::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussInt::new(self.re.clone(), -&self.im)
    }

    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Quotient when `d` divides `self` exactly.
    pub fn div_exact(&self, d: &GaussInt) -> Option<GaussInt> {
        let n = d.norm();
        if n.is_zero() {
            return None;
        }
        let p = self * &d.conj();
        let (qr, rr) = p.re.div_rem(&n);
        let (qi, ri) = p.im.div_rem(&n);
        if rr.is_zero() && ri.is_zero() {
            Some(GaussInt::new(qr, qi))
        } else {
            None
        }
    }
}

impl<'a> Add for &'a GaussInt {
    type Output = GaussInt;
    fn add(self, o: &GaussInt) -> GaussInt {
        GaussInt::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl<'a> Sub for &'a GaussInt {
    type Output = GaussInt;
    fn sub(self, o: &GaussInt) -> GaussInt {
        GaussInt::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl<'a> Mul for &'a GaussInt {
    type Output = GaussInt;
    fn mul(self, o: &GaussInt) -> GaussInt {
        GaussInt::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt::new(-self.re, -self.im)
    }
}

/// An element of Q(i).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn zero() -> Self {
        GaussRat::real(BigRational::zero())
    }

    pub fn one() -> Self {
        GaussRat::real(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat::new(self.re.clone(), -&self.im)
    }

    pub fn norm(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<GaussRat> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        Some(GaussRat::new(&self.re / &n, -&self.im / &n))
    }

    pub fn div(&self, d: &GaussRat) -> Option<GaussRat> {
        d.inv().map(|q| self * &q)
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// Exact modulus when it is rational: true whenever one part vanishes,
    /// otherwise only for perfect-square norms.
    pub fn modulus(&self) -> Option<BigRational> {
        if self.im.is_zero() {
            return Some(self.re.abs());
        }
        if self.re.is_zero() {
            return Some(self.im.abs());
        }
        let n = self.norm();
        let num = n.numer().sqrt();
        let den = n.denom().sqrt();
        if &num * &num == *n.numer() && &den * &den == *n.denom() {
            Some(BigRational::new(num, den))
        } else {
            None
        }
    }

    /// Least common multiple of the two denominators.
    pub fn denom_lcm(&self) -> BigInt {
        self.re.denom().lcm(self.im.denom())
    }

    /// `self * m`, which must be integral.
    pub fn scale_to_int(&self, m: &BigInt) -> GaussInt {
        let r = &self.re * BigRational::from_integer(m.clone());
        let i = &self.im * BigRational::from_integer(m.clone());
        debug_assert!(r.is_integer() && i.is_integer());
        GaussInt::new(r.to_integer(), i.to_integer())
    }
}

impl<'a> Add for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl<'a> Sub for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl<'a> Mul for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re, -self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gi(a: i64, b: i64) -> GaussInt {
        GaussInt::new(a.into(), b.into())
    }

    #[test]
    fn exact_division() {
        let a = gi(3, 4);
        let b = gi(1, -2);
        let p = &a * &b;
        assert_eq!(p.div_exact(&b), Some(a.clone()));
        assert_eq!(gi(1, 0).div_exact(&gi(1, 1)), None);
    }

    #[test]
    fn phase_products() {
        assert_eq!(Phase::I * Phase::I, Phase::MINUS_ONE);
        assert_eq!(Phase::I.conj(), Phase::MINUS_I);
        assert_eq!(Phase::MINUS_ONE.sign(), Some(-1));
        assert_eq!(Phase::I.sign(), None);
    }

    #[test]
    fn rational_modulus() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(GaussRat::new(q(3, 5), q(4, 5)).modulus(), Some(q(1, 1)));
        assert_eq!(GaussRat::new(q(1, 1), q(1, 1)).modulus(), None);
        assert_eq!(GaussRat::new(q(0, 1), q(-7, 2)).modulus(), Some(q(7, 2)));
    }
}
