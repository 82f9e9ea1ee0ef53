//! Truncated power series and dense polynomials.
//!
//! A [`TruncatedSeries`] of order `K` carries the Taylor coefficients
//! `a_0..a_K` of a one-variable formal series. Binary operations truncate at
//! the smaller of the two orders. `ln` and real powers use the
//! differentiate-and-convolve recurrences, so no series inversion is needed.
//!
//! The coefficient type only has to be a [`Scalar`] ring. Over a general ring
//! the logarithm and powers require `a_0 = 1` exactly (`ln_unit`,
//! `pow_unit`); over a [`Real`] type any positive `a_0` is accepted. Using
//! [`Poly`] as the coefficient ring gives series whose coefficients are exact
//! polynomials in an auxiliary parameter, which is how beta functions are
//! derived without hand algebra.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Taylor coefficients `a_0..a_K` of a formal series in one variable.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> TruncatedSeries<T> {
    /// Series from explicit coefficients; the order is `coeffs.len() - 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least a_0");
        Self { coeffs }
    }

    /// Coefficients padded with zeros (or truncated) to the given order.
    pub fn with_order(mut coeffs: Vec<T>, order: usize) -> Self {
        coeffs.resize(order + 1, T::zero());
        Self { coeffs }
    }

    pub fn constant(c: T, order: usize) -> Self {
        Self::with_order(vec![c], order)
    }

    /// The series `x` (the expansion variable itself).
    pub fn variable(order: usize) -> Self {
        Self::with_order(vec![T::zero(), T::one()], order)
    }

    pub fn zero(order: usize) -> Self {
        Self::with_order(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::constant(T::one(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient `a_k`, zero beyond the order.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    /// Re-truncates (or zero-pads) to a new order.
    pub fn truncate(&self, order: usize) -> Self {
        Self::with_order(self.coeffs.clone(), order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self::new(
            (0..=k)
                .map(|i| self.coeffs[i].clone() + other.coeffs[i].clone())
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self::new(
            (0..=k)
                .map(|i| self.coeffs[i].clone() - other.coeffs[i].clone())
                .collect(),
        )
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut out = vec![T::zero(); k + 1];
        for (i, a) in self.coeffs.iter().take(k + 1).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(k + 1 - i).enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// Adds a constant to `a_0`.
    pub fn add_constant(&self, c: &T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0].clone() + c.clone();
        out
    }

    /// Formal derivative; the order drops by one (a constant stays order 0).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a.clone() * T::from_int(k as i64))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term; the order grows by one.
    pub fn integral(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(T::zero());
        for (k, a) in self.coeffs.iter().enumerate() {
            out.push(a.clone() * T::from_ratio(1, k as i64 + 1));
        }
        Self::new(out)
    }

    /// Multiplies by the expansion variable, keeping the order (the top
    /// coefficient is dropped).
    pub fn shift_up(&self) -> Self {
        let mut out = vec![T::zero()];
        out.extend(self.coeffs[..self.order()].iter().cloned());
        Self::new(out)
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, a| acc * x.clone() + a.clone())
    }

    fn require_unit(&self) -> Result<()> {
        if self.coeffs[0] != T::one() {
            return Err(Error::SeriesConstant {
                expected: "exactly 1",
                got: format!("{:?}", self.coeffs[0]),
            });
        }
        Ok(())
    }

    /// `ln a` for a series with `a_0 = 1`, from `(ln a)' a = a'`.
    pub fn ln_unit(&self) -> Result<Self> {
        self.require_unit()?;
        let k_max = self.order();
        let mut b = vec![T::zero(); k_max + 1];
        for k in 1..=k_max {
            let acc = (1..k).fold(T::zero(), |acc, j| {
                acc + T::from_int(j as i64) * b[j].clone() * self.coeffs[k - j].clone()
            });
            b[k] = self.coeffs[k].clone() - acc * T::from_ratio(1, k as i64);
        }
        Ok(Self::new(b))
    }

    /// `a^alpha` for a series with `a_0 = 1`, from `(a^α)' a = α a' a^α`.
    pub fn pow_unit(&self, alpha: &T) -> Result<Self> {
        self.require_unit()?;
        let k_max = self.order();
        let mut c = vec![T::zero(); k_max + 1];
        c[0] = T::one();
        for k in 1..=k_max {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = alpha.clone() * T::from_int(j as i64) - T::from_int((k - j) as i64);
                acc = acc + w * self.coeffs[j].clone() * c[k - j].clone();
            }
            c[k] = acc * T::from_ratio(1, k as i64);
        }
        Ok(Self::new(c))
    }

    /// `exp a` for a series with `a_0 = 0`, from `(e^a)' = a' e^a`.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::SeriesConstant {
                expected: "exactly 0",
                got: format!("{:?}", self.coeffs[0]),
            });
        }
        let k_max = self.order();
        let mut e = vec![T::zero(); k_max + 1];
        e[0] = T::one();
        for k in 1..=k_max {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + T::from_int(j as i64) * self.coeffs[j].clone() * e[k - j].clone();
            }
            e[k] = acc * T::from_ratio(1, k as i64);
        }
        Ok(Self::new(e))
    }
}

impl<T: Real> TruncatedSeries<T> {
    fn split_positive_constant(&self) -> Result<(T, Self)> {
        let a0 = self.coeffs[0];
        if !(a0 > T::zero()) {
            return Err(Error::SeriesConstant {
                expected: "positive",
                got: format!("{a0}"),
            });
        }
        let mut unit = self.scale(&a0.recip());
        unit.coeffs[0] = T::one();
        Ok((a0, unit))
    }

    /// `ln a` for `a_0 > 0`.
    pub fn ln(&self) -> Result<Self> {
        let (a0, unit) = self.split_positive_constant()?;
        Ok(unit.ln_unit()?.add_constant(&a0.ln()))
    }

    /// `a^alpha` for `a_0 > 0`.
    pub fn pow(&self, alpha: T) -> Result<Self> {
        let (a0, unit) = self.split_positive_constant()?;
        Ok(unit.pow_unit(&alpha)?.scale(&a0.powf(alpha)))
    }

    /// `exp a` for any real constant term.
    pub fn exp(&self) -> Self {
        let a0 = self.coeffs[0];
        let mut nil = self.clone();
        nil.coeffs[0] = T::zero();
        nil.exp_nilpotent()
            .expect("constant term was cleared")
            .scale(&a0.exp())
    }

    /// Largest coefficient-wise absolute difference over the common order.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.sub(other)
            .coeffs
            .iter()
            .fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

impl<T: Scalar> Add for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn add(self, rhs: Self) -> TruncatedSeries<T> {
        TruncatedSeries::add(self, rhs)
    }
}

impl<T: Scalar> Sub for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn sub(self, rhs: Self) -> TruncatedSeries<T> {
        TruncatedSeries::sub(self, rhs)
    }
}

impl<T: Scalar> Mul for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn mul(self, rhs: Self) -> TruncatedSeries<T> {
        TruncatedSeries::mul(self, rhs)
    }
}

impl<T: Scalar> Neg for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn neg(self) -> TruncatedSeries<T> {
        self.scale(&-T::one())
    }
}

impl<T: fmt::Debug> fmt::Debug for TruncatedSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries{:?}", self.coeffs)
    }
}

/// Dense polynomial with exact (untruncated) multiplication.
///
/// Trailing zeros are trimmed so that equality is structural. `Poly<T>` is
/// itself a [`Scalar`], so `TruncatedSeries<Poly<T>>` is a series in one
/// variable whose coefficients are polynomials in another.
#[derive(Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^k`.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, a| acc * x.clone() + a.clone())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a.clone() * T::from_int(k as i64))
                .collect(),
        )
    }

    /// Drops all terms of degree above `deg`.
    pub fn truncate(&self, deg: usize) -> Self {
        Self::new(self.coeffs.iter().take(deg + 1).cloned().collect())
    }
}

impl<T: Scalar> Add for Poly<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Sub for Poly<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Mul for Poly<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Self::new(Vec::new());
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }
}

impl<T: Scalar> Neg for Poly<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl<T: Scalar> Zero for Poly<T> {
    fn zero() -> Self {
        Self::new(Vec::new())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<T: Scalar> One for Poly<T> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Scalar> Scalar for Poly<T> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(T::from_ratio(num, den))
    }
}

impl<T: fmt::Debug> fmt::Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly{:?}", self.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn s(c: &[f64]) -> TruncatedSeries<f64> {
        TruncatedSeries::new(c.to_vec())
    }

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn difference_of_squares() {
        let p = s(&[1.0, 1.0, 0.0]).mul(&s(&[1.0, -1.0, 0.0]));
        assert_eq!(p.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn additive_identity() {
        let a = s(&[1.0, 1.0]);
        assert_eq!(&a + &TruncatedSeries::zero(1), a);
    }

    #[test]
    fn convolution_truncates_at_common_order() {
        let p = s(&[1.0, 2.0, 1.0]).mul(&s(&[1.0, 1.0, 0.0]));
        assert_eq!(p.coeffs(), &[1.0, 3.0, 3.0]);
        // mixed orders: result has the smaller order
        let p = s(&[1.0, 2.0, 1.0, 5.0]).mul(&s(&[1.0, 1.0]));
        assert_eq!(p.order(), 1);
        assert_eq!(p.coeffs(), &[1.0, 3.0]);
    }

    #[test]
    fn ln_of_one_plus_gx() {
        // exact over the rationals with g = 3/7
        let g = q(3, 7);
        let a = TruncatedSeries::new(vec![q(1, 1), g, q(0, 1)]);
        let l = a.ln_unit().unwrap();
        assert_eq!(l.coeffs(), &[q(0, 1), g, -g * g / q(2, 1)]);
    }

    #[test]
    fn ln_of_unit_is_zero() {
        let l = TruncatedSeries::<f64>::one(5).ln().unwrap();
        assert!(l.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn ln_with_non_unit_constant() {
        // ln(e (1 + x)) = 1 + x − x²/2 + x³/3; oracle: pointwise log of the
        // cubic polynomial at small x agrees to O(x⁴).
        let e = std::f64::consts::E;
        let l = s(&[e, e, 0.0, 0.0]).ln().unwrap();
        let expected = [1.0, 1.0, -0.5, 1.0 / 3.0];
        for (c, x) in l.coeffs().iter().zip(expected) {
            assert!((c - x).abs() < 1e-15);
        }
        for x in [1e-3, 2e-3, -1e-3] {
            let pointwise = (e * (1.0 + x)).ln();
            assert!((l.eval(&x) - pointwise).abs() < 2.0 * x.powi(4));
        }
    }

    #[test]
    fn ln_rejects_nonpositive_constant() {
        assert!(s(&[0.0, 1.0]).ln().is_err());
        assert!(s(&[-1.0, 1.0]).ln().is_err());
        assert!(TruncatedSeries::new(vec![q(2, 1), q(1, 1)])
            .ln_unit()
            .is_err());
    }

    #[test]
    fn pow_matches_binomial_and_geometric_oracles() {
        // binomial series oracle: C(1/2, k)
        let half = s(&[1.0, 1.0, 0.0]).pow(0.5).unwrap();
        assert_eq!(half.coeffs(), &[1.0, 0.5, -0.125]);
        // geometric oracle, exact in rationals
        let g = q(-2, 5);
        let inv = TruncatedSeries::new(vec![q(1, 1), g, q(0, 1)])
            .pow_unit(&q(-1, 1))
            .unwrap();
        assert_eq!(inv.coeffs(), &[q(1, 1), -g, g * g]);
        // a^0 = 1
        let z = s(&[2.0, 3.0, -1.0]).pow(0.0).unwrap();
        assert_eq!(z.coeffs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn pow_rejects_nonpositive_constant() {
        assert!(s(&[0.0, 1.0]).pow(0.5).is_err());
    }

    #[test]
    fn derivative_integral_roundtrip() {
        let a = TruncatedSeries::new(vec![q(0, 1), q(1, 2), q(-1, 3)]);
        assert_eq!(a.derivative().integral(), a);
        assert_eq!(
            TruncatedSeries::<f64>::constant(4.0, 0)
                .derivative()
                .order(),
            0
        );
    }

    #[test]
    fn exp_of_ln_is_identity() {
        let a = s(&[2.0, -0.3, 0.7, 0.1]);
        let back = a.ln().unwrap().exp();
        assert!(back.max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn series_over_polynomial_ring() {
        // ln(1 + g x) with g symbolic: coefficients are polynomials in g.
        type P = Poly<Q>;
        let a = TruncatedSeries::new(vec![P::one(), P::x(), P::zero()]);
        let l = a.ln_unit().unwrap();
        assert_eq!(l.coeff(1), P::x());
        assert_eq!(l.coeff(2), P::new(vec![q(0, 1), q(0, 1), q(-1, 2)]));
    }

    #[test]
    fn poly_arithmetic_trims() {
        let a = Poly::new(vec![1.0, 2.0, 0.0]);
        assert_eq!(a.degree(), Some(1));
        let b = a.clone() - a.clone();
        assert!(b.is_zero());
        assert_eq!(b.degree(), None);
        let c = Poly::new(vec![1.0, 1.0]) * Poly::new(vec![-1.0, 1.0]);
        assert_eq!(c.coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.eval(&3.0), 8.0);
        assert_eq!(c.derivative().coeffs(), &[0.0, 2.0]);
    }
}
