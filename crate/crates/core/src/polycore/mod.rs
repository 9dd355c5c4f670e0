//! Dense polynomials over a coefficient ring and their complex roots.
//!
//! Coefficients are stored in increasing degree: `coeffs[i]` multiplies `λ^i`.
//! The representation is always normalized: the highest stored coefficient is
//! nonzero, and the zero polynomial has no coefficients at all.

mod eigen;
mod roots;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::{Coefficient, Real, Ring};

pub use roots::{Root, RootOptions};

#[derive(Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Ring> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// `c0 + c1 λ`
    pub fn linear(c0: T, c1: T) -> Self {
        Self::new(vec![c0, c1])
    }

    /// The indeterminate `λ`.
    pub fn x() -> Self {
        Self::linear(T::zero(), T::one())
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of `λ^i`, zero past the degree.
    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    /// Multiplication by the indeterminate.
    pub fn mul_x(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(T::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                let mut k = T::zero();
                for _ in 0..i {
                    k = k + T::one();
                }
                c.clone() * k
            })
            .collect();
        Self::new(coeffs)
    }

    /// Horner evaluation in the coefficient ring.
    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// Drops every coefficient above `degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        Self::new(self.coeffs.iter().take(degree + 1).cloned().collect())
    }

    /// Coefficient-wise conversion into another ring.
    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::new(self.coeffs.iter().map(f).collect())
    }
}

impl<T: Coefficient> Polynomial<T> {
    /// Divides every coefficient by `s`; `s` must be nonzero.
    pub fn div_scalar(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() / s.clone()).collect())
    }

    /// Lossy conversion to doubles.
    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map(|c| c.to_f64_lossy())
    }

    /// Largest coefficient magnitude, zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

impl<T: Real> Polynomial<T> {
    /// Builds `leading · Π (λ − r)^m` from real-coefficient root data; the
    /// imaginary part of the expansion is discarded.
    pub fn from_roots(leading: T, roots: &[Root<T>]) -> Self {
        let mut acc: Vec<Complex<T>> = vec![Complex::new(leading, T::zero())];
        for root in roots {
            for _ in 0..root.multiplicity {
                let mut next = vec![Complex::new(T::zero(), T::zero()); acc.len() + 1];
                for (i, c) in acc.iter().enumerate() {
                    next[i + 1] = next[i + 1] + c;
                    next[i] = next[i] - c * root.value;
                }
                acc = next;
            }
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, c| acc * z + *c)
    }

    /// Value and first derivative at `z`.
    pub fn eval_with_derivative(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        let mut p = zero;
        let mut dp = zero;
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + *c;
        }
        (p, dp)
    }

    /// `Σ |c_i| |z|^i`, the natural magnitude against which `|p(z)|` is
    /// judged small.
    pub fn eval_scale(&self, z: Complex<T>) -> T {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * r + c.abs())
    }

    /// Product with Neumaier-compensated accumulation of every output
    /// coefficient.
    pub fn mul_compensated(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let lo = k.saturating_sub(other.coeffs.len() - 1);
            let hi = k.min(self.coeffs.len() - 1);
            let terms = (lo..=hi).map(|i| self.coeffs[i] * other.coeffs[k - i]);
            out.push(neumaier_sum(terms));
        }
        Self::new(out)
    }

    /// Sum of several polynomials with compensated accumulation.
    pub fn sum_compensated(parts: &[&Self]) -> Self {
        let n = parts.iter().map(|p| p.coeffs.len()).max().unwrap_or(0);
        let out = (0..n)
            .map(|k| neumaier_sum(parts.iter().map(|p| p.coeff(k))))
            .collect();
        Self::new(out)
    }
}

fn neumaier_sum<T: Real>(terms: impl Iterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

impl<T: Ring> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<T: Ring> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<T: Ring> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Ring> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl<T: Ring> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $method(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<T: fmt::Debug> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Polynomial").field(&self.coeffs).finish()
    }
}

impl<T: Coefficient> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c.to_f64_lossy())?,
                1 => write!(f, "{}·λ", c.to_f64_lossy())?,
                _ => write!(f, "{}·λ^{}", c.to_f64_lossy(), i)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Polynomial<f64> {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn add_examples() {
        assert_eq!(&p(&[1.0]) + &p(&[0.0]), p(&[1.0]));
        let v = 0.7;
        assert_eq!(&p(&[-v, 1.0]) + &p(&[v, 1.0]), p(&[0.0, 2.0]));
        assert_eq!(&p(&[1.0, 2.0]) + &p(&[0.0, 0.0, 3.0]), p(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn mul_examples() {
        let v = 1.5;
        assert_eq!(&p(&[-v, 1.0]) * &p(&[v, 1.0]), p(&[-v * v, 0.0, 1.0]));
        let q = p(&[3.0, -1.0, 4.0]);
        assert_eq!(&q * &Polynomial::one(), q);
        assert_eq!(&p(&[-1.0, 1.0]) * &p(&[-2.0, 1.0]), p(&[2.0, -3.0, 1.0]));
    }

    #[test]
    fn eval_examples() {
        let v = 1.0;
        let q = p(&[-v * v - 1.0, 0.0, 1.0]);
        assert_eq!(q.eval(&2.0), 2.0);
        assert_eq!(Polynomial::<f64>::zero().eval(&3.0), 0.0);
        let lin = p(&[-0.3, 1.0]);
        assert_eq!(lin.eval(&0.3), 0.0);
    }

    #[test]
    fn normalization_strips_trailing_zeros() {
        let q = p(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(q.degree(), Some(1));
        assert_eq!(p(&[0.0, 0.0]).degree(), None);
        assert!(p(&[]).is_zero());
    }

    #[test]
    fn derivative_and_mul_x() {
        let q = p(&[1.0, 2.0, 3.0]);
        assert_eq!(q.derivative(), p(&[2.0, 6.0]));
        assert_eq!(q.mul_x(), p(&[0.0, 1.0, 2.0, 3.0]));
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        let third = BigRational::new(1.into(), 3.into());
        let a = Polynomial::new(vec![third.clone(), BigRational::from_integer(1.into())]);
        let b = &a * &a;
        assert_eq!(b.coeff(0), &third * &third);
        assert_eq!((&b - &b).degree(), None);
    }

    #[test]
    fn compensated_product_matches_plain() {
        let a = p(&[0.1, -2.0, 3.5, 1e-3]);
        let b = p(&[4.0, 0.25, -1.0]);
        let plain = &a * &b;
        let comp = a.mul_compensated(&b);
        for (x, y) in plain.coeffs().iter().zip(comp.coeffs()) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    fn poly_strategy() -> impl Strategy<Value = Polynomial<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..8).prop_map(Polynomial::new)
    }

    fn close(a: Complex<f64>, b: Complex<f64>, scale: f64) -> bool {
        (a - b).norm() <= 1e-12 * scale.max(1.0)
    }

    proptest! {
        #[test]
        fn ring_axioms_hold_pointwise(
            a in poly_strategy(),
            b in poly_strategy(),
            c in poly_strategy(),
            pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 20),
        ) {
            let ab = &a * &b;
            let a_plus_b = &a + &b;
            let distrib_l = &a * &(&b + &c);
            let distrib_r = &(&a * &b) + &(&a * &c);
            let assoc_l = &(&a * &b) * &c;
            let assoc_r = &a * &(&b * &c);
            for (re, im) in pts {
                let z = Complex::new(re, im);
                let (ea, eb, ec) = (a.eval_complex(z), b.eval_complex(z), c.eval_complex(z));
                let s = (ea.norm() + 1.0) * (eb.norm() + 1.0) * (ec.norm() + 1.0) * 50.0;
                prop_assert!(close(ab.eval_complex(z), ea * eb, s));
                prop_assert!(close(a_plus_b.eval_complex(z), ea + eb, s));
                prop_assert!(close(distrib_l.eval_complex(z), distrib_r.eval_complex(z), s));
                prop_assert!(close(assoc_l.eval_complex(z), assoc_r.eval_complex(z), s));
                prop_assert!(close((&a * &b).eval_complex(z), (&b * &a).eval_complex(z), s));
            }
        }
    }
}
