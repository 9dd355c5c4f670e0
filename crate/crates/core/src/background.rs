//! The unperturbed two-periodic background.
//!
//! The operator acts on sequences `y_1, y_2, …` with a Dirichlet condition
//! `y_0 = 0`:
//!
//! ```text
//! a_{n-1} y_{n-1} + v_n y_n + a_n y_{n+1} = λ y_n,
//! a_{2n} = a, a_{2n+1} = 1, v_{2n+1} = v, v_{2n} = -v.
//! ```
//!
//! Points of the two-sheeted spectral surface are encoded by the value of
//! the Floquet multiplier: on [`Sheet::Plus`] the multiplier `ξ²` has modulus
//! at most one, on [`Sheet::Minus`] at least one.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{ResidueSign, Result, SpectralError};
use crate::polycore::Polynomial;
use crate::scalar::{Coefficient, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn other(self) -> Self {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint<T> {
    pub lambda: Complex<T>,
    pub sheet: Sheet,
}

impl<T: Real> SheetPoint<T> {
    pub fn new(lambda: Complex<T>, sheet: Sheet) -> Self {
        Self { lambda, sheet }
    }

    pub fn real(x: T, sheet: Sheet) -> Self {
        Self::new(Complex::new(x, T::zero()), sheet)
    }

    pub fn conj(self) -> Self {
        Self::new(self.lambda.conj(), self.sheet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background<T> {
    v: T,
    a: T,
}

impl<T: Coefficient> Background<T> {
    /// Constructor without validation, for coefficient rings where `a > 0`
    /// cannot be checked (or has been checked elsewhere).
    pub fn new_unchecked(v: T, a: T) -> Self {
        Self { v, a }
    }

    pub fn v(&self) -> &T {
        &self.v
    }

    pub fn a(&self) -> &T {
        &self.a
    }

    /// Off-diagonal coefficient `a_n`, `n ≥ 0`.
    pub fn a_n(&self, n: usize) -> T {
        if n % 2 == 0 {
            self.a.clone()
        } else {
            T::one()
        }
    }

    /// Diagonal coefficient `v_n`, `n ≥ 1`.
    pub fn v_n(&self, n: usize) -> T {
        if n % 2 == 1 {
            self.v.clone()
        } else {
            -self.v.clone()
        }
    }

    /// Fundamental solutions `(θ_n, φ_n)` as polynomials in `λ`, with
    /// `θ_0 = 1, θ_1 = 0, φ_0 = 0, φ_1 = 1`.
    pub fn fundamental(&self, n: usize) -> (Polynomial<T>, Polynomial<T>) {
        let (theta, phi) = self.fundamental_sequence(n);
        (theta[n].clone(), phi[n].clone())
    }

    /// `θ_0..=θ_n` and `φ_0..=φ_n`.
    pub fn fundamental_sequence(&self, n: usize) -> (Vec<Polynomial<T>>, Vec<Polynomial<T>>) {
        let step = |y: &[Polynomial<T>], k: usize| -> Polynomial<T> {
            // y_{k+1} = ((λ - v_k) y_k - a_{k-1} y_{k-1}) / a_k
            let lam_minus_v = Polynomial::linear(-self.v_n(k), T::one());
            let num = &(&lam_minus_v * &y[k]) - &y[k - 1].scale(&self.a_n(k - 1));
            num.div_scalar(&self.a_n(k))
        };
        let mut theta = vec![Polynomial::one(), Polynomial::zero()];
        let mut phi = vec![Polynomial::zero(), Polynomial::one()];
        for k in 1..n.max(1) {
            let t = step(&theta, k);
            let p = step(&phi, k);
            theta.push(t);
            phi.push(p);
        }
        theta.truncate(n + 1);
        phi.truncate(n + 1);
        (theta, phi)
    }
}

impl<T: Real> Background<T> {
    pub fn new(v: T, a: T) -> Result<Self> {
        if !v.is_finite() || !a.is_finite() {
            return Err(SpectralError::InvalidInput("background parameters must be finite".into()));
        }
        if a <= T::zero() {
            return Err(SpectralError::InvalidInput(format!("hopping a must be positive, got {a}")));
        }
        Ok(Self { v, a })
    }

    pub fn band_edges(&self) -> BandStructure<T> {
        let one = T::one();
        let outer = (self.v * self.v + (self.a + one) * (self.a + one)).sqrt();
        let inner = (self.v * self.v + (self.a - one) * (self.a - one)).sqrt();
        BandStructure {
            lambda0_plus: -outer,
            lambda1_minus: -inner,
            lambda1_plus: inner,
            lambda0_minus: outer,
        }
    }

    pub fn lyapunov(&self, lambda: Complex<T>) -> Complex<T> {
        let one = T::one();
        (lambda * lambda - self.v * self.v - self.a * self.a - one) / (self.a + self.a)
    }

    pub fn lyapunov_real(&self, lambda: T) -> T {
        (lambda * lambda - self.v * self.v - self.a * self.a - T::one()) / (self.a + self.a)
    }

    pub fn is_strictly_in_band(&self, lambda: Complex<T>, eps_edge: T) -> bool {
        lambda.im == T::zero() && self.lyapunov_real(lambda.re).abs() < T::one() - eps_edge
    }

    /// `(ξ², 1/ξ²)` where `ξ²` is the multiplier of the sheet: modulus at
    /// most one on the plus sheet, at least one on the minus sheet.
    pub fn floquet_multipliers(&self, pt: SheetPoint<T>, eps_edge: T) -> Result<(Complex<T>, Complex<T>)> {
        let delta = self.lyapunov(pt.lambda);
        if pt.lambda.im == T::zero() {
            let d = delta.re;
            if d.abs() < T::one() - eps_edge {
                return Err(SpectralError::OnCut {
                    re: pt.lambda.re.to_f64_lossy(),
                    im: 0.0,
                });
            }
            if (d.abs() - T::one()).abs() <= eps_edge {
                let s = Complex::new(T::one().copysign(d), T::zero());
                return Ok((s, s));
            }
        }
        let (small, big) = multiplier_pair(delta);
        Ok(match pt.sheet {
            Sheet::Plus => (small, big),
            Sheet::Minus => (big, small),
        })
    }

    /// Titchmarsh–Weyl function `m = (ξ² + a)/(λ − v)` on the sheet of `pt`.
    ///
    /// When the numerator is small compared with its partner on the other
    /// sheet, the equivalent form `(λ + v)/(ξ_o² + a)` is used, which keeps the
    /// removable singularity at `λ = v` finite.
    pub fn weyl_m(&self, pt: SheetPoint<T>, eps_edge: T) -> Result<Complex<T>> {
        let (xs, xo) = self.floquet_multipliers(pt, eps_edge)?;
        let a = Complex::new(self.a, T::zero());
        let ns = xs + a;
        let no = xo + a;
        let den = pt.lambda - self.v;
        if ns.norm() <= no.norm() {
            let alt = pt.lambda + self.v;
            if no.norm() == T::zero() {
                return Err(SpectralError::WeylPole { residue: ResidueSign::Zero });
            }
            return Ok(alt / no);
        }
        if den.norm() == T::zero() {
            let residue = if ns.re > T::zero() {
                ResidueSign::Positive
            } else if ns.re < T::zero() {
                ResidueSign::Negative
            } else {
                ResidueSign::Zero
            };
            return Err(SpectralError::WeylPole { residue });
        }
        Ok(ns / den)
    }
}

/// Roots of `ξ² − 2Δξ + 1`, smaller modulus first; the smaller one is
/// computed as the reciprocal of the larger.
pub(crate) fn multiplier_pair<T: Real>(delta: Complex<T>) -> (Complex<T>, Complex<T>) {
    let one = Complex::new(T::one(), T::zero());
    let r = (delta * delta - one).sqrt();
    let p = delta + r;
    let m = delta - r;
    let big = if p.norm() >= m.norm() { p } else { m };
    (one / big, big)
}

/// Where a real point sits relative to the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Lambda0Plus,
    Lambda1Minus,
    Lambda1Plus,
    Lambda0Minus,
}

impl Edge {
    /// Index of the gap whose closure contains the edge.
    pub fn gap(self) -> usize {
        match self {
            Edge::Lambda0Plus => 0,
            Edge::Lambda1Minus | Edge::Lambda1Plus => 1,
            Edge::Lambda0Minus => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Gap(usize),
    Edge(Edge),
    Band(usize),
}

/// Band edges, ordered `λ0_plus ≤ λ1_minus ≤ λ1_plus ≤ λ0_minus`.
///
/// Bands are `[λ0_plus, λ1_minus]` and `[λ1_plus, λ0_minus]`; the gaps are
/// `γ₀ = (−∞, λ0_plus)`, `γ₁ = (λ1_minus, λ1_plus)`, `γ₂ = (λ0_minus, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandStructure<T> {
    pub lambda0_plus: T,
    pub lambda1_minus: T,
    pub lambda1_plus: T,
    pub lambda0_minus: T,
}

impl<T: Real> BandStructure<T> {
    pub fn bands(&self) -> [(T, T); 2] {
        [(self.lambda0_plus, self.lambda1_minus), (self.lambda1_plus, self.lambda0_minus)]
    }

    pub fn edges(&self) -> [(Edge, T); 4] {
        [
            (Edge::Lambda0Plus, self.lambda0_plus),
            (Edge::Lambda1Minus, self.lambda1_minus),
            (Edge::Lambda1Plus, self.lambda1_plus),
            (Edge::Lambda0Minus, self.lambda0_minus),
        ]
    }

    pub fn middle_gap_closed(&self) -> bool {
        self.lambda1_minus == self.lambda1_plus
    }

    /// Total width `λ0_minus − λ0_plus`.
    pub fn bandwidth(&self) -> T {
        self.lambda0_minus - self.lambda0_plus
    }

    /// Classifies a real point; `eps_edge` is an absolute distance to the
    /// nearest edge. When two edges coincide the lower one is reported.
    pub fn locate(&self, x: T, eps_edge: T) -> Location {
        for (edge, e) in self.edges() {
            if (x - e).abs() <= eps_edge {
                return Location::Edge(edge);
            }
        }
        if x < self.lambda0_plus {
            Location::Gap(0)
        } else if x <= self.lambda1_minus {
            Location::Band(0)
        } else if x < self.lambda1_plus {
            Location::Gap(1)
        } else if x <= self.lambda0_minus {
            Location::Band(1)
        } else {
            Location::Gap(2)
        }
    }

    /// Index of the open gap containing `x`, if any.
    pub fn gap_of(&self, x: T) -> Option<usize> {
        if x < self.lambda0_plus {
            Some(0)
        } else if x > self.lambda1_minus && x < self.lambda1_plus {
            Some(1)
        } else if x > self.lambda0_minus {
            Some(2)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-9;

    fn bg(v: f64, a: f64) -> Background<f64> {
        Background::new(v, a).unwrap()
    }

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn band_edge_examples() {
        let b = bg(0.0, 1.0).band_edges();
        assert_eq!((b.lambda0_plus, b.lambda1_minus, b.lambda1_plus, b.lambda0_minus), (-2.0, 0.0, 0.0, 2.0));
        assert!(b.middle_gap_closed());

        let b = bg(1.0, 1.0).band_edges();
        assert!((b.lambda0_minus - 5f64.sqrt()).abs() < 1e-15);
        assert!((b.lambda1_plus - 1.0).abs() < 1e-15 && (b.lambda1_minus + 1.0).abs() < 1e-15);

        let b = bg(3.0, 2.0).band_edges();
        assert!((b.lambda0_minus - 18f64.sqrt()).abs() < 1e-14);
        assert!((b.lambda0_plus + 18f64.sqrt()).abs() < 1e-14);
        assert!((b.lambda1_plus - 10f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lyapunov_examples() {
        for (v, a) in [(1.0, 0.5), (-0.3, 2.0), (2.0, 1.0)] {
            let b = bg(v, a);
            assert!((b.lyapunov_real(v) - (-a * a - 1.0) / (2.0 * a)).abs() < 1e-15);
            let e = b.band_edges();
            assert!((b.lyapunov_real(e.lambda0_plus) - 1.0).abs() < 1e-12);
            assert!((b.lyapunov_real(e.lambda0_minus) - 1.0).abs() < 1e-12);
            assert!((b.lyapunov_real(e.lambda1_plus) + 1.0).abs() < 1e-12);
            assert!((b.lyapunov_real(e.lambda1_minus) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplier_at_v() {
        let (x, _) = bg(1.0, 0.5).floquet_multipliers(SheetPoint::real(1.0, Sheet::Plus), EPS).unwrap();
        assert!((x - c(-0.5)).norm() < 1e-15);
        let (x, _) = bg(1.0, 2.0).floquet_multipliers(SheetPoint::real(1.0, Sheet::Plus), EPS).unwrap();
        assert!((x - c(-0.5)).norm() < 1e-15);
        let (x, _) = bg(1.0, 0.5).floquet_multipliers(SheetPoint::real(1.0, Sheet::Minus), EPS).unwrap();
        assert!((x - c(-2.0)).norm() < 1e-15);
    }

    #[test]
    fn on_cut_is_rejected() {
        let b = bg(1.0, 1.0);
        let mid = 0.5 * (b.band_edges().lambda1_plus + b.band_edges().lambda0_minus);
        assert!(matches!(
            b.floquet_multipliers(SheetPoint::real(mid, Sheet::Plus), EPS),
            Err(SpectralError::OnCut { .. })
        ));
        let e = b.band_edges().lambda0_minus;
        let (x, y) = b.floquet_multipliers(SheetPoint::real(e, Sheet::Plus), EPS).unwrap();
        assert_eq!((x, y), (c(1.0), c(1.0)));
    }

    #[test]
    fn fundamental_examples() {
        let (v, a) = (0.7, 1.3);
        let b = bg(v, a);
        let (t2, p2) = b.fundamental(2);
        assert_eq!(t2, Polynomial::constant(-a));
        assert_eq!(p2, Polynomial::new(vec![-v, 1.0]));
        let (t3, p3) = b.fundamental(3);
        for x in [-1.0, 0.2, 2.5] {
            assert!((p3.eval(&x) - (x * x - v * v - 1.0) / a).abs() < 1e-14);
            assert!((t3.eval(&x) + x + v).abs() < 1e-14);
        }
        let (t0, p0) = b.fundamental(0);
        assert_eq!((t0, p0), (Polynomial::one(), Polynomial::zero()));
    }

    #[test]
    fn wronskian_is_constant() {
        let b = bg(-0.4, 0.8);
        let (th, ph) = b.fundamental_sequence(12);
        for x in [-2.0, -0.5, 0.1, 0.9, 3.0] {
            for n in 0..12 {
                let (t0, t1, p0, p1) = (th[n].eval(&x), th[n + 1].eval(&x), ph[n].eval(&x), ph[n + 1].eval(&x));
                let w = b.a_n(n) * (t0 * p1 - t1 * p0);
                let scale = (t0 * p1).abs() + (t1 * p0).abs();
                assert!((w - b.a()).abs() < 1e-13 * scale.max(1.0), "n={n} x={x} w={w}");
            }
        }
    }

    #[test]
    fn removable_value_at_v() {
        // a < 1: the plus-sheet numerator vanishes at v
        let (v, a) = (0.8, 0.5);
        let b = bg(v, a);
        let m = b.weyl_m(SheetPoint::real(v, Sheet::Plus), EPS).unwrap();
        let want = -2.0 * a * v / (1.0 - a * a);
        assert!((m - c(want)).norm() < 1e-14);
        let h = 1e-5;
        let num = |x: f64| {
            let (xs, _) = b.floquet_multipliers(SheetPoint::real(x, Sheet::Plus), EPS).unwrap();
            (xs.re + a) / (x - v)
        };
        assert!((0.5 * (num(v + h) + num(v - h)) - want).abs() < 1e-8);
        assert!(matches!(
            b.weyl_m(SheetPoint::real(v, Sheet::Minus), EPS),
            Err(SpectralError::WeylPole { residue: ResidueSign::Negative })
        ));
    }

    #[test]
    fn weyl_blowup_at_virtual_edge() {
        // a = 1, v > 0: |m₊(v − ε)| √ε → √(2v), with the sign of λ − v
        let v = 1.5;
        let b = bg(v, 1.0);
        for eps in [1e-6, 1e-8, 1e-10] {
            let m = b.weyl_m(SheetPoint::real(v - eps, Sheet::Plus), 1e-13).unwrap();
            assert!((m.re * eps.sqrt() + (2.0 * v).sqrt()).abs() < 5.0 * eps.sqrt());
        }
    }

    fn gap_point(b: &Background<f64>, t: f64, gap: usize) -> f64 {
        let e = b.band_edges();
        match gap {
            0 => e.lambda0_plus - 0.01 - 3.0 * t,
            1 => e.lambda1_minus + (0.02 + 0.96 * t) * (e.lambda1_plus - e.lambda1_minus),
            _ => e.lambda0_minus + 0.01 + 3.0 * t,
        }
    }

    proptest! {
        #[test]
        fn weyl_identities(v in -2.0f64..2.0, a in 0.1f64..2.0, t in 0.0f64..1.0, gap in 0usize..3,
                           re in -3.0f64..3.0, im in 0.01f64..2.0) {
            let b = bg(v, a);
            prop_assume!(gap != 1 || (b.band_edges().lambda1_plus - b.band_edges().lambda1_minus) > 1e-3);
            let x = gap_point(&b, t, gap);
            prop_assume!((x - v).abs() > 1e-3);
            for z in [c(x), Complex::new(re, im), Complex::new(re, -im)] {
                let mp = b.weyl_m(SheetPoint::new(z, Sheet::Plus), EPS).unwrap();
                let mm = b.weyl_m(SheetPoint::new(z, Sheet::Minus), EPS).unwrap();
                let phi2 = z - v;
                let phi = b.lyapunov(z) + a;
                let prod = (z + v) / phi2;
                let sum = phi * 2.0 / phi2;
                prop_assert!((mp * mm - prod).norm() <= 1e-10 * prod.norm().max(1.0));
                prop_assert!((mp + mm - sum).norm() <= 1e-10 * sum.norm().max(1.0));
            }
        }

        #[test]
        fn fact7_identity(v in -2.0f64..2.0, a in 0.1f64..2.0, re in -4.0f64..4.0, im in -4.0f64..4.0) {
            let b = bg(v, a);
            let z = Complex::new(re, im);
            let d = b.lyapunov(z);
            let phi = d + a;
            let lhs = phi * phi + 1.0 - d * d;
            let rhs = (z + v) * (z - v);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (phi.norm_sqr() + d.norm_sqr() + 1.0));
        }

        #[test]
        fn multiplier_product_and_decay(v in -2.0f64..2.0, a in 0.1f64..2.0, t in 0.0f64..1.0, gap in 0usize..3,
                                        re in -3.0f64..3.0, im in -2.0f64..2.0, sheet in prop::bool::ANY) {
            let b = bg(v, a);
            let s = if sheet { Sheet::Plus } else { Sheet::Minus };
            prop_assume!(im.abs() > 1e-6);
            let (xs, xo) = b.floquet_multipliers(SheetPoint::new(Complex::new(re, im), s), EPS).unwrap();
            prop_assert!((xs * xo - 1.0).norm() < 1e-14);
            match s {
                Sheet::Plus => prop_assert!(xs.norm() <= 1.0),
                Sheet::Minus => prop_assert!(xs.norm() >= 1.0),
            }
            prop_assume!(gap != 1 || (b.band_edges().lambda1_plus - b.band_edges().lambda1_minus) > 1e-3);
            let x = gap_point(&b, t, gap);
            let (xp, _) = b.floquet_multipliers(SheetPoint::real(x, Sheet::Plus), EPS).unwrap();
            prop_assert!(xp.norm() < 1.0 && xp.im == 0.0);
        }

        #[test]
        fn conjugate_points_give_conjugate_multipliers(v in -2.0f64..2.0, a in 0.1f64..2.0,
                                                        re in -3.0f64..3.0, im in 0.001f64..2.0) {
            let b = bg(v, a);
            let z = Complex::new(re, im);
            for s in [Sheet::Plus, Sheet::Minus] {
                let (x1, _) = b.floquet_multipliers(SheetPoint::new(z, s), EPS).unwrap();
                let (x2, _) = b.floquet_multipliers(SheetPoint::new(z.conj(), s), EPS).unwrap();
                prop_assert!((x1.conj() - x2).norm() < 1e-13);
            }
        }
    }
}
