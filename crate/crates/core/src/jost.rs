//! Perturbed fundamental solutions, Jost functions and the state polynomial.
//!
//! The perturbed operator replaces `v_n` by `ṽ_n = v_n + q_n` for
//! `1 ≤ n ≤ p`. The state polynomial
//!
//! ```text
//! F = (λ − v) θ̃₀² + (λ² − v² + a² − 1)/a · θ̃₀ φ̃₀ + (λ + v) φ̃₀²
//! ```
//!
//! equals `(λ − v) f⁺ f⁻` and has degree `2p`; its zeros are the states.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dyadic;
use crate::background::{Background, Sheet, SheetPoint};
use crate::error::{Result, SpectralError};
use crate::polycore::Polynomial;
use crate::scalar::{Coefficient, Real};
use crate::tolerance::{Construction, Tolerances};

/// Finitely supported diagonal perturbation `q_1..q_p` with `q_p ≠ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Perturbation<T> {
    q: Vec<T>,
}

impl<T: Coefficient> Perturbation<T> {
    pub fn new(q: Vec<T>) -> Result<Self> {
        if q.last().is_some_and(|x| x.is_zero()) {
            return Err(SpectralError::InvalidInput("last perturbation entry q_p must be nonzero".into()));
        }
        Ok(Self { q })
    }

    pub fn empty() -> Self {
        Self { q: Vec::new() }
    }

    pub fn p(&self) -> usize {
        self.q.len()
    }

    pub fn values(&self) -> &[T] {
        &self.q
    }

    /// `q_n` for `n ≥ 1`, zero outside the support.
    pub fn q(&self, n: usize) -> T {
        if n >= 1 && n <= self.q.len() {
            self.q[n - 1].clone()
        } else {
            T::zero()
        }
    }

    /// Perturbed diagonal `ṽ_n = v_n + q_n`.
    pub fn tilde_v(&self, bg: &Background<T>, n: usize) -> T {
        bg.v_n(n) + self.q(n)
    }

    pub fn scaled(&self, t: &T) -> Self {
        Self { q: self.q.iter().map(|x| x.clone() * t.clone()).collect() }
    }

    pub fn map<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Perturbation<U> {
        Perturbation { q: self.q.iter().map(f).collect() }
    }
}

impl<T: Real> Perturbation<T> {
    pub fn finite(q: Vec<T>) -> Result<Self> {
        if q.iter().any(|x| !x.is_finite()) {
            return Err(SpectralError::InvalidInput("perturbation entries must be finite".into()));
        }
        Self::new(q)
    }
}

/// `θ̃₀` and `φ̃₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSolutionPair<T> {
    pub theta0: Polynomial<T>,
    pub phi0: Polynomial<T>,
}

/// `θ̃_n, φ̃_n` for `n = 0..=p+1`, obtained from the background values at
/// `n = p, p + 1` by downward recursion.
pub fn perturbed_sequence<T: Coefficient>(
    bg: &Background<T>,
    q: &Perturbation<T>,
) -> (Vec<Polynomial<T>>, Vec<Polynomial<T>>) {
    let p = q.p();
    let (theta, phi) = bg.fundamental_sequence(p + 1);
    let down = |seed: &[Polynomial<T>]| {
        let mut y = vec![Polynomial::zero(); p + 2];
        y[p] = seed[p].clone();
        y[p + 1] = seed[p + 1].clone();
        for n in (1..=p).rev() {
            // y_{n-1} = ((λ - ṽ_n) y_n - a_n y_{n+1}) / a_{n-1}
            let shift = Polynomial::linear(-q.tilde_v(bg, n), T::one());
            let num = &(&shift * &y[n]) - &y[n + 1].scale(&bg.a_n(n));
            y[n - 1] = num.div_scalar(&bg.a_n(n - 1));
        }
        y
    };
    (down(&theta), down(&phi))
}

pub fn perturbed_fundamentals<T: Coefficient>(
    bg: &Background<T>,
    q: &Perturbation<T>,
) -> PerturbedSolutionPair<T> {
    let (mut theta, mut phi) = perturbed_sequence(bg, q);
    PerturbedSolutionPair { theta0: theta.swap_remove(0), phi0: phi.swap_remove(0) }
}

/// Expected leading coefficient of `F`: `−q_p/(a_0⋯a_p)²`, times `a²` for even `p`.
pub fn expected_leading<T: Coefficient>(bg: &Background<T>, q: &Perturbation<T>) -> T {
    let p = q.p();
    if p == 0 {
        return T::one();
    }
    let mut prod = T::one();
    for n in 0..=p {
        prod = prod * bg.a_n(n);
    }
    let base = -q.q(p) / (prod.clone() * prod);
    if p % 2 == 0 {
        base * bg.a().clone() * bg.a().clone()
    } else {
        base
    }
}

/// `F` assembled from the perturbed solutions without any truncation.
fn assemble_f<T: Coefficient>(bg: &Background<T>, sol: &PerturbedSolutionPair<T>) -> Polynomial<T> {
    let v = bg.v().clone();
    let a = bg.a().clone();
    let lam_minus_v = Polynomial::linear(-v.clone(), T::one());
    let lam_plus_v = Polynomial::linear(v.clone(), T::one());
    let mid = Polynomial::new(vec![a.clone() * a.clone() - v.clone() * v - T::one(), T::zero(), T::one()])
        .div_scalar(&a);
    let t = &sol.theta0;
    let f = &sol.phi0;
    &(&(&lam_minus_v * &(t * t)) + &(&mid * &(t * f))) + &(&lam_plus_v * &(f * f))
}

fn assemble_f_compensated<T: Real>(bg: &Background<T>, sol: &PerturbedSolutionPair<T>) -> Polynomial<T> {
    let (v, a) = (*bg.v(), *bg.a());
    let lam_minus_v = Polynomial::linear(-v, T::one());
    let lam_plus_v = Polynomial::linear(v, T::one());
    let mid = Polynomial::new(vec![(a * a - v * v - T::one()) / a, T::zero(), T::one() / a]);
    let t = &sol.theta0;
    let f = &sol.phi0;
    let p1 = lam_minus_v.mul_compensated(&t.mul_compensated(t));
    let p2 = mid.mul_compensated(&t.mul_compensated(f));
    let p3 = lam_plus_v.mul_compensated(&f.mul_compensated(f));
    Polynomial::sum_compensated(&[&p1, &p2, &p3])
}

/// Degree of `F`: `2p`, or one for the unperturbed `F = λ − v`.
pub fn f_degree(p: usize) -> usize {
    if p == 0 {
        1
    } else {
        2 * p
    }
}

/// Checks that everything above degree `2p` is negligible and drops it.
fn truncate_checked<T: Coefficient>(f: Polynomial<T>, p: usize, tol: f64) -> Result<Polynomial<T>> {
    let deg = f_degree(p);
    let lead = f.coeff(deg).magnitude();
    let excess = f.coeffs().iter().skip(deg + 1).map(|c| c.magnitude()).fold(0.0, f64::max);
    if lead == 0.0 || !(excess <= tol * lead) {
        let ratio = if lead == 0.0 { f64::INFINITY } else { excess / lead };
        return Err(SpectralError::CancellationFailure { degree: deg, ratio });
    }
    Ok(f.truncated(deg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePolynomial<T> {
    pub f: Polynomial<T>,
    pub background: Background<T>,
    pub perturbation: Perturbation<T>,
    pub solutions: PerturbedSolutionPair<T>,
    /// Whether the exact-rational path produced the coefficients.
    pub exact: bool,
}

/// State polynomial built according to `tol.construction`.
pub fn state_polynomial<T: Real>(bg: &Background<T>, q: &Perturbation<T>, tol: &Tolerances) -> Result<StatePolynomial<T>> {
    match tol.construction {
        Construction::Exact => state_polynomial_exact(bg, q),
        Construction::Float => state_polynomial_float(bg, q, tol),
        Construction::Auto => match state_polynomial_float(bg, q, tol) {
            Err(SpectralError::CancellationFailure { .. }) => state_polynomial_exact(bg, q),
            other => other,
        },
    }
}

/// Floating point construction with the cancellation check.
pub fn state_polynomial_float<T: Real>(bg: &Background<T>, q: &Perturbation<T>, tol: &Tolerances) -> Result<StatePolynomial<T>> {
    let sol = perturbed_fundamentals(bg, q);
    let f = truncate_checked(assemble_f_compensated(bg, &sol), q.p(), tol.cancellation)?;
    Ok(StatePolynomial { f, background: *bg, perturbation: q.clone(), solutions: sol, exact: false })
}

/// Exact construction from the binary values of the inputs, rounded to `T`
/// once at the end.
pub fn state_polynomial_exact<T: Real>(bg: &Background<T>, q: &Perturbation<T>) -> Result<StatePolynomial<T>> {
    let qs: Vec<f64> = q.values().iter().map(|x| x.to_f64_lossy()).collect();
    let built = dyadic::build(bg.v().to_f64_lossy(), bg.a().to_f64_lossy(), &qs)
        .ok_or_else(|| SpectralError::InvalidInput("non-finite parameter".into()))?;
    let deg = f_degree(q.p());
    if built.degree != Some(deg) {
        return Err(SpectralError::CancellationFailure { degree: deg, ratio: f64::INFINITY });
    }
    let back = |c: &[f64]| Polynomial::new(c.iter().map(|x| T::lit(*x)).collect());
    Ok(StatePolynomial {
        f: back(&built.f),
        background: *bg,
        perturbation: q.clone(),
        solutions: PerturbedSolutionPair { theta0: back(&built.theta0), phi0: back(&built.phi0) },
        exact: true,
    })
}

/// `F` over an arbitrary coefficient field, truncated to its nominal degree.
/// Over an exact field the discarded coefficients are zero.
pub fn state_polynomial_in<T: Coefficient>(bg: &Background<T>, q: &Perturbation<T>) -> Polynomial<T> {
    let sol = perturbed_fundamentals(bg, q);
    assemble_f(bg, &sol).truncated(f_degree(q.p()))
}

impl<T: Real> StatePolynomial<T> {
    pub fn eval(&self, lambda: Complex<T>) -> Complex<T> {
        self.f.eval_complex(lambda)
    }

    pub fn p(&self) -> usize {
        self.perturbation.p()
    }
}

/// Jost function value together with its natural magnitude
/// `max(1, |θ̃₀|, |m φ̃₀|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostValue<T> {
    pub value: Complex<T>,
    pub scale: T,
}

impl<T: Real> JostValue<T> {
    pub fn relative(&self) -> T {
        self.value.norm() / self.scale
    }
}

/// Floquet solution `ψ_n` on the sheet of `pt`: `ψ_{2k} = ξ^{2k}`,
/// `ψ_{2k+1} = m ξ^{2k}`.
fn floquet_value<T: Real>(m: Complex<T>, xi2: Complex<T>, n: usize) -> Complex<T> {
    let pow = xi2.powu((n / 2) as u32);
    if n % 2 == 0 {
        pow
    } else {
        m * pow
    }
}

/// `f_0..=f_{max(n, p+1)}` at a point where `m` is finite.
fn jost_sequence<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    lambda: Complex<T>,
    m: Complex<T>,
    xi2: Complex<T>,
    n_max: usize,
) -> Vec<Complex<T>> {
    let p = q.p();
    let top = n_max.max(p + 1);
    let mut f = vec![Complex::new(T::zero(), T::zero()); top + 1];
    for (n, slot) in f.iter_mut().enumerate().skip(p) {
        *slot = floquet_value(m, xi2, n);
    }
    for n in (1..=p).rev() {
        let num = (lambda - q.tilde_v(bg, n)) * f[n] - f[n + 1] * bg.a_n(n);
        f[n - 1] = num / bg.a_n(n - 1);
    }
    f
}

/// Jost function `f₀ = θ̃₀ + m φ̃₀` on the sheet of `pt`.
///
/// At `λ = v` on a sheet where `m` has a pole, the analytic continuation
/// `θ̃₀(v) + (ξ²(v) + a) φ̃₀′(v)` is returned when `φ̃₀(v) = 0`.
pub fn jost_value<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    sol: &PerturbedSolutionPair<T>,
    pt: SheetPoint<T>,
    tol: &Tolerances,
) -> Result<JostValue<T>> {
    let eps = T::lit(tol.edge);
    let lambda = pt.lambda;
    let theta = sol.theta0.eval_complex(lambda);
    let phi = sol.phi0.eval_complex(lambda);
    match bg.weyl_m(pt, eps) {
        Ok(m) => {
            let (xi2, _) = bg.floquet_multipliers(pt, eps)?;
            let f = jost_sequence(bg, q, lambda, m, xi2, 0);
            let scale = T::one().max(theta.norm()).max((m * phi).norm());
            Ok(JostValue { value: f[0], scale })
        }
        Err(SpectralError::WeylPole { .. }) => pole_limit(bg, &sol.theta0, &sol.phi0, pt, tol),
        Err(e) => Err(e),
    }
}

fn pole_limit<T: Real>(
    bg: &Background<T>,
    theta: &Polynomial<T>,
    phi: &Polynomial<T>,
    pt: SheetPoint<T>,
    tol: &Tolerances,
) -> Result<JostValue<T>> {
    let v = Complex::new(*bg.v(), T::zero());
    let th = theta.eval_complex(v);
    let ph = phi.eval_complex(v);
    let dph = phi.derivative().eval_complex(v);
    let scale = T::one().max(th.norm()).max(dph.norm());
    if ph.norm() > T::lit(tol.jost_zero) * scale {
        return Err(SpectralError::PoleAtV { phi0_at_v: ph.re.to_f64_lossy() });
    }
    let (xi2, _) = bg.floquet_multipliers(pt, T::lit(tol.edge))?;
    let residue = xi2 + *bg.a();
    let value = th + residue * dph;
    Ok(JostValue { value, scale: scale.max((residue * dph).norm()) })
}

/// Jost solution `f_n = θ̃_n + m φ̃_n`; equal to the Floquet solution for `n > p`.
pub fn jost_solution<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    pt: SheetPoint<T>,
    n: usize,
    tol: &Tolerances,
) -> Result<Complex<T>> {
    let eps = T::lit(tol.edge);
    match bg.weyl_m(pt, eps) {
        Ok(m) => {
            let (xi2, _) = bg.floquet_multipliers(pt, eps)?;
            Ok(jost_sequence(bg, q, pt.lambda, m, xi2, n)[n])
        }
        Err(SpectralError::WeylPole { .. }) => {
            let (th, ph) = solutions_at(bg, q, n);
            pole_limit(bg, &th, &ph, pt, tol).map(|j| j.value)
        }
        Err(e) => Err(e),
    }
}

/// `θ̃_n, φ̃_n` for any `n`.
fn solutions_at<T: Real>(bg: &Background<T>, q: &Perturbation<T>, n: usize) -> (Polynomial<T>, Polynomial<T>) {
    let p = q.p();
    if n <= p + 1 {
        let (mut t, mut f) = perturbed_sequence(bg, q);
        return (t.swap_remove(n), f.swap_remove(n));
    }
    bg.fundamental(n)
}

/// `f⁺` and `f⁻` at the same projection with the plus-sheet scale.
pub fn jost_pair<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    sol: &PerturbedSolutionPair<T>,
    lambda: Complex<T>,
    tol: &Tolerances,
) -> Result<(JostValue<T>, JostValue<T>)> {
    Ok((
        jost_value(bg, q, sol, SheetPoint::new(lambda, Sheet::Plus), tol)?,
        jost_value(bg, q, sol, SheetPoint::new(lambda, Sheet::Minus), tol)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bg(v: f64, a: f64) -> Background<f64> {
        Background::new(v, a).unwrap()
    }

    fn pert(q: &[f64]) -> Perturbation<f64> {
        Perturbation::new(q.to_vec()).unwrap()
    }

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn rejects_trailing_zero() {
        assert!(Perturbation::new(vec![1.0, 0.0]).is_err());
        assert!(Perturbation::<f64>::new(vec![]).is_ok());
    }

    #[test]
    fn unperturbed_solutions() {
        let s = perturbed_fundamentals(&bg(0.3, 0.7), &Perturbation::empty());
        assert_eq!(s.theta0, Polynomial::one());
        assert!(s.phi0.is_zero());
        let f = state_polynomial(&bg(0.3, 0.7), &Perturbation::empty(), &Tolerances::default()).unwrap();
        assert_eq!(f.f, Polynomial::new(vec![-0.3, 1.0]));
    }

    #[test]
    fn one_site_solutions() {
        let (v, a, q1) = (0.4, 1.7, -0.9);
        let s = perturbed_fundamentals(&bg(v, a), &pert(&[q1]));
        assert_eq!(s.theta0.degree(), Some(0));
        assert!((s.theta0.coeff(0) - 1.0).abs() < 1e-15);
        assert_eq!(s.phi0.degree(), Some(0));
        assert!((s.phi0.coeff(0) + q1 / a).abs() < 1e-15);
    }

    #[test]
    fn one_site_state_polynomial() {
        for (v, a, q1) in [(1.0, 1.0, 1.0), (-0.7, 0.3, 2.5), (1.9, 1.6, -0.4)] {
            let f = state_polynomial(&bg(v, a), &pert(&[q1]), &Tolerances::default()).unwrap().f;
            let a2 = a * a;
            let want = [q1 * q1 * v + q1 * (v * v + 1.0 - a2) - v * a2, q1 * q1 + a2, -q1];
            assert_eq!(f.degree(), Some(2));
            for (i, w) in want.iter().enumerate() {
                assert!((f.coeff(i) - w / a2).abs() < 1e-13 * (1.0 + w.abs() / a2), "i={i}");
            }
        }
    }

    #[test]
    fn two_site_cubic() {
        for (v, a, q2) in [(1.0, 1.0, 1.0), (0.3, 0.6, -1.4), (-1.2, 1.9, 0.25)] {
            let f = state_polynomial(&bg(v, a), &pert(&[0.0, q2]), &Tolerances::default()).unwrap().f;
            let k = [
                (v * q2 - v * v - 1.0) * (v * q2 - a * a) - v * v * a * a,
                -q2 * (2.0 * v * q2 - v * v - a * a - 1.0),
                v * q2 + q2 * q2,
                -q2,
            ];
            for x in [-2.0, -0.4, 0.5, 1.3, 3.0] {
                let cubic = k[0] + x * (k[1] + x * (k[2] + x * k[3]));
                let lhs = a * a * f.eval(&x) / (x - v);
                assert!((lhs - cubic).abs() < 1e-11 * (1.0 + cubic.abs()));
            }
        }
    }

    #[test]
    fn lemma_odd_zero_gives_phi_zero_at_v() {
        let b = bg(0.8, 1.3);
        let s = perturbed_fundamentals(&b, &pert(&[0.0, 1.1, 0.0, -0.6]));
        assert!(s.phi0.eval(&0.8).abs() < 1e-13);
    }

    #[test]
    fn two_site_explicit_solutions() {
        let (v, a, q1, q2) = (0.6, 0.9, 0.35, -1.2);
        let s = perturbed_fundamentals(&bg(v, a), &pert(&[q1, q2]));
        for x in [-1.0, 0.3, 2.0] {
            let l = x - v;
            let th = (l - q1) * q2 + 1.0;
            let ph = ((l - q1) * (1.0 - q2 * l) - l) / a;
            assert!((s.theta0.eval(&x) - th).abs() < 1e-13);
            assert!((s.phi0.eval(&x) - ph).abs() < 1e-13);
        }
    }

    #[test]
    fn bound_state_of_one_site_example() {
        let (b, q) = (bg(1.0, 1.0), pert(&[1.0]));
        let sol = perturbed_fundamentals(&b, &q);
        let j = jost_value(&b, &q, &sol, SheetPoint::real(1.0 + 2f64.sqrt(), Sheet::Plus), &Tolerances::default()).unwrap();
        assert!(j.value.norm() < 1e-9);
    }

    #[test]
    fn unperturbed_jost_is_one() {
        let (b, q) = (bg(0.5, 1.5), Perturbation::empty());
        let sol = perturbed_fundamentals(&b, &q);
        let t = Tolerances::default();
        for z in [Complex::new(0.2, 0.7), c(-5.0), c(0.5)] {
            for s in [Sheet::Plus, Sheet::Minus] {
                let j = jost_value(&b, &q, &sol, SheetPoint::new(z, s), &t).unwrap();
                assert!((j.value - 1.0).norm() < 1e-14);
            }
        }
        let z = Complex::new(0.1, 0.3);
        let m = b.weyl_m(SheetPoint::new(z, Sheet::Plus), 1e-9).unwrap();
        let f1 = jost_solution(&b, &q, SheetPoint::new(z, Sheet::Plus), 1, &t).unwrap();
        assert!((f1 - m).norm() < 1e-14);
    }

    #[test]
    fn pole_at_v_is_reported() {
        // a > 1: m⁺ has a pole at v; q₁ ≠ 0 makes φ̃₀(v) ≠ 0
        let (b, q) = (bg(1.0, 2.0), pert(&[0.5]));
        let sol = perturbed_fundamentals(&b, &q);
        assert!(matches!(
            jost_value(&b, &q, &sol, SheetPoint::real(1.0, Sheet::Plus), &Tolerances::default()),
            Err(SpectralError::PoleAtV { .. })
        ));
    }

    #[test]
    fn removable_pole_matches_nearby_values() {
        let (b, q) = (bg(0.7, 1.6), pert(&[0.0, 0.9]));
        let t = Tolerances::default();
        let sol = perturbed_fundamentals(&b, &q);
        let at = jost_value(&b, &q, &sol, SheetPoint::real(0.7, Sheet::Plus), &t).unwrap().value;
        let h = 1e-6;
        let near = |x: f64| jost_value(&b, &q, &sol, SheetPoint::real(x, Sheet::Plus), &t).unwrap().value;
        let avg = (near(0.7 + h) + near(0.7 - h)) * 0.5;
        assert!((at - avg).norm() < 1e-8 * at.norm().max(1.0));
    }

    #[test]
    fn floquet_tail() {
        let (b, q) = (bg(-0.3, 0.8), pert(&[0.4, -0.2, 1.1]));
        let t = Tolerances::default();
        let pt = SheetPoint::new(Complex::new(0.9, 0.4), Sheet::Plus);
        let (xi2, _) = b.floquet_multipliers(pt, 1e-9).unwrap();
        let n = 2 * q.p() + 2;
        let f = jost_solution(&b, &q, pt, n, &t).unwrap();
        assert!((f - xi2.powu((n / 2) as u32)).norm() < 1e-14);
    }

    #[test]
    fn leading_coefficient_formula() {
        for q in [vec![0.3], vec![0.1, -2.0], vec![1.0, 0.5, 0.7], vec![-1.0, 0.2, 0.0, 1.5]] {
            let (b, q) = (bg(0.9, 0.6), pert(&q));
            let f = state_polynomial(&b, &q, &Tolerances::default()).unwrap();
            let want = expected_leading(&b, &q);
            assert!((f.f.leading().unwrap() - want).abs() < 1e-10 * want.abs());
        }
    }

    #[test]
    fn exact_path_agrees() {
        let (b, q) = (bg(0.9, 0.35), pert(&[0.3, -1.1, 2.0, 0.6, -0.4]));
        let fl = state_polynomial_float(&b, &q, &Tolerances::default()).unwrap();
        let ex = state_polynomial_exact(&b, &q).unwrap();
        assert!(ex.exact);
        assert_eq!(ex.f.degree(), Some(10));
        let scale = ex.f.max_abs_coeff();
        for (x, y) in fl.f.coeffs().iter().zip(ex.f.coeffs()) {
            assert!((x - y).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn dyadic_path_matches_rational_field() {
        use num_rational::BigRational;
        let (v, a) = (0.731, 0.231);
        let q = [0.3, -1.1, 2.0, 0.6, -0.4];
        let ex = state_polynomial_exact(&bg(v, a), &pert(&q)).unwrap();
        let r = |x: f64| BigRational::from_float(x).unwrap();
        let rb = Background::new_unchecked(r(v), r(a));
        let rq = Perturbation::new(q.iter().map(|x| r(*x)).collect()).unwrap();
        let full = assemble_f(&rb, &perturbed_fundamentals(&rb, &rq));
        assert_eq!(full.degree(), Some(10));
        assert_eq!(ex.f, full.to_f64());
        assert_eq!(state_polynomial_in(&rb, &rq), full);
    }

    #[test]
    fn cancellation_failure_is_reported_and_recovered() {
        let t = Tolerances { cancellation: 0.0, construction: Construction::Auto, ..Tolerances::default() };
        let (b, q) = (bg(0.37, 0.13), pert(&[0.3, -1.1, 2.0, 0.6, -0.4, 1.3]));
        match state_polynomial_float(&b, &q, &t) {
            Err(SpectralError::CancellationFailure { degree, .. }) => assert_eq!(degree, 12),
            Ok(_) => {}
            Err(e) => panic!("{e}"),
        }
        let auto = state_polynomial(&b, &q, &t).unwrap();
        assert_eq!(auto.f.degree(), Some(12));
        assert!(auto.exact);
    }

    #[test]
    fn single_precision_state_polynomial() {
        let b = Background::<f32>::new(1.0, 1.0).unwrap();
        let q = Perturbation::new(vec![1.0f32]).unwrap();
        let f = state_polynomial(&b, &q, &Tolerances::default()).unwrap().f;
        let r = 1.0f32 + 2f32.sqrt();
        assert!(f.eval(&r).abs() < 1e-5);
    }

    fn random_case() -> impl Strategy<Value = (f64, f64, Vec<f64>)> {
        (-2.0f64..2.0, 0.2f64..2.0, prop::collection::vec(-3.0f64..3.0, 1..6))
            .prop_filter("q_p nonzero", |(_, _, q)| q.last().unwrap().abs() > 1e-3)
    }

    proptest! {
        #[test]
        fn factorization_of_f((v, a, q) in random_case(), re in -3.0f64..3.0, im in 0.05f64..2.0) {
            let (b, q) = (bg(v, a), pert(&q));
            let t = Tolerances::default();
            let sp = state_polynomial(&b, &q, &t).unwrap();
            for z in [Complex::new(re, im), Complex::new(re, -im)] {
                let (fp, fm) = jost_pair(&b, &q, &sp.solutions, z, &t).unwrap();
                let lhs = sp.eval(z);
                let rhs = (z - v) * fp.value * fm.value;
                let scale = (z - v).norm() * fp.scale * fm.scale;
                prop_assert!((lhs - rhs).norm() <= 1e-10 * scale.max(lhs.norm()), "{lhs} vs {rhs}");
            }
        }

        #[test]
        fn schwarz_reflection_on_each_sheet((v, a, q) in random_case(), re in -3.0f64..3.0, im in 0.05f64..2.0) {
            let (b, q) = (bg(v, a), pert(&q));
            let t = Tolerances::default();
            let sol = perturbed_fundamentals(&b, &q);
            let z = Complex::new(re, im);
            for s in [Sheet::Plus, Sheet::Minus] {
                let f1 = jost_value(&b, &q, &sol, SheetPoint::new(z, s), &t).unwrap();
                let f2 = jost_value(&b, &q, &sol, SheetPoint::new(z.conj(), s), &t).unwrap();
                prop_assert!((f1.value.conj() - f2.value).norm() <= 1e-12 * f1.scale);
            }
        }

        #[test]
        fn rim_conjugation_in_bands((v, a, q) in random_case(), t in 0.05f64..0.95, band in 0usize..2) {
            let (b, q) = (bg(v, a), pert(&q));
            let tol = Tolerances::default();
            let sol = perturbed_fundamentals(&b, &q);
            let (lo, hi) = b.band_edges().bands()[band];
            let z = Complex::new(lo + t * (hi - lo), 1e-11);
            let fp = jost_value(&b, &q, &sol, SheetPoint::new(z, Sheet::Plus), &tol).unwrap();
            let fm = jost_value(&b, &q, &sol, SheetPoint::new(z, Sheet::Minus), &tol).unwrap();
            prop_assert!((fm.value - fp.value.conj()).norm() <= 1e-6 * fp.scale);
        }

        #[test]
        fn recurrence_residual((v, a, q) in random_case(), re in -3.0f64..3.0, im in 0.05f64..2.0) {
            let (b, q) = (bg(v, a), pert(&q));
            let t = Tolerances::default();
            let pt = SheetPoint::new(Complex::new(re, im), Sheet::Plus);
            let p = q.p();
            let f: Vec<_> = (0..=p + 4).map(|n| jost_solution(&b, &q, pt, n, &t).unwrap()).collect();
            for n in 1..=p + 3 {
                let res = f[n - 1] * b.a_n(n - 1) + f[n + 1] * b.a_n(n) + f[n] * q.tilde_v(&b, n) - pt.lambda * f[n];
                let scale = f[n - 1].norm() + f[n + 1].norm() + f[n].norm() * (pt.lambda.norm() + 3.0);
                prop_assert!(res.norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn kv_form_identity((v, a, q) in random_case(), x in -4.0f64..4.0) {
            let (b, q) = (bg(v, a), pert(&q));
            prop_assume!((x - v).abs() > 1e-2);
            let sp = state_polynomial(&b, &q, &Tolerances::default()).unwrap();
            let th = sp.solutions.theta0.eval(&x);
            let ph = sp.solutions.phi0.eval(&x);
            let phi2 = x - v;
            let phi = b.lyapunov_real(x) + a;
            let l0 = v * v + (a + 1.0) * (a + 1.0);
            let l1 = v * v + (a - 1.0) * (a - 1.0);
            let first = phi2 * (th + phi / phi2 * ph).powi(2);
            let second = (x * x - l0) * (x * x - l1) / (4.0 * a * a * phi2) * ph * ph;
            let rhs = first - second;
            let lhs = sp.f.eval(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (first.abs() + second.abs()).max(lhs.abs()));
        }

        #[test]
        fn sign_at_infinity_and_on_bands((v, a, q) in random_case(), t in 0.01f64..0.99) {
            let (b, q) = (bg(v, a), pert(&q));
            let sp = state_polynomial(&b, &q, &Tolerances::default()).unwrap();
            let sq = q.q(q.p()).signum();
            let lead = sp.f.leading().unwrap().signum();
            prop_assert_eq!(lead, -sq);
            for x in [-1e6, 1e6] {
                // even degree: the sign at ±∞ is that of the leading coefficient
                prop_assert_eq!(sp.f.eval(&x).signum(), -sq);
            }
            let e = b.band_edges();
            let x0 = e.lambda0_plus + t * (e.lambda1_minus - e.lambda0_plus);
            let x1 = e.lambda1_plus + t * (e.lambda0_minus - e.lambda1_plus);
            prop_assert!(sp.f.eval(&x0) < 0.0);
            prop_assert!(sp.f.eval(&x1) > 0.0);
        }

        #[test]
        fn degree_is_two_p(v in -2.0f64..2.0, a in 0.2f64..2.0, q in prop::collection::vec(-3.0f64..3.0, 1..9)) {
            prop_assume!(q.last().unwrap().abs() > 1e-3);
            let (b, q) = (bg(v, a), pert(&q));
            let sp = state_polynomial(&b, &q, &Tolerances::default()).unwrap();
            prop_assert_eq!(sp.f.degree(), Some(2 * q.p()));
        }

        #[test]
        fn small_perturbation_limit(v in -2.0f64..2.0, a in 0.2f64..2.0, q in prop::collection::vec(-1.0f64..1.0, 1..5)) {
            prop_assume!(q.last().unwrap().abs() > 1e-2);
            let b = bg(v, a);
            let target = Polynomial::new(vec![-v, 1.0]);
            let errs: Vec<f64> = [1e-3, 1e-5, 1e-7]
                .iter()
                .map(|s| {
                    let f = state_polynomial(&b, &pert(&q).scaled(s), &Tolerances::default()).unwrap().f;
                    (&f - &target).max_abs_coeff()
                })
                .collect();
            prop_assert!(errs[1] * 50.0 < errs[0] && errs[2] * 50.0 < errs[1], "{errs:?}");
        }
    }
}
