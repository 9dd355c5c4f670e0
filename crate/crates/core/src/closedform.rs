//! Explicit formulas for one- and two-site perturbations, the flat-band
//! spectrum at `a = 0`, and asymptotic limits of the states.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::jost::Perturbation;
use crate::polycore::{Polynomial, Root};
use crate::scalar::Real;

/// The two real roots of `F` for a one-site perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1States<T> {
    pub plus: T,
    pub minus: T,
    /// `v = 0, a = 1`: the middle gap is closed and sheet membership of
    /// points in it is not defined.
    pub gap_closed: bool,
}

pub fn p1_states<T: Real>(v: T, a: T, q1: T) -> Result<P1States<T>> {
    if q1 == T::zero() {
        return Err(SpectralError::Unperturbed);
    }
    let half = T::lit(0.5);
    let centre = half * q1 + a * a / (T::lit(2.0) * q1);
    let r = (half * q1 + v - a * a / (T::lit(2.0) * q1)).hypot(T::one());
    Ok(P1States {
        plus: centre + r,
        minus: centre - r,
        gap_closed: v == T::zero() && a == T::one(),
    })
}

/// `p₃(λ) = k0 λ³ + k1 λ² + k2 λ + k3 = a² F(λ) / (λ − v)` for `q = (0, q₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicModel<T> {
    pub k0: T,
    pub k1: T,
    pub k2: T,
    pub k3: T,
    /// Discriminant; positive for three distinct real roots, negative for a
    /// conjugate pair.
    pub d: T,
}

impl<T: Real> CubicModel<T> {
    pub fn polynomial(&self) -> Polynomial<T> {
        Polynomial::new(vec![self.k3, self.k2, self.k1, self.k0])
    }

    /// `D` from the standard cubic discriminant in the `k` coefficients.
    pub fn generic_discriminant(&self) -> T {
        cubic_discriminant(self.k0, self.k1, self.k2, self.k3)
    }

    /// Magnitude of the largest term of `D`, for relative comparisons.
    pub fn discriminant_scale(&self) -> T {
        let (k0, k1, k2, k3) = (self.k0.abs(), self.k1.abs(), self.k2.abs(), self.k3.abs());
        [
            k1 * k1 * k2 * k2,
            T::lit(4.0) * k1 * k1 * k1 * k3,
            T::lit(4.0) * k0 * k2 * k2 * k2,
            T::lit(18.0) * k0 * k1 * k2 * k3,
            T::lit(27.0) * k0 * k0 * k3 * k3,
        ]
        .into_iter()
        .fold(T::zero(), T::max)
    }
}

pub fn cubic_discriminant<T: Real>(k0: T, k1: T, k2: T, k3: T) -> T {
    k1 * k1 * k2 * k2 - T::lit(4.0) * k1 * k1 * k1 * k3 - T::lit(4.0) * k0 * k2 * k2 * k2
        + T::lit(18.0) * k0 * k1 * k2 * k3
        - T::lit(27.0) * k0 * k0 * k3 * k3
}

/// The discriminant written out in `v, a, q₂`.
pub fn expanded_discriminant<T: Real>(v: T, a: T, q2: T) -> T {
    let (one, a2) = (T::one(), a * a);
    let s = v * q2 + q2 * q2;
    let t = T::lit(2.0) * v * q2 - v * v - a2 - one;
    let u = (v * q2 - v * v - one) * (v * q2 - a2) - v * v * a2;
    let q2sq = q2 * q2;
    s * s * q2sq * t * t - T::lit(4.0) * s * s * s * u - T::lit(4.0) * q2sq * q2sq * t * t * t
        + T::lit(18.0) * q2 * s * q2 * t * u
        - T::lit(27.0) * q2sq * u * u
}

pub fn p2_cubic<T: Real>(v: T, a: T, q2: T) -> Result<CubicModel<T>> {
    if q2 == T::zero() {
        return Err(SpectralError::InvalidInput("q2 must be nonzero".into()));
    }
    let (one, a2) = (T::one(), a * a);
    let k0 = -q2;
    let k1 = v * q2 + q2 * q2;
    let k2 = -q2 * (T::lit(2.0) * v * q2 - v * v - a2 - one);
    let k3 = (v * q2 - v * v - one) * (v * q2 - a2) - v * v * a2;
    Ok(CubicModel { k0, k1, k2, k3, d: expanded_discriminant(v, a, q2) })
}

/// `a → 0` limits for `q = (q₁, q₂)`: the two real limits first, then the
/// pair that may be complex.
pub fn p2_limits<T: Real>(v: T, q1: T, q2: T) -> Result<[Complex<T>; 4]> {
    if q2 == T::zero() {
        return Err(SpectralError::InvalidInput("q2 must be nonzero".into()));
    }
    let half = T::lit(0.5);
    let r = (v + half * (q1 - q2)).hypot(T::one());
    let c = half * (q1 + q2);
    let mu = v + half * q1;
    let rad = Complex::new(q1 * (q2 * q1 - T::lit(4.0)) / (T::lit(4.0) * q2), T::zero()).sqrt();
    let m = Complex::new(mu, T::zero());
    Ok([Complex::new(c + r, T::zero()), Complex::new(c - r, T::zero()), m + rad, m - rad])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatBandValue<T> {
    pub value: T,
    pub multiplicity: Multiplicity,
}

/// `z_{n,±} = v_n⁺ ± √((v_n⁻)² + 1)` for the 2×2 block
/// `(ṽ_{2n−1}, ṽ_{2n})`, `v_n^± = (ṽ_{2n−1} ± ṽ_{2n})/2`.
pub fn block_values<T: Real>(v: T, q: &Perturbation<T>, n: usize) -> (T, T) {
    let bg = crate::background::Background::new_unchecked(v, T::zero());
    let half = T::lit(0.5);
    let (x, y) = (q.tilde_v(&bg, 2 * n - 1), q.tilde_v(&bg, 2 * n));
    let (vp, vm) = (half * (x + y), half * (x - y));
    let r = vm.hypot(T::one());
    (vp + r, vp - r)
}

/// Number of 2×2 blocks touched by a perturbation of length `p`.
pub fn perturbed_blocks(p: usize) -> usize {
    p.div_ceil(2)
}

/// Point spectrum of the decoupled operator at `a = 0`: the perturbed block
/// eigenvalues in ascending order, then the two flat bands `∓√(v² + 1)`.
pub fn flat_band_spectrum<T: Real>(v: T, q: &Perturbation<T>) -> Vec<FlatBandValue<T>> {
    let mut out: Vec<FlatBandValue<T>> = (1..=perturbed_blocks(q.p()))
        .flat_map(|n| {
            let (hi, lo) = block_values(v, q, n);
            [lo, hi]
        })
        .map(|value| FlatBandValue { value, multiplicity: Multiplicity::Finite(1) })
        .collect();
    out.sort_by(|x, y| x.value.partial_cmp(&y.value).unwrap_or(std::cmp::Ordering::Equal));
    let flat = v.hypot(T::one());
    for value in [-flat, flat] {
        out.push(FlatBandValue { value, multiplicity: Multiplicity::Infinite });
    }
    out
}

/// `a → 0` limits of the states that become eigenvalues of the decoupled
/// blocks: `z_{n,±}` for `n ≤ p/2` (even `p`) or `n ≤ (p+1)/2` (odd `p`).
pub fn a_to_zero_block_limits<T: Real>(v: T, q: &Perturbation<T>) -> Vec<T> {
    let mut out: Vec<T> = (1..=perturbed_blocks(q.p()))
        .flat_map(|n| {
            let (hi, lo) = block_values(v, q, n);
            [lo, hi]
        })
        .collect();
    out.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// `a → 0` limits of the remaining states. For even `p` these are
/// `z_{n,±}, n ≤ (p−2)/2`, and `μ⁰ = v + q_{p−1}/2 ± √(q_{p−1}²/4 − q_{p−1}/q_p)`;
/// for odd `p`, `z_{n,±}, n ≤ (p−1)/2`.
pub fn a_to_zero_resonance_limits<T: Real>(v: T, q: &Perturbation<T>) -> Vec<Complex<T>> {
    let p = q.p();
    let re = |x: T| Complex::new(x, T::zero());
    let blocks = if p % 2 == 0 { p.saturating_sub(2) / 2 } else { (p - 1) / 2 };
    let mut out: Vec<Complex<T>> = (1..=blocks)
        .flat_map(|n| {
            let (hi, lo) = block_values(v, q, n);
            [re(lo), re(hi)]
        })
        .collect();
    if p >= 2 && p % 2 == 0 {
        let (s, t) = (q.q(p - 1), q.q(p));
        let half = T::lit(0.5);
        let rad = Complex::new(s * s * half * half - s / t, T::zero()).sqrt();
        let m = re(v + half * s);
        out.push(m - rad);
        out.push(m + rad);
    }
    out
}

/// Roots of `μ³ − μ² − μ + q₂` and the `q₂` window where all three are real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeVRoots<T> {
    pub roots: Vec<Root<T>>,
    pub window: (T, T),
    pub all_real: bool,
}

pub fn large_v_scaled_roots<T: Real>(q2: T) -> Result<LargeVRoots<T>> {
    if q2 == T::zero() {
        return Err(SpectralError::InvalidInput("q2 must be nonzero".into()));
    }
    let one = T::one();
    let poly = Polynomial::new(vec![q2, -one, -one, one]);
    let roots = poly.roots()?;
    let s = (T::lit(121.0) + T::lit(135.0)).sqrt();
    let window = ((T::lit(11.0) - s) / T::lit(27.0), (T::lit(11.0) + s) / T::lit(27.0));
    Ok(LargeVRoots { all_real: q2 >= window.0 && q2 <= window.1, roots, window })
}

/// The finite accumulation point `(−1)^p v` of the states under `q = t q⁰`,
/// `t → ∞`.
pub fn large_coupling_limit<T: Real>(p: usize, v: T) -> T {
    if p % 2 == 0 {
        v
    } else {
        -v
    }
}
