use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::eigen::Hessenberg;
use super::Polynomial;
use crate::error::{Result, SpectralError};
use crate::scalar::Real;

/// A (possibly clustered) root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root<T> {
    pub value: Complex<T>,
    pub multiplicity: usize,
}

impl<T: Real> Root<T> {
    pub fn simple(value: Complex<T>) -> Self {
        Self { value, multiplicity: 1 }
    }

    pub fn real(x: T) -> Self {
        Self::simple(Complex::new(x, T::zero()))
    }

    pub fn is_real(&self) -> bool {
        self.value.im == T::zero()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions<T> {
    /// Roots closer than `cluster_eps · (1 + |r|)` are merged.
    pub cluster_eps: T,
    pub max_qr_iterations: usize,
    pub newton_iterations: usize,
}

impl<T: Real> Default for RootOptions<T> {
    fn default() -> Self {
        Self {
            cluster_eps: T::lit(1e-7),
            max_qr_iterations: 120,
            newton_iterations: 8,
        }
    }
}

impl<T: Real> Polynomial<T> {
    pub fn roots(&self) -> Result<Vec<Root<T>>> {
        self.roots_with(&RootOptions::default())
    }

    /// Roots with multiplicity. The output is closed under conjugation: every
    /// non-real root is followed by its exact conjugate, and real roots carry
    /// an imaginary part of exactly zero.
    pub fn roots_with(&self, opts: &RootOptions<T>) -> Result<Vec<Root<T>>> {
        let degree = self.degree();
        if degree.is_none_or(|d| d == 0) {
            return Err(SpectralError::NoRoots { degree });
        }
        let c = self.coeffs();
        let zeros = c.iter().take_while(|x| **x == T::zero()).count();
        let reduced = Polynomial::new(c[zeros..].to_vec());
        let mut raw = reduced.raw_roots(opts)?;
        for z in raw.iter_mut() {
            *z = reduced.polish(*z, opts.newton_iterations);
        }
        let mut out = cluster(raw, opts.cluster_eps);
        if zeros > 0 {
            out.push(Root { value: Complex::new(T::zero(), T::zero()), multiplicity: zeros });
        }
        Ok(out)
    }

    fn raw_roots(&self, opts: &RootOptions<T>) -> Result<Vec<Complex<T>>> {
        let n = self.degree().unwrap_or(0);
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = *self.leading().expect("nonzero polynomial");
        if n == 1 {
            return Ok(vec![Complex::new(-self.coeff(0) / lead, T::zero())]);
        }
        let monic: Vec<T> = self.coeffs()[..n].iter().map(|c| *c / lead).collect();
        if monic.iter().any(|c| !c.is_finite()) {
            return Err(SpectralError::InvalidInput(format!(
                "coefficients of the degree-{n} polynomial are not finite when scaled to monic form"
            )));
        }
        let mut h = Hessenberg::companion(&monic);
        h.balance();
        h.eigenvalues(opts.max_qr_iterations).ok_or_else(|| {
            SpectralError::InvalidInput(format!("QR iteration did not converge for degree {n}"))
        })
    }

    /// Newton refinement accepting a step only while it reduces `|p|`.
    /// Real starting points stay real.
    fn polish(&self, mut z: Complex<T>, iters: usize) -> Complex<T> {
        let (mut pz, _) = self.eval_with_derivative(z);
        for _ in 0..iters {
            let (_, dp) = self.eval_with_derivative(z);
            if dp.norm() == T::zero() || pz.norm() == T::zero() {
                break;
            }
            let cand = z - pz / dp;
            let (pc, _) = self.eval_with_derivative(cand);
            if !(pc.norm() < pz.norm()) {
                break;
            }
            z = cand;
            pz = pc;
        }
        z
    }
}

/// Merges nearby roots into multiplicity-carrying means.
///
/// Upper-half roots whose imaginary part is within tolerance are treated as
/// members of a real pair. Reals and upper-half roots are clustered
/// separately; the lower half is regenerated by conjugation.
fn cluster<T: Real>(raw: Vec<Complex<T>>, eps: T) -> Vec<Root<T>> {
    let tol = |x: Complex<T>| eps * (T::one() + x.norm());
    let mut reals: Vec<T> = Vec::new();
    let mut upper: Vec<Complex<T>> = Vec::new();
    for z in raw {
        if z.im == T::zero() {
            reals.push(z.re);
        } else if z.im.abs() <= tol(z) {
            // half of a near-real conjugate pair; its partner lands here too
            reals.push(z.re);
        } else if z.im > T::zero() {
            upper.push(z);
        }
    }
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let mut out = Vec::new();
    let mut i = 0;
    while i < reals.len() {
        let mut j = i + 1;
        while j < reals.len() && (reals[j] - reals[j - 1]).abs() <= eps * (T::one() + reals[j].abs())
        {
            j += 1;
        }
        let m = j - i;
        let mean = reals[i..j].iter().fold(T::zero(), |a, b| a + *b) / T::from_usize_lossy(m);
        out.push(Root { value: Complex::new(mean, T::zero()), multiplicity: m });
        i = j;
    }

    let mut used = vec![false; upper.len()];
    for i in 0..upper.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![upper[i]];
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..upper.len() {
                if !used[j] && members.iter().any(|m| (*m - upper[j]).norm() <= tol(upper[j])) {
                    used[j] = true;
                    members.push(upper[j]);
                    grew = true;
                }
            }
        }
        let k = members.len();
        let sum = members.iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
        let mean = sum / T::from_usize_lossy(k);
        out.push(Root { value: mean, multiplicity: k });
        out.push(Root { value: mean.conj(), multiplicity: k });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real_roots(p: &Polynomial<f64>) -> Vec<(f64, usize)> {
        let mut v: Vec<_> = p
            .roots()
            .unwrap()
            .into_iter()
            .filter(|r| r.is_real())
            .map(|r| (r.value.re, r.multiplicity))
            .collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        v
    }

    #[test]
    fn linear_and_quadratic() {
        let v = 0.4;
        assert_eq!(real_roots(&Polynomial::new(vec![-v, 1.0])), vec![(v, 1)]);
        let q = Polynomial::new(vec![-2.0, 0.0, 1.0]);
        let r = real_roots(&q);
        assert!((r[0].0 + 2f64.sqrt()).abs() < 1e-15 && (r[1].0 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn overflowing_coefficients_are_rejected() {
        let p = Polynomial::new(vec![1e300, 1e300, 1e-300, 1e-300]);
        assert!(matches!(p.roots(), Err(SpectralError::InvalidInput(_))));
        let p = Polynomial::new(vec![1.0, f64::INFINITY, 0.0, 1.0]);
        assert!(matches!(p.roots(), Err(SpectralError::InvalidInput(_))));
    }

    #[test]
    fn degree_zero_has_no_roots() {
        assert!(matches!(
            Polynomial::constant(3.0).roots(),
            Err(SpectralError::NoRoots { degree: Some(0) })
        ));
        assert!(matches!(
            Polynomial::<f64>::zero().roots(),
            Err(SpectralError::NoRoots { degree: None })
        ));
    }

    #[test]
    fn double_root_is_clustered() {
        // (λ-1)²(λ+2)
        let p = Polynomial::new(vec![2.0, -3.0, 0.0, 1.0]);
        let r = real_roots(&p);
        assert_eq!(r.len(), 2);
        assert!((r[0].0 + 2.0).abs() < 1e-12 && r[0].1 == 1);
        assert!((r[1].0 - 1.0).abs() < 1e-7 && r[1].1 == 2);
    }

    #[test]
    fn zero_roots_are_exact() {
        // λ³(λ-1)
        let p = Polynomial::new(vec![0.0, 0.0, 0.0, -1.0, 1.0]);
        let r = real_roots(&p);
        assert_eq!(r, vec![(0.0, 3), (1.0, 1)]);
    }

    #[test]
    fn complex_pair_output_is_closed() {
        // λ² + 2λ + 5, roots -1 ± 2i
        let p = Polynomial::new(vec![5.0, 2.0, 1.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].value, r[1].value.conj());
        assert!((r[0].value - Complex::new(-1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn wide_coefficient_range() {
        // roots 1e-3, 1, 1e3
        let roots = [Root::real(1e-3), Root::real(1.0), Root::real(1e3)];
        let p = Polynomial::from_roots(1.0, &roots);
        let r = real_roots(&p);
        for ((got, _), want) in r.iter().zip([1e-3, 1.0, 1e3]) {
            assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn residuals_are_small_and_degree_is_preserved(
            c in prop::collection::vec(-5.0f64..5.0, 2..10),
        ) {
            let p = Polynomial::new(c);
            prop_assume!(p.degree().unwrap_or(0) >= 1);
            prop_assume!(p.leading().unwrap().abs() > 1e-3);
            let roots = p.roots().unwrap();
            let total: usize = roots.iter().map(|r| r.multiplicity).sum();
            prop_assert_eq!(Some(total), p.degree());
            for r in &roots {
                if r.multiplicity == 1 {
                    let res = p.eval_complex(r.value).norm();
                    prop_assert!(res <= 1e-9 * p.eval_scale(r.value), "residual {res}");
                }
                if !r.is_real() {
                    prop_assert!(roots.iter().any(|o| o.value == r.value.conj()
                        && o.multiplicity == r.multiplicity));
                }
            }
        }

        #[test]
        fn reconstructs_from_roots(
            c in prop::collection::vec(-10.0f64..10.0, 2..18),
        ) {
            let p = Polynomial::new(c);
            prop_assume!(p.degree().unwrap_or(0) >= 1);
            let lead = *p.leading().unwrap();
            prop_assume!(lead.abs() > 1e-2);
            let found = p.roots().unwrap();
            let rebuilt = Polynomial::from_roots(lead, &found);
            prop_assert_eq!(rebuilt.degree(), p.degree());
            let scale = p.max_abs_coeff();
            for (a, b) in rebuilt.coeffs().iter().zip(p.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
            }
        }
    }
}
