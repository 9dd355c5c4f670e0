//! Brute-force spectra used to cross-check the state classification: finite
//! Dirichlet truncations of one channel and the finite cylinder lattice.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::background::{Background, BandStructure};
use crate::error::{Result, SpectralError};
use crate::jost::Perturbation;
use crate::states::{StateKind, StateReport};
use crate::scalar::Real;
use crate::tube::{channels, TubeConfig};
use crate::tolerance::Tolerances;

/// Real symmetric tridiagonal matrix of sites `1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedOperator<T> {
    pub diagonal: Vec<T>,
    pub off_diagonal: Vec<T>,
}

impl<T: Real> TruncatedOperator<T> {
    pub fn new(bg: &Background<T>, q: &Perturbation<T>, m: usize) -> Self {
        Self {
            diagonal: (1..=m).map(|n| q.tilde_v(bg, n)).collect(),
            off_diagonal: (1..m).map(|n| bg.a_n(n)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let mut d = self.diagonal.clone();
        let mut e = self.off_diagonal.clone();
        e.push(T::zero());
        tridiagonal_ql(&mut d, &mut e)?;
        d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        Ok(d)
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `d` receives the
/// eigenvalues; `e[i]` couples `i` and `i+1`, with `e[n-1]` unused.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(SpectralError::InvalidInput("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = pythag(g, T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// `√(a² + b²)` without overflow.
#[inline]
fn pythag<T: Real>(a: T, b: T) -> T {
    let (a, b) = (a.abs(), b.abs());
    if a > b {
        let r = b / a;
        a * (T::one() + r * r).sqrt()
    } else if b == T::zero() {
        T::zero()
    } else {
        let r = a / b;
        b * (T::one() + r * r).sqrt()
    }
}

/// Spectrum of the `M`-site Dirichlet truncation, ascending.
pub fn truncated_spectrum<T: Real>(bg: &Background<T>, q: &Perturbation<T>, m: usize) -> Result<Vec<T>> {
    if m <= 2 * q.p() + 10 {
        return Err(SpectralError::InvalidInput(format!(
            "truncation size {m} must exceed 2p + 10 = {}",
            2 * q.p() + 10
        )));
    }
    TruncatedOperator::new(bg, q, m).eigenvalues()
}

/// `m` or `m + 1`, whichever keeps the far end of the truncation free of
/// its own surface state: odd for `a > 1`, even for `a < 1`.
pub fn oracle_size<T: Real>(bg: &Background<T>, m: usize) -> usize {
    let a = *bg.a();
    let want_odd = a > T::one();
    if a == T::one() || (m % 2 == 1) == want_odd {
        m
    } else {
        m + 1
    }
}

/// `5 · bandwidth / M`.
pub fn default_margin<T: Real>(bands: &BandStructure<T>, m: usize) -> T {
    T::lit(5.0) * bands.bandwidth() / T::from_usize_lossy(m)
}

/// Eigenvalues inside the open gaps and farther than `margin` from every
/// band edge.
pub fn gap_filter<T: Real>(eigs: &[T], bands: &BandStructure<T>, margin: T) -> Vec<T> {
    eigs.iter()
        .copied()
        .filter(|x| bands.gap_of(*x).is_some() && bands.edges().iter().all(|(_, e)| (*x - *e).abs() > margin))
        .collect()
}

/// Eigenvalues of the finite cylinder with `M + 1` axial cells, ascending.
pub fn lattice_spectrum(cfg: &TubeConfig<f64>, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(SpectralError::InvalidInput("lattice needs M ≥ 2".into()));
    }
    let n = cfg.n;
    let b = cfg.raw_b();
    let cells = m + 1;
    let idx = |cell: usize, j: usize, k: usize| (k * cells + cell) * 2 + j;
    let dim = 2 * cells * n;
    let bg = Background::new_unchecked(cfg.v, 1.0);
    let mut h = DMatrix::<Complex<f64>>::zeros(dim, dim);
    let (e1, e2) = (Complex::from_polar(1.0, b), Complex::from_polar(1.0, -b));
    for k in 0..n {
        for cell in 0..cells {
            // (cell, 0) is site 2·cell + 1 of the channel chain, (cell, 1) is site 2·cell + 2
            let s0 = idx(cell, 0, k);
            let s1 = idx(cell, 1, k);
            h[(s0, s0)] = Complex::new(cfg.q.tilde_v(&bg, 2 * cell + 1), 0.0);
            h[(s1, s1)] = Complex::new(cfg.q.tilde_v(&bg, 2 * cell + 2), 0.0);
            h[(s0, s1)] += Complex::new(1.0, 0.0);
            h[(s1, s0)] += Complex::new(1.0, 0.0);
            if cell + 1 < cells {
                let up = idx(cell + 1, 0, k);
                let up_next = idx(cell + 1, 0, (k + n - 1) % n);
                h[(s1, up_next)] += e1;
                h[(up_next, s1)] += e1.conj();
                h[(s1, up)] += e2;
                h[(up, s1)] += e2.conj();
            }
        }
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(eig)
}

/// Union of the channel truncations matching `lattice_spectrum(cfg, m)`,
/// ascending.
pub fn channel_union_spectrum(cfg: &TubeConfig<f64>, m: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    let size = 2 * (m + 1);
    let mut all = Vec::with_capacity(size * cfg.n);
    for ch in channels(cfg.n, cfg.raw_b(), tol) {
        let bg = Background::new_unchecked(cfg.v, ch.a);
        all.extend(TruncatedOperator::new(&bg, &cfg.q, size).eigenvalues()?);
    }
    all.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateMatch {
    pub pairs: Vec<(f64, f64)>,
    pub unmatched_states: Vec<f64>,
    pub unmatched_eigenvalues: Vec<f64>,
    /// Bound states within the margin of a band edge, where the filtered
    /// truncation cannot see them.
    pub excluded_states: Vec<f64>,
    pub max_deviation: f64,
}

impl BoundStateMatch {
    pub fn is_bijective(&self) -> bool {
        self.unmatched_states.is_empty() && self.unmatched_eigenvalues.is_empty()
    }
}

/// Pairs every bound state with a gap eigenvalue within `tol`, greedily by
/// distance. The margin used for `gap_eigs` is applied to the states too.
pub fn match_bound_states<T: Real>(
    report: &StateReport<T>,
    gap_eigs: &[T],
    bands: &BandStructure<T>,
    margin: T,
    tol: f64,
) -> BoundStateMatch {
    let (states, excluded): (Vec<T>, Vec<T>) = report
        .of_kind(StateKind::Bound)
        .map(|s| s.re())
        .partition(|x| !gap_filter(&[*x], bands, margin).is_empty());
    let states: Vec<f64> = states.iter().map(|x| x.to_f64_lossy()).collect();
    let eigs: Vec<f64> = gap_eigs.iter().map(|x| x.to_f64_lossy()).collect();
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, s) in states.iter().enumerate() {
        for (j, e) in eigs.iter().enumerate() {
            let d = (s - e).abs();
            if d <= tol {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let (mut su, mut eu) = (vec![false; states.len()], vec![false; eigs.len()]);
    let mut pairs = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for (d, i, j) in cand {
        if !su[i] && !eu[j] {
            su[i] = true;
            eu[j] = true;
            pairs.push((states[i], eigs[j]));
            max_deviation = max_deviation.max(d);
        }
    }
    BoundStateMatch {
        pairs,
        unmatched_states: states.iter().zip(&su).filter(|(_, u)| !**u).map(|(s, _)| *s).collect(),
        unmatched_eigenvalues: eigs.iter().zip(&eu).filter(|(_, u)| !**u).map(|(e, _)| *e).collect(),
        excluded_states: excluded.iter().map(|x| x.to_f64_lossy()).collect(),
        max_deviation,
    }
}
