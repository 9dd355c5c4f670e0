//! Eigenvalues of a real upper Hessenberg matrix by the shifted Francis
//! double-step QR iteration, preceded by diagonal scaling.
//!
//! The matrix is stored 1-based in an `(n+1) × (n+1)` buffer; row and column
//! zero are unused.

use num_complex::Complex;

use crate::scalar::Real;

pub(crate) struct Hessenberg<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> Hessenberg<T> {
    /// Companion matrix of the monic polynomial `λ^n + c[n-1] λ^{n-1} + … + c[0]`.
    pub(crate) fn companion(c: &[T]) -> Self {
        let n = c.len();
        let mut h = Self { n, a: vec![T::zero(); (n + 1) * (n + 1)] };
        for k in 1..=n {
            *h.at(1, k) = -c[n - k];
        }
        for j in 2..=n {
            *h.at(j, j - 1) = T::one();
        }
        h
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        self.a[i * (self.n + 1) + j]
    }

    /// Similarity scaling by powers of two so that row and column norms are
    /// comparable. Exact in binary floating point.
    pub(crate) fn balance(&mut self) {
        let radix = T::lit(2.0);
        let sqrdx = radix * radix;
        let n = self.n;
        let mut done = false;
        while !done {
            done = true;
            for i in 1..=n {
                let mut r = T::zero();
                let mut c = T::zero();
                for j in 1..=n {
                    if j != i {
                        c = c + self.get(j, i).abs();
                        r = r + self.get(i, j).abs();
                    }
                }
                if c != T::zero() && r != T::zero() && c.is_finite() && r.is_finite() {
                    let mut g = r / radix;
                    let mut f = T::one();
                    let s = c + r;
                    while c < g {
                        f = f * radix;
                        c = c * sqrdx;
                    }
                    g = r * radix;
                    while c > g {
                        f = f / radix;
                        c = c / sqrdx;
                    }
                    if (c + r) / f < T::lit(0.95) * s {
                        done = false;
                        let g = T::one() / f;
                        for j in 1..=n {
                            *self.at(i, j) = self.get(i, j) * g;
                        }
                        for j in 1..=n {
                            *self.at(j, i) = self.get(j, i) * f;
                        }
                    }
                }
            }
        }
    }

    /// All eigenvalues; complex pairs are emitted as exact conjugates.
    /// `None` if the iteration fails to deflate.
    pub(crate) fn eigenvalues(mut self, max_its: usize) -> Option<Vec<Complex<T>>> {
        let n = self.n;
        let mut wr = vec![T::zero(); n + 1];
        let mut wi = vec![T::zero(); n + 1];
        let mut anorm = T::zero();
        for i in 1..=n {
            for j in i.saturating_sub(1).max(1)..=n {
                anorm = anorm + self.get(i, j).abs();
            }
        }
        let half = T::lit(0.5);
        let mut nn = n;
        let mut t = T::zero();
        while nn >= 1 {
            let mut its = 0usize;
            loop {
                let mut l = nn;
                while l >= 2 {
                    let mut s = self.get(l - 1, l - 1).abs() + self.get(l, l).abs();
                    if s == T::zero() {
                        s = anorm;
                    }
                    if self.get(l, l - 1).abs() + s == s {
                        *self.at(l, l - 1) = T::zero();
                        break;
                    }
                    l -= 1;
                }
                let mut x = self.get(nn, nn);
                if l == nn {
                    wr[nn] = x + t;
                    wi[nn] = T::zero();
                    nn -= 1;
                } else {
                    let mut y = self.get(nn - 1, nn - 1);
                    let mut w = self.get(nn, nn - 1) * self.get(nn - 1, nn);
                    if l == nn - 1 {
                        let p = half * (y - x);
                        let q = p * p + w;
                        let mut z = q.abs().sqrt();
                        x = x + t;
                        if q >= T::zero() {
                            z = p + z.copysign(p);
                            wr[nn - 1] = x + z;
                            wr[nn] = x + z;
                            if z != T::zero() {
                                wr[nn] = x - w / z;
                            }
                            wi[nn - 1] = T::zero();
                            wi[nn] = T::zero();
                        } else {
                            wr[nn - 1] = x + p;
                            wr[nn] = x + p;
                            wi[nn - 1] = -z;
                            wi[nn] = z;
                        }
                        nn = nn.saturating_sub(2);
                    } else {
                        if its >= max_its {
                            return None;
                        }
                        if its > 0 && its % 10 == 0 {
                            t = t + x;
                            for i in 1..=nn {
                                *self.at(i, i) = self.get(i, i) - x;
                            }
                            let s = self.get(nn, nn - 1).abs() + self.get(nn - 1, nn - 2).abs();
                            x = T::lit(0.75) * s;
                            y = x;
                            w = T::lit(-0.4375) * s * s;
                        }
                        its += 1;
                        self.francis_step(l, nn, x, y, w);
                    }
                }
                if nn < 2 || l + 1 >= nn {
                    break;
                }
            }
        }
        Some(
            (1..=n)
                .map(|i| Complex::new(wr[i], wi[i]))
                .collect(),
        )
    }

    fn francis_step(&mut self, l: usize, nn: usize, shift_x: T, shift_y: T, shift_w: T) {
        let (mut p, mut q, mut r);
        let mut m = nn - 2;
        loop {
            let z = self.get(m, m);
            let rr = shift_x - z;
            let ss = shift_y - z;
            p = (rr * ss - shift_w) / self.get(m + 1, m) + self.get(m, m + 1);
            q = self.get(m + 1, m + 1) - z - rr - ss;
            r = self.get(m + 2, m + 1);
            let s = p.abs() + q.abs() + r.abs();
            p = p / s;
            q = q / s;
            r = r / s;
            if m == l {
                break;
            }
            let u = self.get(m, m - 1).abs() * (q.abs() + r.abs());
            let v = p.abs() * (self.get(m - 1, m - 1).abs() + z.abs() + self.get(m + 1, m + 1).abs());
            if u + v == v {
                break;
            }
            m -= 1;
        }
        for i in (m + 2)..=nn {
            *self.at(i, i - 2) = T::zero();
            if i != m + 2 {
                *self.at(i, i - 3) = T::zero();
            }
        }
        let mut x = T::zero();
        for k in m..nn {
            if k != m {
                p = self.get(k, k - 1);
                q = self.get(k + 1, k - 1);
                r = T::zero();
                if k != nn - 1 {
                    r = self.get(k + 2, k - 1);
                }
                x = p.abs() + q.abs() + r.abs();
                if x != T::zero() {
                    p = p / x;
                    q = q / x;
                    r = r / x;
                }
            }
            let s = (p * p + q * q + r * r).sqrt().copysign(p);
            if s == T::zero() {
                continue;
            }
            if k == m {
                if l != m {
                    *self.at(k, k - 1) = -self.get(k, k - 1);
                }
            } else {
                *self.at(k, k - 1) = -s * x;
            }
            p = p + s;
            x = p / s;
            let y = q / s;
            let z = r / s;
            q = q / p;
            r = r / p;
            for j in k..=nn {
                let mut pp = self.get(k, j) + q * self.get(k + 1, j);
                if k != nn - 1 {
                    pp = pp + r * self.get(k + 2, j);
                    *self.at(k + 2, j) = self.get(k + 2, j) - pp * z;
                }
                *self.at(k + 1, j) = self.get(k + 1, j) - pp * y;
                *self.at(k, j) = self.get(k, j) - pp * x;
            }
            let mmin = nn.min(k + 3);
            for i in l..=mmin {
                let mut pp = x * self.get(i, k) + y * self.get(i, k + 1);
                if k != nn - 1 {
                    pp = pp + z * self.get(i, k + 2);
                    *self.at(i, k + 2) = self.get(i, k + 2) - pp * r;
                }
                *self.at(i, k + 1) = self.get(i, k + 1) - pp * q;
                *self.at(i, k) = self.get(i, k) - pp;
            }
        }
    }
}
