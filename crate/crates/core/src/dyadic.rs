//! Exact construction of the state polynomial over dyadic rationals.
//!
//! Binary floating point inputs are dyadic (`m · 2^e`), and dyadics are
//! closed under `+`, `−`, `×` without any gcd work. The only division in the
//! recursions is by `a`, so every quantity is kept as `N / a^k` with a dyadic
//! polynomial numerator `N` and an explicit exponent `k`.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::polycore::Polynomial;

/// `m · 2^e` with `m` odd, or zero with `e = 0`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dyadic {
    m: BigInt,
    e: i64,
}

impl Dyadic {
    fn normalized(m: BigInt, e: i64) -> Self {
        if m.is_zero() {
            return Self { m, e: 0 };
        }
        let tz = m.trailing_zeros().unwrap_or(0);
        Self { m: m >> tz, e: e + tz as i64 }
    }

    /// Exact value of a finite double.
    pub(crate) fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        Some(Self::normalized(BigInt::from(mant) * sign, e))
    }

    fn to_rational(&self) -> BigRational {
        if self.e >= 0 {
            BigRational::from_integer(&self.m << self.e as usize)
        } else {
            BigRational::new(self.m.clone(), BigInt::one() << (-self.e) as usize)
        }
    }
}

impl Zero for Dyadic {
    fn zero() -> Self {
        Self { m: BigInt::zero(), e: 0 }
    }
    fn is_zero(&self) -> bool {
        self.m.is_zero()
    }
}

impl One for Dyadic {
    fn one() -> Self {
        Self { m: BigInt::one(), e: 0 }
    }
}

impl Add for Dyadic {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let e = self.e.min(rhs.e);
        let m = (self.m << (self.e - e) as usize) + (rhs.m << (rhs.e - e) as usize);
        Self::normalized(m, e)
    }
}

impl Sub for Dyadic {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Self;
    fn neg(self) -> Self {
        Self { m: -self.m, e: self.e }
    }
}

impl Mul for Dyadic {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        Self { m: self.m * rhs.m, e: self.e + rhs.e }
    }
}

type DPoly = Polynomial<Dyadic>;

/// `num / a^k`.
#[derive(Debug, Clone)]
struct Scaled {
    num: DPoly,
    k: u32,
}

struct Ctx {
    a: Dyadic,
    v: Dyadic,
    q: Vec<Dyadic>,
}

impl Ctx {
    fn a_n(&self, n: usize) -> Dyadic {
        if n % 2 == 0 {
            self.a.clone()
        } else {
            Dyadic::one()
        }
    }

    fn v_n(&self, n: usize) -> Dyadic {
        if n % 2 == 1 {
            self.v.clone()
        } else {
            -self.v.clone()
        }
    }

    fn tilde_v(&self, n: usize) -> Dyadic {
        let base = self.v_n(n);
        if n >= 1 && n <= self.q.len() {
            base + self.q[n - 1].clone()
        } else {
            base
        }
    }

    fn a_pow(&self, k: u32) -> Dyadic {
        (0..k).fold(Dyadic::one(), |acc, _| acc * self.a.clone())
    }

    fn lift(&self, x: &Scaled, k: u32) -> DPoly {
        x.num.scale(&self.a_pow(k - x.k))
    }

    /// `(c1 · x1 + c2 · x2) / d` where `d` is `a` or one.
    fn combine(&self, c1: &DPoly, x1: &Scaled, c2: &DPoly, x2: &Scaled, divide_by_a: bool) -> Scaled {
        let k = x1.k.max(x2.k);
        let num = &(c1 * &self.lift(x1, k)) + &(c2 * &self.lift(x2, k));
        Scaled { num, k: k + u32::from(divide_by_a) }
    }

    fn constant(&self, c: Dyadic) -> DPoly {
        Polynomial::constant(c)
    }

    /// Background fundamental solutions up to index `n`.
    fn fundamental(&self, n: usize) -> (Vec<Scaled>, Vec<Scaled>) {
        let unit = |c: Dyadic| Scaled { num: Polynomial::constant(c), k: 0 };
        let mut th = vec![unit(Dyadic::one()), unit(Dyadic::zero())];
        let mut ph = vec![unit(Dyadic::zero()), unit(Dyadic::one())];
        for k in 1..n.max(1) {
            let shift = Polynomial::linear(-self.v_n(k), Dyadic::one());
            let back = self.constant(-self.a_n(k - 1));
            let div = k % 2 == 0;
            let t = self.combine(&shift, &th[k], &back, &th[k - 1], div);
            let p = self.combine(&shift, &ph[k], &back, &ph[k - 1], div);
            th.push(t);
            ph.push(p);
        }
        (th, ph)
    }

    fn down(&self, seed: &[Scaled], p: usize) -> Scaled {
        let mut hi = seed[p + 1].clone();
        let mut cur = seed[p].clone();
        for n in (1..=p).rev() {
            let shift = Polynomial::linear(-self.tilde_v(n), Dyadic::one());
            let fwd = self.constant(-self.a_n(n));
            let next = self.combine(&shift, &cur, &fwd, &hi, (n - 1) % 2 == 0);
            hi = cur;
            cur = next;
        }
        cur
    }
}

/// Coefficients of `F`, `θ̃₀`, `φ̃₀`, each correctly rounded to doubles.
pub(crate) struct ExactBuild {
    pub f: Vec<f64>,
    pub theta0: Vec<f64>,
    pub phi0: Vec<f64>,
    /// Largest index with a nonzero exact coefficient in `F`.
    pub degree: Option<usize>,
}

pub(crate) fn build(v: f64, a: f64, q: &[f64]) -> Option<ExactBuild> {
    let ctx = Ctx {
        a: Dyadic::from_f64(a)?,
        v: Dyadic::from_f64(v)?,
        q: q.iter().map(|x| Dyadic::from_f64(*x)).collect::<Option<Vec<_>>>()?,
    };
    let p = q.len();
    let (th, ph) = ctx.fundamental(p + 1);
    let t = ctx.down(&th, p);
    let f = ctx.down(&ph, p);

    // F = (λ − v) T² + (λ² − v² + a² − 1)/a · T P + (λ + v) P²
    let vv = ctx.v.clone() * ctx.v.clone();
    let aa = ctx.a.clone() * ctx.a.clone();
    let mid = Polynomial::new(vec![aa - vv - Dyadic::one(), Dyadic::zero(), Dyadic::one()]);
    let k = 2 * t.k.max(f.k) + 1;
    let tl = ctx.lift(&t, t.k.max(f.k));
    let fl = ctx.lift(&f, t.k.max(f.k));
    let a1 = ctx.a.clone();
    let lam_minus_v = Polynomial::linear(-ctx.v.clone(), Dyadic::one()).scale(&a1);
    let lam_plus_v = Polynomial::linear(ctx.v.clone(), Dyadic::one()).scale(&a1);
    let num = &(&(&lam_minus_v * &(&tl * &tl)) + &(&mid * &(&tl * &fl))) + &(&lam_plus_v * &(&fl * &fl));
    let fs = Scaled { num, k };

    let a_rat = ctx.a.to_rational();
    let round = |s: &Scaled| -> Vec<f64> {
        let den = (0..s.k).fold(BigRational::one(), |acc, _| acc * a_rat.clone());
        s.num
            .coeffs()
            .iter()
            .map(|c| (c.to_rational() / den.clone()).to_f64().unwrap_or(f64::NAN))
            .collect()
    };
    Some(ExactBuild {
        degree: fs.num.degree(),
        f: round(&fs),
        theta0: round(&t),
        phi0: round(&f),
    })
}
