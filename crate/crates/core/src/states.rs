//! Classification of the zeros of `F` onto the spectral surface.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::background::{Background, BandStructure, Edge, Sheet, SheetPoint};
use crate::error::{Result, SpectralError};
use crate::jost::{jost_solution, jost_value, state_polynomial, Perturbation, PerturbedSolutionPair};
use crate::polycore::{Polynomial, Root, RootOptions};
use crate::scalar::Real;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Bound,
    Antibound,
    Resonance,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRecord<T> {
    pub point: SheetPoint<T>,
    pub kind: StateKind,
    pub multiplicity: usize,
    /// The state sits at `λ = v` and was classified through `φ̃₀(v) = 0`.
    pub is_v_state: bool,
    /// Gap index for bound and antibound states, or the gap whose closure
    /// holds the edge of a virtual state.
    pub gap: Option<usize>,
    pub edge: Option<Edge>,
}

impl<T: Real> StateRecord<T> {
    pub fn re(&self) -> T {
        self.point.lambda.re
    }

    pub fn im(&self) -> T {
        self.point.lambda.im
    }
}

/// Multiplicity-weighted counts of the real states in one gap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapCensus {
    pub bound: usize,
    pub antibound: usize,
    #[serde(rename = "virtual")]
    pub virtual_: usize,
}

impl GapCensus {
    pub fn total(&self) -> usize {
        self.bound + self.antibound + self.virtual_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport<T> {
    pub p: usize,
    pub states: Vec<StateRecord<T>>,
    pub total_multiplicity: usize,
    pub gap_census: [GapCensus; 3],
    /// Smallest distance between two distinct roots of `F`; zero when a root
    /// was reported with multiplicity above one.
    pub min_root_separation: f64,
    pub exact_construction: bool,
    /// `a` is small enough that the coefficients of `F` are badly scaled.
    pub near_degenerate: bool,
}

impl<T: Real> StateReport<T> {
    pub fn of_kind(&self, kind: StateKind) -> impl Iterator<Item = &StateRecord<T>> {
        self.states.iter().filter(move |s| s.kind == kind)
    }

    pub fn count(&self, kind: StateKind) -> usize {
        self.of_kind(kind).map(|s| s.multiplicity).sum()
    }

    /// Roots closer than `eps` (or clustered into a multiple root).
    pub fn is_clustered(&self, eps: f64) -> bool {
        self.min_root_separation < eps
    }
}

/// Builds a report from classified records.
pub fn report_from_records<T: Real>(p: usize, mut states: Vec<StateRecord<T>>, min_sep: f64) -> StateReport<T> {
    states.sort_by(|x, y| {
        (x.re(), x.im())
            .partial_cmp(&(y.re(), y.im()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut census = [GapCensus::default(); 3];
    for s in &states {
        if let Some(g) = s.gap {
            match s.kind {
                StateKind::Bound => census[g].bound += s.multiplicity,
                StateKind::Antibound => census[g].antibound += s.multiplicity,
                StateKind::Virtual => census[g].virtual_ += s.multiplicity,
                StateKind::Resonance => {}
            }
        }
    }
    StateReport {
        p,
        total_multiplicity: states.iter().map(|s| s.multiplicity).sum(),
        states,
        gap_census: census,
        min_root_separation: min_sep,
        exact_construction: false,
        near_degenerate: false,
    }
}

/// All `2p` states of the perturbed operator.
pub fn find_states<T: Real>(bg: &Background<T>, q: &Perturbation<T>, tol: &Tolerances) -> Result<StateReport<T>> {
    if q.p() == 0 {
        return Err(SpectralError::InvalidInput(
            "empty perturbation: use unperturbed_state".into(),
        ));
    }
    let sp = state_polynomial(bg, q, tol)?;
    let opts = RootOptions { cluster_eps: T::lit(tol.cluster), ..RootOptions::default() };
    let roots = sp.f.roots_with(&opts)?;
    let min_sep = min_separation(&roots);

    let mut states = Vec::with_capacity(roots.len());
    let mut pending = Vec::new();
    let mut embedded = Vec::new();
    for r in &roots {
        if r.value.im < T::zero() {
            continue;
        }
        if r.multiplicity == 2 && r.value.im == T::zero() {
            if let Some(pair) = split_pair(bg, q, &sp.solutions, r.value.re, tol)? {
                states.extend(pair);
                continue;
            }
        }
        let rec = match classify_root(bg, q, &sp.solutions, r.value, r.multiplicity, tol) {
            Ok(rec) => rec,
            Err(SpectralError::UnclassifiableRoot { .. })
                if r.multiplicity == 1
                    && r.value.im == T::zero()
                    && (r.value.re - *bg.v()).abs().to_f64_lossy() > tol.v_window(bg.v().to_f64_lossy()) =>
            {
                let x = r.value.re;
                let sp_ = jost_step(bg, q, &sp.solutions, x, Sheet::Plus, tol)?;
                let sm_ = jost_step(bg, q, &sp.solutions, x, Sheet::Minus, tol)?;
                pending.push((x, sp_, sm_));
                continue;
            }
            Err(SpectralError::EmbeddedRoot { .. }) if r.multiplicity == 2 => {
                states.extend(split_near_rim(&sp.f, r.value.re));
                continue;
            }
            Err(SpectralError::EmbeddedRoot { .. }) if r.multiplicity == 1 => {
                embedded.push(r.value.re);
                continue;
            }
            Err(e) => return Err(e),
        };
        if rec.kind == StateKind::Resonance {
            let mut c = rec;
            c.point = rec.point.conj();
            states.push(c);
        }
        states.push(rec);
    }
    states.extend(resolve_close_pairs(bg, pending, tol)?);
    // two simple real roots inside a band are a rim-hugging pair that
    // rounding pushed onto the axis
    embedded.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    for w in embedded.chunks(2) {
        let reach = 4.0 * tol.jost_step * (1.0 + w[0].to_f64_lossy().abs());
        match w {
            [x1, x2] if (*x2 - *x1).to_f64_lossy() <= reach => {
                states.extend(split_near_rim(&sp.f, (*x1 + *x2) * T::lit(0.5)));
            }
            _ => return Err(SpectralError::EmbeddedRoot { lambda: w[0].to_f64_lossy() }),
        }
    }
    let mut report = report_from_records(q.p(), states, min_sep);
    report.exact_construction = sp.exact;
    report.near_degenerate = bg.a().to_f64_lossy() < tol.near_degenerate;
    Ok(report)
}

/// A merged real double root that is a bound state and an antibound state a
/// hair apart: each Jost factor has its own zero within reach. Each is placed
/// one Newton step from the merged root.
fn split_pair<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    sol: &PerturbedSolutionPair<T>,
    x: T,
    tol: &Tolerances,
) -> Result<Option<[StateRecord<T>; 2]>> {
    let bands = bg.band_edges();
    let Some(gap) = bands.gap_of(x) else { return Ok(None) };
    let xf = x.to_f64_lossy();
    let eps = T::lit(tol.edge);
    if (bg.lyapunov_real(x).abs() - T::one()).abs() <= eps || (xf - bg.v().to_f64_lossy()).abs() <= tol.v_window(bg.v().to_f64_lossy()) {
        return Ok(None);
    }
    let sp = jost_step(bg, q, sol, x, Sheet::Plus, tol)?;
    let sm = jost_step(bg, q, sol, x, Sheet::Minus, tol)?;
    let reach = tol.jost_step * (1.0 + xf.abs());
    if sp.abs() > reach || sm.abs() > reach {
        return Ok(None);
    }
    let rec = |y: f64, sheet, kind| StateRecord {
        point: SheetPoint::real(T::lit(y), sheet),
        kind,
        multiplicity: 1,
        is_v_state: false,
        gap: Some(gap),
        edge: None,
    };
    Ok(Some([rec(xf - sp, Sheet::Plus, StateKind::Bound), rec(xf - sm, Sheet::Minus, StateKind::Antibound)]))
}

/// Real roots that each see a Jost zero on both sheets within reach: a bound
/// and an antibound state too close for one Newton step to tell apart. Within
/// each nearby pair the sheets are assigned to minimise the total distance
/// from each root to its predicted zero.
fn resolve_close_pairs<T: Real>(
    bg: &Background<T>,
    mut pending: Vec<(T, f64, f64)>,
    tol: &Tolerances,
) -> Result<Vec<StateRecord<T>>> {
    pending.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let bands = bg.band_edges();
    let rec = |x: T, sheet, kind| StateRecord {
        point: SheetPoint::real(x, sheet),
        kind,
        multiplicity: 1,
        is_v_state: false,
        gap: bands.gap_of(x),
        edge: None,
    };
    let unclassifiable = |x: T, sp: f64, sm: f64| SpectralError::UnclassifiableRoot {
        re: x.to_f64_lossy(),
        im: 0.0,
        reason: format!("Newton steps to a Jost zero {sp:e} (plus) and {sm:e} (minus)"),
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < pending.len() {
        let (x1, p1, m1) = pending[i];
        let reach = 4.0 * tol.jost_step * (1.0 + x1.to_f64_lossy().abs());
        let partner = pending
            .get(i + 1)
            .filter(|(x2, _, _)| (*x2 - x1).to_f64_lossy() <= reach && bands.gap_of(x1) == bands.gap_of(*x2));
        let Some(&(x2, p2, m2)) = partner else {
            // the partner was classified on its own; a clear majority suffices
            let kind = if p1.abs() * 2.0 < m1.abs() {
                (Sheet::Plus, StateKind::Bound)
            } else if m1.abs() * 2.0 < p1.abs() {
                (Sheet::Minus, StateKind::Antibound)
            } else {
                return Err(unclassifiable(x1, p1, m1));
            };
            out.push(rec(x1, kind.0, kind.1));
            i += 1;
            continue;
        };
        // x₁ on the plus sheet costs |p₁| + |m₂|, the other way |m₁| + |p₂|
        let (plus_first, cost) = (p1.abs() + m2.abs(), m1.abs() + p2.abs());
        if plus_first <= cost {
            out.push(rec(x1, Sheet::Plus, StateKind::Bound));
            out.push(rec(x2, Sheet::Minus, StateKind::Antibound));
        } else {
            out.push(rec(x1, Sheet::Minus, StateKind::Antibound));
            out.push(rec(x2, Sheet::Plus, StateKind::Bound));
        }
        i += 2;
    }
    Ok(out)
}

/// A merged double root strictly inside a band. `F` keeps one sign on the
/// bands, so this is a conjugate resonance pair hugging the rim; the pair is
/// recovered from the local quadratic model of `F` and polished by Newton.
fn split_near_rim<T: Real>(f: &Polynomial<T>, x: T) -> Vec<StateRecord<T>> {
    let z = Complex::new(x, T::zero());
    let d1 = f.derivative();
    let (c0, c1) = f.eval_with_derivative(z);
    let c2 = d1.derivative().eval_complex(z) * T::lit(0.5);
    let disc = (c1 * c1 - c0 * c2 * T::lit(4.0)).sqrt();
    let w0 = z + (-c1 + disc) / (c2 * T::lit(2.0));
    let mut w = w0;
    for _ in 0..8 {
        let (p, dp) = f.eval_with_derivative(w);
        if dp.norm() == T::zero() {
            break;
        }
        w = w - p / dp;
    }
    let step = (w0 - z).norm();
    if !((w - w0).norm() <= T::lit(4.0) * step) {
        w = w0;
    }
    if w.im == T::zero() {
        // below rounding the sign of the model is noise; keep its magnitude
        w = Complex::new(x, (c0 / c2).norm().sqrt());
    }
    let w = if w.im > T::zero() { w } else { w.conj() };
    let rec = |p| StateRecord {
        point: SheetPoint::new(p, Sheet::Minus),
        kind: StateKind::Resonance,
        multiplicity: 1,
        is_v_state: false,
        gap: None,
        edge: None,
    };
    vec![rec(w.conj()), rec(w)]
}

fn min_separation<T: Real>(roots: &[Root<T>]) -> f64 {
    if roots.iter().any(|r| r.multiplicity > 1) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (i, x) in roots.iter().enumerate() {
        for y in &roots[i + 1..] {
            best = best.min((x.value - y.value).norm().to_f64_lossy());
        }
    }
    best
}

fn nearest_edge<T: Real>(bands: &BandStructure<T>, x: T) -> (Edge, T) {
    let mut best = bands.edges()[0];
    for e in bands.edges() {
        if (x - e.1).abs() < (x - best.1).abs() {
            best = e;
        }
    }
    best
}

/// Signed Newton step `f / f′` to the nearest Jost zero on one sheet, infinite
/// at a genuine pole at `v`. The derivative is a central difference that stays
/// inside the gap and away from `v`.
fn jost_step<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    sol: &PerturbedSolutionPair<T>,
    x: T,
    sheet: Sheet,
    tol: &Tolerances,
) -> Result<f64> {
    let at = |y: T| match jost_value(bg, q, sol, SheetPoint::real(y, sheet), tol) {
        Ok(j) => Ok(Some(j.value)),
        Err(SpectralError::PoleAtV { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let Some(f0) = at(x)? else { return Ok(f64::INFINITY) };
    let xf = x.to_f64_lossy();
    let (_, edge) = nearest_edge(&bg.band_edges(), x);
    let mut h = 1e-7 * (1.0 + xf.abs());
    h = h.min(0.25 * (xf - edge.to_f64_lossy()).abs());
    let dv = (xf - bg.v().to_f64_lossy()).abs();
    if dv > 0.0 {
        h = h.min(0.25 * dv);
    }
    let (Some(fr), Some(fl)) = (at(T::lit(xf + h))?, at(T::lit(xf - h))?) else { return Ok(f64::INFINITY) };
    let d = (fr - fl) / T::lit(2.0 * h);
    Ok((f0 / d).re.to_f64_lossy())
}

/// Places one root of `F` on the spectral surface.
pub fn classify_root<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    sol: &PerturbedSolutionPair<T>,
    lambda0: Complex<T>,
    multiplicity: usize,
    tol: &Tolerances,
) -> Result<StateRecord<T>> {
    let record = |point, kind, is_v_state, gap, edge| StateRecord { point, kind, multiplicity, is_v_state, gap, edge };
    if lambda0.im != T::zero() {
        return Ok(record(SheetPoint::new(lambda0, Sheet::Minus), StateKind::Resonance, false, None, None));
    }
    let x = lambda0.re;
    let eps_edge = T::lit(tol.edge);
    let bands = bg.band_edges();
    let (edge, edge_value) = nearest_edge(&bands, x);
    let delta = bg.lyapunov_real(x);
    if (x - edge_value).abs() <= eps_edge || (delta.abs() - T::one()).abs() <= eps_edge {
        let is_v = (x - *bg.v()).abs() <= T::lit(tol.v_window(bg.v().to_f64_lossy()));
        return Ok(record(SheetPoint::real(x, Sheet::Plus), StateKind::Virtual, is_v, Some(edge.gap()), Some(edge)));
    }
    if delta.abs() < T::one() - eps_edge {
        return Err(SpectralError::EmbeddedRoot { lambda: x.to_f64_lossy() });
    }
    let gap = bands.gap_of(x).expect("points outside the bands lie in a gap");
    let v = *bg.v();

    if (x - v).abs() <= T::lit(tol.v_window(v.to_f64_lossy())) {
        let vc = Complex::new(v, T::zero());
        let th = sol.theta0.eval_complex(vc).norm();
        let ph = sol.phi0.eval_complex(vc).norm();
        if ph <= T::lit(tol.jost_zero) * T::one().max(th) {
            // one inconclusive sheet is tolerated when the other shows a pole
            let (plus, minus) = match (
                resolvent_probe(bg, q, v, Sheet::Plus, tol),
                resolvent_probe(bg, q, v, Sheet::Minus, tol),
            ) {
                (Ok(p), Ok(m)) => (p, m),
                (Ok(p), Err(_)) if p >= 0.5 => (p, 0.0),
                (Err(_), Ok(m)) if m >= 0.5 => (0.0, m),
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let (sheet, kind) = if plus >= 0.5 && plus > minus {
                (Sheet::Plus, StateKind::Bound)
            } else if minus >= 0.5 && minus > plus {
                (Sheet::Minus, StateKind::Antibound)
            } else {
                return Err(SpectralError::UnclassifiableRoot {
                    re: x.to_f64_lossy(),
                    im: 0.0,
                    reason: format!("state at v with probe orders {plus} (plus) and {minus} (minus)"),
                });
            };
            return finish(record(SheetPoint::real(v, sheet), kind, true, Some(gap), None));
        }
    }

    // F = (λ − v) f⁺ f⁻, so away from v exactly one factor vanishes
    let sp = jost_step(bg, q, sol, x, Sheet::Plus, tol)?.abs();
    let sm = jost_step(bg, q, sol, x, Sheet::Minus, tol)?.abs();
    let reach = tol.jost_step * (1.0 + x.to_f64_lossy().abs());
    let (sheet, kind) = if sp <= reach && sm > 10.0 * sp {
        (Sheet::Plus, StateKind::Bound)
    } else if sm <= reach && sp > 10.0 * sm {
        (Sheet::Minus, StateKind::Antibound)
    } else {
        return Err(SpectralError::UnclassifiableRoot {
            re: x.to_f64_lossy(),
            im: 0.0,
            reason: format!("Newton steps to a Jost zero {sp:e} (plus) and {sm:e} (minus)"),
        });
    };
    finish(record(SheetPoint::real(x, sheet), kind, false, Some(gap), None))
}

fn finish<T: Real>(rec: StateRecord<T>) -> Result<StateRecord<T>> {
    if rec.kind == StateKind::Bound && rec.multiplicity > 1 {
        return Err(SpectralError::UnclassifiableRoot {
            re: rec.re().to_f64_lossy(),
            im: 0.0,
            reason: format!("bound state of multiplicity {}", rec.multiplicity),
        });
    }
    Ok(rec)
}

/// Order of the singularity of `|f_n / f_0|` at `λ₀` on `sheet`: 0 (regular),
/// ½ (virtual) or 1 (pole).
///
/// Slopes per decade are fitted over `δ ∈ {1, 0.1, 0.01}·δ₀` on each side of
/// `λ₀` that stays off the cuts, with `δ₀ = 1e-4·(1+|λ₀|)` shrunk to a
/// hundredth of the distance to the nearest band edge or other root of `F`, for `n ∈ {1, 2, 3, p+1, p+2}`.
pub fn resolvent_probe<T: Real>(
    bg: &Background<T>,
    q: &Perturbation<T>,
    lambda0: T,
    sheet: Sheet,
    tol: &Tolerances,
) -> Result<f64> {
    let p = q.p();
    let mut ns = vec![1, 2, 3, p + 1, p + 2];
    ns.sort_unstable();
    ns.dedup();
    let x0 = lambda0.to_f64_lossy();
    let top = (1e-4 * (1.0 + x0.abs())).min(1e-2 * clearance(bg, q, lambda0, tol)?);
    let deltas = [1.0, 0.1, 0.01].map(|d| d * top);
    let eps_edge = T::lit(tol.edge);
    let mut order: Option<f64> = None;
    let mut sides = 0;
    for side in [-1.0, 1.0] {
        let pts: Vec<T> = deltas.iter().map(|d| T::lit(x0 + side * d)).collect();
        if pts.iter().any(|x| bg.lyapunov_real(*x).abs() <= T::one() + eps_edge) {
            continue;
        }
        sides += 1;
        for &n in &ns {
            let mut logs = Vec::with_capacity(3);
            for x in &pts {
                let pt = SheetPoint::real(*x, sheet);
                let fn_ = jost_solution(bg, q, pt, n, tol)?;
                let f0 = jost_solution(bg, q, pt, 0, tol)?;
                let r = (fn_.norm() / f0.norm()).to_f64_lossy();
                logs.push(r.log10());
            }
            if logs.iter().any(|l| !l.is_finite()) {
                continue;
            }
            let s1 = logs[1] - logs[0];
            let s2 = logs[2] - logs[1];
            if (s1 - s2).abs() > 0.2 {
                return Err(SpectralError::ProbeInconclusive {
                    lambda: x0,
                    reason: format!("slopes {s1:.3} and {s2:.3} disagree for n = {n}"),
                });
            }
            let s = 0.5 * (s1 + s2);
            order = Some(order.map_or(s, |o: f64| o.max(s)));
        }
    }
    let Some(o) = order else {
        return Err(SpectralError::ProbeInconclusive {
            lambda: x0,
            reason: if sides == 0 { "no probe side off the cuts".into() } else { "no finite ratios".into() },
        });
    };
    [0.0, 0.5, 1.0]
        .into_iter()
        .find(|c| (o - c).abs() <= 0.2)
        .ok_or_else(|| SpectralError::ProbeInconclusive { lambda: x0, reason: format!("fitted order {o:.3}") })
}

/// Distance from `λ₀` to the nearest other singularity the probe could
/// mistake for its own: band edges and roots of `F` not at `λ₀` itself.
fn clearance<T: Real>(bg: &Background<T>, q: &Perturbation<T>, lambda0: T, tol: &Tolerances) -> Result<f64> {
    let x0 = lambda0.to_f64_lossy();
    let own = tol.v_window(x0).max(tol.edge);
    let mut c = f64::INFINITY;
    for (_, e) in bg.band_edges().edges() {
        let d = (e.to_f64_lossy() - x0).abs();
        if d > own {
            c = c.min(d);
        }
    }
    let sp = state_polynomial(bg, q, tol)?;
    if sp.f.degree().is_some_and(|d| d > 1) {
        let opts = RootOptions { cluster_eps: T::lit(tol.cluster), ..RootOptions::default() };
        for r in sp.f.roots_with(&opts)? {
            let d = (r.value - Complex::new(lambda0, T::zero())).norm().to_f64_lossy();
            if d > own {
                c = c.min(d);
            }
        }
    }
    Ok(c)
}

/// The single state of the unperturbed operator at `λ = v`; `None` when the
/// middle gap is closed (`v = 0`, `a = 1`).
pub fn unperturbed_state<T: Real>(bg: &Background<T>, tol: &Tolerances) -> Option<StateRecord<T>> {
    let (v, a) = (*bg.v(), *bg.a());
    let eps = T::lit(tol.edge);
    let gap = Some(1);
    if (a - T::one()).abs() <= eps {
        if v == T::zero() {
            return None;
        }
        let edge = if v > T::zero() { Edge::Lambda1Plus } else { Edge::Lambda1Minus };
        return Some(StateRecord {
            point: SheetPoint::real(v, Sheet::Plus),
            kind: StateKind::Virtual,
            multiplicity: 1,
            is_v_state: true,
            gap,
            edge: Some(edge),
        });
    }
    let (sheet, kind) = if a > T::one() { (Sheet::Plus, StateKind::Bound) } else { (Sheet::Minus, StateKind::Antibound) };
    Some(StateRecord { point: SheetPoint::real(v, sheet), kind, multiplicity: 1, is_v_state: true, gap, edge: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Violation {
    TotalMultiplicity { found: usize, expected: usize },
    TooFewBoundOrVirtual { count: usize },
    MiddleGapParity { count: usize, bound_or_virtual: usize },
    Interlacing { gap: usize, lower: f64, upper: f64, antibound: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

/// Checks the counting theorem: `2p` states, at least two bound or virtual
/// states, an odd census in the closed middle gap with a bound or virtual
/// member, and an odd number of antibound states between consecutive bound
/// states of one gap.
pub fn validate_counts<T: Real>(report: &StateReport<T>) -> Validation {
    let mut violations = Vec::new();
    if report.total_multiplicity != 2 * report.p {
        violations.push(Violation::TotalMultiplicity { found: report.total_multiplicity, expected: 2 * report.p });
    }
    let bv = report.count(StateKind::Bound) + report.count(StateKind::Virtual);
    if bv < 2 {
        violations.push(Violation::TooFewBoundOrVirtual { count: bv });
    }
    let mid = report.gap_census[1];
    let mid_bv = mid.bound + mid.virtual_;
    if mid.total() % 2 == 0 || mid_bv == 0 {
        violations.push(Violation::MiddleGapParity { count: mid.total(), bound_or_virtual: mid_bv });
    }
    for gap in 0..3 {
        let bound: Vec<T> = report
            .of_kind(StateKind::Bound)
            .filter(|s| s.gap == Some(gap))
            .map(|s| s.re())
            .collect();
        for w in bound.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let n: usize = report
                .of_kind(StateKind::Antibound)
                .filter(|s| s.gap == Some(gap) && s.re() > lo && s.re() < hi)
                .map(|s| s.multiplicity)
                .sum();
            if n % 2 == 0 {
                violations.push(Violation::Interlacing {
                    gap,
                    lower: lo.to_f64_lossy(),
                    upper: hi.to_f64_lossy(),
                    antibound: n,
                });
            }
        }
    }
    Validation { passed: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(v: f64, a: f64) -> Background<f64> {
        Background::new(v, a).unwrap()
    }

    fn pert(q: &[f64]) -> Perturbation<f64> {
        Perturbation::new(q.to_vec()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn one_site_example() {
        // A direct lattice diagonalisation has a single gap eigenvalue, at 1+√2.
        let r = find_states(&bg(1.0, 1.0), &pert(&[1.0]), &tol()).unwrap();
        assert_eq!(r.states.len(), 2);
        let s2 = 2f64.sqrt();
        assert_eq!((r.states[0].kind, r.states[0].point.sheet), (StateKind::Antibound, Sheet::Minus));
        assert!((r.states[0].re() - (1.0 - s2)).abs() < 1e-12);
        assert_eq!(r.states[0].gap, Some(1));
        assert_eq!((r.states[1].kind, r.states[1].point.sheet), (StateKind::Bound, Sheet::Plus));
        assert!((r.states[1].re() - (1.0 + s2)).abs() < 1e-12);
        assert_eq!(r.states[1].gap, Some(2));
    }

    #[test]
    fn resonance_pairs_are_conjugate_on_the_second_sheet() {
        let r = find_states(&bg(0.5, 0.7), &pert(&[0.3, -0.2, 0.5]), &tol()).unwrap();
        assert_eq!(r.total_multiplicity, 6);
        let res: Vec<_> = r.of_kind(StateKind::Resonance).collect();
        assert_eq!(res.len(), 4);
        for pair in res.chunks(2) {
            assert_eq!(pair[0].point.lambda, pair[1].point.lambda.conj());
        }
        assert!(res.iter().all(|s| s.point.sheet == Sheet::Minus && s.gap.is_none()));
        assert_eq!(r.count(StateKind::Bound), 1);
        assert!((r.of_kind(StateKind::Bound).next().unwrap().re() - 1.869_179_779_436_99).abs() < 1e-9);
    }

    #[test]
    fn state_at_v_takes_the_sheet_of_the_resolvent_pole() {
        // q₁ = 0 makes φ̃₀(v) = 0
        let r = find_states(&bg(1.0, 2.0), &pert(&[0.0, 1.0]), &tol()).unwrap();
        let at_v: Vec<_> = r.states.iter().filter(|s| s.is_v_state).collect();
        assert_eq!(at_v.len(), 1);
        assert_eq!((at_v[0].kind, at_v[0].re()), (StateKind::Bound, 1.0));
        assert!(validate_counts(&r).passed);

        let r = find_states(&bg(1.0, 0.6), &pert(&[0.0, 1.0]), &tol()).unwrap();
        let at_v: Vec<_> = r.states.iter().filter(|s| s.is_v_state).collect();
        assert_eq!((at_v[0].kind, at_v[0].point.sheet), (StateKind::Antibound, Sheet::Minus));

        // at a = 1 the point v is a band edge
        let r = find_states(&bg(1.0, 1.0), &pert(&[0.0, 1.0]), &tol()).unwrap();
        let at_v: Vec<_> = r.states.iter().filter(|s| s.is_v_state).collect();
        assert_eq!((at_v[0].kind, at_v[0].edge), (StateKind::Virtual, Some(Edge::Lambda1Plus)));
    }

    #[test]
    fn tiny_perturbation_keeps_antibound_near_v() {
        let r = find_states(&bg(1.0, 0.5), &pert(&[1e-4]), &tol()).unwrap();
        let near: Vec<_> = r.states.iter().filter(|s| (s.re() - 1.0).abs() < 1e-2).collect();
        assert_eq!(near.len(), 1);
        assert_eq!(near[0].kind, StateKind::Antibound);
        assert_eq!(near[0].point.sheet, Sheet::Minus);
    }

    #[test]
    fn classify_non_real_root() {
        let (b, q) = (bg(0.2, 0.7), pert(&[0.4]));
        let sol = crate::jost::perturbed_fundamentals(&b, &q);
        let rec = classify_root(&b, &q, &sol, Complex::new(0.3, -0.5), 1, &tol()).unwrap();
        assert_eq!(rec.kind, StateKind::Resonance);
        assert_eq!(rec.point.sheet, Sheet::Minus);
    }

    #[test]
    fn embedded_root_is_an_error() {
        let (b, q) = (bg(1.0, 1.0), pert(&[1.0]));
        let sol = crate::jost::perturbed_fundamentals(&b, &q);
        let mid = 0.5 * (1.0 + 5f64.sqrt());
        assert!(matches!(
            classify_root(&b, &q, &sol, Complex::new(mid, 0.0), 1, &tol()),
            Err(SpectralError::EmbeddedRoot { .. })
        ));
    }

    #[test]
    fn unperturbed_trichotomy() {
        let t = tol();
        let s = unperturbed_state(&bg(1.0, 2.0), &t).unwrap();
        assert_eq!((s.kind, s.point.sheet, s.re()), (StateKind::Bound, Sheet::Plus, 1.0));
        let s = unperturbed_state(&bg(1.0, 0.5), &t).unwrap();
        assert_eq!((s.kind, s.point.sheet), (StateKind::Antibound, Sheet::Minus));
        let s = unperturbed_state(&bg(1.0, 1.0), &t).unwrap();
        assert_eq!((s.kind, s.edge), (StateKind::Virtual, Some(Edge::Lambda1Plus)));
        let s = unperturbed_state(&bg(-1.0, 1.0), &t).unwrap();
        assert_eq!(s.edge, Some(Edge::Lambda1Minus));
        assert!(unperturbed_state(&bg(0.0, 1.0), &t).is_none());
    }

    #[test]
    fn probe_orders_for_the_unperturbed_operator() {
        let t = tol();
        let q = Perturbation::empty();
        assert_eq!(resolvent_probe(&bg(1.0, 2.0), &q, 1.0, Sheet::Plus, &t).unwrap(), 1.0);
        assert_eq!(resolvent_probe(&bg(1.0, 2.0), &q, 1.0, Sheet::Minus, &t).unwrap(), 0.0);
        assert_eq!(resolvent_probe(&bg(1.0, 0.5), &q, 1.0, Sheet::Minus, &t).unwrap(), 1.0);
        assert_eq!(resolvent_probe(&bg(1.0, 0.5), &q, 1.0, Sheet::Plus, &t).unwrap(), 0.0);
        assert_eq!(resolvent_probe(&bg(1.0, 1.0), &q, 1.0, Sheet::Plus, &t).unwrap(), 0.5);
        assert_eq!(resolvent_probe(&bg(1.0, 1.0), &q, -3.0, Sheet::Plus, &t).unwrap(), 0.0);
    }

    #[test]
    fn synthetic_even_middle_census_is_flagged() {
        let b = bg(1.0, 1.0);
        let mut r = find_states(&b, &pert(&[0.0, 1.0]), &tol()).unwrap();
        r.states.retain(|s| s.gap != Some(1));
        let r = report_from_records(2, r.states, r.min_root_separation);
        let v = validate_counts(&r);
        assert!(!v.passed);
        assert!(v.violations.iter().any(|x| matches!(x, Violation::MiddleGapParity { count: 0, .. })));
        assert!(v.violations.iter().any(|x| matches!(x, Violation::TotalMultiplicity { found: 1, expected: 4 })));
    }

    #[test]
    fn double_antibound_state() {
        // For q₁ = 0 the cubic factor has a double root when its discriminant
        // vanishes; tune q₂ by bisection on the discriminant.
        let (v, a) = (1.0, 0.6);
        let k = |q2: f64| {
            let k0 = -q2;
            let k1 = v * q2 + q2 * q2;
            let k2 = -q2 * (2.0 * v * q2 - v * v - a * a - 1.0);
            let k3 = (v * q2 - v * v - 1.0) * (v * q2 - a * a) - v * v * a * a;
            k1 * k1 * k2 * k2 - 4.0 * k1.powi(3) * k3 - 4.0 * k0 * k2.powi(3) + 18.0 * k0 * k1 * k2 * k3
                - 27.0 * k0 * k0 * k3 * k3
        };
        let (mut lo, mut hi) = (0.05, 1.0);
        assert!(k(lo) < 0.0 && k(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if k(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q2 = 0.5 * (lo + hi);
        let r = find_states(&bg(v, a), &pert(&[0.0, q2]), &tol()).unwrap();
        let doubles: Vec<_> = r.states.iter().filter(|s| s.multiplicity == 2).collect();
        assert_eq!(doubles.len(), 1);
        assert_eq!(doubles[0].kind, StateKind::Antibound);
        let x = doubles[0].re();
        let disc = ((2.0 * v - q2).powi(2) + 3.0 * (a * a + 1.0)).sqrt();
        let cands = [(v + q2 + disc) / 3.0, (v + q2 - disc) / 3.0];
        assert!(cands.iter().any(|c| (x - c).abs() < 1e-6), "{x} vs {cands:?}");
    }

    #[test]
    fn merged_bound_antibound_pair_is_split() {
        let q = [
            -2.7254385216413417,
            -1.1511887222930195,
            0.22829043061404386,
            1.446670856234073,
            -1.1527062436352344,
            1.185301766077382,
            2.9360972475970257,
            0.1865911892097727,
        ];
        let r = find_states(&bg(2.5641987994848225, 0.7940851531005553), &pert(&q), &tol()).unwrap();
        let near: Vec<_> = r.states.iter().filter(|s| (s.re() + 4.068244657203444).abs() < 1e-5).collect();
        assert_eq!(near.len(), 2);
        assert!(near.iter().any(|s| s.kind == StateKind::Bound && s.point.sheet == Sheet::Plus));
        assert!(near.iter().any(|s| s.kind == StateKind::Antibound && s.point.sheet == Sheet::Minus));
        assert_eq!(r.total_multiplicity, 16);
        assert!(r.is_clustered(tol().cluster));
    }

    #[test]
    fn in_band_pair_becomes_rim_resonances() {
        let q = [
            0.9068735059274062,
            -2.4068525852936955,
            0.07191016152012475,
            -1.9776426120487116,
            -2.2449199339723953,
            -1.955287598214316,
            1.7133216032403764,
        ];
        let b = bg(2.989735134276092, 0.24955448292028273);
        let r = find_states(&b, &pert(&q), &tol()).unwrap();
        let rim: Vec<_> = r.states.iter().filter(|s| (s.re() - 3.1908499698).abs() < 1e-5).collect();
        assert_eq!(rim.len(), 2);
        assert!(rim.iter().all(|s| s.kind == StateKind::Resonance && s.im() != 0.0));
        assert_eq!(rim[0].point.lambda, rim[1].point.lambda.conj());
        assert_eq!(r.total_multiplicity, 14);
    }

    #[test]
    fn v_state_next_to_its_partner() {
        // at small a the antibound partner sits O(a²) from v
        for (a, gap) in [(1e-2, 7.7e-5), (1e-3, 7.7e-7)] {
            let r = find_states(&bg(0.4, a), &pert(&[0.0, 1.3]), &tol()).unwrap();
            let at_v: Vec<_> = r.states.iter().filter(|s| s.is_v_state).collect();
            assert_eq!(at_v.len(), 1);
            assert_eq!(at_v[0].kind, StateKind::Antibound);
            let partner = r.states.iter().filter(|s| !s.is_v_state).map(|s| (s.re() - 0.4).abs()).fold(f64::INFINITY, f64::min);
            assert!((partner - gap).abs() < 0.1 * gap, "{partner}");
        }
    }
}
