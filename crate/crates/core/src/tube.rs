//! Zigzag nanotube in a magnetic field: the operator splits into `N`
//! two-periodic Jacobi channels with hopping `a_k = 2|cos(b + πk/N)|`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{Background, BandStructure};
use crate::closedform::{flat_band_spectrum, FlatBandValue};
use crate::error::{Result, SpectralError};
use crate::jost::Perturbation;
use crate::states::{find_states, report_from_records, unperturbed_state, StateKind, StateReport};
use crate::scalar::Real;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field<T> {
    /// Reduced flux `b` in radians.
    Flux(T),
    /// Field magnitude `|B|`, converted with `field_param`.
    Magnitude(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeConfig<T> {
    pub n: usize,
    pub field: Field<T>,
    pub v: T,
    pub q: Perturbation<T>,
}

impl<T: Real> TubeConfig<T> {
    pub fn new(n: usize, field: Field<T>, v: T, q: Perturbation<T>) -> Result<Self> {
        if n == 0 {
            return Err(SpectralError::InvalidInput("N must be at least 1".into()));
        }
        if !v.is_finite() {
            return Err(SpectralError::InvalidInput("v must be finite".into()));
        }
        Ok(Self { n, field, v, q })
    }

    /// The flux before reduction.
    pub fn raw_b(&self) -> T {
        match self.field {
            Field::Flux(b) => b,
            Field::Magnitude(m) => field_param(m, self.n),
        }
    }

    /// The flux reduced into `[0, π/N)`.
    pub fn b(&self) -> T {
        normalize_b(self.raw_b(), self.n)
    }

    pub fn with_flux(&self, b: T) -> Self {
        Self { field: Field::Flux(b), ..self.clone() }
    }
}

pub fn normalize_b<T: Real>(b: T, n: usize) -> T {
    let period = T::pi() / T::from_usize_lossy(n);
    let r = b - (b / period).floor() * period;
    if r >= period || r < T::zero() {
        T::zero()
    } else {
        r
    }
}

/// `b = (3|B|/16) cot(π/2N)`.
pub fn field_param<T: Real>(magnitude: T, n: usize) -> T {
    let x = T::pi() / (T::lit(2.0) * T::from_usize_lossy(n));
    if n == 1 {
        return T::zero();
    }
    T::lit(3.0) * magnitude.abs() / T::lit(16.0) * (x.cos() / x.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec<T> {
    pub k: usize,
    pub c: T,
    pub a: T,
    pub degenerate: bool,
    pub near_degenerate: bool,
}

/// Channels `k = 1..N` with `c_k = cos(b + πk/N)`.
pub fn channels<T: Real>(n: usize, b: T, tol: &Tolerances) -> Vec<ChannelSpec<T>> {
    (1..=n)
        .map(|k| {
            let c = (b + T::pi() * T::from_usize_lossy(k) / T::from_usize_lossy(n)).cos();
            let a = T::lit(2.0) * c.abs();
            let af = a.to_f64_lossy();
            ChannelSpec {
                k,
                c,
                a,
                degenerate: af <= tol.degenerate,
                near_degenerate: af > tol.degenerate && af < tol.near_degenerate,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpectrum<T> {
    States { report: StateReport<T>, bands: BandStructure<T> },
    FlatBand { values: Vec<FlatBandValue<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelOutcome<T> {
    pub spec: ChannelSpec<T>,
    pub spectrum: ChannelSpectrum<T>,
}

/// An eigenvalue of the tube with the channel it comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEigenvalue<T> {
    pub value: T,
    pub k: usize,
    /// Flat-band values of a degenerate channel have infinite multiplicity.
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeReport<T> {
    pub raw_b: T,
    pub b: T,
    pub channels: Vec<ChannelOutcome<T>>,
    /// Disjoint closed intervals, ascending.
    pub ac_spectrum: Vec<(T, T)>,
    /// Ascending.
    pub pp_spectrum: Vec<PointEigenvalue<T>>,
}

impl<T: Real> TubeReport<T> {
    /// Multiplicity of all states over the non-degenerate channels.
    pub fn total_multiplicity(&self) -> usize {
        self.channels
            .iter()
            .map(|c| match &c.spectrum {
                ChannelSpectrum::States { report, .. } => report.total_multiplicity,
                ChannelSpectrum::FlatBand { .. } => 0,
            })
            .sum()
    }

    pub fn degenerate_channels(&self) -> impl Iterator<Item = &ChannelOutcome<T>> {
        self.channels.iter().filter(|c| c.spec.degenerate)
    }
}

/// States of one non-degenerate channel; the unperturbed operator has the
/// single state of `unperturbed_state`.
pub fn channel_states<T: Real>(bg: &Background<T>, q: &Perturbation<T>, tol: &Tolerances) -> Result<StateReport<T>> {
    if q.p() == 0 {
        let states = unperturbed_state(bg, tol).into_iter().collect();
        return Ok(report_from_records(0, states, f64::INFINITY));
    }
    find_states(bg, q, tol)
}

pub fn tube_states<T: Real>(cfg: &TubeConfig<T>, tol: &Tolerances) -> Result<TubeReport<T>> {
    let b = cfg.b();
    let outcomes: Vec<ChannelOutcome<T>> = channels(cfg.n, b, tol)
        .into_par_iter()
        .map(|spec| {
            let spectrum = if spec.degenerate {
                ChannelSpectrum::FlatBand { values: flat_band_spectrum(cfg.v, &cfg.q) }
            } else {
                let bg = Background::new(cfg.v, spec.a)?;
                let report = channel_states(&bg, &cfg.q, tol)
                    .map_err(|e| SpectralError::Channel { k: spec.k, source: Box::new(e) })?;
                ChannelSpectrum::States { report, bands: bg.band_edges() }
            };
            Ok(ChannelOutcome { spec, spectrum })
        })
        .collect::<Result<_>>()?;

    let mut intervals = Vec::new();
    let mut pp = Vec::new();
    for o in &outcomes {
        match &o.spectrum {
            ChannelSpectrum::States { report, bands } => {
                intervals.extend(bands.bands());
                pp.extend(report.of_kind(StateKind::Bound).map(|s| PointEigenvalue {
                    value: s.re(),
                    k: o.spec.k,
                    flat: false,
                }));
            }
            ChannelSpectrum::FlatBand { values } => {
                pp.extend(values.iter().map(|x| PointEigenvalue {
                    value: x.value,
                    k: o.spec.k,
                    flat: x.multiplicity == crate::closedform::Multiplicity::Infinite,
                }));
            }
        }
    }
    pp.sort_by(|x, y| x.value.partial_cmp(&y.value).unwrap_or(std::cmp::Ordering::Equal));
    Ok(TubeReport { raw_b: cfg.raw_b(), b, channels: outcomes, ac_spectrum: merge_intervals(intervals), pp_spectrum: pp })
}

fn merge_intervals<T: Real>(mut iv: Vec<(T, T)>) -> Vec<(T, T)> {
    iv.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Bottom of the absolutely continuous spectrum and the channel that
/// attains it.
pub fn spectral_bottom<T: Real>(n: usize, b: T, v: T, tol: &Tolerances) -> Option<(T, usize)> {
    channels(n, b, tol)
        .into_iter()
        .filter(|c| !c.degenerate)
        .map(|c| (Background::new_unchecked(v, c.a).band_edges().lambda0_plus, c.k))
        .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub b: T,
    pub report: TubeReport<T>,
}

/// `tube_states` at every grid value of the flux.
pub fn field_sweep<T: Real>(cfg: &TubeConfig<T>, grid: &[T], tol: &Tolerances) -> Result<Vec<SweepPoint<T>>> {
    if grid.is_empty() {
        return Err(SpectralError::InvalidInput("empty flux grid".into()));
    }
    grid.par_iter()
        .map(|&b| Ok(SweepPoint { b, report: tube_states(&cfg.with_flux(b), tol)? }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint<T> {
    pub b: T,
    pub lambda: Complex<T>,
    pub kind: StateKind,
}

/// A state followed across the sweep inside one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track<T> {
    pub k: usize,
    pub points: Vec<TrackPoint<T>>,
}

/// Links the states of consecutive sweep points by nearest-neighbour
/// continuation within each channel. A state with no unclaimed predecessor
/// starts a new track.
pub fn tracks<T: Real>(sweep: &[SweepPoint<T>]) -> Vec<Track<T>> {
    let mut done: Vec<Track<T>> = Vec::new();
    let mut open: Vec<Track<T>> = Vec::new();
    for pt in sweep {
        let mut next: Vec<Track<T>> = Vec::new();
        for o in &pt.report.channels {
            let ChannelSpectrum::States { report, .. } = &o.spectrum else { continue };
            let k = o.spec.k;
            let mut candidates: Vec<Track<T>> = Vec::new();
            let mut rest = Vec::new();
            for t in open.drain(..) {
                if t.k == k {
                    candidates.push(t);
                } else {
                    rest.push(t);
                }
            }
            open = rest;
            let mut pairs: Vec<(T, usize, usize)> = Vec::new();
            for (i, t) in candidates.iter().enumerate() {
                let last = t.points.last().expect("tracks are nonempty").lambda;
                for (j, s) in report.states.iter().enumerate() {
                    pairs.push(((last - s.point.lambda).norm(), i, j));
                }
            }
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
            let mut track_used = vec![false; candidates.len()];
            let mut state_used = vec![false; report.states.len()];
            let mut assigned: Vec<Option<usize>> = vec![None; candidates.len()];
            for (_, i, j) in pairs {
                if !track_used[i] && !state_used[j] {
                    track_used[i] = true;
                    state_used[j] = true;
                    assigned[i] = Some(j);
                }
            }
            for (i, mut t) in candidates.into_iter().enumerate() {
                match assigned[i] {
                    Some(j) => {
                        let s = &report.states[j];
                        t.points.push(TrackPoint { b: pt.b, lambda: s.point.lambda, kind: s.kind });
                        next.push(t);
                    }
                    None => done.push(t),
                }
            }
            for (j, s) in report.states.iter().enumerate() {
                if !state_used[j] {
                    next.push(Track { k, points: vec![TrackPoint { b: pt.b, lambda: s.point.lambda, kind: s.kind }] });
                }
            }
        }
        done.append(&mut open);
        open = next;
    }
    done.append(&mut open);
    done.sort_by_key(|t| t.k);
    done
}
