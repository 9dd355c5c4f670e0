use nanospec::closedform::Multiplicity;
use nanospec::oracle::{default_margin, gap_filter, match_bound_states, oracle_size, truncated_spectrum};
use nanospec::tube::{channel_states, field_sweep, tracks, ChannelSpectrum, TubeReport};
use nanospec::{validate_counts, Background64, Perturbation64, SpectralError, StateReport, TubeConfig64};

use crate::config::{Mode, Model, RunConfig};
use crate::report::{
    kind_name, ChannelReport, ChannelValidation, ErrorRecord, Report, SpectrumReport, SweepReport, SweepRow,
    ValidationReport, VerifyReport, VerifyRow,
};

/// Largest allowed distance between a bound state and its truncation
/// eigenvalue.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

/// Runs the configured mode. A computation error still yields a report,
/// carrying whatever was finished plus the error record.
pub fn run(cfg: &RunConfig) -> Report {
    let mut report = Report::new(cfg.clone());
    if let Err(e) = fill(cfg, &mut report) {
        report.error = Some(ErrorRecord { kind: error_kind(&e).into(), message: e.to_string() });
    }
    report
}

fn fill(cfg: &RunConfig, report: &mut Report) -> Result<(), SpectralError> {
    let tol = &cfg.tolerances;
    match (&cfg.model, cfg.mode) {
        (Model::Channel { v, a, q }, Mode::States) => {
            let (bg, q) = channel(*v, *a, q)?;
            let states = channel_states(&bg, &q, tol)?;
            report.channels.push(ChannelReport::single(*a, &states));
            report.validation = Some(ValidationReport::new(cfg.validate, validation(None, &states).into_iter().collect()));
        }
        (Model::Channel { v, a, q }, Mode::Verify) => {
            let (bg, q) = channel(*v, *a, q)?;
            let states = channel_states(&bg, &q, tol)?;
            report.channels.push(ChannelReport::single(*a, &states));
            report.validation = Some(ValidationReport::new(cfg.validate, validation(None, &states).into_iter().collect()));
            let mut rows = Vec::new();
            let m = oracle_size(&bg, cfg.oracle_size);
            verify_channel(None, &bg, &q, &states, m, &mut rows)?;
            report.verify = Some(verify_report(m, rows));
        }
        (Model::Tube { .. }, Mode::Tube | Mode::Verify) => {
            let tube_cfg = tube(&cfg.model)?;
            let tr = nanospec::tube_states(&tube_cfg, tol)?;
            fill_tube(cfg, &tr, report);
            if cfg.mode == Mode::Verify {
                let mut rows = Vec::new();
                let mut size = cfg.oracle_size;
                for c in &tr.channels {
                    if let ChannelSpectrum::States { report: states, .. } = &c.spectrum {
                        let bg = Background64::new(tube_cfg.v, c.spec.a)?;
                        let m = oracle_size(&bg, cfg.oracle_size);
                        size = size.max(m);
                        verify_channel(Some(c.spec.k), &bg, &tube_cfg.q, states, m, &mut rows)
                            .map_err(|e| SpectralError::Channel { k: c.spec.k, source: Box::new(e) })?;
                    }
                }
                report.verify = Some(verify_report(size, rows));
            }
        }
        (Model::Tube { .. }, Mode::Sweep) => {
            let tube_cfg = tube(&cfg.model)?;
            let grid = cfg.grid.as_ref().map(|g| g.points()).unwrap_or_default();
            let sweep = field_sweep(&tube_cfg, &grid, tol)?;
            let mut rows = Vec::new();
            for pt in &sweep {
                for c in &pt.report.channels {
                    let push = |rows: &mut Vec<SweepRow>, re, im, kind: &str, sheet, multiplicity| {
                        rows.push(SweepRow { b: pt.b, k: c.spec.k, a: c.spec.a, re, im, kind: kind.into(), sheet, multiplicity })
                    };
                    match &c.spectrum {
                        ChannelSpectrum::States { report: states, .. } => {
                            for s in &states.states {
                                let m = Multiplicity::Finite(s.multiplicity);
                                push(&mut rows, s.re(), s.im(), kind_name(s.kind), Some(s.point.sheet), m);
                            }
                        }
                        ChannelSpectrum::FlatBand { values } => {
                            for f in values {
                                push(&mut rows, f.value, 0.0, "flat", None, f.multiplicity);
                            }
                        }
                    }
                }
            }
            report.sweep = Some(SweepReport { rows, tracks: tracks(&sweep) });
        }
        (model, mode) => {
            return Err(SpectralError::InvalidInput(format!("mode {mode:?} does not apply to model {model:?}")));
        }
    }
    Ok(())
}

fn channel(v: f64, a: f64, q: &[f64]) -> Result<(Background64, Perturbation64), SpectralError> {
    Ok((Background64::new(v, a)?, Perturbation64::new(q.to_vec())?))
}

fn tube(model: &Model) -> Result<TubeConfig64, SpectralError> {
    let Model::Tube { n, field, v, q } = model else {
        unreachable!("tube modes are checked against the model when the config resolves")
    };
    TubeConfig64::new(*n, *field, *v, Perturbation64::new(q.clone())?)
}

fn fill_tube(cfg: &RunConfig, tr: &TubeReport<f64>, report: &mut Report) {
    report.channels = tr.channels.iter().map(ChannelReport::from_outcome).collect();
    let checks = tr
        .channels
        .iter()
        .filter_map(|c| match &c.spectrum {
            ChannelSpectrum::States { report: states, .. } => validation(Some(c.spec.k), states),
            ChannelSpectrum::FlatBand { .. } => None,
        })
        .collect();
    report.validation = Some(ValidationReport::new(cfg.validate, checks));
    report.spectrum =
        Some(SpectrumReport { raw_b: tr.raw_b, b: tr.b, ac: tr.ac_spectrum.clone(), pp: tr.pp_spectrum.clone() });
}

/// The counting checks apply to perturbed channels only.
fn validation(k: Option<usize>, states: &StateReport<f64>) -> Option<ChannelValidation> {
    (states.p > 0).then(|| {
        let v = validate_counts(states);
        ChannelValidation { k, passed: v.passed, violations: v.violations }
    })
}

/// Compares the bound states of one channel with the gap eigenvalues of an
/// `m`-site truncation. States too close to an edge for the filtered
/// truncation are looked up in the unfiltered spectrum instead; when the
/// truncation is too short to resolve them they are reported but do not fail
/// the comparison.
fn verify_channel(
    k: Option<usize>,
    bg: &Background64,
    q: &Perturbation64,
    states: &StateReport<f64>,
    m: usize,
    rows: &mut Vec<VerifyRow>,
) -> Result<(), SpectralError> {
    let bands = bg.band_edges();
    let margin = default_margin(&bands, m);
    let eigs = truncated_spectrum(bg, q, m)?;
    let matched = match_bound_states(states, &gap_filter(&eigs, &bands, margin), &bands, margin, VERIFY_TOLERANCE);
    for (s, e) in &matched.pairs {
        rows.push(row(k, Some(*s), Some(*e), "matched"));
    }
    let near_gap = gap_filter(&eigs, &bands, 0.0);
    for s in &matched.excluded_states {
        let nearest = near_gap.iter().copied().min_by(|x, y| (x - s).abs().total_cmp(&(y - s).abs()));
        match nearest.filter(|e| (e - s).abs() <= VERIFY_TOLERANCE) {
            Some(e) => rows.push(row(k, Some(*s), Some(e), "near_edge")),
            None => rows.push(row(k, Some(*s), None, "near_edge_unresolved")),
        }
    }
    for s in &matched.unmatched_states {
        rows.push(row(k, Some(*s), None, "unmatched_state"));
    }
    for e in &matched.unmatched_eigenvalues {
        rows.push(row(k, None, Some(*e), "unmatched_eigenvalue"));
    }
    Ok(())
}

fn row(k: Option<usize>, state: Option<f64>, eigenvalue: Option<f64>, status: &str) -> VerifyRow {
    let deviation = state.zip(eigenvalue).map(|(s, e)| (s - e).abs());
    VerifyRow { k, state, eigenvalue, deviation, status: status.into() }
}

fn verify_report(oracle_size: usize, rows: Vec<VerifyRow>) -> VerifyReport {
    let max_deviation = rows.iter().filter_map(|r| r.deviation).fold(0.0, f64::max);
    let passed = rows.iter().all(|r| !r.status.starts_with("unmatched"));
    VerifyReport { oracle_size, tolerance: VERIFY_TOLERANCE, rows, max_deviation, passed }
}

pub fn error_kind(e: &SpectralError) -> &'static str {
    match e {
        SpectralError::NoRoots { .. } => "no_roots",
        SpectralError::OnCut { .. } => "on_cut",
        SpectralError::WeylPole { .. } => "weyl_pole",
        SpectralError::PoleAtV { .. } => "pole_at_v",
        SpectralError::CancellationFailure { .. } => "cancellation_failure",
        SpectralError::EmbeddedRoot { .. } => "embedded_root",
        SpectralError::UnclassifiableRoot { .. } => "unclassifiable_root",
        SpectralError::ProbeInconclusive { .. } => "probe_inconclusive",
        SpectralError::Unperturbed => "unperturbed",
        SpectralError::InvalidInput(_) => "invalid_input",
        SpectralError::Channel { source, .. } => error_kind(source),
    }
}

