//! Machine-readable reports. JSON numbers use the shortest decimal that
//! reads back to the same `f64`, so a written report re-reads bit-exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use nanospec::closedform::{FlatBandValue, Multiplicity};
use nanospec::states::Violation;
use nanospec::tube::{ChannelOutcome, ChannelSpectrum, PointEigenvalue, Track};
use nanospec::{Sheet, StateKind, StateRecord, StateReport};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub re: f64,
    pub im: f64,
    pub sheet: Sheet,
    pub kind: StateKind,
    pub multiplicity: usize,
    pub is_v_state: bool,
    pub gap: Option<usize>,
}

impl From<&StateRecord<f64>> for StateRow {
    fn from(s: &StateRecord<f64>) -> Self {
        Self {
            re: s.re(),
            im: s.im(),
            sheet: s.point.sheet,
            kind: s.kind,
            multiplicity: s.multiplicity,
            is_v_state: s.is_v_state,
            gap: s.gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    /// Channel index; absent for a single channel given by `a`.
    pub k: Option<usize>,
    pub a: f64,
    pub degenerate: bool,
    pub near_degenerate: bool,
    pub states: Vec<StateRow>,
    /// Point spectrum of a degenerate channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_band: Option<Vec<FlatBandValue<f64>>>,
}

impl ChannelReport {
    pub fn single(a: f64, report: &StateReport<f64>) -> Self {
        Self {
            k: None,
            a,
            degenerate: false,
            near_degenerate: report.near_degenerate,
            states: report.states.iter().map(StateRow::from).collect(),
            flat_band: None,
        }
    }

    pub fn from_outcome(o: &ChannelOutcome<f64>) -> Self {
        let (states, flat_band) = match &o.spectrum {
            ChannelSpectrum::States { report, .. } => (report.states.iter().map(StateRow::from).collect(), None),
            ChannelSpectrum::FlatBand { values } => (Vec::new(), Some(values.clone())),
        };
        Self {
            k: Some(o.spec.k),
            a: o.spec.a,
            degenerate: o.spec.degenerate,
            near_degenerate: o.spec.near_degenerate,
            states,
            flat_band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelValidation {
    pub k: Option<usize>,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Whether a failed validation sets the exit status.
    pub requested: bool,
    pub passed: bool,
    pub channels: Vec<ChannelValidation>,
}

impl ValidationReport {
    pub fn new(requested: bool, channels: Vec<ChannelValidation>) -> Self {
        Self { requested, passed: channels.iter().all(|c| c.passed), channels }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub raw_b: f64,
    pub b: f64,
    pub ac: Vec<(f64, f64)>,
    pub pp: Vec<PointEigenvalue<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub k: usize,
    pub a: f64,
    pub re: f64,
    pub im: f64,
    pub kind: String,
    pub sheet: Option<Sheet>,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub tracks: Vec<Track<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub k: Option<usize>,
    pub state: Option<f64>,
    pub eigenvalue: Option<f64>,
    pub deviation: Option<f64>,
    /// `matched`, `near_edge`, `near_edge_unresolved`, `unmatched_state` or
    /// `unmatched_eigenvalue`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub oracle_size: usize,
    pub tolerance: f64,
    pub rows: Vec<VerifyRow>,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub channels: Vec<ChannelReport>,
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Self { config, channels: Vec::new(), validation: None, spectrum: None, sweep: None, verify: None, error: None }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => self.write_csv(out),
        }
    }

    /// The states table, or the comparison table in verify mode.
    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        let opt_k = |k: Option<usize>| k.map(|k| k.to_string()).unwrap_or_default();
        if let Some(v) = &self.verify {
            w.write_record(["channel", "state", "eigenvalue", "deviation", "status"])?;
            for r in &v.rows {
                w.write_record([opt_k(r.k), opt(r.state), opt(r.eigenvalue), opt(r.deviation), r.status.clone()])?;
            }
            return w.flush();
        }
        w.write_record(["b", "channel", "a", "re", "im", "sheet", "kind", "multiplicity"])?;
        if let Some(s) = &self.sweep {
            for r in &s.rows {
                w.write_record([
                    num(r.b),
                    r.k.to_string(),
                    num(r.a),
                    num(r.re),
                    num(r.im),
                    r.sheet.map(sheet_name).unwrap_or_default().to_string(),
                    r.kind.clone(),
                    multiplicity_name(r.multiplicity),
                ])?;
            }
            return w.flush();
        }
        let b = self.spectrum.as_ref().map(|s| num(s.b)).unwrap_or_default();
        for c in &self.channels {
            for s in &c.states {
                w.write_record([
                    b.clone(),
                    opt_k(c.k),
                    num(c.a),
                    num(s.re),
                    num(s.im),
                    sheet_name(s.sheet).into(),
                    kind_name(s.kind).into(),
                    s.multiplicity.to_string(),
                ])?;
            }
            for f in c.flat_band.iter().flatten() {
                w.write_record([
                    b.clone(),
                    opt_k(c.k),
                    num(c.a),
                    num(f.value),
                    "0".into(),
                    String::new(),
                    "flat".into(),
                    multiplicity_name(f.multiplicity),
                ])?;
            }
        }
        w.flush()
    }
}

pub fn sheet_name(s: Sheet) -> &'static str {
    match s {
        Sheet::Plus => "plus",
        Sheet::Minus => "minus",
    }
}

pub fn kind_name(k: StateKind) -> &'static str {
    match k {
        StateKind::Bound => "bound",
        StateKind::Antibound => "antibound",
        StateKind::Resonance => "resonance",
        StateKind::Virtual => "virtual",
    }
}

fn multiplicity_name(m: Multiplicity) -> String {
    match m {
        Multiplicity::Finite(n) => n.to_string(),
        Multiplicity::Infinite => "inf".into(),
    }
}

/// Shortest decimal that reads back to the same value.
fn num(x: f64) -> String {
    format!("{x:?}")
}
