//! Run configuration: a TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use nanospec::{Field, Perturbation, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    States,
    Tube,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

/// Command-line flags. Every flag overrides the same field of the file.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "nanospec", version, allow_negative_numbers = true, about = "States, resonances and field sweeps of zigzag half-nanotubes")]
pub struct Flags {
    /// Mode; may also be given as `--mode` or in the file.
    #[arg(value_enum)]
    pub mode_arg: Option<Mode>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub v: Option<f64>,
    /// Channel hopping; selects a single channel.
    #[arg(long)]
    pub a: Option<f64>,
    /// Perturbation "q1,q2,...", empty for none.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Number of channels.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Reduced flux in radians.
    #[arg(long)]
    pub b: Option<f64>,
    /// Field magnitude |B|; needs N.
    #[arg(long = "B")]
    pub field_magnitude: Option<f64>,
    /// Flux grid "b0:b1:steps".
    #[arg(long)]
    pub grid: Option<String>,
    /// Truncation size for verify mode.
    #[arg(long)]
    pub oracle_size: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Fail with exit status 3 when the state counts violate the counting theorem.
    #[arg(long)]
    pub validate: bool,
    #[arg(long)]
    pub eps_edge: Option<f64>,
    #[arg(long)]
    pub eps_v: Option<f64>,
    #[arg(long)]
    pub eps_cluster: Option<f64>,
    #[arg(long)]
    pub eps_deg: Option<f64>,
}

/// File layout. Unknown keys are rejected so typos surface as errors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<Mode>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub v: Option<f64>,
    pub a: Option<f64>,
    pub q: Option<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub b: Option<f64>,
    #[serde(rename = "B")]
    pub field_magnitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub eps_edge: Option<f64>,
    pub eps_v: Option<f64>,
    pub eps_cluster: Option<f64>,
    pub eps_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub oracle_size: Option<usize>,
    pub validate: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse { path: path.into(), message })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
    }
}

/// Channel-level model `(v, a, q)` or a full tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "lowercase")]
pub enum Model {
    Channel { v: f64, a: f64, q: Vec<f64> },
    Tube { n: usize, field: Field<f64>, v: f64, q: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub b0: f64,
    pub b1: f64,
    pub steps: usize,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [b0, b1, steps] = parts[..] else {
            return Err(field("grid", format!("expected \"b0:b1:steps\", got {s:?}")));
        };
        let num = |x: &str| x.parse::<f64>().map_err(|e| field("grid", format!("{x:?}: {e}")));
        let (b0, b1) = (num(b0)?, num(b1)?);
        let steps = steps.parse::<usize>().map_err(|e| field("grid", format!("{steps:?}: {e}")))?;
        if steps == 0 || !b0.is_finite() || !b1.is_finite() {
            return Err(field("grid", "needs finite bounds and at least one step"));
        }
        Ok(Self { b0, b1, steps })
    }

    /// `steps + 1` equispaced points including both ends.
    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.b0 + (self.b1 - self.b0) * i as f64 / self.steps as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub model: Model,
    pub tolerances: Tolerances,
    pub grid: Option<Grid>,
    pub oracle_size: usize,
    pub validate: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_ORACLE_SIZE: usize = 4000;

pub fn parse_q(s: &str) -> Result<Vec<f64>, ConfigError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| field("q", format!("{x:?}: {e}"))))
        .collect()
}

fn positive(name: &'static str, x: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match x {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(field(name, format!("must be positive and finite, got {x}"))),
        _ => Ok(x),
    }
}

impl RunConfig {
    /// Overlays `flags` on `file` and validates the result.
    pub fn resolve(flags: &Flags, file: &FileConfig) -> Result<Self, ConfigError> {
        if let (Some(x), Some(y)) = (flags.mode_arg, flags.mode) {
            if x != y {
                return Err(field("mode", format!("positional {x:?} disagrees with --mode {y:?}")));
            }
        }
        let mode = flags.mode_arg.or(flags.mode).or(file.mode).ok_or_else(|| field("mode", "missing"))?;
        let m = &file.model;
        let v = flags.v.or(m.v).ok_or_else(|| field("v", "missing"))?;
        if !v.is_finite() {
            return Err(field("v", "must be finite"));
        }
        let q = match &flags.q {
            Some(s) => parse_q(s)?,
            None => m.q.clone().unwrap_or_default(),
        };
        Perturbation::new(q.clone()).map_err(|e| field("q", e.to_string()))?;
        let a = positive("a", flags.a.or(m.a))?;
        let n = flags.n.or(m.n);
        let b = flags.b.or(m.b);
        let magnitude = flags.field_magnitude.or(m.field_magnitude);

        let model = match (a, n) {
            (Some(_), Some(_)) => return Err(field("a", "give either a (one channel) or N (a tube), not both")),
            (Some(a), None) => {
                if b.is_some() || magnitude.is_some() {
                    return Err(field("b", "flux applies to a tube; drop it or give N instead of a"));
                }
                Model::Channel { v, a, q }
            }
            (None, Some(n)) => {
                if n == 0 {
                    return Err(field("N", "must be at least 1"));
                }
                let field_ = match (b, magnitude) {
                    (Some(_), Some(_)) => return Err(field("b", "give either b or B, not both")),
                    (Some(b), None) if b.is_finite() => Field::Flux(b),
                    (None, Some(x)) if x.is_finite() => Field::Magnitude(x),
                    (None, None) => Field::Flux(0.0),
                    _ => return Err(field("b", "must be finite")),
                };
                Model::Tube { n, field: field_, v, q }
            }
            (None, None) => {
                if magnitude.is_some() {
                    return Err(field("B", "|B| is accepted only together with N"));
                }
                return Err(field("a", "missing: give a (one channel) or N (a tube)"));
            }
        };

        let grid = flags.grid.as_deref().or(file.sweep.grid.as_deref()).map(Grid::parse).transpose()?;
        match (mode, &model) {
            (Mode::States, Model::Tube { .. }) => return Err(field("a", "states mode works on one channel; give a")),
            (Mode::Tube | Mode::Sweep, Model::Channel { .. }) => {
                return Err(field("N", "tube and sweep modes need N"));
            }
            (Mode::Sweep, _) if grid.is_none() => return Err(field("grid", "sweep mode needs a grid")),
            _ => {}
        }
        let oracle_size = flags.oracle_size.or(file.verify.oracle_size).unwrap_or(DEFAULT_ORACLE_SIZE);
        if oracle_size <= 2 * q_len(&model) + 10 {
            return Err(field("oracle_size", format!("must exceed 2p + 10, got {oracle_size}")));
        }

        let t = &file.tolerances;
        let mut tolerances = Tolerances::default();
        let over = |name, flag: Option<f64>, file: Option<f64>, slot: &mut f64| -> Result<(), ConfigError> {
            if let Some(x) = positive(name, flag.or(file))? {
                *slot = x;
            }
            Ok(())
        };
        over("eps_edge", flags.eps_edge, t.eps_edge, &mut tolerances.edge)?;
        over("eps_v", flags.eps_v, t.eps_v, &mut tolerances.v_rel)?;
        over("eps_cluster", flags.eps_cluster, t.eps_cluster, &mut tolerances.cluster)?;
        over("eps_deg", flags.eps_deg, t.eps_deg, &mut tolerances.degenerate)?;

        Ok(Self {
            mode,
            model,
            tolerances,
            grid,
            oracle_size,
            validate: flags.validate || file.verify.validate.unwrap_or(false),
            out: flags.out.clone().or(file.output.path.clone()),
            format: flags.format.or(file.output.format).unwrap_or_default(),
        })
    }
}

fn q_len(model: &Model) -> usize {
    match model {
        Model::Channel { q, .. } | Model::Tube { q, .. } => q.len(),
    }
}
