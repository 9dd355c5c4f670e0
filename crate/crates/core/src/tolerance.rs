use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the classification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Real `λ` with `|Δ(λ)| < 1 − edge` is strictly inside a band; a root
    /// within `edge` of a band edge is a virtual state.
    pub edge: f64,
    /// Relative width of the `λ = v` window: `|λ − v| ≤ v_rel · (1 + |v|)`.
    pub v_rel: f64,
    /// Root clustering radius, relative to `1 + |root|`.
    pub cluster: f64,
    /// Channels with `a ≤ degenerate` are treated by the flat-band path.
    pub degenerate: f64,
    /// Channels with `a` below this are computed but flagged.
    pub near_degenerate: f64,
    /// Jost zero test, relative to `max(1, |θ̃₀|, |m φ̃₀|)`.
    pub jost_zero: f64,
    /// A real root lies on the sheet whose Jost function has a zero within
    /// `jost_step · (1 + |λ|)` of it, by one Newton step.
    pub jost_step: f64,
    /// Permitted size of coefficients above degree `2p`, relative to the
    /// degree-`2p` coefficient.
    pub cancellation: f64,
    pub construction: Construction,
}

/// Arithmetic used to build the state polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Exact rational arithmetic on the binary input values, rounded once.
    #[default]
    Exact,
    /// Compensated floating point; fails on excessive cancellation.
    Float,
    /// Floating point, rebuilt exactly when the cancellation check fails.
    Auto,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            edge: 1e-9,
            v_rel: 1e-8,
            cluster: 1e-7,
            degenerate: 1e-12,
            near_degenerate: 1e-4,
            jost_zero: 1e-7,
            jost_step: 1e-6,
            cancellation: 1e-8,
            construction: Construction::Exact,
        }
    }
}

impl Tolerances {
    pub fn v_window(&self, v: f64) -> f64 {
        self.v_rel * (1.0 + v.abs())
    }
}
