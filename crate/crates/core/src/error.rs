use thiserror::Error;

/// Sign of the residue of a Weyl function pole at `λ = v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ResidueSign {
    Positive,
    Negative,
    /// The numerator vanishes too (branch point, `a = 1`).
    Zero,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("no roots defined for a polynomial of degree {degree:?}")]
    NoRoots { degree: Option<usize> },

    #[error("on-cut evaluation at λ = {re} + {im}i (strictly inside a band)")]
    OnCut { re: f64, im: f64 },

    #[error("Weyl pole at λ = v (residue {residue:?})")]
    WeylPole { residue: ResidueSign },

    #[error("Jost function has a pole at v (φ̃₀(v) = {phi0_at_v})")]
    PoleAtV { phi0_at_v: f64 },

    #[error("cancellation failure: residual coefficient ratio {ratio:e} above degree {degree}")]
    CancellationFailure { degree: usize, ratio: f64 },

    #[error("embedded root at λ = {lambda} (strictly inside a band)")]
    EmbeddedRoot { lambda: f64 },

    #[error("unclassifiable root at λ = {re} + {im}i: {reason}")]
    UnclassifiableRoot { re: f64, im: f64, reason: String },

    #[error("resolvent probe inconclusive at λ = {lambda}: {reason}")]
    ProbeInconclusive { lambda: f64, reason: String },

    #[error("perturbation is trivial (q = 0)")]
    Unperturbed,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("channel {k}: {source}")]
    Channel {
        k: usize,
        #[source]
        source: Box<SpectralError>,
    },
}

pub type Result<T, E = SpectralError> = std::result::Result<T, E>;
