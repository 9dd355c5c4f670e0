//! Spectral theory of a two-periodic Jacobi operator on the half-line with a
//! finitely supported perturbation, and of the zigzag nanotube Hamiltonian
//! that decomposes into such operators.
//!
//! The pipeline builds the state polynomial `F = (λ − v) f⁺ f⁻` from the
//! perturbation, finds its `2p` roots, and places each one on the two-sheeted
//! spectral surface as a bound, antibound, virtual or resonance state.
//!
//! ```
//! use nanospec::{find_states, Background64, Perturbation64, StateKind, Tolerances};
//!
//! let bg = Background64::new(1.0, 1.0).unwrap();
//! let q = Perturbation64::new(vec![1.0]).unwrap();
//! let report = find_states(&bg, &q, &Tolerances::default()).unwrap();
//! assert_eq!(report.total_multiplicity, 2);
//! assert_eq!(report.count(StateKind::Bound), 1);
//! ```

pub mod background;
pub mod closedform;
mod dyadic;
pub mod error;
pub mod jost;
pub mod oracle;
pub mod polycore;
pub mod scalar;
pub mod states;
pub mod tolerance;
pub mod tube;

pub use background::{Background, BandStructure, Edge, Sheet, SheetPoint};
pub use error::{Result, SpectralError};
pub use jost::{state_polynomial, Perturbation, StatePolynomial};
pub use polycore::{Polynomial, Root, RootOptions};
pub use states::{find_states, validate_counts, StateKind, StateRecord, StateReport};
pub use tolerance::{Construction, Tolerances};
pub use tube::{tube_states, Field, TubeConfig, TubeReport};

pub type Poly = Polynomial<f64>;
pub type Poly32 = Polynomial<f32>;
pub type ExactPoly = Polynomial<num_rational::BigRational>;
pub type Background64 = Background<f64>;
pub type Background32 = Background<f32>;
pub type Perturbation64 = Perturbation<f64>;
pub type StateReport64 = StateReport<f64>;
pub type TubeConfig64 = TubeConfig<f64>;
