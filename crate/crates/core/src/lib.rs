//! Pseudospectral laboratory for Klein-Gordon scattering with space-time
//! dependent and nonlinear interactions.
//!
//! The crate simulates `(d^2/dt^2 - Laplacian + 1) u = -(V(x,t) + N0(u)) u`
//! on a periodic box, computes phase-space-localized channel wave operators
//! at a finite horizon, splits solutions into free radiation plus a weakly
//! localized remainder, and measures the decay, commutator, and localization
//! rates that govern that splitting.
//!
//! Module map:
//!
//! * [`grid`] - periodic lattices, spectral transforms, weighted norms.
//! * [`propagators`] - exact free Klein-Gordon flow and half-wave operators.
//! * [`phase_space`] - smooth space/frequency cutoffs, operator handles,
//!   power-iteration norms, commutator and velocity-bound probes.
//! * [`interactions`] - the interaction catalog (static, moving, modulated
//!   potentials and local nonlinearities) and interaction-decay probes.
//! * [`scattering`] - Strang evolution, Duhamel checks, channel wave
//!   operators with Cauchy certification, propagation observables, and the
//!   free/weak decomposition.
//! * [`harness`] - experiment configs, exponent fitting, CSV/JSON reports,
//!   and the pipeline runner behind the CLI.

pub mod error;
pub mod grid;
pub mod harness;
pub mod interactions;
pub mod phase_space;
pub mod propagators;
pub mod scattering;

pub use error::{Error, Result};
pub use grid::{Field, FieldState, Grid, NormSpec, Representation};
