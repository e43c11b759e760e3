//! Regularized relativistic Vlasov-Maxwell solver.
//!
//! The crate evolves a phase-space density `f(t, x, p)` on a periodic spatial
//! torus and a truncated momentum box, coupled to Maxwell fields whose current
//! is smoothed by a scaled mollifier. Around the solver sits a verification
//! harness: conservation laws, a-priori bounds, finite propagation, weak
//! residuals and a discrete momentum-averaging estimate in `H^{1/4}`.
//!
//! Module map:
//!
//! - [`phase_space`]: grids, the density, velocity map and momentum integrals.
//! - [`mollifier`]: the bump kernel, its rescalings and spectral convolution.
//! - [`maxwell`]: tilde-field evolution, constraints and field energy.
//! - [`vlasov`]: split semi-Lagrangian transport.
//! - [`regularized`]: the coupled step, runs, and the mollifier-scale ladder.
//! - [`diagnostics`]: conservation, bounds and residual checks on histories.
//! - [`averaging`]: space-time spectra of transport triples and the `H^{1/4}` estimate.
//! - [`snapshot`]: the little-endian binary snapshot format.

pub mod averaging;
pub mod cutoff;
pub mod diagnostics;
mod error;
pub mod maxwell;
pub mod mollifier;
pub mod numerics;
pub mod phase_space;
pub mod regularized;
pub mod snapshot;
pub mod spectral;
pub mod vlasov;

pub use error::{Error, Result};
