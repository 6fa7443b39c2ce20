//! Numerical laboratory for graphical translating solitons of mean curvature
//! flow whose height function is constant along the leaves of an isoparametric
//! foliation of the unit sphere `S^n`.
//!
//! Writing the graph as `u = V ∘ r` with `r` an isoparametric function reduces
//! the soliton equation to a second order ODE for `V` on `(-1, 1)`. With
//! `ψ(r) = k √(1 - r²) V'(r)` it becomes the first order phase equation
//!
//! ```text
//! ψ' = (ψ² + 1) ((n - 1)(r - R) ψ + √(1 - r²)) / (k (1 - r²))
//! ```
//!
//! The crate is split along that reduction:
//!
//! - [`catalog`]: admissible `(k, n, m1, m2)` and the constant `R`.
//! - [`phase`]: right-hand sides, guide curves `η`, `ζ`, sign regions and the
//!   comparison functions that bound blow-up positions and finite limits.
//! - [`integrator`]: adaptive integration to the maximal interval with
//!   blow-up and regular-endpoint detection.
//! - [`classifier`]: the seven shape types and the induced domain on `S^n`.
//! - [`verify`]: finite difference checks of the soliton PDE and of the
//!   isoparametric identities.
//! - [`output`]: CSV, JSON and SVG emission used by the command line tool.

pub mod catalog;
pub mod classifier;
mod error;
pub mod integrator;
pub mod numeric;
pub mod output;
pub mod phase;
pub mod verify;

pub use catalog::SolitonParams;
pub use classifier::{classify, domain_report, sweep, DomainReport, ShapeType, TypeIndex};
pub use error::{Error, Result};
pub use integrator::{
    endpoint_seed, integrate_from, maximal_trace, Direction, EventKind, IntegratorConfig,
    TerminationEvent, Trace,
};
pub use phase::{ExtReal, PhasePoint, SignVerdict};
