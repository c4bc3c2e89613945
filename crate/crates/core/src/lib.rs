//! Numerical workbench for the Toeplitz-type operator
//!
//! ```text
//! Q_μ f(z) = ∫ f(w) (1 − ⟨z,w⟩)^{−n} dμ(w)
//! ```
//!
//! acting on Hardy spaces of the unit ball `B_n ⊂ C^n`. Measures are atomic
//! (finite weighted point sets), which makes `Q_μ` finite rank and unitarily
//! equivalent to a weighted Gram matrix of Szegő kernels. Everything else in
//! the crate exists to compare that exact spectral side with the geometric
//! quantities that control it: Carleson box constants, the approach-region
//! function `μ̃`, the Berezin-type transform `S_t μ`, lattice sums and tent
//! sequence norms, plus the disk applications (weighted composition, Volterra
//! and Nevanlinna counting).

// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disk;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod holo;
pub mod measure;
pub mod special;
pub mod spectral;
pub mod tent;

pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, Point, C64};
pub use holo::HoloFunction;
pub use measure::AtomicMeasure;
