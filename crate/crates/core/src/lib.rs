//! Fourier-spectral splitting schemes for `∂ₜu = -iΔu + iVu` on the torus, with a
//! backward-error engine for the modified energy of the midpoint-resolvent splitting.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod bernoulli;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod modified;
pub mod operator;
pub mod scheme;

pub use num_complex::Complex64;

pub use bernoulli::BernoulliTable;
pub use error::{Error, Result};
pub use experiments::{
    BoundReport, ConvergenceReport, PaperSetup, SpikeCriteria, SweepResult, SweepRow, SweepSummary, TimeSeries,
};
pub use fourier::{make_grid, FourierField, InitialData, PotentialSpec, SpectralGrid, SpectralTransform};
pub use modified::{ModifiedEnergy, RecursionConfig};
pub use operator::{DiagonalOperator, SpectralOperator};
pub use scheme::{builtin_catalog, builtin_scheme, evolve, Observer, Propagator, Scheme, Stage, StageKind};
