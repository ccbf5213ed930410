//! Deformed-affine Riemannian metrics on symmetric positive-definite matrices.
//!
//! The affine-invariant metric `g¹` on SPD(n) is pulled back by a
//! diffeomorphism `f` of the cone to give `g^f`. Power maps give the
//! power-affine family (with the polar-affine metric at θ = 2), log-linear
//! maps `f_{λ,μ}` give power-affine metrics with a modified trace weight, and
//! the log-Euclidean metric appears as the θ → 0 limit.
//!
//! Modules, bottom-up:
//! - [`spd`]: matrix types, eigendecomposition, spectral functions and
//!   Daleckii–Kreĭn differentials.
//! - [`deformation`]: the deformation interface and its concrete families.
//! - [`metric`]: scalar products, actions, geodesics, exp/log, distances
//!   and symmetries.
//! - [`stats`]: Fréchet mean, interpolation and tangent PCA.
//! - [`sampling`]: random inputs for property checks.

pub mod deformation;
pub mod error;
pub mod metric;
pub mod sampling;
pub mod spd;
pub mod stats;

pub use deformation::{parse_deformation, Deformation};
pub use error::{Result, SpdError};
pub use metric::{parse_metric, MetricSpec};
pub use spd::{SpdMatrix, SymMatrix};
pub use stats::SpdDataset;
