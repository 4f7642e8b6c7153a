//! Riemannian geometry of fixed-rank positive semidefinite matrices through
//! reduced Cholesky factors, and eigenspace estimators built on it.
//!
//! A rank-`p` PSD matrix `M` whose leading `p` columns are independent has a
//! unique `n × p` factor `N` with `M = N Nᵀ`, zeros above the main diagonal
//! and a positive diagonal. The factor space carries a flat metric, a
//! commutative group law and closed-form geodesics, logs, distances and
//! Fréchet means; [`psd_geometry`] pushes all of it to the matrices
//! themselves. [`estimators`] uses the Fréchet mean to aggregate principal
//! eigenspaces across sites.
//!
//! Everything is generic over [`Scalar`] (`f32`, `f64`); the aliases at the
//! crate root fix `f64`.

pub mod cholesky;
pub mod error;
pub mod estimators;
pub mod factor_geometry;
pub mod linalg;
pub mod matrix;
pub mod psd_geometry;
pub mod scalar;

pub use cholesky::{FactorMatrix, RestrictedPsd};
pub use error::{Error, Result};
pub use estimators::{EigenspaceEstimate, Method, ProjectorNorm};
pub use factor_geometry::FactorTangent;
pub use linalg::SymEigen;
pub use matrix::DenseMatrix;
pub use psd_geometry::PsdTangent;
pub use scalar::Scalar;

pub type Matrix = DenseMatrix<f64>;
pub type Factor = FactorMatrix<f64>;
pub type Restricted = RestrictedPsd<f64>;
pub type Tangent = FactorTangent<f64>;
pub type PsdVector = PsdTangent<f64>;
pub type Estimate = EigenspaceEstimate<f64>;

pub type Matrix32 = DenseMatrix<f32>;
pub type Factor32 = FactorMatrix<f32>;
