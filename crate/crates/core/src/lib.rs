//! Riemannian geometry induced on input space by neural-network feature maps
//! and kernels.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod closedforms;
pub mod data;
pub mod error;
pub mod field;
pub mod geometry;
pub mod idx;
pub mod kernels;
pub mod linalg;
pub mod network;
pub mod quadrature;
pub mod train;

pub use activation::ActivationKind;
pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use network::MlpNetwork;
