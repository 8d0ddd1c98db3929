//! Linearizability analysis of webs of foliations.
//!
//! A web is a finite family of foliations in general position on a domain of
//! R^n. This crate decides whether a web is linearizable (equivalent, under a
//! local diffeomorphism, to a web of affine subspaces) by constructing the
//! unique projective connection compatible with the web and testing the
//! vanishing of its curvature tensors. Everything is computed numerically on
//! truncated Taylor expansions (jets) at sample base points.

pub mod error;
pub mod expr;
pub mod jet;
pub mod linalg;

pub use error::{Error, Result};
pub use expr::ScalarField;
pub use jet::Jet;
pub use linalg::JetMatrix;
