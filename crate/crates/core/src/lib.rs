//! Eigenvalues and resonances of finitely perturbed two-dimensional quantum
//! walks.
//!
//! The walk is U = SC on ℓ²(Z²; C⁴) with a coin C(x) that equals the identity
//! outside a box. Resonances are the zeros of D(κ) = det(I + M(κ)), where
//! M(κ) is built from the explicit free-resolvent kernel; elastic (permutation)
//! coins are also handled through their closed trajectories.

pub mod barrier;
pub mod cli;
pub mod elastic;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod presets;
pub mod shape;
pub mod spectral;
pub mod translation;

pub use error::{Error, Result};
pub use lattice::{Chirality, Coin, CoinField, Site, WalkOperator, WalkState, C64};
