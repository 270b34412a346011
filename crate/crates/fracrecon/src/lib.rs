//! Numerical toolkit for recovering a function on the whole real line from
//! local data: its values and the values of its fractional Laplacian on a
//! window. Two routes are provided — a Kelvin-transform pipeline that maps
//! the unknown exterior into a bounded set, and a Green-function pipeline
//! that solves a Fredholm equation of the first kind for the exterior values
//! — together with the shared machinery: a finite-difference fractional
//! Laplacian, spectral operators, Tikhonov-regularized GMRES, and smooth
//! plateau extensions.
//!
//! All core modules are generic over the scalar type through the [`Real`]
//! trait (`f32` or `f64`); concrete `f64` aliases are exported at the crate
//! root.

pub mod error;
pub mod extension;
pub mod fraclap;
pub mod greens;
pub mod grid;
pub mod kelvin;
pub mod operator;
pub mod profiles;
pub(crate) mod quad;
pub mod real;
pub mod recon;
pub mod special;
pub mod spectral;
pub mod tikhonov;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instantiations of the core types.
pub type Grid64 = grid::Grid1D<f64>;
pub type GridFn64 = grid::GridFunction<f64>;
pub type Masked64 = grid::MaskedGridFunction<f64>;
pub type Op64 = operator::DenseOperator<f64>;
pub type FracOrder64 = fraclap::FracOrder<f64>;

/// `f32` instantiations of the core types.
pub type Grid32 = grid::Grid1D<f32>;
pub type GridFn32 = grid::GridFunction<f32>;
