//! Model reduction of the compressible Euler equations with weighted
//! vector-valued POD, Galerkin projection and windowed least-squares
//! residual minimization.

pub mod error;
pub mod euler;
pub mod fv;
pub mod harness;
pub mod inner_products;
pub mod io;
pub mod pod;
pub mod problems;
pub mod rom;

pub use error::{Error, Result};
