//! Numerical operator model toolkit: dilations, characteristic operators, and
//! canonical models for contractive covariant representations over finite
//! multi-matrix algebras.

pub mod algebra;
pub mod charfun;
pub mod cli;
pub mod correspondence;
pub mod covrep;
pub mod crossed;
pub mod dilation;
pub mod duality;
pub mod error;
pub mod fixtures;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod report;
pub mod tol;

pub use error::{Error, Result};
