//! Galerkin solver for a Cahn-Hilliard phase field coupled to Biot
//! poroelasticity on a rectangle, with energy and stability diagnostics.

pub mod assembly;
pub mod bases;
pub mod cli;
pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod output;
pub mod quadrature;
pub mod rng;
pub mod selftest;

pub use error::{ChbError, Result};
