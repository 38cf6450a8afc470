//! Exact tropicalization of del Pezzo surfaces of degree 5, 4 and 3.
//!
//! The crate is organized bottom-up: [`num`] and [`polyhedra`] provide the exact
//! rational kernel, [`rootsys`], [`matroid`] and [`coxideal`] carry the root-system
//! and algebraic data, [`tropcurves`] and [`valued`] describe plane curves over a
//! valued field, and [`modification`], [`trees`] and [`degenerate`] build the
//! surfaces themselves. [`golden`] holds the table of combinatorial types and [`cli`]
//! wires everything to the command-line front end.

pub mod cli;
pub mod coxideal;
pub mod degenerate;
pub mod error;
pub mod golden;
pub mod graph;
pub mod matroid;
pub mod modification;
pub mod num;
pub mod polyhedra;
pub mod rootsys;
pub mod tropcurves;
pub mod trees;
pub mod valued;

pub use error::{Error, Result};
