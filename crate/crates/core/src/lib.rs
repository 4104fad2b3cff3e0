//! Attractors of two-map iterated function systems, their connectedness, and
//! the parameter sets `C_{f,g}` of translations that keep them connected.

pub mod cli;
pub mod config;
pub mod connectivity;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mandelbrot;
pub mod maps;
pub mod porosity;
pub mod sets;
pub mod spatial;
pub mod union_find;
pub mod verify;

pub use error::{Error, Result};
