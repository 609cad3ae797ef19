//! Numerical toolkit for PT-symmetric Hamiltonians `H = p² + x²(ix)^ε`.

pub mod dynamics;
pub mod equivalence;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod oscillator;
pub mod potential;
pub mod sampling;
pub mod shooting;
pub mod spectrum;
pub mod wkb;

pub use error::{Error, Result};
