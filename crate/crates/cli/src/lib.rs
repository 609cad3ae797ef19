//! Command-line front end for the `ptqm` toolkit.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver or I/O failure,
//! 4 a verification check failed.

pub mod commands;
pub mod config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;
