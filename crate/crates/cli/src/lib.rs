//! Config parsing, check dispatch and report writing for the `subrep` binary.

pub mod config;
pub mod eval;
pub mod report;
pub mod runner;
