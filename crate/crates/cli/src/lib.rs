//! File formats, experiment harness and command-line front end.

pub mod cli;
pub mod experiment;
pub mod filterdir;
pub mod lmtable;
pub mod pgm;
