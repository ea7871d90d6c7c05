//! Command-line front end for the small-strike smile routines.

pub mod cli;
pub mod config;
pub mod error;
pub mod svg;
pub mod table;
