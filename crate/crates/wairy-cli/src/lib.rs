//! Library surface of the command-line front end: argument/config
//! handling and the command implementations, kept callable for tests.

pub mod config;
pub mod commands;

pub use commands::{run_from_args, Outcome};
