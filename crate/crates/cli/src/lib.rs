//! Seeded corpora, audit orchestration and JSON/CSV reports for the `rio`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod json;

pub use commands::{classify, report, verify, witness, Context, Inequality};
pub use config::{RunArgs, RunConfig};
pub use corpus::{Corpus, Recipe};
pub use error::CliError;
