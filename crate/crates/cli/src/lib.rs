//! Library surface of the `nsfrac` CLI: config parsing, command drivers, and
//! report serialization, kept separate from the binary so integration tests
//! can exercise them directly.

pub mod commands;
pub mod config;
pub mod report;
