//! Library surface of the command-line tool: configuration parsing, run
//! manifests, CSV output, and the invariant-check suite. The `ramsey`
//! binary is a thin wrapper over these modules.

pub mod check;
pub mod config;
pub mod manifest;
pub mod output;
