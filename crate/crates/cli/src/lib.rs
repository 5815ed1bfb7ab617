//! Library side of the `ctmg` command-line tool: image I/O, synthetic
//! scenes, run configuration, reports, the benchmark sweep and the oracle
//! self checks.

pub mod bench;
pub mod config;
pub mod oracle;
pub mod png_io;
pub mod report;
pub mod scenes;
