//! Library surface of the command line front end: config parsing, scenario
//! presets, artifact serialization and run drivers.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
