//! IO companion for the `satrack-core` engine: scenario files, trace
//! files, post-run metrics and the `satrack` command line.

pub mod config;
pub mod metrics;
pub mod trace_io;
