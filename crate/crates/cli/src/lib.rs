//! Library half of the `dpc` binary: configuration, file formats, and the
//! run/eval drivers. The binary in `main.rs` is a thin dispatcher over this.

pub mod config;
pub mod formats;
pub mod runner;
