//! Command-line front end, sweeps, presets and file formats for the
//! three-level quantum battery model in `qbattery-core`.

// NaN must fail the range checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod emit;
pub mod presets;
pub mod sweep;
