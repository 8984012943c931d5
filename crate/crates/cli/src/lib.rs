//! Config-driven experiments on top of `ravine-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv;
pub mod error;
pub mod experiment;
pub mod report;
