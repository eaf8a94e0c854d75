//! Simulation and property checks for finite-form, non-dominating adaptive
//! control of plants whose uncertainty depends nonlinearly on the parameter.

// `!(a < b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod error;
pub mod excitation;
pub mod expr;
pub mod filter;
pub mod multidim;
pub mod plant;
pub mod report;
pub mod scenarios;
pub mod sim;
pub mod suite;
pub mod svg;
pub mod trace;
