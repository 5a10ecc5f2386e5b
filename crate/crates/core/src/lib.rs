//! Extremum-seeking maximum power point tracking for a photovoltaic module
//! behind a boost converter.
//!
//! The crate is split along the signal path:
//!
//! - [`pv_model`]: single-diode module physics and the maximum power point oracle.
//! - [`power_stage`]: boost converter maps from duty cycle to extracted power.
//! - [`es_controllers`]: classic, unbiased-exponential and unbiased prescribed-time
//!   extremum seeking laws, plus the time dilation/contraction maps.
//! - [`analysis`]: tuning conditions, averaged equilibria and rate fits.
//! - [`sim_engine`]: fixed-step closed-loop simulation, scenarios and metrics.
//!
//! [`config`] and [`presets`] load flat key-value bundles; [`export`] writes
//! CSV and JSON artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod es_controllers;
pub mod export;
pub mod integrate;
pub mod power_stage;
pub mod presets;
pub mod pv_model;
pub mod search;
pub mod sim_engine;

pub use error::{Error, Result};
