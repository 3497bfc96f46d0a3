//! Temporal patient-flow networks and their absorptive capacity under stress.
//!
//! Visit records become monthly flow networks ([`builder`]), which are
//! measured ([`metrics`]) and evaluated against per-region stress profiles
//! ([`absorb`]). [`scenario`] runs the empirical comparison and the seeded
//! identical-stress sweeps; [`synth`] provides synthetic corpora.

pub mod absorb;
pub mod builder;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod io;
pub mod metrics;
pub mod scenario;
pub mod services;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
