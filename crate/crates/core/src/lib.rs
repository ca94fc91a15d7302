//! Reaction-wheel friction simulation and anomaly diagnosis.
//!
//! The diagnosis pipeline runs in four stages over a telemetry window:
//! changepoint detection ([`changepoint`]), segmented least-squares
//! friction estimation ([`estimate`]), maximum-likelihood assignment of
//! changepoints to friction switching systems ([`assign`]) and per-anomaly
//! linear classification ([`classify`]). [`pipeline`] chains them,
//! [`simulate`] generates labeled synthetic telemetry with ground truth and
//! [`bench`] produces the benchmark reports.

pub mod assign;
pub mod bench;
pub mod changepoint;
pub mod classify;
pub mod config;
pub mod error;
pub mod estimate;
pub mod io;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use config::Config;
pub use error::{Error, Result, Stage};
