//! Block-sparse spatio-temporal wind speed forecasting.
//!
//! Each station's next hourly wind speed is modeled as a linear combination of
//! lagged values from every station in the network. Because only a few
//! stations actually inform a given target, the stacked coefficient vector is
//! block-sparse, and a greedy block matching pursuit recovers it from far less
//! data than a dense fit would need. The crate provides the full pipeline:
//!
//! - [`dataset`]: ingestion, validation and gap-filling of multi-station
//!   hourly series into an immutable [`dataset::Dataset`].
//! - [`design`]: lagged design matrices in uniform and nonuniform (per-station
//!   lag order) form.
//! - [`solver`]: block orthogonal matching pursuit, dense least squares, and
//!   an exhaustive-search oracle for testing.
//! - [`orders`]: cross-correlation analysis for choosing per-station lag
//!   orders, with optional validation-driven tuning.
//! - [`forecast`]: rolling recursive multi-step backtesting with persistence,
//!   AR and least-squares baselines behind one interface.
//! - [`metrics`]: MAE / RMSE / NRMSE and method-to-method reduction tables.
//! - [`synth`]: planted block-sparse autoregressive generators for
//!   oracle-grade tests.

pub mod dataset;
pub mod design;
pub mod forecast;
pub mod metrics;
pub mod orders;
pub mod solver;
pub mod synth;

mod error;

pub use error::{Error, Result};
