//! Monotone density estimation and bootstrap inference at a point.
//!
//! The crate implements the Grenander estimator (the left derivative of the
//! least concave majorant of the empirical distribution function), four
//! families of bootstrap schemes for confidence intervals at `f(t0)`, and a
//! simulator for the two-sided Brownian limit processes that govern the
//! cube-root asymptotics of the estimator.
//!
//! Module map:
//!
//! * [`model`] analytic decreasing densities used as ground truth;
//! * [`empirical`] samples and the empirical distribution function;
//! * [`lcm`] least concave majorants and the Grenander estimator;
//! * [`smoothing`] log-scale kernel smoothing of the Grenander CDF;
//! * [`bootstrap`] resampling engines, bootstrap roots and intervals;
//! * [`limitsim`] Brownian paths, Chernoff draws and the limit processes;
//! * [`experiments`] coverage studies, quantile tracking and histograms.

pub mod bootstrap;
pub mod empirical;
mod error;
pub mod experiments;
pub mod lcm;
pub mod limitsim;
pub mod model;
pub mod rng;
pub mod smoothing;
pub mod stats;

pub use error::{Error, Result};
