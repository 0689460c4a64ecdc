//! Overlapping Schwarz alternating method for finite-difference elliptic
//! optimal control problems on the unit square (or interval).
//!
//! [`schwarz`] drives the sweeps, [`saddle`] holds the subdomain solvers,
//! [`metrics`] the merit norms and property checkers, and [`report`] the
//! table and plot output. [`analytic1d`] has the closed-form 1D rates.

pub mod analytic1d;
pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fdm;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod report;
pub mod saddle;
pub mod schwarz;
pub mod verify;

pub use error::{Error, Result};
pub use metrics::{extract_rates, ConvergenceRecord, MeritNorm};
pub use model::{Decomposition, Grid, GridFunction, InitPolicy, OverlapConvention, ProblemKind, ProblemSpec};
pub use schwarz::{run, Mode, Schwarz, SweepHistory};
