//! Ambient RF energy harvesting under Ginibre α-determinantal source models.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: incomplete Gamma functions, the Ginibre spectrum on a disk and
//!   the log-domain Fredholm product that gives void probabilities.
//! - [`samplers`]: point-pattern generation (α-DPP by sequential projection
//!   sampling, Poisson baseline).
//! - [`harvest`]: Friis harvesting, transmit power and achievable rate.
//! - [`bounds`]: closed-form expected rate and outage upper bounds.
//! - [`montecarlo`]: seeded, order-independent Monte Carlo estimators.

pub mod bounds;
pub mod error;
pub mod harvest;
pub mod montecarlo;
pub mod samplers;
pub mod specfun;

pub use bounds::OutageThresholds;
pub use error::{Error, Result};
pub use harvest::{HarvestParams, LinkParams, RateConvention};
pub use montecarlo::{HarvestSamples, McConfig, McEstimate, SourceModel};
pub use samplers::{Alpha, GinibreModel, ObservationWindow, PointPattern, RngStream};
pub use specfun::{GinibreSpectrum, Truncation};
