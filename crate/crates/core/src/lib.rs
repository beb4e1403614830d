//! Cost-benefit analysis of search-intensity policies at a cargo screening
//! checkpoint.
//!
//! Four evaluation methods share one data model ([`scenario`]):
//!
//! * closed-form scenario analysis ([`analytic`]),
//! * decision-tree rollback ([`dtree`]),
//! * Monte Carlo and discrete-event simulation ([`sim`]), driven by
//!   replication control and cross-method comparison in [`experiment`].
//!
//! Configuration parsing and table emitters live in [`config`] and
//! [`report`].

pub mod analytic;
pub mod config;
pub mod dtree;
mod error;
pub mod experiment;
mod money;
pub mod report;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use money::Money;

/// Version string written into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
