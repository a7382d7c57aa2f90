//! Models of time-gated SPAD photon-counting receivers for on-off keyed
//! optical wireless links.
//!
//! - [`photon_stats`]: mean, second moment and variance of the count detected
//!   by one gated, passively quenched pixel per symbol.
//! - [`quadrature`]: the piecewise Gauss–Legendre integrator behind them.
//! - [`link`]: per-pixel rates from a link budget, Gaussian BER and the
//!   optimal gate-ON search.
//! - [`mc`]: exact photon-level Monte-Carlo used as oracle and as the
//!   practical-receiver baseline.
//!
//! Durations are seconds, rates Hz and powers watts throughout.

pub mod error;
pub mod link;
pub mod mc;
pub mod photon_stats;
pub mod quadrature;
pub mod timing;

pub use error::{Error, Result};
pub use link::{OpticalLink, RatePair};
pub use photon_stats::CountStats;
pub use timing::{GateTiming, PhotonRate};
