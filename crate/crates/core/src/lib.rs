//! Outage analysis of opportunistic relaying in a Poisson field of relays.
//!
//! A base station at the centre of a disk cell talks to one destination
//! through relays scattered as a homogeneous Poisson point process. Links
//! suffer Rayleigh fading and `1 + r^alpha` path loss. Two relay-side CSI
//! regimes are covered:
//!
//! - exact instantaneous CSI, where any relay with both hops up can forward;
//! - statistical CSI, where the `k` qualified relays nearest to the
//!   destination forward with split power and rate.
//!
//! [`analytic`] holds the closed forms and semi-analytic quadratures,
//! [`montecarlo`] the end-to-end simulator used to check them, and
//! [`geometry`] / [`model`] the shared primitives.

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod model;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
pub use model::{CellGeometry, FirstHopThreshold, RadioParams, Thresholds};
