//! Batch front end for the relaygeom outage engines.
//!
//! [`config`] resolves settings from defaults, a JSON file and flags;
//! [`sweep`] produces analytic/Monte Carlo row pairs; [`output`] writes them
//! as CSV and SVG; [`checks`] holds the oracle suite behind `validate`.

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::{ConfigLayer, SweepConfig};
pub use error::{CliError, Result};
