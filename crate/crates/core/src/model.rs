//! Scenario parameters and the rate-to-threshold arithmetic shared by the
//! analytic and Monte Carlo engines.
//!
//! Only the ratio of source power to noise variance is modelled; it enters
//! every link test through the decoding thresholds.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Disk cell with the base station at its centre.
///
/// The destination sits on the reference ray (angle 0) at `dest_distance`
/// from the base station. `dest_distance` may exceed `cell_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub cell_radius: f64,
    pub dest_distance: f64,
    /// Candidate relays per unit area.
    pub relay_intensity: f64,
    pub path_loss_exponent: f64,
}

impl CellGeometry {
    pub fn new(
        cell_radius: f64,
        dest_distance: f64,
        relay_intensity: f64,
        path_loss_exponent: f64,
    ) -> Result<Self> {
        let cell = CellGeometry {
            cell_radius,
            dest_distance,
            relay_intensity,
            path_loss_exponent,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_radius.is_finite() && self.cell_radius > 0.0) {
            return Err(Error::invalid(
                "cell_radius",
                format!("must be finite and > 0, got {}", self.cell_radius),
            ));
        }
        if !(self.dest_distance.is_finite() && self.dest_distance >= 0.0) {
            return Err(Error::invalid(
                "dest_distance",
                format!("must be finite and >= 0, got {}", self.dest_distance),
            ));
        }
        if !(self.relay_intensity.is_finite() && self.relay_intensity > 0.0) {
            return Err(Error::invalid(
                "relay_intensity",
                format!("must be finite and > 0, got {}", self.relay_intensity),
            ));
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 2.0) {
            return Err(Error::invalid(
                "path_loss_exponent",
                format!("must be finite and >= 2, got {}", self.path_loss_exponent),
            ));
        }
        Ok(())
    }

    /// Mean number of candidate relays in the cell, `lambda * pi * R^2`.
    pub fn mean_relay_count(&self) -> f64 {
        self.relay_intensity * std::f64::consts::PI * self.cell_radius * self.cell_radius
    }

    /// Largest possible relay-to-destination distance, `R + r_d`.
    pub fn max_dest_range(&self) -> f64 {
        self.cell_radius + self.dest_distance
    }

    /// Position of the destination in Cartesian coordinates.
    pub fn destination(&self) -> (f64, f64) {
        (self.dest_distance, 0.0)
    }

    /// Path-loss factor `1 + r^alpha`.
    #[inline]
    pub fn path_loss(&self, distance: f64) -> f64 {
        path_loss_from_sq(distance * distance, self.path_loss_exponent)
    }
}

/// `1 + r^alpha` evaluated from `r^2`, skipping the power call for `alpha = 2`.
#[inline]
pub(crate) fn path_loss_from_sq(distance_sq: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        1.0 + distance_sq
    } else {
        1.0 + distance_sq.powf(0.5 * alpha)
    }
}

/// How the first-hop (source to relay) threshold is derived for `k > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstHopThreshold {
    /// The source transmits once at full power at the per-slot rate of the
    /// `(k + 1)`-slot frame: `(2^((1+k) R) - 1) / snr`.
    #[default]
    FrameConsistent,
    /// Two-slot threshold `(2^(2R) - 1) / snr` regardless of `k`.
    PaperEq4,
}

impl FirstHopThreshold {
    pub fn as_str(&self) -> &'static str {
        match self {
            FirstHopThreshold::FrameConsistent => "frame_consistent",
            FirstHopThreshold::PaperEq4 => "paper_eq4",
        }
    }
}

impl fmt::Display for FirstHopThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FirstHopThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame_consistent" => Ok(FirstHopThreshold::FrameConsistent),
            "paper_eq4" => Ok(FirstHopThreshold::PaperEq4),
            other => Err(Error::invalid(
                "first_hop_threshold",
                format!("expected `frame_consistent` or `paper_eq4`, got `{other}`"),
            )),
        }
    }
}

/// Transmit-side parameters of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Source power over noise variance, in dB.
    pub snr_db: f64,
    /// Target spectral efficiency in bps/Hz.
    pub target_rate: f64,
    /// Number of forwarding relays `k`.
    pub num_relays: u32,
    pub first_hop: FirstHopThreshold,
}

impl RadioParams {
    pub fn new(snr_db: f64, target_rate: f64, num_relays: u32) -> Result<Self> {
        let radio = RadioParams {
            snr_db,
            target_rate,
            num_relays,
            first_hop: FirstHopThreshold::default(),
        };
        radio.validate()?;
        Ok(radio)
    }

    pub fn with_first_hop(mut self, rule: FirstHopThreshold) -> Self {
        self.first_hop = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::invalid(
                "snr_db",
                format!("must be finite, got {}", self.snr_db),
            ));
        }
        if !(self.target_rate.is_finite() && self.target_rate > 0.0) {
            return Err(Error::invalid(
                "target_rate",
                format!("must be finite and > 0, got {}", self.target_rate),
            ));
        }
        if self.num_relays < 1 {
            return Err(Error::invalid("num_relays", "must be >= 1"));
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> f64 {
        snr_db_to_linear(self.snr_db)
    }
}

/// Decoding thresholds on the normalised gain `|h|^2 / (1 + r^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Source to relay.
    pub theta_first: f64,
    /// Relay to destination, for one of the `k` forwarding relays.
    pub theta_second: f64,
}

pub fn snr_db_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Decoding thresholds for `radio`.
///
/// Each of the `k` relays gets power `P/k` and must run at rate `(1+k) R`
/// over the `(k + 1)`-slot frame, so
/// `theta_second = k (2^((1+k) R) - 1) / snr`.
pub fn compute_thresholds(radio: &RadioParams) -> Result<Thresholds> {
    radio.validate()?;
    let k = f64::from(radio.num_relays);
    let snr = radio.snr_linear();
    let frame_gap = (1.0 + k) * radio.target_rate;
    let theta_second = k * (frame_gap.exp2() - 1.0) / snr;
    let theta_first = match radio.first_hop {
        FirstHopThreshold::FrameConsistent => (frame_gap.exp2() - 1.0) / snr,
        FirstHopThreshold::PaperEq4 => ((2.0 * radio.target_rate).exp2() - 1.0) / snr,
    };
    Ok(Thresholds {
        theta_first,
        theta_second,
    })
}
