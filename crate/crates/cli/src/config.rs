//! Sweep configuration: a flat JSON document whose keys double as
//! `--kebab-case` command-line flags.
//!
//! Values are resolved in three layers, later ones winning: built-in
//! defaults, the `--config` file, then individual flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use relaygeom_core::analytic::FkForm;
use relaygeom_core::montecarlo::Strategy;
use relaygeom_core::{CellGeometry, Error as CoreError, FirstHopThreshold, RadioParams};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_CELL_RADIUS: f64 = 20.0;
pub const DEFAULT_DEST_DISTANCE: f64 = 5.0;
pub const DEFAULT_RELAY_INTENSITY: f64 = 0.5;
pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 2.0;
pub const DEFAULT_RATE: f64 = 1.0;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MEAN_COUNT_SNR_DB: f64 = 15.0;
pub const DEFAULT_K_VALUES: [u32; 3] = [1, 2, 3];
/// Radii in the default mean-count grid, spanning `[0, R + r_d]`.
pub const DEFAULT_RADIUS_POINTS: usize = 26;

/// 0 to 30 dB in 2.5 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=12).map(|i| 2.5 * i as f64).collect()
}

/// One layer of optional settings. Deserialized from the config file and
/// parsed from flags with the same field names.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Cell radius R
    #[arg(long)]
    pub cell_radius: Option<f64>,
    /// Base station to destination distance
    #[arg(long)]
    pub dest_distance: Option<f64>,
    /// Candidate relays per unit area
    #[arg(long)]
    pub relay_intensity: Option<f64>,
    #[arg(long)]
    pub path_loss_exponent: Option<f64>,
    /// Target rate in bps/Hz
    #[arg(long)]
    pub rate: Option<f64>,
    /// Comma-separated, strictly increasing SNR points in dB
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_grid_db: Option<Vec<f64>>,
    /// Comma-separated subset of exact,stat
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    /// Comma-separated relay counts for the stat strategy
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k_values: Option<Vec<i64>>,
    /// Monte Carlo trials per row
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Distance law used by the analytic stat curve: exact or paper
    #[arg(long)]
    pub fk_form: Option<String>,
    /// frame_consistent or paper_eq4
    #[arg(long)]
    pub first_hop_threshold: Option<String>,
    /// Operating point of the mean-count and fk-check runs
    #[arg(long, allow_hyphen_values = true)]
    pub mean_count_snr_db: Option<f64>,
    /// Comma-separated observer radii for mean-count
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Optional SVG chart destination
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl ConfigLayer {
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| CliError::ConfigSyntax {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text, path)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            cell_radius: top.cell_radius.or(self.cell_radius),
            dest_distance: top.dest_distance.or(self.dest_distance),
            relay_intensity: top.relay_intensity.or(self.relay_intensity),
            path_loss_exponent: top.path_loss_exponent.or(self.path_loss_exponent),
            rate: top.rate.or(self.rate),
            snr_grid_db: top.snr_grid_db.or(self.snr_grid_db),
            strategies: top.strategies.or(self.strategies),
            k_values: top.k_values.or(self.k_values),
            trials: top.trials.or(self.trials),
            seed: top.seed.or(self.seed),
            fk_form: top.fk_form.or(self.fk_form),
            first_hop_threshold: top.first_hop_threshold.or(self.first_hop_threshold),
            mean_count_snr_db: top.mean_count_snr_db.or(self.mean_count_snr_db),
            radii: top.radii.or(self.radii),
            output: top.output.or(self.output),
            svg: top.svg.or(self.svg),
        }
    }
}

/// Fully resolved and validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub cell: CellGeometry,
    pub rate: f64,
    pub snr_grid_db: Vec<f64>,
    /// Deduplicated, exact before stat.
    pub strategies: Vec<Strategy>,
    /// Deduplicated, ascending.
    pub k_values: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub fk_form: FkForm,
    pub first_hop: FirstHopThreshold,
    pub mean_count_snr_db: f64,
    pub radii: Vec<f64>,
    pub output: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig::resolve(ConfigLayer::default()).expect("built-in defaults are valid")
    }
}

fn parse_named<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e: T::Err| CliError::config(field, e.to_string()))
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be finite, got {v}")))
    }
}

impl SweepConfig {
    /// Reads `path` if given, overlays `flags`, and validates.
    pub fn load(path: Option<&Path>, flags: ConfigLayer) -> Result<Self> {
        let file = match path {
            Some(p) => ConfigLayer::from_file(p)?,
            None => ConfigLayer::default(),
        };
        Self::resolve(file.overlay(flags))
    }

    /// Fills unset fields with defaults and checks every invariant.
    pub fn resolve(layer: ConfigLayer) -> Result<Self> {
        let cell = CellGeometry::new(
            layer.cell_radius.unwrap_or(DEFAULT_CELL_RADIUS),
            layer.dest_distance.unwrap_or(DEFAULT_DEST_DISTANCE),
            layer.relay_intensity.unwrap_or(DEFAULT_RELAY_INTENSITY),
            layer
                .path_loss_exponent
                .unwrap_or(DEFAULT_PATH_LOSS_EXPONENT),
        )
        .map_err(|e| match e {
            CoreError::InvalidParameter { name, reason } => CliError::config(name, reason),
            other => CliError::config("cell", other.to_string()),
        })?;

        let rate = finite("rate", layer.rate.unwrap_or(DEFAULT_RATE))?;
        if rate <= 0.0 {
            return Err(CliError::config("rate", format!("must be > 0, got {rate}")));
        }

        let snr_grid_db = layer.snr_grid_db.unwrap_or_else(default_snr_grid);
        if snr_grid_db.is_empty() {
            return Err(CliError::config("snr_grid_db", "must not be empty"));
        }
        for &s in &snr_grid_db {
            finite("snr_grid_db", s)?;
        }
        if snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config(
                "snr_grid_db",
                "must be strictly increasing",
            ));
        }

        let mut strategies = match layer.strategies {
            Some(raw) => raw
                .iter()
                .map(|s| parse_named::<Strategy>("strategies", s))
                .collect::<Result<Vec<_>>>()?,
            None => vec![Strategy::Exact, Strategy::Stat],
        };
        strategies.sort_by_key(|s| match s {
            Strategy::Exact => 0,
            Strategy::Stat => 1,
        });
        strategies.dedup();
        if strategies.is_empty() {
            return Err(CliError::config("strategies", "must not be empty"));
        }

        let mut k_values = match layer.k_values {
            Some(raw) => raw
                .iter()
                .map(|&k| match u32::try_from(k) {
                    Ok(k) if k >= 1 => Ok(k),
                    _ => Err(CliError::config(
                        "k_values",
                        format!("must be >= 1, got {k}"),
                    )),
                })
                .collect::<Result<Vec<_>>>()?,
            None => DEFAULT_K_VALUES.to_vec(),
        };
        k_values.sort_unstable();
        k_values.dedup();
        if k_values.is_empty() && strategies.contains(&Strategy::Stat) {
            return Err(CliError::config(
                "k_values",
                "must not be empty when the stat strategy is selected",
            ));
        }

        let trials = layer.trials.unwrap_or(DEFAULT_TRIALS);
        if trials < 1 {
            return Err(CliError::config("trials", "must be >= 1"));
        }

        let fk_form = match layer.fk_form {
            Some(s) => parse_named("fk_form", &s)?,
            None => FkForm::default(),
        };
        let first_hop = match layer.first_hop_threshold {
            Some(s) => parse_named("first_hop_threshold", &s)?,
            None => FirstHopThreshold::default(),
        };
        let mean_count_snr_db = finite(
            "mean_count_snr_db",
            layer.mean_count_snr_db.unwrap_or(DEFAULT_MEAN_COUNT_SNR_DB),
        )?;

        let limit = cell.max_dest_range();
        let radii = match layer.radii {
            Some(r) => r,
            None => {
                let last = (DEFAULT_RADIUS_POINTS - 1) as f64;
                (0..DEFAULT_RADIUS_POINTS)
                    .map(|i| limit * i as f64 / last)
                    .collect()
            }
        };
        if radii.is_empty() {
            return Err(CliError::config("radii", "must not be empty"));
        }
        if radii.iter().any(|r| !(0.0..=limit).contains(r)) {
            return Err(CliError::config(
                "radii",
                format!("must lie in [0, cell_radius + dest_distance] = [0, {limit}]"),
            ));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config("radii", "must be strictly increasing"));
        }

        Ok(SweepConfig {
            cell,
            rate,
            snr_grid_db,
            strategies,
            k_values,
            trials,
            seed: layer.seed.unwrap_or(DEFAULT_SEED),
            fk_form,
            first_hop,
            mean_count_snr_db,
            radii,
            output: layer.output,
            svg: layer.svg,
        })
    }

    pub fn radio(&self, snr_db: f64, k: u32) -> relaygeom_core::Result<RadioParams> {
        Ok(RadioParams::new(snr_db, self.rate, k)?.with_first_hop(self.first_hop))
    }

    /// Settings echoed into output comments so a file records how it was made.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        vec![
            (
                "generator",
                format!("relaygeom {}", env!("CARGO_PKG_VERSION")),
            ),
            ("cell_radius", self.cell.cell_radius.to_string()),
            ("dest_distance", self.cell.dest_distance.to_string()),
            ("relay_intensity", self.cell.relay_intensity.to_string()),
            (
                "path_loss_exponent",
                self.cell.path_loss_exponent.to_string(),
            ),
            ("rate", self.rate.to_string()),
            ("snr_grid_db", list(&self.snr_grid_db)),
            (
                "strategies",
                self.strategies
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            (
                "k_values",
                self.k_values
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("fk_form", self.fk_form.as_str().to_string()),
            ("first_hop_threshold", self.first_hop.as_str().to_string()),
            ("mean_count_snr_db", self.mean_count_snr_db.to_string()),
            (
                "note",
                "cell_radius relay_intensity rate and trials defaults are repository choices"
                    .to_string(),
            ),
        ]
    }
}
