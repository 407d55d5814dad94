//! Row producers pairing analytic values with Monte Carlo estimates.

use relaygeom_core::analytic::{
    mean_count_from_bs, outage_exact_csi, outage_stat, DestinationView, LambdaQMethod,
};
use relaygeom_core::model::compute_thresholds;
use relaygeom_core::montecarlo::{empirical_mean_count, estimate_outage, Observer, Strategy};

use crate::config::SweepConfig;
use crate::error::{CliError, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RELAYGEOM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub strategy: Strategy,
    pub k: u32,
    pub p_analytic: Option<f64>,
    pub p_mc: Option<f64>,
    pub stderr_mc: Option<f64>,
    pub trials: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanCountRow {
    pub observer: Observer,
    pub radius: f64,
    pub analytic: Option<f64>,
    pub empirical: Option<f64>,
    pub stderr_empirical: Option<f64>,
    pub trials: u64,
    pub error: Option<String>,
}

/// Rows that carry something in their error column.
pub trait RowStatus {
    fn error(&self) -> Option<&str>;
}

impl RowStatus for SweepRow {
    fn error(&self) -> Option<&str> {
        self.error.as_deref()
    }
}

impl RowStatus for MeanCountRow {
    fn error(&self) -> Option<&str> {
        self.error.as_deref()
    }
}

/// Fails with [`CliError::RowErrors`] if any row recorded an error.
pub fn check_rows<R: RowStatus>(rows: &[R]) -> Result<()> {
    let failed = rows.iter().filter(|r| r.error().is_some()).count();
    if failed > 0 {
        return Err(CliError::RowErrors {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

fn join_errors(errors: Vec<String>) -> Option<String> {
    if errors.is_empty() {
        None
    } else {
        Some(errors.join("; "))
    }
}

/// Runs every (snr, strategy, k) cell of the sweep in that order.
///
/// Exact-CSI rows exist only for `k = 1`; every row shares the configured
/// seed so exact and stat estimates at one SNR see the same fields.
pub fn run_outage_sweep(cfg: &SweepConfig) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_grid_db {
        for &strategy in &cfg.strategies {
            let ks: &[u32] = match strategy {
                Strategy::Exact => &[1],
                Strategy::Stat => &cfg.k_values,
            };
            for &k in ks {
                rows.push(outage_row(cfg, snr_db, strategy, k));
            }
        }
    }
    rows
}

fn outage_row(cfg: &SweepConfig, snr_db: f64, strategy: Strategy, k: u32) -> SweepRow {
    let mut row = SweepRow {
        snr_db,
        strategy,
        k,
        p_analytic: None,
        p_mc: None,
        stderr_mc: None,
        trials: cfg.trials,
        error: None,
    };
    let radio = match cfg.radio(snr_db, k) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let mut errors = Vec::new();
    let analytic = match strategy {
        Strategy::Exact => outage_exact_csi(&cfg.cell, &radio, LambdaQMethod::Quadrature),
        Strategy::Stat => outage_stat(&cfg.cell, &radio, cfg.fk_form),
    };
    match analytic {
        Ok(p) => row.p_analytic = Some(p),
        Err(e) => errors.push(format!("analytic: {e}")),
    }
    match estimate_outage(strategy, &cfg.cell, &radio, cfg.trials, cfg.seed) {
        Ok(est) => {
            row.p_mc = Some(est.p_hat);
            row.stderr_mc = Some(est.stderr);
        }
        Err(e) => errors.push(format!("monte carlo: {e}")),
    }
    row.error = join_errors(errors);
    log::debug!(
        "{snr_db} dB {strategy} k={k}: {:?} vs {:?}",
        row.p_analytic,
        row.p_mc
    );
    row
}

/// Mean number of qualified relays within each configured radius, seen
/// from the base station and then from the destination.
///
/// Qualification uses the single-relay first-hop threshold at
/// `mean_count_snr_db`.
pub fn run_mean_count(cfg: &SweepConfig) -> Vec<MeanCountRow> {
    let mut rows = Vec::new();
    let theta = cfg
        .radio(cfg.mean_count_snr_db, 1)
        .and_then(|r| compute_thresholds(&r))
        .map(|t| t.theta_first);
    for observer in [Observer::Bs, Observer::Dest] {
        let blank = |radius: f64| MeanCountRow {
            observer,
            radius,
            analytic: None,
            empirical: None,
            stderr_empirical: None,
            trials: cfg.trials,
            error: None,
        };
        let theta = match &theta {
            Ok(t) => *t,
            Err(e) => {
                rows.extend(cfg.radii.iter().map(|&r| MeanCountRow {
                    error: Some(e.to_string()),
                    ..blank(r)
                }));
                continue;
            }
        };
        let analytic: Vec<relaygeom_core::Result<f64>> = match observer {
            Observer::Bs => cfg
                .radii
                .iter()
                .map(|&r| mean_count_from_bs(r, &cfg.cell, theta))
                .collect(),
            Observer::Dest => match DestinationView::new(&cfg.cell, theta) {
                Ok(view) => cfg.radii.iter().map(|&r| view.lambda_prime(r)).collect(),
                Err(e) => cfg.radii.iter().map(|_| Err(e.clone())).collect(),
            },
        };
        let empirical =
            empirical_mean_count(observer, &cfg.radii, &cfg.cell, theta, cfg.trials, cfg.seed);
        for (i, &radius) in cfg.radii.iter().enumerate() {
            let mut row = blank(radius);
            let mut errors = Vec::new();
            match &analytic[i] {
                Ok(v) => row.analytic = Some(*v),
                Err(e) => errors.push(format!("analytic: {e}")),
            }
            match &empirical {
                Ok(points) => {
                    row.empirical = Some(points[i].mean);
                    row.stderr_empirical = Some(points[i].stderr);
                }
                Err(e) => errors.push(format!("monte carlo: {e}")),
            }
            row.error = join_errors(errors);
            rows.push(row);
        }
    }
    rows
}

/// Worker cap from [`THREADS_ENV`]; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::config(THREADS_ENV, e.to_string())),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::config(
                THREADS_ENV,
                format!("must be a positive integer, got {raw:?}"),
            )),
        },
    }
}

/// Runs `job` on a dedicated pool of `threads` workers, or on a pool of
/// rayon's default size when `None`.
pub fn with_workers<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    Ok(pool.install(job))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigLayer;

    fn small(layer: ConfigLayer) -> SweepConfig {
        SweepConfig::resolve(ConfigLayer {
            trials: Some(2000),
            ..layer
        })
        .unwrap()
    }

    #[test]
    fn rows_follow_snr_strategy_k_order() {
        let cfg = small(ConfigLayer {
            snr_grid_db: Some(vec![20.0, 25.0]),
            k_values: Some(vec![2, 1]),
            ..Default::default()
        });
        let keys: Vec<(f64, Strategy, u32)> = run_outage_sweep(&cfg)
            .iter()
            .map(|r| (r.snr_db, r.strategy, r.k))
            .collect();
        use Strategy::*;
        assert_eq!(
            keys,
            vec![
                (20.0, Exact, 1),
                (20.0, Stat, 1),
                (20.0, Stat, 2),
                (25.0, Exact, 1),
                (25.0, Stat, 1),
                (25.0, Stat, 2),
            ]
        );
    }

    #[test]
    fn rows_are_complete_and_bounded() {
        let cfg = small(ConfigLayer {
            snr_grid_db: Some(vec![10.0, 20.0]),
            k_values: Some(vec![1, 2]),
            ..Default::default()
        });
        let rows = run_outage_sweep(&cfg);
        check_rows(&rows).unwrap();
        for r in &rows {
            let p = r.p_analytic.unwrap();
            let q = r.p_mc.unwrap();
            assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
            let se = (q * (1.0 - q) / r.trials as f64).sqrt();
            assert!((r.stderr_mc.unwrap() - se).abs() < 1e-15);
        }
    }

    #[test]
    fn stat_single_relay_dominates_exact() {
        let cfg = small(ConfigLayer {
            snr_grid_db: Some(vec![5.0, 10.0, 15.0, 20.0, 25.0]),
            k_values: Some(vec![1]),
            ..Default::default()
        });
        let rows = run_outage_sweep(&cfg);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].strategy, Strategy::Exact);
            assert!(pair[1].p_mc.unwrap() >= pair[0].p_mc.unwrap());
            assert!(pair[1].p_analytic.unwrap() >= pair[0].p_analytic.unwrap());
        }
    }

    #[test]
    fn failures_land_in_error_column() {
        let cfg = small(ConfigLayer {
            snr_grid_db: Some(vec![15.0]),
            strategies: Some(vec!["stat".into()]),
            k_values: Some(vec![1]),
            path_loss_exponent: Some(4.0),
            ..Default::default()
        });
        let rows = run_outage_sweep(&cfg);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].p_analytic.is_none());
        assert!(rows[0].p_mc.is_some());
        assert!(rows[0].error.as_deref().unwrap().contains("analytic"));
        assert!(matches!(
            check_rows(&rows),
            Err(CliError::RowErrors {
                failed: 1,
                total: 1
            })
        ));
    }

    #[test]
    fn mean_count_starts_at_zero() {
        let cfg = small(ConfigLayer {
            radii: Some(vec![0.0, 5.0, 25.0]),
            ..Default::default()
        });
        let rows = run_mean_count(&cfg);
        assert_eq!(rows.len(), 6);
        check_rows(&rows).unwrap();
        for r in rows.iter().filter(|r| r.radius == 0.0) {
            assert_eq!(r.analytic, Some(0.0));
            assert_eq!(r.empirical, Some(0.0));
        }
        let bs = rows[2].analytic.unwrap();
        let dest = rows[5].analytic.unwrap();
        assert!((bs - dest).abs() / bs < 0.02);
    }

    #[test]
    fn worker_count_leaves_rows_unchanged() {
        let cfg = small(ConfigLayer {
            snr_grid_db: Some(vec![10.0, 20.0]),
            ..Default::default()
        });
        let one = with_workers(Some(1), || run_outage_sweep(&cfg)).unwrap();
        let three = with_workers(Some(3), || run_outage_sweep(&cfg)).unwrap();
        assert_eq!(one, three);
    }
}
