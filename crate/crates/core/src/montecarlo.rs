//! End-to-end outage trials for both CSI regimes.
//!
//! One trial samples a relay field confined to the cell, thins it with the
//! first-hop test and then draws one relay-to-destination fading gain for
//! every qualified relay, in index order. Both strategies read the same
//! draws, so with a shared seed the statistical-CSI outage event of a trial
//! always contains the exact-CSI one.
//!
//! Trials run on the rayon pool of the caller. Each trial owns the stream
//! `rng::trial_rng(seed, t)` and results are aggregated as integer sums, so
//! estimates do not depend on the number of workers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    dist_sq_to_dest, dist_to_dest, rank_nearest_to_dest, sample_ppp, Point, Realization,
};
use crate::model::{compute_thresholds, path_loss_from_sq, CellGeometry, RadioParams, Thresholds};
use crate::rng::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Exact instantaneous CSI: any doubly connected relay forwards.
    Exact,
    /// Statistical CSI: the `k` qualified relays nearest the destination forward.
    Stat,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Exact => "exact",
            Strategy::Stat => "stat",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Strategy::Exact),
            "stat" => Ok(Strategy::Stat),
            other => Err(Error::invalid(
                "strategy",
                format!("expected `exact` or `stat`, got `{other}`"),
            )),
        }
    }
}

/// Where relays are counted from in [`empirical_mean_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observer {
    Bs,
    Dest,
}

impl Observer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Observer::Bs => "bs",
            Observer::Dest => "dest",
        }
    }
}

impl fmt::Display for Observer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Relays that decoded the source, `J`.
    pub qualified_count: usize,
    pub outage: bool,
    /// Relays that forwarded: `min(k, J)` for statistical CSI, 0 or 1 for exact CSI.
    pub selected_count: usize,
}

/// Binomial outage estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub trials: u64,
    pub outage_count: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

impl OutageEstimate {
    pub fn new(trials: u64, outage_count: u64) -> Result<Self> {
        if trials < 1 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if outage_count > trials {
            return Err(Error::invalid(
                "outage_count",
                format!("{outage_count} exceeds {trials} trials"),
            ));
        }
        let p_hat = outage_count as f64 / trials as f64;
        Ok(OutageEstimate {
            trials,
            outage_count,
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        })
    }

    /// No outage observed: the true probability is below about `1/N`.
    pub fn below_resolution(&self) -> bool {
        self.outage_count == 0
    }
}

/// `|h|^2` of a unit-power Rayleigh coefficient: exponential with mean 1,
/// by inversion of one uniform.
pub fn sample_fading_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    // 1 - u lies in (0, 1]
    -(1.0 - u).ln()
}

/// Relays that decode the source: `g / (1 + r^alpha) >= theta_first` with a
/// fresh gain `g` per relay, drawn in input order.
pub fn qualify_relays<R: Rng + ?Sized>(
    realization: &Realization,
    theta_first: f64,
    alpha: f64,
    rng: &mut R,
) -> Vec<Point> {
    realization
        .points
        .iter()
        .filter(|p| {
            let gain = sample_fading_gain(rng);
            gain >= theta_first * path_loss_from_sq(p.radius * p.radius, alpha)
        })
        .copied()
        .collect()
}

/// Qualified relays of one trial with their relay-to-destination gains.
struct QualifiedField {
    relays: Vec<Point>,
    dest_gains: Vec<f64>,
}

fn sample_qualified<R: Rng + ?Sized>(
    cell: &CellGeometry,
    theta_first: f64,
    rng: &mut R,
) -> Result<QualifiedField> {
    let realization = sample_ppp(cell, rng)?;
    let relays = qualify_relays(&realization, theta_first, cell.path_loss_exponent, rng);
    let dest_gains = relays.iter().map(|_| sample_fading_gain(rng)).collect();
    Ok(QualifiedField { relays, dest_gains })
}

impl QualifiedField {
    fn reaches_dest(&self, i: usize, cell: &CellGeometry, theta_second: f64) -> bool {
        let d_sq = dist_sq_to_dest(&self.relays[i], cell.dest_distance);
        self.dest_gains[i] >= theta_second * path_loss_from_sq(d_sq, cell.path_loss_exponent)
    }
}

/// One exact-CSI trial. Outage iff no relay passes both hop tests.
pub fn trial_exact_csi<R: Rng + ?Sized>(
    cell: &CellGeometry,
    thresholds: &Thresholds,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let field = sample_qualified(cell, thresholds.theta_first, rng)?;
    let connected =
        (0..field.relays.len()).any(|i| field.reaches_dest(i, cell, thresholds.theta_second));
    Ok(TrialOutcome {
        qualified_count: field.relays.len(),
        outage: !connected,
        selected_count: usize::from(connected),
    })
}

/// One statistical-CSI trial with `k` forwarding relays.
///
/// When fewer than `k` relays qualify, all of them forward at the
/// `k`-relay threshold; with none, the trial is an outage.
pub fn trial_stat_csi<R: Rng + ?Sized>(
    cell: &CellGeometry,
    thresholds: &Thresholds,
    k: u32,
    rng: &mut R,
) -> Result<TrialOutcome> {
    if k < 1 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let field = sample_qualified(cell, thresholds.theta_first, rng)?;
    let selected = rank_nearest_to_dest(&field.relays, cell.dest_distance, k as usize);
    let outage = selected
        .iter()
        .all(|r| !field.reaches_dest(r.index, cell, thresholds.theta_second));
    Ok(TrialOutcome {
        qualified_count: field.relays.len(),
        outage,
        selected_count: selected.len(),
    })
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    Ok(())
}

/// Runs `trials` independent trials of `strategy` at the operating point `radio`.
pub fn estimate_outage(
    strategy: Strategy,
    cell: &CellGeometry,
    radio: &RadioParams,
    trials: u64,
    seed: u64,
) -> Result<OutageEstimate> {
    cell.validate()?;
    check_trials(trials)?;
    let thresholds = compute_thresholds(radio)?;
    if strategy == Strategy::Exact && radio.num_relays != 1 {
        return Err(Error::ExactCsiRequiresSingleRelay(radio.num_relays));
    }
    let k = radio.num_relays;
    let outages = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let outcome = match strategy {
                Strategy::Exact => trial_exact_csi(cell, &thresholds, &mut rng)?,
                Strategy::Stat => trial_stat_csi(cell, &thresholds, k, &mut rng)?,
            };
            Ok(u64::from(outcome.outage))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let estimate = OutageEstimate::new(trials, outages)?;
    if estimate.below_resolution() {
        log::info!(
            "{strategy} outage at {} dB: no outage in {trials} trials (p < ~1/{trials})",
            radio.snr_db
        );
    }
    Ok(estimate)
}

/// Empirical probability that the `j`-th nearest qualified relay is absent
/// or fails to reach the destination, at the thresholds of `radio`.
pub fn estimate_rank_failure(
    cell: &CellGeometry,
    radio: &RadioParams,
    j: u32,
    trials: u64,
    seed: u64,
) -> Result<OutageEstimate> {
    cell.validate()?;
    check_trials(trials)?;
    if j < 1 {
        return Err(Error::invalid("j", "must be >= 1"));
    }
    let thresholds = compute_thresholds(radio)?;
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let field = sample_qualified(cell, thresholds.theta_first, &mut rng)?;
            let ranked = rank_nearest_to_dest(&field.relays, cell.dest_distance, j as usize);
            let failed = match ranked.get(j as usize - 1) {
                Some(r) => !field.reaches_dest(r.index, cell, thresholds.theta_second),
                None => true,
            };
            Ok(u64::from(failed))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    OutageEstimate::new(trials, failures)
}

/// Distance from the destination to the `k`-th nearest qualified relay in
/// each of `trials` fields; `None` where fewer than `k` relays qualified.
pub fn sample_kth_nearest_distances(
    cell: &CellGeometry,
    theta_first: f64,
    k: u32,
    trials: u64,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    cell.validate()?;
    check_trials(trials)?;
    if k < 1 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let realization = sample_ppp(cell, &mut rng)?;
            let relays =
                qualify_relays(&realization, theta_first, cell.path_loss_exponent, &mut rng);
            let ranked = rank_nearest_to_dest(&relays, cell.dest_distance, k as usize);
            Ok(ranked.get(k as usize - 1).map(|r| r.distance))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCountPoint {
    pub radius: f64,
    /// Mean number of qualified relays within `radius` of the observer.
    pub mean: f64,
    /// Standard error of `mean` across trials.
    pub stderr: f64,
}

/// Empirical mean number of qualified relays within each radius of the
/// observer.
pub fn empirical_mean_count(
    observer: Observer,
    radii: &[f64],
    cell: &CellGeometry,
    theta_first: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<MeanCountPoint>> {
    cell.validate()?;
    check_trials(trials)?;
    let limit = cell.max_dest_range();
    if radii.iter().any(|r| !(0.0..=limit).contains(r)) {
        return Err(Error::invalid(
            "radii",
            format!("must lie in [0, R + r_d] = [0, {limit}]"),
        ));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("radii", "must be strictly increasing"));
    }
    let n = radii.len();
    let zero = || (vec![0u64; n], vec![0u64; n]);
    let (sums, squares) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let realization = sample_ppp(cell, &mut rng)?;
            let relays =
                qualify_relays(&realization, theta_first, cell.path_loss_exponent, &mut rng);
            let mut dists: Vec<f64> = relays
                .iter()
                .map(|p| match observer {
                    Observer::Bs => p.radius,
                    Observer::Dest => dist_to_dest(p, cell.dest_distance),
                })
                .collect();
            dists.sort_by(f64::total_cmp);
            Ok(radii
                .iter()
                .map(|r| dists.partition_point(|d| d <= r) as u64)
                .collect::<Vec<u64>>())
        })
        .try_fold(zero, |(mut s, mut q), counts: Result<Vec<u64>>| {
            for (i, c) in counts?.into_iter().enumerate() {
                s[i] += c;
                q[i] += c * c;
            }
            Ok::<_, Error>((s, q))
        })
        .try_reduce(zero, |(mut s, mut q), (s2, q2)| {
            for i in 0..n {
                s[i] += s2[i];
                q[i] += q2[i];
            }
            Ok((s, q))
        })?;
    let nt = trials as f64;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(i, &radius)| {
            let mean = sums[i] as f64 / nt;
            let var = if trials > 1 {
                ((squares[i] as f64 - nt * mean * mean) / (nt - 1.0)).max(0.0)
            } else {
                0.0
            };
            MeanCountPoint {
                radius,
                mean,
                stderr: (var / nt).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{integrate_1d, QuadratureSpec};
    use std::f64::consts::PI;

    fn cell(radius: f64, lambda: f64) -> CellGeometry {
        CellGeometry::new(radius, 5.0, lambda, 2.0).unwrap()
    }

    fn zero_thresholds() -> Thresholds {
        Thresholds {
            theta_first: 0.0,
            theta_second: 0.0,
        }
    }

    #[test]
    fn fading_gain_moments() {
        let mut rng = trial_rng(3, 0);
        let n = 1_000_000;
        let gains: Vec<f64> = (0..n).map(|_| sample_fading_gain(&mut rng)).collect();
        let mean = gains.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.003, "{mean}");
        let tail = gains.iter().filter(|&&g| g >= 0.3).count() as f64 / n as f64;
        let expect = (-0.3f64).exp();
        assert!((expect - 0.7408).abs() < 1e-4);
        assert!((tail - expect).abs() < 3.0 * (expect * (1.0 - expect) / n as f64).sqrt());
        assert!(gains.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn zero_threshold_keeps_everyone() {
        let c = cell(10.0, 0.5);
        let mut rng = trial_rng(4, 0);
        let real = sample_ppp(&c, &mut rng).unwrap();
        assert_eq!(qualify_relays(&real, 0.0, 2.0, &mut rng).len(), real.len());
    }

    #[test]
    fn keep_probability_by_radius() {
        // relays on fixed rings, kept with probability exp(-theta (1 + r^2))
        let theta = 0.05;
        let trials = 20_000u64;
        for &r in &[0.0, 2.0, 5.0] {
            let ring = Realization {
                cell: cell(10.0, 0.5),
                points: (0..50)
                    .map(|i| Point {
                        radius: r,
                        angle: i as f64 * 0.1,
                    })
                    .collect(),
            };
            let kept: usize = (0..trials)
                .map(|t| qualify_relays(&ring, theta, 2.0, &mut trial_rng(5, t)).len())
                .sum();
            let n = (trials * 50) as f64;
            let p = kept as f64 / n;
            let expect = (-theta * (1.0 + r * r)).exp();
            assert!(
                (p - expect).abs() < 3.0 * (expect * (1.0 - expect) / n).sqrt(),
                "r {r}: {p}"
            );
        }
    }

    #[test]
    fn survivor_mean_matches_intensity_integral() {
        let c = cell(10.0, 0.5);
        let theta = 0.02;
        let trials = 4000u64;
        let counts: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = trial_rng(6, t);
                let real = sample_ppp(&c, &mut rng).unwrap();
                qualify_relays(&real, theta, 2.0, &mut rng).len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let integral = integrate_1d(
            |r| 2.0 * PI * r * 0.5 * (-theta * (1.0 + r * r)).exp(),
            0.0,
            10.0,
            &QuadratureSpec::default(),
        )
        .unwrap();
        // thinned PPP: Poisson count, variance equals mean
        assert!((mean - integral).abs() < 3.0 * (integral / trials as f64).sqrt());
    }

    #[test]
    fn empty_field_is_outage() {
        let c = cell(10.0, 1e-12);
        let t = zero_thresholds();
        for trial in 0..200 {
            let e = trial_exact_csi(&c, &t, &mut trial_rng(7, trial)).unwrap();
            let s = trial_stat_csi(&c, &t, 3, &mut trial_rng(7, trial)).unwrap();
            assert_eq!(e.qualified_count, 0);
            assert!(e.outage && s.outage);
            assert_eq!(s.selected_count, 0);
        }
    }

    #[test]
    fn outcome_invariants() {
        let c = cell(20.0, 0.05);
        let t = compute_thresholds(&RadioParams::new(12.0, 1.0, 3).unwrap()).unwrap();
        for trial in 0..500 {
            let s = trial_stat_csi(&c, &t, 3, &mut trial_rng(8, trial)).unwrap();
            assert_eq!(s.selected_count, s.qualified_count.min(3));
            if s.qualified_count == 0 {
                assert!(s.outage);
            }
            let e = trial_exact_csi(&c, &t, &mut trial_rng(8, trial)).unwrap();
            assert!(e.selected_count <= 1);
            assert_eq!(e.selected_count == 0, e.outage);
            // shared draws: stat outage contains exact outage
            assert_eq!(e.qualified_count, s.qualified_count);
            if e.outage {
                assert!(s.outage);
            }
        }
    }

    #[test]
    fn single_relay_failure_given_distance() {
        // one relay pinned at the base station, destination 3 away
        let c = CellGeometry::new(1e-9, 3.0, 1.0, 2.0).unwrap();
        let theta = 0.1;
        let field = Realization {
            cell: c,
            points: vec![Point {
                radius: 0.0,
                angle: 0.0,
            }],
        };
        let trials = 100_000u64;
        let fails = (0..trials)
            .filter(|&t| {
                let mut rng = trial_rng(9, t);
                let relays = qualify_relays(&field, 0.0, 2.0, &mut rng);
                let gain = sample_fading_gain(&mut rng);
                gain < theta * c.path_loss(dist_to_dest(&relays[0], 3.0))
            })
            .count();
        let expect = 1.0 - (-theta * 10.0f64).exp();
        let p = fails as f64 / trials as f64;
        assert!((p - expect).abs() < 3.0 * (expect * (1.0 - expect) / trials as f64).sqrt());
    }

    #[test]
    fn zero_thresholds_outage_is_void_probability() {
        // lambda pi R^2 = 5
        let radius = (5.0 / (0.5 * PI)).sqrt();
        let c = CellGeometry::new(radius, 0.5, 0.5, 2.0).unwrap();
        let mut radio = RadioParams::new(0.0, 1.0, 1).unwrap();
        radio.snr_db = 400.0;
        let est = estimate_outage(Strategy::Exact, &c, &radio, 100_000, 99).unwrap();
        let expect = (-5.0f64).exp();
        assert!((expect - 0.00674).abs() < 1e-5);
        assert!(
            (est.p_hat - expect).abs() < 3.0 * est.stderr.max(1e-12),
            "{est:?}"
        );
    }

    #[test]
    fn estimate_is_deterministic() {
        let c = cell(20.0, 0.5);
        let radio = RadioParams::new(10.0, 1.0, 2).unwrap();
        let a = estimate_outage(Strategy::Stat, &c, &radio, 2000, 5).unwrap();
        let b = estimate_outage(Strategy::Stat, &c, &radio, 2000, 5).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let c3 = pool.install(|| estimate_outage(Strategy::Stat, &c, &radio, 2000, 5).unwrap());
        assert_eq!(a, c3);
    }

    #[test]
    fn estimate_errors() {
        let c = cell(20.0, 0.5);
        let radio = RadioParams::new(10.0, 1.0, 2).unwrap();
        assert!(matches!(
            estimate_outage(Strategy::Exact, &c, &radio, 10, 1),
            Err(Error::ExactCsiRequiresSingleRelay(2))
        ));
        assert!(estimate_outage(Strategy::Stat, &c, &radio, 0, 1).is_err());
    }

    #[test]
    fn binomial_stderr() {
        let e = OutageEstimate::new(100_000, 10_000).unwrap();
        assert!((e.stderr - 9.4868e-4).abs() < 1e-7);
        assert!(OutageEstimate::new(10, 11).is_err());
        assert!(OutageEstimate::new(10, 0).unwrap().below_resolution());
    }

    #[test]
    fn sparse_field_always_outage() {
        let c = cell(20.0, 1e-9);
        let radio = RadioParams::new(30.0, 1.0, 1).unwrap();
        let est = estimate_outage(Strategy::Exact, &c, &radio, 1000, 2).unwrap();
        assert_eq!(est.outage_count, 1000);
    }

    #[test]
    fn mean_count_validation_and_origin() {
        let c = cell(20.0, 0.5);
        assert!(empirical_mean_count(Observer::Bs, &[1.0, 1.0], &c, 0.1, 10, 1).is_err());
        assert!(empirical_mean_count(Observer::Bs, &[30.0], &c, 0.1, 10, 1).is_err());
        let pts = empirical_mean_count(Observer::Dest, &[0.0, 5.0, 25.0], &c, 0.1, 200, 1).unwrap();
        assert_eq!(pts[0].mean, 0.0);
        assert!(pts[1].mean <= pts[2].mean);
        let bs = empirical_mean_count(Observer::Bs, &[0.0, 5.0, 25.0], &c, 0.1, 200, 1).unwrap();
        // every qualified relay lies within R + r_d of both observers
        assert_eq!(bs[2].mean, pts[2].mean);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [Strategy::Exact, Strategy::Stat] {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("best".parse::<Strategy>().is_err());
    }
}
