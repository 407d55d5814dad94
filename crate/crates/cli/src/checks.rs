//! Oracle and property checks run by `relaygeom validate` and by the
//! acceptance test target.
//!
//! Every check uses the built-in defaults unless it states otherwise and
//! reports the numbers it compared, so a failing line can be read without
//! rerunning anything.

use std::f64::consts::PI;

use relaygeom_core::analytic::{
    inner_integral_i, integrate_1d, lambda_q_closed, lambda_q_quadrature, outage_exact_csi,
    outage_stat, DestinationView, FkForm, LambdaQMethod, QuadratureSpec,
};
use relaygeom_core::model::compute_thresholds;
use relaygeom_core::montecarlo::{sample_kth_nearest_distances, Observer};
use relaygeom_core::{CellGeometry, RadioParams};

use crate::config::{ConfigLayer, SweepConfig};
use crate::error::Result;
use crate::output::render_csv;
use crate::sweep::{run_mean_count, run_outage_sweep, with_workers, SweepRow};

/// Asymptotic Kolmogorov quantile at the 1% level.
pub const KS_CRITICAL_1PCT: f64 = 1.627_624;

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CheckReport {
    fn new(id: u8, name: &'static str) -> Self {
        CheckReport {
            id,
            name,
            passed: true,
            details: Vec::new(),
        }
    }

    fn note(&mut self, line: String) {
        self.details.push(line);
    }

    /// Records `line` and marks the check failed unless `ok`.
    fn expect(&mut self, ok: bool, line: String) {
        if !ok {
            self.passed = false;
        }
        self.details
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(mut self, what: &str, e: impl std::fmt::Display) -> Self {
        self.passed = false;
        self.details.push(format!("FAIL {what}: {e}"));
        self
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// One-line summary, `criterion N [PASS] name`.
    pub fn headline(&self) -> String {
        format!("criterion {} [{}] {}", self.id, self.status(), self.name)
    }
}

pub type CheckFn = fn() -> CheckReport;

/// Every check in id order.
pub fn catalogue() -> Vec<CheckFn> {
    vec![
        inner_integral_closed_form,
        far_field_mean,
        exact_csi_outage,
        stat_csi_outage,
        diversity_order,
        distance_law,
        mean_count_shape,
        distance_law_normalization,
        worker_count_determinism,
    ]
}

pub fn run_all() -> Vec<CheckReport> {
    catalogue().into_iter().map(|check| check()).collect()
}

fn default_cell() -> CellGeometry {
    SweepConfig::default().cell
}

/// Binomial standard error of a Monte Carlo estimate, floored at the
/// spread expected under the analytic value so a run with no events is
/// not judged against a zero-width band.
pub fn null_sigma(p_analytic: f64, stderr_mc: f64, trials: u64) -> f64 {
    let p = p_analytic.clamp(0.0, 1.0);
    stderr_mc.max((p * (1.0 - p) / trials as f64).sqrt())
}

/// `(observed - expected) / sigma`, zero when both the gap and sigma vanish.
pub fn z_score(observed: f64, expected: f64, sigma: f64) -> f64 {
    let gap = observed - expected;
    if sigma > 0.0 {
        gap / sigma
    } else if gap.abs() <= 1e-12 {
        0.0
    } else {
        gap.signum() * f64::INFINITY
    }
}

pub fn inner_integral_closed_form() -> CheckReport {
    let mut report = CheckReport::new(1, "inner integral closed form vs quadrature");
    let spec = QuadratureSpec {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_subdivisions: 2000,
    };
    let mut worst = (0.0f64, String::new());
    let mut cases = 0;
    for theta in [0.01, 0.1, 1.0] {
        for r_d in [0.0, 2.0, 5.0] {
            for phi in [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI] {
                for r_jd in [0.25, 1.0, 2.5, 5.0, 10.0] {
                    let a = 2.0 * r_d * f64::cos(phi);
                    let reference =
                        integrate_1d(|r| r * (-theta * (r * r - a * r)).exp(), 0.0, r_jd, &spec);
                    let closed = inner_integral_i(r_jd, phi, r_d, theta);
                    let (reference, closed) = match (reference, closed) {
                        (Ok(q), Ok(c)) => (q, c),
                        (Err(e), _) | (_, Err(e)) => {
                            return report.error(
                                &format!("theta={theta} r_d={r_d} phi={phi:.4} r_jd={r_jd}"),
                                e,
                            )
                        }
                    };
                    let rel = ((closed - reference) / reference).abs();
                    cases += 1;
                    if !(rel <= worst.0) {
                        worst = (
                            rel,
                            format!("theta={theta} r_d={r_d} phi={phi:.4} r_jd={r_jd}"),
                        );
                    }
                }
            }
        }
    }
    report.expect(
        worst.0 <= 1e-8,
        format!(
            "{cases} cases, worst relative error {:.3e} at {}",
            worst.0, worst.1
        ),
    );
    report
}

pub fn far_field_mean() -> CheckReport {
    let mut report = CheckReport::new(2, "far-field doubly connected mean vs finite cell");
    let theta = 0.1;
    for (radius, tol) in [(50.0, 1e-2), (100.0, 1e-3)] {
        let cell = match CellGeometry::new(radius, 5.0, 0.5, 2.0) {
            Ok(c) => c,
            Err(e) => return report.error("cell", e),
        };
        let closed = lambda_q_closed(&cell, theta);
        let quad = lambda_q_quadrature(&cell, theta, &QuadratureSpec::default());
        match (closed, quad) {
            (Ok(c), Ok(q)) => {
                let rel = (c - q) / q;
                report.expect(
                    rel.abs() <= tol,
                    format!(
                        "R={radius}: closed {c:.12e} quadrature {q:.12e} residual {rel:+.3e} (tolerance {tol:e}); closed form {} quadrature",
                        if c >= q { "at or above" } else { "below" }
                    ),
                );
            }
            (Err(e), _) | (_, Err(e)) => return report.error(&format!("R={radius}"), e),
        }
    }
    report
}

fn sweep_rows(layer: ConfigLayer) -> std::result::Result<Vec<SweepRow>, String> {
    let cfg = SweepConfig::resolve(layer).map_err(|e| e.to_string())?;
    let rows = run_outage_sweep(&cfg);
    if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
        return Err(format!(
            "{} dB {} k={}: {}",
            bad.snr_db,
            bad.strategy,
            bad.k,
            bad.error.as_deref().unwrap_or_default()
        ));
    }
    Ok(rows)
}

pub fn exact_csi_outage() -> CheckReport {
    let mut report = CheckReport::new(3, "exact-CSI outage, Monte Carlo vs analytic");
    let rows = match sweep_rows(ConfigLayer {
        snr_grid_db: Some(vec![5.0, 10.0, 15.0, 20.0]),
        strategies: Some(vec!["exact".into()]),
        trials: Some(100_000),
        ..Default::default()
    }) {
        Ok(r) => r,
        Err(e) => return report.error("sweep", e),
    };
    for row in &rows {
        let (p, q, se) = (
            row.p_analytic.unwrap_or(f64::NAN),
            row.p_mc.unwrap_or(f64::NAN),
            row.stderr_mc.unwrap_or(f64::NAN),
        );
        let sigma = null_sigma(p, se, row.trials);
        let diff = (q - p).abs();
        report.expect(
            diff <= 3.0 * sigma,
            format!(
                "{:>4} dB: analytic {p:.5e} mc {q:.5e} |diff| {diff:.2e} <= 3 sigma {:.2e}",
                row.snr_db,
                3.0 * sigma
            ),
        );
    }
    report
}

/// Outage of the k nearest qualified relays computed from their joint
/// distance law rather than from a product of per-rank failures.
///
/// With `Q(x) = int_0^x q(r) dL(r)` for the per-link failure `q` and the
/// qualified mean measure `L` seen from the destination,
/// `P = exp(-L(U)) sum_{m<k} Q(U)^m/m! + int_0^U q L' exp(-L) Q^{k-1}/(k-1)! dr`.
/// Evaluated with the trapezoid rule on a uniform grid; used as a
/// diagnostic only.
pub fn order_statistic_outage(
    cell: &CellGeometry,
    radio: &RadioParams,
) -> relaygeom_core::Result<f64> {
    const STEPS: usize = 4000;
    let t = compute_thresholds(radio)?;
    let k = radio.num_relays as i32;
    let view = DestinationView::new(cell, t.theta_first)?;
    let upper = cell.max_dest_range();
    let h = upper / STEPS as f64;
    let mut mass = Vec::with_capacity(STEPS + 1);
    let mut weighted = Vec::with_capacity(STEPS + 1);
    for i in 0..=STEPS {
        let r = i as f64 * h;
        let fail = -(-t.theta_second * (1.0 + r * r)).exp_m1();
        mass.push(view.lambda_prime(r)?);
        weighted.push(fail * view.lambda_prime_derivative(r)?);
    }
    let mut cumulative = vec![0.0; STEPS + 1];
    for i in 1..=STEPS {
        cumulative[i] = cumulative[i - 1] + 0.5 * h * (weighted[i] + weighted[i - 1]);
    }
    let total_q = cumulative[STEPS];
    let mut head = 0.0;
    let mut term = 1.0;
    for m in 0..k {
        if m > 0 {
            term *= total_q / f64::from(m);
        }
        head += term;
    }
    head *= (-mass[STEPS]).exp();
    let gamma_k: f64 = (1..k).map(f64::from).product();
    let tail_at = |i: usize| weighted[i] * (-mass[i]).exp() * cumulative[i].powi(k - 1) / gamma_k;
    let mut tail = 0.0;
    for i in 1..=STEPS {
        tail += 0.5 * h * (tail_at(i) + tail_at(i - 1));
    }
    Ok(head + tail)
}

pub fn stat_csi_outage() -> CheckReport {
    let mut report = CheckReport::new(4, "statistical-CSI outage, Monte Carlo vs analytic");
    let rows = match sweep_rows(ConfigLayer {
        snr_grid_db: Some((0..=6).map(|i| 5.0 * i as f64).collect()),
        strategies: Some(vec!["stat".into()]),
        k_values: Some(vec![1, 2, 3]),
        fk_form: Some("exact".into()),
        trials: Some(100_000),
        ..Default::default()
    }) {
        Ok(r) => r,
        Err(e) => return report.error("sweep", e),
    };
    let cfg = SweepConfig::default();
    for row in &rows {
        let (p, q, se) = (
            row.p_analytic.unwrap_or(f64::NAN),
            row.p_mc.unwrap_or(f64::NAN),
            row.stderr_mc.unwrap_or(f64::NAN),
        );
        let sigma = null_sigma(p, se, row.trials);
        let diff = q - p;
        let label = format!("{:>4} dB k={}", row.snr_db, row.k);
        if p >= 1e-3 {
            let band = (3.0 * sigma).max(0.05 * p);
            let joint = if row.k >= 2 {
                match cfg
                    .radio(row.snr_db, row.k)
                    .and_then(|radio| order_statistic_outage(&cfg.cell, &radio))
                {
                    Ok(j) => format!(
                        "; joint-order reference {j:.5e} (mc z {:+.1})",
                        z_score(q, j, null_sigma(j, se, row.trials))
                    ),
                    Err(e) => format!("; joint-order reference failed: {e}"),
                }
            } else {
                String::new()
            };
            report.expect(
                diff.abs() <= band,
                format!(
                    "{label}: analytic {p:.5e} mc {q:.5e} diff {diff:+.2e} band {band:.2e}{joint}"
                ),
            );
        } else {
            report.note(format!(
                "skip {label}: analytic {p:.3e} below 1e-3 (mc {q:.3e})"
            ));
        }
        if row.k >= 2 && p >= 0.5 {
            report.expect(
                q >= p - 3.0 * sigma,
                format!("{label}: low-SNR direction mc {q:.6} >= analytic {p:.6} - 3 sigma"),
            );
        }
    }
    report
}

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn diversity_order() -> CheckReport {
    let mut report = CheckReport::new(5, "high-SNR diversity slope");
    let cell = default_cell();
    let grid: Vec<f64> = (0..=4).map(|i| 30.0 + 2.5 * i as f64).collect();
    let mut stat = Vec::new();
    let mut exact = Vec::new();
    for &snr in &grid {
        let radio = match RadioParams::new(snr, 1.0, 1) {
            Ok(r) => r,
            Err(e) => return report.error("radio", e),
        };
        match (
            outage_stat(&cell, &radio, FkForm::Exact),
            outage_exact_csi(&cell, &radio, LambdaQMethod::Quadrature),
        ) {
            (Ok(s), Ok(x)) => {
                report.note(format!("{snr:>4} dB: stat {s:.5e} exact {x:.5e}"));
                stat.push(s.log10());
                exact.push(x.log10());
            }
            (Err(e), _) | (_, Err(e)) => return report.error(&format!("{snr} dB"), e),
        }
    }
    let decades: Vec<f64> = grid.iter().map(|s| s / 10.0).collect();
    let stat_slope = fitted_slope(&decades, &stat);
    let exact_slope = fitted_slope(&decades, &exact);
    report.expect(
        (stat_slope + 1.0).abs() <= 0.15,
        format!("stat k=1 slope {stat_slope:.4} over 30-40 dB, target -1 +- 0.15"),
    );
    report.expect(
        exact_slope < stat_slope,
        format!("exact-CSI slope {exact_slope:.2} steeper than stat {stat_slope:.4}"),
    );
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsRow {
    pub k: u32,
    pub snr_db: f64,
    pub samples: usize,
    /// Draws with fewer than `k` qualified relays, counted at infinity.
    pub missing: usize,
    pub ks_exact: f64,
    pub ks_paper: f64,
    pub critical_1pct: f64,
}

pub const KS_HEADER: &str = "k,snr_db,samples,missing,ks_exact,ks_paper,critical_1pct";

impl KsRow {
    pub fn fields(&self) -> Vec<String> {
        use crate::output::fmt_sci;
        vec![
            self.k.to_string(),
            fmt_sci(self.snr_db),
            self.samples.to_string(),
            self.missing.to_string(),
            fmt_sci(self.ks_exact),
            fmt_sci(self.ks_paper),
            fmt_sci(self.critical_1pct),
        ]
    }
}

/// Kolmogorov distance between the sorted finite draws `xs` (out of `n`
/// total, the rest at infinity) and the model CDF values `cdf` at `xs`.
pub fn ks_distance(cdf: &[f64], n: usize) -> f64 {
    let n = n as f64;
    cdf.iter().enumerate().fold(0.0f64, |d, (i, &f)| {
        let below = i as f64 / n;
        let at = (i + 1) as f64 / n;
        d.max((f - below).abs()).max((f - at).abs())
    })
}

/// Compares the Monte Carlo distance from the destination to its `k`-th
/// nearest qualified relay against both distance laws at
/// `mean_count_snr_db`, for each configured `k`.
pub fn distance_law_fit(cfg: &SweepConfig) -> relaygeom_core::Result<Vec<KsRow>> {
    let mut out = Vec::new();
    for &k in &cfg.k_values {
        let radio = cfg.radio(cfg.mean_count_snr_db, k)?;
        let theta = compute_thresholds(&radio)?.theta_first;
        let view = DestinationView::new(&cfg.cell, theta)?;
        let draws = sample_kth_nearest_distances(&cfg.cell, theta, k, cfg.trials, cfg.seed)?;
        let n = draws.len();
        let mut xs: Vec<f64> = draws.into_iter().flatten().collect();
        let missing = n - xs.len();
        let exact = view.f_k_cdf_sorted(&mut xs, k, FkForm::Exact)?;
        let paper = view.f_k_cdf_sorted(&mut xs, k, FkForm::Paper)?;
        out.push(KsRow {
            k,
            snr_db: cfg.mean_count_snr_db,
            samples: n,
            missing,
            ks_exact: ks_distance(&exact, n),
            ks_paper: ks_distance(&paper, n),
            critical_1pct: KS_CRITICAL_1PCT / (n as f64).sqrt(),
        });
    }
    Ok(out)
}

pub fn distance_law() -> CheckReport {
    let mut report = CheckReport::new(6, "k-th nearest distance law, Kolmogorov-Smirnov");
    let cfg = match SweepConfig::resolve(ConfigLayer {
        trials: Some(10_000),
        ..Default::default()
    }) {
        Ok(c) => c,
        Err(e) => return report.error("config", e),
    };
    match distance_law_fit(&cfg) {
        Ok(rows) => {
            for row in rows {
                report.expect(
                    row.ks_exact < row.critical_1pct,
                    format!(
                        "k={}: D exact {:.4e} < {:.4e} (paper form D {:.4e}, {} of {} draws short of k relays)",
                        row.k, row.ks_exact, row.critical_1pct, row.ks_paper, row.missing, row.samples
                    ),
                );
            }
        }
        Err(e) => return report.error("fit", e),
    }
    report
}

pub fn mean_count_shape() -> CheckReport {
    let mut report = CheckReport::new(
        7,
        "mean-count curves seen from base station and destination",
    );
    let cfg = match SweepConfig::resolve(ConfigLayer {
        trials: Some(10_000),
        radii: Some((0..=25).map(f64::from).collect()),
        ..Default::default()
    }) {
        Ok(c) => c,
        Err(e) => return report.error("config", e),
    };
    let rows = run_mean_count(&cfg);
    if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
        return report.error("mean count", bad.error.as_deref().unwrap_or_default());
    }
    let (bs, dest): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.observer == Observer::Bs);
    let r_d = cfg.cell.dest_distance;
    let mut ordered = true;
    for (b, d) in bs.iter().zip(&dest) {
        if b.radius <= r_d {
            let (vb, vd) = (
                b.analytic.unwrap_or(f64::NAN),
                d.analytic.unwrap_or(f64::NAN),
            );
            if !(vd <= vb * (1.0 + 1e-12)) {
                ordered = false;
                report.note(format!(
                    "r={}: destination {vd:.6e} above base station {vb:.6e}",
                    b.radius
                ));
            }
        }
    }
    report.expect(
        ordered,
        format!("destination curve <= base-station curve for r <= {r_d}"),
    );
    let (b_end, d_end) = (
        bs.last().and_then(|r| r.analytic).unwrap_or(f64::NAN),
        dest.last().and_then(|r| r.analytic).unwrap_or(f64::NAN),
    );
    let gap = (b_end - d_end).abs() / b_end;
    report.expect(
        gap <= 0.02,
        format!("at r = R + r_d: base station {b_end:.6} destination {d_end:.6} gap {gap:.2e}"),
    );
    let limit = cfg.cell.cell_radius - r_d;
    let mut worst = (0.0f64, String::new());
    for r in rows.iter().filter(|r| r.radius <= limit) {
        let a = r.analytic.unwrap_or(f64::NAN);
        let e = r.empirical.unwrap_or(f64::NAN);
        let sigma = r
            .stderr_empirical
            .unwrap_or(f64::NAN)
            .max((a / r.trials as f64).sqrt());
        let z = z_score(e, a, sigma).abs();
        if !(z <= worst.0) {
            worst = (z, format!("{} r={}", r.observer, r.radius));
        }
    }
    report.expect(
        worst.0 <= 3.0,
        format!(
            "analytic vs empirical for r <= {limit}: worst |z| {:.2} at {}",
            worst.0, worst.1
        ),
    );
    report
}

pub fn distance_law_normalization() -> CheckReport {
    let mut report = CheckReport::new(8, "nearest-relay distance law normalization");
    let cell = default_cell();
    let theta = match RadioParams::new(15.0, 1.0, 1).and_then(|r| compute_thresholds(&r)) {
        Ok(t) => t.theta_first,
        Err(e) => return report.error("thresholds", e),
    };
    let view = match DestinationView::new(&cell, theta) {
        Ok(v) => v,
        Err(e) => return report.error("view", e),
    };
    for x in [1.0, 5.0, cell.max_dest_range()] {
        match (view.f_k_cdf(x, 1, FkForm::Exact), view.lambda_prime(x)) {
            (Ok(cdf), Ok(mass)) => {
                let target = -(-mass).exp_m1();
                let err = (cdf - target).abs();
                report.expect(
                    err <= 1e-6,
                    format!(
                        "x={x}: integral {cdf:.12} vs 1 - exp(-mass) {target:.12}, error {err:.2e}"
                    ),
                );
            }
            (Err(e), _) | (_, Err(e)) => return report.error(&format!("x={x}"), e),
        }
    }
    report
}

/// Small sweep used for the worker-count comparison.
pub fn determinism_config() -> ConfigLayer {
    ConfigLayer {
        snr_grid_db: Some(vec![0.0, 10.0, 20.0, 30.0]),
        trials: Some(3000),
        ..Default::default()
    }
}

/// Renders the sweep CSV of `layer` on a pool of `threads` workers.
pub fn sweep_csv_with_workers(layer: ConfigLayer, threads: usize) -> Result<String> {
    let cfg = SweepConfig::resolve(layer)?;
    let rows = with_workers(Some(threads), || run_outage_sweep(&cfg))?;
    Ok(render_csv(&rows, &cfg.metadata()))
}

pub fn worker_count_determinism() -> CheckReport {
    let mut report = CheckReport::new(9, "sweep output independent of worker count");
    let one = sweep_csv_with_workers(determinism_config(), 1);
    let three = sweep_csv_with_workers(determinism_config(), 3);
    match (one, three) {
        (Ok(a), Ok(b)) => {
            report.expect(
                a == b,
                format!(
                    "1 worker vs 3 workers: {} and {} bytes, identical: {}",
                    a.len(),
                    b.len(),
                    a == b
                ),
            );
        }
        (Err(e), _) | (_, Err(e)) => return report.error("sweep", e),
    }
    report
}
