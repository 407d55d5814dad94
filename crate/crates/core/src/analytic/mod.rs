//! Closed forms and semi-analytic expressions for both CSI regimes.
//!
//! Everything that completes the square in `r^2` (the inner integral, the
//! destination-view mean measure, the far-field exact-CSI mean count and the
//! base-station mean count) is derived for `alpha = 2` only and rejects other
//! exponents. The finite-cell exact-CSI quadrature accepts any `alpha >= 2`.
//!
//! The qualified-relay process is treated as extending beyond the cell when
//! it is observed from the destination, so [`lambda_prime`] counts relays in
//! a full disk around the destination even where that disk leaves the cell.
//!
//! A note on the exact-CSI connection probabilities: they are
//! `E[exp(-theta (1 + r^alpha))]`, i.e. the exponent covers the whole
//! path-loss factor.

mod erf;
mod quad;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub use erf::{erf, erfc, erfcx};
pub use quad::{integrate_1d, integrate_pieces, QuadratureSpec};

use crate::error::{Error, Result};
use crate::geometry::ln_factorial;
use crate::model::{compute_thresholds, path_loss_from_sq, CellGeometry, RadioParams, Thresholds};

/// Which density is used for the distance to the `k`-th nearest qualified
/// relay as seen from the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FkForm {
    /// `exp(-L) 2 L^k / (r Gamma(k))`. Assumes `dL/dr = 2 L / r`, which only
    /// holds when the observer sits at the base station.
    Paper,
    /// `exp(-L) L^(k-1) / (k-1)! * dL/dr`, the general inhomogeneous law.
    #[default]
    Exact,
}

impl FkForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            FkForm::Paper => "paper",
            FkForm::Exact => "exact",
        }
    }
}

impl fmt::Display for FkForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FkForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(FkForm::Paper),
            "exact" => Ok(FkForm::Exact),
            other => Err(Error::invalid(
                "fk_form",
                format!("expected `paper` or `exact`, got `{other}`"),
            )),
        }
    }
}

/// How the exact-CSI mean count is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaQMethod {
    /// Infinite-cell closed form.
    ClosedForm,
    /// Finite-cell quadrature over the disk.
    #[default]
    Quadrature,
}

fn require_free_space(cell: &CellGeometry) -> Result<()> {
    if cell.path_loss_exponent != 2.0 {
        return Err(Error::UnsupportedExponent(cell.path_loss_exponent));
    }
    Ok(())
}

fn require_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::invalid(
            "theta",
            format!("closed forms need a finite threshold > 0, got {theta}"),
        ));
    }
    Ok(())
}

fn require_distance(name: &'static str, r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(
            name,
            format!("must be finite and >= 0, got {r}"),
        ));
    }
    Ok(())
}

/// `exp(-theta r_d^2) * I`, which stays finite where `I` alone overflows.
fn inner_integral_scaled(r_jd: f64, phi: f64, r_d: f64, theta: f64) -> f64 {
    if r_jd == 0.0 {
        return 0.0;
    }
    let (sin_phi, cos_phi) = phi.sin_cos();
    let a = 2.0 * r_d * cos_phi;
    let base = theta * r_d * r_d;

    let arg = -theta * r_jd * (r_jd - a);
    let first = if arg <= 1.0 {
        -(-base).exp() * arg.exp_m1()
    } else {
        (-base).exp() - (arg - base).exp()
    } / (2.0 * theta);
    if a == 0.0 {
        return first;
    }

    let s = theta.sqrt();
    let c0 = 0.5 * a * s;
    // exp(theta a^2 / 4 - theta r_d^2) = exp(-theta r_d^2 sin^2 phi)
    let log_scale = -base * sin_phi * sin_phi;
    let second =
        0.25 * a * (PI / theta).sqrt() * erf::scaled_erf_diff(s * r_jd - c0, -c0, log_scale);
    first + second
}

/// Inner radial integral `I = int_0^r_jd r exp(-theta (r^2 - a r)) dr` with
/// `a = 2 r_d cos(phi)`, in closed form.
///
/// For `r_d = 0` this is `(1 - exp(-theta r_jd^2)) / (2 theta)`.
pub fn inner_integral_i(r_jd: f64, phi: f64, r_d: f64, theta: f64) -> Result<f64> {
    require_distance("r_jd", r_jd)?;
    require_distance("r_d", r_d)?;
    require_theta(theta)?;
    if !phi.is_finite() {
        return Err(Error::invalid("phi", "must be finite"));
    }
    Ok(inner_integral_scaled(r_jd, phi, r_d, theta) * (theta * r_d * r_d).exp())
}

/// The qualified-relay process `lambda exp(-theta (1 + |w|^2))` observed
/// from the destination.
///
/// Bundles cell, first-hop threshold and quadrature tolerances so that the
/// mean measure, its derivative and the k-th-nearest densities share one
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestinationView {
    cell: CellGeometry,
    theta: f64,
    spec: QuadratureSpec,
}

impl DestinationView {
    pub fn new(cell: &CellGeometry, theta: f64) -> Result<Self> {
        Self::with_spec(cell, theta, QuadratureSpec::default())
    }

    pub fn with_spec(cell: &CellGeometry, theta: f64, spec: QuadratureSpec) -> Result<Self> {
        cell.validate()?;
        require_free_space(cell)?;
        require_theta(theta)?;
        spec.validate()?;
        Ok(DestinationView {
            cell: *cell,
            theta,
            spec,
        })
    }

    pub fn cell(&self) -> &CellGeometry {
        &self.cell
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Expected number of qualified relays in the whole plane,
    /// `(pi lambda / theta) exp(-theta)`.
    pub fn total_mass(&self) -> f64 {
        PI * self.cell.relay_intensity / self.theta * (-self.theta).exp()
    }

    /// Mean number of qualified relays within `r_jd` of the destination.
    pub fn lambda_prime(&self, r_jd: f64) -> Result<f64> {
        require_distance("r_jd", r_jd)?;
        if r_jd == 0.0 {
            return Ok(0.0);
        }
        let (r_d, theta) = (self.cell.dest_distance, self.theta);
        // the integrand is even about phi = 0; integrate the half turn
        let half = integrate_1d(
            |phi| inner_integral_scaled(r_jd, phi, r_d, theta),
            0.0,
            PI,
            &self.spec,
        )?;
        Ok(2.0 * self.cell.relay_intensity * (-theta).exp() * half)
    }

    /// `d lambda_prime / d r_jd`: the qualified intensity integrated around
    /// the circle of radius `r_jd` centred on the destination.
    pub fn lambda_prime_derivative(&self, r_jd: f64) -> Result<f64> {
        require_distance("r_jd", r_jd)?;
        if r_jd == 0.0 {
            return Ok(0.0);
        }
        let (r_d, theta) = (self.cell.dest_distance, self.theta);
        let dr = r_jd - r_d;
        let spread = 4.0 * theta * r_jd * r_d;
        let half = integrate_1d(
            |phi| {
                let s = (0.5 * phi).sin();
                (-spread * s * s).exp()
            },
            0.0,
            PI,
            &self.spec,
        )?;
        Ok(2.0 * r_jd * self.cell.relay_intensity * (-theta * (1.0 + dr * dr)).exp() * half)
    }

    /// Density of the distance from the destination to the `k`-th nearest
    /// qualified relay. Defective: its total mass is `Pr(at least k relays)`.
    pub fn f_k_pdf(&self, r_jd: f64, k: u32, form: FkForm) -> Result<f64> {
        if k < 1 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        require_distance("r_jd", r_jd)?;
        if r_jd == 0.0 {
            return Ok(0.0);
        }
        let mass = self.lambda_prime(r_jd)?;
        if mass == 0.0 {
            return Ok(0.0);
        }
        let log_gamma_k = ln_factorial(u64::from(k) - 1);
        match form {
            FkForm::Exact => {
                let slope = self.lambda_prime_derivative(r_jd)?;
                let log_poisson = -mass + f64::from(k - 1) * mass.ln() - log_gamma_k;
                Ok(log_poisson.exp() * slope)
            }
            FkForm::Paper => {
                let log_body = -mass + f64::from(k) * mass.ln() - log_gamma_k;
                Ok(2.0 * log_body.exp() / r_jd)
            }
        }
    }

    /// `int_0^x f_k(r) dr` by quadrature of [`Self::f_k_pdf`].
    pub fn f_k_cdf(&self, x: f64, k: u32, form: FkForm) -> Result<f64> {
        require_distance("x", x)?;
        let mut sorted = [x];
        Ok(self.f_k_cdf_sorted(&mut sorted, k, form)?[0])
    }

    /// [`Self::f_k_cdf`] at many points, integrating piecewise between
    /// consecutive sorted points. `xs` is sorted in place; the returned values
    /// line up with the sorted order.
    pub fn f_k_cdf_sorted(&self, xs: &mut [f64], k: u32, form: FkForm) -> Result<Vec<f64>> {
        xs.sort_by(f64::total_cmp);
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &x in xs.iter() {
            require_distance("x", x)?;
            if x > prev {
                acc += integrate_1d(
                    |r| self.f_k_pdf(r, k, form).unwrap_or(f64::NAN),
                    prev,
                    x,
                    &self.spec,
                )?;
                prev = x;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `Pr(at least k qualified relays within x)`, from the Poisson law of
    /// the count.
    pub fn kth_nearest_cdf(&self, x: f64, k: u32) -> Result<f64> {
        if k < 1 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        let mass = self.lambda_prime(x)?;
        let mut term = (-mass).exp();
        let mut below = term;
        for i in 1..k {
            term *= mass / f64::from(i);
            below += term;
        }
        Ok(1.0 - below)
    }
}

/// Mean number of qualified relays within `r_jd` of the destination.
pub fn lambda_prime(r_jd: f64, cell: &CellGeometry, theta: f64) -> Result<f64> {
    if r_jd > cell.max_dest_range() {
        return Err(Error::invalid(
            "r_jd",
            format!(
                "must lie in [0, R + r_d] = [0, {}], got {r_jd}",
                cell.max_dest_range()
            ),
        ));
    }
    DestinationView::new(cell, theta)?.lambda_prime(r_jd)
}

/// Radial derivative of [`lambda_prime`].
pub fn lambda_prime_derivative(r_jd: f64, cell: &CellGeometry, theta: f64) -> Result<f64> {
    DestinationView::new(cell, theta)?.lambda_prime_derivative(r_jd)
}

/// Mean count in a disk of radius `r` for a homogeneous process, the
/// `theta -> 0` limit of [`lambda_prime`].
pub fn homogeneous_mean_count(r: f64, relay_intensity: f64) -> f64 {
    relay_intensity * PI * r * r
}

pub fn f_k_pdf(r_jd: f64, k: u32, cell: &CellGeometry, theta: f64, form: FkForm) -> Result<f64> {
    DestinationView::new(cell, theta)?.f_k_pdf(r_jd, k, form)
}

/// Probability that the `j`-th nearest qualified relay fails to reach the
/// destination, counting "no `j`-th relay" as a failure.
pub fn p_fail_jth(
    j: u32,
    cell: &CellGeometry,
    thresholds: &Thresholds,
    form: FkForm,
) -> Result<f64> {
    p_fail_jth_with(j, cell, thresholds, form, QuadratureSpec::default())
}

pub fn p_fail_jth_with(
    j: u32,
    cell: &CellGeometry,
    thresholds: &Thresholds,
    form: FkForm,
    spec: QuadratureSpec,
) -> Result<f64> {
    if j < 1 {
        return Err(Error::invalid("j", "must be >= 1"));
    }
    let theta_k = thresholds.theta_second;
    if !(theta_k.is_finite() && theta_k >= 0.0) {
        return Err(Error::invalid(
            "theta_second",
            format!("must be >= 0, got {theta_k}"),
        ));
    }
    let view = DestinationView::with_spec(cell, thresholds.theta_first, spec)?;
    let upper = cell.max_dest_range();
    let mut breaks = vec![0.0];
    if cell.dest_distance > 0.0 && cell.dest_distance < upper {
        breaks.push(cell.dest_distance);
    }
    breaks.push(upper);

    // quadrature errors inside the integrand surface as NaN and are caught below
    let success = integrate_pieces(
        |r| (-theta_k * (1.0 + r * r)).exp() * view.f_k_pdf(r, j, form).unwrap_or(f64::NAN),
        &breaks,
        &spec,
    )?;
    let p = 1.0 - success;
    if !(0.0..=1.0).contains(&p) {
        log::warn!("p_fail_jth(j = {j}) = {p:e} is outside [0, 1]; clamping");
        return Ok(p.clamp(0.0, 1.0));
    }
    Ok(p)
}

/// Statistical-CSI outage: the product of the per-rank failure
/// probabilities of the `k` nearest qualified relays.
pub fn outage_stat(cell: &CellGeometry, radio: &RadioParams, form: FkForm) -> Result<f64> {
    let thresholds = compute_thresholds(radio)?;
    (1..=radio.num_relays).try_fold(1.0, |acc, j| {
        Ok(acc * p_fail_jth(j, cell, &thresholds, form)?)
    })
}

/// Infinite-cell mean number of relays connected to both the base station
/// and the destination, `(pi lambda / 2 theta) exp(-theta (2 + r_d^2 / 2))`.
pub fn lambda_q_closed(cell: &CellGeometry, theta: f64) -> Result<f64> {
    cell.validate()?;
    require_free_space(cell)?;
    require_theta(theta)?;
    let r_d = cell.dest_distance;
    Ok(PI * cell.relay_intensity / (2.0 * theta) * (-theta * (2.0 + 0.5 * r_d * r_d)).exp())
}

/// Finite-cell mean number of doubly connected relays,
/// `int_W lambda exp(-theta (1 + r^alpha)) exp(-theta (1 + r_jd^alpha)) dw`.
pub fn lambda_q_quadrature(cell: &CellGeometry, theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    lambda_q_two_hop(cell, theta, theta, spec)
}

/// [`lambda_q_quadrature`] with distinct thresholds on the two hops.
pub fn lambda_q_two_hop(
    cell: &CellGeometry,
    theta_source: f64,
    theta_dest: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    cell.validate()?;
    spec.validate()?;
    for t in [theta_source, theta_dest] {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid(
                "theta",
                format!("must be finite and >= 0, got {t}"),
            ));
        }
    }
    let (r_d, alpha) = (cell.dest_distance, cell.path_loss_exponent);
    let ring = |r: f64| -> f64 {
        let source = (-theta_source * path_loss_from_sq(r * r, alpha)).exp();
        if source == 0.0 {
            return 0.0;
        }
        let half = integrate_1d(
            |phi| {
                let s = (0.5 * phi).sin();
                let dr = r - r_d;
                let d_sq = dr * dr + 4.0 * r * r_d * s * s;
                (-theta_dest * path_loss_from_sq(d_sq, alpha)).exp()
            },
            0.0,
            PI,
            spec,
        );
        match half {
            Ok(h) => 2.0 * r * source * h,
            Err(_) => f64::NAN,
        }
    };
    let radius = cell.cell_radius;
    let mut breaks = vec![0.0];
    for b in [0.5 * r_d, r_d] {
        if b > *breaks.last().unwrap() && b < radius {
            breaks.push(b);
        }
    }
    breaks.push(radius);
    Ok(cell.relay_intensity * integrate_pieces(ring, &breaks, spec)?)
}

/// Exact-CSI outage `exp(-Lambda_q)`. Defined for a single forwarding relay.
pub fn outage_exact_csi(
    cell: &CellGeometry,
    radio: &RadioParams,
    method: LambdaQMethod,
) -> Result<f64> {
    if radio.num_relays != 1 {
        return Err(Error::ExactCsiRequiresSingleRelay(radio.num_relays));
    }
    let t = compute_thresholds(radio)?;
    let mean = match method {
        LambdaQMethod::ClosedForm => lambda_q_closed(cell, t.theta_first)?,
        LambdaQMethod::Quadrature => lambda_q_two_hop(
            cell,
            t.theta_first,
            t.theta_second,
            &QuadratureSpec::default(),
        )?,
    };
    Ok((-mean).exp())
}

/// Mean number of qualified relays within `r` of the base station,
/// `(pi lambda / theta) exp(-theta) (1 - exp(-theta r^2))`.
pub fn mean_count_from_bs(r: f64, cell: &CellGeometry, theta: f64) -> Result<f64> {
    require_distance("r", r)?;
    require_free_space(cell)?;
    require_theta(theta)?;
    Ok(PI * cell.relay_intensity / theta * (-theta).exp() * -(-theta * r * r).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cell(r_d: f64) -> CellGeometry {
        CellGeometry::new(20.0, r_d, 0.5, 2.0).unwrap()
    }

    /// First-hop threshold at 15 dB, rate 1, k = 1.
    const THETA_15: f64 = 0.094_868_329_805_051_39;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn inner_integral_frozen_values() {
        // 25-digit adaptive quadrature (mpmath)
        let cases = [
            (2.0, 0.0, 0.0, 0.1, 1.648_399_769_821_803_5),
            (3.0, 0.7, 5.0, 1.0, 1_286_174.667_383_913_6),
            (10.0, 0.0, 5.0, 0.01, 59.229_653_646_932_658),
            (1.0, PI, 5.0, 1.0, 0.009_451_361_652_333_480_2),
            (0.25, PI / 4.0, 2.0, 0.1, 0.032_659_818_391_695_376),
        ];
        for (r, phi, r_d, th, expect) in cases {
            let got = inner_integral_i(r, phi, r_d, th).unwrap();
            assert!(
                rel(got, expect) < 1e-12,
                "I({r}, {phi}, {r_d}, {th}) = {got}, want {expect}"
            );
        }
    }

    #[test]
    fn inner_integral_reduces_at_origin() {
        let got = inner_integral_i(2.0, 1.3, 0.0, 0.1).unwrap();
        assert!((got - 1.64840).abs() < 1e-5);
        assert_relative_eq!(got, -(-0.4f64).exp_m1() / 0.2, max_relative = 1e-14);
        assert_eq!(inner_integral_i(0.0, 0.3, 5.0, 1.0).unwrap(), 0.0);
        assert!(inner_integral_i(1.0, 0.3, 5.0, 0.0).is_err());
        assert!(inner_integral_i(-1.0, 0.3, 5.0, 1.0).is_err());
    }

    #[test]
    fn mean_measure_frozen_values() {
        // scipy dblquad, default cell at 15 dB
        let view = DestinationView::new(&cell(5.0), THETA_15).unwrap();
        let cases = [
            (1.0, 1.418_093_134_931_592e-1, 3.002_210_311_201_992e-1),
            (2.0, 6.601_139_576_826_281e-1, 7.749_907_714_074_458e-1),
            (5.0, 6.108_098_234_791_741, 2.696_976_048_218_284),
            (10.0, 1.472_937_572_790_350e1, 3.502_215_640_991_720e-1),
            (25.0, 1.505_905_883_868_010e1, 1.946_664_580_276_657e-16),
        ];
        for (r, mass, slope) in cases {
            assert!(rel(view.lambda_prime(r).unwrap(), mass) < 1e-9, "L'({r})");
            assert!(
                rel(view.lambda_prime_derivative(r).unwrap(), slope) < 1e-8,
                "dL'({r})"
            );
        }
        assert!(rel(view.total_mass(), 1.505_905_883_868_010e1) < 1e-12);
    }

    #[test]
    fn mean_measure_isotropic_case() {
        let c = cell(0.0);
        let view = DestinationView::new(&c, 0.1).unwrap();
        for r in [0.5f64, 2.0, 7.0, 20.0] {
            let closed = PI * 0.5 / 0.1 * (-0.1f64).exp() * -(-0.1 * r * r).exp_m1();
            assert_relative_eq!(view.lambda_prime(r).unwrap(), closed, max_relative = 1e-9);
            assert_relative_eq!(
                mean_count_from_bs(r, &c, 0.1).unwrap(),
                closed,
                max_relative = 1e-12
            );
            let slope = 2.0 * PI * 0.5 * r * (-0.1 * (1.0 + r * r)).exp();
            assert_relative_eq!(
                view.lambda_prime_derivative(r).unwrap(),
                slope,
                max_relative = 1e-10
            );
            // The two f_k forms differ by dL/dr / (2L/r) = t e^-t / (1 - e^-t)
            // with t = theta r^2: the textbook density assumes a homogeneous
            // process, so it only matches where t is small.
            let t = 0.1 * r * r;
            let ratio = t * (-t).exp() / -(-t).exp_m1();
            for k in 1..=3 {
                let a = view.f_k_pdf(r, k, FkForm::Exact).unwrap();
                let b = view.f_k_pdf(r, k, FkForm::Paper).unwrap();
                assert!((a / b - ratio).abs() <= 1e-8, "k {k} r {r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn f_k_forms_agree_for_homogeneous_field() {
        for r_d in [0.0, 5.0] {
            let view = DestinationView::new(&cell(r_d), 1e-12).unwrap();
            for r in [0.5, 2.0, 6.0] {
                for k in 1..=3 {
                    let a = view.f_k_pdf(r, k, FkForm::Exact).unwrap();
                    let b = view.f_k_pdf(r, k, FkForm::Paper).unwrap();
                    assert!(rel(a, b) < 1e-7, "r_d {r_d} k {k} r {r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn mean_measure_homogeneous_limit() {
        let view = DestinationView::new(&cell(5.0), 1e-12).unwrap();
        for r in [1.0, 4.0, 10.0] {
            let hom = homogeneous_mean_count(r, 0.5);
            assert!(rel(view.lambda_prime(r).unwrap(), hom) < 1e-6);
            // exact f_k tends to the homogeneous k-th nearest law
            for k in 1..=3u32 {
                let m = hom;
                let gamma: f64 = (1..k).map(f64::from).product();
                let expect = 2.0 * 0.5 * PI * r * (-m).exp() * m.powi(k as i32 - 1) / gamma;
                assert!(rel(view.f_k_pdf(r, k, FkForm::Exact).unwrap(), expect) < 1e-6);
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for r_d in [0.0, 2.0, 5.0] {
            let view = DestinationView::new(&cell(r_d), THETA_15).unwrap();
            let h = 1e-4;
            for r in [0.3, 1.0, 3.0, 5.0, 8.0, 15.0] {
                let fd = (view.lambda_prime(r + h).unwrap() - view.lambda_prime(r - h).unwrap())
                    / (2.0 * h);
                let d = view.lambda_prime_derivative(r).unwrap();
                assert!((fd - d).abs() <= 1e-6, "r_d {r_d} r {r}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn dest_view_is_below_bs_view() {
        for r_d in [2.0, 5.0] {
            let c = cell(r_d);
            let view = DestinationView::new(&c, THETA_15).unwrap();
            let mut prev = 0.0;
            for i in 1..=50 {
                let r = i as f64 * 0.5;
                let dest = view.lambda_prime(r).unwrap();
                assert!(dest >= prev);
                assert!(dest <= view.total_mass() * (1.0 + 1e-12));
                assert!(dest <= mean_count_from_bs(r, &c, THETA_15).unwrap() * (1.0 + 1e-12));
                prev = dest;
            }
        }
    }

    #[test]
    fn f_k_rejects_bad_rank() {
        let view = DestinationView::new(&cell(5.0), 0.1).unwrap();
        assert!(view.f_k_pdf(1.0, 0, FkForm::Exact).is_err());
        assert_eq!(view.f_k_pdf(0.0, 2, FkForm::Paper).unwrap(), 0.0);
        assert!(f_k_pdf(1.0, 0, &cell(5.0), 0.1, FkForm::Exact).is_err());
    }

    #[test]
    fn f_k_exact_integrates_to_count_law() {
        let view = DestinationView::new(&cell(5.0), THETA_15).unwrap();
        for k in 1..=3 {
            for x in [1.0, 4.0, 9.0, 25.0] {
                let cdf = view.f_k_cdf(x, k, FkForm::Exact).unwrap();
                let law = view.kth_nearest_cdf(x, k).unwrap();
                assert!((cdf - law).abs() < 1e-6, "k {k} x {x}: {cdf} vs {law}");
            }
        }
    }

    #[test]
    fn cdf_sorted_matches_pointwise() {
        let view = DestinationView::new(&cell(5.0), THETA_15).unwrap();
        let mut xs = vec![3.0, 0.5, 7.0, 3.0];
        let cdf = view.f_k_cdf_sorted(&mut xs, 2, FkForm::Exact).unwrap();
        assert_eq!(xs, vec![0.5, 3.0, 3.0, 7.0]);
        for (x, c) in xs.iter().zip(&cdf) {
            assert!((view.f_k_cdf(*x, 2, FkForm::Exact).unwrap() - c).abs() < 1e-10);
        }
    }

    #[test]
    fn p_fail_frozen_values() {
        let radio = RadioParams::new(15.0, 1.0, 1).unwrap();
        let t = compute_thresholds(&radio).unwrap();
        let p1 = p_fail_jth(1, &cell(5.0), &t, FkForm::Exact).unwrap();
        assert!(rel(p1, 4.053_530_790_055e-1) < 1e-8, "{p1}");
        assert_relative_eq!(outage_stat(&cell(5.0), &radio, FkForm::Exact).unwrap(), p1);

        let radio2 = RadioParams::new(15.0, 1.0, 2).unwrap();
        let t2 = compute_thresholds(&radio2).unwrap();
        let q1 = p_fail_jth(1, &cell(5.0), &t2, FkForm::Exact).unwrap();
        let q2 = p_fail_jth(2, &cell(5.0), &t2, FkForm::Exact).unwrap();
        assert!(rel(q1, 9.728_565_724_927e-1) < 1e-8, "{q1}");
        assert!(rel(q2, 9.972_537_435_373e-1) < 1e-8, "{q2}");
        let out = outage_stat(&cell(5.0), &radio2, FkForm::Exact).unwrap();
        assert_relative_eq!(out, q1 * q2, max_relative = 1e-14);
        assert!(out <= q1);
    }

    #[test]
    fn p_fail_saturates() {
        let t = Thresholds {
            theta_first: 0.1,
            theta_second: 1e6,
        };
        assert!((p_fail_jth(1, &cell(5.0), &t, FkForm::Exact).unwrap() - 1.0).abs() < 1e-12);
        assert!(p_fail_jth(0, &cell(5.0), &t, FkForm::Exact).is_err());
    }

    #[test]
    fn p_fail_isotropic_reduction() {
        // with the observer at the base station and fixed theta the success
        // integral has the closed form
        //   int_0^U e^{-theta(1+r^2)} 2 pi lambda r e^{-theta(1+r^2)} e^{-L(r)} dr
        // with L(r) = c (1 - e^{-theta r^2}), c = pi lambda e^{-theta} / theta;
        // substituting u = 1 - e^{-theta r^2} gives
        //   c e^{-theta} int_0^{u_max} (1 - u) e^{-c u} du
        let c0 = cell(0.0);
        let theta = 0.2;
        let t = Thresholds {
            theta_first: theta,
            theta_second: theta,
        };
        let c = PI * 0.5 * (-theta).exp() / theta;
        let u_max = -(-theta * 400.0f64).exp_m1();
        let prim = |u: f64| -(-c * u).exp() / c * (1.0 - u) + (-c * u).exp() / (c * c);
        let success = c * (-theta).exp() * (prim(u_max) - prim(0.0));
        let p = p_fail_jth(1, &c0, &t, FkForm::Exact).unwrap();
        assert!(
            (p - (1.0 - success)).abs() < 1e-9,
            "{p} vs {}",
            1.0 - success
        );
    }

    #[test]
    fn far_field_mean_count() {
        let c = cell(5.0);
        let closed = lambda_q_closed(&c, 0.1).unwrap();
        assert!((closed - 1.8423).abs() < 1e-3);
        assert!(rel(closed, 1.842_310_734_564_790) < 1e-13);
        let at_origin = lambda_q_closed(&cell(0.0), 0.1).unwrap();
        assert_relative_eq!(
            at_origin,
            PI * 0.5 / 0.2 * (-0.2f64).exp(),
            max_relative = 1e-14
        );
        let exp3 = CellGeometry::new(20.0, 5.0, 0.5, 3.0).unwrap();
        assert!(matches!(
            lambda_q_closed(&exp3, 0.1),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(mean_count_from_bs(1.0, &exp3, 0.1).is_err());
        assert!(DestinationView::new(&exp3, 0.1).is_err());
    }

    #[test]
    fn finite_cell_mean_count() {
        let spec = QuadratureSpec::default();
        let frozen = [
            (0.1, 50.0, 1.842_310_734_564_790),
            (0.3, 20.0, 3.378_995_632_007_990e-2),
            (0.03, 20.0, 1.694_534_932_522_387e1),
        ];
        for (theta, radius, expect) in frozen {
            let c = CellGeometry::new(radius, 5.0, 0.5, 2.0).unwrap();
            let got = lambda_q_quadrature(&c, theta, &spec).unwrap();
            assert!(rel(got, expect) < 1e-8, "theta {theta} R {radius}: {got}");
        }
        // linear in intensity, vanishing as it does
        let tiny = CellGeometry::new(20.0, 5.0, 1e-300, 2.0).unwrap();
        let v = lambda_q_quadrature(&tiny, 0.1, &spec).unwrap();
        assert!(v < 1e-299 && v >= 0.0);
    }

    #[test]
    fn finite_cell_mean_count_monotone() {
        let spec = QuadratureSpec::default();
        let mut prev_theta = f64::INFINITY;
        for i in 1..=10 {
            let theta = 0.02 * i as f64;
            let v = lambda_q_quadrature(&cell(5.0), theta, &spec).unwrap();
            assert!(v < prev_theta);
            prev_theta = v;
        }
        let mut prev_rd = f64::INFINITY;
        for r_d in [0.0, 1.0, 3.0, 5.0, 10.0, 30.0] {
            let v = lambda_q_quadrature(&cell(r_d), 0.1, &spec).unwrap();
            assert!(v < prev_rd);
            prev_rd = v;
        }
        // works for alpha > 2 as well
        let a4 = CellGeometry::new(20.0, 5.0, 0.5, 4.0).unwrap();
        let v4 = lambda_q_quadrature(&a4, 0.1, &spec).unwrap();
        assert!(v4 > 0.0 && v4 < lambda_q_quadrature(&cell(5.0), 0.1, &spec).unwrap());
    }

    #[test]
    fn exact_csi_outage() {
        let radio = RadioParams::new(10.0, 1.0, 1).unwrap();
        let p = outage_exact_csi(&cell(5.0), &radio, LambdaQMethod::Quadrature).unwrap();
        assert!(rel(p, (-3.378_995_632_007_990e-2f64).exp()) < 1e-9);
        // theta 0.1 is SNR 10 log10(30)
        let radio = RadioParams::new(10.0 * 30f64.log10(), 1.0, 1).unwrap();
        let closed = outage_exact_csi(&cell(5.0), &radio, LambdaQMethod::ClosedForm).unwrap();
        assert!((closed - 0.1585).abs() < 1e-4);
        let hopeless = RadioParams::new(-60.0, 1.0, 1).unwrap();
        assert!(
            (outage_exact_csi(&cell(5.0), &hopeless, LambdaQMethod::Quadrature).unwrap() - 1.0)
                .abs()
                < 1e-12
        );
        let k2 = RadioParams::new(10.0, 1.0, 2).unwrap();
        assert!(matches!(
            outage_exact_csi(&cell(5.0), &k2, LambdaQMethod::Quadrature),
            Err(Error::ExactCsiRequiresSingleRelay(2))
        ));
    }

    #[test]
    fn bs_mean_count_limits() {
        let c = cell(5.0);
        assert_eq!(mean_count_from_bs(0.0, &c, 0.1).unwrap(), 0.0);
        let total = PI * 0.5 / 0.1 * (-0.1f64).exp();
        assert_relative_eq!(
            mean_count_from_bs(1e3, &c, 0.1).unwrap(),
            total,
            max_relative = 1e-15
        );
        assert!(mean_count_from_bs(1.0, &c, 0.0).is_err());
    }

    #[test]
    fn lambda_prime_domain() {
        assert_eq!(lambda_prime(0.0, &cell(5.0), 0.1).unwrap(), 0.0);
        assert!(lambda_prime(25.5, &cell(5.0), 0.1).is_err());
        assert_eq!(lambda_prime_derivative(0.0, &cell(5.0), 0.1).unwrap(), 0.0);
    }

    #[test]
    fn stat_outage_deterministic() {
        let radio = RadioParams::new(12.0, 1.0, 2).unwrap();
        let a = outage_stat(&cell(5.0), &radio, FkForm::Exact).unwrap();
        let b = outage_stat(&cell(5.0), &radio, FkForm::Exact).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
