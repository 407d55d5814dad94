//! Poisson fields of relays in the disk cell and distance primitives.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::CellGeometry;

/// Relay position in polar coordinates about the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub radius: f64,
    /// Radians in `[0, 2pi)`, measured from the base-station-to-destination ray.
    pub angle: f64,
}

impl Point {
    pub fn new(radius: f64, angle: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::invalid(
                "radius",
                format!("must be >= 0, got {radius}"),
            ));
        }
        if !(0.0..TAU).contains(&angle) {
            return Err(Error::invalid(
                "angle",
                format!("must lie in [0, 2pi), got {angle}"),
            ));
        }
        Ok(Point { radius, angle })
    }

    pub fn to_cartesian(&self) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (self.radius * c, self.radius * s)
    }
}

/// One sampled field of candidate relays.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub cell: CellGeometry,
    pub points: Vec<Point>,
}

impl Realization {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Inversion is used below this mean, PTRS above it.
const INVERSION_CUTOFF: f64 = 10.0;

/// Draws a Poisson variate with the given mean.
///
/// For `mean < 10` this is sequential inversion: one uniform `u`, then the
/// smallest `n` whose CDF reaches `u`. For larger means it is Hörmann's
/// transformed rejection with squeeze (PTRS, 1993), which consumes two
/// uniforms per attempt, the same variant NumPy ships.
pub fn sample_poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::invalid(
            "mean",
            format!("Poisson mean must be finite and >= 0, got {mean}"),
        ));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < INVERSION_CUTOFF {
        Ok(poisson_inversion(mean, rng))
    } else {
        Ok(poisson_ptrs(mean, rng))
    }
}

fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.gen();
    let mut n = 0u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    // The tail beyond a few hundred terms is below f64 resolution for mean < 10.
    while u > cdf && n < 1000 {
        n += 1;
        pmf *= mean / n as f64;
        cdf += pmf;
    }
    n
}

fn poisson_ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);

    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = -mean + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `ln(n!)`: exact summation for small `n`, Stirling series otherwise.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 20 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Uniform point on the disk of radius `cell_radius`: `r = R sqrt(u)`,
/// angle uniform on `[0, 2pi)`.
pub fn sample_uniform_disk<R: Rng + ?Sized>(cell_radius: f64, rng: &mut R) -> Point {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    Point {
        radius: cell_radius * u.sqrt(),
        angle: TAU * v,
    }
}

/// Homogeneous PPP restricted to the cell.
pub fn sample_ppp<R: Rng + ?Sized>(cell: &CellGeometry, rng: &mut R) -> Result<Realization> {
    let n = sample_poisson_count(cell.mean_relay_count(), rng)?;
    let points = (0..n)
        .map(|_| sample_uniform_disk(cell.cell_radius, rng))
        .collect();
    Ok(Realization {
        cell: *cell,
        points,
    })
}

/// Squared distance from `p` to the destination at `(dest_distance, 0)`.
///
/// Written as `(r - r_d)^2 + 4 r r_d sin^2(phi/2)`, which equals the
/// law-of-cosines form but never goes negative.
#[inline]
pub fn dist_sq_to_dest(p: &Point, dest_distance: f64) -> f64 {
    let dr = p.radius - dest_distance;
    let half = (0.5 * p.angle).sin();
    dr * dr + 4.0 * p.radius * dest_distance * half * half
}

pub fn dist_to_dest(p: &Point, dest_distance: f64) -> f64 {
    dist_sq_to_dest(p, dest_distance).sqrt()
}

/// Position of a point in a nearest-to-destination ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    /// Index into the input sequence.
    pub index: usize,
    pub distance: f64,
}

fn rank_order(a: &Ranked, b: &Ranked) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.index.cmp(&b.index))
}

/// The `min(k, len)` points nearest to the destination, closest first.
/// Equal distances are ordered by input index.
pub fn rank_nearest_to_dest(points: &[Point], dest_distance: f64, k: usize) -> Vec<Ranked> {
    let mut ranked: Vec<Ranked> = points
        .iter()
        .enumerate()
        .map(|(index, p)| Ranked {
            index,
            distance: dist_to_dest(p, dest_distance),
        })
        .collect();
    let take = k.min(ranked.len());
    if take == 0 {
        return Vec::new();
    }
    if take < ranked.len() {
        ranked.select_nth_unstable_by(take - 1, rank_order);
        ranked.truncate(take);
    }
    ranked.sort_unstable_by(rank_order);
    ranked
}

pub fn k_nearest_to_dest(points: &[Point], dest_distance: f64, k: usize) -> Vec<Point> {
    rank_nearest_to_dest(points, dest_distance, k)
        .into_iter()
        .map(|r| points[r.index])
        .collect()
}
