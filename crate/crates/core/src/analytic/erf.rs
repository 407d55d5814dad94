//! Error function, its complement and the scaled complement
//! `erfcx(x) = exp(x^2) erfc(x)`.
//!
//! Rational approximations are those of FreeBSD `s_erf.c`:
//!
//! > Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//! > Developed at SunPro, a Sun Microsystems, Inc. business.
//! > Permission to use, copy, modify, and distribute this software is freely
//! > granted, provided that this notice is preserved.
//!
//! On `[1.25, 28)` the complement is `exp(-x^2 - 0.5625 + R/S) / x`, so
//! `erfcx` drops the Gaussian factor instead of forming it; beyond 28 it uses
//! the asymptotic series.

use std::f64::consts::PI;

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;

// erf on [0, 0.84375]
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

// erf on [0.84375, 1.25]
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

// erfc on [1.25, 1/0.35]
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

// erfc on [1/0.35, 28]
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

#[inline]
fn horner(z: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// `1 + z * horner(z, coeffs)`, the monic-constant denominators.
#[inline]
fn denom(z: f64, coeffs: &[f64]) -> f64 {
    1.0 + z * horner(z, coeffs)
}

/// `(erf(x) - x) / x` on `|x| < 0.84375`.
#[inline]
fn small_ratio(x: f64) -> f64 {
    let z = x * x;
    horner(z, &PP) / denom(z, &QQ)
}

/// `erf(x) - ERX` on `0.84375 <= x < 1.25`.
#[inline]
fn near_one(x: f64) -> f64 {
    let s = x - 1.0;
    horner(s, &PA) / denom(s, &QA)
}

/// `ln(x erfc(x)) + x^2` on `1.25 <= x < 28`.
#[inline]
fn tail_log(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    let rs = if x < 1.0 / 0.35 {
        horner(s, &RA) / denom(s, &SA)
    } else {
        horner(s, &RB) / denom(s, &SB)
    };
    -0.5625 + rs
}

/// Accurate `erfc(x)` for `1.25 <= x < 28`.
#[inline]
fn erfc_tail(x: f64) -> f64 {
    // split x^2 so that exp sees an exactly representable square
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let s = 1.0 / (x * x);
    let rs = if x < 1.0 / 0.35 {
        horner(s, &RA) / denom(s, &SA)
    } else {
        horner(s, &RB) / denom(s, &SB)
    };
    (-z * z - 0.5625).exp() * ((z - x) * (z + x) + rs).exp() / x
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < 0.84375 {
        if ax < 3.725_290_298_461_914e-9 {
            ax + EFX * ax
        } else {
            ax + ax * small_ratio(ax)
        }
    } else if ax < 1.25 {
        ERX + near_one(ax)
    } else if ax < 6.0 {
        1.0 - erfc_tail(ax)
    } else {
        1.0
    };
    v.copysign(x)
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax < 0.84375 {
        let y = ax * small_ratio(ax);
        let erf_ax = if ax < 0.25 {
            ax + y
        } else {
            0.5 + (y + (ax - 0.5))
        };
        return if x < 0.0 { 1.0 + erf_ax } else { 1.0 - erf_ax };
    }
    if ax < 1.25 {
        let p = near_one(ax);
        return if x < 0.0 {
            1.0 + ERX + p
        } else {
            1.0 - ERX - p
        };
    }
    if x < 0.0 {
        return if ax < 6.0 { 2.0 - erfc_tail(ax) } else { 2.0 };
    }
    if ax < 28.0 {
        erfc_tail(ax)
    } else {
        0.0
    }
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
///
/// Finite for every `x` with `x^2 < ~709`; for large positive `x` it decays
/// like `1 / (x sqrt(pi))` without underflow.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 1.25 {
        return (x * x).exp() * erfc(x);
    }
    if x < 28.0 {
        return tail_log(x).exp() / x;
    }
    // erfcx(x) ~ 1/(x sqrt(pi)) * sum_n (-1)^n (2n-1)!! / (2x^2)^n
    let t = 1.0 / (2.0 * x * x);
    let series = 1.0 - t * (1.0 - 3.0 * t * (1.0 - 5.0 * t * (1.0 - 7.0 * t * (1.0 - 9.0 * t))));
    series / (x * PI.sqrt())
}

/// `exp(log_scale) * (erf(hi) - erf(lo))` for `hi >= lo`, without the
/// cancellation of subtracting two values near `+-1`.
pub(crate) fn scaled_erf_diff(hi: f64, lo: f64, log_scale: f64) -> f64 {
    debug_assert!(hi >= lo);
    if lo < 0.0 && hi > 0.0 {
        return log_scale.exp() * (erf(hi) - erf(lo));
    }
    // reflect so that both arguments are non-negative
    let (hi, lo) = if hi <= 0.0 { (-lo, -hi) } else { (hi, lo) };
    if lo < 0.5 {
        return log_scale.exp() * (erf(hi) - erf(lo));
    }
    // erf(hi) - erf(lo) = erfc(lo) - erfc(hi)
    (log_scale - lo * lo).exp() * erfcx(lo) - (log_scale - hi * hi).exp() * erfcx(hi)
}
