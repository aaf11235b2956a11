//! Standard normal tail helpers and the mean of a left-truncated normal.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standardised truncation points above this use the scaled erfc branch.
const SCALED_BRANCH: f64 = 8.0;

pub fn standard_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail P(Z > x).
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function e^{x^2} erfc(x), for x >= 0.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 5.0 {
        return (x * x).exp() * erfc(x);
    }
    // Laplace continued fraction, evaluated bottom-up.
    let mut tail = 0.0;
    for k in (1..=60).rev() {
        tail = (k as f64 / 2.0) / (x + tail);
    }
    1.0 / (PI.sqrt() * (x + tail))
}

/// Hazard phi(x) / P(Z > x) of the standard normal.
pub fn inverse_mills_ratio(x: f64) -> f64 {
    if x > SCALED_BRANCH {
        (2.0 / PI).sqrt() / erfcx(x * FRAC_1_SQRT_2)
    } else {
        standard_pdf(x) / upper_tail(x)
    }
}

/// Mean of N(mean, sd^2) conditioned on exceeding `lower`.
pub fn truncated_mean_below(mean: f64, sd: f64, lower: f64) -> f64 {
    let alpha = (lower - mean) / sd;
    mean + sd * inverse_mills_ratio(alpha)
}
