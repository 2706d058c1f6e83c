//! Standard normal distribution helpers.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal CDF, via the complementary error function so the lower
/// tail keeps full relative precision.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Inverse of the standard normal CDF for `p` in `(0, 1)`. The starting
/// value is polished with Newton steps against [`norm_cdf`].
pub fn norm_ppf(p: f64) -> f64 {
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..3 {
        let pdf = norm_pdf(x);
        if !x.is_finite() || pdf == 0.0 {
            break;
        }
        // work on the smaller tail to keep relative accuracy
        let step = if x < 0.0 { (norm_cdf(x) - p) / pdf } else { (norm_cdf(-x) - (1.0 - p)) / -pdf };
        x -= step;
    }
    x
}
