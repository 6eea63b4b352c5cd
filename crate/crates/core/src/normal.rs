//! Standard normal distribution function, tail and quantile.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), evaluated without cancellation for large x.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1), polished with one Newton step.
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1), got {p}");
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    let dens = pdf(z);
    if dens > 0.0 {
        // work with the smaller tail to keep the residual accurate
        let resid = if z > 0.0 {
            (1.0 - p) - upper_tail(z)
        } else {
            cdf(z) - p
        };
        z - resid / dens
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((quantile(0.5)).abs() < 1e-15);
        assert!((quantile(0.025) + 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn tail_matches_cdf() {
        for &x in &[-3.0, -1.0, 0.0, 0.5, 2.0, 6.0] {
            assert!((upper_tail(x) - (1.0 - cdf(x))).abs() < 1e-15);
        }
        assert!(upper_tail(10.0) > 0.0);
    }

    #[test]
    fn round_trip() {
        for &p in &[1e-10, 1e-4, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-9] {
            let z = quantile(p);
            assert!((cdf(z) - p).abs() < 1e-12 * p.max(1e-3), "p={p}");
        }
    }
}
