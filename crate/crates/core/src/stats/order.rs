//! Second moments of Gaussian order statistics by quadrature.
//!
//! The density of the i-th smallest of d samples,
//! d!/((i−1)!(d−i)!) F(t)^{i−1} (1 − F(t))^{d−i} f(t),
//! is evaluated in log space so that large d does not overflow.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::quadrature::integrate;
use crate::error::{Error, Result};

/// Absolute tolerance of each quadrature.
pub const QUAD_TOL: f64 = 1e-6;

/// Integration half-width in standard deviations.
const SPAN: f64 = 10.0;

/// Ordering used for x₍ᵢ₎.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    /// Order the samples themselves.
    Signed,
    /// Order by magnitude, as Top-k does.
    Absolute,
}

/// ln F(t), ln(1 − F(t)) and ln f(t) of the (possibly folded) law.
fn log_cdf_sf_pdf(t: f64, mu0: f64, sigma: f64, mode: OrderMode) -> (f64, f64, f64) {
    let ln_phi = |z: f64| -0.5 * z * z - 0.5 * (2.0 * PI).ln() - sigma.ln();
    match mode {
        OrderMode::Signed => {
            let z = (t - mu0) / sigma;
            let cdf = 0.5 * erfc(-z * FRAC_1_SQRT_2);
            let sf = 0.5 * erfc(z * FRAC_1_SQRT_2);
            (cdf.ln(), sf.ln(), ln_phi(z))
        }
        OrderMode::Absolute => {
            // |X| ≤ t  ⟺  X ∈ [−t, t]; a ≥ b below.
            let a = (t - mu0) / sigma;
            let b = (-t - mu0) / sigma;
            let cdf = if b > 0.0 {
                0.5 * (erfc(b * FRAC_1_SQRT_2) - erfc(a * FRAC_1_SQRT_2))
            } else if a < 0.0 {
                0.5 * (erfc(-a * FRAC_1_SQRT_2) - erfc(-b * FRAC_1_SQRT_2))
            } else {
                0.5 * (erf(a * FRAC_1_SQRT_2) - erf(b * FRAC_1_SQRT_2))
            };
            let sf = 0.5 * (erfc(a * FRAC_1_SQRT_2) + erfc(-b * FRAC_1_SQRT_2));
            let pdf = ln_phi(a).exp() + ln_phi(b).exp();
            (cdf.ln(), sf.ln(), pdf.ln())
        }
    }
}

fn check(d: usize, i: usize, sigma: f64) -> Result<()> {
    if d == 0 || i == 0 || i > d {
        return Err(Error::InvalidParameter(format!("need 1 <= i <= d, got i = {i}, d = {d}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// E[x₍ᵢ₎²] for d i.i.d. N(μ₀, σ²) samples, i counted from the smallest.
pub fn gaussian_order_stat_second_moment(d: usize, i: usize, mu0: f64, sigma: f64, mode: OrderMode) -> Result<f64> {
    check(d, i, sigma)?;
    let (lo, hi) = match mode {
        OrderMode::Signed => (mu0 - SPAN * sigma, mu0 + SPAN * sigma),
        OrderMode::Absolute => (0.0, mu0.abs() + SPAN * sigma),
    };
    let ln_coef = ln_gamma(d as f64 + 1.0) - ln_gamma(i as f64) - ln_gamma((d - i) as f64 + 1.0);
    let (lower, upper) = ((i - 1) as f64, (d - i) as f64);
    let density = |t: f64| {
        let (lc, ls, lp) = log_cdf_sf_pdf(t, mu0, sigma, mode);
        let mut ln = ln_coef + lp;
        if lower > 0.0 {
            ln += lower * lc;
        }
        if upper > 0.0 {
            ln += upper * ls;
        }
        if ln.is_nan() { 0.0 } else { t * t * ln.exp() }
    };
    Ok(integrate(density, lo, hi, QUAD_TOL)?.0)
}

/// E Σᵢ₌d₋ₖ₊₁..d x₍ᵢ₎², the expected Top-k saving in the given mode.
pub fn gaussian_top_k_savings(d: usize, k: usize, mu0: f64, sigma: f64, mode: OrderMode) -> Result<f64> {
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
    }
    (d - k + 1..=d).map(|i| gaussian_order_stat_second_moment(d, i, mu0, sigma, mode)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_is_plain_moment() {
        for mode in [OrderMode::Signed, OrderMode::Absolute] {
            let m = gaussian_order_stat_second_moment(1, 1, 2.0, 1.5, mode).unwrap();
            assert!((m - (1.5f64 * 1.5 + 4.0)).abs() < 1e-6, "{mode:?} {m}");
        }
    }

    #[test]
    fn sum_rule() {
        for mode in [OrderMode::Signed, OrderMode::Absolute] {
            let total: f64 =
                (1..=10).map(|i| gaussian_order_stat_second_moment(10, i, 2.0, 1.0, mode).unwrap()).sum();
            assert!((total / 50.0 - 1.0).abs() < 1e-4, "{mode:?} {total}");
        }
    }

    #[test]
    fn two_sample_signed_max() {
        // E[max(X, Y)²] = 1 for standard normals, by symmetry with the min.
        let m = gaussian_order_stat_second_moment(2, 2, 0.0, 1.0, OrderMode::Signed).unwrap();
        assert!((m - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(gaussian_order_stat_second_moment(3, 0, 0.0, 1.0, OrderMode::Signed).is_err());
        assert!(gaussian_order_stat_second_moment(3, 4, 0.0, 1.0, OrderMode::Signed).is_err());
        assert!(gaussian_top_k_savings(3, 4, 0.0, 1.0, OrderMode::Signed).is_err());
    }
}
