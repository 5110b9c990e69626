//! Stochastic rounding onto the leading decimal digits.
//!
//! With |x| = y × 10^(q−1) and y ∈ [10, 100), the grid (in units of
//! 10^(q−1)) is 10, 11, ..., 15 below 15, then 15 and 20, then the tens
//! 20, 30, ..., 100. Each magnitude is rounded between its two neighbours
//! preserving expectation. A value of 100 × 10^(q−1) is stored as 10 × 10^q.
//! Magnitudes whose upper neighbour overflows f64 saturate to the lower one.

use rand::Rng;

use super::law::TwoPoint;
use super::payload::{decimal_value, Payload};
use crate::vector::DenseVector;

/// `a × 10^e` without overflowing the intermediate power.
fn scale10(a: f64, e: i32) -> f64 {
    if e.abs() <= 22 {
        if e >= 0 {
            a * 10f64.powi(e)
        } else {
            a / 10f64.powi(-e)
        }
    } else {
        let h = e / 2;
        a * 10f64.powi(h) * 10f64.powi(e - h)
    }
}

/// Mantissa in [10, 100] and exponent e so that the level is m × 10^e.
type Level = (u8, i32);

fn normalize((m, e): Level) -> Level {
    if m == 100 {
        (10, e + 1)
    } else {
        (m, e)
    }
}

/// Neighbouring grid levels of a positive finite magnitude.
fn neighbours(a: f64) -> (Level, Level) {
    let mut q = a.log10().floor() as i32;
    let mut y = scale10(a, 1 - q);
    // log10 can be off by one near powers of ten.
    while y >= 100.0 {
        q += 1;
        y = scale10(a, 1 - q);
    }
    while y < 10.0 {
        q -= 1;
        y = scale10(a, 1 - q);
    }
    let e = q - 1;
    let (lo, hi) = if y < 15.0 {
        let f = y.floor() as u8;
        (f, f + 1)
    } else if y < 20.0 {
        (15, 20)
    } else {
        let f = (y / 10.0).floor() as u8 * 10;
        (f, f + 10)
    };
    ((lo, e), normalize((hi, e)))
}

/// Two-point law of the level for magnitude `a` (`None` is zero).
fn level_law(a: f64) -> TwoPoint<Option<Level>> {
    if a == 0.0 {
        return TwoPoint::point(None);
    }
    let (lo, hi) = neighbours(a);
    let (vl, vh) = (decimal_value(lo.0, lo.1), decimal_value(hi.0, hi.1));
    // Near f64::MAX the upper level overflows; saturate to the lower one.
    if a <= vl || !vh.is_finite() {
        return TwoPoint::point(Some(lo));
    }
    TwoPoint::new(Some(lo), Some(hi), (a - vl) / (vh - vl))
}

/// Law of the decoded value of one coordinate.
pub(crate) fn law(v: f64) -> TwoPoint<f64> {
    let s = if v < 0.0 { -1.0 } else { 1.0 };
    level_law(v.abs()).map(|l| l.map_or(0.0, |(m, e)| s * decimal_value(m, e)))
}

pub(crate) fn compress<R: Rng + ?Sized>(x: &DenseVector, rng: &mut R) -> Payload {
    let d = x.dim();
    let mut signs = Vec::with_capacity(d);
    let mut mantissas = Vec::with_capacity(d);
    let mut exponents = Vec::with_capacity(d);
    for &v in x.iter() {
        match level_law(v.abs()).sample(rng) {
            None => {
                signs.push(0);
                mantissas.push(0);
                exponents.push(0);
            }
            Some((m, e)) => {
                signs.push(if v < 0.0 { -1 } else { 1 });
                mantissas.push(m);
                exponents.push(e);
            }
        }
    }
    Payload::Decimal { signs, mantissas, exponents }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvec;
    use crate::rng::stream;

    #[test]
    fn on_grid_is_deterministic() {
        assert_eq!(law(3.0), TwoPoint::point(3.0));
        assert_eq!(law(-0.15), TwoPoint::point(-0.15));
        assert_eq!(law(1200.0), TwoPoint::point(1200.0));
        let out = compress(&dvec![3, 0, -20, 1e5], &mut stream(0)).decode();
        assert_eq!(out, vec![3.0, 0.0, -20.0, 1e5]);
    }

    #[test]
    fn three_cases() {
        let l = law(2.5);
        assert_eq!((l.lo, l.hi), (2.0, 3.0));
        assert!((l.p_hi - 0.5).abs() < 1e-12);
        let l = law(13.4);
        assert_eq!((l.lo, l.hi), (13.0, 14.0));
        let l = law(0.17);
        assert_eq!((l.lo, l.hi), (0.15, 0.2));
        let l = law(-95.0);
        assert_eq!((l.lo, l.hi), (-90.0, -100.0));
    }

    #[test]
    fn worst_case_ratio() {
        // (2x₀ + 1)² / (4x₀(x₀ + 1)) at x₀ = 2 is attained at t = 2.4.
        let l = law(2.4);
        assert!((l.second_moment() / 5.76 - 25.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_magnitudes() {
        for a in [1e-300, 5e-320, 3e307] {
            let l = law(a);
            assert!(l.lo <= a * (1.0 + 1e-12) && a <= l.hi * (1.0 + 1e-12), "{a}: {l:?}");
        }
        let top = law(1.7e308);
        assert_eq!(top.p_hi, 0.0);
        assert!(top.lo.is_finite() && top.lo <= 1.7e308);
    }
}
