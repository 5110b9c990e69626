//! Rounding onto the exponential grid aₖ = bᵏ.
//!
//! The grid is truncated to a finite exponent range: [−127, 127] for b = 2
//! (binary32 exponents) and the same dynamic range for other bases.
//! Magnitudes below the lowest level become 0; magnitudes above the highest
//! level saturate to it.

use rand::Rng;

use super::law::TwoPoint;
use super::payload::{power, Payload};
use crate::vector::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentRange {
    pub min: i32,
    pub max: i32,
}

impl ExponentRange {
    pub fn for_base(base: f64) -> Self {
        let exact = 127.0 * std::f64::consts::LN_2 / base.ln();
        let max = if (exact - exact.round()).abs() < 1e-9 { exact.round() } else { exact.ceil() };
        let max = max.min(i32::MAX as f64 / 2.0) as i32;
        Self { min: -max, max }
    }

    pub fn count(&self) -> u64 {
        (i64::from(self.max) - i64::from(self.min) + 1) as u64
    }
}

/// Where a magnitude sits on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Bracket {
    /// Below the lowest level (or exactly zero).
    Zero,
    /// At or above the highest level.
    Top(i32),
    /// b^k ≤ a < b^(k+1).
    Between(i32),
}

pub(crate) fn bracket(a: f64, base: f64, range: ExponentRange) -> Bracket {
    if a == 0.0 || a < power(base, range.min) {
        return Bracket::Zero;
    }
    if a >= power(base, range.max) {
        return Bracket::Top(range.max);
    }
    let mut k = (a.ln() / base.ln()).floor() as i32;
    k = k.clamp(range.min, range.max - 1);
    while k > range.min && power(base, k) > a {
        k -= 1;
    }
    while k + 1 < range.max && power(base, k + 1) <= a {
        k += 1;
    }
    Bracket::Between(k)
}

/// Exponent code: `None` is the zero level.
pub(crate) type Code = Option<i32>;

pub(crate) fn code_value(base: f64, code: Code) -> f64 {
    code.map_or(0.0, |k| power(base, k))
}

/// Two-point law of unbiased rounding for magnitude `a`.
pub(crate) fn unbiased_law(a: f64, base: f64, range: ExponentRange) -> TwoPoint<Code> {
    match bracket(a, base, range) {
        Bracket::Zero => TwoPoint::point(None),
        Bracket::Top(k) => TwoPoint::point(Some(k)),
        Bracket::Between(k) => {
            let lo = power(base, k);
            let hi = power(base, k + 1);
            TwoPoint::new(Some(k), Some(k + 1), (a - lo) / (hi - lo))
        }
    }
}

/// Nearest level; an exact midpoint goes to the lower level.
pub(crate) fn nearest(a: f64, base: f64, range: ExponentRange) -> Code {
    match bracket(a, base, range) {
        Bracket::Zero => None,
        Bracket::Top(k) => Some(k),
        Bracket::Between(k) => {
            let lo = power(base, k);
            let hi = power(base, k + 1);
            if a - lo <= hi - a {
                Some(k)
            } else {
                Some(k + 1)
            }
        }
    }
}

fn sign_of(v: f64, code: Code) -> i8 {
    match code {
        None => 0,
        Some(_) if v < 0.0 => -1,
        Some(_) => 1,
    }
}

fn payload(base: f64, x: &DenseVector, codes: Vec<Code>) -> Payload {
    let signs = x.iter().zip(&codes).map(|(&v, &c)| sign_of(v, c)).collect();
    let exponents = codes.iter().map(|c| c.unwrap_or(0)).collect();
    Payload::Exponent { base, signs, exponents }
}

pub(crate) fn unbiased<R: Rng + ?Sized>(x: &DenseVector, base: f64, rng: &mut R) -> Payload {
    let range = ExponentRange::for_base(base);
    let codes = x.iter().map(|&v| unbiased_law(v.abs(), base, range).sample(rng)).collect();
    payload(base, x, codes)
}

pub(crate) fn biased(x: &DenseVector, base: f64) -> Payload {
    let range = ExponentRange::for_base(base);
    let codes = x.iter().map(|&v| nearest(v.abs(), base, range)).collect();
    payload(base, x, codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvec;
    use crate::rng::stream;

    #[test]
    fn binary_range_is_binary32() {
        assert_eq!(ExponentRange::for_base(2.0), ExponentRange { min: -127, max: 127 });
        assert_eq!(ExponentRange::for_base(2.0).count(), 255);
        assert_eq!(ExponentRange::for_base(4.0).max, 64);
    }

    #[test]
    fn on_grid_is_deterministic() {
        let mut rng = stream(0);
        for _ in 0..20 {
            assert_eq!(unbiased(&dvec![4, -0.5, 1], 2.0, &mut rng).decode(), vec![4.0, -0.5, 1.0]);
        }
        assert_eq!(biased(&dvec![-8, 0.25], 2.0).decode(), vec![-8.0, 0.25]);
    }

    #[test]
    fn midpoint_probability_is_half() {
        let law = unbiased_law(1.5, 2.0, ExponentRange::for_base(2.0));
        assert_eq!(law, TwoPoint::new(Some(0), Some(1), 0.5));
        let law = unbiased_law(3.0, 2.0, ExponentRange::for_base(2.0));
        assert_eq!(law, TwoPoint::new(Some(1), Some(2), 0.5));
    }

    #[test]
    fn nearest_level() {
        let r = ExponentRange::for_base(2.0);
        assert_eq!(nearest(1.4, 2.0, r), Some(0));
        assert_eq!(nearest(1.6, 2.0, r), Some(1));
        assert_eq!(nearest(1.5, 2.0, r), Some(0));
        assert_eq!(biased(&dvec![1.4, -3.1], 2.0).decode(), vec![1.0, -4.0]);
    }

    #[test]
    fn zero_and_extremes() {
        let r = ExponentRange::for_base(2.0);
        assert_eq!(bracket(0.0, 2.0, r), Bracket::Zero);
        assert_eq!(bracket(1e-40, 2.0, r), Bracket::Zero);
        assert_eq!(bracket(1e300, 2.0, r), Bracket::Top(127));
        assert_eq!(bracket(2f64.powi(-127), 2.0, r), Bracket::Between(-127));
    }
}
