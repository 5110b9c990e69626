//! Exponential dithering.
//!
//! Each coordinate is normalized by ‖x‖_p and randomly rounded between
//! adjacent levels of 0 < b^(1−s) < ... < b^(−1) < 1, preserving its
//! expectation. Ratios below b^(1−s) are rounded between 0 and b^(1−s).
//! A ratio exactly on a level keeps that level with probability 1. The
//! zero vector maps to zero.

use rand::Rng;

use super::law::TwoPoint;
use super::payload::{dither_level, Payload};
use super::sparsify::top_k_indices;
use super::NormOrder;
use crate::vector::DenseVector;

/// ζ_b = ¼(b + 1/b + 2) + d^(1/r) b^(1−s) min(1, d^(1/r) b^(1−s)), r = min(p, 2).
pub fn zeta_dithering(base: f64, levels: u32, dim: usize, norm: NormOrder) -> f64 {
    let tail = (dim as f64).powf(1.0 / norm.r()) * base.powi(1 - levels as i32);
    0.25 * (base + 1.0 / base + 2.0) + tail * tail.min(1.0)
}

/// Law of the level code for a normalized magnitude t ∈ [0, 1].
pub(crate) fn code_law(t: f64, base: f64, levels: u32) -> TwoPoint<u32> {
    if t <= 0.0 {
        return TwoPoint::point(0);
    }
    if t >= 1.0 {
        return TwoPoint::point(levels);
    }
    let level = |c: u32| dither_level(base, levels, c);
    // Largest code c with level(c) ≤ t; level(0) = 0 so c = 0 always qualifies.
    let guess = levels as i64 + (t.ln() / base.ln()).floor() as i64;
    let mut c = guess.clamp(0, levels as i64 - 1) as u32;
    while c > 0 && level(c) > t {
        c -= 1;
    }
    while c + 1 < levels && level(c + 1) <= t {
        c += 1;
    }
    let (lo, hi) = (level(c), level(c + 1));
    TwoPoint::new(c, c + 1, (t - lo) / (hi - lo))
}

fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

fn encode_coords<R: Rng + ?Sized>(
    values: impl Iterator<Item = f64>,
    norm: f64,
    base: f64,
    levels: u32,
    rng: &mut R,
) -> (Vec<i8>, Vec<u32>) {
    let mut signs = Vec::new();
    let mut codes = Vec::new();
    for v in values {
        let code = code_law(v.abs() / norm, base, levels).sample(rng);
        signs.push(if code == 0 { 0 } else { sign(v) });
        codes.push(code);
    }
    (signs, codes)
}

pub(crate) fn dither<R: Rng + ?Sized>(x: &DenseVector, base: f64, levels: u32, norm: NormOrder, rng: &mut R) -> Payload {
    let d = x.dim();
    let scale = x.norm_p(norm.value());
    if scale == 0.0 {
        return Payload::Dithered { dim: d, base, levels, norm: 0.0, indices: None, signs: vec![0; d], codes: vec![0; d] };
    }
    let (signs, codes) = encode_coords(x.iter().copied(), scale, base, levels, rng);
    Payload::Dithered { dim: d, base, levels, norm: scale, indices: None, signs, codes }
}

/// Top-k followed by dithering of the k-sparse vector (normalized by its own norm).
pub(crate) fn top_k_dither<R: Rng + ?Sized>(
    x: &DenseVector,
    k: usize,
    base: f64,
    levels: u32,
    norm: NormOrder,
    rng: &mut R,
) -> Payload {
    let idx = top_k_indices(x.as_slice(), k);
    let kept: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let scale = DenseVector::from_vec_unchecked(kept.clone()).norm_p(norm.value());
    let indices = Some(idx.iter().map(|&i| i as u32).collect());
    if scale == 0.0 {
        let n = kept.len();
        return Payload::Dithered { dim: x.dim(), base, levels, norm: 0.0, indices, signs: vec![0; n], codes: vec![0; n] };
    }
    let (signs, codes) = encode_coords(kept.into_iter(), scale, base, levels, rng);
    Payload::Dithered { dim: x.dim(), base, levels, norm: scale, indices, signs, codes }
}

/// Per-coordinate laws of the decoded values.
pub(crate) fn laws(x: &DenseVector, base: f64, levels: u32, norm: NormOrder) -> Vec<TwoPoint<f64>> {
    let scale = x.norm_p(norm.value());
    if scale == 0.0 {
        return vec![TwoPoint::point(0.0); x.dim()];
    }
    x.iter()
        .map(|&v| {
            let s = f64::from(sign(v));
            code_law(v.abs() / scale, base, levels).map(|c| scale * (s * dither_level(base, levels, c)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvec;
    use crate::rng::stream;

    #[test]
    fn levels_and_boundaries() {
        // s = 3, b = 2: levels 0, 1/4, 1/2, 1.
        let l = code_law(0.5, 2.0, 3);
        assert_eq!((l.lo, l.p_hi), (2, 0.0));
        assert_eq!(code_law(0.25, 2.0, 3).lo, 1);
        assert_eq!(code_law(0.25, 2.0, 3).p_hi, 0.0);
        let l = code_law(0.75, 2.0, 3);
        assert_eq!((l.lo, l.hi), (2, 3));
        assert!((l.p_hi - 0.5).abs() < 1e-15);
        let l = code_law(0.125, 2.0, 3);
        assert_eq!((l.lo, l.hi), (0, 1));
        assert!((l.p_hi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_hot_is_reproduced() {
        let x = dvec![0, 0, -7, 0];
        let p = dither(&x, 2.0, 4, NormOrder::TWO, &mut stream(0));
        assert_eq!(p.decode(), x.as_slice());
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let p = dither(&dvec![0, 0], 2.0, 4, NormOrder::INF, &mut stream(0));
        assert_eq!(p.decode(), vec![0.0, 0.0]);
    }

    #[test]
    fn two_dim_expectation_by_enumeration() {
        let x = dvec![0.3, -0.8];
        let laws = laws(&x, 2.0, 3, NormOrder::TWO);
        for (law, &v) in laws.iter().zip(x.iter()) {
            assert!((law.mean() - v).abs() < 1e-15);
        }
    }

    #[test]
    fn zeta_formula() {
        // d = 1e4, s = 10, p = 2: tail = 100 / 512.
        let tail: f64 = 100.0 / 512.0;
        let z = zeta_dithering(2.0, 10, 10_000, NormOrder::TWO);
        assert!((z - (9.0 / 8.0 + tail * tail)).abs() < 1e-15);
    }

    #[test]
    fn top_k_then_dither_keeps_support() {
        let x = dvec![5, 0.1, -3, 0.2];
        let out = top_k_dither(&x, 2, 2.0, 6, NormOrder::TWO, &mut stream(4)).decode();
        assert_eq!(out[1], 0.0);
        assert_eq!(out[3], 0.0);
        assert_eq!(top_k_dither(&dvec![0, 9, 0], 1, 2.0, 2, NormOrder::TWO, &mut stream(1)).decode(), vec![0.0, 9.0, 0.0]);
    }
}
