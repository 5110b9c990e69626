//! Exact per-coordinate outcome laws.
//!
//! Every operator here acts on each coordinate through a law with at most
//! two outcomes (given quantities that do not depend on the randomness,
//! such as the norm or the Top-k support). The quantities that define the
//! operator classes (E𝒞(x) and E‖𝒞(x)‖²) depend only on these marginals,
//! so they can be computed exactly instead of by sampling.

use rand::Rng;

use super::sparsify::{inclusion_probability, top_k_indices};
use super::{dither, normal_form, rounding, CompressorSpec};
use crate::error::{Error, Result};
use crate::vector::DenseVector;

/// `hi` with probability `p_hi`, otherwise `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPoint<T> {
    pub lo: T,
    pub hi: T,
    pub p_hi: f64,
}

impl<T: Copy> TwoPoint<T> {
    pub fn new(lo: T, hi: T, p_hi: f64) -> Self {
        Self { lo, hi, p_hi: p_hi.clamp(0.0, 1.0) }
    }

    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v, p_hi: 0.0 }
    }

    /// Draws one uniform per call, whether or not the law is degenerate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.random();
        if u < self.p_hi {
            self.hi
        } else {
            self.lo
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> TwoPoint<U> {
        TwoPoint { lo: f(self.lo), hi: f(self.hi), p_hi: self.p_hi }
    }
}

impl TwoPoint<f64> {
    pub fn mean(&self) -> f64 {
        (1.0 - self.p_hi) * self.lo + self.p_hi * self.hi
    }

    pub fn second_moment(&self) -> f64 {
        (1.0 - self.p_hi) * self.lo * self.lo + self.p_hi * self.hi * self.hi
    }
}

/// E[𝒞(x)] and E‖𝒞(x)‖² for one input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedMoments {
    pub mean: Vec<f64>,
    pub second_moment: f64,
}

impl ExpectedMoments {
    pub fn scaled(mut self, s: f64) -> Self {
        for m in &mut self.mean {
            *m *= s;
        }
        self.second_moment *= s * s;
        self
    }

    /// ⟨E𝒞(x), x⟩
    pub fn inner(&self, x: &DenseVector) -> f64 {
        self.mean.iter().zip(x.iter()).map(|(m, v)| m * v).sum()
    }

    /// E‖𝒞(x) − x‖² = E‖𝒞(x)‖² − 2⟨E𝒞(x), x⟩ + ‖x‖².
    pub fn error_sq(&self, x: &DenseVector) -> f64 {
        (self.second_moment - 2.0 * self.inner(x) + x.norm_sq()).max(0.0)
    }

    /// ‖E𝒞(x) − x‖, zero for unbiased operators.
    pub fn bias_norm(&self, x: &DenseVector) -> f64 {
        self.mean.iter().zip(x.iter()).map(|(m, v)| (m - v) * (m - v)).sum::<f64>().sqrt()
    }
}

/// Per-coordinate laws of the decoded values of `spec` applied to `x`.
pub fn coordinate_laws(spec: &CompressorSpec, x: &DenseVector) -> Result<Vec<TwoPoint<f64>>> {
    spec.validate(x.dim())?;
    let d = x.dim();
    let laws = match spec {
        CompressorSpec::Identity => x.iter().map(|&v| TwoPoint::point(v)).collect(),
        CompressorSpec::TopK { k } => {
            let mut laws = vec![TwoPoint::point(0.0); d];
            for i in top_k_indices(x.as_slice(), *k) {
                laws[i] = TwoPoint::point(x[i]);
            }
            laws
        }
        CompressorSpec::RandK { k } => {
            let q = *k as f64 / d as f64;
            let scale = d as f64 / *k as f64;
            x.iter().map(|&v| TwoPoint::new(0.0, scale * v, q)).collect()
        }
        CompressorSpec::BiasedRandomSparse { p } => x
            .iter()
            .enumerate()
            .map(|(i, &v)| TwoPoint::new(0.0, v, inclusion_probability(p, i)))
            .collect(),
        CompressorSpec::AdaptiveRandomSparse => {
            let total = x.norm1();
            if total == 0.0 {
                return Err(Error::ZeroVector { operator: "adaptive_random_sparse" });
            }
            x.iter().map(|&v| TwoPoint::new(0.0, v, v.abs() / total)).collect()
        }
        CompressorSpec::GeneralUnbiasedRounding { base } => rounding_laws(x, *base),
        CompressorSpec::NaturalCompression => rounding_laws(x, 2.0),
        CompressorSpec::GeneralBiasedRounding { base } => {
            let range = rounding::ExponentRange::for_base(*base);
            x.iter()
                .map(|&v| TwoPoint::point(v.signum() * rounding::code_value(*base, rounding::nearest(v.abs(), *base, range))))
                .collect()
        }
        CompressorSpec::GeneralExpDithering { base, levels, norm } => dither::laws(x, *base, *levels, *norm),
        CompressorSpec::NaturalDithering { levels, norm } => dither::laws(x, 2.0, *levels, *norm),
        CompressorSpec::TopKPlusDithering { k, base, levels, norm } => {
            let support = top_k_indices(x.as_slice(), *k);
            let mut sparse = vec![0.0; d];
            for &i in &support {
                sparse[i] = x[i];
            }
            dither::laws(&DenseVector::from_vec_unchecked(sparse), *base, *levels, *norm)
        }
        CompressorSpec::NormalForm => x.iter().map(|&v| normal_form::law(v)).collect(),
    };
    Ok(laws)
}

fn rounding_laws(x: &DenseVector, base: f64) -> Vec<TwoPoint<f64>> {
    let range = rounding::ExponentRange::for_base(base);
    x.iter()
        .map(|&v| {
            let s = if v < 0.0 { -1.0 } else { 1.0 };
            rounding::unbiased_law(v.abs(), base, range).map(|c| s * rounding::code_value(base, c))
        })
        .collect()
}

/// Exact E[𝒞(x)] and E‖𝒞(x)‖².
pub fn expected_moments(spec: &CompressorSpec, x: &DenseVector) -> Result<ExpectedMoments> {
    let laws = coordinate_laws(spec, x)?;
    Ok(ExpectedMoments {
        mean: laws.iter().map(TwoPoint::mean).collect(),
        second_moment: laws.iter().map(TwoPoint::second_moment).sum(),
    })
}
