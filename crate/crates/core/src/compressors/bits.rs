//! Declared bit-cost model.
//!
//! | operator                         | bits                                  |
//! |----------------------------------|---------------------------------------|
//! | sparsifiers (n coords sent)      | n · (32 + ⌈log₂ d⌉)                   |
//! | dithering                        | 32 + d · (1 + ⌈log₂ s⌉)               |
//! | Top-k + dithering                | 32 + k · (⌈log₂ d⌉ + 1 + ⌈log₂ s⌉)    |
//! | exponent rounding                | d · (1 + ⌈log₂(#exponents + 1)⌉)      |
//! | natural compression              | 9 · d                                 |
//! | normal form                      | 12 · d                                |
//! | identity                         | 32 · d                                |
//!
//! Floats are counted as binary32. The rounding rule reduces to 9 bits per
//! coordinate for b = 2 (sign plus 8-bit exponent).

use super::payload::Payload;
use super::rounding::ExponentRange;
use super::CompressorSpec;

pub const FLOAT_BITS: u64 = 32;

/// ⌈log₂ n⌉ for n ≥ 1.
pub fn ceil_log2(n: u64) -> u64 {
    assert!(n >= 1);
    if n == 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

pub fn index_bits(dim: usize) -> u64 {
    ceil_log2(dim as u64)
}

pub fn sparse_bits(dim: usize, sent: usize) -> u64 {
    sent as u64 * (FLOAT_BITS + index_bits(dim))
}

pub fn dithering_bits(dim: usize, levels: u32) -> u64 {
    FLOAT_BITS + dim as u64 * (1 + ceil_log2(u64::from(levels)))
}

pub fn top_k_dithering_bits(dim: usize, k: usize, levels: u32) -> u64 {
    FLOAT_BITS + k as u64 * (index_bits(dim) + 1 + ceil_log2(u64::from(levels)))
}

pub fn rounding_bits_per_coord(base: f64) -> u64 {
    1 + ceil_log2(ExponentRange::for_base(base).count() + 1)
}

/// Bits needed to transmit `payload` produced by `spec`.
pub fn bit_cost(spec: &CompressorSpec, payload: &Payload) -> u64 {
    let d = payload.dim();
    match spec {
        CompressorSpec::RandK { .. }
        | CompressorSpec::TopK { .. }
        | CompressorSpec::BiasedRandomSparse { .. }
        | CompressorSpec::AdaptiveRandomSparse => sparse_bits(d, payload.transmitted()),
        CompressorSpec::GeneralUnbiasedRounding { base } | CompressorSpec::GeneralBiasedRounding { base } => {
            d as u64 * rounding_bits_per_coord(*base)
        }
        CompressorSpec::NaturalCompression => 9 * d as u64,
        CompressorSpec::GeneralExpDithering { levels, .. } | CompressorSpec::NaturalDithering { levels, .. } => {
            dithering_bits(d, *levels)
        }
        CompressorSpec::TopKPlusDithering { levels, .. } => top_k_dithering_bits(d, payload.transmitted(), *levels),
        CompressorSpec::NormalForm => 12 * d as u64,
        CompressorSpec::Identity => FLOAT_BITS * d as u64,
    }
}
