//! Compression operators.
//!
//! Every operator is a pure function of the input vector, its parameters and
//! a caller-owned randomness stream. The result carries the decodable
//! payload, the decoded value 𝒞(x) and the bit cost under the declared
//! encoding model (see [`bits`]).

pub mod bits;
mod dither;
pub mod law;
mod normal_form;
pub mod payload;
mod rounding;
mod sparsify;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::DenseVector;

pub use dither::zeta_dithering;
pub use law::{expected_moments, ExpectedMoments};
pub use payload::Payload;
pub use rounding::ExponentRange;

/// Norm order `p ∈ [1, ∞]` used by the dithering operators.
///
/// Serializes as a number, or as the string `"inf"` for the max norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOrder(f64);

impl NormOrder {
    pub const TWO: NormOrder = NormOrder(2.0);
    pub const INF: NormOrder = NormOrder(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("norm order must be in [1, inf], got {p}")));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// r = min(p, 2), the exponent that appears in ζ_b.
    pub fn r(self) -> f64 {
        self.0.min(2.0)
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NormOrderRepr {
    Number(f64),
    Text(String),
}

impl Serialize for NormOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            NormOrderRepr::Text("inf".into()).serialize(s)
        } else {
            NormOrderRepr::Number(self.0).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = match NormOrderRepr::deserialize(d)? {
            NormOrderRepr::Number(p) => p,
            NormOrderRepr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "max" => f64::INFINITY,
                other => other.parse().map_err(serde::de::Error::custom)?,
            },
        };
        NormOrder::new(p).map_err(serde::de::Error::custom)
    }
}

fn default_norm() -> NormOrder {
    NormOrder::TWO
}

/// Operator selection and its parameters.
///
/// The text form is one `key = value` line per field, e.g.
///
/// ```text
/// kind = "top_k_plus_dithering"
/// k = 5
/// base = 2.0
/// levels = 8
/// norm = "inf"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompressorSpec {
    /// Uniform k-subset, rescaled by d/k.
    RandK { k: usize },
    /// Independent inclusion with probability `p[i]`; a single entry is
    /// broadcast to every coordinate.
    BiasedRandomSparse { p: Vec<f64> },
    /// One coordinate, sampled proportionally to |xᵢ|.
    AdaptiveRandomSparse,
    /// Keep the k largest magnitudes; ties go to the lowest index.
    TopK { k: usize },
    /// Stochastic rounding onto the levels bᵏ.
    GeneralUnbiasedRounding { base: f64 },
    /// Round to the nearest level bᵏ.
    GeneralBiasedRounding { base: f64 },
    /// Unbiased rounding with b = 2.
    NaturalCompression,
    GeneralExpDithering {
        base: f64,
        levels: u32,
        #[serde(default = "default_norm")]
        norm: NormOrder,
    },
    /// Exponential dithering with b = 2.
    NaturalDithering {
        levels: u32,
        #[serde(default = "default_norm")]
        norm: NormOrder,
    },
    TopKPlusDithering {
        k: usize,
        base: f64,
        levels: u32,
        #[serde(default = "default_norm")]
        norm: NormOrder,
    },
    /// Stochastic rounding of the leading decimal digits.
    NormalForm,
    Identity,
}

impl CompressorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RandK { .. } => "rand_k",
            Self::BiasedRandomSparse { .. } => "biased_random_sparse",
            Self::AdaptiveRandomSparse => "adaptive_random_sparse",
            Self::TopK { .. } => "top_k",
            Self::GeneralUnbiasedRounding { .. } => "general_unbiased_rounding",
            Self::GeneralBiasedRounding { .. } => "general_biased_rounding",
            Self::NaturalCompression => "natural_compression",
            Self::GeneralExpDithering { .. } => "general_exp_dithering",
            Self::NaturalDithering { .. } => "natural_dithering",
            Self::TopKPlusDithering { .. } => "top_k_plus_dithering",
            Self::NormalForm => "normal_form",
            Self::Identity => "identity",
        }
    }

    /// A short label including the parameters, used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::RandK { k } => format!("rand_{k}"),
            Self::TopK { k } => format!("top_{k}"),
            Self::BiasedRandomSparse { p } if p.len() == 1 => format!("biased_random_sparse(p={})", p[0]),
            Self::BiasedRandomSparse { p } => format!("biased_random_sparse(q={})", min_of(p)),
            Self::GeneralUnbiasedRounding { base } => format!("unbiased_rounding(b={base})"),
            Self::GeneralBiasedRounding { base } => format!("biased_rounding(b={base})"),
            Self::GeneralExpDithering { base, levels, norm } => {
                format!("exp_dithering(b={base},s={levels},p={norm})")
            }
            Self::NaturalDithering { levels, norm } => format!("natural_dithering(s={levels},p={norm})"),
            Self::TopKPlusDithering { k, base, levels, norm } => {
                format!("top_{k}+dithering(b={base},s={levels},p={norm})")
            }
            other => other.name().to_string(),
        }
    }

    /// Deterministic operators ignore the randomness stream.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::TopK { .. } | Self::GeneralBiasedRounding { .. } | Self::Identity)
            || matches!(self, Self::BiasedRandomSparse { p } if p.iter().all(|&v| v == 1.0))
    }

    /// Operators with E[𝒞(x)] = x.
    pub fn is_unbiased(&self) -> bool {
        matches!(
            self,
            Self::RandK { .. }
                | Self::GeneralUnbiasedRounding { .. }
                | Self::NaturalCompression
                | Self::GeneralExpDithering { .. }
                | Self::NaturalDithering { .. }
                | Self::NormalForm
                | Self::Identity
        )
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let check_k = |k: usize| {
            if k == 0 || k > dim {
                bad(format!("k must satisfy 1 <= k <= d = {dim}, got {k}"))
            } else {
                Ok(())
            }
        };
        let check_base = |b: f64| {
            if !(b > 1.0) || !b.is_finite() {
                bad(format!("base must be a finite number > 1, got {b}"))
            } else {
                Ok(())
            }
        };
        let check_levels = |s: u32| if s == 0 { bad("levels must be >= 1".into()) } else { Ok(()) };
        match self {
            Self::RandK { k } | Self::TopK { k } => check_k(*k),
            Self::BiasedRandomSparse { p } => {
                if p.len() != 1 && p.len() != dim {
                    return bad(format!("probability vector has {} entries, expected 1 or {dim}", p.len()));
                }
                if let Some(v) = p.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
                    return bad(format!("probabilities must lie in (0, 1], got {v}"));
                }
                Ok(())
            }
            Self::GeneralUnbiasedRounding { base } | Self::GeneralBiasedRounding { base } => check_base(*base),
            Self::GeneralExpDithering { base, levels, norm } => {
                check_base(*base)?;
                check_levels(*levels)?;
                NormOrder::new(norm.value()).map(|_| ())
            }
            Self::NaturalDithering { levels, norm } => {
                check_levels(*levels)?;
                NormOrder::new(norm.value()).map(|_| ())
            }
            Self::TopKPlusDithering { k, base, levels, norm } => {
                check_k(*k)?;
                check_base(*base)?;
                check_levels(*levels)?;
                NormOrder::new(norm.value()).map(|_| ())
            }
            Self::AdaptiveRandomSparse | Self::NaturalCompression | Self::NormalForm | Self::Identity => Ok(()),
        }
    }

    /// Parses the `key = value` text form.
    pub fn from_config_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_config_text(&self) -> String {
        toml::to_string(self).expect("compressor spec serializes to toml")
    }
}

fn min_of(p: &[f64]) -> f64 {
    p.iter().copied().fold(f64::INFINITY, f64::min)
}

/// The output of a compressor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressedMessage {
    pub payload: Payload,
    /// Post-decoding multiplier (1 unless the operator is scaled).
    pub scale: f64,
    pub bit_cost: u64,
    pub decoded: DenseVector,
}

impl CompressedMessage {
    fn from_payload(spec: &CompressorSpec, payload: Payload, scale: f64) -> Self {
        let bit_cost = bits::bit_cost(spec, &payload);
        let decoded = decode_scaled(&payload, scale);
        Self { payload, scale, bit_cost, decoded }
    }

    /// Decodes the payload again; equals `decoded` bit for bit.
    pub fn decode(&self) -> DenseVector {
        decode_scaled(&self.payload, self.scale)
    }

    pub fn dim(&self) -> usize {
        self.decoded.dim()
    }
}

fn decode_scaled(payload: &Payload, scale: f64) -> DenseVector {
    let mut values = payload.decode();
    if scale != 1.0 {
        for v in &mut values {
            *v *= scale;
        }
    }
    DenseVector::from_vec_unchecked(values)
}

/// Applies the operator described by `spec` to `x`.
pub fn compress<R: Rng + ?Sized>(spec: &CompressorSpec, x: &DenseVector, rng: &mut R) -> Result<CompressedMessage> {
    let payload = encode(spec, x, rng)?;
    Ok(CompressedMessage::from_payload(spec, payload, 1.0))
}

fn encode<R: Rng + ?Sized>(spec: &CompressorSpec, x: &DenseVector, rng: &mut R) -> Result<Payload> {
    spec.validate(x.dim())?;
    let payload = match spec {
        CompressorSpec::RandK { k } => sparsify::rand_k(x, *k, rng),
        CompressorSpec::BiasedRandomSparse { p } => sparsify::biased_random(x, p, rng),
        CompressorSpec::AdaptiveRandomSparse => sparsify::adaptive_random(x, rng)?,
        CompressorSpec::TopK { k } => sparsify::top_k(x, *k),
        CompressorSpec::GeneralUnbiasedRounding { base } => rounding::unbiased(x, *base, rng),
        CompressorSpec::GeneralBiasedRounding { base } => rounding::biased(x, *base),
        CompressorSpec::NaturalCompression => rounding::unbiased(x, 2.0, rng),
        CompressorSpec::GeneralExpDithering { base, levels, norm } => dither::dither(x, *base, *levels, *norm, rng),
        CompressorSpec::NaturalDithering { levels, norm } => dither::dither(x, 2.0, *levels, *norm, rng),
        CompressorSpec::TopKPlusDithering { k, base, levels, norm } => {
            dither::top_k_dither(x, *k, *base, *levels, *norm, rng)
        }
        CompressorSpec::NormalForm => normal_form::compress(x, rng),
        CompressorSpec::Identity => Payload::Dense { values: x.as_slice().to_vec() },
    };
    Ok(payload)
}

/// A compressor together with a positive scalar multiplier λ, i.e. λ𝒞.
///
/// Serialized as the spec's fields plus an optional `scale` key.
#[derive(Debug, Clone, PartialEq)]
pub struct Compressor {
    pub spec: CompressorSpec,
    pub scale: f64,
}

impl Serialize for Compressor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut table = match toml::Value::try_from(&self.spec).map_err(serde::ser::Error::custom)? {
            toml::Value::Table(t) => t,
            _ => return Err(serde::ser::Error::custom("compressor spec must serialize to a table")),
        };
        if self.scale != 1.0 {
            table.insert("scale".into(), toml::Value::Float(self.scale));
        }
        table.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Compressor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = toml::Table::deserialize(d)?;
        let scale = match table.remove("scale") {
            None => 1.0,
            Some(toml::Value::Float(v)) => v,
            Some(toml::Value::Integer(v)) => v as f64,
            Some(other) => return Err(D::Error::custom(format!("scale must be a number, got {other}"))),
        };
        let spec: CompressorSpec = toml::Value::Table(table).try_into().map_err(D::Error::custom)?;
        Compressor::scaled(spec, scale).map_err(D::Error::custom)
    }
}

impl Compressor {
    pub fn new(spec: CompressorSpec) -> Self {
        Self { spec, scale: 1.0 }
    }

    pub fn scaled(spec: CompressorSpec, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { spec, scale })
    }

    pub fn label(&self) -> String {
        if self.scale == 1.0 {
            self.spec.label()
        } else {
            format!("{}*{}", self.scale, self.spec.label())
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {}", self.scale)));
        }
        self.spec.validate(dim)
    }

    pub fn compress<R: Rng + ?Sized>(&self, x: &DenseVector, rng: &mut R) -> Result<CompressedMessage> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {}", self.scale)));
        }
        let payload = encode(&self.spec, x, rng)?;
        Ok(CompressedMessage::from_payload(&self.spec, payload, self.scale))
    }

    pub fn expected_moments(&self, x: &DenseVector) -> Result<ExpectedMoments> {
        Ok(law::expected_moments(&self.spec, x)?.scaled(self.scale))
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        let c: Compressor = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn to_config_text(&self) -> String {
        toml::to_string(self).expect("compressor serializes to toml")
    }
}

impl From<CompressorSpec> for Compressor {
    fn from(spec: CompressorSpec) -> Self {
        Self::new(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvec;
    use crate::rng::stream;

    #[test]
    fn identity_passthrough_and_bits() {
        let x = dvec![1, -2, 3];
        let m = compress(&CompressorSpec::Identity, &x, &mut stream(0)).unwrap();
        assert_eq!(m.decoded, x);
        assert_eq!(m.bit_cost, 32 * 3);
    }

    #[test]
    fn full_selection_is_identity() {
        let x = dvec![0.3, -2.0, 1.5, 7.0];
        let top = compress(&CompressorSpec::TopK { k: 4 }, &x, &mut stream(0)).unwrap();
        assert_eq!(top.decoded, x);
        let rnd = compress(&CompressorSpec::RandK { k: 4 }, &x, &mut stream(0)).unwrap();
        assert_eq!(rnd.decoded, x);
    }

    #[test]
    fn parameter_errors() {
        let x = dvec![1, 2, 3];
        let mut r = stream(0);
        assert!(compress(&CompressorSpec::TopK { k: 4 }, &x, &mut r).is_err());
        assert!(compress(&CompressorSpec::RandK { k: 0 }, &x, &mut r).is_err());
        assert!(compress(&CompressorSpec::BiasedRandomSparse { p: vec![0.0] }, &x, &mut r).is_err());
        assert!(compress(&CompressorSpec::BiasedRandomSparse { p: vec![1.5] }, &x, &mut r).is_err());
        assert!(compress(&CompressorSpec::BiasedRandomSparse { p: vec![0.5, 0.5] }, &x, &mut r).is_err());
        assert!(compress(&CompressorSpec::GeneralUnbiasedRounding { base: 1.0 }, &x, &mut r).is_err());
        assert!(compress(&CompressorSpec::GeneralBiasedRounding { base: 0.5 }, &x, &mut r).is_err());
        let bad_levels = CompressorSpec::NaturalDithering { levels: 0, norm: NormOrder::TWO };
        assert!(compress(&bad_levels, &x, &mut r).is_err());
        assert!(NormOrder::new(0.5).is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let specs = [
            CompressorSpec::TopKPlusDithering { k: 5, base: 2.0, levels: 8, norm: NormOrder::INF },
            CompressorSpec::BiasedRandomSparse { p: vec![0.25, 0.5] },
            CompressorSpec::NormalForm,
            CompressorSpec::GeneralExpDithering { base: 1.5, levels: 3, norm: NormOrder::new(3.0).unwrap() },
        ];
        for spec in specs {
            let text = spec.to_config_text();
            assert_eq!(CompressorSpec::from_config_text(&text).unwrap(), spec, "{text}");
        }
        let parsed = CompressorSpec::from_config_text("kind = \"natural_dithering\"\nlevels = 2\nnorm = \"inf\"\n").unwrap();
        assert_eq!(parsed, CompressorSpec::NaturalDithering { levels: 2, norm: NormOrder::INF });
        assert!(CompressorSpec::from_config_text("kind = \"bogus\"").is_err());
        assert!(CompressorSpec::from_config_text("kind = \"top_k\"\nk = 2\nextra = 1").is_err());
    }

    #[test]
    fn scaled_compressor_text_and_decode() {
        let c = Compressor::scaled(CompressorSpec::TopK { k: 1 }, 0.5).unwrap();
        let text = c.to_config_text();
        assert_eq!(Compressor::from_config_text(&text).unwrap(), c);
        let m = c.compress(&dvec![1, -4], &mut stream(0)).unwrap();
        assert_eq!(m.decoded, dvec![0, -2]);
        assert_eq!(m.decode(), m.decoded);
        assert!(Compressor::scaled(CompressorSpec::Identity, 0.0).is_err());
    }
}
