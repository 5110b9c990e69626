//! Per-subcommand configuration trees. Every field has a default, so an
//! empty file (or no file) is a valid configuration; unknown keys are
//! rejected.

use gradcomp::cgd::StepRule;
use gradcomp::classes::{ClassParams, Expectation, DEFAULT_N_VECTORS};
use gradcomp::compressors::{Compressor, CompressorSpec, NormOrder};
use gradcomp::problems::ProblemManifest;
use gradcomp::stats::{Distribution, OrderMode};
use gradcomp::DenseVector;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub trait Config: Serialize + DeserializeOwned + Default {
    fn seed_mut(&mut self) -> &mut u64;

    fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Canonical text of the effective configuration.
    fn to_text(&self) -> String {
        toml::to_string(self).expect("configuration serializes to toml")
    }
}

/// One operator with the class it is claimed to belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorClaim {
    pub name: String,
    pub compressor: Compressor,
    pub claim: ClassParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub dim: usize,
    pub n_vectors: usize,
    pub expectation: Expectation,
    /// Empty means every row of the operator table at `dim`.
    pub operators: Vec<OperatorClaim>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, dim: 10, n_vectors: DEFAULT_N_VECTORS, expectation: Expectation::default(), operators: Vec::new() }
    }
}

impl Config for VerifyConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgdCliConfig {
    pub seed: u64,
    pub iterations: usize,
    pub step: StepRule,
    pub class: Option<ClassParams>,
    pub x0: Option<DenseVector>,
    pub problem: ProblemManifest,
    pub compressor: Compressor,
}

impl Default for CgdCliConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            iterations: 1000,
            step: StepRule::OneOverL,
            class: Some(ClassParams::B3 { delta: 20.0 }),
            x0: None,
            problem: ProblemManifest::Quadratic { dim: 100, eig_lo: 1.0, eig_hi: 100.0, seed: 0 },
            compressor: Compressor::new(CompressorSpec::TopK { k: 5 }),
        }
    }
}

impl Config for CgdCliConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributedCliConfig {
    pub seed: u64,
    /// 1, 2 or 3.
    pub schedule_kind: u8,
    /// Constant step for kinds 2 and 3, or the naive step.
    pub eta: Option<f64>,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "K")]
    pub k: usize,
    /// Run plain distributed CGD instead of error feedback.
    pub naive: bool,
    /// x⁰ = start·(1, …, 1) unless `x0` is given.
    pub start: f64,
    pub x0: Option<DenseVector>,
    pub class: ClassParams,
    pub problem: ProblemManifest,
    pub compressor: Compressor,
}

impl Default for DistributedCliConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            schedule_kind: 3,
            eta: None,
            b: 0.0,
            c: 0.0,
            k: 10_000,
            naive: false,
            start: 1.0,
            x0: None,
            class: ClassParams::B3 { delta: 3.0 },
            problem: ProblemManifest::Example1,
            compressor: Compressor::new(CompressorSpec::TopK { k: 1 }),
        }
    }
}

impl Config for DistributedCliConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// The three-node instance with its closed-form growth.
    Example1,
    /// All d₁-subsets of [dim].
    Subsets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub seed: u64,
    pub family: Family,
    pub dim: usize,
    pub d1: usize,
    pub eta: f64,
    pub iterations: usize,
    /// x⁰ = start·(1, …, 1).
    pub start: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self { seed: 0, family: Family::Example1, dim: 3, d1: 1, eta: 0.1, iterations: 50, start: 1.0 }
    }
}

impl Config for CounterexampleConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsTable {
    /// Top-k savings for N(0,1) and N(2,1).
    Table2,
    /// One savings report for `distribution`, `d` and `k`.
    Savings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub seed: u64,
    pub table: StatsTable,
    pub order: OrderMode,
    pub d: usize,
    pub k: usize,
    /// Monte Carlo sample count; closed form or quadrature when absent.
    pub n_mc: Option<usize>,
    pub distribution: Distribution,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            table: StatsTable::Table2,
            order: OrderMode::Absolute,
            d: 100,
            k: 10,
            n_mc: None,
            distribution: Distribution::Uniform01,
        }
    }
}

impl Config for StatsConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchBitsConfig {
    pub seed: u64,
    pub dim: usize,
    pub n_vectors: usize,
    /// Empty means a standard sweep over sparsifiers and quantizers.
    pub operators: Vec<Compressor>,
}

impl Default for BenchBitsConfig {
    fn default() -> Self {
        Self { seed: 0, dim: 1000, n_vectors: 20, operators: Vec::new() }
    }
}

impl Config for BenchBitsConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
}

/// Rescaled Rand-k and Top-k at several densities, dithering at several
/// level counts, and the fixed-cost operators.
pub fn default_sweep(dim: usize) -> Vec<Compressor> {
    let mut out = Vec::new();
    for frac in [0.01, 0.05, 0.1, 0.25, 0.5] {
        let k = ((dim as f64 * frac).round() as usize).clamp(1, dim);
        out.push(Compressor::scaled(CompressorSpec::RandK { k }, k as f64 / dim as f64).expect("positive scale"));
        out.push(Compressor::new(CompressorSpec::TopK { k }));
        out.push(Compressor::new(CompressorSpec::TopKPlusDithering { k, base: 2.0, levels: 8, norm: NormOrder::TWO }));
    }
    for levels in [1, 2, 4, 8] {
        out.push(Compressor::new(CompressorSpec::NaturalDithering { levels, norm: NormOrder::TWO }));
    }
    out.push(Compressor::new(CompressorSpec::NaturalCompression));
    out.push(Compressor::new(CompressorSpec::NormalForm));
    out.push(Compressor::new(CompressorSpec::Identity));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = DistributedCliConfig::default();
        assert_eq!(DistributedCliConfig::parse(&c.to_text()).unwrap(), c);
        let c = CgdCliConfig::default();
        assert_eq!(CgdCliConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(VerifyConfig::parse("").unwrap(), VerifyConfig::default());
    }

    #[test]
    fn unknown_keys_and_operators_are_rejected() {
        assert!(StatsConfig::parse("tabel = \"table2\"").is_err());
        assert!(CgdCliConfig::parse("[compressor]\nkind = \"top_q\"\nk = 3").is_err());
    }
}
