//! Operator classes, empirical parameter estimation and membership checks.
//!
//! For a compressor 𝒞 and a nonzero x write, with everything normalized by
//! ‖x‖²,
//!
//! ```text
//! a = E‖𝒞(x)‖² / ‖x‖²      b = ⟨E𝒞(x), x⟩ / ‖x‖²
//! ```
//!
//! Every scalar class inequality is affine in (a, b):
//!
//! ```text
//! B1(α, β):  a − α ≥ 0,          β b − a ≥ 0
//! B2(γ, β):  b − γ ≥ 0,          b − a/β ≥ 0
//! B3(δ):     (1 − 1/δ) − (a − 2b + 1) ≥ 0
//! U(ζ):      E𝒞(x) = x,          ζ − a ≥ 0
//! ```
//!
//! Expectations are either Monte Carlo sample means or exact values from the
//! per-coordinate outcome laws ([`crate::compressors::law`]).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compressors::{zeta_dithering, Compressor, CompressorSpec, NormOrder};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::vector::DenseVector;

/// Floating-point slack for exact and deterministic evaluations, relative
/// to ‖x‖² (or ‖x‖ for the unbiasedness check).
pub const FP_SLACK: f64 = 1e-12;
/// Monte Carlo tolerance in sample standard errors.
pub const MC_SIGMAS: f64 = 4.0;
pub const DEFAULT_N_VECTORS: usize = 200;
pub const DEFAULT_N_MC: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    B1,
    B2,
    B3,
    U,
}

impl ClassTag {
    pub const ALL: [ClassTag; 4] = [ClassTag::B1, ClassTag::B2, ClassTag::B3, ClassTag::U];

    /// Names of the defining inequalities, in margin order.
    pub fn inequalities(self) -> &'static [&'static str] {
        match self {
            ClassTag::B1 => &["energy_lower", "energy_vs_correlation"],
            ClassTag::B2 => &["correlation_lower", "correlation_vs_energy"],
            ClassTag::B3 => &["contraction"],
            ClassTag::U => &["unbiasedness", "second_moment"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum ClassParams {
    B1 { alpha: f64, beta: f64 },
    B2 { gamma: f64, beta: f64 },
    B3 { delta: f64 },
    U { zeta: f64 },
}

impl ClassParams {
    pub fn b1(alpha: f64, beta: f64) -> Result<Self> {
        Self::B1 { alpha, beta }.validated()
    }

    pub fn b2(gamma: f64, beta: f64) -> Result<Self> {
        Self::B2 { gamma, beta }.validated()
    }

    pub fn b3(delta: f64) -> Result<Self> {
        Self::B3 { delta }.validated()
    }

    pub fn u(zeta: f64) -> Result<Self> {
        Self::U { zeta }.validated()
    }

    pub fn tag(&self) -> ClassTag {
        match self {
            ClassParams::B1 { .. } => ClassTag::B1,
            ClassParams::B2 { .. } => ClassTag::B2,
            ClassParams::B3 { .. } => ClassTag::B3,
            ClassParams::U { .. } => ClassTag::U,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidClassParams(msg));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            ClassParams::B1 { alpha, beta } => {
                if !positive(alpha) || !positive(beta) {
                    return bad(format!("B1 parameters must be positive, got ({alpha}, {beta})"));
                }
                if beta * beta < alpha {
                    return bad(format!("B1 requires beta^2 >= alpha, got ({alpha}, {beta})"));
                }
            }
            ClassParams::B2 { gamma, beta } => {
                if !positive(gamma) || !positive(beta) {
                    return bad(format!("B2 parameters must be positive, got ({gamma}, {beta})"));
                }
                if beta < gamma {
                    return bad(format!("B2 requires beta >= gamma, got ({gamma}, {beta})"));
                }
            }
            ClassParams::B3 { delta } => {
                if !(delta >= 1.0) || !delta.is_finite() {
                    return bad(format!("B3 requires delta >= 1, got {delta}"));
                }
            }
            ClassParams::U { zeta } => {
                if !(zeta >= 1.0) || !zeta.is_finite() {
                    return bad(format!("U requires zeta >= 1, got {zeta}"));
                }
            }
        }
        Ok(())
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Parameters of λ𝒞 for a biased class (B1 and B2 only).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {lambda}")));
        }
        match *self {
            ClassParams::B1 { alpha, beta } => Ok(ClassParams::B1 { alpha: lambda * lambda * alpha, beta: lambda * beta }),
            ClassParams::B2 { gamma, beta } => Ok(ClassParams::B2 { gamma: lambda * gamma, beta: lambda * beta }),
            other => Err(Error::InvalidClassParams(format!("no scaling law for {other}"))),
        }
    }

    /// Affine form (c0, ca, cb) of scalar inequality `j`: slack = c0 + ca·a + cb·b.
    fn affine(&self, j: usize) -> Option<(f64, f64, f64)> {
        match (*self, j) {
            (ClassParams::B1 { alpha, .. }, 0) => Some((-alpha, 1.0, 0.0)),
            (ClassParams::B1 { beta, .. }, 1) => Some((0.0, -1.0, beta)),
            (ClassParams::B2 { gamma, .. }, 0) => Some((-gamma, 0.0, 1.0)),
            (ClassParams::B2 { beta, .. }, 1) => Some((0.0, -1.0 / beta, 1.0)),
            (ClassParams::B3 { delta }, 0) => Some((-1.0 / delta, -1.0, 2.0)),
            (ClassParams::U { zeta }, 1) => Some((zeta, -1.0, 0.0)),
            _ => None,
        }
    }
}

impl std::fmt::Display for ClassParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassParams::B1 { alpha, beta } => write!(f, "B1({alpha}, {beta})"),
            ClassParams::B2 { gamma, beta } => write!(f, "B2({gamma}, {beta})"),
            ClassParams::B3 { delta } => write!(f, "B3({delta})"),
            ClassParams::U { zeta } => write!(f, "U({zeta})"),
        }
    }
}

/// Maps `params` into the `target` class: the returned λ is the multiplier
/// such that λ𝒞 belongs to the returned class.
pub fn reduce(params: &ClassParams, target: ClassTag) -> Result<(f64, ClassParams)> {
    use ClassParams::*;
    let out = match (*params, target) {
        (p, t) if p.tag() == t => (1.0, p),
        (B1 { alpha, beta }, ClassTag::B3) => (1.0 / beta, B3 { delta: beta * beta / alpha }),
        (B1 { alpha, beta }, ClassTag::B2) => (1.0, B2 { gamma: alpha, beta: beta * beta }),
        (B2 { gamma, beta }, ClassTag::B3) => (1.0 / beta, B3 { delta: beta / gamma }),
        (B2 { gamma, beta }, ClassTag::B1) => (1.0, B1 { alpha: gamma * gamma, beta }),
        (B3 { delta }, ClassTag::B2) => (1.0, B2 { gamma: 1.0 / (2.0 * delta), beta: 2.0 }),
        (B3 { delta }, ClassTag::B1) => (1.0, B1 { alpha: 1.0 / (4.0 * delta * delta), beta: 2.0 }),
        (U { zeta }, t) => {
            let lambda = 1.0 / zeta;
            (lambda, unbiased_to_biased(zeta, lambda, t)?)
        }
        (p, ClassTag::U) => {
            return Err(Error::InvalidClassParams(format!("{p} cannot be reduced to an unbiased class")));
        }
        _ => unreachable!("all class pairs are covered"),
    };
    Ok(out)
}

/// Class of λ𝒞 for 𝒞 ∈ U(ζ).
pub fn unbiased_to_biased(zeta: f64, lambda: f64, target: ClassTag) -> Result<ClassParams> {
    if !(zeta >= 1.0) || !(lambda > 0.0) {
        return Err(Error::InvalidClassParams(format!("need zeta >= 1 and lambda > 0, got ({zeta}, {lambda})")));
    }
    match target {
        ClassTag::B1 => Ok(ClassParams::B1 { alpha: lambda * lambda, beta: lambda * zeta }),
        ClassTag::B2 => Ok(ClassParams::B2 { gamma: lambda, beta: lambda * zeta }),
        ClassTag::B3 => {
            if zeta * lambda >= 2.0 {
                return Err(Error::InvalidClassParams(format!("B3 needs zeta * lambda < 2, got {}", zeta * lambda)));
            }
            Ok(ClassParams::B3 { delta: 1.0 / (lambda * (2.0 - zeta * lambda)) })
        }
        ClassTag::U => Err(Error::InvalidClassParams("scaling an unbiased operator makes it biased".into())),
    }
}

/// One source of test vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Source {
    /// `count` vectors with i.i.d. standard normal coordinates.
    Gaussian { dim: usize, count: usize },
    /// All-equal, alternating-sign, one-hot and geometrically decaying vectors.
    Fixtures { dim: usize },
    /// One-dimensional vectors at `points` evenly spaced values in [lo, hi].
    ScalarGrid { lo: f64, hi: f64, points: usize },
    Explicit { vectors: Vec<DenseVector> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VectorSampler {
    pub sources: Vec<Source>,
}

impl VectorSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Gaussian vectors plus adversarial fixtures at one dimension.
    pub fn default_for(dim: usize, n_vectors: usize) -> Self {
        Self::new().gaussian(dim, n_vectors).fixtures(dim)
    }

    pub fn gaussian(mut self, dim: usize, count: usize) -> Self {
        self.sources.push(Source::Gaussian { dim, count });
        self
    }

    pub fn fixtures(mut self, dim: usize) -> Self {
        self.sources.push(Source::Fixtures { dim });
        self
    }

    pub fn scalar_grid(mut self, lo: f64, hi: f64, points: usize) -> Self {
        self.sources.push(Source::ScalarGrid { lo, hi, points });
        self
    }

    pub fn explicit(mut self, vectors: Vec<DenseVector>) -> Self {
        self.sources.push(Source::Explicit { vectors });
        self
    }

    /// Materializes every vector. Gaussian sources draw from sub-streams
    /// reserved for the sampler, disjoint from the per-vector streams.
    pub fn vectors(&self, seed: u64) -> Vec<DenseVector> {
        let mut out = Vec::new();
        for (s, source) in self.sources.iter().enumerate() {
            match source {
                Source::Gaussian { dim, count } => {
                    let mut rng = substream(seed, u64::MAX - s as u64);
                    for _ in 0..*count {
                        let v: Vec<f64> = (0..*dim).map(|_| rng.sample(StandardNormal)).collect();
                        out.push(DenseVector::from_vec_unchecked(v));
                    }
                }
                Source::Fixtures { dim } => out.extend(fixtures(*dim)),
                Source::ScalarGrid { lo, hi, points } => {
                    let n = (*points).max(1);
                    for i in 0..n {
                        let t = if n == 1 { *lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
                        out.push(DenseVector::from_vec_unchecked(vec![t]));
                    }
                }
                Source::Explicit { vectors } => out.extend(vectors.iter().cloned()),
            }
        }
        out
    }
}

/// Known extremal vectors for the tabulated parameters.
pub fn fixtures(dim: usize) -> Vec<DenseVector> {
    let alternating = (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let decay = (0..dim).map(|i| 0.9f64.powi(i as i32)).collect();
    vec![
        DenseVector::filled(dim, 1.0),
        DenseVector::from_vec_unchecked(alternating),
        DenseVector::basis(dim, 0, 1.0),
        DenseVector::basis(dim, dim - 1, -3.5),
        DenseVector::from_vec_unchecked(decay),
    ]
}

/// How expectations are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Expectation {
    /// Sample means over `n_mc` draws (one draw for deterministic operators).
    MonteCarlo { n_mc: usize },
    /// Exact values from the per-coordinate outcome laws.
    Exact,
}

impl Default for Expectation {
    fn default() -> Self {
        Expectation::MonteCarlo { n_mc: DEFAULT_N_MC }
    }
}

/// Normalized statistics of one vector.
#[derive(Debug, Clone)]
struct VectorStats {
    norm_sq: f64,
    a: f64,
    b: f64,
    var_a: f64,
    var_b: f64,
    cov_ab: f64,
    /// ‖mean 𝒞(x) − x‖ / ‖x‖
    bias: f64,
    /// Σᵢ var 𝒞(x)ᵢ / ‖x‖² (single-draw variance, not of the mean)
    total_var: f64,
    samples: usize,
}

impl VectorStats {
    fn std_error(&self, ca: f64, cb: f64) -> f64 {
        if self.samples <= 1 {
            return 0.0;
        }
        let var = ca * ca * self.var_a + cb * cb * self.var_b + 2.0 * ca * cb * self.cov_ab;
        (var.max(0.0) / self.samples as f64).sqrt()
    }

    /// (slack, tolerance) of inequality `j` of `params`, normalized.
    fn inequality(&self, params: &ClassParams, j: usize) -> (f64, f64) {
        match params.affine(j) {
            Some((c0, ca, cb)) => {
                (c0 + ca * self.a + cb * self.b, MC_SIGMAS * self.std_error(ca, cb) + FP_SLACK)
            }
            None => {
                let se = if self.samples <= 1 { 0.0 } else { (self.total_var / self.samples as f64).sqrt() };
                (-self.bias, MC_SIGMAS * se + FP_SLACK)
            }
        }
    }
}

fn exact_stats(c: &Compressor, x: &DenseVector) -> Result<VectorStats> {
    let m = c.expected_moments(x)?;
    let n = x.norm_sq();
    Ok(VectorStats {
        norm_sq: n,
        a: m.second_moment / n,
        b: m.inner(x) / n,
        var_a: 0.0,
        var_b: 0.0,
        cov_ab: 0.0,
        bias: m.bias_norm(x) / n.sqrt(),
        total_var: 0.0,
        samples: 1,
    })
}

fn mc_stats<R: Rng + ?Sized>(c: &Compressor, x: &DenseVector, n_mc: usize, rng: &mut R) -> Result<VectorStats> {
    let n = x.norm_sq();
    let d = x.dim();
    let draws = if c.spec.is_deterministic() { 1 } else { n_mc.max(1) };
    let mut sa = Vec::with_capacity(draws);
    let mut sb = Vec::with_capacity(draws);
    let mut sum = vec![0.0; d];
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let y = c.compress(x, rng)?.decoded;
        let e = y.norm_sq();
        sa.push(e / n);
        sb.push(y.dot(x) / n);
        sum_sq += e;
        for (s, v) in sum.iter_mut().zip(y.iter()) {
            *s += v;
        }
    }
    let k = draws as f64;
    let a = sa.iter().sum::<f64>() / k;
    let b = sb.iter().sum::<f64>() / k;
    let (mut var_a, mut var_b, mut cov_ab) = (0.0, 0.0, 0.0);
    if draws > 1 {
        for (&ai, &bi) in sa.iter().zip(&sb) {
            var_a += (ai - a) * (ai - a);
            var_b += (bi - b) * (bi - b);
            cov_ab += (ai - a) * (bi - b);
        }
        var_a /= k - 1.0;
        var_b /= k - 1.0;
        cov_ab /= k - 1.0;
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / k).collect();
    let mean_sq: f64 = mean.iter().map(|m| m * m).sum();
    let bias_sq: f64 = mean.iter().zip(x.iter()).map(|(m, v)| (m - v) * (m - v)).sum();
    let total_var = if draws > 1 { ((sum_sq / k - mean_sq) * k / (k - 1.0)).max(0.0) / n } else { 0.0 };
    Ok(VectorStats {
        norm_sq: n,
        a,
        b,
        var_a,
        var_b,
        cov_ab,
        bias: bias_sq.sqrt() / n.sqrt(),
        total_var,
        samples: draws,
    })
}

fn collect_stats(c: &Compressor, vectors: &[DenseVector], mode: Expectation, seed: u64) -> Result<Vec<VectorStats>> {
    if vectors.is_empty() {
        return Err(Error::Estimation("sampler produced no vectors".into()));
    }
    if let Some(i) = vectors.iter().position(|v| v.is_zero()) {
        return Err(Error::Estimation(format!("sampler produced a zero vector at index {i}")));
    }
    vectors
        .par_iter()
        .enumerate()
        .map(|(i, x)| match mode {
            Expectation::Exact => exact_stats(c, x),
            Expectation::MonteCarlo { n_mc } => mc_stats(c, x, n_mc, &mut substream(seed, i as u64)),
        })
        .collect()
}

fn estimate_from(stats: &[VectorStats], tag: ClassTag) -> Result<ClassParams> {
    let max = |f: &dyn Fn(&VectorStats) -> f64| stats.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min = |f: &dyn Fn(&VectorStats) -> f64| stats.iter().map(f).fold(f64::INFINITY, f64::min);
    let beta = || -> Result<f64> {
        if let Some(s) = stats.iter().find(|s| s.b <= 0.0) {
            return Err(Error::Estimation(format!("nonpositive correlation <E C(x), x> / |x|^2 = {}", s.b)));
        }
        Ok(max(&|s| s.a / s.b))
    };
    Ok(match tag {
        ClassTag::U => ClassParams::U { zeta: max(&|s| s.a) },
        ClassTag::B1 => ClassParams::B1 { alpha: min(&|s| s.a), beta: beta()? },
        ClassTag::B2 => ClassParams::B2 { gamma: min(&|s| s.b), beta: beta()? },
        ClassTag::B3 => {
            let worst = max(&|s| s.a - 2.0 * s.b + 1.0);
            if worst >= 1.0 {
                return Err(Error::Estimation(format!(
                    "E|C(x) - x|^2 / |x|^2 = {worst} >= 1: the operator is in no B3 class"
                )));
            }
            ClassParams::B3 { delta: 1.0 / (1.0 - worst) }
        }
    })
}

/// Tightest parameters of class `tag` consistent with every sampled vector.
pub fn estimate_params(
    c: &Compressor,
    tag: ClassTag,
    sampler: &VectorSampler,
    mode: Expectation,
    seed: u64,
) -> Result<ClassParams> {
    let vectors = sampler.vectors(seed);
    let stats = collect_stats(c, &vectors, mode, seed)?;
    estimate_from(&stats, tag)
}

/// Outcome of checking one claimed class.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub operator: String,
    pub claimed: ClassParams,
    /// `None` when the estimate is undefined (see `estimation_error`).
    pub estimated: Option<ClassParams>,
    pub estimation_error: Option<String>,
    /// Per inequality: minimum over vectors of slack + tolerance. Negative means violated.
    pub margins: Vec<f64>,
    /// Per inequality: minimum over vectors of the raw normalized slack.
    pub raw_margins: Vec<f64>,
    pub inequalities: Vec<String>,
    pub violations: usize,
    pub worst_vector: DenseVector,
    pub samples: usize,
    pub expectation: Expectation,
    pub seed: u64,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Evaluates each defining inequality of `claimed` on every sampled vector.
pub fn verify_membership(
    c: &Compressor,
    claimed: &ClassParams,
    sampler: &VectorSampler,
    mode: Expectation,
    seed: u64,
) -> Result<MembershipReport> {
    claimed.validate()?;
    let vectors = sampler.vectors(seed);
    let stats = collect_stats(c, &vectors, mode, seed)?;
    let names = claimed.tag().inequalities();
    let mut margins = vec![f64::INFINITY; names.len()];
    let mut raw = vec![f64::INFINITY; names.len()];
    let mut violations = 0;
    let mut worst = (f64::INFINITY, 0);
    for (i, s) in stats.iter().enumerate() {
        for j in 0..names.len() {
            let (slack, tol) = s.inequality(claimed, j);
            let adjusted = slack + tol;
            if adjusted < 0.0 {
                violations += 1;
            }
            margins[j] = margins[j].min(adjusted);
            raw[j] = raw[j].min(slack);
            if adjusted < worst.0 {
                worst = (adjusted, i);
            }
        }
    }
    let (estimated, estimation_error) = match estimate_from(&stats, claimed.tag()) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    debug_assert!(stats.iter().all(|s| s.norm_sq > 0.0));
    Ok(MembershipReport {
        operator: c.label(),
        claimed: *claimed,
        estimated,
        estimation_error,
        margins,
        raw_margins: raw,
        inequalities: names.iter().map(|s| s.to_string()).collect(),
        violations,
        worst_vector: vectors[worst.1].clone(),
        samples: vectors.len(),
        expectation: mode,
        seed,
    })
}

/// A claimed class for λ𝒞, where λ = `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Claim {
    pub scale: f64,
    pub params: ClassParams,
}

impl From<ClassParams> for Claim {
    fn from(params: ClassParams) -> Self {
        Self { scale: 1.0, params }
    }
}

/// One row of the operator table with its claimed classes at dimension d.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub name: &'static str,
    pub compressor: Compressor,
    pub claims: Vec<Claim>,
}

impl TableRow {
    /// The operator a claim is about.
    pub fn compressor_for(&self, claim: &Claim) -> Compressor {
        Compressor { spec: self.compressor.spec.clone(), scale: self.compressor.scale * claim.scale }
    }
}

fn rounding_zeta(b: f64) -> f64 {
    0.25 * (b + 1.0 / b + 2.0)
}

/// The thirteen operators with their tabulated parameters at dimension `d` (d ≥ 2).
///
/// The B3 entry of Top-k + dithering comes from the B2 → B3 reduction and
/// therefore holds for the operator scaled by 1/ζ_b.
pub fn table1(d: usize) -> Vec<TableRow> {
    let k = d.div_ceil(5).max(1);
    let df = d as f64;
    let kf = k as f64;
    let q = 0.25;
    let p: Vec<f64> = (0..d).map(|i| q + (1.0 - q) * i as f64 / (d - 1).max(1) as f64).collect();
    let b_biased = 2.0;
    let levels = 8;
    let b_dither = 3.0;
    let zeta_b = zeta_dithering(b_dither, levels, d, NormOrder::TWO);
    let zeta_2 = zeta_dithering(2.0, levels, d, NormOrder::TWO);
    let biased = |alpha: f64, beta: f64, gamma: f64, delta: f64| {
        vec![ClassParams::B1 { alpha, beta }.into(), ClassParams::B2 { gamma, beta }.into(), ClassParams::B3 { delta }.into()]
    };
    let unbiased = |zeta: f64| vec![ClassParams::U { zeta }.into()];
    let row = |name, spec, claims| TableRow { name, compressor: Compressor::new(spec), claims };
    vec![
        row("unbiased_random_sparsification", CompressorSpec::RandK { k }, unbiased(df / kf)),
        row("biased_random_sparsification", CompressorSpec::BiasedRandomSparse { p }, biased(q, 1.0, q, 1.0 / q)),
        row("adaptive_random_sparsification", CompressorSpec::AdaptiveRandomSparse, biased(1.0 / df, 1.0, 1.0 / df, df)),
        row("top_k", CompressorSpec::TopK { k }, biased(kf / df, 1.0, kf / df, df / kf)),
        row(
            "general_unbiased_rounding",
            CompressorSpec::GeneralUnbiasedRounding { base: 1.5 },
            unbiased(rounding_zeta(1.5)),
        ),
        row(
            "unbiased_exponential_rounding",
            CompressorSpec::GeneralUnbiasedRounding { base: 3.0 },
            unbiased(rounding_zeta(3.0)),
        ),
        row(
            "biased_exponential_rounding",
            CompressorSpec::GeneralBiasedRounding { base: b_biased },
            biased(
                (2.0 / (b_biased + 1.0)).powi(2),
                2.0 * b_biased / (b_biased + 1.0),
                2.0 / (b_biased + 1.0),
                (b_biased + 1.0).powi(2) / (4.0 * b_biased),
            ),
        ),
        row("natural_compression", CompressorSpec::NaturalCompression, unbiased(9.0 / 8.0)),
        row(
            "general_exponential_dithering",
            CompressorSpec::GeneralExpDithering { base: b_dither, levels, norm: NormOrder::TWO },
            unbiased(zeta_b),
        ),
        row(
            "natural_dithering",
            CompressorSpec::NaturalDithering { levels, norm: NormOrder::TWO },
            unbiased(zeta_2),
        ),
        row(
            "top_k_plus_dithering",
            CompressorSpec::TopKPlusDithering { k, base: 2.0, levels, norm: NormOrder::TWO },
            vec![
                ClassParams::B1 { alpha: kf / df, beta: zeta_2 }.into(),
                ClassParams::B2 { gamma: kf / df, beta: zeta_2 }.into(),
                Claim { scale: 1.0 / zeta_2, params: ClassParams::B3 { delta: df * zeta_2 / kf } },
            ],
        ),
        row("normal_form", CompressorSpec::NormalForm, unbiased(25.0 / 24.0)),
        row(
            "identity",
            CompressorSpec::Identity,
            vec![
                ClassParams::B1 { alpha: 1.0, beta: 1.0 }.into(),
                ClassParams::B2 { gamma: 1.0, beta: 1.0 }.into(),
                ClassParams::B3 { delta: 1.0 }.into(),
                ClassParams::U { zeta: 1.0 }.into(),
            ],
        ),
    ]
}
