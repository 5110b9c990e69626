//! Simulated n-node training: naive distributed CGD and error-feedback SGD.
//!
//! The topology is an in-process star with synchronous rounds. Node i draws
//! all of its randomness (noise and compression) from sub-stream i of the
//! run seed, and the server sums node messages in node order, so results do
//! not depend on thread scheduling.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{reduce, ClassParams, ClassTag};
use crate::compressors::Compressor;
use crate::error::{Error, Result};
use crate::problems::{DistributedObjective, Objective};
use crate::rng::{substream, Stream};
use crate::trace::{csv_string, fmt_f64, ser_f64};
use crate::vector::DenseVector;

/// Rounds with at least this many node-coordinates run nodes in parallel.
const PARALLEL_WORK: usize = 1 << 14;

/// Naive runs stop once ‖xᵏ‖ exceeds this multiple of ‖x⁰‖.
pub const DIVERGENCE_RATIO: f64 = 1e15;

/// E‖ξ‖² ≤ B‖∇fᵢ(x)‖² + C.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl NoiseModel {
    pub fn new(b: f64, c: f64) -> Result<Self> {
        let nm = Self { b, c };
        nm.validate()?;
        Ok(nm)
    }

    pub fn exact() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b >= 0.0) || !(self.c >= 0.0) || !self.b.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("noise needs B, C >= 0, got B = {}, C = {}", self.b, self.c)));
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        self.b == 0.0 && self.c == 0.0
    }
}

/// ξ ~ N(0, σ²I) with σ² = (B‖grad‖² + C)/d, so E‖ξ‖² meets the bound
/// with equality.
pub fn sample_noise<R: Rng + ?Sized>(grad: &DenseVector, nm: &NoiseModel, rng: &mut R) -> DenseVector {
    let d = grad.dim();
    if nm.is_exact() || d == 0 {
        return DenseVector::zeros(d);
    }
    let sigma = ((nm.b * grad.norm_sq() + nm.c) / d as f64).sqrt();
    DenseVector::from_vec_unchecked((0..d).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// ηᵏ = 4/(μ(κ + k)), wᵏ = κ + k.
    DecreasingLinearWeights,
    /// Constant η, wᵏ = (1 − μη/2)^{−(k+1)}.
    ConstantExpWeights,
    /// Constant η, wᵏ = 1.
    ConstantUniformWeights,
}

impl ScheduleKind {
    pub fn number(self) -> u8 {
        match self {
            Self::DecreasingLinearWeights => 1,
            Self::ConstantExpWeights => 2,
            Self::ConstantUniformWeights => 3,
        }
    }

    pub fn from_number(kind: u8) -> Result<Self> {
        match kind {
            1 => Ok(Self::DecreasingLinearWeights),
            2 => Ok(Self::ConstantExpWeights),
            3 => Ok(Self::ConstantUniformWeights),
            _ => Err(Error::Config(format!("schedule kind must be 1, 2 or 3, got {kind}"))),
        }
    }
}

/// Step sizes and averaging weights for a given δ, B, L and μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub delta: f64,
    pub b: f64,
    pub l: f64,
    pub mu: f64,
    /// κ = 56(2δ + B)L/μ for kind 1; unused otherwise.
    pub kappa: f64,
    /// The constant step for kinds 2 and 3; η⁰ for kind 1.
    pub eta: f64,
}

/// Largest constant step admitted by the theory: 1/(14(2δ + B)L).
pub fn max_constant_step(delta: f64, b: f64, l: f64) -> f64 {
    1.0 / (14.0 * (2.0 * delta + b) * l)
}

impl Schedule {
    /// `eta` applies to kinds 2 and 3 and defaults to the largest admissible step.
    pub fn new(kind: ScheduleKind, delta: f64, b: f64, l: f64, mu: f64, eta: Option<f64>) -> Result<Self> {
        if !(delta >= 1.0) || !(b >= 0.0) || !(mu > 0.0) || !(l >= mu) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "schedule needs delta >= 1, B >= 0, 0 < mu <= L, got delta = {delta}, B = {b}, L = {l}, mu = {mu}"
            )));
        }
        let eta_max = max_constant_step(delta, b, l);
        let (kappa, eta) = match kind {
            ScheduleKind::DecreasingLinearWeights => {
                if eta.is_some() {
                    return Err(Error::Config("the decreasing schedule derives its own step sizes".into()));
                }
                let kappa = 56.0 * (2.0 * delta + b) * l / mu;
                (kappa, 4.0 / (mu * kappa))
            }
            _ => {
                let eta = eta.unwrap_or(eta_max);
                if !(eta > 0.0) || eta > eta_max * (1.0 + 1e-12) {
                    return Err(Error::Config(format!("step {eta} is outside (0, {eta_max}]")));
                }
                (f64::NAN, eta)
            }
        };
        Ok(Self { kind, delta, b, l, mu, kappa, eta })
    }

    pub fn eta(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::DecreasingLinearWeights => 4.0 / (self.mu * (self.kappa + k as f64)),
            _ => self.eta,
        }
    }

    /// wᵏ; may overflow to +∞ for kind 2, which only affects reporting.
    pub fn weight(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::DecreasingLinearWeights => self.kappa + k as f64,
            ScheduleKind::ConstantExpWeights => self.exp_ratio().powf(k as f64 + 1.0),
            ScheduleKind::ConstantUniformWeights => 1.0,
        }
    }

    /// q = 1/(1 − μη/2), the growth of the kind-2 weights.
    fn exp_ratio(&self) -> f64 {
        1.0 / (1.0 - self.mu * self.eta / 2.0)
    }

    /// wᵏ/Wᵏ with Wᵏ = Σⱼ≤ₖ wʲ, computed without forming the weights.
    pub fn weight_fraction(&self, k: usize) -> f64 {
        let kf = k as f64;
        match self.kind {
            ScheduleKind::DecreasingLinearWeights => {
                (self.kappa + kf) / ((kf + 1.0) * self.kappa + kf * (kf + 1.0) / 2.0)
            }
            ScheduleKind::ConstantExpWeights => {
                // qᵏ(q − 1)/(qᵏ⁺¹ − 1) = (1 − r)/(1 − rᵏ⁺¹) with r = 1/q.
                let r = 1.0 - self.mu * self.eta / 2.0;
                if r == 1.0 {
                    1.0 / (kf + 1.0)
                } else {
                    (1.0 - r) / (1.0 - r.powf(kf + 1.0))
                }
            }
            ScheduleKind::ConstantUniformWeights => 1.0 / (kf + 1.0),
        }
    }
}

/// x̄ᴷ = (1/Wᴷ) Σ wᵏxᵏ, kept in normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicAverage {
    mean: DenseVector,
    count: usize,
}

impl ErgodicAverage {
    pub fn new(dim: usize) -> Self {
        Self { mean: DenseVector::zeros(dim), count: 0 }
    }

    /// Adds xᵏ given its share wᵏ/Wᵏ of the total weight.
    pub fn push(&mut self, x: &DenseVector, fraction: f64) {
        if self.count == 0 {
            self.mean = x.clone();
        } else {
            let diff = x.sub(&self.mean);
            self.mean.axpy(fraction, &diff);
        }
        self.count += 1;
    }

    pub fn current(&self) -> &DenseVector {
        &self.mean
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Row k of a naive run: the state xᵏ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveRecord {
    pub k: usize,
    #[serde(serialize_with = "ser_f64")]
    pub f_gap: f64,
    #[serde(serialize_with = "ser_f64")]
    pub x_norm: f64,
    pub bits_cumulative: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NaiveTrace {
    pub operator: String,
    #[serde(serialize_with = "ser_f64")]
    pub eta: f64,
    pub seed: u64,
    pub diverged: bool,
    pub records: Vec<NaiveRecord>,
    /// x⁰, …, xᴷ when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<DenseVector>>,
}

impl NaiveTrace {
    pub fn to_csv(&self) -> String {
        csv_string(
            &["k", "f_gap", "x_norm", "bits_cumulative"],
            self.records.iter().map(|r| {
                vec![r.k.to_string(), fmt_f64(r.f_gap), fmt_f64(r.x_norm), r.bits_cumulative.to_string()]
            }),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveConfig {
    pub eta: f64,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub x0: Option<DenseVector>,
    #[serde(default)]
    pub store_iterates: bool,
}

fn start_point(x0: &Option<DenseVector>, d: usize) -> Result<DenseVector> {
    match x0 {
        Some(x0) => {
            x0.check_dim(d)?;
            Ok(x0.clone())
        }
        None => Ok(DenseVector::zeros(d)),
    }
}

fn node_streams(seed: u64, n: usize) -> Vec<Stream> {
    (0..n as u64).map(|i| substream(seed, i)).collect()
}

/// Applies `step` to every node, in parallel for large rounds; the output
/// keeps node order.
fn for_each_node<S: Send, T: Send>(
    states: &mut [S],
    work: usize,
    step: impl Fn(usize, &mut S) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if work >= PARALLEL_WORK && states.len() > 1 {
        states.par_iter_mut().enumerate().map(|(i, s)| step(i, s)).collect()
    } else {
        states.iter_mut().enumerate().map(|(i, s)| step(i, s)).collect()
    }
}

fn gap(obj: &dyn Objective, x: &DenseVector) -> f64 {
    obj.f_gap(x).unwrap_or(f64::NAN)
}

/// xᵏ⁺¹ = xᵏ − η(1/n) Σ 𝒞ᵢ(∇fᵢ(xᵏ)). Stops with the divergence flag once
/// ‖xᵏ‖ > 10¹⁵‖x⁰‖ (or 10¹⁵ when x⁰ = 0) or the state is non-finite.
pub fn run_dcgd_naive(dobj: &DistributedObjective, compressor: &Compressor, cfg: &NaiveConfig) -> Result<NaiveTrace> {
    let d = dobj.dim();
    let n = dobj.n();
    compressor.validate(d)?;
    if !(cfg.eta > 0.0) || !cfg.eta.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {}", cfg.eta)));
    }
    let mut x = start_point(&cfg.x0, d)?;
    let limit = DIVERGENCE_RATIO * if x.is_zero() { 1.0 } else { x.norm2() };
    let mut rngs = node_streams(cfg.seed, n);
    let mut iterates = cfg.store_iterates.then(|| vec![x.clone()]);
    let mut records = vec![NaiveRecord { k: 0, f_gap: gap(dobj.aggregate.as_ref(), &x), x_norm: x.norm2(), bits_cumulative: 0 }];
    let mut bits = 0u64;
    let mut diverged = false;
    for k in 1..=cfg.iterations {
        let msgs = for_each_node(&mut rngs, n * d, |i, rng| compressor.compress(&dobj.nodes[i].grad(&x), rng))?;
        let mut step = DenseVector::zeros(d);
        for m in &msgs {
            step.axpy(1.0, &m.decoded);
            bits += m.bit_cost;
        }
        x.axpy(-cfg.eta / n as f64, &step);
        let x_norm = x.norm2();
        if !x.is_finite() {
            diverged = true;
            break;
        }
        records.push(NaiveRecord { k, f_gap: gap(dobj.aggregate.as_ref(), &x), x_norm, bits_cumulative: bits });
        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        if x_norm > limit {
            diverged = true;
            break;
        }
    }
    Ok(NaiveTrace {
        operator: compressor.label(),
        eta: cfg.eta,
        seed: cfg.seed,
        diverged,
        records,
        iterates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfConfig {
    pub schedule_kind: ScheduleKind,
    /// Constant step for kinds 2 and 3; the largest admissible one when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(flatten)]
    pub noise: NoiseModel,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub x0: Option<DenseVector>,
    #[serde(default)]
    pub store_iterates: bool,
}

impl EfConfig {
    pub fn new(schedule_kind: ScheduleKind, noise: NoiseModel, iterations: usize) -> Self {
        Self { schedule_kind, eta: None, noise, iterations, seed: 0, x0: None, store_iterates: false }
    }
}

/// Row k: the state after k rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfRecord {
    pub k: usize,
    #[serde(serialize_with = "ser_f64")]
    pub f_gap_iterate: f64,
    #[serde(serialize_with = "ser_f64")]
    pub f_gap_ergodic: f64,
    #[serde(serialize_with = "ser_f64")]
    pub max_error_norm: f64,
    pub bits_cumulative: u64,
    /// Step used in round k (from xᵏ to xᵏ⁺¹).
    #[serde(serialize_with = "ser_f64")]
    pub eta_k: f64,
    /// Averaging weight of xᵏ.
    #[serde(serialize_with = "ser_f64")]
    pub w_k: f64,
    /// Scaled deviation of the virtual iterate from its recurrence in the
    /// round that produced xᵏ (0 for k = 0).
    #[serde(serialize_with = "ser_f64")]
    pub virtual_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EfTrace {
    pub operator: String,
    /// The compressor as run, after any scaling into 𝔹³.
    pub effective_operator: String,
    pub class: ClassParams,
    #[serde(serialize_with = "ser_f64")]
    pub delta: f64,
    pub schedule: Schedule,
    pub config: EfConfig,
    pub n: usize,
    pub diverged: bool,
    pub records: Vec<EfRecord>,
    #[serde(skip)]
    pub ergodic: DenseVector,
    #[serde(skip)]
    pub iterates: Option<Vec<DenseVector>>,
}

pub const EF_CSV_HEADER: [&str; 8] =
    ["k", "f_gap_iterate", "f_gap_ergodic", "max_error_norm", "bits_cumulative", "eta_k", "w_k", "virtual_residual"];

impl EfTrace {
    pub fn to_csv(&self) -> String {
        csv_string(
            &EF_CSV_HEADER,
            self.records.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    fmt_f64(r.f_gap_iterate),
                    fmt_f64(r.f_gap_ergodic),
                    fmt_f64(r.max_error_norm),
                    r.bits_cumulative.to_string(),
                    fmt_f64(r.eta_k),
                    fmt_f64(r.w_k),
                    fmt_f64(r.virtual_residual),
                ]
            }),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }

    pub fn max_virtual_residual(&self) -> f64 {
        self.records.iter().map(|r| r.virtual_residual).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &EfRecord {
        self.records.last().expect("a trace has at least the initial row")
    }
}

struct Node {
    e: DenseVector,
    rng: Stream,
}

struct NodeOut {
    g: DenseVector,
    msg: DenseVector,
    bits: u64,
}

/// One error-feedback round: g̃ᵢ = 𝒞(eᵢ + ηᵏgᵢ), eᵢ ← eᵢ + ηᵏgᵢ − g̃ᵢ, x ← x − (1/n) Σ g̃ᵢ.
///
/// The compressor is brought into 𝔹³ through the class reductions: a 𝕌(ζ)
/// operator runs as (1/ζ)𝒞 with δ = ζ, 𝔹¹ and 𝔹² operators as (1/β)𝒞. The
/// schedule uses L = max Lᵢ and μ = min μᵢ.
pub fn run_ef_sgd(dobj: &DistributedObjective, compressor: &Compressor, class: &ClassParams, cfg: &EfConfig) -> Result<EfTrace> {
    let d = dobj.dim();
    let n = dobj.n();
    compressor.validate(d)?;
    cfg.noise.validate()?;
    class.validate()?;
    let (lambda, b3) = reduce(class, ClassTag::B3)?;
    let ClassParams::B3 { delta } = b3 else { unreachable!("reduce targets B3") };
    let effective = if lambda == 1.0 {
        compressor.clone()
    } else {
        log::info!("running {} as {lambda}*C to enter B3({delta})", compressor.label());
        Compressor::scaled(compressor.spec.clone(), compressor.scale * lambda)?
    };
    let schedule = Schedule::new(
        cfg.schedule_kind,
        delta,
        cfg.noise.b,
        dobj.max_node_smoothness(),
        dobj.min_node_strong_convexity(),
        cfg.eta,
    )?;

    let f = dobj.aggregate.as_ref();
    let mut x = start_point(&cfg.x0, d)?;
    let mut nodes: Vec<Node> =
        node_streams(cfg.seed, n).into_iter().map(|rng| Node { e: DenseVector::zeros(d), rng }).collect();
    let mut avg = ErgodicAverage::new(d);
    avg.push(&x, schedule.weight_fraction(0));
    let mut iterates = cfg.store_iterates.then(|| vec![x.clone()]);
    let mut records = vec![EfRecord {
        k: 0,
        f_gap_iterate: gap(f, &x),
        f_gap_ergodic: gap(f, avg.current()),
        max_error_norm: 0.0,
        bits_cumulative: 0,
        eta_k: schedule.eta(0),
        w_k: schedule.weight(0),
        virtual_residual: 0.0,
    }];
    let inv_n = 1.0 / n as f64;
    let mut bits = 0u64;
    let mut diverged = false;
    // x̃ᵏ = xᵏ − (1/n) Σ eᵢᵏ; starts at x⁰ since e⁰ = 0.
    let mut virt = x.clone();
    for k in 0..cfg.iterations {
        let eta = schedule.eta(k);
        let outs = for_each_node(&mut nodes, n * d, |i, node| {
            let grad = dobj.nodes[i].grad(&x);
            let mut g = sample_noise(&grad, &cfg.noise, &mut node.rng);
            g.axpy(1.0, &grad);
            let mut p = node.e.clone();
            p.axpy(eta, &g);
            let m = effective.compress(&p, &mut node.rng)?;
            node.e = p.sub(&m.decoded);
            Ok(NodeOut { g, msg: m.decoded, bits: m.bit_cost })
        })?;
        let mut step = DenseVector::zeros(d);
        let mut g_sum = DenseVector::zeros(d);
        for o in &outs {
            step.axpy(1.0, &o.msg);
            g_sum.axpy(1.0, &o.g);
            bits += o.bits;
        }
        x.axpy(-inv_n, &step);

        let mut e_sum = DenseVector::zeros(d);
        let mut max_e = 0.0f64;
        for node in &nodes {
            e_sum.axpy(1.0, &node.e);
            max_e = max_e.max(node.e.norm2());
        }
        let mut new_virt = x.clone();
        new_virt.axpy(-inv_n, &e_sum);
        let mut predicted = virt;
        predicted.axpy(-eta * inv_n, &g_sum);
        let scale = 1.0f64.max(new_virt.norm_inf()).max(eta * inv_n * g_sum.norm_inf());
        let residual = new_virt.sub(&predicted).norm_inf() / scale;
        virt = new_virt;

        if !x.is_finite() || !max_e.is_finite() {
            diverged = true;
            break;
        }
        avg.push(&x, schedule.weight_fraction(k + 1));
        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        records.push(EfRecord {
            k: k + 1,
            f_gap_iterate: gap(f, &x),
            f_gap_ergodic: gap(f, avg.current()),
            max_error_norm: max_e,
            bits_cumulative: bits,
            eta_k: schedule.eta(k + 1),
            w_k: schedule.weight(k + 1),
            virtual_residual: residual,
        });
    }
    Ok(EfTrace {
        operator: compressor.label(),
        effective_operator: effective.label(),
        class: *class,
        delta,
        schedule,
        config: cfg.clone(),
        n,
        diverged,
        records,
        ergodic: avg.current().clone(),
        iterates,
    })
}

/// Inputs of the rate expressions with all hidden constants set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub delta: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: f64,
    pub n: usize,
    /// ‖x⁰ − x⋆‖².
    pub r0_sq: f64,
}

impl TheoremConstants {
    fn noise_term(&self) -> f64 {
        let n = self.n as f64;
        self.c * (1.0 + 1.0 / n) + self.d * (2.0 * self.b / n + 3.0 * self.delta)
    }

    fn spread(&self) -> f64 {
        2.0 * self.delta + self.b
    }

    pub fn a1(&self) -> f64 {
        self.l * self.l * self.spread() * self.spread() * self.r0_sq / self.mu
    }

    pub fn a2(&self) -> f64 {
        self.noise_term() / self.mu
    }

    pub fn a3(&self) -> f64 {
        self.l * self.spread() * self.r0_sq
    }

    pub fn a4(&self) -> f64 {
        28.0 * self.l * self.spread() / self.mu
    }

    pub fn a5(&self) -> f64 {
        (self.noise_term() * self.r0_sq).sqrt()
    }
}

/// The kind-matched rate: A₁/K² + A₂/K, A₃e^{−K/A₄} + A₂/K, or A₃/K + A₅/√K.
pub fn theorem_bound(kind: ScheduleKind, c: &TheoremConstants, k: u64) -> f64 {
    let kf = k as f64;
    match kind {
        ScheduleKind::DecreasingLinearWeights => c.a1() / (kf * kf) + c.a2() / kf,
        ScheduleKind::ConstantExpWeights => c.a3() * (-kf / c.a4()).exp() + c.a2() / kf,
        ScheduleKind::ConstantUniformWeights => c.a3() / kf + c.a5() / kf.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::CompressorSpec;
    use crate::problems::example1;
    use crate::rng::stream;

    #[test]
    fn exact_noise_is_zero() {
        let g = DenseVector::filled(4, 3.0);
        assert!(sample_noise(&g, &NoiseModel::exact(), &mut stream(0)).is_zero());
    }

    #[test]
    fn weight_fractions_match_direct_sums() {
        for kind in [
            ScheduleKind::DecreasingLinearWeights,
            ScheduleKind::ConstantExpWeights,
            ScheduleKind::ConstantUniformWeights,
        ] {
            let s = Schedule::new(kind, 3.0, 0.0, 10.0, 1.0, None).unwrap();
            let mut total = 0.0;
            for k in 0..50 {
                total += s.weight(k);
                assert!((s.weight_fraction(k) - s.weight(k) / total).abs() < 1e-13, "{kind:?} k={k}");
            }
        }
    }

    #[test]
    fn kind1_constants() {
        let s = Schedule::new(ScheduleKind::DecreasingLinearWeights, 3.0, 0.0, 34.5, 0.5, None).unwrap();
        assert_eq!(s.kappa, 56.0 * 6.0 * 34.5 / 0.5);
        assert!(s.eta(0) <= max_constant_step(3.0, 0.0, 34.5) * (1.0 + 1e-12));
        assert!(Schedule::new(ScheduleKind::ConstantUniformWeights, 3.0, 0.0, 1.0, 1.0, Some(1.0)).is_err());
    }

    #[test]
    fn theorem_constants() {
        let c = TheoremConstants { delta: 1.0, b: 0.0, c: 1.0, d: 0.0, l: 1.0, mu: 1.0, n: 1, r0_sq: 1.0 };
        assert_eq!(c.a2(), 2.0);
        let c0 = TheoremConstants { c: 0.0, ..c };
        assert_eq!((c0.a2(), c0.a5()), (0.0, 0.0));
        assert_eq!(theorem_bound(ScheduleKind::ConstantUniformWeights, &c0, 10), c0.a3() / 10.0);
        assert!(theorem_bound(ScheduleKind::DecreasingLinearWeights, &c, 1 << 40) < 1e-11);
    }

    #[test]
    fn ergodic_matches_direct_average() {
        let p = example1().unwrap();
        let mut cfg = EfConfig::new(ScheduleKind::DecreasingLinearWeights, NoiseModel::exact(), 200);
        cfg.x0 = Some(DenseVector::filled(3, 1.0));
        cfg.store_iterates = true;
        let t = run_ef_sgd(&p, &Compressor::new(CompressorSpec::TopK { k: 1 }), &ClassParams::B3 { delta: 3.0 }, &cfg)
            .unwrap();
        let it = t.iterates.as_ref().unwrap();
        let mut sum = DenseVector::zeros(3);
        let mut w = 0.0;
        for (k, x) in it.iter().enumerate() {
            sum.axpy(t.schedule.weight(k), x);
            w += t.schedule.weight(k);
        }
        assert!(sum.scaled(1.0 / w).sub(&t.ergodic).norm_inf() < 1e-12);
        assert!(t.max_virtual_residual() <= 1e-12);
    }

    #[test]
    fn unbiased_input_is_rescaled() {
        let p = example1().unwrap();
        let cfg = EfConfig::new(ScheduleKind::ConstantUniformWeights, NoiseModel::exact(), 5);
        let t = run_ef_sgd(&p, &Compressor::new(CompressorSpec::RandK { k: 1 }), &ClassParams::U { zeta: 3.0 }, &cfg)
            .unwrap();
        assert_eq!(t.delta, 3.0);
        assert!(t.effective_operator.starts_with("0.333"));
    }
}
