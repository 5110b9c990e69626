//! Compressed gradient descent: xᵏ⁺¹ = xᵏ − η𝒞(∇f(xᵏ)).
//!
//! Every run records the realized contraction parameter of each
//! compression, 1 − 1/δₖ = ‖𝒞(g) − g‖²/‖g‖², and the adaptive bound
//! ℰ₀ ∏ (1 − μ/(Lδᵢ)) over the steps taken so far. With η = 1/L the
//! descent lemma gives f(xᵏ⁺¹) − f⋆ ≤ (1 − μ/(Lδₖ))(f(xᵏ) − f⋆) for every
//! realization, so the bound dominates the trajectory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classes::ClassParams;
use crate::compressors::Compressor;
use crate::error::{Error, Result};
use crate::problems::Objective;
use crate::rng::stream;
use crate::trace::{csv_string, fmt_f64, fmt_opt_f64, ser_f64, ser_opt_f64};
use crate::vector::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// η = 1/(βL), for B1 and B2 operators.
    OneOverBetaL,
    /// η = 1/L, for B3 operators.
    OneOverL,
    Manual { eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgdConfig {
    pub step: StepRule,
    pub iterations: usize,
    /// Required by the automatic step rules.
    #[serde(default)]
    pub class_params: Option<ClassParams>,
    #[serde(default)]
    pub seed: u64,
    /// Starting point; zeros when absent.
    #[serde(default)]
    pub x0: Option<DenseVector>,
}

impl CgdConfig {
    pub fn new(step: StepRule, iterations: usize) -> Self {
        Self { step, iterations, class_params: None, seed: 0, x0: None }
    }

    pub fn with_class(mut self, params: ClassParams) -> Self {
        self.class_params = Some(params);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_x0(mut self, x0: DenseVector) -> Self {
        self.x0 = Some(x0);
        self
    }

    /// The step size for smoothness constant `l`.
    pub fn step_size(&self, l: f64) -> Result<f64> {
        let eta = match (self.step, self.class_params) {
            (StepRule::Manual { eta }, _) => eta,
            (StepRule::OneOverL, Some(ClassParams::B3 { .. })) => 1.0 / l,
            (StepRule::OneOverBetaL, Some(ClassParams::B1 { beta, .. } | ClassParams::B2 { beta, .. })) => 1.0 / (beta * l),
            (rule, params) => {
                return Err(Error::Config(format!(
                    "step rule {rule:?} does not match class {}",
                    params.map_or("<none>".to_string(), |p| p.to_string())
                )));
            }
        };
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Config(format!("step size must be positive, got {eta}")));
        }
        Ok(eta)
    }
}

/// State after k steps. `delta_k` and `bits_sent` describe the compression
/// that produced xᵏ (absent for k = 0 and for zero gradients).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgdRecord {
    pub k: usize,
    #[serde(serialize_with = "ser_f64")]
    pub f_gap: f64,
    #[serde(serialize_with = "ser_f64")]
    pub grad_norm: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub delta_k: Option<f64>,
    /// ∏ᵢ (1 − μ/(Lδᵢ)) over the steps so far.
    #[serde(serialize_with = "ser_f64")]
    pub bound_product: f64,
    /// ℰ₀ · bound_product.
    #[serde(serialize_with = "ser_f64")]
    pub theory_bound: f64,
    pub bits_sent: u64,
    pub bits_cumulative: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub operator: String,
    pub config: CgdConfig,
    #[serde(serialize_with = "ser_f64")]
    pub step_size: f64,
    #[serde(serialize_with = "ser_f64")]
    pub smoothness: f64,
    #[serde(serialize_with = "ser_f64")]
    pub strong_convexity: f64,
    pub diverged: bool,
    pub records: Vec<CgdRecord>,
}

pub const CSV_HEADER: [&str; 8] =
    ["k", "f_gap", "grad_norm", "delta_k", "bound_product", "theory_bound", "bits_sent", "bits_cumulative"];

impl RunTrace {
    pub fn to_csv(&self) -> String {
        csv_string(
            &CSV_HEADER,
            self.records.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    fmt_f64(r.f_gap),
                    fmt_f64(r.grad_norm),
                    fmt_opt_f64(r.delta_k),
                    fmt_f64(r.bound_product),
                    fmt_f64(r.theory_bound),
                    r.bits_sent.to_string(),
                    r.bits_cumulative.to_string(),
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

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    /// First k with f_gap ≤ eps.
    pub fn first_below(&self, eps: f64) -> Option<usize> {
        self.records.iter().find(|r| r.f_gap <= eps).map(|r| r.k)
    }
}

/// Realized δ of one compression: 1 − 1/δ = ‖c − g‖²/‖g‖². `None` for g = 0
/// and +∞ when the ratio reaches 1.
pub fn empirical_delta(g: &DenseVector, c: &DenseVector) -> Option<f64> {
    let n = g.norm_sq();
    if n == 0.0 {
        return None;
    }
    let ratio = c.dist_sq(g) / n;
    Some(if ratio >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - ratio) })
}

/// Runs K steps of CGD from `cfg.x0` with randomness from `cfg.seed`.
pub fn run_cgd(obj: &dyn Objective, compressor: &Compressor, cfg: &CgdConfig) -> Result<RunTrace> {
    let d = obj.dim();
    compressor.validate(d)?;
    let l = obj.smoothness();
    let mu = obj.strong_convexity();
    let eta = cfg.step_size(l)?;
    let mut x = match &cfg.x0 {
        Some(x0) => {
            x0.check_dim(d)?;
            x0.clone()
        }
        None => DenseVector::zeros(d),
    };
    let mut rng = stream(cfg.seed);
    let gap = |x: &DenseVector| obj.f_gap(x).unwrap_or(f64::NAN);
    let mut g = obj.grad(&x);
    let e0 = gap(&x);
    let mut records = Vec::with_capacity(cfg.iterations + 1);
    records.push(CgdRecord {
        k: 0,
        f_gap: e0,
        grad_norm: g.norm2(),
        delta_k: None,
        bound_product: 1.0,
        theory_bound: e0,
        bits_sent: 0,
        bits_cumulative: 0,
    });
    let mut product = 1.0;
    let mut bits_total = 0u64;
    let mut diverged = false;
    for k in 1..=cfg.iterations {
        let msg = compressor.compress(&g, &mut rng)?;
        let delta = empirical_delta(&g, &msg.decoded);
        if let Some(delta) = delta {
            product *= 1.0 - mu / (l * delta);
        }
        x.axpy(-eta, &msg.decoded);
        bits_total += msg.bit_cost;
        g = obj.grad(&x);
        let f_gap = gap(&x);
        if !x.is_finite() || !f_gap.is_finite() {
            diverged = true;
            break;
        }
        records.push(CgdRecord {
            k,
            f_gap,
            grad_norm: g.norm2(),
            delta_k: delta,
            bound_product: product,
            theory_bound: e0 * product,
            bits_sent: msg.bit_cost,
            bits_cumulative: bits_total,
        });
    }
    Ok(RunTrace {
        operator: compressor.label(),
        config: cfg.clone(),
        step_size: eta,
        smoothness: l,
        strong_convexity: mu,
        diverged,
        records,
    })
}

/// Class rate after K steps: (1 − (α/β²)μ/L)ᴷ, (1 − (γ/β)μ/L)ᴷ or (1 − μ/(δL))ᴷ.
pub fn rate_bound(params: &ClassParams, l: f64, mu: f64, k: u32) -> Result<f64> {
    params.validate()?;
    if !(mu > 0.0) || !(mu <= l) {
        return Err(Error::InvalidParameter(format!("need 0 < mu <= L, got mu = {mu}, L = {l}")));
    }
    let ratio = mu / l;
    let factor = match *params {
        ClassParams::B1 { alpha, beta } => 1.0 - alpha / (beta * beta) * ratio,
        ClassParams::B2 { gamma, beta } => 1.0 - gamma / beta * ratio,
        ClassParams::B3 { delta } => 1.0 - ratio / delta,
        ClassParams::U { .. } => {
            return Err(Error::InvalidClassParams("the CGD rates cover B1, B2 and B3 only".into()));
        }
    };
    if !(0.0..1.0).contains(&factor) {
        return Err(Error::InvalidClassParams(format!("contraction factor {factor} is outside [0, 1)")));
    }
    Ok(factor.powi(k as i32))
}
