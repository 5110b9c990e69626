//! Expected savings and variance of Top-k versus Rand-k under i.i.d.
//! coordinate models.
//!
//! For a vector x, ω = ‖𝒞(x) − x‖² is the energy lost and s = ‖x‖² − ω the
//! energy kept. Rand-k is used in its (k/d)-rescaled form, so it keeps
//! exactly the sampled coordinates.

mod order;
mod quadrature;

pub use order::{gaussian_order_stat_second_moment, gaussian_top_k_savings, OrderMode, QUAD_TOL};
pub use quadrature::integrate;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compressors::{Compressor, CompressorSpec};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::trace::{csv_string, fmt_f64};
use crate::vector::DenseVector;

/// Samples per independent Monte Carlo sub-stream.
const MC_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum Distribution {
    Uniform01,
    StdExponential,
    Gaussian { mean: f64, sigma: f64 },
}

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform01 => rng.random::<f64>(),
            Self::StdExponential => rng.sample(Exp1),
            Self::Gaussian { mean, sigma } => mean + sigma * rng.sample::<f64, _>(StandardNormal),
        }
    }

    pub fn vector<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> DenseVector {
        DenseVector::from_vec_unchecked((0..d).map(|_| self.sample(rng)).collect())
    }

    /// E[x²] of one coordinate.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::Uniform01 => 1.0 / 3.0,
            Self::StdExponential => 2.0,
            Self::Gaussian { mean, sigma } => sigma * sigma + mean * mean,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Uniform01 => "U(0,1)".into(),
            Self::StdExponential => "Exp(1)".into(),
            Self::Gaussian { mean, sigma } => format!("N({mean},{})", sigma * sigma),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::Gaussian { mean, sigma } = *self {
            if !(sigma > 0.0) || !sigma.is_finite() || !mean.is_finite() {
                return Err(Error::InvalidParameter(format!("need finite mean and sigma > 0, got N({mean}, {sigma}²)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SavingsReport {
    pub distribution: Distribution,
    pub d: usize,
    pub k: usize,
    pub s_rnd: f64,
    pub s_top: f64,
    pub omega_rnd: f64,
    pub omega_top: f64,
    /// E‖x‖².
    pub energy: f64,
    pub method: Method,
    /// Standard errors of s_rnd and s_top (Monte Carlo only); they are also
    /// the standard errors of the matching ω.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<(f64, f64)>,
}

impl SavingsReport {
    pub fn variance_ratio(&self) -> f64 {
        self.omega_top / self.omega_rnd
    }

    pub fn saving_ratio(&self) -> f64 {
        self.s_top / self.s_rnd
    }

    pub const CSV_HEADER: [&'static str; 9] =
        ["distribution", "d", "k", "method", "s_rnd", "s_top", "omega_rnd", "omega_top", "energy"];

    pub fn csv_row(&self) -> Vec<String> {
        let method = match self.method {
            Method::ClosedForm => "closed_form".to_string(),
            Method::Quadrature => "quadrature".to_string(),
            Method::MonteCarlo { n } => format!("monte_carlo_{n}"),
        };
        vec![
            self.distribution.label(),
            self.d.to_string(),
            self.k.to_string(),
            method,
            fmt_f64(self.s_rnd),
            fmt_f64(self.s_top),
            fmt_f64(self.omega_rnd),
            fmt_f64(self.omega_top),
            fmt_f64(self.energy),
        ]
    }

    fn from_top(distribution: Distribution, d: usize, k: usize, s_top: f64, method: Method) -> Self {
        let energy = d as f64 * distribution.second_moment();
        let s_rnd = k as f64 * distribution.second_moment();
        Self {
            distribution,
            d,
            k,
            s_rnd,
            s_top,
            omega_rnd: energy - s_rnd,
            omega_top: energy - s_top,
            energy,
            method,
            std_errors: None,
        }
    }
}

fn check_dk(d: usize, k: usize) -> Result<()> {
    if d == 0 || k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
    }
    Ok(())
}

/// Uniform(0, 1) coordinates: E ω_top/E ω_rnd = (1 − k/(d+1))(1 − k/(d+2))
/// and E s¹_top/E s¹_rnd = 3d/(d+2).
pub fn uniform_ratio_closed_form(d: usize, k: usize) -> Result<(f64, f64)> {
    check_dk(d, k)?;
    let (d, k) = (d as f64, k as f64);
    Ok(((1.0 - k / (d + 1.0)) * (1.0 - k / (d + 2.0)), 3.0 * d / (d + 2.0)))
}

/// Exponential coordinates: E s¹_top/E s¹_rnd = ½Σ1/i² + ½(Σ1/i)².
pub fn exponential_saving_ratio(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let (h1, h2) = (1..=d).fold((0.0, 0.0), |(h1, h2), i| {
        let i = i as f64;
        (h1 + 1.0 / i, h2 + 1.0 / (i * i))
    });
    Ok(0.5 * h2 + 0.5 * h1 * h1)
}

/// E[U₍ᵢ₎²] = i(i+1)/((d+1)(d+2)) for uniform order statistics.
fn uniform_top_savings(d: usize, k: usize) -> f64 {
    let (df, m) = (d as f64, (d - k) as f64);
    // Σᵢ₌₁ᵈ i(i+1) minus the bottom d − k terms, using Σᵢ₌₁ᵐ i(i+1) = m(m+1)(m+2)/3.
    let tri = |m: f64| m * (m + 1.0) * (m + 2.0) / 3.0;
    (tri(df) - tri(m)) / ((df + 1.0) * (df + 2.0))
}

/// x₍ᵢ₎ = Σⱼ₌d₋ᵢ₊₁..d Zⱼ/j for exponential order statistics.
fn exponential_top_savings(d: usize, k: usize) -> f64 {
    (d - k + 1..=d)
        .map(|i| {
            let (h1, h2) = (d - i + 1..=d).fold((0.0, 0.0), |(h1, h2), j| {
                let j = j as f64;
                (h1 + 1.0 / j, h2 + 1.0 / (j * j))
            });
            h2 + h1 * h1
        })
        .sum()
}

/// Expected savings from closed forms (uniform, exponential) or quadrature
/// (Gaussian, with magnitude ordering as Top-k uses).
pub fn expected_savings(distribution: Distribution, d: usize, k: usize) -> Result<SavingsReport> {
    check_dk(d, k)?;
    distribution.validate()?;
    Ok(match distribution {
        Distribution::Uniform01 => {
            SavingsReport::from_top(distribution, d, k, uniform_top_savings(d, k), Method::ClosedForm)
        }
        Distribution::StdExponential => {
            SavingsReport::from_top(distribution, d, k, exponential_top_savings(d, k), Method::ClosedForm)
        }
        Distribution::Gaussian { mean, sigma } => {
            let s = gaussian_top_k_savings(d, k, mean, sigma, OrderMode::Absolute)?;
            SavingsReport::from_top(distribution, d, k, s, Method::Quadrature)
        }
    })
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Moments {
    fn push(&mut self, v: [f64; 3]) {
        self.n += 1.0;
        for (j, x) in v.into_iter().enumerate() {
            self.sum[j] += x;
            self.sum_sq[j] += x * x;
        }
    }

    fn merge(mut self, o: Self) -> Self {
        self.n += o.n;
        for j in 0..3 {
            self.sum[j] += o.sum[j];
            self.sum_sq[j] += o.sum_sq[j];
        }
        self
    }

    fn mean(&self, j: usize) -> f64 {
        self.sum[j] / self.n
    }

    fn std_error(&self, j: usize) -> f64 {
        let m = self.mean(j);
        ((self.sum_sq[j] / self.n - m * m).max(0.0) / self.n).sqrt()
    }
}

/// Monte Carlo savings of Top-k and rescaled Rand-k on the same samples.
/// Each chunk of samples uses its own sub-stream of `seed`, and chunks are
/// combined in order, so the result does not depend on the thread count.
pub fn empirical_savings(distribution: Distribution, d: usize, k: usize, n_mc: usize, seed: u64) -> Result<SavingsReport> {
    check_dk(d, k)?;
    distribution.validate()?;
    if n_mc == 0 {
        return Err(Error::InvalidParameter("n_mc must be positive".into()));
    }
    let top = Compressor::new(CompressorSpec::TopK { k });
    let rnd = Compressor::scaled(CompressorSpec::RandK { k }, k as f64 / d as f64)?;
    let chunks = n_mc.div_ceil(MC_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Moments> {
            let mut rng = substream(seed, c as u64);
            let mut m = Moments::default();
            for _ in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(n_mc) {
                let x = distribution.vector(d, &mut rng);
                let s_top = top.compress(&x, &mut rng)?.decoded.norm_sq();
                let s_rnd = rnd.compress(&x, &mut rng)?.decoded.norm_sq();
                m.push([x.norm_sq(), s_rnd, s_top]);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let energy = m.mean(0);
    let (s_rnd, s_top) = (m.mean(1), m.mean(2));
    // ω = ‖x‖² − s exactly per sample, since the kept entries are unchanged.
    let omega_rnd = (m.sum[0] - m.sum[1]) / m.n;
    let omega_top = (m.sum[0] - m.sum[2]) / m.n;
    Ok(SavingsReport {
        distribution,
        d,
        k,
        s_rnd,
        s_top,
        omega_rnd,
        omega_top,
        energy,
        method: Method::MonteCarlo { n: n_mc },
        std_errors: Some((m.std_error(1), m.std_error(2))),
    })
}

/// One cell of the Top-k savings table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Cell {
    pub distribution: Distribution,
    pub k: usize,
    pub d: usize,
    pub s_rnd: f64,
    pub s_top: f64,
}

pub const TABLE2_DIMS: [usize; 4] = [100, 1_000, 10_000, 100_000];
pub const TABLE2_KS: [usize; 2] = [3, 5];
pub const TABLE2_MEANS: [f64; 2] = [0.0, 2.0];

/// Expected Top-k and Rand-k savings for N(0,1) and N(2,1), k ∈ {3, 5} and
/// d ∈ {10², …, 10⁵}, by quadrature in the given ordering mode.
pub fn table2(mode: OrderMode) -> Result<Vec<Table2Cell>> {
    let mut cells = Vec::new();
    for mean in TABLE2_MEANS {
        let distribution = Distribution::Gaussian { mean, sigma: 1.0 };
        for k in TABLE2_KS {
            for d in TABLE2_DIMS {
                let s_top = gaussian_top_k_savings(d, k, mean, 1.0, mode)?;
                cells.push(Table2Cell { distribution, k, d, s_rnd: k as f64 * distribution.second_moment(), s_top });
            }
        }
    }
    Ok(cells)
}

pub fn table2_csv(cells: &[Table2Cell]) -> String {
    csv_string(
        &["distribution", "k", "d", "s_rnd", "s_top"],
        cells.iter().map(|c| {
            vec![c.distribution.label(), c.k.to_string(), c.d.to_string(), fmt_f64(c.s_rnd), fmt_f64(c.s_top)]
        }),
    )
}

/// One operator's position on the variance-versus-bits plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub operator: String,
    pub bits_per_coord: f64,
    /// Mean of ‖𝒞(x) − x‖²/‖x‖².
    pub normalized_variance: f64,
    /// δ with 1 − 1/δ = normalized_variance; +∞ once it reaches 1.
    pub delta: f64,
}

/// Averages bits per coordinate and normalized variance over `n_vectors`
/// standard Gaussian vectors of dimension d.
pub fn variance_bits_curve(compressors: &[Compressor], d: usize, n_vectors: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    if n_vectors == 0 {
        return Err(Error::InvalidParameter("n_vectors must be positive".into()));
    }
    let gaussian = Distribution::Gaussian { mean: 0.0, sigma: 1.0 };
    compressors
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            c.validate(d)?;
            let mut rng = substream(seed, ci as u64);
            let (mut bits, mut var) = (0.0, 0.0);
            for _ in 0..n_vectors {
                let x = gaussian.vector(d, &mut rng);
                let m = c.compress(&x, &mut rng)?;
                bits += m.bit_cost as f64;
                var += m.decoded.dist_sq(&x) / x.norm_sq();
            }
            let nv = var / n_vectors as f64;
            Ok(CurvePoint {
                operator: c.label(),
                bits_per_coord: bits / (n_vectors * d) as f64,
                normalized_variance: nv,
                delta: if nv >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - nv) },
            })
        })
        .collect()
}

/// Long-format CSV: operator, bits_per_coord, value, metric.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    csv_string(
        &["operator", "bits_per_coord", "value", "metric"],
        points.iter().flat_map(|p| {
            [("normalized_variance", p.normalized_variance), ("delta", p.delta)].map(|(metric, v)| {
                vec![p.operator.clone(), fmt_f64(p.bits_per_coord), fmt_f64(v), metric.to_string()]
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(exponential_saving_ratio(1).unwrap(), 1.0);
        assert_eq!(exponential_saving_ratio(2).unwrap(), 1.75);
        let (v, s) = uniform_ratio_closed_form(100, 10).unwrap();
        assert_eq!(v, (1.0 - 10.0 / 101.0) * (1.0 - 10.0 / 102.0));
        assert_eq!(s, 300.0 / 102.0);
    }

    #[test]
    fn closed_form_reports_agree_with_ratios() {
        let r = expected_savings(Distribution::Uniform01, 100, 10).unwrap();
        assert!((r.variance_ratio() - uniform_ratio_closed_form(100, 10).unwrap().0).abs() < 1e-12);
        let r = expected_savings(Distribution::Uniform01, 50, 1).unwrap();
        assert!((r.saving_ratio() - uniform_ratio_closed_form(50, 1).unwrap().1).abs() < 1e-12);
        let r = expected_savings(Distribution::StdExponential, 50, 1).unwrap();
        assert!((r.saving_ratio() - exponential_saving_ratio(50).unwrap()).abs() < 1e-12);
        assert!((r.s_top + r.omega_top - r.energy).abs() < 1e-8);
    }

    #[test]
    fn top_d_is_lossless() {
        let r = empirical_savings(Distribution::Gaussian { mean: 0.0, sigma: 1.0 }, 8, 8, 100, 1).unwrap();
        assert!(r.omega_top.abs() < 1e-12 && r.omega_rnd.abs() < 1e-12);
    }

    #[test]
    fn rescaled_rand_k_is_linear_in_bits() {
        let c = Compressor::scaled(CompressorSpec::RandK { k: 10 }, 0.1).unwrap();
        let p = &variance_bits_curve(&[c, Compressor::new(CompressorSpec::Identity)], 100, 1, 0).unwrap();
        assert!(p[0].normalized_variance < 1.0);
        assert_eq!((p[1].normalized_variance, p[1].bits_per_coord), (0.0, 32.0));
    }
}
