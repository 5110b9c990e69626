//! Test objectives: synthetic quadratics, the DCGD counterexamples and
//! regularized regression over CSV data.

mod counterexample;
mod quadratic;
mod regression;

use std::fmt::Debug;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::vector::DenseVector;

pub use counterexample::{counterexample_general, example1, Counterexample, RankOneRidge, MAX_NODES};
pub use quadratic::{gen_distributed_quadratic, gen_quadratic, Quadratic};
pub use regression::{CsvOptions, Regression, RegressionKind, DEFAULT_MU0};

/// A differentiable, L-smooth and μ-strongly convex function.
pub trait Objective: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DenseVector) -> f64;

    fn grad(&self, x: &DenseVector) -> DenseVector;

    fn value_and_grad(&self, x: &DenseVector) -> (f64, DenseVector) {
        (self.value(x), self.grad(x))
    }

    fn smoothness(&self) -> f64;

    fn strong_convexity(&self) -> f64;

    fn minimizer(&self) -> Option<&DenseVector>;

    fn f_star(&self) -> Option<f64>;

    /// f(x) − f⋆ when f⋆ is known. Implementations may evaluate it in a
    /// cancellation-free form.
    fn f_gap(&self, x: &DenseVector) -> Option<f64> {
        self.f_star().map(|fs| self.value(x) - fs)
    }
}

/// f = (1/n) Σ fᵢ together with its nodes.
#[derive(Debug)]
pub struct DistributedObjective {
    pub nodes: Vec<Box<dyn Objective>>,
    pub aggregate: Box<dyn Objective>,
    /// D = (1/n) Σ ‖∇fᵢ(x⋆)‖².
    pub d_const: f64,
}

impl DistributedObjective {
    pub fn new(nodes: Vec<Box<dyn Objective>>, aggregate: Box<dyn Objective>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidProblem("a distributed objective needs at least one node".into()));
        }
        let dim = aggregate.dim();
        if let Some(bad) = nodes.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
        }
        let d_const = match aggregate.minimizer() {
            Some(xs) => nodes.iter().map(|f| f.grad(xs).norm_sq()).sum::<f64>() / nodes.len() as f64,
            None => f64::NAN,
        };
        Ok(Self { nodes, aggregate, d_const })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.aggregate.dim()
    }

    /// max Lᵢ, the smoothness constant used by the step-size rules.
    pub fn max_node_smoothness(&self) -> f64 {
        self.nodes.iter().map(|f| f.smoothness()).fold(0.0, f64::max)
    }

    /// min μᵢ.
    pub fn min_node_strong_convexity(&self) -> f64 {
        self.nodes.iter().map(|f| f.strong_convexity()).fold(f64::INFINITY, f64::min)
    }

    /// (1/n) Σ ∇fᵢ(x).
    pub fn mean_node_grad(&self, x: &DenseVector) -> DenseVector {
        let mut g = DenseVector::zeros(self.dim());
        for f in &self.nodes {
            g.axpy(1.0, &f.grad(x));
        }
        g.scaled(1.0 / self.n() as f64)
    }
}

/// Replayable description of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemManifest {
    Quadratic {
        dim: usize,
        eig_lo: f64,
        eig_hi: f64,
        seed: u64,
    },
    DistributedQuadratic {
        nodes: usize,
        dim: usize,
        eig_lo: f64,
        eig_hi: f64,
        #[serde(default = "default_true")]
        shared_minimizer: bool,
        seed: u64,
    },
    Example1,
    Counterexample {
        dim: usize,
        d1: usize,
    },
    Regression {
        path: PathBuf,
        kind: RegressionKind,
        #[serde(default)]
        normalize: bool,
        #[serde(default)]
        has_header: bool,
        #[serde(default = "default_mu0")]
        mu0: f64,
        #[serde(default = "default_one")]
        partitions: usize,
    },
}

fn default_true() -> bool {
    true
}

fn default_mu0() -> f64 {
    DEFAULT_MU0
}

fn default_one() -> usize {
    1
}

impl ProblemManifest {
    /// Builds the instance as a distributed objective (one node for
    /// single-machine problems).
    pub fn build(&self) -> Result<DistributedObjective> {
        match self {
            ProblemManifest::Quadratic { dim, eig_lo, eig_hi, seed } => {
                let q = gen_quadratic(*dim, (*eig_lo, *eig_hi), &mut stream(*seed))?;
                DistributedObjective::new(vec![Box::new(q.clone())], Box::new(q))
            }
            ProblemManifest::DistributedQuadratic { nodes, dim, eig_lo, eig_hi, shared_minimizer, seed } => {
                gen_distributed_quadratic(*nodes, *dim, (*eig_lo, *eig_hi), *shared_minimizer, &mut stream(*seed))
            }
            ProblemManifest::Example1 => example1(),
            ProblemManifest::Counterexample { dim, d1 } => Ok(counterexample_general(*dim, *d1)?.objective),
            ProblemManifest::Regression { path, kind, normalize, has_header, mu0, partitions } => {
                let opts = CsvOptions { has_header: *has_header, normalize: *normalize, mu0: *mu0 };
                let r = Regression::from_csv(path, *kind, &opts)?;
                r.partition(*partitions)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
