//! Instances on which DCGD with Top-k diverges.

use nalgebra::{DMatrix, DVector};

use super::{DistributedObjective, Objective, Quadratic};
use crate::error::{Error, Result};
use crate::vector::DenseVector;

/// Largest number of nodes `counterexample_general` will build.
pub const MAX_NODES: u64 = 1_000_000;

/// f(x) = ⟨a, x⟩² + ρ‖x‖²; minimized at 0 with f⋆ = 0.
#[derive(Debug, Clone)]
pub struct RankOneRidge {
    pub a: DenseVector,
    pub ridge: f64,
    origin: DenseVector,
}

impl RankOneRidge {
    pub fn new(a: DenseVector, ridge: f64) -> Result<Self> {
        if !(ridge > 0.0) {
            return Err(Error::InvalidProblem(format!("ridge must be positive, got {ridge}")));
        }
        let origin = DenseVector::zeros(a.dim());
        Ok(Self { a, ridge, origin })
    }

    /// The matrix A of xᵀAx, i.e. aaᵀ + ρI.
    pub fn matrix(&self) -> DMatrix<f64> {
        let a = DVector::from_column_slice(self.a.as_slice());
        &a * a.transpose() + DMatrix::identity(a.len(), a.len()) * self.ridge
    }
}

impl Objective for RankOneRidge {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let s = self.a.dot(x);
        s * s + self.ridge * x.norm_sq()
    }

    fn grad(&self, x: &DenseVector) -> DenseVector {
        let mut g = self.a.scaled(2.0 * self.a.dot(x));
        g.axpy(2.0 * self.ridge, x);
        g
    }

    fn smoothness(&self) -> f64 {
        2.0 * (self.a.norm_sq() + self.ridge)
    }

    fn strong_convexity(&self) -> f64 {
        2.0 * self.ridge
    }

    fn minimizer(&self) -> Option<&DenseVector> {
        Some(&self.origin)
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn f_gap(&self, x: &DenseVector) -> Option<f64> {
        Some(self.value(x))
    }
}

fn assemble(vectors: Vec<DenseVector>, ridge: f64) -> Result<DistributedObjective> {
    let nodes: Vec<RankOneRidge> = vectors.into_iter().map(|a| RankOneRidge::new(a, ridge)).collect::<Result<_>>()?;
    let d = nodes[0].dim();
    let n = nodes.len() as f64;
    let mut a = DMatrix::zeros(d, d);
    for f in &nodes {
        a += f.matrix();
    }
    let aggregate = Quadratic::new(a / n, DVector::zeros(d))?;
    let nodes = nodes.into_iter().map(|f| Box::new(f) as Box<dyn Objective>).collect();
    DistributedObjective::new(nodes, Box::new(aggregate))
}

/// n = d = 3, fᵢ(x) = ⟨vᵢ, x⟩² + ¼‖x‖² with v = (−3,2,2), (2,−3,2), (2,2,−3).
pub fn example1() -> Result<DistributedObjective> {
    let v = vec![
        DenseVector::from_vec_unchecked(vec![-3.0, 2.0, 2.0]),
        DenseVector::from_vec_unchecked(vec![2.0, -3.0, 2.0]),
        DenseVector::from_vec_unchecked(vec![2.0, 2.0, -3.0]),
    ];
    assemble(v, 0.25)
}

/// The d₁-subset family together with its constants.
#[derive(Debug)]
pub struct Counterexample {
    pub objective: DistributedObjective,
    pub d1: usize,
    pub d2: usize,
    pub b: f64,
    pub c: f64,
}

impl Counterexample {
    /// Per-step growth of naive DCGD with Top-d₁ from x⁰ = t·(1, …, 1):
    /// each coordinate lies in C(d−1, d₁−1) of the C(d, d₁) subsets, so
    /// x¹ = (1 + η(2b − 1)d₁/d)·x⁰.
    pub fn divergence_factor(&self, eta: f64) -> f64 {
        let d = (self.d1 + self.d2) as f64;
        1.0 + eta * (2.0 * self.b - 1.0) * self.d1 as f64 / d
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u128::from(u64::MAX) {
            return r;
        }
    }
    r
}

/// All d₁-subsets Iⱼ of [d]; aⱼ = −b on Iⱼ and c elsewhere,
/// fⱼ(x) = ⟨aⱼ, x⟩² + ½‖x‖², with b = d₂ + d₂/d₁ and c = d₁ + 1/d₂ + 1.
pub fn counterexample_general(d: usize, d1: usize) -> Result<Counterexample> {
    if d < 3 || d1 == 0 || d1 >= d.div_ceil(2) {
        return Err(Error::InvalidProblem(format!("need d >= 3 and 1 <= d1 < ceil(d/2), got d = {d}, d1 = {d1}")));
    }
    let n = binomial(d, d1);
    if n > u128::from(MAX_NODES) {
        return Err(Error::InvalidProblem(format!("C({d}, {d1}) = {n} nodes exceeds the limit of {MAX_NODES}")));
    }
    let d2 = d - d1;
    let b = d2 as f64 + d2 as f64 / d1 as f64;
    let c = d1 as f64 + 1.0 / d2 as f64 + 1.0;
    let mut vectors = Vec::with_capacity(n as usize);
    let mut subset: Vec<usize> = (0..d1).collect();
    loop {
        let mut a = vec![c; d];
        for &i in &subset {
            a[i] = -b;
        }
        vectors.push(DenseVector::from_vec_unchecked(a));
        // Next subset in lexicographic order.
        let Some(pos) = (0..d1).rev().find(|&i| subset[i] < d - d1 + i) else { break };
        subset[pos] += 1;
        for j in pos + 1..d1 {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(Counterexample { objective: assemble(vectors, 0.5)?, d1, d2, b, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvec;

    #[test]
    fn example1_gradient() {
        let p = example1().unwrap();
        assert_eq!(p.nodes[0].grad(&dvec![1, 1, 1]), dvec![-5.5, 4.5, 4.5]);
        assert_eq!(p.nodes[2].grad(&dvec![2, 2, 2]), dvec![9, 9, -11]);
        assert_eq!(p.nodes[0].smoothness(), 34.5);
        assert_eq!(p.nodes[0].strong_convexity(), 0.5);
        assert_eq!(p.d_const, 0.0);
    }

    #[test]
    fn example1_aggregate_spectrum() {
        let p = example1().unwrap();
        // Eigenvalues of the aggregate Hessian are 7/6, 103/6, 103/6.
        assert!((p.aggregate.strong_convexity() - 7.0 / 6.0).abs() < 1e-12);
        assert!((p.aggregate.smoothness() - 103.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn subset_family() {
        let ce = counterexample_general(7, 3).unwrap();
        assert_eq!(ce.objective.n(), 35);
        assert!((-ce.b * 3.0 + ce.c * 4.0 - 1.0).abs() < 1e-12);
        assert!(ce.b > ce.c + 1.0);
        assert!(counterexample_general(6, 3).is_err());
        assert!(counterexample_general(60, 29).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }
}
