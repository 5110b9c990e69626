use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DistributedObjective, Objective};
use crate::error::{Error, Result};
use crate::vector::DenseVector;

/// f(x) = xᵀAx − yᵀx with A symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
    y: DVector<f64>,
    l: f64,
    mu: f64,
    x_star: DenseVector,
    f_star: f64,
}

fn to_na(x: &DenseVector) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

fn from_na(v: DVector<f64>) -> DenseVector {
    DenseVector::from_vec_unchecked(v.data.into())
}

impl Quadratic {
    /// L and μ are twice the extreme eigenvalues of A, computed here.
    pub fn new(a: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_shapes(&a, &y)?;
        let eig = a.clone().symmetric_eigen().eigenvalues;
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_constants(a, y, 2.0 * hi, 2.0 * lo)
    }

    /// Uses caller-supplied L and μ (valid bounds on the spectrum of 2A).
    pub fn with_constants(a: DMatrix<f64>, y: DVector<f64>, l: f64, mu: f64) -> Result<Self> {
        check_shapes(&a, &y)?;
        if !(mu > 0.0) || !(l >= mu) || !l.is_finite() {
            return Err(Error::InvalidProblem(format!("need L >= mu > 0, got L = {l}, mu = {mu}")));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidProblem("matrix is not positive definite".into()))?;
        let x_star = chol.solve(&y) * 0.5;
        let f_star = -0.5 * y.dot(&x_star);
        Ok(Self { a, y, l, mu, x_star: from_na(x_star), f_star })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.y
    }

    /// The quadratic (1/n) Σ qᵢ.
    pub fn mean(parts: &[Quadratic]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidProblem("no quadratics to average".into()))?;
        let n = parts.len() as f64;
        let mut a = DMatrix::zeros(first.a.nrows(), first.a.ncols());
        let mut y = DVector::zeros(first.y.len());
        for q in parts {
            if q.a.shape() != a.shape() {
                return Err(Error::DimensionMismatch { expected: a.nrows(), actual: q.a.nrows() });
            }
            a += &q.a;
            y += &q.y;
        }
        Self::new(a / n, y / n)
    }
}

fn check_shapes(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::InvalidProblem(format!("matrix must be square and nonempty, got {:?}", a.shape())));
    }
    if y.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), actual: y.len() });
    }
    Ok(())
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let x = to_na(x);
        x.dot(&(&self.a * &x)) - self.y.dot(&x)
    }

    fn grad(&self, x: &DenseVector) -> DenseVector {
        let x = to_na(x);
        from_na(&self.a * &x * 2.0 - &self.y)
    }

    fn value_and_grad(&self, x: &DenseVector) -> (f64, DenseVector) {
        let x = to_na(x);
        let ax = &self.a * &x;
        let value = x.dot(&ax) - self.y.dot(&x);
        (value, from_na(ax * 2.0 - &self.y))
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn minimizer(&self) -> Option<&DenseVector> {
        Some(&self.x_star)
    }

    fn f_star(&self) -> Option<f64> {
        Some(self.f_star)
    }

    /// (x − x⋆)ᵀA(x − x⋆), exact down to tiny gaps.
    fn f_gap(&self, x: &DenseVector) -> Option<f64> {
        let e = to_na(&x.sub(&self.x_star));
        Some(e.dot(&(&self.a * &e)).max(0.0))
    }
}

/// A = QᵀDQ with D ~ uniform(lo, hi) on the diagonal and Q orthogonal.
fn random_spd<R: Rng + ?Sized>(dim: usize, (lo, hi): (f64, f64), rng: &mut R) -> Result<DMatrix<f64>> {
    if dim == 0 {
        return Err(Error::InvalidProblem("dimension must be positive".into()));
    }
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::InvalidProblem(format!("eigenvalue range must satisfy 0 < lo <= hi, got ({lo}, {hi})")));
    }
    let diag = DVector::from_fn(dim, |_, _| if hi > lo { rng.random_range(lo..hi) } else { lo });
    for _attempt in 0..16 {
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        if qr.r().diagonal().iter().all(|r| r.abs() > 1e-10) {
            let q = qr.q();
            let a = q.transpose() * DMatrix::from_diagonal(&diag) * &q;
            // Remove rounding asymmetry.
            return Ok((&a + a.transpose()) * 0.5);
        }
    }
    Err(Error::InvalidProblem("QR factorization kept degenerating".into()))
}

/// xᵀAx − yᵀx with A = QᵀDQ, y ~ uniform(0, 1); L = 2·hi, μ = 2·lo.
pub fn gen_quadratic<R: Rng + ?Sized>(dim: usize, range: (f64, f64), rng: &mut R) -> Result<Quadratic> {
    let a = random_spd(dim, range, rng)?;
    let y = DVector::from_fn(dim, |_, _| rng.random::<f64>());
    Quadratic::with_constants(a, y, 2.0 * range.1, 2.0 * range.0)
}

/// n generated quadratics. With `shared_minimizer` every node is minimized
/// at the same x⋆ ~ uniform(0, 1)ᵈ, so D = 0; otherwise each yᵢ is drawn
/// independently.
pub fn gen_distributed_quadratic<R: Rng + ?Sized>(
    n: usize,
    dim: usize,
    range: (f64, f64),
    shared_minimizer: bool,
    rng: &mut R,
) -> Result<DistributedObjective> {
    if n == 0 {
        return Err(Error::InvalidProblem("need at least one node".into()));
    }
    let x_star = DVector::from_fn(dim, |_, _| rng.random::<f64>());
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        let a = random_spd(dim, range, rng)?;
        let y = if shared_minimizer {
            &a * &x_star * 2.0
        } else {
            DVector::from_fn(dim, |_, _| rng.random::<f64>())
        };
        parts.push(Quadratic::with_constants(a, y, 2.0 * range.1, 2.0 * range.0)?);
    }
    let aggregate = Quadratic::mean(&parts)?;
    let nodes = parts.into_iter().map(|q| Box::new(q) as Box<dyn Objective>).collect();
    DistributedObjective::new(nodes, Box::new(aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn scalar_closed_form() {
        let q = gen_quadratic(1, (3.0, 3.0), &mut stream(0)).unwrap();
        let y = q.linear()[0];
        assert!((q.minimizer().unwrap()[0] - y / 6.0).abs() < 1e-15);
        assert_eq!((q.smoothness(), q.strong_convexity()), (6.0, 6.0));
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        let q = gen_quadratic(100, (1.0, 1000.0), &mut stream(1)).unwrap();
        assert!(q.grad(q.minimizer().unwrap()).norm2() <= 1e-8);
    }

    #[test]
    fn spectrum_within_range() {
        let q = gen_quadratic(20, (1.0, 10.0), &mut stream(2)).unwrap();
        let exact = Quadratic::new(q.matrix().clone(), q.linear().clone()).unwrap();
        assert!(exact.strong_convexity() >= 2.0 - 1e-9 && exact.smoothness() <= 20.0 + 1e-9);
    }

    #[test]
    fn shared_minimizer_has_zero_d() {
        let p = gen_distributed_quadratic(4, 10, (1.0, 2.0), true, &mut stream(3)).unwrap();
        assert!(p.d_const < 1e-20, "{}", p.d_const);
        let p = gen_distributed_quadratic(4, 10, (1.0, 2.0), false, &mut stream(3)).unwrap();
        assert!(p.d_const > 0.0);
    }
}
