use std::cmp::Ordering;

use rand::Rng;

use super::payload::Payload;
use crate::error::{Error, Result};
use crate::vector::DenseVector;

/// Magnitude order with ties broken towards the lower index: `a` ranks
/// before `b` when |x_a| > |x_b|, or the magnitudes are equal and a < b.
fn rank(x: &[f64], a: usize, b: usize) -> Ordering {
    x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b))
}

/// Indices of the `k` largest-magnitude entries, in increasing index order.
pub(crate) fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k, |&a, &b| rank(x, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

fn sparse(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Payload {
    Payload::Sparse { dim, indices: indices.into_iter().map(|i| i as u32).collect(), values }
}

pub(crate) fn top_k(x: &DenseVector, k: usize) -> Payload {
    let idx = top_k_indices(x.as_slice(), k);
    let values = idx.iter().map(|&i| x[i]).collect();
    sparse(x.dim(), idx, values)
}

pub(crate) fn rand_k<R: Rng + ?Sized>(x: &DenseVector, k: usize, rng: &mut R) -> Payload {
    let d = x.dim();
    let mut idx = rand::seq::index::sample(rng, d, k).into_vec();
    idx.sort_unstable();
    let scale = d as f64 / k as f64;
    let values = idx.iter().map(|&i| scale * x[i]).collect();
    sparse(d, idx, values)
}

/// Inclusion probability of coordinate `i`; a single entry is broadcast.
pub(crate) fn inclusion_probability(p: &[f64], i: usize) -> f64 {
    if p.len() == 1 {
        p[0]
    } else {
        p[i]
    }
}

pub(crate) fn biased_random<R: Rng + ?Sized>(x: &DenseVector, p: &[f64], rng: &mut R) -> Payload {
    let d = x.dim();
    let mut idx = Vec::new();
    for i in 0..d {
        // One draw per coordinate keeps the stream position independent of x.
        let u: f64 = rng.random();
        if u < inclusion_probability(p, i) {
            idx.push(i);
        }
    }
    let values = idx.iter().map(|&i| x[i]).collect();
    sparse(d, idx, values)
}

pub(crate) fn adaptive_random<R: Rng + ?Sized>(x: &DenseVector, rng: &mut R) -> Result<Payload> {
    let total = x.norm1();
    if total == 0.0 {
        return Err(Error::ZeroVector { operator: "adaptive_random_sparse" });
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    // Fall back to the last nonzero coordinate if rounding leaves target ≥ acc.
    let mut chosen = x.iter().rposition(|&v| v != 0.0).expect("nonzero vector");
    for (i, &v) in x.iter().enumerate() {
        acc += v.abs();
        if v != 0.0 && target < acc {
            chosen = i;
            break;
        }
    }
    Ok(sparse(x.dim(), vec![chosen], vec![x[chosen]]))
}
