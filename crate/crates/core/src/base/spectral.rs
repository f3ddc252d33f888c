//! Spectral embedding from the normalized adjacency `D^{-1/2} A D^{-1/2}`.
//!
//! Row `u` is `[sqrt(|λ_k|) U(u,k)]` over the `d` eigenpairs of largest
//! magnitude. Small graphs use a dense symmetric eigensolver; larger ones a
//! seeded randomized subspace iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MileError, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::operator::{build_operator, PropagationOperator};
use crate::rng;

/// Largest graph solved with the dense eigensolver.
pub const DENSE_LIMIT: usize = 2048;
const POWER_ITERS: usize = 10;
const OVERSAMPLE: usize = 8;
const ZERO_EIGENVALUE: f64 = 1e-12;

/// Eigenpairs kept by the embedder, sorted by decreasing `|λ|`.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// `n x d`, column `k` pairs with `values[k]`.
    pub vectors: Matrix,
}

pub fn spectral_embed(g: &Graph, dim: usize, seed: u64) -> Result<Matrix> {
    let pairs = top_eigenpairs(g, dim, seed)?;
    let n = g.node_count();
    // eigenvalues at rounding level are zero; their vectors span an arbitrary
    // basis of the null space and would only inject noise
    let scale: Vec<f64> = pairs
        .values
        .iter()
        .map(|l| {
            if l.abs() <= ZERO_EIGENVALUE {
                0.0
            } else {
                l.abs().sqrt()
            }
        })
        .collect();
    Ok(Matrix::from_fn(n, dim, |u, k| {
        scale[k] * pairs.vectors[(u, k)]
    }))
}

/// Top-`dim` eigenpairs of the normalized adjacency by magnitude, with the
/// sign of each vector fixed so that its largest-magnitude entry is positive.
pub fn top_eigenpairs(g: &Graph, dim: usize, seed: u64) -> Result<Eigenpairs> {
    let n = g.node_count();
    if dim == 0 || dim > n {
        return Err(MileError::Dimension(format!(
            "spectral embedding needs 1 <= dim <= node count, got dim {dim} for {n} nodes"
        )));
    }
    let op = build_operator(g, 0.0);
    let (values, vectors) = if n <= DENSE_LIMIT {
        dense_eigen(&op)
    } else {
        randomized_eigen(&op, dim, seed)
    };
    Ok(select(values, vectors, dim))
}

fn dense_eigen(op: &PropagationOperator) -> (Vec<f64>, DMatrix<f64>) {
    let n = op.dim();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for (v, x) in op.row(u) {
            s[(u, v)] = x;
        }
    }
    let eig = SymmetricEigen::new(s);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn apply(op: &PropagationOperator, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = op.dim();
    let mut out = DMatrix::<f64>::zeros(n, x.ncols());
    let mut buf = vec![0.0; n];
    for c in 0..x.ncols() {
        let col: Vec<f64> = x.column(c).iter().copied().collect();
        op.apply_vec(&col, &mut buf);
        out.column_mut(c).copy_from_slice(&buf);
    }
    out
}

/// Rayleigh-Ritz on a subspace refined by power iterations on a Gaussian
/// sketch.
fn randomized_eigen(op: &PropagationOperator, dim: usize, seed: u64) -> (Vec<f64>, DMatrix<f64>) {
    let n = op.dim();
    let k = (dim + OVERSAMPLE).min(n);
    let mut r = rng::seeded(seed);
    let omega = DMatrix::<f64>::from_fn(n, k, |_, _| StandardNormal.sample(&mut r));
    let mut q = apply(op, &omega).qr().q();
    for _ in 0..POWER_ITERS {
        q = apply(op, &q).qr().q();
    }
    let sq = apply(op, &q);
    let mut b = q.transpose() * &sq;
    // symmetrize away rounding before the small eigensolve
    b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);
    let vectors = &q * eig.eigenvectors;
    (eig.eigenvalues.iter().copied().collect(), vectors)
}

fn select(values: Vec<f64>, vectors: DMatrix<f64>, dim: usize) -> Eigenpairs {
    let n = vectors.nrows();
    // magnitudes equal up to rounding tie, and then the positive value wins
    let quant = |x: f64| (x.abs() * 1e10).round() as i64;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        quant(values[b])
            .cmp(&quant(values[a]))
            .then(values[b].total_cmp(&values[a]))
            .then(a.cmp(&b))
    });
    order.truncate(dim);

    let mut out = Matrix::zeros(n, dim);
    for (k, &src) in order.iter().enumerate() {
        let col = vectors.column(src);
        let peak = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = col
            .iter()
            .position(|x| x.abs() >= peak * (1.0 - 1e-9))
            .unwrap_or(0);
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for u in 0..n {
            out[(u, k)] = sign * col[u];
        }
    }
    Eigenpairs {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: out,
    }
}
