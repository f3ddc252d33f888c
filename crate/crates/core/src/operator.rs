//! Renormalized adjacency `S = D̃^{-1/2} Ã D̃^{-1/2}` with `Ã = A + λD`.
//!
//! With `λ = 0` this is the plain normalized adjacency used by the spectral
//! embedder. Rows of zero-degree nodes are empty, so those nodes neither send
//! nor receive anything through `S`.

use crate::error::{MileError, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

/// Symmetric sparse operator in CSR form.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationOperator {
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn build_operator(g: &Graph, lambda: f64) -> PropagationOperator {
    let n = g.node_count();
    let deg = g.degrees();
    let scale: Vec<f64> = deg
        .iter()
        .map(|&d| {
            let dt = d * (1.0 + lambda);
            if dt > 0.0 {
                1.0 / dt.sqrt()
            } else {
                0.0
            }
        })
        .collect();

    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut cols = Vec::with_capacity(g.neighbor_ids().len() + n);
    let mut vals = Vec::with_capacity(g.neighbor_ids().len() + n);
    for u in 0..n {
        if deg[u] > 0.0 {
            // a zero diagonal is not stored
            let mut diag_done = lambda == 0.0;
            for (v, w) in g.row(u) {
                if v > u && !diag_done {
                    cols.push(u);
                    vals.push(lambda * deg[u] * scale[u] * scale[u]);
                    diag_done = true;
                }
                let a = if v == u {
                    diag_done = true;
                    w + lambda * deg[u]
                } else {
                    w
                };
                cols.push(v);
                let pair = scale[u.min(v)] * scale[u.max(v)];
                vals.push(a * pair);
            }
            if !diag_done {
                cols.push(u);
                vals.push(lambda * deg[u] * scale[u] * scale[u]);
            }
        }
        row_offsets.push(cols.len());
    }
    PropagationOperator {
        row_offsets,
        cols,
        vals,
    }
}

impl PropagationOperator {
    pub fn dim(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[u]..self.row_offsets[u + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Entry `S(u, v)`.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        let span = self.row_offsets[u]..self.row_offsets[u + 1];
        match self.cols[span.clone()].binary_search(&v) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `S * x`, accumulated row by row in column order.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.dim() {
            return Err(MileError::Dimension(format!(
                "operator of size {} applied to {} rows",
                self.dim(),
                x.rows()
            )));
        }
        let d = x.cols();
        let mut out = Matrix::zeros(x.rows(), d);
        for u in 0..self.dim() {
            let dst = out.row_mut(u);
            for (v, s) in self.row(u) {
                for (o, &xv) in dst.iter_mut().zip(x.row(v)) {
                    *o += s * xv;
                }
            }
        }
        Ok(out)
    }

    /// `S * x` for a single vector.
    pub fn apply_vec(&self, x: &[f64], out: &mut [f64]) {
        for (u, o) in out.iter_mut().enumerate() {
            *o = self.row(u).map(|(v, s)| s * x[v]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (u, row) in m.iter_mut().enumerate() {
            for (v, s) in self.row(u) {
                row[v] = s;
            }
        }
        m
    }
}
