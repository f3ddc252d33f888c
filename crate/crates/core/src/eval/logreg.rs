//! One-vs-rest L2-regularized logistic regression trained by full-batch
//! gradient descent with a backtracking step size.

use crate::error::{MileError, Result};
use crate::matrix::{dot, Matrix};

use super::LabelSet;

pub const DEFAULT_REG: f64 = 1.0;
pub const DEFAULT_ITERS: usize = 200;

const MAX_HALVINGS: usize = 60;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log-loss plus `reg / (2N) ‖w‖²`; the bias is not regularized.
pub fn logistic_objective(x: &Matrix, y: &[f64], w: &[f64], b: f64, reg: f64) -> f64 {
    let n = x.rows().max(1) as f64;
    let data: f64 = (0..x.rows())
        .map(|i| {
            let z = dot(x.row(i), w) + b;
            softplus(z) - y[i] * z
        })
        .sum();
    data / n + reg / (2.0 * n) * dot(w, w)
}

/// Gradient of [`logistic_objective`] with respect to `(w, b)`.
pub fn logistic_gradient(x: &Matrix, y: &[f64], w: &[f64], b: f64, reg: f64) -> (Vec<f64>, f64) {
    let n = x.rows().max(1) as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for i in 0..x.rows() {
        let r = sigmoid(dot(x.row(i), w) + b) - y[i];
        for (g, &xv) in gw.iter_mut().zip(x.row(i)) {
            *g += r * xv;
        }
        gb += r;
    }
    for (g, &wv) in gw.iter_mut().zip(w) {
        *g = *g / n + reg / n * wv;
    }
    (gw, gb / n)
}

/// Binary model from zero initialization. The step doubles after every
/// accepted move and halves until the Armijo condition holds.
pub fn train_binary(x: &Matrix, y: &[f64], reg: f64, iters: usize) -> (Vec<f64>, f64) {
    let d = x.cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut step = 1.0;
    let mut f = logistic_objective(x, y, &w, b, reg);
    for _ in 0..iters {
        let (gw, gb) = logistic_gradient(x, y, &w, b, reg);
        let gnorm = dot(&gw, &gw) + gb * gb;
        if gnorm <= 1e-24 {
            break;
        }
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cw: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let cb = b - step * gb;
            let cf = logistic_objective(x, y, &cw, cb, reg);
            if cf <= f - 0.5 * step * gnorm {
                w = cw;
                b = cb;
                f = cf;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    (w, b)
}

/// One binary classifier per label.
#[derive(Clone, Debug, PartialEq)]
pub struct OvrModel {
    /// `label_count x dim`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl OvrModel {
    pub fn label_count(&self) -> usize {
        self.biases.len()
    }

    /// Probability of every label for every row of `x`.
    pub fn scores(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.weights.cols() {
            return Err(MileError::Dimension(format!(
                "features have dimension {} but the model expects {}",
                x.cols(),
                self.weights.cols()
            )));
        }
        Ok(Matrix::from_fn(x.rows(), self.label_count(), |i, l| {
            sigmoid(dot(x.row(i), self.weights.row(l)) + self.biases[l])
        }))
    }
}

pub fn train_ovr_logreg(x: &Matrix, y: &LabelSet, reg: f64, iters: usize) -> Result<OvrModel> {
    if x.rows() != y.node_count() {
        return Err(MileError::Dimension(format!(
            "{} feature rows but {} label rows",
            x.rows(),
            y.node_count()
        )));
    }
    let mut weights = Matrix::zeros(y.label_count(), x.cols());
    let mut biases = Vec::with_capacity(y.label_count());
    for l in 0..y.label_count() {
        let target: Vec<f64> = (0..x.rows())
            .map(|i| if y.has(i, l) { 1.0 } else { 0.0 })
            .collect();
        let (w, b) = train_binary(x, &target, reg, iters);
        weights.row_mut(l).copy_from_slice(&w);
        biases.push(b);
    }
    Ok(OvrModel { weights, biases })
}

/// Predicts the `counts[i]` highest-scoring labels for row `i`; equal
/// scores favor the lower label id.
pub fn predict_multilabel(model: &OvrModel, x: &Matrix, counts: &[usize]) -> Result<LabelSet> {
    if counts.len() != x.rows() {
        return Err(MileError::Dimension(format!(
            "{} label counts for {} rows",
            counts.len(),
            x.rows()
        )));
    }
    let scores = model.scores(x)?;
    let mut out = Vec::with_capacity(x.rows());
    for (i, &k) in counts.iter().enumerate() {
        let row = scores.row(i);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        order.truncate(k);
        out.push(order);
    }
    LabelSet::new(model.label_count(), out)
}
