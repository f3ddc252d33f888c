//! Graph-convolution forward pass, reconstruction losses and their gradients.

use crate::error::{MileError, Result};
use crate::matrix::Matrix;
use crate::operator::PropagationOperator;

use super::RefinerParams;

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct ForwardCache {
    /// `P_k = S · H_{k-1}` per layer.
    propagated: Vec<Matrix>,
    /// `H_k = tanh(P_k Θ_k)` per layer; the last entry is the output.
    activations: Vec<Matrix>,
}

impl ForwardCache {
    pub(crate) fn output(&self) -> &Matrix {
        self.activations.last().expect("at least one layer")
    }
}

fn check_shapes(x: &Matrix, op: &PropagationOperator, params: &RefinerParams) -> Result<()> {
    if x.rows() != op.dim() {
        return Err(MileError::Dimension(format!(
            "embedding has {} rows but the graph has {} nodes",
            x.rows(),
            op.dim()
        )));
    }
    if x.dim() != params.dim() {
        return Err(MileError::Dimension(format!(
            "embedding dimension {} does not match refiner dimension {}",
            x.dim(),
            params.dim()
        )));
    }
    Ok(())
}

pub(crate) fn forward_cached(
    x: &Matrix,
    op: &PropagationOperator,
    params: &RefinerParams,
) -> Result<ForwardCache> {
    check_shapes(x, op, params)?;
    let mut propagated = Vec::with_capacity(params.layer_count());
    let mut activations: Vec<Matrix> = Vec::with_capacity(params.layer_count());
    for theta in params.layers() {
        let prev = activations.last().unwrap_or(x);
        let p = op.apply(prev)?;
        let h = p.matmul(theta)?.map(f64::tanh);
        propagated.push(p);
        activations.push(h);
    }
    Ok(ForwardCache {
        propagated,
        activations,
    })
}

/// `H_l` of the stacked layers `H_k = tanh(S H_{k-1} Θ_k)` with `H_0 = x`.
pub fn gcn_forward(x: &Matrix, op: &PropagationOperator, params: &RefinerParams) -> Result<Matrix> {
    let mut cache = forward_cached(x, op, params)?;
    Ok(cache.activations.pop().expect("at least one layer"))
}

/// `‖target − H(input)‖² / n`, shared by both training objectives.
pub fn reconstruction_loss(
    input: &Matrix,
    target: &Matrix,
    op: &PropagationOperator,
    params: &RefinerParams,
) -> Result<f64> {
    let out = gcn_forward(input, op, params)?;
    Ok(target.distance_sq(&out)? / target.rows().max(1) as f64)
}

/// Self-copy loss: the coarsest embedding reconstructed from itself.
pub fn loss_self(e_m: &Matrix, op: &PropagationOperator, params: &RefinerParams) -> Result<f64> {
    reconstruction_loss(e_m, e_m, op, params)
}

/// Loss against the projection of an embedding from one level coarser.
pub fn loss_double_base(
    e_m: &Matrix,
    e_m1: &Matrix,
    matching: &crate::coarsen::MatchingMatrix,
    op: &PropagationOperator,
    params: &RefinerParams,
) -> Result<f64> {
    let projected = super::project(matching, e_m1)?;
    reconstruction_loss(&projected, e_m, op, params)
}

/// Gradients of `‖target − H(input)‖² / n` with respect to every `Θ_k`,
/// together with the loss at `params`.
pub fn reconstruction_grad(
    input: &Matrix,
    target: &Matrix,
    op: &PropagationOperator,
    params: &RefinerParams,
) -> Result<(f64, Vec<Matrix>)> {
    let cache = forward_cached(input, op, params)?;
    target.same_shape(cache.output())?;
    let scale = 2.0 / target.rows().max(1) as f64;
    let out = cache.output();
    let loss = target.distance_sq(out)? / target.rows().max(1) as f64;

    let mut upstream = Matrix::from_fn(out.rows(), out.cols(), |r, c| {
        scale * (out[(r, c)] - target[(r, c)])
    });
    let mut grads = vec![Matrix::zeros(0, 0); params.layer_count()];
    for k in (0..params.layer_count()).rev() {
        let h = &cache.activations[k];
        // through tanh: tanh' = 1 - tanh^2
        let gz = Matrix::from_fn(h.rows(), h.cols(), |r, c| {
            upstream[(r, c)] * (1.0 - h[(r, c)] * h[(r, c)])
        });
        grads[k] = cache.propagated[k].t_matmul(&gz)?;
        if k > 0 {
            // S is symmetric, so Sᵀ (G Θᵀ) = S (G Θᵀ)
            upstream = op.apply(&gz.matmul_t(&params.layers()[k])?)?;
        }
    }
    Ok((loss, grads))
}

/// Gradient of the self-copy loss.
pub fn grad(e_m: &Matrix, op: &PropagationOperator, params: &RefinerParams) -> Result<Vec<Matrix>> {
    reconstruction_grad(e_m, e_m, op, params).map(|(_, g)| g)
}
