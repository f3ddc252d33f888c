//! Full-batch Adam training of the refiner weights.

use crate::error::{MileError, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::operator::{build_operator, PropagationOperator};

use super::gcn::reconstruction_grad;
use super::RefinerParams;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Weights start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 200,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MileError::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(MileError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.init_scale >= 0.0) {
            return Err(MileError::Config("init scale must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: RefinerParams,
    /// Loss before every update plus the loss after the last one, so
    /// `losses.len() == epochs + 1`.
    pub losses: Vec<f64>,
}

impl TrainOutcome {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("trajectory is never empty")
    }
}

struct Adam {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Adam {
    fn new(params: &RefinerParams) -> Self {
        let zeros: Vec<Matrix> = params
            .layers()
            .iter()
            .map(|l| Matrix::zeros(l.rows(), l.cols()))
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut RefinerParams, grads: &[Matrix], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (k, theta) in params.layers_mut().iter_mut().enumerate() {
            let m = self.m[k].as_mut_slice();
            let v = self.v[k].as_mut_slice();
            for (i, (w, &g)) in theta
                .as_mut_slice()
                .iter_mut()
                .zip(grads[k].as_slice())
                .enumerate()
            {
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                *w -= cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Trains on the self-copy objective: `E_m` is both input and target on
/// the coarsest graph.
pub fn train(
    e_m: &Matrix,
    g_m: &Graph,
    cfg: &TrainConfig,
    lambda: f64,
    layers: usize,
) -> Result<TrainOutcome> {
    let op = build_operator(g_m, lambda);
    train_reconstruction(e_m, e_m, &op, cfg, lambda, layers)
}

/// Minimizes `‖target − H(input)‖² / n` from a seeded initialization.
pub fn train_reconstruction(
    input: &Matrix,
    target: &Matrix,
    op: &PropagationOperator,
    cfg: &TrainConfig,
    lambda: f64,
    layers: usize,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if layers == 0 {
        return Err(MileError::Config("refiner needs at least one layer".into()));
    }
    let mut params = RefinerParams::random(input.dim(), layers, lambda, cfg.init_scale, cfg.seed);
    let mut adam = Adam::new(&params);
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let (loss, grads) = reconstruction_grad(input, target, op, &params)?;
        if !loss.is_finite() {
            return Err(MileError::Divergence { epoch, loss });
        }
        losses.push(loss);
        if epoch == cfg.epochs {
            break;
        }
        adam.step(&mut params, &grads, cfg);
        if !params.is_finite() {
            return Err(MileError::Divergence {
                epoch: epoch + 1,
                loss: f64::NAN,
            });
        }
    }
    Ok(TrainOutcome { params, losses })
}
