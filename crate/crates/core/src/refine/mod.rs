//! Embedding refinement: projection from a coarse level and the
//! graph-convolution model that smooths projected embeddings over the finer
//! graph, plus the simpler refinement variants used for ablations.

pub mod gcn;
pub mod train;

use std::io::{BufRead, Write};

use rand::Rng;

use crate::coarsen::MatchingMatrix;
use crate::error::{MileError, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::operator::build_operator;
use crate::rng;

pub use gcn::{gcn_forward, grad, loss_double_base, loss_self, reconstruction_grad};
pub use train::{train, train_reconstruction, TrainConfig, TrainOutcome};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Activation {
    #[default]
    Tanh,
}

/// Weights of an `l`-layer refiner, all `d x d`, plus its self-loop weight.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinerParams {
    layers: Vec<Matrix>,
    lambda: f64,
    activation: Activation,
}

impl RefinerParams {
    pub fn new(layers: Vec<Matrix>, lambda: f64) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(MileError::Config("refiner needs at least one layer".into()));
        };
        let d = first.rows();
        if layers.iter().any(|l| l.rows() != d || l.cols() != d) {
            return Err(MileError::Dimension(format!(
                "every refiner layer must be {d}x{d}"
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(MileError::Config(format!("lambda {lambda} outside [0, 1]")));
        }
        let p = RefinerParams {
            layers,
            lambda,
            activation: Activation::Tanh,
        };
        if !p.is_finite() {
            return Err(MileError::Config("refiner weights must be finite".into()));
        }
        Ok(p)
    }

    pub fn zeros(dim: usize, layers: usize, lambda: f64) -> Self {
        RefinerParams {
            layers: vec![Matrix::zeros(dim, dim); layers],
            lambda,
            activation: Activation::Tanh,
        }
    }

    /// Weights drawn uniformly from `[-scale, scale]`.
    pub fn random(dim: usize, layers: usize, lambda: f64, scale: f64, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let layers = (0..layers)
            .map(|_| {
                Matrix::from_fn(dim, dim, |_, _| {
                    if scale > 0.0 {
                        r.random_range(-scale..=scale)
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        RefinerParams {
            layers,
            lambda,
            activation: Activation::Tanh,
        }
    }

    pub fn dim(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Matrix] {
        &mut self.layers
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Matrix::is_finite)
    }
}

/// Writes `l d lambda`, then every layer as `d` lines of `d` values.
pub fn write_params<W: Write>(p: &RefinerParams, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", p.layer_count(), p.dim(), p.lambda())?;
    for theta in p.layers() {
        for r in 0..theta.rows() {
            let line: Vec<String> = theta.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_params<R: BufRead>(reader: R) -> Result<RefinerParams> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.as_ref().is_ok_and(|s| s.trim().is_empty()));
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| MileError::format(1, "missing `layers dim lambda` header"))?;
    let header = header.map_err(|e| MileError::format(lineno, e.to_string()))?;
    let f: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || MileError::format(lineno, "expected `layers dim lambda`");
    let [l, d, lambda] = f[..] else {
        return Err(bad_header());
    };
    let l: usize = l.parse().map_err(|_| bad_header())?;
    let d: usize = d.parse().map_err(|_| bad_header())?;
    let lambda: f64 = lambda.parse().map_err(|_| bad_header())?;
    if l == 0 || d == 0 {
        return Err(MileError::format(lineno, "layers and dim must be >= 1"));
    }

    let mut layers = Vec::with_capacity(l);
    for _ in 0..l {
        let mut values = Vec::with_capacity(d * d);
        for _ in 0..d {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| MileError::format(lineno, "truncated weight matrix"))?;
            let line = line.map_err(|e| MileError::format(lineno, e.to_string()))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| MileError::format(lineno, "malformed weight"))?;
            if row.len() != d || row.iter().any(|v| !v.is_finite()) {
                return Err(MileError::format(
                    lineno,
                    format!("expected {d} finite weights"),
                ));
            }
            values.extend(row);
        }
        layers.push(Matrix::from_vec(d, d, values)?);
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(MileError::format(lineno, "unexpected trailing content"));
    }
    RefinerParams::new(layers, lambda)
}

/// Copies every super-node's row to its fine members.
pub fn project(matching: &MatchingMatrix, coarse: &Matrix) -> Result<Matrix> {
    if coarse.rows() != matching.coarse_count() {
        return Err(MileError::Dimension(format!(
            "coarse embedding has {} rows but the matching has {} super-nodes",
            coarse.rows(),
            matching.coarse_count()
        )));
    }
    let d = coarse.dim();
    let mut out = Matrix::zeros(matching.fine_count(), d);
    for (u, &c) in matching.assignment().iter().enumerate() {
        out.row_mut(u).copy_from_slice(coarse.row(c));
    }
    Ok(out)
}

/// How projected embeddings are turned into refined ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum RefineMode {
    /// Graph convolution with weights trained on the coarsest graph.
    #[default]
    Trained,
    /// Graph convolution with seeded random weights and no training.
    Untrained(u64),
    /// Projected embeddings are used as they are.
    ProjectionOnly,
    /// Repeated weighted averaging over each node's neighbors and itself.
    NeighborhoodAverage {
        rounds: usize,
        self_loop_weight: f64,
    },
}

/// A refinement step ready to apply at any level.
#[derive(Clone, Debug, PartialEq)]
pub enum Refiner {
    Gcn(RefinerParams),
    ProjectionOnly,
    NeighborhoodAverage {
        rounds: usize,
        self_loop_weight: f64,
    },
}

impl Refiner {
    pub fn refine(&self, projected: &Matrix, g: &Graph) -> Result<Matrix> {
        if projected.rows() != g.node_count() {
            return Err(MileError::Dimension(format!(
                "embedding has {} rows but the graph has {} nodes",
                projected.rows(),
                g.node_count()
            )));
        }
        match self {
            Refiner::Gcn(params) => {
                let op = build_operator(g, params.lambda());
                gcn_forward(projected, &op, params)
            }
            Refiner::ProjectionOnly => Ok(projected.clone()),
            Refiner::NeighborhoodAverage {
                rounds,
                self_loop_weight,
            } => {
                if *rounds == 0 {
                    return Err(MileError::Config(
                        "averaging needs at least one round".into(),
                    ));
                }
                let mut cur = projected.clone();
                for _ in 0..*rounds {
                    cur = average_neighbors(&cur, g, *self_loop_weight);
                }
                Ok(cur)
            }
        }
    }
}

/// One round of `(s x_u + Σ_v A(u,v) x_v) / (s + Σ_v A(u,v))`. Rows with a
/// zero denominator are kept.
fn average_neighbors(x: &Matrix, g: &Graph, self_loop_weight: f64) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.dim());
    for u in 0..x.rows() {
        let total = self_loop_weight + g.degrees()[u];
        let dst = out.row_mut(u);
        if total <= 0.0 {
            dst.copy_from_slice(x.row(u));
            continue;
        }
        for (o, &v) in dst.iter_mut().zip(x.row(u)) {
            *o = self_loop_weight * v;
        }
        for (v, w) in g.row(u) {
            for (o, &xv) in dst.iter_mut().zip(x.row(v)) {
                *o += w * xv;
            }
        }
        dst.iter_mut().for_each(|o| *o /= total);
    }
    out
}
