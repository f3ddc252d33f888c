//! End-to-end multi-level embedding: coarsen, embed the coarsest graph,
//! train the refiner once, then project and refine level by level.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::base::{base_embed_with_work, BaseEmbedderConfig, BaseWork};
use crate::coarsen::{
    coarsen_step_with, coarsen_with, CoarseningChain, Matcher, DEFAULT_MIN_NODES,
};
use crate::error::{MileError, Result};
use crate::graph::Graph;
use crate::matrix::EmbeddingMatrix;
use crate::operator::build_operator;
use crate::refine::{
    project, train, train_reconstruction, RefineMode, Refiner, RefinerParams, TrainConfig,
};
use crate::rng::{phase_seed, Phase};

#[derive(Clone, Debug, PartialEq)]
pub struct MileConfig {
    /// Requested coarsening levels `m`.
    pub levels: usize,
    /// Base embedder settings; the embedding dimension lives here.
    pub base: BaseEmbedderConfig,
    pub refine_mode: RefineMode,
    pub lambda: f64,
    pub gcn_layers: usize,
    pub train: TrainConfig,
    pub min_nodes: usize,
    pub matcher: Matcher,
    pub seed: u64,
}

impl Default for MileConfig {
    fn default() -> Self {
        MileConfig::new(0, BaseEmbedderConfig::default(), 0)
    }
}

impl MileConfig {
    /// Config with default refinement settings. The base embedder and refiner
    /// initialization draw seeds derived from `seed`.
    pub fn new(levels: usize, base: BaseEmbedderConfig, seed: u64) -> Self {
        let mut cfg = MileConfig {
            levels,
            base,
            refine_mode: RefineMode::Trained,
            lambda: 0.05,
            gcn_layers: 2,
            train: TrainConfig::default(),
            min_nodes: DEFAULT_MIN_NODES,
            matcher: Matcher::Hybrid,
            seed,
        };
        cfg.reseed(seed);
        cfg
    }

    /// Resets the master seed and every phase seed derived from it.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.base.seed = phase_seed(seed, Phase::Base);
        self.train.seed = phase_seed(seed, Phase::RefinerInit);
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.train.validate()?;
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(MileError::Config(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        if self.gcn_layers == 0 {
            return Err(MileError::Config("gcn layers must be >= 1".into()));
        }
        if let RefineMode::NeighborhoodAverage {
            rounds,
            self_loop_weight,
        } = self.refine_mode
        {
            if rounds == 0 || !(self_loop_weight >= 0.0) {
                return Err(MileError::Config(
                    "averaging needs rounds >= 1 and a non-negative self-loop weight".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub coarsen_ms: f64,
    pub base_ms: f64,
    pub train_ms: f64,
    pub refine_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub requested_levels: usize,
    pub effective_levels: usize,
    /// Sizes of `G_0..G_m` for the levels actually used.
    pub levels: Vec<LevelStats>,
    pub timings: Timings,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    /// Work summed over every base embedding call.
    pub base_work: BaseWork,
    pub base_runs: usize,
    pub training_runs: usize,
    /// Graph one level below the coarsest, built only for double-base training.
    pub extra_level: Option<LevelStats>,
    /// Peak resident set size in KiB, where the platform reports it.
    pub peak_rss_kb: Option<u64>,
}

impl RunReport {
    fn record_chain(&mut self, chain: &CoarseningChain) {
        self.requested_levels = chain.requested_levels();
        self.effective_levels = chain.levels();
        self.levels = chain.graphs().iter().map(stats).collect();
    }
}

fn stats(g: &Graph) -> LevelStats {
    LevelStats {
        nodes: g.node_count(),
        edges: g.edge_count(),
    }
}

/// An error together with the report gathered up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: MileError,
    pub report: RunReport,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Peak resident set (`VmHWM`) from `/proc/self/status`.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.split_whitespace().next()?.parse().ok())
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct MileRun {
    pub embedding: EmbeddingMatrix,
    pub report: RunReport,
    /// Weights of the graph-convolution refiner, when one was used.
    pub params: Option<RefinerParams>,
}

/// Runs the full pipeline with the self-copy training objective.
pub fn mile_embed(
    g: &Graph,
    cfg: &MileConfig,
) -> std::result::Result<(EmbeddingMatrix, RunReport), RunFailure> {
    mile_run(g, cfg, false).map(|r| (r.embedding, r.report))
}

/// Like [`mile_embed`], but the refiner learns to map the projection of an
/// embedding of one extra coarsening level onto the coarsest embedding.
pub fn mile_embed_double_base(
    g: &Graph,
    cfg: &MileConfig,
) -> std::result::Result<(EmbeddingMatrix, RunReport), RunFailure> {
    mile_run(g, cfg, true).map(|r| (r.embedding, r.report))
}

/// Either pipeline variant, also returning the refiner weights.
pub fn mile_run(
    g: &Graph,
    cfg: &MileConfig,
    double_base: bool,
) -> std::result::Result<MileRun, RunFailure> {
    let mut report = RunReport::default();
    let out = run_inner(g, cfg, double_base, &mut report);
    report.peak_rss_kb = peak_rss_kb();
    match out {
        Ok((embedding, params)) => Ok(MileRun {
            embedding,
            report,
            params,
        }),
        Err(error) => Err(RunFailure { error, report }),
    }
}

fn base_phase(g: &Graph, cfg: &MileConfig, report: &mut RunReport) -> Result<EmbeddingMatrix> {
    let t = Instant::now();
    let (e, work) = base_embed_with_work(g, &cfg.base)?;
    report.timings.base_ms += ms_since(t);
    report.base_work.walk_steps += work.walk_steps;
    report.base_work.sgns_pairs += work.sgns_pairs;
    report.base_work.eigen_dim += work.eigen_dim;
    report.base_runs += 1;
    Ok(e)
}

fn run_inner(
    g: &Graph,
    cfg: &MileConfig,
    double_base: bool,
    report: &mut RunReport,
) -> Result<(EmbeddingMatrix, Option<RefinerParams>)> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(MileError::Dimension("cannot embed an empty graph".into()));
    }

    let t = Instant::now();
    let chain = coarsen_with(g, cfg.levels, cfg.min_nodes, cfg.matcher);
    report.record_chain(&chain);
    let m = chain.levels();
    let extra = double_base.then(|| coarsen_step_with(chain.coarsest(), cfg.matcher, m));
    if let Some((_, g_extra)) = &extra {
        report.extra_level = Some(stats(g_extra));
    }
    report.timings.coarsen_ms = if m > 0 || extra.is_some() {
        ms_since(t)
    } else {
        0.0
    };

    let g_m = chain.coarsest();
    let e_m = base_phase(g_m, cfg, report)?;
    let e_extra = match &extra {
        Some((_, g_extra)) => Some(base_phase(g_extra, cfg, report)?),
        None => None,
    };

    // nothing to refine when no coarsening happened, unless the double-base
    // objective still asks for its training run
    if m == 0 && extra.is_none() {
        return Ok((e_m, None));
    }

    let t = Instant::now();
    let refiner = match &cfg.refine_mode {
        RefineMode::Trained => {
            let outcome = match (&extra, &e_extra) {
                (Some((matching, _)), Some(e_next)) => {
                    let input = project(matching, e_next)?;
                    let op = build_operator(g_m, cfg.lambda);
                    train_reconstruction(&input, &e_m, &op, &cfg.train, cfg.lambda, cfg.gcn_layers)?
                }
                _ => train(&e_m, g_m, &cfg.train, cfg.lambda, cfg.gcn_layers)?,
            };
            report.training_runs += 1;
            report.initial_loss = Some(outcome.initial_loss());
            report.final_loss = Some(outcome.final_loss());
            Refiner::Gcn(outcome.params)
        }
        RefineMode::Untrained(seed) => Refiner::Gcn(RefinerParams::random(
            cfg.dim(),
            cfg.gcn_layers,
            cfg.lambda,
            cfg.train.init_scale,
            *seed,
        )),
        RefineMode::ProjectionOnly => Refiner::ProjectionOnly,
        RefineMode::NeighborhoodAverage {
            rounds,
            self_loop_weight,
        } => Refiner::NeighborhoodAverage {
            rounds: *rounds,
            self_loop_weight: *self_loop_weight,
        },
    };
    report.timings.train_ms = ms_since(t);

    let t = Instant::now();
    let mut e = e_m;
    for level in (0..m).rev() {
        let projected = project(&chain.matchings()[level], &e)?;
        e = refiner.refine(&projected, chain.graph(level))?;
    }
    report.timings.refine_ms = if m > 0 { ms_since(t) } else { 0.0 };
    let params = match refiner {
        Refiner::Gcn(p) => Some(p),
        _ => None,
    };
    Ok((e, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::base_embed;
    use crate::graph::Edge;

    fn path(n: usize) -> Graph {
        let e: Vec<Edge> = (1..n).map(|i| Edge::unit(i - 1, i)).collect();
        Graph::from_edge_list(&e, None).unwrap()
    }

    fn ring_of_cliques(cliques: usize, size: usize) -> Graph {
        let mut edges = Vec::new();
        for c in 0..cliques {
            let base = c * size;
            for u in 0..size {
                for v in u + 1..size {
                    if (u + v) % 3 != 0 {
                        edges.push(Edge::unit(base + u, base + v));
                    }
                }
            }
            edges.push(Edge::unit(base, ((c + 1) % cliques) * size + 1));
        }
        Graph::from_edge_list(&edges, None).unwrap()
    }

    fn spectral_cfg(levels: usize, dim: usize) -> MileConfig {
        let mut cfg = MileConfig::new(levels, BaseEmbedderConfig::spectral(dim), 7);
        cfg.min_nodes = 1;
        cfg
    }

    #[test]
    fn zero_levels_is_plain_base_embedding() {
        let g = ring_of_cliques(4, 6);
        let cfg = spectral_cfg(0, 4);
        let (e, report) = mile_embed(&g, &cfg).unwrap();
        assert_eq!(e, base_embed(&g, &cfg.base).unwrap());
        assert_eq!(report.timings.coarsen_ms, 0.0);
        assert_eq!(report.timings.refine_ms, 0.0);
        assert_eq!(report.training_runs, 0);
        assert_eq!(report.levels.len(), 1);
    }

    #[test]
    fn projection_only_copies_coarsest_rows() {
        let g = ring_of_cliques(5, 6);
        let mut cfg = spectral_cfg(2, 3);
        cfg.refine_mode = RefineMode::ProjectionOnly;
        let (e, report) = mile_embed(&g, &cfg).unwrap();
        assert_eq!(report.effective_levels, 2);
        let chain = coarsen_with(&g, 2, 1, Matcher::Hybrid);
        let coarse = base_embed(chain.coarsest(), &cfg.base).unwrap();
        for (u, c) in chain.flat_assignment().into_iter().enumerate() {
            assert_eq!(e.row(u), coarse.row(c));
        }
        assert_eq!(report.training_runs, 0);
    }

    #[test]
    fn refinement_separates_matched_path_ends() {
        let g = path(8);
        let cfg = spectral_cfg(2, 2);
        let (e, report) = mile_embed(&g, &cfg).unwrap();
        assert_eq!((e.rows(), e.dim()), (8, 2));
        assert_eq!(
            report.levels.iter().map(|l| l.nodes).collect::<Vec<_>>(),
            vec![8, 4, 2]
        );
        assert_eq!(report.training_runs, 1);
        // 0 and 1 share a super-node but have different neighborhoods
        assert_ne!(e.row(0), e.row(1));
        assert!(e.is_finite());
        let final_loss = report.final_loss.unwrap();
        assert!(final_loss <= report.initial_loss.unwrap());
    }

    #[test]
    fn runs_are_deterministic() {
        let g = ring_of_cliques(6, 5);
        let mut cfg = MileConfig::new(2, BaseEmbedderConfig::skip_gram(8), 3);
        cfg.base.walk_length = 10;
        cfg.base.walks_per_node = 2;
        cfg.min_nodes = 1;
        let a = mile_embed(&g, &cfg).unwrap().0;
        let b = mile_embed(&g, &cfg).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn early_stop_is_reported() {
        let g = path(8);
        let mut cfg = spectral_cfg(5, 2);
        cfg.min_nodes = 3;
        let (e, report) = mile_embed(&g, &cfg).unwrap();
        assert_eq!(report.requested_levels, 5);
        assert_eq!(report.effective_levels, 1);
        assert_eq!(e.rows(), 8);
    }

    #[test]
    fn double_base_on_edgeless_graph_matches_self_copy() {
        let g = Graph::empty(6);
        let cfg = spectral_cfg(2, 2);
        let (a, ra) = mile_embed(&g, &cfg).unwrap();
        let (b, rb) = mile_embed_double_base(&g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.effective_levels, 0);
        assert_eq!(rb.base_runs, 2);
        assert_eq!(rb.extra_level, Some(LevelStats { nodes: 6, edges: 0 }));
    }

    #[test]
    fn double_base_does_extra_work() {
        let g = ring_of_cliques(6, 6);
        let cfg = spectral_cfg(1, 4);
        let (e, r) = mile_embed_double_base(&g, &cfg).unwrap();
        assert_eq!(e.rows(), 36);
        assert_eq!(r.base_runs, 2);
        assert_eq!(r.training_runs, 1);
        let extra = r.extra_level.unwrap();
        assert!(extra.nodes < r.levels[1].nodes);
        let (_, single) = mile_embed(&g, &cfg).unwrap();
        assert!(r.base_work.eigen_dim > single.base_work.eigen_dim);
    }

    #[test]
    fn untrained_mode_is_seeded() {
        let g = ring_of_cliques(4, 6);
        let mut cfg = spectral_cfg(1, 3);
        cfg.refine_mode = RefineMode::Untrained(11);
        let a = mile_embed(&g, &cfg).unwrap().0;
        assert_eq!(a, mile_embed(&g, &cfg).unwrap().0);
        assert!(a.as_slice().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn divergence_keeps_report() {
        let g = ring_of_cliques(4, 6);
        let mut cfg = spectral_cfg(1, 3);
        cfg.train.learning_rate = f64::INFINITY;
        let err = mile_embed(&g, &cfg).unwrap_err();
        assert!(matches!(err.error, MileError::Config(_)));

        cfg.train.learning_rate = 1e308;
        let err = mile_embed(&g, &cfg).unwrap_err();
        assert!(matches!(err.error, MileError::Divergence { .. }), "{err}");
        assert_eq!(err.report.levels.len(), 2);
        assert_eq!(err.report.base_runs, 1);
    }

    #[test]
    fn config_validation() {
        let g = path(4);
        let mut cfg = spectral_cfg(1, 2);
        cfg.lambda = 1.5;
        assert!(mile_embed(&g, &cfg).is_err());
        let mut cfg = spectral_cfg(1, 2);
        cfg.gcn_layers = 0;
        assert!(mile_embed(&g, &cfg).is_err());
        assert!(mile_embed(&Graph::empty(0), &spectral_cfg(0, 1)).is_err());
    }
}
