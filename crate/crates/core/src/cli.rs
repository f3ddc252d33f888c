//! Command-line frontend.
//!
//! Exit codes: 0 on success, 2 for input, format and configuration errors,
//! 3 when refiner training diverges.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::base::{base_embed, BaseEmbedderConfig, BaseMethod};
use crate::coarsen::{coarsen_with, read_assignment, write_assignment, Matcher, MatchingMatrix};
use crate::error::{MileError, Result};
use crate::eval::{evaluate, read_labels, sbm_generate, write_labels, EvalConfig};
use crate::graph::{read_graph, write_edge_list, Graph};
use crate::matrix::{read_embedding, write_embedding, EmbeddingMatrix};
use crate::pipeline::{mile_run, MileConfig, RunReport};
use crate::refine::{project, read_params, write_params, RefineMode, Refiner, RefinerParams};
use crate::rng::{phase_seed, Phase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mile", version, about = "Multi-level graph embedding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Coarsen a graph and write every level's edge list and assignment.
    Coarsen(CoarsenArgs),
    /// Run a base embedder directly on a graph.
    Embed(EmbedArgs),
    /// Project an embedding through a matching and refine it on a graph.
    Refine(RefineArgs),
    /// Full pipeline: coarsen, embed the coarsest graph, refine back.
    Run(RunArgs),
    /// Cross-validated node classification on an embedding.
    Eval(EvalArgs),
    /// Generate a labeled stochastic block model graph.
    Sbm(SbmArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    #[value(alias = "deepwalk")]
    Skipgram,
    Spectral,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Trained,
    Untrained,
    Proj,
    Avg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherKind {
    Hybrid,
    Random,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BaseArgs {
    /// Base embedding method.
    #[arg(long, value_enum, default_value_t = BaseKind::Skipgram)]
    pub base: BaseKind,
    /// Embedding file used by `--base external`.
    #[arg(long)]
    pub base_file: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 80)]
    pub walk_length: usize,
    /// Walks started from every node.
    #[arg(long, default_value_t = 10)]
    pub walks: usize,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0.025)]
    pub sgns_lr: f64,
    #[arg(long, default_value_t = 1)]
    pub sgns_epochs: usize,
    /// Worker threads for walks and skip-gram; more than 1 is not reproducible.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl BaseArgs {
    fn config(&self) -> Result<BaseEmbedderConfig> {
        let method = match self.base {
            BaseKind::Skipgram => BaseMethod::RandomWalkSkipGram,
            BaseKind::Spectral => BaseMethod::Spectral,
            BaseKind::External => BaseMethod::External(
                self.base_file
                    .clone()
                    .ok_or_else(|| MileError::Config("--base external needs --base-file".into()))?,
            ),
        };
        Ok(BaseEmbedderConfig {
            method,
            dim: self.dim,
            seed: phase_seed(self.seed, Phase::Base),
            walk_length: self.walk_length,
            walks_per_node: self.walks,
            window: self.window,
            negatives: self.negatives,
            initial_lr: self.sgns_lr,
            epochs_sgns: self.sgns_epochs,
            threads: self.threads.max(1),
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoarsenArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub levels: usize,
    /// Level `i` is written to `<prefix>.level<i>.edges` and its assignment
    /// from level `i-1` to `<prefix>.level<i>.assign`.
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_nodes: usize,
    #[arg(long, value_enum, default_value_t = MatcherKind::Hybrid)]
    pub matcher: MatcherKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub base: BaseArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RefineArgs {
    /// Embedding of the coarser level (or of this level without a matching).
    #[arg(long)]
    pub embedding: PathBuf,
    /// Graph of the level being refined.
    #[arg(long)]
    pub graph: PathBuf,
    /// Assignment file from this level to the coarser one; identity if absent.
    #[arg(long)]
    pub matching: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeKind::Trained)]
    pub mode: ModeKind,
    /// Refiner weights, required for `--mode trained`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2)]
    pub gcn_layers: usize,
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 2)]
    pub avg_rounds: usize,
    #[arg(long, default_value_t = 1.0)]
    pub avg_self_loop: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Report JSON path; defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    #[command(flatten)]
    pub base: BaseArgs,
    #[arg(long, value_enum, default_value_t = ModeKind::Trained)]
    pub mode: ModeKind,
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2)]
    pub gcn_layers: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 128)]
    pub min_nodes: usize,
    #[arg(long, value_enum, default_value_t = MatcherKind::Hybrid)]
    pub matcher: MatcherKind,
    #[arg(long, default_value_t = 2)]
    pub avg_rounds: usize,
    #[arg(long, default_value_t = 1.0)]
    pub avg_self_loop: f64,
    /// Train the refiner against an extra coarsening level and second base
    /// embedding instead of the coarsest embedding itself.
    #[arg(long)]
    pub double_base: bool,
    /// Where to save the trained refiner weights.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub reg: f64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Also write the report JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SbmArgs {
    #[arg(long, default_value_t = 5)]
    pub blocks: usize,
    #[arg(long, default_value_t = 200)]
    pub per_block: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub graph_out: PathBuf,
    #[arg(long)]
    pub labels_out: PathBuf,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| MileError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| MileError::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = create(path)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| MileError::io(path, e))
}

fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(open(path)?).map_err(|e| e.with_path(path))
}

fn load_embedding(path: &Path) -> Result<EmbeddingMatrix> {
    read_embedding(open(path)?).map_err(|e| e.with_path(path))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_with(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

fn matcher(kind: MatcherKind, seed: u64) -> Matcher {
    match kind {
        MatcherKind::Hybrid => Matcher::Hybrid,
        MatcherKind::Random => Matcher::Random {
            seed: phase_seed(seed, Phase::Matching),
        },
    }
}

fn refine_mode(kind: ModeKind, seed: u64, rounds: usize, self_loop_weight: f64) -> RefineMode {
    match kind {
        ModeKind::Trained => RefineMode::Trained,
        ModeKind::Untrained => RefineMode::Untrained(phase_seed(seed, Phase::Untrained)),
        ModeKind::Proj => RefineMode::ProjectionOnly,
        ModeKind::Avg => RefineMode::NeighborhoodAverage {
            rounds,
            self_loop_weight,
        },
    }
}

fn level_path(prefix: &Path, level: usize, ext: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(format!(".level{level}.{ext}"));
    PathBuf::from(s)
}

fn cmd_coarsen(a: &CoarsenArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let chain = coarsen_with(&g, a.levels, a.min_nodes.max(1), matcher(a.matcher, a.seed));
    for level in 1..=chain.levels() {
        let gl = chain.graph(level);
        write_with(&level_path(&a.out_prefix, level, "edges"), |out| {
            write_edge_list(gl, out)
        })?;
        let m = &chain.matchings()[level - 1];
        write_with(&level_path(&a.out_prefix, level, "assign"), |out| {
            write_assignment(m, out)
        })?;
    }
    print!("{chain}");
    Ok(())
}

fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let e = base_embed(&g, &a.base.config()?)?;
    write_with(&a.out, |out| write_embedding(&e, out))
}

fn cmd_refine(a: &RefineArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let coarse = load_embedding(&a.embedding)?;
    let matching = match &a.matching {
        Some(p) => read_assignment(open(p)?).map_err(|e| e.with_path(p))?,
        None => MatchingMatrix::identity(coarse.rows()),
    };
    if matching.fine_count() != g.node_count() {
        return Err(MileError::Dimension(format!(
            "matching covers {} nodes but the graph has {}",
            matching.fine_count(),
            g.node_count()
        )));
    }
    let projected = project(&matching, &coarse)?;
    let refiner = match refine_mode(a.mode, a.seed, a.avg_rounds, a.avg_self_loop) {
        RefineMode::Trained => {
            let path = a
                .params
                .as_ref()
                .ok_or_else(|| MileError::Config("--mode trained needs --params".into()))?;
            Refiner::Gcn(read_params(open(path)?).map_err(|e| e.with_path(path))?)
        }
        RefineMode::Untrained(seed) => Refiner::Gcn(RefinerParams::random(
            coarse.dim(),
            a.gcn_layers,
            a.lambda,
            a.init_scale,
            seed,
        )),
        RefineMode::ProjectionOnly => Refiner::ProjectionOnly,
        RefineMode::NeighborhoodAverage {
            rounds,
            self_loop_weight,
        } => Refiner::NeighborhoodAverage {
            rounds,
            self_loop_weight,
        },
    };
    let e = refiner.refine(&projected, &g)?;
    write_with(&a.out, |out| write_embedding(&e, out))
}

fn run_config(a: &RunArgs) -> Result<MileConfig> {
    let mut cfg = MileConfig::new(a.levels, a.base.config()?, a.base.seed);
    cfg.refine_mode = refine_mode(a.mode, a.base.seed, a.avg_rounds, a.avg_self_loop);
    cfg.lambda = a.lambda;
    cfg.gcn_layers = a.gcn_layers;
    cfg.train.learning_rate = a.lr;
    cfg.train.epochs = a.epochs;
    cfg.train.init_scale = a.init_scale;
    cfg.min_nodes = a.min_nodes;
    cfg.matcher = matcher(a.matcher, a.base.seed);
    Ok(cfg)
}

/// Report JSON: the run report's fields plus a `config` echo and, on
/// failure, an `error` message.
pub fn report_json(report: &RunReport, config: &impl Serialize, error: Option<&str>) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    let obj = v.as_object_mut().expect("report is an object");
    obj.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    if let Some(msg) = error {
        obj.insert("error".into(), json!(msg));
    }
    v
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let cfg = run_config(a)?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".report.json");
        PathBuf::from(s)
    });
    match mile_run(&g, &cfg, a.double_base) {
        Ok(run) => {
            write_with(&a.out, |out| write_embedding(&run.embedding, out))?;
            write_json(&report_path, &report_json(&run.report, a, None))?;
            if let (Some(path), Some(params)) = (&a.params_out, &run.params) {
                write_with(path, |out| write_params(params, out))?;
            }
            Ok(())
        }
        Err(failure) => {
            let msg = failure.error.to_string();
            write_json(&report_path, &report_json(&failure.report, a, Some(&msg)))?;
            Err(failure.error)
        }
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let emb = load_embedding(&a.embedding)?;
    let labels =
        read_labels(open(&a.labels)?, Some(emb.rows())).map_err(|e| e.with_path(&a.labels))?;
    let cfg = EvalConfig {
        folds: a.folds,
        seed: a.seed,
        reg: a.reg,
        iters: a.iters,
    };
    let report = evaluate(&emb, &labels, &cfg)?;
    let v = serde_json::to_value(&report).expect("report serializes");
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    if let Some(p) = &a.report {
        write_json(p, &v)?;
    }
    Ok(())
}

fn cmd_sbm(a: &SbmArgs) -> Result<()> {
    let (g, labels) = sbm_generate(a.blocks, a.per_block, a.p_in, a.p_out, a.seed)?;
    write_with(&a.graph_out, |out| write_edge_list(&g, out))?;
    write_with(&a.labels_out, |out| write_labels(&labels, out))
}

pub fn exit_code(e: &MileError) -> i32 {
    match e {
        MileError::Divergence { .. } => EXIT_DIVERGED,
        _ => EXIT_INPUT,
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Coarsen(a) => cmd_coarsen(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Refine(a) => cmd_refine(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sbm(a) => cmd_sbm(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
