//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mile::base::{base_embed, BaseEmbedderConfig};
use mile::coarsen::{
    build_matching_matrix, coarse_adjacency, coarsen_step, nhem_pairs, sem_groups,
};
use mile::eval::{evaluate, macro_f1, micro_f1, sbm_generate, EvalConfig, LabelSet};
use mile::graph::{write_edge_list, Edge, Graph};
use mile::matrix::Matrix;
use mile::operator::build_operator;
use mile::pipeline::{mile_embed, MileConfig};
use mile::refine::{grad, loss_self, train, RefineMode, RefinerParams, TrainConfig};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- oracles

/// Dense `Mᵀ A M` computed from the dense adjacency and dense 0/1 matrix.
fn dense_mtam(a: &[Vec<f64>], m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = m.first().map_or(0, Vec::len);
    let mut am = vec![vec![0.0; k]; n];
    for i in 0..n {
        for j in 0..n {
            if a[i][j] != 0.0 {
                for c in 0..k {
                    am[i][c] += a[i][j] * m[j][c];
                }
            }
        }
    }
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..n {
        for r in 0..k {
            if m[i][r] != 0.0 {
                for c in 0..k {
                    out[r][c] += m[i][r] * am[i][c];
                }
            }
        }
    }
    out
}

/// Random graph with integer weights, occasional self-loops and a few
/// planted structurally equivalent twins.
fn random_integer_graph(r: &mut ChaCha8Rng, n: usize) -> Graph {
    let p = r.random_range(0.01..0.15);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                edges.push(Edge::new(u, v, r.random_range(1..=5) as f64));
            }
        }
        if r.random_bool(0.05) {
            edges.push(Edge::new(u, u, r.random_range(1..=5) as f64));
        }
    }
    plant_twins(r, n, edges)
}

/// Appends twins: each copies the weighted neighborhood of an existing
/// node, so the pair is structurally equivalent.
fn plant_twins(r: &mut ChaCha8Rng, n: usize, mut edges: Vec<Edge>) -> Graph {
    let base = Graph::from_edge_list(&edges, Some(n)).unwrap();
    let twins = r.random_range(1..=3usize);
    let mut next = n;
    for _ in 0..twins {
        let src = r.random_range(0..n);
        let nbrs: Vec<(usize, f64)> = base.row(src).filter(|&(v, _)| v != src).collect();
        if nbrs.is_empty() {
            continue;
        }
        let copies = r.random_range(1..=2usize);
        for _ in 0..copies {
            for &(v, w) in &nbrs {
                edges.push(Edge::new(next, v, w));
            }
            next += 1;
        }
    }
    Graph::from_edge_list(&edges, Some(next)).unwrap()
}

/// Brute-force F1 from independent per-(node, label) decisions.
fn brute_f1(pred: &LabelSet, truth: &LabelSet) -> (f64, f64) {
    let f1 = |tp: u64, fp: u64, fnn: u64| {
        if 2 * tp + fp + fnn == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fnn) as f64
        }
    };
    let (mut gtp, mut gfp, mut gfn) = (0, 0, 0);
    let mut macro_sum = 0.0;
    for l in 0..truth.label_count() {
        let (mut tp, mut fp, mut fnn) = (0, 0, 0);
        for u in 0..truth.node_count() {
            match (pred.has(u, l), truth.has(u, l)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fnn += 1,
                (false, false) => {}
            }
        }
        gtp += tp;
        gfp += fp;
        gfn += fnn;
        macro_sum += f1(tp, fp, fnn);
    }
    (f1(gtp, gfp, gfn), macro_sum / truth.label_count() as f64)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
}

fn connected_random_graph(r: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        edges.push(Edge::new(u, (u + 1) % n, r.random_range(0.5..2.0)));
        for v in u + 2..n {
            if r.random_bool(0.25) {
                edges.push(Edge::new(u, v, r.random_range(0.5..2.0)));
            }
        }
    }
    Graph::from_edge_list(&edges, Some(n)).unwrap()
}

// ---------------------------------------------------------------- shared SBM

const SBM_SEED: u64 = 2024;
const FOLD_SEED: u64 = 17;

fn sbm() -> (Graph, LabelSet) {
    sbm_generate(5, 200, 0.10, 0.01, SBM_SEED).unwrap()
}

fn eval_cfg() -> EvalConfig {
    EvalConfig {
        folds: 10,
        seed: FOLD_SEED,
        ..Default::default()
    }
}

fn mile_micro(g: &Graph, labels: &LabelSet, mode: RefineMode, seed: u64) -> f64 {
    let mut cfg = MileConfig::new(2, BaseEmbedderConfig::spectral(32), seed);
    cfg.refine_mode = mode;
    let (e, _) = mile_embed(g, &cfg).unwrap();
    evaluate(&e, labels, &eval_cfg()).unwrap().micro_f1
}

// ---------------------------------------------------------------- criteria

fn ac1_triple_product() -> Outcome {
    let t = Instant::now();
    let mut r = rng(1);
    let mut checked = 0;
    for trial in 0..100 {
        let n = r.random_range(1..=190);
        let g = random_integer_graph(&mut r, n);
        let (m, coarse) = coarsen_step(&g);
        let expect = dense_mtam(&g.to_dense(), &m.to_dense());
        if coarse.to_dense() != expect {
            return Err(format!(
                "graph {trial} (n = {}) differs from dense MᵀAM",
                g.node_count()
            ));
        }
        // the matcher-independent path: an arbitrary valid assignment
        let k = r.random_range(1..=g.node_count());
        let mut assignment: Vec<usize> = (0..g.node_count()).map(|u| u % k).collect();
        for i in (1..assignment.len()).rev() {
            assignment.swap(i, r.random_range(0..=i));
        }
        let m2 = mile::coarsen::MatchingMatrix::from_assignment(assignment).unwrap();
        let c2 = coarse_adjacency(&g, &m2).unwrap();
        if c2.to_dense() != dense_mtam(&g.to_dense(), &m2.to_dense()) {
            return Err(format!("graph {trial}: arbitrary assignment differs"));
        }
        checked += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    if secs >= 5.0 {
        return Err(format!("took {secs:.2}s (limit 5s)"));
    }
    Ok(format!("{checked} graphs exact, {secs:.2}s"))
}

fn ac2_self_loop_weight() -> Outcome {
    for w in [1.0, 2.5, 7.0, 0.125] {
        let g = Graph::from_edge_list(&[Edge::new(0, 1, w)], None).unwrap();
        let (m, coarse) = coarsen_step(&g);
        if m.coarse_count() != 1 || coarse.weight(0, 0) != Some(2.0 * w) || coarse.edge_count() != 1
        {
            return Err(format!("w = {w}: got {:?}", coarse.to_dense()));
        }
    }
    Ok("single edge of weight w collapses to self-loop 2w".into())
}

fn ac3_matching_shape() -> Outcome {
    // 3 and 4 share the neighborhood {2}; 0 pairs with 1 by heavy edge
    let edges = [
        Edge::unit(0, 1),
        Edge::unit(1, 2),
        Edge::unit(2, 3),
        Edge::unit(2, 4),
    ];
    let g = Graph::from_edge_list(&edges, None).unwrap();
    let sem = sem_groups(&g);
    let mut matched = vec![false; 5];
    for &u in sem.iter().flatten() {
        matched[u] = true;
    }
    let pairs = nhem_pairs(&g, &matched);
    if sem != vec![vec![3, 4]] || pairs.len() != 1 {
        return Err(format!(
            "unexpected matchings: sem {sem:?}, pairs {pairs:?}"
        ));
    }
    let m = build_matching_matrix(5, &sem, &pairs).map_err(|e| e.to_string())?;
    let dense = m.to_dense();
    let shape = (dense.len(), dense[0].len());
    if shape != (5, 3) || dense.iter().any(|row| row.iter().sum::<f64>() != 1.0) {
        return Err(format!("shape {shape:?}, rows {dense:?}"));
    }
    let (step, _) = coarsen_step(&g);
    if step != m {
        return Err("coarsen_step disagrees with the assembled matrix".into());
    }
    Ok(format!(
        "shape {}x{}, every row sums to 1",
        shape.0, shape.1
    ))
}

fn ac4_equivalent_rows() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let mut groups_seen = 0;
    for trial in 0..50 {
        let n = r.random_range(12..60);
        let mut edges = Vec::new();
        for u in 0..n {
            edges.push(Edge::unit(u, (u + 1) % n));
            for v in u + 2..n {
                if r.random_bool(0.1) {
                    edges.push(Edge::new(u, v, r.random_range(1..=3) as f64));
                }
            }
        }
        let g = plant_twins(&mut r, n, edges);
        let groups = sem_groups(&g);
        if groups.is_empty() {
            return Err(format!("graph {trial}: planted twins not detected"));
        }
        let dim = g.node_count().min(16);
        let e = base_embed(&g, &BaseEmbedderConfig::spectral(dim)).map_err(|e| e.to_string())?;
        for grp in &groups {
            groups_seen += 1;
            for &u in &grp[1..] {
                for c in 0..dim {
                    worst = worst.max((e[(grp[0], c)] - e[(u, c)]).abs());
                }
            }
        }
    }
    if worst > 1e-6 {
        return Err(format!("max coordinate gap {worst:.3e} > 1e-6"));
    }
    Ok(format!(
        "{groups_seen} groups on 50 graphs, max gap {worst:.2e}"
    ))
}

fn ac5_gradients() -> Outcome {
    let mut r = rng(5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let n = r.random_range(4..=16);
        let d = r.random_range(2..=8);
        let l = 1 + trial % 3;
        let g = connected_random_graph(&mut r, n);
        let op = build_operator(&g, 0.05);
        let x = random_matrix(&mut r, n, d, 1.0);
        let params = RefinerParams::random(d, l, 0.05, 0.5, r.random());
        let analytic = grad(&x, &op, &params).map_err(|e| e.to_string())?;
        for k in 0..l {
            for i in 0..d {
                for j in 0..d {
                    let mut plus = params.clone();
                    plus.layers_mut()[k].row_mut(i)[j] += h;
                    let mut minus = params.clone();
                    minus.layers_mut()[k].row_mut(i)[j] -= h;
                    let fd = (loss_self(&x, &op, &plus).unwrap()
                        - loss_self(&x, &op, &minus).unwrap())
                        / (2.0 * h);
                    let a = analytic[k][(i, j)];
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                    worst = worst.max(rel);
                }
            }
        }
    }
    if worst >= 1e-4 {
        return Err(format!("max relative error {worst:.3e}"));
    }
    Ok(format!("20 instances, max relative error {worst:.2e}"))
}

fn ac6_training() -> Outcome {
    let (g, _) = sbm_generate(3, 30, 0.3, 0.02, 6).unwrap();
    let e = base_embed(&g, &BaseEmbedderConfig::spectral(8)).map_err(|e| e.to_string())?;
    let op = build_operator(&g, 0.05);
    let mut wins = 0;
    for seed in 0..10u64 {
        let cfg = TrainConfig {
            seed,
            ..Default::default()
        };
        let out = train(&e, &g, &cfg, 0.05, 2).map_err(|e| e.to_string())?;
        if out.final_loss() > out.initial_loss() {
            return Err(format!(
                "seed {seed}: loss rose {} -> {}",
                out.initial_loss(),
                out.final_loss()
            ));
        }
        let untrained = RefinerParams::random(8, 2, 0.05, cfg.init_scale, seed + 1000);
        let lu = loss_self(&e, &op, &untrained).unwrap();
        if out.final_loss() < lu {
            wins += 1;
        }
    }
    if wins < 9 {
        return Err(format!("trained beat untrained in {wins}/10 seeds"));
    }
    Ok(format!(
        "losses never rose; trained beat untrained in {wins}/10 seeds"
    ))
}

fn ac7_end_to_end() -> Outcome {
    let t = Instant::now();
    let (g, labels) = sbm();
    let direct = base_embed(&g, &BaseEmbedderConfig::spectral(32)).map_err(|e| e.to_string())?;
    let direct_f1 = evaluate(&direct, &labels, &eval_cfg()).unwrap().micro_f1;
    if direct_f1 < 0.90 {
        return Err(format!("direct spectral Micro-F1 {direct_f1:.4} < 0.90"));
    }
    let t_mile = Instant::now();
    let mile_f1 = mile_micro(&g, &labels, RefineMode::Trained, 7);
    let mile_secs = t_mile.elapsed().as_secs_f64();
    let ratio = mile_f1 / direct_f1;
    if ratio < 0.85 {
        return Err(format!(
            "MILE {mile_f1:.4} vs direct {direct_f1:.4} (ratio {ratio:.3})"
        ));
    }
    if mile_secs >= 60.0 {
        return Err(format!("MILE run took {mile_secs:.1}s"));
    }
    Ok(format!(
        "direct {direct_f1:.4}, MILE {mile_f1:.4} (ratio {ratio:.3}); MILE+eval {mile_secs:.1}s, total {:.1}s",
        t.elapsed().as_secs_f64()
    ))
}

fn ac8_ablation() -> Outcome {
    let (g, labels) = sbm();
    let mut wins = 0;
    let mut scores = Vec::new();
    for seed in 0..5u64 {
        let trained = mile_micro(&g, &labels, RefineMode::Trained, seed);
        // same seed, so both modes share the coarsening and base embedding
        let p = mile_micro(&g, &labels, RefineMode::ProjectionOnly, seed);
        if trained >= p {
            wins += 1;
        }
        scores.push(format!("{trained:.3}/{p:.3}"));
    }
    if wins < 4 {
        return Err(format!(
            "trained >= projection in {wins}/5 seeds: {scores:?}"
        ));
    }
    Ok(format!(
        "trained >= projection in {wins}/5 seeds (trained/proj: {})",
        scores.join(", ")
    ))
}

fn ac9_work_reduction() -> Outcome {
    let (g, _) = sbm();
    let mut parts = Vec::new();
    let spectral = |levels| {
        let cfg = MileConfig::new(levels, BaseEmbedderConfig::spectral(32), 1);
        mile_embed(&g, &cfg).unwrap().1
    };
    let (r0, r2) = (spectral(0), spectral(2));
    let ratio = r0.base_work.eigen_dim as f64 / r2.base_work.eigen_dim as f64;
    if ratio < 2.0 {
        return Err(format!("eigensolve dimension shrank only {ratio:.2}x"));
    }
    parts.push(format!(
        "eigen dim {} -> {} ({ratio:.1}x), base_ms {:.0} -> {:.0}",
        r0.base_work.eigen_dim, r2.base_work.eigen_dim, r0.timings.base_ms, r2.timings.base_ms
    ));

    let skipgram = |levels| {
        let mut base = BaseEmbedderConfig::skip_gram(32);
        base.walks_per_node = 2;
        base.walk_length = 20;
        base.window = 5;
        let cfg = MileConfig::new(levels, base, 1);
        mile_embed(&g, &cfg).unwrap().1
    };
    let (s0, s2) = (skipgram(0), skipgram(2));
    let ratio = s0.base_work.walk_steps as f64 / s2.base_work.walk_steps as f64;
    if ratio < 2.0 {
        return Err(format!("walk steps shrank only {ratio:.2}x"));
    }
    parts.push(format!(
        "walk steps {} -> {} ({ratio:.1}x), base_ms {:.0} -> {:.0}",
        s0.base_work.walk_steps, s2.base_work.walk_steps, s0.timings.base_ms, s2.timings.base_ms
    ));
    Ok(parts.join("; "))
}

fn ac10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (g, _) = sbm_generate(4, 40, 0.2, 0.02, 10).unwrap();
    let graph = dir.path().join("g.edges");
    write_edge_list(&g, std::fs::File::create(&graph).unwrap()).unwrap();
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mile"))
            .args(["run", "--graph"])
            .arg(&graph)
            .arg("--out")
            .arg(&out)
            .args([
                "--levels",
                "2",
                "--min-nodes",
                "10",
                "--dim",
                "16",
                "--walks",
                "3",
                "--walk-length",
                "20",
                "--epochs",
                "50",
                "--seed",
                "99",
            ])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run exited with {status}"));
        }
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let a = run("a.emb")?;
    let b = run("b.emb")?;
    if a != b {
        return Err("embedding files differ".into());
    }
    Ok(format!(
        "two skip-gram runs produced identical {}-byte files",
        a.len()
    ))
}

fn ac11_f1() -> Outcome {
    let mut r = rng(11);
    for trial in 0..100 {
        let n = r.random_range(1..40);
        let l = r.random_range(1..8);
        let mut draw = || -> LabelSet {
            let sets = (0..n)
                .map(|_| (0..l).filter(|_| r.random_bool(0.3)).collect())
                .collect();
            LabelSet::new(l, sets).unwrap()
        };
        let truth = draw();
        let pred = draw();
        let (mi, ma) = brute_f1(&pred, &truth);
        let got = (
            micro_f1(&pred, &truth).unwrap(),
            macro_f1(&pred, &truth).unwrap(),
        );
        if got != (mi, ma) {
            return Err(format!(
                "pair {trial}: harness {got:?}, oracle {:?}",
                (mi, ma)
            ));
        }
    }
    Ok("100 random pairs equal the brute-force counter exactly".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        (
            "coarse adjacency equals dense triple product",
            ac1_triple_product,
        ),
        (
            "collapsed edge becomes self-loop of twice its weight",
            ac2_self_loop_weight,
        ),
        ("5-node matching matrix is 5x3", ac3_matching_shape),
        (
            "equivalent nodes get equal spectral rows",
            ac4_equivalent_rows,
        ),
        ("refiner gradients match finite differences", ac5_gradients),
        (
            "training lowers loss and beats untrained weights",
            ac6_training,
        ),
        ("end-to-end quality on SBM", ac7_end_to_end),
        ("trained refinement beats projection only", ac8_ablation),
        ("coarsening shrinks base embedding work", ac9_work_reduction),
        ("CLI runs are byte-identical", ac10_determinism),
        ("micro/macro F1 match brute force", ac11_f1),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] AC-{} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] AC-{} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
