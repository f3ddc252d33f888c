//! Node classification harness: k-fold cross-validation of one-vs-rest
//! logistic regression on embedding rows, scored by micro and macro F1.

pub mod labels;
pub mod logreg;
pub mod metrics;
pub mod sbm;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{MileError, Result};
use crate::matrix::Matrix;
use crate::rng;

pub use labels::{read_labels, write_labels, LabelSet};
pub use logreg::{predict_multilabel, train_ovr_logreg, OvrModel, DEFAULT_ITERS, DEFAULT_REG};
pub use metrics::{macro_f1, micro_f1};
pub use sbm::sbm_generate;

/// Splits a seeded permutation of `0..n` into `k` disjoint test folds; the
/// first `n % k` folds hold one extra id. Each entry is `(train, test)`.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k == 0 || n < k {
        return Err(MileError::Config(format!(
            "cannot split {n} items into {k} folds"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let test = perm[start..start + len].to_vec();
        let train = perm[..start]
            .iter()
            .chain(&perm[start + len..])
            .copied()
            .collect();
        folds.push((train, test));
        start += len;
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub reg: f64,
    pub iters: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 10,
            seed: 0,
            reg: DEFAULT_REG,
            iters: DEFAULT_ITERS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FoldScore {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    /// Mean of the per-fold micro F1 scores.
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub folds: Vec<FoldScore>,
    pub fold_seed: u64,
    pub labeled_nodes: usize,
    pub label_count: usize,
}

fn gather(x: &Matrix, ids: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(ids.len(), x.cols());
    for (r, &u) in ids.iter().enumerate() {
        out.row_mut(r).copy_from_slice(x.row(u));
    }
    out
}

/// Cross-validated classification over the labeled nodes of `labels`.
pub fn evaluate(emb: &Matrix, labels: &LabelSet, cfg: &EvalConfig) -> Result<EvalReport> {
    if emb.rows() != labels.node_count() {
        return Err(MileError::Dimension(format!(
            "embedding has {} rows but labels cover {} nodes",
            emb.rows(),
            labels.node_count()
        )));
    }
    let nodes = labels.labeled_nodes();
    let folds = kfold(nodes.len(), cfg.folds, cfg.seed)?;
    let mut scores = Vec::with_capacity(folds.len());
    for (train_idx, test_idx) in folds {
        let train_nodes: Vec<usize> = train_idx.iter().map(|&i| nodes[i]).collect();
        let test_nodes: Vec<usize> = test_idx.iter().map(|&i| nodes[i]).collect();
        let model = train_ovr_logreg(
            &gather(emb, &train_nodes),
            &labels.subset(&train_nodes),
            cfg.reg,
            cfg.iters,
        )?;
        let truth = labels.subset(&test_nodes);
        let pred = predict_multilabel(&model, &gather(emb, &test_nodes), &truth.counts())?;
        scores.push(FoldScore {
            micro_f1: micro_f1(&pred, &truth)?,
            macro_f1: macro_f1(&pred, &truth)?,
            train_size: train_nodes.len(),
            test_size: test_nodes.len(),
        });
    }
    let k = scores.len() as f64;
    Ok(EvalReport {
        micro_f1: scores.iter().map(|s| s.micro_f1).sum::<f64>() / k,
        macro_f1: scores.iter().map(|s| s.macro_f1).sum::<f64>() / k,
        folds: scores,
        fold_seed: cfg.seed,
        labeled_nodes: nodes.len(),
        label_count: labels.label_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fold_sizes() {
        let f = kfold(10, 10, 1).unwrap();
        assert!(f.iter().all(|(tr, te)| te.len() == 1 && tr.len() == 9));
        let sizes: Vec<usize> = kfold(10, 3, 1).unwrap().iter().map(|f| f.1.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert!(kfold(3, 4, 0).is_err());
        assert!(kfold(3, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition(n in 1usize..60, k in 1usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let folds = kfold(n, k, seed).unwrap();
            let mut seen = vec![0; n];
            for (train, test) in &folds {
                prop_assert_eq!(train.len() + test.len(), n);
                for &i in test {
                    seen[i] += 1;
                    prop_assert!(!train.contains(&i));
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn one_hot_features_classify_perfectly() {
        let classes = [0, 1, 2, 1, 0, 2, 2, 1, 0, 0, 1, 2, 0, 1, 2];
        let emb = Matrix::from_fn(15, 3, |r, c| if classes[r] == c { 1.0 } else { 0.0 });
        let labels = LabelSet::single(3, &classes).unwrap();
        let cfg = EvalConfig {
            folds: 5,
            ..Default::default()
        };
        let report = evaluate(&emb, &labels, &cfg).unwrap();
        assert_eq!(report.micro_f1, 1.0);
        assert_eq!(report.folds.len(), 5);
        let mean = report.folds.iter().map(|f| f.micro_f1).sum::<f64>() / 5.0;
        assert_eq!(report.micro_f1, mean);
    }

    #[test]
    fn unlabeled_nodes_are_skipped() {
        let emb = Matrix::from_fn(6, 2, |r, c| if r % 2 == c { 1.0 } else { 0.0 });
        let labels =
            LabelSet::new(2, vec![vec![0], vec![], vec![0], vec![1], vec![0], vec![1]]).unwrap();
        let report = evaluate(
            &emb,
            &labels,
            &EvalConfig {
                folds: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.labeled_nodes, 5);
        assert!(evaluate(&emb, &labels, &EvalConfig::default()).is_err());
        assert!(evaluate(&Matrix::zeros(5, 2), &labels, &EvalConfig::default()).is_err());
    }
}
