//! Skip-gram with negative sampling over node walks.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::matrix::{dot, Matrix};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// 1 runs the deterministic single-threaded trainer; more threads share
    /// the vectors without locking and give up bit-reproducibility.
    pub threads: usize,
}

/// Number of (center, context) pairs a walk of `len` nodes produces.
pub fn pair_count(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|i| (i.min(window) + (len - 1 - i).min(window)) as u64)
        .sum()
}

/// Negative sampling distribution: unigram counts raised to 0.75, stored as
/// an inclusive cumulative table.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(n: usize, walks: &[Vec<usize>]) -> Self {
        let mut counts = vec![0u64; n];
        for &u in walks.iter().flatten() {
            counts[u] += 1;
        }
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let r = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}

/// Vector storage that the update rule reads and writes element-wise.
trait VecStore {
    fn load(&self, i: usize) -> f64;
    fn store(&mut self, i: usize, v: f64);
}

impl VecStore for [f64] {
    fn load(&self, i: usize) -> f64 {
        self[i]
    }
    fn store(&mut self, i: usize, v: f64) {
        self[i] = v;
    }
}

/// Shared storage for Hogwild-style parallel updates. Each element holds f64
/// bits; concurrent read-modify-write sequences may lose updates.
struct Shared<'a>(&'a [AtomicU64]);

impl VecStore for Shared<'_> {
    fn load(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }
    fn store(&mut self, i: usize, v: f64) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed);
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Trainer<'t> {
    dim: usize,
    window: usize,
    negatives: usize,
    table: &'t NegativeTable,
    h: Vec<f64>,
    grad_h: Vec<f64>,
}

impl Trainer<'_> {
    /// Runs every (center, context) pair of one walk. `lr_at` maps the number
    /// of pairs already processed in this walk to a learning rate.
    fn walk<S: VecStore + ?Sized, R: Rng>(
        &mut self,
        walk: &[usize],
        input: &mut S,
        output: &mut S,
        rng: &mut R,
        lr_at: impl Fn(u64) -> f64,
    ) -> u64 {
        let d = self.dim;
        let mut done = 0u64;
        for (i, &center) in walk.iter().enumerate() {
            let lo = i.saturating_sub(self.window);
            let hi = (i + self.window).min(walk.len() - 1);
            for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                let lr = lr_at(done);
                done += 1;

                for k in 0..d {
                    self.h[k] = input.load(center * d + k);
                }
                self.grad_h.iter_mut().for_each(|g| *g = 0.0);
                for s in 0..=self.negatives {
                    let (target, label) = if s == 0 {
                        (context, 1.0)
                    } else {
                        let t = self.table.sample(rng);
                        if t == context {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let base = target * d;
                    let mut f = 0.0;
                    for k in 0..d {
                        f += self.h[k] * output.load(base + k);
                    }
                    let g = (label - sigmoid(f)) * lr;
                    for k in 0..d {
                        let o = output.load(base + k);
                        self.grad_h[k] += g * o;
                        output.store(base + k, o + g * self.h[k]);
                    }
                }
                for k in 0..d {
                    let v = input.load(center * d + k);
                    input.store(center * d + k, v + self.grad_h[k]);
                }
            }
        }
        done
    }
}

/// Input vectors initialized uniformly in `[-0.5/d, 0.5/d]`.
pub fn init_vectors(n: usize, dim: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed);
    let half = 0.5 / dim as f64;
    Matrix::from_fn(n, dim, |_, _| r.random_range(-half..=half))
}

/// Trains node vectors over `walks`. Returns the input-side vectors; the
/// learning rate decays linearly from `initial_lr` to `initial_lr / 100`
/// across all pairs of all epochs.
pub fn sgns_train(n: usize, walks: &[Vec<usize>], p: &SgnsParams) -> (Matrix, u64) {
    let d = p.dim;
    let mut input = init_vectors(n, d, p.seed);
    let per_epoch: u64 = walks.iter().map(|w| pair_count(w.len(), p.window)).sum();
    let total = per_epoch * p.epochs as u64;
    if total == 0 || n == 0 {
        return (input, 0);
    }
    let table = NegativeTable::new(n, walks);
    let lr_for = |processed: u64| p.initial_lr * (1.0 - 0.99 * processed as f64 / total as f64);
    let new_trainer = || Trainer {
        dim: d,
        window: p.window,
        negatives: p.negatives,
        table: &table,
        h: vec![0.0; d],
        grad_h: vec![0.0; d],
    };

    if p.threads <= 1 {
        let mut output = vec![0.0; n * d];
        let mut r = rng::seeded(rng::mix64(p.seed ^ 0x5347_4e53));
        let mut trainer = new_trainer();
        let mut processed = 0u64;
        for _ in 0..p.epochs {
            for w in walks {
                let start = processed;
                processed += trainer.walk(
                    w,
                    input.as_mut_slice(),
                    output.as_mut_slice(),
                    &mut r,
                    |k| lr_for(start + k),
                );
            }
        }
        return (input, processed);
    }

    let shared_in: Vec<AtomicU64> = input
        .as_slice()
        .iter()
        .map(|v| AtomicU64::new(v.to_bits()))
        .collect();
    let shared_out: Vec<AtomicU64> = (0..n * d).map(|_| AtomicU64::new(0f64.to_bits())).collect();
    let processed = AtomicU64::new(0);
    let chunk = walks.len().div_ceil(p.threads).max(1);
    std::thread::scope(|s| {
        for (t, shard) in walks.chunks(chunk).enumerate() {
            let (shared_in, shared_out, processed) = (&shared_in, &shared_out, &processed);
            let mut trainer = new_trainer();
            s.spawn(move || {
                let mut r = rng::seeded(rng::mix64(p.seed ^ (t as u64 + 1)));
                let mut input = Shared(shared_in);
                let mut output = Shared(shared_out);
                for _ in 0..p.epochs {
                    for w in shard {
                        let start = processed.load(Ordering::Relaxed);
                        let done =
                            trainer.walk(w, &mut input, &mut output, &mut r, |k| lr_for(start + k));
                        processed.fetch_add(done, Ordering::Relaxed);
                    }
                }
            });
        }
    });
    for (dst, src) in input.as_mut_slice().iter_mut().zip(&shared_in) {
        *dst = f64::from_bits(src.load(Ordering::Relaxed));
    }
    (input, processed.load(Ordering::Relaxed))
}

/// Mean cosine similarity between rows, used by tests and diagnostics.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}
