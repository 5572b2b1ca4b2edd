//! Configuration and the EM driver shared by all three models.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayViewMut1, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Plsa,
    Mwa,
    Itm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Plsa => "plsa",
            ModelKind::Mwa => "mwa",
            ModelKind::Itm => "itm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plsa" => Ok(ModelKind::Plsa),
            "mwa" => Ok(ModelKind::Mwa),
            "itm" => Ok(ModelKind::Itm),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of latent topics K.
    pub topics: usize,
    /// Number of latent user interests I (ITM only).
    pub interests: usize,
    /// Stop once the relative log-likelihood change falls below this.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Number of E-step partitions. Results are deterministic per (seed, workers).
    pub workers: usize,
    /// Upper bound in bytes on the dense parameter tables.
    pub memory_budget: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            topics: 100,
            interests: 20,
            tol: 1e-6,
            max_iters: 200,
            seed: 0,
            workers: 1,
            memory_budget: 2 << 30,
        }
    }
}

impl TrainConfig {
    pub fn with_topics(topics: usize) -> Self {
        TrainConfig {
            topics,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics < 1 {
            return Err(Error::InvalidConfig("topics must be >= 1".into()));
        }
        if self.interests < 1 {
            return Err(Error::InvalidConfig("interests must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn check_budget(&self, cells: u128) -> Result<()> {
        let required = cells * std::mem::size_of::<f64>() as u128;
        if required > self.memory_budget as u128 {
            return Err(Error::MemoryBudget {
                required,
                budget: self.memory_budget,
            });
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Per-run training record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Entry `i` is the log-likelihood after `i` M-steps; entry 0 is the initialization.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

impl TrainReport {
    /// Number of M-steps performed.
    pub fn iterations(&self) -> usize {
        self.log_likelihoods.len().saturating_sub(1)
    }

    pub fn final_log_likelihood(&self) -> f64 {
        *self
            .log_likelihoods
            .last()
            .expect("at least the initial value")
    }
}

pub(crate) fn relative_change(prev: f64, next: f64) -> f64 {
    let diff = (next - prev).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / prev.abs().max(f64::MIN_POSITIVE)
    }
}

/// One round of EM on a model whose sufficient statistics are `Acc`.
pub(crate) trait Em: Sized {
    type Acc;

    /// Computes expected sufficient statistics and the log-likelihood of the
    /// current parameters.
    fn expectation(&self, corpus: &Corpus, workers: usize) -> Result<(Self::Acc, f64)>;

    fn maximization(&mut self, acc: Self::Acc, corpus: &Corpus);
}

pub(crate) fn run_em<M: Em>(
    mut model: M,
    corpus: &Corpus,
    cfg: &TrainConfig,
    mut observer: impl FnMut(usize, &M),
) -> Result<(M, TrainReport)> {
    let (mut acc, mut ll) = model.expectation(corpus, cfg.workers)?;
    let mut log_likelihoods = vec![ll];
    let mut converged = false;
    for iter in 1..=cfg.max_iters {
        model.maximization(acc, corpus);
        observer(iter, &model);
        let (next_acc, next_ll) = model.expectation(corpus, cfg.workers)?;
        log_likelihoods.push(next_ll);
        log::debug!("iteration {iter}: log-likelihood {next_ll}");
        if next_ll < ll - 1e-9 * ll.abs() {
            log::warn!("log-likelihood decreased at iteration {iter}: {ll} -> {next_ll}");
        }
        let change = relative_change(ll, next_ll);
        acc = next_acc;
        ll = next_ll;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok((
        model,
        TrainReport {
            log_likelihoods,
            converged,
        },
    ))
}

/// Folds `items` into an accumulator, split into `workers` contiguous chunks
/// that are merged in order.
pub(crate) fn accumulate<T, A, I, S, G>(
    items: &[T],
    workers: usize,
    init: I,
    step: S,
    merge: G,
) -> Result<A>
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &T) -> Result<()> + Sync,
    G: Fn(&mut A, A),
{
    if workers <= 1 || items.len() < 2 {
        let mut acc = init();
        for item in items {
            step(&mut acc, item)?;
        }
        return Ok(acc);
    }
    let chunk = items.len().div_ceil(workers);
    let parts = items
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = init();
            for item in part {
                step(&mut acc, item)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<A>>>()?;
    let mut parts = parts.into_iter();
    let mut acc = parts.next().unwrap_or_else(&init);
    for part in parts {
        merge(&mut acc, part);
    }
    Ok(acc)
}

/// Rows of near-uniform positive weights, each normalized to sum to one.
pub(crate) fn random_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let mut table = Array2::from_shape_simple_fn((rows, cols), || 1.0 + rng.gen::<f64>());
    for row in table.rows_mut() {
        normalize(row);
    }
    table
}

/// Scales `row` to sum to one. A row with no mass is left unchanged and
/// `false` is returned.
pub(crate) fn normalize(mut row: ArrayViewMut1<'_, f64>) -> bool {
    let sum: f64 = row.sum();
    if sum > 0.0 && sum.is_finite() {
        row.mapv_inplace(|x| x / sum);
        true
    } else {
        false
    }
}

/// Largest |row sum - 1| over the rows of `table`.
pub fn max_row_error(table: &Array2<f64>) -> f64 {
    table
        .sum_axis(Axis(1))
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn vector_error(v: &[f64]) -> f64 {
    (v.iter().sum::<f64>() - 1.0).abs()
}

pub(crate) fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}
