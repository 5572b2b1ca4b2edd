//! Probabilistic latent semantic analysis over resource-tag counts.
//!
//! Joint model: p(r, t) = sum_z p(t|z) p(z|r) p(r), with p(r) held at its
//! empirical value n(r)/N.

use std::io::Write;

use ndarray::{Array2, Axis};

use crate::corpus::{Corpus, PairCount};
use crate::error::{Error, Result};
use crate::format::{self, Reader};
use crate::similarity::TopicDistribution;
use crate::train::{self, Em, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub struct PlsaModel {
    seed: u64,
    /// [K x |T|]
    p_t_given_z: Array2<f64>,
    /// [|R| x K]
    p_z_given_r: Array2<f64>,
    p_r: Vec<f64>,
}

impl PlsaModel {
    /// Builds a model from explicit tables, checking shapes and normalization.
    pub fn new(
        p_t_given_z: Array2<f64>,
        p_z_given_r: Array2<f64>,
        p_r: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let model = PlsaModel {
            seed,
            p_t_given_z,
            p_z_given_r,
            p_r,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let k = self.p_t_given_z.nrows();
        if k == 0 || self.p_z_given_r.ncols() != k || self.p_z_given_r.nrows() != self.p_r.len() {
            return Err(Error::DimensionMismatch(format!(
                "p(t|z) is {:?}, p(z|r) is {:?}, p(r) has {} entries",
                self.p_t_given_z.dim(),
                self.p_z_given_r.dim(),
                self.p_r.len()
            )));
        }
        let err = self.normalization_error();
        if !(err <= 1e-10) || self.has_negative() {
            return Err(Error::InvalidDistribution(format!(
                "pLSA tables are not normalized (max error {err})"
            )));
        }
        Ok(())
    }

    fn has_negative(&self) -> bool {
        self.p_t_given_z
            .iter()
            .chain(self.p_z_given_r.iter())
            .chain(self.p_r.iter())
            .any(|&x| !(x >= 0.0))
    }

    /// Random near-uniform conditionals and the empirical p(r).
    pub fn initialize(corpus: &Corpus, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let (k, n_r, n_t) = (cfg.topics, corpus.num_resources(), corpus.num_tags());
        cfg.check_budget((k * n_t + n_r * k + n_r) as u128)?;
        if k > n_t {
            log::warn!("{k} topics exceed the {n_t} distinct tags");
        }
        let mut rng = cfg.rng();
        let p_t_given_z = train::random_rows(&mut rng, k, n_t);
        let p_z_given_r = train::random_rows(&mut rng, n_r, k);
        Ok(PlsaModel {
            seed: cfg.seed,
            p_t_given_z,
            p_z_given_r,
            p_r: corpus.resource_marginal(),
        })
    }

    /// All conditionals uniform, p(r) empirical.
    pub fn uniform(corpus: &Corpus, topics: usize) -> Self {
        let (n_r, n_t) = (corpus.num_resources(), corpus.num_tags());
        PlsaModel {
            seed: 0,
            p_t_given_z: Array2::from_elem((topics, n_t), 1.0 / n_t as f64),
            p_z_given_r: Array2::from_elem((n_r, topics), 1.0 / topics as f64),
            p_r: corpus.resource_marginal(),
        }
    }

    pub fn topics(&self) -> usize {
        self.p_t_given_z.nrows()
    }

    pub fn num_resources(&self) -> usize {
        self.p_r.len()
    }

    pub fn num_tags(&self) -> usize {
        self.p_t_given_z.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p_t_given_z(&self) -> &Array2<f64> {
        &self.p_t_given_z
    }

    pub fn p_z_given_r(&self) -> &Array2<f64> {
        &self.p_z_given_r
    }

    pub fn p_r(&self) -> &[f64] {
        &self.p_r
    }

    /// p(r, t) = sum_z p(t|z) p(z|r) p(r).
    pub fn joint(&self, r: usize, t: usize) -> f64 {
        self.tag_given_resource(r, t) * self.p_r[r]
    }

    fn tag_given_resource(&self, r: usize, t: usize) -> f64 {
        self.p_z_given_r
            .row(r)
            .iter()
            .zip(self.p_t_given_z.column(t))
            .map(|(pz, pt)| pz * pt)
            .sum()
    }

    /// Posterior p(z | r, t) proportional to p(t|z) p(z|r).
    pub fn e_step(&self, r: usize, t: usize) -> Result<Vec<f64>> {
        self.check_ids(r, t)?;
        let mut post = vec![0.0; self.topics()];
        let denom = self.fill_posterior(r, t, &mut post);
        if !(denom > 0.0) {
            return Err(Error::DegeneratePosterior(format!("(r={r}, t={t})")));
        }
        Ok(post)
    }

    /// Writes the normalized posterior into `post` and returns the normalizer.
    fn fill_posterior(&self, r: usize, t: usize, post: &mut [f64]) -> f64 {
        let mut denom = 0.0;
        for ((slot, pz), pt) in post
            .iter_mut()
            .zip(self.p_z_given_r.row(r))
            .zip(self.p_t_given_z.column(t))
        {
            *slot = pz * pt;
            denom += *slot;
        }
        if denom > 0.0 {
            post.iter_mut().for_each(|p| *p /= denom);
        }
        denom
    }

    fn check_ids(&self, r: usize, t: usize) -> Result<()> {
        if r >= self.num_resources() {
            return Err(Error::UnknownResource(r));
        }
        if t >= self.num_tags() {
            return Err(Error::DimensionMismatch(format!("tag id {t} out of range")));
        }
        Ok(())
    }

    pub fn check_dims(&self, corpus: &Corpus) -> Result<()> {
        if self.num_resources() != corpus.num_resources() || self.num_tags() != corpus.num_tags() {
            return Err(Error::DimensionMismatch(format!(
                "pLSA model has |R|={} |T|={}, corpus has |R|={} |T|={}",
                self.num_resources(),
                self.num_tags(),
                corpus.num_resources(),
                corpus.num_tags()
            )));
        }
        Ok(())
    }

    /// The stored row p(z|r).
    pub fn topic_distribution(&self, r: usize) -> Result<TopicDistribution> {
        if r >= self.num_resources() {
            return Err(Error::UnknownResource(r));
        }
        TopicDistribution::new(self.p_z_given_r.row(r).to_vec())
    }

    pub fn topic_distributions(&self) -> Result<Vec<TopicDistribution>> {
        (0..self.num_resources())
            .map(|r| self.topic_distribution(r))
            .collect()
    }

    /// Largest deviation of any conditional row or p(r) from summing to one.
    pub fn normalization_error(&self) -> f64 {
        train::max_row_error(&self.p_t_given_z)
            .max(train::max_row_error(&self.p_z_given_r))
            .max(train::vector_error(&self.p_r))
    }

    /// Sections: header `plsa K |R| |T| seed`, p(r), then K rows of p(t|z),
    /// then |R| rows of p(z|r).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        format::write_version(&mut w)?;
        writeln!(
            w,
            "plsa {} {} {} {}",
            self.topics(),
            self.num_resources(),
            self.num_tags(),
            self.seed
        )?;
        format::write_row(&mut w, self.p_r.iter().copied())?;
        format::write_table(&mut w, &self.p_t_given_z)?;
        format::write_table(&mut w, &self.p_z_given_r)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut reader = Reader::new(text);
        let model = Self::read(&mut reader)?;
        reader.finish()?;
        Ok(model)
    }

    pub(crate) fn read(reader: &mut Reader<'_>) -> Result<Self> {
        let fields = reader.header("plsa")?;
        let line = reader.line_no();
        format::expect_fields(&fields, 4, line)?;
        let k: usize = format::parse_field(&fields, 0, "K", line)?;
        let n_r: usize = format::parse_field(&fields, 1, "|R|", line)?;
        let n_t: usize = format::parse_field(&fields, 2, "|T|", line)?;
        let seed: u64 = format::parse_field(&fields, 3, "seed", line)?;
        let p_r = reader.row(n_r)?;
        let p_t_given_z = reader.table(k, n_t)?;
        let p_z_given_r = reader.table(n_r, k)?;
        PlsaModel::new(p_t_given_z, p_z_given_r, p_r, seed)
    }
}

/// Sum over observed (r, t) of n(r, t) ln p(r, t).
///
/// Returns negative infinity when an observed pair has zero probability.
pub fn plsa_log_likelihood(model: &PlsaModel, corpus: &Corpus) -> Result<f64> {
    model.check_dims(corpus)?;
    Ok(corpus
        .pairs()
        .iter()
        .map(|p| p.n as f64 * train::ln_or_neg_inf(model.joint(p.r, p.t)))
        .sum())
}

/// Log-likelihood of the full triples under the pLSA joint extended with the
/// empirical user marginal, p(r, u, t) = p(r, t) n(u)/N.
pub fn plsa_triple_log_likelihood(model: &PlsaModel, corpus: &Corpus) -> Result<f64> {
    let user_term: f64 = corpus
        .user_counts()
        .iter()
        .zip(corpus.user_marginal())
        .map(|(&n, p)| n as f64 * p.ln())
        .sum();
    Ok(plsa_log_likelihood(model, corpus)? + user_term)
}

pub(crate) struct PlsaStats {
    tag_topic: Array2<f64>,
    resource_topic: Array2<f64>,
    log_likelihood: f64,
    scratch: Vec<f64>,
}

impl PlsaStats {
    fn new(k: usize, n_r: usize, n_t: usize) -> Self {
        PlsaStats {
            tag_topic: Array2::zeros((k, n_t)),
            resource_topic: Array2::zeros((n_r, k)),
            log_likelihood: 0.0,
            scratch: vec![0.0; k],
        }
    }

    fn merge(&mut self, other: PlsaStats) {
        self.tag_topic += &other.tag_topic;
        self.resource_topic += &other.resource_topic;
        self.log_likelihood += other.log_likelihood;
    }
}

impl Em for PlsaModel {
    type Acc = PlsaStats;

    fn expectation(&self, corpus: &Corpus, workers: usize) -> Result<(PlsaStats, f64)> {
        let k = self.topics();
        let acc = train::accumulate(
            corpus.pairs(),
            workers,
            || PlsaStats::new(k, self.num_resources(), self.num_tags()),
            |acc, &PairCount { r, t, n }| {
                let mut post = std::mem::take(&mut acc.scratch);
                let denom = self.fill_posterior(r, t, &mut post);
                if !(denom > 0.0) {
                    return Err(Error::DegeneratePosterior(format!("(r={r}, t={t})")));
                }
                debug_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let n = n as f64;
                acc.log_likelihood += n * (denom * self.p_r[r]).ln();
                for (z, &p) in post.iter().enumerate() {
                    acc.tag_topic[[z, t]] += n * p;
                    acc.resource_topic[[r, z]] += n * p;
                }
                acc.scratch = post;
                Ok(())
            },
            PlsaStats::merge,
        )?;
        let ll = acc.log_likelihood;
        Ok((acc, ll))
    }

    fn maximization(&mut self, acc: PlsaStats, _corpus: &Corpus) {
        for (mut row, new) in self
            .p_t_given_z
            .axis_iter_mut(Axis(0))
            .zip(acc.tag_topic.axis_iter(Axis(0)))
        {
            // a topic that lost all mass keeps its previous row
            if new.sum() > 0.0 {
                row.assign(&new);
                train::normalize(row);
            }
        }
        self.p_z_given_r = acc.resource_topic;
        for row in self.p_z_given_r.rows_mut() {
            // every resource has n(r) > 0, so its row carries mass
            train::normalize(row);
        }
        debug_assert!(self.normalization_error() < 1e-10);
    }
}

pub fn train_plsa(corpus: &Corpus, cfg: &TrainConfig) -> Result<(PlsaModel, TrainReport)> {
    train_plsa_observed(corpus, cfg, |_, _| {})
}

/// As [`train_plsa`], calling `observer(iteration, model)` after every M-step.
pub fn train_plsa_observed(
    corpus: &Corpus,
    cfg: &TrainConfig,
    observer: impl FnMut(usize, &PlsaModel),
) -> Result<(PlsaModel, TrainReport)> {
    let model = PlsaModel::initialize(corpus, cfg)?;
    train::run_em(model, corpus, cfg, observer)
}
