//! Three-way aspect model: a single latent aspect z independently generates
//! the resource, the user and the tag of each triple.
//!
//! p(r, u, t) = sum_z p(r|z) p(u|z) p(t|z) p(z)

use std::io::Write;

use ndarray::{Array2, Axis};

use crate::corpus::{Corpus, Triple};
use crate::error::{Error, Result};
use crate::format::{self, Reader};
use crate::similarity::TopicDistribution;
use crate::train::{self, Em, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub struct MwaModel {
    seed: u64,
    p_z: Vec<f64>,
    /// [K x |R|]
    p_r_given_z: Array2<f64>,
    /// [K x |U|]
    p_u_given_z: Array2<f64>,
    /// [K x |T|]
    p_t_given_z: Array2<f64>,
}

impl MwaModel {
    pub fn new(
        p_z: Vec<f64>,
        p_r_given_z: Array2<f64>,
        p_u_given_z: Array2<f64>,
        p_t_given_z: Array2<f64>,
        seed: u64,
    ) -> Result<Self> {
        let model = MwaModel {
            seed,
            p_z,
            p_r_given_z,
            p_u_given_z,
            p_t_given_z,
        };
        let k = model.p_z.len();
        if k == 0
            || model.p_r_given_z.nrows() != k
            || model.p_u_given_z.nrows() != k
            || model.p_t_given_z.nrows() != k
        {
            return Err(Error::DimensionMismatch(format!(
                "p(z) has {k} entries but the tables have {}, {} and {} rows",
                model.p_r_given_z.nrows(),
                model.p_u_given_z.nrows(),
                model.p_t_given_z.nrows()
            )));
        }
        let err = model.normalization_error();
        let negative = model
            .p_z
            .iter()
            .chain(model.p_r_given_z.iter())
            .chain(model.p_u_given_z.iter())
            .chain(model.p_t_given_z.iter())
            .any(|&x| !(x >= 0.0));
        if !(err <= 1e-10) || negative {
            return Err(Error::InvalidDistribution(format!(
                "aspect model tables are not normalized (max error {err})"
            )));
        }
        Ok(model)
    }

    /// Uniform p(z) and random near-uniform conditionals.
    pub fn initialize(corpus: &Corpus, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.topics;
        let (n_r, n_u, n_t) = (
            corpus.num_resources(),
            corpus.num_users(),
            corpus.num_tags(),
        );
        cfg.check_budget((k * (1 + n_r + n_u + n_t)) as u128)?;
        if k > n_t {
            log::warn!("{k} topics exceed the {n_t} distinct tags");
        }
        let mut rng = cfg.rng();
        let p_r_given_z = train::random_rows(&mut rng, k, n_r);
        let p_u_given_z = train::random_rows(&mut rng, k, n_u);
        let p_t_given_z = train::random_rows(&mut rng, k, n_t);
        Ok(MwaModel {
            seed: cfg.seed,
            p_z: vec![1.0 / k as f64; k],
            p_r_given_z,
            p_u_given_z,
            p_t_given_z,
        })
    }

    pub fn uniform(corpus: &Corpus, topics: usize) -> Self {
        let uniform = |cols: usize| Array2::from_elem((topics, cols), 1.0 / cols as f64);
        MwaModel {
            seed: 0,
            p_z: vec![1.0 / topics as f64; topics],
            p_r_given_z: uniform(corpus.num_resources()),
            p_u_given_z: uniform(corpus.num_users()),
            p_t_given_z: uniform(corpus.num_tags()),
        }
    }

    pub fn topics(&self) -> usize {
        self.p_z.len()
    }

    pub fn num_resources(&self) -> usize {
        self.p_r_given_z.ncols()
    }

    pub fn num_users(&self) -> usize {
        self.p_u_given_z.ncols()
    }

    pub fn num_tags(&self) -> usize {
        self.p_t_given_z.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p_z(&self) -> &[f64] {
        &self.p_z
    }

    pub fn p_r_given_z(&self) -> &Array2<f64> {
        &self.p_r_given_z
    }

    pub fn p_u_given_z(&self) -> &Array2<f64> {
        &self.p_u_given_z
    }

    pub fn p_t_given_z(&self) -> &Array2<f64> {
        &self.p_t_given_z
    }

    pub fn joint(&self, r: usize, u: usize, t: usize) -> f64 {
        (0..self.topics()).map(|z| self.weight(z, r, u, t)).sum()
    }

    fn weight(&self, z: usize, r: usize, u: usize, t: usize) -> f64 {
        self.p_z[z] * self.p_r_given_z[[z, r]] * self.p_u_given_z[[z, u]] * self.p_t_given_z[[z, t]]
    }

    fn fill_posterior(&self, r: usize, u: usize, t: usize, post: &mut [f64]) -> f64 {
        let mut denom = 0.0;
        for (z, slot) in post.iter_mut().enumerate() {
            *slot = self.weight(z, r, u, t);
            denom += *slot;
        }
        if denom > 0.0 {
            post.iter_mut().for_each(|p| *p /= denom);
        }
        denom
    }

    /// Posterior p(z | r, u, t).
    pub fn e_step(&self, r: usize, u: usize, t: usize) -> Result<Vec<f64>> {
        if r >= self.num_resources() {
            return Err(Error::UnknownResource(r));
        }
        if u >= self.num_users() || t >= self.num_tags() {
            return Err(Error::DimensionMismatch(format!(
                "(u={u}, t={t}) out of range"
            )));
        }
        let mut post = vec![0.0; self.topics()];
        if !(self.fill_posterior(r, u, t, &mut post) > 0.0) {
            return Err(Error::DegeneratePosterior(format!("(r={r}, u={u}, t={t})")));
        }
        Ok(post)
    }

    pub fn check_dims(&self, corpus: &Corpus) -> Result<()> {
        let model = (self.num_resources(), self.num_users(), self.num_tags());
        let data = (
            corpus.num_resources(),
            corpus.num_users(),
            corpus.num_tags(),
        );
        if model != data {
            return Err(Error::DimensionMismatch(format!(
                "aspect model has (|R|,|U|,|T|)={model:?}, corpus has {data:?}"
            )));
        }
        Ok(())
    }

    /// p(z|r) obtained by Bayes inversion of p(r|z) and p(z).
    pub fn topic_distribution(&self, r: usize) -> Result<TopicDistribution> {
        if r >= self.num_resources() {
            return Err(Error::UnknownResource(r));
        }
        let weights: Vec<f64> = self
            .p_z
            .iter()
            .zip(self.p_r_given_z.column(r))
            .map(|(pz, pr)| pz * pr)
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NoSupport(r));
        }
        TopicDistribution::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn topic_distributions(&self) -> Result<Vec<TopicDistribution>> {
        (0..self.num_resources())
            .map(|r| self.topic_distribution(r))
            .collect()
    }

    pub fn normalization_error(&self) -> f64 {
        train::vector_error(&self.p_z)
            .max(train::max_row_error(&self.p_r_given_z))
            .max(train::max_row_error(&self.p_u_given_z))
            .max(train::max_row_error(&self.p_t_given_z))
    }

    /// Sections: header `mwa K |R| |U| |T| seed`, p(z), then K rows each of
    /// p(r|z), p(u|z) and p(t|z).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        format::write_version(&mut w)?;
        writeln!(
            w,
            "mwa {} {} {} {} {}",
            self.topics(),
            self.num_resources(),
            self.num_users(),
            self.num_tags(),
            self.seed
        )?;
        format::write_row(&mut w, self.p_z.iter().copied())?;
        format::write_table(&mut w, &self.p_r_given_z)?;
        format::write_table(&mut w, &self.p_u_given_z)?;
        format::write_table(&mut w, &self.p_t_given_z)?;
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
        let fields = reader.header("mwa")?;
        let line = reader.line_no();
        format::expect_fields(&fields, 5, line)?;
        let k: usize = format::parse_field(&fields, 0, "K", line)?;
        let n_r: usize = format::parse_field(&fields, 1, "|R|", line)?;
        let n_u: usize = format::parse_field(&fields, 2, "|U|", line)?;
        let n_t: usize = format::parse_field(&fields, 3, "|T|", line)?;
        let seed: u64 = format::parse_field(&fields, 4, "seed", line)?;
        let p_z = reader.row(k)?;
        let p_r_given_z = reader.table(k, n_r)?;
        let p_u_given_z = reader.table(k, n_u)?;
        let p_t_given_z = reader.table(k, n_t)?;
        MwaModel::new(p_z, p_r_given_z, p_u_given_z, p_t_given_z, seed)
    }
}

/// Sum over observed triples of n(r, u, t) ln p(r, u, t).
pub fn mwa_log_likelihood(model: &MwaModel, corpus: &Corpus) -> Result<f64> {
    model.check_dims(corpus)?;
    Ok(corpus
        .triples()
        .iter()
        .map(|tr| tr.n as f64 * train::ln_or_neg_inf(model.joint(tr.r, tr.u, tr.t)))
        .sum())
}

pub(crate) struct MwaStats {
    topic: Vec<f64>,
    resource: Array2<f64>,
    user: Array2<f64>,
    tag: Array2<f64>,
    log_likelihood: f64,
    scratch: Vec<f64>,
}

impl MwaStats {
    fn merge(&mut self, other: MwaStats) {
        self.topic
            .iter_mut()
            .zip(&other.topic)
            .for_each(|(a, b)| *a += b);
        self.resource += &other.resource;
        self.user += &other.user;
        self.tag += &other.tag;
        self.log_likelihood += other.log_likelihood;
    }
}

impl Em for MwaModel {
    type Acc = MwaStats;

    fn expectation(&self, corpus: &Corpus, workers: usize) -> Result<(MwaStats, f64)> {
        let k = self.topics();
        let acc = train::accumulate(
            corpus.triples(),
            workers,
            || MwaStats {
                topic: vec![0.0; k],
                resource: Array2::zeros((k, self.num_resources())),
                user: Array2::zeros((k, self.num_users())),
                tag: Array2::zeros((k, self.num_tags())),
                log_likelihood: 0.0,
                scratch: vec![0.0; k],
            },
            |acc, &Triple { r, u, t, n }| {
                let mut post = std::mem::take(&mut acc.scratch);
                let denom = self.fill_posterior(r, u, t, &mut post);
                if !(denom > 0.0) {
                    return Err(Error::DegeneratePosterior(format!("(r={r}, u={u}, t={t})")));
                }
                debug_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let n = n as f64;
                acc.log_likelihood += n * denom.ln();
                for (z, &p) in post.iter().enumerate() {
                    let w = n * p;
                    acc.topic[z] += w;
                    acc.resource[[z, r]] += w;
                    acc.user[[z, u]] += w;
                    acc.tag[[z, t]] += w;
                }
                acc.scratch = post;
                Ok(())
            },
            MwaStats::merge,
        )?;
        let ll = acc.log_likelihood;
        Ok((acc, ll))
    }

    fn maximization(&mut self, acc: MwaStats, _corpus: &Corpus) {
        let total: f64 = acc.topic.iter().sum();
        self.p_z = acc.topic.iter().map(|w| w / total).collect();
        for (table, new) in [
            (&mut self.p_r_given_z, &acc.resource),
            (&mut self.p_u_given_z, &acc.user),
            (&mut self.p_t_given_z, &acc.tag),
        ] {
            for (mut row, new_row) in table.axis_iter_mut(Axis(0)).zip(new.axis_iter(Axis(0))) {
                // an aspect that lost all mass keeps its previous rows
                if new_row.sum() > 0.0 {
                    row.assign(&new_row);
                    train::normalize(row);
                }
            }
        }
        debug_assert!(self.normalization_error() < 1e-10);
    }
}

pub fn train_mwa(corpus: &Corpus, cfg: &TrainConfig) -> Result<(MwaModel, TrainReport)> {
    train_mwa_observed(corpus, cfg, |_, _| {})
}

/// As [`train_mwa`], calling `observer(iteration, model)` after every M-step.
pub fn train_mwa_observed(
    corpus: &Corpus,
    cfg: &TrainConfig,
    observer: impl FnMut(usize, &MwaModel),
) -> Result<(MwaModel, TrainReport)> {
    let model = MwaModel::initialize(corpus, cfg)?;
    train::run_em(model, corpus, cfg, observer)
}
