//! Interest-topic model.
//!
//! Users carry a distribution over latent interests i and resources over
//! latent topics z; a tag is drawn from p(t | i, z):
//!
//! p(r, u, t) = sum_{i,z} p(t|i,z) p(i|u) p(z|r) p(u) p(r)
//!
//! p(u) and p(r) are the empirical marginals and never re-estimated. The
//! E-step posterior p(i, z | u, r, t) is folded into the M-step sums triple
//! by triple, so only an I x K scratch table per worker is ever live.

use std::io::Write;

use ndarray::{Array2, Array3, Axis};

use crate::corpus::{Corpus, Triple};
use crate::error::{Error, Result};
use crate::format::{self, Reader};
use crate::similarity::TopicDistribution;
use crate::train::{self, Em, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub struct ItmModel {
    seed: u64,
    /// [I x K x |T|]
    p_t_given_iz: Array3<f64>,
    /// [|U| x I]
    p_i_given_u: Array2<f64>,
    /// [|R| x K]
    p_z_given_r: Array2<f64>,
    p_u: Vec<f64>,
    p_r: Vec<f64>,
}

impl ItmModel {
    pub fn new(
        p_t_given_iz: Array3<f64>,
        p_i_given_u: Array2<f64>,
        p_z_given_r: Array2<f64>,
        p_u: Vec<f64>,
        p_r: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let (i, k, _) = p_t_given_iz.dim();
        if i == 0
            || k == 0
            || p_i_given_u.dim() != (p_u.len(), i)
            || p_z_given_r.dim() != (p_r.len(), k)
        {
            return Err(Error::DimensionMismatch(format!(
                "p(t|i,z) is {:?}, p(i|u) is {:?}, p(z|r) is {:?}, |p(u)|={}, |p(r)|={}",
                p_t_given_iz.dim(),
                p_i_given_u.dim(),
                p_z_given_r.dim(),
                p_u.len(),
                p_r.len()
            )));
        }
        let model = ItmModel {
            seed,
            p_t_given_iz,
            p_i_given_u,
            p_z_given_r,
            p_u,
            p_r,
        };
        let err = model.normalization_error();
        let negative = model
            .p_t_given_iz
            .iter()
            .chain(model.p_i_given_u.iter())
            .chain(model.p_z_given_r.iter())
            .chain(model.p_u.iter())
            .chain(model.p_r.iter())
            .any(|&x| !(x >= 0.0));
        if !(err <= 1e-10) || negative {
            return Err(Error::InvalidDistribution(format!(
                "interest-topic tables are not normalized (max error {err})"
            )));
        }
        Ok(model)
    }

    /// Random near-uniform conditionals, empirical p(u) and p(r).
    ///
    /// Random draws are taken in the order p(t|i,z), p(z|r), p(i|u); with a
    /// single interest this reproduces the pLSA initialization for the same seed.
    pub fn initialize(corpus: &Corpus, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let (n_i, k) = (cfg.interests, cfg.topics);
        let (n_r, n_u, n_t) = (
            corpus.num_resources(),
            corpus.num_users(),
            corpus.num_tags(),
        );
        let cells =
            n_i as u128 * k as u128 * n_t as u128 + (n_u * n_i + n_r * k + n_u + n_r) as u128;
        cfg.check_budget(cells)?;
        if k > n_t {
            log::warn!("{k} topics exceed the {n_t} distinct tags");
        }
        let mut rng = cfg.rng();
        let p_t_given_iz = train::random_rows(&mut rng, n_i * k, n_t)
            .into_shape_with_order((n_i, k, n_t))
            .expect("contiguous table");
        let p_z_given_r = train::random_rows(&mut rng, n_r, k);
        let p_i_given_u = train::random_rows(&mut rng, n_u, n_i);
        Ok(ItmModel {
            seed: cfg.seed,
            p_t_given_iz,
            p_i_given_u,
            p_z_given_r,
            p_u: corpus.user_marginal(),
            p_r: corpus.resource_marginal(),
        })
    }

    pub fn uniform(corpus: &Corpus, interests: usize, topics: usize) -> Self {
        let (n_r, n_u, n_t) = (
            corpus.num_resources(),
            corpus.num_users(),
            corpus.num_tags(),
        );
        ItmModel {
            seed: 0,
            p_t_given_iz: Array3::from_elem((interests, topics, n_t), 1.0 / n_t as f64),
            p_i_given_u: Array2::from_elem((n_u, interests), 1.0 / interests as f64),
            p_z_given_r: Array2::from_elem((n_r, topics), 1.0 / topics as f64),
            p_u: corpus.user_marginal(),
            p_r: corpus.resource_marginal(),
        }
    }

    pub fn interests(&self) -> usize {
        self.p_t_given_iz.dim().0
    }

    pub fn topics(&self) -> usize {
        self.p_t_given_iz.dim().1
    }

    pub fn num_tags(&self) -> usize {
        self.p_t_given_iz.dim().2
    }

    pub fn num_users(&self) -> usize {
        self.p_u.len()
    }

    pub fn num_resources(&self) -> usize {
        self.p_r.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p_t_given_iz(&self) -> &Array3<f64> {
        &self.p_t_given_iz
    }

    pub fn p_i_given_u(&self) -> &Array2<f64> {
        &self.p_i_given_u
    }

    pub fn p_z_given_r(&self) -> &Array2<f64> {
        &self.p_z_given_r
    }

    pub fn p_u(&self) -> &[f64] {
        &self.p_u
    }

    pub fn p_r(&self) -> &[f64] {
        &self.p_r
    }

    pub fn joint(&self, r: usize, u: usize, t: usize) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.interests() {
            for z in 0..self.topics() {
                sum += self.p_t_given_iz[[i, z, t]]
                    * self.p_i_given_u[[u, i]]
                    * self.p_z_given_r[[r, z]];
            }
        }
        sum * self.p_u[u] * self.p_r[r]
    }

    /// Fills `post` with the normalized posterior and returns the normalizer
    /// sum_{i,z} p(t|i,z) p(i|u) p(z|r).
    fn fill_posterior(&self, r: usize, u: usize, t: usize, post: &mut Array2<f64>) -> f64 {
        let p_z = self.p_z_given_r.row(r);
        let mut denom = 0.0;
        for (i, mut row) in post.axis_iter_mut(Axis(0)).enumerate() {
            let p_i = self.p_i_given_u[[u, i]];
            for (z, slot) in row.iter_mut().enumerate() {
                *slot = self.p_t_given_iz[[i, z, t]] * p_i * p_z[z];
                denom += *slot;
            }
        }
        if denom > 0.0 {
            post.mapv_inplace(|p| p / denom);
        }
        denom
    }

    fn check_ids(&self, r: usize, u: usize, t: usize) -> Result<()> {
        if r >= self.num_resources() {
            return Err(Error::UnknownResource(r));
        }
        if u >= self.num_users() || t >= self.num_tags() {
            return Err(Error::DimensionMismatch(format!(
                "(u={u}, t={t}) out of range"
            )));
        }
        Ok(())
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
                "interest-topic model has (|R|,|U|,|T|)={model:?}, corpus has {data:?}"
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

    pub fn normalization_error(&self) -> f64 {
        let (n_i, k, n_t) = self.p_t_given_iz.dim();
        let tags = self
            .p_t_given_iz
            .view()
            .into_shape_with_order((n_i * k, n_t))
            .expect("standard layout")
            .to_owned();
        train::max_row_error(&tags)
            .max(train::max_row_error(&self.p_i_given_u))
            .max(train::max_row_error(&self.p_z_given_r))
            .max(train::vector_error(&self.p_u))
            .max(train::vector_error(&self.p_r))
    }

    /// Sections: header `itm I K |R| |U| |T| seed`, p(u), p(r), then I*K rows
    /// of p(t|i,z) ordered by interest then topic, |U| rows of p(i|u), and
    /// |R| rows of p(z|r).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        format::write_version(&mut w)?;
        writeln!(
            w,
            "itm {} {} {} {} {} {}",
            self.interests(),
            self.topics(),
            self.num_resources(),
            self.num_users(),
            self.num_tags(),
            self.seed
        )?;
        format::write_row(&mut w, self.p_u.iter().copied())?;
        format::write_row(&mut w, self.p_r.iter().copied())?;
        for plane in self.p_t_given_iz.outer_iter() {
            for row in plane.rows() {
                format::write_row(&mut w, row.iter().copied())?;
            }
        }
        format::write_table(&mut w, &self.p_i_given_u)?;
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
        let fields = reader.header("itm")?;
        let line = reader.line_no();
        format::expect_fields(&fields, 6, line)?;
        let n_i: usize = format::parse_field(&fields, 0, "I", line)?;
        let k: usize = format::parse_field(&fields, 1, "K", line)?;
        let n_r: usize = format::parse_field(&fields, 2, "|R|", line)?;
        let n_u: usize = format::parse_field(&fields, 3, "|U|", line)?;
        let n_t: usize = format::parse_field(&fields, 4, "|T|", line)?;
        let seed: u64 = format::parse_field(&fields, 5, "seed", line)?;
        let p_u = reader.row(n_u)?;
        let p_r = reader.row(n_r)?;
        let p_t_given_iz = reader.table3(n_i, k, n_t)?;
        let p_i_given_u = reader.table(n_u, n_i)?;
        let p_z_given_r = reader.table(n_r, k)?;
        ItmModel::new(p_t_given_iz, p_i_given_u, p_z_given_r, p_u, p_r, seed)
    }
}

/// Posterior p(i, z | u, r, t) as an [I x K] table.
pub fn itm_e_step(model: &ItmModel, r: usize, u: usize, t: usize) -> Result<Array2<f64>> {
    model.check_ids(r, u, t)?;
    let mut post = Array2::zeros((model.interests(), model.topics()));
    if !(model.fill_posterior(r, u, t, &mut post) > 0.0) {
        return Err(Error::DegeneratePosterior(format!("(r={r}, u={u}, t={t})")));
    }
    Ok(post)
}

/// Re-estimates p(t|i,z), p(i|u) and p(z|r) from one posterior table per
/// corpus triple (aligned with `corpus.triples()`).
pub fn itm_m_step(
    model: &ItmModel,
    corpus: &Corpus,
    posteriors: &[Array2<f64>],
) -> Result<ItmModel> {
    model.check_dims(corpus)?;
    if posteriors.len() != corpus.triples().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} posteriors for {} triples",
            posteriors.len(),
            corpus.triples().len()
        )));
    }
    let shape = (model.interests(), model.topics());
    let mut acc = ItmStats::new(model);
    for (tr, post) in corpus.triples().iter().zip(posteriors) {
        if post.dim() != shape {
            return Err(Error::DimensionMismatch(format!(
                "posterior is {:?}, expected {shape:?}",
                post.dim()
            )));
        }
        acc.add(tr, post);
    }
    let mut next = model.clone();
    next.maximization(acc, corpus);
    Ok(next)
}

/// Sum over observed triples of n(r, u, t) ln p(r, u, t).
pub fn itm_log_likelihood(model: &ItmModel, corpus: &Corpus) -> Result<f64> {
    model.check_dims(corpus)?;
    Ok(corpus
        .triples()
        .iter()
        .map(|tr| tr.n as f64 * train::ln_or_neg_inf(model.joint(tr.r, tr.u, tr.t)))
        .sum())
}

pub(crate) struct ItmStats {
    tag: Array3<f64>,
    interest: Array2<f64>,
    topic: Array2<f64>,
    log_likelihood: f64,
    scratch: Array2<f64>,
}

impl ItmStats {
    fn new(model: &ItmModel) -> Self {
        let (n_i, k, n_t) = model.p_t_given_iz.dim();
        ItmStats {
            tag: Array3::zeros((n_i, k, n_t)),
            interest: Array2::zeros((model.num_users(), n_i)),
            topic: Array2::zeros((model.num_resources(), k)),
            log_likelihood: 0.0,
            scratch: Array2::zeros((n_i, k)),
        }
    }

    fn add(&mut self, tr: &Triple, post: &Array2<f64>) {
        let n = tr.n as f64;
        for ((i, z), &p) in post.indexed_iter() {
            let w = n * p;
            self.tag[[i, z, tr.t]] += w;
            self.interest[[tr.u, i]] += w;
            self.topic[[tr.r, z]] += w;
        }
    }

    fn merge(&mut self, other: ItmStats) {
        self.tag += &other.tag;
        self.interest += &other.interest;
        self.topic += &other.topic;
        self.log_likelihood += other.log_likelihood;
    }
}

impl Em for ItmModel {
    type Acc = ItmStats;

    fn expectation(&self, corpus: &Corpus, workers: usize) -> Result<(ItmStats, f64)> {
        let acc = train::accumulate(
            corpus.triples(),
            workers,
            || ItmStats::new(self),
            |acc, tr| {
                let mut post = std::mem::take(&mut acc.scratch);
                let denom = self.fill_posterior(tr.r, tr.u, tr.t, &mut post);
                if !(denom > 0.0) {
                    return Err(Error::DegeneratePosterior(format!(
                        "(r={}, u={}, t={})",
                        tr.r, tr.u, tr.t
                    )));
                }
                debug_assert!((post.sum() - 1.0).abs() < 1e-9);
                acc.log_likelihood += tr.n as f64 * (denom * self.p_u[tr.u] * self.p_r[tr.r]).ln();
                acc.add(tr, &post);
                acc.scratch = post;
                Ok(())
            },
            ItmStats::merge,
        )?;
        let ll = acc.log_likelihood;
        Ok((acc, ll))
    }

    fn maximization(&mut self, acc: ItmStats, corpus: &Corpus) {
        let (n_i, k, _) = self.p_t_given_iz.dim();
        for i in 0..n_i {
            for z in 0..k {
                let new = acc.tag.slice(ndarray::s![i, z, ..]);
                // an (interest, topic) cell that lost all mass keeps its row
                if new.sum() > 0.0 {
                    let mut row = self.p_t_given_iz.slice_mut(ndarray::s![i, z, ..]);
                    row.assign(&new);
                    train::normalize(row);
                }
            }
        }
        // row sums equal n(u) and n(r); dividing by the accumulated sum keeps
        // rounding error below the stored counts'
        debug_assert!(acc
            .interest
            .sum_axis(Axis(1))
            .iter()
            .zip(corpus.user_counts())
            .all(|(s, &n)| (s - n as f64).abs() <= 1e-9 * n as f64));
        self.p_i_given_u = acc.interest;
        for row in self.p_i_given_u.rows_mut() {
            assert!(train::normalize(row), "every user has n(u) > 0");
        }
        self.p_z_given_r = acc.topic;
        for row in self.p_z_given_r.rows_mut() {
            assert!(train::normalize(row), "every resource has n(r) > 0");
        }
        debug_assert!(self.normalization_error() < 1e-10);
    }
}

pub fn train_itm(corpus: &Corpus, cfg: &TrainConfig) -> Result<(ItmModel, TrainReport)> {
    train_itm_observed(corpus, cfg, |_, _| {})
}

/// As [`train_itm`], calling `observer(iteration, model)` after every M-step.
pub fn train_itm_observed(
    corpus: &Corpus,
    cfg: &TrainConfig,
    observer: impl FnMut(usize, &ItmModel),
) -> Result<(ItmModel, TrainReport)> {
    let model = ItmModel::initialize(corpus, cfg)?;
    train::run_em(model, corpus, cfg, observer)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::corpus::ingest_triples;
    use crate::plsa::{plsa_triple_log_likelihood, train_plsa};
    use ndarray::{array, Array3};

    fn corpus(text: &str) -> Corpus {
        ingest_triples(text.as_bytes()).unwrap()
    }

    const TOY: &str = "a\tu1\tx\t3\na\tu2\ty\nb\tu1\ty\t2\nb\tu3\tz\nc\tu2\tz\t4\nc\tu3\tx\nd\tu1\tw\t2\nd\tu2\tx\n";

    /// Two users, two resources, two tags; parameters from the worked example
    /// with tag 0 carrying the listed p(t|i,z).
    fn worked_example() -> (ItmModel, Corpus) {
        let c = corpus("r0\tu0\tt0\nr1\tu1\tt1\n");
        let mut p_t = Array3::zeros((2, 2, 2));
        for (i, z, p) in [(0, 0, 0.5), (0, 1, 0.2), (1, 0, 0.3), (1, 1, 0.7)] {
            p_t[[i, z, 0]] = p;
            p_t[[i, z, 1]] = 1.0 - p;
        }
        let m = ItmModel::new(
            p_t,
            array![[0.6, 0.4], [0.5, 0.5]],
            array![[0.9, 0.1], [0.5, 0.5]],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            0,
        )
        .unwrap();
        (m, c)
    }

    #[test]
    fn worked_posterior() {
        let (m, _) = worked_example();
        let post = itm_e_step(&m, 0, 0, 0).unwrap();
        let raw = [[0.27, 0.012], [0.108, 0.028]];
        let total = 0.418;
        for i in 0..2 {
            for z in 0..2 {
                assert!(
                    (post[[i, z]] - raw[i][z] / total).abs() < 1e-15,
                    "({i},{z})"
                );
            }
        }
    }

    #[test]
    fn uniform_and_trivial_posteriors() {
        let c = corpus(TOY);
        let post = itm_e_step(&ItmModel::uniform(&c, 3, 4), 1, 2, 0).unwrap();
        assert!(post.iter().all(|&p| (p - 1.0 / 12.0).abs() < 1e-15));
        let post = itm_e_step(&ItmModel::uniform(&c, 1, 1), 1, 2, 0).unwrap();
        assert_eq!(post, array![[1.0]]);
    }

    #[test]
    fn degenerate_posterior_is_reported() {
        let c = corpus("a\tu\tx\na\tu\ty\n");
        let p_t = Array3::from_shape_vec((1, 1, 2), vec![1.0, 0.0]).unwrap();
        let m = ItmModel::new(p_t, array![[1.0]], array![[1.0]], vec![1.0], vec![1.0], 0).unwrap();
        let err = itm_e_step(&m, 0, 0, 1).unwrap_err();
        assert!(err.is_numeric());
        assert!(err.to_string().contains("(r=0, u=0, t=1)"));
        assert_eq!(itm_log_likelihood(&m, &c).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn m_step_single_triple() {
        let (m, _) = worked_example();
        let c = corpus("r0\tu0\tt0\n");
        let single = ItmModel::new(
            m.p_t_given_iz()
                .slice(ndarray::s![.., .., 0..1])
                .mapv(|_| 1.0),
            m.p_i_given_u().slice(ndarray::s![0..1, ..]).to_owned(),
            m.p_z_given_r().slice(ndarray::s![0..1, ..]).to_owned(),
            vec![1.0],
            vec![1.0],
            0,
        )
        .unwrap();
        let post = itm_e_step(&m, 0, 0, 0).unwrap();
        let next = itm_m_step(&single, &c, std::slice::from_ref(&post)).unwrap();
        let by_interest = post.sum_axis(Axis(1));
        let by_topic = post.sum_axis(Axis(0));
        for i in 0..2 {
            assert!((next.p_i_given_u()[[0, i]] - by_interest[i]).abs() < 1e-15);
        }
        for z in 0..2 {
            assert!((next.p_z_given_r()[[0, z]] - by_topic[z]).abs() < 1e-15);
        }
    }

    #[test]
    fn m_step_uniform_posteriors() {
        let c = corpus(TOY);
        let m = ItmModel::uniform(&c, 2, 3);
        let posts = vec![Array2::from_elem((2, 3), 1.0 / 6.0); c.triples().len()];
        let next = itm_m_step(&m, &c, &posts).unwrap();
        assert!(next
            .p_z_given_r()
            .iter()
            .all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert!(next.p_i_given_u().iter().all(|&p| (p - 0.5).abs() < 1e-15));
        assert!(itm_m_step(&m, &c, &posts[1..]).is_err());
    }

    #[test]
    fn m_step_matches_brute_force_loop() {
        let c = corpus("a\tu1\tx\t2\nb\tu2\ty\na\tu2\ty\t3\n");
        let cfg = TrainConfig {
            interests: 2,
            topics: 2,
            seed: 17,
            ..Default::default()
        };
        let m = ItmModel::initialize(&c, &cfg).unwrap();
        let posts: Vec<_> = c
            .triples()
            .iter()
            .map(|tr| itm_e_step(&m, tr.r, tr.u, tr.t).unwrap())
            .collect();
        let next = itm_m_step(&m, &c, &posts).unwrap();

        let count = |r: usize, u: usize, t: usize| -> f64 {
            c.triples()
                .iter()
                .find(|tr| (tr.r, tr.u, tr.t) == (r, u, t))
                .map_or(0.0, |tr| tr.n as f64)
        };
        let post = |r: usize, u: usize, t: usize, i: usize, z: usize| -> f64 {
            let w = |i: usize, z: usize| {
                m.p_t_given_iz()[[i, z, t]] * m.p_i_given_u()[[u, i]] * m.p_z_given_r()[[r, z]]
            };
            let total: f64 = (0..2)
                .flat_map(|i| (0..2).map(move |z| (i, z)))
                .map(|(i, z)| w(i, z))
                .sum();
            w(i, z) / total
        };
        let (n_r, n_u, n_t) = (c.num_resources(), c.num_users(), c.num_tags());
        for i in 0..2 {
            for z in 0..2 {
                let mut num = vec![0.0; n_t];
                let mut den = 0.0;
                for r in 0..n_r {
                    for u in 0..n_u {
                        for t in 0..n_t {
                            let v = count(r, u, t) * post(r, u, t, i, z);
                            num[t] += v;
                            den += v;
                        }
                    }
                }
                for t in 0..n_t {
                    assert!((next.p_t_given_iz()[[i, z, t]] - num[t] / den).abs() < 1e-12);
                }
            }
        }
        for u in 0..n_u {
            for i in 0..2 {
                let mut s = 0.0;
                for r in 0..n_r {
                    for t in 0..n_t {
                        s += count(r, u, t) * (0..2).map(|z| post(r, u, t, i, z)).sum::<f64>();
                    }
                }
                let expected = s / c.user_count(u) as f64;
                assert!((next.p_i_given_u()[[u, i]] - expected).abs() < 1e-12);
            }
        }
        for r in 0..n_r {
            for z in 0..2 {
                let mut s = 0.0;
                for u in 0..n_u {
                    for t in 0..n_t {
                        s += count(r, u, t) * (0..2).map(|i| post(r, u, t, i, z)).sum::<f64>();
                    }
                }
                let expected = s / c.resource_count(r) as f64;
                assert!((next.p_z_given_r()[[r, z]] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn likelihood_examples() {
        let c = corpus("a\tu\tx\n");
        let m = ItmModel::uniform(&c, 2, 2);
        assert_eq!(itm_log_likelihood(&m, &c).unwrap(), 0.0);

        // one observed triple among 4 tags and 2 users / resources
        let c = corpus("a\tu\tx\nb\tv\ty\nb\tv\tz\nb\tv\tw\n");
        let m = ItmModel::uniform(&c, 1, 1);
        let (r, u, t) = (0, 0, 0);
        let expected = (m.p_u()[u] * m.p_r()[r] * 0.25).ln();
        assert!((m.joint(r, u, t).ln() - expected).abs() < 1e-15);
        assert!((expected - (0.25f64 * 0.25 * 0.25).ln()).abs() < 1e-15);
    }

    #[test]
    fn single_cell_converges_in_one_step() {
        let c = corpus(TOY);
        let cfg = TrainConfig {
            interests: 1,
            topics: 1,
            ..Default::default()
        };
        let mut after_first = None;
        let (_, report) = train_itm_observed(&c, &cfg, |iter, m| {
            if iter == 1 {
                after_first = Some(m.clone());
            }
        })
        .unwrap();
        let m = after_first.unwrap();
        for (t, p) in c.tag_marginal().iter().enumerate() {
            assert!((m.p_t_given_iz()[[0, 0, t]] - p).abs() < 1e-15);
        }
        assert!(report.iterations() <= 2);
    }

    #[test]
    fn single_interest_matches_plsa_over_triples() {
        let c = corpus(TOY);
        for seed in [1, 2, 3] {
            let cfg = TrainConfig {
                interests: 1,
                topics: 2,
                seed,
                tol: 1e-12,
                max_iters: 300,
                ..Default::default()
            };
            let (itm, itm_report) = train_itm(&c, &cfg).unwrap();
            let (plsa, _) = train_plsa(&c, &cfg).unwrap();
            let via_plsa = plsa_triple_log_likelihood(&plsa, &c).unwrap();
            assert!((itm_report.final_log_likelihood() - via_plsa).abs() < 1e-6);
            assert!((itm_log_likelihood(&itm, &c).unwrap() - via_plsa).abs() < 1e-6);
        }
    }

    #[test]
    fn empirical_marginals_are_fixed() {
        let c = corpus(TOY);
        let cfg = TrainConfig {
            interests: 2,
            topics: 2,
            seed: 4,
            max_iters: 10,
            ..Default::default()
        };
        let (m, _) = train_itm(&c, &cfg).unwrap();
        assert_eq!(m.p_u(), c.user_marginal());
        assert_eq!(m.p_r(), c.resource_marginal());
    }

    #[test]
    fn memory_budget_rejects_before_allocation() {
        let c = corpus(TOY);
        let cfg = TrainConfig {
            interests: 1 << 20,
            topics: 1 << 20,
            memory_budget: 1 << 30,
            ..Default::default()
        };
        assert!(matches!(
            train_itm(&c, &cfg),
            Err(Error::MemoryBudget { .. })
        ));
    }

    #[test]
    fn label_permutation_leaves_likelihood_unchanged() {
        let c = corpus(TOY);
        let cfg = TrainConfig {
            interests: 2,
            topics: 3,
            seed: 8,
            max_iters: 15,
            ..Default::default()
        };
        let (m, _) = train_itm(&c, &cfg).unwrap();
        // swap interests 0,1 and rotate topics
        let topic_perm = [2, 0, 1];
        let mut p_t = m.p_t_given_iz().clone();
        let mut p_i = m.p_i_given_u().clone();
        let mut p_z = m.p_z_given_r().clone();
        for i in 0..2 {
            for z in 0..3 {
                p_t.slice_mut(ndarray::s![1 - i, topic_perm[z], ..])
                    .assign(&m.p_t_given_iz().slice(ndarray::s![i, z, ..]));
            }
        }
        for u in 0..c.num_users() {
            p_i[[u, 0]] = m.p_i_given_u()[[u, 1]];
            p_i[[u, 1]] = m.p_i_given_u()[[u, 0]];
        }
        for r in 0..c.num_resources() {
            for z in 0..3 {
                p_z[[r, topic_perm[z]]] = m.p_z_given_r()[[r, z]];
            }
        }
        let permuted = ItmModel::new(p_t, p_i, p_z, m.p_u().to_vec(), m.p_r().to_vec(), 0).unwrap();
        let a = itm_log_likelihood(&m, &c).unwrap();
        let b = itm_log_likelihood(&permuted, &c).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn serialization_round_trip() {
        let c = corpus(TOY);
        let cfg = TrainConfig {
            interests: 2,
            topics: 3,
            seed: 6,
            max_iters: 5,
            ..Default::default()
        };
        let (m, _) = train_itm(&c, &cfg).unwrap();
        let text = m.to_text();
        assert_eq!(text.lines().nth(1).unwrap(), "itm 2 3 4 3 4 6");
        assert_eq!(ItmModel::from_text(&text).unwrap(), m);
    }

    #[test]
    fn topic_distribution_contract() {
        let c = corpus(TOY);
        assert_eq!(
            ItmModel::uniform(&c, 2, 1)
                .topic_distribution(0)
                .unwrap()
                .probs(),
            [1.0]
        );
        assert_eq!(
            ItmModel::uniform(&c, 2, 4)
                .topic_distribution(3)
                .unwrap()
                .probs(),
            [0.25; 4]
        );
        assert!(ItmModel::uniform(&c, 2, 4).topic_distribution(4).is_err());
    }
}
