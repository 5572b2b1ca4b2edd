//! Forward sampling of corpora from planted model parameters.
//!
//! Sampled corpora name their entries `r<id>`, `u<id>` and `t<id>` after the
//! planted ids, so recovered structure can be compared by name.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array2, Array3};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CorpusBuilder};
use crate::error::{Error, Result};
use crate::format::{self, Reader};
use crate::itm::ItmModel;
use crate::model::Model;
use crate::mwa::MwaModel;
use crate::plsa::PlsaModel;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    model: Model,
    users: usize,
    n_samples: u64,
    seed: u64,
}

impl PlantedSpec {
    /// `users` only matters for pLSA, whose triples get a uniformly drawn
    /// user; for the other models it must equal the model's user count.
    pub fn new(model: Model, users: usize, n_samples: u64, seed: u64) -> Result<Self> {
        if n_samples < 1 {
            return Err(Error::InvalidSpec("n_samples must be positive".into()));
        }
        let model_users = match &model {
            Model::Plsa(_) => None,
            Model::Mwa(m) => Some(m.num_users()),
            Model::Itm(m) => Some(m.num_users()),
        };
        match model_users {
            None if users < 1 => {
                return Err(Error::InvalidSpec("at least one user is required".into()))
            }
            Some(n) if n != users => {
                return Err(Error::InvalidSpec(format!(
                    "spec declares {users} users but the model has {n}"
                )))
            }
            _ => {}
        }
        Ok(PlantedSpec {
            model,
            users,
            n_samples,
            seed,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_sampling(&self, n_samples: u64, seed: u64) -> Result<Self> {
        PlantedSpec::new(self.model.clone(), self.users, n_samples, seed)
    }

    /// A `spec n_samples seed users` line followed by the model block.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        format::write_version(&mut w)?;
        writeln!(w, "spec {} {} {}", self.n_samples, self.seed, self.users)?;
        let body = self.model.to_text();
        for line in body.lines().filter(|l| !l.starts_with('#')) {
            writeln!(w, "{line}")?;
        }
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
        let fields = reader.header("spec")?;
        let line = reader.line_no();
        format::expect_fields(&fields, 3, line)?;
        let n_samples: u64 = format::parse_field(&fields, 0, "n_samples", line)?;
        let seed: u64 = format::parse_field(&fields, 1, "seed", line)?;
        let users: usize = format::parse_field(&fields, 2, "users", line)?;
        let model = Model::read(&mut reader)?;
        reader.finish()?;
        PlantedSpec::new(model, users, n_samples, seed)
    }
}

fn row_samplers(table: &Array2<f64>, what: &str) -> Result<Vec<WeightedIndex<f64>>> {
    table
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            WeightedIndex::new(row.iter().copied())
                .map_err(|e| Error::InvalidSpec(format!("{what} row {i}: {e}")))
        })
        .collect()
}

fn vector_sampler(v: &[f64], what: &str) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(v.iter().copied()).map_err(|e| Error::InvalidSpec(format!("{what}: {e}")))
}

type Sampler = Box<dyn FnMut(&mut ChaCha8Rng) -> (usize, usize, usize)>;

/// Draws `n_samples` i.i.d. triples and returns their counts keyed by planted
/// `(r, u, t)` ids.
pub fn sample_counts(spec: &PlantedSpec) -> Result<BTreeMap<(usize, usize, usize), u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut counts = BTreeMap::new();
    let mut draw: Sampler = match &spec.model {
        Model::Plsa(m) => {
            let resource = vector_sampler(m.p_r(), "p(r)")?;
            let topic = row_samplers(m.p_z_given_r(), "p(z|r)")?;
            let tag = row_samplers(m.p_t_given_z(), "p(t|z)")?;
            let users = spec.users;
            Box::new(move |rng| {
                let r = resource.sample(rng);
                let z = topic[r].sample(rng);
                let t = tag[z].sample(rng);
                let u = rng.gen_range(0..users);
                (r, u, t)
            })
        }
        Model::Mwa(m) => {
            let aspect = vector_sampler(m.p_z(), "p(z)")?;
            let resource = row_samplers(m.p_r_given_z(), "p(r|z)")?;
            let user = row_samplers(m.p_u_given_z(), "p(u|z)")?;
            let tag = row_samplers(m.p_t_given_z(), "p(t|z)")?;
            Box::new(move |rng| {
                let z = aspect.sample(rng);
                (
                    resource[z].sample(rng),
                    user[z].sample(rng),
                    tag[z].sample(rng),
                )
            })
        }
        Model::Itm(m) => {
            let user = vector_sampler(m.p_u(), "p(u)")?;
            let resource = vector_sampler(m.p_r(), "p(r)")?;
            let interest = row_samplers(m.p_i_given_u(), "p(i|u)")?;
            let topic = row_samplers(m.p_z_given_r(), "p(z|r)")?;
            let (n_i, k, n_t) = m.p_t_given_iz().dim();
            let flat = m
                .p_t_given_iz()
                .to_shape((n_i * k, n_t))
                .expect("standard layout")
                .to_owned();
            let tag = row_samplers(&flat, "p(t|i,z)")?;
            Box::new(move |rng| {
                let u = user.sample(rng);
                let r = resource.sample(rng);
                let i = interest[u].sample(rng);
                let z = topic[r].sample(rng);
                (r, u, tag[i * k + z].sample(rng))
            })
        }
    };
    for _ in 0..spec.n_samples {
        *counts.entry(draw(&mut rng)).or_insert(0) += 1;
    }
    Ok(counts)
}

pub fn sample_corpus(spec: &PlantedSpec) -> Result<Corpus> {
    let mut builder = CorpusBuilder::new();
    for ((r, u, t), n) in sample_counts(spec)? {
        builder.add(&format!("r{r}"), &format!("u{u}"), &format!("t{t}"), n);
    }
    builder.build()
}

/// Resources per planted topic in [`planted_two_topic_itm`].
pub const PLANTED_RESOURCES_PER_TOPIC: usize = 10;

/// Two interests, two topics, 20 resources (r0..r9 on topic 0, r10..r19 on
/// topic 1), 10 users and 16 tags. Topic 0 emits only tags t0..t7 and topic 1
/// only t8..t15; within a topic each interest favours its own half of the
/// block. Users 0..4 lean to interest 0, users 5..9 to interest 1.
pub fn planted_two_topic_itm(n_samples: u64, seed: u64) -> PlantedSpec {
    let (n_i, k, n_r, n_u, n_t) = (2, 2, 2 * PLANTED_RESOURCES_PER_TOPIC, 10, 16);
    let mut p_t = Array3::zeros((n_i, k, n_t));
    for i in 0..n_i {
        for z in 0..k {
            for j in 0..8 {
                let favoured = (j < 4) == (i == 0);
                p_t[[i, z, 8 * z + j]] = if favoured { 0.2 } else { 0.05 };
            }
        }
    }
    let p_i = Array2::from_shape_fn(
        (n_u, n_i),
        |(u, i)| if (u < 5) == (i == 0) { 0.8 } else { 0.2 },
    );
    let p_z = Array2::from_shape_fn((n_r, k), |(r, z)| {
        if (r < PLANTED_RESOURCES_PER_TOPIC) == (z == 0) {
            1.0
        } else {
            0.0
        }
    });
    let model = ItmModel::new(
        p_t,
        p_i,
        p_z,
        vec![1.0 / n_u as f64; n_u],
        vec![1.0 / n_r as f64; n_r],
        0,
    )
    .expect("planted tables are normalized");
    PlantedSpec::new(Model::Itm(model), n_u, n_samples, seed).expect("valid planted spec")
}

/// Convenience constructors used by tests and the acceptance suite.
pub fn plsa_spec(model: PlsaModel, users: usize, n_samples: u64, seed: u64) -> Result<PlantedSpec> {
    PlantedSpec::new(Model::Plsa(model), users, n_samples, seed)
}

pub fn mwa_spec(model: MwaModel, n_samples: u64, seed: u64) -> Result<PlantedSpec> {
    let users = model.num_users();
    PlantedSpec::new(Model::Mwa(model), users, n_samples, seed)
}

pub fn itm_spec(model: ItmModel, n_samples: u64, seed: u64) -> Result<PlantedSpec> {
    let users = model.num_users();
    PlantedSpec::new(Model::Itm(model), users, n_samples, seed)
}
