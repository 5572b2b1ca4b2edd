//! Latent topic models over social annotation triples.
//!
//! Three models are trained with EM on `(resource, user, tag)` counts:
//! pLSA over resource-tag pairs, a three-way aspect model, and the
//! interest-topic model that separates user interests from resource topics.
//! Each yields a topic distribution p(z|r) per resource; resources are then
//! ranked by Jensen-Shannon divergence from a seed and scored against
//! relevance labels.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod eval;
mod format;
pub mod itm;
pub mod model;
pub mod mwa;
pub mod plsa;
pub mod similarity;
pub mod synthgen;
pub mod train;

pub use corpus::{ingest_triples, Corpus, CorpusBuilder, CorpusStats, PairCount, Triple, Vocab};
pub use error::{Error, Result};
pub use eval::{count_relevant_topk, effort_to_n, Label, LabelSet, TopKCounts};
pub use itm::{
    itm_e_step, itm_log_likelihood, itm_m_step, train_itm, train_itm_observed, ItmModel,
};
pub use model::Model;
pub use mwa::{mwa_log_likelihood, train_mwa, train_mwa_observed, MwaModel};
pub use plsa::{
    plsa_log_likelihood, plsa_triple_log_likelihood, train_plsa, train_plsa_observed, PlsaModel,
};
pub use similarity::{
    js_divergence, rank_by_seed, read_ranking, write_ranking, RankedEntry, RankedList, RankingFile,
    TopicDistribution,
};
pub use synthgen::{planted_two_topic_itm, sample_corpus, PlantedSpec};
pub use train::{ModelKind, TrainConfig, TrainReport};
