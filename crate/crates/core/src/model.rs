//! Uniform handling of the three trained model types.

use std::io::Write;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::format::Reader;
use crate::itm::{itm_log_likelihood, train_itm, ItmModel};
use crate::mwa::{mwa_log_likelihood, train_mwa, MwaModel};
use crate::plsa::{plsa_log_likelihood, train_plsa, PlsaModel};
use crate::similarity::TopicDistribution;
use crate::train::{ModelKind, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Plsa(PlsaModel),
    Mwa(MwaModel),
    Itm(ItmModel),
}

impl Model {
    pub fn train(
        kind: ModelKind,
        corpus: &Corpus,
        cfg: &TrainConfig,
    ) -> Result<(Model, TrainReport)> {
        Ok(match kind {
            ModelKind::Plsa => {
                let (m, report) = train_plsa(corpus, cfg)?;
                (Model::Plsa(m), report)
            }
            ModelKind::Mwa => {
                let (m, report) = train_mwa(corpus, cfg)?;
                (Model::Mwa(m), report)
            }
            ModelKind::Itm => {
                let (m, report) = train_itm(corpus, cfg)?;
                (Model::Itm(m), report)
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Plsa(_) => ModelKind::Plsa,
            Model::Mwa(_) => ModelKind::Mwa,
            Model::Itm(_) => ModelKind::Itm,
        }
    }

    pub fn topics(&self) -> usize {
        match self {
            Model::Plsa(m) => m.topics(),
            Model::Mwa(m) => m.topics(),
            Model::Itm(m) => m.topics(),
        }
    }

    pub fn num_resources(&self) -> usize {
        match self {
            Model::Plsa(m) => m.num_resources(),
            Model::Mwa(m) => m.num_resources(),
            Model::Itm(m) => m.num_resources(),
        }
    }

    pub fn check_dims(&self, corpus: &Corpus) -> Result<()> {
        match self {
            Model::Plsa(m) => m.check_dims(corpus),
            Model::Mwa(m) => m.check_dims(corpus),
            Model::Itm(m) => m.check_dims(corpus),
        }
    }

    pub fn log_likelihood(&self, corpus: &Corpus) -> Result<f64> {
        match self {
            Model::Plsa(m) => plsa_log_likelihood(m, corpus),
            Model::Mwa(m) => mwa_log_likelihood(m, corpus),
            Model::Itm(m) => itm_log_likelihood(m, corpus),
        }
    }

    pub fn topic_distribution(&self, r: usize) -> Result<TopicDistribution> {
        match self {
            Model::Plsa(m) => m.topic_distribution(r),
            Model::Mwa(m) => m.topic_distribution(r),
            Model::Itm(m) => m.topic_distribution(r),
        }
    }

    /// p(z|r) for every resource, indexed by resource id.
    pub fn topic_distributions(&self) -> Result<Vec<TopicDistribution>> {
        match self {
            Model::Plsa(m) => m.topic_distributions(),
            Model::Mwa(m) => m.topic_distributions(),
            Model::Itm(m) => m.topic_distributions(),
        }
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        match self {
            Model::Plsa(m) => m.write_to(w),
            Model::Mwa(m) => m.write_to(w),
            Model::Itm(m) => m.write_to(w),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Model::Plsa(m) => m.to_text(),
            Model::Mwa(m) => m.to_text(),
            Model::Itm(m) => m.to_text(),
        }
    }

    /// Parses any model file, dispatching on its header.
    pub fn from_text(text: &str) -> Result<Model> {
        let mut reader = Reader::new(text);
        let model = Self::read(&mut reader)?;
        reader.finish()?;
        Ok(model)
    }

    pub(crate) fn read(reader: &mut Reader<'_>) -> Result<Model> {
        let tag = reader.peek_tag()?;
        match tag.parse::<ModelKind>() {
            Ok(ModelKind::Plsa) => PlsaModel::read(reader).map(Model::Plsa),
            Ok(ModelKind::Mwa) => MwaModel::read(reader).map(Model::Mwa),
            Ok(ModelKind::Itm) => ItmModel::read(reader).map(Model::Itm),
            Err(_) => Err(Error::format(
                reader.line_no() + 1,
                format!("unknown model header `{tag}`"),
            )),
        }
    }
}
