//! Jensen-Shannon divergence between topic distributions and seed-relative ranking.
//!
//! Divergences use the natural logarithm, so they lie in `[0, ln 2]`.

use std::io::{BufRead, Write};

use crate::corpus::Vocab;
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-10;

/// A probability vector p(z|r) over topics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution(Vec<f64>);

impl TopicDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "entry {bad} is not a probability"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(TopicDistribution(probs))
    }

    pub fn uniform(k: usize) -> Self {
        TopicDistribution(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// KL(p || m) with 0 log 0 = 0. Callers guarantee m > 0 wherever p > 0.
fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen-Shannon divergence in nats.
pub fn js_divergence(p: &TopicDistribution, q: &TopicDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let m: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| 0.5 * (a + b)).collect();
    let js = 0.5 * (kl_to_mixture(&p.0, &m) + kl_to_mixture(&q.0, &m));
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    pub resource: usize,
    pub divergence: f64,
}

/// Resources ordered by ascending divergence from a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub seed: usize,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resources(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.resource)
    }
}

/// Ranks every resource except `seed` by divergence from it. `dists` is
/// indexed by resource id; ties go to the lower id.
pub fn rank_by_seed(dists: &[TopicDistribution], seed: usize) -> Result<RankedList> {
    let seed_dist = dists.get(seed).ok_or(Error::UnknownResource(seed))?;
    let mut entries = dists
        .iter()
        .enumerate()
        .filter(|&(r, _)| r != seed)
        .map(|(resource, d)| {
            Ok(RankedEntry {
                resource,
                divergence: js_divergence(seed_dist, d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| {
        a.divergence
            .total_cmp(&b.divergence)
            .then(a.resource.cmp(&b.resource))
    });
    Ok(RankedList { seed, entries })
}

/// Writes the top `k` entries as `rank<TAB>resource<TAB>divergence` rows
/// after a `# model=... K=... base=e` header. `name` maps ids to resource names.
pub fn write_ranking<'a, W: Write>(
    mut w: W,
    list: &RankedList,
    model: &str,
    topics: usize,
    seed_name: &str,
    k: usize,
    name: impl Fn(usize) -> &'a str,
) -> Result<()> {
    writeln!(w, "# model={model} K={topics} base=e seed={seed_name}")?;
    for (rank, entry) in list.entries.iter().take(k).enumerate() {
        writeln!(
            w,
            "{}\t{}\t{}",
            rank + 1,
            name(entry.resource),
            entry.divergence
        )?;
    }
    w.flush()?;
    Ok(())
}

/// A ranking read back from its TSV form.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingFile {
    /// `key=value` pairs from the header comment, in order.
    pub header: Vec<(String, String)>,
    /// `(resource name, divergence)` in rank order.
    pub rows: Vec<(String, f64)>,
}

impl RankingFile {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Converts to a [`RankedList`] over the ids of `vocab`.
    pub fn to_ranked_list(&self, vocab: &Vocab) -> Result<RankedList> {
        let lookup = |name: &str| {
            vocab.get(name).ok_or_else(|| {
                Error::InvalidConfig(format!("ranked resource {name:?} is not in the corpus"))
            })
        };
        let seed = match self.header_value("seed") {
            Some(name) => lookup(name)?,
            None => usize::MAX,
        };
        let entries = self
            .rows
            .iter()
            .map(|(name, divergence)| {
                Ok(RankedEntry {
                    resource: lookup(name)?,
                    divergence: *divergence,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList { seed, entries })
    }
}

/// Parses the output of [`write_ranking`]. Ranks must run 1, 2, 3, ...
pub fn read_ranking<R: BufRead>(reader: R) -> Result<RankingFile> {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let malformed = |reason: String| Error::MalformedLine {
            line: idx + 1,
            reason,
        };
        if let Some(comment) = line.strip_prefix('#') {
            if header.is_empty() {
                header = comment
                    .split_whitespace()
                    .filter_map(|kv| kv.split_once('='))
                    .map(|(k, v)| (k.to_owned(), v.to_owned()))
                    .collect();
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [rank, name, divergence] = fields[..] else {
            return Err(malformed(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        };
        if rank.parse::<usize>().ok() != Some(rows.len() + 1) {
            return Err(malformed(format!(
                "expected rank {}, found {rank:?}",
                rows.len() + 1
            )));
        }
        let divergence: f64 = divergence
            .parse()
            .map_err(|_| malformed(format!("invalid divergence {divergence:?}")))?;
        rows.push((name.to_owned(), divergence));
    }
    Ok(RankingFile { header, rows })
}
