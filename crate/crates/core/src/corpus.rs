//! Annotation triples and the count statistics every model consumes.
//!
//! A bookmark of resource `r` by user `u` with tags `{t1, t2, ...}` expands
//! into one `(r, u, t)` triple per tag. Repeated triples are merged into a
//! single weighted entry.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Default lower bound on tag frequency used by the ingestion pipeline.
pub const DEFAULT_MIN_TAG_FREQ: u64 = 10;
/// Default upper bound on tag frequency used by the ingestion pipeline.
pub const DEFAULT_MAX_TAG_FREQ: u64 = 10_000;

/// Interned strings with dense 0-based ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, adding it if unseen.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.entries.len();
        self.entries.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

impl<S: AsRef<str>> FromIterator<S> for Vocab {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut vocab = Vocab::new();
        for s in iter {
            vocab.intern(s.as_ref());
        }
        vocab
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub r: usize,
    pub u: usize,
    pub t: usize,
    pub n: u64,
}

/// Count of a resource-tag pair summed over users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCount {
    pub r: usize,
    pub t: usize,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusStats {
    pub resources: usize,
    pub users: usize,
    pub tags: usize,
    pub triples: usize,
    pub total: u64,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "resources\t{}", self.resources)?;
        writeln!(f, "users\t{}", self.users)?;
        writeln!(f, "tags\t{}", self.tags)?;
        writeln!(f, "triples\t{}", self.triples)?;
        writeln!(f, "total\t{}", self.total)
    }
}

/// Immutable, indexed triple collection.
///
/// `triples` is sorted by `(r, u, t)` and `pairs` by `(r, t)`, so iteration
/// order never depends on hashing.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    resources: Vocab,
    users: Vocab,
    tags: Vocab,
    triples: Vec<Triple>,
    pairs: Vec<PairCount>,
    n_r: Vec<u64>,
    n_u: Vec<u64>,
    n_t: Vec<u64>,
    total: u64,
}

/// Accumulates named triples, merging duplicates.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    resources: Vocab,
    users: Vocab,
    tags: Vocab,
    counts: HashMap<(usize, usize, usize), u64>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, resource: &str, user: &str, tag: &str, n: u64) {
        if n == 0 {
            return;
        }
        let key = (
            self.resources.intern(resource),
            self.users.intern(user),
            self.tags.intern(tag),
        );
        *self.counts.entry(key).or_insert(0) += n;
    }

    pub fn build(self) -> Result<Corpus> {
        if self.counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Corpus::from_parts(
            self.resources,
            self.users,
            self.tags,
            self.counts
                .into_iter()
                .map(|((r, u, t), n)| Triple { r, u, t, n })
                .collect(),
        ))
    }
}

impl Corpus {
    fn from_parts(resources: Vocab, users: Vocab, tags: Vocab, mut triples: Vec<Triple>) -> Self {
        triples.sort_unstable_by_key(|tr| (tr.r, tr.u, tr.t));

        let mut n_r = vec![0u64; resources.len()];
        let mut n_u = vec![0u64; users.len()];
        let mut n_t = vec![0u64; tags.len()];
        let mut rt: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for tr in &triples {
            n_r[tr.r] += tr.n;
            n_u[tr.u] += tr.n;
            n_t[tr.t] += tr.n;
            *rt.entry((tr.r, tr.t)).or_insert(0) += tr.n;
        }
        let total = n_r.iter().sum();
        let pairs = rt
            .into_iter()
            .map(|((r, t), n)| PairCount { r, t, n })
            .collect();

        Corpus {
            resources,
            users,
            tags,
            triples,
            pairs,
            n_r,
            n_u,
            n_t,
            total,
        }
    }

    pub fn resources(&self) -> &Vocab {
        &self.resources
    }

    pub fn users(&self) -> &Vocab {
        &self.users
    }

    pub fn tags(&self) -> &Vocab {
        &self.tags
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Resource-tag counts summed over users, sorted by `(r, t)`.
    pub fn pairs(&self) -> &[PairCount] {
        &self.pairs
    }

    pub fn resource_count(&self, r: usize) -> u64 {
        self.n_r[r]
    }

    pub fn user_count(&self, u: usize) -> u64 {
        self.n_u[u]
    }

    /// Weighted tag frequency, the quantity `filter_tags` thresholds on.
    pub fn tag_count(&self, t: usize) -> u64 {
        self.n_t[t]
    }

    pub fn resource_counts(&self) -> &[u64] {
        &self.n_r
    }

    pub fn user_counts(&self) -> &[u64] {
        &self.n_u
    }

    pub fn tag_counts(&self) -> &[u64] {
        &self.n_t
    }

    /// Total weight N.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical p(r) = n(r)/N.
    pub fn resource_marginal(&self) -> Vec<f64> {
        empirical(&self.n_r, self.total)
    }

    /// Empirical p(u) = n(u)/N.
    pub fn user_marginal(&self) -> Vec<f64> {
        empirical(&self.n_u, self.total)
    }

    pub fn tag_marginal(&self) -> Vec<f64> {
        empirical(&self.n_t, self.total)
    }

    /// Sparse map (r, t) -> n(r, t).
    pub fn aggregate_rt(&self) -> BTreeMap<(usize, usize), u64> {
        self.pairs.iter().map(|p| ((p.r, p.t), p.n)).collect()
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            resources: self.num_resources(),
            users: self.num_users(),
            tags: self.num_tags(),
            triples: self.triples.len(),
            total: self.total,
        }
    }

    /// Keeps triples whose weighted tag frequency lies in `[min_freq, max_freq]`.
    ///
    /// Ids are re-compacted in their original relative order; resources and
    /// users left without triples disappear from their vocabularies.
    pub fn filter_tags(&self, min_freq: u64, max_freq: u64) -> Result<Corpus> {
        if min_freq < 1 || min_freq > max_freq {
            return Err(Error::InvalidConfig(format!(
                "tag frequency bounds must satisfy 1 <= min <= max, got [{min_freq}, {max_freq}]"
            )));
        }
        let kept: Vec<Triple> = self
            .triples
            .iter()
            .filter(|tr| (min_freq..=max_freq).contains(&self.n_t[tr.t]))
            .copied()
            .collect();
        if kept.is_empty() {
            return Err(Error::AllFiltered);
        }
        Ok(self.compact(kept))
    }

    fn compact(&self, triples: Vec<Triple>) -> Corpus {
        fn remap(vocab: &Vocab, used: &[bool]) -> (Vocab, Vec<usize>) {
            let mut out = Vocab::new();
            let mut ids = vec![usize::MAX; used.len()];
            for (old, _) in used.iter().enumerate().filter(|(_, &u)| u) {
                ids[old] = out.intern(vocab.name(old).expect("id in range"));
            }
            (out, ids)
        }

        let mut used_r = vec![false; self.num_resources()];
        let mut used_u = vec![false; self.num_users()];
        let mut used_t = vec![false; self.num_tags()];
        for tr in &triples {
            used_r[tr.r] = true;
            used_u[tr.u] = true;
            used_t[tr.t] = true;
        }
        let (resources, map_r) = remap(&self.resources, &used_r);
        let (users, map_u) = remap(&self.users, &used_u);
        let (tags, map_t) = remap(&self.tags, &used_t);
        let triples = triples
            .into_iter()
            .map(|tr| Triple {
                r: map_r[tr.r],
                u: map_u[tr.u],
                t: map_t[tr.t],
                n: tr.n,
            })
            .collect();
        Corpus::from_parts(resources, users, tags, triples)
    }

    /// Writes the corpus in the triple file format, one weighted triple per line.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# resource\tuser\ttag\tcount")?;
        for tr in &self.triples {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.resources.entries[tr.r],
                self.users.entries[tr.u],
                self.tags.entries[tr.t],
                tr.n
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn empirical(counts: &[u64], total: u64) -> Vec<f64> {
    let total = total as f64;
    counts.iter().map(|&n| n as f64 / total).collect()
}

/// Reads tab-separated `resource, user, tag[, count]` records.
///
/// Lines starting with `#` and blank lines are skipped. Line numbers in
/// errors are 1-based.
pub fn ingest_triples<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut builder = CorpusBuilder::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLine {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(malformed(format!(
                "expected 3 or 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
            return Err(malformed(format!("field {} is empty", pos + 1)));
        }
        let n = match fields.get(3) {
            None => 1,
            Some(raw) => match raw.parse::<i64>() {
                Ok(n) if n >= 1 => n as u64,
                Ok(n) => return Err(malformed(format!("non-positive count {n}"))),
                Err(_) => return Err(malformed(format!("invalid count {raw:?}"))),
            },
        };
        builder.add(fields[0], fields[1], fields[2], n);
    }
    builder.build()
}
