//! Scoring seed rankings against relevance labels.
//!
//! A resource is a positive when it is labelled `same` (offers the seed's
//! functionality) or `link-to` (links to a page that does).

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::similarity::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Same,
    LinkTo,
    Unrelated,
}

impl Label {
    pub fn is_positive(self) -> bool {
        !matches!(self, Label::Unrelated)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "same" => Ok(Label::Same),
            "link-to" => Ok(Label::LinkTo),
            "unrelated" => Ok(Label::Unrelated),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Same => "same",
            Label::LinkTo => "link-to",
            Label::Unrelated => "unrelated",
        })
    }
}

/// Labels by resource id; anything unlabelled counts as unrelated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet(HashMap<usize, Label>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, resource: usize, label: Label) {
        self.0.insert(resource, label);
    }

    pub fn get(&self, resource: usize) -> Label {
        self.0.get(&resource).copied().unwrap_or(Label::Unrelated)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Resolves named labels against `vocab`; a name missing from it is an error.
    pub fn resolve(named: &[(String, Label)], vocab: &Vocab) -> Result<Self> {
        let mut set = LabelSet::new();
        for (name, label) in named {
            let id = vocab.get(name).ok_or_else(|| {
                Error::InvalidConfig(format!("labelled resource {name:?} is not in the corpus"))
            })?;
            set.insert(id, *label);
        }
        Ok(set)
    }
}

impl FromIterator<(usize, Label)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (usize, Label)>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

/// Parses `resource<TAB>label` lines; `#` lines and blank lines are skipped.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<(String, Label)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLine {
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, label] = fields[..] else {
            return Err(malformed(format!(
                "expected 2 tab-separated fields, found {}",
                fields.len()
            )));
        };
        if name.is_empty() {
            return Err(malformed("empty resource name".into()));
        }
        out.push((name.to_owned(), label.parse().map_err(malformed)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TopKCounts {
    pub same: usize,
    pub link_to: usize,
}

impl TopKCounts {
    pub fn positives(&self) -> usize {
        self.same + self.link_to
    }
}

/// Counts `same` and `link-to` labels among the first `min(k, len)` entries.
pub fn count_relevant_topk(list: &RankedList, labels: &LabelSet, k: usize) -> TopKCounts {
    let mut counts = TopKCounts::default();
    for r in list.resources().take(k) {
        match labels.get(r) {
            Label::Same => counts.same += 1,
            Label::LinkTo => counts.link_to += 1,
            Label::Unrelated => {}
        }
    }
    counts
}

/// 1-based rank at which the `n`-th positive appears, or `None` when the
/// list holds fewer than `n` positives.
pub fn effort_to_n(list: &RankedList, labels: &LabelSet, n: usize) -> Option<usize> {
    if n == 0 {
        return Some(0);
    }
    list.resources()
        .enumerate()
        .filter(|&(_, r)| labels.get(r).is_positive())
        .nth(n - 1)
        .map(|(idx, _)| idx + 1)
}

/// Writes one `model<TAB>metric<TAB>value` row per metric.
pub fn write_report<W: Write>(
    mut w: W,
    model: &str,
    k: usize,
    counts: TopKCounts,
    n: usize,
    effort: Option<usize>,
) -> Result<()> {
    writeln!(w, "# model\tmetric\tvalue")?;
    writeln!(w, "{model}\tsame@{k}\t{}", counts.same)?;
    writeln!(w, "{model}\tlink-to@{k}\t{}", counts.link_to)?;
    writeln!(w, "{model}\trelevant@{k}\t{}", counts.positives())?;
    match effort {
        Some(e) => writeln!(w, "{model}\teffort@{n}\t{e}")?,
        None => writeln!(w, "{model}\teffort@{n}\tnot-reached")?,
    }
    w.flush()?;
    Ok(())
}
