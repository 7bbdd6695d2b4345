use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{Direction, TranslationTable};
use crate::ingest::SeedPair;
use crate::Error;

/// Links `(source_index, target_index)` of one sentence pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    pub links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            links: links.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn is_superset(&self, other: &Alignment) -> bool {
        self.links.is_superset(&other.links)
    }

    /// Target positions linked to source position `i`.
    pub fn targets_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.links.range((i, 0)..(i + 1, 0)).map(|&(_, j)| j)
    }

    /// Source positions linked to target position `j`.
    pub fn sources_of(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.links.iter().filter(move |&&(_, t)| t == j).map(|&(s, _)| s)
    }
}

/// Pharaoh format: space-separated `i-j` links.
impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, j)) in self.links.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

impl FromStr for Alignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.split_whitespace()
            .map(|link| {
                let (i, j) = link
                    .split_once('-')
                    .ok_or_else(|| Error::format("alignment", format!("bad link `{link}`")))?;
                let parse = |x: &str| {
                    x.parse::<usize>()
                        .map_err(|_| Error::format("alignment", format!("bad link `{link}`")))
                };
                Ok((parse(i)?, parse(j)?))
            })
            .collect::<Result<BTreeSet<_>, _>>()
            .map(|links| Alignment { links })
    }
}

/// Directional Viterbi alignment under Model 1: every predicted token links
/// to its most probable conditioning token. Links to NULL are dropped; on a
/// tie between NULL and a word the word is kept.
pub fn viterbi_align(pair: &SeedPair, table: &TranslationTable) -> Alignment {
    let best = table.best_links(pair);
    let links = best
        .into_iter()
        .enumerate()
        .filter(|&(_, b)| b > 0)
        .map(|(p, b)| match table.direction() {
            Direction::SourceToTarget => (b - 1, p),
            Direction::TargetToSource => (p, b - 1),
        });
    Alignment::new(links)
}

pub fn symmetrize_union(a: &Alignment, b: &Alignment) -> Alignment {
    Alignment {
        links: a.links.union(&b.links).copied().collect(),
    }
}
