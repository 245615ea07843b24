//! Bit-exact covering checks.
//!
//! A set `M` of points is covered by a family when every ordered pair
//! `(x, y)` of `M` has a member `f` with `y = f(x)` or `x = f(y)`. Witnesses
//! are searched in a fixed order: identity first, then ascending index,
//! forward before inverse.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bits::BitString;
use crate::cantor::{CantorError, Chain, PointId, PointStore};
use crate::forcing::OrdLabel;
use crate::lipschitz::{LeafTable, TreeError, TreeMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("depth mismatch: {what} has depth {found}, expected {expected}")]
    DepthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A finite-depth self-map of `2^n` the tree checker can apply.
pub trait FiniteMap {
    fn depth(&self) -> usize;
    fn image(&self, x: &BitString) -> Result<BitString, TreeError>;
}

impl FiniteMap for TreeMap {
    fn depth(&self) -> usize {
        TreeMap::depth(self)
    }

    fn image(&self, x: &BitString) -> Result<BitString, TreeError> {
        self.apply(x)
    }
}

impl FiniteMap for LeafTable {
    fn depth(&self) -> usize {
        self.depth
    }

    fn image(&self, x: &BitString) -> Result<BitString, TreeError> {
        self.apply(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    /// `right = f(left)`
    Fwd,
    /// `left = f(right)`
    Inv,
    Id,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// How strong a pass is: `Exact` for whole finite objects or
/// construction-certified pairs, `Prefix` for agreement up to a depth only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evidence {
    Exact,
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Covered {
        /// `None` for the identity of a tree family, which is not a member.
        index: Option<u64>,
        dir: Dir,
    },
    Failed {
        /// Deepest first-disagreement over all candidates tried.
        fail_bit: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairEntry {
    pub left: u64,
    pub right: u64,
    pub status: Status,
    pub witness: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CoverReport {
    pub pairs: Vec<PairEntry>,
}

impl CoverReport {
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PairEntry> {
        self.pairs.iter().filter(|p| p.status == Status::Fail)
    }

    pub fn get(&self, left: u64, right: u64) -> Option<&PairEntry> {
        self.pairs
            .iter()
            .find(|p| p.left == left && p.right == right)
    }
}

/// Tracks the best failed attempt for one pair.
#[derive(Default)]
struct Search {
    fail_bit: Option<usize>,
}

impl Search {
    fn attempt(&mut self, got: &BitString, want: &BitString) -> bool {
        match got.first_difference(want) {
            None => true,
            Some(j) => {
                self.fail_bit = Some(self.fail_bit.map_or(j, |b| b.max(j)));
                false
            }
        }
    }

    fn failed(self) -> (Status, Outcome) {
        (
            Status::Fail,
            Outcome::Failed {
                fail_bit: self.fail_bit,
            },
        )
    }
}

fn covered(index: Option<u64>, dir: Dir) -> (Status, Outcome) {
    (Status::Pass, Outcome::Covered { index, dir })
}

/// Checks that `points` is covered by `family` (plus the identity if
/// `include_identity`), comparing full-depth images exactly.
pub fn covers_tree<M: FiniteMap>(
    points: &BTreeMap<OrdLabel, BitString>,
    family: &BTreeMap<u64, M>,
    include_identity: bool,
) -> Result<CoverReport, VerifyError> {
    let depth = points
        .values()
        .map(BitString::len)
        .chain(family.values().map(FiniteMap::depth))
        .next()
        .unwrap_or(0);
    for (a, x) in points {
        if x.len() != depth {
            return Err(VerifyError::DepthMismatch {
                what: format!("point {a}"),
                expected: depth,
                found: x.len(),
            });
        }
    }
    for (i, f) in family {
        if f.depth() != depth {
            return Err(VerifyError::DepthMismatch {
                what: format!("map {i}"),
                expected: depth,
                found: f.depth(),
            });
        }
    }

    // images[i][label] = f_i(γ(label))
    let mut images: BTreeMap<u64, BTreeMap<OrdLabel, BitString>> = BTreeMap::new();
    for (&i, f) in family {
        let row = points
            .iter()
            .map(|(&a, x)| Ok((a, f.image(x)?)))
            .collect::<Result<_, TreeError>>()?;
        images.insert(i, row);
    }

    let mut pairs = Vec::with_capacity(points.len() * points.len());
    for (&left, x) in points {
        for (&right, y) in points {
            let mut search = Search::default();
            let (status, witness) = 'found: {
                if include_identity && search.attempt(x, y) {
                    break 'found covered(None, Dir::Id);
                }
                for (&i, row) in &images {
                    if search.attempt(&row[&left], y) {
                        break 'found covered(Some(i), Dir::Fwd);
                    }
                    if search.attempt(&row[&right], x) {
                        break 'found covered(Some(i), Dir::Inv);
                    }
                }
                search.failed()
            };
            pairs.push(PairEntry {
                left: left.0,
                right: right.0,
                status,
                witness,
                evidence: (status == Status::Pass).then_some(Evidence::Exact),
            });
        }
    }
    Ok(CoverReport { pairs })
}

/// Checks the `f_n` family on Cantor points at prefix length `depth`.
///
/// `f_0` (the identity) is always tried first; `fn_indices` are tried in
/// ascending order. Passes are labeled [`Evidence::Prefix`]; see
/// [`certify_with_chain`].
pub fn covers_cantor(
    store: &mut PointStore,
    points: &[PointId],
    fn_indices: &[u32],
    depth: usize,
) -> Result<CoverReport, CantorError> {
    let mut indices: Vec<u32> = fn_indices.iter().copied().filter(|&n| n != 0).collect();
    indices.sort_unstable();
    indices.dedup();

    let mut prefixes = BTreeMap::new();
    let mut images: BTreeMap<(u32, PointId), BitString> = BTreeMap::new();
    for &p in points {
        if let Entry::Vacant(slot) = prefixes.entry(p) {
            slot.insert(store.prefix(p, depth)?);
            for &n in &indices {
                images.insert((n, p), store.apply(n, p, depth)?);
            }
        }
    }

    let mut pairs = Vec::with_capacity(points.len() * points.len());
    for &left in points {
        for &right in points {
            let (x, y) = (&prefixes[&left], &prefixes[&right]);
            let mut search = Search::default();
            let (status, witness) = 'found: {
                if search.attempt(x, y) {
                    break 'found covered(Some(0), Dir::Id);
                }
                for &n in &indices {
                    if search.attempt(&images[&(n, left)], y) {
                        break 'found covered(Some(n as u64), Dir::Fwd);
                    }
                    if search.attempt(&images[&(n, right)], x) {
                        break 'found covered(Some(n as u64), Dir::Inv);
                    }
                }
                search.failed()
            };
            pairs.push(PairEntry {
                left: left as u64,
                right: right as u64,
                status,
                witness,
                evidence: (status == Status::Pass).then_some(Evidence::Prefix),
            });
        }
    }
    Ok(CoverReport { pairs })
}

/// Upgrades passes to [`Evidence::Exact`] where the reported witness is the
/// one the chain was built with, since those hold at every depth.
pub fn certify_with_chain(report: &mut CoverReport, chain: &Chain) {
    let position: BTreeMap<PointId, usize> = chain
        .points
        .iter()
        .enumerate()
        .map(|(k, &p)| (p, k + 1))
        .collect();
    for entry in &mut report.pairs {
        let (Some(&l), Some(&r)) = (
            position.get(&(entry.left as usize)),
            position.get(&(entry.right as usize)),
        ) else {
            continue;
        };
        let certified = match entry.witness {
            Outcome::Covered { dir: Dir::Id, .. } => l == r,
            Outcome::Covered {
                index: Some(n),
                dir: Dir::Inv,
            } => l < r && chain.witness.get(&(l, r)) == Some(&(n as u32)),
            Outcome::Covered {
                index: Some(n),
                dir: Dir::Fwd,
            } => r < l && chain.witness.get(&(r, l)) == Some(&(n as u32)),
            _ => false,
        };
        if certified && entry.status == Status::Pass {
            entry.evidence = Some(Evidence::Exact);
        }
    }
}
