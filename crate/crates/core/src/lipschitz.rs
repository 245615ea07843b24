//! 1-Lipschitz self-maps of the finite binary tree `2^n`.
//!
//! For the prefix metric a map is 1-Lipschitz exactly when it is prefix
//! coherent: inputs agreeing on their first `k` bits have images agreeing on
//! their first `k` bits. Such a map is a level-preserving tree morphism and is
//! determined by one output bit per non-root node of the input tree.
//!
//! [`TreeMap`] stores that morphism as a shared DAG, so deepening a map (which
//! the forcing constructions do at every step) never materializes `2^n`
//! leaves. [`LeafTable`] is the flat lex-ordered image table used for JSON and
//! as the independent, unstructured representation the checkers work on.

use std::collections::HashMap;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bits::{metric_distance, BitString};

/// Largest depth [`enumerate_l1`] will enumerate.
pub const ENUMERATION_CAP: usize = 3;

/// Largest depth a [`TreeMap`] will be flattened to a [`LeafTable`].
pub const LEAF_TABLE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("leaf table of depth {depth} must have {expected} leaves, found {found}")]
    LeafCount {
        depth: usize,
        expected: usize,
        found: usize,
    },
    #[error("leaf {index} has length {found}, expected {depth}")]
    LeafLength {
        index: usize,
        depth: usize,
        found: usize,
    },
    #[error("map is not 1-Lipschitz: inputs {x} and {y} violate prefix coherence")]
    NotLipschitz { x: BitString, y: BitString },
    #[error("depth {requested} exceeds the map depth {depth}")]
    DepthTooLarge { requested: usize, depth: usize },
    #[error("word {word} has length {found}, expected {expected}")]
    WordLength {
        word: BitString,
        expected: usize,
        found: usize,
    },
    #[error("depth {requested} exceeds the cap {cap}")]
    OverCap { requested: usize, cap: usize },
}

/// A raw image table: `leaves[x]` is the image of the `x`-th input in lex order.
///
/// Nothing about Lipschitzness is assumed; use [`LeafTable::is_lipschitz`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafTable {
    pub depth: usize,
    pub leaves: Vec<BitString>,
}

impl LeafTable {
    /// Checks the table shape: `2^depth` leaves, each of length `depth`.
    pub fn check_shape(&self) -> Result<(), TreeError> {
        if self.depth > LEAF_TABLE_CAP {
            return Err(TreeError::OverCap {
                requested: self.depth,
                cap: LEAF_TABLE_CAP,
            });
        }
        let expected = 1usize << self.depth;
        if self.leaves.len() != expected {
            return Err(TreeError::LeafCount {
                depth: self.depth,
                expected,
                found: self.leaves.len(),
            });
        }
        for (index, leaf) in self.leaves.iter().enumerate() {
            if leaf.len() != self.depth {
                return Err(TreeError::LeafLength {
                    index,
                    depth: self.depth,
                    found: leaf.len(),
                });
            }
        }
        Ok(())
    }

    /// Image of `x`, looked up by lex position.
    pub fn apply(&self, x: &BitString) -> Result<BitString, TreeError> {
        if x.len() != self.depth {
            return Err(TreeError::WordLength {
                word: x.clone(),
                expected: self.depth,
                found: x.len(),
            });
        }
        Ok(self.leaves[x.to_index() as usize].clone())
    }

    /// First adjacent pair of inputs witnessing a prefix-coherence failure.
    pub fn coherence_violation(&self) -> Result<Option<(BitString, BitString)>, TreeError> {
        self.check_shape()?;
        let n = self.depth;
        // Inputs `i` and `i + 1` share exactly `n - 1 - trailing_ones(i)` bits.
        // Adjacent pairs suffice: prefix agreement is transitive at each length.
        for (i, pair) in self.leaves.windows(2).enumerate() {
            let shared = n - 1 - i.trailing_ones() as usize;
            if pair[0].common_prefix_len(&pair[1]) < shared {
                return Ok(Some((
                    BitString::from_index(i as u64, n),
                    BitString::from_index(i as u64 + 1, n),
                )));
            }
        }
        Ok(None)
    }

    /// True iff the table is prefix coherent, i.e. 1-Lipschitz.
    pub fn is_lipschitz(&self) -> Result<bool, TreeError> {
        Ok(self.coherence_violation()?.is_none())
    }

    /// The definition read literally: `d(m(x), m(y)) ≤ d(x, y)` for every pair
    /// of inputs. Quadratic in the number of leaves.
    pub fn satisfies_pairwise_bound(&self) -> Result<bool, TreeError> {
        self.check_shape()?;
        let n = self.depth;
        let inputs: Vec<_> = (0..self.leaves.len())
            .map(|i| BitString::from_index(i as u64, n))
            .collect();
        for (i, x) in inputs.iter().enumerate() {
            for (j, y) in inputs.iter().enumerate().skip(i + 1) {
                let d_in = metric_distance(x, y).expect("equal lengths");
                let d_out =
                    metric_distance(&self.leaves[i], &self.leaves[j]).expect("equal lengths");
                if d_out > d_in {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[derive(PartialEq, Eq)]
enum Node {
    Leaf,
    /// `bits[e]` is the output bit appended when the input continues with `e`.
    Split {
        bits: [bool; 2],
        kids: [Arc<Node>; 2],
    },
}

type NodeRef = Arc<Node>;

fn leaf() -> NodeRef {
    Arc::new(Node::Leaf)
}

fn split(bits: [bool; 2], kids: [NodeRef; 2]) -> NodeRef {
    Arc::new(Node::Split { bits, kids })
}

fn key(node: &NodeRef) -> *const Node {
    Arc::as_ptr(node)
}

/// A 1-Lipschitz self-map of `2^depth`.
///
/// Every value of this type is prefix coherent by construction.
#[derive(Clone)]
pub struct TreeMap {
    depth: usize,
    root: NodeRef,
}

impl TreeMap {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn identity(depth: usize) -> Self {
        let mut node = leaf();
        for _ in 0..depth {
            node = split([false, true], [node.clone(), node]);
        }
        TreeMap { depth, root: node }
    }

    /// The map sending every input to `value`.
    pub fn constant(depth: usize, value: &BitString) -> Result<Self, TreeError> {
        if value.len() != depth {
            return Err(TreeError::WordLength {
                word: value.clone(),
                expected: depth,
                found: value.len(),
            });
        }
        let mut node = leaf();
        for &b in value.bits().iter().rev() {
            node = split([b, b], [node.clone(), node]);
        }
        Ok(TreeMap { depth, root: node })
    }

    /// Builds a map from free per-node bits, in breadth-first node order
    /// (children of level 0, then of level 1, ...). Needs `2^(depth+1) - 2` bits.
    pub(crate) fn from_node_bits(depth: usize, bits: &[bool]) -> Self {
        debug_assert_eq!(bits.len(), (1usize << (depth + 1)) - 2);
        // Build bottom-up: level j holds 2^j nodes, whose edges use 2^(j+1) bits.
        let mut level: Vec<NodeRef> = (0..1usize << depth).map(|_| leaf()).collect();
        for j in (0..depth).rev() {
            let offset = (1usize << (j + 1)) - 2;
            level = (0..1usize << j)
                .map(|p| {
                    let b = [bits[offset + 2 * p], bits[offset + 2 * p + 1]];
                    split(b, [level[2 * p].clone(), level[2 * p + 1].clone()])
                })
                .collect();
        }
        TreeMap {
            depth,
            root: level.pop().expect("root"),
        }
    }

    pub fn from_leaf_table(table: &LeafTable) -> Result<Self, TreeError> {
        if let Some((x, y)) = table.coherence_violation()? {
            return Err(TreeError::NotLipschitz { x, y });
        }
        fn build(table: &LeafTable, level: usize, start: usize) -> NodeRef {
            let n = table.depth;
            if level == n {
                return leaf();
            }
            let half = 1usize << (n - level - 1);
            let l = start;
            let r = start + half;
            let bits = [
                table.leaves[l].get(level).expect("shape checked"),
                table.leaves[r].get(level).expect("shape checked"),
            ];
            split(
                bits,
                [build(table, level + 1, l), build(table, level + 1, r)],
            )
        }
        Ok(TreeMap {
            depth: table.depth,
            root: build(table, 0, 0),
        })
    }

    pub fn apply(&self, x: &BitString) -> Result<BitString, TreeError> {
        if x.len() != self.depth {
            return Err(TreeError::WordLength {
                word: x.clone(),
                expected: self.depth,
                found: x.len(),
            });
        }
        let mut out = BitString::new();
        let mut node = &self.root;
        for &e in x.bits() {
            match node.as_ref() {
                Node::Split { bits, kids } => {
                    out.push(bits[e as usize]);
                    node = &kids[e as usize];
                }
                Node::Leaf => unreachable!("depth invariant"),
            }
        }
        Ok(out)
    }

    pub fn leaf_table(&self) -> Result<LeafTable, TreeError> {
        if self.depth > LEAF_TABLE_CAP {
            return Err(TreeError::OverCap {
                requested: self.depth,
                cap: LEAF_TABLE_CAP,
            });
        }
        let mut leaves = Vec::with_capacity(1 << self.depth);
        fn walk(node: &NodeRef, acc: &mut BitString, out: &mut Vec<BitString>) {
            match node.as_ref() {
                Node::Leaf => out.push(acc.clone()),
                Node::Split { bits, kids } => {
                    for e in 0..2 {
                        acc.push(bits[e]);
                        walk(&kids[e], acc, out);
                        acc.pop();
                    }
                }
            }
        }
        walk(&self.root, &mut BitString::new(), &mut leaves);
        Ok(LeafTable {
            depth: self.depth,
            leaves,
        })
    }

    /// The depth-`k` map `η ↦ m(η⌢anything)↾k`.
    pub fn restrict(&self, k: usize) -> Result<Self, TreeError> {
        if k > self.depth {
            return Err(TreeError::DepthTooLarge {
                requested: k,
                depth: self.depth,
            });
        }
        fn go(
            node: &NodeRef,
            remaining: usize,
            memo: &mut HashMap<(*const Node, usize), NodeRef>,
        ) -> NodeRef {
            if remaining == 0 {
                return leaf();
            }
            if let Some(hit) = memo.get(&(key(node), remaining)) {
                return hit.clone();
            }
            let out = match node.as_ref() {
                Node::Split { bits, kids } => split(
                    *bits,
                    [
                        go(&kids[0], remaining - 1, memo),
                        go(&kids[1], remaining - 1, memo),
                    ],
                ),
                Node::Leaf => unreachable!("depth invariant"),
            };
            memo.insert((key(node), remaining), out.clone());
            out
        }
        Ok(TreeMap {
            depth: k,
            root: go(&self.root, k, &mut HashMap::new()),
        })
    }

    /// Replaces every leaf by `cap`, a subtree of height one.
    fn graft(&self, cap: NodeRef) -> Self {
        fn go(node: &NodeRef, cap: &NodeRef, memo: &mut HashMap<*const Node, NodeRef>) -> NodeRef {
            if let Some(hit) = memo.get(&key(node)) {
                return hit.clone();
            }
            let out = match node.as_ref() {
                Node::Leaf => cap.clone(),
                Node::Split { bits, kids } => {
                    split(*bits, [go(&kids[0], cap, memo), go(&kids[1], cap, memo)])
                }
            };
            memo.insert(key(node), out.clone());
            out
        }
        TreeMap {
            depth: self.depth + 1,
            root: go(&self.root, &cap, &mut HashMap::new()),
        }
    }

    /// `f(η⌢ε) = m(η)⌢ε`.
    pub fn extend_trivially(&self) -> Self {
        self.graft(split([false, true], [leaf(), leaf()]))
    }

    /// `f(η⌢ε) = m(η)⌢0`.
    pub fn extend_with_zero(&self) -> Self {
        self.graft(split([false, false], [leaf(), leaf()]))
    }

    /// Returns a copy where the output bit on the last edge of `path` is `bit`.
    ///
    /// `path` has length `depth >= 1`; the result is again 1-Lipschitz since
    /// only one leaf image changes, and only in its last bit.
    pub fn with_last_bit(&self, path: &BitString, bit: bool) -> Result<Self, TreeError> {
        if path.len() != self.depth || self.depth == 0 {
            return Err(TreeError::WordLength {
                word: path.clone(),
                expected: self.depth.max(1),
                found: path.len(),
            });
        }
        fn go(node: &NodeRef, path: &[bool], bit: bool) -> NodeRef {
            match node.as_ref() {
                Node::Split { bits, kids } => {
                    let e = path[0] as usize;
                    let mut bits = *bits;
                    let mut kids = kids.clone();
                    if path.len() == 1 {
                        bits[e] = bit;
                    } else {
                        kids[e] = go(&kids[e], &path[1..], bit);
                    }
                    split(bits, kids)
                }
                Node::Leaf => unreachable!("depth invariant"),
            }
        }
        Ok(TreeMap {
            depth: self.depth,
            root: go(&self.root, path.bits(), bit),
        })
    }

    /// Number of distinct nodes in the shared representation.
    pub fn node_count(&self) -> usize {
        fn go(node: &NodeRef, seen: &mut HashSet<*const Node>) {
            if !seen.insert(key(node)) {
                return;
            }
            if let Node::Split { kids, .. } = node.as_ref() {
                go(&kids[0], seen);
                go(&kids[1], seen);
            }
        }
        let mut seen = HashSet::new();
        go(&self.root, &mut seen);
        seen.len()
    }
}

impl PartialEq for TreeMap {
    fn eq(&self, other: &Self) -> bool {
        fn go(a: &NodeRef, b: &NodeRef, same: &mut HashSet<(*const Node, *const Node)>) -> bool {
            if Arc::ptr_eq(a, b) || same.contains(&(key(a), key(b))) {
                return true;
            }
            let eq = match (a.as_ref(), b.as_ref()) {
                (Node::Leaf, Node::Leaf) => true,
                (Node::Split { bits: ba, kids: ka }, Node::Split { bits: bb, kids: kb }) => {
                    ba == bb && go(&ka[0], &kb[0], same) && go(&ka[1], &kb[1], same)
                }
                _ => false,
            };
            if eq {
                same.insert((key(a), key(b)));
            }
            eq
        }
        self.depth == other.depth && go(&self.root, &other.root, &mut HashSet::new())
    }
}

impl Eq for TreeMap {}

impl fmt::Debug for TreeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.leaf_table() {
            Ok(t) if self.depth <= 4 => f
                .debug_struct("TreeMap")
                .field("depth", &self.depth)
                .field("leaves", &t.leaves)
                .finish(),
            _ => f
                .debug_struct("TreeMap")
                .field("depth", &self.depth)
                .field("nodes", &self.node_count())
                .finish_non_exhaustive(),
        }
    }
}

impl TryFrom<LeafTable> for TreeMap {
    type Error = TreeError;

    fn try_from(table: LeafTable) -> Result<Self, Self::Error> {
        TreeMap::from_leaf_table(&table)
    }
}

impl Serialize for TreeMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.leaf_table()
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TreeMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let table = LeafTable::deserialize(deserializer)?;
        TreeMap::from_leaf_table(&table).map_err(serde::de::Error::custom)
    }
}

/// `|𝕃₁(n)| = 2^(2^(n+1) - 2)`, as the base-2 exponent.
pub fn l1_count_log2(n: u32) -> u128 {
    (1u128 << (n + 1)) - 2
}

/// Every 1-Lipschitz self-map of `2^n`, sorted by leaf table.
pub fn enumerate_l1(n: usize) -> Result<Vec<TreeMap>, TreeError> {
    if n > ENUMERATION_CAP {
        return Err(TreeError::OverCap {
            requested: n,
            cap: ENUMERATION_CAP,
        });
    }
    let free = (1usize << (n + 1)) - 2;
    let mut maps: Vec<(LeafTable, TreeMap)> = (0..1u64 << free)
        .map(|code| {
            let bits: Vec<bool> = (0..free).map(|b| (code >> b) & 1 == 1).collect();
            let m = TreeMap::from_node_bits(n, &bits);
            (m.leaf_table().expect("under cap"), m)
        })
        .collect();
    maps.sort_by(|a, b| a.0.leaves.cmp(&b.0.leaves));
    Ok(maps.into_iter().map(|(_, m)| m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn table(depth: usize, leaves: &[&str]) -> LeafTable {
        LeafTable {
            depth,
            leaves: leaves.iter().map(|s| b(s)).collect(),
        }
    }

    #[test]
    fn identity_and_constant_are_lipschitz() {
        let id = TreeMap::identity(2).leaf_table().unwrap();
        assert_eq!(id, table(2, &["00", "01", "10", "11"]));
        assert!(id.is_lipschitz().unwrap());
        let c = table(2, &["00", "00", "00", "00"]);
        assert!(c.is_lipschitz().unwrap());
        assert_eq!(
            TreeMap::constant(2, &b("00"))
                .unwrap()
                .leaf_table()
                .unwrap(),
            c
        );
    }

    #[test]
    fn non_lipschitz_example() {
        let t = table(2, &["00", "11", "10", "11"]);
        assert!(!t.is_lipschitz().unwrap());
        assert!(!t.satisfies_pairwise_bound().unwrap());
        assert!(matches!(
            TreeMap::from_leaf_table(&t),
            Err(TreeError::NotLipschitz { .. })
        ));
    }

    #[test]
    fn malformed_tables() {
        assert!(matches!(
            table(2, &["00", "01", "10"]).is_lipschitz(),
            Err(TreeError::LeafCount {
                expected: 4,
                found: 3,
                ..
            })
        ));
        assert!(matches!(
            table(1, &["0", "10"]).is_lipschitz(),
            Err(TreeError::LeafLength { index: 1, .. })
        ));
    }

    #[test]
    fn depth_zero() {
        let id = TreeMap::identity(0);
        assert_eq!(id.apply(&BitString::new()).unwrap(), BitString::new());
        assert_eq!(id.leaf_table().unwrap().leaves, vec![BitString::new()]);
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(
            TreeMap::identity(3).restrict(1).unwrap(),
            TreeMap::identity(1)
        );
        let m = TreeMap::constant(2, &b("00")).unwrap();
        assert_eq!(m.restrict(2).unwrap(), m);
        assert_eq!(
            m.restrict(1).unwrap(),
            TreeMap::constant(1, &b("0")).unwrap()
        );
        assert!(matches!(
            m.restrict(3),
            Err(TreeError::DepthTooLarge { .. })
        ));
    }

    #[test]
    fn extend_trivially_examples() {
        assert_eq!(
            TreeMap::identity(1).extend_trivially(),
            TreeMap::identity(2)
        );
        let c = TreeMap::constant(1, &b("0")).unwrap().extend_trivially();
        assert_eq!(c.leaf_table().unwrap(), table(2, &["00", "01", "00", "01"]));
        assert!(c.leaf_table().unwrap().is_lipschitz().unwrap());
    }

    #[test]
    fn extend_with_zero_example() {
        let z = TreeMap::identity(1).extend_with_zero();
        assert_eq!(z.leaf_table().unwrap(), table(2, &["00", "00", "10", "10"]));
    }

    #[test]
    fn constant_examples() {
        assert_eq!(
            TreeMap::constant(1, &b("0")).unwrap().leaf_table().unwrap(),
            table(1, &["0", "0"])
        );
        assert_eq!(
            TreeMap::constant(2, &b("01"))
                .unwrap()
                .leaf_table()
                .unwrap()
                .leaves,
            vec![b("01"); 4]
        );
        let c3 = TreeMap::constant(3, &b("101")).unwrap();
        assert!(c3.leaf_table().unwrap().is_lipschitz().unwrap());
        assert!(matches!(
            TreeMap::constant(2, &b("1")),
            Err(TreeError::WordLength { .. })
        ));
    }

    #[test]
    fn with_last_bit_changes_one_leaf() {
        let m = TreeMap::identity(2).extend_with_zero();
        let m2 = m.with_last_bit(&b("011"), true).unwrap();
        let t = m2.leaf_table().unwrap();
        assert_eq!(
            t,
            table(3, &["000", "000", "010", "011", "100", "100", "110", "110"])
        );
        assert!(t.is_lipschitz().unwrap());
    }

    #[test]
    fn enumeration_small_counts() {
        assert_eq!(enumerate_l1(0).unwrap().len(), 1);
        assert_eq!(enumerate_l1(1).unwrap().len(), 4);
        assert_eq!(enumerate_l1(2).unwrap().len(), 64);
        assert!(matches!(enumerate_l1(4), Err(TreeError::OverCap { .. })));
        assert_eq!(l1_count_log2(5), 62);
    }

    #[test]
    fn sharing_keeps_deep_maps_small() {
        let mut m = TreeMap::constant(1, &b("1")).unwrap();
        for _ in 0..40 {
            m = m.extend_trivially();
        }
        assert_eq!(m.depth(), 41);
        assert!(m.node_count() < 100);
        let x = BitString::ones(41);
        let y = m.apply(&x).unwrap();
        assert_eq!(y, x);
    }
}
