//! The continuous covering family on Cantor space.
//!
//! `ω` is split into the blocks `A_n = {i : ν₂(i+1) = n}`, enumerated by
//! `φ_n(k) = (2k+1)·2^n − 1`. For `n ≥ 1`, `f_n(x)(i) = x(φ_n(i))`, i.e. `f_n`
//! reads block `A_n` of its argument back as a full sequence; `f_0` is the
//! identity.
//!
//! Points live in a [`PointStore`] as bit oracles: either an eventually
//! constant base word, or a diagonal extension of earlier points. The
//! extension `y` of `x_1..x_m` satisfies `f_n(y) = x_n` for `1 ≤ n ≤ m` and
//! differs from `x_n` at bit `φ_0(n)`.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;

/// Bit positions in a Cantor point. Wide enough for `φ_n(k)` with `n < 64`
/// and `k` in the tens of thousands.
pub type BitIndex = u128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CantorError {
    #[error("point id {0} is not in the store")]
    UnknownPoint(usize),
    #[error("diagonal extension needs at least one point")]
    EmptyExtension,
    #[error("extension child {child} does not precede point {id}")]
    ForwardReference { id: usize, child: usize },
    #[error("index φ_{n}({k}) overflows")]
    IndexOverflow { n: u32, k: u128 },
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("base point tail must be 0 or 1, found {0}")]
    BadTail(u8),
}

/// The block containing index `i`: `ν₂(i + 1)`.
pub fn block_of(i: BitIndex) -> u32 {
    (i + 1).trailing_zeros()
}

/// Position of `i` inside its block, so that `phi(block_of(i), position_in_block(i)) == i`.
pub fn position_in_block(i: BitIndex) -> BitIndex {
    let n = block_of(i);
    (((i + 1) >> n) - 1) / 2
}

/// `φ_n(k) = (2k+1)·2^n − 1`, the `k`-th element of `A_n`.
pub fn phi(n: u32, k: BitIndex) -> Result<BitIndex, CantorError> {
    k.checked_mul(2)
        .and_then(|v| v.checked_add(1))
        .and_then(|v| {
            if n < 128 {
                v.checked_mul(1u128 << n)
            } else {
                None
            }
        })
        .map(|v| v - 1)
        .ok_or(CantorError::IndexOverflow { n, k })
}

/// Anything that can answer bit queries about a Cantor point.
pub trait BitOracle {
    fn bit(&mut self, i: BitIndex) -> Result<bool, CantorError>;
}

impl<F> BitOracle for F
where
    F: FnMut(BitIndex) -> Result<bool, CantorError>,
{
    fn bit(&mut self, i: BitIndex) -> Result<bool, CantorError> {
        self(i)
    }
}

/// The length-`depth` prefix of `f_n(x)`.
pub fn apply_fn<O: BitOracle + ?Sized>(
    n: u32,
    x: &mut O,
    depth: usize,
) -> Result<BitString, CantorError> {
    (0..depth as BitIndex)
        .map(|j| {
            let i = if n == 0 { j } else { phi(n, j)? };
            x.bit(i)
        })
        .collect()
}

/// Least input-prefix length that determines `f_n(x)↾depth`.
pub fn modulus(n: u32, depth: usize) -> Result<BitIndex, CantorError> {
    if depth == 0 {
        return Ok(0);
    }
    if n == 0 {
        return Ok(depth as BitIndex);
    }
    // φ_n is increasing, so the max over j < depth is at j = depth - 1.
    Ok(phi(n, depth as BitIndex - 1)? + 1)
}

/// A pair of eventually-zero points certifying that `f_n` is not 1-Lipschitz
/// at `depth`: the inputs first differ at bit `modulus(n, depth) - 1` while
/// the images already differ at bit `depth - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StretchWitness {
    pub input_diff_bit: BitIndex,
    pub output_diff_bit: usize,
}

pub fn stretch_witness(n: u32, depth: usize) -> Result<Option<StretchWitness>, CantorError> {
    if n == 0 || depth == 0 {
        return Ok(None);
    }
    let m = modulus(n, depth)?;
    Ok(Some(StretchWitness {
        input_diff_bit: m - 1,
        output_diff_bit: depth - 1,
    }))
}

pub type PointId = usize;

/// Definition of one Cantor point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointExpr {
    /// `prefix` followed by `tail` repeated forever.
    #[serde(rename = "base")]
    Base { prefix: BitString, tail: u8 },
    /// Diagonal extension of `children = [x_1, .., x_m]`.
    #[serde(rename = "ext")]
    Extension { children: Vec<PointId> },
}

impl PointExpr {
    pub fn base(prefix: BitString, tail: bool) -> Self {
        PointExpr::Base {
            prefix,
            tail: tail as u8,
        }
    }
}

/// Append-only DAG of point definitions with memoized bit evaluation.
#[derive(Debug, Default, Clone)]
pub struct PointStore {
    exprs: Vec<PointExpr>,
    memo: HashMap<(PointId, BitIndex), bool>,
}

impl PointStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a store from exported expressions, checking that every
    /// extension only refers to earlier points.
    pub fn from_exprs(exprs: Vec<PointExpr>) -> Result<Self, CantorError> {
        let mut store = PointStore::new();
        for e in exprs {
            store.push(e)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, expr: PointExpr) -> Result<PointId, CantorError> {
        let id = self.exprs.len();
        match &expr {
            PointExpr::Base { tail, .. } if *tail > 1 => return Err(CantorError::BadTail(*tail)),
            PointExpr::Base { .. } => {}
            PointExpr::Extension { children } => {
                if children.is_empty() {
                    return Err(CantorError::EmptyExtension);
                }
                if let Some(&child) = children.iter().find(|&&c| c >= id) {
                    return Err(CantorError::ForwardReference { id, child });
                }
            }
        }
        self.exprs.push(expr);
        Ok(id)
    }

    pub fn add_base(&mut self, prefix: BitString, tail: bool) -> PointId {
        self.push(PointExpr::base(prefix, tail))
            .expect("base points are always valid")
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    pub fn exprs(&self) -> &[PointExpr] {
        &self.exprs
    }

    pub fn expr(&self, id: PointId) -> Result<&PointExpr, CantorError> {
        self.exprs.get(id).ok_or(CantorError::UnknownPoint(id))
    }

    pub fn clear_memo(&mut self) {
        self.memo.clear();
    }

    /// Creates `y` with `y(φ_n(k)) = x_n(k)` and `y(φ_0(n)) = 1 − x_n(φ_0(n))`
    /// for `1 ≤ n ≤ m`, and `y = 0` everywhere else.
    pub fn diagonal_extend(&mut self, points: &[PointId]) -> Result<PointId, CantorError> {
        if points.is_empty() {
            return Err(CantorError::EmptyExtension);
        }
        for &p in points {
            self.expr(p)?;
        }
        self.push(PointExpr::Extension {
            children: points.to_vec(),
        })
    }

    pub fn eval_point(&mut self, id: PointId, i: BitIndex) -> Result<bool, CantorError> {
        if let Some(&b) = self.memo.get(&(id, i)) {
            return Ok(b);
        }
        let bit = match self.expr(id)? {
            PointExpr::Base { prefix, tail } => match usize::try_from(i) {
                Ok(j) if j < prefix.len() => prefix.get(j).expect("in range"),
                _ => *tail == 1,
            },
            PointExpr::Extension { children } => {
                let m = children.len();
                let n = block_of(i) as usize;
                let k = position_in_block(i);
                if n == 0 {
                    // i = φ_0(k) = 2k: flipped bit of x_k when 1 ≤ k ≤ m
                    match usize::try_from(k) {
                        Ok(k) if (1..=m).contains(&k) => {
                            let child = children[k - 1];
                            !self.eval_point(child, i)?
                        }
                        _ => false,
                    }
                } else if n <= m {
                    let child = children[n - 1];
                    self.eval_point(child, k)?
                } else {
                    false
                }
            }
        };
        self.memo.insert((id, i), bit);
        Ok(bit)
    }

    pub fn prefix(&mut self, id: PointId, depth: usize) -> Result<BitString, CantorError> {
        (0..depth as BitIndex)
            .map(|i| self.eval_point(id, i))
            .collect()
    }

    /// `f_n(point)↾depth`.
    pub fn apply(&mut self, n: u32, id: PointId, depth: usize) -> Result<BitString, CantorError> {
        self.expr(id)?;
        let mut oracle = |i: BitIndex| self.eval_point(id, i);
        apply_fn(n, &mut oracle, depth)
    }
}

/// Points `x_1..x_N` with `f_{witness(α,β)}(x_β) = x_α` for all `α < β`.
///
/// Indices `α`, `β` are 1-based, matching the function indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub points: Vec<PointId>,
    pub witness: BTreeMap<(usize, usize), u32>,
    /// `(k, bit)`: every later point differs from `x_k` at `bit`.
    pub distinctness: Vec<(usize, BitIndex)>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn point(&self, alpha: usize) -> PointId {
        self.points[alpha - 1]
    }
}

/// `x_1 = seed`, `x_{k+1} = diagonal_extend([x_1..x_k])`.
pub fn build_chain(store: &mut PointStore, n: usize, seed: PointId) -> Result<Chain, CantorError> {
    if n == 0 {
        return Err(CantorError::EmptyChain);
    }
    store.expr(seed)?;
    let mut points = vec![seed];
    let mut witness = BTreeMap::new();
    let mut distinctness = Vec::new();
    while points.len() < n {
        let y = store.diagonal_extend(&points)?;
        let beta = points.len() + 1;
        for alpha in 1..beta {
            witness.insert((alpha, beta), alpha as u32);
        }
        distinctness.push((beta - 1, phi(0, (beta - 1) as BitIndex)?));
        points.push(y);
    }
    Ok(Chain {
        points,
        witness,
        distinctness,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    pub alpha: usize,
    pub beta: usize,
    pub witness: Option<u32>,
    pub pass: bool,
    /// First bit of `f_w(x_β)` that disagrees with `x_α`.
    pub fail_bit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistinctCheck {
    pub alpha: usize,
    pub beta: usize,
    pub bit: Option<BitIndex>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub depth: usize,
    pub pairs: Vec<PairCheck>,
    pub distinct: Vec<DistinctCheck>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.pass) && self.distinct.iter().all(|d| d.pass)
    }
}

/// Checks every recorded covering witness at `depth`, and pairwise
/// distinctness at the recorded disagreement bits and on prefixes of length
/// `max(depth, largest recorded bit + 1)`.
pub fn verify_chain(
    store: &mut PointStore,
    chain: &Chain,
    depth: usize,
) -> Result<ChainReport, CantorError> {
    let n = chain.len();
    let mut pairs = Vec::new();
    for beta in 1..=n {
        for alpha in 1..beta {
            let witness = chain.witness.get(&(alpha, beta)).copied();
            let (pass, fail_bit) = match witness {
                None => (false, None),
                Some(w) => {
                    let image = store.apply(w, chain.point(beta), depth)?;
                    let target = store.prefix(chain.point(alpha), depth)?;
                    match image.first_difference(&target) {
                        None => (true, None),
                        Some(j) => (false, Some(j)),
                    }
                }
            };
            pairs.push(PairCheck {
                alpha,
                beta,
                witness,
                pass,
                fail_bit,
            });
        }
    }

    let recorded: BTreeMap<usize, BitIndex> = chain.distinctness.iter().copied().collect();
    let max_bit = recorded.values().max().map_or(0, |b| b + 1);
    let horizon = (depth as BitIndex).max(max_bit);
    let mut distinct = Vec::new();
    for beta in 1..=n {
        for alpha in 1..beta {
            let (xa, xb) = (chain.point(alpha), chain.point(beta));
            let bit = match recorded.get(&alpha) {
                Some(&b) if store.eval_point(xa, b)? != store.eval_point(xb, b)? => Some(b),
                _ => None,
            };
            let mut differs = false;
            for i in 0..horizon {
                if store.eval_point(xa, i)? != store.eval_point(xb, i)? {
                    differs = true;
                    break;
                }
            }
            distinct.push(DistinctCheck {
                alpha,
                beta,
                bit,
                pass: bit.is_some() && differs,
            });
        }
    }
    Ok(ChainReport {
        depth,
        pairs,
        distinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        assert_eq!(block_of(0), 0);
        for k in 0..100 {
            assert_eq!(phi(0, k).unwrap(), 2 * k);
            assert_eq!(phi(1, k).unwrap(), 4 * k + 1);
        }
        assert_eq!(block_of(1), 1);
        assert_eq!(block_of(5), 1);
        assert_eq!(position_in_block(5), 1);
    }

    #[test]
    fn partition_round_trip_exhaustive() {
        for i in 0..10_000u128 {
            let n = block_of(i);
            assert_eq!(phi(n, position_in_block(i)).unwrap(), i);
        }
    }

    #[test]
    fn phi_is_strictly_increasing() {
        for n in 0..8 {
            for k in 0..500 {
                assert!(phi(n, k).unwrap() < phi(n, k + 1).unwrap());
            }
        }
    }

    #[test]
    fn phi_overflow() {
        assert!(phi(63, 255).is_ok());
        assert!(matches!(
            phi(127, 1),
            Err(CantorError::IndexOverflow { .. })
        ));
        assert!(matches!(
            phi(200, 0),
            Err(CantorError::IndexOverflow { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let mut ones_at = |i: BitIndex| Ok(i == 1 || i == 9);
        assert_eq!(apply_fn(1, &mut ones_at, 3).unwrap().to_string(), "101");
        let mut zeros = |_: BitIndex| Ok(false);
        for n in 0..6 {
            assert_eq!(apply_fn(n, &mut zeros, 7).unwrap(), BitString::zeros(7));
        }
        let mut alt = |i: BitIndex| Ok(i.is_multiple_of(3));
        let got = apply_fn(0, &mut alt, 9).unwrap();
        assert_eq!(got.to_string(), "100100100");
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(modulus(0, 5).unwrap(), 5);
        assert_eq!(modulus(1, 3).unwrap(), 10);
        for n in 0..10 {
            assert_eq!(modulus(n, 0).unwrap(), 0);
        }
        for n in 1..10 {
            for d in 1..20 {
                assert!(modulus(n, d).unwrap() > d as BitIndex);
            }
        }
    }

    #[test]
    fn eval_base() {
        let mut store = PointStore::new();
        let p = store.add_base("101".parse().unwrap(), false);
        assert!(!store.eval_point(p, 1).unwrap());
        assert!(store.eval_point(p, 2).unwrap());
        assert!(!store.eval_point(p, 7).unwrap());
        assert!(!store.eval_point(p, u128::MAX).unwrap());
        assert_eq!(store.eval_point(9, 0), Err(CantorError::UnknownPoint(9)));
    }

    #[test]
    fn diagonal_single_zero_point() {
        let mut store = PointStore::new();
        let x1 = store.add_base(BitString::new(), false);
        let y = store.diagonal_extend(&[x1]).unwrap();
        let p = store.prefix(y, 64).unwrap();
        for i in 0..64 {
            assert_eq!(p.get(i).unwrap(), i == 2, "bit {i}");
        }
        assert!(store.eval_point(y, 2).unwrap());
        assert_eq!(store.apply(1, y, 40).unwrap(), BitString::zeros(40));
    }

    #[test]
    fn diagonal_errors() {
        let mut store = PointStore::new();
        assert_eq!(store.diagonal_extend(&[]), Err(CantorError::EmptyExtension));
        assert_eq!(
            store.diagonal_extend(&[3]),
            Err(CantorError::UnknownPoint(3))
        );
        assert!(matches!(
            store.push(PointExpr::Extension { children: vec![0] }),
            Err(CantorError::ForwardReference { id: 0, child: 0 })
        ));
        let bad = PointExpr::Base {
            prefix: BitString::new(),
            tail: 2,
        };
        assert_eq!(store.push(bad), Err(CantorError::BadTail(2)));
    }

    #[test]
    fn second_extension_differs_at_next_diagonal_bit() {
        let mut store = PointStore::new();
        let x1 = store.add_base("0110".parse().unwrap(), true);
        let y = store.diagonal_extend(&[x1]).unwrap();
        let z = store.diagonal_extend(&[x1, y]).unwrap();
        let bit = phi(0, 2).unwrap();
        assert_ne!(
            store.eval_point(y, bit).unwrap(),
            store.eval_point(z, bit).unwrap()
        );
        assert_eq!(store.apply(2, z, 50).unwrap(), store.prefix(y, 50).unwrap());
        assert_eq!(
            store.apply(1, z, 50).unwrap(),
            store.prefix(x1, 50).unwrap()
        );
    }

    #[test]
    fn chain_of_one_is_vacuous() {
        let mut store = PointStore::new();
        let s = store.add_base("1".parse().unwrap(), false);
        let c = build_chain(&mut store, 1, s).unwrap();
        assert_eq!(c.points, vec![s]);
        assert!(c.witness.is_empty());
        let r = verify_chain(&mut store, &c, 8).unwrap();
        assert!(r.passed());
        assert!(r.pairs.is_empty());
        assert_eq!(build_chain(&mut store, 0, s), Err(CantorError::EmptyChain));
    }

    #[test]
    fn chain_of_three() {
        let mut store = PointStore::new();
        let s = store.add_base("10".parse().unwrap(), true);
        let c = build_chain(&mut store, 3, s).unwrap();
        assert_eq!(c.witness.len(), 3);
        let r = verify_chain(&mut store, &c, 32).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn corrupted_witness_fails_with_bit() {
        let mut store = PointStore::new();
        let s = store.add_base("1".parse().unwrap(), false);
        let mut c = build_chain(&mut store, 5, s).unwrap();
        c.witness.insert((2, 4), 3);
        let r = verify_chain(&mut store, &c, 64).unwrap();
        assert!(!r.passed());
        let bad: Vec<_> = r.pairs.iter().filter(|p| !p.pass).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!((bad[0].alpha, bad[0].beta), (2, 4));
        assert!(bad[0].fail_bit.is_some());
    }

    #[test]
    fn memo_does_not_change_results() {
        let mut store = PointStore::new();
        let s = store.add_base("1101".parse().unwrap(), false);
        let c = build_chain(&mut store, 6, s).unwrap();
        let last = *c.points.last().unwrap();
        let before = store.prefix(last, 200).unwrap();
        store.clear_memo();
        assert_eq!(store.prefix(last, 200).unwrap(), before);
    }

    #[test]
    fn stretch_witness_certifies_expansion() {
        for n in 1..=8u32 {
            for depth in 1..6 {
                let w = stretch_witness(n, depth).unwrap().unwrap();
                let flip = w.input_diff_bit;
                let mut x = |_: BitIndex| Ok(false);
                let mut x2 = |i: BitIndex| Ok(i == flip);
                let fx = apply_fn(n, &mut x, depth).unwrap();
                let fx2 = apply_fn(n, &mut x2, depth).unwrap();
                assert_eq!(fx.first_difference(&fx2), Some(w.output_diff_bit));
                // input distance 2^-(flip+1) is smaller than output distance 2^-depth
                assert!(flip + 1 > depth as BitIndex);
            }
        }
        assert_eq!(stretch_witness(0, 4).unwrap(), None);
    }
}
