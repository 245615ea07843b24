//! Finite binary words and the prefix ultrametric on them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("invalid bit character {ch:?} at position {pos}")]
    BadChar { ch: char, pos: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// A finite binary word: a node of the tree `2^n`, or a prefix of a Cantor point.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        BitString(vec![true; len])
    }

    /// The `len`-bit binary expansion of `value`, most significant bit first.
    pub fn from_index(value: u64, len: usize) -> Self {
        BitString((0..len).rev().map(|b| (value >> b) & 1 == 1).collect())
    }

    /// Inverse of [`BitString::from_index`]; the position of this word in lex order.
    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn pop(&mut self) -> Option<bool> {
        self.0.pop()
    }

    /// `self ⌢ bit`.
    pub fn with(&self, bit: bool) -> Self {
        let mut out = self.clone();
        out.0.push(bit);
        out
    }

    /// `self ↾ k`. Panics if `k > len`.
    pub fn prefix(&self, k: usize) -> Self {
        BitString(self.0[..k].to_vec())
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &BitString) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Index of the first differing bit between equal-length words, if any.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        let k = self.common_prefix_len(other);
        if k == self.len() && k == other.len() {
            None
        } else {
            Some(k)
        }
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(pos, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BitsError::BadChar { ch, pos }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A value of the prefix metric: either `0` or `2^-k`.
///
/// Kept as an exponent so comparisons stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    Zero,
    /// `2^-k`
    Pow(usize),
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Distance::Zero, Distance::Zero) => Ordering::Equal,
            (Distance::Zero, Distance::Pow(_)) => Ordering::Less,
            (Distance::Pow(_), Distance::Zero) => Ordering::Greater,
            // larger exponent means smaller distance
            (Distance::Pow(a), Distance::Pow(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Zero => f.write_str("0"),
            Distance::Pow(k) => write!(f, "2^-{k}"),
        }
    }
}

/// `d(x, y) = 2^-k` where `k` is the least prefix length with `x↾k ≠ y↾k`.
pub fn metric_distance(x: &BitString, y: &BitString) -> Result<Distance, BitsError> {
    if x.len() != y.len() {
        return Err(BitsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(match x.first_difference(y) {
        None => Distance::Zero,
        Some(i) => Distance::Pow(i + 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            metric_distance(&b("000"), &b("000")).unwrap(),
            Distance::Zero
        );
        assert_eq!(
            metric_distance(&b("000"), &b("001")).unwrap(),
            Distance::Pow(3)
        );
        assert_eq!(
            metric_distance(&b("10"), &b("00")).unwrap(),
            Distance::Pow(1)
        );
        assert_eq!(metric_distance(&b(""), &b("")).unwrap(), Distance::Zero);
    }

    #[test]
    fn distance_length_mismatch() {
        assert!(matches!(
            metric_distance(&b("0"), &b("00")),
            Err(BitsError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn distance_order() {
        assert!(Distance::Zero < Distance::Pow(10));
        assert!(Distance::Pow(3) < Distance::Pow(1));
        assert!(Distance::Pow(0) > Distance::Pow(1));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert_eq!(
            "01x".parse::<BitString>(),
            Err(BitsError::BadChar { ch: 'x', pos: 2 })
        );
    }

    #[test]
    fn index_round_trip() {
        for len in 0..6 {
            for v in 0..(1u64 << len) {
                assert_eq!(BitString::from_index(v, len).to_index(), v);
            }
        }
        assert_eq!(BitString::from_index(2, 3).to_string(), "010");
    }

    #[test]
    fn ultrametric_exhaustive_len3() {
        let all: Vec<_> = (0..8).map(|v| BitString::from_index(v, 3)).collect();
        for x in &all {
            for y in &all {
                for z in &all {
                    let xz = metric_distance(x, z).unwrap();
                    let xy = metric_distance(x, y).unwrap();
                    let yz = metric_distance(y, z).unwrap();
                    assert!(xz <= xy.max(yz));
                }
            }
        }
    }
}
