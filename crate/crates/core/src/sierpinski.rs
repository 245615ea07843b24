//! Covering `N × N` by countably many functions and their inverses.
//!
//! With surjections `g_β(n) = n mod β` and `f_n(β) = g_β(n)`, a pair
//! `α < β` is covered by `f_α` (as `α = f_α(β)`), so `{id} ∪ {f_n : n < N−1}`
//! covers the whole square of `{0, .., N−1}`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SierpinskiError {
    #[error("g_0 has empty codomain, no surjection exists")]
    EmptyCodomain,
    #[error("segment size must be at least 1")]
    EmptySegment,
    #[error("element {alpha} is outside the segment of size {size}")]
    OutOfSegment { alpha: u64, size: u64 },
}

/// An initial segment `{0, .., size−1}` of the ordinals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrdinalSegment {
    size: u64,
}

impl OrdinalSegment {
    pub fn new(size: u64) -> Result<Self, SierpinskiError> {
        if size == 0 {
            return Err(SierpinskiError::EmptySegment);
        }
        Ok(OrdinalSegment { size })
    }

    pub fn size(&self) -> u64 {
        self.size
    }
}

/// `g_β(n) = n mod β`, a surjection of `ω` onto `β`.
pub fn g(beta: u64, n: u64) -> Result<u64, SierpinskiError> {
    if beta == 0 {
        return Err(SierpinskiError::EmptyCodomain);
    }
    Ok(n % beta)
}

/// `f_n(β) = g_β(n)`, with `f_n(0) = 0`.
pub fn f(n: u64, beta: u64) -> u64 {
    g(beta, n).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `right = f_n(left)`
    Fwd,
    /// `left = f_n(right)`
    Inv,
    Id,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SierpinskiReport {
    pub size: u64,
    pub fn_count: u64,
    /// `(α, β, n)` for `α < β`, with `α = f_n(β)`.
    pub witness: Vec<(u64, u64, u64)>,
    /// Ordered pairs with no covering function.
    pub uncovered: Vec<(u64, u64)>,
}

impl SierpinskiReport {
    pub fn covered(&self) -> bool {
        self.uncovered.is_empty()
    }

    /// Looks up how an ordered pair is covered.
    pub fn witness_for(&self, alpha: u64, beta: u64) -> Option<(u64, Direction)> {
        if alpha == beta {
            return Some((0, Direction::Id));
        }
        let (lo, hi, dir) = if alpha < beta {
            (alpha, beta, Direction::Inv)
        } else {
            (beta, alpha, Direction::Fwd)
        };
        let pos = self
            .witness
            .binary_search_by(|&(a, b, _)| (b, a).cmp(&(hi, lo)))
            .ok()?;
        Some((self.witness[pos].2, dir))
    }
}

/// Checks that `{id} ∪ {f_n, f_n⁻¹ : n < fn_count}` covers `{0..size−1}²`.
///
/// Each pair takes the least `n` with `f_n(max) = min`.
pub fn cover_check(size: u64, fn_count: u64) -> SierpinskiReport {
    let mut witness = Vec::new();
    let mut uncovered = Vec::new();
    for beta in 0..size {
        for alpha in 0..beta {
            // f_n(β) = n mod β ranges over 0..β and hits α first at n = α
            match (0..fn_count.min(beta)).find(|&n| f(n, beta) == alpha) {
                Some(n) => witness.push((alpha, beta, n)),
                None => {
                    uncovered.push((alpha, beta));
                    uncovered.push((beta, alpha));
                }
            }
        }
    }
    uncovered.sort_unstable();
    SierpinskiReport {
        size,
        fn_count,
        witness,
        uncovered,
    }
}

/// `{β ∈ 1..size−1 : f_n(β) = α}`, one cell of the Ulam matrix.
pub fn ulam_cell(n: u64, alpha: u64, size: u64) -> Result<BTreeSet<u64>, SierpinskiError> {
    if alpha >= size {
        return Err(SierpinskiError::OutOfSegment { alpha, size });
    }
    Ok((1..size).filter(|&beta| f(n, beta) == alpha).collect())
}

/// All nonempty cells `f_n⁻¹(α)` for `n < fn_count`, `α < size`.
pub fn ulam_matrix(size: u64, fn_count: u64) -> BTreeMap<(u64, u64), BTreeSet<u64>> {
    let mut cells: BTreeMap<(u64, u64), BTreeSet<u64>> = BTreeMap::new();
    for n in 0..fn_count {
        for beta in 1..size {
            cells.entry((n, f(n, beta))).or_default().insert(beta);
        }
    }
    cells
}
