//! The poset of finite approximations `⟨n, s, v, F, γ, ρ⟩` to a countable
//! family of 1-Lipschitz maps, an injective point assignment, and a pair
//! coloring, together with its density extensions and the Δ-system
//! amalgamation of two isomorphic conditions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::lipschitz::TreeMap;

/// A countable ordinal at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrdLabel(pub u64);

impl fmt::Display for OrdLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An unordered pair, stored as `(min, max)`.
pub type Pair = (OrdLabel, OrdLabel);

fn pair(a: OrdLabel, b: OrdLabel) -> Pair {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Condition {
    pub n: usize,
    pub s: BTreeSet<u64>,
    pub v: BTreeSet<OrdLabel>,
    pub family: BTreeMap<u64, TreeMap>,
    pub gamma: BTreeMap<OrdLabel, BitString>,
    pub rho: BTreeMap<Pair, u64>,
}

/// One failed clause of the membership test, with the offending data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    IndexWithoutMap {
        index: u64,
    },
    MapOutsideS {
        index: u64,
    },
    MapDepth {
        index: u64,
        depth: usize,
    },
    LabelWithoutPoint {
        label: OrdLabel,
    },
    PointOutsideV {
        label: OrdLabel,
    },
    PointLength {
        label: OrdLabel,
        len: usize,
    },
    RhoPairOrder {
        a: OrdLabel,
        b: OrdLabel,
    },
    RhoOutsideV {
        a: OrdLabel,
        b: OrdLabel,
    },
    RhoMissing {
        a: OrdLabel,
        b: OrdLabel,
    },
    RhoOutsideS {
        a: OrdLabel,
        b: OrdLabel,
        index: u64,
    },
    RhoRepeat {
        alpha: OrdLabel,
        alpha2: OrdLabel,
        beta: OrdLabel,
        index: u64,
    },
    GammaCollision {
        alpha: OrdLabel,
        beta: OrdLabel,
    },
    NotCovered {
        alpha: OrdLabel,
        beta: OrdLabel,
        index: u64,
    },
}

impl Violation {
    /// The numbered clause of the definition this violation breaks.
    pub fn clause(&self) -> &'static str {
        use Violation::*;
        match self {
            IndexWithoutMap { .. }
            | MapOutsideS { .. }
            | MapDepth { .. }
            | LabelWithoutPoint { .. }
            | PointOutsideV { .. }
            | PointLength { .. }
            | RhoPairOrder { .. }
            | RhoOutsideV { .. } => "1",
            RhoMissing { .. } | RhoOutsideS { .. } => "2",
            RhoRepeat { .. } => "2'",
            GammaCollision { .. } => "3",
            NotCovered { .. } => "4",
        }
    }
}

/// A failed hypothesis of the amalgamation construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    DepthMismatch {
        p: usize,
        q: usize,
    },
    IndexSetMismatch,
    FamilyMismatch {
        index: u64,
    },
    RootNotBelowTail {
        max_root: OrdLabel,
        min_tail: OrdLabel,
    },
    TailsNotSeparated {
        max_p: OrdLabel,
        min_q_tail: OrdLabel,
    },
    SizeMismatch {
        p: usize,
        q: usize,
    },
    RootMoved {
        label: OrdLabel,
        image: OrdLabel,
    },
    GammaMismatch {
        alpha: OrdLabel,
    },
    RhoMismatch {
        alpha: OrdLabel,
        beta: OrdLabel,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForcingError {
    #[error("condition `{which}` is not in the poset: {violations:?}")]
    Invalid {
        which: &'static str,
        violations: Vec<Violation>,
    },
    #[error("amalgamation hypotheses fail: {0:?}")]
    Preconditions(Vec<Hypothesis>),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("generic run needs K >= 1 and at least one label")]
    EmptyRun,
}

impl Condition {
    /// `n = 0, s = {0}, F = {0: the map on the one-point tree}`, nothing else.
    pub fn trivial() -> Self {
        Condition {
            n: 0,
            s: BTreeSet::from([0]),
            family: BTreeMap::from([(0, TreeMap::identity(0))]),
            ..Default::default()
        }
    }

    pub fn rho_of(&self, a: OrdLabel, b: OrdLabel) -> Option<u64> {
        self.rho.get(&pair(a, b)).copied()
    }

    /// Checks every clause independently and lists all failures.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        for &i in &self.s {
            if !self.family.contains_key(&i) {
                out.push(Violation::IndexWithoutMap { index: i });
            }
        }
        for (&i, m) in &self.family {
            if !self.s.contains(&i) {
                out.push(Violation::MapOutsideS { index: i });
            }
            if m.depth() != self.n {
                out.push(Violation::MapDepth {
                    index: i,
                    depth: m.depth(),
                });
            }
        }
        for &a in &self.v {
            if !self.gamma.contains_key(&a) {
                out.push(Violation::LabelWithoutPoint { label: a });
            }
        }
        for (&a, x) in &self.gamma {
            if !self.v.contains(&a) {
                out.push(Violation::PointOutsideV { label: a });
            }
            if x.len() != self.n {
                out.push(Violation::PointLength {
                    label: a,
                    len: x.len(),
                });
            }
        }
        for (&(a, b), &i) in &self.rho {
            if a >= b {
                out.push(Violation::RhoPairOrder { a, b });
            }
            if !self.v.contains(&a) || !self.v.contains(&b) {
                out.push(Violation::RhoOutsideV { a, b });
            }
            if !self.s.contains(&i) {
                out.push(Violation::RhoOutsideS { a, b, index: i });
            }
        }

        let labels: Vec<_> = self.v.iter().copied().collect();
        for (j, &b) in labels.iter().enumerate() {
            for &a in &labels[..j] {
                if !self.rho.contains_key(&(a, b)) {
                    out.push(Violation::RhoMissing { a, b });
                }
            }
        }

        for (j, &beta) in labels.iter().enumerate() {
            let mut seen: BTreeMap<u64, OrdLabel> = BTreeMap::new();
            for &alpha in &labels[..j] {
                if let Some(i) = self.rho_of(alpha, beta) {
                    if let Some(&first) = seen.get(&i) {
                        out.push(Violation::RhoRepeat {
                            alpha: first,
                            alpha2: alpha,
                            beta,
                            index: i,
                        });
                    } else {
                        seen.insert(i, alpha);
                    }
                }
            }
        }

        let mut images: BTreeMap<&BitString, OrdLabel> = BTreeMap::new();
        for (&a, x) in &self.gamma {
            if let Some(&first) = images.get(x) {
                out.push(Violation::GammaCollision {
                    alpha: first,
                    beta: a,
                });
            } else {
                images.insert(x, a);
            }
        }

        for (j, &beta) in labels.iter().enumerate() {
            for &alpha in &labels[..j] {
                let (Some(i), Some(ga), Some(gb)) = (
                    self.rho_of(alpha, beta),
                    self.gamma.get(&alpha),
                    self.gamma.get(&beta),
                ) else {
                    continue;
                };
                let Some(f) = self.family.get(&i) else {
                    continue;
                };
                if f.apply(gb).ok().as_ref() != Some(ga) {
                    out.push(Violation::NotCovered {
                        alpha,
                        beta,
                        index: i,
                    });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn require_valid(&self, which: &'static str) -> Result<(), ForcingError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ForcingError::Invalid { which, violations })
        }
    }

    /// `n + 1`, every map extended by `f(η⌢ε) = f(η)⌢ε`, every point by `⌢0`.
    fn deepen(&self) -> Condition {
        Condition {
            n: self.n + 1,
            s: self.s.clone(),
            v: self.v.clone(),
            family: self
                .family
                .iter()
                .map(|(&i, f)| (i, f.extend_trivially()))
                .collect(),
            gamma: self
                .gamma
                .iter()
                .map(|(&a, x)| (a, x.with(false)))
                .collect(),
            rho: self.rho.clone(),
        }
    }

    fn fresh_indices(&self, count: usize) -> Vec<u64> {
        (0..).filter(|i| !self.s.contains(i)).take(count).collect()
    }
}

/// `p ≤ q`: `q` extends `p`.
pub fn leq(p: &Condition, q: &Condition) -> Result<bool, ForcingError> {
    p.require_valid("p")?;
    q.require_valid("q")?;
    if p.n > q.n || !p.s.is_subset(&q.s) || !p.v.is_subset(&q.v) {
        return Ok(false);
    }
    for (i, fp) in &p.family {
        let fq = &q.family[i];
        if fq.restrict(p.n).expect("n^p <= n^q") != *fp {
            return Ok(false);
        }
    }
    for (a, gp) in &p.gamma {
        if q.gamma[a].prefix(p.n) != *gp {
            return Ok(false);
        }
    }
    Ok(p.rho.iter().all(|(k, i)| q.rho.get(k) == Some(i)))
}

/// An extension of `p` in `D(k) = {q : n^q ≥ k, k ∈ s^q}`.
///
/// Always takes at least one step; a missing `k` gets the identity map.
pub fn extend_with_index(p: &Condition, k: u64) -> Result<Condition, ForcingError> {
    p.require_valid("p")?;
    let mut q = p.deepen();
    if q.s.insert(k) {
        q.family.insert(k, TreeMap::identity(q.n));
    }
    while (q.n as u64) < k {
        q = q.deepen();
    }
    Ok(q)
}

/// An extension of `p` in `E(ξ) = {q : ξ ∈ v^q}`; returns `p` itself if `ξ ∈ v^p`.
pub fn extend_with_ordinal(p: &Condition, xi: OrdLabel) -> Result<Condition, ForcingError> {
    p.require_valid("p")?;
    if p.v.contains(&xi) {
        return Ok(p.clone());
    }
    let mut q = p.deepen();
    let fresh = p.fresh_indices(p.v.len());
    q.v.insert(xi);
    q.gamma.insert(xi, BitString::ones(q.n));
    for (&alpha, &i) in p.v.iter().zip(&fresh) {
        q.s.insert(i);
        q.rho.insert(pair(alpha, xi), i);
        let below = if xi < alpha { xi } else { alpha };
        let f = TreeMap::constant(q.n, &q.gamma[&below]).expect("gamma has length n");
        q.family.insert(i, f);
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AmalgamationCheck {
    pub root: BTreeSet<OrdLabel>,
    pub failures: Vec<Hypothesis>,
}

impl AmalgamationCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Same `n`, `s`, `F`; `v^p`, `v^q` a Δ-system with root `a` below both
/// tails, the tail of `q` above all of `v^p`, and the order isomorphism
/// `v^p → v^q` fixing `a` and transporting `γ` and `ρ`.
pub fn amalgamation_preconditions(p: &Condition, q: &Condition) -> AmalgamationCheck {
    let mut failures = Vec::new();
    if p.n != q.n {
        failures.push(Hypothesis::DepthMismatch { p: p.n, q: q.n });
    }
    if p.s != q.s {
        failures.push(Hypothesis::IndexSetMismatch);
    }
    for (i, f) in &p.family {
        if q.family.get(i) != Some(f) {
            failures.push(Hypothesis::FamilyMismatch { index: *i });
        }
    }
    for i in q.family.keys() {
        if !p.family.contains_key(i) {
            failures.push(Hypothesis::FamilyMismatch { index: *i });
        }
    }

    let root: BTreeSet<OrdLabel> = p.v.intersection(&q.v).copied().collect();
    let p_tail: BTreeSet<OrdLabel> = p.v.difference(&root).copied().collect();
    let q_tail: BTreeSet<OrdLabel> = q.v.difference(&root).copied().collect();
    for tail in [&p_tail, &q_tail] {
        if let (Some(&max_root), Some(&min_tail)) = (root.last(), tail.first()) {
            if max_root >= min_tail {
                failures.push(Hypothesis::RootNotBelowTail { max_root, min_tail });
            }
        }
    }
    if let (Some(&max_p), Some(&min_q_tail)) = (p.v.last(), q_tail.first()) {
        if max_p >= min_q_tail {
            failures.push(Hypothesis::TailsNotSeparated { max_p, min_q_tail });
        }
    }

    if p.v.len() != q.v.len() {
        failures.push(Hypothesis::SizeMismatch {
            p: p.v.len(),
            q: q.v.len(),
        });
    } else {
        let phi: BTreeMap<OrdLabel, OrdLabel> =
            p.v.iter().copied().zip(q.v.iter().copied()).collect();
        for &a in &root {
            if phi[&a] != a {
                failures.push(Hypothesis::RootMoved {
                    label: a,
                    image: phi[&a],
                });
            }
        }
        for (&a, &fa) in &phi {
            if p.gamma.get(&a) != q.gamma.get(&fa) {
                failures.push(Hypothesis::GammaMismatch { alpha: a });
            }
        }
        let labels: Vec<_> = p.v.iter().copied().collect();
        for (j, &b) in labels.iter().enumerate() {
            for &a in &labels[..j] {
                if p.rho_of(a, b) != q.rho_of(phi[&a], phi[&b]) {
                    failures.push(Hypothesis::RhoMismatch { alpha: a, beta: b });
                }
            }
        }
    }
    AmalgamationCheck { root, failures }
}

/// A common extension `r` of two conditions satisfying the amalgamation
/// hypotheses.
///
/// `n^r = n + 1`. Points of `p` get `⌢0`, tail points of `q` get `⌢1`. Each
/// cross pair `{α ∈ v^p∖a, β ∈ v^q∖a}` gets a fresh index whose map is
/// constant `γ^r(α)`. An old map `F[i]` is extended by `F(η)⌢ε` at the points
/// `η = γ^p(β)` for which some `α < β` in `v^p∖a` has `ρ^p(α, β) = i`, and by
/// `F(η)⌢0` elsewhere.
pub fn amalgamate(p: &Condition, q: &Condition) -> Result<Condition, ForcingError> {
    p.require_valid("p")?;
    q.require_valid("q")?;
    let check = amalgamation_preconditions(p, q);
    if !check.passed() {
        return Err(ForcingError::Preconditions(check.failures));
    }
    let root = check.root;
    let p_tail: Vec<OrdLabel> = p.v.difference(&root).copied().collect();
    let q_tail: Vec<OrdLabel> = q.v.difference(&root).copied().collect();

    let n = p.n + 1;
    let mut r = Condition {
        n,
        s: p.s.clone(),
        v: p.v.union(&q.v).copied().collect(),
        ..Default::default()
    };
    r.rho = p.rho.clone();
    r.rho.extend(q.rho.iter().map(|(&k, &i)| (k, i)));

    for (&a, x) in &p.gamma {
        r.gamma.insert(a, x.with(false));
    }
    for &b in &q_tail {
        r.gamma.insert(b, q.gamma[&b].with(true));
    }

    // Cross pairs in lex order of (α, β); α < β since q's tail lies above v^p.
    let cross: Vec<Pair> = p_tail
        .iter()
        .flat_map(|&a| q_tail.iter().map(move |&b| (a, b)))
        .collect();
    let fresh = p.fresh_indices(cross.len());
    for (&(a, b), &i) in cross.iter().zip(&fresh) {
        r.s.insert(i);
        r.rho.insert((a, b), i);
        let f = TreeMap::constant(n, &r.gamma[&a]).expect("gamma has length n");
        r.family.insert(i, f);
    }

    for (&i, f) in &p.family {
        // η = γ^p(β) for α < β in v^p∖a with ρ^p(α, β) = i
        let mut keep: BTreeSet<&BitString> = BTreeSet::new();
        for (j, &b) in p_tail.iter().enumerate() {
            for &a in &p_tail[..j] {
                if p.rho_of(a, b) == Some(i) {
                    keep.insert(&p.gamma[&b]);
                }
            }
        }
        let mut g = f.extend_with_zero();
        for eta in keep {
            g = g
                .with_last_bit(&eta.with(true), true)
                .expect("path has the extended depth");
        }
        r.family.insert(i, g);
    }
    Ok(r)
}

/// Parameters for [`random_isomorphic_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairParams {
    pub n: usize,
    /// Indices `0..s_size` are available to every pair; more are allocated
    /// when no existing map can absorb a pair.
    pub s_size: usize,
    pub root_size: usize,
    pub tail_size: usize,
}

/// Largest depth the random generator will build maps for.
pub const GENERATOR_DEPTH_CAP: usize = 12;

fn compatible(constraints: &[(BitString, BitString)], x: &BitString, y: &BitString) -> bool {
    constraints
        .iter()
        .all(|(x2, y2)| x.common_prefix_len(x2) <= y.common_prefix_len(y2))
}

/// A uniformly random prefix-coherent map agreeing with `constraints`, which
/// must be pairwise compatible.
fn lipschitz_completion<R: Rng>(
    n: usize,
    constraints: &[(BitString, BitString)],
    rng: &mut R,
) -> TreeMap {
    let mut bits = Vec::with_capacity((1usize << (n + 1)) - 2);
    for j in 0..n {
        for node in 0..(1u64 << j) {
            let eta = BitString::from_index(node, j);
            for e in [false, true] {
                let child = eta.with(e);
                let forced = constraints
                    .iter()
                    .find(|(x, _)| x.prefix(j + 1) == child)
                    .map(|(_, y)| y.get(j).expect("length n"));
                bits.push(forced.unwrap_or_else(|| rng.gen()));
            }
        }
    }
    TreeMap::from_node_bits(n, &bits)
}

/// A random valid condition of depth `n` with `v = labels`.
pub fn random_condition<R: Rng>(
    n: usize,
    s_size: usize,
    labels: &BTreeSet<OrdLabel>,
    rng: &mut R,
) -> Result<Condition, ForcingError> {
    if n > GENERATOR_DEPTH_CAP {
        return Err(ForcingError::Infeasible(format!(
            "depth {n} above generator cap {GENERATOR_DEPTH_CAP}"
        )));
    }
    if labels.len() as u64 > 1u64 << n {
        return Err(ForcingError::Infeasible(format!(
            "{} labels do not fit injectively into 2^{n}",
            labels.len()
        )));
    }
    let mut words: Vec<u64> = (0..1u64 << n).collect();
    words.shuffle(rng);
    let gamma: BTreeMap<OrdLabel, BitString> = labels
        .iter()
        .zip(&words)
        .map(|(&a, &w)| (a, BitString::from_index(w, n)))
        .collect();

    let mut s: BTreeSet<u64> = (0..s_size as u64).collect();
    let mut constraints: BTreeMap<u64, Vec<(BitString, BitString)>> =
        s.iter().map(|&i| (i, Vec::new())).collect();
    let mut rho = BTreeMap::new();
    let order: Vec<_> = labels.iter().copied().collect();
    for (j, &b) in order.iter().enumerate() {
        for &a in &order[..j] {
            let (x, y) = (&gamma[&b], &gamma[&a]);
            let mut candidates: Vec<u64> = s.iter().copied().collect();
            candidates.shuffle(rng);
            let chosen = candidates
                .into_iter()
                .find(|i| compatible(&constraints[i], x, y))
                .unwrap_or_else(|| {
                    let fresh = (0..).find(|i| !s.contains(i)).expect("unbounded");
                    s.insert(fresh);
                    constraints.insert(fresh, Vec::new());
                    fresh
                });
            constraints
                .get_mut(&chosen)
                .expect("registered")
                .push((x.clone(), y.clone()));
            rho.insert((a, b), chosen);
        }
    }
    let family = constraints
        .iter()
        .map(|(&i, c)| (i, lipschitz_completion(n, c, rng)))
        .collect();
    Ok(Condition {
        n,
        s,
        v: labels.clone(),
        family,
        gamma,
        rho,
    })
}

/// Two conditions satisfying [`amalgamation_preconditions`]: a random `p`
/// with root labels in `[0, 1000)` and tail in `[1000, 2000)`, and `q` its
/// copy with the tail shifted above `max(v^p)`.
pub fn random_isomorphic_pair(
    params: PairParams,
    seed: u64,
) -> Result<(Condition, Condition), ForcingError> {
    let total = params.root_size + params.tail_size;
    if params.n > GENERATOR_DEPTH_CAP || total as u64 > 1u64 << params.n {
        return Err(ForcingError::Infeasible(format!(
            "root {} + tail {} labels at depth {}",
            params.root_size, params.tail_size, params.n
        )));
    }
    if params.root_size > 1000 || params.tail_size > 1000 {
        return Err(ForcingError::Infeasible(
            "label ranges hold 1000 each".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng, lo: u64, count: usize| -> BTreeSet<OrdLabel> {
        let mut pool: Vec<u64> = (lo..lo + 1000).collect();
        pool.shuffle(rng);
        pool[..count].iter().map(|&x| OrdLabel(x)).collect()
    };
    let root = pick(&mut rng, 0, params.root_size);
    let tail = pick(&mut rng, 1000, params.tail_size);
    let labels: BTreeSet<OrdLabel> = root.union(&tail).copied().collect();
    let p = random_condition(params.n, params.s_size, &labels, &mut rng)?;

    let shift: u64 = rng.gen_range(1000..2000);
    let phi = |a: OrdLabel| {
        if root.contains(&a) {
            a
        } else {
            OrdLabel(a.0 + shift)
        }
    };
    let q = Condition {
        n: p.n,
        s: p.s.clone(),
        v: p.v.iter().map(|&a| phi(a)).collect(),
        family: p.family.clone(),
        gamma: p.gamma.iter().map(|(&a, x)| (phi(a), x.clone())).collect(),
        rho: p
            .rho
            .iter()
            .map(|(&(a, b), &i)| ((phi(a), phi(b)), i))
            .collect(),
    };
    Ok((p, q))
}

/// One scheduled dense-set meeting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    /// meet `D(k)`
    Index(u64),
    /// meet `E(ξ)`
    Ordinal(OrdLabel),
}

pub fn apply_step(p: &Condition, step: Step) -> Result<Condition, ForcingError> {
    match step {
        Step::Index(k) => extend_with_index(p, k),
        Step::Ordinal(xi) => extend_with_ordinal(p, xi),
    }
}

/// The finite-depth limit of a generic run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericOutput {
    pub k: u64,
    pub seed: u64,
    pub schedule: Vec<Step>,
    /// The last condition of the run; its family, `γ` and `ρ` are the output.
    pub condition: Condition,
}

impl GenericOutput {
    pub fn depth(&self) -> usize {
        self.condition.n
    }

    pub fn family(&self) -> &BTreeMap<u64, TreeMap> {
        &self.condition.family
    }

    pub fn gamma(&self) -> &BTreeMap<OrdLabel, BitString> {
        &self.condition.gamma
    }

    pub fn rho(&self) -> &BTreeMap<Pair, u64> {
        &self.condition.rho
    }
}

/// The seed-determined interleaving of `D(0..k)` and `E(ξ), ξ ∈ labels`.
pub fn schedule(k: u64, labels: &BTreeSet<OrdLabel>, seed: u64) -> Vec<Step> {
    let mut steps: Vec<Step> = (0..k)
        .map(Step::Index)
        .chain(labels.iter().map(|&xi| Step::Ordinal(xi)))
        .collect();
    steps.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    steps
}

/// Runs `schedule` from the trivial condition, returning every condition of
/// the resulting chain `p_0 ≤ p_1 ≤ …`.
pub fn replay(steps: &[Step]) -> Result<Vec<Condition>, ForcingError> {
    let mut chain = vec![Condition::trivial()];
    for &step in steps {
        let next = apply_step(chain.last().expect("nonempty"), step)?;
        chain.push(next);
    }
    Ok(chain)
}

/// [`generic_run`] that also returns the chain of conditions.
pub fn generic_run_trace(
    k: u64,
    labels: &BTreeSet<OrdLabel>,
    seed: u64,
) -> Result<(GenericOutput, Vec<Condition>), ForcingError> {
    if k == 0 || labels.is_empty() {
        return Err(ForcingError::EmptyRun);
    }
    let steps = schedule(k, labels, seed);
    let chain = replay(&steps)?;
    let out = GenericOutput {
        k,
        seed,
        schedule: steps,
        condition: chain.last().expect("nonempty").clone(),
    };
    Ok((out, chain))
}

pub fn generic_run(
    k: u64,
    labels: &BTreeSet<OrdLabel>,
    seed: u64,
) -> Result<GenericOutput, ForcingError> {
    generic_run_trace(k, labels, seed).map(|(out, _)| out)
}

/// Wire form of a condition, generic over the map representation so raw
/// (unchecked) leaf tables can be read back for independent verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionData<M> {
    pub n: usize,
    pub s: Vec<u64>,
    pub v: Vec<OrdLabel>,
    #[serde(rename = "F")]
    pub family: BTreeMap<u64, M>,
    pub gamma: BTreeMap<OrdLabel, BitString>,
    pub rho: Vec<(OrdLabel, OrdLabel, u64)>,
}

impl From<&Condition> for ConditionData<TreeMap> {
    fn from(c: &Condition) -> Self {
        ConditionData {
            n: c.n,
            s: c.s.iter().copied().collect(),
            v: c.v.iter().copied().collect(),
            family: c.family.clone(),
            gamma: c.gamma.clone(),
            rho: c.rho.iter().map(|(&(a, b), &i)| (a, b, i)).collect(),
        }
    }
}

impl From<ConditionData<TreeMap>> for Condition {
    fn from(d: ConditionData<TreeMap>) -> Self {
        Condition {
            n: d.n,
            s: d.s.into_iter().collect(),
            v: d.v.into_iter().collect(),
            family: d.family,
            gamma: d.gamma,
            rho: d.rho.into_iter().map(|(a, b, i)| ((a, b), i)).collect(),
        }
    }
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ConditionData::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        ConditionData::<TreeMap>::deserialize(deserializer).map(Condition::from)
    }
}

/// Wire form of a [`GenericOutput`]: the condition fields plus replay data,
/// all at the top level of one JSON object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericData<M> {
    pub depth: usize,
    pub k: u64,
    pub seed: u64,
    pub schedule: Vec<Step>,
    pub condition: ConditionData<M>,
}

// `#[serde(flatten)]` would buffer the object and lose the integer map keys
// of `F` and `gamma`, so the flat layout is spelled out.
#[derive(Serialize, Deserialize)]
struct GenericWire<M> {
    depth: usize,
    k: u64,
    seed: u64,
    schedule: Vec<Step>,
    n: usize,
    s: Vec<u64>,
    v: Vec<OrdLabel>,
    #[serde(rename = "F")]
    family: BTreeMap<u64, M>,
    gamma: BTreeMap<OrdLabel, BitString>,
    rho: Vec<(OrdLabel, OrdLabel, u64)>,
}

impl<M: Serialize + Clone> Serialize for GenericData<M> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let c = self.condition.clone();
        GenericWire {
            depth: self.depth,
            k: self.k,
            seed: self.seed,
            schedule: self.schedule.clone(),
            n: c.n,
            s: c.s,
            v: c.v,
            family: c.family,
            gamma: c.gamma,
            rho: c.rho,
        }
        .serialize(serializer)
    }
}

impl<'de, M: Deserialize<'de>> Deserialize<'de> for GenericData<M> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = GenericWire::<M>::deserialize(deserializer)?;
        Ok(GenericData {
            depth: w.depth,
            k: w.k,
            seed: w.seed,
            schedule: w.schedule,
            condition: ConditionData {
                n: w.n,
                s: w.s,
                v: w.v,
                family: w.family,
                gamma: w.gamma,
                rho: w.rho,
            },
        })
    }
}

impl From<&GenericOutput> for GenericData<TreeMap> {
    fn from(g: &GenericOutput) -> Self {
        GenericData {
            depth: g.depth(),
            k: g.k,
            seed: g.seed,
            schedule: g.schedule.clone(),
            condition: ConditionData::from(&g.condition),
        }
    }
}

impl Serialize for GenericOutput {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GenericData::from(self).serialize(serializer)
    }
}
