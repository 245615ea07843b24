//! JSON artifacts written by the CLI, and their re-verification from disk.
//!
//! Re-verification never trusts the producer: chains are re-evaluated from
//! their point expressions, and generic runs are checked from raw leaf
//! tables and then replayed from their recorded schedule.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bits::BitString;
use crate::cantor::{
    verify_chain, BitIndex, CantorError, Chain, ChainReport, PointExpr, PointStore,
};
use crate::forcing::{replay, schedule, ConditionData, GenericData, OrdLabel, Step};
use crate::lipschitz::{LeafTable, TreeMap};
use crate::verifier::{certify_with_chain, covers_cantor, covers_tree, CoverReport};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("JSON parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unrecognized artifact: expected a chain or a generic run")]
    UnknownKind,
    #[error("malformed chain: {0}")]
    Chain(#[from] CantorError),
    #[error("chain point {point} refers to point {child}, which is not an earlier chain point")]
    ForeignChild { point: usize, child: usize },
}

/// A rebuilt store and chain, plus any `(α, β)` pairs recorded more than once.
pub type LoadedChain = (PointStore, Chain, Vec<(usize, usize)>);

/// Wire form of a chain. Point ids are positions in `points` (0-based);
/// `witness` and `distinctness` use 1-based chain positions, so that the
/// witness of `(α, β)` is the function index `α`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainExport {
    pub points: Vec<PointExpr>,
    pub witness: Vec<(usize, usize, u32)>,
    pub distinctness: Vec<(usize, BitIndex)>,
}

impl ChainExport {
    pub fn new(store: &PointStore, chain: &Chain) -> Result<Self, ArtifactError> {
        let position: BTreeMap<usize, usize> = chain
            .points
            .iter()
            .enumerate()
            .map(|(k, &p)| (p, k))
            .collect();
        let mut points = Vec::with_capacity(chain.len());
        for (k, &p) in chain.points.iter().enumerate() {
            let expr = match store.expr(p)? {
                PointExpr::Extension { children } => PointExpr::Extension {
                    children: children
                        .iter()
                        .map(|c| match position.get(c) {
                            Some(&pos) if pos < k => Ok(pos),
                            _ => Err(ArtifactError::ForeignChild {
                                point: k,
                                child: *c,
                            }),
                        })
                        .collect::<Result<_, _>>()?,
                },
                base => base.clone(),
            };
            points.push(expr);
        }
        Ok(ChainExport {
            points,
            witness: chain
                .witness
                .iter()
                .map(|(&(a, b), &n)| (a, b, n))
                .collect(),
            distinctness: chain.distinctness.clone(),
        })
    }

    /// Rebuilds the store and chain; the recorded witnesses are taken as-is.
    pub fn load(&self) -> Result<LoadedChain, ArtifactError> {
        let store = PointStore::from_exprs(self.points.clone())?;
        let mut witness = BTreeMap::new();
        let mut duplicates = Vec::new();
        for &(a, b, n) in &self.witness {
            if witness.insert((a, b), n).is_some() {
                duplicates.push((a, b));
            }
        }
        let chain = Chain {
            points: (0..self.points.len()).collect(),
            witness,
            distinctness: self.distinctness.clone(),
        };
        Ok((store, chain, duplicates))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainArtifact {
    pub kind: &'static str,
    pub depth: usize,
    pub seed: u64,
    pub chain: ChainExport,
    pub report: CoverReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenericArtifact {
    pub kind: &'static str,
    pub generic: GenericData<TreeMap>,
    pub report: CoverReport,
}

/// One named check in a verification verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, failure: Option<String>) -> Self {
        Check {
            name: name.to_string(),
            pass: failure.is_none(),
            detail: failure,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub kind: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainReport>,
    pub report: CoverReport,
}

fn verdict(
    kind: &'static str,
    checks: Vec<Check>,
    chain: Option<ChainReport>,
    report: CoverReport,
) -> Verdict {
    Verdict {
        kind,
        pass: checks.iter().all(|c| c.pass),
        checks,
        chain,
        report,
    }
}

/// Re-verifies a chain at `depth`: every recorded witness, pairwise
/// distinctness, and an independent witness search over `f_0..f_N`.
pub fn verify_chain_export(export: &ChainExport, depth: usize) -> Result<Verdict, ArtifactError> {
    let (mut store, chain, duplicates) = export.load()?;
    let n = chain.len();
    let mut checks = Vec::new();

    let expected: BTreeSet<(usize, usize)> =
        (1..=n).flat_map(|b| (1..b).map(move |a| (a, b))).collect();
    let recorded: BTreeSet<(usize, usize)> = chain.witness.keys().copied().collect();
    let stray: Vec<_> = recorded.difference(&expected).collect();
    checks.push(Check::new(
        "witness_shape",
        (!duplicates.is_empty() || !stray.is_empty())
            .then(|| format!("duplicate entries {duplicates:?}, out-of-range entries {stray:?}")),
    ));

    let chain_report = verify_chain(&mut store, &chain, depth)?;
    let bad_pairs: Vec<_> = chain_report
        .pairs
        .iter()
        .filter(|p| !p.pass)
        .map(|p| (p.alpha, p.beta, p.fail_bit))
        .collect();
    checks.push(Check::new(
        "recorded_witnesses",
        (!bad_pairs.is_empty()).then(|| format!("failing (alpha, beta, bit): {bad_pairs:?}")),
    ));
    let bad_distinct: Vec<_> = chain_report
        .distinct
        .iter()
        .filter(|d| !d.pass)
        .map(|d| (d.alpha, d.beta))
        .collect();
    checks.push(Check::new(
        "distinctness",
        (!bad_distinct.is_empty()).then(|| format!("pairs not separated: {bad_distinct:?}")),
    ));

    let indices: Vec<u32> = (0..n as u32).collect();
    let mut report = covers_cantor(&mut store, &chain.points, &indices, depth)?;
    certify_with_chain(&mut report, &chain);
    checks.push(Check::new(
        "cover_search",
        (!report.passed()).then(|| format!("{} uncovered pairs", report.failures().count())),
    ));
    Ok(verdict("chain", checks, Some(chain_report), report))
}

/// Re-verifies a generic run from raw data, then replays its schedule and
/// demands the identical condition.
pub fn verify_generic_data(data: &GenericData<LeafTable>) -> Verdict {
    let c = &data.condition;
    let n = c.n;
    let mut checks = Vec::new();

    checks.push(Check::new(
        "depth",
        (data.depth != n).then(|| format!("depth {} but n {}", data.depth, n)),
    ));

    let mut lipschitz_failures = Vec::new();
    for (i, table) in &c.family {
        match table.coherence_violation() {
            Ok(None) if table.depth == n => {}
            Ok(None) => lipschitz_failures.push(format!("map {i}: depth {}", table.depth)),
            Ok(Some((x, y))) => lipschitz_failures.push(format!("map {i}: inputs {x}, {y}")),
            Err(e) => lipschitz_failures.push(format!("map {i}: {e}")),
        }
    }
    let s: BTreeSet<u64> = c.s.iter().copied().collect();
    let keys: BTreeSet<u64> = c.family.keys().copied().collect();
    if s != keys {
        lipschitz_failures.push(format!("s = {s:?} but maps for {keys:?}"));
    }
    checks.push(Check::new(
        "family_lipschitz",
        (!lipschitz_failures.is_empty()).then(|| lipschitz_failures.join("; ")),
    ));

    let v: BTreeSet<OrdLabel> = c.v.iter().copied().collect();
    let labels: BTreeSet<OrdLabel> = c.gamma.keys().copied().collect();
    let mut gamma_failures = Vec::new();
    if v != labels {
        gamma_failures.push(format!("v = {v:?} but points for {labels:?}"));
    }
    let mut seen: BTreeMap<&BitString, OrdLabel> = BTreeMap::new();
    for (a, x) in &c.gamma {
        if x.len() != n {
            gamma_failures.push(format!("point {a} has length {}", x.len()));
        }
        if let Some(b) = seen.insert(x, *a) {
            gamma_failures.push(format!("points {b} and {a} coincide"));
        }
    }
    checks.push(Check::new(
        "gamma_injective",
        (!gamma_failures.is_empty()).then(|| gamma_failures.join("; ")),
    ));

    let rho: BTreeMap<(OrdLabel, OrdLabel), u64> =
        c.rho.iter().map(|&(a, b, i)| ((a, b), i)).collect();
    let mut cover_failures = Vec::new();
    let order: Vec<_> = labels.iter().copied().collect();
    for (j, &beta) in order.iter().enumerate() {
        for &alpha in &order[..j] {
            let Some(&i) = rho.get(&(alpha, beta)) else {
                cover_failures.push(format!("no color for ({alpha}, {beta})"));
                continue;
            };
            let ok = c
                .family
                .get(&i)
                .and_then(|f| f.apply(&c.gamma[&beta]).ok())
                .is_some_and(|img| img == c.gamma[&alpha]);
            if !ok {
                cover_failures.push(format!("f_{i}(gamma({beta})) != gamma({alpha})"));
            }
        }
    }
    if rho.len() != order.len() * order.len().saturating_sub(1) / 2 {
        cover_failures.push(format!(
            "{} colored pairs for {} labels",
            rho.len(),
            order.len()
        ));
    }
    checks.push(Check::new(
        "coloring_covers",
        (!cover_failures.is_empty()).then(|| cover_failures.join("; ")),
    ));

    let report = match covers_tree(&c.gamma, &c.family, true) {
        Ok(r) => r,
        Err(e) => {
            checks.push(Check::new("cover_search", Some(e.to_string())));
            return verdict("generic", checks, None, CoverReport::default());
        }
    };
    checks.push(Check::new(
        "cover_search",
        (!report.passed()).then(|| format!("{} uncovered pairs", report.failures().count())),
    ));

    let scheduled: BTreeSet<OrdLabel> = data
        .schedule
        .iter()
        .filter_map(|s| match s {
            Step::Ordinal(xi) => Some(*xi),
            Step::Index(_) => None,
        })
        .collect();
    let replay_failure = if data.schedule != schedule(data.k, &scheduled, data.seed) {
        Some("schedule does not match (k, labels, seed)".to_string())
    } else {
        match replay(&data.schedule) {
            Err(e) => Some(e.to_string()),
            Ok(chain) => {
                let last = chain.last().expect("nonempty");
                match to_raw(&ConditionData::from(last)) {
                    Ok(raw) if raw == *c => None,
                    Ok(_) => Some("replayed condition differs from the artifact".to_string()),
                    Err(e) => Some(e),
                }
            }
        }
    };
    checks.push(Check::new("replay", replay_failure));
    verdict("generic", checks, None, report)
}

fn to_raw(c: &ConditionData<TreeMap>) -> Result<ConditionData<LeafTable>, String> {
    let family = c
        .family
        .iter()
        .map(|(&i, f)| f.leaf_table().map(|t| (i, t)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(ConditionData {
        n: c.n,
        s: c.s.clone(),
        v: c.v.clone(),
        family,
        gamma: c.gamma.clone(),
        rho: c.rho.clone(),
    })
}

/// Default prefix length for a bare chain without a recorded depth.
pub const DEFAULT_CHAIN_DEPTH: usize = 64;

/// Parses any artifact the CLI writes (or the bare chain / generic-run
/// objects inside them) and re-verifies it.
pub fn verify_artifact(text: &str) -> Result<Verdict, ArtifactError> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or(ArtifactError::UnknownKind)?;
    if let Some(chain) = obj.get("chain") {
        let export: ChainExport = serde_json::from_value(chain.clone())?;
        let depth = match obj.get("depth") {
            Some(d) => serde_json::from_value(d.clone())?,
            None => DEFAULT_CHAIN_DEPTH,
        };
        return verify_chain_export(&export, depth);
    }
    if obj.contains_key("points") && obj.contains_key("witness") {
        let export: ChainExport = serde_json::from_value(value)?;
        return verify_chain_export(&export, DEFAULT_CHAIN_DEPTH);
    }
    let generic = match obj.get("generic") {
        Some(g) => g.clone(),
        None if obj.contains_key("schedule") => value,
        None => return Err(ArtifactError::UnknownKind),
    };
    let data: GenericData<LeafTable> = serde_json::from_value(generic)?;
    Ok(verify_generic_data(&data))
}
