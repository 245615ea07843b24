//! Subcommand bodies. Each returns the JSON document and an exit code:
//! 0 when every check passes, 1 when checks ran and failed, 2 on usage or
//! parse errors.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::artifact::{verify_artifact, ChainArtifact, ChainExport, GenericArtifact};
use crate::bits::BitString;
use crate::cantor::{build_chain, verify_chain, PointStore};
use crate::forcing::{generic_run, GenericData, OrdLabel};
use crate::lipschitz::{enumerate_l1, l1_count_log2, ENUMERATION_CAP};
use crate::sierpinski::{cover_check, ulam_matrix};
use crate::verifier::{certify_with_chain, covers_cantor, covers_tree};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Largest segment `sierpinski` accepts.
pub const SIERPINSKI_CAP: u64 = 4096;
/// Largest chain length `chain` accepts.
pub const CHAIN_CAP: usize = 100;
/// Deepest generic run `forcing` will write out leaf by leaf.
pub const EXPORT_DEPTH_CAP: usize = 16;
/// Largest `n` for `lipschitz --count-only`.
pub const COUNT_CAP: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    /// The JSON document, when one was produced.
    pub json: Option<String>,
    pub message: Option<String>,
}

impl Outcome {
    fn done<T: Serialize>(pass: bool, doc: &T) -> Self {
        Outcome {
            code: if pass { EXIT_PASS } else { EXIT_FAIL },
            json: Some(serde_json::to_string(doc).expect("serializable")),
            message: None,
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Outcome {
            code: EXIT_USAGE,
            json: None,
            message: Some(message.into()),
        }
    }
}

pub fn cmd_sierpinski(size: u64, fns: u64) -> Outcome {
    if size == 0 || size > SIERPINSKI_CAP {
        return Outcome::usage(format!("--n must be in 1..={SIERPINSKI_CAP}"));
    }
    let report = cover_check(size, fns);
    let cells: BTreeMap<String, Vec<u64>> = ulam_matrix(size, fns.min(size))
        .into_iter()
        .map(|((n, alpha), betas)| (format!("{n},{alpha}"), betas.into_iter().collect()))
        .collect();
    let doc = json!({
        "N": size,
        "fns": fns,
        "covered": report.covered(),
        "witness": report.witness,
        "uncovered": report.uncovered,
        "cells": cells,
    });
    Outcome::done(report.covered(), &doc)
}

/// The chain's first point, drawn from `seed`: a random 16-bit prefix and
/// a random constant tail.
pub fn seed_point(store: &mut PointStore, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix: BitString = (0..16).map(|_| rng.gen::<bool>()).collect();
    store.add_base(prefix, rng.gen())
}

pub fn cmd_chain(n: usize, depth: usize, seed: u64) -> Outcome {
    if n == 0 || n > CHAIN_CAP {
        return Outcome::usage(format!("--n must be in 1..={CHAIN_CAP}"));
    }
    let mut store = PointStore::new();
    let first = seed_point(&mut store, seed);
    let mut run = || -> Result<(bool, ChainArtifact), String> {
        let chain = build_chain(&mut store, n, first).map_err(|e| e.to_string())?;
        let chain_report = verify_chain(&mut store, &chain, depth).map_err(|e| e.to_string())?;
        let indices: Vec<u32> = (0..n as u32).collect();
        let mut report =
            covers_cantor(&mut store, &chain.points, &indices, depth).map_err(|e| e.to_string())?;
        certify_with_chain(&mut report, &chain);
        let pass = chain_report.passed() && report.passed();
        let export = ChainExport::new(&store, &chain).map_err(|e| e.to_string())?;
        Ok((
            pass,
            ChainArtifact {
                kind: "chain",
                depth,
                seed,
                chain: export,
                report,
            },
        ))
    };
    match run() {
        Ok((pass, artifact)) => Outcome::done(pass, &artifact),
        Err(e) => Outcome::usage(e),
    }
}

pub fn parse_labels(text: &str) -> Result<BTreeSet<OrdLabel>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map(OrdLabel)
                .map_err(|e| format!("bad label {t:?}: {e}"))
        })
        .collect()
}

pub fn cmd_forcing(k: u64, labels: &BTreeSet<OrdLabel>, seed: u64) -> Outcome {
    if k == 0 || labels.is_empty() {
        return Outcome::usage("--k must be at least 1 and --labels nonempty");
    }
    let out = match generic_run(k, labels, seed) {
        Ok(out) => out,
        Err(e) => return Outcome::usage(e.to_string()),
    };
    if out.depth() > EXPORT_DEPTH_CAP {
        return Outcome::usage(format!(
            "run reaches depth {}, above the export cap {EXPORT_DEPTH_CAP}; use fewer indices or labels",
            out.depth()
        ));
    }
    let valid = out.condition.is_valid();
    let report = match covers_tree(out.gamma(), out.family(), true) {
        Ok(r) => r,
        Err(e) => return Outcome::usage(e.to_string()),
    };
    let pass = valid && report.passed();
    let artifact = GenericArtifact {
        kind: "generic",
        generic: GenericData::from(&out),
        report,
    };
    Outcome::done(pass, &artifact)
}

pub fn cmd_lipschitz(n: u32, count_only: bool) -> Outcome {
    if count_only && n > COUNT_CAP {
        return Outcome::usage(format!("--n must be at most {COUNT_CAP} with --count-only"));
    }
    if !count_only && n as usize > ENUMERATION_CAP {
        return Outcome::usage(format!(
            "enumeration is capped at n = {ENUMERATION_CAP}; pass --count-only for larger n"
        ));
    }
    let log2 = l1_count_log2(n);
    let count = if log2 < 64 {
        json!(1u64 << log2)
    } else {
        json!(format!("2^{log2}"))
    };
    if count_only {
        return Outcome::done(true, &json!({ "n": n, "log2_count": log2, "count": count }));
    }
    let maps = enumerate_l1(n as usize).expect("under cap");
    let pass = maps.len() as u128 == 1u128 << log2;
    Outcome::done(
        pass,
        &json!({ "n": n, "log2_count": log2, "count": count, "maps": maps }),
    )
}

pub fn cmd_verify(text: &str) -> Outcome {
    match verify_artifact(text) {
        Ok(v) => Outcome::done(v.pass, &v),
        Err(e) => Outcome::usage(e.to_string()),
    }
}
