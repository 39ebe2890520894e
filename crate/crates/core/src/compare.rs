//! Bounded comparison of a compiled system against its source machine.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::compile::CompilationArtifact;
use crate::engine::EngineError;
use crate::explorer::{explore, Bounds, SetDiff, Truncation};
use crate::machine::rm_explore;
use crate::multiset::ParikhVector;

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub construction: String,
    /// Machine results within `max_steps` instructions.
    pub oracle: BTreeSet<ParikhVector>,
    /// Machine results whose shortest computation fits in `max_steps`
    /// P system steps; the system must produce all of them.
    pub guaranteed: BTreeSet<ParikhVector>,
    pub got: BTreeSet<ParikhVector>,
    /// `extra`: produced but not a machine result. `missing`: guaranteed
    /// but not produced.
    pub diff: SetDiff,
    pub oracle_truncated: bool,
    pub truncated: Truncation,
    /// Both explorations closed their state spaces; then `got` must equal
    /// `oracle`.
    pub exact: bool,
    pub pass: bool,
}

pub fn compare(art: &CompilationArtifact, bounds: &Bounds) -> Result<Comparison, EngineError> {
    let report = explore(&art.system, bounds)?;
    Ok(judge(art, bounds.max_steps, report.results, report.truncated))
}

/// Compares a result set already computed for `art.system` under a step
/// bound of `max_steps`.
pub fn judge(
    art: &CompilationArtifact,
    max_steps: usize,
    got: BTreeSet<ParikhVector>,
    truncated: Truncation,
) -> Comparison {
    let full = rm_explore(&art.source, max_steps);
    let sim = rm_explore(&art.simulated, max_steps);
    let guaranteed: BTreeSet<ParikhVector> = sim
        .halting
        .iter()
        .filter(|(_, n)| art.cost.steps_for(*n) <= max_steps)
        .map(|(v, _)| v.clone())
        .collect();
    let oracle = full.outputs();
    let extra: BTreeSet<ParikhVector> = got.difference(&oracle).cloned().collect();
    let complete = !truncated.objects && !truncated.configs;
    let missing: BTreeSet<ParikhVector> = if complete {
        guaranteed.difference(&got).cloned().collect()
    } else {
        BTreeSet::new()
    };
    let exact = !full.truncated && !truncated.any();
    let mut diff = SetDiff { extra, missing };
    if exact {
        diff.missing = oracle.difference(&got).cloned().collect();
    }
    let pass = diff.is_equal();
    Comparison {
        construction: art.construction.to_string(),
        oracle,
        guaranteed,
        got,
        diff,
        oracle_truncated: full.truncated,
        truncated,
        exact,
        pass,
    }
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let show = |s: &BTreeSet<ParikhVector>| {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            }
        };
        let mut out = format!(
            "construction: {}\nmachine: {}\nguaranteed: {}\nsystem: {}\n",
            self.construction,
            show(&self.oracle),
            show(&self.guaranteed),
            show(&self.got)
        );
        if !self.diff.extra.is_empty() {
            out.push_str(&format!("spurious: {}\n", show(&self.diff.extra)));
        }
        if !self.diff.missing.is_empty() {
            out.push_str(&format!("missing: {}\n", show(&self.diff.missing)));
        }
        let t = &self.truncated;
        out.push_str(&format!(
            "truncated: machine={} steps={} objects={} configs={}\nexact: {}\n{}\n",
            self.oracle_truncated,
            t.steps,
            t.objects,
            t.configs,
            self.exact,
            if self.pass { "EQUAL" } else { "MISMATCH" }
        ));
        out
    }
}
