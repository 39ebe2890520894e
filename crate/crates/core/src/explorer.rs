//! Bounded breadth-first exploration of the computation tree and seeded
//! random runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{apply_step, enumerate_step_choices, is_halting, result_of, trace_line, EngineError};
use crate::model::{Configuration, OutputRegion, PSystem};
use crate::multiset::ParikhVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Exhaustive,
    Random { samples: usize, seed: u64 },
}

/// How states are merged. `PerLevel` keeps identical configurations reached
/// at different depths apart so that every halting length is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dedup {
    Global,
    PerLevel,
    None,
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub max_steps: usize,
    pub max_total_objects: u64,
    pub max_configs: usize,
    pub strategy: Strategy,
    pub dedup: Dedup,
    pub jobs: usize,
    /// Keep every state and edge in the report.
    pub record_graph: bool,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            max_steps: 200,
            max_total_objects: 200,
            max_configs: 200_000,
            strategy: Strategy::Exhaustive,
            dedup: Dedup::Global,
            jobs: 1,
            record_graph: false,
        }
    }
}

impl Bounds {
    pub fn steps(max_steps: usize) -> Self {
        Self { max_steps, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub steps: bool,
    pub objects: bool,
    pub configs: bool,
}

impl Truncation {
    pub fn any(&self) -> bool {
        self.steps || self.objects || self.configs
    }
}

#[derive(Debug, Clone)]
pub struct StateInfo {
    pub cfg: Configuration,
    pub step: usize,
    pub halting: bool,
    pub successors: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ExplorationReport {
    pub results: BTreeSet<ParikhVector>,
    /// (result, number of steps) for every halting state found.
    pub halting: BTreeSet<(ParikhVector, usize)>,
    /// Choice indices (into [`enumerate_step_choices`]) leading from the
    /// initial configuration to a halting configuration with each result.
    pub witnesses: BTreeMap<ParikhVector, Vec<usize>>,
    pub truncated: Truncation,
    pub visited: usize,
    pub max_frontier: usize,
    /// Non-halting states with no admissible step.
    pub stuck: usize,
    pub min_membranes: usize,
    pub max_membranes: usize,
    pub graph: Vec<StateInfo>,
}

/// Total objects in all regions and the environment, not counting output
/// symbols that reached the environment.
pub fn object_count(sys: &PSystem, cfg: &Configuration) -> u64 {
    let regions: u64 = cfg.regions().iter().map(|(_, n)| n.contents.size()).sum();
    let env: u64 = cfg
        .environment
        .iter()
        .filter(|(s, _)| !(sys.output_region == OutputRegion::Environment && sys.output_order.contains(s)))
        .map(|(_, k)| k)
        .sum();
    regions + env
}

enum Expansion {
    Halting(ParikhVector),
    Stuck,
    AtLimit,
    Next { succ: Vec<(usize, Configuration)>, over_objects: bool },
    Fault(EngineError),
}

fn expand(sys: &PSystem, cfg: &Configuration, step: usize, bounds: &Bounds) -> Expansion {
    if is_halting(sys, cfg, step) {
        return Expansion::Halting(result_of(sys, cfg));
    }
    if step >= bounds.max_steps {
        return Expansion::AtLimit;
    }
    let choices = enumerate_step_choices(sys, cfg, step);
    if choices.is_empty() {
        return Expansion::Stuck;
    }
    let mut succ = Vec::with_capacity(choices.len());
    let mut over_objects = false;
    for (i, ch) in choices.iter().enumerate() {
        match apply_step(sys, cfg, ch) {
            Ok(next) => {
                if object_count(sys, &next) > bounds.max_total_objects {
                    over_objects = true;
                } else {
                    succ.push((i, next.normalized()));
                }
            }
            Err(e) => return Expansion::Fault(e),
        }
    }
    Expansion::Next { succ, over_objects }
}

/// Exhaustive exploration up to the bounds (or sampling, per
/// `bounds.strategy`). Engine faults abort with an error.
pub fn explore(sys: &PSystem, bounds: &Bounds) -> Result<ExplorationReport, EngineError> {
    match bounds.strategy {
        Strategy::Exhaustive => explore_exhaustive(sys, bounds),
        Strategy::Random { samples, seed } => {
            let mut report = ExplorationReport::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let run = sample_run(sys, bounds, rng.gen())?;
                report.visited += run.steps + 1;
                match run.outcome {
                    RunOutcome::StepLimit => report.truncated.steps = true,
                    RunOutcome::ObjectLimit => report.truncated.objects = true,
                    RunOutcome::Stuck => report.stuck += 1,
                    RunOutcome::Halted => {}
                }
                if let Some(v) = run.result {
                    report.witnesses.entry(v.clone()).or_insert(run.choices);
                    report.halting.insert((v.clone(), run.steps));
                    report.results.insert(v);
                }
            }
            Ok(report)
        }
    }
}

/// Configuration, step, and the parent id with the choice taken there.
type StateRow = (Configuration, usize, Option<(usize, usize)>);

fn explore_exhaustive(sys: &PSystem, bounds: &Bounds) -> Result<ExplorationReport, EngineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(bounds.jobs.max(1))
        .build()
        .map_err(|e| EngineError::Fault(e.to_string()))?;
    let mut report = ExplorationReport { min_membranes: usize::MAX, ..Default::default() };
    let mut states: Vec<StateRow> = Vec::new();
    let mut seen: HashMap<(Configuration, usize), usize> = HashMap::new();
    let init = sys.initial.normalized();
    seen.insert((init.clone(), sys.control.phase(0)), 0);
    states.push((init, 0, None));
    let mut frontier = vec![0usize];
    let mut step = 0;
    while !frontier.is_empty() {
        report.max_frontier = report.max_frontier.max(frontier.len());
        let expansions: Vec<Expansion> = pool.install(|| {
            frontier
                .par_iter()
                .map(|&id| expand(sys, &states[id].0, step, bounds))
                .collect()
        });
        if bounds.dedup != Dedup::Global {
            seen.clear();
        }
        let mut next_frontier = Vec::new();
        for (&id, exp) in frontier.iter().zip(expansions) {
            let mut succ_ids = Vec::new();
            let mut halting = false;
            match exp {
                Expansion::Fault(e) => return Err(e),
                Expansion::Halting(v) => {
                    halting = true;
                    if !report.witnesses.contains_key(&v) {
                        report.witnesses.insert(v.clone(), witness(&states, id));
                    }
                    report.halting.insert((v.clone(), step));
                    report.results.insert(v);
                }
                Expansion::Stuck => report.stuck += 1,
                Expansion::AtLimit => report.truncated.steps = true,
                Expansion::Next { succ, over_objects } => {
                    report.truncated.objects |= over_objects;
                    for (choice, cfg) in succ {
                        let key = (cfg, sys.control.phase(step + 1));
                        if bounds.dedup != Dedup::None {
                            if let Some(&existing) = seen.get(&key) {
                                succ_ids.push(existing);
                                continue;
                            }
                        }
                        if states.len() >= bounds.max_configs {
                            report.truncated.configs = true;
                            continue;
                        }
                        let nid = states.len();
                        states.push((key.0.clone(), step + 1, Some((id, choice))));
                        if bounds.dedup != Dedup::None {
                            seen.insert(key, nid);
                        }
                        succ_ids.push(nid);
                        next_frontier.push(nid);
                    }
                }
            }
            if bounds.record_graph {
                if report.graph.len() <= id {
                    report.graph.resize_with(id + 1, || StateInfo {
                        cfg: Configuration::new(sys.initial.skin.clone()),
                        step: 0,
                        halting: false,
                        successors: vec![],
                    });
                }
                report.graph[id] = StateInfo { cfg: states[id].0.clone(), step, halting, successors: succ_ids };
            }
        }
        frontier = next_frontier;
        step += 1;
    }
    report.visited = states.len();
    for (cfg, _, _) in &states {
        let n = cfg.membrane_count();
        report.min_membranes = report.min_membranes.min(n);
        report.max_membranes = report.max_membranes.max(n);
    }
    if bounds.record_graph {
        // States created but never expanded (cut off by a bound).
        while report.graph.len() < states.len() {
            let (cfg, step, _) = &states[report.graph.len()];
            report.graph.push(StateInfo { cfg: cfg.clone(), step: *step, halting: false, successors: vec![] });
        }
    }
    Ok(report)
}

fn witness(states: &[StateRow], mut id: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while let Some((parent, choice)) = states[id].2 {
        out.push(choice);
        id = parent;
    }
    out.reverse();
    out
}

/// Re-runs a witness from the initial configuration, returning every
/// visited configuration, or `None` if some index does not name a choice.
pub fn replay(sys: &PSystem, choices: &[usize]) -> Result<Option<Vec<Configuration>>, EngineError> {
    let mut cfg = sys.initial.normalized();
    let mut out = vec![cfg.clone()];
    for (step, &i) in choices.iter().enumerate() {
        let all = enumerate_step_choices(sys, &cfg, step);
        let Some(ch) = all.get(i) else { return Ok(None) };
        cfg = apply_step(sys, &cfg, ch)?.normalized();
        out.push(cfg.clone());
    }
    Ok(Some(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunOutcome {
    Halted,
    Stuck,
    StepLimit,
    ObjectLimit,
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub trace: Vec<String>,
    pub choices: Vec<usize>,
    pub result: Option<ParikhVector>,
    pub steps: usize,
    pub outcome: RunOutcome,
}

/// One computation choosing uniformly among the admissible steps.
pub fn sample_run(sys: &PSystem, bounds: &Bounds, seed: u64) -> Result<SampleRun, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = sys.initial.normalized();
    let mut run = SampleRun { trace: vec![], choices: vec![], result: None, steps: 0, outcome: RunOutcome::StepLimit };
    loop {
        let step = run.steps;
        if is_halting(sys, &cfg, step) {
            run.result = Some(result_of(sys, &cfg));
            run.outcome = RunOutcome::Halted;
            return Ok(run);
        }
        if step >= bounds.max_steps {
            return Ok(run);
        }
        let choices = enumerate_step_choices(sys, &cfg, step);
        if choices.is_empty() {
            run.outcome = RunOutcome::Stuck;
            return Ok(run);
        }
        let i = rng.gen_range(0..choices.len());
        let next = apply_step(sys, &cfg, &choices[i])?.normalized();
        run.trace.push(trace_line(sys, &cfg, step, &choices[i], &next));
        run.choices.push(i);
        run.steps += 1;
        cfg = next;
        if object_count(sys, &cfg) > bounds.max_total_objects {
            run.outcome = RunOutcome::ObjectLimit;
            return Ok(run);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SetDiff {
    /// In `got` but not in the oracle.
    pub extra: BTreeSet<ParikhVector>,
    /// In the oracle but not in `got`.
    pub missing: BTreeSet<ParikhVector>,
}

impl SetDiff {
    pub fn is_equal(&self) -> bool {
        self.extra.is_empty() && self.missing.is_empty()
    }
}

/// Symmetric difference of two result sets, each first restricted by
/// `keep`.
pub fn compare_sets(
    got: &BTreeSet<ParikhVector>,
    oracle: &BTreeSet<ParikhVector>,
    keep: impl Fn(&ParikhVector) -> bool,
) -> SetDiff {
    let got: BTreeSet<_> = got.iter().filter(|v| keep(v)).cloned().collect();
    let oracle: BTreeSet<_> = oracle.iter().filter(|v| keep(v)).cloned().collect();
    SetDiff {
        extra: got.difference(&oracle).cloned().collect(),
        missing: oracle.difference(&got).cloned().collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub results: Vec<String>,
    pub result_count: usize,
    pub halting_lengths: Vec<usize>,
    pub visited: usize,
    pub max_frontier: usize,
    pub stuck: usize,
    pub membranes: (usize, usize),
    pub truncated: Truncation,
}

impl ExplorationReport {
    pub fn summary(&self) -> ReportSummary {
        let lengths: BTreeSet<usize> = self.halting.iter().map(|(_, n)| *n).collect();
        ReportSummary {
            results: self.results.iter().map(ToString::to_string).collect(),
            result_count: self.results.len(),
            halting_lengths: lengths.into_iter().collect(),
            visited: self.visited,
            max_frontier: self.max_frontier,
            stuck: self.stuck,
            membranes: (self.min_membranes.min(self.max_membranes), self.max_membranes),
            truncated: self.truncated,
        }
    }

    pub fn to_text(&self) -> String {
        let s = self.summary();
        let t = &s.truncated;
        format!(
            "results ({}): {}\nhalting lengths: {:?}\nvisited: {}\nmax frontier: {}\nstuck: {}\nmembranes: {}..{}\ntruncated: steps={} objects={} configs={}\n",
            s.result_count,
            if s.results.is_empty() { "-".to_string() } else { s.results.join(" ") },
            s.halting_lengths,
            s.visited,
            s.max_frontier,
            s.stuck,
            s.membranes.0,
            s.membranes.1,
            t.steps,
            t.objects,
            t.configs
        )
    }
}
