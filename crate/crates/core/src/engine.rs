//! One nondeterministic computation step under each control regime.
//!
//! A step choice is built bottom-up over the membrane tree: every region's
//! multiset of rule instances is maximal with respect to that region's
//! contents, and a parent may only send into children that do not dissolve
//! in the same step. Rules whose inward targets can only reach dissolving
//! children count as inapplicable for the parent, so a choice is maximal iff
//! no instance can be added whose destinations all survive the step.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Configuration, MembraneNode, Path, PSystem, Rule, RuleForm, Target};
use crate::multiset::{Multiset, MultisetError, ParikhVector};
use crate::model::OutputRegion;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("engine fault: {0}")]
    Fault(String),
    #[error(transparent)]
    Multiset(#[from] MultisetError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub name: String,
    pub labels: BTreeSet<String>,
}

impl LabelSet {
    pub fn new<I, S>(name: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { name: name.into(), labels: labels.into_iter().map(Into::into).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlMode {
    Plain,
    LabelSelection { sets: Vec<LabelSet> },
    TargetSelection,
    /// A control word. With `period = Some(p)` the schedule is `(U_1…U_p)^*`
    /// (time-varying); otherwise it is a single finite word.
    Controlled { schedule: Vec<LabelSet>, weak: bool, period: Option<usize> },
}

impl ControlMode {
    pub fn time_varying(schedule: Vec<LabelSet>, weak: bool) -> Self {
        let p = schedule.len();
        ControlMode::Controlled { schedule, weak, period: Some(p) }
    }

    /// The part of the step index that influences the transition relation.
    pub fn phase(&self, step_index: usize) -> usize {
        match self {
            ControlMode::Controlled { period: Some(p), .. } => step_index % p.max(&1),
            ControlMode::Controlled { schedule, period: None, .. } => step_index.min(schedule.len()),
            _ => 0,
        }
    }

    /// The label set in force at `step_index`, for controlled systems.
    fn scheduled(&self, step_index: usize) -> Option<(usize, &LabelSet)> {
        match self {
            ControlMode::Controlled { schedule, period, .. } => {
                let i = match period {
                    Some(p) => step_index % (*p).max(1),
                    None => step_index,
                };
                schedule.get(i).map(|u| (i, u))
            }
            _ => None,
        }
    }
}

/// One application of one rule. `targets` holds, for each inward send of the
/// rule (in [`Rule::sends`] order), the index of the receiving child.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleInstance {
    pub region: Path,
    pub rule: usize,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    None,
    /// Index and name of the chosen label set.
    LabelSet(usize, String),
    /// Target chosen by every region that fired.
    Targets(Vec<(Path, Target)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepChoice {
    /// Sorted; repeated entries encode multiplicity.
    pub instances: Vec<RuleInstance>,
    pub selection: Selection,
    pub dissolved: Vec<Path>,
}

pub fn path_string(p: &[usize]) -> String {
    if p.is_empty() {
        return "/".into();
    }
    p.iter().map(|i| format!("/{i}")).collect()
}

fn candidate_children(node: &MembraneNode, target: &Target, blocked: &BTreeSet<usize>) -> Vec<usize> {
    node.children
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !blocked.contains(i)
                && match target {
                    Target::InLabel(l) => c.label == *l,
                    _ => true,
                }
        })
        .map(|(i, _)| i)
        .collect()
}

fn usable(rule: &Rule, node: &MembraneNode, blocked: &BTreeSet<usize>) -> bool {
    rule.lhs().is_sub(&node.contents)
        && rule
            .inward_targets()
            .iter()
            .all(|t| !candidate_children(node, t, blocked).is_empty())
}

/// Under target selection a rule is only selectable if its group can be
/// chosen: an inward group needs a receiving child, even for erasures.
fn group_open(rule: &Rule, node: &MembraneNode, blocked: &BTreeSet<usize>) -> bool {
    rule.selection_target()
        .is_some_and(|t| !t.is_inward() || !candidate_children(node, &t, blocked).is_empty())
}

/// Rules of the region at `path` whose left-hand side is present and whose
/// inward targets have a receiving child, restricted by `filter`.
pub fn applicable_rules<'a>(
    sys: &'a PSystem,
    cfg: &Configuration,
    path: &[usize],
    filter: impl Fn(&Rule) -> bool,
) -> Vec<(usize, &'a Rule)> {
    let Ok(node) = cfg.region(path) else {
        return vec![];
    };
    let none = BTreeSet::new();
    sys.rules_for(&node.label)
        .iter()
        .enumerate()
        .filter(|(_, r)| filter(r) && usable(r, node, &none))
        .collect()
}

/// All maximal count vectors over `rules` against `contents`.
fn maximal_counts(rules: &[(usize, &Rule)], contents: &Multiset) -> Vec<Vec<u64>> {
    let lhs: Vec<Multiset> = rules.iter().map(|(_, r)| r.lhs()).collect();
    // A rule sharing no symbol with any later rule must be used as often as
    // possible, otherwise it would stay applicable at the leaf.
    let forced: Vec<bool> = (0..lhs.len())
        .map(|i| {
            !lhs[i + 1..]
                .iter()
                .any(|later| later.iter().any(|(s, _)| lhs[i].contains(s)))
        })
        .collect();
    let mut out = Vec::new();
    let mut counts = vec![0u64; lhs.len()];
    fn dfs(
        i: usize,
        residual: &Multiset,
        lhs: &[Multiset],
        forced: &[bool],
        counts: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if i == lhs.len() {
            if lhs.iter().all(|l| !l.is_sub(residual)) {
                out.push(counts.clone());
            }
            return;
        }
        let max = lhs[i].multiplicity_in(residual).unwrap_or(0);
        let lo = if forced[i] { max } else { 0 };
        for k in (lo..=max).rev() {
            let mut r = residual.clone();
            for (s, m) in lhs[i].iter() {
                r.remove(s, m * k).expect("bounded by multiplicity");
            }
            counts[i] = k;
            dfs(i + 1, &r, lhs, forced, counts, out);
        }
        counts[i] = 0;
    }
    dfs(0, contents, &lhs, &forced, &mut counts, &mut out);
    out
}

/// All multisets of size `k` drawn from `0..n` (as sorted index vectors).
fn multichoose(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

fn cartesian<T: Clone>(lists: &[Vec<Vec<T>>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![vec![]];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for item in list {
                let mut v = prefix.clone();
                v.extend(item.iter().cloned());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

#[derive(Debug, Clone)]
struct RegionChoice {
    instances: Vec<RuleInstance>,
    target: Option<Target>,
    dissolves: bool,
}

/// Instances for `k` applications of `rule` with independently resolved
/// inward targets.
fn independent_resolutions(
    path: &Path,
    idx: usize,
    rule: &Rule,
    k: u64,
    node: &MembraneNode,
    blocked: &BTreeSet<usize>,
) -> Vec<Vec<RuleInstance>> {
    let inward = rule.inward_targets();
    let per_target: Vec<Vec<Vec<usize>>> = inward
        .iter()
        .map(|t| candidate_children(node, t, blocked).into_iter().map(|c| vec![c]).collect())
        .collect();
    let tuples = cartesian(&per_target);
    multichoose(tuples.len(), k as usize)
        .into_iter()
        .map(|pick| {
            pick.into_iter()
                .map(|t| RuleInstance { region: path.clone(), rule: idx, targets: tuples[t].clone() })
                .collect()
        })
        .collect()
}

fn region_choices(
    sys: &PSystem,
    node: &MembraneNode,
    path: &Path,
    allowed: &dyn Fn(&Rule) -> bool,
    blocked: &BTreeSet<usize>,
    target_selection: bool,
) -> Vec<RegionChoice> {
    let rules: Vec<(usize, &Rule)> = sys
        .rules_for(&node.label)
        .iter()
        .enumerate()
        .filter(|(_, r)| allowed(r) && usable(r, node, blocked))
        .filter(|(_, r)| !target_selection || group_open(r, node, blocked))
        .collect();
    if rules.is_empty() {
        return vec![RegionChoice { instances: vec![], target: None, dissolves: false }];
    }
    let mut out = Vec::new();
    if target_selection {
        let mut groups: BTreeMap<Target, Vec<(usize, &Rule)>> = BTreeMap::new();
        for &(i, r) in &rules {
            if let Some(t) = r.selection_target() {
                groups.entry(t).or_default().push((i, r));
            }
        }
        for (target, group) in groups {
            let children = if target.is_inward() {
                candidate_children(node, &target, blocked).into_iter().map(Some).collect()
            } else {
                vec![None]
            };
            for counts in maximal_counts(&group, &node.contents) {
                for child in &children {
                    let mut instances = Vec::new();
                    for (&(idx, rule), &k) in group.iter().zip(&counts) {
                        let n = rule.inward_targets().len();
                        for _ in 0..k {
                            instances.push(RuleInstance {
                                region: path.clone(),
                                rule: idx,
                                targets: child.map(|c| vec![c; n]).unwrap_or_default(),
                            });
                        }
                    }
                    let dissolves = instances.iter().any(|x| sys.rules_for(&node.label)[x.rule].dissolves());
                    out.push(RegionChoice { instances, target: Some(target.clone()), dissolves });
                }
            }
        }
    } else {
        for counts in maximal_counts(&rules, &node.contents) {
            let per_rule: Vec<Vec<Vec<RuleInstance>>> = rules
                .iter()
                .zip(&counts)
                .filter(|(_, &k)| k > 0)
                .map(|(&(idx, rule), &k)| independent_resolutions(path, idx, rule, k, node, blocked))
                .collect();
            let dissolves = rules.iter().zip(&counts).any(|((_, r), &k)| k > 0 && r.dissolves());
            for instances in cartesian(&per_rule) {
                out.push(RegionChoice { instances, target: None, dissolves });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct SubtreeChoice {
    instances: Vec<RuleInstance>,
    dissolved: Vec<Path>,
    targets: Vec<(Path, Target)>,
    root_dissolves: bool,
}

fn subtree_choices(
    sys: &PSystem,
    node: &MembraneNode,
    path: &mut Path,
    allowed: &dyn Fn(&Rule) -> bool,
    target_selection: bool,
) -> Vec<SubtreeChoice> {
    let mut per_child: Vec<Vec<SubtreeChoice>> = Vec::with_capacity(node.children.len());
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        per_child.push(subtree_choices(sys, child, path, allowed, target_selection));
        path.pop();
    }
    let mut combos: Vec<Vec<&SubtreeChoice>> = vec![vec![]];
    for list in &per_child {
        let mut next = Vec::with_capacity(combos.len() * list.len());
        for prefix in &combos {
            for item in list {
                let mut v = prefix.clone();
                v.push(item);
                next.push(v);
            }
        }
        combos = next;
    }
    let mut cache: BTreeMap<BTreeSet<usize>, Vec<RegionChoice>> = BTreeMap::new();
    let here = path.clone();
    let mut out = Vec::new();
    for combo in combos {
        let blocked: BTreeSet<usize> = combo
            .iter()
            .enumerate()
            .filter(|(_, c)| c.root_dissolves)
            .map(|(i, _)| i)
            .collect();
        let own = cache
            .entry(blocked.clone())
            .or_insert_with(|| region_choices(sys, node, &here, allowed, &blocked, target_selection));
        for rc in own.iter() {
            let mut sc = SubtreeChoice {
                instances: rc.instances.clone(),
                dissolved: vec![],
                targets: vec![],
                root_dissolves: rc.dissolves,
            };
            if rc.dissolves {
                sc.dissolved.push(here.clone());
            }
            if let Some(t) = &rc.target {
                sc.targets.push((here.clone(), t.clone()));
            }
            for child in &combo {
                sc.instances.extend(child.instances.iter().cloned());
                sc.dissolved.extend(child.dissolved.iter().cloned());
                sc.targets.extend(child.targets.iter().cloned());
            }
            out.push(sc);
        }
    }
    out
}

fn nonempty_choices(
    sys: &PSystem,
    cfg: &Configuration,
    allowed: &dyn Fn(&Rule) -> bool,
    target_selection: bool,
) -> Vec<SubtreeChoice> {
    let mut path = Vec::new();
    subtree_choices(sys, &cfg.skin, &mut path, allowed, target_selection)
        .into_iter()
        .filter(|c| !c.instances.is_empty())
        .map(|mut c| {
            c.instances.sort();
            c.dissolved.sort();
            c.targets.sort();
            c
        })
        .collect()
}

fn in_set(set: &LabelSet) -> impl Fn(&Rule) -> bool + '_ {
    move |r: &Rule| r.label.as_ref().is_some_and(|l| set.labels.contains(l))
}

/// Every admissible maximal step from `cfg` at `step_index`, deduplicated
/// and sorted by instance list. Empty when no step is possible.
pub fn enumerate_step_choices(sys: &PSystem, cfg: &Configuration, step_index: usize) -> Vec<StepChoice> {
    let mut out: Vec<StepChoice> = Vec::new();
    let mut seen: HashSet<Vec<RuleInstance>> = HashSet::new();
    let mut push = |c: SubtreeChoice, selection: Selection, out: &mut Vec<StepChoice>| {
        if seen.insert(c.instances.clone()) {
            out.push(StepChoice { instances: c.instances, selection, dissolved: c.dissolved });
        }
    };
    match &sys.control {
        ControlMode::Plain => {
            for c in nonempty_choices(sys, cfg, &|_| true, false) {
                push(c, Selection::None, &mut out);
            }
        }
        ControlMode::TargetSelection => {
            for c in nonempty_choices(sys, cfg, &|_| true, true) {
                let sel = Selection::Targets(c.targets.clone());
                push(c, sel, &mut out);
            }
        }
        ControlMode::LabelSelection { sets } => {
            for (i, set) in sets.iter().enumerate() {
                for c in nonempty_choices(sys, cfg, &in_set(set), false) {
                    push(c, Selection::LabelSet(i, set.name.clone()), &mut out);
                }
            }
        }
        ControlMode::Controlled { .. } => {
            if let Some((i, set)) = sys.control.scheduled(step_index) {
                for c in nonempty_choices(sys, cfg, &in_set(set), false) {
                    push(c, Selection::LabelSet(i, set.name.clone()), &mut out);
                }
            }
        }
    }
    out.sort_by(|a, b| a.instances.cmp(&b.instances));
    out
}

fn any_applicable(sys: &PSystem, cfg: &Configuration, filter: &dyn Fn(&Rule) -> bool) -> bool {
    cfg.regions()
        .iter()
        .any(|(p, _)| !applicable_rules(sys, cfg, p, filter).is_empty())
}

fn any_selectable(sys: &PSystem, cfg: &Configuration) -> bool {
    let none = BTreeSet::new();
    cfg.regions().iter().any(|(p, node)| {
        applicable_rules(sys, cfg, p, |_| true).iter().any(|(_, r)| group_open(r, node, &none))
    })
}

/// Whether `cfg` is a halting configuration at `step_index`.
pub fn is_halting(sys: &PSystem, cfg: &Configuration, step_index: usize) -> bool {
    match &sys.control {
        ControlMode::Plain => !any_applicable(sys, cfg, &|_| true),
        ControlMode::TargetSelection => !any_selectable(sys, cfg),
        ControlMode::LabelSelection { sets } => sets.iter().all(|u| !any_applicable(sys, cfg, &in_set(u))),
        ControlMode::Controlled { schedule, weak, period } => {
            let idle = match sys.control.scheduled(step_index) {
                Some((_, u)) => !any_applicable(sys, cfg, &in_set(u)),
                None => true,
            };
            match period {
                Some(p) => idle && (*weak || step_index.is_multiple_of((*p).max(1))),
                None => step_index >= schedule.len() || (*weak && idle),
            }
        }
    }
}

fn fault(msg: impl Into<String>) -> EngineError {
    EngineError::Fault(msg.into())
}

fn dissolve_marked(node: &mut MembraneNode, path: &mut Path, marked: &BTreeSet<Path>) -> Result<(), EngineError> {
    let old = std::mem::take(&mut node.children);
    for (i, mut child) in old.into_iter().enumerate() {
        path.push(i);
        dissolve_marked(&mut child, path, marked)?;
        if marked.contains(path) {
            node.contents.absorb(&child.contents)?;
            node.children.extend(child.children);
        } else {
            node.children.push(child);
        }
        path.pop();
    }
    Ok(())
}

/// Applies `choice` in two phases: consume every left-hand side, then
/// deliver every product, create membranes, and dissolve marked membranes
/// bottom-up into their parents.
pub fn apply_step(sys: &PSystem, cfg: &Configuration, choice: &StepChoice) -> Result<Configuration, EngineError> {
    let mut next = cfg.clone();
    let rule_of = |inst: &RuleInstance| -> Result<&Rule, EngineError> {
        let node = cfg.region(&inst.region).map_err(|e| fault(e.to_string()))?;
        sys.rules_for(&node.label)
            .get(inst.rule)
            .ok_or_else(|| fault(format!("no rule {} in region {}", inst.rule, node.label)))
    };
    for inst in &choice.instances {
        let rule = rule_of(inst)?;
        next.region_mut(&inst.region)
            .map_err(|e| fault(e.to_string()))?
            .contents
            .consume(&rule.lhs())
            .map_err(|_| fault(format!("left-hand side not present at {}", path_string(&inst.region))))?;
    }
    let mut created: Vec<(Path, MembraneNode)> = Vec::new();
    let mut dissolved: BTreeSet<Path> = BTreeSet::new();
    for inst in &choice.instances {
        let rule = rule_of(inst)?;
        let mut inward = inst.targets.iter();
        for obj in rule.sends() {
            let dest: Option<Path> = match &obj.target {
                Target::Here => Some(inst.region.clone()),
                Target::Out => {
                    if inst.region.is_empty() {
                        None
                    } else {
                        Some(inst.region[..inst.region.len() - 1].to_vec())
                    }
                }
                t @ (Target::In | Target::InLabel(_)) => {
                    let &child = inward.next().ok_or_else(|| fault("missing target resolution"))?;
                    let parent = cfg.region(&inst.region).map_err(|e| fault(e.to_string()))?;
                    let node = parent.children.get(child).ok_or_else(|| fault("target child does not exist"))?;
                    if let Target::InLabel(l) = t {
                        if node.label != *l {
                            return Err(fault(format!("child {child} is not labeled {l}")));
                        }
                    }
                    let mut p = inst.region.clone();
                    p.push(child);
                    Some(p)
                }
            };
            match dest {
                None => next.environment.insert(obj.symbol, 1)?,
                Some(p) => next
                    .region_mut(&p)
                    .map_err(|e| fault(e.to_string()))?
                    .contents
                    .insert(obj.symbol, 1)?,
            }
        }
        if let RuleForm::CatalyticCreate { new_label, contents, .. } = &rule.form {
            created.push((inst.region.clone(), MembraneNode::new(new_label.clone(), contents.clone())));
        }
        if rule.dissolves() {
            if inst.region.is_empty() {
                return Err(fault("the skin cannot dissolve"));
            }
            dissolved.insert(inst.region.clone());
        }
    }
    for inst in &choice.instances {
        let mut it = inst.targets.iter();
        for t in rule_of(inst)?.inward_targets() {
            let _ = t;
            let &child = it.next().expect("checked above");
            let mut p = inst.region.clone();
            p.push(child);
            if dissolved.contains(&p) {
                return Err(fault(format!("send into dissolving membrane {}", path_string(&p))));
            }
        }
    }
    for (p, node) in created {
        next.region_mut(&p).map_err(|e| fault(e.to_string()))?.children.push(node);
    }
    if !dissolved.is_empty() {
        let mut path = Vec::new();
        dissolve_marked(&mut next.skin, &mut path, &dissolved)?;
    }
    Ok(next)
}

/// Parikh vector of the output region over the system's output order.
/// Membranes sharing the output label are summed.
pub fn result_of(sys: &PSystem, cfg: &Configuration) -> ParikhVector {
    match &sys.output_region {
        OutputRegion::Environment => cfg.environment.parikh(&sys.output_order),
        OutputRegion::Membrane(label) => {
            let mut total = Multiset::new();
            for (_, n) in cfg.regions() {
                if n.label == *label {
                    total.absorb(&n.contents).expect("output count overflow");
                }
            }
            total.parikh(&sys.output_order)
        }
    }
}

pub fn rule_name(sys: &PSystem, cfg: &Configuration, inst: &RuleInstance) -> String {
    let Ok(node) = cfg.region(&inst.region) else {
        return format!("?{}", inst.rule);
    };
    match sys.rules_for(&node.label).get(inst.rule).and_then(|r| r.label.clone()) {
        Some(l) => l,
        None => format!("{}#{}", node.label, inst.rule),
    }
}

/// One trace line: step index, selection, each instance, resulting
/// configuration.
pub fn trace_line(sys: &PSystem, before: &Configuration, step_index: usize, choice: &StepChoice, after: &Configuration) -> String {
    let mut s = format!("{step_index} | ");
    match &choice.selection {
        Selection::None => s.push('-'),
        Selection::LabelSet(_, name) => s.push_str(name),
        Selection::Targets(ts) => {
            let parts: Vec<String> = ts.iter().map(|(p, t)| format!("{}={t}", path_string(p))).collect();
            s.push_str(&parts.join(","));
        }
    }
    s.push_str(" | ");
    let parts: Vec<String> = choice
        .instances
        .iter()
        .map(|inst| {
            let mut x = format!("{} {}", path_string(&inst.region), rule_name(sys, before, inst));
            if !inst.targets.is_empty() {
                let _ = write!(x, " ->{:?}", inst.targets);
            }
            x
        })
        .collect();
    s.push_str(&parts.join("; "));
    s.push_str(" | ");
    s.push_str(&sys.canonicalize(after));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OutputRegion, RhsObject, Variant};
    use crate::multiset::{Alphabet, Symbol};

    fn ms(syms: &[Symbol]) -> Multiset {
        Multiset::from_symbols(syms.iter().copied()).unwrap()
    }

    fn system(al: Alphabet, c: Symbol, skin: MembraneNode, rules: Vec<(&str, Rule)>, control: ControlMode) -> PSystem {
        let mut map: BTreeMap<String, Vec<Rule>> = BTreeMap::new();
        for (region, r) in rules {
            map.entry(region.to_string()).or_default().push(r);
        }
        PSystem {
            alphabet: al,
            catalysts: [c].into(),
            initial: Configuration::new(skin),
            rules: map,
            output_region: OutputRegion::Environment,
            output_order: vec![],
            variant: Variant { mobile: true, creation: true, targets_labeled: false },
            control,
        }
    }

    #[test]
    fn sub_instruction_offers_both_catalyst_uses() {
        let mut al = Alphabet::new();
        let [c, d, l0, l2, a1, trap] = ["c", "d", "l0", "l2", "a_1", "#"].map(|n| al.intern(n));
        let rules = vec![
            ("1", Rule::non_coop(l0, vec![RhsObject::here(l2)]).labeled("l0")),
            ("1", Rule::catalytic(c, a1, vec![]).labeled("l<1>")),
            ("1", Rule::catalytic(c, d, vec![RhsObject::here(trap)]).labeled("l<d>")),
        ];
        let set = LabelSet::new("U", ["l0", "l<1>", "l<d>"]);
        let skin = MembraneNode::new("1", ms(&[c, d, l0, a1, a1]));
        let sys = system(al, c, skin.clone(), rules, ControlMode::LabelSelection { sets: vec![set] });
        let cfg = Configuration::new(skin);
        let choices = enumerate_step_choices(&sys, &cfg, 0);
        let picked: Vec<Vec<usize>> = choices.iter().map(|ch| ch.instances.iter().map(|i| i.rule).collect()).collect();
        assert_eq!(picked, vec![vec![0, 1], vec![0, 2]]);

        let none = Configuration::new(MembraneNode::new("1", ms(&[c, d, l0])));
        let names: Vec<&str> = applicable_rules(&sys, &none, &[], |_| true)
            .iter()
            .map(|(_, r)| r.label.as_deref().unwrap())
            .collect();
        assert_eq!(names, ["l0", "l<d>"]);
    }

    #[test]
    fn empty_region_and_childless_in_target_are_inapplicable() {
        let mut al = Alphabet::new();
        let [c, a1, x] = ["c", "a_1", "x"].map(|n| al.intern(n));
        let rules = vec![("1", Rule::mobile(c, a1, Target::In, vec![RhsObject::here(x)]))];
        let sys = system(al, c, MembraneNode::new("1", ms(&[c, a1])), rules, ControlMode::Plain);
        assert!(applicable_rules(&sys, &sys.initial, &[], |_| true).is_empty());
        assert!(enumerate_step_choices(&sys, &sys.initial, 0).is_empty());
        assert!(is_halting(&sys, &sys.initial, 0));
        let empty = Configuration::new(MembraneNode::new("1", Multiset::new()));
        assert!(applicable_rules(&sys, &empty, &[], |_| true).is_empty());
    }

    #[test]
    fn target_selection_fires_one_target_group_per_region() {
        let mut al = Alphabet::new();
        let [c, l, a3] = ["c", "l", "a_3"].map(|n| al.intern(n));
        let children: Vec<MembraneNode> =
            (2..8).map(|i| MembraneNode::new(i.to_string(), Multiset::new())).collect();
        let skin = MembraneNode::new("1", ms(&[l, a3, a3])).with_children(children);
        let rules = vec![
            ("1", Rule::non_coop(l, vec![RhsObject::to(l, Target::In)])),
            ("1", Rule::non_coop(a3, vec![RhsObject::to(a3, Target::Out)])),
        ];
        let sys = system(al, c, skin, rules, ControlMode::TargetSelection);
        let choices = enumerate_step_choices(&sys, &sys.initial, 0);
        assert_eq!(choices.len(), 7);
        let outs: Vec<&StepChoice> = choices.iter().filter(|ch| ch.instances.iter().all(|i| i.rule == 1)).collect();
        assert_eq!(outs.len(), 1);
        assert_eq!(outs[0].instances.len(), 2);
    }

    #[test]
    fn inward_group_without_receiver_is_not_selectable() {
        let sys = crate::text::psys::parse_system(
            "@objects a b o\n@membrane 1\n  @init a\n  @rule a -> (.,in_3)\n  @membrane 2\n    @init b\n    @rule b -> (o,out)\n  @end\n@end\n@variant targets=labeled\n@mode target-selection\n",
        )
        .unwrap();
        let choices = enumerate_step_choices(&sys, &sys.initial, 0);
        assert_eq!(choices.len(), 1);
        assert_eq!(choices[0].instances.len(), 1);
        assert_eq!(choices[0].instances[0].region, vec![0]);
        let next = apply_step(&sys, &sys.initial, &choices[0]).unwrap();
        assert!(is_halting(&sys, &next, 1));
    }

    #[test]
    fn target_selection_shares_the_inner_membrane() {
        let mut al = Alphabet::new();
        let [c, x] = ["c", "x"].map(|n| al.intern(n));
        let children = vec![MembraneNode::new("2", Multiset::new()), MembraneNode::new("3", Multiset::new())];
        let skin = MembraneNode::new("1", ms(&[x, x])).with_children(children);
        let rules = vec![("1", Rule::non_coop(x, vec![RhsObject::to(x, Target::In)]))];
        let mut sys = system(al, c, skin, rules, ControlMode::TargetSelection);
        let ts = enumerate_step_choices(&sys, &sys.initial, 0);
        assert_eq!(ts.len(), 2);
        assert!(ts.iter().all(|ch| ch.instances[0].targets == ch.instances[1].targets));
        sys.control = ControlMode::Plain;
        // {x→2, x→2}, {x→2, x→3}, {x→3, x→3}
        assert_eq!(enumerate_step_choices(&sys, &sys.initial, 0).len(), 3);
    }

    #[test]
    fn creation_step_adds_membrane_after_sends() {
        let mut al = Alphabet::new();
        let [c, d, dp, li] = ["c", "d", "d'", "l_i"].map(|n| al.intern(n));
        let rules = vec![
            ("1", Rule::create(c, li, "2", Multiset::singleton(li))),
            ("1", Rule::non_coop(d, vec![RhsObject::here(dp)])),
        ];
        let sys = system(al, c, MembraneNode::new("1", ms(&[c, d, li])), rules, ControlMode::Plain);
        let choices = enumerate_step_choices(&sys, &sys.initial, 0);
        assert_eq!(choices.len(), 1);
        let next = apply_step(&sys, &sys.initial, &choices[0]).unwrap();
        assert_eq!(sys.canonicalize(&next), "env {-} [1 c d' [2 l_i]]");
    }

    #[test]
    fn dissolution_merges_into_parent() {
        let mut al = Alphabet::new();
        let [c, a, lp, lpp, dp, dpp] = ["c", "a_2", "l'", "l''", "d'", "d''"].map(|n| al.intern(n));
        let inner = MembraneNode::new("3", ms(&[a, lp, dp]));
        let skin = MembraneNode::new("1", ms(&[c])).with_children(vec![inner]);
        let rules = vec![
            ("3", Rule::dissolving(a, vec![])),
            ("3", Rule::non_coop(lp, vec![RhsObject::here(lpp)])),
            ("3", Rule::non_coop(dp, vec![RhsObject::here(dpp)])),
        ];
        let sys = system(al, c, skin, rules, ControlMode::Plain);
        let choices = enumerate_step_choices(&sys, &sys.initial, 0);
        assert_eq!(choices.len(), 1);
        assert_eq!(choices[0].dissolved, vec![vec![0]]);
        let next = apply_step(&sys, &sys.initial, &choices[0]).unwrap();
        assert_eq!(sys.canonicalize(&next), "env {-} [1 c d'' l'']");
    }

    #[test]
    fn parent_cannot_send_into_dissolving_child() {
        let mut al = Alphabet::new();
        let [c, a, x, y] = ["c", "a", "x", "y"].map(|n| al.intern(n));
        let inner = MembraneNode::new("2", ms(&[a]));
        let skin = MembraneNode::new("1", ms(&[c, x])).with_children(vec![inner]);
        let rules = vec![
            ("2", Rule::dissolving(a, vec![])),
            ("1", Rule::catalytic(c, x, vec![RhsObject::to(y, Target::In)])),
        ];
        let sys = system(al, c, skin, rules, ControlMode::Plain);
        let choices = enumerate_step_choices(&sys, &sys.initial, 0);
        assert_eq!(choices.len(), 1);
        assert_eq!(choices[0].instances.len(), 1);
        let next = apply_step(&sys, &sys.initial, &choices[0]).unwrap();
        let again = enumerate_step_choices(&sys, &next, 1);
        assert!(again.is_empty(), "no child left to send into");
        assert!(is_halting(&sys, &next, 1));
    }

    #[test]
    fn nested_dissolution_reparents_children() {
        let mut al = Alphabet::new();
        let [c, a, z] = ["c", "a", "z"].map(|n| al.intern(n));
        let deep = MembraneNode::new("3", ms(&[z]));
        let mid = MembraneNode::new("2", ms(&[a, z])).with_children(vec![deep]);
        let skin = MembraneNode::new("1", ms(&[c])).with_children(vec![mid]);
        let sys = system(al, c, skin, vec![("2", Rule::dissolving(a, vec![]))], ControlMode::Plain);
        let choices = enumerate_step_choices(&sys, &sys.initial, 0);
        let next = apply_step(&sys, &sys.initial, &choices[0]).unwrap();
        assert_eq!(sys.canonicalize(&next), "env {-} [1 c z [3 z]]");
    }

    #[test]
    fn trap_loop_never_halts_and_outputs_count() {
        let mut al = Alphabet::new();
        let [c, trap, a3, a4] = ["c", "#", "a_3", "a_4"].map(|n| al.intern(n));
        let rules = vec![("1", Rule::non_coop(trap, vec![RhsObject::here(trap)]).labeled("t"))];
        let mut sys = system(al, c, MembraneNode::new("1", ms(&[trap])), rules, ControlMode::time_varying(vec![LabelSet::new("U1", ["t"])], false));
        assert!(!is_halting(&sys, &sys.initial, 0));
        sys.output_order = vec![a3, a4];
        let mut cfg = sys.initial.clone();
        assert_eq!(result_of(&sys, &cfg), ParikhVector(vec![0, 0]));
        cfg.environment = ms(&[a3, a4, a3]);
        assert_eq!(result_of(&sys, &cfg), ParikhVector(vec![2, 1]));
    }

    #[test]
    fn strong_periodic_halting_needs_cycle_boundary() {
        let mut al = Alphabet::new();
        let [c, x] = ["c", "x"].map(|n| al.intern(n));
        let rules = vec![("1", Rule::non_coop(x, vec![]).labeled("r"))];
        let sched = vec![LabelSet::new("U1", ["r"]), LabelSet::new("U2", Vec::<String>::new())];
        let mut sys = system(al, c, MembraneNode::new("1", ms(&[c])), rules, ControlMode::time_varying(sched.clone(), false));
        let cfg = sys.initial.clone();
        assert!(is_halting(&sys, &cfg, 0));
        assert!(!is_halting(&sys, &cfg, 1));
        assert!(is_halting(&sys, &cfg, 4));
        sys.control = ControlMode::time_varying(sched, true);
        assert!(is_halting(&sys, &cfg, 1));
    }

    #[test]
    fn finite_word_halts_only_when_complete_in_strong_mode() {
        let mut al = Alphabet::new();
        let [c, x] = ["c", "x"].map(|n| al.intern(n));
        let rules = vec![("1", Rule::non_coop(x, vec![]).labeled("r"))];
        let sched = vec![LabelSet::new("U1", ["r"]), LabelSet::new("U2", ["r"])];
        let control = ControlMode::Controlled { schedule: sched, weak: false, period: None };
        let sys = system(al, c, MembraneNode::new("1", ms(&[c])), rules, control);
        assert!(!is_halting(&sys, &sys.initial, 1));
        assert!(is_halting(&sys, &sys.initial, 2));
        assert!(enumerate_step_choices(&sys, &sys.initial, 3).is_empty());
    }
}
