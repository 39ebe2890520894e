//! Static data model of a P system: membranes, configurations, rules, targets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::engine::ControlMode;
use crate::multiset::{Alphabet, Multiset, Symbol};

pub type MembraneLabel = String;

/// Child-index sequence from the skin. Membranes are identified by position,
/// since labels may repeat after creation.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid membrane path {0:?}")]
    InvalidPath(Path),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Here,
    Out,
    In,
    InLabel(MembraneLabel),
}

impl Target {
    pub fn is_inward(&self) -> bool {
        matches!(self, Target::In | Target::InLabel(_))
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Here => f.write_str("here"),
            Target::Out => f.write_str("out"),
            Target::In => f.write_str("in"),
            Target::InLabel(l) => write!(f, "in_{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RhsObject {
    pub symbol: Symbol,
    pub target: Target,
}

impl RhsObject {
    pub fn here(symbol: Symbol) -> Self {
        Self { symbol, target: Target::Here }
    }

    pub fn to(symbol: Symbol, target: Target) -> Self {
        Self { symbol, target }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleForm {
    /// `a → v`, optionally dissolving the enclosing membrane. `erase_target`
    /// only matters when `rhs` is empty: it is the target a rule like
    /// `d → (λ, out)` is selected under in target-selection mode.
    NonCoop {
        lhs: Symbol,
        rhs: Vec<RhsObject>,
        dissolves: bool,
        erase_target: Target,
    },
    /// `c a → (c, tar) v`.
    Catalytic {
        catalyst: Symbol,
        reactant: Symbol,
        rhs: Vec<RhsObject>,
        catalyst_target: Target,
    },
    /// `c a → c [ u ]_i`.
    CatalyticCreate {
        catalyst: Symbol,
        reactant: Symbol,
        new_label: MembraneLabel,
        contents: Multiset,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub label: Option<String>,
    pub form: RuleForm,
}

impl Rule {
    pub fn non_coop(lhs: Symbol, rhs: Vec<RhsObject>) -> Self {
        Rule {
            label: None,
            form: RuleForm::NonCoop { lhs, rhs, dissolves: false, erase_target: Target::Here },
        }
    }

    /// `a → (λ, tar)`.
    pub fn erase(lhs: Symbol, target: Target) -> Self {
        Rule {
            label: None,
            form: RuleForm::NonCoop { lhs, rhs: vec![], dissolves: false, erase_target: target },
        }
    }

    pub fn dissolving(lhs: Symbol, rhs: Vec<RhsObject>) -> Self {
        Rule {
            label: None,
            form: RuleForm::NonCoop { lhs, rhs, dissolves: true, erase_target: Target::Here },
        }
    }

    pub fn catalytic(catalyst: Symbol, reactant: Symbol, rhs: Vec<RhsObject>) -> Self {
        Rule {
            label: None,
            form: RuleForm::Catalytic { catalyst, reactant, rhs, catalyst_target: Target::Here },
        }
    }

    pub fn mobile(
        catalyst: Symbol,
        reactant: Symbol,
        catalyst_target: Target,
        rhs: Vec<RhsObject>,
    ) -> Self {
        Rule {
            label: None,
            form: RuleForm::Catalytic { catalyst, reactant, rhs, catalyst_target },
        }
    }

    pub fn create(catalyst: Symbol, reactant: Symbol, new_label: &str, contents: Multiset) -> Self {
        Rule {
            label: None,
            form: RuleForm::CatalyticCreate {
                catalyst,
                reactant,
                new_label: new_label.to_string(),
                contents,
            },
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Objects consumed by one application.
    pub fn lhs(&self) -> Multiset {
        let syms = match &self.form {
            RuleForm::NonCoop { lhs, .. } => vec![*lhs],
            RuleForm::Catalytic { catalyst, reactant, .. }
            | RuleForm::CatalyticCreate { catalyst, reactant, .. } => vec![*catalyst, *reactant],
        };
        Multiset::from_symbols(syms).expect("two objects cannot overflow")
    }

    /// Every object emitted into an existing region, with its target. The
    /// catalyst of a catalytic rule comes first. Contents of a created
    /// membrane are not listed.
    pub fn sends(&self) -> Vec<RhsObject> {
        match &self.form {
            RuleForm::NonCoop { rhs, .. } => rhs.clone(),
            RuleForm::Catalytic { catalyst, rhs, catalyst_target, .. } => {
                let mut v = vec![RhsObject::to(*catalyst, catalyst_target.clone())];
                v.extend(rhs.iter().cloned());
                v
            }
            RuleForm::CatalyticCreate { catalyst, .. } => vec![RhsObject::here(*catalyst)],
        }
    }

    /// Targets that must be resolved to a child membrane, in `sends` order.
    pub fn inward_targets(&self) -> Vec<Target> {
        self.sends()
            .into_iter()
            .filter(|o| o.target.is_inward())
            .map(|o| o.target)
            .collect()
    }

    pub fn dissolves(&self) -> bool {
        matches!(self.form, RuleForm::NonCoop { dissolves: true, .. })
    }

    /// The single target under which the rule is grouped in target-selection
    /// mode, or `None` when the produced objects disagree.
    pub fn selection_target(&self) -> Option<Target> {
        let rhs: Vec<&RhsObject> = match &self.form {
            RuleForm::NonCoop { rhs, erase_target, .. } => {
                if rhs.is_empty() {
                    return Some(erase_target.clone());
                }
                rhs.iter().collect()
            }
            RuleForm::Catalytic { rhs, catalyst_target, .. } => {
                if rhs.iter().any(|o| o.target != *catalyst_target) {
                    return None;
                }
                return Some(catalyst_target.clone());
            }
            RuleForm::CatalyticCreate { .. } => return Some(Target::Here),
        };
        let first = rhs[0].target.clone();
        rhs.iter().all(|o| o.target == first).then_some(first)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MembraneNode {
    pub label: MembraneLabel,
    pub contents: Multiset,
    pub children: Vec<MembraneNode>,
}

impl MembraneNode {
    pub fn new(label: impl Into<String>, contents: Multiset) -> Self {
        Self { label: label.into(), contents, children: vec![] }
    }

    pub fn with_children(mut self, children: Vec<MembraneNode>) -> Self {
        self.children = children;
        self
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(MembraneNode::count).sum::<usize>()
    }

    fn visit<'a>(&'a self, path: &mut Path, f: &mut dyn FnMut(&Path, &'a MembraneNode)) {
        f(path, self);
        for (i, c) in self.children.iter().enumerate() {
            path.push(i);
            c.visit(path, f);
            path.pop();
        }
    }

    fn canonical(&self, al: &Alphabet) -> String {
        let mut kids: Vec<(&str, String)> = self
            .children
            .iter()
            .map(|c| (c.label.as_str(), c.canonical(al)))
            .collect();
        kids.sort();
        let mut s = format!("[{} {}", self.label, self.contents.display(al));
        for (_, k) in kids {
            s.push(' ');
            s.push_str(&k);
        }
        s.push(']');
        s
    }

    fn normalize(&mut self) {
        for c in &mut self.children {
            c.normalize();
        }
        self.children.sort();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub environment: Multiset,
    pub skin: MembraneNode,
}

impl Configuration {
    pub fn new(skin: MembraneNode) -> Self {
        Self { environment: Multiset::new(), skin }
    }

    pub fn membrane_count(&self) -> usize {
        self.skin.count()
    }

    pub fn region(&self, path: &[usize]) -> Result<&MembraneNode, ModelError> {
        let mut node = &self.skin;
        for &i in path {
            node = node
                .children
                .get(i)
                .ok_or_else(|| ModelError::InvalidPath(path.to_vec()))?;
        }
        Ok(node)
    }

    pub fn region_mut(&mut self, path: &[usize]) -> Result<&mut MembraneNode, ModelError> {
        let mut node = &mut self.skin;
        for &i in path {
            node = node
                .children
                .get_mut(i)
                .ok_or_else(|| ModelError::InvalidPath(path.to_vec()))?;
        }
        Ok(node)
    }

    /// Every membrane with its path, in pre-order.
    pub fn regions(&self) -> Vec<(Path, &MembraneNode)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.skin.visit(&mut path, &mut |p, n| out.push((p.clone(), n)));
        out
    }

    /// Total count of `sym` across all regions (environment excluded).
    pub fn count_in_regions(&self, sym: Symbol) -> u64 {
        self.regions().iter().map(|(_, n)| n.contents.get(sym)).sum()
    }

    /// Deterministic text; equal exactly for configurations that agree up to
    /// reordering of sibling membranes.
    pub fn canonicalize(&self, al: &Alphabet) -> String {
        format!("env {{{}}} {}", self.environment.display(al), self.skin.canonical(al))
    }

    /// Structural normal form with siblings sorted; used as a dedup key.
    pub fn normalized(&self) -> Configuration {
        let mut c = self.clone();
        c.skin.normalize();
        c
    }
}

/// Free function form of [`Configuration::region`].
pub fn region_lookup<'a>(cfg: &'a Configuration, path: &[usize]) -> Result<&'a MembraneNode, ModelError> {
    cfg.region(path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputRegion {
    Environment,
    Membrane(MembraneLabel),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Variant {
    pub mobile: bool,
    pub creation: bool,
    pub targets_labeled: bool,
}

#[derive(Debug, Clone)]
pub struct PSystem {
    pub alphabet: Alphabet,
    pub catalysts: BTreeSet<Symbol>,
    pub initial: Configuration,
    pub rules: BTreeMap<MembraneLabel, Vec<Rule>>,
    pub output_region: OutputRegion,
    pub output_order: Vec<Symbol>,
    pub variant: Variant,
    pub control: ControlMode,
}

impl PSystem {
    pub fn rules_for(&self, label: &str) -> &[Rule] {
        self.rules.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn skin_label(&self) -> &str {
        &self.initial.skin.label
    }

    pub fn sym(&self, name: &str) -> Option<Symbol> {
        self.alphabet.get(name)
    }

    pub fn name(&self, s: Symbol) -> &str {
        self.alphabet.name(s)
    }

    pub fn total_rules(&self) -> usize {
        self.rules.values().map(Vec::len).sum()
    }

    pub fn canonicalize(&self, cfg: &Configuration) -> String {
        cfg.canonicalize(&self.alphabet)
    }

    /// Total catalyst count over all regions of `cfg`.
    pub fn catalyst_total(&self, cfg: &Configuration) -> u64 {
        self.catalysts.iter().map(|&c| cfg.count_in_regions(c)).sum()
    }

    /// Every rule carrying `label`, with its region label and index.
    pub fn find_rule(&self, label: &str) -> Option<(&str, usize, &Rule)> {
        self.rules.iter().find_map(|(region, rs)| {
            rs.iter()
                .position(|r| r.label.as_deref() == Some(label))
                .map(|i| (region.as_str(), i, &rs[i]))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Checks the per-variant syntactic restrictions. An empty list means valid.
pub fn validate_system(sys: &PSystem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: String, message: &str| {
        out.push(Violation { location, message: message.to_string() })
    };
    let is_cat = |s: &Symbol| sys.catalysts.contains(s);
    let skin = sys.skin_label().to_string();
    let needs_labels = !matches!(sys.control, ControlMode::Plain | ControlMode::TargetSelection);
    let target_selection = matches!(sys.control, ControlMode::TargetSelection);

    let mut existing: BTreeSet<String> = sys.initial.regions().iter().map(|(_, n)| n.label.clone()).collect();
    for rs in sys.rules.values() {
        for r in rs {
            if let RuleForm::CatalyticCreate { new_label, .. } = &r.form {
                existing.insert(new_label.clone());
            }
        }
    }

    let mut seen_labels = BTreeSet::new();
    for (region, rs) in &sys.rules {
        if !existing.contains(region) {
            push(format!("region {region}"), "rules attached to a membrane that never exists");
        }
        for (i, r) in rs.iter().enumerate() {
            let loc = format!(
                "region {region} rule {}",
                r.label.clone().unwrap_or_else(|| format!("#{i}"))
            );
            match &r.label {
                Some(l) => {
                    if !seen_labels.insert(l.clone()) {
                        push(loc.clone(), "duplicate rule label");
                    }
                }
                None if needs_labels => push(loc.clone(), "unlabeled rule under label control"),
                None => {}
            }
            let produced: Vec<Symbol> = match &r.form {
                RuleForm::NonCoop { lhs, rhs, dissolves, .. } => {
                    if is_cat(lhs) {
                        push(loc.clone(), "catalyst used as a non-cooperative reactant");
                    }
                    if *dissolves && *region == skin {
                        push(loc.clone(), "dissolving rule in the skin region");
                    }
                    rhs.iter().map(|o| o.symbol).collect()
                }
                RuleForm::Catalytic { catalyst, reactant, rhs, catalyst_target } => {
                    if !is_cat(catalyst) {
                        push(loc.clone(), "catalytic rule with an undeclared catalyst");
                    }
                    if is_cat(reactant) {
                        push(loc.clone(), "catalyst used as a reactant");
                    }
                    if *catalyst_target != Target::Here {
                        if !sys.variant.mobile {
                            push(loc.clone(), "immobile catalyst moved");
                        }
                        if *catalyst_target == Target::Out && *region == skin {
                            push(loc.clone(), "catalyst sent out of the skin");
                        }
                    }
                    if target_selection && r.selection_target() != Some(Target::Here) {
                        push(loc.clone(), "catalytic rule with non-here targets under target selection");
                    }
                    rhs.iter().map(|o| o.symbol).collect()
                }
                RuleForm::CatalyticCreate { catalyst, reactant, contents, .. } => {
                    if !sys.variant.creation {
                        push(loc.clone(), "membrane creation in a system without creation");
                    }
                    if !is_cat(catalyst) {
                        push(loc.clone(), "creation rule with an undeclared catalyst");
                    }
                    if is_cat(reactant) {
                        push(loc.clone(), "catalyst used as a reactant");
                    }
                    contents.iter().map(|(s, _)| s).collect()
                }
            };
            if produced.iter().any(is_cat) {
                push(loc.clone(), "catalyst produced on the right-hand side");
            }
            for t in r.sends().iter().map(|o| &o.target) {
                if matches!(t, Target::InLabel(_)) && !sys.variant.targets_labeled {
                    push(loc.clone(), "labeled in-target in a system without labeled targets");
                }
            }
            if target_selection && r.selection_target().is_none() {
                push(loc.clone(), "mixed targets under target selection");
            }
        }
    }

    match &sys.control {
        ControlMode::Plain | ControlMode::TargetSelection => {}
        ControlMode::LabelSelection { sets } | ControlMode::Controlled { schedule: sets, .. } => {
            if let ControlMode::Controlled { period: Some(0), .. } = &sys.control {
                push("control".into(), "period must be at least 1");
            }
            for set in sets {
                for l in &set.labels {
                    if !seen_labels.contains(l) {
                        push(format!("label set {}", set.name), &format!("unknown rule label {l}"));
                    }
                }
            }
        }
    }

    for s in &sys.output_order {
        if is_cat(s) {
            push("output".into(), "catalyst listed as an output symbol");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ControlMode, LabelSet};

    fn one_membrane(al: &mut Alphabet) -> (Symbol, Symbol, Symbol) {
        (al.intern("c"), al.intern("a_1"), al.intern("l0"))
    }

    fn system(al: Alphabet, c: Symbol, rules: Vec<Rule>, control: ControlMode) -> PSystem {
        PSystem {
            alphabet: al,
            catalysts: [c].into(),
            initial: Configuration::new(MembraneNode::new("1", Multiset::singleton(c))),
            rules: [("1".to_string(), rules)].into(),
            output_region: OutputRegion::Environment,
            output_order: vec![],
            variant: Variant::default(),
            control,
        }
    }

    #[test]
    fn immobile_catalyst_cannot_move() {
        let mut al = Alphabet::new();
        let (c, a, _) = one_membrane(&mut al);
        let r = Rule::mobile(c, a, Target::In, vec![]);
        let v = validate_system(&system(al, c, vec![r], ControlMode::Plain));
        assert!(v.iter().any(|v| v.message == "immobile catalyst moved"), "{v:?}");
    }

    #[test]
    fn mixed_targets_rejected_under_target_selection() {
        let mut al = Alphabet::new();
        let (c, a, l) = one_membrane(&mut al);
        let r = Rule::non_coop(l, vec![RhsObject::here(l), RhsObject::to(a, Target::Out)]);
        let v = validate_system(&system(al, c, vec![r], ControlMode::TargetSelection));
        assert!(v.iter().any(|v| v.message.contains("mixed targets")), "{v:?}");
    }

    #[test]
    fn dissolving_skin_rejected() {
        let mut al = Alphabet::new();
        let (c, a, _) = one_membrane(&mut al);
        let v = validate_system(&system(al, c, vec![Rule::dissolving(a, vec![])], ControlMode::Plain));
        assert!(v.iter().any(|v| v.message.contains("dissolving rule in the skin")));
    }

    #[test]
    fn label_control_requires_labels() {
        let mut al = Alphabet::new();
        let (c, a, _) = one_membrane(&mut al);
        let control = ControlMode::LabelSelection {
            sets: vec![LabelSet::new("U", ["x"])],
        };
        let v = validate_system(&system(al, c, vec![Rule::non_coop(a, vec![])], control));
        assert!(v.iter().any(|v| v.message.contains("unlabeled")));
        assert!(v.iter().any(|v| v.message.contains("unknown rule label x")));
    }

    #[test]
    fn canonical_form_ignores_sibling_order() {
        let mut al = Alphabet::new();
        let a = al.intern("a");
        let kids = |x: &str, y: &str| {
            vec![MembraneNode::new(x, Multiset::new()), MembraneNode::new(y, Multiset::new())]
        };
        let c1 = Configuration::new(MembraneNode::new("skin", Multiset::singleton(a)).with_children(kids("2", "3")));
        let c2 = Configuration::new(MembraneNode::new("skin", Multiset::singleton(a)).with_children(kids("3", "2")));
        assert_eq!(c1.canonicalize(&al), c2.canonicalize(&al));
        assert_eq!(c1.normalized(), c2.normalized());

        let mut e1 = c1.clone();
        e1.environment.insert(a, 2).unwrap();
        let mut e2 = c1.clone();
        e2.environment.insert(a, 1).unwrap();
        assert_ne!(e1.canonicalize(&al), e2.canonicalize(&al));
    }

    #[test]
    fn region_lookup_by_path() {
        let cfg = Configuration::new(
            MembraneNode::new("1", Multiset::new()).with_children(vec![MembraneNode::new("2", Multiset::new())]),
        );
        assert_eq!(region_lookup(&cfg, &[]).unwrap().label, "1");
        assert_eq!(region_lookup(&cfg, &[0]).unwrap().label, "2");
        let single = Configuration::new(MembraneNode::new("1", Multiset::new()));
        assert_eq!(region_lookup(&single, &[0]), Err(ModelError::InvalidPath(vec![0])));
    }
}
