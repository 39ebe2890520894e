//! One membrane driven by a periodic schedule of six rule sets.
//!
//! ADD instructions run in the first step of a cycle. SUB on register 1
//! uses steps 1 to 3 and SUB on register 2 steps 4 to 6; the catalyst is
//! kept busy by pass-through rules on the labels that are not currently
//! being decremented. A label regains its plain form in step 6, so the
//! machine halts only at a cycle boundary.

use super::names::{bar_minus, bar_zero, hat, minus, reg, reg_primed, tilde, zero, TRAP};
use super::{halt_only_via_zero_test_on_2, Builder, CompilationArtifact, Construction, StepCost};
use crate::engine::{ControlMode, LabelSet};
use crate::machine::RegisterMachine;
use crate::model::{Configuration, MembraneNode, OutputRegion, PSystem, Rule, Target, Variant};
use crate::multiset::Multiset;

const SKIN: &str = "1";

/// Rules of one schedule slot, deduplicated before they get their labels.
struct Slot(Vec<Rule>);

impl Slot {
    fn add(&mut self, rule: Rule) {
        if !self.0.contains(&rule) {
            self.0.push(rule);
        }
    }
}

pub(super) fn compile(src: &RegisterMachine) -> CompilationArtifact {
    let m = halt_only_via_zero_test_on_2(src);
    let halt = m.halt().to_string();
    let mut b = Builder::default();
    let c = b.s("c");
    let h = b.s("h");
    let trap = b.s(TRAP);
    for r in 1..=m.registers {
        b.s(&reg(r));
    }
    let (a1, a2) = (b.s(&reg(1)), b.s(&reg(2)));
    let (a1p, a2p) = (b.s(&reg_primed(1)), b.s(&reg_primed(2)));
    for l in m.labels() {
        b.s(l);
    }
    let live: Vec<String> = m.labels().filter(|l| *l != halt).map(str::to_string).collect();
    let sub_on = |r: usize| -> Vec<(String, String, String)> {
        m.subs().filter(|s| s.1 == r).map(|(l, _, dec, z)| (l.into(), dec.into(), z.into())).collect()
    };
    let (sub1, sub2) = (sub_on(1), sub_on(2));

    let mut slots: Vec<Slot> = (0..6).map(|_| Slot(Vec::new())).collect();
    let here = |b: &mut Builder, names: &[&str]| names.iter().map(|n| b.here(n)).collect::<Vec<_>>();

    // c x → c x and x → # for each x: the catalyst must stay on x.
    let hold = |b: &mut Builder, slot: &mut Slot, x: &str| {
        let s = b.s(x);
        let keep = here(b, &[x]);
        slot.add(Rule::catalytic(c, s, keep));
        slot.add(Rule::non_coop(s, vec![RhsObject::here(trap)]));
    };
    use crate::model::RhsObject;

    // Step 1.
    {
        let slot = &mut slots[0];
        for (li, r, next, alt) in m.adds() {
            let l = b.s(li);
            for t in [next, alt] {
                let rhs = vec![b.reg_obj(r, Target::Here), b.here(&tilde(t))];
                slot.add(Rule::catalytic(c, l, rhs));
            }
        }
        for (li, ..) in &sub1 {
            let l = b.s(li);
            for form in [minus(li), zero(li)] {
                let rhs = here(&mut b, &[&form]);
                slot.add(Rule::catalytic(c, l, rhs));
            }
        }
        for (li, ..) in &sub2 {
            let l = b.s(li);
            let rhs = here(&mut b, &[&hat(li)]);
            slot.add(Rule::catalytic(c, l, rhs));
        }
        slot.add(Rule::non_coop(trap, vec![RhsObject::here(trap)]));
        slot.add(Rule::non_coop(h, vec![]));
    }

    // Steps 2 and 5 guess a copy to erase; steps 3 and 6 check the guess.
    for (r, subs, first) in [(1usize, &sub1, 1usize), (2, &sub2, 4)] {
        let (a, ap) = if r == 1 { (a1, a1p) } else { (a2, a2p) };
        let mark = &mut slots[first];
        if !subs.is_empty() {
            mark.add(Rule::catalytic(c, a, vec![RhsObject::here(ap)]));
        }
        for (li, ..) in subs {
            let (lm, l0) = (b.s(&minus(li)), b.s(&zero(li)));
            let rhs = here(&mut b, &[&bar_minus(li), "h"]);
            mark.add(Rule::non_coop(lm, rhs));
            let rhs = here(&mut b, &[&bar_zero(li)]);
            mark.add(Rule::non_coop(l0, rhs));
        }
        let check = &mut slots[first + 1];
        for (li, dec, z) in subs {
            let (bm, bz) = (b.s(&bar_minus(li)), b.s(&bar_zero(li)));
            let (dec, z) = if r == 1 { (tilde(dec), tilde(z)) } else { (dec.clone(), z.clone()) };
            let rhs = here(&mut b, &[&z]);
            check.add(Rule::catalytic(c, bz, rhs));
            check.add(Rule::non_coop(ap, vec![RhsObject::here(trap)]));
            check.add(Rule::non_coop(bz, vec![RhsObject::here(trap)]));
            let rhs = here(&mut b, &[&dec]);
            check.add(Rule::non_coop(bm, rhs));
            check.add(Rule::catalytic(c, ap, vec![]));
            check.add(Rule::catalytic(c, h, vec![RhsObject::here(trap)]));
        }
    }

    // Step 4 starts SUB on register 2.
    for (li, ..) in &sub2 {
        let l = b.s(&hat(li));
        for form in [minus(li), zero(li)] {
            let rhs = here(&mut b, &[&form]);
            slots[3].add(Rule::catalytic(c, l, rhs));
        }
    }
    slots[3].add(Rule::non_coop(h, vec![]));

    // Pass-through and label restoration.
    for (i, slot) in slots.iter_mut().enumerate().skip(1) {
        for l in &live {
            if i == 5 {
                let (t, s) = (b.s(&tilde(l)), b.s(l));
                slot.add(Rule::catalytic(c, t, vec![RhsObject::here(s)]));
                slot.add(Rule::non_coop(t, vec![RhsObject::here(trap)]));
            } else {
                hold(&mut b, slot, &tilde(l));
            }
        }
        if i == 1 || i == 2 {
            for (li, ..) in &sub2 {
                hold(&mut b, slot, &hat(li));
            }
        }
        slot.add(Rule::non_coop(trap, vec![RhsObject::here(trap)]));
    }

    let mut rules = Vec::new();
    let mut sets = Vec::new();
    for (i, slot) in slots.into_iter().enumerate() {
        let mut names = Vec::new();
        for (n, rule) in slot.0.into_iter().enumerate() {
            let name = format!("R{}.{}", i + 1, n + 1);
            names.push(name.clone());
            rules.push(rule.labeled(name));
        }
        sets.push(LabelSet::new(format!("U{}", i + 1), names));
    }
    b.rules.insert(SKIN.to_string(), rules);

    let l0 = b.s(m.initial());
    let skin = MembraneNode::new(SKIN, Multiset::from_symbols([c, l0]).expect("distinct symbols"));
    let output_order = (3..=m.registers).map(|r| b.s(&reg(r))).collect();
    let system = PSystem {
        alphabet: b.al,
        catalysts: [c].into(),
        initial: Configuration::new(skin),
        rules: b.rules,
        output_region: OutputRegion::Environment,
        output_order,
        variant: Variant::default(),
        control: ControlMode::time_varying(sets, false),
    };
    CompilationArtifact {
        system,
        source: src.clone(),
        simulated: m,
        construction: Construction::Tv,
        cost: StepCost { per_instruction: 6, tail: 0 },
        guard: None,
    }
}
