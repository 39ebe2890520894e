//! One membrane, one step per instruction; each step picks one label set.
//!
//! A SUB guesses between the set that decrements (`c d → c #` fires when
//! nothing can be erased) and the set that takes the zero branch
//! (`c a_r → c #` fires when something could have been erased). Every set
//! that moves to the halt label also erases `d`, so that `c d → c #` stops
//! being applicable, and traps if the current label is not the one the set
//! belongs to. Sets whose other rules do not consume the label (the
//! decrement sets and the halting sets) also carry `l → #` for every other
//! label, so they cannot fire under a different current label.

use std::collections::BTreeSet;

use super::names::{primed, reg, TRAP};
use super::{halt_not_after_decrement, Builder, CompilationArtifact, Construction, StepCost};
use crate::engine::{ControlMode, LabelSet};
use crate::machine::{Instr, RegisterMachine};
use crate::model::{Configuration, MembraneNode, OutputRegion, PSystem, Rule, Target, Variant};
use crate::multiset::Multiset;

const SKIN: &str = "1";

pub(super) fn compile(src: &RegisterMachine) -> CompilationArtifact {
    let m = halt_not_after_decrement(src);
    let halt = m.halt().to_string();
    let has_sub = m.subs().next().is_some();
    let mut b = Builder::default();
    let c = b.s("c");
    let d = b.s("d");
    let trap = b.s(TRAP);
    for l in m.labels() {
        b.s(l);
    }
    for r in 1..=m.registers {
        b.s(&reg(r));
    }

    let mut sets: Vec<LabelSet> = Vec::new();
    let mut set = |name: String, labels: Vec<String>| sets.push(LabelSet::new(name, labels));

    // `l → #` for every label other than `from` and the halt label: a set
    // carrying these cannot fire unless `from` is the current label.
    let guards = |b: &mut Builder, from: &str| -> Vec<String> {
        let mut out = Vec::new();
        for l in m.labels().filter(|l| *l != halt && *l != from) {
            let guard = format!("t<{l}>");
            let ls = b.s(l);
            let rhs = vec![b.here(TRAP)];
            b.push(SKIN, Rule::non_coop(ls, rhs).labeled(guard.clone()));
            out.push(guard);
        }
        out
    };

    // Labels to add to a set whose rule for `from` jumps to `target`.
    let halting_extras = |b: &mut Builder, from: &str, target: &str| -> Vec<String> {
        if !has_sub || target != halt {
            return vec![];
        }
        b.push(SKIN, Rule::erase(d, Target::Here).labeled("l<e>"));
        let mut out = vec!["l<e>".to_string()];
        out.extend(guards(b, from));
        out
    };

    for (li, instr) in &m.program {
        let l = b.s(li);
        match instr {
            Instr::Add { reg: r, next, alt } => {
                let obj = b.reg_obj(*r, Target::Here);
                let to_next = vec![b.here(next), obj.clone()];
                b.push(SKIN, Rule::non_coop(l, to_next).labeled(li.clone()));
                if next == alt {
                    let mut labels = vec![li.clone()];
                    labels.extend(halting_extras(&mut b, li, next));
                    set(format!("W_{li}"), labels);
                    continue;
                }
                let to_alt = vec![b.here(alt), obj];
                b.push(SKIN, Rule::non_coop(l, to_alt).labeled(primed(li, 1)));
                let (ex_next, ex_alt) = (halting_extras(&mut b, li, next), halting_extras(&mut b, li, alt));
                if ex_next.is_empty() && ex_alt.is_empty() {
                    set(format!("W_{li}"), vec![li.clone(), primed(li, 1)]);
                } else {
                    set(format!("W_{li}"), std::iter::once(li.clone()).chain(ex_next).collect());
                    set(format!("W_{}", primed(li, 1)), std::iter::once(primed(li, 1)).chain(ex_alt).collect());
                }
            }
            Instr::Sub { reg: r, dec, zero } => {
                let a = b.s(&reg(*r));
                let to_dec = vec![b.here(dec)];
                b.push(SKIN, Rule::non_coop(l, to_dec).labeled(li.clone()));
                b.push(SKIN, Rule::catalytic(c, a, vec![]).labeled(format!("l<{r}>")));
                let t = vec![b.here(TRAP)];
                b.push(SKIN, Rule::catalytic(c, d, t).labeled("l<d>"));
                let mut labels = vec![li.clone(), format!("l<{r}>"), "l<d>".into()];
                labels.extend(guards(&mut b, li));
                set(format!("W_{li}"), labels);

                let to_zero = vec![b.here(zero)];
                b.push(SKIN, Rule::non_coop(l, to_zero).labeled(primed(li, 1)));
                let t = vec![b.here(TRAP)];
                b.push(SKIN, Rule::catalytic(c, a, t).labeled(format!("l<{r}'>")));
                let mut labels = vec![primed(li, 1), format!("l<{r}'>")];
                labels.extend(halting_extras(&mut b, li, zero));
                set(format!("W_{}", primed(li, 1)), labels);
            }
            Instr::Halt => {}
        }
    }
    let t = vec![b.here(TRAP)];
    b.push(SKIN, Rule::non_coop(trap, t).labeled("l<#>"));
    set("W_#".into(), vec!["l<#>".into()]);

    // Keep each set once, in first-seen order.
    let mut seen = BTreeSet::new();
    sets.retain(|s| seen.insert(s.labels.clone()));

    let l0 = b.s(m.initial());
    let init = Multiset::from_symbols([c, d, l0]).expect("small");
    let output_order = (3..=m.registers).map(|r| b.s(&reg(r))).collect();
    let guard = m.subs().next().map(|(_, r, _, _)| format!("l<{r}'>"));
    let system = PSystem {
        alphabet: b.al,
        catalysts: [c].into(),
        initial: Configuration::new(MembraneNode::new(SKIN, init)),
        rules: b.rules,
        output_region: OutputRegion::Environment,
        output_order,
        variant: Variant::default(),
        control: ControlMode::LabelSelection { sets },
    };
    CompilationArtifact {
        system,
        source: src.clone(),
        simulated: m,
        construction: Construction::Ls,
        cost: StepCost { per_instruction: 1, tail: 0 },
        guard,
    }
}
