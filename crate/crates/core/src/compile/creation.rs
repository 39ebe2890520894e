//! One membrane at the start; each SUB creates a short-lived inner
//! membrane that dissolves itself after the zero test.
//!
//! SUB on register r puts the label into a new membrane `r+1`. The catalyst
//! may then push one copy of `a_r` into it, where that copy dissolves the
//! membrane; otherwise the label finishes the zero branch inside and `d''`
//! dissolves the membrane one step later. The halt label is parked in a
//! membrane `4` that also swallows the clock object `d`, so the system
//! halts.

use super::names::{primed, reg};
use super::{pad_zero_branches, Builder, CompilationArtifact, Construction, StepCost};
use crate::engine::ControlMode;
use crate::machine::RegisterMachine;
use crate::model::{Configuration, MembraneNode, OutputRegion, PSystem, Rule, Target, Variant};
use crate::multiset::Multiset;

const SKIN: &str = "1";
const SINK: &str = "4";

fn inner(r: usize) -> String {
    (r + 1).to_string()
}

pub(super) fn compile(src: &RegisterMachine) -> CompilationArtifact {
    let m = pad_zero_branches(src);
    let halt = m.halt().to_string();
    let mut b = Builder::default();
    let c = b.s("c");
    let (d, d1, d2) = (b.s("d"), b.s("d'"), b.s("d''"));
    for r in 1..=m.registers {
        b.s(&reg(r));
    }
    for l in m.labels() {
        b.s(l);
    }

    b.push(SKIN, Rule::non_coop(d, vec![b.here_sym(d1)]));
    b.push(SKIN, Rule::non_coop(d1, vec![b.here_sym(d)]));
    for r in 3..=m.registers {
        let a = b.s(&reg(r));
        let rhs = vec![b.to(&reg(r), Target::Out)];
        b.push(SKIN, Rule::non_coop(a, rhs));
    }

    for (li, r, next, alt) in m.adds() {
        let (l, lp) = (b.s(li), b.s(&primed(li, 1)));
        let rhs = vec![b.here(&primed(li, 1))];
        b.push(SKIN, Rule::non_coop(l, rhs));
        for t in [next, alt] {
            let rhs = vec![b.here(&reg(r)), b.here(t)];
            b.push(SKIN, Rule::non_coop(lp, rhs));
        }
    }

    for (li, r, dec, zero) in m.subs() {
        let mem = inner(r);
        let into = Target::InLabel(mem.clone());
        let (l, l1, l2) = (b.s(li), b.s(&primed(li, 1)), b.s(&primed(li, 2)));
        let a = b.s(&reg(r));
        b.push(SKIN, Rule::create(c, l, &mem, Multiset::singleton(l)));
        b.push(SKIN, Rule::catalytic(c, a, vec![b.to_sym(a, into.clone())]));
        b.push(SKIN, Rule::non_coop(d1, vec![b.to_sym(d1, into)]));
        let rhs = vec![b.here(dec)];
        b.push(SKIN, Rule::catalytic(c, l2, rhs));
        b.push(SKIN, Rule::non_coop(d2, vec![b.here_sym(d)]));

        b.push(&mem, Rule::non_coop(l, vec![b.here_sym(l1)]));
        b.push(&mem, Rule::dissolving(a, vec![]));
        b.push(&mem, Rule::non_coop(l1, vec![b.here_sym(l2)]));
        b.push(&mem, Rule::non_coop(d1, vec![b.here_sym(d2)]));
        let rhs = vec![b.here(zero)];
        b.push(&mem, Rule::non_coop(l2, rhs));
        b.push(&mem, Rule::dissolving(d2, vec![b.here_sym(d)]));
    }

    let lh = b.s(&halt);
    b.push(SKIN, Rule::create(c, lh, SINK, Multiset::singleton(lh)));
    for x in [d, d1] {
        let into = Target::InLabel(SINK.to_string());
        b.push(SKIN, Rule::non_coop(x, vec![b.to_sym(x, into)]));
    }

    let l0 = b.s(m.initial());
    let skin = MembraneNode::new(SKIN, Multiset::from_symbols([c, d, l0]).expect("distinct symbols"));
    let output_order = (3..=m.registers).map(|r| b.s(&reg(r))).collect();
    let system = PSystem {
        alphabet: b.al,
        catalysts: [c].into(),
        initial: Configuration::new(skin),
        rules: b.rules,
        output_region: OutputRegion::Environment,
        output_order,
        variant: Variant { mobile: false, creation: true, targets_labeled: true },
        control: ControlMode::Plain,
    };
    CompilationArtifact {
        system,
        source: src.clone(),
        simulated: m,
        construction: Construction::Mcre,
        cost: StepCost { per_instruction: 4, tail: 2 },
        guard: None,
    }
}
