//! Three membranes and a catalyst that travels between them.
//!
//! Registers 1 and 2 live as `a_1` in membrane 2 and `a_2` in membrane 3.
//! A SUB moves the catalyst and the label together into the membrane of
//! its register. If a register object is there, the catalyst leaves with
//! it, the label follows on its own and takes the decrement branch;
//! otherwise catalyst and label leave together on the zero branch.

use super::names::{primed, reg, TRAP};
use super::{Builder, CompilationArtifact, Construction, StepCost};
use crate::engine::ControlMode;
use crate::machine::RegisterMachine;
use crate::model::{Configuration, MembraneNode, OutputRegion, PSystem, Rule, Target, Variant};
use crate::multiset::Multiset;

const SKIN: &str = "1";

fn home(r: usize) -> String {
    (r + 1).to_string()
}

pub(super) fn compile(m: &RegisterMachine) -> CompilationArtifact {
    let mut b = Builder::default();
    let c = b.s("c");
    let trap = b.s(TRAP);
    for r in 1..=m.registers {
        b.s(&reg(r));
    }
    for l in m.labels() {
        b.s(l);
    }
    let subs: Vec<(String, usize, String, String)> =
        m.subs().map(|(l, r, dec, z)| (l.into(), r, dec.into(), z.into())).collect();

    for (li, r, next, alt) in m.adds() {
        let l = b.s(li);
        let t = if r <= 2 { Target::In } else { Target::Out };
        for n in [next, alt] {
            let rhs = vec![b.here(n), b.to(&reg(r), t.clone())];
            b.push(SKIN, Rule::non_coop(l, rhs));
        }
    }
    for (li, _, dec, _) in &subs {
        let (l, l3) = (b.s(li), b.s(&primed(li, 3)));
        b.push(SKIN, Rule::mobile(c, l, Target::In, vec![b.to_sym(l, Target::In)]));
        let rhs = vec![b.here(dec)];
        b.push(SKIN, Rule::catalytic(c, l3, rhs));
        b.push(SKIN, Rule::non_coop(l3, vec![b.here_sym(trap)]));
    }
    b.push(SKIN, Rule::non_coop(trap, vec![b.here_sym(trap)]));

    for r in [1usize, 2] {
        let mem = home(r);
        let (own, other) = (b.s(&reg(r)), b.s(&reg(3 - r)));
        b.push(&mem, Rule::non_coop(other, vec![b.here_sym(trap)]));
        b.push(&mem, Rule::non_coop(trap, vec![b.here_sym(trap)]));
        b.push(&mem, Rule::mobile(c, own, Target::Out, vec![]));
        for (li, ..) in &subs {
            let l = b.s(li);
            b.push(&mem, Rule::non_coop(l, vec![b.here_sym(trap)]).labeled(format!("g{mem}<{li}>")));
        }
        for (li, _, _, zero) in subs.iter().filter(|s| s.1 == r) {
            let (l, l1, l2) = (b.s(li), b.s(&primed(li, 1)), b.s(&primed(li, 2)));
            b.push(&mem, Rule::catalytic(c, l, vec![b.here_sym(l1)]));
            b.push(&mem, Rule::non_coop(l1, vec![b.here_sym(l2)]));
            let rhs = vec![b.to(zero, Target::Out)];
            b.push(&mem, Rule::mobile(c, l2, Target::Out, rhs));
            let rhs = vec![b.to(&primed(li, 3), Target::Out)];
            b.push(&mem, Rule::non_coop(l2, rhs));
        }
    }

    let l0 = b.s(m.initial());
    let skin = MembraneNode::new(SKIN, Multiset::from_symbols([c, l0]).expect("distinct symbols")).with_children(vec![
        MembraneNode::new(home(1), Multiset::new()),
        MembraneNode::new(home(2), Multiset::new()),
    ]);
    let output_order = (3..=m.registers).map(|r| b.s(&reg(r))).collect();
    let guard = subs.first().map(|(l, ..)| format!("g2<{l}>"));
    let system = PSystem {
        alphabet: b.al,
        catalysts: [c].into(),
        initial: Configuration::new(skin),
        rules: b.rules,
        output_region: OutputRegion::Environment,
        output_order,
        variant: Variant { mobile: true, creation: false, targets_labeled: false },
        control: ControlMode::Plain,
    };
    CompilationArtifact {
        system,
        source: m.clone(),
        simulated: m.clone(),
        construction: Construction::Mobile,
        cost: StepCost { per_instruction: 5, tail: 0 },
        guard,
    }
}
