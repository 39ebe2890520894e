//! Seven membranes; each region fires the rules of one target per step.
//!
//! The skin routes the current label together with the working registers
//! into one inner membrane, which either performs the instruction or traps
//! when the label does not belong there. Membranes: 1 skin, 2 erases one
//! marked register object with the catalyst, 3 and 4 zero-test registers 1
//! and 2, 5 and 6 mark register 1 and 2 objects, 7 increments.

use super::names::{primed, reg, reg_primed, TRAP};
use super::{Builder, CompilationArtifact, Construction, StepCost};
use crate::engine::ControlMode;
use crate::machine::RegisterMachine;
use crate::model::{Configuration, MembraneNode, OutputRegion, PSystem, Rule, Target, Variant};
use crate::multiset::Multiset;

const SKIN: &str = "1";
const ERASE: &str = "2";
const PLUS: &str = "7";

fn zero_membrane(r: usize) -> &'static str {
    if r == 1 { "3" } else { "4" }
}

fn mark_membrane(r: usize) -> &'static str {
    if r == 1 { "5" } else { "6" }
}

pub(super) fn compile(m: &RegisterMachine) -> CompilationArtifact {
    let mut b = Builder::default();
    let c = b.s("c");
    let d = b.s("d");
    b.s(TRAP);
    for r in 1..=m.registers {
        b.s(&reg(r));
    }
    let a1p = b.s(&reg_primed(1));
    let a2p = b.s(&reg_primed(2));

    let plus: Vec<String> = m.adds().map(|(l, ..)| l.to_string()).collect();
    let minus_r = |r: usize| -> Vec<String> { m.subs().filter(|s| s.1 == r).map(|s| s.0.to_string()).collect() };
    let minus: Vec<String> = m.subs().map(|s| s.0.to_string()).collect();
    let minus1: Vec<String> = minus.iter().map(|l| primed(l, 1)).collect();
    let minus2: Vec<String> = minus.iter().map(|l| primed(l, 2)).collect();
    let all: Vec<String> = plus.iter().chain(&minus).chain(&minus1).chain(&minus2).cloned().collect();
    for l in m.labels() {
        b.s(l);
    }
    for l in &all {
        b.s(l);
    }

    // l → (#, out) for every decorated label outside `keep`.
    let guards = |b: &mut Builder, region: &str, keep: &[String], tag: &str| {
        for l in all.iter().filter(|l| !keep.contains(l)) {
            let s = b.s(l);
            let rhs = vec![b.to(TRAP, Target::Out)];
            let mut rule = Rule::non_coop(s, rhs);
            if !tag.is_empty() {
                rule = rule.labeled(format!("{tag}<{l}>"));
            }
            b.push(region, rule);
        }
    };
    let pass_out = |b: &mut Builder, region: &str, names: &[String]| {
        for n in names {
            let s = b.s(n);
            let rhs = vec![b.to(n, Target::Out)];
            b.push(region, Rule::non_coop(s, rhs));
        }
    };

    // Skin: route everything but output registers inward.
    let inward: Vec<String> = plus
        .iter()
        .chain(&minus)
        .cloned()
        .chain([reg(1), reg(2), reg_primed(1), reg_primed(2), TRAP.to_string()])
        .collect();
    for x in &inward {
        let s = b.s(x);
        let rhs = vec![b.to(x, Target::In)];
        b.push(SKIN, Rule::non_coop(s, rhs));
    }
    for x in &minus1 {
        let s = b.s(x);
        let rhs = vec![b.to(x, Target::In), b.to("d", Target::In)];
        b.push(SKIN, Rule::non_coop(s, rhs));
    }
    for r in 3..=m.registers {
        let s = b.s(&reg(r));
        let rhs = vec![b.to(&reg(r), Target::Out)];
        b.push(SKIN, Rule::non_coop(s, rhs));
    }

    // Increment membrane.
    for (li, r, next, alt) in m.adds() {
        let l = b.s(li);
        for t in [next, alt] {
            let rhs = vec![b.to(t, Target::Out), b.to(&reg(r), Target::Out)];
            b.push(PLUS, Rule::non_coop(l, rhs));
        }
    }
    guards(&mut b, PLUS, &plus, "g+");
    pass_out(&mut b, PLUS, &[reg(1), reg(2), TRAP.to_string()]);

    for r in [1usize, 2] {
        let own = minus_r(r);
        let other = reg(3 - r);
        // Zero test.
        let z = zero_membrane(r);
        for (li, rr, _, zero) in m.subs() {
            if rr != r {
                continue;
            }
            let l = b.s(li);
            let rhs = vec![b.to(zero, Target::Out)];
            b.push(z, Rule::non_coop(l, rhs));
        }
        let a = b.s(&reg(r));
        let rhs = vec![b.to(TRAP, Target::Out)];
        b.push(z, Rule::non_coop(a, rhs));
        guards(&mut b, z, &own, "");
        pass_out(&mut b, z, &[other.clone(), TRAP.to_string()]);

        // Marking.
        let mk = mark_membrane(r);
        for li in &own {
            let l = b.s(li);
            let rhs = vec![b.to(&primed(li, 1), Target::Out)];
            b.push(mk, Rule::non_coop(l, rhs));
        }
        let rhs = vec![b.to(&reg_primed(r), Target::Out)];
        b.push(mk, Rule::non_coop(a, rhs));
        guards(&mut b, mk, &own, "");
        pass_out(&mut b, mk, &[other, TRAP.to_string()]);
    }

    // Erasing membrane.
    for (li, r, dec, _) in m.subs() {
        let (p1, p2) = (b.s(&primed(li, 1)), b.s(&primed(li, 2)));
        let ap = if r == 1 { a1p } else { a2p };
        let rhs = vec![b.here(&primed(li, 2))];
        b.push(ERASE, Rule::non_coop(p1, rhs));
        b.push(ERASE, Rule::catalytic(c, ap, vec![]));
        let rhs = vec![b.here(TRAP)];
        b.push(ERASE, Rule::non_coop(p2, rhs));
        let rhs = vec![b.to(dec, Target::Out)];
        b.push(ERASE, Rule::non_coop(p2, rhs));
    }
    let rhs = vec![b.here(TRAP)];
    b.push(ERASE, Rule::catalytic(c, d, rhs));
    b.push(ERASE, Rule::erase(d, Target::Out));
    for (r, ap) in [(1, a1p), (2, a2p)] {
        let rhs = vec![b.to(&reg(r), Target::Out)];
        b.push(ERASE, Rule::non_coop(ap, rhs));
    }
    guards(&mut b, ERASE, &minus2, "");
    pass_out(&mut b, ERASE, &[reg(1), reg(2), TRAP.to_string()]);

    let l0 = b.s(m.initial());
    let empty = |l: &str| MembraneNode::new(l, Multiset::new());
    let skin = MembraneNode::new(SKIN, Multiset::singleton(l0)).with_children(vec![
        MembraneNode::new(ERASE, Multiset::singleton(c)),
        empty("3"),
        empty("4"),
        empty("5"),
        empty("6"),
        empty(PLUS),
    ]);
    let output_order = (3..=m.registers).map(|r| b.s(&reg(r))).collect();
    let guard = m.subs().next().map(|(l, ..)| format!("g+<{l}>"));
    let system = PSystem {
        alphabet: b.al,
        catalysts: [c].into(),
        initial: Configuration::new(skin),
        rules: b.rules,
        output_region: OutputRegion::Environment,
        output_order,
        variant: Variant::default(),
        control: ControlMode::TargetSelection,
    };
    CompilationArtifact {
        system,
        source: m.clone(),
        simulated: m.clone(),
        construction: Construction::Ts,
        cost: StepCost { per_instruction: 5, tail: 1 },
        guard,
    }
}

#[cfg(test)]
mod tests {
    use crate::compile::compile_ts;
    use crate::engine::{apply_step, enumerate_step_choices};
    use crate::machine::bundled;
    use crate::model::{validate_system, Configuration, MembraneNode};
    use crate::multiset::Multiset;
    use crate::text::psys::render_rule;

    #[test]
    fn structure_and_guards() {
        let a = compile_ts(&bundled::decr()).unwrap();
        let sys = &a.system;
        assert!(validate_system(sys).is_empty(), "{:?}", validate_system(sys));
        assert_eq!(sys.initial.membrane_count(), 7);
        assert_eq!(sys.canonicalize(&sys.initial), "env {-} [1 l0 [2 c] [3 -] [4 -] [5 -] [6 -] [7 -]]");
        let plus: Vec<String> = sys.rules_for("7").iter().map(|r| render_rule(&sys.alphabet, r)).collect();
        assert!(plus.contains(&"g+<l1>: l1 -> (#,out)".to_string()), "{plus:?}");
        assert!(plus.contains(&"l0 -> (l1,out) (a_1,out)".to_string()), "{plus:?}");
        let erase: Vec<String> = sys.rules_for("2").iter().map(|r| render_rule(&sys.alphabet, r)).collect();
        for want in ["l1' -> l1''", "c a_1' -> c", "l1'' -> (l2,out)", "d -> (.,out)", "a_2 -> (a_2,out)"] {
            assert!(erase.contains(&want.to_string()), "{want} not in {erase:?}");
        }
    }

    #[test]
    fn wrong_membrane_traps() {
        let a = compile_ts(&bundled::decr()).unwrap();
        let sys = &a.system;
        // SUB label l1 arriving in the increment membrane.
        let s = |n: &str| sys.sym(n).unwrap();
        let mut cfg = sys.initial.clone();
        cfg.skin.contents = Multiset::new();
        cfg.skin.children[5].contents = Multiset::singleton(s("l1"));
        let choices = enumerate_step_choices(sys, &cfg, 0);
        assert_eq!(choices.len(), 1);
        let next = apply_step(sys, &cfg, &choices[0]).unwrap();
        assert_eq!(next.skin.contents.get(s("#")), 1);
    }

    #[test]
    fn decrement_order_is_forced() {
        let a = compile_ts(&bundled::decr()).unwrap();
        let sys = &a.system;
        let s = |n: &str| sys.sym(n).unwrap();
        let inner = Multiset::from_symbols([s("c"), s("l1'"), s("d"), s("a_1'")]).unwrap();
        let mut cfg = Configuration::new(MembraneNode::new("1", Multiset::new()));
        cfg.skin.children = sys.initial.skin.children.clone();
        cfg.skin.children[0].contents = inner;
        for ch in enumerate_step_choices(sys, &cfg, 0) {
            let next = apply_step(sys, &cfg, &ch).unwrap();
            let out_first = ch.instances.iter().any(|i| sys.rules_for("2")[i.rule].sends().iter().any(|o| o.target == crate::model::Target::Out));
            if out_first {
                assert!(next.skin.contents.get(s("#")) > 0);
            }
        }
    }
}
