//! Properties over randomly generated register machines.

use proptest::prelude::*;

use pcat_core::compare::compare;
use pcat_core::compile::{compile, Construction};
use pcat_core::engine::{apply_step, enumerate_step_choices};
use pcat_core::explorer::{sample_run, Bounds};
use pcat_core::machine::{rm_explore, Instr, RegisterMachine};
use pcat_core::model::validate_system;

fn machine() -> impl Strategy<Value = RegisterMachine> {
    (1usize..=5).prop_flat_map(|n| {
        let instr = (any::<bool>(), 1usize..=4, 0..=n, 0..=n);
        prop::collection::vec(instr, n).prop_map(move |specs| {
            let label = |i: usize| if i == n { "lh".to_string() } else { format!("l{i}") };
            let mut program: Vec<(String, Instr)> = specs
                .into_iter()
                .enumerate()
                .map(|(i, (add, r, a, b))| {
                    let instr = if add || r > 2 {
                        Instr::Add { reg: r, next: label(a), alt: label(b) }
                    } else {
                        Instr::Sub { reg: r, dec: label(a), zero: label(b) }
                    };
                    (label(i), instr)
                })
                .collect();
            program.push(("lh".into(), Instr::Halt));
            RegisterMachine { registers: 4, program }
        })
    })
}

/// Machines that respect the halting convention within the bound.
fn well_behaved(m: &RegisterMachine, steps: usize) -> bool {
    rm_explore(m, steps).violations.is_empty()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compiled_systems_validate(m in machine()) {
        for c in Construction::ALL {
            let art = compile(&m, c).unwrap();
            prop_assert!(validate_system(&art.system).is_empty(), "{c}: {:?}", validate_system(&art.system));
        }
    }

    #[test]
    fn compiled_systems_agree_with_the_machine(m in machine()) {
        prop_assume!(well_behaved(&m, 40));
        for c in Construction::ALL {
            let art = compile(&m, c).unwrap();
            let b = Bounds { max_configs: 20_000, ..Bounds::steps(40) };
            let cmp = compare(&art, &b).unwrap();
            prop_assert!(cmp.pass, "{c}\n{m}\n{}", cmp.to_text());
        }
    }

    #[test]
    fn the_catalyst_is_conserved(m in machine(), seed in any::<u64>()) {
        for c in Construction::ALL {
            let sys = compile(&m, c).unwrap().system;
            let run = sample_run(&sys, &Bounds::steps(40), seed).unwrap();
            let mut cfg = sys.initial.clone();
            for (step, &i) in run.choices.iter().enumerate() {
                let choices = enumerate_step_choices(&sys, &cfg, step);
                cfg = apply_step(&sys, &cfg, &choices[i]).unwrap();
                prop_assert_eq!(sys.catalyst_total(&cfg), 1, "{} step {}", c, step);
            }
        }
    }
}
