//! Register machines with decrement restricted to registers 1 and 2, and a
//! bounded breadth-first interpreter used as the reference semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::multiset::ParikhVector;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instr {
    Add { reg: usize, next: String, alt: String },
    Sub { reg: usize, dec: String, zero: String },
    Halt,
}

impl Instr {
    pub fn targets(&self) -> Vec<&str> {
        match self {
            Instr::Add { next, alt, .. } => vec![next, alt],
            Instr::Sub { dec, zero, .. } => vec![dec, zero],
            Instr::Halt => vec![],
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Add { reg, next, alt } => write!(f, "ADD({reg}) {next} {alt}"),
            Instr::Sub { reg, dec, zero } => write!(f, "SUB({reg}) {dec} {zero}"),
            Instr::Halt => f.write_str("HALT"),
        }
    }
}

/// `registers` counts all registers; 1 and 2 are working registers and
/// `3..=registers` hold the output. Instructions keep source order; the
/// first one is the initial label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterMachine {
    pub registers: usize,
    pub program: Vec<(String, Instr)>,
}

impl RegisterMachine {
    pub fn new(registers: usize, program: Vec<(&str, Instr)>) -> Self {
        Self { registers, program: program.into_iter().map(|(l, i)| (l.to_string(), i)).collect() }
    }

    pub fn initial(&self) -> &str {
        &self.program[0].0
    }

    /// The label of the (first) HALT instruction.
    pub fn halt(&self) -> &str {
        self.program
            .iter()
            .find(|(_, i)| *i == Instr::Halt)
            .map(|(l, _)| l.as_str())
            .unwrap_or("")
    }

    pub fn get(&self, label: &str) -> Option<&Instr> {
        self.program.iter().find(|(l, _)| l == label).map(|(_, i)| i)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.program.iter().map(|(l, _)| l.as_str())
    }

    pub fn outputs(&self) -> usize {
        self.registers.saturating_sub(2)
    }

    /// Fresh label based on `base` that does not occur in the program.
    pub fn fresh_label(&self, base: &str) -> String {
        let mut i = 0;
        loop {
            let cand = format!("{base}{i}");
            if self.get(&cand).is_none() {
                return cand;
            }
            i += 1;
        }
    }

    pub fn adds(&self) -> impl Iterator<Item = (&str, usize, &str, &str)> {
        self.program.iter().filter_map(|(l, i)| match i {
            Instr::Add { reg, next, alt } => Some((l.as_str(), *reg, next.as_str(), alt.as_str())),
            _ => None,
        })
    }

    pub fn subs(&self) -> impl Iterator<Item = (&str, usize, &str, &str)> {
        self.program.iter().filter_map(|(l, i)| match i {
            Instr::Sub { reg, dec, zero } => Some((l.as_str(), *reg, dec.as_str(), zero.as_str())),
            _ => None,
        })
    }
}

impl fmt::Display for RegisterMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "registers {}", self.registers)?;
        for (l, i) in &self.program {
            writeln!(f, "{l}: {i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmViolation {
    pub label: Option<String>,
    pub message: String,
}

impl fmt::Display for RmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(l) => write!(f, "{l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Static checks: unique labels, exactly one HALT, no dangling jumps,
/// registers in range, decrements only on registers 1 and 2.
pub fn rm_validate(m: &RegisterMachine) -> Vec<RmViolation> {
    let mut out = Vec::new();
    let mut v = |label: Option<&str>, message: String| {
        out.push(RmViolation { label: label.map(str::to_string), message })
    };
    if m.program.is_empty() {
        v(None, "empty program".into());
        return out;
    }
    if m.registers < 3 {
        v(None, format!("need at least 3 registers, got {}", m.registers));
    }
    let mut seen = BTreeSet::new();
    for (l, _) in &m.program {
        if !seen.insert(l.as_str()) {
            v(Some(l), "duplicate label".into());
        }
    }
    let halts = m.program.iter().filter(|(_, i)| *i == Instr::Halt).count();
    if halts != 1 {
        v(None, format!("expected exactly one HALT, found {halts}"));
    }
    for (l, i) in &m.program {
        match i {
            Instr::Add { reg, .. } if *reg == 0 || *reg > m.registers => {
                v(Some(l), format!("register {reg} out of range 1..={}", m.registers))
            }
            Instr::Sub { reg, .. } if *reg != 1 && *reg != 2 => {
                v(Some(l), format!("SUB on register {reg}; only registers 1 and 2 may be decremented"))
            }
            _ => {}
        }
        for t in i.targets() {
            if !seen.contains(t) {
                v(Some(l), format!("jump to undefined label {t}"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RmState {
    pub label: String,
    pub regs: Vec<u64>,
}

impl RmState {
    pub fn start(m: &RegisterMachine) -> Self {
        Self { label: m.initial().to_string(), regs: vec![0; m.registers] }
    }

    pub fn output(&self) -> ParikhVector {
        ParikhVector(self.regs.get(2..).unwrap_or(&[]).to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RmError {
    #[error("state at {0} has halted")]
    Halted(String),
    #[error("undefined label {0}")]
    UndefinedLabel(String),
}

/// Successor states of `s`.
pub fn rm_step(m: &RegisterMachine, s: &RmState) -> Result<Vec<RmState>, RmError> {
    let instr = m.get(&s.label).ok_or_else(|| RmError::UndefinedLabel(s.label.clone()))?;
    Ok(match instr {
        Instr::Halt => return Err(RmError::Halted(s.label.clone())),
        Instr::Add { reg, next, alt } => {
            let mut regs = s.regs.clone();
            regs[reg - 1] += 1;
            let mut out = vec![RmState { label: next.clone(), regs: regs.clone() }];
            if alt != next {
                out.push(RmState { label: alt.clone(), regs });
            }
            out
        }
        Instr::Sub { reg, dec, zero } => {
            let mut regs = s.regs.clone();
            if regs[reg - 1] > 0 {
                regs[reg - 1] -= 1;
                vec![RmState { label: dec.clone(), regs }]
            } else {
                vec![RmState { label: zero.clone(), regs }]
            }
        }
    })
}

#[derive(Debug, Clone, Default)]
pub struct RmReport {
    /// Every (output, length) pair of a halting computation within the bound.
    pub halting: BTreeSet<(ParikhVector, usize)>,
    /// One label trace per output vector, of minimal length.
    pub witnesses: BTreeMap<ParikhVector, Vec<String>>,
    /// Halting states whose working registers were not empty.
    pub violations: Vec<RmState>,
    pub truncated: bool,
}

impl RmReport {
    pub fn outputs(&self) -> BTreeSet<ParikhVector> {
        self.halting.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn min_length(&self, v: &ParikhVector) -> Option<usize> {
        self.halting.iter().filter(|(w, _)| w == v).map(|(_, n)| *n).min()
    }
}

/// Level-by-level exploration from the empty-register start state for at
/// most `max_steps` instructions. States are deduplicated within a level
/// only, so every halting length is recorded.
pub fn rm_explore(m: &RegisterMachine, max_steps: usize) -> RmReport {
    let mut report = RmReport::default();
    let halt = m.halt().to_string();
    // Each level stores states with the index of their parent in the
    // previous level.
    let mut levels: Vec<Vec<(RmState, usize)>> = vec![vec![(RmState::start(m), 0)]];
    for step in 0..=max_steps {
        let mut next: Vec<(RmState, usize)> = Vec::new();
        let mut index: HashMap<RmState, usize> = HashMap::new();
        for (i, (s, _)) in levels[step].iter().enumerate() {
            if s.label == halt {
                if s.regs[0] != 0 || s.regs[1] != 0 {
                    report.violations.push(s.clone());
                    continue;
                }
                let out = s.output();
                if !report.witnesses.contains_key(&out) {
                    report.witnesses.insert(out.clone(), trace_back(&levels, step, i));
                }
                report.halting.insert((out, step));
                continue;
            }
            if step == max_steps {
                report.truncated = true;
                continue;
            }
            let Ok(succ) = rm_step(m, s) else { continue };
            for t in succ {
                if !index.contains_key(&t) {
                    index.insert(t.clone(), next.len());
                    next.push((t, i));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    report
}

fn trace_back(levels: &[Vec<(RmState, usize)>], step: usize, mut i: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(step + 1);
    for lvl in (0..=step).rev() {
        let (s, parent) = &levels[lvl][i];
        out.push(s.label.clone());
        i = *parent;
    }
    out.reverse();
    out
}

/// Machines used throughout the tests and by the CLI.
pub mod bundled {
    use super::{Instr, RegisterMachine};

    fn add(reg: usize, next: &str, alt: &str) -> Instr {
        Instr::Add { reg, next: next.into(), alt: alt.into() }
    }

    fn sub(reg: usize, dec: &str, zero: &str) -> Instr {
        Instr::Sub { reg, dec: dec.into(), zero: zero.into() }
    }

    /// Emits the single vector (1).
    pub fn add1() -> RegisterMachine {
        RegisterMachine::new(3, vec![("l0", add(3, "lh", "lh")), ("lh", Instr::Halt)])
    }

    /// Emits every positive even number.
    pub fn even() -> RegisterMachine {
        RegisterMachine::new(3, vec![("l0", add(3, "l1", "l1")), ("l1", add(3, "l0", "lh")), ("lh", Instr::Halt)])
    }

    /// Exercises both branches of SUB on register 1; emits (1,0).
    pub fn decr() -> RegisterMachine {
        RegisterMachine::new(
            4,
            vec![
                ("l0", add(1, "l1", "l1")),
                ("l1", sub(1, "l2", "l3")),
                ("l2", add(3, "l3", "l3")),
                ("l3", sub(1, "l4", "lh")),
                ("l4", add(4, "lh", "lh")),
                ("lh", Instr::Halt),
            ],
        )
    }

    /// Branches nondeterministically; emits (1,1) and (2,0). The second
    /// branch passes through register 2.
    pub fn two_out() -> RegisterMachine {
        RegisterMachine::new(
            4,
            vec![
                ("l0", add(3, "l1", "l2")),
                ("l1", add(4, "l3", "l3")),
                ("l2", add(2, "l3", "l3")),
                ("l3", sub(2, "l4", "lh")),
                ("l4", add(3, "lh", "lh")),
                ("lh", Instr::Halt),
            ],
        )
    }

    pub fn all() -> Vec<(&'static str, RegisterMachine)> {
        vec![("add1", add1()), ("even", even()), ("decr", decr()), ("two_out", two_out())]
    }

    pub fn by_name(name: &str) -> Option<RegisterMachine> {
        all().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
    }
}

#[cfg(test)]
mod tests {
    use super::bundled::*;
    use super::*;

    fn pv(v: &[u64]) -> ParikhVector {
        ParikhVector(v.to_vec())
    }

    /// Depth-first enumeration of every computation path, independent of
    /// the level-wise exploration.
    fn paths(m: &RegisterMachine, s: RmState, depth: usize, max: usize, out: &mut BTreeSet<(ParikhVector, usize)>) {
        if s.label == m.halt() {
            out.insert((s.output(), depth));
            return;
        }
        if depth == max {
            return;
        }
        for t in rm_step(m, &s).unwrap() {
            paths(m, t, depth + 1, max, out);
        }
    }

    #[test]
    fn validation() {
        assert!(rm_validate(&add1()).is_empty());
        let mut m = add1();
        m.program[0].1 = Instr::Sub { reg: 3, dec: "lh".into(), zero: "lh".into() };
        assert!(rm_validate(&m)[0].message.contains("SUB on register 3"));
        let mut m = add1();
        m.program[0].1 = Instr::Add { reg: 3, next: "nowhere".into(), alt: "lh".into() };
        assert!(rm_validate(&m)[0].message.contains("undefined label nowhere"));
    }

    #[test]
    fn step_semantics() {
        let m = RegisterMachine::new(
            3,
            vec![
                ("a", Instr::Add { reg: 3, next: "l1".into(), alt: "l2".into() }),
                ("s", Instr::Sub { reg: 1, dec: "l1".into(), zero: "l2".into() }),
                ("l1", Instr::Halt),
                ("l2", Instr::Halt),
            ],
        );
        let st = |l: &str, r: [u64; 3]| RmState { label: l.into(), regs: r.to_vec() };
        assert_eq!(rm_step(&m, &st("a", [0, 0, 0])).unwrap(), vec![st("l1", [0, 0, 1]), st("l2", [0, 0, 1])]);
        assert_eq!(rm_step(&m, &st("s", [2, 0, 0])).unwrap(), vec![st("l1", [1, 0, 0])]);
        assert_eq!(rm_step(&m, &st("s", [0, 5, 0])).unwrap(), vec![st("l2", [0, 5, 0])]);
        assert_eq!(rm_step(&m, &st("l1", [0, 0, 0])), Err(RmError::Halted("l1".into())));
    }

    #[test]
    fn bundled_outputs() {
        assert_eq!(rm_explore(&add1(), 50).outputs(), [pv(&[1])].into());
        assert!(!rm_explore(&add1(), 50).truncated);
        assert_eq!(rm_explore(&decr(), 50).outputs(), [pv(&[1, 0])].into());
        assert_eq!(rm_explore(&two_out(), 50).outputs(), [pv(&[1, 1]), pv(&[2, 0])].into());
        let even = rm_explore(&even(), 20);
        assert!(even.truncated);
        let want: BTreeSet<ParikhVector> = (1..=10).map(|k| pv(&[2 * k])).collect();
        assert_eq!(even.outputs(), want);
    }

    #[test]
    fn exploration_matches_path_enumeration() {
        for (name, m) in all() {
            let mut want = BTreeSet::new();
            paths(&m, RmState::start(&m), 0, 14, &mut want);
            assert_eq!(rm_explore(&m, 14).halting, want, "{name}");
        }
    }

    #[test]
    fn witnesses_replay() {
        for (_, m) in all() {
            let r = rm_explore(&m, 16);
            for (v, trace) in &r.witnesses {
                let mut s = RmState::start(&m);
                for next in &trace[1..] {
                    s = rm_step(&m, &s).unwrap().into_iter().find(|t| &t.label == next).unwrap();
                }
                assert_eq!(&s.output(), v);
                assert_eq!(trace.len() - 1, r.min_length(v).unwrap());
            }
        }
    }

    #[test]
    fn monotone_in_bound() {
        for (_, m) in all() {
            let mut prev = BTreeSet::new();
            for b in 0..16 {
                let cur = rm_explore(&m, b).outputs();
                assert!(prev.is_subset(&cur));
                prev = cur;
            }
        }
    }
}
