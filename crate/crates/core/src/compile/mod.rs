//! Register machine → P system translations.
//!
//! Every compiler emits one catalyst `c`, sends output registers `a_3…` to
//! the environment, and uses the trap object `#` to invalidate wrong
//! nondeterministic guesses.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::machine::{rm_validate, Instr, RegisterMachine, RmViolation};
use crate::model::{PSystem, RhsObject, Rule, Target};
use crate::multiset::{Alphabet, Symbol};
use crate::text::psys::render_system;

mod label_selection;
mod mobile;
mod creation;
mod target_selection;
mod time_varying;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Construction {
    Ls,
    Ts,
    Tv,
    Mcre,
    Mobile,
}

impl Construction {
    pub const ALL: [Construction; 5] =
        [Construction::Ls, Construction::Ts, Construction::Tv, Construction::Mcre, Construction::Mobile];

    pub fn tag(self) -> &'static str {
        match self {
            Construction::Ls => "ls",
            Construction::Ts => "ts",
            Construction::Tv => "tv",
            Construction::Mcre => "mcre",
            Construction::Mobile => "mobile",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Construction::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| format!("unknown construction {s} (expected ls, ts, tv, mcre or mobile)"))
    }
}

/// Upper bound on the P system steps needed for a machine computation of
/// `n` instructions: `per_instruction * n + tail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepCost {
    pub per_instruction: usize,
    pub tail: usize,
}

impl StepCost {
    pub fn steps_for(&self, instructions: usize) -> usize {
        self.per_instruction * instructions + self.tail
    }
}

#[derive(Debug, Clone)]
pub struct CompilationArtifact {
    pub system: PSystem,
    pub source: RegisterMachine,
    /// The machine actually simulated, after the construction's
    /// normal-form rewriting. Equal to `source` when no rewrite applied.
    pub simulated: RegisterMachine,
    pub construction: Construction,
    pub cost: StepCost,
    /// Label of a trap-introducing rule whose removal should break the
    /// simulation.
    pub guard: Option<String>,
}

impl CompilationArtifact {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec![
            format!("construction: {}", self.construction),
            format!(
                "steps per instruction: {} (+{} at halt)",
                self.cost.per_instruction, self.cost.tail
            ),
            "source machine:".to_string(),
        ];
        h.extend(self.source.to_string().lines().map(|l| format!("  {l}")));
        if self.simulated != self.source {
            h.push("after normal form:".into());
            h.extend(self.simulated.to_string().lines().map(|l| format!("  {l}")));
        }
        h
    }

    pub fn render(&self) -> String {
        render_system(&self.system, &self.header())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("invalid machine: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidMachine(Vec<RmViolation>),
    #[error("label {0} cannot be used: labels must match [A-Za-z][A-Za-z0-9_]* and avoid c, d, h and a_<n>")]
    BadLabel(String),
}

fn label_ok(l: &str) -> bool {
    let mut chars = l.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
    let rest_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    let reserved = matches!(l, "c" | "d" | "h")
        || l.strip_prefix("a_").is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()));
    first_ok && rest_ok && !reserved
}

pub fn compile(m: &RegisterMachine, construction: Construction) -> Result<CompilationArtifact, CompileError> {
    let v = rm_validate(m);
    if !v.is_empty() {
        return Err(CompileError::InvalidMachine(v));
    }
    if let Some(bad) = m.labels().find(|l| !label_ok(l)) {
        return Err(CompileError::BadLabel(bad.to_string()));
    }
    Ok(match construction {
        Construction::Ls => label_selection::compile(m),
        Construction::Ts => target_selection::compile(m),
        Construction::Tv => time_varying::compile(m),
        Construction::Mcre => creation::compile(m),
        Construction::Mobile => mobile::compile(m),
    })
}

pub fn compile_ls(m: &RegisterMachine) -> Result<CompilationArtifact, CompileError> {
    compile(m, Construction::Ls)
}

pub fn compile_ts(m: &RegisterMachine) -> Result<CompilationArtifact, CompileError> {
    compile(m, Construction::Ts)
}

pub fn compile_tv(m: &RegisterMachine) -> Result<CompilationArtifact, CompileError> {
    compile(m, Construction::Tv)
}

pub fn compile_mcre(m: &RegisterMachine) -> Result<CompilationArtifact, CompileError> {
    compile(m, Construction::Mcre)
}

pub fn compile_mobile(m: &RegisterMachine) -> Result<CompilationArtifact, CompileError> {
    compile(m, Construction::Mobile)
}

/// Decorated symbol names.
pub mod names {
    pub fn reg(r: usize) -> String {
        format!("a_{r}")
    }
    pub fn reg_primed(r: usize) -> String {
        format!("a_{r}'")
    }
    pub fn primed(l: &str, n: usize) -> String {
        format!("{l}{}", "'".repeat(n))
    }
    pub fn tilde(l: &str) -> String {
        format!("{l}~")
    }
    pub fn hat(l: &str) -> String {
        format!("{l}^")
    }
    pub fn minus(l: &str) -> String {
        format!("{l}^-")
    }
    pub fn zero(l: &str) -> String {
        format!("{l}^0")
    }
    pub fn bar_minus(l: &str) -> String {
        format!("{l}|-")
    }
    pub fn bar_zero(l: &str) -> String {
        format!("{l}|0")
    }
    pub const TRAP: &str = "#";
}

/// Accumulates interned symbols and per-region rules; identical rules are
/// kept once.
#[derive(Default)]
pub(crate) struct Builder {
    pub al: Alphabet,
    pub rules: BTreeMap<String, Vec<Rule>>,
}

impl Builder {
    pub fn s(&mut self, name: &str) -> Symbol {
        self.al.intern(name)
    }

    pub fn here(&mut self, name: &str) -> RhsObject {
        RhsObject::here(self.s(name))
    }

    pub fn to(&mut self, name: &str, t: Target) -> RhsObject {
        RhsObject::to(self.s(name), t)
    }

    pub fn here_sym(&self, s: Symbol) -> RhsObject {
        RhsObject::here(s)
    }

    pub fn to_sym(&self, s: Symbol, t: Target) -> RhsObject {
        RhsObject::to(s, t)
    }

    /// The object for register `r`: kept here for working registers, sent
    /// out for output registers.
    pub fn reg_obj(&mut self, r: usize, working: Target) -> RhsObject {
        let t = if r >= 3 { Target::Out } else { working };
        self.to(&names::reg(r), t)
    }

    pub fn push(&mut self, region: &str, rule: Rule) {
        let list = self.rules.entry(region.to_string()).or_default();
        if !list.contains(&rule) {
            list.push(rule);
        }
    }
}

/// Appends an instruction under a fresh label based on `base`.
fn append(m: &mut RegisterMachine, base: &str, instr: Instr) -> String {
    let l = m.fresh_label(base);
    m.program.push((l.clone(), instr));
    l
}

fn retarget(instr: &mut Instr, f: &mut dyn FnMut(&str, bool) -> Option<String>) {
    match instr {
        Instr::Add { next, alt, .. } => {
            if let Some(n) = f(next, false) {
                *next = n;
            }
            if let Some(n) = f(alt, false) {
                *alt = n;
            }
        }
        Instr::Sub { dec, zero, .. } => {
            if let Some(n) = f(dec, false) {
                *dec = n;
            }
            if let Some(n) = f(zero, true) {
                *zero = n;
            }
        }
        Instr::Halt => {}
    }
}

/// A test of register `r` that reaches `target` when it is empty and loops
/// forever otherwise. Returns the label of the test.
fn zero_gate(m: &mut RegisterMachine, r: usize, target: &str) -> String {
    let lp = m.fresh_label("lpre");
    let lo = m.fresh_label(&format!("{lp}_loop"));
    m.program.push((lp.clone(), Instr::Sub { reg: r, dec: lo.clone(), zero: target.to_string() }));
    m.program.push((lo.clone(), Instr::Sub { reg: r, dec: lo.clone(), zero: lo.clone() }));
    lp
}

/// No decrement branch jumps to the halt label: such a branch is routed
/// through a zero test of the same register. Halting computations keep
/// their results since working registers are empty at halt.
pub fn halt_not_after_decrement(m: &RegisterMachine) -> RegisterMachine {
    let mut out = m.clone();
    let halt = m.halt().to_string();
    let mut gates: BTreeMap<usize, String> = BTreeMap::new();
    for i in 0..m.program.len() {
        let Instr::Sub { reg, dec, .. } = &m.program[i].1 else { continue };
        if *dec != halt {
            continue;
        }
        let reg = *reg;
        let gate = match gates.get(&reg) {
            Some(g) => g.clone(),
            None => {
                let g = zero_gate(&mut out, reg, &halt);
                gates.insert(reg, g.clone());
                g
            }
        };
        if let Instr::Sub { dec, .. } = &mut out.program[i].1 {
            *dec = gate;
        }
    }
    out
}

/// The halt label is reached only by the zero branch of a SUB on
/// register 2.
pub fn halt_only_via_zero_test_on_2(m: &RegisterMachine) -> RegisterMachine {
    let mut out = m.clone();
    let halt = m.halt().to_string();
    let mut gate: Option<String> = None;
    for i in 0..m.program.len() {
        let conforming_zero = matches!(&m.program[i].1, Instr::Sub { reg: 2, .. });
        let mut instr = out.program[i].1.clone();
        let mut needs = false;
        retarget(&mut instr, &mut |t, is_zero| {
            (t == halt && !(is_zero && conforming_zero)).then(|| {
                needs = true;
                String::new()
            })
        });
        if !needs {
            continue;
        }
        let g = match &gate {
            Some(g) => g.clone(),
            None => {
                let g = zero_gate(&mut out, 2, &halt);
                gate = Some(g.clone());
                g
            }
        };
        retarget(&mut out.program[i].1, &mut |t, is_zero| {
            (t == halt && !(is_zero && conforming_zero)).then(|| g.clone())
        });
    }
    out
}

/// No SUB on register `r` has its zero branch jump straight to another SUB
/// on register `r`: such a branch passes through an increment and
/// decrement of `r` first.
pub fn pad_zero_branches(m: &RegisterMachine) -> RegisterMachine {
    let mut out = m.clone();
    let mut pads: BTreeMap<String, String> = BTreeMap::new();
    for i in 0..m.program.len() {
        let Instr::Sub { reg, zero, .. } = &m.program[i].1 else { continue };
        let same = matches!(m.get(zero), Some(Instr::Sub { reg: r2, .. }) if r2 == reg);
        if !same {
            continue;
        }
        let reg = *reg;
        let key = format!("{reg}:{zero}");
        let pad = match pads.get(&key) {
            Some(p) => p.clone(),
            None => {
                let second = append(&mut out, "lpad", Instr::Sub { reg, dec: zero.clone(), zero: zero.clone() });
                let first = append(&mut out, "lpad", Instr::Add { reg, next: second.clone(), alt: second });
                pads.insert(key, first.clone());
                first
            }
        };
        if let Instr::Sub { zero, .. } = &mut out.program[i].1 {
            *zero = pad;
        }
    }
    out
}
