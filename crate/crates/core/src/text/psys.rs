//! P system text format.
//!
//! ```text
//! @objects a_1 a_3 c d l0 lh '#'
//! @catalysts c
//! @membrane 1
//!   @init c d l0
//!   @rule r1: l0 -> lh (a_3,out)
//!   @rule r2: c a_1 -> c
//! @end
//! @output env a_3
//! ```
//!
//! Besides the directives above: `@env` (initial environment), `@region L`
//! … `@end` for rules of membranes that only appear by creation, `@variant`,
//! `@mode plain|label-selection|target-selection|controlled|time-varying
//! [weak]`, `@set NAME: labels…` (label sets, in order) and `@period p`.
//! On a right-hand side `.` is the empty word, `(.,out)` an erasure selected
//! under target `out`, `delta` dissolves, `[ u ]_L` creates a membrane.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{quote, strip_comment, tokens, unquote, ParseError, Token};
use crate::engine::{ControlMode, LabelSet};
use crate::model::{
    Configuration, MembraneNode, OutputRegion, PSystem, RhsObject, Rule, RuleForm, Target, Variant,
};
use crate::multiset::{Alphabet, Multiset, Symbol};

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, column, message: message.into() }
}

struct Open {
    label: String,
    contents: Multiset,
    children: Vec<MembraneNode>,
    /// `@region` blocks hold rules only.
    rules_only: bool,
}

#[derive(Default)]
struct Parser {
    alphabet: Alphabet,
    declared: bool,
    catalysts: BTreeSet<Symbol>,
    stack: Vec<Open>,
    skin: Option<MembraneNode>,
    environment: Multiset,
    rules: BTreeMap<String, Vec<Rule>>,
    output: Option<(OutputRegion, Vec<Symbol>)>,
    variant: Variant,
    mode: Option<(String, bool)>,
    sets: Vec<LabelSet>,
    period: Option<usize>,
}

enum Item {
    Obj(Symbol, Target),
    Erase(Target),
    Empty,
    Delta,
    Create(String, Multiset),
}

impl Parser {
    fn symbol(&self, ln: usize, t: &Token) -> Result<Symbol, ParseError> {
        let name = unquote(t.text);
        self.alphabet
            .get(name)
            .ok_or_else(|| err(ln, t.column, format!("undeclared symbol {name}")))
    }

    fn symbol_named(&self, ln: usize, col: usize, name: &str) -> Result<Symbol, ParseError> {
        let name = unquote(name);
        self.alphabet
            .get(name)
            .ok_or_else(|| err(ln, col, format!("undeclared symbol {name}")))
    }

    fn multiset(&self, ln: usize, toks: &[Token]) -> Result<Multiset, ParseError> {
        let mut m = Multiset::new();
        for t in toks {
            let s = self.symbol(ln, t)?;
            m.insert(s, 1).map_err(|e| err(ln, t.column, e.to_string()))?;
        }
        Ok(m)
    }

    fn current(&mut self, ln: usize, col: usize, what: &str) -> Result<&mut Open, ParseError> {
        self.stack
            .last_mut()
            .ok_or_else(|| err(ln, col, format!("{what} outside a membrane")))
    }

    fn line(&mut self, ln: usize, toks: &[Token]) -> Result<(), ParseError> {
        let head = toks[0];
        let rest = &toks[1..];
        let need_objects = |p: &Parser| {
            if p.declared {
                Ok(())
            } else {
                Err(err(ln, head.column, "@objects must come first"))
            }
        };
        match head.text {
            "@objects" => {
                for t in rest {
                    let name = unquote(t.text);
                    if matches!(name, "." | "delta" | "->" | "[") || name.contains(['(', ')', ',']) {
                        return Err(err(ln, t.column, format!("reserved symbol name {name}")));
                    }
                    self.alphabet.intern(name);
                }
                self.declared = true;
            }
            "@catalysts" => {
                need_objects(self)?;
                for t in rest {
                    let s = self.symbol(ln, t)?;
                    self.catalysts.insert(s);
                }
            }
            "@membrane" | "@region" => {
                need_objects(self)?;
                let [label] = rest else {
                    return Err(err(ln, head.column, format!("{} takes one label", head.text)));
                };
                let rules_only = head.text == "@region";
                if rules_only && !self.stack.is_empty() {
                    return Err(err(ln, head.column, "@region cannot be nested"));
                }
                if !rules_only && self.skin.is_some() && self.stack.is_empty() {
                    return Err(err(ln, head.column, "only one skin membrane"));
                }
                if !rules_only && self.stack.last().is_some_and(|o| o.rules_only) {
                    return Err(err(ln, head.column, "@membrane inside @region"));
                }
                self.stack.push(Open {
                    label: label.text.to_string(),
                    contents: Multiset::new(),
                    children: vec![],
                    rules_only,
                });
            }
            "@end" => {
                let open = self.stack.pop().ok_or_else(|| err(ln, head.column, "unmatched @end"))?;
                if open.rules_only {
                    return Ok(());
                }
                let node = MembraneNode::new(open.label, open.contents).with_children(open.children);
                match self.stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => self.skin = Some(node),
                }
            }
            "@init" => {
                let m = self.multiset(ln, rest)?;
                let open = self.current(ln, head.column, "@init")?;
                if open.rules_only {
                    return Err(err(ln, head.column, "@init inside @region"));
                }
                open.contents.absorb(&m).map_err(|e| err(ln, head.column, e.to_string()))?;
            }
            "@env" => {
                need_objects(self)?;
                let m = self.multiset(ln, rest)?;
                self.environment.absorb(&m).map_err(|e| err(ln, head.column, e.to_string()))?;
            }
            "@rule" => {
                need_objects(self)?;
                let rule = self.rule(ln, head, rest)?;
                let label = self.current(ln, head.column, "@rule")?.label.clone();
                self.rules.entry(label).or_default().push(rule);
            }
            "@output" => {
                need_objects(self)?;
                let Some(region) = rest.first() else {
                    return Err(err(ln, head.column, "@output needs a region"));
                };
                let region = if region.text == "env" {
                    OutputRegion::Environment
                } else {
                    OutputRegion::Membrane(region.text.to_string())
                };
                let syms = rest[1..].iter().map(|t| self.symbol(ln, t)).collect::<Result<_, _>>()?;
                self.output = Some((region, syms));
            }
            "@variant" => {
                for t in rest {
                    let (k, v) = t
                        .text
                        .split_once('=')
                        .ok_or_else(|| err(ln, t.column, "expected key=value"))?;
                    let flag = |v: &str| match v {
                        "true" => Ok(true),
                        "false" => Ok(false),
                        _ => Err(err(ln, t.column, format!("expected true or false, got {v}"))),
                    };
                    match k {
                        "mobile" => self.variant.mobile = flag(v)?,
                        "creation" => self.variant.creation = flag(v)?,
                        "targets" => {
                            self.variant.targets_labeled = match v {
                                "labeled" => true,
                                "plain" => false,
                                _ => return Err(err(ln, t.column, "targets must be labeled or plain")),
                            }
                        }
                        _ => return Err(err(ln, t.column, format!("unknown variant key {k}"))),
                    }
                }
            }
            "@mode" => {
                let Some(m) = rest.first() else {
                    return Err(err(ln, head.column, "@mode needs a mode"));
                };
                let known = ["plain", "label-selection", "target-selection", "controlled", "time-varying"];
                if !known.contains(&m.text) {
                    return Err(err(ln, m.column, format!("unknown mode {}", m.text)));
                }
                let weak = match rest.get(1) {
                    None => false,
                    Some(t) if t.text == "weak" => true,
                    Some(t) if t.text == "strong" => false,
                    Some(t) => return Err(err(ln, t.column, format!("unexpected {}", t.text))),
                };
                self.mode = Some((m.text.to_string(), weak));
            }
            "@set" => {
                let Some(name) = rest.first().and_then(|t| t.text.strip_suffix(':')) else {
                    return Err(err(ln, head.column, "expected `@set NAME: labels`"));
                };
                self.sets.push(LabelSet::new(name, rest[1..].iter().map(|t| t.text)));
            }
            "@period" => {
                let p = rest
                    .first()
                    .and_then(|t| t.text.parse().ok())
                    .ok_or_else(|| err(ln, head.column, "@period needs a number"))?;
                self.period = Some(p);
            }
            other => return Err(err(ln, head.column, format!("unknown directive {other}"))),
        }
        Ok(())
    }

    fn target(ln: usize, col: usize, s: &str) -> Result<Target, ParseError> {
        Ok(match s {
            "here" => Target::Here,
            "out" => Target::Out,
            "in" => Target::In,
            _ => match s.strip_prefix("in_") {
                Some(l) if !l.is_empty() => Target::InLabel(l.to_string()),
                _ => return Err(err(ln, col, format!("unknown target {s}"))),
            },
        })
    }

    fn rhs(&self, ln: usize, toks: &[Token]) -> Result<Vec<Item>, ParseError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < toks.len() {
            let t = toks[i];
            if t.text == "." {
                out.push(Item::Empty);
            } else if t.text == "delta" {
                out.push(Item::Delta);
            } else if t.text == "[" {
                let close = toks[i + 1..]
                    .iter()
                    .position(|x| x.text.starts_with("]_"))
                    .ok_or_else(|| err(ln, t.column, "unclosed ["))?
                    + i
                    + 1;
                let label = &toks[close].text[2..];
                if label.is_empty() {
                    return Err(err(ln, toks[close].column, "missing membrane label"));
                }
                let contents = self.multiset(ln, &toks[i + 1..close])?;
                out.push(Item::Create(label.to_string(), contents));
                i = close;
            } else if let Some(inner) = t.text.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                let (sym, tar) = inner
                    .rsplit_once(',')
                    .ok_or_else(|| err(ln, t.column, format!("expected (symbol,target), got {}", t.text)))?;
                let target = Self::target(ln, t.column, tar)?;
                if sym == "." {
                    out.push(Item::Erase(target));
                } else {
                    out.push(Item::Obj(self.symbol_named(ln, t.column, sym)?, target));
                }
            } else {
                out.push(Item::Obj(self.symbol(ln, &t)?, Target::Here));
            }
            i += 1;
        }
        Ok(out)
    }

    fn rule(&self, ln: usize, head: Token, toks: &[Token]) -> Result<Rule, ParseError> {
        let (label, toks) = match toks.first() {
            Some(t) if t.text.ends_with(':') && t.text.len() > 1 => {
                (Some(t.text[..t.text.len() - 1].to_string()), &toks[1..])
            }
            _ => (None, toks),
        };
        let arrow = toks
            .iter()
            .position(|t| t.text == "->")
            .ok_or_else(|| err(ln, head.column, "rule needs ->"))?;
        let lhs: Vec<Symbol> = toks[..arrow].iter().map(|t| self.symbol(ln, t)).collect::<Result<_, _>>()?;
        let items = self.rhs(ln, &toks[arrow + 1..])?;
        let at = toks.get(arrow).map_or(head.column, |t| t.column);
        let form = match lhs.as_slice() {
            [a] => {
                let mut rhs = Vec::new();
                let mut dissolves = false;
                let mut erase_target = Target::Here;
                let mut empty = false;
                for it in items {
                    match it {
                        Item::Obj(s, t) => rhs.push(RhsObject::to(s, t)),
                        Item::Delta => dissolves = true,
                        Item::Erase(t) => {
                            erase_target = t;
                            empty = true;
                        }
                        Item::Empty => empty = true,
                        Item::Create(..) => return Err(err(ln, at, "membrane creation needs a catalyst")),
                    }
                }
                if empty && !rhs.is_empty() {
                    return Err(err(ln, at, "empty word mixed with objects"));
                }
                if !empty && rhs.is_empty() {
                    return Err(err(ln, at, "empty right-hand side must be written ."));
                }
                RuleForm::NonCoop { lhs: *a, rhs, dissolves, erase_target }
            }
            [c, a] => {
                if !self.catalysts.contains(c) {
                    return Err(err(ln, toks[0].column, format!("{} is not a catalyst", self.alphabet.name(*c))));
                }
                if let [Item::Obj(k, Target::Here), Item::Create(new_label, contents)] = items.as_slice() {
                    if k != c {
                        return Err(err(ln, at, "creation must keep the catalyst"));
                    }
                    RuleForm::CatalyticCreate {
                        catalyst: *c,
                        reactant: *a,
                        new_label: new_label.clone(),
                        contents: contents.clone(),
                    }
                } else {
                    let mut catalyst_target = None;
                    let mut rhs = Vec::new();
                    for it in items {
                        match it {
                            Item::Obj(s, t) if s == *c && catalyst_target.is_none() => catalyst_target = Some(t),
                            Item::Obj(s, t) => rhs.push(RhsObject::to(s, t)),
                            Item::Empty => {}
                            Item::Delta => return Err(err(ln, at, "only non-cooperative rules dissolve")),
                            Item::Erase(_) => return Err(err(ln, at, "(.,target) needs a non-cooperative rule")),
                            Item::Create(..) => return Err(err(ln, at, "creation rule must be `c a -> c [ u ]_L`")),
                        }
                    }
                    let catalyst_target =
                        catalyst_target.ok_or_else(|| err(ln, at, "catalytic rule must keep its catalyst"))?;
                    RuleForm::Catalytic { catalyst: *c, reactant: *a, rhs, catalyst_target }
                }
            }
            _ => return Err(err(ln, head.column, "left-hand side must be `a` or `c a`")),
        };
        Ok(Rule { label, form })
    }

    fn finish(self, last_line: usize) -> Result<PSystem, ParseError> {
        if let Some(open) = self.stack.last() {
            return Err(err(last_line, 1, format!("membrane {} not closed", open.label)));
        }
        let skin = self.skin.ok_or_else(|| err(last_line, 1, "no @membrane"))?;
        let (output_region, output_order) = self.output.unwrap_or((OutputRegion::Environment, vec![]));
        let control = match self.mode.as_ref().map(|(m, w)| (m.as_str(), *w)) {
            None | Some(("plain", _)) => ControlMode::Plain,
            Some(("label-selection", _)) => ControlMode::LabelSelection { sets: self.sets },
            Some(("target-selection", _)) => ControlMode::TargetSelection,
            Some(("time-varying", weak)) => {
                let p = self.period.unwrap_or(self.sets.len());
                ControlMode::Controlled { schedule: self.sets, weak, period: Some(p) }
            }
            Some((_, weak)) => ControlMode::Controlled { schedule: self.sets, weak, period: self.period },
        };
        let mut initial = Configuration::new(skin);
        initial.environment = self.environment;
        Ok(PSystem {
            alphabet: self.alphabet,
            catalysts: self.catalysts,
            initial,
            rules: self.rules,
            output_region,
            output_order,
            variant: self.variant,
            control,
        })
    }
}

pub fn parse_system(text: &str) -> Result<PSystem, ParseError> {
    let mut p = Parser::default();
    let mut last = 1;
    for (i, raw) in text.lines().enumerate() {
        last = i + 1;
        let toks = tokens(strip_comment(raw));
        if toks.is_empty() {
            continue;
        }
        p.line(i + 1, &toks)?;
    }
    p.finish(last)
}

fn names(al: &Alphabet, m: &Multiset) -> String {
    let mut parts = Vec::new();
    for (s, k) in m.iter() {
        for _ in 0..k {
            parts.push(quote(al.name(s)));
        }
    }
    parts.join(" ")
}

fn obj(al: &Alphabet, o: &RhsObject) -> String {
    match o.target {
        Target::Here => quote(al.name(o.symbol)),
        ref t => format!("({},{t})", al.name(o.symbol)),
    }
}

pub fn render_rule(al: &Alphabet, r: &Rule) -> String {
    let mut s = String::new();
    if let Some(l) = &r.label {
        let _ = write!(s, "{l}: ");
    }
    match &r.form {
        RuleForm::NonCoop { lhs, rhs, dissolves, erase_target } => {
            let _ = write!(s, "{} ->", quote(al.name(*lhs)));
            if rhs.is_empty() {
                match erase_target {
                    Target::Here => s.push_str(" ."),
                    t => {
                        let _ = write!(s, " (.,{t})");
                    }
                }
            }
            for o in rhs {
                let _ = write!(s, " {}", obj(al, o));
            }
            if *dissolves {
                s.push_str(" delta");
            }
        }
        RuleForm::Catalytic { catalyst, reactant, rhs, catalyst_target } => {
            let _ = write!(
                s,
                "{} {} -> {}",
                quote(al.name(*catalyst)),
                quote(al.name(*reactant)),
                obj(al, &RhsObject::to(*catalyst, catalyst_target.clone()))
            );
            for o in rhs {
                let _ = write!(s, " {}", obj(al, o));
            }
        }
        RuleForm::CatalyticCreate { catalyst, reactant, new_label, contents } => {
            let c = quote(al.name(*catalyst));
            let inner = names(al, contents);
            let sep = if inner.is_empty() { "" } else { " " };
            let _ = write!(s, "{c} {} -> {c} [{sep}{inner} ]_{new_label}", quote(al.name(*reactant)));
        }
    }
    s
}

fn render_node(sys: &PSystem, node: &MembraneNode, depth: usize, done: &mut BTreeSet<String>, out: &mut String) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}@membrane {}", node.label);
    if !node.contents.is_empty() {
        let _ = writeln!(out, "{pad}  @init {}", names(&sys.alphabet, &node.contents));
    }
    if done.insert(node.label.clone()) {
        for r in sys.rules_for(&node.label) {
            let _ = writeln!(out, "{pad}  @rule {}", render_rule(&sys.alphabet, r));
        }
    }
    for c in &node.children {
        render_node(sys, c, depth + 1, done, out);
    }
    let _ = writeln!(out, "{pad}@end");
}

/// Text form of `sys`. `header` lines are emitted as leading comments.
pub fn render_system(sys: &PSystem, header: &[String]) -> String {
    let al = &sys.alphabet;
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let objs: Vec<String> = al.symbols().map(|s| quote(al.name(s))).collect();
    let _ = writeln!(out, "@objects {}", objs.join(" "));
    let cats: Vec<String> = sys.catalysts.iter().map(|&s| quote(al.name(s))).collect();
    if !cats.is_empty() {
        let _ = writeln!(out, "@catalysts {}", cats.join(" "));
    }
    if !sys.initial.environment.is_empty() {
        let _ = writeln!(out, "@env {}", names(al, &sys.initial.environment));
    }
    let mut done = BTreeSet::new();
    render_node(sys, &sys.initial.skin, 0, &mut done, &mut out);
    for (label, rules) in &sys.rules {
        if done.contains(label) || rules.is_empty() {
            continue;
        }
        let _ = writeln!(out, "@region {label}");
        for r in rules {
            let _ = writeln!(out, "  @rule {}", render_rule(al, r));
        }
        let _ = writeln!(out, "@end");
    }
    let region = match &sys.output_region {
        OutputRegion::Environment => "env".to_string(),
        OutputRegion::Membrane(l) => l.clone(),
    };
    let outs: Vec<String> = sys.output_order.iter().map(|&s| quote(al.name(s))).collect();
    let _ = writeln!(out, "@output {region} {}", outs.join(" ").trim_end());
    let v = sys.variant;
    let _ = writeln!(
        out,
        "@variant mobile={} creation={} targets={}",
        v.mobile,
        v.creation,
        if v.targets_labeled { "labeled" } else { "plain" }
    );
    let sets = match &sys.control {
        ControlMode::Plain => {
            out.push_str("@mode plain\n");
            &[][..]
        }
        ControlMode::TargetSelection => {
            out.push_str("@mode target-selection\n");
            &[][..]
        }
        ControlMode::LabelSelection { sets } => {
            out.push_str("@mode label-selection\n");
            &sets[..]
        }
        ControlMode::Controlled { schedule, weak, period } => {
            let strength = if *weak { " weak" } else { "" };
            if *period == Some(schedule.len()) {
                let _ = writeln!(out, "@mode time-varying{strength}");
            } else {
                let _ = writeln!(out, "@mode controlled{strength}");
                if let Some(p) = period {
                    let _ = writeln!(out, "@period {p}");
                }
            }
            &schedule[..]
        }
    };
    for set in sets {
        let labels: Vec<&str> = set.labels.iter().map(String::as_str).collect();
        let _ = writeln!(out, "@set {}: {}", set.name, labels.join(" ").trim_end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_system;

    const EXAMPLE: &str = "\
@objects a_1 a_2 a_3 c d l0 lh '#'
@catalysts c
@membrane 1                      # skin, declared first; nesting via @membrane ... @end
  @init c d l0
  @rule r1: l0 -> lh (a_3,out)
  @rule r2: c a_1 -> c           # catalytic: first lhs symbol in @catalysts
  @rule r3: c l0 -> c [ l0 ]_2   # creation
  @rule r4: a_1 -> . delta       # dissolving; '.' = empty rhs
@end
@output env a_3
@variant mobile=false creation=true targets=labeled
";

    #[test]
    fn format_example_parses() {
        let sys = parse_system(EXAMPLE).unwrap();
        assert_eq!(sys.total_rules(), 4);
        assert_eq!(sys.alphabet.len(), 8);
        assert!(sys.sym("#").is_some());
        let v = validate_system(&sys);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("skin"));
        let (_, _, r3) = sys.find_rule("r3").unwrap();
        assert!(matches!(&r3.form, RuleForm::CatalyticCreate { new_label, .. } if new_label == "2"));
    }

    #[test]
    fn round_trip() {
        let sys = parse_system(EXAMPLE).unwrap();
        let text = render_system(&sys, &[]);
        let again = parse_system(&text).unwrap();
        assert_eq!(render_system(&again, &[]), text);
        assert_eq!(again.rules, sys.rules);
    }

    #[test]
    fn undeclared_symbol_named() {
        let e = parse_system("@objects a\n@membrane 1\n@rule a -> zz\n@end\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("zz"), "{e}");
    }

    #[test]
    fn targets_modes_and_regions() {
        let text = "\
@objects c a b '#'
@catalysts c
@membrane 1
  @init c a
  @rule t1: c a -> (c,in) (b,in_2) (#,out)
  @rule t2: b -> (.,out)
  @membrane 2
  @end
@end
@region 3
  @rule t3: b -> b delta
@end
@mode time-varying weak
@set U1: t1
@set U2: t2 t3
";
        let sys = parse_system(text).unwrap();
        assert_eq!(
            sys.control,
            ControlMode::Controlled {
                schedule: vec![LabelSet::new("U1", ["t1"]), LabelSet::new("U2", ["t2", "t3"])],
                weak: true,
                period: Some(2)
            }
        );
        assert_eq!(sys.rules_for("3").len(), 1);
        assert_eq!(sys.initial.skin.children.len(), 1);
        let text2 = render_system(&sys, &["header".into()]);
        assert!(text2.starts_with("# header\n"));
        assert_eq!(render_system(&parse_system(&text2).unwrap(), &["header".into()]), text2);
    }

    #[test]
    fn rejects_bad_catalytic_forms() {
        let base = "@objects c a b\n@catalysts c\n@membrane 1\n";
        for (rule, msg) in [
            ("@rule c a -> b", "keep its catalyst"),
            ("@rule a b -> b", "not a catalyst"),
            ("@rule a -> ", "empty right-hand side"),
            ("@rule a -> . b", "mixed"),
            ("@rule c a b -> c", "left-hand side"),
        ] {
            let e = parse_system(&format!("{base}{rule}\n@end\n")).unwrap_err();
            assert!(e.message.contains(msg), "{rule}: {e}");
        }
    }
}
