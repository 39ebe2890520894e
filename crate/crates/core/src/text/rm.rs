//! An optional `registers N` header followed by one `label: ADD(j) l2 l3 | SUB(j) l2 l3 | HALT`
//! per line.

use std::collections::BTreeSet;

use super::{strip_comment, tokens, ParseError};
use crate::machine::{Instr, RegisterMachine};

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, column, message: message.into() }
}

fn register(text: &str, op: &str) -> Option<usize> {
    text.strip_prefix(op)?.strip_prefix('(')?.strip_suffix(')')?.trim().parse().ok()
}

pub fn parse_machine(text: &str) -> Result<RegisterMachine, ParseError> {
    let mut registers = None;
    let mut header_allowed = true;
    let mut program = Vec::new();
    let mut labels = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw);
        let toks = tokens(line);
        let Some(first) = toks.first() else { continue };
        if header_allowed && first.text == "registers" {
            header_allowed = false;
            if toks.len() != 2 {
                return Err(err(ln, first.column, "expected `registers N`"));
            }
            let n = toks[1]
                .text
                .parse()
                .map_err(|_| err(ln, toks[1].column, format!("bad register count {}", toks[1].text)))?;
            registers = Some(n);
            continue;
        }
        header_allowed = false;
        let Some(label) = first.text.strip_suffix(':') else {
            return Err(err(ln, first.column, "expected `label:`"));
        };
        if label.is_empty() {
            return Err(err(ln, first.column, "empty label"));
        }
        if !labels.insert(label.to_string()) {
            return Err(err(ln, first.column, format!("duplicate label {label}")));
        }
        let Some(op) = toks.get(1) else {
            return Err(err(ln, line.len() + 1, "missing instruction"));
        };
        let instr = if op.text == "HALT" {
            if toks.len() != 2 {
                return Err(err(ln, toks[2].column, "HALT takes no operands"));
            }
            Instr::Halt
        } else {
            let (is_add, reg) = match (register(op.text, "ADD"), register(op.text, "SUB")) {
                (Some(r), _) => (true, r),
                (_, Some(r)) => (false, r),
                _ => return Err(err(ln, op.column, format!("unknown instruction {}", op.text))),
            };
            if toks.len() != 4 {
                let col = toks.get(4).map_or(line.len() + 1, |t| t.column);
                return Err(err(ln, col, "expected two target labels"));
            }
            let (a, b) = (toks[2].text.to_string(), toks[3].text.to_string());
            if is_add {
                Instr::Add { reg, next: a, alt: b }
            } else {
                Instr::Sub { reg, dec: a, zero: b }
            }
        };
        program.push((label.to_string(), instr));
    }
    if program.is_empty() {
        return Err(err(text.lines().count().max(1), 1, "no instructions"));
    }
    // Without a header: the highest register used, and at least the two
    // working registers.
    let registers = registers.unwrap_or_else(|| {
        program
            .iter()
            .filter_map(|(_, i)| match i {
                Instr::Add { reg, .. } | Instr::Sub { reg, .. } => Some(*reg),
                Instr::Halt => None,
            })
            .fold(2, usize::max)
    });
    Ok(RegisterMachine { registers, program })
}

/// Line number (1-based) of the instruction with `label` in `text`.
pub fn line_of(text: &str, label: &str) -> Option<usize> {
    text.lines().position(|l| {
        tokens(strip_comment(l))
            .first()
            .is_some_and(|t| t.text.strip_suffix(':') == Some(label))
    })
    .map(|i| i + 1)
}

pub fn render_machine(m: &RegisterMachine) -> String {
    m.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{bundled, rm_validate};

    #[test]
    fn parses_minimal_machine() {
        let m = parse_machine("registers 3\nl0: ADD(3) lh lh\nlh: HALT\n").unwrap();
        assert_eq!(m, bundled::add1());
        assert_eq!(m.adds().count(), 1);
    }

    #[test]
    fn sub_on_output_register_is_a_validation_error() {
        let text = "registers 3\n# comment\nl0: SUB(3) lh lh\nlh: HALT\n";
        let m = parse_machine(text).unwrap();
        let v = rm_validate(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(line_of(text, v[0].label.as_deref().unwrap()), Some(3));
    }

    #[test]
    fn header_is_optional() {
        let m = parse_machine("l0: ADD(3) lh lh\nlh: HALT\n").unwrap();
        assert_eq!((m.registers, m.adds().count()), (3, 1));
        let e = parse_machine("l0: ADD(3) lh lh\nregisters 3\nlh: HALT\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn duplicate_label_rejected() {
        let e = parse_machine("registers 3\nl0: ADD(3) lh lh\nl0: HALT\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 1));
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn round_trip_normalizes_whitespace() {
        for (_, m) in bundled::all() {
            let text = render_machine(&m);
            let spaced = text.replace(' ', "   ").replace(": ", ":\t");
            assert_eq!(render_machine(&parse_machine(&spaced).unwrap()), text);
        }
    }
}
