//! Finite multisets over a per-system interned alphabet.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Count = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultisetError {
    #[error("multiset underflow on symbol #{0}")]
    Underflow(u32),
    #[error("multiset count overflow on symbol #{0}")]
    Overflow(u32),
}

/// An interned object identifier. Only meaningful together with the
/// [`Alphabet`] that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol(pub u32);

/// Bijective interning table between symbols and their display names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the existing symbol for `name` or interns a fresh one.
    pub fn intern(&mut self, name: &str) -> Symbol {
        if let Some(&s) = self.index.get(name) {
            return s;
        }
        let s = Symbol(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), s);
        s
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.index.get(name).copied()
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.names.len() as u32).map(Symbol)
    }
}

/// A finite multiset. Zero counts are never stored, so derived equality is
/// count-wise equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset {
    counts: BTreeMap<Symbol, Count>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(s: Symbol) -> Self {
        let mut m = Self::new();
        m.insert(s, 1).expect("singleton cannot overflow");
        m
    }

    pub fn from_symbols<I: IntoIterator<Item = Symbol>>(it: I) -> Result<Self, MultisetError> {
        let mut m = Self::new();
        for s in it {
            m.insert(s, 1)?;
        }
        Ok(m)
    }

    pub fn get(&self, s: Symbol) -> Count {
        self.counts.get(&s).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of objects.
    pub fn size(&self) -> Count {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, Count)> + '_ {
        self.counts.iter().map(|(&s, &k)| (s, k))
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.counts.contains_key(&s)
    }

    /// In-place `self[s] += k`.
    pub fn insert(&mut self, s: Symbol, k: Count) -> Result<(), MultisetError> {
        if k == 0 {
            return Ok(());
        }
        let slot = self.counts.entry(s).or_insert(0);
        *slot = slot.checked_add(k).ok_or(MultisetError::Overflow(s.0))?;
        Ok(())
    }

    /// In-place `self[s] -= k`.
    pub fn remove(&mut self, s: Symbol, k: Count) -> Result<(), MultisetError> {
        if k == 0 {
            return Ok(());
        }
        let have = self.get(s);
        if have < k {
            return Err(MultisetError::Underflow(s.0));
        }
        if have == k {
            self.counts.remove(&s);
        } else {
            self.counts.insert(s, have - k);
        }
        Ok(())
    }

    pub fn add(&self, s: Symbol, k: Count) -> Result<Multiset, MultisetError> {
        let mut m = self.clone();
        m.insert(s, k)?;
        Ok(m)
    }

    pub fn union(&self, other: &Multiset) -> Result<Multiset, MultisetError> {
        let mut m = self.clone();
        m.absorb(other)?;
        Ok(m)
    }

    /// In-place union.
    pub fn absorb(&mut self, other: &Multiset) -> Result<(), MultisetError> {
        for (s, k) in other.iter() {
            self.insert(s, k)?;
        }
        Ok(())
    }

    /// Pointwise difference; fails if `other` is not contained in `self`.
    pub fn subtract(&self, other: &Multiset) -> Result<Multiset, MultisetError> {
        let mut m = self.clone();
        m.consume(other)?;
        Ok(m)
    }

    pub fn consume(&mut self, other: &Multiset) -> Result<(), MultisetError> {
        if let Some((s, _)) = other.iter().find(|&(s, k)| self.get(s) < k) {
            return Err(MultisetError::Underflow(s.0));
        }
        for (s, k) in other.iter() {
            self.remove(s, k)?;
        }
        Ok(())
    }

    /// `self ≤ other` pointwise.
    pub fn is_sub(&self, other: &Multiset) -> bool {
        self.iter().all(|(s, k)| other.get(s) >= k)
    }

    /// How many disjoint copies of `self` fit in `other`. `None` for the
    /// empty multiset, which fits unboundedly often.
    pub fn multiplicity_in(&self, other: &Multiset) -> Option<Count> {
        self.iter().map(|(s, k)| other.get(s) / k).min()
    }

    pub fn parikh(&self, order: &[Symbol]) -> ParikhVector {
        ParikhVector(order.iter().map(|&s| self.get(s)).collect())
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> MultisetDisplay<'a> {
        MultisetDisplay { ms: self, alphabet }
    }
}

/// Canonical text form: `sym^k` tokens sorted by display name, `^1` elided,
/// `-` for the empty multiset.
pub struct MultisetDisplay<'a> {
    ms: &'a Multiset,
    alphabet: &'a Alphabet,
}

impl fmt::Display for MultisetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ms.is_empty() {
            return f.write_str("-");
        }
        let mut items: Vec<(&str, Count)> = self
            .ms
            .iter()
            .map(|(s, k)| (self.alphabet.name(s), k))
            .collect();
        items.sort();
        for (i, (name, k)) in items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *k == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{k}")?;
            }
        }
        Ok(())
    }
}

/// Multiplicities over a declared output-symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParikhVector(pub Vec<Count>);

impl ParikhVector {
    pub fn zero(len: usize) -> Self {
        ParikhVector(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ParikhVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abc() -> (Alphabet, Symbol, Symbol, Symbol) {
        let mut al = Alphabet::new();
        let a = al.intern("a");
        let b = al.intern("b");
        let c = al.intern("c");
        (al, a, b, c)
    }

    #[test]
    fn add_examples() {
        let (mut al, a, _, c) = abc();
        assert_eq!(Multiset::new().add(a, 0).unwrap(), Multiset::new());
        let m = Multiset::singleton(a).add(a, 2).unwrap();
        assert_eq!(m.get(a), 3);
        let d = al.intern("d");
        let l0 = al.intern("l0");
        let a1 = al.intern("a_1");
        let base = Multiset::from_symbols([c, d, l0]).unwrap();
        let got = base.add(a1, 1).unwrap();
        assert_eq!(got.display(&al).to_string(), "a_1 c d l0");
        assert_eq!(got.size(), 4);
    }

    #[test]
    fn subtract_examples() {
        let (_, a, b, _) = abc();
        let m = Multiset::from_symbols([a, a, b]).unwrap();
        assert_eq!(
            m.subtract(&Multiset::singleton(a)).unwrap(),
            Multiset::from_symbols([a, b]).unwrap()
        );
        assert!(Multiset::singleton(a)
            .subtract(&Multiset::singleton(a))
            .unwrap()
            .is_empty());
        assert_eq!(
            Multiset::singleton(a).subtract(&Multiset::singleton(b)),
            Err(MultisetError::Underflow(b.0))
        );
    }

    #[test]
    fn leq_examples() {
        let (_, a, _, c) = abc();
        assert!(Multiset::new().is_sub(&Multiset::singleton(a)));
        let lhs = Multiset::from_symbols([c, a]).unwrap();
        let big = Multiset::from_symbols([c, a, a, a]).unwrap();
        assert!(lhs.is_sub(&big));
        let cc = Multiset::from_symbols([c, c]).unwrap();
        assert!(!cc.is_sub(&Multiset::singleton(c)));
    }

    #[test]
    fn parikh_examples() {
        let mut al = Alphabet::new();
        let a3 = al.intern("a_3");
        let a4 = al.intern("a_4");
        let lh = al.intern("l_h");
        let m = Multiset::new().add(a3, 2).unwrap().add(lh, 1).unwrap();
        assert_eq!(m.parikh(&[a3]), ParikhVector(vec![2]));
        assert_eq!(Multiset::new().parikh(&[a3, a4]), ParikhVector(vec![0, 0]));
        let m = Multiset::new().add(a4, 1).unwrap().add(a3, 5).unwrap();
        assert_eq!(m.parikh(&[a3, a4]), ParikhVector(vec![5, 1]));
    }

    #[test]
    fn overflow_is_reported() {
        let (_, a, _, _) = abc();
        let m = Multiset::new().add(a, Count::MAX).unwrap();
        assert_eq!(m.add(a, 1), Err(MultisetError::Overflow(a.0)));
    }

    #[test]
    fn canonical_text() {
        let (al, a, _, c) = abc();
        assert_eq!(Multiset::new().display(&al).to_string(), "-");
        let m = Multiset::from_symbols([c, a, a]).unwrap();
        assert_eq!(m.display(&al).to_string(), "a^2 c");
    }

    fn small_ms() -> impl Strategy<Value = Multiset> {
        proptest::collection::vec((0u32..4, 0u64..4), 0..6).prop_map(|v| {
            let mut m = Multiset::new();
            for (s, k) in v {
                m.insert(Symbol(s), k).unwrap();
            }
            m
        })
    }

    proptest! {
        #[test]
        fn add_then_subtract_is_identity(m in small_ms(), s in 0u32..4) {
            let one = Multiset::singleton(Symbol(s));
            prop_assert_eq!(m.union(&one).unwrap().subtract(&one).unwrap(), m);
        }

        #[test]
        fn subtract_succeeds_iff_leq(m in small_ms(), n in small_ms()) {
            prop_assert_eq!(m.subtract(&n).is_ok(), n.is_sub(&m));
        }

        #[test]
        fn leq_is_antisymmetric(m in small_ms(), n in small_ms()) {
            if m.is_sub(&n) && n.is_sub(&m) {
                prop_assert_eq!(&m, &n);
            }
        }

        #[test]
        fn canonical_text_is_faithful(m in small_ms(), n in small_ms()) {
            let mut al = Alphabet::new();
            for name in ["x", "a", "b'", "#"] { al.intern(name); }
            let eq_text = m.display(&al).to_string() == n.display(&al).to_string();
            prop_assert_eq!(eq_text, m == n);
        }
    }
}
