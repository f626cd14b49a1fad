//! Capacity expressions in canonical form.
//!
//! A [`Cap`] is a polynomial with integer coefficients over atoms, where an
//! atom is either a capacity variable or a division that could not be folded.
//! Terms are kept in a `BTreeMap` keyed by their sorted atom list, so two
//! expressions are provably equal exactly when their maps are equal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::frontend::ast::{CapExpr, CapExprKind, CapOp};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(String),
    /// Symbolic `numerator / denominator`; only built when the two sides are
    /// not both constant.
    Div(Box<Cap>, Box<Cap>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cap {
    /// Monomial (sorted atoms, empty for the constant term) to coefficient.
    /// Zero coefficients are never stored.
    terms: BTreeMap<Vec<Atom>, i128>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CapError {
    #[error("capacity division by zero")]
    DivisionByZero,
    #[error("unknown capacity variable `{0}`")]
    UnknownVar(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapEquality {
    Equal,
    NotProvablyEqual,
}

impl Cap {
    pub fn constant(n: i128) -> Cap {
        let mut terms = BTreeMap::new();
        if n != 0 {
            terms.insert(Vec::new(), n);
        }
        Cap { terms }
    }

    pub fn var(name: impl Into<String>) -> Cap {
        Cap::atom(Atom::Var(name.into()))
    }

    fn atom(a: Atom) -> Cap {
        let mut terms = BTreeMap::new();
        terms.insert(vec![a], 1);
        Cap { terms }
    }

    pub fn as_const(&self) -> Option<i128> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Cap) -> Cap {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert(0);
            *entry += c;
            if *entry == 0 {
                terms.remove(m);
            }
        }
        Cap { terms }
    }

    pub fn neg(&self) -> Cap {
        Cap { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Cap) -> Cap {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Cap) -> Cap {
        let mut out = Cap::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m: Vec<Atom> = m1.iter().chain(m2).cloned().collect();
                m.sort();
                let mut term = BTreeMap::new();
                term.insert(m, c1 * c2);
                out = out.add(&Cap { terms: term });
            }
        }
        out
    }

    /// Truncating division. Folds when both sides are constant, returns the
    /// numerator for a divisor of one, and otherwise keeps a symbolic atom.
    pub fn div(&self, other: &Cap) -> Result<Cap, CapError> {
        match (self.as_const(), other.as_const()) {
            (_, Some(0)) => Err(CapError::DivisionByZero),
            (Some(a), Some(b)) => Ok(Cap::constant(a / b)),
            (_, Some(1)) => Ok(self.clone()),
            (Some(0), _) => Ok(Cap::constant(0)),
            _ => Ok(Cap::atom(Atom::Div(Box::new(self.clone()), Box::new(other.clone())))),
        }
    }

    pub fn binary(op: CapOp, l: &Cap, r: &Cap) -> Result<Cap, CapError> {
        Ok(match op {
            CapOp::Add => l.add(r),
            CapOp::Sub => l.sub(r),
            CapOp::Mul => l.mul(r),
            CapOp::Div => l.div(r)?,
        })
    }

    /// Normalizes a parsed capacity expression. `in_scope` decides which
    /// variable names are legal.
    pub fn from_ast(e: &CapExpr, in_scope: &dyn Fn(&str) -> bool) -> Result<Cap, CapError> {
        match &e.kind {
            CapExprKind::Int(n) => Ok(Cap::constant(*n as i128)),
            CapExprKind::Var(v) if in_scope(&v.name) => Ok(Cap::var(&v.name)),
            CapExprKind::Var(v) => Err(CapError::UnknownVar(v.name.clone())),
            CapExprKind::Binary(op, l, r) => {
                Cap::binary(*op, &Cap::from_ast(l, in_scope)?, &Cap::from_ast(r, in_scope)?)
            }
        }
    }

    /// Replaces variables by capacities and renormalizes.
    pub fn subst(&self, map: &HashMap<String, Cap>) -> Result<Cap, CapError> {
        let mut out = Cap::default();
        for (m, c) in &self.terms {
            let mut term = Cap::constant(*c);
            for atom in m {
                let a = match atom {
                    Atom::Var(v) => map.get(v).cloned().unwrap_or_else(|| Cap::var(v)),
                    Atom::Div(n, d) => n.subst(map)?.div(&d.subst(map)?)?,
                };
                term = term.mul(&a);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Value under an assignment; `None` on division by zero or a missing variable.
    pub fn eval(&self, env: &HashMap<String, i128>) -> Option<i128> {
        let mut total: i128 = 0;
        for (m, c) in &self.terms {
            let mut term = *c;
            for atom in m {
                let v = match atom {
                    Atom::Var(v) => *env.get(v)?,
                    Atom::Div(n, d) => {
                        let d = d.eval(env)?;
                        if d == 0 {
                            return None;
                        }
                        n.eval(env)? / d
                    }
                };
                term = term.checked_mul(v)?;
            }
            total = total.checked_add(term)?;
        }
        Some(total)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for m in self.terms.keys() {
            for a in m {
                match a {
                    Atom::Var(v) => {
                        out.insert(v.clone());
                    }
                    Atom::Div(n, d) => {
                        n.collect_vars(out);
                        d.collect_vars(out);
                    }
                }
            }
        }
    }

    pub fn has_division(&self) -> bool {
        self.terms.keys().flatten().any(|a| matches!(a, Atom::Div(..)))
    }

    /// Renders with a custom operator spelling; used for both source-style
    /// display and C++ emission.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        // Non-constant terms first, constant last: `2*n + 1`.
        let mut parts: Vec<(bool, String)> = Vec::new();
        let mut ordered: Vec<_> = self.terms.iter().filter(|(m, _)| !m.is_empty()).collect();
        ordered.extend(self.terms.iter().filter(|(m, _)| m.is_empty()));
        for (m, c) in ordered {
            let negative = *c < 0;
            let mag = c.unsigned_abs();
            let mut factors: Vec<String> = Vec::new();
            if mag != 1 || m.is_empty() {
                factors.push(mag.to_string());
            }
            for a in m {
                factors.push(match a {
                    Atom::Var(v) => v.clone(),
                    Atom::Div(n, d) => format!("(({}) / ({}))", n.render(), d.render()),
                });
            }
            parts.push((negative, factors.join(" * ")));
        }
        let mut out = String::new();
        for (i, (neg, text)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(text);
        }
        out
    }
}

impl fmt::Display for Cap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Decides equality of two normalized capacities by comparing normal forms.
pub fn check_capacity(a: &Cap, b: &Cap) -> CapEquality {
    if a == b {
        CapEquality::Equal
    } else {
        CapEquality::NotProvablyEqual
    }
}
