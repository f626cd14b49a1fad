//! Resolved semantic types, type schemes and substitutions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::capacity::{Cap, CapError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntTy {
    I8,
    I16,
    I32,
    U8,
    U16,
    U32,
}

impl IntTy {
    pub const ALL: [IntTy; 6] = [IntTy::I8, IntTy::I16, IntTy::I32, IntTy::U8, IntTy::U16, IntTy::U32];

    pub fn name(self) -> &'static str {
        match self {
            IntTy::I8 => "int8",
            IntTy::I16 => "int16",
            IntTy::I32 => "int32",
            IntTy::U8 => "uint8",
            IntTy::U16 => "uint16",
            IntTy::U32 => "uint32",
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            IntTy::I8 | IntTy::U8 => 8,
            IntTy::I16 | IntTy::U16 => 16,
            IntTy::I32 | IntTy::U32 => 32,
        }
    }

    pub fn signed(self) -> bool {
        matches!(self, IntTy::I8 | IntTy::I16 | IntTy::I32)
    }

    pub fn min(self) -> i128 {
        if self.signed() {
            -(1i128 << (self.bits() - 1))
        } else {
            0
        }
    }

    pub fn max(self) -> i128 {
        if self.signed() {
            (1i128 << (self.bits() - 1)) - 1
        } else {
            (1i128 << self.bits()) - 1
        }
    }

    pub fn contains(self, v: i128) -> bool {
        (self.min()..=self.max()).contains(&v)
    }

    /// Reduces `v` modulo 2^bits into the type's range.
    pub fn wrap(self, v: i128) -> i128 {
        let modulus = 1i128 << self.bits();
        let r = v.rem_euclid(modulus);
        if self.signed() && r > self.max() {
            r - modulus
        } else {
            r
        }
    }
}

/// A declaration's module-qualified name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualName {
    pub module: String,
    pub name: String,
}

impl QualName {
    pub fn new(module: impl Into<String>, name: impl Into<String>) -> Self {
        QualName { module: module.into(), name: name.into() }
    }
}

impl fmt::Display for QualName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.module, self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Unit,
    Bool,
    Int(IntTy),
    Float,
    Double,
    /// The foreign handle type `pointer`.
    Pointer,
    Fun(Vec<Type>, Box<Type>),
    Adt(QualName, Vec<Type>, Vec<Cap>),
    Record(QualName, Vec<Type>, Vec<Cap>),
    Ref(Box<Type>),
    Array(Box<Type>, Cap),
    Tuple(Vec<Type>),
    /// Type variable, stored without its quote.
    Var(String),
}

impl Type {
    pub fn int32() -> Type {
        Type::Int(IntTy::I32)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int(_) | Type::Float | Type::Double)
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Type::Int(_))
    }

    pub fn contains_fun(&self) -> bool {
        match self {
            Type::Fun(..) => true,
            Type::Adt(_, ts, _) | Type::Record(_, ts, _) | Type::Tuple(ts) => ts.iter().any(Type::contains_fun),
            Type::Ref(t) | Type::Array(t, _) => t.contains_fun(),
            _ => false,
        }
    }

    pub fn free_type_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Fun(ps, r) => {
                ps.iter().for_each(|p| p.free_type_vars(out));
                r.free_type_vars(out);
            }
            Type::Adt(_, ts, _) | Type::Record(_, ts, _) | Type::Tuple(ts) => {
                ts.iter().for_each(|t| t.free_type_vars(out))
            }
            Type::Ref(t) | Type::Array(t, _) => t.free_type_vars(out),
            _ => {}
        }
    }

    pub fn free_cap_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Fun(ps, r) => {
                ps.iter().for_each(|p| p.free_cap_vars(out));
                r.free_cap_vars(out);
            }
            Type::Adt(_, ts, cs) | Type::Record(_, ts, cs) => {
                ts.iter().for_each(|t| t.free_cap_vars(out));
                cs.iter().for_each(|c| out.extend(c.free_vars()));
            }
            Type::Tuple(ts) => ts.iter().for_each(|t| t.free_cap_vars(out)),
            Type::Ref(t) => t.free_cap_vars(out),
            Type::Array(t, c) => {
                t.free_cap_vars(out);
                out.extend(c.free_vars());
            }
            _ => {}
        }
    }

    pub fn subst(&self, s: &Subst) -> Result<Type, CapError> {
        Ok(match self {
            Type::Var(v) => s.types.get(v).cloned().unwrap_or_else(|| self.clone()),
            Type::Fun(ps, r) => Type::Fun(subst_all(ps, s)?, Box::new(r.subst(s)?)),
            Type::Adt(n, ts, cs) => Type::Adt(n.clone(), subst_all(ts, s)?, subst_caps(cs, s)?),
            Type::Record(n, ts, cs) => Type::Record(n.clone(), subst_all(ts, s)?, subst_caps(cs, s)?),
            Type::Ref(t) => Type::Ref(Box::new(t.subst(s)?)),
            Type::Array(t, c) => Type::Array(Box::new(t.subst(s)?), c.subst(&s.caps)?),
            Type::Tuple(ts) => Type::Tuple(subst_all(ts, s)?),
            _ => self.clone(),
        })
    }
}

fn subst_all(ts: &[Type], s: &Subst) -> Result<Vec<Type>, CapError> {
    ts.iter().map(|t| t.subst(s)).collect()
}

fn subst_caps(cs: &[Cap], s: &Subst) -> Result<Vec<Cap>, CapError> {
    cs.iter().map(|c| c.subst(&s.caps)).collect()
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Unit => f.write_str("unit"),
            Type::Bool => f.write_str("bool"),
            Type::Int(i) => f.write_str(i.name()),
            Type::Float => f.write_str("float"),
            Type::Double => f.write_str("double"),
            Type::Pointer => f.write_str("pointer"),
            Type::Fun(ps, r) => {
                f.write_str("(")?;
                write_list(f, ps, ", ")?;
                write!(f, ")->{r}")
            }
            Type::Adt(n, ts, cs) | Type::Record(n, ts, cs) => {
                f.write_str(&n.name)?;
                if !ts.is_empty() || !cs.is_empty() {
                    f.write_str("<")?;
                    write_list(f, ts, ", ")?;
                    if !cs.is_empty() {
                        f.write_str("; ")?;
                        write_list(f, cs, ", ")?;
                    }
                    f.write_str(">")?;
                }
                Ok(())
            }
            Type::Ref(t) => write!(f, "{} ref", Postfix(t)),
            Type::Array(t, c) => write!(f, "{}[{c}]", Postfix(t)),
            Type::Tuple(ts) => {
                f.write_str("(")?;
                write_list(f, ts, " * ")?;
                f.write_str(")")
            }
            Type::Var(v) => write!(f, "'{v}"),
        }
    }
}

/// Wraps function types in parentheses where a postfix operator follows.
struct Postfix<'a>(&'a Type);

impl fmt::Display for Postfix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Type::Fun(..) => write!(f, "({})", self.0),
            t => write!(f, "{t}"),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

/// Simultaneous substitution of type and capacity variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    pub types: HashMap<String, Type>,
    pub caps: HashMap<String, Cap>,
}

impl Subst {
    /// Pairs template parameters with arguments; lengths are checked by the caller.
    pub fn from_args(tvars: &[String], targs: &[Type], cvars: &[String], cargs: &[Cap]) -> Subst {
        Subst {
            types: tvars.iter().cloned().zip(targs.iter().cloned()).collect(),
            caps: cvars.iter().cloned().zip(cargs.iter().cloned()).collect(),
        }
    }

    /// `self ∘ first`: applying the result equals applying `first`, then `self`.
    pub fn compose(&self, first: &Subst) -> Result<Subst, CapError> {
        let mut types: HashMap<String, Type> =
            first.types.iter().map(|(k, t)| Ok((k.clone(), t.subst(self)?))).collect::<Result<_, CapError>>()?;
        for (k, t) in &self.types {
            types.entry(k.clone()).or_insert_with(|| t.clone());
        }
        let mut caps: HashMap<String, Cap> =
            first.caps.iter().map(|(k, c)| Ok((k.clone(), c.subst(&self.caps)?))).collect::<Result<_, CapError>>()?;
        for (k, c) in &self.caps {
            caps.entry(k.clone()).or_insert_with(|| c.clone());
        }
        Ok(Subst { types, caps })
    }
}

/// A possibly polymorphic type: `∀ tvars; cvars. ty`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub type_vars: Vec<String>,
    pub cap_vars: Vec<String>,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InstantiateError {
    #[error("expected {expected} type argument(s), found {found}")]
    TypeArity { expected: usize, found: usize },
    #[error("expected {expected} capacity argument(s), found {found}")]
    CapArity { expected: usize, found: usize },
    #[error(transparent)]
    Cap(#[from] CapError),
}

impl Scheme {
    pub fn mono(ty: Type) -> Scheme {
        Scheme { type_vars: Vec::new(), cap_vars: Vec::new(), ty }
    }

    pub fn is_polymorphic(&self) -> bool {
        !self.type_vars.is_empty() || !self.cap_vars.is_empty()
    }

    pub fn instantiate(&self, targs: &[Type], cargs: &[Cap]) -> Result<Type, InstantiateError> {
        if targs.len() != self.type_vars.len() {
            return Err(InstantiateError::TypeArity { expected: self.type_vars.len(), found: targs.len() });
        }
        if cargs.len() != self.cap_vars.len() {
            return Err(InstantiateError::CapArity { expected: self.cap_vars.len(), found: cargs.len() });
        }
        Ok(self.ty.subst(&Subst::from_args(&self.type_vars, targs, &self.cap_vars, cargs))?)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polymorphic() {
            f.write_str("∀")?;
            let vars: Vec<String> = self.type_vars.iter().map(|v| format!("'{v}")).collect();
            f.write_str(&vars.join(","))?;
            if !self.cap_vars.is_empty() {
                write!(f, ";{}", self.cap_vars.join(","))?;
            }
            f.write_str(".")?;
        }
        write!(f, "{}", self.ty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(t: Type) -> Type {
        Type::Adt(QualName::new("Prelude", "sig"), vec![t], vec![])
    }

    #[test]
    fn map_scheme_renders_compactly() {
        let a = Type::Var("a".into());
        let b = Type::Var("b".into());
        let s = Scheme {
            type_vars: vec!["a".into(), "b".into()],
            cap_vars: vec![],
            ty: Type::Fun(vec![Type::Fun(vec![a.clone()], Box::new(b.clone())), sig(a)], Box::new(sig(b))),
        };
        assert_eq!(s.to_string(), "∀'a,'b.(('a)->'b, sig<'a>)->sig<'b>");
    }

    #[test]
    fn postfix_types_render() {
        let t = Type::Ref(Box::new(Type::Tuple(vec![Type::Bool, Type::int32()])));
        assert_eq!(t.to_string(), "(bool * int32) ref");
        let f = Type::Array(Box::new(Type::Fun(vec![], Box::new(Type::Unit))), Cap::var("n"));
        assert_eq!(f.to_string(), "(()->unit)[n]");
    }

    #[test]
    fn int_ranges_and_wrapping() {
        assert_eq!(IntTy::U8.wrap(256), 0);
        assert_eq!(IntTy::I8.wrap(128), -128);
        assert_eq!(IntTy::U32.wrap(-1), u32::MAX as i128);
        assert!(IntTy::I16.contains(-32768));
        assert!(!IntTy::U16.contains(-1));
    }

    #[test]
    fn instantiate_checks_arity() {
        let s = Scheme { type_vars: vec!["a".into()], cap_vars: vec![], ty: Type::Var("a".into()) };
        assert_eq!(s.instantiate(&[Type::Bool], &[]).unwrap(), Type::Bool);
        assert!(matches!(s.instantiate(&[], &[]), Err(InstantiateError::TypeArity { .. })));
        assert!(matches!(s.instantiate(&[Type::Bool], &[Cap::constant(1)]), Err(InstantiateError::CapArity { .. })));
    }
}
