//! Runtime values.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::semantics::types::{IntTy, QualName, Subst, Type};
use crate::semantics::TExpr;

pub type Locals<'p> = Vec<(&'p str, Value<'p>)>;

#[derive(Clone, Debug)]
pub enum Value<'p> {
    Unit,
    Bool(bool),
    Int(IntTy, i128),
    Float(f32),
    Double(f64),
    Adt {
        ctor: &'p str,
        tag: u8,
        payload: Option<Box<Value<'p>>>,
    },
    /// Fields in declaration order.
    Record(Vec<(&'p str, Value<'p>)>),
    Tuple(Vec<Value<'p>>),
    Array(Vec<Value<'p>>),
    Ref(Rc<RefCell<Value<'p>>>),
    Closure(Rc<Closure<'p>>),
    /// An empty `pointer`, `ref` or function slot.
    Null,
}

#[derive(Debug)]
pub enum Closure<'p> {
    Lambda {
        params: &'p [(String, Type)],
        body: &'p TExpr,
        /// Locals copied at creation, mirroring capture by value.
        captured: Locals<'p>,
        subst: Rc<Subst>,
    },
    Function {
        name: QualName,
        subst: Rc<Subst>,
    },
    Ctor {
        name: &'p str,
        tag: u8,
    },
}

impl<'p> Value<'p> {
    pub fn int(ty: IntTy, v: i128) -> Self {
        Value::Int(ty, ty.wrap(v))
    }

    pub fn i32(v: i32) -> Self {
        Value::Int(IntTy::I32, i128::from(v))
    }

    pub fn ctor(ctor: &'p str, tag: u8, payload: Option<Value<'p>>) -> Self {
        Value::Adt { ctor, tag, payload: payload.map(Box::new) }
    }

    pub fn new_ref(v: Value<'p>) -> Self {
        Value::Ref(Rc::new(RefCell::new(v)))
    }

    pub fn as_int(&self) -> Option<i128> {
        match self {
            Value::Int(_, v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Current contents of a ref cell.
    pub fn deref(&self) -> Option<Value<'p>> {
        match self {
            Value::Ref(r) => Some(r.borrow().clone()),
            _ => None,
        }
    }

    /// Structural equality as the emitted `operator==` defines it: refs and
    /// handles compare by identity, functions never compare equal.
    pub fn equals(&self, other: &Value<'p>) -> bool {
        match (self, other) {
            (Value::Unit, Value::Unit) | (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(_, a), Value::Int(_, b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => a == b,
            (Value::Adt { tag: t1, payload: p1, .. }, Value::Adt { tag: t2, payload: p2, .. }) => {
                t1 == t2
                    && match (p1, p2) {
                        (Some(a), Some(b)) => a.equals(b),
                        (None, None) => true,
                        _ => false,
                    }
            }
            (Value::Record(a), Value::Record(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|((n1, v1), (n2, v2))| n1 == n2 && v1.equals(v2))
            }
            (Value::Tuple(a), Value::Tuple(b)) | (Value::Array(a), Value::Array(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.equals(y))
            }
            (Value::Ref(a), Value::Ref(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl PartialEq for Value<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other)
    }
}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(_, v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Double(v) => write!(f, "{v:?}"),
            Value::Adt { ctor, payload: None, .. } => write!(f, "{ctor}()"),
            Value::Adt { ctor, payload: Some(p), .. } => write!(f, "{ctor}({p})"),
            Value::Record(fs) => {
                f.write_str("{ ")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{n} = {v}")?;
                }
                f.write_str(" }")
            }
            Value::Tuple(vs) => {
                f.write_str("(")?;
                write_list(f, vs)?;
                f.write_str(")")
            }
            Value::Array(vs) => {
                f.write_str("[")?;
                write_list(f, vs)?;
                f.write_str("]")
            }
            Value::Ref(r) => write!(f, "ref {}", r.borrow()),
            Value::Closure(_) => f.write_str("<fun>"),
            Value::Null => f.write_str("null"),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, vs: &[Value<'_>]) -> fmt::Result {
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}
