//! The typed program handed to code generation and the interpreter.
//!
//! Every expression node carries its resolved [`Type`]; every use of a
//! template carries its explicit arguments.

use crate::diagnostics::Span;
use crate::frontend::ast::{BinOp, ForDirection};

use super::capacity::Cap;
use super::types::{QualName, Type};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypedProgram {
    /// Modules in dependency order.
    pub modules: Vec<TModule>,
}

impl TypedProgram {
    pub fn module(&self, name: &str) -> Option<&TModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn function(&self, q: &QualName) -> Option<&TFunction> {
        self.module(&q.module)?.functions.iter().find(|f| f.name == q.name)
    }

    pub fn let_decl(&self, q: &QualName) -> Option<&TLet> {
        self.module(&q.module)?.lets.iter().find(|l| l.name == q.name)
    }

    pub fn type_decl(&self, q: &QualName) -> Option<&TTypeDecl> {
        self.module(&q.module)?.types.iter().find(|t| t.name == q.name)
    }

    /// The program's entry point: `main : () -> unit` in the last module
    /// that defines one.
    pub fn entry(&self) -> Option<QualName> {
        self.modules.iter().rev().find_map(|m| {
            m.functions
                .iter()
                .find(|f| {
                    f.name == "main"
                        && f.params.is_empty()
                        && f.ret == Type::Unit
                        && f.type_vars.is_empty()
                        && f.cap_vars.is_empty()
                })
                .map(|f| QualName::new(&m.name, &f.name))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TModule {
    pub name: String,
    pub includes: Vec<String>,
    /// Other modules this one references, sorted by name.
    pub deps: Vec<String>,
    pub types: Vec<TTypeDecl>,
    /// Module-level lets in declaration order.
    pub lets: Vec<TLet>,
    pub functions: Vec<TFunction>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TTypeDecl {
    pub name: String,
    pub type_vars: Vec<String>,
    pub cap_vars: Vec<String>,
    pub kind: TTypeKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TTypeKind {
    Adt(Vec<TCtor>),
    Record(Vec<(String, Type)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TCtor {
    pub name: String,
    pub tag: u8,
    pub payload: Option<Type>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TLet {
    pub name: String,
    pub ty: Type,
    pub value: TExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TFunction {
    pub name: String,
    pub type_vars: Vec<String>,
    pub cap_vars: Vec<String>,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: TExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TExprKind {
    Unit,
    Bool(bool),
    Int(i128),
    Float(f64),
    Null,
    Seq(Vec<TExpr>),
    Tuple(Vec<TExpr>),
    Call(Box<TExpr>, Vec<TExpr>),
    Local(String),
    /// Module-level let or function.
    Global {
        name: QualName,
        type_args: Vec<Type>,
        cap_args: Vec<Cap>,
    },
    /// A value constructor used as a function or applied directly.
    Ctor {
        adt: QualName,
        name: String,
        tag: u8,
        type_args: Vec<Type>,
        cap_args: Vec<Cap>,
    },
    Index(Box<TExpr>, Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    If(Vec<(TExpr, TExpr)>, Box<TExpr>),
    Let(TPattern, Box<TExpr>),
    Set(TPlace, Box<TExpr>),
    SetRef(Box<TExpr>, Box<TExpr>),
    For {
        var: String,
        var_ty: Type,
        start: Box<TExpr>,
        end: Box<TExpr>,
        direction: ForDirection,
        body: Box<TExpr>,
    },
    DoWhile(Box<TExpr>, Box<TExpr>),
    While(Box<TExpr>, Box<TExpr>),
    Not(Box<TExpr>),
    BitNot(Box<TExpr>),
    Field(Box<TExpr>, String),
    Lambda {
        params: Vec<(String, Type)>,
        ret: Type,
        body: Box<TExpr>,
    },
    Case(Box<TExpr>, Vec<(TPattern, TExpr)>),
    /// Fields in source order; the record type is the node's type.
    Record(Vec<(String, TExpr)>),
    Array(Vec<TExpr>),
    Ref(Box<TExpr>),
    Deref(Box<TExpr>),
    /// `array T of e`: every element initialized to the value.
    ArrayFill(Box<TExpr>),
    /// `array T end`: default-initialized elements.
    ArrayDefault,
    Inline(String),
}

/// Target of a `set`: a mutable local followed by index and field steps.
#[derive(Clone, Debug, PartialEq)]
pub struct TPlace {
    pub root: String,
    pub root_ty: Type,
    pub path: Vec<TPlaceStep>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TPlaceStep {
    Index(TExpr),
    Field(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TPattern {
    pub kind: TPatternKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TPatternKind {
    Var { name: String, mutable: bool },
    Int(i128),
    Float(f64),
    Wildcard,
    Ctor { adt: QualName, name: String, tag: u8, inner: Option<Box<TPattern>> },
    Record(Vec<(String, TPattern)>),
    Tuple(Vec<TPattern>),
}

impl TPattern {
    pub fn bound_names(&self) -> Vec<(&str, &Type, bool)> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<(&'a str, &'a Type, bool)>) {
        match &self.kind {
            TPatternKind::Var { name, mutable } => out.push((name, &self.ty, *mutable)),
            TPatternKind::Ctor { inner: Some(p), .. } => p.collect(out),
            TPatternKind::Record(fs) => fs.iter().for_each(|(_, p)| p.collect(out)),
            TPatternKind::Tuple(ps) => ps.iter().for_each(|p| p.collect(out)),
            _ => {}
        }
    }
}

impl TExpr {
    /// Pre-order traversal over this node and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a TExpr)) {
        f(self);
        match &self.kind {
            TExprKind::Seq(es) | TExprKind::Tuple(es) | TExprKind::Array(es) => es.iter().for_each(|e| e.walk(f)),
            TExprKind::Call(c, args) => {
                c.walk(f);
                args.iter().for_each(|e| e.walk(f));
            }
            TExprKind::Index(a, b)
            | TExprKind::Binary(_, a, b)
            | TExprKind::SetRef(a, b)
            | TExprKind::DoWhile(a, b)
            | TExprKind::While(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            TExprKind::If(bs, other) => {
                for (c, b) in bs {
                    c.walk(f);
                    b.walk(f);
                }
                other.walk(f);
            }
            TExprKind::Let(_, e)
            | TExprKind::Not(e)
            | TExprKind::BitNot(e)
            | TExprKind::Field(e, _)
            | TExprKind::Ref(e)
            | TExprKind::Deref(e)
            | TExprKind::ArrayFill(e) => e.walk(f),
            TExprKind::Set(place, e) => {
                for step in &place.path {
                    if let TPlaceStep::Index(i) = step {
                        i.walk(f);
                    }
                }
                e.walk(f);
            }
            TExprKind::For { start, end, body, .. } => {
                start.walk(f);
                end.walk(f);
                body.walk(f);
            }
            TExprKind::Lambda { body, .. } => body.walk(f),
            TExprKind::Case(s, arms) => {
                s.walk(f);
                arms.iter().for_each(|(_, e)| e.walk(f));
            }
            TExprKind::Record(fs) => fs.iter().for_each(|(_, e)| e.walk(f)),
            _ => {}
        }
    }
}
