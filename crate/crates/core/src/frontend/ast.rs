//! Parse tree for one source file.
//!
//! Every node carries a [`Span`], but equality on nodes compares structure
//! only: two trees parsed from differently formatted sources compare equal.

use std::fmt;

use crate::diagnostics::Span;

macro_rules! eq_ignoring_span {
    ($ty:ident { $($field:ident),* }) => {
        impl PartialEq for $ty {
            fn eq(&self, other: &Self) -> bool {
                true $(&& self.$field == other.$field)*
            }
        }
    };
}

#[derive(Clone, Debug)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}
eq_ignoring_span!(Ident { name });

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug)]
pub struct SourceModule {
    pub name: Ident,
    pub decls: Vec<Decl>,
    pub span: Span,
}
eq_ignoring_span!(SourceModule { name, decls });

#[derive(Clone, Debug)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}
eq_ignoring_span!(Decl { kind });

#[derive(Clone, Debug, PartialEq)]
pub enum DeclKind {
    Open(Vec<Ident>),
    Export(Vec<Ident>),
    /// Header strings with their quotes removed and escapes resolved, e.g.
    /// `<FastLED.h>` or `"local.h"`.
    Include(Vec<String>),
    Record(RecordDecl),
    Adt(AdtDecl),
    Let(LetDecl),
    Function(FunDecl),
}

/// `<'a, 'b; n, m>`. Type variable names are stored without the quote.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TemplateDec {
    pub type_vars: Vec<Ident>,
    pub cap_vars: Vec<Ident>,
}

impl TemplateDec {
    pub fn is_empty(&self) -> bool {
        self.type_vars.is_empty() && self.cap_vars.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordDecl {
    pub name: Ident,
    pub template: Option<TemplateDec>,
    pub fields: Vec<(Ident, TypeExpr)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdtDecl {
    pub name: Ident,
    pub template: Option<TemplateDec>,
    pub ctors: Vec<ValueCtor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueCtor {
    pub name: Ident,
    pub payload: Option<TypeExpr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LetDecl {
    pub name: Ident,
    pub ty: TypeExpr,
    pub value: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunDecl {
    pub name: Ident,
    pub template: Option<TemplateDec>,
    pub params: Vec<Param>,
    pub ret: TypeExpr,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub ty: TypeExpr,
}

/// A name that may carry a module qualifier, `x` or `Mod:x`.
#[derive(Clone, Debug, PartialEq)]
pub enum DeclRef {
    Local(Ident),
    Qualified(Ident, Ident),
}

impl DeclRef {
    pub fn name(&self) -> &Ident {
        match self {
            DeclRef::Local(n) | DeclRef::Qualified(_, n) => n,
        }
    }

    pub fn module(&self) -> Option<&Ident> {
        match self {
            DeclRef::Local(_) => None,
            DeclRef::Qualified(m, _) => Some(m),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            DeclRef::Local(n) => n.span.clone(),
            DeclRef::Qualified(m, n) => m.span.to(&n.span),
        }
    }
}

impl fmt::Display for DeclRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeclRef::Local(n) => write!(f, "{n}"),
            DeclRef::Qualified(m, n) => write!(f, "{m}:{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TemplateApply {
    pub types: Vec<TypeExpr>,
    pub caps: Vec<CapExpr>,
}

#[derive(Clone, Debug)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: Span,
}
eq_ignoring_span!(TypeExpr { kind });

#[derive(Clone, Debug, PartialEq)]
pub enum TypeExprKind {
    Named(DeclRef, Option<TemplateApply>),
    Var(Ident),
    Fun(Vec<TypeExpr>, Box<TypeExpr>),
    Array(Box<TypeExpr>, CapExpr),
    Ref(Box<TypeExpr>),
    Tuple(Vec<TypeExpr>),
}

#[derive(Clone, Debug)]
pub struct CapExpr {
    pub kind: CapExprKind,
    pub span: Span,
}
eq_ignoring_span!(CapExpr { kind });

#[derive(Clone, Debug, PartialEq)]
pub enum CapExprKind {
    Var(Ident),
    Int(u64),
    Binary(CapOp, Box<CapExpr>, Box<CapExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CapOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl CapOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CapOp::Add => "+",
            CapOp::Sub => "-",
            CapOp::Mul => "*",
            CapOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            CapOp::Add | CapOp::Sub => 1,
            CapOp::Mul | CapOp::Div => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    BitAnd,
    BitOr,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub const ALL: [BinOp; 17] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::And,
        BinOp::Or,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::Shl,
        BinOp::Shr,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::BitAnd => "&&&",
            BinOp::BitOr => "|||",
            BinOp::Shl => "<<<",
            BinOp::Shr => ">>>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Binding strength; larger binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::Div | BinOp::Mod => 9,
            BinOp::Add | BinOp::Sub => 8,
            BinOp::Shl | BinOp::Shr => 7,
            BinOp::BitAnd => 6,
            BinOp::BitOr => 5,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::And => 2,
            BinOp::Or => 1,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}
eq_ignoring_span!(Expr { kind });

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForDirection {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Unit,
    True,
    False,
    Int(i128),
    Float(f64),
    Null,
    /// `(e1; e2; ...)` with at least two elements. A single parenthesized
    /// expression is plain grouping and leaves no node.
    Seq(Vec<Expr>),
    Tuple(Vec<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    TemplateRef(DeclRef, TemplateApply),
    Index(Box<Expr>, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If {
        branches: Vec<(Expr, Expr)>,
        otherwise: Box<Expr>,
    },
    Let(Box<Pattern>, Box<Expr>),
    Set(LeftAssign, Box<Expr>),
    SetRef(LeftAssign, Box<Expr>),
    For {
        var: Ident,
        ty: TypeExpr,
        start: Box<Expr>,
        end: Box<Expr>,
        direction: ForDirection,
        body: Box<Expr>,
    },
    DoWhile(Box<Expr>, Box<Expr>),
    While(Box<Expr>, Box<Expr>),
    Qualified(Ident, Ident),
    Var(Ident),
    Not(Box<Expr>),
    BitNot(Box<Expr>),
    Field(Box<Expr>, Ident),
    Lambda {
        params: Vec<Param>,
        ret: TypeExpr,
        body: Box<Expr>,
    },
    Case(Box<Expr>, Vec<CaseClause>),
    Record {
        ty: DeclRef,
        apply: Option<TemplateApply>,
        fields: Vec<(Ident, Expr)>,
    },
    Array(Vec<Expr>),
    Ref(Box<Expr>),
    Deref(Box<Expr>),
    ArrayOf(TypeExpr, Box<Expr>),
    ArrayEmpty(TypeExpr),
    /// Body of `#...#`, without delimiters.
    Inline(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseClause {
    pub pattern: Pattern,
    pub body: Expr,
}

#[derive(Clone, Debug)]
pub struct LeftAssign {
    pub kind: LeftAssignKind,
    pub span: Span,
}
eq_ignoring_span!(LeftAssign { kind });

#[derive(Clone, Debug, PartialEq)]
pub enum LeftAssignKind {
    Var(Ident),
    Qualified(Ident, Ident),
    Index(Box<LeftAssign>, Box<Expr>),
    Field(Box<LeftAssign>, Ident),
}

#[derive(Clone, Debug)]
pub struct Pattern {
    pub kind: PatternKind,
    pub span: Span,
}
eq_ignoring_span!(Pattern { kind });

#[derive(Clone, Debug, PartialEq)]
pub enum PatternKind {
    Var {
        mutable: bool,
        name: Ident,
        ty: Option<TypeExpr>,
    },
    Int(i128),
    Float(f64),
    Wildcard,
    /// `c(p)`, or `c()` for a nullary constructor.
    Ctor {
        ctor: DeclRef,
        apply: Option<TemplateApply>,
        inner: Option<Box<Pattern>>,
    },
    Record {
        ty: TypeExpr,
        fields: Vec<(Ident, Pattern)>,
    },
    Tuple(Vec<Pattern>),
}

impl Pattern {
    /// Names bound by the pattern, in left-to-right order.
    pub fn bound_names(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match &self.kind {
            PatternKind::Var { name, .. } => out.push(name),
            PatternKind::Ctor { inner: Some(p), .. } => p.collect_names(out),
            PatternKind::Record { fields, .. } => fields.iter().for_each(|(_, p)| p.collect_names(out)),
            PatternKind::Tuple(ps) => ps.iter().for_each(|p| p.collect_names(out)),
            _ => {}
        }
    }
}
