//! Which grammar alternatives a parsed module exercises.
//!
//! Each alternative of the appendix grammar has a stable label such as
//! `expr.while` or `pattern.record`. Corpus tests union the labels over every
//! file and compare against [`PRODUCTIONS`].

use std::collections::BTreeSet;

use super::ast::*;

/// Every grammar alternative, one label each.
pub const PRODUCTIONS: &[&str] = &[
    "module",
    "decl.open",
    "decl.export",
    "decl.include",
    "decl.record",
    "decl.adt",
    "decl.let",
    "decl.function",
    "template-dec.type-vars",
    "template-dec.cap-vars",
    "template-apply.types",
    "template-apply.caps",
    "value-ctor.nullary",
    "value-ctor.payload",
    "decl-ref.id",
    "decl-ref.qualified",
    "ty.named",
    "ty.fun",
    "ty.array",
    "ty.ref",
    "ty.tuple",
    "cap.id",
    "cap.int",
    "cap.op.+",
    "cap.op.-",
    "cap.op.*",
    "cap.op./",
    "expr.unit",
    "expr.true",
    "expr.false",
    "expr.number",
    "expr.seq",
    "expr.tuple",
    "expr.call",
    "expr.template-ref",
    "expr.index",
    "expr.binary",
    "expr.if",
    "expr.elif",
    "expr.let",
    "expr.set",
    "expr.set-ref",
    "expr.for-to",
    "expr.for-downto",
    "expr.do-while",
    "expr.while",
    "expr.qualified",
    "expr.id",
    "expr.not",
    "expr.bitnot",
    "expr.field",
    "expr.fn",
    "expr.case",
    "expr.record",
    "expr.array",
    "expr.ref",
    "expr.deref",
    "expr.array-of",
    "expr.array-empty",
    "expr.inline",
    "binop.+",
    "binop.-",
    "binop.*",
    "binop./",
    "binop.mod",
    "binop.and",
    "binop.or",
    "binop.&&&",
    "binop.|||",
    "binop.>=",
    "binop.<=",
    "binop.>",
    "binop.<",
    "binop.==",
    "binop.!=",
    "binop.<<<",
    "binop.>>>",
    "left-assign.id",
    "left-assign.qualified",
    "left-assign.index",
    "left-assign.field",
    "pattern.var",
    "pattern.var-mutable",
    "pattern.var-typed",
    "pattern.int",
    "pattern.float",
    "pattern.wildcard",
    "pattern.ctor",
    "pattern.record",
    "pattern.tuple",
];

/// Labels of the alternatives `module` uses.
pub fn productions(module: &SourceModule) -> BTreeSet<&'static str> {
    let mut c = Collector::default();
    c.hit("module");
    for d in &module.decls {
        c.decl(d);
    }
    c.out
}

#[derive(Default)]
struct Collector {
    out: BTreeSet<&'static str>,
}

impl Collector {
    fn hit(&mut self, label: &'static str) {
        self.out.insert(label);
    }

    fn decl(&mut self, d: &Decl) {
        match &d.kind {
            DeclKind::Open(_) => self.hit("decl.open"),
            DeclKind::Export(_) => self.hit("decl.export"),
            DeclKind::Include(_) => self.hit("decl.include"),
            DeclKind::Record(r) => {
                self.hit("decl.record");
                self.template_dec(r.template.as_ref());
                r.fields.iter().for_each(|(_, t)| self.ty(t));
            }
            DeclKind::Adt(a) => {
                self.hit("decl.adt");
                self.template_dec(a.template.as_ref());
                for c in &a.ctors {
                    match &c.payload {
                        Some(t) => {
                            self.hit("value-ctor.payload");
                            self.ty(t);
                        }
                        None => self.hit("value-ctor.nullary"),
                    }
                }
            }
            DeclKind::Let(l) => {
                self.hit("decl.let");
                self.ty(&l.ty);
                self.expr(&l.value);
            }
            DeclKind::Function(f) => {
                self.hit("decl.function");
                self.template_dec(f.template.as_ref());
                f.params.iter().for_each(|p| self.ty(&p.ty));
                self.ty(&f.ret);
                self.expr(&f.body);
            }
        }
    }

    fn template_dec(&mut self, t: Option<&TemplateDec>) {
        if let Some(t) = t {
            if !t.type_vars.is_empty() {
                self.hit("template-dec.type-vars");
            }
            if !t.cap_vars.is_empty() {
                self.hit("template-dec.cap-vars");
            }
        }
    }

    fn apply(&mut self, a: &TemplateApply) {
        if !a.types.is_empty() {
            self.hit("template-apply.types");
        }
        if !a.caps.is_empty() {
            self.hit("template-apply.caps");
        }
        a.types.iter().for_each(|t| self.ty(t));
        a.caps.iter().for_each(|c| self.cap(c));
    }

    fn decl_ref(&mut self, r: &DeclRef) {
        match r {
            DeclRef::Local(_) => self.hit("decl-ref.id"),
            DeclRef::Qualified(..) => self.hit("decl-ref.qualified"),
        }
    }

    fn ty(&mut self, t: &TypeExpr) {
        match &t.kind {
            TypeExprKind::Named(r, a) => {
                self.hit("ty.named");
                self.decl_ref(r);
                if let Some(a) = a {
                    self.apply(a);
                }
            }
            // A type variable is a named reference in the grammar's terms.
            TypeExprKind::Var(_) => self.hit("ty.named"),
            TypeExprKind::Fun(ps, r) => {
                self.hit("ty.fun");
                ps.iter().for_each(|p| self.ty(p));
                self.ty(r);
            }
            TypeExprKind::Array(e, c) => {
                self.hit("ty.array");
                self.ty(e);
                self.cap(c);
            }
            TypeExprKind::Ref(e) => {
                self.hit("ty.ref");
                self.ty(e);
            }
            TypeExprKind::Tuple(ts) => {
                self.hit("ty.tuple");
                ts.iter().for_each(|t| self.ty(t));
            }
        }
    }

    fn cap(&mut self, c: &CapExpr) {
        match &c.kind {
            CapExprKind::Var(_) => self.hit("cap.id"),
            CapExprKind::Int(_) => self.hit("cap.int"),
            CapExprKind::Binary(op, a, b) => {
                self.hit(match op {
                    CapOp::Add => "cap.op.+",
                    CapOp::Sub => "cap.op.-",
                    CapOp::Mul => "cap.op.*",
                    CapOp::Div => "cap.op./",
                });
                self.cap(a);
                self.cap(b);
            }
        }
    }

    fn left(&mut self, l: &LeftAssign) {
        match &l.kind {
            LeftAssignKind::Var(_) => self.hit("left-assign.id"),
            LeftAssignKind::Qualified(..) => self.hit("left-assign.qualified"),
            LeftAssignKind::Index(b, i) => {
                self.hit("left-assign.index");
                self.left(b);
                self.expr(i);
            }
            LeftAssignKind::Field(b, _) => {
                self.hit("left-assign.field");
                self.left(b);
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Unit => self.hit("expr.unit"),
            ExprKind::True => self.hit("expr.true"),
            ExprKind::False => self.hit("expr.false"),
            ExprKind::Int(_) | ExprKind::Float(_) => self.hit("expr.number"),
            // `null` is an extension with no grammar alternative.
            ExprKind::Null => {}
            ExprKind::Seq(es) => {
                self.hit("expr.seq");
                es.iter().for_each(|e| self.expr(e));
            }
            ExprKind::Tuple(es) => {
                self.hit("expr.tuple");
                es.iter().for_each(|e| self.expr(e));
            }
            ExprKind::Call(f, args) => {
                self.hit("expr.call");
                self.expr(f);
                args.iter().for_each(|e| self.expr(e));
            }
            ExprKind::TemplateRef(r, a) => {
                self.hit("expr.template-ref");
                self.decl_ref(r);
                self.apply(a);
            }
            ExprKind::Index(a, i) => {
                self.hit("expr.index");
                self.expr(a);
                self.expr(i);
            }
            ExprKind::Binary(op, a, b) => {
                self.hit("expr.binary");
                self.hit(binop_label(*op));
                self.expr(a);
                self.expr(b);
            }
            ExprKind::If { branches, otherwise } => {
                self.hit("expr.if");
                if branches.len() > 1 {
                    self.hit("expr.elif");
                }
                for (c, b) in branches {
                    self.expr(c);
                    self.expr(b);
                }
                self.expr(otherwise);
            }
            ExprKind::Let(p, v) => {
                self.hit("expr.let");
                self.pattern(p);
                self.expr(v);
            }
            ExprKind::Set(l, v) => {
                self.hit("expr.set");
                self.left(l);
                self.expr(v);
            }
            ExprKind::SetRef(l, v) => {
                self.hit("expr.set-ref");
                self.left(l);
                self.expr(v);
            }
            ExprKind::For { ty, start, end, direction, body, .. } => {
                self.hit(match direction {
                    ForDirection::Up => "expr.for-to",
                    ForDirection::Down => "expr.for-downto",
                });
                self.ty(ty);
                self.expr(start);
                self.expr(end);
                self.expr(body);
            }
            ExprKind::DoWhile(b, c) => {
                self.hit("expr.do-while");
                self.expr(b);
                self.expr(c);
            }
            ExprKind::While(c, b) => {
                self.hit("expr.while");
                self.expr(c);
                self.expr(b);
            }
            ExprKind::Qualified(..) => {
                self.hit("expr.qualified");
                self.hit("decl-ref.qualified");
            }
            ExprKind::Var(_) => self.hit("expr.id"),
            ExprKind::Not(e) => {
                self.hit("expr.not");
                self.expr(e);
            }
            ExprKind::BitNot(e) => {
                self.hit("expr.bitnot");
                self.expr(e);
            }
            ExprKind::Field(e, _) => {
                self.hit("expr.field");
                self.expr(e);
            }
            ExprKind::Lambda { params, ret, body } => {
                self.hit("expr.fn");
                params.iter().for_each(|p| self.ty(&p.ty));
                self.ty(ret);
                self.expr(body);
            }
            ExprKind::Case(s, clauses) => {
                self.hit("expr.case");
                self.expr(s);
                for c in clauses {
                    self.pattern(&c.pattern);
                    self.expr(&c.body);
                }
            }
            ExprKind::Record { ty, apply, fields } => {
                self.hit("expr.record");
                self.decl_ref(ty);
                if let Some(a) = apply {
                    self.apply(a);
                }
                fields.iter().for_each(|(_, e)| self.expr(e));
            }
            ExprKind::Array(es) => {
                self.hit("expr.array");
                es.iter().for_each(|e| self.expr(e));
            }
            ExprKind::Ref(e) => {
                self.hit("expr.ref");
                self.expr(e);
            }
            ExprKind::Deref(e) => {
                self.hit("expr.deref");
                self.expr(e);
            }
            ExprKind::ArrayOf(t, e) => {
                self.hit("expr.array-of");
                self.ty(t);
                self.expr(e);
            }
            ExprKind::ArrayEmpty(t) => {
                self.hit("expr.array-empty");
                self.ty(t);
            }
            ExprKind::Inline(_) => self.hit("expr.inline"),
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        match &p.kind {
            PatternKind::Var { mutable, ty, .. } => {
                self.hit("pattern.var");
                if *mutable {
                    self.hit("pattern.var-mutable");
                }
                if let Some(t) = ty {
                    self.hit("pattern.var-typed");
                    self.ty(t);
                }
            }
            PatternKind::Int(_) => self.hit("pattern.int"),
            PatternKind::Float(_) => self.hit("pattern.float"),
            PatternKind::Wildcard => self.hit("pattern.wildcard"),
            PatternKind::Ctor { ctor, apply, inner } => {
                self.hit("pattern.ctor");
                self.decl_ref(ctor);
                if let Some(a) = apply {
                    self.apply(a);
                }
                if let Some(p) = inner {
                    self.pattern(p);
                }
            }
            PatternKind::Record { ty, fields } => {
                self.hit("pattern.record");
                self.ty(ty);
                fields.iter().for_each(|(_, p)| self.pattern(p));
            }
            PatternKind::Tuple(ps) => {
                self.hit("pattern.tuple");
                ps.iter().for_each(|p| self.pattern(p));
            }
        }
    }
}

fn binop_label(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "binop.+",
        BinOp::Sub => "binop.-",
        BinOp::Mul => "binop.*",
        BinOp::Div => "binop./",
        BinOp::Mod => "binop.mod",
        BinOp::And => "binop.and",
        BinOp::Or => "binop.or",
        BinOp::BitAnd => "binop.&&&",
        BinOp::BitOr => "binop.|||",
        BinOp::Shl => "binop.<<<",
        BinOp::Shr => "binop.>>>",
        BinOp::Lt => "binop.<",
        BinOp::Le => "binop.<=",
        BinOp::Gt => "binop.>",
        BinOp::Ge => "binop.>=",
        BinOp::Eq => "binop.==",
        BinOp::Ne => "binop.!=",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    #[test]
    fn every_label_is_unique() {
        let set: BTreeSet<_> = PRODUCTIONS.iter().collect();
        assert_eq!(set.len(), PRODUCTIONS.len());
    }

    #[test]
    fn collected_labels_are_known() {
        let m = parse_source("module M\nfun f(x : int32) : int32 = (let y = x + 1; y)", "m.jun").unwrap();
        let got = productions(&m);
        for l in &got {
            assert!(PRODUCTIONS.contains(l), "{l}");
        }
        assert!(got.contains("expr.seq") && got.contains("binop.+") && got.contains("pattern.var"));
    }
}
