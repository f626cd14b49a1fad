//! Renders an AST back to source text that re-parses to an equal tree.

use std::fmt::Write;

use crate::frontend::ast::*;

pub fn pretty_print(module: &SourceModule) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.out.push_str("module ");
    p.out.push_str(&module.name.name);
    for d in &module.decls {
        p.out.push_str("\n\n");
        p.decl(d);
    }
    p.out
}

/// Renders a single expression on one logical line.
pub fn print_expr(e: &Expr) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.expr(e, 0);
    p.out
}

pub fn print_type(t: &TypeExpr) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.ty(t);
    p.out
}

pub fn print_pattern(pat: &Pattern) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.pattern(pat);
    p.out
}

// Binding levels above the binary operator table (1..=9).
const PREC_OPEN: u8 = 0;
const PREC_PREFIX: u8 = 10;
const PREC_POSTFIX: u8 = 11;

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn comma_list<T>(&mut self, items: &[T], sep: &str, mut f: impl FnMut(&mut Self, &T)) {
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(sep);
            }
            f(self, item);
        }
    }

    fn decl(&mut self, d: &Decl) {
        match &d.kind {
            DeclKind::Open(names) => {
                self.out.push_str("open(");
                self.comma_list(names, ", ", |p, n| p.out.push_str(&n.name));
                self.out.push(')');
            }
            DeclKind::Export(names) => {
                self.out.push_str("export(");
                self.comma_list(names, ", ", |p, n| p.out.push_str(&n.name));
                self.out.push(')');
            }
            DeclKind::Include(headers) => {
                self.out.push_str("include(");
                self.comma_list(headers, ", ", |p, h| {
                    p.out.push('"');
                    p.out.push_str(&h.replace('\\', "\\\\").replace('"', "\\\""));
                    p.out.push('"');
                });
                self.out.push(')');
            }
            DeclKind::Record(r) => {
                write!(self.out, "type {}", r.name).unwrap();
                self.template_dec(r.template.as_ref());
                self.out.push_str(" = {");
                self.indent += 1;
                for (i, (f, t)) in r.fields.iter().enumerate() {
                    self.newline();
                    write!(self.out, "{f} : ").unwrap();
                    self.ty(t);
                    if i + 1 < r.fields.len() {
                        self.out.push(';');
                    }
                }
                self.indent -= 1;
                self.newline();
                self.out.push('}');
            }
            DeclKind::Adt(a) => {
                write!(self.out, "type {}", a.name).unwrap();
                self.template_dec(a.template.as_ref());
                self.out.push_str(" =");
                for (i, c) in a.ctors.iter().enumerate() {
                    self.out.push_str(if i == 0 { " " } else { " | " });
                    self.out.push_str(&c.name.name);
                    if let Some(t) = &c.payload {
                        self.out.push_str(" of ");
                        self.ty(t);
                    }
                }
            }
            DeclKind::Let(l) => {
                write!(self.out, "let {} : ", l.name).unwrap();
                self.ty(&l.ty);
                self.out.push_str(" = ");
                self.expr(&l.value, PREC_OPEN);
            }
            DeclKind::Function(f) => {
                write!(self.out, "fun {}", f.name).unwrap();
                self.template_dec(f.template.as_ref());
                self.params(&f.params);
                self.out.push_str(" : ");
                self.ty(&f.ret);
                self.out.push_str(" =");
                self.indent += 1;
                self.newline();
                self.expr(&f.body, PREC_OPEN);
                self.indent -= 1;
            }
        }
    }

    fn params(&mut self, params: &[Param]) {
        self.out.push('(');
        self.comma_list(params, ", ", |p, param| {
            write!(p.out, "{} : ", param.name).unwrap();
            p.ty(&param.ty);
        });
        self.out.push(')');
    }

    fn template_dec(&mut self, t: Option<&TemplateDec>) {
        let Some(t) = t else { return };
        self.out.push('<');
        self.comma_list(&t.type_vars, ", ", |p, v| write!(p.out, "'{v}").unwrap());
        if !t.cap_vars.is_empty() {
            self.out.push_str("; ");
            self.comma_list(&t.cap_vars, ", ", |p, v| p.out.push_str(&v.name));
        }
        self.out.push('>');
    }

    fn template_apply(&mut self, a: &TemplateApply) {
        self.out.push('<');
        self.comma_list(&a.types, ", ", |p, t| p.ty(t));
        if !a.caps.is_empty() {
            self.out.push_str("; ");
            self.comma_list(&a.caps, ", ", |p, c| p.cap(c, 0));
        }
        self.out.push('>');
    }

    fn decl_ref(&mut self, r: &DeclRef) {
        write!(self.out, "{r}").unwrap();
    }

    fn ty(&mut self, t: &TypeExpr) {
        match &t.kind {
            TypeExprKind::Named(r, apply) => {
                self.decl_ref(r);
                if let Some(a) = apply {
                    self.template_apply(a);
                }
            }
            TypeExprKind::Var(v) => write!(self.out, "'{v}").unwrap(),
            TypeExprKind::Fun(params, ret) => {
                self.out.push('(');
                self.comma_list(params, ", ", |p, t| p.ty(t));
                self.out.push_str(") -> ");
                self.ty(ret);
            }
            TypeExprKind::Array(elem, cap) => {
                self.postfix_type_base(elem);
                self.out.push('[');
                self.cap(cap, 0);
                self.out.push(']');
            }
            TypeExprKind::Ref(inner) => {
                self.postfix_type_base(inner);
                self.out.push_str(" ref");
            }
            TypeExprKind::Tuple(elems) => {
                self.out.push('(');
                self.comma_list(elems, " * ", |p, t| p.ty(t));
                self.out.push(')');
            }
        }
    }

    fn postfix_type_base(&mut self, t: &TypeExpr) {
        if matches!(t.kind, TypeExprKind::Fun(..)) {
            self.out.push('(');
            self.ty(t);
            self.out.push(')');
        } else {
            self.ty(t);
        }
    }

    fn cap(&mut self, c: &CapExpr, min_prec: u8) {
        match &c.kind {
            CapExprKind::Var(v) => self.out.push_str(&v.name),
            CapExprKind::Int(n) => write!(self.out, "{n}").unwrap(),
            CapExprKind::Binary(op, l, r) => {
                let prec = op.precedence();
                let paren = prec < min_prec;
                if paren {
                    self.out.push('(');
                }
                self.cap(l, prec);
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.cap(r, prec + 1);
                if paren {
                    self.out.push(')');
                }
            }
        }
    }

    fn expr_prec(e: &Expr) -> u8 {
        match &e.kind {
            ExprKind::Binary(op, ..) => op.precedence(),
            ExprKind::Not(_) | ExprKind::BitNot(_) | ExprKind::Deref(_) | ExprKind::Ref(_) => PREC_PREFIX,
            ExprKind::Let(..) | ExprKind::Set(..) | ExprKind::SetRef(..) | ExprKind::Lambda { .. } => PREC_OPEN,
            ExprKind::Int(v) if *v < 0 => PREC_PREFIX,
            ExprKind::Float(v) if v.is_sign_negative() => PREC_PREFIX,
            _ => PREC_POSTFIX,
        }
    }

    fn expr(&mut self, e: &Expr, min_prec: u8) {
        let paren = Self::expr_prec(e) < min_prec;
        if paren {
            self.out.push('(');
        }
        crate::deep(|| self.expr_inner(e));
        if paren {
            self.out.push(')');
        }
    }

    fn expr_inner(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Unit => self.out.push_str("()"),
            ExprKind::True => self.out.push_str("true"),
            ExprKind::False => self.out.push_str("false"),
            ExprKind::Null => self.out.push_str("null"),
            ExprKind::Int(v) => write!(self.out, "{v}").unwrap(),
            ExprKind::Float(v) => write!(self.out, "{v:?}").unwrap(),
            ExprKind::Seq(items) => {
                self.out.push('(');
                self.indent += 1;
                for (i, item) in items.iter().enumerate() {
                    self.newline();
                    self.expr(item, PREC_OPEN);
                    if i + 1 < items.len() {
                        self.out.push(';');
                    }
                }
                self.indent -= 1;
                self.newline();
                self.out.push(')');
            }
            ExprKind::Tuple(items) => {
                self.out.push('(');
                self.comma_list(items, ", ", |p, e| p.expr(e, PREC_OPEN));
                self.out.push(')');
            }
            ExprKind::Call(f, args) => {
                self.expr(f, PREC_POSTFIX);
                self.out.push('(');
                self.comma_list(args, ", ", |p, e| p.expr(e, PREC_OPEN));
                self.out.push(')');
            }
            ExprKind::TemplateRef(r, a) => {
                self.decl_ref(r);
                self.template_apply(a);
            }
            ExprKind::Index(base, idx) => {
                self.expr(base, PREC_POSTFIX);
                self.out.push('[');
                self.expr(idx, PREC_OPEN);
                self.out.push(']');
            }
            ExprKind::Binary(op, l, r) => {
                let prec = op.precedence();
                // Comparisons never chain unparenthesized, and a bare name
                // before `<` is wrapped so it cannot read as a template application.
                let left_min = if op.is_comparison() { prec + 1 } else { prec };
                let wrap_name = *op == BinOp::Lt && matches!(l.kind, ExprKind::Var(_) | ExprKind::Qualified(..));
                if wrap_name {
                    self.out.push('(');
                    self.expr_inner(l);
                    self.out.push(')');
                } else {
                    self.expr(l, left_min);
                }
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.expr(r, prec + 1);
            }
            ExprKind::If { branches, otherwise } => {
                for (i, (c, b)) in branches.iter().enumerate() {
                    self.out.push_str(if i == 0 { "if " } else { " elif " });
                    self.expr(c, PREC_OPEN);
                    self.out.push_str(" then ");
                    self.expr(b, PREC_OPEN);
                }
                self.out.push_str(" else ");
                self.expr(otherwise, PREC_OPEN);
                self.out.push_str(" end");
            }
            ExprKind::Let(p, v) => {
                self.out.push_str("let ");
                self.pattern(p);
                self.out.push_str(" = ");
                self.expr(v, PREC_OPEN);
            }
            ExprKind::Set(la, v) => {
                self.out.push_str("set ");
                self.left_assign(la);
                self.out.push_str(" = ");
                self.expr(v, PREC_OPEN);
            }
            ExprKind::SetRef(la, v) => {
                self.out.push_str("set ref ");
                self.left_assign(la);
                self.out.push_str(" = ");
                self.expr(v, PREC_OPEN);
            }
            ExprKind::For { var, ty, start, end, direction, body } => {
                write!(self.out, "for {var} : ").unwrap();
                self.ty(ty);
                self.out.push_str(" in ");
                self.expr(start, PREC_OPEN);
                self.out.push_str(match direction {
                    ForDirection::Up => " to ",
                    ForDirection::Down => " downto ",
                });
                self.expr(end, PREC_OPEN);
                self.out.push_str(" do ");
                self.expr(body, PREC_OPEN);
                self.out.push_str(" end");
            }
            ExprKind::DoWhile(body, cond) => {
                self.out.push_str("do ");
                self.expr(body, PREC_OPEN);
                self.out.push_str(" while ");
                self.expr(cond, PREC_OPEN);
                self.out.push_str(" end");
            }
            ExprKind::While(cond, body) => {
                self.out.push_str("while ");
                self.expr(cond, PREC_OPEN);
                self.out.push_str(" do ");
                self.expr(body, PREC_OPEN);
                self.out.push_str(" end");
            }
            ExprKind::Qualified(m, n) => write!(self.out, "{m}:{n}").unwrap(),
            ExprKind::Var(n) => self.out.push_str(&n.name),
            ExprKind::Not(inner) => {
                self.out.push_str("not ");
                self.expr(inner, PREC_PREFIX);
            }
            ExprKind::BitNot(inner) => {
                self.out.push_str("~~~");
                self.expr(inner, PREC_PREFIX);
            }
            ExprKind::Deref(inner) => {
                self.out.push('!');
                self.expr(inner, PREC_PREFIX);
            }
            ExprKind::Ref(inner) => {
                self.out.push_str("ref ");
                self.expr(inner, PREC_PREFIX);
            }
            ExprKind::Field(base, f) => {
                self.expr(base, PREC_POSTFIX);
                write!(self.out, ".{f}").unwrap();
            }
            ExprKind::Lambda { params, ret, body } => {
                self.out.push_str("fn ");
                self.params(params);
                self.out.push_str(" : ");
                self.ty(ret);
                self.out.push_str(" -> ");
                self.expr(body, PREC_OPEN);
            }
            ExprKind::Case(scrutinee, clauses) => {
                self.out.push_str("case ");
                self.expr(scrutinee, PREC_OPEN);
                self.out.push_str(" of");
                self.indent += 1;
                for c in clauses {
                    self.newline();
                    self.out.push_str("| ");
                    self.pattern(&c.pattern);
                    self.out.push_str(" => ");
                    self.expr(&c.body, PREC_OPEN);
                }
                self.indent -= 1;
                self.newline();
                self.out.push_str("end");
            }
            ExprKind::Record { ty, apply, fields } => {
                self.decl_ref(ty);
                if let Some(a) = apply {
                    self.template_apply(a);
                }
                self.out.push('{');
                self.comma_list(fields, "; ", |p, (f, e)| {
                    write!(p.out, "{f} = ").unwrap();
                    p.expr(e, PREC_OPEN);
                });
                self.out.push('}');
            }
            ExprKind::Array(items) => {
                self.out.push('[');
                self.comma_list(items, ", ", |p, e| p.expr(e, PREC_OPEN));
                self.out.push(']');
            }
            ExprKind::ArrayOf(t, fill) => {
                self.out.push_str("array ");
                self.ty(t);
                self.out.push_str(" of ");
                self.expr(fill, PREC_OPEN);
                self.out.push_str(" end");
            }
            ExprKind::ArrayEmpty(t) => {
                self.out.push_str("array ");
                self.ty(t);
                self.out.push_str(" end");
            }
            ExprKind::Inline(body) => write!(self.out, "#{body}#").unwrap(),
        }
    }

    fn left_assign(&mut self, la: &LeftAssign) {
        match &la.kind {
            LeftAssignKind::Var(n) => self.out.push_str(&n.name),
            LeftAssignKind::Qualified(m, n) => write!(self.out, "{m}:{n}").unwrap(),
            LeftAssignKind::Index(base, idx) => {
                self.left_assign(base);
                self.out.push('[');
                self.expr(idx, PREC_OPEN);
                self.out.push(']');
            }
            LeftAssignKind::Field(base, f) => {
                self.left_assign(base);
                write!(self.out, ".{f}").unwrap();
            }
        }
    }

    fn pattern(&mut self, pat: &Pattern) {
        match &pat.kind {
            PatternKind::Var { mutable, name, ty } => {
                if *mutable {
                    self.out.push_str("mutable ");
                }
                self.out.push_str(&name.name);
                if let Some(t) = ty {
                    self.out.push_str(" : ");
                    self.ty(t);
                }
            }
            PatternKind::Int(v) => write!(self.out, "{v}").unwrap(),
            PatternKind::Float(v) => write!(self.out, "{v:?}").unwrap(),
            PatternKind::Wildcard => self.out.push('_'),
            PatternKind::Ctor { ctor, apply, inner } => {
                self.decl_ref(ctor);
                if let Some(a) = apply {
                    self.template_apply(a);
                }
                self.out.push('(');
                if let Some(p) = inner {
                    self.pattern(p);
                }
                self.out.push(')');
            }
            PatternKind::Record { ty, fields } => {
                self.ty(ty);
                self.out.push('{');
                self.comma_list(fields, ", ", |p, (f, pat)| {
                    write!(p.out, "{f} = ").unwrap();
                    p.pattern(pat);
                });
                self.out.push('}');
            }
            PatternKind::Tuple(items) => {
                self.out.push('(');
                self.comma_list(items, ", ", |p, pat| p.pattern(pat));
                self.out.push(')');
            }
        }
    }
}
