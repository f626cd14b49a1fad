//! Expression lowering.

use crate::frontend::ast::{BinOp, ForDirection};
use crate::semantics::types::{QualName, Type};
use crate::semantics::{Cap, TExpr, TExprKind, TPattern, TPatternKind, TPlace, TPlaceStep};

use super::{ctype, indent, Emitter};

/// Locals visible at the point of emission, one frame per C++ block, plus
/// the indentation of the line the expression starts on.
#[derive(Clone, Debug)]
pub(crate) struct Scope {
    ind: usize,
    /// False while emitting a namespace-scope initializer, where lambdas
    /// may not have a capture default.
    local: bool,
    frames: Vec<Vec<String>>,
}

impl Scope {
    pub(crate) fn global() -> Scope {
        Scope { ind: 0, local: false, frames: vec![Vec::new()] }
    }

    pub(crate) fn local(ind: usize) -> Scope {
        Scope { ind, local: true, frames: vec![Vec::new()] }
    }

    pub(crate) fn push(&mut self) {
        self.frames.push(Vec::new());
    }

    pub(crate) fn pop(&mut self) {
        self.frames.pop();
    }

    pub(crate) fn declare(&mut self, name: &str) {
        self.frames.last_mut().expect("scope has a frame").push(name.to_string());
    }

    fn visible(&self, name: &str) -> bool {
        self.frames.iter().flatten().any(|n| n == name)
    }

    fn in_block(&self, name: &str) -> bool {
        self.frames.last().is_some_and(|f| f.iter().any(|n| n == name))
    }

    fn by_ref(&self) -> &'static str {
        if self.local {
            "[&]"
        } else {
            "[]"
        }
    }

    fn by_value(&self) -> &'static str {
        if self.local {
            "[=]"
        } else {
            "[]"
        }
    }
}

/// `(([&]() -> R { lines })())` with the closing brace at `base`.
fn iife(capture: &str, ret: &str, lines: &[String], base: usize) -> String {
    format!("(({capture}() -> {ret} {{\n{}\n{}}})())", lines.join("\n"), indent(base))
}

fn qualified(q: &QualName, type_args: &[Type], cap_args: &[Cap]) -> String {
    let mut args: Vec<String> = type_args.iter().map(ctype).collect();
    args.extend(cap_args.iter().map(Cap::render));
    if args.is_empty() {
        format!("{}::{}", q.module, q.name)
    } else {
        format!("{}::{}<{}>", q.module, q.name, args.join(", "))
    }
}

/// Integer types narrower than 32 bits; C++ promotes their arithmetic to
/// `int`, so results are cast back.
fn narrow(t: &Type) -> bool {
    matches!(t, Type::Int(i) if i.bits() < 32)
}

fn int_lit(v: i128, ty: &Type) -> String {
    if (-32768..=32767).contains(&v) {
        if v < 0 {
            format!("({v})")
        } else {
            v.to_string()
        }
    } else {
        format!("(({}) {v})", ctype(ty))
    }
}

fn float_lit(v: f64, ty: &Type) -> String {
    let mut s = format!("{v:?}");
    if *ty == Type::Float {
        s.push('f');
    }
    if v.is_sign_negative() {
        format!("({s})")
    } else {
        s
    }
}

fn op_text(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => "%",
        BinOp::And => "&&",
        BinOp::Or => "||",
        BinOp::BitAnd => "&",
        BinOp::BitOr => "|",
        BinOp::Shl => "<<",
        BinOp::Shr => ">>",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::Eq => "==",
        BinOp::Ne => "!=",
    }
}

/// Condition under which a value at `path` matches `p`.
fn test(p: &TPattern, path: &str) -> String {
    match &p.kind {
        TPatternKind::Var { .. } | TPatternKind::Wildcard => "true".into(),
        TPatternKind::Int(v) => format!("(({path}) == {})", int_lit(*v, &p.ty)),
        TPatternKind::Float(v) => format!("(({path}) == {})", float_lit(*v, &p.ty)),
        TPatternKind::Ctor { name, tag, inner, .. } => {
            let inner = match inner {
                Some(q) => test(q, &format!("({path}).{name}")),
                None => "true".into(),
            };
            format!("((({path}).tag == {tag}) && {inner})")
        }
        TPatternKind::Tuple(ps) => {
            let parts: Vec<String> =
                ps.iter().enumerate().map(|(i, q)| test(q, &format!("({path}).e{}", i + 1))).collect();
            format!("({})", parts.join(" && "))
        }
        TPatternKind::Record(fs) => {
            let parts: Vec<String> = fs.iter().map(|(f, q)| test(q, &format!("({path}).{f}"))).collect();
            if parts.is_empty() {
                "true".into()
            } else {
                format!("({})", parts.join(" && "))
            }
        }
    }
}

/// True when the pattern's shape alone guarantees a match.
fn irrefutable(p: &TPattern) -> bool {
    match &p.kind {
        TPatternKind::Var { .. } | TPatternKind::Wildcard => true,
        TPatternKind::Tuple(ps) => ps.iter().all(irrefutable),
        TPatternKind::Record(fs) => fs.iter().all(|(_, q)| irrefutable(q)),
        _ => false,
    }
}

/// `(name, type, path)` for every variable the pattern binds.
fn bindings<'a>(p: &'a TPattern, path: &str, out: &mut Vec<(&'a str, &'a Type, String)>) {
    match &p.kind {
        TPatternKind::Var { name, .. } => out.push((name, &p.ty, path.to_string())),
        TPatternKind::Ctor { name, inner: Some(q), .. } => bindings(q, &format!("({path}).{name}"), out),
        TPatternKind::Tuple(ps) => {
            for (i, q) in ps.iter().enumerate() {
                bindings(q, &format!("({path}).e{}", i + 1), out);
            }
        }
        TPatternKind::Record(fs) => {
            for (f, q) in fs {
                bindings(q, &format!("({path}).{f}"), out);
            }
        }
        _ => {}
    }
}

impl Emitter {
    pub(crate) fn expr(&mut self, e: &TExpr, sc: &mut Scope) -> String {
        crate::deep(|| self.expr_inner(e, sc))
    }

    /// Emits `e` as if it started on a line indented `ind` levels, in a
    /// block-local context.
    fn expr_at(&mut self, e: &TExpr, sc: &mut Scope, ind: usize) -> String {
        let saved = (sc.ind, sc.local);
        sc.ind = ind;
        sc.local = true;
        let s = self.expr(e, sc);
        (sc.ind, sc.local) = saved;
        s
    }

    fn expr_inner(&mut self, e: &TExpr, sc: &mut Scope) -> String {
        match &e.kind {
            TExprKind::Unit => "Prelude::unit()".into(),
            TExprKind::Bool(b) => b.to_string(),
            TExprKind::Int(v) => int_lit(*v, &e.ty),
            TExprKind::Float(v) => float_lit(*v, &e.ty),
            TExprKind::Null => "juniper::shared_ptr<void>(nullptr)".into(),
            TExprKind::Seq(es) => self.seq(es, &e.ty, sc),
            TExprKind::Let(..) => self.seq(std::slice::from_ref(e), &e.ty, sc),
            TExprKind::Tuple(es) => {
                let parts: Vec<String> = es.iter().map(|x| self.expr(x, sc)).collect();
                format!("({}{{{}}})", ctype(&e.ty), parts.join(", "))
            }
            TExprKind::Call(f, args) => {
                let f = self.expr(f, sc);
                let args: Vec<String> = args.iter().map(|x| self.expr(x, sc)).collect();
                format!("{f}({})", args.join(", "))
            }
            TExprKind::Local(n) => n.clone(),
            TExprKind::Global { name, type_args, cap_args } => qualified(name, type_args, cap_args),
            TExprKind::Ctor { adt, name, type_args, cap_args, .. } => {
                qualified(&QualName::new(&adt.module, name), type_args, cap_args)
            }
            TExprKind::Index(a, i) => {
                let a = self.expr(a, sc);
                let i = self.expr(i, sc);
                format!("(({a})[{i}])")
            }
            TExprKind::Binary(op, l, r) => {
                let l = self.expr(l, sc);
                let r = self.expr(r, sc);
                let s = format!("({l} {} {r})", op_text(*op));
                if narrow(&e.ty) {
                    format!("(({}) {s})", ctype(&e.ty))
                } else {
                    s
                }
            }
            TExprKind::If(branches, other) => {
                let mut parts = Vec::new();
                for (c, b) in branches {
                    parts.push((self.expr(c, sc), self.expr(b, sc)));
                }
                let mut out = self.expr(other, sc);
                for (c, b) in parts.into_iter().rev() {
                    out = format!("({c} ? {b} : {out})");
                }
                out
            }
            TExprKind::Set(place, v) => {
                let target = self.place(place, sc);
                let v = self.expr(v, sc);
                format!("({target} = {v})")
            }
            TExprKind::SetRef(r, v) => {
                let r = self.expr(r, sc);
                let v = self.expr(v, sc);
                format!("(*(({r}).get()) = {v})")
            }
            TExprKind::For { var, var_ty, start, end, direction, body } => {
                self.for_loop(var, var_ty, start, end, *direction, body, sc)
            }
            TExprKind::DoWhile(body, cond) => {
                let base = sc.ind;
                let pad = indent(base + 1);
                let b = self.expr_at(body, sc, base + 2);
                let c = self.expr_at(cond, sc, base + 1);
                let lines = vec![
                    format!("{pad}do {{"),
                    format!("{pad}    {b};"),
                    format!("{pad}}} while ({c});"),
                    format!("{pad}return {{}};"),
                ];
                iife(sc.by_ref(), "Prelude::unit", &lines, base)
            }
            TExprKind::While(cond, body) => {
                let base = sc.ind;
                let pad = indent(base + 1);
                let c = self.expr_at(cond, sc, base + 1);
                let b = self.expr_at(body, sc, base + 2);
                let lines = vec![
                    format!("{pad}while ({c}) {{"),
                    format!("{pad}    {b};"),
                    format!("{pad}}}"),
                    format!("{pad}return {{}};"),
                ];
                iife(sc.by_ref(), "Prelude::unit", &lines, base)
            }
            TExprKind::Not(x) => format!("(!({}))", self.expr(x, sc)),
            TExprKind::BitNot(x) => {
                let s = format!("(~({}))", self.expr(x, sc));
                if narrow(&e.ty) {
                    format!("(({}) {s})", ctype(&e.ty))
                } else {
                    s
                }
            }
            TExprKind::Field(x, f) => format!("(({}).{f})", self.expr(x, sc)),
            TExprKind::Lambda { params, ret, body } => {
                let capture = sc.by_value();
                let base = sc.ind;
                sc.push();
                for (p, _) in params {
                    sc.declare(p);
                }
                let b = self.expr_at(body, sc, base + 1);
                sc.pop();
                let ps: Vec<String> = params.iter().map(|(n, t)| format!("{} {n}", ctype(t))).collect();
                let sig: Vec<String> = params.iter().map(|(_, t)| ctype(t)).collect();
                let r = ctype(ret);
                format!(
                    "juniper::function<{r}({})>({capture}({}) -> {r} {{\n{}return {b};\n{}}})",
                    sig.join(", "),
                    ps.join(", "),
                    indent(base + 1),
                    indent(base)
                )
            }
            TExprKind::Case(s, arms) => self.case(s, arms, &e.ty, sc),
            TExprKind::Record(fields) => {
                let base = sc.ind;
                let pad = indent(base + 1);
                let t = ctype(&e.ty);
                let tmp = self.fresh();
                let mut lines = vec![format!("{pad}{t} {tmp};")];
                for (f, x) in fields {
                    let v = self.expr_at(x, sc, base + 1);
                    lines.push(format!("{pad}{tmp}.{f} = {v};"));
                }
                lines.push(format!("{pad}return {tmp};"));
                iife(sc.by_ref(), &t, &lines, base)
            }
            TExprKind::Array(es) => {
                let parts: Vec<String> = es.iter().map(|x| self.expr(x, sc)).collect();
                format!("({}{{ {{ {} }} }})", ctype(&e.ty), parts.join(", "))
            }
            TExprKind::Ref(x) => {
                let inner = match &e.ty {
                    Type::Ref(t) => ctype(t),
                    t => ctype(t),
                };
                format!("(juniper::shared_ptr<{inner}>(new {inner}({})))", self.expr(x, sc))
            }
            TExprKind::Deref(x) => format!("(*(({}).get()))", self.expr(x, sc)),
            TExprKind::ArrayFill(x) => {
                let base = sc.ind;
                let pad = indent(base + 1);
                let t = ctype(&e.ty);
                let (elem, len) = match &e.ty {
                    Type::Array(el, c) => (ctype(el), c.render()),
                    other => (ctype(other), "0".into()),
                };
                let arr = self.fresh();
                let val = self.fresh();
                let i = self.fresh();
                let v = self.expr_at(x, sc, base + 1);
                let lines = vec![
                    format!("{pad}{t} {arr};"),
                    format!("{pad}{elem} {val} = {v};"),
                    format!("{pad}for (uint32_t {i} = 0; {i} < {len}; {i}++) {{"),
                    format!("{pad}    {arr}[{i}] = {val};"),
                    format!("{pad}}}"),
                    format!("{pad}return {arr};"),
                ];
                iife(sc.by_ref(), &t, &lines, base)
            }
            TExprKind::ArrayDefault => format!("({}())", ctype(&e.ty)),
            TExprKind::Inline(code) => self.inline(code, sc),
        }
    }

    pub(crate) fn inline(&mut self, code: &str, sc: &Scope) -> String {
        let pad = indent(sc.ind + 1);
        let mut lines = Vec::new();
        if !code.is_empty() {
            lines.push(format!("{pad}{code}"));
        }
        lines.push(format!("{pad}return {{}};"));
        iife(sc.by_ref(), "Prelude::unit", &lines, sc.ind)
    }

    fn place(&mut self, p: &TPlace, sc: &mut Scope) -> String {
        let mut out = p.root.clone();
        for step in &p.path {
            match step {
                TPlaceStep::Index(i) => {
                    let i = self.expr(i, sc);
                    out = format!("{out}[{i}]");
                }
                TPlaceStep::Field(f) => out = format!("{out}.{f}"),
            }
        }
        out
    }

    fn seq(&mut self, es: &[TExpr], ty: &Type, sc: &mut Scope) -> String {
        match es {
            [] => return "Prelude::unit()".into(),
            [only] if !matches!(only.kind, TExprKind::Let(..)) => return self.expr(only, sc),
            _ => {}
        }
        let capture = sc.by_ref();
        let base = sc.ind;
        sc.push();
        let mut lines = Vec::new();
        let mut opened = 0;
        for (i, x) in es.iter().enumerate() {
            let last = i + 1 == es.len();
            let ind = base + 1 + opened;
            match &x.kind {
                TExprKind::Let(p, v) => {
                    let (stmts, result, open) = self.let_stmts(p, v, sc, ind);
                    lines.extend(stmts);
                    if open {
                        opened += 1;
                    }
                    if last {
                        lines.push(format!("{}return {result};", indent(base + 1 + opened)));
                    }
                }
                _ => {
                    let s = self.expr_at(x, sc, ind);
                    let pad = indent(ind);
                    lines.push(if last { format!("{pad}return {s};") } else { format!("{pad}{s};") });
                }
            }
        }
        for k in (0..opened).rev() {
            lines.push(format!("{}}}", indent(base + 1 + k)));
            sc.pop();
        }
        sc.pop();
        iife(capture, &ctype(ty), &lines, base)
    }

    /// Statements binding a `let` pattern at indentation `ind`. Returns the
    /// lines, the expression naming the bound value, and whether a nested
    /// block was opened (to redeclare a name already bound in this block).
    fn let_stmts(&mut self, p: &TPattern, v: &TExpr, sc: &mut Scope, ind: usize) -> (Vec<String>, String, bool) {
        let value = self.expr_at(v, sc, ind);
        let pad = indent(ind);
        if let TPatternKind::Var { name, .. } = &p.kind {
            if !sc.visible(name) {
                sc.declare(name);
                return (vec![format!("{pad}{} {name} = {value};", ctype(&p.ty))], name.clone(), false);
            }
        }
        // Going through a temporary keeps `let x = x + 1` from reading the
        // new, uninitialized `x`.
        let tmp = self.fresh();
        let mut lines = vec![format!("{pad}{} {tmp} = {value};", ctype(&v.ty))];
        if !irrefutable(p) {
            lines.push(format!("{pad}if (!{}) {{", test(p, &tmp)));
            lines.push(format!("{pad}    juniper::quit<Prelude::unit>();"));
            lines.push(format!("{pad}}}"));
        }
        let mut binds = Vec::new();
        bindings(p, &tmp, &mut binds);
        let open = binds.iter().any(|(n, _, _)| sc.in_block(n));
        let mut bpad = pad.clone();
        if open {
            lines.push(format!("{pad}{{"));
            sc.push();
            bpad = indent(ind + 1);
        }
        for (name, ty, path) in binds {
            lines.push(format!("{bpad}{} {name} = {path};", ctype(ty)));
            sc.declare(name);
        }
        (lines, tmp, open)
    }

    fn case(&mut self, s: &TExpr, arms: &[(TPattern, TExpr)], ty: &Type, sc: &mut Scope) -> String {
        let capture = sc.by_ref();
        let base = sc.ind;
        let pad1 = indent(base + 1);
        let pad2 = indent(base + 2);
        let r = ctype(ty);
        let tmp = self.fresh();
        let scrut = self.expr_at(s, sc, base + 1);
        let mut arm_texts = Vec::new();
        for (p, body) in arms {
            let cond = test(p, &tmp);
            sc.push();
            let mut lines = Vec::new();
            let mut binds = Vec::new();
            bindings(p, &tmp, &mut binds);
            for (name, _, path) in binds {
                lines.push(format!("{}auto {name} = {path};", indent(base + 3)));
                sc.declare(name);
            }
            let b = self.expr_at(body, sc, base + 3);
            lines.push(format!("{}return {b};", indent(base + 3)));
            sc.pop();
            arm_texts.push((cond, iife("[&]", &r, &lines, base + 2)));
        }
        let mut chain = String::from("return ");
        for (i, (cond, arm)) in arm_texts.iter().enumerate() {
            if i > 0 {
                chain.push_str(&format!("\n{pad1}: "));
            }
            chain.push_str(&format!("({cond} ?\n{pad2}{arm}"));
        }
        if arm_texts.is_empty() {
            chain.push_str(&format!("juniper::quit<{r}>();"));
        } else {
            chain.push_str(&format!("\n{pad1}: juniper::quit<{r}>(){};", ")".repeat(arm_texts.len())));
        }
        let lines = vec![format!("{pad1}{} {tmp} = {scrut};", ctype(&s.ty)), format!("{pad1}{chain}")];
        iife(capture, &r, &lines, base)
    }

    #[allow(clippy::too_many_arguments)]
    fn for_loop(
        &mut self,
        var: &str,
        var_ty: &Type,
        start: &TExpr,
        end: &TExpr,
        direction: ForDirection,
        body: &TExpr,
        sc: &mut Scope,
    ) -> String {
        let base = sc.ind;
        let pad = indent(base + 1);
        let t = ctype(var_ty);
        let from = self.fresh();
        let to = self.fresh();
        let s = self.expr_at(start, sc, base + 1);
        let e = self.expr_at(end, sc, base + 1);
        let (cmp, step) = match direction {
            ForDirection::Up => ("<=", "++"),
            ForDirection::Down => (">=", "--"),
        };
        sc.push();
        sc.declare(var);
        let b = self.expr_at(body, sc, base + 3);
        sc.pop();
        // The bound check sits after the body so the last value of the
        // range never steps past the type's limit.
        let lines = vec![
            format!("{pad}{t} {from} = {s};"),
            format!("{pad}{t} {to} = {e};"),
            format!("{pad}if ({from} {cmp} {to}) {{"),
            format!("{pad}    for ({t} {var} = {from}; ; {var}{step}) {{"),
            format!("{pad}        {b};"),
            format!("{pad}        if ({var} == {to}) {{"),
            format!("{pad}            break;"),
            format!("{pad}        }}"),
            format!("{pad}    }}"),
            format!("{pad}}}"),
            format!("{pad}return {{}};"),
        ];
        iife(sc.by_ref(), "Prelude::unit", &lines, base)
    }
}
