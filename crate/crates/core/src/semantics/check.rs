//! Declaration, expression and pattern checking against explicit
//! annotations. Produces the typed program.

use std::collections::BTreeSet;

use crate::diagnostics::{Diagnostic, Span};
use crate::frontend::ast::*;

use super::capacity::Cap;
use super::env::{
    check_user_name, resolve_program, ProgramEnv, TypeDefKind, TypeScope, TypeTarget, ValueKind, ValueTarget,
};
use super::exhaustive::{self, Universe};
use super::typed::*;
use super::types::{QualName, Subst, Type};

type CResult<T> = Result<T, Diagnostic>;

/// Result of checking a whole program. `program` is only meaningful when
/// `diagnostics` holds no errors.
#[derive(Clone, Debug)]
pub struct CheckOutput {
    pub env: ProgramEnv,
    pub program: TypedProgram,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckOutput {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// Resolves and checks every module. Each declaration reports at most its
/// first error; later declarations are still checked.
pub fn check_program(modules: &[SourceModule]) -> CheckOutput {
    let (env, mut diagnostics) = resolve_program(modules);
    let mut program = TypedProgram::default();
    if diagnostics.iter().any(Diagnostic::is_error) {
        return CheckOutput { env, program, diagnostics };
    }
    for menv in &env.modules {
        let src = &modules[menv.source_index];
        let mut tm = TModule {
            name: menv.name.clone(),
            includes: menv.includes.clone(),
            deps: menv.deps.iter().cloned().collect(),
            types: Vec::new(),
            lets: Vec::new(),
            functions: Vec::new(),
            span: src.span.clone(),
        };
        for name in &menv.type_order {
            let def = &menv.types[name];
            let kind = match &def.kind {
                TypeDefKind::Adt(cs) => TTypeKind::Adt(
                    cs.iter().map(|c| TCtor { name: c.name.clone(), tag: c.tag, payload: c.payload.clone() }).collect(),
                ),
                TypeDefKind::Record(fs) => TTypeKind::Record(fs.clone()),
            };
            tm.types.push(TTypeDecl {
                name: name.clone(),
                type_vars: def.type_vars.clone(),
                cap_vars: def.cap_vars.clone(),
                kind,
                span: def.span.clone(),
            });
        }
        for (i, d) in src.decls.iter().enumerate() {
            let mut ck = Checker::new(&env, &menv.name);
            match &d.kind {
                DeclKind::Let(l) => {
                    let Some(v) = menv.values.get(&l.name.name).filter(|v| v.decl_index == i) else { continue };
                    ck.let_index = Some(i);
                    match ck.check(&l.value, &v.scheme.ty) {
                        Ok(value) => tm.lets.push(TLet {
                            name: l.name.name.clone(),
                            ty: v.scheme.ty.clone(),
                            value,
                            span: l.name.span.clone(),
                        }),
                        Err(e) => ck.diags.push(e),
                    }
                }
                DeclKind::Function(f) => {
                    let Some(v) = menv.values.get(&f.name.name).filter(|v| v.decl_index == i) else { continue };
                    if let Some(tf) = ck.function(f, &v.scheme) {
                        tm.functions.push(tf);
                    }
                }
                _ => {}
            }
            diagnostics.append(&mut ck.diags);
        }
        program.modules.push(tm);
    }
    CheckOutput { env, program, diagnostics }
}

/// Checks one expression in the context of `module` (no locals in scope).
pub fn check_expr(
    env: &ProgramEnv,
    module: &str,
    e: &Expr,
    expected: Option<&Type>,
) -> Result<(TExpr, Vec<Diagnostic>), Diagnostic> {
    let mut ck = Checker::new(env, module);
    let te = match expected {
        Some(t) => ck.check(e, t)?,
        None => ck.infer(e, None)?,
    };
    Ok((te, ck.diags))
}

#[derive(Clone, Debug)]
struct Local {
    name: String,
    ty: Type,
    mutable: bool,
    /// Lambda nesting depth at the binding site.
    depth: u32,
}

struct Checker<'a> {
    env: &'a ProgramEnv,
    module: &'a str,
    type_vars: Vec<String>,
    cap_vars: Vec<String>,
    scopes: Vec<Vec<Local>>,
    lambda_depth: u32,
    /// Declaration index of the module-level let being checked, if any.
    let_index: Option<usize>,
    diags: Vec<Diagnostic>,
}

/// Values whose evaluation can neither fail nor touch state.
fn has_no_effect(e: &TExpr) -> bool {
    matches!(
        e.kind,
        TExprKind::Unit
            | TExprKind::Bool(_)
            | TExprKind::Int(_)
            | TExprKind::Float(_)
            | TExprKind::Null
            | TExprKind::Local(_)
            | TExprKind::Global { .. }
            | TExprKind::Ctor { .. }
            | TExprKind::Lambda { .. }
    )
}

fn mk(kind: TExprKind, ty: Type, span: &Span) -> TExpr {
    TExpr { kind, ty, span: span.clone() }
}

fn mismatch(expected: &Type, found: &Type, span: &Span) -> Diagnostic {
    if let (Type::Array(a, c1), Type::Array(b, c2)) = (expected, found) {
        if a == b {
            return Diagnostic::error(
                span.clone(),
                format!("type mismatch: array capacity `{c2}` is not provably equal to `{c1}`"),
            );
        }
    }
    Diagnostic::error(span.clone(), format!("type mismatch: expected `{expected}`, found `{found}`"))
}

/// Literals whose type is decided by context.
fn is_untyped_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) => true,
        ExprKind::BitNot(x) => is_untyped_literal(x),
        ExprKind::Binary(op, a, b)
            if !op.is_comparison() && !matches!(op, BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or) =>
        {
            is_untyped_literal(a) && is_untyped_literal(b)
        }
        _ => false,
    }
}

impl Universe for ProgramEnv {
    fn ctors(&self, ty: &Type) -> Vec<(u8, Option<Type>)> {
        let Type::Adt(q, targs, cargs) = ty else { return Vec::new() };
        let Some(def) = self.type_def(q) else { return Vec::new() };
        let s = Subst::from_args(&def.type_vars, targs, &def.cap_vars, cargs);
        def.ctors().iter().map(|c| (c.tag, c.payload.as_ref().and_then(|p| p.subst(&s).ok()))).collect()
    }

    fn fields(&self, ty: &Type) -> Vec<(String, Type)> {
        record_fields(self, ty).unwrap_or_default()
    }
}

fn record_fields(env: &ProgramEnv, ty: &Type) -> Option<Vec<(String, Type)>> {
    let Type::Record(q, targs, cargs) = ty else { return None };
    let def = env.type_def(q)?;
    let TypeDefKind::Record(fs) = &def.kind else { return None };
    let s = Subst::from_args(&def.type_vars, targs, &def.cap_vars, cargs);
    fs.iter().map(|(n, t)| t.subst(&s).ok().map(|t| (n.clone(), t))).collect()
}

impl<'a> Checker<'a> {
    fn new(env: &'a ProgramEnv, module: &'a str) -> Self {
        Checker {
            env,
            module,
            type_vars: Vec::new(),
            cap_vars: Vec::new(),
            scopes: vec![Vec::new()],
            lambda_depth: 0,
            let_index: None,
            diags: Vec::new(),
        }
    }

    fn scope(&self) -> TypeScope<'_> {
        TypeScope { module: self.module, type_vars: &self.type_vars, cap_vars: &self.cap_vars }
    }

    fn resolve_type(&self, t: &TypeExpr) -> CResult<Type> {
        self.env.resolve_type(t, self.scope())
    }

    fn function(&mut self, f: &FunDecl, scheme: &super::types::Scheme) -> Option<TFunction> {
        self.type_vars = scheme.type_vars.clone();
        self.cap_vars = scheme.cap_vars.clone();
        let Type::Fun(param_tys, ret) = &scheme.ty else { unreachable!("function scheme is a function type") };
        let result = (|| {
            let mut params = Vec::new();
            for (p, t) in f.params.iter().zip(param_tys) {
                if params.iter().any(|(n, _): &(String, Type)| *n == p.name.name) {
                    return Err(Diagnostic::error(
                        p.name.span.clone(),
                        format!("parameter `{}` declared twice", p.name.name),
                    ));
                }
                self.bind(&p.name, t.clone(), false)?;
                params.push((p.name.name.clone(), t.clone()));
            }
            let body = self.check(&f.body, ret)?;
            Ok(TFunction {
                name: f.name.name.clone(),
                type_vars: scheme.type_vars.clone(),
                cap_vars: scheme.cap_vars.clone(),
                params,
                ret: (**ret).clone(),
                body,
                span: f.name.span.clone(),
            })
        })();
        match result {
            Ok(tf) => Some(tf),
            Err(e) => {
                self.diags.push(e);
                None
            }
        }
    }

    // ---- scopes ------------------------------------------------------------

    fn bind(&mut self, id: &Ident, ty: Type, mutable: bool) -> CResult<()> {
        let mut reserved = Vec::new();
        check_user_name(id, &mut reserved);
        if let Some(d) = reserved.pop() {
            return Err(d);
        }
        if self.type_vars.contains(&id.name) || self.cap_vars.contains(&id.name) {
            return Err(Diagnostic::error(
                id.span.clone(),
                format!("local `{}` clashes with a template parameter of the same name", id.name),
            )
            .with_hint("rename the local"));
        }
        self.scopes.last_mut().unwrap().push(Local { name: id.name.clone(), ty, mutable, depth: self.lambda_depth });
        Ok(())
    }

    fn lookup_local(&self, name: &str) -> Option<&Local> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|l| l.name == name)
    }

    fn with_scope<T>(&mut self, f: impl FnOnce(&mut Self) -> CResult<T>) -> CResult<T> {
        self.scopes.push(Vec::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    // ---- expressions -------------------------------------------------------

    fn check(&mut self, e: &Expr, expected: &Type) -> CResult<TExpr> {
        let te = self.infer(e, Some(expected))?;
        if te.ty != *expected {
            return Err(mismatch(expected, &te.ty, &e.span));
        }
        Ok(te)
    }

    /// Synthesizes a type for `e`. `expected` is only a hint used by
    /// literals and constructs that pass it down; callers compare.
    fn infer(&mut self, e: &Expr, expected: Option<&Type>) -> CResult<TExpr> {
        crate::deep(|| self.infer_inner(e, expected))
    }

    fn infer_inner(&mut self, e: &Expr, expected: Option<&Type>) -> CResult<TExpr> {
        let span = &e.span;
        Ok(match &e.kind {
            ExprKind::Unit => mk(TExprKind::Unit, Type::Unit, span),
            ExprKind::True => mk(TExprKind::Bool(true), Type::Bool, span),
            ExprKind::False => mk(TExprKind::Bool(false), Type::Bool, span),
            ExprKind::Int(v) => {
                let ty = match expected {
                    Some(Type::Int(i)) => Type::Int(*i),
                    Some(t @ (Type::Float | Type::Double)) => {
                        return Err(Diagnostic::error(
                            span.clone(),
                            format!("integer literal where `{t}` is expected"),
                        )
                        .with_hint(format!("write `{v}.0`")));
                    }
                    _ => Type::int32(),
                };
                let Type::Int(i) = ty else { unreachable!() };
                if !i.contains(*v) {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("integer literal `{v}` does not fit in `{ty}`"),
                    ));
                }
                mk(TExprKind::Int(*v), ty, span)
            }
            ExprKind::Float(v) => {
                let ty = if expected == Some(&Type::Float) { Type::Float } else { Type::Double };
                mk(TExprKind::Float(*v), ty, span)
            }
            ExprKind::Null => mk(TExprKind::Null, Type::Pointer, span),
            ExprKind::Inline(code) => mk(TExprKind::Inline(code.clone()), Type::Unit, span),
            ExprKind::Seq(es) => self.with_scope(|ck| {
                let mut out = Vec::with_capacity(es.len());
                for (i, x) in es.iter().enumerate() {
                    let last = i + 1 == es.len();
                    let te = match &x.kind {
                        ExprKind::Let(p, v) => ck.check_let(p, v, &x.span)?,
                        _ if last => ck.infer(x, expected)?,
                        _ => ck.infer(x, None)?,
                    };
                    if !last && has_no_effect(&te) {
                        ck.diags.push(Diagnostic::warning(x.span.clone(), "this expression has no effect"));
                    }
                    out.push(te);
                }
                let ty = out.last().map_or(Type::Unit, |t| t.ty.clone());
                Ok(mk(TExprKind::Seq(out), ty, span))
            })?,
            ExprKind::Let(p, v) => self.with_scope(|ck| ck.check_let(p, v, span))?,
            ExprKind::Tuple(es) => {
                let elems = match expected {
                    Some(Type::Tuple(ts)) if ts.len() == es.len() => {
                        es.iter().zip(ts).map(|(x, t)| self.check(x, t)).collect::<CResult<Vec<_>>>()?
                    }
                    _ => es.iter().map(|x| self.infer(x, None)).collect::<CResult<Vec<_>>>()?,
                };
                let ty = Type::Tuple(elems.iter().map(|t| t.ty.clone()).collect());
                mk(TExprKind::Tuple(elems), ty, span)
            }
            ExprKind::Call(callee, args) => {
                let f = self.infer(callee, None)?;
                let Type::Fun(params, ret) = f.ty.clone() else {
                    return Err(Diagnostic::error(
                        callee.span.clone(),
                        format!("cannot call a value of type `{}`", f.ty),
                    ));
                };
                if params.len() != args.len() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("arity mismatch: expected {} argument(s), found {}", params.len(), args.len()),
                    ));
                }
                let targs = args.iter().zip(&params).map(|(a, p)| self.check(a, p)).collect::<CResult<Vec<_>>>()?;
                mk(TExprKind::Call(Box::new(f), targs), *ret, span)
            }
            ExprKind::Var(id) => self.var(id, span)?,
            ExprKind::Qualified(m, n) => self.global(&DeclRef::Qualified(m.clone(), n.clone()), None, span)?,
            ExprKind::TemplateRef(r, apply) => self.global(r, Some(apply), span)?,
            ExprKind::Index(base, idx) => {
                let b = self.infer(base, None)?;
                let Type::Array(elem, cap) = b.ty.clone() else {
                    return Err(Diagnostic::error(
                        base.span.clone(),
                        format!("cannot index a value of type `{}`", b.ty),
                    ));
                };
                let i = self.infer(idx, None)?;
                if !i.ty.is_integer() {
                    return Err(Diagnostic::error(
                        idx.span.clone(),
                        format!("array index must be an integer, found `{}`", i.ty),
                    ));
                }
                if let (TExprKind::Int(v), Some(n)) = (&i.kind, cap.as_const()) {
                    if *v < 0 || *v >= n {
                        return Err(Diagnostic::error(
                            idx.span.clone(),
                            format!("index {v} is out of bounds for capacity {n}"),
                        ));
                    }
                }
                mk(TExprKind::Index(Box::new(b), Box::new(i)), *elem, span)
            }
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, expected, span)?,
            ExprKind::If { branches, otherwise } => {
                let mut out = Vec::new();
                let mut ty: Option<Type> = None;
                for (c, b) in branches {
                    let c = self.check(c, &Type::Bool)?;
                    let b = match &ty {
                        None => self.infer(b, expected)?,
                        Some(t) => self.branch(b, t)?,
                    };
                    ty.get_or_insert_with(|| b.ty.clone());
                    out.push((c, b));
                }
                let ty = ty.unwrap_or(Type::Unit);
                let other = self.branch(otherwise, &ty)?;
                mk(TExprKind::If(out, Box::new(other)), ty, span)
            }
            ExprKind::Set(la, v) => {
                let place = self.place(la)?;
                let ty = place_type(self.env, &place)?;
                let v = self.check(v, &ty)?;
                mk(TExprKind::Set(place, Box::new(v)), ty, span)
            }
            ExprKind::SetRef(la, v) => {
                let target = self.left_expr(la)?;
                let Type::Ref(inner) = target.ty.clone() else {
                    return Err(Diagnostic::error(
                        la.span.clone(),
                        format!("`set ref` needs a ref target, found `{}`", target.ty),
                    ));
                };
                let v = self.check(v, &inner)?;
                mk(TExprKind::SetRef(Box::new(target), Box::new(v)), *inner, span)
            }
            ExprKind::For { var, ty, start, end, direction, body } => {
                let var_ty = self.resolve_type(ty)?;
                if !var_ty.is_integer() {
                    return Err(Diagnostic::error(
                        ty.span.clone(),
                        format!("loop variable must have an integer type, found `{var_ty}`"),
                    ));
                }
                let start = self.check(start, &var_ty)?;
                let end = self.check(end, &var_ty)?;
                let body = self.with_scope(|ck| {
                    ck.bind(var, var_ty.clone(), false)?;
                    ck.infer(body, None)
                })?;
                mk(
                    TExprKind::For {
                        var: var.name.clone(),
                        var_ty,
                        start: Box::new(start),
                        end: Box::new(end),
                        direction: *direction,
                        body: Box::new(body),
                    },
                    Type::Unit,
                    span,
                )
            }
            ExprKind::DoWhile(body, cond) => {
                let body = self.infer(body, None)?;
                let cond = self.check(cond, &Type::Bool)?;
                mk(TExprKind::DoWhile(Box::new(body), Box::new(cond)), Type::Unit, span)
            }
            ExprKind::While(cond, body) => {
                let cond = self.check(cond, &Type::Bool)?;
                let body = self.infer(body, None)?;
                mk(TExprKind::While(Box::new(cond), Box::new(body)), Type::Unit, span)
            }
            ExprKind::Not(x) => {
                let x = self.check(x, &Type::Bool)?;
                mk(TExprKind::Not(Box::new(x)), Type::Bool, span)
            }
            ExprKind::BitNot(x) => {
                let hint = expected.filter(|t| t.is_integer());
                let x = self.infer(x, hint)?;
                if !x.ty.is_integer() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("`~~~` needs an integer operand, found `{}`", x.ty),
                    ));
                }
                let ty = x.ty.clone();
                mk(TExprKind::BitNot(Box::new(x)), ty, span)
            }
            ExprKind::Field(x, f) => {
                let x = self.infer(x, None)?;
                let ty = self.field_type(&x.ty, f)?;
                mk(TExprKind::Field(Box::new(x), f.name.clone()), ty, span)
            }
            ExprKind::Lambda { params, ret, body } => {
                let ret = self.resolve_type(ret)?;
                let ps = params
                    .iter()
                    .map(|p| Ok((p.name.clone(), self.resolve_type(&p.ty)?)))
                    .collect::<CResult<Vec<(Ident, Type)>>>()?;
                self.lambda_depth += 1;
                let body = self.with_scope(|ck| {
                    let mut seen = BTreeSet::new();
                    for (n, t) in &ps {
                        if !seen.insert(n.name.clone()) {
                            return Err(Diagnostic::error(
                                n.span.clone(),
                                format!("parameter `{}` declared twice", n.name),
                            ));
                        }
                        ck.bind(n, t.clone(), false)?;
                    }
                    ck.check(body, &ret)
                });
                self.lambda_depth -= 1;
                let body = body?;
                let params: Vec<(String, Type)> = ps.into_iter().map(|(n, t)| (n.name, t)).collect();
                let ty = Type::Fun(params.iter().map(|(_, t)| t.clone()).collect(), Box::new(ret.clone()));
                mk(TExprKind::Lambda { params, ret, body: Box::new(body) }, ty, span)
            }
            ExprKind::Case(scrut, clauses) => self.case(scrut, clauses, expected, span)?,
            ExprKind::Record { ty, apply, fields } => self.record(ty, apply.as_ref(), fields, span)?,
            ExprKind::Array(es) => {
                let (elems, elem_ty) = match expected {
                    Some(Type::Array(t, _)) => {
                        (es.iter().map(|x| self.check(x, t)).collect::<CResult<Vec<_>>>()?, (**t).clone())
                    }
                    _ => {
                        let Some(first) = es.first() else {
                            return Err(Diagnostic::error(
                                span.clone(),
                                "cannot determine the element type of an empty array literal",
                            )
                            .with_hint("write `array T[0] end`"));
                        };
                        let first = self.infer(first, None)?;
                        let t = first.ty.clone();
                        let mut out = vec![first];
                        for x in &es[1..] {
                            out.push(self.check(x, &t)?);
                        }
                        (out, t)
                    }
                };
                let ty = Type::Array(Box::new(elem_ty), Cap::constant(elems.len() as i128));
                mk(TExprKind::Array(elems), ty, span)
            }
            ExprKind::Ref(x) => {
                let x = match expected {
                    Some(Type::Ref(t)) => self.check(x, t)?,
                    _ => self.infer(x, None)?,
                };
                let ty = Type::Ref(Box::new(x.ty.clone()));
                mk(TExprKind::Ref(Box::new(x)), ty, span)
            }
            ExprKind::Deref(x) => {
                let x = self.infer(x, None)?;
                let Type::Ref(inner) = x.ty.clone() else {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("cannot dereference a value of type `{}`", x.ty),
                    )
                    .with_hint("`!` reads the contents of a `ref`"));
                };
                mk(TExprKind::Deref(Box::new(x)), *inner, span)
            }
            ExprKind::ArrayOf(t, fill) => {
                let ty = self.resolve_type(t)?;
                let Type::Array(elem, _) = &ty else {
                    return Err(Diagnostic::error(t.span.clone(), format!("expected an array type, found `{ty}`")));
                };
                let fill = self.check(fill, elem)?;
                mk(TExprKind::ArrayFill(Box::new(fill)), ty, span)
            }
            ExprKind::ArrayEmpty(t) => {
                let ty = self.resolve_type(t)?;
                if !matches!(ty, Type::Array(..)) {
                    return Err(Diagnostic::error(t.span.clone(), format!("expected an array type, found `{ty}`")));
                }
                mk(TExprKind::ArrayDefault, ty, span)
            }
        })
    }

    fn branch(&mut self, e: &Expr, ty: &Type) -> CResult<TExpr> {
        let te = self.infer(e, Some(ty))?;
        if te.ty != *ty {
            return Err(Diagnostic::error(
                e.span.clone(),
                format!("branch types disagree: expected `{ty}` like the first branch, found `{}`", te.ty),
            ));
        }
        Ok(te)
    }

    fn var(&mut self, id: &Ident, span: &Span) -> CResult<TExpr> {
        if let Some(l) = self.lookup_local(&id.name) {
            return Ok(mk(TExprKind::Local(id.name.clone()), l.ty.clone(), span));
        }
        self.global(&DeclRef::Local(id.clone()), None, span)
    }

    fn global(&mut self, r: &DeclRef, apply: Option<&TemplateApply>, span: &Span) -> CResult<TExpr> {
        let (targs, cargs) = match apply {
            Some(a) => self.env.resolve_apply(a, self.scope())?,
            None => (Vec::new(), Vec::new()),
        };
        match self.env.lookup_value(self.module, r)? {
            ValueTarget::Value(v) => {
                if let (Some(cur), true) = (self.let_index, v.name.module == self.module && v.kind == ValueKind::Let) {
                    if v.decl_index >= cur {
                        return Err(Diagnostic::error(
                            span.clone(),
                            format!("`{r}` is used before its declaration is initialized"),
                        )
                        .with_hint("module-level lets are initialized in declaration order"));
                    }
                }
                if v.scheme.is_polymorphic() && apply.is_none() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("`{r}` is polymorphic and needs explicit template arguments"),
                    )
                    .with_hint(format!("write `{r}<...>`; its type is `{}`", v.scheme)));
                }
                let ty = v
                    .scheme
                    .instantiate(&targs, &cargs)
                    .map_err(|e| Diagnostic::error(span.clone(), format!("`{r}`: {e}")))?;
                Ok(mk(TExprKind::Global { name: v.name.clone(), type_args: targs, cap_args: cargs }, ty, span))
            }
            ValueTarget::Ctor(def, c) => {
                if (!def.type_vars.is_empty() || !def.cap_vars.is_empty()) && apply.is_none() {
                    let vars: Vec<String> = def.type_vars.iter().map(|v| format!("'{v}")).collect();
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!(
                            "constructor `{r}` of polymorphic type `{}` needs explicit template arguments",
                            def.name.name
                        ),
                    )
                    .with_hint(format!("write `{r}<{}>(...)` with concrete types", vars.join(", "))));
                }
                super::env::check_template_arity(def, &targs, &cargs, span, &r.to_string())?;
                let s = Subst::from_args(&def.type_vars, &targs, &def.cap_vars, &cargs);
                let payload = match &c.payload {
                    Some(p) => vec![p.subst(&s).map_err(|e| Diagnostic::error(span.clone(), e.to_string()))?],
                    None => Vec::new(),
                };
                let ty = Type::Fun(payload, Box::new(def.instance(targs.clone(), cargs.clone())));
                Ok(mk(
                    TExprKind::Ctor {
                        adt: def.name.clone(),
                        name: c.name.clone(),
                        tag: c.tag,
                        type_args: targs,
                        cap_args: cargs,
                    },
                    ty,
                    span,
                ))
            }
        }
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr, expected: Option<&Type>, span: &Span) -> CResult<TExpr> {
        use BinOp::*;
        let (l, r, ty) = match op {
            And | Or => (self.check(l, &Type::Bool)?, self.check(r, &Type::Bool)?, Type::Bool),
            Eq | Ne => {
                let (l, r) = self.operands(l, r, None)?;
                if l.ty.contains_fun() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("`{}` is not defined for `{}`: it contains functions", op.symbol(), l.ty),
                    ));
                }
                (l, r, Type::Bool)
            }
            Lt | Le | Gt | Ge => {
                let (l, r) = self.operands(l, r, None)?;
                if !l.ty.is_numeric() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("`{}` needs numeric operands, found `{}`", op.symbol(), l.ty),
                    ));
                }
                (l, r, Type::Bool)
            }
            Add | Sub | Mul | Div => {
                let (l, r) = self.operands(l, r, expected.filter(|t| t.is_numeric()))?;
                if !l.ty.is_numeric() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("`{}` needs numeric operands, found `{}`", op.symbol(), l.ty),
                    ));
                }
                let ty = l.ty.clone();
                (l, r, ty)
            }
            Mod | BitAnd | BitOr | Shl | Shr => {
                let (l, r) = self.operands(l, r, expected.filter(|t| t.is_integer()))?;
                if !l.ty.is_integer() {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("`{}` needs integer operands, found `{}`", op.symbol(), l.ty),
                    ));
                }
                let ty = l.ty.clone();
                (l, r, ty)
            }
        };
        Ok(mk(TExprKind::Binary(op, Box::new(l), Box::new(r)), ty, span))
    }

    /// Checks both operands at one type: the hint if given, else the type of
    /// whichever side is not a bare literal.
    fn operands(&mut self, l: &Expr, r: &Expr, hint: Option<&Type>) -> CResult<(TExpr, TExpr)> {
        if let Some(h) = hint {
            return Ok((self.check(l, h)?, self.check(r, h)?));
        }
        if is_untyped_literal(l) && !is_untyped_literal(r) {
            let r = self.infer(r, None)?;
            let l = self.check(l, &r.ty)?;
            return Ok((l, r));
        }
        let l = self.infer(l, None)?;
        let r = self.check(r, &l.ty)?;
        Ok((l, r))
    }

    fn field_type(&self, ty: &Type, f: &Ident) -> CResult<Type> {
        let Some(fields) = record_fields(self.env, ty) else {
            return Err(Diagnostic::error(f.span.clone(), format!("type `{ty}` has no fields")));
        };
        fields
            .into_iter()
            .find(|(n, _)| *n == f.name)
            .map(|(_, t)| t)
            .ok_or_else(|| Diagnostic::error(f.span.clone(), format!("record `{ty}` has no field `{}`", f.name)))
    }

    fn record(
        &mut self,
        r: &DeclRef,
        apply: Option<&TemplateApply>,
        fields: &[(Ident, Expr)],
        span: &Span,
    ) -> CResult<TExpr> {
        let def = match self.env.lookup_type(self.module, r)? {
            TypeTarget::Def(d) if !d.is_adt() => d,
            _ => return Err(Diagnostic::error(r.span(), format!("`{r}` is not a record type"))),
        };
        let (targs, cargs) = match apply {
            Some(a) => self.env.resolve_apply(a, self.scope())?,
            None => (Vec::new(), Vec::new()),
        };
        super::env::check_template_arity(def, &targs, &cargs, span, &r.to_string())?;
        let ty = def.instance(targs, cargs);
        let expected_fields = record_fields(self.env, &ty).unwrap_or_default();
        let mut out: Vec<(String, TExpr)> = Vec::new();
        for (name, e) in fields {
            if out.iter().any(|(n, _)| *n == name.name) {
                return Err(Diagnostic::error(name.span.clone(), format!("field `{}` given twice", name.name)));
            }
            let Some((_, fty)) = expected_fields.iter().find(|(n, _)| *n == name.name) else {
                return Err(Diagnostic::error(
                    name.span.clone(),
                    format!("record `{ty}` has no field `{}`", name.name),
                ));
            };
            out.push((name.name.clone(), self.check(e, fty)?));
        }
        let missing: Vec<&str> =
            expected_fields.iter().filter(|(n, _)| !out.iter().any(|(m, _)| m == n)).map(|(n, _)| n.as_str()).collect();
        if !missing.is_empty() {
            return Err(Diagnostic::error(
                span.clone(),
                format!("missing field(s) in record literal: {}", missing.join(", ")),
            ));
        }
        Ok(mk(TExprKind::Record(out), ty, span))
    }

    fn case(&mut self, scrut: &Expr, clauses: &[CaseClause], expected: Option<&Type>, span: &Span) -> CResult<TExpr> {
        let s = self.infer(scrut, None)?;
        let mut arms: Vec<(TPattern, TExpr)> = Vec::new();
        let mut ty: Option<Type> = None;
        for c in clauses {
            let arm = self.with_scope(|ck| {
                let p = ck.pattern_top(&c.pattern, &s.ty)?;
                ck.bind_pattern(&p, &c.pattern)?;
                let body = match &ty {
                    None => ck.infer(&c.body, expected)?,
                    Some(t) => ck.branch(&c.body, t)?,
                };
                Ok((p, body))
            })?;
            ty.get_or_insert_with(|| arm.1.ty.clone());
            arms.push(arm);
        }
        let ty = ty.or_else(|| expected.cloned()).unwrap_or(Type::Unit);
        let pats: Vec<&TPattern> = arms.iter().map(|(p, _)| p).collect();
        let cov = exhaustive::coverage(&s.ty, &pats, self.env);
        for i in cov.unreachable {
            self.diags.push(Diagnostic::warning(clauses[i].pattern.span.clone(), "unreachable case arm"));
        }
        if !cov.exhaustive {
            self.diags.push(
                Diagnostic::warning(
                    span.clone(),
                    format!("case expression does not cover every value of type `{}`", s.ty),
                )
                .with_hint("unmatched values abort at run time; add a `_` arm"),
            );
        }
        Ok(mk(TExprKind::Case(Box::new(s), arms), ty, span))
    }

    fn check_let(&mut self, p: &Pattern, v: &Expr, span: &Span) -> CResult<TExpr> {
        let value = match self.pattern_hint(p) {
            Some(t) => self.check(v, &t)?,
            None => self.infer(v, None)?,
        };
        let pat = self.pattern_top(p, &value.ty)?;
        if exhaustive::is_refutable(&pat, self.env) {
            self.diags
                .push(Diagnostic::warning(p.span.clone(), "refutable pattern in `let`; a mismatch aborts at run time"));
        }
        self.bind_pattern(&pat, p)?;
        let ty = value.ty.clone();
        Ok(mk(TExprKind::Let(pat, Box::new(value)), ty, span))
    }

    /// Type implied by fully annotated variable and tuple patterns.
    fn pattern_hint(&self, p: &Pattern) -> Option<Type> {
        match &p.kind {
            PatternKind::Var { ty: Some(t), .. } => self.resolve_type(t).ok(),
            PatternKind::Tuple(ps) => {
                ps.iter().map(|p| self.pattern_hint(p)).collect::<Option<Vec<_>>>().map(Type::Tuple)
            }
            _ => None,
        }
    }

    fn bind_pattern(&mut self, p: &TPattern, src: &Pattern) -> CResult<()> {
        let idents = src.bound_names();
        for ((name, ty, mutable), id) in p.bound_names().into_iter().zip(idents) {
            debug_assert_eq!(name, id.name);
            self.bind(id, ty.clone(), mutable)?;
        }
        Ok(())
    }

    fn pattern_top(&mut self, p: &Pattern, ty: &Type) -> CResult<TPattern> {
        let mut seen = BTreeSet::new();
        for id in p.bound_names() {
            if !seen.insert(id.name.as_str()) {
                return Err(Diagnostic::error(
                    id.span.clone(),
                    format!("`{}` is bound more than once in this pattern", id.name),
                ));
            }
        }
        self.pattern(p, ty)
    }

    fn pattern(&mut self, p: &Pattern, ty: &Type) -> CResult<TPattern> {
        let span = &p.span;
        let tp = |kind| TPattern { kind, ty: ty.clone(), span: span.clone() };
        Ok(match &p.kind {
            PatternKind::Var { mutable, name, ty: ann } => {
                if let Some(ann) = ann {
                    let t = self.resolve_type(ann)?;
                    if t != *ty {
                        return Err(mismatch(&t, ty, span));
                    }
                } else if let Ok(ValueTarget::Ctor(_, c)) =
                    self.env.lookup_value(self.module, &DeclRef::Local(name.clone()))
                {
                    if c.payload.is_none() && self.lookup_local(&name.name).is_none() {
                        self.diags.push(
                            Diagnostic::warning(span.clone(), format!("pattern `{}` binds a new variable", name.name))
                                .with_hint(format!("write `{}()` to match the constructor", name.name)),
                        );
                    }
                }
                tp(TPatternKind::Var { name: name.name.clone(), mutable: *mutable })
            }
            PatternKind::Int(v) => match ty {
                Type::Int(i) if i.contains(*v) => tp(TPatternKind::Int(*v)),
                Type::Int(_) => {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("integer pattern `{v}` does not fit in `{ty}`"),
                    ))
                }
                _ => {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("integer pattern cannot match a value of type `{ty}`"),
                    ))
                }
            },
            PatternKind::Float(v) => match ty {
                Type::Float | Type::Double => tp(TPatternKind::Float(*v)),
                _ => {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("float pattern cannot match a value of type `{ty}`"),
                    ))
                }
            },
            PatternKind::Wildcard => tp(TPatternKind::Wildcard),
            PatternKind::Ctor { ctor, apply, inner } => {
                let (def, c) = match self.env.lookup_value(self.module, ctor)? {
                    ValueTarget::Ctor(d, c) => (d, c),
                    ValueTarget::Value(_) => {
                        return Err(Diagnostic::error(ctor.span(), format!("`{ctor}` is not a value constructor")));
                    }
                };
                let Type::Adt(q, targs, cargs) = ty else {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("constructor `{ctor}` of type `{}` cannot match a value of type `{ty}`", def.name.name),
                    ));
                };
                if *q != def.name {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("constructor `{ctor}` belongs to type `{}`, not `{ty}`", def.name.name),
                    ));
                }
                if let Some(a) = apply {
                    let (ta, ca) = self.env.resolve_apply(a, self.scope())?;
                    super::env::check_template_arity(def, &ta, &ca, span, &ctor.to_string())?;
                    let given = def.instance(ta, ca);
                    if given != *ty {
                        return Err(mismatch(ty, &given, span));
                    }
                }
                let s = Subst::from_args(&def.type_vars, targs, &def.cap_vars, cargs);
                let payload = match &c.payload {
                    Some(t) => Some(t.subst(&s).map_err(|e| Diagnostic::error(span.clone(), e.to_string()))?),
                    None => None,
                };
                let inner = match (inner, payload) {
                    (Some(ip), Some(pt)) => Some(Box::new(self.pattern(ip, &pt)?)),
                    (None, None) => None,
                    (Some(_), None) => {
                        return Err(Diagnostic::error(span.clone(), format!("constructor `{ctor}` takes no payload"))
                            .with_hint(format!("write `{ctor}()`")));
                    }
                    (None, Some(_)) => {
                        return Err(Diagnostic::error(
                            span.clone(),
                            format!("constructor `{ctor}` carries a payload; match it with a pattern"),
                        )
                        .with_hint(format!("write `{ctor}(_)`")));
                    }
                };
                tp(TPatternKind::Ctor { adt: def.name.clone(), name: c.name.clone(), tag: c.tag, inner })
            }
            PatternKind::Record { ty: te, fields } => {
                let TypeExprKind::Named(r, apply) = &te.kind else {
                    return Err(Diagnostic::error(te.span.clone(), "expected a record type name"));
                };
                let def = match self.env.lookup_type(self.module, r)? {
                    TypeTarget::Def(d) if !d.is_adt() => d,
                    _ => return Err(Diagnostic::error(r.span(), format!("`{r}` is not a record type"))),
                };
                let matches_ty = matches!(ty, Type::Record(q, ..) if *q == def.name);
                if !matches_ty {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("record pattern `{r}` cannot match a value of type `{ty}`"),
                    ));
                }
                if apply.is_some() {
                    let given = self.resolve_type(te)?;
                    if given != *ty {
                        return Err(mismatch(ty, &given, span));
                    }
                }
                let ftypes = record_fields(self.env, ty).unwrap_or_default();
                let mut out: Vec<(String, TPattern)> = Vec::new();
                for (name, fp) in fields {
                    if out.iter().any(|(n, _)| *n == name.name) {
                        return Err(Diagnostic::error(
                            name.span.clone(),
                            format!("field `{}` matched twice", name.name),
                        ));
                    }
                    let Some((_, ft)) = ftypes.iter().find(|(n, _)| *n == name.name) else {
                        return Err(Diagnostic::error(
                            name.span.clone(),
                            format!("record `{ty}` has no field `{}`", name.name),
                        ));
                    };
                    out.push((name.name.clone(), self.pattern(fp, ft)?));
                }
                tp(TPatternKind::Record(out))
            }
            PatternKind::Tuple(ps) => match ty {
                Type::Tuple(ts) if ts.len() == ps.len() => {
                    let elems = ps.iter().zip(ts).map(|(p, t)| self.pattern(p, t)).collect::<CResult<Vec<_>>>()?;
                    tp(TPatternKind::Tuple(elems))
                }
                _ => {
                    return Err(Diagnostic::error(
                        span.clone(),
                        format!("tuple pattern of {} elements cannot match `{ty}`", ps.len()),
                    ));
                }
            },
        })
    }

    // ---- assignment targets -----------------------------------------------

    fn place(&mut self, la: &LeftAssign) -> CResult<TPlace> {
        match &la.kind {
            LeftAssignKind::Var(id) => {
                let Some(l) = self.lookup_local(&id.name).cloned() else {
                    if self.env.lookup_value(self.module, &DeclRef::Local(id.clone())).is_ok() {
                        return Err(immutable_global(&id.name, &la.span));
                    }
                    return Err(Diagnostic::error(la.span.clone(), format!("unresolved value `{}`", id.name)));
                };
                if !l.mutable {
                    return Err(Diagnostic::error(
                        la.span.clone(),
                        format!("cannot assign to immutable binding `{}`", id.name),
                    )
                    .with_hint(format!("declare it with `let mutable {}`", id.name)));
                }
                if l.depth < self.lambda_depth {
                    return Err(Diagnostic::error(
                        la.span.clone(),
                        format!("cannot assign to `{}` inside a lambda: closures capture by value", id.name),
                    )
                    .with_hint("share mutable state through a `ref`"));
                }
                Ok(TPlace { root: id.name.clone(), root_ty: l.ty, path: Vec::new(), span: la.span.clone() })
            }
            LeftAssignKind::Qualified(m, n) => Err(immutable_global(&format!("{m}:{n}"), &la.span)),
            LeftAssignKind::Index(base, idx) => {
                let mut p = self.place(base)?;
                let cur = place_type(self.env, &p)?;
                if !matches!(cur, Type::Array(..)) {
                    return Err(Diagnostic::error(base.span.clone(), format!("cannot index a value of type `{cur}`")));
                }
                let i = self.infer(idx, None)?;
                if !i.ty.is_integer() {
                    return Err(Diagnostic::error(
                        idx.span.clone(),
                        format!("array index must be an integer, found `{}`", i.ty),
                    ));
                }
                p.path.push(TPlaceStep::Index(i));
                p.span = la.span.clone();
                Ok(p)
            }
            LeftAssignKind::Field(base, f) => {
                let mut p = self.place(base)?;
                let cur = place_type(self.env, &p)?;
                self.field_type(&cur, f)?;
                p.path.push(TPlaceStep::Field(f.name.clone()));
                p.span = la.span.clone();
                Ok(p)
            }
        }
    }

    /// A left-assign read as an expression, for `set ref` targets.
    fn left_expr(&mut self, la: &LeftAssign) -> CResult<TExpr> {
        let span = &la.span;
        match &la.kind {
            LeftAssignKind::Var(id) => self.var(id, span),
            LeftAssignKind::Qualified(m, n) => self.global(&DeclRef::Qualified(m.clone(), n.clone()), None, span),
            LeftAssignKind::Index(b, i) => {
                let e = Expr::new(ExprKind::Index(Box::new(left_to_expr(b)), i.clone()), span.clone());
                self.infer(&e, None)
            }
            LeftAssignKind::Field(b, f) => {
                let e = Expr::new(ExprKind::Field(Box::new(left_to_expr(b)), f.clone()), span.clone());
                self.infer(&e, None)
            }
        }
    }
}

fn left_to_expr(la: &LeftAssign) -> Expr {
    let kind = match &la.kind {
        LeftAssignKind::Var(id) => ExprKind::Var(id.clone()),
        LeftAssignKind::Qualified(m, n) => ExprKind::Qualified(m.clone(), n.clone()),
        LeftAssignKind::Index(b, i) => ExprKind::Index(Box::new(left_to_expr(b)), i.clone()),
        LeftAssignKind::Field(b, f) => ExprKind::Field(Box::new(left_to_expr(b)), f.clone()),
    };
    Expr::new(kind, la.span.clone())
}

fn immutable_global(name: &str, span: &Span) -> Diagnostic {
    Diagnostic::error(span.clone(), format!("cannot assign to module-level `{name}`: module-level lets are immutable"))
        .with_hint("hold the value in a `ref` and use `set ref`")
}

/// Type of the location a place denotes.
pub fn place_type(env: &ProgramEnv, p: &TPlace) -> CResult<Type> {
    let mut cur = p.root_ty.clone();
    for step in &p.path {
        cur = match (step, &cur) {
            (TPlaceStep::Index(_), Type::Array(t, _)) => (**t).clone(),
            (TPlaceStep::Field(f), _) => record_fields(env, &cur)
                .and_then(|fs| fs.into_iter().find(|(n, _)| n == f).map(|(_, t)| t))
                .ok_or_else(|| Diagnostic::error(p.span.clone(), format!("type `{cur}` has no field `{f}`")))?,
            _ => return Err(Diagnostic::error(p.span.clone(), format!("cannot index a value of type `{cur}`"))),
        };
    }
    Ok(cur)
}

/// Instantiates a module-level declaration's scheme; exposed for tests and tools.
pub fn instantiate(env: &ProgramEnv, q: &QualName, targs: &[Type], cargs: &[Cap]) -> Result<Type, String> {
    let m = env.module(&q.module).ok_or_else(|| format!("unknown module `{}`", q.module))?;
    if let Some(v) = m.values.get(&q.name) {
        return v.scheme.instantiate(targs, cargs).map_err(|e| e.to_string());
    }
    if let Some(def) = m.types.get(&q.name) {
        if targs.len() != def.type_vars.len() || cargs.len() != def.cap_vars.len() {
            return Err(format!(
                "`{}` expects {} type and {} capacity argument(s)",
                q.name,
                def.type_vars.len(),
                def.cap_vars.len()
            ));
        }
        return Ok(def.instance(targs.to_vec(), cargs.to_vec()));
    }
    Err(format!("`{q}` is not declared"))
}
