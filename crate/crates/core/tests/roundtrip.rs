//! `parse(pretty_print(m)) == m` over generated syntax trees.

use proptest::prelude::*;

use juniper::frontend::ast::*;
use juniper::frontend::{parse_source, pretty_print};
use juniper::Span;

fn sp() -> Span {
    Span::default()
}

fn ident(name: &str) -> Ident {
    Ident::new(name, sp())
}

fn lower() -> impl Strategy<Value = Ident> {
    prop::sample::select(vec!["x", "y", "acc", "val", "state0", "f", "go_on", "t2"]).prop_map(ident)
}

fn upper() -> impl Strategy<Value = Ident> {
    prop::sample::select(vec!["Prelude", "Io", "M2", "Signal"]).prop_map(ident)
}

fn decl_ref() -> impl Strategy<Value = DeclRef> {
    prop_oneof![lower().prop_map(DeclRef::Local), (upper(), lower()).prop_map(|(m, n)| DeclRef::Qualified(m, n)),]
}

fn cap() -> impl Strategy<Value = CapExpr> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["n", "m", "cap"]).prop_map(|v| CapExprKind::Var(ident(v))),
        (0u64..100).prop_map(CapExprKind::Int),
    ]
    .prop_map(|kind| CapExpr { kind, span: sp() });
    leaf.prop_recursive(3, 12, 2, |inner| {
        (prop::sample::select(vec![CapOp::Add, CapOp::Sub, CapOp::Mul, CapOp::Div]), inner.clone(), inner)
            .prop_map(|(op, l, r)| CapExpr { kind: CapExprKind::Binary(op, Box::new(l), Box::new(r)), span: sp() })
    })
}

fn ty() -> BoxedStrategy<TypeExpr> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["int32", "uint8", "bool", "unit", "float", "pointer", "mode"])
            .prop_map(|n| TypeExprKind::Named(DeclRef::Local(ident(n)), None)),
        prop::sample::select(vec!["a", "b", "state"]).prop_map(|v| TypeExprKind::Var(ident(v))),
    ]
    .prop_map(|kind| TypeExpr { kind, span: sp() });
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (decl_ref(), template_apply(inner.clone())).prop_map(|(r, a)| TypeExprKind::Named(r, Some(a))),
            (prop::collection::vec(inner.clone(), 0..3), inner.clone())
                .prop_map(|(ps, r)| TypeExprKind::Fun(ps, Box::new(r))),
            (inner.clone(), cap()).prop_map(|(t, c)| TypeExprKind::Array(Box::new(t), c)),
            inner.clone().prop_map(|t| TypeExprKind::Ref(Box::new(t))),
            prop::collection::vec(inner, 2..4).prop_map(TypeExprKind::Tuple),
        ]
        .prop_map(|kind| TypeExpr { kind, span: sp() })
    })
    .boxed()
}

fn array_ty() -> impl Strategy<Value = TypeExpr> {
    (ty(), cap()).prop_map(|(t, c)| TypeExpr { kind: TypeExprKind::Array(Box::new(t), c), span: sp() })
}

fn template_apply(t: impl Strategy<Value = TypeExpr> + Clone) -> impl Strategy<Value = TemplateApply> {
    (prop::collection::vec(t, 1..3), prop::collection::vec(cap(), 0..2))
        .prop_map(|(types, caps)| TemplateApply { types, caps })
}

fn template_dec() -> impl Strategy<Value = Option<TemplateDec>> {
    let vars = |pool: Vec<&'static str>| {
        prop::sample::subsequence(pool, 0..3).prop_map(|vs| vs.into_iter().map(ident).collect())
    };
    prop::option::of((vars(vec!["a", "b", "c"]), vars(vec!["n", "m"])))
        .prop_map(|o| o.map(|(type_vars, cap_vars)| TemplateDec { type_vars, cap_vars }))
        .prop_filter("empty template", |t| t.as_ref().is_none_or(|t| !t.type_vars.is_empty()))
}

fn int_lit() -> impl Strategy<Value = i128> {
    prop_oneof![0i128..1000, Just(-7i128), Just(2147483648i128)]
}

fn float_lit() -> impl Strategy<Value = f64> {
    (0i32..400).prop_map(|k| f64::from(k) / 4.0)
}

fn pattern() -> BoxedStrategy<Pattern> {
    let leaf = prop_oneof![
        (any::<bool>(), lower(), prop::option::of(ty())).prop_map(|(mutable, name, ty)| PatternKind::Var {
            mutable,
            name,
            ty
        }),
        int_lit().prop_map(PatternKind::Int),
        float_lit().prop_map(PatternKind::Float),
        Just(PatternKind::Wildcard),
        (decl_ref(), prop::option::of(template_apply(ty()))).prop_map(|(ctor, apply)| PatternKind::Ctor {
            ctor,
            apply,
            inner: None
        }),
    ]
    .prop_map(|kind| Pattern { kind, span: sp() });
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (decl_ref(), prop::option::of(template_apply(ty())), inner.clone())
                .prop_map(|(ctor, apply, p)| PatternKind::Ctor { ctor, apply, inner: Some(Box::new(p)) }),
            (decl_ref(), prop::collection::vec((lower(), inner.clone()), 1..3)).prop_map(|(r, fields)| {
                PatternKind::Record { ty: TypeExpr { kind: TypeExprKind::Named(r, None), span: sp() }, fields }
            }),
            prop::collection::vec(inner, 2..4).prop_map(PatternKind::Tuple),
        ]
        .prop_map(|kind| Pattern { kind, span: sp() })
    })
    .boxed()
}

fn left_assign(e: BoxedStrategy<Expr>) -> impl Strategy<Value = LeftAssign> {
    let base = prop_oneof![
        lower().prop_map(LeftAssignKind::Var),
        (upper(), lower()).prop_map(|(m, n)| LeftAssignKind::Qualified(m, n)),
    ]
    .prop_map(|kind| LeftAssign { kind, span: sp() });
    let step = prop_oneof![e.prop_map(Ok), lower().prop_map(Err)];
    (base, prop::collection::vec(step, 0..3)).prop_map(|(mut la, steps)| {
        for s in steps {
            let kind = match s {
                Ok(idx) => LeftAssignKind::Index(Box::new(la), Box::new(idx)),
                Err(f) => LeftAssignKind::Field(Box::new(la), f),
            };
            la = LeftAssign { kind, span: sp() };
        }
        la
    })
}

fn params() -> impl Strategy<Value = Vec<Param>> {
    prop::collection::vec((lower(), ty()).prop_map(|(name, ty)| Param { name, ty }), 0..3)
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn expr() -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        Just(ExprKind::Unit),
        Just(ExprKind::True),
        Just(ExprKind::False),
        Just(ExprKind::Null),
        int_lit().prop_map(ExprKind::Int),
        float_lit().prop_map(ExprKind::Float),
        lower().prop_map(ExprKind::Var),
        (upper(), lower()).prop_map(|(m, n)| ExprKind::Qualified(m, n)),
        (decl_ref(), template_apply(ty())).prop_map(|(r, a)| ExprKind::TemplateRef(r, a)),
        "[a-z =;()]{0,12}".prop_map(ExprKind::Inline),
        array_ty().prop_map(ExprKind::ArrayEmpty),
    ]
    .prop_map(|kind| Expr::new(kind, sp()));
    leaf.prop_recursive(4, 48, 4, |inner| {
        let e = inner.clone();
        prop_oneof![
            prop::collection::vec(e.clone(), 2..4).prop_map(ExprKind::Seq),
            prop::collection::vec(e.clone(), 2..4).prop_map(ExprKind::Tuple),
            (e.clone(), prop::collection::vec(e.clone(), 0..3)).prop_map(|(f, a)| ExprKind::Call(bx(f), a)),
            (e.clone(), e.clone()).prop_map(|(b, i)| ExprKind::Index(bx(b), bx(i))),
            (prop::sample::select(BinOp::ALL.to_vec()), e.clone(), e.clone()).prop_map(|(op, l, r)| ExprKind::Binary(
                op,
                bx(l),
                bx(r)
            )),
            (prop::collection::vec((e.clone(), e.clone()), 1..3), e.clone())
                .prop_map(|(branches, o)| ExprKind::If { branches, otherwise: bx(o) }),
            (pattern(), e.clone()).prop_map(|(p, v)| ExprKind::Let(Box::new(p), bx(v))),
            (left_assign(e.clone()), e.clone()).prop_map(|(la, v)| ExprKind::Set(la, bx(v))),
            (left_assign(e.clone()), e.clone()).prop_map(|(la, v)| ExprKind::SetRef(la, bx(v))),
            (lower(), ty(), e.clone(), e.clone(), any::<bool>(), e.clone()).prop_map(|(var, ty, s, t, up, b)| {
                let direction = if up { ForDirection::Up } else { ForDirection::Down };
                ExprKind::For { var, ty, start: bx(s), end: bx(t), direction, body: bx(b) }
            }),
            (e.clone(), e.clone()).prop_map(|(b, c)| ExprKind::DoWhile(bx(b), bx(c))),
            (e.clone(), e.clone()).prop_map(|(c, b)| ExprKind::While(bx(c), bx(b))),
            e.clone().prop_map(|x| ExprKind::Not(bx(x))),
            e.clone().prop_map(|x| ExprKind::BitNot(bx(x))),
            e.clone().prop_map(|x| ExprKind::Deref(bx(x))),
            e.clone().prop_map(|x| ExprKind::Ref(bx(x))),
            (e.clone(), lower()).prop_map(|(b, f)| ExprKind::Field(bx(b), f)),
            (params(), ty(), e.clone()).prop_map(|(params, ret, b)| ExprKind::Lambda { params, ret, body: bx(b) }),
            (e.clone(), prop::collection::vec((pattern(), e.clone()), 1..3)).prop_map(|(s, cs)| {
                ExprKind::Case(bx(s), cs.into_iter().map(|(pattern, body)| CaseClause { pattern, body }).collect())
            }),
            (decl_ref(), prop::option::of(template_apply(ty())), prop::collection::vec((lower(), e.clone()), 1..3))
                .prop_map(|(ty, apply, fields)| ExprKind::Record { ty, apply, fields }),
            prop::collection::vec(e.clone(), 1..4).prop_map(ExprKind::Array),
            (array_ty(), e).prop_map(|(t, f)| ExprKind::ArrayOf(t, bx(f))),
        ]
        .prop_map(|kind| Expr::new(kind, sp()))
    })
    .boxed()
}

fn decl() -> impl Strategy<Value = Decl> {
    let names = |n| prop::collection::vec(upper(), 1..n);
    prop_oneof![
        names(3).prop_map(DeclKind::Open),
        prop::collection::vec(lower(), 1..3).prop_map(DeclKind::Export),
        prop::collection::vec(prop::sample::select(vec!["<FastLED.h>", "\"local.h\"", "a\\b.h"]), 1..3)
            .prop_map(|hs| DeclKind::Include(hs.into_iter().map(String::from).collect())),
        (lower(), template_dec(), prop::collection::vec((lower(), ty()), 1..3))
            .prop_map(|(name, template, fields)| DeclKind::Record(RecordDecl { name, template, fields })),
        (lower(), template_dec(), prop::collection::vec((lower(), prop::option::of(ty())), 1..4)).prop_map(
            |(name, template, cs)| {
                let ctors = cs.into_iter().map(|(name, payload)| ValueCtor { name, payload }).collect();
                DeclKind::Adt(AdtDecl { name, template, ctors })
            }
        ),
        (lower(), ty(), expr()).prop_map(|(name, ty, value)| DeclKind::Let(LetDecl { name, ty, value })),
        (lower(), template_dec(), params(), ty(), expr()).prop_map(|(name, template, params, ret, body)| {
            DeclKind::Function(FunDecl { name, template, params, ret, body })
        }),
    ]
    .prop_map(|kind| Decl { kind, span: sp() })
}

fn module() -> impl Strategy<Value = SourceModule> {
    (upper(), prop::collection::vec(decl(), 0..5)).prop_map(|(name, decls)| SourceModule { name, decls, span: sp() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn printed_modules_parse_back(m in module()) {
        let text = pretty_print(&m);
        let back = parse_source(&text, "gen.jun");
        prop_assert!(back.is_ok(), "{text}\n{:?}", back.err());
        prop_assert_eq!(back.unwrap(), m, "{}", text);
    }
}
