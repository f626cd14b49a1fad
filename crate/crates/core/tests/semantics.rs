mod common;

use std::collections::HashMap;

use juniper::frontend::ast::{CapExpr, CapExprKind, CapOp, Ident};
use juniper::frontend::{parse_expr_source as parse_expr, parse_program};
use juniper::semantics::capacity::CapError;
use juniper::semantics::{
    check_capacity, check_expr, check_program, instantiate, Cap, CapEquality, IntTy, QualName, Subst, Type,
};
use juniper::{Diagnostic, Span};
use proptest::prelude::*;

fn check_src(files: &[(&str, &str)]) -> Vec<Diagnostic> {
    let mut srcs = juniper::stdlib::sources();
    srcs.extend(files.iter().map(|(n, s)| (n.to_string(), s.to_string())));
    check_program(&parse_program(&srcs).unwrap()).diagnostics
}

fn errors(d: &[Diagnostic]) -> Vec<&Diagnostic> {
    d.iter().filter(|d| d.is_error()).collect()
}

// ---- capacity normal forms against a direct evaluator ----------------------

fn cap_node(kind: CapExprKind) -> CapExpr {
    CapExpr { kind, span: Span::default() }
}

fn bin(op: CapOp, a: CapExpr, b: CapExpr) -> CapExpr {
    cap_node(CapExprKind::Binary(op, Box::new(a), Box::new(b)))
}

/// Evaluates the unnormalized tree with truncating division.
fn eval_ast(e: &CapExpr, env: &HashMap<String, i128>) -> Option<i128> {
    Some(match &e.kind {
        CapExprKind::Int(n) => *n as i128,
        CapExprKind::Var(v) => env[&v.name],
        CapExprKind::Binary(op, a, b) => {
            let (a, b) = (eval_ast(a, env)?, eval_ast(b, env)?);
            match op {
                CapOp::Add => a + b,
                CapOp::Sub => a - b,
                CapOp::Mul => a * b,
                CapOp::Div => a.checked_div(b)?,
            }
        }
    })
}

fn normalize(e: &CapExpr) -> Result<Cap, CapError> {
    Cap::from_ast(e, &|_| true)
}

fn arb_cap(with_div: bool) -> impl Strategy<Value = CapExpr> {
    let leaf = prop_oneof![
        (0u64..6).prop_map(|n| cap_node(CapExprKind::Int(n))),
        prop::sample::select(vec!["n", "m", "k"])
            .prop_map(|v| cap_node(CapExprKind::Var(Ident::new(v, Span::default())))),
    ];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        let ops = if with_div {
            vec![CapOp::Add, CapOp::Sub, CapOp::Mul, CapOp::Div]
        } else {
            vec![CapOp::Add, CapOp::Sub, CapOp::Mul]
        };
        (prop::sample::select(ops), inner.clone(), inner).prop_map(|(op, a, b)| bin(op, a, b))
    })
}

/// Value-preserving rewrites: commutation, distribution and neutral elements.
fn rewrite(e: &CapExpr, seed: u64) -> CapExpr {
    let pick = seed % 5;
    let next = seed / 5 + 7;
    match &e.kind {
        CapExprKind::Binary(op, a, b) => {
            let (ra, rb) = (rewrite(a, next), rewrite(b, next * 3 + 1));
            match (op, pick) {
                (CapOp::Add | CapOp::Mul, 0 | 1) => bin(*op, rb, ra),
                (CapOp::Mul, 2) => match &ra.kind {
                    CapExprKind::Binary(CapOp::Add, x, y) => {
                        bin(CapOp::Add, bin(CapOp::Mul, (**x).clone(), rb.clone()), bin(CapOp::Mul, (**y).clone(), rb))
                    }
                    _ => bin(*op, ra, rb),
                },
                (_, 3) => bin(CapOp::Add, bin(*op, ra, rb), cap_node(CapExprKind::Int(0))),
                (_, 4) => bin(CapOp::Mul, cap_node(CapExprKind::Int(1)), bin(*op, ra, rb)),
                _ => bin(*op, ra, rb),
            }
        }
        _ if pick == 3 => bin(CapOp::Add, cap_node(CapExprKind::Int(0)), e.clone()),
        _ => e.clone(),
    }
}

fn assignment(vals: [i128; 3]) -> HashMap<String, i128> {
    ["n", "m", "k"].iter().map(|s| s.to_string()).zip(vals).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn normal_form_agrees_with_evaluation(e in arb_cap(true), points in prop::collection::vec(prop::array::uniform3(0i128..40), 100)) {
        let Ok(c) = normalize(&e) else { return Ok(()) };
        for p in points {
            let env = assignment(p);
            if let (Some(direct), Some(norm)) = (eval_ast(&e, &env), c.eval(&env)) {
                prop_assert_eq!(direct, norm);
            }
        }
    }

    #[test]
    fn rewritten_expressions_are_provably_equal(e in arb_cap(true), seed in any::<u64>()) {
        let r = rewrite(&e, seed);
        if let (Ok(a), Ok(b)) = (normalize(&e), normalize(&r)) {
            prop_assert_eq!(check_capacity(&a, &b), CapEquality::Equal, "{} vs {}", a, b);
        }
    }

    #[test]
    fn equality_implies_equal_values(a in arb_cap(true), b in arb_cap(true), points in prop::collection::vec(prop::array::uniform3(0i128..40), 100)) {
        let (Ok(ca), Ok(cb)) = (normalize(&a), normalize(&b)) else { return Ok(()) };
        if check_capacity(&ca, &cb) == CapEquality::Equal {
            for p in points {
                let env = assignment(p);
                if let (Some(x), Some(y)) = (eval_ast(&a, &env), eval_ast(&b, &env)) {
                    prop_assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn inequality_without_division_has_a_witness(a in arb_cap(false), b in arb_cap(false)) {
        let (ca, cb) = (normalize(&a).unwrap(), normalize(&b).unwrap());
        if check_capacity(&ca, &cb) == CapEquality::NotProvablyEqual {
            let witness = (0..12).flat_map(|n| (0..12).flat_map(move |m| (0..12).map(move |k| [n, m, k])))
                .map(assignment)
                .find(|env| eval_ast(&a, env) != eval_ast(&b, env));
            prop_assert!(witness.is_some(), "{} vs {}", ca, cb);
        }
    }
}

#[test]
fn capacity_examples() {
    let parse_cap = |s: &str| -> Cap {
        let e = parse_expr(&format!("array int32[{s}] end"), "t").unwrap();
        let juniper::frontend::ast::ExprKind::ArrayEmpty(t) = e.kind else { panic!() };
        let juniper::frontend::ast::TypeExprKind::Array(_, c) = t.kind else { panic!() };
        normalize(&c).unwrap()
    };
    assert_eq!(check_capacity(&parse_cap("n+1"), &parse_cap("1+n")), CapEquality::Equal);
    assert_eq!(check_capacity(&parse_cap("4"), &parse_cap("2*2")), CapEquality::Equal);
    let (p, s) = (parse_cap("n*m"), parse_cap("n+m"));
    assert_eq!(check_capacity(&p, &s), CapEquality::NotProvablyEqual);
    let env: HashMap<String, i128> = [("n".to_string(), 2), ("m".to_string(), 3)].into();
    assert_ne!(p.eval(&env), s.eval(&env));
}

// ---- substitution composition ---------------------------------------------

fn arb_small_cap() -> impl Strategy<Value = Cap> {
    let leaf =
        prop_oneof![(0i128..5).prop_map(Cap::constant), prop::sample::select(vec!["n", "m"]).prop_map(Cap::var),];
    leaf.prop_recursive(2, 6, 2, |inner| {
        (0u8..4, inner.clone(), inner).prop_map(|(op, a, b)| match op {
            0 => a.add(&b),
            1 => a.sub(&b),
            2 => a.mul(&b),
            _ => a.div(&b).unwrap_or(a),
        })
    })
}

fn arb_type() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::Unit),
        Just(Type::Bool),
        prop::sample::select(IntTy::ALL.to_vec()).prop_map(Type::Int),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(|v| Type::Var(v.to_string())),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (prop::collection::vec(inner.clone(), 0..3), inner.clone()).prop_map(|(ps, r)| Type::Fun(ps, Box::new(r))),
            inner.clone().prop_map(|t| Type::Adt(QualName::new("Prelude", "sig"), vec![t], vec![])),
            inner.clone().prop_map(|t| Type::Ref(Box::new(t))),
            (inner.clone(), arb_small_cap()).prop_map(|(t, c)| Type::Array(Box::new(t), c)),
            prop::collection::vec(inner, 2..4).prop_map(Type::Tuple),
        ]
    })
}

fn arb_subst() -> impl Strategy<Value = Subst> {
    (
        prop::collection::hash_map(prop::sample::select(vec!["a", "b", "c"]).prop_map(String::from), arb_type(), 0..3),
        prop::collection::hash_map(prop::sample::select(vec!["n", "m"]).prop_map(String::from), arb_small_cap(), 0..2),
    )
        .prop_map(|(types, caps)| Subst { types, caps })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn substitution_composes(t in arb_type(), s1 in arb_subst(), s2 in arb_subst()) {
        // Composition is eager: it can divide by zero in a binding `t` never
        // mentions, in which case there is no composite to compare against.
        let composite = s2.compose(&s1);
        prop_assume!(composite.is_ok());
        let stepwise = t.subst(&s1).and_then(|t| t.subst(&s2));
        let composed = t.subst(&composite.unwrap());
        match (&stepwise, &composed) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            _ => prop_assert!(stepwise.is_err() && composed.is_err()),
        }
    }
}

// ---- resolution, checking and instantiation --------------------------------

#[test]
fn blink_resolves_names_through_opens() {
    let out = common::check(common::BLINK);
    assert!(out.diagnostics.is_empty(), "{}", common::render(&out.diagnostics));
    let blink = out.env.module("Blink").unwrap();
    assert_eq!(blink.opens, vec!["Prelude", "Io", "Time"]);
    for (name, module) in [("sig", "Prelude"), ("digOut", "Io"), ("every", "Time")] {
        let r = juniper::frontend::ast::DeclRef::Local(Ident::new(name, Span::default()));
        let found = match out.env.lookup_value("Blink", &r) {
            Ok(juniper::semantics::env::ValueTarget::Value(v)) => v.name.module.clone(),
            _ => match out.env.lookup_type("Blink", &r) {
                Ok(juniper::semantics::env::TypeTarget::Def(d)) => d.name.module.clone(),
                other => panic!("{name}: {other:?}"),
            },
        };
        assert_eq!(found, module);
    }
}

#[test]
fn unqualified_name_without_open_is_unresolved() {
    let d = check_src(&[("M.jun", "module M\nfun f(s : sig<int32>) : unit = ()")]);
    assert_eq!(errors(&d).len(), 1);
    assert!(d[0].message.contains("sig"), "{}", d[0].message);
}

#[test]
fn ambiguous_open_is_an_error_and_qualifier_resolves_it() {
    let bad = check_src(&[("M.jun", "module M\nopen(Io, Time, Button)\nlet s : timerState ref = state()")]);
    let e = errors(&bad);
    assert_eq!(e.len(), 1);
    assert!(e[0].message.contains("ambiguous"), "{}", e[0].message);
    let good = check_src(&[("M.jun", "module M\nopen(Io, Time, Button)\nlet s : timerState ref = Time:state()")]);
    assert!(good.is_empty(), "{:?}", good);
}

#[test]
fn dependency_cycle_is_rejected() {
    let d = check_src(&[("A.jun", "module A\nlet x : int32 = B:y"), ("B.jun", "module B\nlet y : int32 = A:x")]);
    assert!(d.iter().any(|d| d.message.contains("dependency cycle")), "{d:?}");
}

#[test]
fn let_initializer_mismatch() {
    let d = check_src(&[("M.jun", "module M\nlet x : int32 = true")]);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].message, "type mismatch: expected `int32`, found `bool`");
}

#[test]
fn stdlib_signatures() {
    let out = common::check(&[]);
    let scheme = |m: &str, f: &str| out.env.module(m).unwrap().values[f].scheme.to_string();
    assert_eq!(scheme("Signal", "map"), "∀'a,'b.(('a)->'b, sig<'a>)->sig<'b>");
    assert_eq!(scheme("Signal", "foldP"), "∀'a,'state.(('a, 'state)->'state, 'state ref, sig<'a>)->sig<'state>");
}

#[test]
fn instantiation_examples() {
    let out = common::check(common::BLINK_BUTTON);
    let env = &out.env;
    let pin = Type::Adt(QualName::new("Io", "pinState"), vec![], vec![]);
    let mode = Type::Adt(QualName::new("ModeButton", "mode"), vec![], vec![]);
    let u32t = Type::Int(IntTy::U32);
    let fold = instantiate(env, &QualName::new("Signal", "foldP"), &[u32t, pin.clone()], &[]).unwrap();
    assert_eq!(fold.to_string(), "((uint32, pinState)->pinState, pinState ref, sig<uint32>)->sig<pinState>");
    let map = instantiate(env, &QualName::new("Signal", "map"), &[mode, pin], &[]).unwrap();
    assert_eq!(map.to_string(), "((mode)->pinState, sig<mode>)->sig<pinState>");
    let own = instantiate(env, &QualName::new("Signal", "map"), &[Type::Var("a".into()), Type::Var("b".into())], &[])
        .unwrap();
    assert_eq!(own, out.env.module("Signal").unwrap().values["map"].scheme.ty);
    assert!(instantiate(env, &QualName::new("Signal", "map"), &[Type::Unit], &[]).is_err());
    assert!(instantiate(env, &QualName::new("Signal", "map"), &[Type::Unit, Type::Unit], &[Cap::constant(3)]).is_err());
}

fn expr_type(module: &str, src: &str, expected: Option<&Type>) -> Result<Type, String> {
    let out = common::check(common::BLINK);
    let e = parse_expr(src, "e.jun").map_err(|d| format!("{d:?}"))?;
    check_expr(&out.env, module, &e, expected).map(|(t, _)| t.ty).map_err(|d| d.message)
}

#[test]
fn expression_typing_examples() {
    assert_eq!(expr_type("Blink", "while true do () end", None).unwrap(), Type::Unit);
    assert_eq!(expr_type("Blink", "#foo();#", None).unwrap(), Type::Unit);
    let r = expr_type("Blink", "(let mutable x : int32 = 0; #x = 1;#; x)", None).unwrap();
    assert_eq!(r, Type::int32());
    let bad = expr_type("Blink", "(let x : int32 = 0; set x = 1; x)", None).unwrap_err();
    assert!(bad.contains("immutable"), "{bad}");
    let deref = expr_type("Blink", "!boardLed", None).unwrap_err();
    assert!(deref.contains("dereference"), "{deref}");
    let branch = expr_type("Blink", "if true then 1 else false end", None).unwrap_err();
    assert!(branch.contains("mismatch") || branch.contains("disagree"), "{branch}");
    let index = expr_type("Blink", "boardLed[0]", None).unwrap_err();
    assert!(index.contains("cannot index"), "{index}");
}

#[test]
fn fold_body_has_the_signal_type() {
    let src = "module M\nopen(Prelude)\nfun g<'state>(state0 : 'state ref, state1 : 'state) : sig<'state> =\n  (set ref state0 = state1; signal<'state>(just<'state>(state1)))";
    assert!(check_src(&[("M.jun", src)]).is_empty());
}

#[test]
fn pattern_checking() {
    let ok = "module M\nopen(Prelude)\ntype flip = flipUp | flipDown\ntype mode = setting | timing\nfun f(x : (flip * mode)) : int32 =\n  case x of\n  | (flipUp(), setting()) => 1\n  | _ => 0\n  end";
    assert!(check_src(&[("M.jun", ok)]).is_empty());
    let wrong_ctor = "module M\nopen(Prelude)\ntype flip = flipUp | flipDown\nfun f(x : sig<int32>) : int32 =\n  case x of\n  | flipUp() => 1\n  | _ => 0\n  end";
    let d = check_src(&[("M.jun", wrong_ctor)]);
    assert!(d[0].message.contains("belongs to type"), "{}", d[0].message);
    let payload = "module M\nopen(Prelude)\nfun f(x : maybe<int32>) : int32 =\n  case x of\n  | nothing<int32>(y) => y\n  | _ => 0\n  end";
    let d = check_src(&[("M.jun", payload)]);
    assert!(d[0].message.contains("takes no payload"), "{}", d[0].message);
}

#[test]
fn non_exhaustive_case_is_a_warning() {
    let src = "module M\nopen(Prelude)\nfun f(x : maybe<int32>) : int32 =\n  case x of\n  | just<int32>(v) => v\n  end";
    let d = check_src(&[("M.jun", src)]);
    assert_eq!(d.len(), 1);
    assert!(!d[0].is_error());
}

#[test]
fn checking_is_deterministic_and_order_independent() {
    let a = ("A.jun", "module A\nlet x : int32 = 1");
    let b = ("B.jun", "module B\nlet y : bool = 2");
    let d1: Vec<String> = check_src(&[a, b]).iter().map(|d| d.render_line()).collect();
    let d2: Vec<String> = check_src(&[b, a]).iter().map(|d| d.render_line()).collect();
    assert_eq!(d1, d2);
    assert_eq!(d1.len(), 1);
}
