#![allow(dead_code)]

use std::path::PathBuf;

use juniper::frontend::{parse_program, SourceModule};
use juniper::semantics::{check_program, CheckOutput};
use juniper::stdlib;

pub const BLINK: &[&str] = &["Blink.jun"];
pub const MODE_BUTTON: &[&str] = &["ModeButton.jun"];
pub const BLINK_BUTTON: &[&str] = &["Blink.jun", "ModeButton.jun", "BlinkButton.jun"];
pub const TOUR: &[&str] = &["Tour.jun"];
pub const HOURGLASS: &[&str] = &[
    "hourglass/Accelerometer.jun",
    "hourglass/FastLed.jun",
    "hourglass/Setting.jun",
    "hourglass/Timing.jun",
    "hourglass/Paused.jun",
    "hourglass/Finale.jun",
    "hourglass/Hourglass.jun",
];

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Every `.jun` file in the corpus plus the bundled stdlib.
pub fn all_sources() -> Vec<(String, String)> {
    let mut out = stdlib::sources();
    let mut files: Vec<&str> = Vec::new();
    for group in [BLINK_BUTTON, TOUR, HOURGLASS] {
        files.extend(group.iter().copied());
    }
    for f in files {
        out.push((f.to_string(), read(f)));
    }
    out
}

/// Stdlib followed by the given corpus files.
pub fn program(files: &[&str]) -> Vec<(String, String)> {
    let mut srcs = stdlib::sources();
    srcs.extend(files.iter().map(|f| (f.to_string(), read(f))));
    srcs
}

pub fn parse(srcs: &[(String, String)]) -> Vec<SourceModule> {
    parse_program(srcs).unwrap_or_else(|d| panic!("{}", render(&d)))
}

pub fn check(files: &[&str]) -> CheckOutput {
    check_program(&parse(&program(files)))
}

pub fn render(diags: &[juniper::Diagnostic]) -> String {
    diags.iter().map(|d| d.render_line()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Default)]
pub struct MutationStats {
    pub total: usize,
    /// Mutants reported with at least one positioned diagnostic.
    pub diagnosed: usize,
    /// Mutants that are still well-formed programs and check cleanly.
    pub valid: Vec<String>,
    /// Mutants rejected without any diagnostic, or that panicked.
    pub failures: Vec<String>,
}

/// Deletes each token of each corpus file in turn and runs the front end and
/// checker on the result. The stdlib is parsed once and reused.
pub fn run_mutations() -> MutationStats {
    use std::panic::{catch_unwind, AssertUnwindSafe};

    use juniper::frontend::{parse_source, tokenize};

    let srcs = all_sources();
    let first_user = stdlib::SOURCES.len();
    let base = parse(&srcs);
    let mut stats = MutationStats::default();
    for f in first_user..srcs.len() {
        let (name, text) = &srcs[f];
        for t in tokenize(text, name).unwrap() {
            stats.total += 1;
            let label = format!("{name}:{}:{} `{}`", t.span.line, t.span.col, t.text);
            let m = format!("{}{}", &text[..t.span.offset], &text[t.span.offset + t.span.len..]);
            let r = catch_unwind(AssertUnwindSafe(|| match parse_source(&m, name) {
                Err(d) => d,
                Ok(module) => {
                    let mut mods = base.clone();
                    mods[f] = module;
                    check_program(&mods).diagnostics
                }
            }));
            match r {
                Err(_) => stats.failures.push(format!("{label}: panicked")),
                Ok(d) if d.is_empty() => stats.valid.push(label),
                Ok(d) if d.iter().all(|d| d.span.line > 0 && d.span.col > 0) => stats.diagnosed += 1,
                Ok(_) => stats.failures.push(format!("{label}: diagnostic without position")),
            }
        }
    }
    stats
}

use juniper::interp::{Closure, Value};
use juniper::pipeline::{self, Checked};
use juniper::semantics::QualName;

/// Checks the stdlib plus one extra module given as source text.
pub fn compile_with(name: &str, src: &str) -> Checked {
    pipeline::check(&[(name.to_string(), src.to_string())], pipeline::Options::default())
        .unwrap_or_else(|e| panic!("{}", render(&e.diagnostics)))
}

/// Checks the stdlib plus the given corpus files.
pub fn compile_corpus(files: &[&str]) -> Checked {
    let srcs: Vec<(String, String)> = files.iter().map(|f| (f.to_string(), read(f))).collect();
    pipeline::check(&srcs, pipeline::Options::default()).unwrap_or_else(|e| panic!("{}", render(&e.diagnostics)))
}

pub fn just<'p>(v: Value<'p>) -> Value<'p> {
    Value::ctor("signal", 0, Some(Value::ctor("just", 0, Some(v))))
}

pub fn nothing<'p>() -> Value<'p> {
    Value::ctor("signal", 0, Some(Value::ctor("nothing", 1, None)))
}

pub fn maybe_just<'p>(v: Value<'p>) -> Value<'p> {
    Value::ctor("just", 0, Some(v))
}

pub fn maybe_nothing<'p>() -> Value<'p> {
    Value::ctor("nothing", 1, None)
}

/// A top-level function as a first-class value.
pub fn function<'p>(module: &str, name: &str) -> Value<'p> {
    Value::Closure(std::rc::Rc::new(Closure::Function { name: QualName::new(module, name), subst: Default::default() }))
}

/// Table-driven int32 functions used by the signal law checks.
pub const LAWS: &str = "module Laws
open(Prelude)

fun table(t : int32[8]) : (int32) -> int32 =
    fn (x : int32) : int32 -> t[x]

fun compose(f : (int32) -> int32, g : (int32) -> int32) : (int32) -> int32 =
    fn (x : int32) : int32 -> f(g(x))

fun ident(x : int32) : int32 = x

fun mix(v : int32, acc : int32) : int32 = acc * 31 + v
";

pub fn laws() -> Checked {
    compile_with("Laws.jun", LAWS)
}

pub mod laws {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

    use juniper::interp::{Interp, NullHost, Stop, Value};
    use juniper::semantics::{QualName, Type};

    use super::{function, just, laws, maybe_just, maybe_nothing, nothing};

    fn runner(cases: u32) -> TestRunner {
        TestRunner::new_with_rng(
            Config { cases, failure_persistence: None, ..Config::default() },
            TestRng::deterministic_rng(RngAlgorithm::ChaCha),
        )
    }

    fn ok<T>(r: Result<T, Stop>) -> Result<T, TestCaseError> {
        r.map_err(|e| TestCaseError::fail(e.to_string()))
    }

    fn q(m: &str, n: &str) -> QualName {
        QualName::new(m, n)
    }

    fn ints(n: usize) -> Vec<Type> {
        vec![Type::int32(); n]
    }

    fn signal<'p>(v: Option<i32>) -> Value<'p> {
        v.map_or_else(nothing, |v| just(Value::i32(v)))
    }

    /// `map(id, s) == s` and `map(f . g, s) == map(f, map(g, s))`, with `f`
    /// and `g` built in the language from random lookup tables. Both sides
    /// are also compared against the tables applied directly.
    pub fn functor(cases: u32) -> Result<(), String> {
        let c = laws();
        let p = &c.program;
        let strategy = (prop::array::uniform8(0i32..8), prop::array::uniform8(0i32..8), prop::option::of(0i32..8));
        runner(cases)
            .run(&strategy, |(tf, tg, v)| {
                let mut host = NullHost;
                let mut it = ok(Interp::new(p, &mut host))?;
                let s = signal(v);
                let map = q("Signal", "map");
                let table = |t: [i32; 8]| Value::Array(t.iter().map(|x| Value::i32(*x)).collect());
                let f = ok(it.call(&q("Laws", "table"), &[], &[], vec![table(tf)]))?;
                let g = ok(it.call(&q("Laws", "table"), &[], &[], vec![table(tg)]))?;

                let same = ok(it.call(&map, &ints(2), &[], vec![function("Laws", "ident"), s.clone()]))?;
                prop_assert_eq!(&same, &s);

                let fg = ok(it.call(&q("Laws", "compose"), &[], &[], vec![f.clone(), g.clone()]))?;
                let lhs = ok(it.call(&map, &ints(2), &[], vec![fg, s.clone()]))?;
                let inner = ok(it.call(&map, &ints(2), &[], vec![g, s.clone()]))?;
                let rhs = ok(it.call(&map, &ints(2), &[], vec![f, inner]))?;
                prop_assert_eq!(&lhs, &rhs);
                prop_assert_eq!(lhs, signal(v.map(|v| tf[tg[v as usize] as usize])));
                Ok(())
            })
            .map_err(|e| e.to_string())
    }

    /// `unmeta(meta(s)) == s` for both signal shapes.
    pub fn meta_round_trip(cases: u32) -> Result<(), String> {
        let c = laws();
        let p = &c.program;
        runner(cases)
            .run(&prop::option::of(any::<i32>()), |v| {
                let mut host = NullHost;
                let mut it = ok(Interp::new(p, &mut host))?;
                let s = signal(v);
                let m = ok(it.call(&q("Signal", "meta"), &ints(1), &[], vec![s.clone()]))?;
                let inner = v.map_or_else(maybe_nothing, |v| maybe_just(Value::i32(v)));
                prop_assert_eq!(&m, &just(inner));
                let back = ok(it.call(&q("Signal", "unmeta"), &ints(1), &[], vec![m]))?;
                prop_assert_eq!(back, s);
                Ok(())
            })
            .map_err(|e| e.to_string())
    }

    fn mix(v: i32, acc: i32) -> i32 {
        acc.wrapping_mul(31).wrapping_add(v)
    }

    /// Driving `foldP` with a sequence of events leaves the state ref equal
    /// to a plain fold over the events that were present.
    pub fn fold_past(cases: u32) -> Result<(), String> {
        let c = laws();
        let p = &c.program;
        let strategy = (any::<i32>(), prop::collection::vec(prop::option::of(any::<i32>()), 0..24));
        runner(cases)
            .run(&strategy, |(s0, events)| {
                let mut host = NullHost;
                let mut it = ok(Interp::new(p, &mut host))?;
                let state = Value::new_ref(Value::i32(s0));
                let mut acc = s0;
                for e in &events {
                    let out = ok(it.call(
                        &q("Signal", "foldP"),
                        &ints(2),
                        &[],
                        vec![function("Laws", "mix"), state.clone(), signal(*e)],
                    ))?;
                    if let Some(v) = e {
                        acc = mix(*v, acc);
                    }
                    prop_assert_eq!(out, signal(e.map(|_| acc)));
                }
                let folded = events.iter().flatten().fold(s0, |acc, v| mix(*v, acc));
                prop_assert_eq!(state.deref().unwrap(), Value::i32(folded));
                Ok(())
            })
            .map_err(|e| e.to_string())
    }

    /// After a just-event `v`, every silent input yields `just v` until the
    /// next event.
    pub fn latch_hold(cases: u32) -> Result<(), String> {
        let c = laws();
        let p = &c.program;
        let strategy = (any::<i32>(), prop::collection::vec(prop::option::of(any::<i32>()), 0..24));
        runner(cases)
            .run(&strategy, |(init, events)| {
                let mut host = NullHost;
                let mut it = ok(Interp::new(p, &mut host))?;
                let prev = Value::new_ref(Value::i32(init));
                let mut held = init;
                for e in &events {
                    let out = ok(it.call(&q("Signal", "latch"), &ints(1), &[], vec![signal(*e), prev.clone()]))?;
                    if let Some(v) = e {
                        held = *v;
                    }
                    prop_assert_eq!(out, just(Value::i32(held)));
                }
                Ok(())
            })
            .map_err(|e| e.to_string())
    }
}

/// Runs a corpus program on the simulated board and returns its pin writes.
pub fn sim_trace(files: &[&str], host: juniper::interp::SimHost) -> Result<Vec<juniper::interp::PinEvent>, String> {
    let c = compile_corpus(files);
    let mut host = host;
    pipeline::run(&c, &mut host).map_err(|e| e.to_string())?;
    Ok(host.into_trace())
}

/// Pin 13 toggling every second from 1000 to 10000 ms, starting high.
pub fn expected_blink() -> Vec<juniper::interp::PinEvent> {
    (1..=10u32).map(|k| juniper::interp::PinEvent::new(k * 1000, 13, u8::from(k % 2 == 1))).collect()
}
