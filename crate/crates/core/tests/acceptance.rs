//! One line per acceptance criterion, `PASS` or `FAIL`, with timings.
//! Exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use juniper::codegen::{emit_adt, emit_function};
use juniper::frontend::coverage::{productions, PRODUCTIONS};
use juniper::frontend::parse_source;
use juniper::interp::SimHost;
use juniper::pipeline;
use juniper::semantics::QualName;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn grammar_and_mutations() -> Outcome {
    let start = Instant::now();
    let mut seen = BTreeSet::new();
    for (name, text) in all_sources() {
        let m = parse_source(&text, &name).map_err(|d| format!("{name}: {}", render(&d)))?;
        seen.extend(productions(&m));
    }
    let missing: Vec<&&str> = PRODUCTIONS.iter().filter(|p| !seen.contains(*p)).collect();
    ensure(missing.is_empty(), || format!("productions not exercised: {missing:?}"))?;
    let stats = run_mutations();
    ensure(stats.failures.is_empty(), || {
        format!("{} mutants crashed or lacked a position: {:?}", stats.failures.len(), stats.failures)
    })?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "{} productions covered; {} mutants, {} diagnosed, {} still valid",
        PRODUCTIONS.len(),
        stats.total,
        stats.diagnosed,
        stats.valid.len()
    ))
}

fn example_corpus() -> Outcome {
    for (label, files) in
        [("blink", BLINK), ("button", MODE_BUTTON), ("composition", BLINK_BUTTON), ("hourglass", HOURGLASS)]
    {
        let out = check(files);
        ensure(out.diagnostics.is_empty(), || format!("{label}: {}", render(&out.diagnostics)))?;
    }
    let out = check(&[]);
    let map = out.env.module("Signal").unwrap().values["map"].scheme.to_string();
    ensure(map == "∀'a,'b.(('a)->'b, sig<'a>)->sig<'b>", || format!("map : {map}"))?;
    Ok(format!("map : {map}"))
}

fn golden_codegen() -> Outcome {
    let c = compile_with("S.jun", "module S\nopen(Prelude)\nfun spin() : unit = while true do () end\n");
    let sig = emit_adt("Prelude", c.program.type_decl(&QualName::new("Prelude", "sig")).unwrap());
    ensure(sig.contains("struct sig {\n    uint8_t tag;"), || format!("no tag field:\n{sig}"))?;
    ensure(sig.contains("Prelude::sig<a> signal(Prelude::maybe<a> guid0)"), || format!("no signal factory:\n{sig}"))?;
    ensure(sig.contains(".tag = 0;") && sig.contains(".signal = guid0;"), || {
        format!("factory does not set tag 0:\n{sig}")
    })?;

    let map = emit_function(c.program.function(&QualName::new("Signal", "map")).unwrap());
    let at = map.find(" = s;").ok_or_else(|| format!("scrutinee not bound:\n{map}"))?;
    let guid = map[..at].rsplit(' ').next().unwrap_or_default().to_string();
    ensure(guid.starts_with("guid"), || format!("scrutinee bound to `{guid}`"))?;
    ensure(map.contains(&format!("((({guid}).tag == 0) && (((({guid}).signal).tag == 0) && true))")), || {
        format!("no tag test chain on {guid}:\n{map}")
    })?;
    ensure(map.contains("Prelude::signal<b>(Prelude::just<b>(f(val)))"), || format!("no just arm:\n{map}"))?;
    ensure(map.contains("juniper::quit<Prelude::sig<b>>()"), || format!("no abort fallback:\n{map}"))?;

    let spin = emit_function(c.program.function(&QualName::new("S", "spin")).unwrap());
    ensure(spin.contains("(([&]() -> Prelude::unit {\n        while (true) {"), || {
        format!("no loop wrapper:\n{spin}")
    })?;
    ensure(spin.contains("return {};\n    })());"), || format!("loop wrapper does not return unit:\n{spin}"))?;

    for files in [BLINK, BLINK_BUTTON, TOUR, HOURGLASS] {
        let a = pipeline::emit(&compile_corpus(files)).text;
        let b = pipeline::emit(&compile_corpus(files)).text;
        ensure(a == b, || format!("{files:?}: reruns differ"))?;
    }
    Ok(format!("scrutinee {guid}; reruns byte-identical"))
}

fn signal_algebra() -> Outcome {
    let start = Instant::now();
    laws::functor(200).map_err(|e| format!("functor: {e}"))?;
    laws::meta_round_trip(200).map_err(|e| format!("meta: {e}"))?;
    laws::fold_past(1000).map_err(|e| format!("foldP: {e}"))?;
    laws::latch_hold(500).map_err(|e| format!("latch: {e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok("functor 200, meta 200, foldP 1000, latch 500 cases".into())
}

fn blink() -> Outcome {
    let trace = sim_trace(BLINK, SimHost::with_horizon(100, 10_000, vec![]))?;
    let expected = expected_blink();
    ensure(trace == expected, || format!("trace {trace:?}"))?;
    let times: Vec<u32> = trace.iter().map(|e| e.time_ms).collect();
    Ok(format!("pin 13 toggles at {times:?}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 5] = [
        ("grammar coverage and mutation corpus", grammar_and_mutations),
        ("example programs typecheck", example_corpus),
        ("golden codegen for sig, map and while", golden_codegen),
        ("signal algebra on the interpreter", signal_algebra),
        ("blink via the interpreter", blink),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
