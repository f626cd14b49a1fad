mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::*;
use juniper::codegen::{emit_adt, emit_function, emit_inline_code, emit_program, RUNTIME_HEADER};
use juniper::pipeline;
use juniper::semantics::{QualName, TypedProgram};

fn q(m: &str, n: &str) -> QualName {
    QualName::new(m, n)
}

/// The `guid` name bound just before `marker` in `text`.
fn guid_before(text: &str, marker: &str) -> String {
    let at = text.find(marker).unwrap_or_else(|| panic!("`{marker}` not in:\n{text}"));
    let start = text[..at].rfind("guid").expect("no guid before marker");
    text[start..at].trim().to_string()
}

#[test]
fn sig_lowers_to_a_tagged_struct_with_a_tag_zero_factory() {
    let c = compile_corpus(&[]);
    let sig = c.program.type_decl(&q("Prelude", "sig")).unwrap();
    let out = emit_adt("Prelude", sig);
    assert!(out.starts_with("template<typename a>\nstruct sig {\n    uint8_t tag;\n"), "{out}");
    assert!(out.contains("    Prelude::maybe<a> signal;\n"), "{out}");
    assert!(out.contains("bool operator==(sig rhs) const"), "{out}");
    assert!(out.contains("bool operator!=(sig rhs) const"), "{out}");
    assert!(out.contains("template<typename a>\nPrelude::sig<a> signal(Prelude::maybe<a> guid0) {"), "{out}");
    let ret = guid_before(&out, ".tag = 0;");
    assert!(out.contains(&format!("{ret}.signal = guid0;")), "{out}");
    assert!(out.contains(&format!("return {ret};")), "{out}");
    assert!(out.contains("return (([&]() -> Prelude::sig<a> {"), "{out}");
}

#[test]
fn nullary_constructors_get_tags_in_order() {
    let c = compile_corpus(MODE_BUTTON);
    let mode = c.program.type_decl(&q("ModeButton", "mode")).unwrap();
    let out = emit_adt("ModeButton", mode);
    assert!(out.starts_with("struct mode {\n    uint8_t tag;\n\n"), "{out}");
    assert!(out.contains("ModeButton::mode on() {"), "{out}");
    assert!(out.contains("ModeButton::mode off() {"), "{out}");
    let on = &out[out.find("on() {").unwrap()..out.find("off() {").unwrap()];
    let off = &out[out.find("off() {").unwrap()..];
    assert!(on.contains(".tag = 0;") && off.contains(".tag = 1;"), "{out}");
    assert!(!out.contains("switch"), "no payloads to compare:\n{out}");
}

#[test]
fn single_constructor_equality_compares_the_payload() {
    let c = compile_with("One.jun", "module One\ntype box = box of int32\n");
    let out = emit_adt("One", c.program.type_decl(&q("One", "box")).unwrap());
    assert!(out.contains("case 0:\n            return box == rhs.box;"), "{out}");
}

#[test]
fn map_lowers_to_a_guarded_conditional_chain() {
    let c = compile_corpus(&[]);
    let map = c.program.function(&q("Signal", "map")).unwrap();
    let out = emit_function(map);
    assert!(
        out.starts_with(
            "template<typename a, typename b>\nPrelude::sig<b> map(juniper::function<b(a)> f, Prelude::sig<a> s) {\n    return "
        ),
        "{out}"
    );
    let g = guid_before(&out, " = s;");
    assert!(g.starts_with("guid") && g[4..].chars().all(|c| c.is_ascii_digit()), "{g}");
    assert!(out.contains(&format!("Prelude::sig<a> {g} = s;")), "{out}");
    assert!(out.contains(&format!("((({g}).tag == 0) && (((({g}).signal).tag == 0) && true))")), "{out}");
    assert!(out.contains(&format!("auto val = (({g}).signal).just;")), "{out}");
    assert!(out.contains("return Prelude::signal<b>(Prelude::just<b>(f(val)));"), "{out}");
    assert!(out.contains("return Prelude::signal<b>(Prelude::nothing<b>());"), "{out}");
    assert!(out.contains(": juniper::quit<Prelude::sig<b>>()"), "{out}");
}

const SNIPPETS: &str = "module S
open(Prelude)

fun spin() : unit = while true do () end

fun nothingMuch() : unit = ()

fun answer() : int32 = 42

fun wide() : int32 = 100000

fun first<'a; n>(xs : 'a[n]) : 'a = xs[0]

fun getX(p : pointer) : int32 = (
    let mutable x : int32 = 0;
    #x = 5;#;
    x
)
";

fn snippets() -> pipeline::Checked {
    compile_with("S.jun", SNIPPETS)
}

#[test]
fn while_lowers_to_a_unit_returning_wrapper() {
    let c = snippets();
    let out = emit_function(c.program.function(&q("S", "spin")).unwrap());
    let expected = "Prelude::unit spin() {
    return (([&]() -> Prelude::unit {
        while (true) {
            Prelude::unit();
        }
        return {};
    })());
}
";
    assert_eq!(out, expected);
}

#[test]
fn small_functions_lower_directly() {
    let c = snippets();
    let f = |n: &str| emit_function(c.program.function(&q("S", n)).unwrap());
    assert_eq!(f("nothingMuch"), "Prelude::unit nothingMuch() {\n    return Prelude::unit();\n}\n");
    assert_eq!(f("answer"), "int32_t answer() {\n    return 42;\n}\n");
    assert_eq!(f("wide"), "int32_t wide() {\n    return ((int32_t) 100000);\n}\n");
}

#[test]
fn capacity_variables_become_integral_template_parameters() {
    let c = snippets();
    let out = emit_function(c.program.function(&q("S", "first")).unwrap());
    assert!(out.starts_with("template<typename a, int n>\na first(juniper::array<a, n> xs) {"), "{out}");
}

#[test]
fn inline_code_is_spliced_into_a_unit_wrapper() {
    let out = emit_inline_code("digitalWrite(13, HIGH);");
    assert!(out.starts_with("(([&]() -> Prelude::unit {"), "{out}");
    assert!(out.contains("digitalWrite(13, HIGH);"), "{out}");
    assert!(out.contains("return {};"), "{out}");
    let empty = emit_inline_code("");
    assert!(empty.contains("-> Prelude::unit {") && empty.contains("return {};"), "{empty}");
    assert!(!empty.contains(';') || empty.matches(';').count() == 1, "{empty}");
}

#[test]
fn inline_code_sees_enclosing_locals_by_reference() {
    let c = snippets();
    let out = emit_function(c.program.function(&q("S", "getX")).unwrap());
    assert!(out.contains("int32_t x = 0;"), "{out}");
    assert!(out.contains("(([&]() -> Prelude::unit {") && out.contains("x = 5;"), "{out}");
    assert!(out.trim_end().ends_with("return x;\n    })());\n}"), "{out}");
}

#[test]
fn blink_emits_its_dependencies_and_an_entry_point() {
    let c = compile_corpus(BLINK);
    let unit = pipeline::emit(&c);
    let names: Vec<&str> = unit.namespaces.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["Prelude", "Signal", "Io", "Time", "Blink"]);
    assert!(unit.text.starts_with(&format!("#include \"{RUNTIME_HEADER}\"\n")), "{}", &unit.text[..200]);
    assert!(unit.entry.contains("int main() {\n    Blink::main();\n    return 0;\n}"), "{}", unit.entry);
    assert!(unit.entry.contains("void setup() {\n    Blink::main();\n}"), "{}", unit.entry);
    assert!(unit.fresh_counter > 0);
}

#[test]
fn the_last_main_is_the_entry() {
    let unit = pipeline::emit(&compile_corpus(BLINK_BUTTON));
    assert!(unit.entry.contains("BlinkButton::main();"), "{}", unit.entry);
    assert!(!unit.entry.contains("Blink::main();"), "{}", unit.entry);
}

#[test]
fn empty_program_has_only_the_runtime_and_an_entry() {
    let unit = emit_program(&TypedProgram { modules: vec![] });
    assert!(unit.header_includes.is_empty());
    assert!(unit.namespaces.is_empty());
    assert!(unit.text.starts_with(&format!("#include \"{RUNTIME_HEADER}\"\n")));
    assert!(unit.text.contains("int main() {\n    return 0;\n}"), "{}", unit.text);
    assert_eq!(unit.text.matches("#include").count(), 1);
}

#[test]
fn no_user_modules_emits_the_stdlib() {
    let unit = pipeline::emit(&compile_corpus(&[]));
    let names: Vec<&str> = unit.namespaces.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, juniper::stdlib::MODULE_NAMES);
    assert!(unit.text.contains("int main() {\n    return 0;\n}"));
}

#[test]
fn user_includes_come_before_the_runtime() {
    let unit = pipeline::emit(&compile_corpus(TOUR));
    assert_eq!(unit.header_includes, ["<stdint.h>", "\"tour_local.h\""]);
    let a = unit.text.find("#include <stdint.h>").unwrap();
    let b = unit.text.find("#include \"tour_local.h\"").unwrap();
    let r = unit.text.find(&format!("#include \"{RUNTIME_HEADER}\"")).unwrap();
    assert!(a < b && b < r);
}

fn corpus_groups() -> Vec<(&'static str, &'static [&'static str])> {
    vec![
        ("blink", BLINK),
        ("mode_button", MODE_BUTTON),
        ("blink_button", BLINK_BUTTON),
        ("tour", TOUR),
        ("hourglass", HOURGLASS),
    ]
}

#[test]
fn emission_is_deterministic() {
    for (name, files) in corpus_groups() {
        let a = pipeline::emit(&compile_corpus(files));
        let b = pipeline::emit(&compile_corpus(files));
        assert_eq!(a.text, b.text, "{name}");
        let c = compile_corpus(files);
        assert_eq!(pipeline::emit(&c), pipeline::emit(&c), "{name}");
    }
}

fn identifiers(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    let mut in_string = false;
    for ch in text.chars() {
        if ch == '"' {
            in_string = !in_string;
        }
        if !in_string && (ch.is_ascii_alphanumeric() || ch == '_') {
            cur.push(ch);
        } else {
            if cur.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                out.insert(std::mem::take(&mut cur));
            }
            cur.clear();
        }
    }
    out
}

/// Words the code generator writes on its own: target keywords and the
/// runtime header's vocabulary.
const TARGET_WORDS: &[&str] = &[
    "ARDUINO",
    "Prelude",
    "array",
    "auto",
    "bool",
    "break",
    "case",
    "const",
    "default",
    "define",
    "double",
    "else",
    "endif",
    "false",
    "float",
    "for",
    "function",
    "get",
    "if",
    "ifdef",
    "include",
    "int",
    "int16_t",
    "int32_t",
    "int64_t",
    "int8_t",
    "juniper",
    "loop",
    "main",
    "namespace",
    "new",
    "nullptr",
    "operator",
    "quit",
    "return",
    "rhs",
    "set",
    "setup",
    "shared_ptr",
    "struct",
    "switch",
    "tag",
    "template",
    "true",
    "typename",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "uint8_t",
    "unit",
    "using",
    "void",
    "while",
    "e1",
    "e2",
    "e3",
    "e4",
    "e5",
    "e6",
    "e7",
    "e8",
    "tuple2",
    "tuple3",
    "tuple4",
    "tuple5",
    "tuple6",
    "tuple7",
    "tuple8",
    "this",
];

#[test]
fn user_names_are_kept_and_invented_names_are_guids() {
    for (name, files) in corpus_groups() {
        let srcs = program(files);
        let user: BTreeSet<String> = srcs.iter().flat_map(|(_, s)| identifiers(s)).collect();
        let c = compile_corpus(files);
        let text = emit_program(&c.program).text;
        // Include targets are checked separately and are not identifiers.
        let body: String = text.lines().filter(|l| !l.starts_with("#include")).collect::<Vec<_>>().join("\n");
        let emitted = identifiers(&body);

        for f in c.program.modules.iter().flat_map(|m| &m.functions) {
            assert!(emitted.contains(&f.name), "{name}: function `{}` missing", f.name);
            for (p, _) in &f.params {
                assert!(emitted.contains(p), "{name}: parameter `{p}` of `{}` missing", f.name);
            }
        }
        for m in &c.program.modules {
            assert!(text.contains(&format!("namespace {} {{", m.name)), "{name}: {}", m.name);
            for t in &m.types {
                assert!(text.contains(&format!("struct {} {{", t.name)), "{name}: {}", t.name);
            }
        }

        let invented: Vec<&String> = emitted
            .iter()
            .filter(|w| !user.contains(*w) && !TARGET_WORDS.contains(&w.as_str()))
            .filter(|w| !(w.starts_with("guid") && w[4..].chars().all(|c| c.is_ascii_digit()) && w.len() > 4))
            .collect();
        assert!(invented.is_empty(), "{name}: unexpected identifiers {invented:?}");
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cpp")
}

fn have_gxx() -> bool {
    Command::new("g++").arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

fn syntax_check(label: &str, text: &str) {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("codegen");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{label}.cpp"));
    std::fs::write(&path, text).unwrap();
    let out =
        Command::new("g++").args(["-std=c++17", "-fsyntax-only", "-I"]).arg(fixtures()).arg(&path).output().unwrap();
    assert!(out.status.success(), "{label} failed to compile:\n{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn corpus_output_compiles_with_a_host_compiler() {
    if !have_gxx() {
        eprintln!("g++ not found; skipping");
        return;
    }
    for (name, files) in corpus_groups() {
        syntax_check(name, &pipeline::emit(&compile_corpus(files)).text);
    }
    syntax_check("snippets", &pipeline::emit(&snippets()).text);
    syntax_check("stdlib", &pipeline::emit(&compile_corpus(&[])).text);
}
