mod common;

use std::collections::BTreeSet;

use common::*;
use juniper::frontend::coverage::{productions, PRODUCTIONS};
use juniper::frontend::lexer::{is_trivia, reconstruct};
use juniper::frontend::{parse_source, tokenize};

fn assert_clean(files: &[&str]) {
    let out = check(files);
    assert!(out.diagnostics.is_empty(), "{}", render(&out.diagnostics));
}

#[test]
fn blink_typechecks() {
    assert_clean(BLINK);
}

#[test]
fn mode_button_typechecks() {
    assert_clean(MODE_BUTTON);
}

#[test]
fn blink_button_composition_typechecks() {
    assert_clean(BLINK_BUTTON);
}

#[test]
fn hourglass_skeleton_typechecks() {
    assert_clean(HOURGLASS);
}

#[test]
fn grammar_tour_typechecks() {
    assert_clean(TOUR);
}

#[test]
fn lexing_is_lossless_on_every_file() {
    for (name, text) in all_sources() {
        let toks = tokenize(&text, &name).unwrap();
        assert_eq!(reconstruct(&text, &toks), text, "{name}");
        let mut pos = 0;
        for t in &toks {
            assert!(is_trivia(&text[pos..t.span.offset]), "{name}: stray text before {:?}", t.text);
            assert_eq!(&text[t.span.offset..t.span.offset + t.span.len], t.text, "{name}");
            pos = t.span.offset + t.span.len;
        }
        assert!(is_trivia(&text[pos..]), "{name}");
    }
}

#[test]
fn corpus_covers_every_grammar_alternative() {
    let mut seen = BTreeSet::new();
    for (name, text) in all_sources() {
        seen.extend(productions(&parse_source(&text, &name).unwrap()));
    }
    let missing: Vec<&&str> = PRODUCTIONS.iter().filter(|p| !seen.contains(*p)).collect();
    assert!(missing.is_empty(), "not exercised: {missing:?}");
}

#[test]
fn parsing_is_deterministic() {
    for (name, text) in all_sources() {
        assert_eq!(parse_source(&text, &name).unwrap(), parse_source(&text, &name).unwrap());
    }
}
