//! Bundled source-language modules, prepended to user programs unless
//! disabled.

/// `(module name, source text)` in a valid dependency order.
pub const SOURCES: [(&str, &str); 5] = [
    ("Prelude.jun", include_str!("../stdlib/Prelude.jun")),
    ("Signal.jun", include_str!("../stdlib/Signal.jun")),
    ("Io.jun", include_str!("../stdlib/Io.jun")),
    ("Time.jun", include_str!("../stdlib/Time.jun")),
    ("Button.jun", include_str!("../stdlib/Button.jun")),
];

pub const MODULE_NAMES: [&str; 5] = ["Prelude", "Signal", "Io", "Time", "Button"];

pub fn is_stdlib_module(name: &str) -> bool {
    MODULE_NAMES.contains(&name)
}

/// Stdlib sources as owned pairs, ready to concatenate with user files.
pub fn sources() -> Vec<(String, String)> {
    SOURCES.iter().map(|(f, s)| (f.to_string(), s.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;
    use crate::semantics::check_program;

    #[test]
    fn stdlib_typechecks_without_diagnostics() {
        let srcs: Vec<(&str, &str)> = SOURCES.to_vec();
        let modules = parse_program(&srcs).unwrap_or_else(|d| panic!("{d:#?}"));
        let out = check_program(&modules);
        let rendered: Vec<String> = out.diagnostics.iter().map(|d| d.render_line()).collect();
        assert!(rendered.is_empty(), "{}", rendered.join("\n"));
    }
}
