//! Lowering of a [`TypedProgram`] to a single C++ translation unit.
//!
//! Modules become namespaces, ADTs become tagged structs with one factory
//! per constructor, and statement-like constructs become immediately invoked
//! lambdas so every expression stays an expression. User identifiers are
//! emitted verbatim; every name the compiler invents is `guid` plus a
//! counter.

mod expr;

use std::fmt::Write as _;

use crate::semantics::types::{QualName, Type};
use crate::semantics::{TCtor, TExpr, TFunction, TModule, TTypeDecl, TTypeKind, TypedProgram};

use expr::Scope;

/// Header every emitted file includes after the user's own includes.
pub const RUNTIME_HEADER: &str = "juniper_runtime.hpp";

/// The emitted file, kept in pieces so tests can inspect each part.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmitUnit {
    /// User `include` targets in first-seen order, e.g. `<FastLED.h>`.
    pub header_includes: Vec<String>,
    pub preamble: String,
    /// `(module name, namespace text)` in dependency order.
    pub namespaces: Vec<(String, String)>,
    pub entry: String,
    /// Next unused `guid` counter value.
    pub fresh_counter: u32,
    pub text: String,
}

#[derive(Clone, Debug, Default)]
pub struct EmitOptions {
    /// The source `main` the target entry point calls. `None` picks the last
    /// module defining `main : () -> unit`.
    pub entry: Option<QualName>,
}

pub fn emit_program(p: &TypedProgram) -> EmitUnit {
    emit_program_with(p, &EmitOptions::default())
}

pub fn emit_program_with(p: &TypedProgram, opts: &EmitOptions) -> EmitUnit {
    let mut em = Emitter::default();
    let mut unit = EmitUnit::default();
    for m in &p.modules {
        for inc in &m.includes {
            if !unit.header_includes.contains(inc) {
                unit.header_includes.push(inc.clone());
            }
        }
    }
    unit.preamble =
        format!("#include \"{RUNTIME_HEADER}\"\n\nnamespace Prelude {{\n    using unit = juniper::unit;\n}}\n");
    for m in &p.modules {
        unit.namespaces.push((m.name.clone(), em.module(m)));
    }
    let entry = opts.entry.clone().or_else(|| p.entry());
    unit.entry = entry_point(entry.as_ref());
    unit.fresh_counter = em.counter;

    let mut text = String::new();
    for inc in &unit.header_includes {
        let _ = writeln!(text, "#include {inc}");
    }
    if !unit.header_includes.is_empty() {
        text.push('\n');
    }
    text.push_str(&unit.preamble);
    for (_, ns) in &unit.namespaces {
        text.push('\n');
        text.push_str(ns);
    }
    text.push('\n');
    text.push_str(&unit.entry);
    unit.text = text;
    unit
}

fn entry_point(main: Option<&QualName>) -> String {
    let call = main.map(|q| format!("    {}::{}();\n", q.module, q.name)).unwrap_or_default();
    format!("#ifdef ARDUINO\nvoid setup() {{\n{call}}}\n\nvoid loop() {{\n}}\n#else\nint main() {{\n{call}    return 0;\n}}\n#endif\n")
}

/// Emits one ADT or record declaration plus, for ADTs, its factories.
pub fn emit_adt(module: &str, decl: &TTypeDecl) -> String {
    let mut em = Emitter::default();
    let mut out = em.type_decl(decl);
    if let TTypeKind::Adt(ctors) = &decl.kind {
        for c in ctors {
            out.push('\n');
            out.push_str(&em.factory(module, decl, c));
        }
    }
    out
}

pub fn emit_function(f: &TFunction) -> String {
    Emitter::default().function(f)
}

/// Lowers one expression with no enclosing locals.
pub fn emit_expr(e: &TExpr) -> String {
    Emitter::default().expr(e, &mut Scope::local(0))
}

pub fn emit_inline_code(blob: &str) -> String {
    Emitter::default().inline(blob, &Scope::local(0))
}

/// C++ spelling of a resolved type.
pub fn ctype(t: &Type) -> String {
    match t {
        Type::Unit => "Prelude::unit".into(),
        Type::Bool => "bool".into(),
        Type::Int(i) => {
            format!("{}_t", if i.signed() { format!("int{}", i.bits()) } else { format!("uint{}", i.bits()) })
        }
        Type::Float => "float".into(),
        Type::Double => "double".into(),
        Type::Pointer => "juniper::shared_ptr<void>".into(),
        Type::Fun(ps, r) => format!("juniper::function<{}({})>", ctype(r), list(ps)),
        Type::Adt(q, ts, cs) | Type::Record(q, ts, cs) => {
            let mut args: Vec<String> = ts.iter().map(ctype).collect();
            args.extend(cs.iter().map(|c| c.render()));
            if args.is_empty() {
                format!("{}::{}", q.module, q.name)
            } else {
                format!("{}::{}<{}>", q.module, q.name, args.join(", "))
            }
        }
        Type::Ref(t) => format!("juniper::shared_ptr<{}>", ctype(t)),
        Type::Array(t, c) => format!("juniper::array<{}, {}>", ctype(t), c.render()),
        Type::Tuple(ts) => format!("juniper::tuple{}<{}>", ts.len(), list(ts)),
        Type::Var(v) => v.clone(),
    }
}

fn list(ts: &[Type]) -> String {
    ts.iter().map(ctype).collect::<Vec<_>>().join(", ")
}

fn template_header(type_vars: &[String], cap_vars: &[String]) -> String {
    if type_vars.is_empty() && cap_vars.is_empty() {
        return String::new();
    }
    let params: Vec<String> =
        type_vars.iter().map(|v| format!("typename {v}")).chain(cap_vars.iter().map(|v| format!("int {v}"))).collect();
    format!("template<{}>\n", params.join(", "))
}

fn indent(n: usize) -> String {
    "    ".repeat(n)
}

#[derive(Default)]
pub(crate) struct Emitter {
    counter: u32,
}

impl Emitter {
    pub(crate) fn fresh(&mut self) -> String {
        let n = self.counter;
        self.counter += 1;
        format!("guid{n}")
    }

    fn module(&mut self, m: &TModule) -> String {
        let mut out = format!("namespace {} {{\n", m.name);
        let mut sections: Vec<String> = Vec::new();
        for t in &m.types {
            sections.push(self.type_decl(t));
        }
        for t in &m.types {
            if let TTypeKind::Adt(ctors) = &t.kind {
                for c in ctors {
                    sections.push(self.factory(&m.name, t, c));
                }
            }
        }
        if !m.functions.is_empty() {
            let protos: String = m.functions.iter().map(|f| format!("{};\n", signature(f))).collect();
            sections.push(protos);
        }
        for l in &m.lets {
            let value = self.expr(&l.value, &mut Scope::global());
            sections.push(format!("{} {} = {};\n", ctype(&l.ty), l.name, value));
        }
        for f in &m.functions {
            sections.push(self.function(f));
        }
        for (i, s) in sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(s);
        }
        out.push_str("}\n");
        out
    }

    fn type_decl(&mut self, d: &TTypeDecl) -> String {
        let mut out = template_header(&d.type_vars, &d.cap_vars);
        let _ = writeln!(out, "struct {} {{", d.name);
        let generic = !d.type_vars.is_empty() || !d.cap_vars.is_empty();
        let (members, comparable): (Vec<(String, &Type)>, bool) = match &d.kind {
            TTypeKind::Adt(ctors) => {
                let ms: Vec<(String, &Type)> =
                    ctors.iter().filter_map(|c| c.payload.as_ref().map(|t| (c.name.clone(), t))).collect();
                let ok = generic || ms.iter().all(|(_, t)| !t.contains_fun());
                (ms, ok)
            }
            TTypeKind::Record(fs) => {
                let ms: Vec<(String, &Type)> = fs.iter().map(|(n, t)| (n.clone(), t)).collect();
                let ok = generic || ms.iter().all(|(_, t)| !t.contains_fun());
                (ms, ok)
            }
        };
        if matches!(d.kind, TTypeKind::Adt(_)) {
            out.push_str("    uint8_t tag;\n");
        }
        for (name, t) in &members {
            let _ = writeln!(out, "    {} {};", ctype(t), name);
        }
        if comparable {
            out.push('\n');
            let _ = writeln!(out, "    bool operator==({} rhs) const {{", d.name);
            match &d.kind {
                TTypeKind::Adt(ctors) => {
                    out.push_str("        if (tag != rhs.tag) {\n            return false;\n        }\n");
                    let with_payload: Vec<&TCtor> = ctors.iter().filter(|c| c.payload.is_some()).collect();
                    if !with_payload.is_empty() {
                        out.push_str("        switch (tag) {\n");
                        for c in with_payload {
                            let _ = writeln!(
                                out,
                                "        case {}:\n            return {} == rhs.{};",
                                c.tag, c.name, c.name
                            );
                        }
                        out.push_str("        default:\n            break;\n        }\n");
                    }
                    out.push_str("        return true;\n");
                }
                TTypeKind::Record(fs) => {
                    let terms: Vec<String> = fs.iter().map(|(n, _)| format!("{n} == rhs.{n}")).collect();
                    if terms.is_empty() {
                        out.push_str("        return true;\n");
                    } else {
                        let _ = writeln!(out, "        return {};", terms.join(" && "));
                    }
                }
            }
            out.push_str("    }\n\n");
            let _ =
                writeln!(out, "    bool operator!=({} rhs) const {{\n        return !(*this == rhs);\n    }}", d.name);
        }
        out.push_str("};\n");
        out
    }

    fn factory(&mut self, module: &str, d: &TTypeDecl, c: &TCtor) -> String {
        let args: Vec<Type> = d.type_vars.iter().map(|v| Type::Var(v.clone())).collect();
        let caps = d.cap_vars.iter().map(crate::semantics::Cap::var).collect();
        let self_ty = ctype(&Type::Adt(QualName::new(module, &d.name), args, caps));
        let mut out = template_header(&d.type_vars, &d.cap_vars);
        let param = c.payload.as_ref().map(|t| (self.fresh(), t));
        let ret = self.fresh();
        let params = param.as_ref().map(|(n, t)| format!("{} {n}", ctype(t))).unwrap_or_default();
        let _ = writeln!(out, "{self_ty} {}({params}) {{", c.name);
        let _ = writeln!(out, "    return (([&]() -> {self_ty} {{");
        let _ = writeln!(out, "        {self_ty} {ret};");
        let _ = writeln!(out, "        {ret}.tag = {};", c.tag);
        if let Some((n, _)) = &param {
            let _ = writeln!(out, "        {ret}.{} = {n};", c.name);
        }
        let _ = writeln!(out, "        return {ret};");
        out.push_str("    })());\n}\n");
        out
    }

    fn function(&mut self, f: &TFunction) -> String {
        let mut scope = Scope::local(1);
        scope.push();
        for (p, _) in &f.params {
            scope.declare(p);
        }
        let body = self.expr(&f.body, &mut scope);
        format!("{} {{\n    return {body};\n}}\n", signature(f))
    }
}

fn signature(f: &TFunction) -> String {
    let params: Vec<String> = f.params.iter().map(|(n, t)| format!("{} {n}", ctype(t))).collect();
    format!("{}{} {}({})", template_header(&f.type_vars, &f.cap_vars), ctype(&f.ret), f.name, params.join(", "))
}
