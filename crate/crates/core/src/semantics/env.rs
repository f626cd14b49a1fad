//! Module environments: declared names, exports, opens and dependency order.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::diagnostics::{Diagnostic, Span};
use crate::frontend::ast::*;

use super::capacity::Cap;
use super::types::{IntTy, QualName, Scheme, Type};

/// Prefix reserved for compiler-introduced names in emitted code.
pub const RESERVED_PREFIX: &str = "guid";

pub const BUILTIN_TYPES: &[&str] =
    &["unit", "bool", "int8", "int16", "int32", "uint8", "uint16", "uint32", "float", "double", "pointer"];

pub fn builtin_type(name: &str) -> Option<Type> {
    Some(match name {
        "unit" => Type::Unit,
        "bool" => Type::Bool,
        "int8" => Type::Int(IntTy::I8),
        "int16" => Type::Int(IntTy::I16),
        "int32" => Type::Int(IntTy::I32),
        "uint8" => Type::Int(IntTy::U8),
        "uint16" => Type::Int(IntTy::U16),
        "uint32" => Type::Int(IntTy::U32),
        "float" => Type::Float,
        "double" => Type::Double,
        "pointer" => Type::Pointer,
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeDef {
    pub name: QualName,
    pub type_vars: Vec<String>,
    pub cap_vars: Vec<String>,
    pub kind: TypeDefKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeDefKind {
    Adt(Vec<CtorDef>),
    Record(Vec<(String, Type)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtorDef {
    pub name: String,
    pub tag: u8,
    pub payload: Option<Type>,
    pub span: Span,
}

impl TypeDef {
    pub fn is_adt(&self) -> bool {
        matches!(self.kind, TypeDefKind::Adt(_))
    }

    /// The type with its own template parameters as arguments.
    pub fn self_type(&self) -> Type {
        let targs = self.type_vars.iter().map(|v| Type::Var(v.clone())).collect();
        let cargs = self.cap_vars.iter().map(Cap::var).collect();
        self.instance(targs, cargs)
    }

    pub fn instance(&self, targs: Vec<Type>, cargs: Vec<Cap>) -> Type {
        match self.kind {
            TypeDefKind::Adt(_) => Type::Adt(self.name.clone(), targs, cargs),
            TypeDefKind::Record(_) => Type::Record(self.name.clone(), targs, cargs),
        }
    }

    pub fn ctors(&self) -> &[CtorDef] {
        match &self.kind {
            TypeDefKind::Adt(cs) => cs,
            TypeDefKind::Record(_) => &[],
        }
    }

    pub fn ctor(&self, name: &str) -> Option<&CtorDef> {
        self.ctors().iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Let,
    Function,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueDef {
    pub name: QualName,
    pub kind: ValueKind,
    pub scheme: Scheme,
    pub span: Span,
    /// Position among the module's declarations.
    pub decl_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuleEnv {
    pub name: String,
    pub span: Span,
    /// Index of the module in the list handed to [`resolve_program`].
    pub source_index: usize,
    pub opens: Vec<String>,
    /// `None` when the module has no export declaration, meaning everything
    /// is exported.
    pub exports: Option<BTreeSet<String>>,
    pub includes: Vec<String>,
    pub types: BTreeMap<String, TypeDef>,
    /// Type names ordered so that each type only contains earlier ones by value.
    pub type_order: Vec<String>,
    pub values: BTreeMap<String, ValueDef>,
    /// Constructor name to owning type name.
    pub ctors: BTreeMap<String, String>,
    pub deps: BTreeSet<String>,
}

impl ModuleEnv {
    fn new(name: String, span: Span, source_index: usize) -> Self {
        ModuleEnv {
            name,
            span,
            source_index,
            opens: Vec::new(),
            exports: None,
            includes: Vec::new(),
            types: BTreeMap::new(),
            type_order: Vec::new(),
            values: BTreeMap::new(),
            ctors: BTreeMap::new(),
            deps: BTreeSet::new(),
        }
    }

    pub fn exports_name(&self, name: &str) -> bool {
        match &self.exports {
            None => true,
            Some(set) => set.contains(name) || self.ctors.get(name).is_some_and(|adt| set.contains(adt)),
        }
    }

    pub fn ctor(&self, name: &str) -> Option<(&TypeDef, &CtorDef)> {
        let def = self.types.get(self.ctors.get(name)?)?;
        Some((def, def.ctor(name)?))
    }
}

/// What a name in expression position refers to.
#[derive(Clone, Copy, Debug)]
pub enum ValueTarget<'a> {
    Value(&'a ValueDef),
    Ctor(&'a TypeDef, &'a CtorDef),
}

#[derive(Clone, Debug)]
pub enum TypeTarget<'a> {
    Builtin(Type),
    Def(&'a TypeDef),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProgramEnv {
    /// Modules in dependency order.
    pub modules: Vec<ModuleEnv>,
    index: HashMap<String, usize>,
}

/// Template parameters in scope while resolving a type expression.
#[derive(Clone, Copy, Debug)]
pub struct TypeScope<'a> {
    pub module: &'a str,
    pub type_vars: &'a [String],
    pub cap_vars: &'a [String],
}

impl ProgramEnv {
    pub fn module(&self, name: &str) -> Option<&ModuleEnv> {
        self.index.get(name).map(|&i| &self.modules[i])
    }

    fn module_mut(&mut self, name: &str) -> &mut ModuleEnv {
        let i = self.index[name];
        &mut self.modules[i]
    }

    pub fn type_def(&self, q: &QualName) -> Option<&TypeDef> {
        self.module(&q.module)?.types.get(&q.name)
    }

    /// Generic lookup following the visibility rules: local declarations,
    /// then exports of opened modules, or an explicit `Mod:` qualifier.
    fn resolve<'a, T>(
        &'a self,
        from: &str,
        r: &DeclRef,
        what: &str,
        get: impl Fn(&'a ModuleEnv, &str) -> Option<T>,
    ) -> Result<T, Diagnostic> {
        let name = &r.name().name;
        let here = self.module(from).expect("resolving from a known module");
        match r.module() {
            Some(m) => {
                let target = self
                    .module(&m.name)
                    .ok_or_else(|| Diagnostic::error(m.span.clone(), format!("unknown module `{}`", m.name)))?;
                match get(target, name) {
                    Some(v) if target.name == from || target.exports_name(name) => Ok(v),
                    Some(_) => {
                        Err(Diagnostic::error(r.span(), format!("module `{}` does not export `{name}`", m.name)))
                    }
                    None => {
                        Err(Diagnostic::error(r.span(), format!("module `{}` has no {what} named `{name}`", m.name)))
                    }
                }
            }
            None => {
                if let Some(v) = get(here, name) {
                    return Ok(v);
                }
                let mut found: Vec<(&str, T)> = Vec::new();
                for open in &here.opens {
                    if let Some(m) = self.module(open) {
                        if m.exports_name(name) {
                            if let Some(v) = get(m, name) {
                                if !found.iter().any(|(n, _)| *n == m.name) {
                                    found.push((&m.name, v));
                                }
                            }
                        }
                    }
                }
                match found.len() {
                    1 => Ok(found.pop().unwrap().1),
                    0 => {
                        let mut d = Diagnostic::error(r.span(), format!("unresolved {what} `{name}`"));
                        let elsewhere = self.modules.iter().find(|m| m.exports_name(name) && get(m, name).is_some());
                        if let Some(m) = elsewhere {
                            d = d.with_hint(format!(
                                "`{name}` is declared in module `{}`; write `{}:{name}` or open the module",
                                m.name, m.name
                            ));
                        }
                        Err(d)
                    }
                    _ => {
                        let names: Vec<&str> = found.iter().map(|(n, _)| *n).collect();
                        Err(Diagnostic::error(
                            r.span(),
                            format!(
                                "ambiguous name `{name}`: exported by opened modules {}",
                                names.iter().map(|n| format!("`{n}`")).collect::<Vec<_>>().join(" and ")
                            ),
                        )
                        .with_hint(format!("qualify the name, e.g. `{}:{name}`", names[0])))
                    }
                }
            }
        }
    }

    pub fn lookup_value(&self, from: &str, r: &DeclRef) -> Result<ValueTarget<'_>, Diagnostic> {
        self.resolve(from, r, "value", |m, n| {
            if let Some(v) = m.values.get(n) {
                Some(ValueTarget::Value(v))
            } else {
                m.ctor(n).map(|(t, c)| ValueTarget::Ctor(t, c))
            }
        })
    }

    pub fn lookup_type(&self, from: &str, r: &DeclRef) -> Result<TypeTarget<'_>, Diagnostic> {
        if r.module().is_none() {
            if let Some(t) = builtin_type(&r.name().name) {
                return Ok(TypeTarget::Builtin(t));
            }
        }
        self.resolve(from, r, "type", |m, n| m.types.get(n).map(TypeTarget::Def))
    }

    pub fn resolve_cap(&self, c: &CapExpr, scope: TypeScope<'_>) -> Result<Cap, Diagnostic> {
        Cap::from_ast(c, &|v| scope.cap_vars.iter().any(|x| x == v))
            .map_err(|e| Diagnostic::error(c.span.clone(), e.to_string()))
    }

    pub fn resolve_type(&self, t: &TypeExpr, scope: TypeScope<'_>) -> Result<Type, Diagnostic> {
        match &t.kind {
            TypeExprKind::Var(v) => {
                if scope.type_vars.contains(&v.name) {
                    Ok(Type::Var(v.name.clone()))
                } else {
                    Err(Diagnostic::error(t.span.clone(), format!("unknown type variable `'{}`", v.name))
                        .with_hint("declare it in the template list, e.g. `<'a>`"))
                }
            }
            TypeExprKind::Named(r, apply) => match self.lookup_type(scope.module, r)? {
                TypeTarget::Builtin(ty) => match apply {
                    Some(_) => {
                        Err(Diagnostic::error(t.span.clone(), format!("type `{r}` takes no template arguments")))
                    }
                    None => Ok(ty),
                },
                TypeTarget::Def(def) => {
                    let empty = TemplateApply::default();
                    let apply = apply.as_ref().unwrap_or(&empty);
                    let (targs, cargs) = self.resolve_apply(apply, scope)?;
                    check_template_arity(def, &targs, &cargs, &t.span, &r.to_string())?;
                    Ok(def.instance(targs, cargs))
                }
            },
            TypeExprKind::Fun(ps, r) => Ok(Type::Fun(
                ps.iter().map(|p| self.resolve_type(p, scope)).collect::<Result<_, _>>()?,
                Box::new(self.resolve_type(r, scope)?),
            )),
            TypeExprKind::Array(inner, c) => {
                Ok(Type::Array(Box::new(self.resolve_type(inner, scope)?), self.resolve_cap(c, scope)?))
            }
            TypeExprKind::Ref(inner) => Ok(Type::Ref(Box::new(self.resolve_type(inner, scope)?))),
            TypeExprKind::Tuple(ts) => {
                Ok(Type::Tuple(ts.iter().map(|p| self.resolve_type(p, scope)).collect::<Result<_, _>>()?))
            }
        }
    }

    pub fn resolve_apply(&self, a: &TemplateApply, scope: TypeScope<'_>) -> Result<(Vec<Type>, Vec<Cap>), Diagnostic> {
        let targs = a.types.iter().map(|t| self.resolve_type(t, scope)).collect::<Result<_, _>>()?;
        let cargs = a.caps.iter().map(|c| self.resolve_cap(c, scope)).collect::<Result<_, _>>()?;
        Ok((targs, cargs))
    }
}

pub fn check_template_arity(
    def: &TypeDef,
    targs: &[Type],
    cargs: &[Cap],
    span: &Span,
    shown: &str,
) -> Result<(), Diagnostic> {
    if targs.len() != def.type_vars.len() || cargs.len() != def.cap_vars.len() {
        let mut msg = format!("`{shown}` expects {} type argument(s)", def.type_vars.len());
        if !def.cap_vars.is_empty() || !cargs.is_empty() {
            msg.push_str(&format!(" and {} capacity argument(s)", def.cap_vars.len()));
        }
        msg.push_str(&format!(", found {}", targs.len()));
        if !cargs.is_empty() || !def.cap_vars.is_empty() {
            msg.push_str(&format!(" and {}", cargs.len()));
        }
        let mut d = Diagnostic::error(span.clone(), msg);
        if targs.is_empty() && !def.type_vars.is_empty() {
            let vars: Vec<String> = def.type_vars.iter().map(|v| format!("'{v}")).collect();
            d = d.with_hint(format!("write `{}<{}>` with concrete types", def.name.name, vars.join(", ")));
        }
        return Err(d);
    }
    Ok(())
}

fn template_names(t: &Option<TemplateDec>) -> (Vec<String>, Vec<String>) {
    match t {
        None => (Vec::new(), Vec::new()),
        Some(t) => {
            (t.type_vars.iter().map(|v| v.name.clone()).collect(), t.cap_vars.iter().map(|v| v.name.clone()).collect())
        }
    }
}

/// Rejects duplicate template parameters and reserved names.
fn check_template_dec(t: &Option<TemplateDec>, diags: &mut Vec<Diagnostic>) {
    let Some(t) = t else { return };
    let mut seen = BTreeSet::new();
    for v in t.type_vars.iter().chain(&t.cap_vars) {
        if !seen.insert(v.name.as_str()) {
            diags.push(Diagnostic::error(v.span.clone(), format!("template parameter `{}` declared twice", v.name)));
        }
        check_user_name(v, diags);
    }
}

/// C++ keywords; user identifiers are emitted unmangled, so these are rejected.
const CPP_KEYWORDS: &[&str] = &[
    "alignas",
    "alignof",
    "asm",
    "auto",
    "bool",
    "break",
    "char",
    "class",
    "const",
    "constexpr",
    "continue",
    "decltype",
    "default",
    "delete",
    "double",
    "dynamic_cast",
    "enum",
    "explicit",
    "extern",
    "float",
    "friend",
    "goto",
    "inline",
    "int",
    "long",
    "namespace",
    "new",
    "noexcept",
    "nullptr",
    "operator",
    "private",
    "protected",
    "public",
    "register",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "try",
    "catch",
    "typedef",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "xor",
    "juniper",
    "std",
];

/// Identifiers starting with the reserved prefix would collide with
/// compiler-generated names in the output; C++ keywords cannot be emitted.
pub fn check_user_name(id: &Ident, diags: &mut Vec<Diagnostic>) {
    if CPP_KEYWORDS.contains(&id.name.as_str()) {
        diags.push(
            Diagnostic::error(id.span.clone(), format!("`{}` is reserved in the generated C++", id.name))
                .with_hint("rename it"),
        );
    }
    if id.name.starts_with(RESERVED_PREFIX) {
        diags.push(
            Diagnostic::error(
                id.span.clone(),
                format!("identifier `{}` uses the reserved prefix `{RESERVED_PREFIX}`", id.name),
            )
            .with_hint("rename it"),
        );
    }
}

/// Builds environments for all modules. Returns the environments in
/// dependency order plus every diagnostic found on the way.
pub fn resolve_program(modules: &[SourceModule]) -> (ProgramEnv, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    for (i, m) in modules.iter().enumerate() {
        if let Some(&first) = by_name.get(m.name.name.as_str()) {
            diags.push(Diagnostic::error(
                m.name.span.clone(),
                format!("duplicate module `{}` (first declared at {})", m.name.name, modules[first].name.span),
            ));
        } else {
            by_name.insert(&m.name.name, i);
        }
    }

    // Headers: opens, exports, includes and dependency edges.
    let mut headers: Vec<ModuleEnv> = Vec::new();
    for (i, m) in modules.iter().enumerate() {
        if by_name.get(m.name.name.as_str()) != Some(&i) {
            continue;
        }
        check_user_name(&m.name, &mut diags);
        let mut env = ModuleEnv::new(m.name.name.clone(), m.name.span.clone(), i);
        for d in &m.decls {
            match &d.kind {
                DeclKind::Open(names) => {
                    for n in names {
                        if !by_name.contains_key(n.name.as_str()) {
                            diags.push(Diagnostic::error(n.span.clone(), format!("unknown module `{}`", n.name)));
                        } else if n.name != m.name.name && !env.opens.contains(&n.name) {
                            env.opens.push(n.name.clone());
                        }
                    }
                }
                DeclKind::Export(names) => {
                    env.exports.get_or_insert_with(BTreeSet::new).extend(names.iter().map(|n| n.name.clone()));
                }
                DeclKind::Include(hs) => env.includes.extend(hs.iter().cloned()),
                _ => {}
            }
        }
        let mut refs = BTreeSet::new();
        collect_module_refs(m, &mut refs);
        env.deps = env
            .opens
            .iter()
            .cloned()
            .chain(refs.into_iter().filter(|r| by_name.contains_key(r.as_str())))
            .filter(|r| *r != m.name.name)
            .collect();
        headers.push(env);
    }

    let order = match topo_order(&headers) {
        Ok(o) => o,
        Err(cycle) => {
            let first = &headers[cycle[0]];
            let path: Vec<&str> =
                cycle.iter().chain(std::iter::once(&cycle[0])).map(|&i| headers[i].name.as_str()).collect();
            diags.push(
                Diagnostic::error(
                    first.span.clone(),
                    format!("dependency cycle between modules: {}", path.join(" -> ")),
                )
                .with_hint("modules may only reference each other in one direction"),
            );
            return (ProgramEnv::default(), diags);
        }
    };

    let mut env = ProgramEnv::default();
    let mut slots: Vec<Option<ModuleEnv>> = headers.into_iter().map(Some).collect();
    for &i in &order {
        let m = slots[i].take().unwrap();
        env.index.insert(m.name.clone(), env.modules.len());
        env.modules.push(m);
    }

    for k in 0..env.modules.len() {
        let src = &modules[env.modules[k].source_index];
        declare_module(&mut env, src, &mut diags);
    }
    (env, diags)
}

/// Stable topological sort: among ready modules the one supplied first wins.
/// On a cycle, returns the modules on one cycle.
fn topo_order(mods: &[ModuleEnv]) -> Result<Vec<usize>, Vec<usize>> {
    let idx: HashMap<&str, usize> = mods.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
    let mut indegree = vec![0usize; mods.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); mods.len()];
    for (i, m) in mods.iter().enumerate() {
        for d in &m.deps {
            if let Some(&j) = idx.get(d.as_str()) {
                indegree[i] += 1;
                users[j].push(i);
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..mods.len()).filter(|&i| indegree[i] == 0).collect();
    let mut out = Vec::with_capacity(mods.len());
    while let Some(i) = ready.pop_first() {
        out.push(i);
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if out.len() == mods.len() {
        return Ok(out);
    }
    // Walk dependency edges among the leftovers until a module repeats.
    let left: BTreeSet<usize> = (0..mods.len()).filter(|i| indegree[*i] > 0).collect();
    let mut path = vec![*left.first().unwrap()];
    loop {
        let cur = *path.last().unwrap();
        let next =
            mods[cur].deps.iter().filter_map(|d| idx.get(d.as_str()).copied()).find(|j| left.contains(j)).unwrap();
        if let Some(pos) = path.iter().position(|&p| p == next) {
            return Err(path[pos..].to_vec());
        }
        path.push(next);
    }
}

fn declare_module(env: &mut ProgramEnv, src: &SourceModule, diags: &mut Vec<Diagnostic>) {
    let module = src.name.name.clone();

    // Type shells first so bodies may refer to each other.
    for d in &src.decls {
        let (name, template, is_adt) = match &d.kind {
            DeclKind::Adt(a) => (&a.name, &a.template, true),
            DeclKind::Record(r) => (&r.name, &r.template, false),
            _ => continue,
        };
        check_user_name(name, diags);
        check_template_dec(template, diags);
        if builtin_type(&name.name).is_some() {
            diags.push(Diagnostic::error(name.span.clone(), format!("cannot redefine built-in type `{}`", name.name)));
            continue;
        }
        let me = env.module_mut(&module);
        if let Some(prev) = me.types.get(&name.name) {
            diags.push(Diagnostic::error(
                name.span.clone(),
                format!("duplicate type `{}` (first declared at {})", name.name, prev.span),
            ));
            continue;
        }
        let (type_vars, cap_vars) = template_names(template);
        let kind = if is_adt { TypeDefKind::Adt(Vec::new()) } else { TypeDefKind::Record(Vec::new()) };
        me.types.insert(
            name.name.clone(),
            TypeDef { name: QualName::new(&module, &name.name), type_vars, cap_vars, kind, span: name.span.clone() },
        );
    }

    // Bodies.
    for d in &src.decls {
        match &d.kind {
            DeclKind::Adt(a) => {
                let Some(def) = env.module(&module).unwrap().types.get(&a.name.name).cloned() else { continue };
                if def.span != a.name.span {
                    continue;
                }
                let scope = TypeScope { module: &module, type_vars: &def.type_vars, cap_vars: &def.cap_vars };
                let mut ctors: Vec<CtorDef> = Vec::new();
                for c in &a.ctors {
                    check_user_name(&c.name, diags);
                    if let Some(prev) = ctors.iter().find(|p| p.name == c.name.name) {
                        diags.push(Diagnostic::error(
                            c.name.span.clone(),
                            format!(
                                "duplicate value constructor `{}` in `{}` (first declared at {})",
                                c.name.name, a.name.name, prev.span
                            ),
                        ));
                        continue;
                    }
                    if ctors.len() == 256 {
                        diags.push(Diagnostic::error(
                            c.name.span.clone(),
                            "an algebraic type may have at most 256 constructors",
                        ));
                        break;
                    }
                    let payload = match &c.payload {
                        None => None,
                        Some(t) => match env.resolve_type(t, scope) {
                            Ok(t) => Some(t),
                            Err(e) => {
                                diags.push(e);
                                continue;
                            }
                        },
                    };
                    ctors.push(CtorDef {
                        name: c.name.name.clone(),
                        tag: ctors.len() as u8,
                        payload,
                        span: c.name.span.clone(),
                    });
                }
                let me = env.module_mut(&module);
                for c in &ctors {
                    if let Some(other) = me.ctors.get(&c.name) {
                        diags.push(Diagnostic::error(
                            c.span.clone(),
                            format!("value constructor `{}` is already declared by type `{other}`", c.name),
                        ));
                    }
                }
                for c in &ctors {
                    me.ctors.entry(c.name.clone()).or_insert_with(|| a.name.name.clone());
                }
                me.types.get_mut(&a.name.name).unwrap().kind = TypeDefKind::Adt(ctors);
            }
            DeclKind::Record(r) => {
                let Some(def) = env.module(&module).unwrap().types.get(&r.name.name).cloned() else { continue };
                if def.span != r.name.span {
                    continue;
                }
                let scope = TypeScope { module: &module, type_vars: &def.type_vars, cap_vars: &def.cap_vars };
                let mut fields: Vec<(String, Type)> = Vec::new();
                for (f, t) in &r.fields {
                    check_user_name(f, diags);
                    if fields.iter().any(|(n, _)| *n == f.name) {
                        diags.push(Diagnostic::error(
                            f.span.clone(),
                            format!("duplicate field `{}` in record `{}`", f.name, r.name.name),
                        ));
                        continue;
                    }
                    match env.resolve_type(t, scope) {
                        Ok(t) => fields.push((f.name.clone(), t)),
                        Err(e) => diags.push(e),
                    }
                }
                env.module_mut(&module).types.get_mut(&r.name.name).unwrap().kind = TypeDefKind::Record(fields);
            }
            _ => {}
        }
    }
    order_types(env.module_mut(&module), diags);

    // Value signatures.
    for (i, d) in src.decls.iter().enumerate() {
        let (name, kind, scheme) = match &d.kind {
            DeclKind::Let(l) => {
                let scope = TypeScope { module: &module, type_vars: &[], cap_vars: &[] };
                match env.resolve_type(&l.ty, scope) {
                    Ok(t) => (&l.name, ValueKind::Let, Scheme::mono(t)),
                    Err(e) => {
                        diags.push(e);
                        continue;
                    }
                }
            }
            DeclKind::Function(f) => {
                check_template_dec(&f.template, diags);
                let (type_vars, cap_vars) = template_names(&f.template);
                let scope = TypeScope { module: &module, type_vars: &type_vars, cap_vars: &cap_vars };
                let params: Result<Vec<Type>, _> = f.params.iter().map(|p| env.resolve_type(&p.ty, scope)).collect();
                let ret = env.resolve_type(&f.ret, scope);
                match (params, ret) {
                    (Ok(ps), Ok(r)) => {
                        (&f.name, ValueKind::Function, Scheme { type_vars, cap_vars, ty: Type::Fun(ps, Box::new(r)) })
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        diags.push(e);
                        continue;
                    }
                }
            }
            _ => continue,
        };
        check_user_name(name, diags);
        let me = env.module_mut(&module);
        if let Some(prev) = me.values.get(&name.name) {
            diags.push(Diagnostic::error(
                name.span.clone(),
                format!("duplicate declaration `{}` (first declared at {})", name.name, prev.span),
            ));
            continue;
        }
        if let Some(adt) = me.ctors.get(&name.name) {
            diags.push(Diagnostic::error(
                name.span.clone(),
                format!("`{}` is already a value constructor of type `{adt}`", name.name),
            ));
            continue;
        }
        me.values.insert(
            name.name.clone(),
            ValueDef { name: QualName::new(&module, &name.name), kind, scheme, span: name.span.clone(), decl_index: i },
        );
    }

    // Export lists must name declared things.
    let me = env.module(&module).unwrap();
    for d in &src.decls {
        if let DeclKind::Export(names) = &d.kind {
            for n in names {
                let known =
                    me.types.contains_key(&n.name) || me.values.contains_key(&n.name) || me.ctors.contains_key(&n.name);
                if !known {
                    diags.push(Diagnostic::error(
                        n.span.clone(),
                        format!("exported name `{}` is not declared in `{module}`", n.name),
                    ));
                }
            }
        }
    }
}

/// Orders a module's types so that types held by value come first; a type
/// that contains itself by value has no finite size and is rejected.
fn order_types(me: &mut ModuleEnv, diags: &mut Vec<Diagnostic>) {
    fn by_value(t: &Type, module: &str, out: &mut BTreeSet<String>) {
        match t {
            Type::Adt(q, ts, _) | Type::Record(q, ts, _) => {
                if q.module == module {
                    out.insert(q.name.clone());
                }
                ts.iter().for_each(|t| by_value(t, module, out));
            }
            Type::Tuple(ts) => ts.iter().for_each(|t| by_value(t, module, out)),
            Type::Array(t, _) => by_value(t, module, out),
            _ => {}
        }
    }
    let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (name, def) in &me.types {
        let mut out = BTreeSet::new();
        match &def.kind {
            TypeDefKind::Adt(cs) => {
                cs.iter().filter_map(|c| c.payload.as_ref()).for_each(|t| by_value(t, &me.name, &mut out))
            }
            TypeDefKind::Record(fs) => fs.iter().for_each(|(_, t)| by_value(t, &me.name, &mut out)),
        }
        edges.insert(name.clone(), out);
    }
    // Declaration order (by span offset) breaks ties for stable output.
    let mut names: Vec<&String> = me.types.keys().collect();
    names.sort_by_key(|n| me.types[*n].span.offset);
    let mut placed: Vec<String> = Vec::new();
    let mut done: BTreeSet<String> = BTreeSet::new();
    while placed.len() < names.len() {
        let next = names
            .iter()
            .find(|n| !done.contains(**n) && edges[**n].iter().all(|d| done.contains(d) || !edges.contains_key(d)));
        match next {
            Some(n) => {
                done.insert((*n).clone());
                placed.push((*n).clone());
            }
            None => {
                for n in names.iter().filter(|n| !done.contains(**n)) {
                    diags.push(
                        Diagnostic::error(me.types[*n].span.clone(), format!("type `{n}` contains itself by value"))
                            .with_hint("wrap the recursive occurrence in `ref`"),
                    );
                }
                placed.extend(names.iter().filter(|n| !done.contains(**n)).map(|n| (*n).clone()));
                break;
            }
        }
    }
    me.type_order = placed;
}

/// Every module name mentioned by a `Mod:` qualifier anywhere in `m`.
pub fn collect_module_refs(m: &SourceModule, out: &mut BTreeSet<String>) {
    for d in &m.decls {
        match &d.kind {
            DeclKind::Record(r) => r.fields.iter().for_each(|(_, t)| type_refs(t, out)),
            DeclKind::Adt(a) => a.ctors.iter().filter_map(|c| c.payload.as_ref()).for_each(|t| type_refs(t, out)),
            DeclKind::Let(l) => {
                type_refs(&l.ty, out);
                expr_refs(&l.value, out);
            }
            DeclKind::Function(f) => {
                f.params.iter().for_each(|p| type_refs(&p.ty, out));
                type_refs(&f.ret, out);
                expr_refs(&f.body, out);
            }
            _ => {}
        }
    }
}

fn declref_refs(r: &DeclRef, out: &mut BTreeSet<String>) {
    if let Some(m) = r.module() {
        out.insert(m.name.clone());
    }
}

fn apply_refs(a: &TemplateApply, out: &mut BTreeSet<String>) {
    a.types.iter().for_each(|t| type_refs(t, out));
}

fn type_refs(t: &TypeExpr, out: &mut BTreeSet<String>) {
    match &t.kind {
        TypeExprKind::Named(r, a) => {
            declref_refs(r, out);
            if let Some(a) = a {
                apply_refs(a, out);
            }
        }
        TypeExprKind::Var(_) => {}
        TypeExprKind::Fun(ps, r) => {
            ps.iter().for_each(|p| type_refs(p, out));
            type_refs(r, out);
        }
        TypeExprKind::Array(t, _) | TypeExprKind::Ref(t) => type_refs(t, out),
        TypeExprKind::Tuple(ts) => ts.iter().for_each(|t| type_refs(t, out)),
    }
}

fn pattern_refs(p: &Pattern, out: &mut BTreeSet<String>) {
    match &p.kind {
        PatternKind::Var { ty: Some(t), .. } => type_refs(t, out),
        PatternKind::Ctor { ctor, apply, inner } => {
            declref_refs(ctor, out);
            if let Some(a) = apply {
                apply_refs(a, out);
            }
            if let Some(p) = inner {
                pattern_refs(p, out);
            }
        }
        PatternKind::Record { ty, fields } => {
            type_refs(ty, out);
            fields.iter().for_each(|(_, p)| pattern_refs(p, out));
        }
        PatternKind::Tuple(ps) => ps.iter().for_each(|p| pattern_refs(p, out)),
        _ => {}
    }
}

fn left_refs(l: &LeftAssign, out: &mut BTreeSet<String>) {
    match &l.kind {
        LeftAssignKind::Var(_) => {}
        LeftAssignKind::Qualified(m, _) => {
            out.insert(m.name.clone());
        }
        LeftAssignKind::Index(b, i) => {
            left_refs(b, out);
            expr_refs(i, out);
        }
        LeftAssignKind::Field(b, _) => left_refs(b, out),
    }
}

fn expr_refs(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Seq(es) | ExprKind::Tuple(es) | ExprKind::Array(es) => es.iter().for_each(|e| expr_refs(e, out)),
        ExprKind::Call(c, args) => {
            expr_refs(c, out);
            args.iter().for_each(|e| expr_refs(e, out));
        }
        ExprKind::TemplateRef(r, a) => {
            declref_refs(r, out);
            apply_refs(a, out);
        }
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) | ExprKind::DoWhile(a, b) | ExprKind::While(a, b) => {
            expr_refs(a, out);
            expr_refs(b, out);
        }
        ExprKind::If { branches, otherwise } => {
            for (c, b) in branches {
                expr_refs(c, out);
                expr_refs(b, out);
            }
            expr_refs(otherwise, out);
        }
        ExprKind::Let(p, v) => {
            pattern_refs(p, out);
            expr_refs(v, out);
        }
        ExprKind::Set(l, v) | ExprKind::SetRef(l, v) => {
            left_refs(l, out);
            expr_refs(v, out);
        }
        ExprKind::For { ty, start, end, body, .. } => {
            type_refs(ty, out);
            expr_refs(start, out);
            expr_refs(end, out);
            expr_refs(body, out);
        }
        ExprKind::Qualified(m, _) => {
            out.insert(m.name.clone());
        }
        ExprKind::Not(x) | ExprKind::BitNot(x) | ExprKind::Field(x, _) | ExprKind::Ref(x) | ExprKind::Deref(x) => {
            expr_refs(x, out)
        }
        ExprKind::Lambda { params, ret, body } => {
            params.iter().for_each(|p| type_refs(&p.ty, out));
            type_refs(ret, out);
            expr_refs(body, out);
        }
        ExprKind::Case(s, clauses) => {
            expr_refs(s, out);
            for c in clauses {
                pattern_refs(&c.pattern, out);
                expr_refs(&c.body, out);
            }
        }
        ExprKind::Record { ty, apply, fields } => {
            declref_refs(ty, out);
            if let Some(a) = apply {
                apply_refs(a, out);
            }
            fields.iter().for_each(|(_, e)| expr_refs(e, out));
        }
        ExprKind::ArrayOf(t, e) => {
            type_refs(t, out);
            expr_refs(e, out);
        }
        ExprKind::ArrayEmpty(t) => type_refs(t, out),
        _ => {}
    }
}
