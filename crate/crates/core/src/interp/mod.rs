//! Reference evaluator for typed programs.
//!
//! Evaluation is strict and left to right. Integers wrap at their declared
//! width. Inline C++ cannot run here; the stdlib primitives built on it
//! (`Io:digRead`, `Io:digWrite`, `Io:setPinMode`, `Time:now`) are
//! intercepted by name and routed to a [`HostHooks`] implementation.

mod host;
mod value;

use std::collections::HashMap;
use std::rc::Rc;

use crate::diagnostics::Span;
use crate::frontend::ast::{BinOp, ForDirection};
use crate::semantics::types::{IntTy, QualName, Subst, Type};
use crate::semantics::{Cap, TExpr, TExprKind, TPattern, TPatternKind, TPlace, TPlaceStep, TTypeKind, TypedProgram};

pub use host::{read_schedule, trace_to_string, write_trace, HostHooks, PinEvent, ScheduleError, SimHost};
pub use value::{Closure, Locals, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: runtime fault: {message}")]
pub struct RuntimeFault {
    pub message: String,
    pub span: Span,
}

/// Why evaluation stopped early.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Stop {
    #[error(transparent)]
    Fault(#[from] RuntimeFault),
    /// The host refused another step; not an error.
    #[error("step budget exhausted")]
    Halted,
}

type Eval<'p> = Result<Value<'p>, Stop>;

fn fault<T>(span: &Span, message: impl Into<String>) -> Result<T, Stop> {
    Err(Stop::Fault(RuntimeFault { message: message.into(), span: span.clone() }))
}

/// Hooks for code that never touches pins or the clock. Any loop stops at
/// its first iteration.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullHost;

impl HostHooks for NullHost {
    fn step(&mut self) -> bool {
        false
    }
    fn now(&mut self) -> u32 {
        0
    }
    fn read_pin(&mut self, _pin: i32) -> u8 {
        0
    }
    fn write_pin(&mut self, _pin: i32, _level: u8) {}
}

struct Frame<'p> {
    locals: Locals<'p>,
    subst: Rc<Subst>,
}

impl<'p> Frame<'p> {
    fn empty() -> Self {
        Frame { locals: Vec::new(), subst: Rc::new(Subst::default()) }
    }
}

pub struct Interp<'p, 'h> {
    program: &'p TypedProgram,
    hooks: &'h mut dyn HostHooks,
    globals: HashMap<QualName, Value<'p>>,
}

/// Runs the program's entry point until it returns or the host stops it.
/// Writes land in the host; on a fault the host keeps the partial trace.
pub fn run_main(
    program: &TypedProgram,
    entry: Option<&QualName>,
    hooks: &mut dyn HostHooks,
) -> Result<(), RuntimeFault> {
    let outcome = (|| {
        let mut it = Interp::new(program, hooks)?;
        let entry = match entry.cloned().or_else(|| program.entry()) {
            Some(q) => q,
            None => return Ok(Value::Unit),
        };
        it.call(&entry, &[], &[], Vec::new())
    })();
    match outcome {
        Ok(_) | Err(Stop::Halted) => Ok(()),
        Err(Stop::Fault(f)) => Err(f),
    }
}

impl<'p, 'h> Interp<'p, 'h> {
    /// Evaluates every module-level `let` in program order.
    pub fn new(program: &'p TypedProgram, hooks: &'h mut dyn HostHooks) -> Result<Self, Stop> {
        let mut it = Interp { program, hooks, globals: HashMap::new() };
        for m in &program.modules {
            for l in &m.lets {
                let v = it.eval(&l.value, &mut Frame::empty())?;
                it.globals.insert(QualName::new(&m.name, &l.name), v);
            }
        }
        Ok(it)
    }

    pub fn global(&self, q: &QualName) -> Option<&Value<'p>> {
        self.globals.get(q)
    }

    pub fn hooks(&mut self) -> &mut dyn HostHooks {
        self.hooks
    }

    /// Calls a module-level function with explicit template arguments.
    pub fn call(&mut self, q: &QualName, type_args: &[Type], cap_args: &[Cap], args: Vec<Value<'p>>) -> Eval<'p> {
        let Some(f) = self.program.function(q) else {
            return fault(&Span::default(), format!("no function `{q}`"));
        };
        if args.len() != f.params.len() {
            return fault(&f.span, format!("`{q}` takes {} argument(s), got {}", f.params.len(), args.len()));
        }
        let subst = Rc::new(Subst::from_args(&f.type_vars, type_args, &f.cap_vars, cap_args));
        self.call_function(q, subst, args, &f.span)
    }

    /// Applies a function value.
    pub fn apply(&mut self, f: &Value<'p>, args: Vec<Value<'p>>, span: &Span) -> Eval<'p> {
        match f {
            Value::Closure(c) => match &**c {
                Closure::Lambda { params, body, captured, subst } => {
                    let mut locals = captured.clone();
                    locals.extend(params.iter().map(|(n, _)| n.as_str()).zip(args));
                    let mut frame = Frame { locals, subst: subst.clone() };
                    self.eval(body, &mut frame)
                }
                Closure::Function { name, subst } => self.call_function(name, subst.clone(), args, span),
                Closure::Ctor { name, tag } => Ok(Value::ctor(name, *tag, args.into_iter().next())),
            },
            Value::Null => fault(span, "call of an empty function value"),
            other => fault(span, format!("`{other}` is not a function")),
        }
    }

    /// Evaluates a closed expression (no locals in scope).
    pub fn eval_expr(&mut self, e: &'p TExpr) -> Eval<'p> {
        self.eval(e, &mut Frame::empty())
    }

    fn call_function(&mut self, name: &QualName, subst: Rc<Subst>, args: Vec<Value<'p>>, span: &Span) -> Eval<'p> {
        if let Some(v) = self.intrinsic(name, &args, span)? {
            return Ok(v);
        }
        let Some(f) = self.program.function(name) else {
            return fault(span, format!("no function `{name}`"));
        };
        let locals = f.params.iter().map(|(n, _)| n.as_str()).zip(args).collect();
        let mut frame = Frame { locals, subst };
        self.eval(&f.body, &mut frame)
    }

    /// Host-backed stand-ins for the stdlib functions written in inline C++.
    fn intrinsic(&mut self, name: &QualName, args: &[Value<'p>], span: &Span) -> Result<Option<Value<'p>>, Stop> {
        let pin = |i: usize| args.get(i).and_then(Value::as_int).map(|p| p as i32);
        Ok(Some(match (name.module.as_str(), name.name.as_str()) {
            ("Time", "now") => Value::Int(IntTy::U32, i128::from(self.hooks.now())),
            ("Io", "digRead") => {
                let Some(p) = pin(0) else { return fault(span, "digRead expects a pin number") };
                let level = self.hooks.read_pin(p);
                let ctor = if level == 0 { "low" } else { "high" };
                self.enum_value(&QualName::new("Io", "pinState"), ctor, span)?
            }
            ("Io", "digWrite") => {
                let (Some(p), Some(Value::Adt { ctor, .. })) = (pin(0), args.get(1)) else {
                    return fault(span, "digWrite expects a pin and a pinState");
                };
                self.hooks.write_pin(p, u8::from(*ctor == "high"));
                Value::Unit
            }
            ("Io", "setPinMode") => {
                let (Some(p), Some(Value::Adt { ctor, .. })) = (pin(0), args.get(1)) else {
                    return fault(span, "setPinMode expects a pin and a pinMode");
                };
                self.hooks.set_pin_mode(p, ctor);
                Value::Unit
            }
            _ => return Ok(None),
        }))
    }

    fn enum_value(&self, adt: &QualName, ctor: &str, span: &Span) -> Eval<'p> {
        let found = self.program.type_decl(adt).and_then(|d| match &d.kind {
            TTypeKind::Adt(cs) => cs.iter().find(|c| c.name == ctor).map(|c| (c.name.as_str(), c.tag)),
            TTypeKind::Record(_) => None,
        });
        match found {
            Some((name, tag)) => Ok(Value::ctor(name, tag, None)),
            None => fault(span, format!("no constructor `{ctor}` in `{adt}`")),
        }
    }

    fn eval(&mut self, e: &'p TExpr, fr: &mut Frame<'p>) -> Eval<'p> {
        crate::deep(|| self.eval_inner(e, fr))
    }

    fn eval_inner(&mut self, e: &'p TExpr, fr: &mut Frame<'p>) -> Eval<'p> {
        let span = &e.span;
        Ok(match &e.kind {
            TExprKind::Unit => Value::Unit,
            TExprKind::Bool(b) => Value::Bool(*b),
            TExprKind::Int(v) => match &e.ty {
                Type::Int(t) => Value::int(*t, *v),
                _ => Value::int(IntTy::I32, *v),
            },
            TExprKind::Float(v) => match &e.ty {
                Type::Float => Value::Float(*v as f32),
                _ => Value::Double(*v),
            },
            TExprKind::Null => Value::Null,
            TExprKind::Seq(es) => {
                let mark = fr.locals.len();
                let mut last = Value::Unit;
                for x in es {
                    last = match &x.kind {
                        TExprKind::Let(p, v) => self.let_binding(p, v, fr)?,
                        _ => self.eval(x, fr)?,
                    };
                }
                fr.locals.truncate(mark);
                last
            }
            TExprKind::Let(p, v) => {
                let mark = fr.locals.len();
                let v = self.let_binding(p, v, fr)?;
                fr.locals.truncate(mark);
                v
            }
            TExprKind::Tuple(es) => Value::Tuple(self.eval_all(es, fr)?),
            TExprKind::Array(es) => Value::Array(self.eval_all(es, fr)?),
            TExprKind::Call(f, args) => self.call_expr(f, args, fr, span)?,
            TExprKind::Local(n) => match fr.locals.iter().rev().find(|(name, _)| name == n) {
                Some((_, v)) => v.clone(),
                None => return fault(span, format!("unbound local `{n}`")),
            },
            TExprKind::Global { name, type_args, cap_args } => {
                if self.program.function(name).is_some() {
                    let subst = self.subst_for(name, type_args, cap_args, fr, span)?;
                    Value::Closure(Rc::new(Closure::Function { name: name.clone(), subst }))
                } else {
                    match self.globals.get(name) {
                        Some(v) => v.clone(),
                        None => return fault(span, format!("`{name}` is used before it is initialized")),
                    }
                }
            }
            TExprKind::Ctor { name, tag, .. } => Value::Closure(Rc::new(Closure::Ctor { name, tag: *tag })),
            TExprKind::Index(a, i) => {
                let a = self.eval(a, fr)?;
                let i = self.eval(i, fr)?;
                match (&a, i.as_int()) {
                    (Value::Array(vs), Some(i)) => match usize::try_from(i).ok().and_then(|i| vs.get(i)) {
                        Some(v) => v.clone(),
                        None => return fault(span, format!("index {i} out of bounds for length {}", vs.len())),
                    },
                    _ => return fault(span, "indexing needs an array and an integer"),
                }
            }
            TExprKind::Binary(op, l, r) => self.binary(*op, l, r, &e.ty, fr, span)?,
            TExprKind::If(branches, other) => {
                for (c, b) in branches {
                    if self.eval_bool(c, fr)? {
                        return self.eval(b, fr);
                    }
                }
                self.eval(other, fr)?
            }
            TExprKind::Set(place, v) => self.set(place, v, fr)?,
            TExprKind::SetRef(r, v) => {
                let r = self.eval(r, fr)?;
                let v = self.eval(v, fr)?;
                match r {
                    Value::Ref(cell) => *cell.borrow_mut() = v.clone(),
                    _ => return fault(span, "assignment through an empty ref"),
                }
                v
            }
            TExprKind::For { var, var_ty, start, end, direction, body } => {
                let t = match var_ty {
                    Type::Int(t) => *t,
                    _ => return fault(span, "loop variable must be an integer"),
                };
                let from = self.eval_int(start, fr)?;
                let to = self.eval_int(end, fr)?;
                let (mut i, step) = match direction {
                    ForDirection::Up => (from, 1),
                    ForDirection::Down => (from, -1),
                };
                while (step > 0 && i <= to) || (step < 0 && i >= to) {
                    let mark = fr.locals.len();
                    fr.locals.push((var.as_str(), Value::Int(t, i)));
                    self.eval(body, fr)?;
                    fr.locals.truncate(mark);
                    i += step;
                }
                Value::Unit
            }
            TExprKind::While(cond, body) => {
                loop {
                    if !self.hooks.step() {
                        return Err(Stop::Halted);
                    }
                    if !self.eval_bool(cond, fr)? {
                        break;
                    }
                    self.eval(body, fr)?;
                }
                Value::Unit
            }
            TExprKind::DoWhile(body, cond) => {
                loop {
                    if !self.hooks.step() {
                        return Err(Stop::Halted);
                    }
                    self.eval(body, fr)?;
                    if !self.eval_bool(cond, fr)? {
                        break;
                    }
                }
                Value::Unit
            }
            TExprKind::Not(x) => Value::Bool(!self.eval_bool(x, fr)?),
            TExprKind::BitNot(x) => match self.eval(x, fr)? {
                Value::Int(t, v) => Value::int(t, !v),
                _ => return fault(span, "`~~~` needs an integer"),
            },
            TExprKind::Field(x, f) => match self.eval(x, fr)? {
                Value::Record(fs) => match fs.into_iter().find(|(n, _)| n == f) {
                    Some((_, v)) => v,
                    None => return fault(span, format!("no field `{f}`")),
                },
                _ => return fault(span, format!("field `{f}` of a non-record")),
            },
            TExprKind::Lambda { params, body, .. } => Value::Closure(Rc::new(Closure::Lambda {
                params,
                body,
                captured: fr.locals.clone(),
                subst: fr.subst.clone(),
            })),
            TExprKind::Case(s, arms) => {
                let v = self.eval(s, fr)?;
                for (p, body) in arms {
                    let mark = fr.locals.len();
                    if bind(p, &v, &mut fr.locals) {
                        let r = self.eval(body, fr);
                        fr.locals.truncate(mark);
                        return r;
                    }
                    fr.locals.truncate(mark);
                }
                return fault(span, format!("no case arm matches `{v}`"));
            }
            TExprKind::Record(fields) => {
                let mut vals = Vec::with_capacity(fields.len());
                for (n, x) in fields {
                    vals.push((n.as_str(), self.eval(x, fr)?));
                }
                let order = self.record_fields(&e.ty, span)?;
                let mut out = Vec::with_capacity(order.len());
                for name in order {
                    match vals.iter().position(|(n, _)| *n == name) {
                        Some(i) => out.push((name, vals.swap_remove(i).1)),
                        None => return fault(span, format!("missing field `{name}`")),
                    }
                }
                Value::Record(out)
            }
            TExprKind::Ref(x) => Value::new_ref(self.eval(x, fr)?),
            TExprKind::Deref(x) => match self.eval(x, fr)? {
                Value::Ref(cell) => cell.borrow().clone(),
                _ => return fault(span, "dereference of an empty ref"),
            },
            TExprKind::ArrayFill(x) => {
                let v = self.eval(x, fr)?;
                let ty = self.concrete(&e.ty, fr, span)?;
                let n = array_len(&ty, span)?;
                Value::Array(vec![v; n])
            }
            TExprKind::ArrayDefault => {
                let ty = self.concrete(&e.ty, fr, span)?;
                self.default_value(&ty, span)?
            }
            TExprKind::Inline(_) => return fault(span, "inline C++ cannot run in the interpreter"),
        })
    }

    fn eval_all(&mut self, es: &'p [TExpr], fr: &mut Frame<'p>) -> Result<Vec<Value<'p>>, Stop> {
        es.iter().map(|x| self.eval(x, fr)).collect()
    }

    fn eval_bool(&mut self, e: &'p TExpr, fr: &mut Frame<'p>) -> Result<bool, Stop> {
        match self.eval(e, fr)? {
            Value::Bool(b) => Ok(b),
            v => fault(&e.span, format!("expected a bool, found `{v}`")),
        }
    }

    fn eval_int(&mut self, e: &'p TExpr, fr: &mut Frame<'p>) -> Result<i128, Stop> {
        match self.eval(e, fr)? {
            Value::Int(_, v) => Ok(v),
            v => fault(&e.span, format!("expected an integer, found `{v}`")),
        }
    }

    fn let_binding(&mut self, p: &'p TPattern, v: &'p TExpr, fr: &mut Frame<'p>) -> Eval<'p> {
        let v = self.eval(v, fr)?;
        if !bind(p, &v, &mut fr.locals) {
            return fault(&p.span, format!("`let` pattern does not match `{v}`"));
        }
        Ok(v)
    }

    fn call_expr(&mut self, f: &'p TExpr, args: &'p [TExpr], fr: &mut Frame<'p>, span: &Span) -> Eval<'p> {
        match &f.kind {
            TExprKind::Ctor { name, tag, .. } => {
                let args = self.eval_all(args, fr)?;
                Ok(Value::ctor(name, *tag, args.into_iter().next()))
            }
            TExprKind::Global { name, type_args, cap_args } if self.program.function(name).is_some() => {
                let subst = self.subst_for(name, type_args, cap_args, fr, span)?;
                let args = self.eval_all(args, fr)?;
                self.call_function(name, subst, args, span)
            }
            _ => {
                let fv = self.eval(f, fr)?;
                let args = self.eval_all(args, fr)?;
                self.apply(&fv, args, span)
            }
        }
    }

    /// Template arguments of a call site, resolved against the caller's own
    /// template arguments.
    fn subst_for(
        &self,
        name: &QualName,
        targs: &[Type],
        cargs: &[Cap],
        fr: &Frame<'p>,
        span: &Span,
    ) -> Result<Rc<Subst>, Stop> {
        let Some(f) = self.program.function(name) else {
            return fault(span, format!("no function `{name}`"));
        };
        let targs = targs.iter().map(|t| t.subst(&fr.subst)).collect::<Result<Vec<_>, _>>();
        let cargs = cargs.iter().map(|c| c.subst(&fr.subst.caps)).collect::<Result<Vec<_>, _>>();
        let (targs, cargs) = match (targs, cargs) {
            (Ok(t), Ok(c)) => (t, c),
            (Err(e), _) | (_, Err(e)) => return fault(span, e.to_string()),
        };
        Ok(Rc::new(Subst::from_args(&f.type_vars, &targs, &f.cap_vars, &cargs)))
    }

    fn concrete(&self, t: &Type, fr: &Frame<'p>, span: &Span) -> Result<Type, Stop> {
        t.subst(&fr.subst).or_else(|e| fault(span, format!("{e}")))
    }

    fn record_fields(&self, ty: &Type, span: &Span) -> Result<Vec<&'p str>, Stop> {
        let fields = match ty {
            Type::Record(q, ..) => self.program.type_decl(q).and_then(|d| match &d.kind {
                TTypeKind::Record(fs) => Some(fs.iter().map(|(n, _)| n.as_str()).collect()),
                TTypeKind::Adt(_) => None,
            }),
            _ => None,
        };
        fields.map_or_else(|| fault(span, format!("`{ty}` is not a record type")), Ok)
    }

    /// The value C++ value-initialization gives a type: zeros, the first
    /// constructor, and empty refs, pointers and functions.
    fn default_value(&self, ty: &Type, span: &Span) -> Eval<'p> {
        Ok(match ty {
            Type::Unit => Value::Unit,
            Type::Bool => Value::Bool(false),
            Type::Int(t) => Value::Int(*t, 0),
            Type::Float => Value::Float(0.0),
            Type::Double => Value::Double(0.0),
            Type::Pointer | Type::Ref(_) | Type::Fun(..) => Value::Null,
            Type::Tuple(ts) => Value::Tuple(ts.iter().map(|t| self.default_value(t, span)).collect::<Result<_, _>>()?),
            Type::Array(t, _) => {
                let n = array_len(ty, span)?;
                Value::Array(vec![self.default_value(t, span)?; n])
            }
            Type::Adt(q, ts, cs) | Type::Record(q, ts, cs) => {
                let Some(d) = self.program.type_decl(q) else { return fault(span, format!("unknown type `{q}`")) };
                let s = Subst::from_args(&d.type_vars, ts, &d.cap_vars, cs);
                match &d.kind {
                    TTypeKind::Adt(ctors) => {
                        let Some(c) = ctors.iter().find(|c| c.tag == 0) else {
                            return fault(span, format!("`{q}` has no constructors"));
                        };
                        let payload = match &c.payload {
                            Some(t) => Some(self.default_value(&self.instance(t, &s, span)?, span)?),
                            None => None,
                        };
                        Value::ctor(&c.name, 0, payload)
                    }
                    TTypeKind::Record(fs) => {
                        let mut out = Vec::with_capacity(fs.len());
                        for (n, t) in fs {
                            out.push((n.as_str(), self.default_value(&self.instance(t, &s, span)?, span)?));
                        }
                        Value::Record(out)
                    }
                }
            }
            Type::Var(v) => return fault(span, format!("no default for unresolved type `'{v}`")),
        })
    }

    fn instance(&self, t: &Type, s: &Subst, span: &Span) -> Result<Type, Stop> {
        t.subst(s).or_else(|e| fault(span, format!("{e}")))
    }

    fn set(&mut self, place: &'p TPlace, v: &'p TExpr, fr: &mut Frame<'p>) -> Eval<'p> {
        let span = &place.span;
        let mut steps: Vec<Result<usize, &'p str>> = Vec::with_capacity(place.path.len());
        for s in &place.path {
            steps.push(match s {
                TPlaceStep::Index(i) => {
                    let i = self.eval_int(i, fr)?;
                    match usize::try_from(i) {
                        Ok(i) => Ok(i),
                        Err(_) => return fault(span, format!("index {i} out of bounds")),
                    }
                }
                TPlaceStep::Field(f) => Err(f.as_str()),
            });
        }
        let value = self.eval(v, fr)?;
        let Some((_, slot)) = fr.locals.iter_mut().rev().find(|(n, _)| *n == place.root) else {
            return fault(span, format!("unbound local `{}`", place.root));
        };
        let mut cur = slot;
        for s in steps {
            cur = match (s, cur) {
                (Ok(i), Value::Array(vs)) => {
                    let len = vs.len();
                    match vs.get_mut(i) {
                        Some(x) => x,
                        None => return fault(span, format!("index {i} out of bounds for length {len}")),
                    }
                }
                (Err(f), Value::Record(fs)) => match fs.iter_mut().find(|(n, _)| *n == f) {
                    Some((_, x)) => x,
                    None => return fault(span, format!("no field `{f}`")),
                },
                _ => return fault(span, "assignment path does not fit the value"),
            };
        }
        *cur = value.clone();
        Ok(value)
    }

    fn binary(
        &mut self,
        op: BinOp,
        l: &'p TExpr,
        r: &'p TExpr,
        ty: &Type,
        fr: &mut Frame<'p>,
        span: &Span,
    ) -> Eval<'p> {
        match op {
            BinOp::And => return Ok(Value::Bool(self.eval_bool(l, fr)? && self.eval_bool(r, fr)?)),
            BinOp::Or => return Ok(Value::Bool(self.eval_bool(l, fr)? || self.eval_bool(r, fr)?)),
            _ => {}
        }
        let a = self.eval(l, fr)?;
        let b = self.eval(r, fr)?;
        if let Some(c) = compare(op, &a, &b) {
            return Ok(Value::Bool(c));
        }
        match (&a, &b) {
            (Value::Int(t, x), Value::Int(_, y)) => {
                let t = match ty {
                    Type::Int(rt) => *rt,
                    _ => *t,
                };
                int_op(op, t, *x, *y, span)
            }
            (Value::Float(x), Value::Float(y)) => {
                float_op(op, f64::from(*x), f64::from(*y), span).map(|v| Value::Float(v as f32))
            }
            (Value::Double(x), Value::Double(y)) => float_op(op, *x, *y, span).map(Value::Double),
            _ => fault(span, format!("`{a}` and `{b}` do not support this operator")),
        }
    }
}

fn array_len(ty: &Type, span: &Span) -> Result<usize, Stop> {
    match ty {
        Type::Array(_, c) => match c.as_const().map(usize::try_from) {
            Some(Ok(n)) => Ok(n),
            _ => fault(span, format!("array capacity `{c}` is not a non-negative constant")),
        },
        _ => fault(span, format!("`{ty}` is not an array type")),
    }
}

/// Comparison operators; `None` for arithmetic ones.
fn compare<'p>(op: BinOp, a: &Value<'p>, b: &Value<'p>) -> Option<bool> {
    use std::cmp::Ordering;
    let ord = || -> Option<Ordering> {
        match (a, b) {
            (Value::Int(_, x), Value::Int(_, y)) => Some(x.cmp(y)),
            (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
            (Value::Double(x), Value::Double(y)) => x.partial_cmp(y),
            _ => None,
        }
    };
    Some(match op {
        BinOp::Eq => a.equals(b),
        BinOp::Ne => !a.equals(b),
        BinOp::Lt => ord() == Some(Ordering::Less),
        BinOp::Le => matches!(ord(), Some(Ordering::Less | Ordering::Equal)),
        BinOp::Gt => ord() == Some(Ordering::Greater),
        BinOp::Ge => matches!(ord(), Some(Ordering::Greater | Ordering::Equal)),
        _ => return None,
    })
}

fn int_op<'p>(op: BinOp, t: IntTy, x: i128, y: i128, span: &Span) -> Eval<'p> {
    let v = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div | BinOp::Mod if y == 0 => return fault(span, "integer division by zero"),
        BinOp::Div => x / y,
        BinOp::Mod => x % y,
        BinOp::BitAnd => x & y,
        BinOp::BitOr => x | y,
        BinOp::Shl | BinOp::Shr if !(0..32).contains(&y) => {
            return fault(span, format!("shift amount {y} is out of range"));
        }
        BinOp::Shl => x << y,
        BinOp::Shr => x >> y,
        _ => return fault(span, "operator does not apply to integers"),
    };
    Ok(Value::int(t, v))
}

fn float_op(op: BinOp, x: f64, y: f64, span: &Span) -> Result<f64, Stop> {
    Ok(match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => x / y,
        BinOp::Mod => x % y,
        _ => return fault(span, "operator does not apply to floating point values"),
    })
}

/// Matches `v` against `p`, pushing bindings on success. On failure some
/// bindings may have been pushed; callers truncate.
fn bind<'p>(p: &'p TPattern, v: &Value<'p>, out: &mut Locals<'p>) -> bool {
    match (&p.kind, v) {
        (TPatternKind::Var { name, .. }, _) => {
            out.push((name.as_str(), v.clone()));
            true
        }
        (TPatternKind::Wildcard, _) => true,
        (TPatternKind::Int(n), Value::Int(_, x)) => n == x,
        (TPatternKind::Float(n), Value::Double(x)) => n == x,
        (TPatternKind::Float(n), Value::Float(x)) => *n as f32 == *x,
        (TPatternKind::Ctor { tag, inner, .. }, Value::Adt { tag: t, payload, .. }) => {
            tag == t
                && match (inner, payload) {
                    (Some(q), Some(pv)) => bind(q, pv, out),
                    (None, _) => true,
                    (Some(_), None) => false,
                }
        }
        (TPatternKind::Tuple(ps), Value::Tuple(vs)) => {
            ps.len() == vs.len() && ps.iter().zip(vs).all(|(q, x)| bind(q, x, out))
        }
        (TPatternKind::Record(fs), Value::Record(vs)) => {
            fs.iter().all(|(n, q)| vs.iter().find(|(m, _)| m == n).is_some_and(|(_, x)| bind(q, x, out)))
        }
        _ => false,
    }
}
