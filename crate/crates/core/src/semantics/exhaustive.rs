//! Pattern-match coverage via the classic usefulness check on pattern
//! matrices. Used for non-exhaustive and unreachable-arm warnings.

use super::typed::{TPattern, TPatternKind};
use super::types::Type;

/// What the checker needs to know about types: constructor payloads of an
/// algebraic type and field types of a record, both instantiated.
pub trait Universe {
    /// `(tag, payload)` for every constructor of the ADT instance.
    fn ctors(&self, ty: &Type) -> Vec<(u8, Option<Type>)>;
    /// Field names and types of the record instance, in declaration order.
    fn fields(&self, ty: &Type) -> Vec<(String, Type)>;
}

#[derive(Clone, Debug, PartialEq)]
enum Head {
    Tag(u8),
    /// Tuples and records: the only constructor of their type.
    Single,
    Int(i128),
    Float(u64),
}

#[derive(Clone, Debug)]
enum SPat {
    Wild,
    Con(Head, Vec<SPat>),
}

fn simplify(p: &TPattern, u: &dyn Universe) -> SPat {
    match &p.kind {
        TPatternKind::Var { .. } | TPatternKind::Wildcard => SPat::Wild,
        TPatternKind::Int(v) => SPat::Con(Head::Int(*v), vec![]),
        TPatternKind::Float(v) => SPat::Con(Head::Float(v.to_bits()), vec![]),
        TPatternKind::Ctor { tag, inner, .. } => {
            SPat::Con(Head::Tag(*tag), inner.iter().map(|p| simplify(p, u)).collect())
        }
        TPatternKind::Tuple(ps) => SPat::Con(Head::Single, ps.iter().map(|p| simplify(p, u)).collect()),
        TPatternKind::Record(fs) => {
            let args = u
                .fields(&p.ty)
                .iter()
                .map(|(name, _)| fs.iter().find(|(n, _)| n == name).map_or(SPat::Wild, |(_, p)| simplify(p, u)))
                .collect();
            SPat::Con(Head::Single, args)
        }
    }
}

/// Argument types of constructor `h` of type `ty`.
fn arg_types(h: &Head, ty: &Type, u: &dyn Universe) -> Vec<Type> {
    match (h, ty) {
        (Head::Tag(t), _) => {
            u.ctors(ty).into_iter().find(|(tag, _)| tag == t).and_then(|(_, p)| p).into_iter().collect()
        }
        (Head::Single, Type::Tuple(ts)) => ts.clone(),
        (Head::Single, Type::Record(..)) => u.fields(ty).into_iter().map(|(_, t)| t).collect(),
        _ => Vec::new(),
    }
}

fn specialize(rows: &[Vec<SPat>], h: &Head, arity: usize) -> Vec<Vec<SPat>> {
    rows.iter()
        .filter_map(|row| match &row[0] {
            SPat::Wild => Some(std::iter::repeat_n(SPat::Wild, arity).chain(row[1..].iter().cloned()).collect()),
            SPat::Con(g, args) if g == h => Some(args.iter().cloned().chain(row[1..].iter().cloned()).collect()),
            SPat::Con(..) => None,
        })
        .collect()
}

fn default_rows(rows: &[Vec<SPat>]) -> Vec<Vec<SPat>> {
    rows.iter().filter(|r| matches!(r[0], SPat::Wild)).map(|r| r[1..].to_vec()).collect()
}

/// Every constructor of `ty` when the set is finite.
fn signature(ty: &Type, u: &dyn Universe) -> Option<Vec<Head>> {
    match ty {
        Type::Adt(..) => Some(u.ctors(ty).into_iter().map(|(t, _)| Head::Tag(t)).collect()),
        Type::Tuple(_) | Type::Record(..) => Some(vec![Head::Single]),
        _ => None,
    }
}

fn useful(rows: &[Vec<SPat>], v: &[SPat], tys: &[Type], u: &dyn Universe) -> bool {
    if v.is_empty() {
        return rows.is_empty();
    }
    let rest_tys = &tys[1..];
    let with_args = |h: &Head, args: Vec<SPat>| -> bool {
        let arg_tys = arg_types(h, &tys[0], u);
        let n = arg_tys.len();
        let args: Vec<SPat> = if args.len() == n { args } else { vec![SPat::Wild; n] };
        let vv: Vec<SPat> = args.into_iter().chain(v[1..].iter().cloned()).collect();
        let tt: Vec<Type> = arg_tys.into_iter().chain(rest_tys.iter().cloned()).collect();
        useful(&specialize(rows, h, n), &vv, &tt, u)
    };
    match &v[0] {
        SPat::Con(h, args) => with_args(h, args.clone()),
        SPat::Wild => {
            let present: Vec<&Head> = rows
                .iter()
                .filter_map(|r| match &r[0] {
                    SPat::Con(h, _) => Some(h),
                    SPat::Wild => None,
                })
                .collect();
            match signature(&tys[0], u) {
                Some(all) if !all.is_empty() && all.iter().all(|h| present.contains(&h)) => {
                    all.iter().any(|h| with_args(h, Vec::new()))
                }
                _ => useful(&default_rows(rows), &v[1..], rest_tys, u),
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub exhaustive: bool,
    /// Indices of arms that can never be reached.
    pub unreachable: Vec<usize>,
}

pub fn coverage(scrutinee: &Type, arms: &[&TPattern], u: &dyn Universe) -> Coverage {
    let tys = [scrutinee.clone()];
    let mut rows: Vec<Vec<SPat>> = Vec::new();
    let mut unreachable = Vec::new();
    for (i, p) in arms.iter().enumerate() {
        let row = vec![simplify(p, u)];
        if !useful(&rows, &row, &tys, u) {
            unreachable.push(i);
        }
        rows.push(row);
    }
    let exhaustive = !useful(&rows, &[SPat::Wild], &tys, u);
    Coverage { exhaustive, unreachable }
}

/// True when the pattern can fail to match a value of its type.
pub fn is_refutable(p: &TPattern, u: &dyn Universe) -> bool {
    !coverage(&p.ty, &[p], u).exhaustive
}
