//! Sorted first-order terms and formulae over a database signature
//! extended with memory variables and arrays.
//!
//! Every node carries enough sort information to be self-describing, so
//! callers never need a signature just to ask for the sort of a term.
//! Structural equality and ordering are derived, which makes the derived
//! `Ord` the canonical term ordering (constructor first, then symbol name,
//! then subterms).

mod cube;
mod display;
mod linear;
mod normalize;
mod subst;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational};

pub use cube::{flatten, simplify_literal, Cube};
pub use linear::{as_linear, canonical_atom, LinExpr};
pub use normalize::{
    eliminate_cases, nnf, normalize_case_lambda, to_dnf, Dnf, DnfError, DNF_BUDGET,
};
pub use subst::{
    fresh_name, rename_vars, substitute, substitute_term, substitute_term_unchecked, substitute_unchecked,
    SortMismatch, Subst,
};

/// Interned identifier. Cloning is a reference-count bump.
pub type Ident = Arc<str>;

pub fn ident(s: &str) -> Ident {
    Arc::from(s)
}

/// Name of the implicit undefined constant of every id and value sort.
pub const UNDEF: &str = "undef";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithKind {
    Int,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SortKind {
    /// Id sort: may appear as a function domain.
    Id,
    /// Value sort: codomain only.
    Value,
    /// Built-in arithmetic sort (`Int` or `Real`).
    Arith(ArithKind),
    /// Index sort of arrays; only ever quantified, never a codomain.
    Memory,
    /// Two-element flag sort introduced by the liveness encoding.
    Elem,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sort {
    pub name: Ident,
    pub kind: SortKind,
}

impl Sort {
    pub fn new(name: &str, kind: SortKind) -> Sort {
        Sort { name: ident(name), kind }
    }

    pub fn int() -> Sort {
        Sort::new("Int", SortKind::Arith(ArithKind::Int))
    }

    pub fn real() -> Sort {
        Sort::new("Real", SortKind::Arith(ArithKind::Real))
    }

    pub fn is_memory(&self) -> bool {
        self.kind == SortKind::Memory
    }

    pub fn is_arith(&self) -> bool {
        matches!(self.kind, SortKind::Arith(_))
    }

    pub fn is_int(&self) -> bool {
        self.kind == SortKind::Arith(ArithKind::Int)
    }

    pub fn is_elem(&self) -> bool {
        self.kind == SortKind::Elem
    }

    /// Id and value sorts carry an `undef` constant.
    pub fn has_undef(&self) -> bool {
        matches!(self.kind, SortKind::Id | SortKind::Value)
    }

    /// Sorts a memory variable or array cell may range over.
    pub fn is_basic(&self) -> bool {
        matches!(self.kind, SortKind::Id | SortKind::Value | SortKind::Arith(_))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Ident,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var { name: ident(name), sort }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Logical variable (bound index, data, or lambda parameter).
    Var(Var),
    /// Memory variable: part of the state.
    State(Ident, Sort),
    /// Database constant, including `undef` and the flag constants.
    Const(Ident, Sort),
    /// Unary database function application; `sort` is the codomain.
    App { fun: Ident, arg: Box<Term>, sort: Sort },
    /// Array read; `sort` is the element sort.
    Select { array: Ident, index: Box<Term>, sort: Sort },
    Num(BigRational, Sort),
    Lin(LinExpr),
    /// Case-defined term: first matching branch wins, `default` otherwise.
    Case { branches: Vec<(Formula, Term)>, default: Box<Term> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Lt(Term, Term),
    Le(Term, Term),
    /// `m | t` over the integers.
    Divides(BigInt, Term),
    Rel(Ident, Vec<Term>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
    /// `array = λparam. body`, the shape of a next-state array update.
    LambdaEq { array: Ident, index: Sort, param: Var, body: Term },
}

impl Term {
    pub fn var(v: &Var) -> Term {
        Term::Var(v.clone())
    }

    pub fn undef(sort: &Sort) -> Term {
        Term::Const(ident(UNDEF), sort.clone())
    }

    pub fn constant(name: &str, sort: &Sort) -> Term {
        Term::Const(ident(name), sort.clone())
    }

    pub fn state(name: &str, sort: &Sort) -> Term {
        Term::State(ident(name), sort.clone())
    }

    pub fn app(fun: &str, arg: Term, sort: &Sort) -> Term {
        Term::App { fun: ident(fun), arg: Box::new(arg), sort: sort.clone() }
    }

    pub fn select(array: &str, index: Term, sort: &Sort) -> Term {
        Term::Select { array: ident(array), index: Box::new(index), sort: sort.clone() }
    }

    pub fn int(n: i64) -> Term {
        Term::Num(BigRational::from_integer(n.into()), Sort::int())
    }

    pub fn num(n: BigRational, sort: &Sort) -> Term {
        Term::Num(n, sort.clone())
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort.clone(),
            Term::State(_, s) | Term::Const(_, s) | Term::Num(_, s) => s.clone(),
            Term::App { sort, .. } | Term::Select { sort, .. } => sort.clone(),
            Term::Lin(l) => l.sort.clone(),
            Term::Case { default, .. } => default.sort(),
        }
    }

    pub fn is_undef(&self) -> bool {
        matches!(self, Term::Const(n, _) if &**n == UNDEF)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::State(..) | Term::Const(..) | Term::Num(..) => {}
            Term::App { arg, .. } => arg.free_vars_into(out),
            Term::Select { index, .. } => index.free_vars_into(out),
            Term::Lin(l) => l.terms.iter().for_each(|(_, t)| t.free_vars_into(out)),
            Term::Case { branches, default } => {
                for (c, t) in branches {
                    c.free_vars_into(out);
                    t.free_vars_into(out);
                }
                default.free_vars_into(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    /// Does any node satisfy `pred`?
    pub fn any(&self, pred: &mut dyn FnMut(&Term) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Term::Var(_) | Term::State(..) | Term::Const(..) | Term::Num(..) => false,
            Term::App { arg, .. } => arg.any(pred),
            Term::Select { index, .. } => index.any(pred),
            Term::Lin(l) => l.terms.iter().any(|(_, t)| t.any(pred)),
            Term::Case { branches, default } => {
                branches.iter().any(|(c, t)| c.any_term(pred) || t.any(pred)) || default.any(pred)
            }
        }
    }

    pub fn contains_case(&self) -> bool {
        self.any(&mut |t| matches!(t, Term::Case { .. }))
    }

    /// Top-down rewrite. When `f` returns `Some`, the replacement is used
    /// as is; otherwise children are rewritten and the node is rebuilt.
    pub fn rewrite(&self, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
        if let Some(t) = f(self) {
            return t;
        }
        match self {
            Term::Var(_) | Term::State(..) | Term::Const(..) | Term::Num(..) => self.clone(),
            Term::App { fun, arg, sort } => {
                Term::App { fun: fun.clone(), arg: Box::new(arg.rewrite(f)), sort: sort.clone() }
            }
            Term::Select { array, index, sort } => Term::Select {
                array: array.clone(),
                index: Box::new(index.rewrite(f)),
                sort: sort.clone(),
            },
            Term::Lin(l) => {
                let terms = l.terms.iter().map(|(c, t)| (c.clone(), t.rewrite(f))).collect();
                LinExpr::build(l.sort.clone(), terms, l.constant.clone())
            }
            Term::Case { branches, default } => Term::Case {
                branches: branches
                    .iter()
                    .map(|(c, t)| (c.rewrite_terms(f), t.rewrite(f)))
                    .collect(),
                default: Box::new(default.rewrite(f)),
            },
        }
    }

    /// Nesting depth of function applications and array reads.
    pub fn app_depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::State(..) | Term::Const(..) | Term::Num(..) => 0,
            Term::App { arg, .. } | Term::Select { index: arg, .. } => 1 + arg.app_depth(),
            Term::Lin(l) => l.terms.iter().map(|(_, t)| t.app_depth()).max().unwrap_or(0),
            Term::Case { branches, default } => branches
                .iter()
                .map(|(_, t)| t.app_depth())
                .chain(std::iter::once(default.app_depth()))
                .max()
                .unwrap_or(0),
        }
    }
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Formula {
        Formula::not(Formula::Eq(a, b))
    }

    /// Negation with double-negation and constant folding.
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Conjunction that flattens, drops `true` and short-circuits on `false`.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::True
                | Formula::False
                | Formula::Eq(..)
                | Formula::Lt(..)
                | Formula::Le(..)
                | Formula::Divides(..)
                | Formula::Rel(..)
        )
    }

    /// Atom or negated atom.
    pub fn is_literal(&self) -> bool {
        match self {
            Formula::Not(inner) => inner.is_atom(),
            f => f.is_atom(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Exists(..) | Formula::Forall(..) | Formula::LambdaEq { .. } => false,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(v) | Formula::Or(v) => v.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            _ => true,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) | Formula::Lt(a, b) | Formula::Le(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Divides(_, t) => t.free_vars_into(out),
            Formula::Rel(_, args) => args.iter().for_each(|t| t.free_vars_into(out)),
            Formula::Not(a) => a.free_vars_into(out),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|f| f.free_vars_into(out)),
            Formula::Implies(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                for v in vs {
                    inner.remove(v);
                }
                out.extend(inner);
            }
            Formula::LambdaEq { param, body, .. } => {
                let mut inner = body.free_vars();
                inner.remove(param);
                out.extend(inner);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    /// Does any term node (at any depth) satisfy `pred`?
    pub fn any_term(&self, pred: &mut dyn FnMut(&Term) -> bool) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Eq(a, b) | Formula::Lt(a, b) | Formula::Le(a, b) => a.any(pred) || b.any(pred),
            Formula::Divides(_, t) => t.any(pred),
            Formula::Rel(_, args) => args.iter().any(|t| t.any(pred)),
            Formula::Not(a) => a.any_term(pred),
            Formula::And(v) | Formula::Or(v) => v.iter().any(|f| f.any_term(pred)),
            Formula::Implies(a, b) => a.any_term(pred) || b.any_term(pred),
            Formula::Exists(_, body) | Formula::Forall(_, body) => body.any_term(pred),
            Formula::LambdaEq { body, .. } => body.any(pred),
        }
    }

    /// Apply a top-down term rewrite to every maximal term position.
    /// Binders are not renamed; callers guarantee freshness.
    pub fn rewrite_terms(&self, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Eq(a, b) => Formula::Eq(a.rewrite(f), b.rewrite(f)),
            Formula::Lt(a, b) => Formula::Lt(a.rewrite(f), b.rewrite(f)),
            Formula::Le(a, b) => Formula::Le(a.rewrite(f), b.rewrite(f)),
            Formula::Divides(m, t) => Formula::Divides(m.clone(), t.rewrite(f)),
            Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|t| t.rewrite(f)).collect()),
            Formula::Not(a) => Formula::Not(Box::new(a.rewrite_terms(f))),
            Formula::And(v) => Formula::And(v.iter().map(|g| g.rewrite_terms(f)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.rewrite_terms(f)).collect()),
            Formula::Implies(a, b) => {
                Formula::Implies(Box::new(a.rewrite_terms(f)), Box::new(b.rewrite_terms(f)))
            }
            Formula::Exists(vs, body) => Formula::Exists(vs.clone(), Box::new(body.rewrite_terms(f))),
            Formula::Forall(vs, body) => Formula::Forall(vs.clone(), Box::new(body.rewrite_terms(f))),
            Formula::LambdaEq { array, index, param, body } => Formula::LambdaEq {
                array: array.clone(),
                index: index.clone(),
                param: param.clone(),
                body: body.rewrite(f),
            },
        }
    }

    /// Collect every atom outside case conditions.
    pub fn atoms_into<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            Formula::Not(a) => a.atoms_into(out),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| g.atoms_into(out)),
            Formula::Implies(a, b) => {
                a.atoms_into(out);
                b.atoms_into(out);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => b.atoms_into(out),
            Formula::LambdaEq { .. } => {}
            atom => out.push(atom),
        }
    }

    /// Total number of nodes; a rough size measure.
    pub fn size(&self) -> usize {
        match self {
            Formula::Not(a) => 1 + a.size(),
            Formula::And(v) | Formula::Or(v) => 1 + v.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
            Formula::Exists(_, b) | Formula::Forall(_, b) => 1 + b.size(),
            _ => 1,
        }
    }
}
