//! In-memory representation of a relational action base, together with
//! its reader, printer and static checker.

mod parse;
mod print;
mod sexp;
mod validate;

use std::collections::BTreeMap;

use crate::formula::{ident, Formula, Ident, Sort, SortKind, Subst, Term, Var};

pub use parse::{parse, parse_extra_invariants, parse_unchecked, SpecError};
pub use print::print_spec;
pub use sexp::Pos;
pub use validate::{check_source, validate, Diagnostic, Severity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theory {
    None,
    Lia,
    Lra,
}

impl Theory {
    pub fn arith_sort(self) -> Option<Sort> {
        match self {
            Theory::None => None,
            Theory::Lia => Some(Sort::int()),
            Theory::Lra => Some(Sort::real()),
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Theory::None => "none",
            Theory::Lia => "lia",
            Theory::Lra => "lra",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: Ident,
    pub domain: Sort,
    pub codomain: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelDecl {
    pub name: Ident,
    pub args: Vec<Sort>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: Ident,
    pub sort: Sort,
}

/// The two constants of a flag sort, `true` first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElemConsts {
    pub t: Ident,
    pub f: Ident,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub theory: Theory,
    /// Declared id, value and flag sorts, in declaration order.
    pub sorts: Vec<Sort>,
    pub elem_consts: BTreeMap<Ident, ElemConsts>,
    pub funs: Vec<FunDecl>,
    pub rels: Vec<RelDecl>,
    pub consts: Vec<ConstDecl>,
}

impl Signature {
    pub fn fun(&self, name: &str) -> Option<&FunDecl> {
        self.funs.iter().find(|f| &*f.name == name)
    }

    pub fn rel(&self, name: &str) -> Option<&RelDecl> {
        self.rels.iter().find(|r| &*r.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.consts.iter().find(|c| &*c.name == name)
    }

    /// Constants of `sort`, excluding `undef`.
    pub fn consts_of(&self, sort: &Sort) -> Vec<Ident> {
        if let Some(e) = self.elem_consts.get(&sort.name) {
            if sort.is_elem() {
                return vec![e.t.clone(), e.f.clone()];
            }
        }
        self.consts.iter().filter(|c| c.sort == *sort).map(|c| c.name.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub name: Ident,
    pub sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayDecl {
    pub name: Ident,
    pub index: Sort,
    pub elem: Sort,
}

/// `x = c` for memory variables and `a = λy. d` for arrays. Anything not
/// listed is unconstrained.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Init {
    pub vars: Vec<(Ident, Term)>,
    pub arrays: Vec<(Ident, Term)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalGuard {
    pub var: Var,
    pub guard: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayUpdate {
    pub array: Ident,
    pub param: Var,
    pub body: Term,
}

/// `∃e,d (γ ∧ ∀k γᵤ ∧ x' = F ∧ a' = λy. G)`; variables and arrays without
/// an explicit update keep their value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionRule {
    pub name: Ident,
    pub index_vars: Vec<Var>,
    pub data_vars: Vec<Var>,
    pub guard: Formula,
    pub universal: Option<UniversalGuard>,
    pub var_updates: Vec<(Ident, Term)>,
    pub array_updates: Vec<ArrayUpdate>,
}

impl TransitionRule {
    /// Next value of memory variable `x` (identity when not updated).
    pub fn var_update(&self, x: &StateVar) -> Term {
        self.var_updates
            .iter()
            .find(|(n, _)| *n == x.name)
            .map(|(_, t)| t.clone())
            .unwrap_or_else(|| Term::State(x.name.clone(), x.sort.clone()))
    }

    pub fn array_update(&self, a: &str) -> Option<&ArrayUpdate> {
        self.array_updates.iter().find(|u| &*u.array == a)
    }

    /// Next value of `a[at]`.
    pub fn array_cell(&self, a: &ArrayDecl, at: &Term) -> Term {
        match self.array_update(&a.name) {
            Some(u) => {
                let mut s = Subst::new();
                s.insert(u.param.clone(), at.clone());
                crate::formula::substitute_term_unchecked(&u.body, &s)
            }
            None => Term::Select { array: a.name.clone(), index: Box::new(at.clone()), sort: a.elem.clone() },
        }
    }

    pub fn has_universal_guard(&self) -> bool {
        self.universal.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedFormula {
    pub name: Ident,
    pub formula: Formula,
}

/// `∀ vars. body` with a quantifier-free body over index variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariant {
    pub name: Ident,
    pub vars: Vec<Var>,
    pub body: Formula,
}

impl Invariant {
    pub fn to_formula(&self) -> Formula {
        Formula::forall(self.vars.clone(), self.body.clone())
    }
}

/// Source positions of named declarations. Ignored by equality so that
/// printed-and-reparsed specs compare equal.
#[derive(Clone, Debug, Default)]
pub struct SourceMap(pub BTreeMap<String, Pos>);

impl PartialEq for SourceMap {
    fn eq(&self, _: &SourceMap) -> bool {
        true
    }
}

impl Eq for SourceMap {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RabSpec {
    pub signature: Signature,
    pub mem_sorts: Vec<Sort>,
    pub vars: Vec<StateVar>,
    pub arrays: Vec<ArrayDecl>,
    /// Liveness-flag arrays, at most one per memory sort.
    pub alive: Vec<Ident>,
    pub init: Init,
    pub transitions: Vec<TransitionRule>,
    pub unsafe_props: Vec<NamedFormula>,
    pub invariants: Vec<Invariant>,
    pub spans: SourceMap,
}

impl RabSpec {
    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| &*a.name == name)
    }

    pub fn var(&self, name: &str) -> Option<&StateVar> {
        self.vars.iter().find(|v| &*v.name == name)
    }

    pub fn transition(&self, name: &str) -> Option<&TransitionRule> {
        self.transitions.iter().find(|t| &*t.name == name)
    }

    pub fn unsafe_prop(&self, name: &str) -> Option<&NamedFormula> {
        self.unsafe_props.iter().find(|u| &*u.name == name)
    }

    pub fn invariant(&self, name: &str) -> Option<&Invariant> {
        self.invariants.iter().find(|u| &*u.name == name)
    }

    pub fn has_universal_guards(&self) -> bool {
        self.transitions.iter().any(TransitionRule::has_universal_guard)
    }

    pub fn uses_arithmetic(&self) -> bool {
        self.signature.theory != Theory::None
    }

    /// Sort declared under `name`, including memory and built-in sorts.
    pub fn sort(&self, name: &str) -> Option<Sort> {
        if let Some(s) = self.signature.sorts.iter().chain(self.mem_sorts.iter()).find(|s| &*s.name == name) {
            return Some(s.clone());
        }
        self.signature.theory.arith_sort().filter(|s| &*s.name == name)
    }

    /// Liveness array for memory sort `s`, if any.
    pub fn alive_array(&self, s: &Sort) -> Option<&ArrayDecl> {
        self.alive.iter().filter_map(|n| self.array(n)).find(|a| a.index == *s)
    }

    /// `alive[t] = true-constant`.
    pub fn alive_atom(&self, t: &Term) -> Option<Formula> {
        let a = self.alive_array(&t.sort())?;
        let consts = self.signature.elem_consts.get(&a.elem.name)?;
        Some(Formula::eq(
            Term::Select { array: a.name.clone(), index: Box::new(t.clone()), sort: a.elem.clone() },
            Term::Const(consts.t.clone(), a.elem.clone()),
        ))
    }

    /// The initial formula, with arrays of a sort that has a liveness flag
    /// relativised to live indices. Memory variables and arrays with no
    /// initial value stay unconstrained.
    pub fn init_formula(&self) -> Formula {
        let mut parts = Vec::new();
        for (x, c) in &self.init.vars {
            let v = self.var(x).expect("validated");
            parts.push(Formula::eq(Term::State(v.name.clone(), v.sort.clone()), c.clone()));
        }
        for ms in &self.mem_sorts {
            let y = Var { name: ident("y!0"), sort: ms.clone() };
            let cells: Vec<Formula> = self
                .init
                .arrays
                .iter()
                .filter_map(|(a, d)| {
                    let decl = self.array(a)?;
                    (decl.index == *ms).then(|| {
                        Formula::eq(
                            Term::Select { array: decl.name.clone(), index: Box::new(Term::Var(y.clone())), sort: decl.elem.clone() },
                            d.clone(),
                        )
                    })
                })
                .collect();
            if cells.is_empty() {
                continue;
            }
            let body = Formula::and(cells);
            let body = match self.alive_atom(&Term::Var(y.clone())) {
                Some(a) => Formula::implies(a, body),
                None => body,
            };
            parts.push(Formula::forall(vec![y], body));
        }
        Formula::and(parts)
    }

    pub fn symbol_kind(&self, name: &str) -> Option<SymbolKind> {
        if self.sort(name).is_some() {
            Some(SymbolKind::Sort)
        } else if self.signature.fun(name).is_some() {
            Some(SymbolKind::Fun)
        } else if self.signature.rel(name).is_some() {
            Some(SymbolKind::Rel)
        } else if self.signature.constant(name).is_some()
            || self.signature.elem_consts.values().any(|e| &*e.t == name || &*e.f == name)
        {
            Some(SymbolKind::Const)
        } else if self.var(name).is_some() {
            Some(SymbolKind::Var)
        } else if self.array(name).is_some() {
            Some(SymbolKind::Array)
        } else {
            None
        }
    }

    /// Names of all memory sorts that have a declared flag sort kind.
    pub fn elem_sort(&self) -> Option<Sort> {
        self.signature.sorts.iter().find(|s| s.kind == SortKind::Elem).cloned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Sort,
    Fun,
    Rel,
    Const,
    Var,
    Array,
}
