//! Preimages of cubes under single transitions.
//!
//! For `tr = ∃e,d (γ ∧ ∀k γᵤ ∧ x' = F ∧ a' = λy. G)` and a target cube
//! `∃e₁ ψ(x, a)`, the exact preimage is
//! `∃e,e₁,d (γ ∧ ∀k γᵤ ∧ ψ(F, λy. G))`, obtained by replacing every
//! memory variable by its update term and beta-reducing every array read.
//! The instantiated preimage replaces `∀k γᵤ` by its instances over the
//! index variables in `e ∪ e₁` (and any ground index terms), which gives a
//! weaker, quantifier-free body.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::covers::{cover, CoverConfig, CoverError};
use crate::formula::{
    fresh_name, rename_vars, substitute_term_unchecked, substitute_unchecked, to_dnf, Cube, DnfError, Formula, Ident, LinExpr,
    Subst, Term, Var,
};
use crate::spec::{ElemConsts, TransitionRule};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PreimageError {
    #[error(transparent)]
    Dnf(#[from] DnfError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// The pieces of a preimage before quantifiers are attached.
struct Parts {
    vars: Vec<Var>,
    guard: Formula,
    universal: Option<(Var, Formula)>,
    body: Formula,
}

/// Next-state value of a term under `tr`. Reads inside update terms refer
/// to the current state and are left alone.
fn next_term(tr: &TransitionRule, t: &Term) -> Term {
    match t {
        Term::State(x, s) => match tr.var_updates.iter().find(|(n, _)| n == x) {
            Some((_, f)) => f.clone(),
            None => Term::State(x.clone(), s.clone()),
        },
        Term::Select { array, index, sort } => {
            let at = next_term(tr, index);
            match tr.array_update(array) {
                Some(u) => {
                    let mut s = Subst::new();
                    s.insert(u.param.clone(), at);
                    substitute_term_unchecked(&u.body, &s)
                }
                None => Term::Select { array: array.clone(), index: Box::new(at), sort: sort.clone() },
            }
        }
        Term::App { fun, arg, sort } => Term::App { fun: fun.clone(), arg: Box::new(next_term(tr, arg)), sort: sort.clone() },
        Term::Lin(l) => {
            let mut out = LinExpr::zero(l.sort.clone());
            out.constant = l.constant.clone();
            for (c, t) in &l.terms {
                out.add_term(c, &next_term(tr, t));
            }
            out.into_term()
        }
        Term::Case { branches, default } => Term::Case {
            branches: branches.iter().map(|(c, t)| (next_formula(tr, c), next_term(tr, t))).collect(),
            default: Box::new(next_term(tr, default)),
        },
        Term::Var(_) | Term::Const(..) | Term::Num(..) => t.clone(),
    }
}

fn next_formula(tr: &TransitionRule, f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => Formula::Eq(next_term(tr, a), next_term(tr, b)),
        Formula::Lt(a, b) => Formula::Lt(next_term(tr, a), next_term(tr, b)),
        Formula::Le(a, b) => Formula::Le(next_term(tr, a), next_term(tr, b)),
        Formula::Divides(m, t) => Formula::Divides(m.clone(), next_term(tr, t)),
        Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|t| next_term(tr, t)).collect()),
        Formula::Not(a) => Formula::Not(Box::new(next_formula(tr, a))),
        Formula::And(v) => Formula::And(v.iter().map(|g| next_formula(tr, g)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| next_formula(tr, g)).collect()),
        Formula::Implies(a, b) => Formula::Implies(Box::new(next_formula(tr, a)), Box::new(next_formula(tr, b))),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(next_formula(tr, b))),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(next_formula(tr, b))),
        Formula::LambdaEq { .. } => f.clone(),
    }
}

/// `ψ` evaluated in the successor state: `ψ(F, λy. G)`.
pub fn substitute_next(tr: &TransitionRule, psi: &Formula) -> Formula {
    next_formula(tr, psi)
}

/// Rename the transition's parameters apart from the names in `used`.
fn rename_apart(tr: &TransitionRule, used: &mut BTreeSet<Ident>) -> TransitionRule {
    let mut map: BTreeMap<Var, Var> = BTreeMap::new();
    for v in tr.index_vars.iter().chain(&tr.data_vars) {
        let name = if used.contains(&v.name) { fresh_name(&v.name, used) } else { v.name.clone() };
        used.insert(name.clone());
        if name != v.name {
            map.insert(v.clone(), Var { name, sort: v.sort.clone() });
        }
    }
    if map.is_empty() {
        return tr.clone();
    }
    let s: Subst = map.iter().map(|(k, v)| (k.clone(), Term::Var(v.clone()))).collect();
    let mut out = tr.clone();
    out.index_vars = tr.index_vars.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect();
    out.data_vars = tr.data_vars.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect();
    out.guard = rename_vars(&tr.guard, &map);
    if let Some(u) = &mut out.universal {
        u.guard = substitute_unchecked(&u.guard, &s);
    }
    for (_, t) in &mut out.var_updates {
        *t = substitute_term_unchecked(t, &s);
    }
    for u in &mut out.array_updates {
        u.body = substitute_term_unchecked(&u.body, &s);
    }
    out
}

fn parts(tr: &TransitionRule, target: &Cube) -> Parts {
    let mut used: BTreeSet<Ident> = target.all_vars().into_iter().map(|v| v.name).collect();
    for l in &target.literals {
        used.extend(l.free_vars().into_iter().map(|v| v.name));
    }
    let tr = rename_apart(tr, &mut used);
    let body = Formula::and(target.literals.iter().map(|l| next_formula(&tr, l)).collect());
    let mut vars = tr.index_vars.clone();
    vars.extend(target.index_vars.iter().cloned());
    vars.extend(tr.data_vars.iter().cloned());
    vars.extend(target.data_vars.iter().cloned());
    Parts { vars, guard: tr.guard.clone(), universal: tr.universal.as_ref().map(|u| (u.var.clone(), u.guard.clone())), body }
}

/// Exact preimage of `target` under `tr`. Contains `∀k γᵤ` when `tr` has
/// a universal guard.
pub fn pre(tr: &TransitionRule, target: &Cube) -> Formula {
    let p = parts(tr, target);
    let mut conj = vec![p.guard];
    if let Some((k, g)) = p.universal {
        conj.push(Formula::forall(vec![k], g));
    }
    conj.push(p.body);
    Formula::exists(p.vars, Formula::and(conj))
}

/// Memory-sort terms that are not variables, e.g. ground index terms.
fn ground_index_terms(f: &Formula, out: &mut BTreeSet<Term>) {
    f.any_term(&mut |t| {
        if t.sort().is_memory() && !matches!(t, Term::Var(_)) && t.free_vars().is_empty() {
            out.insert(t.clone());
        }
        false
    });
}

/// Preimage with the universal guard instantiated over the index
/// variables of the transition and of the target, plus ground index terms
/// of the right sort. Quantifier-free under the `∃` prefix.
pub fn inst_pre(tr: &TransitionRule, target: &Cube) -> Formula {
    let p = parts(tr, target);
    let mut conj = vec![p.guard.clone()];
    if let Some((k, g)) = &p.universal {
        let mut ground = BTreeSet::new();
        ground_index_terms(&p.guard, &mut ground);
        ground_index_terms(&p.body, &mut ground);
        ground_index_terms(g, &mut ground);
        let inst: Vec<Term> = p
            .vars
            .iter()
            .filter(|v| v.sort == k.sort)
            .map(Term::var)
            .chain(ground.into_iter().filter(|t| t.sort() == k.sort))
            .collect();
        for t in inst {
            let mut s = Subst::new();
            s.insert(k.clone(), t);
            conj.push(substitute_unchecked(g, &s));
        }
    }
    conj.push(p.body);
    Formula::exists(p.vars, Formula::and(conj))
}

/// Split an `∃`-prefixed quantifier-free formula into cubes whose data
/// variables are still present.
pub fn raw_cubes(f: &Formula) -> Result<Vec<Cube>, PreimageError> {
    let d = to_dnf(f)?;
    Ok(d.disjuncts
        .into_iter()
        .map(|lits| {
            let used: BTreeSet<Var> = lits.iter().flat_map(|l| l.free_vars()).collect();
            let (index_vars, data_vars): (Vec<Var>, Vec<Var>) =
                d.vars.iter().filter(|v| used.contains(v)).cloned().partition(|v| v.sort.is_memory());
            Cube { index_vars, data_vars, literals: lits }
        })
        .collect())
}

/// Frontier cubes obtained from one (transition, cube) pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PreCubes {
    pub cubes: Vec<Cube>,
    /// Some cover step was approximate.
    pub approximate: bool,
}

/// Eliminate data variables from raw cubes and normalize the results.
pub fn eliminate_data(
    raw: Vec<Cube>,
    elem: &BTreeMap<Ident, ElemConsts>,
    cfg: &CoverConfig,
) -> Result<PreCubes, PreimageError> {
    let mut out = PreCubes::default();
    let mut seen = BTreeSet::new();
    for c in raw {
        let Some(c) = c.normalize() else { continue };
        let disjuncts = if c.data_vars.is_empty() {
            vec![c.literals.clone()]
        } else {
            let cv = cover(&c.literals, &c.data_vars, elem, cfg)?;
            out.approximate |= cv.approximate;
            cv.disjuncts
        };
        for lits in disjuncts {
            if let Some(n) = Cube::new(c.index_vars.clone(), lits).normalize() {
                if seen.insert(n.clone()) {
                    out.cubes.push(n);
                }
            }
        }
    }
    Ok(out)
}

/// `Covers(InstPre(tr, target))` as a list of frontier cubes.
pub fn inst_pre_cubes(
    tr: &TransitionRule,
    target: &Cube,
    elem: &BTreeMap<Ident, ElemConsts>,
    cfg: &CoverConfig,
) -> Result<PreCubes, PreimageError> {
    eliminate_data(raw_cubes(&inst_pre(tr, target))?, elem, cfg)
}

/// `Covers(Pre(tr, target))` for transitions without a universal guard.
/// Returns `None` when `tr` has one, since the exact preimage is then not
/// a state formula.
pub fn pre_cubes(
    tr: &TransitionRule,
    target: &Cube,
    elem: &BTreeMap<Ident, ElemConsts>,
    cfg: &CoverConfig,
) -> Result<Option<PreCubes>, PreimageError> {
    if tr.universal.is_some() {
        return Ok(None);
    }
    Ok(Some(eliminate_data(raw_cubes(&pre(tr, target))?, elem, cfg)?))
}
