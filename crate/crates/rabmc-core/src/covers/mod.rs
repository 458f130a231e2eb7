//! Covers: eliminating existentially quantified data variables from a
//! conjunction of literals, modulo unary functions with `undef` and linear
//! arithmetic.
//!
//! The procedure works one conjunction (branch) at a time:
//!
//! 1. Nested applications over eliminated variables are flattened into
//!    definitions `r = f(e)`; flag-sort variables are split on their two
//!    values.
//! 2. Equalities that pin an eliminated variable are substituted away,
//!    definitions sharing function and argument are merged (congruence),
//!    and arguments of `undef`-preserving functions are split on being
//!    `undef`.
//! 3. What remains of an id or value variable is a disequality or a
//!    definition at its own argument. A fresh element satisfies all of
//!    those at once, so such literals are dropped.
//! 4. Arithmetic variables are projected: Fourier-Motzkin over the reals,
//!    Cooper's method over the integers.
//!
//! Whenever a step cannot be done exactly (relation atoms over an
//! eliminated variable, moduli above the cap, budgets), literals are
//! dropped instead. Dropping a literal weakens the formula, so the result
//! is still implied by the input; the result is then flagged approximate.

mod arith;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{
    ident, simplify_literal, substitute_term_unchecked, substitute_unchecked, Formula, Ident, Sort, SortKind, Subst,
    Term, Var,
};
use crate::spec::ElemConsts;
use arith::{project_int, project_real, shadow_int, ALit};

/// How integer variables are projected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LiaMode {
    /// Cooper's method, exact up to the modulus cap.
    #[default]
    Cooper,
    /// Always take the real shadow (sound, approximate).
    Instantiate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverConfig {
    /// Maximum nesting of applications over eliminated variables.
    pub depth: usize,
    /// Largest modulus Cooper's method may expand.
    pub max_modulus: u64,
    /// Maximum number of branches per task.
    pub max_branches: usize,
    pub lia: LiaMode,
    /// Record a step-by-step trace.
    pub debug: bool,
}

impl Default for CoverConfig {
    fn default() -> CoverConfig {
        CoverConfig { depth: 6, max_modulus: 16, max_branches: 4096, lia: LiaMode::Cooper, debug: false }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("index variable `{0}` cannot be eliminated")]
    IndexVariable(String),
    #[error("cover input must be a conjunction of literals, found `{0}`")]
    NotALiteral(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cover {
    /// Disjunction of conjunctions over the kept symbols.
    pub disjuncts: Vec<Vec<Formula>>,
    /// Some step dropped information: the result is implied by the input
    /// but may not be the strongest such formula.
    pub approximate: bool,
    pub trace: Vec<String>,
}

impl Cover {
    pub fn to_formula(&self) -> Formula {
        Formula::or(self.disjuncts.iter().map(|d| Formula::and(d.clone())).collect())
    }
}

#[derive(Clone, Debug)]
struct Def {
    rep: Term,
    fun: Ident,
    sort: Sort,
    arg: Var,
}

#[derive(Clone, Debug)]
struct Branch {
    lits: Vec<Formula>,
    defs: Vec<Def>,
    elim: BTreeSet<Var>,
    split: BTreeSet<Var>,
}

struct Ctx<'a> {
    cfg: &'a CoverConfig,
    elem: &'a BTreeMap<Ident, ElemConsts>,
    fresh: usize,
    approximate: bool,
    trace: Vec<String>,
}

impl Ctx<'_> {
    fn note(&mut self, msg: impl FnOnce() -> String) {
        if self.cfg.debug {
            let m = msg();
            tracing::debug!(target: "rabmc::covers", "{m}");
            self.trace.push(m);
        }
    }

    fn fresh_var(&mut self, sort: &Sort) -> Var {
        self.fresh += 1;
        Var { name: ident(&format!("cv!{}", self.fresh)), sort: sort.clone() }
    }
}

fn mentions(t: &Term, vs: &BTreeSet<Var>) -> bool {
    t.any(&mut |u| matches!(u, Term::Var(v) if vs.contains(v)))
}

fn lit_mentions(l: &Formula, vs: &BTreeSet<Var>) -> bool {
    l.any_term(&mut |u| matches!(u, Term::Var(v) if vs.contains(v)))
}

fn is_literal(l: &Formula) -> bool {
    match l {
        Formula::Not(a) => a.is_atom(),
        a => a.is_atom(),
    }
}

/// `∃ eliminate. ⋀ literals`, with the eliminated variables compiled away.
pub fn cover(
    literals: &[Formula],
    eliminate: &[Var],
    elem: &BTreeMap<Ident, ElemConsts>,
    cfg: &CoverConfig,
) -> Result<Cover, CoverError> {
    if let Some(v) = eliminate.iter().find(|v| v.sort.is_memory()) {
        return Err(CoverError::IndexVariable(v.name.to_string()));
    }
    if let Some(l) = literals.iter().find(|l| !is_literal(l) || l.any_term(&mut |t| matches!(t, Term::Case { .. }))) {
        return Err(CoverError::NotALiteral(l.to_string()));
    }
    let elim: BTreeSet<Var> = eliminate.iter().cloned().collect();
    let mut cx = Ctx { cfg, elem, fresh: 0, approximate: false, trace: Vec::new() };
    let relaxed = || -> Vec<Formula> { literals.iter().filter(|l| !lit_mentions(l, &elim)).cloned().collect() };

    let Some(start) = flatten(literals, &elim, &mut cx) else {
        cx.note(|| "application nesting above the depth bound; dropping".into());
        return Ok(Cover { disjuncts: vec![relaxed()], approximate: true, trace: cx.trace });
    };
    let mut work = vec![start];
    let mut done: Vec<Branch> = Vec::new();
    while let Some(b) = work.pop() {
        if work.len() + done.len() > cfg.max_branches {
            cx.note(|| "branch budget exceeded; dropping".into());
            return Ok(Cover { disjuncts: vec![relaxed()], approximate: true, trace: cx.trace });
        }
        match saturate(b, &mut cx) {
            Step::Dead => {}
            Step::Done(b) => done.push(b),
            Step::Split(a, b) => {
                work.push(b);
                work.push(a);
            }
        }
    }
    let mut disjuncts = Vec::new();
    for b in done {
        for d in finish(b, &mut cx) {
            disjuncts.push(d);
        }
        if disjuncts.len() > cfg.max_branches {
            cx.note(|| "disjunct budget exceeded; dropping".into());
            return Ok(Cover { disjuncts: vec![relaxed()], approximate: true, trace: cx.trace });
        }
    }
    let disjuncts = prune(disjuncts);
    Ok(Cover { disjuncts, approximate: cx.approximate, trace: cx.trace })
}

/// Sort, dedupe and drop disjuncts subsumed by a smaller one.
fn prune(ds: Vec<Vec<Formula>>) -> Vec<Vec<Formula>> {
    let mut ds: Vec<Vec<Formula>> = ds
        .into_iter()
        .map(|mut d| {
            d.sort();
            d.dedup();
            d
        })
        .collect();
    ds.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    ds.dedup();
    let mut out: Vec<Vec<Formula>> = Vec::new();
    for d in ds {
        if !out.iter().any(|o| o.iter().all(|l| d.contains(l))) {
            out.push(d);
        }
    }
    out
}

/// Replace every application whose argument mentions an eliminated
/// variable by a fresh eliminated variable with a definition. `None` when
/// nesting exceeds the depth bound.
fn flatten(lits: &[Formula], elim: &BTreeSet<Var>, cx: &mut Ctx<'_>) -> Option<Branch> {
    let mut b = Branch { lits: Vec::new(), defs: Vec::new(), elim: elim.clone(), split: BTreeSet::new() };
    let mut memo: BTreeMap<(Ident, Var), Var> = BTreeMap::new();
    let mut too_deep = false;
    for l in lits {
        let nl = l.rewrite_terms(&mut |t| Some(flat_term(t, &mut b, &mut memo, cx, &mut too_deep)));
        b.lits.push(nl);
    }
    let max_depth = lits.iter().map(|l| {
        let mut d = 0;
        l.any_term(&mut |t| {
            if mentions(t, elim) {
                d = d.max(t.app_depth());
            }
            false
        });
        d
    });
    if too_deep || max_depth.max().unwrap_or(0) > cx.cfg.depth {
        return None;
    }
    Some(b)
}

fn flat_term(
    t: &Term,
    b: &mut Branch,
    memo: &mut BTreeMap<(Ident, Var), Var>,
    cx: &mut Ctx<'_>,
    too_deep: &mut bool,
) -> Term {
    match t {
        Term::App { fun, arg, sort } if mentions(arg, &b.elim) || matches!(&**arg, Term::Var(v) if b.elim.contains(v)) => {
            let a = flat_term(arg, b, memo, cx, too_deep);
            let Term::Var(av) = a else {
                // the argument is an id-sort term built from eliminated
                // variables, so after flattening it is a variable
                *too_deep = true;
                return t.clone();
            };
            if let Some(z) = memo.get(&(fun.clone(), av.clone())) {
                return Term::Var(z.clone());
            }
            let z = cx.fresh_var(sort);
            b.elim.insert(z.clone());
            memo.insert((fun.clone(), av.clone()), z.clone());
            b.defs.push(Def { rep: Term::Var(z.clone()), fun: fun.clone(), sort: sort.clone(), arg: av });
            Term::Var(z)
        }
        Term::Lin(l) => {
            let mut e = crate::formula::LinExpr::zero(l.sort.clone());
            e.constant = l.constant.clone();
            for (c, u) in &l.terms {
                e.add_term(c, &flat_term(u, b, memo, cx, too_deep));
            }
            e.into_term()
        }
        other => other.clone(),
    }
}

enum Step {
    Dead,
    Done(Branch),
    Split(Branch, Branch),
}

fn apply(b: &mut Branch, v: &Var, t: &Term) {
    let mut s = Subst::new();
    s.insert(v.clone(), t.clone());
    b.lits = b.lits.iter().map(|l| substitute_unchecked(l, &s)).collect();
    b.elim.remove(v);
    let defs = std::mem::take(&mut b.defs);
    for mut d in defs {
        d.rep = substitute_term_unchecked(&d.rep, &s);
        if d.arg == *v {
            match t {
                Term::Var(w) if b.elim.contains(w) => {
                    d.arg = w.clone();
                    b.defs.push(d);
                }
                _ => {
                    let app = Term::App { fun: d.fun.clone(), arg: Box::new(t.clone()), sort: d.sort.clone() };
                    b.lits.push(Formula::eq(d.rep, app));
                }
            }
        } else {
            b.defs.push(d);
        }
    }
}

/// A substitution `v := t` licensed by some literal.
fn find_subst(b: &Branch) -> Option<(Var, Term)> {
    let mut best: Option<(Var, Term)> = None;
    for l in &b.lits {
        let Formula::Eq(x, y) = l else { continue };
        if x.sort().is_arith() {
            if let Some(s) = solve_arith(l, b) {
                if !mentions(&s.1, &b.elim) {
                    return Some(s);
                }
                best.get_or_insert(s);
            }
            continue;
        }
        for (a, c) in [(x, y), (y, x)] {
            if let Term::Var(v) = a {
                if b.elim.contains(v) && !c.any(&mut |u| matches!(u, Term::Var(w) if w == v)) {
                    if !mentions(c, &b.elim) {
                        return Some((v.clone(), c.clone()));
                    }
                    best.get_or_insert((v.clone(), c.clone()));
                }
            }
        }
    }
    best
}

/// Solve an arithmetic equality for an eliminated variable, when that is
/// exact: any nonzero coefficient over the reals, unit coefficients and an
/// integral rest over the integers.
fn solve_arith(l: &Formula, b: &Branch) -> Option<(Var, Term)> {
    let a = ALit::from_literal(l)?;
    for (c, t) in &a.e.terms {
        let Term::Var(v) = t else { continue };
        if !b.elim.contains(v) {
            continue;
        }
        let mut rest = a.e.clone();
        rest.take(t);
        if v.sort.is_int() {
            use num::{One, Signed};
            if !c.abs().is_one() || !rest.terms.iter().all(|(k, _)| k.is_integer()) || !rest.constant.is_integer() {
                continue;
            }
        }
        rest.scale(&(-c.recip()));
        return Some((v.clone(), rest.into_term()));
    }
    None
}

fn saturate(mut b: Branch, cx: &mut Ctx<'_>) -> Step {
    loop {
        // fold decided literals
        let mut lits = Vec::new();
        for l in &b.lits {
            match simplify_literal(l) {
                Formula::True => {}
                Formula::False => {
                    cx.note(|| format!("contradiction: {l}"));
                    return Step::Dead;
                }
                s => {
                    if lits.contains(&Formula::not(s.clone())) {
                        return Step::Dead;
                    }
                    if !lits.contains(&s) {
                        lits.push(s);
                    }
                }
            }
        }
        b.lits = lits;
        // flag-sort variables take one of two values
        if let Some(v) = b.elim.iter().find(|v| v.sort.kind == SortKind::Elem).cloned() {
            let Some(consts) = cx.elem.get(&v.sort.name) else {
                // unknown flag sort: treat like a value sort
                b.elim.remove(&v);
                cx.approximate = true;
                b.lits.retain(|l| !lit_mentions(l, &BTreeSet::from([v.clone()])));
                continue;
            };
            cx.note(|| format!("split {} on its two values", v.name));
            let mut a = b.clone();
            apply(&mut a, &v, &Term::Const(consts.t.clone(), v.sort.clone()));
            apply(&mut b, &v, &Term::Const(consts.f.clone(), v.sort.clone()));
            return Step::Split(a, b);
        }
        if let Some((v, t)) = find_subst(&b) {
            cx.note(|| format!("substitute {} := {t}", v.name));
            apply(&mut b, &v, &t);
            continue;
        }
        // congruence
        let mut merged = false;
        'outer: for i in 0..b.defs.len() {
            for j in i + 1..b.defs.len() {
                if b.defs[i].fun == b.defs[j].fun && b.defs[i].arg == b.defs[j].arg {
                    let d = b.defs.remove(j);
                    let r = b.defs[i].rep.clone();
                    cx.note(|| format!("congruence: {} = {}", r, d.rep));
                    b.lits.push(Formula::eq(r, d.rep));
                    merged = true;
                    break 'outer;
                }
            }
        }
        if merged {
            continue;
        }
        // undef case split on arguments of undef-preserving functions
        let pick = b
            .defs
            .iter()
            .find(|d| d.sort.has_undef() && d.arg.sort.has_undef() && !b.split.contains(&d.arg))
            .map(|d| d.arg.clone());
        if let Some(e) = pick {
            cx.note(|| format!("split {} on undef", e.name));
            let mut yes = b.clone();
            apply(&mut yes, &e, &Term::undef(&e.sort));
            b.split.insert(e.clone());
            b.lits.push(Formula::neq(Term::Var(e.clone()), Term::undef(&e.sort)));
            for d in &b.defs {
                if d.arg == e && d.sort.has_undef() {
                    b.lits.push(Formula::neq(d.rep.clone(), Term::undef(&d.sort)));
                }
            }
            return Step::Split(yes, b);
        }
        return Step::Done(b);
    }
}

/// Drop what fresh elements satisfy and project the arithmetic part.
fn finish(b: Branch, cx: &mut Ctx<'_>) -> Vec<Vec<Formula>> {
    let (arith_elim, other_elim): (BTreeSet<Var>, BTreeSet<Var>) =
        b.elim.iter().cloned().partition(|v| v.sort.is_arith());
    let mut kept = Vec::new();
    let mut alits = Vec::new();
    for l in &b.lits {
        if lit_mentions(l, &other_elim) {
            let ok = matches!(l, Formula::Not(a) if matches!(**a, Formula::Eq(..)));
            if !ok {
                cx.approximate = true;
                cx.note(|| format!("dropping {l}"));
            }
            continue;
        }
        if lit_mentions(l, &arith_elim) {
            match ALit::from_literal(l) {
                Some(a) => alits.push(a),
                None => {
                    // a relation atom over an arithmetic variable
                    cx.approximate = true;
                    cx.note(|| format!("dropping {l}"));
                }
            }
            continue;
        }
        kept.push(l.clone());
    }
    let mut cases: Vec<Vec<ALit>> = vec![alits];
    for x in &arith_elim {
        let mut next = Vec::new();
        for c in cases {
            if x.sort.is_int() {
                let exact = match cx.cfg.lia {
                    LiaMode::Cooper => project_int(x, c.clone(), cx.cfg.max_modulus).ok(),
                    LiaMode::Instantiate => None,
                };
                match exact {
                    Some(r) => next.extend(r),
                    None => {
                        cx.approximate = true;
                        cx.note(|| format!("real shadow for {}", x.name));
                        next.extend(shadow_int(x, c));
                    }
                }
            } else {
                let (r, approx) = project_real(x, c);
                if approx {
                    cx.approximate = true;
                }
                next.extend(r);
            }
        }
        cases = next;
    }
    cases
        .into_iter()
        .filter_map(|c| {
            let mut d = kept.clone();
            for a in c {
                match a.to_formula() {
                    Formula::True => {}
                    Formula::False => return None,
                    f => d.push(f),
                }
            }
            Some(d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    fn v(n: &str, s: &Sort) -> Var {
        Var::new(n, s.clone())
    }

    fn run(lits: Vec<Formula>, elim: &[Var]) -> Cover {
        cover(&lits, elim, &BTreeMap::new(), &CoverConfig::default()).unwrap()
    }

    #[test]
    fn substitution_links_the_kept_ends() {
        let s = Sort::new("S", SortKind::Value);
        let (d, y, z) = (v("d", &s), v("y", &s), v("z", &s));
        let c = run(
            vec![Formula::eq(Term::var(&y), Term::var(&d)), Formula::eq(Term::var(&d), Term::var(&z))],
            &[d],
        );
        assert_eq!(c.to_formula(), simplify_literal(&Formula::eq(Term::var(&y), Term::var(&z))));
        assert!(!c.approximate);
    }

    #[test]
    fn lone_disequality_vanishes() {
        let s = Sort::new("S", SortKind::Value);
        let (d, y) = (v("d", &s), v("y", &s));
        let c = run(vec![Formula::neq(Term::var(&d), Term::var(&y))], &[d]);
        assert_eq!(c.to_formula(), Formula::True);
    }

    #[test]
    fn real_interval_is_nonempty_when_ordered() {
        let r = Sort::real();
        let (d, y, z) = (v("d", &r), v("y", &r), v("z", &r));
        let c = run(vec![Formula::Lt(Term::var(&y), Term::var(&d)), Formula::Lt(Term::var(&d), Term::var(&z))], &[d]);
        assert_eq!(c.to_formula(), crate::formula::canonical_atom(&Formula::Lt(Term::var(&y), Term::var(&z))));
    }

    #[test]
    fn integer_interval_needs_a_gap_of_two() {
        let i = Sort::int();
        let (d, y, z) = (v("d", &i), v("y", &i), v("z", &i));
        let c = run(vec![Formula::Lt(Term::var(&y), Term::var(&d)), Formula::Lt(Term::var(&d), Term::var(&z))], &[d]);
        let y2 = crate::formula::LinExpr::build(
            i.clone(),
            vec![(BigRational::from_integer(1.into()), Term::var(&y))],
            BigRational::from_integer(2.into()),
        );
        assert_eq!(c.to_formula(), crate::formula::canonical_atom(&Formula::Le(y2, Term::var(&z))));
        assert!(!c.approximate);
    }

    #[test]
    fn index_variables_are_refused() {
        let m = Sort::new("M", SortKind::Memory);
        let r = cover(&[], &[v("i", &m)], &BTreeMap::new(), &CoverConfig::default());
        assert!(matches!(r, Err(CoverError::IndexVariable(_))));
    }
}
