//! Capture-avoiding substitution.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{ident, Formula, Ident, LinExpr, Sort, Term, Var};

pub type Subst = BTreeMap<Var, Term>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("sort mismatch substituting `{var}`: expected {expected}, found {found}")]
pub struct SortMismatch {
    pub var: String,
    pub expected: Sort,
    pub found: Sort,
}

/// Append primes to `base` until it avoids `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<Ident>) -> Ident {
    let mut name = format!("{base}'");
    while used.contains(name.as_str()) {
        name.push('\'');
    }
    ident(&name)
}

fn check_sorts(s: &Subst) -> Result<(), SortMismatch> {
    for (v, t) in s {
        let found = t.sort();
        if found != v.sort {
            return Err(SortMismatch { var: v.name.to_string(), expected: v.sort.clone(), found });
        }
    }
    Ok(())
}

pub fn substitute(f: &Formula, s: &Subst) -> Result<Formula, SortMismatch> {
    check_sorts(s)?;
    Ok(subst_formula(f, s))
}

pub fn substitute_term(t: &Term, s: &Subst) -> Result<Term, SortMismatch> {
    check_sorts(s)?;
    Ok(subst_term(t, s))
}

/// Substitution for callers that already guarantee matching sorts.
pub fn substitute_unchecked(f: &Formula, s: &Subst) -> Formula {
    subst_formula(f, s)
}

pub fn substitute_term_unchecked(t: &Term, s: &Subst) -> Term {
    subst_term(t, s)
}

/// Rename free variables; sorts must agree.
pub fn rename_vars(f: &Formula, map: &BTreeMap<Var, Var>) -> Formula {
    let s: Subst = map.iter().map(|(k, v)| (k.clone(), Term::Var(v.clone()))).collect();
    subst_formula(f, &s)
}

fn subst_term(t: &Term, s: &Subst) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::State(..) | Term::Const(..) | Term::Num(..) => t.clone(),
        Term::App { fun, arg, sort } => {
            Term::App { fun: fun.clone(), arg: Box::new(subst_term(arg, s)), sort: sort.clone() }
        }
        Term::Select { array, index, sort } => Term::Select {
            array: array.clone(),
            index: Box::new(subst_term(index, s)),
            sort: sort.clone(),
        },
        Term::Lin(l) => LinExpr::build(
            l.sort.clone(),
            l.terms.iter().map(|(c, u)| (c.clone(), subst_term(u, s))).collect(),
            l.constant.clone(),
        ),
        Term::Case { branches, default } => Term::Case {
            branches: branches.iter().map(|(c, u)| (subst_formula(c, s), subst_term(u, s))).collect(),
            default: Box::new(subst_term(default, s)),
        },
    }
}

/// Prepare the substitution for going under binders `vars` of `body`:
/// shadowed entries are dropped, and binders that would capture a free
/// variable of the substituted terms are renamed.
fn enter_binder(vars: &[Var], body_fv: &BTreeSet<Var>, s: &Subst) -> (Vec<Var>, Subst) {
    let mut inner: Subst = s.iter().filter(|(k, _)| !vars.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    // Only entries that actually occur matter for capture.
    let mut range_fv = BTreeSet::new();
    for (k, t) in &inner {
        if body_fv.contains(k) {
            t.free_vars_into(&mut range_fv);
        }
    }
    let mut used: BTreeSet<Ident> = body_fv.iter().map(|v| v.name.clone()).collect();
    used.extend(range_fv.iter().map(|v| v.name.clone()));
    used.extend(vars.iter().map(|v| v.name.clone()));
    let mut new_vars = Vec::with_capacity(vars.len());
    for v in vars {
        if range_fv.iter().any(|w| w.name == v.name) {
            let name = fresh_name(&v.name, &used);
            used.insert(name.clone());
            let nv = Var { name, sort: v.sort.clone() };
            inner.insert(v.clone(), Term::Var(nv.clone()));
            new_vars.push(nv);
        } else {
            new_vars.push(v.clone());
        }
    }
    (new_vars, inner)
}

fn subst_formula(f: &Formula, s: &Subst) -> Formula {
    if s.is_empty() {
        return f.clone();
    }
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => Formula::Eq(subst_term(a, s), subst_term(b, s)),
        Formula::Lt(a, b) => Formula::Lt(subst_term(a, s), subst_term(b, s)),
        Formula::Le(a, b) => Formula::Le(subst_term(a, s), subst_term(b, s)),
        Formula::Divides(m, t) => Formula::Divides(m.clone(), subst_term(t, s)),
        Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|t| subst_term(t, s)).collect()),
        Formula::Not(a) => Formula::Not(Box::new(subst_formula(a, s))),
        Formula::And(v) => Formula::And(v.iter().map(|g| subst_formula(g, s)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| subst_formula(g, s)).collect()),
        Formula::Implies(a, b) => Formula::Implies(Box::new(subst_formula(a, s)), Box::new(subst_formula(b, s))),
        Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
            let (nvs, inner) = enter_binder(vs, &body.free_vars(), s);
            let nb = Box::new(subst_formula(body, &inner));
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(nvs, nb)
            } else {
                Formula::Forall(nvs, nb)
            }
        }
        Formula::LambdaEq { array, index, param, body } => {
            let (mut nvs, inner) = enter_binder(std::slice::from_ref(param), &body.free_vars(), s);
            Formula::LambdaEq {
                array: array.clone(),
                index: index.clone(),
                param: nvs.pop().unwrap(),
                body: subst_term(body, &inner),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::SortKind;
    use super::*;

    #[test]
    fn capture_is_avoided_by_priming() {
        // (∃y. x = a[y])[x := a[y]]  ~>  ∃y'. a[y] = a[y']
        let e = Sort::new("E", SortKind::Memory);
        let d = Sort::new("D", SortKind::Value);
        let y = Var::new("y", e.clone());
        let x = Var::new("x", d.clone());
        let body = Formula::eq(Term::var(&x), Term::select("a", Term::var(&y), &d));
        let f = Formula::exists(vec![y.clone()], body);
        let mut s = Subst::new();
        s.insert(x, Term::select("a", Term::var(&y), &d));
        let out = substitute(&f, &s).unwrap();
        let y1 = Var::new("y'", e);
        let expect = Formula::exists(
            vec![y1.clone()],
            Formula::eq(Term::select("a", Term::var(&y), &d), Term::select("a", Term::var(&y1), &d)),
        );
        assert_eq!(out, expect);
    }

    #[test]
    fn sort_mismatch_is_reported() {
        let d = Sort::new("D", SortKind::Value);
        let x = Var::new("x", d);
        let mut s = Subst::new();
        s.insert(x.clone(), Term::int(3));
        let err = substitute(&Formula::eq(Term::var(&x), Term::var(&x)), &s).unwrap_err();
        assert_eq!(err.var, "x");
    }

    #[test]
    fn shadowed_variables_are_untouched() {
        let d = Sort::new("D", SortKind::Value);
        let x = Var::new("x", d.clone());
        let f = Formula::exists(vec![x.clone()], Formula::eq(Term::var(&x), Term::undef(&d)));
        let mut s = Subst::new();
        s.insert(x, Term::constant("c", &d));
        assert_eq!(substitute(&f, &s).unwrap(), f);
    }
}
