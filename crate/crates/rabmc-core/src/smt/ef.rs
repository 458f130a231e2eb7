//! The ∃∀ fragment: prenexing, and finite instantiation of universal index
//! variables.

use std::collections::{BTreeMap, BTreeSet};

use super::SmtError;
use crate::formula::{ident, nnf, substitute_unchecked, Formula, Sort, Subst, Term, Var};

/// Cap on the number of instances a single query may expand to.
pub const MAX_INSTANCES: usize = 200_000;

/// `∃ exists ∀ forall. matrix`, matrix quantifier-free. Free variables of
/// the matrix not bound here are read existentially as well.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExistsForall {
    pub exists: Vec<Var>,
    pub forall: Vec<Var>,
    pub matrix: Formula,
}

/// Replace `a = λy. t` by `∀y. a[y] = t`.
fn expand_lambdas(f: &Formula) -> Formula {
    match f {
        Formula::LambdaEq { array, index: _, param, body } => {
            let cell = Term::Select {
                array: array.clone(),
                index: Box::new(Term::Var(param.clone())),
                sort: body.sort(),
            };
            Formula::Forall(vec![param.clone()], Box::new(Formula::eq(cell, body.clone())))
        }
        Formula::Not(a) => Formula::Not(Box::new(expand_lambdas(a))),
        Formula::And(v) => Formula::And(v.iter().map(expand_lambdas).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(expand_lambdas).collect()),
        Formula::Implies(a, b) => Formula::Implies(Box::new(expand_lambdas(a)), Box::new(expand_lambdas(b))),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(expand_lambdas(b))),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(expand_lambdas(b))),
        atom => atom.clone(),
    }
}

struct Prenexer {
    next: usize,
    exists: Vec<Var>,
    forall: Vec<Var>,
}

impl Prenexer {
    fn fresh(&mut self, v: &Var) -> Var {
        self.next += 1;
        Var { name: ident(&format!("q!{}", self.next)), sort: v.sort.clone() }
    }

    fn bind(&mut self, vs: &[Var], body: &Formula, universal: bool) -> Formula {
        let mut s = Subst::new();
        for v in vs {
            let nv = self.fresh(v);
            s.insert(v.clone(), Term::Var(nv.clone()));
            if universal {
                self.forall.push(nv);
            } else {
                self.exists.push(nv);
            }
        }
        substitute_unchecked(body, &s)
    }

    fn walk(&mut self, f: &Formula, under_forall: bool) -> Result<Formula, SmtError> {
        Ok(match f {
            Formula::And(v) => Formula::And(v.iter().map(|g| self.walk(g, under_forall)).collect::<Result<_, _>>()?),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| self.walk(g, under_forall)).collect::<Result<_, _>>()?),
            Formula::Exists(vs, b) => {
                if under_forall {
                    return Err(SmtError::Fragment("existential quantifier below a universal one".into()));
                }
                let body = self.bind(vs, b, false);
                self.walk(&body, false)?
            }
            Formula::Forall(vs, b) => {
                if let Some(v) = vs.iter().find(|v| !v.sort.is_memory()) {
                    return Err(SmtError::Fragment(format!(
                        "universal variable `{}` ranges over {}, not a memory sort",
                        v.name, v.sort
                    )));
                }
                let body = self.bind(vs, b, true);
                self.walk(&body, true)?
            }
            other => other.clone(),
        })
    }
}

/// Bring `f` into ∃∀ prenex form, or report that it lies outside the fragment.
pub fn to_exists_forall(f: &Formula) -> Result<ExistsForall, SmtError> {
    let f = nnf(&expand_lambdas(f));
    let mut p = Prenexer { next: 0, exists: vec![], forall: vec![] };
    let matrix = p.walk(&f, false)?;
    Ok(ExistsForall { exists: p.exists, forall: p.forall, matrix })
}

/// Replace the universal prefix by the conjunction of its instances over
/// the index variables of each sort, plus one fresh index per sort.
///
/// Top-level conjuncts are instantiated separately over the universal
/// variables they mention, since `∀x,y (A(x) ∧ B(y))` is `∀x A ∧ ∀y B`.
pub fn instantiate(q: &ExistsForall) -> Result<Formula, SmtError> {
    if q.forall.is_empty() {
        return Ok(q.matrix.clone());
    }
    let universal: BTreeSet<&Var> = q.forall.iter().collect();
    let mut ground: BTreeMap<Sort, BTreeSet<Var>> = BTreeMap::new();
    for v in q.matrix.free_vars().into_iter().chain(q.exists.iter().cloned()) {
        if v.sort.is_memory() && !universal.contains(&v) {
            ground.entry(v.sort.clone()).or_default().insert(v);
        }
    }
    for v in &q.forall {
        let set = ground.entry(v.sort.clone()).or_default();
        let fresh = Var { name: ident(&format!("fr!{}", v.sort.name)), sort: v.sort.clone() };
        set.insert(fresh);
    }
    let mut conjuncts = Vec::new();
    flatten_and(&q.matrix, &mut conjuncts);
    let mut total = 0usize;
    let mut parts = Vec::new();
    for c in conjuncts {
        let fv = c.free_vars();
        let vars: Vec<&Var> = q.forall.iter().filter(|v| fv.contains(v)).collect();
        let choices: Vec<Vec<Term>> =
            vars.iter().map(|v| ground[&v.sort].iter().map(|g| Term::Var(g.clone())).collect()).collect();
        let n = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
        total = match n.and_then(|n| total.checked_add(n)) {
            Some(t) if t <= MAX_INSTANCES => t,
            _ => return Err(SmtError::Fragment("too many instances of the universal prefix".into())),
        };
        let mut idx = vec![0usize; choices.len()];
        'inst: loop {
            let s: Subst = vars.iter().enumerate().map(|(k, v)| ((*v).clone(), choices[k][idx[k]].clone())).collect();
            parts.push(substitute_unchecked(c, &s));
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break 'inst;
                }
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    Ok(Formula::and(parts))
}

fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(v) => v.iter().for_each(|g| flatten_and(g, out)),
        other => out.push(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::SortKind;

    #[test]
    fn existential_under_universal_is_rejected() {
        let e = Sort::new("E", SortKind::Memory);
        let k = Var::new("k", e.clone());
        let j = Var::new("j", e);
        let f = Formula::forall(vec![k.clone()], Formula::exists(vec![j.clone()], Formula::eq(Term::var(&k), Term::var(&j))));
        assert!(matches!(to_exists_forall(&f), Err(SmtError::Fragment(_))));
        // negated, it is fine
        assert!(to_exists_forall(&Formula::not(f)).is_ok());
    }

    #[test]
    fn instances_cover_ground_terms_and_one_fresh_index() {
        let e = Sort::new("E", SortKind::Memory);
        let d = Sort::new("D", SortKind::Value);
        let k = Var::new("k", e.clone());
        let x = Var::new("x", e.clone());
        let body = Formula::eq(Term::select("a", Term::var(&k), &d), Term::select("a", Term::var(&x), &d));
        let q = ExistsForall { exists: vec![], forall: vec![k], matrix: body };
        let Formula::And(parts) = instantiate(&q).unwrap() else { panic!() };
        assert_eq!(parts.len(), 2);
    }
}
