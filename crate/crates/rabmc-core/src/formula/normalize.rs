//! Negation normal form, case and lambda elimination, and bounded DNF.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{fresh_name, rename_vars, simplify_literal, Formula, Ident, Term, Var};

/// Maximum number of disjuncts `to_dnf` may produce.
pub const DNF_BUDGET: usize = 4096;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DnfError {
    #[error("DNF size budget of {limit} disjuncts exceeded")]
    SizeBudgetExceeded { limit: usize },
    #[error("universal quantifier below an existential prefix cannot be put in DNF")]
    Universal,
}

/// Existentially quantified disjunction of conjunctions of literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dnf {
    pub vars: Vec<Var>,
    pub disjuncts: Vec<Vec<Formula>>,
}

/// Push negations to atoms and expand implications.
/// Lambda equalities are left in place.
pub fn nnf(f: &Formula) -> Formula {
    nnf_pol(f, true)
}

fn nnf_pol(f: &Formula, pos: bool) -> Formula {
    match f {
        Formula::Not(a) => nnf_pol(a, !pos),
        Formula::And(v) => {
            let parts = v.iter().map(|g| nnf_pol(g, pos)).collect();
            if pos {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Formula::Or(v) => {
            let parts = v.iter().map(|g| nnf_pol(g, pos)).collect();
            if pos {
                Formula::or(parts)
            } else {
                Formula::and(parts)
            }
        }
        Formula::Implies(a, b) => {
            let parts = vec![nnf_pol(a, !pos), nnf_pol(b, pos)];
            if pos {
                Formula::or(parts)
            } else {
                Formula::and(parts)
            }
        }
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            let body = nnf_pol(b, pos);
            let is_exists = matches!(f, Formula::Exists(..)) == pos;
            if is_exists {
                Formula::exists(vs.clone(), body)
            } else {
                Formula::forall(vs.clone(), body)
            }
        }
        atom => {
            if pos {
                atom.clone()
            } else {
                Formula::not(atom.clone())
            }
        }
    }
}

fn first_case_in_atom(f: &Formula) -> Option<Term> {
    let mut found = None;
    f.any_term(&mut |u| {
        if matches!(u, Term::Case { .. }) {
            found = Some(u.clone());
            true
        } else {
            false
        }
    });
    found
}

/// Branch conditions of a case term under first-match semantics,
/// paired with the branch term; the default comes last.
pub(crate) fn case_arms(branches: &[(Formula, Term)], default: &Term) -> Vec<(Formula, Term)> {
    let mut out = Vec::with_capacity(branches.len() + 1);
    let mut earlier: Vec<Formula> = Vec::new();
    for (c, t) in branches {
        let mut cond: Vec<Formula> = earlier.iter().map(|e| Formula::not(e.clone())).collect();
        cond.push(c.clone());
        out.push((Formula::and(cond), t.clone()));
        earlier.push(c.clone());
    }
    let cond: Vec<Formula> = earlier.iter().map(|e| Formula::not(e.clone())).collect();
    out.push((Formula::and(cond), default.clone()));
    out
}

fn replace_in_literal(lit: &Formula, target: &Term, with: &Term) -> Formula {
    lit.rewrite_terms(&mut |u| if u == target { Some(with.clone()) } else { None })
}

/// Expand a literal whose terms contain case expressions into
/// `⋁ᵢ (κᵢ ∧ L(tᵢ))`. Conditions are expanded recursively.
fn expand_literal(lit: &Formula) -> Formula {
    let Some(case) = first_case_in_atom(lit) else {
        return lit.clone();
    };
    let Term::Case { branches, default } = &case else { unreachable!() };
    let mut disj = Vec::new();
    for (cond, t) in case_arms(branches, default) {
        let cond = eliminate_cases(&cond);
        let body = expand_literal(&replace_in_literal(lit, &case, &t));
        disj.push(Formula::and(vec![cond, body]));
    }
    Formula::or(disj)
}

/// Remove case terms from every literal, without changing the
/// propositional structure above literals.
pub fn eliminate_cases(f: &Formula) -> Formula {
    match f {
        Formula::Not(a) if a.is_atom() => expand_literal(f),
        Formula::Not(a) => Formula::Not(Box::new(eliminate_cases(a))),
        Formula::And(v) => Formula::And(v.iter().map(eliminate_cases).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(eliminate_cases).collect()),
        Formula::Implies(a, b) => {
            Formula::Implies(Box::new(eliminate_cases(a)), Box::new(eliminate_cases(b)))
        }
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(eliminate_cases(b))),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(eliminate_cases(b))),
        Formula::LambdaEq { .. } => f.clone(),
        atom => expand_literal(atom),
    }
}

/// Rewrite `a = λy. F` into `∀y` of guarded equalities (one implication
/// per case arm) and eliminate every other case term. The result is
/// first-order and case-free.
pub fn normalize_case_lambda(f: &Formula) -> Formula {
    match f {
        Formula::LambdaEq { array, index: _, param, body } => {
            let cell = Term::Select {
                array: array.clone(),
                index: Box::new(Term::Var(param.clone())),
                sort: body.sort(),
            };
            let inner = match body {
                Term::Case { branches, default } => Formula::and(
                    case_arms(branches, default)
                        .into_iter()
                        .map(|(cond, t)| {
                            let eq = Formula::eq(cell.clone(), t);
                            if cond == Formula::True {
                                eq
                            } else {
                                Formula::implies(cond, eq)
                            }
                        })
                        .collect(),
                ),
                t => Formula::eq(cell, t.clone()),
            };
            Formula::forall(vec![param.clone()], eliminate_cases(&inner))
        }
        Formula::Not(a) if a.is_atom() => expand_literal(f),
        Formula::Not(a) => Formula::Not(Box::new(normalize_case_lambda(a))),
        Formula::And(v) => Formula::And(v.iter().map(normalize_case_lambda).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(normalize_case_lambda).collect()),
        Formula::Implies(a, b) => Formula::Implies(
            Box::new(normalize_case_lambda(a)),
            Box::new(normalize_case_lambda(b)),
        ),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(normalize_case_lambda(b))),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(normalize_case_lambda(b))),
        atom => expand_literal(atom),
    }
}

/// Rewrite lambda equalities only; case terms elsewhere are kept.
fn normalize_case_lambda_only(f: &Formula) -> Formula {
    match f {
        Formula::LambdaEq { .. } => normalize_case_lambda(f),
        Formula::Not(a) => Formula::Not(Box::new(normalize_case_lambda_only(a))),
        Formula::And(v) => Formula::And(v.iter().map(normalize_case_lambda_only).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(normalize_case_lambda_only).collect()),
        Formula::Implies(a, b) => Formula::Implies(
            Box::new(normalize_case_lambda_only(a)),
            Box::new(normalize_case_lambda_only(b)),
        ),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(normalize_case_lambda_only(b))),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(normalize_case_lambda_only(b))),
        atom => atom.clone(),
    }
}

/// A case term with no case term below it.
fn innermost_case(f: &Formula) -> Option<Term> {
    let mut found = None;
    f.any_term(&mut |t| {
        if let Term::Case { .. } = t {
            let nested = match t {
                Term::Case { branches, default } => {
                    branches.iter().any(|(c, u)| c.any_term(&mut |x| matches!(x, Term::Case { .. })) || u.contains_case())
                        || default.contains_case()
                }
                _ => false,
            };
            if !nested {
                found = Some(t.clone());
                return true;
            }
        }
        false
    });
    found
}

/// Split a quantifier-free formula on each distinct case term once:
/// `φ(T)` becomes `⋁ᵢ (κᵢ ∧ φ(tᵢ))`. Repeated occurrences of the same
/// case term share one split.
fn lift_cases(f: &Formula) -> Formula {
    let Some(case) = innermost_case(f) else {
        return f.clone();
    };
    let Term::Case { branches, default } = &case else { unreachable!() };
    let arms = case_arms(branches, default)
        .into_iter()
        .map(|(cond, t)| {
            let body = f.rewrite_terms(&mut |u| if *u == case { Some(t.clone()) } else { None });
            lift_cases(&Formula::and(vec![cond, body]))
        })
        .collect();
    Formula::or(arms)
}

/// Lift existential quantifiers out of an NNF formula, renaming apart.
fn pull_exists(f: &Formula, used: &mut BTreeSet<Ident>, prefix: &mut Vec<Var>) -> Result<Formula, DnfError> {
    match f {
        Formula::Exists(vs, b) => {
            let mut map = BTreeMap::new();
            for v in vs {
                if used.contains(&v.name) {
                    let n = fresh_name(&v.name, used);
                    used.insert(n.clone());
                    let nv = Var { name: n, sort: v.sort.clone() };
                    map.insert(v.clone(), nv.clone());
                    prefix.push(nv);
                } else {
                    used.insert(v.name.clone());
                    prefix.push(v.clone());
                }
            }
            let body = if map.is_empty() { (**b).clone() } else { rename_vars(b, &map) };
            pull_exists(&body, used, prefix)
        }
        Formula::Forall(..) | Formula::LambdaEq { .. } => Err(DnfError::Universal),
        Formula::And(v) => Ok(Formula::and(
            v.iter().map(|g| pull_exists(g, used, prefix)).collect::<Result<_, _>>()?,
        )),
        Formula::Or(v) => Ok(Formula::or(
            v.iter().map(|g| pull_exists(g, used, prefix)).collect::<Result<_, _>>()?,
        )),
        Formula::Not(a) if matches!(**a, Formula::LambdaEq { .. }) => Err(DnfError::Universal),
        lit => Ok(lit.clone()),
    }
}

fn negation_of(l: &Formula) -> Formula {
    Formula::not(l.clone())
}

/// Drop `true`, detect `false` and complementary pairs, dedupe.
fn simplify_conj(lits: Vec<Formula>) -> Option<Vec<Formula>> {
    let mut set: BTreeSet<Formula> = BTreeSet::new();
    for l in lits {
        match l {
            Formula::True => {}
            Formula::False => return None,
            Formula::Not(ref a) if **a == Formula::False => {}
            Formula::Not(ref a) if **a == Formula::True => return None,
            l => {
                if set.contains(&negation_of(&l)) {
                    return None;
                }
                set.insert(l);
            }
        }
    }
    Some(set.into_iter().collect())
}

fn dnf_rec(f: &Formula) -> Result<Vec<Vec<Formula>>, DnfError> {
    match f {
        Formula::True => Ok(vec![vec![]]),
        Formula::False => Ok(vec![]),
        Formula::Or(v) => {
            let mut out = Vec::new();
            for g in v {
                out.extend(dnf_rec(g)?);
                if out.len() > DNF_BUDGET {
                    return Err(DnfError::SizeBudgetExceeded { limit: DNF_BUDGET });
                }
            }
            Ok(out)
        }
        Formula::And(v) => {
            let mut acc: Vec<Vec<Formula>> = vec![vec![]];
            for g in v {
                let d = dnf_rec(g)?;
                if acc.len().saturating_mul(d.len()) > DNF_BUDGET * 4 {
                    return Err(DnfError::SizeBudgetExceeded { limit: DNF_BUDGET });
                }
                let mut next = Vec::with_capacity(acc.len() * d.len());
                for a in &acc {
                    for b in &d {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        if let Some(c) = simplify_conj(c) {
                            next.push(c);
                        }
                    }
                }
                if next.len() > DNF_BUDGET {
                    return Err(DnfError::SizeBudgetExceeded { limit: DNF_BUDGET });
                }
                acc = next;
            }
            Ok(acc)
        }
        lit => Ok(simplify_conj(vec![simplify_literal(lit)]).into_iter().collect()),
    }
}

/// Disjunctive normal form of a quantifier-free or existentially
/// quantified formula. Case terms and lambda updates are eliminated
/// first; universal quantifiers are rejected.
pub fn to_dnf(f: &Formula) -> Result<Dnf, DnfError> {
    let g = nnf(&normalize_case_lambda_only(f));
    let mut used: BTreeSet<Ident> = g.free_vars().into_iter().map(|v| v.name).collect();
    let mut vars = Vec::new();
    let matrix = pull_exists(&g, &mut used, &mut vars)?;
    let matrix = nnf(&lift_cases(&matrix));
    let mut disjuncts = dnf_rec(&matrix)?;
    disjuncts.sort();
    disjuncts.dedup();
    Ok(Dnf { vars, disjuncts })
}

#[cfg(test)]
mod tests {
    use super::super::{Sort, SortKind};
    use super::*;

    fn sorts() -> (Sort, Sort) {
        (Sort::new("E", SortKind::Memory), Sort::new("D", SortKind::Value))
    }

    #[test]
    fn lambda_update_becomes_guarded_universal() {
        // a' = λy.(case (y=i : v) (else : a[y]))
        let (e, d) = sorts();
        let y = Var::new("y", e.clone());
        let i = Var::new("i", e.clone());
        let v = Var::new("v", d.clone());
        let cond = Formula::eq(Term::var(&y), Term::var(&i));
        let body = Term::Case {
            branches: vec![(cond.clone(), Term::var(&v))],
            default: Box::new(Term::select("a", Term::var(&y), &d)),
        };
        let f = Formula::LambdaEq { array: "a'".into(), index: e.clone(), param: y.clone(), body };
        let cell = Term::select("a'", Term::var(&y), &d);
        let expect = Formula::forall(
            vec![y.clone()],
            Formula::and(vec![
                Formula::implies(cond.clone(), Formula::eq(cell.clone(), Term::var(&v))),
                Formula::implies(
                    Formula::not(cond),
                    Formula::eq(cell, Term::select("a", Term::var(&y), &d)),
                ),
            ]),
        );
        assert_eq!(normalize_case_lambda(&f), expect);
    }

    #[test]
    fn case_in_literal_expands_disjunctively() {
        let (_, d) = sorts();
        let x = Term::state("x", &d);
        let k = Formula::eq(x.clone(), Term::undef(&d));
        let c = Term::Case {
            branches: vec![(k.clone(), Term::constant("p", &d))],
            default: Box::new(Term::constant("q", &d)),
        };
        let lit = Formula::neq(Term::state("z", &d), c);
        let dnf = to_dnf(&lit).unwrap();
        assert_eq!(dnf.disjuncts.len(), 2);
        assert!(dnf.disjuncts.iter().all(|c| c.len() == 2));
    }

    #[test]
    fn budget_is_enforced() {
        let (_, d) = sorts();
        let mut conj = Vec::new();
        for i in 0..13 {
            let a = Formula::eq(Term::state(&format!("x{i}"), &d), Term::undef(&d));
            let b = Formula::eq(Term::state(&format!("y{i}"), &d), Term::undef(&d));
            conj.push(Formula::or(vec![a, b]));
        }
        assert_eq!(
            to_dnf(&Formula::and(conj)).unwrap_err(),
            DnfError::SizeBudgetExceeded { limit: DNF_BUDGET }
        );
    }

    #[test]
    fn nested_existentials_are_renamed_apart() {
        let (e, d) = sorts();
        let i = Var::new("i", e.clone());
        let lit = |v: &Var| Formula::eq(Term::select("a", Term::var(v), &d), Term::undef(&d));
        let f = Formula::and(vec![
            Formula::exists(vec![i.clone()], lit(&i)),
            Formula::exists(vec![i.clone()], Formula::not(lit(&i))),
        ]);
        let dnf = to_dnf(&f).unwrap();
        assert_eq!(dnf.vars.len(), 2);
        assert_ne!(dnf.vars[0].name, dnf.vars[1].name);
        assert_eq!(dnf.disjuncts.len(), 1);
    }

    #[test]
    fn universal_rejected() {
        let (e, d) = sorts();
        let i = Var::new("i", e);
        let f = Formula::forall(vec![i.clone()], Formula::eq(Term::select("a", Term::var(&i), &d), Term::undef(&d)));
        assert_eq!(to_dnf(&f).unwrap_err(), DnfError::Universal);
    }
}
