//! Existentially quantified conjunctions of literals.

use std::collections::{BTreeMap, BTreeSet};

use super::{canonical_atom, ident, rename_vars, substitute, Formula, Ident, Subst, Term, Var};

/// `∃ index_vars, data_vars. ⋀ literals`.
///
/// Frontier cubes have no data variables; those are only present between
/// pre-image computation and cover elimination.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub index_vars: Vec<Var>,
    pub data_vars: Vec<Var>,
    pub literals: Vec<Formula>,
}

impl Cube {
    pub fn new(index_vars: Vec<Var>, literals: Vec<Formula>) -> Cube {
        Cube { index_vars, data_vars: Vec::new(), literals }
    }

    pub fn body(&self) -> Formula {
        Formula::and(self.literals.clone())
    }

    pub fn to_formula(&self) -> Formula {
        let mut vars = self.index_vars.clone();
        vars.extend(self.data_vars.iter().cloned());
        Formula::exists(vars, self.body())
    }

    pub fn all_vars(&self) -> BTreeSet<Var> {
        self.index_vars.iter().chain(self.data_vars.iter()).cloned().collect()
    }

    /// Put the cube in canonical form. Returns `None` when the cube is
    /// trivially unsatisfiable.
    ///
    /// Index-variable equalities are substituted away, ground and
    /// syntactically decided literals are folded (constants of a sort are
    /// pairwise distinct and distinct from `undef`), unused variables are
    /// dropped, and index variables are renamed to `i!1, i!2, ...` in order
    /// of first occurrence.
    pub fn normalize(&self) -> Option<Cube> {
        let mut index_vars = self.index_vars.clone();
        let mut lits: Vec<Formula> = self.literals.iter().map(simplify_literal).collect();
        loop {
            let merge = lits.iter().find_map(|l| match l {
                Formula::Eq(Term::Var(a), Term::Var(b))
                    if a != b && index_vars.contains(a) && index_vars.contains(b) =>
                {
                    Some((a.clone(), b.clone()))
                }
                _ => None,
            });
            let Some((keep, gone)) = merge else { break };
            let mut s = Subst::new();
            s.insert(gone.clone(), Term::Var(keep));
            index_vars.retain(|v| *v != gone);
            lits = lits
                .iter()
                .map(|l| simplify_literal(&substitute(l, &s).expect("index vars share a sort")))
                .collect();
        }
        let mut set = BTreeSet::new();
        for l in lits {
            match l {
                Formula::True => {}
                Formula::False => return None,
                l => {
                    if set.contains(&Formula::not(l.clone())) {
                        return None;
                    }
                    set.insert(l);
                }
            }
        }
        let lits: Vec<Formula> = set.into_iter().collect();
        let used: BTreeSet<Var> = lits.iter().flat_map(|l| l.free_vars()).collect();
        index_vars.retain(|v| used.contains(v));
        let mut data_vars = self.data_vars.clone();
        data_vars.retain(|v| used.contains(v));
        Some(canonical_names(Cube { index_vars, data_vars, literals: lits }))
    }
}

/// Fold syntactically decided literals and `f(undef) = undef`.
pub fn simplify_literal(l: &Formula) -> Formula {
    let l = l.rewrite_terms(&mut |t| simplify_term(t));
    match &l {
        Formula::Not(a) => Formula::not(simplify_atom(a)),
        a => simplify_atom(a),
    }
}

fn simplify_term(t: &Term) -> Option<Term> {
    match t {
        Term::App { fun, arg, sort } => {
            let a = arg.rewrite(&mut |u| simplify_term(u));
            if a.is_undef() && sort.has_undef() {
                Some(Term::undef(sort))
            } else {
                Some(Term::App { fun: fun.clone(), arg: Box::new(a), sort: sort.clone() })
            }
        }
        _ => None,
    }
}

fn simplify_atom(a: &Formula) -> Formula {
    match a {
        Formula::Eq(x, y) if !x.sort().is_arith() => {
            if x == y {
                Formula::True
            } else if let (Term::Const(n, _), Term::Const(m, _)) = (x, y) {
                if n == m {
                    Formula::True
                } else {
                    Formula::False
                }
            } else if y < x {
                Formula::Eq(y.clone(), x.clone())
            } else {
                a.clone()
            }
        }
        Formula::Eq(..) | Formula::Lt(..) | Formula::Le(..) | Formula::Divides(..) => canonical_atom(a),
        _ => a.clone(),
    }
}

fn var_shape(t: &Term, map: &BTreeMap<Var, usize>) -> Term {
    t.rewrite(&mut |u| match u {
        Term::Var(v) => Some(Term::Var(Var {
            name: ident(&map.get(v).map(|n| format!("#{n}")).unwrap_or_else(|| "#".into())),
            sort: v.sort.clone(),
        })),
        _ => None,
    })
}

fn canonical_names(c: Cube) -> Cube {
    let empty = BTreeMap::new();
    let mut keyed: Vec<(Formula, Formula)> = c
        .literals
        .iter()
        .map(|l| (l.rewrite_terms(&mut |t| Some(var_shape(t, &empty))), l.clone()))
        .collect();
    keyed.sort();
    let mut order: Vec<Var> = Vec::new();
    for (_, l) in &keyed {
        let mut seen = Vec::new();
        collect_vars_in_order(l, &mut seen);
        for v in seen {
            if (c.index_vars.contains(&v) || c.data_vars.contains(&v)) && !order.contains(&v) {
                order.push(v);
            }
        }
    }
    let mut map = BTreeMap::new();
    let mut index_vars = Vec::new();
    let mut data_vars = Vec::new();
    for v in &order {
        if c.index_vars.contains(v) {
            let nv = Var { name: ident(&format!("i!{}", index_vars.len() + 1)), sort: v.sort.clone() };
            map.insert(v.clone(), nv.clone());
            index_vars.push(nv);
        } else {
            let nv = Var { name: ident(&format!("d!{}", data_vars.len() + 1)), sort: v.sort.clone() };
            map.insert(v.clone(), nv.clone());
            data_vars.push(nv);
        }
    }
    // Avoid capture when old names collide with new ones: go through
    // temporaries first.
    let tmp: BTreeMap<Var, Var> = map
        .iter()
        .map(|(k, v)| (k.clone(), Var { name: ident(&format!("{}#", v.name)), sort: v.sort.clone() }))
        .collect();
    let back: BTreeMap<Var, Var> = tmp.iter().map(|(k, v)| (v.clone(), map[k].clone())).collect();
    let mut literals: Vec<Formula> = c
        .literals
        .iter()
        .map(|l| rename_vars(&rename_vars(l, &tmp), &back))
        .map(|l| simplify_literal(&l))
        .collect();
    literals.sort();
    literals.dedup();
    Cube { index_vars, data_vars, literals }
}

fn collect_vars_in_order(f: &Formula, out: &mut Vec<Var>) {
    f.any_term(&mut |t| {
        if let Term::Var(v) = t {
            out.push(v.clone());
        }
        false
    });
}

/// Introduce fresh data variables for nested applications so that every
/// literal has application depth at most one.
pub fn flatten(c: &Cube) -> Cube {
    let mut used: BTreeSet<Ident> = c.all_vars().into_iter().map(|v| v.name).collect();
    for l in &c.literals {
        used.extend(l.free_vars().into_iter().map(|v| v.name));
    }
    let mut fl = Flattener { used, counter: 0, memo: BTreeMap::new(), extra: Vec::new(), vars: Vec::new() };
    let mut out = c.clone();
    out.literals = c.literals.iter().map(|l| l.rewrite_terms(&mut |t| Some(fl.term(t)))).collect();
    out.literals.extend(fl.extra);
    out.data_vars.extend(fl.vars);
    out
}

struct Flattener {
    used: BTreeSet<Ident>,
    counter: usize,
    memo: BTreeMap<Term, Var>,
    extra: Vec<Formula>,
    vars: Vec<Var>,
}

impl Flattener {
    fn name_for(&mut self, inner: Term) -> Term {
        if let Some(v) = self.memo.get(&inner) {
            return Term::Var(v.clone());
        }
        let name = loop {
            self.counter += 1;
            let n = format!("z!{}", self.counter);
            if !self.used.contains(n.as_str()) {
                break ident(&n);
            }
        };
        self.used.insert(name.clone());
        let v = Var { name, sort: inner.sort() };
        self.memo.insert(inner.clone(), v.clone());
        self.extra.push(Formula::eq(Term::Var(v.clone()), inner));
        self.vars.push(v.clone());
        Term::Var(v)
    }

    fn arg(&mut self, t: &Term) -> Term {
        let a = self.term(t);
        if a.app_depth() >= 1 {
            self.name_for(a)
        } else {
            a
        }
    }

    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::App { fun, arg, sort } => {
                Term::App { fun: fun.clone(), arg: Box::new(self.arg(arg)), sort: sort.clone() }
            }
            Term::Select { array, index, sort } => {
                Term::Select { array: array.clone(), index: Box::new(self.arg(index)), sort: sort.clone() }
            }
            Term::Lin(l) => super::LinExpr::build(
                l.sort.clone(),
                l.terms.iter().map(|(c, u)| (c.clone(), self.term(u))).collect(),
                l.constant.clone(),
            ),
            other => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Sort, SortKind};
    use super::*;

    #[test]
    fn flatten_nested_application() {
        // u = f(g(w))  ~>  ∃z (z = g(w) ∧ u = f(z))
        let d = Sort::new("D", SortKind::Id);
        let w = Var::new("w", d.clone());
        let u = Term::state("u", &d);
        let lit = Formula::eq(u.clone(), Term::app("f", Term::app("g", Term::var(&w), &d), &d));
        let c = Cube { index_vars: vec![], data_vars: vec![w.clone()], literals: vec![lit] };
        let out = flatten(&c);
        assert_eq!(out.data_vars.len(), 2);
        let z = out.data_vars[1].clone();
        assert!(out.literals.contains(&Formula::eq(Term::var(&z), Term::app("g", Term::var(&w), &d))));
        assert!(out.literals.contains(&Formula::eq(u, Term::app("f", Term::var(&z), &d))));
        assert!(out.literals.iter().all(|l| !l.any_term(&mut |t| t.app_depth() > 1)));
    }

    #[test]
    fn normalize_merges_index_equalities_and_renames() {
        let e = Sort::new("E", SortKind::Memory);
        let d = Sort::new("D", SortKind::Value);
        let a = Var::new("p", e.clone());
        let b = Var::new("q", e.clone());
        let c = Cube::new(
            vec![a.clone(), b.clone()],
            vec![
                Formula::eq(Term::var(&a), Term::var(&b)),
                Formula::neq(Term::select("arr", Term::var(&b), &d), Term::undef(&d)),
            ],
        );
        let n = c.normalize().unwrap();
        assert_eq!(n.index_vars.len(), 1);
        assert_eq!(&*n.index_vars[0].name, "i!1");
        assert_eq!(n.literals.len(), 1);
    }

    #[test]
    fn normalize_detects_distinct_constants() {
        let d = Sort::new("D", SortKind::Value);
        let c = Cube::new(vec![], vec![Formula::eq(Term::constant("p", &d), Term::constant("q", &d))]);
        assert!(c.normalize().is_none());
        let c = Cube::new(vec![], vec![Formula::eq(Term::undef(&d), Term::constant("q", &d))]);
        assert!(c.normalize().is_none());
    }

    #[test]
    fn normalize_is_idempotent_on_renamed_cubes() {
        let e = Sort::new("E", SortKind::Memory);
        let d = Sort::new("D", SortKind::Value);
        let mk = |n1: &str, n2: &str| {
            let a = Var::new(n1, e.clone());
            let b = Var::new(n2, e.clone());
            Cube::new(
                vec![a.clone(), b.clone()],
                vec![
                    Formula::neq(Term::var(&a), Term::var(&b)),
                    Formula::eq(Term::select("arr", Term::var(&a), &d), Term::undef(&d)),
                ],
            )
            .normalize()
            .unwrap()
        };
        let x = mk("s", "t");
        assert_eq!(x, mk("i!2", "i!1"));
        assert_eq!(x.normalize().unwrap(), x);
    }
}
