//! Finite carriers for each sort and small database instances over them.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::Rational64;
use num::{BigRational, ToPrimitive};

use super::{OracleError, Val};
use crate::formula::{Formula, Ident, Sort, SortKind, Term, UNDEF};
use crate::spec::{ElemConsts, RabSpec};

/// How arithmetic sorts are populated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArithDomain {
    /// Every integer in the range.
    Range(i64, i64),
    /// Numerals found in the input, their neighbours at distance one, zero
    /// and the two endpoints of the range.
    Sampled(i64, i64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Elements besides `undef` and the declared constants, per id sort.
    pub id_extra: usize,
    /// The same for value sorts.
    pub value_extra: usize,
    /// Size of every memory sort.
    pub index: usize,
    pub arith: ArithDomain,
    /// Cap on visited states per database instance.
    pub max_states: usize,
    /// Cap on enumerated database instances or models.
    pub max_structures: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds {
            id_extra: 2,
            value_extra: 1,
            index: 2,
            arith: ArithDomain::Sampled(-4, 4),
            max_states: 2_000_000,
            max_structures: 100_000,
        }
    }
}

pub(crate) fn rat(n: &BigRational) -> Result<Rational64, OracleError> {
    match (n.numer().to_i64(), n.denom().to_i64()) {
        (Some(a), Some(b)) => Ok(Rational64::new(a, b)),
        _ => Err(OracleError::Unsupported(format!("numeral {n} is too large"))),
    }
}

#[derive(Clone, Debug)]
pub struct Universe {
    pub bounds: Bounds,
    domains: BTreeMap<Sort, Vec<Val>>,
    consts: BTreeMap<(Ident, Sort), Val>,
    names: BTreeMap<(Sort, Val), String>,
    samples: Vec<Rational64>,
}

fn numerals(f: &Formula, out: &mut BTreeSet<Rational64>) {
    f.any_term(&mut |t| {
        if let Term::Num(n, _) = t {
            if let Ok(r) = rat(n) {
                out.insert(r);
            }
        }
        if let Term::Lin(l) = t {
            if let Ok(r) = rat(&l.constant) {
                out.insert(r);
            }
        }
        false
    });
}

impl Universe {
    /// Build carriers for `sorts`. `consts` lists the named constants of
    /// each id and value sort; `numerals` seeds arithmetic sampling.
    pub fn new(
        bounds: Bounds,
        sorts: &BTreeSet<Sort>,
        consts: &BTreeMap<Sort, Vec<Ident>>,
        elem: &BTreeMap<Ident, ElemConsts>,
        numerals: &BTreeSet<Rational64>,
    ) -> Universe {
        let samples: Vec<Rational64> = match bounds.arith {
            ArithDomain::Range(lo, hi) => (lo..=hi).map(Rational64::from_integer).collect(),
            ArithDomain::Sampled(lo, hi) => {
                let mut s: BTreeSet<Rational64> = BTreeSet::new();
                let one = Rational64::from_integer(1);
                for n in numerals {
                    s.insert(*n);
                    s.insert(n + one);
                    s.insert(n - one);
                }
                s.insert(Rational64::from_integer(0));
                s.insert(Rational64::from_integer(lo));
                s.insert(Rational64::from_integer(hi));
                s.into_iter().collect()
            }
        };
        let mut u = Universe {
            bounds: bounds.clone(),
            domains: BTreeMap::new(),
            consts: BTreeMap::new(),
            names: BTreeMap::new(),
            samples,
        };
        for s in sorts {
            let dom = match s.kind {
                SortKind::Id | SortKind::Value => {
                    let extra = if s.kind == SortKind::Id { bounds.id_extra } else { bounds.value_extra };
                    let cs = consts.get(s).cloned().unwrap_or_default();
                    let mut dom = vec![Val::Elem(0)];
                    u.names.insert((s.clone(), Val::Elem(0)), UNDEF.into());
                    for (i, c) in cs.iter().enumerate() {
                        let v = Val::Elem(i as u32 + 1);
                        u.consts.insert((c.clone(), s.clone()), v.clone());
                        u.names.insert((s.clone(), v.clone()), c.to_string());
                        dom.push(v);
                    }
                    for j in 0..extra {
                        let v = Val::Elem((cs.len() + j) as u32 + 1);
                        u.names.insert((s.clone(), v.clone()), format!("{}#{}", s.name, j + 1));
                        dom.push(v);
                    }
                    dom
                }
                SortKind::Memory => (0..bounds.index)
                    .map(|i| {
                        let v = Val::Elem(i as u32);
                        u.names.insert((s.clone(), v.clone()), format!("{}#{}", s.name, i + 1));
                        v
                    })
                    .collect(),
                SortKind::Elem => {
                    if let Some(e) = elem.get(&s.name) {
                        u.consts.insert((e.t.clone(), s.clone()), Val::Bool(true));
                        u.consts.insert((e.f.clone(), s.clone()), Val::Bool(false));
                        u.names.insert((s.clone(), Val::Bool(true)), e.t.to_string());
                        u.names.insert((s.clone(), Val::Bool(false)), e.f.to_string());
                    }
                    vec![Val::Bool(false), Val::Bool(true)]
                }
                SortKind::Arith(_) => u.samples.iter().map(|r| Val::Num(*r)).collect(),
            };
            u.domains.insert(s.clone(), dom);
        }
        u
    }

    pub fn for_spec(spec: &RabSpec, bounds: Bounds) -> Universe {
        let sig = &spec.signature;
        let mut sorts: BTreeSet<Sort> = sig.sorts.iter().chain(&spec.mem_sorts).cloned().collect();
        sorts.extend(sig.theory.arith_sort());
        let mut consts: BTreeMap<Sort, Vec<Ident>> = BTreeMap::new();
        for c in &sig.consts {
            consts.entry(c.sort.clone()).or_default().push(c.name.clone());
        }
        let mut nums = BTreeSet::new();
        for t in &spec.transitions {
            numerals(&t.guard, &mut nums);
            if let Some(u) = &t.universal {
                numerals(&u.guard, &mut nums);
            }
            for (_, f) in &t.var_updates {
                numerals(&Formula::eq(f.clone(), f.clone()), &mut nums);
            }
            for u in &t.array_updates {
                numerals(&Formula::eq(u.body.clone(), u.body.clone()), &mut nums);
            }
        }
        for u in &spec.unsafe_props {
            numerals(&u.formula, &mut nums);
        }
        numerals(&spec.init_formula(), &mut nums);
        Universe::new(bounds, &sorts, &consts, &sig.elem_consts, &nums)
    }

    /// Carriers for every sort and constant occurring in `fs`.
    pub fn for_formulas(fs: &[&Formula], bounds: Bounds, elem: &BTreeMap<Ident, ElemConsts>) -> Universe {
        let mut sorts = BTreeSet::new();
        let mut consts: BTreeMap<Sort, BTreeSet<Ident>> = BTreeMap::new();
        let mut nums = BTreeSet::new();
        for f in fs {
            numerals(f, &mut nums);
            for v in f.free_vars() {
                sorts.insert(v.sort.clone());
            }
            let mut note = |t: &Term| {
                sorts.insert(t.sort());
                match t {
                    Term::Const(n, s) if &**n != UNDEF && s.has_undef() => {
                        consts.entry(s.clone()).or_default().insert(n.clone());
                    }
                    Term::App { arg, .. } | Term::Select { index: arg, .. } => {
                        sorts.insert(arg.sort());
                    }
                    _ => {}
                }
                false
            };
            f.any_term(&mut note);
            collect_binder_sorts(f, &mut sorts);
        }
        let consts = consts.into_iter().map(|(s, v)| (s, v.into_iter().collect())).collect();
        Universe::new(bounds, &sorts, &consts, elem, &nums)
    }

    pub fn domain(&self, s: &Sort) -> Result<&[Val], OracleError> {
        self.domains
            .get(s)
            .map(Vec::as_slice)
            .ok_or_else(|| OracleError::Unsupported(format!("sort {s} has no carrier")))
    }

    pub fn constant(&self, name: &Ident, s: &Sort) -> Result<Val, OracleError> {
        if &**name == UNDEF {
            return Ok(Val::Elem(0));
        }
        self.consts
            .get(&(name.clone(), s.clone()))
            .cloned()
            .ok_or_else(|| OracleError::Unsupported(format!("constant `{name}` of sort {s} has no value")))
    }

    pub fn samples(&self) -> &[Rational64] {
        &self.samples
    }

    /// Human-readable name of a value.
    pub fn show(&self, s: &Sort, v: &Val) -> String {
        match v {
            Val::Num(r) => r.to_string(),
            _ => self.names.get(&(s.clone(), v.clone())).cloned().unwrap_or_else(|| format!("{v:?}")),
        }
    }

    pub fn sorts(&self) -> impl Iterator<Item = &Sort> {
        self.domains.keys()
    }
}

fn collect_binder_sorts(f: &Formula, out: &mut BTreeSet<Sort>) {
    match f {
        Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
            out.extend(vs.iter().map(|v| v.sort.clone()));
            collect_binder_sorts(b, out);
        }
        Formula::LambdaEq { index, .. } => {
            out.insert(index.clone());
        }
        Formula::Not(a) => collect_binder_sorts(a, out),
        Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| collect_binder_sorts(g, out)),
        Formula::Implies(a, b) => {
            collect_binder_sorts(a, out);
            collect_binder_sorts(b, out);
        }
        _ => {}
    }
}
