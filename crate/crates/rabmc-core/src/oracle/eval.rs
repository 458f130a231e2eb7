//! Formulas compiled against a symbol table, evaluated on concrete states.

use std::collections::BTreeSet;

use num::rational::Rational64;
use num::ToPrimitive;

use super::universe::{rat, Universe};
use super::{OracleError, Val};
use crate::formula::{Formula, Ident, Sort, Term, Var};
use crate::spec::RabSpec;

/// Interpreted symbols, each with a fixed slot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub states: Vec<(Ident, Sort)>,
    pub arrays: Vec<(Ident, Sort, Sort)>,
    pub funs: Vec<(Ident, Sort, Sort)>,
    pub rels: Vec<(Ident, Vec<Sort>)>,
}

impl Symbols {
    pub fn of_spec(spec: &RabSpec) -> Symbols {
        Symbols {
            states: spec.vars.iter().map(|v| (v.name.clone(), v.sort.clone())).collect(),
            arrays: spec.arrays.iter().map(|a| (a.name.clone(), a.index.clone(), a.elem.clone())).collect(),
            funs: spec.signature.funs.iter().map(|f| (f.name.clone(), f.domain.clone(), f.codomain.clone())).collect(),
            rels: spec.signature.rels.iter().map(|r| (r.name.clone(), r.args.clone())).collect(),
        }
    }

    /// Symbols occurring in `fs`, in order of first occurrence.
    pub fn of_formulas(fs: &[&Formula]) -> Symbols {
        let mut s = Symbols::default();
        for f in fs {
            s.add_formula(f);
        }
        s
    }

    fn add_formula(&mut self, f: &Formula) {
        let mut rels = Vec::new();
        collect_rels(f, &mut rels);
        for (r, args) in rels {
            if !self.rels.iter().any(|(n, _)| *n == r) {
                self.rels.push((r, args));
            }
        }
        f.any_term(&mut |t| {
            match t {
                Term::State(n, s) if !self.states.iter().any(|(m, _)| m == n) => {
                    self.states.push((n.clone(), s.clone()));
                }
                Term::Select { array, index, sort } if !self.arrays.iter().any(|(m, ..)| m == array) => {
                    self.arrays.push((array.clone(), index.sort(), sort.clone()));
                }
                Term::App { fun, arg, sort } if !self.funs.iter().any(|(m, ..)| m == fun) => {
                    self.funs.push((fun.clone(), arg.sort(), sort.clone()));
                }
                _ => {}
            }
            false
        });
        if let Formula::LambdaEq { array, index, body, .. } = f {
            if !self.arrays.iter().any(|(m, ..)| m == array) {
                self.arrays.push((array.clone(), index.clone(), body.sort()));
            }
        }
        match f {
            Formula::Not(a) => self.add_formula(a),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| self.add_formula(g)),
            Formula::Implies(a, b) => {
                self.add_formula(a);
                self.add_formula(b);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => self.add_formula(b),
            _ => {}
        }
    }

    pub fn state(&self, n: &str) -> Option<usize> {
        self.states.iter().position(|(m, _)| &**m == n)
    }

    pub fn array(&self, n: &str) -> Option<usize> {
        self.arrays.iter().position(|(m, ..)| &**m == n)
    }

    pub fn fun(&self, n: &str) -> Option<usize> {
        self.funs.iter().position(|(m, ..)| &**m == n)
    }

    pub fn rel(&self, n: &str) -> Option<usize> {
        self.rels.iter().position(|(m, _)| &**m == n)
    }
}

fn collect_rels(f: &Formula, out: &mut Vec<(Ident, Vec<Sort>)>) {
    let mut atoms = Vec::new();
    f.atoms_into(&mut atoms);
    for a in atoms {
        if let Formula::Rel(r, args) = a {
            out.push((r.clone(), args.iter().map(Term::sort).collect()));
        }
    }
    f.any_term(&mut |t| {
        if let Term::Case { branches, .. } = t {
            for (c, _) in branches {
                collect_rels(c, out);
            }
        }
        false
    });
}

/// A database instance: function tables indexed by argument, and relation
/// extensions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Db {
    pub funs: Vec<Vec<Val>>,
    pub rels: Vec<BTreeSet<Vec<Val>>>,
}

/// Memory variables and array contents, ordered as in the symbol table.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub vars: Vec<Val>,
    pub arrays: Vec<Vec<Val>>,
}

#[derive(Clone, Debug)]
pub(crate) enum CTerm {
    Local(usize),
    State(usize),
    Const(Val),
    App(usize, Box<CTerm>),
    Select(usize, Box<CTerm>),
    Lin(Vec<(Rational64, CTerm)>, Rational64),
    Case(Vec<(CFormula, CTerm)>, Box<CTerm>),
}

#[derive(Clone, Debug)]
pub(crate) enum CFormula {
    Const(bool),
    Eq(CTerm, CTerm),
    Lt(CTerm, CTerm),
    Le(CTerm, CTerm),
    Divides(i64, CTerm),
    Rel(usize, Vec<CTerm>),
    Not(Box<CFormula>),
    And(Vec<CFormula>),
    Or(Vec<CFormula>),
    Implies(Box<CFormula>, Box<CFormula>),
    Exists(Vec<(usize, Vec<Val>)>, Box<CFormula>),
    Forall(Vec<(usize, Vec<Val>)>, Box<CFormula>),
    /// `array = λ slot. body` over the given index carrier.
    Lambda(usize, usize, Vec<Val>, CTerm),
}

pub(crate) struct Compiler<'a> {
    syms: &'a Symbols,
    uni: &'a Universe,
    scope: Vec<(Var, usize)>,
    pub slots: usize,
}

fn unsupported(msg: String) -> OracleError {
    OracleError::Unsupported(msg)
}

impl<'a> Compiler<'a> {
    pub(crate) fn new(syms: &'a Symbols, uni: &'a Universe) -> Compiler<'a> {
        Compiler { syms, uni, scope: Vec::new(), slots: 0 }
    }

    /// Allocate a fresh slot for `v`, shadowing earlier bindings.
    pub(crate) fn bind(&mut self, v: &Var) -> usize {
        let s = self.slots;
        self.slots += 1;
        self.scope.push((v.clone(), s));
        s
    }

    fn unbind(&mut self, n: usize) {
        self.scope.truncate(self.scope.len() - n);
    }

    pub(crate) fn term(&mut self, t: &Term) -> Result<CTerm, OracleError> {
        Ok(match t {
            Term::Var(v) => {
                let s = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(w, _)| w == v)
                    .map(|(_, s)| *s)
                    .ok_or_else(|| unsupported(format!("unbound variable `{}`", v.name)))?;
                CTerm::Local(s)
            }
            Term::State(n, _) => {
                CTerm::State(self.syms.state(n).ok_or_else(|| unsupported(format!("unknown variable `{n}`")))?)
            }
            Term::Const(n, s) => CTerm::Const(self.uni.constant(n, s)?),
            Term::Num(n, _) => CTerm::Const(Val::Num(rat(n)?)),
            Term::App { fun, arg, .. } => CTerm::App(
                self.syms.fun(fun).ok_or_else(|| unsupported(format!("unknown function `{fun}`")))?,
                Box::new(self.term(arg)?),
            ),
            Term::Select { array, index, .. } => CTerm::Select(
                self.syms.array(array).ok_or_else(|| unsupported(format!("unknown array `{array}`")))?,
                Box::new(self.term(index)?),
            ),
            Term::Lin(l) => {
                let mut parts = Vec::new();
                for (c, u) in &l.terms {
                    parts.push((rat(c)?, self.term(u)?));
                }
                CTerm::Lin(parts, rat(&l.constant)?)
            }
            Term::Case { branches, default } => {
                let mut bs = Vec::new();
                for (c, u) in branches {
                    bs.push((self.formula(c)?, self.term(u)?));
                }
                CTerm::Case(bs, Box::new(self.term(default)?))
            }
        })
    }

    fn binders(&mut self, vs: &[Var]) -> Result<Vec<(usize, Vec<Val>)>, OracleError> {
        let mut out = Vec::new();
        for v in vs {
            let dom = self.uni.domain(&v.sort)?.to_vec();
            out.push((self.bind(v), dom));
        }
        Ok(out)
    }

    pub(crate) fn formula(&mut self, f: &Formula) -> Result<CFormula, OracleError> {
        Ok(match f {
            Formula::True => CFormula::Const(true),
            Formula::False => CFormula::Const(false),
            Formula::Eq(a, b) => CFormula::Eq(self.term(a)?, self.term(b)?),
            Formula::Lt(a, b) => CFormula::Lt(self.term(a)?, self.term(b)?),
            Formula::Le(a, b) => CFormula::Le(self.term(a)?, self.term(b)?),
            Formula::Divides(m, t) => CFormula::Divides(
                m.to_i64().ok_or_else(|| unsupported(format!("modulus {m} is too large")))?,
                self.term(t)?,
            ),
            Formula::Rel(r, args) => {
                let i = self.syms.rel(r).ok_or_else(|| unsupported(format!("unknown relation `{r}`")))?;
                CFormula::Rel(i, args.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?)
            }
            Formula::Not(a) => CFormula::Not(Box::new(self.formula(a)?)),
            Formula::And(v) => CFormula::And(v.iter().map(|g| self.formula(g)).collect::<Result<_, _>>()?),
            Formula::Or(v) => CFormula::Or(v.iter().map(|g| self.formula(g)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => CFormula::Implies(Box::new(self.formula(a)?), Box::new(self.formula(b)?)),
            Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
                let bs = self.binders(vs)?;
                let body = Box::new(self.formula(b)?);
                self.unbind(vs.len());
                if matches!(f, Formula::Exists(..)) {
                    CFormula::Exists(bs, body)
                } else {
                    CFormula::Forall(bs, body)
                }
            }
            Formula::LambdaEq { array, index, param, body } => {
                let a = self.syms.array(array).ok_or_else(|| unsupported(format!("unknown array `{array}`")))?;
                let dom = self.uni.domain(index)?.to_vec();
                let slot = self.bind(param);
                let b = self.term(body)?;
                self.unbind(1);
                CFormula::Lambda(a, slot, dom, b)
            }
        })
    }
}

pub(crate) struct Ctx<'a> {
    pub db: &'a Db,
    pub state: &'a State,
    pub locals: Vec<Val>,
    /// Function cells not yet chosen; the first one read is recorded in
    /// `missing` and the result of the evaluation is then meaningless.
    pub pending: Option<&'a [Vec<bool>]>,
    pub missing: Option<(usize, usize)>,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(db: &'a Db, state: &'a State, slots: usize) -> Ctx<'a> {
        Ctx { db, state, locals: vec![Val::Elem(0); slots], pending: None, missing: None }
    }
}

fn num(v: &Val) -> Rational64 {
    match v {
        Val::Num(r) => *r,
        other => panic!("expected a number, found {other:?}"),
    }
}

fn index(v: &Val) -> usize {
    match v {
        Val::Elem(i) => *i as usize,
        other => panic!("expected an element, found {other:?}"),
    }
}

impl CTerm {
    pub(crate) fn eval(&self, cx: &mut Ctx<'_>) -> Val {
        match self {
            CTerm::Local(s) => cx.locals[*s].clone(),
            CTerm::State(i) => cx.state.vars[*i].clone(),
            CTerm::Const(v) => v.clone(),
            CTerm::App(f, a) => {
                let i = index(&a.eval(cx));
                if cx.missing.is_none() && cx.pending.is_some_and(|p| p[*f][i]) {
                    cx.missing = Some((*f, i));
                }
                cx.db.funs[*f][i].clone()
            }
            CTerm::Select(a, t) => {
                let i = index(&t.eval(cx));
                cx.state.arrays[*a][i].clone()
            }
            CTerm::Lin(parts, k) => {
                let mut acc = *k;
                for (c, t) in parts {
                    acc += c * num(&t.eval(cx));
                }
                Val::Num(acc)
            }
            CTerm::Case(bs, d) => {
                for (c, t) in bs {
                    if c.eval(cx) {
                        return t.eval(cx);
                    }
                }
                d.eval(cx)
            }
        }
    }
}

impl CFormula {
    pub(crate) fn eval(&self, cx: &mut Ctx<'_>) -> bool {
        match self {
            CFormula::Const(b) => *b,
            CFormula::Eq(a, b) => a.eval(cx) == b.eval(cx),
            CFormula::Lt(a, b) => num(&a.eval(cx)) < num(&b.eval(cx)),
            CFormula::Le(a, b) => num(&a.eval(cx)) <= num(&b.eval(cx)),
            CFormula::Divides(m, t) => {
                let v = num(&t.eval(cx));
                v.is_integer() && v.to_integer() % m == 0
            }
            CFormula::Rel(r, args) => {
                let vals: Vec<Val> = args.iter().map(|t| t.eval(cx)).collect();
                cx.db.rels[*r].contains(&vals)
            }
            CFormula::Not(a) => !a.eval(cx),
            CFormula::And(v) => v.iter().all(|g| g.eval(cx)),
            CFormula::Or(v) => v.iter().any(|g| g.eval(cx)),
            CFormula::Implies(a, b) => !a.eval(cx) || b.eval(cx),
            CFormula::Exists(bs, body) => quantify(bs, 0, body, cx, true),
            CFormula::Forall(bs, body) => !quantify(bs, 0, body, cx, false),
            CFormula::Lambda(a, slot, dom, body) => dom.iter().all(|y| {
                cx.locals[*slot] = y.clone();
                body.eval(cx) == cx.state.arrays[*a][index(y)]
            }),
        }
    }
}

/// Whether some assignment makes `body` evaluate to `want`.
fn quantify(bs: &[(usize, Vec<Val>)], k: usize, body: &CFormula, cx: &mut Ctx<'_>, want: bool) -> bool {
    if k == bs.len() {
        return body.eval(cx) == want;
    }
    let (slot, dom) = &bs[k];
    for v in dom {
        cx.locals[*slot] = v.clone();
        if quantify(bs, k + 1, body, cx, want) {
            return true;
        }
    }
    false
}
