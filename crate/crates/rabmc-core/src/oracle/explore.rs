//! Breadth-first forward exploration of a bounded instance.
//!
//! Every database instance within the bounds is explored on its own. Data
//! parameters of transitions range over the same finite carriers, so the
//! search is an under-approximation: a trace it finds is real, while the
//! absence of a trace proves nothing beyond the bounds.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use super::eval::{CFormula, CTerm, Compiler, Ctx, Db, State, Symbols};
use super::models::{enumerate_dbs, for_each_choice, total};
use super::universe::{Bounds, Universe};
use super::{OracleError, Val};
use crate::formula::{Ident, Sort, Term};
use crate::spec::RabSpec;

/// Property a trace violates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    /// Reaches a state satisfying the unsafe formula.
    Unsafe(Ident),
    /// Reaches a state falsifying the invariant.
    Invariant(Ident),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Unsafe(n) => write!(f, "unsafe {n}"),
            Target::Invariant(n) => write!(f, "invariant {n}"),
        }
    }
}

/// One transition firing, with the values chosen for its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub transition: Ident,
    pub bindings: Vec<(Ident, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub target: Target,
    pub db: Db,
    /// `states.len() == steps.len() + 1`.
    pub states: Vec<State>,
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn transitions(&self) -> Vec<Ident> {
        self.steps.iter().map(|s| s.transition.clone()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Exploration {
    pub instances: usize,
    pub states: usize,
    /// Every instance ran out of new states before the depth bound.
    pub saturated: bool,
    /// Shortest trace found per target, in target order.
    pub traces: Vec<Trace>,
}

impl Exploration {
    pub fn trace(&self, t: &Target) -> Option<&Trace> {
        self.traces.iter().find(|x| x.target == *t)
    }
}

struct CTrans {
    name: Ident,
    params: Vec<(Ident, Sort, usize, Vec<Val>)>,
    guard: CFormula,
    universal: Option<(usize, Vec<Val>, CFormula)>,
    vars: Vec<CTerm>,
    arrays: Vec<Option<(usize, CTerm)>>,
    slots: usize,
}

pub struct Explorer<'s> {
    spec: &'s RabSpec,
    pub universe: Universe,
    syms: Symbols,
    trans: Vec<CTrans>,
    init: CFormula,
    init_slots: usize,
    targets: Vec<(Target, CFormula, usize)>,
}

impl<'s> Explorer<'s> {
    pub fn new(spec: &'s RabSpec, bounds: Bounds) -> Result<Explorer<'s>, OracleError> {
        let universe = Universe::for_spec(spec, bounds);
        let syms = Symbols::of_spec(spec);
        let mut trans = Vec::new();
        for t in &spec.transitions {
            let mut c = Compiler::new(&syms, &universe);
            let mut params = Vec::new();
            for v in t.index_vars.iter().chain(&t.data_vars) {
                let dom = universe.domain(&v.sort)?.to_vec();
                params.push((v.name.clone(), v.sort.clone(), c.bind(v), dom));
            }
            let guard = c.formula(&t.guard)?;
            let universal = match &t.universal {
                Some(u) => {
                    let dom = universe.domain(&u.var.sort)?.to_vec();
                    let s = c.bind(&u.var);
                    Some((s, dom, c.formula(&u.guard)?))
                }
                None => None,
            };
            let mut vars = Vec::new();
            for v in &spec.vars {
                vars.push(c.term(&t.var_update(v))?);
            }
            let mut arrays = Vec::new();
            for a in &spec.arrays {
                arrays.push(match t.array_update(&a.name) {
                    Some(u) => {
                        let s = c.bind(&u.param);
                        Some((s, c.term(&u.body)?))
                    }
                    None => None,
                });
            }
            trans.push(CTrans { name: t.name.clone(), params, guard, universal, vars, arrays, slots: c.slots });
        }
        let mut c = Compiler::new(&syms, &universe);
        let init = c.formula(&spec.init_formula())?;
        let init_slots = c.slots;
        let mut targets = Vec::new();
        for u in &spec.unsafe_props {
            let mut c = Compiler::new(&syms, &universe);
            let f = c.formula(&u.formula)?;
            targets.push((Target::Unsafe(u.name.clone()), f, c.slots));
        }
        for inv in &spec.invariants {
            let mut c = Compiler::new(&syms, &universe);
            let f = c.formula(&crate::formula::Formula::not(inv.to_formula()))?;
            targets.push((Target::Invariant(inv.name.clone()), f, c.slots));
        }
        Ok(Explorer { spec, universe, syms, trans, init, init_slots, targets })
    }

    fn show(&self, s: &Sort, v: &Val) -> String {
        self.universe.show(s, v)
    }

    /// Initial states: memory cells with a fixed initial value are set,
    /// everything else ranges over its carrier and the initial formula
    /// filters the result.
    fn initial_states(&self, db: &Db) -> Result<Vec<State>, OracleError> {
        let uni = &self.universe;
        let spec = self.spec;
        let mut cells: Vec<Vec<Val>> = Vec::new();
        let fixed = |t: &Term| -> Result<Vec<Val>, OracleError> {
            let mut c = Compiler::new(&self.syms, uni);
            let ct = c.term(t)?;
            let st = State::default();
            Ok(vec![ct.eval(&mut Ctx::new(db, &st, c.slots))])
        };
        for v in &spec.vars {
            cells.push(match spec.init.vars.iter().find(|(n, _)| *n == v.name) {
                Some((_, t)) => fixed(t)?,
                None => uni.domain(&v.sort)?.to_vec(),
            });
        }
        for a in &spec.arrays {
            let n = uni.domain(&a.index)?.len();
            let init = spec.init.arrays.iter().find(|(m, _)| *m == a.name);
            let gated = spec.alive_array(&a.index).is_some();
            for _ in 0..n {
                cells.push(match init {
                    Some((_, t)) if !gated => fixed(t)?,
                    _ => uni.domain(&a.elem)?.to_vec(),
                });
            }
        }
        let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
        let limit = uni.bounds.max_states;
        if total(&sizes).is_none_or(|n| n > limit) {
            return Err(OracleError::UniverseTooLarge { what: "initial states".into(), limit });
        }
        let mut out = Vec::new();
        for_each_choice(&cells, &mut |pick| {
            let st = self.layout(pick);
            if self.init.eval(&mut Ctx::new(db, &st, self.init_slots)) {
                out.push(st);
            }
            false
        });
        Ok(out)
    }

    fn layout(&self, pick: &[&Val]) -> State {
        let mut st = State::default();
        let mut k = 0;
        for _ in &self.spec.vars {
            st.vars.push(pick[k].clone());
            k += 1;
        }
        for a in &self.spec.arrays {
            let n = self.universe.domain(&a.index).map(<[Val]>::len).unwrap_or(0);
            st.arrays.push(pick[k..k + n].iter().map(|v| (*v).clone()).collect());
            k += n;
        }
        st
    }

    /// Successors of `st` under transition `t`.
    fn successors(&self, db: &Db, st: &State, t: &CTrans, out: &mut Vec<(State, Step)>) {
        let doms: Vec<Vec<Val>> = t.params.iter().map(|p| p.3.clone()).collect();
        for_each_choice(&doms, &mut |pick| {
            let mut cx = Ctx::new(db, st, t.slots);
            for (p, v) in t.params.iter().zip(pick) {
                cx.locals[p.2] = (*v).clone();
            }
            if !t.guard.eval(&mut cx) {
                return false;
            }
            if let Some((k, dom, g)) = &t.universal {
                for v in dom {
                    cx.locals[*k] = v.clone();
                    if !g.eval(&mut cx) {
                        return false;
                    }
                }
            }
            let mut next = State::default();
            for u in &t.vars {
                next.vars.push(u.eval(&mut cx));
            }
            for (ai, (u, a)) in t.arrays.iter().zip(&self.spec.arrays).enumerate() {
                next.arrays.push(match u {
                    None => st.arrays[ai].clone(),
                    Some((y, body)) => {
                        let dom = self.universe.domain(&a.index).map(<[Val]>::to_vec).unwrap_or_default();
                        dom.into_iter()
                            .map(|i| {
                                cx.locals[*y] = i;
                                body.eval(&mut cx)
                            })
                            .collect()
                    }
                });
            }
            let bindings = t.params.iter().zip(pick).map(|(p, v)| (p.0.clone(), self.show(&p.1, v))).collect();
            out.push((next, Step { transition: t.name.clone(), bindings }));
            false
        });
    }

    fn violated(&self, db: &Db, st: &State) -> Vec<usize> {
        (0..self.targets.len())
            .filter(|&i| {
                let (_, f, slots) = &self.targets[i];
                f.eval(&mut Ctx::new(db, st, *slots))
            })
            .collect()
    }

    /// Explore every instance up to `depth` steps. When `sequence` is given
    /// only runs that fire exactly those transitions, in order, are
    /// considered, and only their final states are checked.
    pub fn explore(&self, depth: usize, sequence: Option<&[Ident]>) -> Result<Exploration, OracleError> {
        let dbs = enumerate_dbs(&self.syms, &self.universe)?;
        let depth = sequence.map_or(depth, <[Ident]>::len);
        let limit = self.universe.bounds.max_states;
        let mut best: Vec<Option<Trace>> = vec![None; self.targets.len()];
        let mut res = Exploration { instances: dbs.len(), saturated: true, ..Default::default() };
        for db in &dbs {
            let mut states: Vec<State> = Vec::new();
            let mut parent: Vec<Option<(usize, Step)>> = Vec::new();
            let mut seen: HashMap<State, usize> = HashMap::new();
            let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
            for s in self.initial_states(db)? {
                if !seen.contains_key(&s) {
                    seen.insert(s.clone(), states.len());
                    queue.push_back((states.len(), 0));
                    states.push(s);
                    parent.push(None);
                }
            }
            while let Some((id, d)) = queue.pop_front() {
                let final_step = sequence.is_none_or(|s| d == s.len());
                if final_step {
                    for ti in self.violated(db, &states[id]) {
                        if best[ti].as_ref().is_none_or(|t| t.steps.len() > d) {
                            best[ti] = Some(self.trace(ti, db, &states, &parent, id));
                        }
                    }
                }
                let cap = best.iter().map(|b| b.as_ref().map_or(usize::MAX, |t| t.steps.len())).max().unwrap_or(usize::MAX);
                if d >= depth || d >= cap {
                    res.saturated = false;
                    continue;
                }
                let mut succ = Vec::new();
                for t in &self.trans {
                    if sequence.is_some_and(|s| s[d] != t.name) {
                        continue;
                    }
                    self.successors(db, &states[id], t, &mut succ);
                }
                for (s, step) in succ {
                    if sequence.is_none() && seen.contains_key(&s) {
                        continue;
                    }
                    if states.len() >= limit {
                        return Err(OracleError::UniverseTooLarge { what: "reachable states".into(), limit });
                    }
                    seen.insert(s.clone(), states.len());
                    queue.push_back((states.len(), d + 1));
                    states.push(s);
                    parent.push(Some((id, step)));
                }
            }
            res.states += states.len();
        }
        res.traces = best.into_iter().flatten().collect();
        if sequence.is_some() {
            res.saturated = false;
        }
        Ok(res)
    }

    fn trace(&self, ti: usize, db: &Db, states: &[State], parent: &[Option<(usize, Step)>], mut id: usize) -> Trace {
        let mut ss = vec![states[id].clone()];
        let mut steps = Vec::new();
        while let Some((p, step)) = &parent[id] {
            steps.push(step.clone());
            ss.push(states[*p].clone());
            id = *p;
        }
        ss.reverse();
        steps.reverse();
        Trace { target: self.targets[ti].0.clone(), db: db.clone(), states: ss, steps }
    }

    /// Readable rendering of a trace.
    pub fn render(&self, t: &Trace) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "counterexample for {}:", t.target);
        for (fi, (name, dom, cod)) in self.syms.funs.iter().enumerate() {
            let dv = self.universe.domain(dom).map(<[Val]>::to_vec).unwrap_or_default();
            let entries: Vec<String> = dv
                .iter()
                .zip(&t.db.funs[fi])
                .filter(|(a, _)| **a != Val::Elem(0) || !dom.has_undef())
                .map(|(a, b)| format!("{}->{}", self.show(dom, a), self.show(cod, b)))
                .collect();
            let _ = writeln!(out, "  {name}: {}", entries.join(" "));
        }
        for (ri, (name, args)) in self.syms.rels.iter().enumerate() {
            let tuples: Vec<String> = t.db.rels[ri]
                .iter()
                .map(|tup| {
                    let vs: Vec<String> = tup.iter().zip(args).map(|(v, s)| self.show(s, v)).collect();
                    format!("({})", vs.join(" "))
                })
                .collect();
            let _ = writeln!(out, "  {name}: {{{}}}", tuples.join(" "));
        }
        for (i, st) in t.states.iter().enumerate() {
            if i > 0 {
                let step = &t.steps[i - 1];
                let b: Vec<String> = step.bindings.iter().map(|(n, v)| format!("{n}={v}")).collect();
                let _ = writeln!(out, "  --{}({})-->", step.transition, b.join(", "));
            }
            let _ = writeln!(out, "  state {i}: {}", self.render_state(st));
        }
        out
    }

    pub fn render_state(&self, st: &State) -> String {
        let mut parts = Vec::new();
        for (v, val) in self.spec.vars.iter().zip(&st.vars) {
            parts.push(format!("{}={}", v.name, self.show(&v.sort, val)));
        }
        for (a, cells) in self.spec.arrays.iter().zip(&st.arrays) {
            let dom = self.universe.domain(&a.index).map(<[Val]>::to_vec).unwrap_or_default();
            let cs: Vec<String> = dom.iter().zip(cells).map(|(i, c)| format!("{}:{}", self.show(&a.index, i), self.show(&a.elem, c))).collect();
            parts.push(format!("{}=[{}]", a.name, cs.join(" ")));
        }
        parts.join(" ")
    }
}

/// Shorthand for a fresh explorer run.
pub fn explore(spec: &RabSpec, bounds: Bounds, depth: usize) -> Result<Exploration, OracleError> {
    Explorer::new(spec, bounds)?.explore(depth, None)
}
