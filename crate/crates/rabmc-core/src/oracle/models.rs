//! Exhaustive enumeration of small structures.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::Rational64;

use super::eval::{CFormula, Compiler, Ctx, Db, State, Symbols};
use super::universe::{Bounds, Universe};
use super::{OracleError, Val};
use crate::formula::{Formula, Ident, Sort, Term, Var};
use crate::spec::ElemConsts;

pub(crate) fn total(sizes: &[usize]) -> Option<usize> {
    sizes.iter().try_fold(1usize, |a, &b| a.checked_mul(b))
}

/// Visit every combination, one choice from each set, until `f` returns
/// `true`. Returns whether it stopped early.
pub(crate) fn for_each_choice<T>(sets: &[Vec<T>], f: &mut dyn FnMut(&[&T]) -> bool) -> bool {
    if sets.iter().any(Vec::is_empty) {
        return false;
    }
    let mut pos = vec![0usize; sets.len()];
    loop {
        let pick: Vec<&T> = sets.iter().zip(&pos).map(|(s, &i)| &s[i]).collect();
        if f(&pick) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == pos.len() {
                return false;
            }
            pos[k] += 1;
            if pos[k] < sets[k].len() {
                break;
            }
            pos[k] = 0;
            k += 1;
        }
    }
}

fn too_large(what: &str, limit: usize) -> OracleError {
    OracleError::UniverseTooLarge { what: what.into(), limit }
}

fn check_total(sizes: &[usize], what: &str, limit: usize) -> Result<(), OracleError> {
    match total(sizes) {
        Some(n) if n <= limit => Ok(()),
        _ => Err(too_large(what, limit)),
    }
}

/// Values a function may take at an argument, respecting the undef axiom.
fn image_choices(uni: &Universe, dom: &Sort, cod: &Sort, arg: &Val) -> Result<Vec<Val>, OracleError> {
    let cods = uni.domain(cod)?;
    Ok(if !cod.has_undef() {
        cods.to_vec()
    } else if dom.has_undef() && *arg == Val::Elem(0) {
        vec![Val::Elem(0)]
    } else {
        cods.iter().filter(|v| **v != Val::Elem(0)).cloned().collect()
    })
}

/// Every database instance over `syms` within the universe.
pub fn enumerate_dbs(syms: &Symbols, uni: &Universe) -> Result<Vec<Db>, OracleError> {
    let limit = uni.bounds.max_structures;
    let mut cells: Vec<Vec<Val>> = Vec::new();
    for (_, dom, cod) in &syms.funs {
        for a in uni.domain(dom)? {
            cells.push(image_choices(uni, dom, cod, a)?);
        }
    }
    let mut tuples: Vec<Vec<Vec<Val>>> = Vec::new();
    for (_, args) in &syms.rels {
        let doms: Vec<Vec<Val>> = args.iter().map(|s| uni.domain(s).map(<[Val]>::to_vec)).collect::<Result<_, _>>()?;
        let mut all = Vec::new();
        for_each_choice(&doms, &mut |p| {
            all.push(p.iter().map(|v| (*v).clone()).collect::<Vec<Val>>());
            false
        });
        for _ in &all {
            cells.push(vec![Val::Bool(false), Val::Bool(true)]);
        }
        tuples.push(all);
    }
    let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
    check_total(&sizes, "database instances", limit)?;
    let mut out = Vec::new();
    for_each_choice(&cells, &mut |pick| {
        let mut k = 0;
        let mut db = Db::default();
        for (_, dom, _) in &syms.funs {
            let n = uni.domain(dom).map(<[Val]>::len).unwrap_or(0);
            db.funs.push(pick[k..k + n].iter().map(|v| (*v).clone()).collect());
            k += n;
        }
        for all in &tuples {
            let mut ext = BTreeSet::new();
            for t in all {
                if *pick[k] == Val::Bool(true) {
                    ext.insert(t.clone());
                }
                k += 1;
            }
            db.rels.push(ext);
        }
        out.push(db);
        false
    });
    Ok(out)
}

/// A satisfying structure: database, memory and free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub db: Db,
    pub state: State,
    pub free: Vec<(Var, Val)>,
}

struct Prepared {
    syms: Symbols,
    free: Vec<Var>,
    compiled: CFormula,
    slots: usize,
}

fn prepare(fs: &[&Formula], uni: &Universe, free: Vec<Var>, target: &Formula) -> Result<Prepared, OracleError> {
    let syms = Symbols::of_formulas(fs);
    let mut c = Compiler::new(&syms, uni);
    for v in &free {
        c.bind(v);
    }
    let compiled = c.formula(target)?;
    let slots = c.slots;
    Ok(Prepared { syms, free, compiled, slots })
}

/// Choice sets for memory and free variables, in slot order.
fn state_cells(p: &Prepared, uni: &Universe) -> Result<Vec<Vec<Val>>, OracleError> {
    let mut cells = Vec::new();
    for (_, s) in &p.syms.states {
        cells.push(uni.domain(s)?.to_vec());
    }
    for (_, idx, elem) in &p.syms.arrays {
        for _ in uni.domain(idx)? {
            cells.push(uni.domain(elem)?.to_vec());
        }
    }
    for v in &p.free {
        cells.push(uni.domain(&v.sort)?.to_vec());
    }
    Ok(cells)
}

fn build_state(p: &Prepared, uni: &Universe, pick: &[&Val]) -> (State, Vec<Val>) {
    let mut k = 0;
    let mut st = State::default();
    for _ in &p.syms.states {
        st.vars.push(pick[k].clone());
        k += 1;
    }
    for (_, idx, _) in &p.syms.arrays {
        let n = uni.domain(idx).map(<[Val]>::len).unwrap_or(0);
        st.arrays.push(pick[k..k + n].iter().map(|v| (*v).clone()).collect());
        k += n;
    }
    let free = pick[k..].iter().map(|v| (*v).clone()).collect();
    (st, free)
}

fn search(
    f: &Formula,
    uni: &Universe,
    limit: usize,
    stop_at_first: bool,
) -> Result<Vec<Model>, OracleError> {
    let free: Vec<Var> = f.free_vars().into_iter().collect();
    let p = prepare(&[f], uni, free, f)?;
    let dbs = enumerate_dbs(&p.syms, uni)?;
    let cells = state_cells(&p, uni)?;
    let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
    let per_db = total(&sizes).ok_or_else(|| too_large("assignments", limit))?;
    if per_db.checked_mul(dbs.len()).is_none_or(|n| n > limit) {
        return Err(too_large("assignments", limit));
    }
    let mut out = Vec::new();
    for db in &dbs {
        let stop = for_each_choice(&cells, &mut |pick| {
            let (st, fv) = build_state(&p, uni, pick);
            let mut cx = Ctx::new(db, &st, p.slots);
            cx.locals[..fv.len()].clone_from_slice(&fv);
            if p.compiled.eval(&mut cx) {
                out.push(Model { db: db.clone(), state: st.clone(), free: p.free.iter().cloned().zip(fv).collect() });
                return stop_at_first;
            }
            false
        });
        if stop {
            break;
        }
    }
    Ok(out)
}

/// Every model of `f` in the universe. Free variables, memory variables
/// and arrays are part of the model.
pub fn enumerate_models(f: &Formula, uni: &Universe) -> Result<Vec<Model>, OracleError> {
    search(f, uni, uni.bounds.max_states, false)
}

/// Whether `f` has a model in the universe.
pub fn bounded_sat(f: &Formula, uni: &Universe) -> Result<bool, OracleError> {
    Ok(!search(f, uni, uni.bounds.max_states, true)?.is_empty())
}

fn arith_candidates(kept: &BTreeSet<Rational64>, samples: &[Rational64], int: bool) -> Vec<Val> {
    let mut c: BTreeSet<Rational64> = samples.iter().copied().collect();
    let two = Rational64::from_integer(2);
    for v in kept {
        for d in -4..=4 {
            c.insert(v + Rational64::from_integer(d));
        }
        if !int {
            for w in kept {
                c.insert((v + w) / two);
            }
        }
    }
    c.into_iter().map(Val::Num).collect()
}

/// Bounded check of the extension property: every model of `candidate`
/// over the kept symbols extends, by fresh elements and new values for
/// the eliminated variables, to a model of `phi`.
pub fn check_cover_by_extension(
    phi: &Formula,
    eliminate: &[Var],
    candidate: &Formula,
    bounds: &Bounds,
    elem: &BTreeMap<Ident, ElemConsts>,
) -> Result<bool, OracleError> {
    // variables absent from phi are vacuous: every carrier is non-empty
    let occurring = phi.free_vars();
    let eliminate: Vec<Var> = eliminate.iter().filter(|v| occurring.contains(*v)).cloned().collect();
    let eliminate = &eliminate[..];
    // one fresh element per eliminated variable and per application term
    let mut apps = BTreeSet::new();
    phi.any_term(&mut |t| {
        if matches!(t, Term::App { .. }) {
            apps.insert(t.clone());
        }
        false
    });
    let fresh = (eliminate.len() + apps.len()).max(1);
    let base = Universe::for_formulas(&[phi, candidate], bounds.clone(), elem);
    let mut wide_bounds = bounds.clone();
    wide_bounds.id_extra += fresh;
    wide_bounds.value_extra += fresh;
    let wide = Universe::for_formulas(&[phi, candidate], wide_bounds, elem);

    let elim: BTreeSet<&Var> = eliminate.iter().collect();
    let kept: Vec<Var> = phi
        .free_vars()
        .into_iter()
        .chain(candidate.free_vars())
        .filter(|v| !elim.contains(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cand = prepare(&[phi, candidate], &base, kept.clone(), candidate)?;
    let mut all_free = kept.clone();
    all_free.extend(eliminate.iter().cloned());
    let target = prepare(&[phi, candidate], &wide, all_free, phi)?;
    debug_assert_eq!(cand.syms, target.syms);
    let syms = &cand.syms;

    let dbs = enumerate_dbs(syms, &base)?;
    let cells = state_cells(&cand, &base)?;
    let limit = bounds.max_states;
    let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
    if total(&sizes).and_then(|n| n.checked_mul(dbs.len())).is_none_or(|n| n > limit) {
        return Err(too_large("cover models", limit));
    }

    let mut failure: Option<OracleError> = None;
    for db in &dbs {
        let bad = for_each_choice(&cells, &mut |pick| {
            let (st, fv) = build_state(&cand, &base, pick);
            let mut cx = Ctx::new(db, &st, cand.slots);
            cx.locals[..fv.len()].clone_from_slice(&fv);
            if !cand.compiled.eval(&mut cx) {
                return false;
            }
            match extends(phi, eliminate, syms, &base, &wide, &target, db, &st, &fv) {
                Ok(true) => false,
                Ok(false) => true,
                Err(e) => {
                    failure = Some(e);
                    true
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if bad {
            return Ok(false);
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn extends(
    phi: &Formula,
    eliminate: &[Var],
    syms: &Symbols,
    base: &Universe,
    wide: &Universe,
    target: &Prepared,
    db: &Db,
    st: &State,
    kept: &[Val],
) -> Result<bool, OracleError> {
    // Arithmetic values visible in the base model seed the candidates for
    // eliminated arithmetic variables.
    let mut seen: BTreeSet<Rational64> = BTreeSet::new();
    let mut note = |v: &Val| {
        if let Val::Num(r) = v {
            seen.insert(*r);
        }
    };
    kept.iter().for_each(&mut note);
    st.vars.iter().for_each(&mut note);
    st.arrays.iter().flatten().for_each(&mut note);
    db.funs.iter().flatten().for_each(&mut note);
    phi.any_term(&mut |t| {
        if let Term::Num(n, _) = t {
            if let Ok(r) = super::universe::rat(n) {
                seen.insert(r);
            }
        }
        false
    });

    // Function entries at fresh arguments start out unchosen and are
    // picked only when the evaluation reads them.
    let mut wide_db = db.clone();
    let mut pending = Vec::new();
    for (fi, (_, dom, cod)) in syms.funs.iter().enumerate() {
        let n = wide.domain(dom)?.len();
        let filler = if cod.is_arith() { Val::Num(Rational64::from_integer(0)) } else { Val::Elem(0) };
        wide_db.funs[fi].resize(n, filler);
        let nb = base.domain(dom)?.len();
        pending.push((0..n).map(|i| i >= nb).collect::<Vec<bool>>());
    }
    let mut ext = Extension {
        syms,
        base,
        wide,
        target,
        st,
        kept,
        eliminate,
        seen,
        db: wide_db,
        pending,
        touched: BTreeMap::new(),
        locals: Vec::new(),
        budget: base.bounds.max_states,
    };
    let found = ext.vars(0)?;
    Ok(found)
}

/// Depth-first search for an extension. Fresh elements not yet mentioned
/// are interchangeable, so only the first of them is ever tried.
struct Extension<'a> {
    syms: &'a Symbols,
    base: &'a Universe,
    wide: &'a Universe,
    target: &'a Prepared,
    st: &'a State,
    kept: &'a [Val],
    eliminate: &'a [Var],
    seen: BTreeSet<Rational64>,
    db: Db,
    pending: Vec<Vec<bool>>,
    touched: BTreeMap<Sort, usize>,
    locals: Vec<Val>,
    budget: usize,
}

impl Extension<'_> {
    fn tick(&mut self) -> Result<(), OracleError> {
        if self.budget == 0 {
            return Err(too_large("extensions", self.base.bounds.max_states));
        }
        self.budget -= 1;
        Ok(())
    }

    /// Values worth trying for a term of sort `s`; `among` narrows the
    /// carrier (the undef axiom for function cells).
    fn choices(&self, s: &Sort, among: Option<Vec<Val>>) -> Result<Vec<Val>, OracleError> {
        if s.is_arith() {
            return Ok(arith_candidates(&self.seen, self.wide.samples(), s.is_int()));
        }
        let all = self.wide.domain(s)?;
        let nb = self.base.domain(s)?.len();
        let open = nb + self.touched.get(s).copied().unwrap_or(0) + 1;
        let pool = &all[..open.min(all.len())];
        Ok(match among {
            Some(a) => pool.iter().filter(|v| a.contains(v)).cloned().collect(),
            None => pool.to_vec(),
        })
    }

    /// Record that `v` is now in use; returns the previous count.
    fn touch(&mut self, s: &Sort, v: &Val) -> Result<Option<usize>, OracleError> {
        if s.is_arith() {
            return Ok(None);
        }
        let nb = self.base.domain(s)?.len();
        let before = self.touched.get(s).copied().unwrap_or(0);
        let pos = self.wide.domain(s)?.iter().position(|w| w == v);
        if pos == Some(nb + before) {
            self.touched.insert(s.clone(), before + 1);
            return Ok(Some(before));
        }
        Ok(None)
    }

    fn untouch(&mut self, s: &Sort, prev: Option<usize>) {
        if let Some(p) = prev {
            self.touched.insert(s.clone(), p);
        }
    }

    fn vars(&mut self, k: usize) -> Result<bool, OracleError> {
        if k == self.eliminate.len() {
            return self.cells();
        }
        let s = &self.eliminate[k].sort;
        for v in self.choices(s, None)? {
            self.tick()?;
            let prev = self.touch(s, &v)?;
            self.locals.push(v);
            let ok = self.vars(k + 1)?;
            self.locals.pop();
            self.untouch(s, prev);
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn cells(&mut self) -> Result<bool, OracleError> {
        let (holds, missing) = {
            let mut cx = Ctx::new(&self.db, self.st, self.target.slots);
            cx.pending = Some(&self.pending);
            cx.locals[..self.kept.len()].clone_from_slice(self.kept);
            cx.locals[self.kept.len()..self.kept.len() + self.locals.len()].clone_from_slice(&self.locals);
            let holds = self.target.compiled.eval(&mut cx);
            (holds, cx.missing)
        };
        let Some((fi, ai)) = missing else {
            return Ok(holds);
        };
        let (_, dom, cod) = self.syms.funs[fi].clone();
        let arg = self.wide.domain(&dom)?[ai].clone();
        let among = if cod.is_arith() { None } else { Some(image_choices(self.wide, &dom, &cod, &arg)?) };
        self.pending[fi][ai] = false;
        let mut found = false;
        for v in self.choices(&cod, among)? {
            self.tick()?;
            let prev = self.touch(&cod, &v)?;
            self.db.funs[fi][ai] = v;
            found = self.cells()?;
            self.untouch(&cod, prev);
            if found {
                break;
            }
        }
        self.pending[fi][ai] = true;
        Ok(found)
    }
}
