//! Unsafe traces: the forward trace formula with exact universal guards,
//! and a backward recheck of what the search itself derived.

use std::collections::BTreeSet;

use super::EngineError;
use crate::formula::{ident, substitute_term_unchecked, substitute_unchecked, Cube, Formula, Ident, Subst, Term, Var};
use crate::preimage::{inst_pre, raw_cubes};
use crate::smt::{Session, SmtError, Verdict};
use crate::spec::RabSpec;

/// Cap on the number of cubes carried by [`recheck_symbolic_trace`].
const RECHECK_CUBES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spuriousness {
    Unknown,
    /// Some run of the system follows the trace into the unsafe states.
    Genuine,
    /// No run does.
    Spurious,
}

impl Spuriousness {
    pub fn name(self) -> &'static str {
        match self {
            Spuriousness::Unknown => "unknown",
            Spuriousness::Genuine => "genuine",
            Spuriousness::Spurious => "spurious",
        }
    }
}

/// Outcome of replaying an UNSAFE witness through uncovered preimages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Recheck {
    Confirmed,
    Refuted,
    Skipped(String),
}

impl Recheck {
    pub fn name(&self) -> &'static str {
        match self {
            Recheck::Confirmed => "confirmed",
            Recheck::Refuted => "refuted",
            Recheck::Skipped(_) => "skipped",
        }
    }
}

fn step_name(base: &str, j: usize) -> Ident {
    ident(&format!("{base}@{j}"))
}

fn shift_term(t: &Term, j: usize) -> Term {
    t.rewrite(&mut |t| match t {
        Term::State(x, s) => Some(Term::State(step_name(x, j), s.clone())),
        Term::Select { array, index, sort } => Some(Term::Select {
            array: step_name(array, j),
            index: Box::new(shift_term(index, j)),
            sort: sort.clone(),
        }),
        _ => None,
    })
}

/// Read every memory symbol of `f` in state copy `j`.
fn shift(f: &Formula, j: usize) -> Formula {
    f.rewrite_terms(&mut |t| Some(shift_term(t, j)))
}

/// `ι(s₀) ∧ tr₁(s₀, s₁) ∧ ... ∧ trₖ(sₖ₋₁, sₖ) ∧ target(sₖ)`, where each
/// `trⱼ` keeps its universal guard. Parameters of step `j` are renamed to
/// `name@j` and state copies are named the same way.
pub fn trace_formula(spec: &RabSpec, trace: &[Ident], target: &Formula) -> Result<Formula, EngineError> {
    let mut parts = vec![shift(&spec.init_formula(), 0)];
    for (n, name) in trace.iter().enumerate() {
        let j = n + 1;
        let tr = spec.transition(name).ok_or_else(|| EngineError::UnknownTransition(name.to_string()))?;
        let s: Subst = tr
            .index_vars
            .iter()
            .chain(&tr.data_vars)
            .map(|v| (v.clone(), Term::Var(Var { name: step_name(&v.name, j), sort: v.sort.clone() })))
            .collect();
        parts.push(shift(&substitute_unchecked(&tr.guard, &s), j - 1));
        if let Some(u) = &tr.universal {
            let k = Var { name: step_name(&u.var.name, j), sort: u.var.sort.clone() };
            let mut s = s.clone();
            s.insert(u.var.clone(), Term::var(&k));
            parts.push(Formula::forall(vec![k], shift(&substitute_unchecked(&u.guard, &s), j - 1)));
        }
        for x in &spec.vars {
            let next = shift_term(&substitute_term_unchecked(&tr.var_update(x), &s), j - 1);
            parts.push(Formula::eq(Term::State(step_name(&x.name, j), x.sort.clone()), next));
        }
        for a in &spec.arrays {
            let y = Var { name: ident(&format!("y!{j}")), sort: a.index.clone() };
            let cell = tr.array_cell(a, &Term::var(&y));
            let next = shift_term(&substitute_term_unchecked(&cell, &s), j - 1);
            let lhs = Term::Select { array: step_name(&a.name, j), index: Box::new(Term::var(&y)), sort: a.elem.clone() };
            parts.push(Formula::forall(vec![y], Formula::eq(lhs, next)));
        }
    }
    parts.push(shift(target, trace.len()));
    Ok(Formula::and(parts))
}

/// Decide whether some run of `spec` takes exactly the transitions of
/// `trace` and ends in the unsafe formula `property`.
pub fn check_spurious(
    session: &mut Session,
    spec: &RabSpec,
    trace: &[Ident],
    property: &str,
) -> Result<Spuriousness, EngineError> {
    let u = spec.unsafe_prop(property).ok_or_else(|| EngineError::UnknownProperty(property.to_string()))?;
    session.register_elem_sorts(&spec.signature.elem_consts);
    let f = trace_formula(spec, trace, &u.formula)?;
    match session.check_sat(&f) {
        Ok(Verdict::Sat) => Ok(Spuriousness::Genuine),
        Ok(Verdict::Unsat) => Ok(Spuriousness::Spurious),
        Err(SmtError::Timeout(_) | SmtError::Unknown(_) | SmtError::Fragment(_)) => Ok(Spuriousness::Unknown),
        Err(e) => Err(e.into()),
    }
}

/// Replay `trace` backwards from `root` with instantiated preimages and no
/// data elimination, and test the result against the initial states.
///
/// With exact covers this is the formula the search decided, so anything
/// but `Confirmed` points at a bookkeeping error.
pub fn recheck_symbolic_trace(
    session: &mut Session,
    spec: &RabSpec,
    trace: &[Ident],
    root: &Cube,
) -> Result<Recheck, EngineError> {
    let mut cubes = vec![root.clone()];
    for name in trace.iter().rev() {
        let tr = spec.transition(name).ok_or_else(|| EngineError::UnknownTransition(name.to_string()))?;
        let mut next = Vec::new();
        let mut seen = BTreeSet::new();
        for c in &cubes {
            for r in raw_cubes(&inst_pre(tr, c))? {
                if let Some(n) = r.normalize() {
                    if seen.insert(n.clone()) {
                        next.push(n);
                    }
                }
            }
            if next.len() > RECHECK_CUBES {
                return Ok(Recheck::Skipped(format!("more than {RECHECK_CUBES} cubes")));
            }
        }
        cubes = next;
    }
    let init = spec.init_formula();
    for c in &cubes {
        match session.check_sat(&Formula::and(vec![init.clone(), c.to_formula()])) {
            Ok(Verdict::Sat) => return Ok(Recheck::Confirmed),
            Ok(Verdict::Unsat) => {}
            Err(SmtError::Timeout(_) | SmtError::Unknown(_)) => return Ok(Recheck::Skipped("solver gave up".into())),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Recheck::Refuted)
}
