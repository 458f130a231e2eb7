//! SMT checks around the search: the fixpoint test, universal invariants,
//! the certificate of a SAFE run, and the audit of frontiers against a
//! known invariant.

use std::collections::BTreeMap;

use super::{negations, EngineError, Outcome, Run};
use crate::formula::{ident, rename_vars, Cube, Formula, Ident, Var};
use crate::preimage::{pre, substitute_next};
use crate::smt::{Session, Verdict};
use crate::spec::{Invariant, RabSpec, TransitionRule};

/// `Sat` when some cube of `p` has a state outside `b` that satisfies the
/// invariants; `Unsat` means `p` adds nothing and the search is done.
pub fn fixpoint_test(session: &mut Session, p: &[Cube], b: &[Cube], inv: &[Invariant]) -> Result<Verdict, EngineError> {
    let b: Vec<&Cube> = b.iter().collect();
    let neg = negations(&b);
    for c in p {
        let mut parts = vec![c.to_formula()];
        parts.extend(inv.iter().map(Invariant::to_formula));
        parts.extend(neg.iter().cloned());
        if session.check_sat(&Formula::and(parts))?.is_sat() {
            return Ok(Verdict::Sat);
        }
    }
    Ok(Verdict::Unsat)
}

/// Results of the three invariant conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantCheck {
    /// `ι ⇒ φ`.
    pub initiation: bool,
    /// `φ ∧ τ ⇒ φ'`; failing transitions are listed.
    pub consecution: bool,
    pub failing: Vec<Ident>,
    /// `φ ∧ υ` unsatisfiable, when an unsafe formula was given.
    pub safety: Option<bool>,
}

impl InvariantCheck {
    pub fn is_invariant(&self) -> bool {
        self.initiation && self.consecution
    }

    pub fn is_safety_invariant(&self) -> bool {
        self.is_invariant() && self.safety == Some(true)
    }
}

/// Rename the bound variables to `iv!n` so that transition parameters
/// substituted into the body cannot be captured.
fn apart(inv: &Invariant) -> Invariant {
    let map: BTreeMap<Var, Var> = inv
        .vars
        .iter()
        .enumerate()
        .map(|(n, v)| (v.clone(), Var { name: ident(&format!("iv!{n}")), sort: v.sort.clone() }))
        .collect();
    Invariant { name: inv.name.clone(), vars: inv.vars.iter().map(|v| map[v].clone()).collect(), body: rename_vars(&inv.body, &map) }
}

fn unsat(session: &mut Session, parts: Vec<Formula>) -> Result<bool, EngineError> {
    Ok(session.check_sat(&Formula::and(parts))? == Verdict::Unsat)
}

/// The transition relation of `tr` from the current state, with `ψ` read
/// in the next state: `γ ∧ ∀k γᵤ ∧ ψ(F, λy. G)`. Parameters stay free.
fn step_into(tr: &TransitionRule, psi: &Formula) -> Formula {
    let mut parts = vec![tr.guard.clone()];
    if let Some(u) = &tr.universal {
        parts.push(Formula::forall(vec![u.var.clone()], u.guard.clone()));
    }
    parts.push(substitute_next(tr, psi));
    Formula::and(parts)
}

/// Check `inv` for initiation and consecution on `spec`, and for
/// disjointness from `unsafe_formula` when one is given.
pub fn check_invariant(
    session: &mut Session,
    spec: &RabSpec,
    inv: &Invariant,
    unsafe_formula: Option<&Formula>,
) -> Result<InvariantCheck, EngineError> {
    session.register_elem_sorts(&spec.signature.elem_consts);
    let inv = apart(inv);
    let phi = inv.to_formula();
    let initiation = unsat(session, vec![spec.init_formula(), Formula::not(phi.clone())])?;
    let mut failing = Vec::new();
    for tr in &spec.transitions {
        let bad = Formula::exists(inv.vars.clone(), Formula::not(inv.body.clone()));
        if !unsat(session, vec![phi.clone(), step_into(tr, &bad)])? {
            failing.push(tr.name.clone());
        }
    }
    let safety = match unsafe_formula {
        Some(u) => Some(unsat(session, vec![phi.clone(), u.clone()])?),
        None => None,
    };
    Ok(InvariantCheck { initiation, consecution: failing.is_empty(), failing, safety })
}

/// The three conditions for `¬B̃` (together with the pruning invariants)
/// to be a safety universal invariant.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Certificate {
    /// `ι ∧ b` unsatisfiable for every cube `b` of `B̃`.
    pub initiation: bool,
    /// `¬B̃ ∧ Inv ∧ Pre(tr, b)` unsatisfiable for every transition and cube.
    pub consecution: bool,
    /// `¬B̃ ∧ Inv ∧ υ` unsatisfiable.
    pub safety: bool,
    pub failures: Vec<String>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.initiation && self.consecution && self.safety
    }
}

/// Check that `⋀ ¬b` over `cubes`, assuming `invariants`, is an inductive
/// invariant of `spec` disjoint from `unsafe_formula`.
pub fn check_certificate(
    session: &mut Session,
    spec: &RabSpec,
    cubes: &[Cube],
    invariants: &[Invariant],
    unsafe_formula: &Formula,
) -> Result<Certificate, EngineError> {
    session.register_elem_sorts(&spec.signature.elem_consts);
    let refs: Vec<&Cube> = cubes.iter().collect();
    let mut assumed = negations(&refs);
    assumed.extend(invariants.iter().map(Invariant::to_formula));
    let init = spec.init_formula();
    let mut cert = Certificate { initiation: true, consecution: true, safety: true, failures: Vec::new() };
    for (n, b) in cubes.iter().enumerate() {
        if !unsat(session, vec![init.clone(), b.to_formula()])? {
            cert.initiation = false;
            cert.failures.push(format!("initial states meet cube {n}"));
        }
    }
    for (n, b) in cubes.iter().enumerate() {
        for tr in &spec.transitions {
            let mut parts = assumed.clone();
            parts.push(pre(tr, b));
            if !unsat(session, parts)? {
                cert.consecution = false;
                cert.failures.push(format!("`{}` leaves the invariant into cube {n}", tr.name));
            }
        }
    }
    let mut parts = assumed;
    parts.push(unsafe_formula.clone());
    if !unsat(session, parts)? {
        cert.safety = false;
        cert.failures.push("invariant meets the unsafe states".into());
    }
    Ok(cert)
}

/// `¬B̃` of a SAFE run as a universal formula, after checking its
/// certificate. A failed certificate is an error.
pub fn extract_invariant(session: &mut Session, run: &Run) -> Result<(Formula, Certificate), EngineError> {
    if !matches!(run.outcome, Outcome::Safe) {
        return Err(EngineError::Certificate(format!("run ended with {}", run.outcome.verdict())));
    }
    let cubes = run.accumulated_cubes();
    let cert = check_certificate(session, &run.spec, &cubes, &run.invariants, &run.unsafe_formula)?;
    if !cert.holds() {
        return Err(EngineError::Certificate(cert.failures.join("; ")));
    }
    let refs: Vec<&Cube> = cubes.iter().collect();
    Ok((Formula::and(negations(&refs)), cert))
}

/// For each layer, whether every frontier cube is disjoint from `phi`.
pub fn audit_layers(session: &mut Session, run: &Run, phi: &Invariant) -> Result<Vec<bool>, EngineError> {
    let phi = phi.to_formula();
    let mut out = Vec::new();
    for layer in &run.layers {
        let mut ok = true;
        for c in &layer.frontier {
            if !unsat(session, vec![phi.clone(), c.to_formula()])? {
                ok = false;
                break;
            }
        }
        out.push(ok);
    }
    Ok(out)
}
