//! Removing universal guards by source transformation.
//!
//! `tilde` adds a flag sort with constants `t ≠ f` and one liveness array
//! per memory sort. Everything is relativised to live indices: the unsafe
//! formulae, the initial arrays, the guards and the array updates (dead
//! cells keep their value). A crash transition may mark any live index as
//! dead.
//!
//! `hat` then replaces each universal guard `∀k (A(k) ⇒ γᵤ)` by its
//! instances over the transition's own indices. Cells that violate `γᵤ`
//! are not updated and are marked dead instead, which is what makes the
//! result safe-preserving: a SAFE verdict for the output carries over to
//! the input.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::formula::{ident, substitute_unchecked, Formula, Ident, Sort, SortKind, Subst, Term, Var};
use crate::spec::{
    print_spec, ArrayDecl, ArrayUpdate, ElemConsts, Invariant, NamedFormula, RabSpec, TransitionRule, UniversalGuard,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("spec already has liveness arrays")]
    AlreadyRelativised,
    #[error("not the output of the liveness transformation: {0}")]
    Shape(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformOutput {
    pub spec: RabSpec,
    pub elem_sort: Ident,
    /// Liveness array per memory sort.
    pub alive: Vec<(Sort, Ident)>,
    /// Added crash transitions, one per memory sort.
    pub crash: Vec<Ident>,
    /// Original transition names and their names in the output.
    pub names: Vec<(Ident, Ident)>,
}

/// Deterministic fresh names that avoid every symbol already in use.
struct Names(BTreeSet<String>);

impl Names {
    fn of(spec: &RabSpec) -> Names {
        let text = print_spec(spec);
        let used = text
            .split(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        Names(used)
    }

    fn fresh(&mut self, base: &str) -> Ident {
        let mut name = base.to_string();
        let mut n = 0;
        while self.0.contains(&name) {
            n += 1;
            name = format!("{base}_{n}");
        }
        self.0.insert(name.clone());
        ident(&name)
    }
}

fn select(a: &ArrayDecl, at: Term) -> Term {
    Term::Select { array: a.name.clone(), index: Box::new(at), sort: a.elem.clone() }
}

/// `A(vs)`: every index in `vs` with a liveness array is live.
fn live(spec: &RabSpec, vs: &[Var]) -> Vec<Formula> {
    vs.iter().filter_map(|v| spec.alive_atom(&Term::var(v))).collect()
}

fn relativize_exists(spec: &RabSpec, f: &Formula) -> Formula {
    match f {
        Formula::Exists(vs, b) => {
            let mut parts = live(spec, vs);
            parts.push(relativize_exists(spec, b));
            Formula::Exists(vs.clone(), Box::new(Formula::and(parts)))
        }
        Formula::And(v) => Formula::And(v.iter().map(|g| relativize_exists(spec, g)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| relativize_exists(spec, g)).collect()),
        other => other.clone(),
    }
}

/// `∀i φ` becomes `∀i (A(i) ⇒ φ)`; `spec` must carry the liveness arrays.
pub fn relativize_invariant(spec: &RabSpec, inv: &Invariant) -> Invariant {
    let a = live(spec, &inv.vars);
    let body = if a.is_empty() { inv.body.clone() } else { Formula::implies(Formula::and(a), inv.body.clone()) };
    Invariant { name: inv.name.clone(), vars: inv.vars.clone(), body }
}

fn flag(spec: &RabSpec, which: bool) -> Term {
    let s = spec.elem_sort().expect("flag sort present");
    let c = &spec.signature.elem_consts[&s.name];
    Term::Const(if which { c.t.clone() } else { c.f.clone() }, s)
}

/// `case (κ₁ ∧ β = t : t₁) ... (β = t : default) (else : a[y])`.
fn relativize_update(spec: &RabSpec, decl: &ArrayDecl, u: &ArrayUpdate) -> ArrayUpdate {
    let alive = spec.alive_array(&decl.index).expect("every memory sort has a liveness array");
    let y = Term::var(&u.param);
    let on = Formula::eq(select(alive, y.clone()), flag(spec, true));
    let mut branches: Vec<(Formula, Term)> = Vec::new();
    let last = match &u.body {
        Term::Case { branches: bs, default } => {
            for (k, t) in bs {
                branches.push((Formula::and(vec![k.clone(), on.clone()]), t.clone()));
            }
            (**default).clone()
        }
        t => t.clone(),
    };
    branches.push((on, last));
    ArrayUpdate {
        array: u.array.clone(),
        param: u.param.clone(),
        body: Term::Case { branches, default: Box::new(select(decl, y)) },
    }
}

/// Add liveness arrays and the crash transitions, and relativise.
pub fn tilde(spec: &RabSpec) -> Result<TransformOutput, TransformError> {
    if !spec.alive.is_empty() {
        return Err(TransformError::AlreadyRelativised);
    }
    let mut names = Names::of(spec);
    let mut out = spec.clone();
    let elem_name = names.fresh("__elem2");
    let elem = Sort { name: elem_name.clone(), kind: SortKind::Elem };
    let consts = ElemConsts { t: names.fresh("t"), f: names.fresh("f") };
    out.signature.sorts.push(elem.clone());
    out.signature.elem_consts.insert(elem_name.clone(), consts);
    let mut alive = Vec::new();
    for m in &spec.mem_sorts {
        let name = names.fresh("__alive");
        out.arrays.push(ArrayDecl { name: name.clone(), index: m.clone(), elem: elem.clone() });
        out.alive.push(name.clone());
        alive.push((m.clone(), name));
    }

    let mut transitions = Vec::new();
    for tr in &spec.transitions {
        let mut t = tr.clone();
        let mut guard = live(&out, &tr.index_vars);
        guard.push(tr.guard.clone());
        t.guard = Formula::and(guard);
        if let Some(u) = &tr.universal {
            let a = live(&out, std::slice::from_ref(&u.var));
            t.universal = Some(UniversalGuard {
                var: u.var.clone(),
                guard: Formula::implies(Formula::and(a), u.guard.clone()),
            });
        }
        t.array_updates = tr
            .array_updates
            .iter()
            .map(|u| relativize_update(&out, spec.array(&u.array).expect("validated"), u))
            .collect();
        transitions.push(t);
    }
    let mut crash = Vec::new();
    for (m, a) in &alive {
        let name = names.fresh("__crash");
        let e = Var { name: names.fresh("e"), sort: m.clone() };
        let y = Var { name: names.fresh("y"), sort: m.clone() };
        let decl = out.array(a).expect("just added").clone();
        transitions.push(TransitionRule {
            name: name.clone(),
            index_vars: vec![e.clone()],
            data_vars: vec![],
            guard: Formula::and(live(&out, std::slice::from_ref(&e))),
            universal: None,
            var_updates: vec![],
            array_updates: vec![ArrayUpdate {
                array: a.clone(),
                param: y.clone(),
                body: Term::Case {
                    branches: vec![(Formula::eq(Term::var(&y), Term::var(&e)), flag(&out, false))],
                    default: Box::new(select(&decl, Term::var(&y))),
                },
            }],
        });
        crash.push(name);
    }
    out.transitions = transitions;
    out.unsafe_props = spec
        .unsafe_props
        .iter()
        .map(|u| NamedFormula { name: u.name.clone(), formula: relativize_exists(&out, &u.formula) })
        .collect();
    out.invariants = spec.invariants.iter().map(|i| relativize_invariant(&out, i)).collect();
    let names = spec.transitions.iter().map(|t| (t.name.clone(), t.name.clone())).collect();
    Ok(TransformOutput { spec: out, elem_sort: elem_name, alive, crash, names })
}

fn instance(g: &Formula, k: &Var, at: &Var) -> Formula {
    let mut s = Subst::new();
    s.insert(k.clone(), Term::var(at));
    substitute_unchecked(g, &s)
}

/// Replace universal guards by their instances over the transition's
/// indices, marking violating cells dead.
pub fn hat(t: &TransformOutput) -> Result<RabSpec, TransformError> {
    let spec = &t.spec;
    let mut out = spec.clone();
    for tr in &mut out.transitions {
        if t.crash.contains(&tr.name) {
            continue;
        }
        let Some(u) = tr.universal.take() else { continue };
        let Formula::Implies(a, g) = &u.guard else {
            return Err(TransformError::Shape(format!("universal guard of `{}` is not relativised", tr.name)));
        };
        if spec.alive_atom(&Term::var(&u.var)).as_ref() != Some(&**a) {
            return Err(TransformError::Shape(format!("universal guard of `{}` is not relativised", tr.name)));
        }
        let k = &u.var;
        let mut guard = vec![tr.guard.clone()];
        guard.extend(tr.index_vars.iter().filter(|e| e.sort == k.sort).map(|e| instance(g, k, e)));
        tr.guard = Formula::and(guard);

        for up in &mut tr.array_updates {
            let decl = spec.array(&up.array).expect("validated");
            if decl.index != k.sort {
                continue;
            }
            let Term::Case { branches, default } = &up.body else {
                return Err(TransformError::Shape(format!("update of `{}` in `{}` is not relativised", up.array, tr.name)));
            };
            let holds = instance(g, k, &up.param);
            up.body = Term::Case {
                branches: branches.iter().map(|(c, v)| (Formula::and(vec![c.clone(), holds.clone()]), v.clone())).collect(),
                default: default.clone(),
            };
        }

        let (_, alive_name) = t
            .alive
            .iter()
            .find(|(m, _)| *m == k.sort)
            .ok_or_else(|| TransformError::Shape(format!("no liveness array for sort {}", k.sort)))?;
        let decl = spec.array(alive_name).expect("declared").clone();
        let mut taken: BTreeSet<Ident> = tr.index_vars.iter().chain(&tr.data_vars).map(|v| v.name.clone()).collect();
        taken.insert(k.name.clone());
        let mut y = ident("y");
        let mut n = 0;
        while taken.contains(&y) || spec.symbol_kind(&y).is_some() {
            n += 1;
            y = ident(&format!("y_{n}"));
        }
        let y = Var { name: y, sort: k.sort.clone() };
        let beta = select(&decl, Term::var(&y));
        let dead = Formula::or(vec![
            Formula::eq(beta.clone(), flag(spec, false)),
            Formula::not(instance(g, k, &y)),
        ]);
        tr.array_updates.push(ArrayUpdate {
            array: alive_name.clone(),
            param: y,
            body: Term::Case { branches: vec![(dead, flag(spec, false))], default: Box::new(beta) },
        });
    }
    Ok(out)
}

/// `hat(tilde(spec))`.
pub fn eliminate_universal_guards(spec: &RabSpec) -> Result<(TransformOutput, RabSpec), TransformError> {
    let t = tilde(spec)?;
    let h = hat(&t)?;
    Ok((t, h))
}
