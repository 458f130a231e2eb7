//! Golden files and structural checks for the liveness transformation.
//!
//! Goldens live in `corpus/golden`; set `RABMC_BLESS=1` to rewrite them
//! after a deliberate change, then review the diff by hand.

use std::fs;
use std::path::PathBuf;

use rabmc::formula::{Formula, Term};
use rabmc::spec::{parse, print_spec, validate, Invariant, RabSpec, Severity};
use rabmc::transform::{eliminate_universal_guards, hat, relativize_invariant, tilde, TransformError};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(name: &str) -> RabSpec {
    parse(&fs::read_to_string(corpus_dir().join(name)).unwrap()).unwrap()
}

fn golden(file: &str, actual: &str) {
    let path = corpus_dir().join("golden").join(file);
    if std::env::var_os("RABMC_BLESS").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{} differs from the output:\n{actual}", path.display());
}

const GOLDEN: [&str; 3] = ["batch", "visa", "bank"];

#[test]
fn goldens_match_byte_for_byte() {
    for name in GOLDEN {
        let spec = load(&format!("{name}.rab"));
        let (t, h) = eliminate_universal_guards(&spec).unwrap();
        golden(&format!("{name}.tilde.rab"), &print_spec(&t.spec));
        golden(&format!("{name}.hat.rab"), &print_spec(&h));
    }
}

#[test]
fn outputs_validate_and_round_trip() {
    for name in GOLDEN {
        let (t, h) = eliminate_universal_guards(&load(&format!("{name}.rab"))).unwrap();
        for s in [&t.spec, &h] {
            let errs: Vec<_> = validate(s).into_iter().filter(|d| d.severity == Severity::Error).collect();
            assert!(errs.is_empty(), "{name}: {errs:?}");
            let text = print_spec(s);
            let again = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(&again, s, "{name}");
            assert_eq!(print_spec(&again), text);
        }
    }
}

#[test]
fn one_crash_transition_per_memory_sort() {
    for name in GOLDEN {
        let spec = load(&format!("{name}.rab"));
        let t = tilde(&spec).unwrap();
        assert_eq!(t.spec.transitions.len(), spec.transitions.len() + spec.mem_sorts.len());
        assert_eq!(t.crash.len(), spec.mem_sorts.len());
        assert_eq!(t.alive.len(), spec.mem_sorts.len());
        assert_eq!(t.spec.arrays.len(), spec.arrays.len() + spec.mem_sorts.len());
    }
}

#[test]
fn hat_removes_every_universal_guard() {
    for name in GOLDEN {
        let (t, h) = eliminate_universal_guards(&load(&format!("{name}.rab"))).unwrap();
        assert!(!h.has_universal_guards());
        assert_eq!(h.transitions.len(), t.spec.transitions.len());
        for c in &t.crash {
            assert_eq!(h.transition(c), t.spec.transition(c), "crash transitions are copied");
        }
    }
}

#[test]
fn refuse_all_guard_is_relativised() {
    let spec = load("visa.rab");
    let t = tilde(&spec).unwrap();
    let tr = t.spec.transition("refuse-all").unwrap();
    let u = tr.universal.as_ref().unwrap();
    let alive = t.spec.alive_atom(&Term::var(&u.var)).unwrap();
    let orig = spec.transition("refuse-all").unwrap().universal.as_ref().unwrap();
    assert_eq!(u.guard, Formula::implies(alive, orig.guard.clone()));
}

#[test]
fn transitions_without_universal_guards_keep_the_flag() {
    let (t, h) = eliminate_universal_guards(&load("bank.rab")).unwrap();
    assert_eq!(h, t.spec);
    let (t, h) = eliminate_universal_guards(&load("visa.rab")).unwrap();
    for tr in &t.spec.transitions {
        if tr.universal.is_none() {
            assert_eq!(h.transition(&tr.name), Some(tr), "{}", tr.name);
        }
    }
}

#[test]
fn hat_rejects_other_input() {
    let spec = load("visa.rab");
    let mut t = tilde(&spec).unwrap();
    let tr = t.spec.transitions.iter_mut().find(|tr| tr.universal.is_some()).unwrap();
    tr.universal = spec.transition(&tr.name).unwrap().universal.clone();
    assert!(matches!(hat(&t), Err(TransformError::Shape(_))));
    let t = tilde(&spec).unwrap();
    assert_eq!(tilde(&t.spec), Err(TransformError::AlreadyRelativised));
}

#[test]
fn fresh_names_avoid_collisions() {
    let src = fs::read_to_string(corpus_dir().join("batch.rab")).unwrap().replace("(var phase S)", "(var phase S)\n(var __alive S)\n(const t S)");
    let spec = parse(&src).unwrap();
    let t = tilde(&spec).unwrap();
    assert_eq!(&*t.alive[0].1, "__alive_1");
    let consts = &t.spec.signature.elem_consts[&t.elem_sort];
    assert_eq!((&*consts.t, &*consts.f), ("t_1", "f"));
}

#[test]
fn invariants_without_index_variables_are_unchanged() {
    let spec = load("visa.rab");
    let t = tilde(&spec).unwrap();
    let inv = spec.invariant("rejected-not-notified").unwrap();
    assert_eq!(&relativize_invariant(&t.spec, inv), inv);
}

#[test]
fn universal_invariants_gain_the_liveness_premise() {
    let spec = load("auction.rab");
    let (t, h) = eliminate_universal_guards(&spec).unwrap();
    let inv = spec.invariant("best-is-max").unwrap();
    let rel = relativize_invariant(&t.spec, inv);
    let alive = t.spec.alive_atom(&Term::var(&inv.vars[0])).unwrap();
    assert_eq!(rel, Invariant { name: inv.name.clone(), vars: inv.vars.clone(), body: Formula::implies(alive, inv.body.clone()) });
    assert_eq!(t.spec.invariant("best-is-max"), Some(&rel));
    assert_eq!(h.invariants, t.spec.invariants, "hat leaves invariants alone");
}
