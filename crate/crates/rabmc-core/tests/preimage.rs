mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use rabmc::covers::CoverConfig;
use rabmc::formula::{ident, Cube, Formula, Sort, SortKind, Term, Var};
use rabmc::preimage::{inst_pre, inst_pre_cubes, pre, raw_cubes};
use rabmc::smt::{Session, SolverConfig, Verdict};
use rabmc::spec::{parse, RabSpec};

fn session() -> Session {
    Session::new(SolverConfig::resolve(None).expect("solver")).unwrap()
}

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    fs::read_to_string(p).unwrap()
}

fn unsafe_cube(spec: &RabSpec, name: &str) -> Cube {
    let f = &spec.unsafe_prop(name).unwrap().formula;
    let mut cubes = raw_cubes(f).unwrap();
    assert_eq!(cubes.len(), 1);
    cubes.pop().unwrap()
}

fn body(f: &Formula) -> Formula {
    match f {
        Formula::Exists(_, b) => (**b).clone(),
        other => other.clone(),
    }
}

const IDLE: &str = "
(sort D :value)
(mem-sort M)
(const c D)
(var x D)
(arr a M -> D)
(transition idle (exists) (data) (guard true) (update))
(unsafe bad (exists ((i M)) (and (= (select a i) c) (not (= x c)))))
";

#[test]
fn identity_transition_gives_back_the_target() {
    let spec = parse(IDLE).unwrap();
    let c = unsafe_cube(&spec, "bad");
    let p = pre(&spec.transitions[0], &c);
    let back = raw_cubes(&p).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].normalize(), c.normalize());
}

#[test]
fn notify_cannot_reach_a_rejected_notification() {
    let spec = parse(&corpus("visa.rab")).unwrap();
    let c = unsafe_cube(&spec, "rejected-notified");
    let tr = spec.transition("notify").unwrap();
    let mut s = Session::for_spec(SolverConfig::resolve(None).unwrap(), &spec).unwrap();
    assert_eq!(s.check_sat(&pre(tr, &c)).unwrap(), Verdict::Unsat);
    let cubes = inst_pre_cubes(tr, &c, &spec.signature.elem_consts, &CoverConfig::default()).unwrap();
    for cube in &cubes.cubes {
        assert_eq!(s.check_sat(&cube.to_formula()).unwrap(), Verdict::Unsat, "{cube:?}");
    }
}

#[test]
fn bulk_evaluation_splits_on_the_score() {
    let spec = parse(&corpus("visa.rab")).unwrap();
    let int = Sort::int();
    let m = Sort::new("appIndex", SortKind::Memory);
    let string = Sort::new("String", SortKind::Value);
    let i = Var::new("i", m);
    let cell = Term::select("appResult", Term::var(&i), &string);
    let c = Cube::new(vec![i.clone()], vec![Formula::eq(cell, Term::constant("approved", &string))]);
    let tr = spec.transition("evaluate").unwrap();
    let cubes = raw_cubes(&pre(tr, &c)).unwrap();
    let score = Term::select("appScore", Term::var(&i), &int);
    let mentions_score = |cube: &Cube| cube.literals.iter().any(|l| l.any_term(&mut |t| *t == score));
    assert!(!cubes.is_empty());
    assert!(cubes.iter().all(mentions_score));
}

#[test]
fn refuse_all_instantiates_over_the_target_index() {
    let spec = parse(&corpus("visa.rab")).unwrap();
    let m = Sort::new("appIndex", SortKind::Memory);
    let string = Sort::new("String", SortKind::Value);
    let stage = Sort::new("Stage", SortKind::Value);
    let i = Var::new("i", m);
    let c = Cube::new(
        vec![i.clone()],
        vec![Formula::eq(Term::state("pState", &stage), Term::constant("no-visa", &stage))],
    );
    let tr = spec.transition("refuse-all").unwrap();
    let f = inst_pre(tr, &c);
    assert!(f.is_quantifier_free() || matches!(&f, Formula::Exists(_, b) if b.is_quantifier_free()));
    let expect = Formula::not(Formula::eq(
        Term::select("appResult", Term::var(&i), &string),
        Term::constant("approved", &string),
    ));
    let Formula::And(parts) = body(&f) else { panic!("{f}") };
    assert!(parts.contains(&expect), "{f}");
}

#[test]
fn insert_substitution_matches_hand_expansion() {
    // applicant'[i2] = w under insert is
    // (i2 = i ∧ a = w) ∨ (i2 ≠ i ∧ applicant[i2] = w)
    let spec = parse(&corpus("visa.rab")).unwrap();
    let m = Sort::new("appIndex", SortKind::Memory);
    let nin = Sort::new("NIN", SortKind::Id);
    let i2 = Var::new("i2", m.clone());
    let w = Term::state("toNotify", &nin);
    let c = Cube::new(vec![i2.clone()], vec![Formula::eq(Term::select("applicant", Term::var(&i2), &nin), w.clone())]);
    let tr = spec.transition("insert").unwrap();
    let got = body(&pre(tr, &c));
    let i = Term::var(&Var::new("i", m));
    let a = Term::var(&Var::new("a", nin.clone()));
    let hand = Formula::and(vec![
        tr.guard.clone(),
        Formula::or(vec![
            Formula::and(vec![Formula::eq(Term::var(&i2), i.clone()), Formula::eq(a, w.clone())]),
            Formula::and(vec![
                Formula::neq(Term::var(&i2), i),
                Formula::eq(Term::select("applicant", Term::var(&i2), &nin), w),
            ]),
        ]),
    ]);
    let mut s = Session::for_spec(SolverConfig::resolve(None).unwrap(), &spec).unwrap();
    assert!(s.check_entailment(&got, &hand).unwrap());
    assert!(s.check_entailment(&hand, &got).unwrap());
}

#[test]
fn transition_variables_are_renamed_apart() {
    let spec = parse(&corpus("visa.rab")).unwrap();
    let m = Sort::new("appIndex", SortKind::Memory);
    let nin = Sort::new("NIN", SortKind::Id);
    // the target reuses the transition's index name
    let i = Var::new("i", m);
    let c = Cube::new(vec![i.clone()], vec![Formula::neq(Term::select("applicant", Term::var(&i), &nin), Term::undef(&nin))]);
    let tr = spec.transition("insert").unwrap();
    let Formula::Exists(vars, _) = pre(tr, &c) else { panic!() };
    let names: std::collections::BTreeSet<_> = vars.iter().map(|v| v.name.clone()).collect();
    assert_eq!(names.len(), vars.len());
    assert!(names.contains(&ident("i")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn universal_free_inst_pre_is_pre(seed in any::<u64>()) {
        let spec = parse(&common::random_spec(&mut common::rng(seed), false, 2)).unwrap();
        let cubes = raw_cubes(&spec.unsafe_prop("bad").unwrap().formula).unwrap();
        for (c, tr) in cubes.iter().flat_map(|c| spec.transitions.iter().map(move |t| (c, t))) {
            prop_assert_eq!(pre(tr, c), inst_pre(tr, c));
        }
    }

    #[test]
    fn pre_implies_inst_pre(seed in any::<u64>()) {
        let spec = parse(&common::random_spec(&mut common::rng(seed), true, 2)).unwrap();
        let cubes = raw_cubes(&spec.unsafe_prop("bad").unwrap().formula).unwrap();
        let mut s = Session::for_spec(SolverConfig::resolve(None).unwrap(), &spec).unwrap();
        for (c, tr) in cubes.iter().flat_map(|c| spec.transitions.iter().map(move |t| (c, t))) {
            let exact = body(&pre(tr, c));
            let inst = body(&inst_pre(tr, c));
            prop_assert!(s.check_entailment(&exact, &inst).unwrap(), "{} / {}", exact, inst);
        }
    }
}

#[test]
fn elem_map_is_optional_for_plain_specs() {
    let spec = parse(IDLE).unwrap();
    let c = unsafe_cube(&spec, "bad");
    let r = inst_pre_cubes(&spec.transitions[0], &c, &BTreeMap::new(), &CoverConfig::default()).unwrap();
    assert_eq!(r.cubes, vec![c.normalize().unwrap()]);
    assert!(!r.approximate);
    let _ = session();
}
