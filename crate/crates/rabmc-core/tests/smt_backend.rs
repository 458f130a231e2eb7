use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rabmc::formula::{ident, Formula, Sort, SortKind, Term, Var};
use rabmc::smt::{ExistsForall, Session, SmtError, SolverConfig, Verdict};
use rabmc::spec::{parse, ElemConsts};

fn session() -> Session {
    Session::new(SolverConfig::resolve(None).expect("solver")).unwrap()
}

fn value(n: &str) -> Sort {
    Sort::new(n, SortKind::Value)
}

#[test]
fn flag_constants_differ() {
    let flag = Sort::new("Flag", SortKind::Elem);
    let mut s = session();
    let mut m = BTreeMap::new();
    m.insert(ident("Flag"), ElemConsts { t: ident("t"), f: ident("f") });
    s.register_elem_sorts(&m);
    let f = Formula::eq(Term::constant("t", &flag), Term::constant("f", &flag));
    assert_eq!(s.check_sat_qf(&f).unwrap(), Verdict::Unsat);
}

#[test]
fn undef_axiom_is_enforced() {
    let id = Sort::new("P", SortKind::Id);
    let d = value("D");
    let x = Var::new("x", id.clone());
    let f = Formula::and(vec![
        Formula::eq(Term::var(&x), Term::undef(&id)),
        Formula::neq(Term::app("g", Term::var(&x), &d), Term::undef(&d)),
    ]);
    assert_eq!(session().check_sat_qf(&f).unwrap(), Verdict::Unsat);
    let f = Formula::and(vec![
        Formula::neq(Term::var(&x), Term::undef(&id)),
        Formula::eq(Term::app("g", Term::var(&x), &d), Term::undef(&d)),
    ]);
    assert_eq!(session().check_sat_qf(&f).unwrap(), Verdict::Unsat);
}

#[test]
fn constants_are_distinct_from_each_other_and_from_undef() {
    let d = value("D");
    let mut s = session();
    let f = Formula::eq(Term::constant("c1", &d), Term::constant("c2", &d));
    assert_eq!(s.check_sat_qf(&f).unwrap(), Verdict::Unsat);
    let f = Formula::eq(Term::constant("c1", &d), Term::undef(&d));
    assert_eq!(s.check_sat_qf(&f).unwrap(), Verdict::Unsat);
}

#[test]
fn strict_order_cycle_is_unsat() {
    let r = Sort::real();
    let y = Var::new("y", r.clone());
    let z = Var::new("z", r);
    let f = Formula::and(vec![
        Formula::Lt(Term::var(&y), Term::var(&z)),
        Formula::Lt(Term::var(&z), Term::var(&y)),
    ]);
    assert_eq!(session().check_sat_qf(&f).unwrap(), Verdict::Unsat);
}

#[test]
fn exists_forall_examples() {
    let e = Sort::new("E", SortKind::Memory);
    let d = value("D");
    let ev = Var::new("e", e.clone());
    let k = Var::new("k", e);
    let c = Term::constant("c", &d);
    let cell = |v: &Var| Term::select("a", Term::var(v), &d);
    let mut s = session();

    let q = ExistsForall {
        exists: vec![ev.clone()],
        forall: vec![k.clone()],
        matrix: Formula::and(vec![Formula::eq(cell(&k), c.clone()), Formula::neq(cell(&ev), c.clone())]),
    };
    assert_eq!(s.decide_exists_forall(&q).unwrap(), Verdict::Unsat);

    let q = ExistsForall {
        exists: vec![ev.clone()],
        forall: vec![k.clone()],
        matrix: Formula::and(vec![
            Formula::eq(cell(&ev), c.clone()),
            Formula::implies(Formula::eq(Term::var(&k), Term::var(&ev)), Formula::eq(cell(&k), c.clone())),
        ]),
    };
    assert_eq!(s.decide_exists_forall(&q).unwrap(), Verdict::Sat);

    // The fresh index witnesses cells not named elsewhere.
    let q = Formula::and(vec![
        Formula::forall(vec![k.clone()], Formula::eq(cell(&k), c.clone())),
        Formula::not(Formula::forall(vec![k.clone()], Formula::eq(cell(&k), c.clone()))),
    ]);
    assert_eq!(s.check_sat(&q).unwrap(), Verdict::Unsat);
    let q = Formula::not(Formula::forall(vec![k.clone()], Formula::eq(cell(&k), c)));
    assert_eq!(s.check_sat(&q).unwrap(), Verdict::Sat);
}

#[test]
fn universal_over_data_is_outside_the_fragment() {
    let d = value("D");
    let x = Var::new("x", d.clone());
    let f = Formula::forall(vec![x.clone()], Formula::eq(Term::var(&x), Term::undef(&d)));
    assert!(matches!(session().check_sat(&f), Err(SmtError::Fragment(_))));
}

fn visa() -> rabmc::spec::RabSpec {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/visa.rab");
    parse(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn initial_formula_entails_its_assignments() {
    let spec = visa();
    let mut s = Session::for_spec(SolverConfig::resolve(None).unwrap(), &spec).unwrap();
    let init = spec.init_formula();
    let p = spec.var("pState").unwrap();
    let goal = Formula::eq(Term::State(p.name.clone(), p.sort.clone()), Term::undef(&p.sort));
    assert!(s.check_entailment(&init, &goal).unwrap());
    let wrong = Formula::eq(Term::State(p.name.clone(), p.sort.clone()), Term::constant("enabled", &p.sort));
    assert!(!s.check_entailment(&init, &wrong).unwrap());
}

#[test]
fn initial_formula_entails_visa_invariant() {
    let spec = visa();
    let mut s = Session::for_spec(SolverConfig::resolve(None).unwrap(), &spec).unwrap();
    let inv = spec.invariant("rejected-not-notified").unwrap().to_formula();
    assert!(s.check_entailment(&spec.init_formula(), &inv).unwrap());
}

#[test]
fn logged_queries_replay_identically() {
    let cfg = SolverConfig::resolve(None).unwrap();
    let mut s = Session::new(cfg.clone()).unwrap();
    s.enable_log();
    let d = value("D");
    let x = Var::new("x", d.clone());
    for c in ["c1", "c2"] {
        let f = Formula::eq(Term::var(&x), Term::constant(c, &d));
        s.check_sat_qf(&f).unwrap();
        let f = Formula::and(vec![f.clone(), Formula::eq(Term::var(&x), Term::undef(&d))]);
        s.check_sat_qf(&f).unwrap();
    }
    let log = s.take_log();
    assert_eq!(log.len(), 4);
    let replayed = Session::replay(&cfg, &log).unwrap();
    assert_eq!(replayed, log.iter().map(|q| q.verdict).collect::<Vec<_>>());
    assert_eq!(s.stats().queries, 4);
}
