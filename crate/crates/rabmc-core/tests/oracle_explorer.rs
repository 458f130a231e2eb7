use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use num::BigRational;
use rabmc::formula::{ident, Formula, Sort, SortKind, Term, Var};
use rabmc::oracle::{
    bounded_sat, check_cover_by_extension, enumerate_models, explore, ArithDomain, Bounds, Explorer, Target, Universe,
};
use rabmc::spec::{parse, ElemConsts};

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    fs::read_to_string(p).unwrap()
}

const NO_STEPS: &str = "
(sort S :value)
(const c S)
(var x S)
(init (= x c))
(unsafe bad (not (= x c)))
";

#[test]
fn no_transitions_reach_only_the_initial_state() {
    let spec = parse(NO_STEPS).unwrap();
    let r = explore(&spec, Bounds::default(), 8).unwrap();
    assert_eq!(r.instances, 1);
    assert_eq!(r.states, 1);
    assert!(r.saturated);
    assert!(r.traces.is_empty());
}

// Three transitions move x through a, b, c in order; only the full chain
// reaches c.
const CHAIN: &str = "
(sort S :value)
(const a S)
(const b S)
(const c S)
(var x S)
(init (= x undef))
(transition to-a (exists) (data) (guard (= x undef)) (update (:= x a)))
(transition to-b (exists) (data) (guard (= x a)) (update (:= x b)))
(transition to-c (exists) (data) (guard (= x b)) (update (:= x c)))
(unsafe at-c (= x c))
";

#[test]
fn chain_counterexample_has_depth_three() {
    let spec = parse(CHAIN).unwrap();
    let ex = Explorer::new(&spec, Bounds::default()).unwrap();
    let r = ex.explore(8, None).unwrap();
    let t = r.trace(&Target::Unsafe(ident("at-c"))).expect("reachable");
    let names: Vec<String> = t.transitions().iter().map(|n| n.to_string()).collect();
    assert_eq!(names, ["to-a", "to-b", "to-c"]);
    assert_eq!(t.states.len(), 4);
    assert!(ex.render(t).contains("--to-c()-->"));
    // too shallow
    assert!(ex.explore(2, None).unwrap().traces.is_empty());
    // replaying the found sequence finds it again; a wrong order does not
    let seq = t.transitions();
    assert!(!ex.explore(0, Some(&seq)).unwrap().traces.is_empty());
    let wrong = vec![ident("to-a"), ident("to-c"), ident("to-b")];
    assert!(ex.explore(0, Some(&wrong)).unwrap().traces.is_empty());
}

#[test]
fn visa_has_no_counterexample_to_depth_eight() {
    let spec = parse(&corpus("visa.rab")).unwrap();
    let bounds = Bounds { id_extra: 2, index: 2, ..Bounds::default() };
    let r = explore(&spec, bounds, 8).unwrap();
    assert!(r.traces.is_empty(), "{:?}", r.traces);
    assert!(r.states > 1);
}

fn elem_sort() -> (Sort, BTreeMap<rabmc::formula::Ident, ElemConsts>) {
    let mut m = BTreeMap::new();
    m.insert(ident("Flag"), ElemConsts { t: ident("t"), f: ident("f") });
    (Sort::new("Flag", SortKind::Elem), m)
}

#[test]
fn distinct_flag_constants_have_no_model() {
    let (flag, m) = elem_sort();
    let f = Formula::eq(Term::constant("t", &flag), Term::constant("f", &flag));
    let uni = Universe::for_formulas(&[&f], Bounds::default(), &m);
    assert!(enumerate_models(&f, &uni).unwrap().is_empty());
    assert!(!bounded_sat(&f, &uni).unwrap());
}

#[test]
fn defined_values_are_the_constant_and_the_extras() {
    // carrier: undef, c, one extra element
    let s = Sort::new("S", SortKind::Value);
    let x = Var::new("x", s.clone());
    let f = Formula::and(vec![
        Formula::neq(Term::var(&x), Term::undef(&s)),
        Formula::eq(Term::constant("c", &s), Term::constant("c", &s)),
    ]);
    let bounds = Bounds { value_extra: 1, ..Bounds::default() };
    let uni = Universe::for_formulas(&[&f], bounds, &BTreeMap::new());
    assert_eq!(enumerate_models(&f, &uni).unwrap().len(), 2);
}

#[test]
fn undef_axiom_holds_in_every_enumerated_table() {
    let p = Sort::new("P", SortKind::Id);
    let d = Sort::new("D", SortKind::Value);
    let x = Var::new("x", p.clone());
    let f = Formula::and(vec![
        Formula::eq(Term::var(&x), Term::undef(&p)),
        Formula::neq(Term::app("g", Term::var(&x), &d), Term::undef(&d)),
    ]);
    let uni = Universe::for_formulas(&[&f], Bounds::default(), &BTreeMap::new());
    assert!(!bounded_sat(&f, &uni).unwrap());
}

fn small() -> Bounds {
    Bounds { id_extra: 3, value_extra: 3, arith: ArithDomain::Range(-4, 4), ..Bounds::default() }
}

#[test]
fn congruence_cover_extends() {
    // f maps ids to integers, so f(undef) is unconstrained
    let p = Sort::new("P", SortKind::Id);
    let int = Sort::int();
    let d = Var::new("d", p.clone());
    let w = Var::new("w", p);
    let u = Var::new("u", int.clone());
    let v = Var::new("v", int.clone());
    let phi = Formula::and(vec![
        Formula::eq(Term::var(&u), Term::app("f", Term::var(&d), &int)),
        Formula::eq(Term::var(&v), Term::app("f", Term::var(&d), &int)),
        Formula::neq(Term::var(&d), Term::var(&w)),
    ]);
    let good = Formula::eq(Term::var(&u), Term::var(&v));
    let bad = Formula::neq(Term::var(&u), Term::var(&v));
    let m = BTreeMap::new();
    let b = Bounds { id_extra: 1, arith: ArithDomain::Range(-1, 1), ..small() };
    assert!(check_cover_by_extension(&phi, std::slice::from_ref(&d), &good, &b, &m).unwrap());
    assert!(!check_cover_by_extension(&phi, std::slice::from_ref(&d), &bad, &b, &m).unwrap());
    assert!(!check_cover_by_extension(&phi, &[d], &Formula::True, &b, &m).unwrap());
}

#[test]
fn disequality_with_a_fresh_element_is_free() {
    let s = Sort::new("S", SortKind::Value);
    let d = Var::new("d", s.clone());
    let y = Var::new("y", s);
    let phi = Formula::neq(Term::var(&d), Term::var(&y));
    assert!(check_cover_by_extension(&phi, &[d], &Formula::True, &small(), &BTreeMap::new()).unwrap());
}

#[test]
fn integer_gap_needs_distance_two() {
    let int = Sort::int();
    let d = Var::new("d", int.clone());
    let y = Var::new("y", int.clone());
    let z = Var::new("z", int.clone());
    let phi = Formula::and(vec![Formula::Lt(Term::var(&y), Term::var(&d)), Formula::Lt(Term::var(&d), Term::var(&z))]);
    let y_plus_2 = rabmc::formula::LinExpr::build(
        int.clone(),
        vec![(BigRational::from_integer(1.into()), Term::var(&y))],
        BigRational::from_integer(2.into()),
    );
    let exact = Formula::Le(y_plus_2, Term::var(&z));
    let weak = Formula::Lt(Term::var(&y), Term::var(&z));
    let m = BTreeMap::new();
    assert!(check_cover_by_extension(&phi, std::slice::from_ref(&d), &exact, &small(), &m).unwrap());
    assert!(!check_cover_by_extension(&phi, &[d], &weak, &small(), &m).unwrap());
}
