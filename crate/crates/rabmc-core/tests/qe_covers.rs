mod common;

use std::collections::BTreeMap;

use num::BigRational;
use proptest::prelude::*;
use rabmc::covers::{cover, CoverConfig, LiaMode};
use rabmc::formula::{ident, Formula, LinExpr, Sort, Term, Var};
use rabmc::smt::{Session, SolverConfig};

use common::{check_cover_task, cover_task, id_sort, rng, value_sort};

fn session() -> Session {
    Session::new(SolverConfig::resolve(None).expect("solver")).unwrap()
}

#[test]
fn random_tasks_are_sound_and_exact() {
    let mut s = session();
    let mut exact = 0;
    for seed in 0..40 {
        let t = cover_task(&mut rng(seed));
        match check_cover_task(&t, &mut s) {
            Ok(c) => exact += usize::from(!c.approximate),
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(exact > 0);
}

#[test]
fn congruence_merges_equal_arguments() {
    let p = id_sort();
    let int = Sort::int();
    let d = Var::new("d", p.clone());
    let w = Var::new("w", p);
    let u = Var::new("u", int.clone());
    let v = Var::new("v", int.clone());
    let lits = vec![
        Formula::eq(Term::var(&u), Term::app("f", Term::var(&d), &int)),
        Formula::eq(Term::var(&v), Term::app("f", Term::var(&d), &int)),
        Formula::neq(Term::var(&d), Term::var(&w)),
    ];
    let c = cover(&lits, &[d], &BTreeMap::new(), &CoverConfig::default()).unwrap();
    assert!(!c.approximate);
    let mut s = session();
    let uv = Formula::eq(Term::var(&u), Term::var(&v));
    assert!(s.check_entailment(&c.to_formula(), &uv).unwrap());
    assert!(s.check_entailment(&uv, &c.to_formula()).unwrap());
}

#[test]
fn literals_without_eliminated_variables_are_kept() {
    let dv = value_sort();
    let u = Term::var(&Var::new("u", dv.clone()));
    let v = Term::var(&Var::new("v", dv.clone()));
    let lits = vec![Formula::neq(u.clone(), v.clone()), Formula::eq(u, Term::constant("c", &dv))];
    let d = Var::new("d", id_sort());
    let c = cover(&lits, &[d], &BTreeMap::new(), &CoverConfig::default()).unwrap();
    assert!(!c.approximate);
    let mut s = session();
    let phi = Formula::and(lits);
    assert!(s.check_entailment(&phi, &c.to_formula()).unwrap());
    assert!(s.check_entailment(&c.to_formula(), &phi).unwrap());
}

fn lin(t: &Var, k: i64, c: i64) -> Term {
    LinExpr::build(
        Sort::int(),
        vec![(BigRational::from_integer(k.into()), Term::var(t))],
        BigRational::from_integer(c.into()),
    )
}

#[test]
fn integer_gap_is_exact_under_cooper() {
    let int = Sort::int();
    let (n, y, z) = (Var::new("n", int.clone()), Var::new("y", int.clone()), Var::new("z", int));
    let lits = vec![Formula::Lt(Term::var(&y), Term::var(&n)), Formula::Lt(Term::var(&n), Term::var(&z))];
    let c = cover(&lits, std::slice::from_ref(&n), &BTreeMap::new(), &CoverConfig::default()).unwrap();
    assert!(!c.approximate);
    let gap = Formula::Le(lin(&y, 1, 2), Term::var(&z));
    let mut s = session();
    assert!(s.check_entailment(&c.to_formula(), &gap).unwrap());
    assert!(s.check_entailment(&gap, &c.to_formula()).unwrap());
    // the shadow fallback keeps only y < z and says so
    let cfg = CoverConfig { lia: LiaMode::Instantiate, ..CoverConfig::default() };
    let c = cover(&lits, &[n], &BTreeMap::new(), &cfg).unwrap();
    assert!(c.approximate);
    assert!(s.check_entailment(&Formula::and(lits), &c.to_formula()).unwrap());
}

#[test]
fn divisibility_is_exact() {
    // ∃n. y = 3n  ⟺  3 | y
    let int = Sort::int();
    let (n, y) = (Var::new("n", int.clone()), Var::new("y", int));
    let lits = vec![Formula::eq(Term::var(&y), lin(&n, 3, 0))];
    let c = cover(&lits, &[n], &BTreeMap::new(), &CoverConfig::default()).unwrap();
    assert!(!c.approximate);
    let dvd = Formula::Divides(3.into(), Term::var(&y));
    let mut s = session();
    assert!(s.check_entailment(&c.to_formula(), &dvd).unwrap());
    assert!(s.check_entailment(&dvd, &c.to_formula()).unwrap());
}

#[test]
fn large_moduli_fall_back_and_flag_it() {
    let int = Sort::int();
    let (n, y, z) = (Var::new("n", int.clone()), Var::new("y", int.clone()), Var::new("z", int));
    let lits = vec![Formula::Le(Term::var(&y), lin(&n, 17, 0)), Formula::Le(lin(&n, 17, 0), Term::var(&z))];
    let cfg = CoverConfig { max_modulus: 4, ..CoverConfig::default() };
    let c = cover(&lits, &[n], &BTreeMap::new(), &cfg).unwrap();
    assert!(c.approximate);
    let mut s = session();
    assert!(s.check_entailment(&Formula::and(lits), &c.to_formula()).unwrap());
}

#[test]
fn relations_on_eliminated_variables_are_flagged() {
    let p = id_sort();
    let d = Var::new("d", p.clone());
    let w = Var::new("w", p);
    let lits = vec![
        Formula::Rel(ident("R"), vec![Term::var(&d), Term::var(&w)]),
        Formula::neq(Term::var(&w), Term::undef(&w.sort)),
    ];
    let c = cover(&lits, &[d], &BTreeMap::new(), &CoverConfig::default()).unwrap();
    assert!(c.approximate);
    let mut s = session();
    assert!(s.check_entailment(&Formula::and(lits), &c.to_formula()).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seeded_tasks_pass_both_checks(seed in any::<u64>()) {
        let mut s = session();
        let t = cover_task(&mut rng(seed));
        if let Err(e) = check_cover_task(&t, &mut s) {
            prop_assert!(false, "seed {}: {}", seed, e);
        }
    }

    #[test]
    fn cover_is_idempotent(seed in any::<u64>()) {
        let mut s = session();
        let t = cover_task(&mut rng(seed));
        let cfg = CoverConfig::default();
        let once = cover(&t.literals, &t.eliminate, &BTreeMap::new(), &cfg).unwrap();
        prop_assume!(!once.approximate);
        for disjunct in &once.disjuncts {
            let twice = cover(disjunct, &t.eliminate, &BTreeMap::new(), &cfg).unwrap();
            let a = Formula::and(disjunct.clone());
            prop_assert!(s.check_entailment(&a, &twice.to_formula()).unwrap());
            prop_assert!(s.check_entailment(&twice.to_formula(), &a).unwrap());
        }
    }
}
