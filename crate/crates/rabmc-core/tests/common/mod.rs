//! Random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rabmc::covers::{cover, Cover, CoverConfig};
use rabmc::formula::{Formula, LinExpr, Sort, SortKind, Term, Var};
use rabmc::oracle::{check_cover_by_extension, ArithDomain, Bounds};
use rabmc::smt::Session;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn id_sort() -> Sort {
    Sort::new("P", SortKind::Id)
}

pub fn value_sort() -> Sort {
    Sort::new("D", SortKind::Value)
}

pub fn index_sort() -> Sort {
    Sort::new("M", SortKind::Memory)
}

fn plus(t: Term, k: i64) -> Term {
    LinExpr::build(Sort::int(), vec![(BigRational::from_integer(1.into()), t)], BigRational::from_integer(k.into()))
}

/// `∃ eliminate. ⋀ literals` over `f: P -> D`, `g: P -> P`, `h: P -> Int`
/// and a constant `c: D`.
#[derive(Clone, Debug)]
pub struct CoverTask {
    pub literals: Vec<Formula>,
    pub eliminate: Vec<Var>,
}

pub fn cover_task(r: &mut ChaCha8Rng) -> CoverTask {
    let (p, dv, int) = (id_sort(), value_sort(), Sort::int());
    let d = Var::new("d", p.clone());
    let e = Var::new("e", dv.clone());
    let n = Var::new("n", int.clone());
    let w = Term::var(&Var::new("w", p.clone()));
    let f = |t: Term| Term::app("f", t, &dv);
    let g = |t: Term| Term::app("g", t, &p);
    let h = |t: Term| Term::app("h", t, &int);
    let dt = Term::var(&d);
    let pool_p = vec![dt.clone(), w.clone(), g(dt.clone()), g(w.clone()), Term::undef(&p)];
    let pool_d = vec![
        Term::var(&e),
        Term::var(&Var::new("u", dv.clone())),
        Term::var(&Var::new("v", dv.clone())),
        Term::constant("c", &dv),
        Term::undef(&dv),
        f(dt.clone()),
        f(w.clone()),
        f(g(dt.clone())),
    ];
    let y = Term::var(&Var::new("y", int.clone()));
    let z = Term::var(&Var::new("z", int.clone()));
    let pool_i = vec![
        Term::var(&n),
        y.clone(),
        z.clone(),
        h(dt.clone()),
        h(w.clone()),
        plus(Term::var(&n), 1),
        plus(y, 1),
        Term::int(0),
    ];
    let count = r.gen_range(2..=4);
    let mut literals = Vec::new();
    for _ in 0..count {
        let which = r.gen_range(0..3);
        let pool = [&pool_p, &pool_d, &pool_i][which];
        let a = pool.choose(r).unwrap().clone();
        let b = pool.choose(r).unwrap().clone();
        let l = match (which, r.gen_range(0..4)) {
            (2, 2) => Formula::Lt(a, b),
            (2, 3) => Formula::Le(a, b),
            (_, 0) | (_, 2) => Formula::eq(a, b),
            _ => Formula::neq(a, b),
        };
        literals.push(l);
    }
    let mut eliminate = Vec::new();
    for v in [d, e, n] {
        if r.gen_bool(0.6) {
            eliminate.push(v);
        }
    }
    if eliminate.is_empty() {
        eliminate.push(Var::new("d", p));
    }
    CoverTask { literals, eliminate }
}

/// A random query in the ∃∀ fragment over one memory sort `M`, arrays
/// `a: M -> D`, `b: M -> Int`, memory variable `x: D` and an integer
/// variable, with every integer bounded to `[-2, 2]` so that exhaustive
/// enumeration over that range is exact.
pub fn exists_forall_query(r: &mut ChaCha8Rng) -> Formula {
    let (m, dv, int) = (index_sort(), value_sort(), Sort::int());
    let ne = r.gen_range(0..=2);
    let nu = r.gen_range(1..=2);
    let ex: Vec<Var> = (0..ne).map(|i| Var::new(&format!("e{i}"), m.clone())).collect();
    let un: Vec<Var> = (0..nu).map(|i| Var::new(&format!("k{i}"), m.clone())).collect();
    let n = Var::new("n", int.clone());
    let idx: Vec<Term> = ex.iter().chain(&un).map(Term::var).collect();
    let x = Term::state("x", &dv);
    let pick_index = |r: &mut ChaCha8Rng| idx.choose(r).unwrap().clone();
    let atom = |r: &mut ChaCha8Rng| -> Formula {
        match r.gen_range(0..6) {
            0 => Formula::eq(pick_index(r), pick_index(r)),
            1 => Formula::eq(Term::select("a", pick_index(r), &dv), x.clone()),
            2 => Formula::eq(Term::select("a", pick_index(r), &dv), Term::select("a", pick_index(r), &dv)),
            3 => Formula::eq(Term::select("a", pick_index(r), &dv), Term::constant("c", &dv)),
            4 => Formula::Lt(Term::select("b", pick_index(r), &int), Term::var(&n)),
            _ => Formula::Le(Term::select("b", pick_index(r), &int), Term::int(r.gen_range(-2..=2))),
        }
    };
    let lit = |r: &mut ChaCha8Rng| if r.gen_bool(0.4) { Formula::not(atom(r)) } else { atom(r) };
    let outer: Vec<Formula> = (0..r.gen_range(1..=2)).map(|_| lit(r)).collect();
    let inner: Vec<Formula> = (0..r.gen_range(1..=3))
        .map(|_| if r.gen_bool(0.5) { lit(r) } else { Formula::or(vec![lit(r), lit(r)]) })
        .collect();
    let body = Formula::and(vec![Formula::and(outer), Formula::forall(un, Formula::and(inner))]);
    let bounds = vec![Formula::Le(Term::int(-2), Term::var(&n)), Formula::Le(Term::var(&n), Term::int(2))];
    let cell_bounds = |t: Term| vec![Formula::Le(Term::int(-2), t.clone()), Formula::Le(t, Term::int(2))];
    let k = Var::new("kb", m);
    let mut all = bounds;
    all.push(Formula::forall(vec![k.clone()], Formula::and(cell_bounds(Term::select("b", Term::var(&k), &int)))));
    all.push(body);
    Formula::exists(ex.into_iter().chain([n]).collect(), Formula::and(all))
}

/// Carriers of size three per sort for the strength check.
pub fn cover_bounds() -> Bounds {
    Bounds { id_extra: 2, value_extra: 1, arith: ArithDomain::Range(-1, 1), ..Bounds::default() }
}

/// Eliminate, then check the result is implied by the input (solver) and,
/// when exact, extends back to a model of the input (bounded oracle).
pub fn check_cover_task(t: &CoverTask, s: &mut Session) -> Result<Cover, String> {
    let c = cover(&t.literals, &t.eliminate, &BTreeMap::new(), &CoverConfig::default()).map_err(|e| e.to_string())?;
    let phi = Formula::and(t.literals.clone());
    let psi = c.to_formula();
    for v in psi.free_vars() {
        if t.eliminate.contains(&v) || v.name.starts_with("z!") || v.name.starts_with("cv!") {
            return Err(format!("cover still mentions `{}`", v.name));
        }
    }
    if !s.check_entailment(&phi, &psi).map_err(|e| e.to_string())? {
        return Err(format!("unsound cover {psi} for {phi}"));
    }
    if !c.approximate {
        let ok = check_cover_by_extension(&phi, &t.eliminate, &psi, &cover_bounds(), &BTreeMap::new())
            .map_err(|e| e.to_string())?;
        if !ok {
            return Err(format!("cover {psi} of {phi} is too weak"));
        }
    }
    Ok(c)
}

/// Source of a random spec over one memory sort, for transition-level
/// tests. Universal guards appear only when `universal` is set.
pub fn random_spec(r: &mut ChaCha8Rng, universal: bool, transitions: usize) -> String {
    let mut out = String::from(
        "(theory lia)
(sort P :id)
(sort D :value)
(mem-sort M)
(const c D)
(const e D)
(fun f P -> D)
(var x D)
(var n Int)
(arr a M -> D)
(arr b M -> Int)
(arr p M -> P)
(init (= x undef) (= n 0) (= a (lambda undef)) (= b (lambda 0)) (= p (lambda undef)))
",
    );
    for t in 0..transitions {
        let u = universal && r.gen_bool(0.6);
        out.push_str(&random_transition(r, &format!("t{t}"), u));
    }
    out.push_str(&format!("(unsafe bad (exists ((i1 M)) {}))\n", random_conj(r, &["i1"], &[], 1, 3)));
    out
}

fn d_term(r: &mut ChaCha8Rng, idx: &[&str], data: &[&str]) -> String {
    let mut pool = vec!["x".to_string(), "c".into(), "e".into(), "(as undef D)".into()];
    for i in idx {
        pool.push(format!("(select a {i})"));
        pool.push(format!("(f (select p {i}))"));
    }
    for d in data.iter().filter(|d| d.starts_with('v')) {
        pool.push(d.to_string());
    }
    pool.choose(r).unwrap().clone()
}

fn i_term(r: &mut ChaCha8Rng, idx: &[&str], data: &[&str]) -> String {
    let mut pool = vec!["n".to_string(), "0".into(), "2".into(), "(+ n 1)".into()];
    for i in idx {
        pool.push(format!("(select b {i})"));
    }
    for d in data.iter().filter(|d| d.starts_with('m')) {
        pool.push(d.to_string());
    }
    pool.choose(r).unwrap().clone()
}

fn random_literal(r: &mut ChaCha8Rng, idx: &[&str], data: &[&str]) -> String {
    let atom = match r.gen_range(0..5) {
        0 | 1 => format!("(= {} {})", d_term(r, idx, data), d_term(r, idx, data)),
        2 => format!("(< {} {})", i_term(r, idx, data), i_term(r, idx, data)),
        3 => format!("(<= {} {})", i_term(r, idx, data), i_term(r, idx, data)),
        _ if idx.len() >= 2 => format!("(= {} {})", idx.choose(r).unwrap(), idx.choose(r).unwrap()),
        _ if !idx.is_empty() => format!("(= (select p {}) undef)", idx.choose(r).unwrap()),
        _ => format!("(= x {})", d_term(r, idx, data)),
    };
    if r.gen_bool(0.35) {
        format!("(not {atom})")
    } else {
        atom
    }
}

fn random_conj(r: &mut ChaCha8Rng, idx: &[&str], data: &[&str], lo: usize, hi: usize) -> String {
    let n = r.gen_range(lo..=hi);
    let lits: Vec<String> = (0..n).map(|_| random_literal(r, idx, data)).collect();
    format!("(and {})", lits.join(" "))
}

fn random_transition(r: &mut ChaCha8Rng, name: &str, universal: bool) -> String {
    let idx: Vec<&str> = ["i", "j"][..r.gen_range(0..=2)].to_vec();
    let data: Vec<&str> = ["v", "m"].into_iter().filter(|_| r.gen_bool(0.5)).collect();
    let mut s = format!("(transition {name}\n  (exists {})\n  (data {})\n",
        idx.iter().map(|i| format!("({i} M)")).collect::<Vec<_>>().join(" "),
        data.iter().map(|d| format!("({d} {})", if d.starts_with('v') { "D" } else { "Int" })).collect::<Vec<_>>().join(" "));
    let guard = if idx.is_empty() {
        random_conj(r, &[], &data, 1, 2)
    } else {
        random_conj(r, &idx, &data, 1, 3)
    };
    s.push_str(&format!("  (guard {guard})\n"));
    if universal {
        let mut kidx = idx.clone();
        kidx.push("k");
        let lit = random_literal(r, &["k"], &[]);
        let g = if r.gen_bool(0.4) { format!("(or {lit} {})", random_literal(r, &kidx, &data)) } else { lit };
        s.push_str(&format!("  (uguard k {g})\n"));
    }
    let mut ups = Vec::new();
    if r.gen_bool(0.6) {
        ups.push(format!("(:= x {})", d_term(r, &idx, &data)));
    }
    if r.gen_bool(0.4) {
        ups.push(format!("(:= n {})", i_term(r, &idx, &data)));
    }
    let mut a_done = false;
    if let Some(i) = idx.first() {
        if r.gen_bool(0.7) {
            a_done = true;
            ups.push(format!(
                "(:= a (lambda y (case ((= y {i}) {}) (else (select a y)))))",
                d_term(r, &idx, &data)
            ));
        }
    }
    if r.gen_bool(0.3) {
        ups.push(format!(
            "(:= b (lambda y (case ((< (select b y) {}) 1) (else (select b y)))))",
            i_term(r, &idx, &data)
        ));
    }
    if !a_done && r.gen_bool(0.2) {
        ups.push("(:= a (lambda y (case ((= (select a y) c) e) (else (select a y)))))".into());
    }
    s.push_str(&format!("  (update {}))\n", ups.join(" ")));
    s
}
