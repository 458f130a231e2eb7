use std::fs;
use std::path::PathBuf;

use rabmc::spec::{check_source, parse, print_spec, Severity, SpecError};

fn corpus() -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut v: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "rab"))
        .map(|p| {
            let s = fs::read_to_string(&p).unwrap();
            (p, s)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn corpus_round_trips() {
    for (p, src) in corpus() {
        let s = parse(&src).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let printed = print_spec(&s);
        let again = parse(&printed).unwrap_or_else(|e| panic!("{}: reprint: {e}\n{printed}", p.display()));
        assert_eq!(s, again, "{}", p.display());
        assert_eq!(printed, print_spec(&again));
    }
}

#[test]
fn corpus_has_no_errors() {
    for (p, src) in corpus() {
        let errs: Vec<_> = check_source(&src).into_iter().filter(|d| d.severity == Severity::Error).collect();
        assert!(errs.is_empty(), "{}: {errs:?}", p.display());
    }
}

#[test]
fn visa_shape() {
    let src = fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/visa.rab")).unwrap();
    let s = parse(&src).unwrap();
    assert!(s.transitions.len() >= 4);
    assert_eq!(s.transitions.iter().filter(|t| t.universal.is_some()).count(), 1);
    assert!(check_source(&src).iter().all(|d| d.severity != Severity::Error));
}

#[test]
fn empty_transition_section() {
    let s = parse("(theory none)\n(sort D :value)\n(var x D)\n(init (= x undef))\n(unsafe u (= x undef))").unwrap();
    assert!(s.transitions.is_empty());
}

#[test]
fn undeclared_array_in_guard() {
    let src = "(theory none)\n(sort D :value)\n(mem-sort E)\n(var x D)\n(transition t (exists (i E)) (data)\n  (guard (= (select nope i) x)) (update))";
    match parse(src) {
        Err(SpecError::UnknownSymbol { name, pos }) => {
            assert_eq!(name, "nope");
            assert_eq!((pos.line, pos.col), (6, 21));
        }
        other => panic!("{other:?}"),
    }
}
