//! Translation of quantifier-free formulas to SMT-LIB text.
//!
//! Every symbol is quoted and tagged with its category and sorts, so
//! names from different namespaces never collide. Flag sorts become
//! `Bool`. The theory axioms needed by a query are emitted alongside it:
//! pairwise distinctness of the constants that occur, and the ground
//! instances of the undef axiom for every function application.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num::{BigInt, BigRational, Signed, Zero};

use super::SmtError;
use crate::formula::{Formula, Ident, LinExpr, Sort, SortKind, Term, UNDEF};
use crate::spec::ElemConsts;

pub(crate) struct Encoder<'a> {
    elem: &'a BTreeMap<Ident, ElemConsts>,
    /// Mangled symbol to its declaration command, in first-use order.
    decls: BTreeMap<String, (usize, String)>,
    consts: BTreeMap<Sort, BTreeSet<String>>,
    /// (argument, application, domain, codomain) of every function application.
    apps: BTreeSet<(String, String, Sort, Sort)>,
}

fn clean(s: &str) -> String {
    s.replace(['|', '\\'], "_")
}

fn int_lit(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

fn real_lit(n: &BigRational) -> String {
    let num = n.numer();
    let den = n.denom();
    let abs = if den == &BigInt::from(1) {
        format!("{}.0", num.abs())
    } else {
        format!("(/ {}.0 {}.0)", num.abs(), den)
    };
    if num.is_negative() {
        format!("(- {abs})")
    } else {
        abs
    }
}

impl<'a> Encoder<'a> {
    pub(crate) fn new(elem: &'a BTreeMap<Ident, ElemConsts>) -> Encoder<'a> {
        Encoder { elem, decls: BTreeMap::new(), consts: BTreeMap::new(), apps: BTreeSet::new() }
    }

    fn declare(&mut self, name: &str, decl: String) {
        let n = self.decls.len();
        self.decls.entry(name.to_string()).or_insert((n, decl));
    }

    pub(crate) fn sort(&mut self, s: &Sort) -> String {
        match s.kind {
            SortKind::Arith(_) => s.name.to_string(),
            SortKind::Elem => "Bool".into(),
            _ => {
                let name = format!("|S.{}|", clean(&s.name));
                self.declare(&name, format!("(declare-sort {name} 0)"));
                name
            }
        }
    }

    fn constant(&mut self, tag: &str, name: &str, s: &Sort) -> String {
        let srt = self.sort(s);
        let sym = format!("|{tag}.{}:{}|", clean(name), clean(&s.name));
        self.declare(&sym, format!("(declare-fun {sym} () {srt})"));
        sym
    }

    fn undef(&mut self, s: &Sort) -> String {
        let sym = self.constant("u", UNDEF, s);
        self.consts.entry(s.clone()).or_default();
        sym
    }

    fn function(&mut self, tag: &str, name: &str, args: &[Sort], res: &Sort) -> String {
        let arg_sorts: Vec<String> = args.iter().map(|a| self.sort(a)).collect();
        let res_sort = self.sort(res);
        let sig: Vec<String> = args.iter().chain(std::iter::once(res)).map(|s| clean(&s.name)).collect();
        let sym = format!("|{tag}.{}:{}|", clean(name), sig.join(">"));
        self.declare(&sym, format!("(declare-fun {sym} ({}) {res_sort})", arg_sorts.join(" ")));
        sym
    }

    fn num(&self, n: &BigRational, s: &Sort) -> Result<String, SmtError> {
        if s.is_int() {
            if !n.is_integer() {
                return Err(SmtError::Fragment(format!("non-integer numeral {n} of sort Int")));
            }
            Ok(int_lit(n.numer()))
        } else {
            Ok(real_lit(n))
        }
    }

    fn lin(&mut self, l: &LinExpr) -> Result<String, SmtError> {
        let mut parts = Vec::new();
        for (c, t) in &l.terms {
            let t = self.term(t)?;
            if c == &BigRational::from_integer(1.into()) {
                parts.push(t);
            } else {
                parts.push(format!("(* {} {t})", self.num(c, &l.sort)?));
            }
        }
        if !l.constant.is_zero() || parts.is_empty() {
            parts.push(self.num(&l.constant, &l.sort)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { format!("(+ {})", parts.join(" ")) })
    }

    pub(crate) fn term(&mut self, t: &Term) -> Result<String, SmtError> {
        Ok(match t {
            Term::Var(v) => self.constant("v", &v.name, &v.sort),
            Term::State(n, s) => self.constant("s", n, s),
            Term::Const(n, s) if &**n == UNDEF => {
                if !s.has_undef() {
                    return Err(SmtError::Fragment(format!("sort {s} has no undef")));
                }
                self.undef(s)
            }
            Term::Const(n, s) if s.is_elem() => {
                let e = self
                    .elem
                    .get(&s.name)
                    .ok_or_else(|| SmtError::Fragment(format!("flag sort {s} has no registered constants")))?;
                if e.t == *n {
                    "true".into()
                } else if e.f == *n {
                    "false".into()
                } else {
                    return Err(SmtError::Fragment(format!("`{n}` is not a constant of flag sort {s}")));
                }
            }
            Term::Const(n, s) => {
                let sym = self.constant("c", n, s);
                if s.has_undef() {
                    self.consts.entry(s.clone()).or_default().insert(sym.clone());
                }
                sym
            }
            Term::Num(n, s) => self.num(n, s)?,
            Term::App { fun, arg, sort } => {
                let dom = arg.sort();
                let f = self.function("f", fun, std::slice::from_ref(&dom), sort);
                let a = self.term(arg)?;
                let app = format!("({f} {a})");
                self.apps.insert((a, app.clone(), dom, sort.clone()));
                app
            }
            Term::Select { array, index, sort } => {
                let f = self.function("a", array, &[index.sort()], sort);
                format!("({f} {})", self.term(index)?)
            }
            Term::Lin(l) => self.lin(l)?,
            Term::Case { branches, default } => {
                let mut out = self.term(default)?;
                for (c, u) in branches.iter().rev() {
                    out = format!("(ite {} {} {out})", self.formula(c)?, self.term(u)?);
                }
                out
            }
        })
    }

    pub(crate) fn formula(&mut self, f: &Formula) -> Result<String, SmtError> {
        let nary = |enc: &mut Self, op: &str, v: &[Formula], empty: &str| -> Result<String, SmtError> {
            match v.len() {
                0 => Ok(empty.into()),
                1 => enc.formula(&v[0]),
                _ => {
                    let parts: Vec<String> = v.iter().map(|g| enc.formula(g)).collect::<Result<_, _>>()?;
                    Ok(format!("({op} {})", parts.join(" ")))
                }
            }
        };
        Ok(match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Eq(a, b) => format!("(= {} {})", self.term(a)?, self.term(b)?),
            Formula::Lt(a, b) => format!("(< {} {})", self.term(a)?, self.term(b)?),
            Formula::Le(a, b) => format!("(<= {} {})", self.term(a)?, self.term(b)?),
            Formula::Divides(m, t) => format!("(= (mod {} {}) 0)", self.term(t)?, m.abs()),
            Formula::Rel(r, args) => {
                let sorts: Vec<Sort> = args.iter().map(Term::sort).collect();
                let sym = self.function("r", r, &sorts, &Sort::new("Bool", SortKind::Elem));
                if args.is_empty() {
                    sym
                } else {
                    let a: Vec<String> = args.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?;
                    format!("({sym} {})", a.join(" "))
                }
            }
            Formula::Not(a) => format!("(not {})", self.formula(a)?),
            Formula::And(v) => nary(self, "and", v, "true")?,
            Formula::Or(v) => nary(self, "or", v, "false")?,
            Formula::Implies(a, b) => format!("(=> {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Exists(..) | Formula::Forall(..) | Formula::LambdaEq { .. } => {
                return Err(SmtError::Fragment("quantifier reached the ground encoder".into()))
            }
        })
    }

    /// Declarations (in first-use order) and theory axioms for what was encoded.
    pub(crate) fn finish(mut self) -> (Vec<(String, String)>, Vec<String>) {
        let mut axioms = Vec::new();
        let apps = std::mem::take(&mut self.apps);
        for (arg, app, dom, cod) in apps {
            if dom.has_undef() && cod.has_undef() {
                let ud = self.undef(&dom);
                let uc = self.undef(&cod);
                axioms.push(format!("(= (= {arg} {ud}) (= {app} {uc}))"));
            }
        }
        let consts = std::mem::take(&mut self.consts);
        for (s, names) in consts {
            if names.is_empty() {
                continue;
            }
            let mut all: Vec<String> = names.into_iter().collect();
            all.push(self.undef(&s));
            axioms.push(format!("(distinct {})", all.join(" ")));
        }
        let mut decls: Vec<(usize, String, String)> =
            self.decls.into_iter().map(|(name, (n, d))| (n, name, d)).collect();
        decls.sort();
        // Sorts must precede the symbols that use them.
        decls.sort_by_key(|(_, _, d)| !d.starts_with("(declare-sort"));
        (decls.into_iter().map(|(_, n, d)| (n, d)).collect(), axioms)
    }
}

/// Render a script for logs and replay.
pub(crate) fn script(decls: &[String], axioms: &[String], body: &str) -> String {
    let mut s = String::new();
    for d in decls {
        let _ = writeln!(s, "{d}");
    }
    s.push_str("(push 1)\n");
    for a in axioms {
        let _ = writeln!(s, "(assert {a})");
    }
    let _ = writeln!(s, "(assert {body})\n(check-sat)\n(pop 1)");
    s
}
