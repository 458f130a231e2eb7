//! Reader for the prefix spec language.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, Num, One, Zero};
use thiserror::Error;

use super::sexp::{read_all, Pos, Sexp};
use super::validate::{validate, Severity};
use super::{
    ArrayDecl, ArrayUpdate, ConstDecl, ElemConsts, FunDecl, Init, Invariant, NamedFormula, RabSpec, RelDecl,
    Signature, SourceMap, StateVar, Theory, TransitionRule, UniversalGuard,
};
use crate::formula::{ident, Formula, LinExpr, Sort, SortKind, Term, Var, UNDEF};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: Pos },
    #[error("sort error at {pos}: {message}")]
    Sort { pos: Pos, message: String },
    #[error("shape error at {pos}: {message}")]
    Shape { pos: Pos, message: String },
}

impl SpecError {
    pub fn pos(&self) -> Pos {
        match self {
            SpecError::Syntax { pos, .. }
            | SpecError::UnknownSymbol { pos, .. }
            | SpecError::Sort { pos, .. }
            | SpecError::Shape { pos, .. } => *pos,
        }
    }
}

type Res<T> = Result<T, SpecError>;

const UNDEF_NEEDS_SORT: &str = "cannot infer the sort of `undef` here";

const RESERVED: &[&str] = &[
    "select", "case", "else", "lambda", "and", "or", "not", "=>", "=", "distinct", "<", "<=", ">", ">=", "+", "-",
    "*", "/", "exists", "forall", "true", "false", UNDEF, "Int", "Real", "as", "ite", ":=", "->",
];

fn syntax(pos: Pos, message: impl Into<String>) -> SpecError {
    SpecError::Syntax { pos, message: message.into() }
}

fn sort_err(pos: Pos, message: impl Into<String>) -> SpecError {
    SpecError::Sort { pos, message: message.into() }
}

fn shape(pos: Pos, message: impl Into<String>) -> SpecError {
    SpecError::Shape { pos, message: message.into() }
}

fn is_undef_inference(e: &SpecError) -> bool {
    matches!(e, SpecError::Sort { message, .. } if message == UNDEF_NEEDS_SORT)
}

fn parse_numeral(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    if body.is_empty() || !body.chars().next().unwrap().is_ascii_digit() {
        return None;
    }
    let v = if let Some((int, frac)) = body.split_once('.') {
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int}{frac}");
        let n = BigInt::from_str_radix(&digits, 10).ok()?;
        let d = num::pow(BigInt::from(10), frac.len());
        BigRational::new(n, d)
    } else {
        if !body.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        BigRational::from_integer(BigInt::from_str_radix(body, 10).ok()?)
    };
    Some(if neg { -v } else { v })
}

struct Parser {
    spec: RabSpec,
    names: BTreeSet<String>,
}

#[derive(Default, Clone)]
struct Scope {
    vars: Vec<Var>,
}

impl Scope {
    fn with(&self, extra: &[Var]) -> Scope {
        let mut s = self.clone();
        s.vars.extend(extra.iter().cloned());
        s
    }

    fn get(&self, name: &str) -> Option<&Var> {
        self.vars.iter().rev().find(|v| &*v.name == name)
    }
}

fn atom_of<'a>(s: &'a Sexp, what: &str) -> Res<&'a str> {
    s.atom().ok_or_else(|| syntax(s.pos(), format!("expected {what}")))
}

fn list_of<'a>(s: &'a Sexp, what: &str) -> Res<&'a [Sexp]> {
    s.list().ok_or_else(|| syntax(s.pos(), format!("expected {what}")))
}

impl Parser {
    fn new() -> Parser {
        Parser {
            spec: RabSpec {
                signature: Signature {
                    theory: Theory::None,
                    sorts: vec![],
                    elem_consts: BTreeMap::new(),
                    funs: vec![],
                    rels: vec![],
                    consts: vec![],
                },
                mem_sorts: vec![],
                vars: vec![],
                arrays: vec![],
                alive: vec![],
                init: Init::default(),
                transitions: vec![],
                unsafe_props: vec![],
                invariants: vec![],
                spans: SourceMap::default(),
            },
            names: BTreeSet::new(),
        }
    }

    fn declare(&mut self, s: &Sexp) -> Res<String> {
        let name = atom_of(s, "a name")?;
        if RESERVED.contains(&name) || name.starts_with(':') || parse_numeral(name).is_some() {
            return Err(syntax(s.pos(), format!("`{name}` is reserved")));
        }
        if name.contains(['!', '#', '|', '\\']) {
            return Err(syntax(s.pos(), format!("`{name}` uses a reserved character")));
        }
        if !self.names.insert(name.to_string()) {
            return Err(shape(s.pos(), format!("`{name}` declared twice")));
        }
        Ok(name.to_string())
    }

    fn local_name(&self, s: &Sexp) -> Res<String> {
        let name = atom_of(s, "a variable name")?;
        if RESERVED.contains(&name) || name.contains(['!', '#', '|', '\\']) || parse_numeral(name).is_some() {
            return Err(syntax(s.pos(), format!("`{name}` cannot be used as a variable")));
        }
        if self.names.contains(name) {
            return Err(shape(s.pos(), format!("variable `{name}` shadows a global symbol")));
        }
        Ok(name.to_string())
    }

    fn sort(&self, s: &Sexp) -> Res<Sort> {
        let name = atom_of(s, "a sort")?;
        match name {
            "Int" | "Real" => {
                let t = self.spec.signature.theory.arith_sort();
                match t {
                    Some(t) if &*t.name == name => Ok(t),
                    _ => Err(sort_err(s.pos(), format!("sort `{name}` needs a matching `(theory ...)` declaration"))),
                }
            }
            _ => self.spec.sort(name).ok_or_else(|| SpecError::UnknownSymbol { name: name.into(), pos: s.pos() }),
        }
    }

    fn arith_sort(&self, pos: Pos) -> Res<Sort> {
        self.spec
            .signature
            .theory
            .arith_sort()
            .ok_or_else(|| sort_err(pos, "arithmetic requires `(theory lia)` or `(theory lra)`"))
    }

    fn expect_sort(&self, t: Term, expect: Option<&Sort>, pos: Pos) -> Res<Term> {
        if let Some(e) = expect {
            let got = t.sort();
            if got != *e {
                return Err(sort_err(pos, format!("expected sort {e}, found {got}")));
            }
        }
        Ok(t)
    }

    fn term(&self, s: &Sexp, expect: Option<&Sort>, scope: &Scope) -> Res<Term> {
        let pos = s.pos();
        match s {
            Sexp::Atom(a, _) => {
                if let Some(n) = parse_numeral(a) {
                    let sort = self.arith_sort(pos)?;
                    return self.expect_sort(Term::Num(n, sort), expect, pos);
                }
                if a == UNDEF {
                    return match expect {
                        Some(e) if e.has_undef() => Ok(Term::undef(e)),
                        Some(e) => Err(sort_err(pos, format!("sort {e} has no `undef`"))),
                        None => Err(sort_err(pos, UNDEF_NEEDS_SORT)),
                    };
                }
                let t = if let Some(v) = scope.get(a) {
                    Term::Var(v.clone())
                } else if let Some(v) = self.spec.var(a) {
                    Term::State(v.name.clone(), v.sort.clone())
                } else if let Some(c) = self.spec.signature.constant(a) {
                    Term::Const(c.name.clone(), c.sort.clone())
                } else if let Some((sort, _)) = self
                    .spec
                    .signature
                    .elem_consts
                    .iter()
                    .find(|(_, e)| &*e.t == a.as_str() || &*e.f == a.as_str())
                {
                    Term::Const(ident(a), self.spec.sort(sort).expect("declared"))
                } else {
                    return Err(SpecError::UnknownSymbol { name: a.clone(), pos });
                };
                self.expect_sort(t, expect, pos)
            }
            Sexp::List(items, _) => {
                let head = items.first().and_then(Sexp::atom).ok_or_else(|| syntax(pos, "expected a term"))?;
                let args = &items[1..];
                match head {
                    "select" => {
                        if args.len() != 2 {
                            return Err(syntax(pos, "`select` takes an array and an index"));
                        }
                        let an = atom_of(&args[0], "an array name")?;
                        let a = self
                            .spec
                            .array(an)
                            .ok_or_else(|| SpecError::UnknownSymbol { name: an.into(), pos: args[0].pos() })?
                            .clone();
                        let idx = self.term(&args[1], Some(&a.index), scope)?;
                        self.expect_sort(
                            Term::Select { array: a.name.clone(), index: Box::new(idx), sort: a.elem.clone() },
                            expect,
                            pos,
                        )
                    }
                    "+" | "-" | "*" | "/" => {
                        let t = self.arith(head, args, pos, scope)?;
                        self.expect_sort(t, expect, pos)
                    }
                    "case" => self.case(args, expect, pos, scope),
                    "as" => {
                        if args.len() != 2 || args[0].atom() != Some(UNDEF) {
                            return Err(syntax(pos, "only `(as undef SORT)` is supported"));
                        }
                        let srt = self.sort(&args[1])?;
                        let t = self.term(&args[0], Some(&srt), scope)?;
                        self.expect_sort(t, expect, pos)
                    }
                    f => {
                        let Some(decl) = self.spec.signature.fun(f).cloned() else {
                            return Err(SpecError::UnknownSymbol { name: f.into(), pos: items[0].pos() });
                        };
                        if args.len() != 1 {
                            return Err(syntax(pos, format!("function `{f}` is unary")));
                        }
                        let a = self.term(&args[0], Some(&decl.domain), scope)?;
                        self.expect_sort(
                            Term::App { fun: decl.name.clone(), arg: Box::new(a), sort: decl.codomain.clone() },
                            expect,
                            pos,
                        )
                    }
                }
            }
        }
    }

    fn arith(&self, head: &str, args: &[Sexp], pos: Pos, scope: &Scope) -> Res<Term> {
        let sort = self.arith_sort(pos)?;
        let parts: Vec<Term> = args.iter().map(|a| self.term(a, Some(&sort), scope)).collect::<Res<_>>()?;
        if parts.is_empty() {
            return Err(syntax(pos, format!("`{head}` needs arguments")));
        }
        let one = BigRational::one();
        let mut acc = LinExpr::zero(sort.clone());
        match head {
            "+" => parts.iter().for_each(|p| acc.add_term(&one, p)),
            "-" => {
                if parts.len() == 1 {
                    acc.add_term(&-one, &parts[0]);
                } else {
                    acc.add_term(&one, &parts[0]);
                    parts[1..].iter().for_each(|p| acc.add_term(&-one.clone(), p));
                }
            }
            "*" => {
                let mut k = BigRational::one();
                let mut rest: Option<Term> = None;
                for (p, s) in parts.iter().zip(args) {
                    match p {
                        Term::Num(n, _) => k *= n,
                        t => {
                            if rest.is_some() {
                                return Err(shape(s.pos(), "only multiplication by a numeral is linear"));
                            }
                            rest = Some(t.clone());
                        }
                    }
                }
                match rest {
                    Some(t) => acc.add_term(&k, &t),
                    None => acc.constant = k,
                }
            }
            "/" => {
                let [Term::Num(a, _), Term::Num(b, _)] = parts.as_slice() else {
                    return Err(shape(pos, "`/` is only allowed between numerals"));
                };
                if b.is_zero() {
                    return Err(shape(pos, "division by zero"));
                }
                acc.constant = a / b;
            }
            _ => unreachable!(),
        }
        Ok(acc.into_term())
    }

    fn case(&self, args: &[Sexp], expect: Option<&Sort>, pos: Pos, scope: &Scope) -> Res<Term> {
        let Some((last, arms)) = args.split_last() else {
            return Err(syntax(pos, "`case` needs an `else` arm"));
        };
        let last_items = list_of(last, "an `(else TERM)` arm")?;
        if last_items.len() != 2 || last_items[0].atom() != Some("else") {
            return Err(syntax(last.pos(), "`case` must end with `(else TERM)`"));
        }
        if arms.is_empty() {
            return Err(syntax(pos, "`case` needs at least one guarded arm"));
        }
        let mut sort = expect.cloned();
        if sort.is_none() {
            let candidates = arms
                .iter()
                .filter_map(|a| a.list().filter(|v| v.len() == 2).map(|v| &v[1]))
                .chain(std::iter::once(&last_items[1]));
            for c in candidates {
                match self.term(c, None, scope) {
                    Ok(t) => {
                        sort = Some(t.sort());
                        break;
                    }
                    Err(e) if is_undef_inference(&e) => continue,
                    Err(e) => return Err(e),
                }
            }
            if sort.is_none() {
                return Err(sort_err(pos, UNDEF_NEEDS_SORT));
            }
        }
        let mut branches = Vec::new();
        for a in arms {
            let v = list_of(a, "a `(FORMULA TERM)` arm")?;
            if v.len() != 2 {
                return Err(syntax(a.pos(), "a case arm is `(FORMULA TERM)`"));
            }
            let c = self.formula(&v[0], scope)?;
            let t = self.term(&v[1], sort.as_ref(), scope)?;
            branches.push((c, t));
        }
        let default = self.term(&last_items[1], sort.as_ref(), scope)?;
        Ok(Term::Case { branches, default: Box::new(default) })
    }

    fn term_pair(&self, a: &Sexp, b: &Sexp, scope: &Scope) -> Res<(Term, Term)> {
        match self.term(a, None, scope) {
            Ok(ta) => {
                let s = ta.sort();
                let tb = self.term(b, Some(&s), scope)?;
                Ok((ta, tb))
            }
            Err(e) if is_undef_inference(&e) => {
                let tb = self.term(b, None, scope)?;
                let s = tb.sort();
                let ta = self.term(a, Some(&s), scope)?;
                Ok((ta, tb))
            }
            Err(e) => Err(e),
        }
    }

    fn binders(&self, s: &Sexp) -> Res<Vec<Var>> {
        let items = list_of(s, "a variable list")?;
        let mut out: Vec<Var> = Vec::new();
        for it in items {
            let v = list_of(it, "`(NAME SORT)`")?;
            if v.len() != 2 {
                return Err(syntax(it.pos(), "binder is `(NAME SORT)`"));
            }
            let name = self.local_name(&v[0])?;
            if out.iter().any(|w| *w.name == *name) {
                return Err(shape(it.pos(), format!("`{name}` bound twice")));
            }
            out.push(Var::new(&name, self.sort(&v[1])?));
        }
        Ok(out)
    }

    fn formula(&self, s: &Sexp, scope: &Scope) -> Res<Formula> {
        let pos = s.pos();
        match s {
            Sexp::Atom(a, _) => match a.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                r => match self.spec.signature.rel(r) {
                    Some(d) if d.args.is_empty() => Ok(Formula::Rel(d.name.clone(), vec![])),
                    _ => Err(SpecError::UnknownSymbol { name: r.into(), pos }),
                },
            },
            Sexp::List(items, _) => {
                if let Some(Sexp::List(inner, _)) = items.first() {
                    // ((_ divisible m) t)
                    if inner.len() == 3 && inner[0].atom() == Some("_") && inner[1].atom() == Some("divisible") {
                        let m = inner[2]
                            .atom()
                            .and_then(|m| BigInt::from_str_radix(m, 10).ok())
                            .ok_or_else(|| syntax(inner[2].pos(), "expected a modulus"))?;
                        if items.len() != 2 {
                            return Err(syntax(pos, "divisibility takes one term"));
                        }
                        let sort = self.arith_sort(pos)?;
                        let t = self.term(&items[1], Some(&sort), scope)?;
                        return Ok(Formula::Divides(m, t));
                    }
                }
                let head = items.first().and_then(Sexp::atom).ok_or_else(|| syntax(pos, "expected a formula"))?;
                let args = &items[1..];
                let arity = |n: usize| -> Res<()> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(syntax(pos, format!("`{head}` takes {n} arguments")))
                    }
                };
                match head {
                    "not" => {
                        arity(1)?;
                        Ok(Formula::Not(Box::new(self.formula(&args[0], scope)?)))
                    }
                    "and" => Ok(Formula::And(args.iter().map(|a| self.formula(a, scope)).collect::<Res<_>>()?)),
                    "or" => Ok(Formula::Or(args.iter().map(|a| self.formula(a, scope)).collect::<Res<_>>()?)),
                    "=>" => {
                        arity(2)?;
                        Ok(Formula::implies(self.formula(&args[0], scope)?, self.formula(&args[1], scope)?))
                    }
                    "=" => {
                        arity(2)?;
                        if let (Some(an), Some("lambda")) = (args[0].atom(), args[1].head()) {
                            if let Some(a) = self.spec.array(an).cloned() {
                                let lam = args[1].list().unwrap();
                                if lam.len() != 3 {
                                    return Err(syntax(args[1].pos(), "`(lambda NAME TERM)` expected"));
                                }
                                let y = Var::new(&self.local_name(&lam[1])?, a.index.clone());
                                let body = self.term(&lam[2], Some(&a.elem), &scope.with(std::slice::from_ref(&y)))?;
                                return Ok(Formula::LambdaEq {
                                    array: a.name.clone(),
                                    index: a.index.clone(),
                                    param: y,
                                    body,
                                });
                            }
                        }
                        let (a, b) = self.term_pair(&args[0], &args[1], scope)?;
                        Ok(Formula::Eq(a, b))
                    }
                    "distinct" => {
                        if args.len() < 2 {
                            return Err(syntax(pos, "`distinct` takes at least two arguments"));
                        }
                        let mut terms: Vec<Term> = Vec::new();
                        let first = self.term_pair(&args[0], &args[1], scope)?;
                        terms.push(first.0);
                        terms.push(first.1);
                        let s = terms[0].sort();
                        for a in &args[2..] {
                            terms.push(self.term(a, Some(&s), scope)?);
                        }
                        let mut parts = Vec::new();
                        for i in 0..terms.len() {
                            for j in i + 1..terms.len() {
                                parts.push(Formula::Not(Box::new(Formula::Eq(terms[i].clone(), terms[j].clone()))));
                            }
                        }
                        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
                    }
                    "<" | "<=" | ">" | ">=" => {
                        arity(2)?;
                        let sort = self.arith_sort(pos)?;
                        let a = self.term(&args[0], Some(&sort), scope)?;
                        let b = self.term(&args[1], Some(&sort), scope)?;
                        Ok(match head {
                            "<" => Formula::Lt(a, b),
                            "<=" => Formula::Le(a, b),
                            ">" => Formula::Lt(b, a),
                            _ => Formula::Le(b, a),
                        })
                    }
                    "exists" | "forall" => {
                        arity(2)?;
                        let vs = self.binders(&args[0])?;
                        let body = self.formula(&args[1], &scope.with(&vs))?;
                        Ok(if head == "exists" {
                            Formula::Exists(vs, Box::new(body))
                        } else {
                            Formula::Forall(vs, Box::new(body))
                        })
                    }
                    r => {
                        let Some(decl) = self.spec.signature.rel(r).cloned() else {
                            return Err(SpecError::UnknownSymbol { name: r.into(), pos: items[0].pos() });
                        };
                        if decl.args.len() != args.len() {
                            return Err(syntax(pos, format!("relation `{r}` has arity {}", decl.args.len())));
                        }
                        let ts = args
                            .iter()
                            .zip(&decl.args)
                            .map(|(a, s)| self.term(a, Some(s), scope))
                            .collect::<Res<_>>()?;
                        Ok(Formula::Rel(decl.name.clone(), ts))
                    }
                }
            }
        }
    }

    fn signature_decl(&mut self, d: &Sexp, stage: u8) -> Res<()> {
        let items = d.list().unwrap();
        let head = items[0].atom().unwrap();
        let args = &items[1..];
        let pos = d.pos();
        match (stage, head) {
            (0, "theory") => {
                let [t] = args else { return Err(syntax(pos, "`(theory none|lia|lra)`")) };
                self.spec.signature.theory = match t.atom() {
                    Some("none") => Theory::None,
                    Some("lia") => Theory::Lia,
                    Some("lra") => Theory::Lra,
                    _ => return Err(syntax(t.pos(), "theory must be none, lia or lra")),
                };
            }
            (1, "sort") => {
                if args.len() < 2 {
                    return Err(syntax(pos, "`(sort NAME :id|:value)`"));
                }
                let name = self.declare(&args[0])?;
                match (args[1].atom(), args.len()) {
                    (Some(":id"), 2) => self.spec.signature.sorts.push(Sort::new(&name, SortKind::Id)),
                    (Some(":value"), 2) => self.spec.signature.sorts.push(Sort::new(&name, SortKind::Value)),
                    (Some(":elem"), 4) => {
                        let t = self.declare(&args[2])?;
                        let f = self.declare(&args[3])?;
                        self.spec.signature.sorts.push(Sort::new(&name, SortKind::Elem));
                        self.spec.signature.elem_consts.insert(ident(&name), ElemConsts { t: ident(&t), f: ident(&f) });
                    }
                    _ => return Err(syntax(args[1].pos(), "sort kind must be :id or :value")),
                }
            }
            (1, "mem-sort") => {
                let [n] = args else { return Err(syntax(pos, "`(mem-sort NAME)`")) };
                let name = self.declare(n)?;
                self.spec.mem_sorts.push(Sort::new(&name, SortKind::Memory));
            }
            (2, "fun") => {
                let [n, a, arrow, b] = args else { return Err(syntax(pos, "`(fun NAME SORT -> SORT)`")) };
                if arrow.atom() != Some("->") {
                    return Err(syntax(arrow.pos(), "expected `->`"));
                }
                let domain = self.sort(a)?;
                let codomain = self.sort(b)?;
                let name = self.declare(n)?;
                self.spec.signature.funs.push(FunDecl { name: ident(&name), domain, codomain });
            }
            (2, "rel") => {
                if args.len() < 2 {
                    return Err(syntax(pos, "`(rel NAME SORT+)`"));
                }
                let sorts = args[1..].iter().map(|s| self.sort(s)).collect::<Res<_>>()?;
                let name = self.declare(&args[0])?;
                self.spec.signature.rels.push(RelDecl { name: ident(&name), args: sorts });
            }
            (2, "const") => {
                let [n, s] = args else { return Err(syntax(pos, "`(const NAME SORT)`")) };
                let sort = self.sort(s)?;
                let name = self.declare(n)?;
                self.spec.signature.consts.push(ConstDecl { name: ident(&name), sort });
            }
            (2, "var") => {
                let [n, s] = args else { return Err(syntax(pos, "`(var NAME SORT)`")) };
                let sort = self.sort(s)?;
                let name = self.declare(n)?;
                self.spec.vars.push(StateVar { name: ident(&name), sort });
            }
            (2, "arr") => {
                let [n, a, arrow, b] = args else { return Err(syntax(pos, "`(arr NAME MEMSORT -> SORT)`")) };
                if arrow.atom() != Some("->") {
                    return Err(syntax(arrow.pos(), "expected `->`"));
                }
                let index = self.sort(a)?;
                let elem = self.sort(b)?;
                let name = self.declare(n)?;
                self.spec.arrays.push(ArrayDecl { name: ident(&name), index, elem });
            }
            (3, "alive") => {
                let [n] = args else { return Err(syntax(pos, "`(alive ARR)`")) };
                let name = atom_of(n, "an array name")?;
                if self.spec.array(name).is_none() {
                    return Err(SpecError::UnknownSymbol { name: name.into(), pos: n.pos() });
                }
                self.spec.alive.push(ident(name));
            }
            _ => {}
        }
        Ok(())
    }

    fn init(&mut self, args: &[Sexp]) -> Res<()> {
        let scope = Scope::default();
        for a in args {
            let v = list_of(a, "`(= NAME VALUE)`")?;
            if v.len() != 3 || v[0].atom() != Some("=") {
                return Err(shape(a.pos(), "initial entries are `(= VAR CONST)` or `(= ARR (lambda CONST))`"));
            }
            let n = atom_of(&v[1], "a variable or array")?;
            let constant = |t: &Term, p: Pos| -> Res<()> {
                match t {
                    Term::Const(..) | Term::Num(..) => Ok(()),
                    _ => Err(shape(p, "initial values must be constants")),
                }
            };
            if let Some(x) = self.spec.var(n).cloned() {
                let t = self.term(&v[2], Some(&x.sort), &scope)?;
                constant(&t, v[2].pos())?;
                self.spec.init.vars.push((x.name.clone(), t));
            } else if let Some(arr) = self.spec.array(n).cloned() {
                let lam = list_of(&v[2], "`(lambda CONST)`")?;
                if lam.len() != 2 || lam[0].atom() != Some("lambda") {
                    return Err(shape(v[2].pos(), "array initialisers are `(lambda CONST)`"));
                }
                let t = self.term(&lam[1], Some(&arr.elem), &scope)?;
                constant(&t, lam[1].pos())?;
                self.spec.init.arrays.push((arr.name.clone(), t));
            } else {
                return Err(SpecError::UnknownSymbol { name: n.into(), pos: v[1].pos() });
            }
        }
        Ok(())
    }

    fn pair_list(&self, items: &[Sexp]) -> Res<Vec<Var>> {
        let mut out: Vec<Var> = Vec::new();
        for it in items {
            let v = list_of(it, "`(NAME SORT)`")?;
            if v.len() != 2 {
                return Err(syntax(it.pos(), "binder is `(NAME SORT)`"));
            }
            let name = self.local_name(&v[0])?;
            if out.iter().any(|w| *w.name == *name) {
                return Err(shape(it.pos(), format!("`{name}` bound twice")));
            }
            out.push(Var::new(&name, self.sort(&v[1])?));
        }
        Ok(out)
    }

    /// Sort of a universal-guard variable, read off its array accesses.
    fn infer_index_sort(&self, name: &str, body: &Sexp, pos: Pos) -> Res<Sort> {
        fn walk(p: &Parser, name: &str, s: &Sexp, out: &mut Vec<Sort>) {
            if let Some(items) = s.list() {
                if items.len() == 3 && items[0].atom() == Some("select") && items[2].atom() == Some(name) {
                    if let Some(a) = items[1].atom().and_then(|a| p.spec.array(a)) {
                        out.push(a.index.clone());
                    }
                }
                items.iter().for_each(|i| walk(p, name, i, out));
            }
        }
        let mut found = Vec::new();
        walk(self, name, body, &mut found);
        found.sort();
        found.dedup();
        match found.len() {
            1 => Ok(found.pop().unwrap()),
            0 if self.spec.mem_sorts.len() == 1 => Ok(self.spec.mem_sorts[0].clone()),
            0 => Err(shape(pos, format!("cannot infer the index sort of `{name}`"))),
            _ => Err(sort_err(pos, format!("`{name}` is used at several index sorts"))),
        }
    }

    fn transition(&mut self, args: &[Sexp], pos: Pos) -> Res<TransitionRule> {
        let Some((name_s, sections)) = args.split_first() else {
            return Err(syntax(pos, "transition needs a name"));
        };
        let name = atom_of(name_s, "a transition name")?.to_string();
        let mut index_vars = vec![];
        let mut data_vars = vec![];
        let mut guard = None;
        let mut universal = None;
        let mut var_updates = vec![];
        let mut array_updates: Vec<ArrayUpdate> = vec![];
        let mut seen = BTreeSet::new();
        for sec in sections {
            let items = list_of(sec, "a transition section")?;
            let head = items.first().and_then(Sexp::atom).ok_or_else(|| syntax(sec.pos(), "expected a section"))?;
            if !seen.insert(head.to_string()) {
                return Err(syntax(sec.pos(), format!("duplicate `{head}` section")));
            }
            let scope = Scope::default().with(&index_vars).with(&data_vars);
            match head {
                "exists" => index_vars = self.pair_list(&items[1..])?,
                "data" => data_vars = self.pair_list(&items[1..])?,
                "guard" => {
                    if items.len() != 2 {
                        return Err(syntax(sec.pos(), "`(guard FORMULA)`"));
                    }
                    guard = Some(self.formula(&items[1], &scope)?);
                }
                "uguard" => {
                    if items.len() != 3 {
                        return Err(syntax(sec.pos(), "`(uguard NAME FORMULA)`"));
                    }
                    let k = self.local_name(&items[1])?;
                    let sort = self.infer_index_sort(&k, &items[2], items[1].pos())?;
                    let kv = Var::new(&k, sort);
                    let g = self.formula(&items[2], &scope.with(std::slice::from_ref(&kv)))?;
                    universal = Some(UniversalGuard { var: kv, guard: g });
                }
                "update" => {
                    for u in &items[1..] {
                        let v = list_of(u, "`(:= TARGET VALUE)`")?;
                        if v.len() != 3 || v[0].atom() != Some(":=") {
                            return Err(syntax(u.pos(), "updates are `(:= TARGET VALUE)`"));
                        }
                        let target = atom_of(&v[1], "an update target")?;
                        if let Some(x) = self.spec.var(target).cloned() {
                            if var_updates.iter().any(|(n, _): &(crate::formula::Ident, Term)| **n == *target) {
                                return Err(shape(u.pos(), format!("`{target}` updated twice")));
                            }
                            let t = self.term(&v[2], Some(&x.sort), &scope)?;
                            var_updates.push((x.name.clone(), t));
                        } else if let Some(a) = self.spec.array(target).cloned() {
                            if array_updates.iter().any(|w| *w.array == *target) {
                                return Err(shape(u.pos(), format!("`{target}` updated twice")));
                            }
                            let lam = list_of(&v[2], "`(lambda NAME TERM)`")?;
                            if lam.len() != 3 || lam[0].atom() != Some("lambda") {
                                return Err(syntax(v[2].pos(), "array updates are `(lambda NAME TERM)`"));
                            }
                            let y = Var::new(&self.local_name(&lam[1])?, a.index.clone());
                            let body = self.term(&lam[2], Some(&a.elem), &scope.with(std::slice::from_ref(&y)))?;
                            array_updates.push(ArrayUpdate { array: a.name.clone(), param: y, body });
                        } else {
                            return Err(SpecError::UnknownSymbol { name: target.into(), pos: v[1].pos() });
                        }
                    }
                }
                other => return Err(syntax(sec.pos(), format!("unknown transition section `{other}`"))),
            }
        }
        Ok(TransitionRule {
            name: ident(&name),
            index_vars,
            data_vars,
            guard: guard.unwrap_or(Formula::True),
            universal,
            var_updates,
            array_updates,
        })
    }

    fn invariant(&self, args: &[Sexp], pos: Pos) -> Res<Invariant> {
        let [n, binders, body] = args else {
            return Err(syntax(pos, "`(invariant NAME (forall (NAME SORT)*) FORMULA)`"));
        };
        let name = atom_of(n, "an invariant name")?;
        let b = list_of(binders, "`(forall ...)`")?;
        if b.first().and_then(Sexp::atom) != Some("forall") {
            return Err(shape(binders.pos(), "invariants are universally quantified: `(forall (NAME SORT)*)`"));
        }
        let vars = self.pair_list(&b[1..])?;
        let body = self.formula(body, &Scope::default().with(&vars))?;
        Ok(Invariant { name: ident(name), vars, body })
    }

    fn behaviour_decl(&mut self, d: &Sexp) -> Res<()> {
        let items = d.list().unwrap();
        let head = items[0].atom().unwrap();
        let args = &items[1..];
        let pos = d.pos();
        match head {
            "init" => {
                if !self.spec.init.vars.is_empty() || !self.spec.init.arrays.is_empty() {
                    return Err(shape(pos, "more than one `init`"));
                }
                self.init(args)
            }
            "transition" => {
                let t = self.transition(args, pos)?;
                if self.spec.transition(&t.name).is_some() {
                    return Err(shape(pos, format!("transition `{}` declared twice", t.name)));
                }
                self.spec.spans.0.insert(format!("transition:{}", t.name), pos);
                self.spec.transitions.push(t);
                Ok(())
            }
            "unsafe" => {
                let [n, f] = args else { return Err(syntax(pos, "`(unsafe NAME FORMULA)`")) };
                let name = atom_of(n, "a property name")?;
                if self.spec.unsafe_prop(name).is_some() {
                    return Err(shape(pos, format!("property `{name}` declared twice")));
                }
                let formula = self.formula(f, &Scope::default())?;
                self.spec.spans.0.insert(format!("unsafe:{name}"), pos);
                self.spec.unsafe_props.push(NamedFormula { name: ident(name), formula });
                Ok(())
            }
            "invariant" => {
                let inv = self.invariant(args, pos)?;
                if self.spec.invariant(&inv.name).is_some() {
                    return Err(shape(pos, format!("invariant `{}` declared twice", inv.name)));
                }
                self.spec.spans.0.insert(format!("invariant:{}", inv.name), pos);
                self.spec.invariants.push(inv);
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

const SIGNATURE_HEADS: &[&str] = &["theory", "sort", "mem-sort", "fun", "rel", "const", "var", "arr", "alive"];
const BEHAVIOUR_HEADS: &[&str] = &["init", "transition", "unsafe", "invariant"];

/// Parse without running the static checker.
pub fn parse_unchecked(src: &str) -> Result<RabSpec, SpecError> {
    let decls = read_all(src).map_err(|e| syntax(e.pos, e.message))?;
    for d in &decls {
        let head = d.head().ok_or_else(|| syntax(d.pos(), "expected a declaration"))?;
        if !SIGNATURE_HEADS.contains(&head) && !BEHAVIOUR_HEADS.contains(&head) {
            return Err(syntax(d.pos(), format!("unknown declaration `{head}`")));
        }
    }
    let mut p = Parser::new();
    for stage in 0..4 {
        for d in &decls {
            p.signature_decl(d, stage)?;
        }
    }
    for d in &decls {
        p.behaviour_decl(d)?;
    }
    Ok(p.spec)
}

/// Parse and check. Any error-level diagnostic becomes a shape or sort
/// error at the reported position.
pub fn parse(src: &str) -> Result<RabSpec, SpecError> {
    let spec = parse_unchecked(src)?;
    if let Some(d) = validate(&spec).into_iter().find(|d| d.severity == Severity::Error) {
        let pos = d.pos.unwrap_or_default();
        return Err(if d.is_sort_error { sort_err(pos, d.message) } else { shape(pos, d.message) });
    }
    Ok(spec)
}

/// Read `(invariant ...)` declarations against an existing spec's symbols.
pub fn parse_extra_invariants(spec: &RabSpec, src: &str) -> Result<Vec<Invariant>, SpecError> {
    let decls = read_all(src).map_err(|e| syntax(e.pos, e.message))?;
    let mut p = Parser::new();
    p.spec = spec.clone();
    p.names = collect_names(spec);
    let mut out = Vec::new();
    for d in &decls {
        if d.head() != Some("invariant") {
            return Err(syntax(d.pos(), "only `(invariant ...)` declarations are allowed here"));
        }
        out.push(p.invariant(&d.list().unwrap()[1..], d.pos())?);
    }
    Ok(out)
}

fn collect_names(spec: &RabSpec) -> BTreeSet<String> {
    let sig = &spec.signature;
    let mut n: BTreeSet<String> = BTreeSet::new();
    n.extend(sig.sorts.iter().map(|s| s.name.to_string()));
    n.extend(spec.mem_sorts.iter().map(|s| s.name.to_string()));
    n.extend(sig.funs.iter().map(|s| s.name.to_string()));
    n.extend(sig.rels.iter().map(|s| s.name.to_string()));
    n.extend(sig.consts.iter().map(|s| s.name.to_string()));
    n.extend(sig.elem_consts.values().flat_map(|e| [e.t.to_string(), e.f.to_string()]));
    n.extend(spec.vars.iter().map(|s| s.name.to_string()));
    n.extend(spec.arrays.iter().map(|s| s.name.to_string()));
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "
(theory none)
(sort D :value)
(mem-sort E)
(const c D)
(var x D)
(arr a E -> D)
(init (= x undef) (= a (lambda undef)))
(transition put
  (exists (i E))
  (data)
  (guard (= (select a i) undef))
  (update (:= a (lambda j (case ((= j i) c) (else (select a j)))))))
(unsafe both (exists ((i E) (j E)) (and (distinct i j) (= (select a i) c) (= (select a j) c))))
";

    #[test]
    fn parses_toy() {
        let s = parse(TOY).unwrap();
        assert_eq!(s.transitions.len(), 1);
        assert_eq!(s.transitions[0].array_updates.len(), 1);
        assert_eq!(s.unsafe_props.len(), 1);
    }

    #[test]
    fn syntax_error_position() {
        let e = parse("(theory none)\n(sort D :value\n").unwrap_err();
        assert_eq!(e, SpecError::Syntax { pos: Pos { line: 2, col: 1 }, message: "unclosed `(`".into() });
    }

    #[test]
    fn unknown_symbol_is_reported() {
        let e = parse("(theory none)\n(sort D :value)\n(var x D)\n(unsafe u (= x zz))").unwrap_err();
        assert!(matches!(e, SpecError::UnknownSymbol { ref name, .. } if name == "zz"));
    }

    #[test]
    fn sort_error_is_reported() {
        let e = parse("(theory none)\n(sort D :value)\n(sort F :value)\n(var x D)\n(const c F)\n(unsafe u (= x c))")
            .unwrap_err();
        assert!(matches!(e, SpecError::Sort { .. }), "{e:?}");
    }

    #[test]
    fn undef_sort_inferred_from_either_side() {
        let s = parse("(theory none)\n(sort D :value)\n(var x D)\n(unsafe u (= undef x))").unwrap();
        let Formula::Eq(a, _) = &s.unsafe_props[0].formula else { panic!() };
        assert!(a.is_undef());
    }

    #[test]
    fn numerals_need_a_theory() {
        let e = parse("(theory none)\n(sort D :value)\n(var x D)\n(unsafe u (< 1 2))").unwrap_err();
        assert!(matches!(e, SpecError::Sort { .. }));
    }

    #[test]
    fn uguard_sort_is_inferred() {
        let src = "(theory none)(sort D :value)(mem-sort E)(mem-sort F)(var x D)(arr a E -> D)(arr b F -> D)
(transition t (exists) (data) (guard true) (uguard k (= (select b k) undef)) (update (:= x undef)))
(unsafe u (= x undef))";
        let s = parse(src).unwrap();
        assert_eq!(&*s.transitions[0].universal.as_ref().unwrap().var.sort.name, "F");
    }
}
