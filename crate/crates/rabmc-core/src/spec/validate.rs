//! Static checks on a parsed spec.

use std::collections::BTreeSet;
use std::fmt;

use super::sexp::Pos;
use super::{parse_unchecked, RabSpec, SpecError};
use crate::formula::{Formula, SortKind, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub pos: Option<Pos>,
    /// Distinguishes sort errors from shape errors.
    pub is_sort_error: bool,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.pos {
            Some(p) => write!(f, "{p}: {sev}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

struct Checker<'a> {
    spec: &'a RabSpec,
    out: Vec<Diagnostic>,
    pos: Option<Pos>,
}

impl Checker<'_> {
    fn error(&mut self, message: impl Into<String>) {
        self.out.push(Diagnostic { severity: Severity::Error, message: message.into(), pos: self.pos, is_sort_error: false });
    }

    fn sort_error(&mut self, message: impl Into<String>) {
        self.out.push(Diagnostic { severity: Severity::Error, message: message.into(), pos: self.pos, is_sort_error: true });
    }

    fn warn(&mut self, message: impl Into<String>) {
        self.out.push(Diagnostic { severity: Severity::Warning, message: message.into(), pos: None, is_sort_error: false });
    }

    fn signature(&mut self) {
        let sig = &self.spec.signature;
        for f in &sig.funs {
            match f.domain.kind {
                SortKind::Id => {}
                SortKind::Arith(_) => self.error(format!("`{}`: arith sort cannot be function domain", f.name)),
                _ => self.error(format!("`{}`: function domain must be an id sort", f.name)),
            }
            if !f.codomain.is_basic() {
                self.error(format!("`{}`: function codomain must be a basic sort", f.name));
            }
        }
        for r in &sig.rels {
            if r.args.iter().any(|s| !matches!(s.kind, SortKind::Id | SortKind::Value)) {
                self.error(format!("`{}`: relation arguments must be id or value sorts", r.name));
            }
        }
        for c in &sig.consts {
            if !matches!(c.sort.kind, SortKind::Id | SortKind::Value | SortKind::Elem) {
                self.error(format!("`{}`: constants must have an id or value sort", c.name));
            }
        }
        for v in &self.spec.vars {
            if !v.sort.is_basic() && !v.sort.is_elem() {
                self.error(format!("memory variable `{}` must have a basic sort", v.name));
            }
        }
        for a in &self.spec.arrays {
            if !a.index.is_memory() {
                self.error(format!("array `{}` must be indexed by a memory sort", a.name));
            }
            if !a.elem.is_basic() && !a.elem.is_elem() {
                self.error(format!("array `{}` must store a basic sort", a.name));
            }
        }
        let mut alive_sorts = BTreeSet::new();
        for n in &self.spec.alive {
            let Some(a) = self.spec.array(n) else {
                self.error(format!("liveness array `{n}` is not declared"));
                continue;
            };
            if !a.elem.is_elem() {
                self.error(format!("liveness array `{n}` must store a flag sort"));
            }
            if !alive_sorts.insert(a.index.clone()) {
                self.error(format!("memory sort `{}` has more than one liveness array", a.index));
            }
        }
    }

    fn init(&mut self) {
        let mut seen = BTreeSet::new();
        for (x, c) in &self.spec.init.vars {
            if !seen.insert(x.clone()) {
                self.error(format!("`{x}` initialised twice"));
            }
            match self.spec.var(x) {
                Some(v) if v.sort != c.sort() => self.sort_error(format!("initial value of `{x}` has the wrong sort")),
                None => self.error(format!("`{x}` is not a memory variable")),
                _ => {}
            }
            if !matches!(c, Term::Const(..) | Term::Num(..)) {
                self.error(format!("initial value of `{x}` must be a constant"));
            }
        }
        for (a, c) in &self.spec.init.arrays {
            if !seen.insert(a.clone()) {
                self.error(format!("`{a}` initialised twice"));
            }
            match self.spec.array(a) {
                Some(d) if d.elem != c.sort() => self.sort_error(format!("initial value of `{a}` has the wrong sort")),
                None => self.error(format!("`{a}` is not an array")),
                _ => {}
            }
            if !matches!(c, Term::Const(..) | Term::Num(..)) {
                self.error(format!("initial value of `{a}` must be a constant"));
            }
            if self.spec.alive.contains(a) {
                self.error(format!("liveness array `{a}` cannot be initialised"));
            }
        }
    }

    fn scoped(&mut self, what: &str, f: &Formula, allowed: &[&Var]) {
        for v in f.free_vars() {
            if !allowed.contains(&&v) {
                self.error(format!("{what}: variable `{}` is not in scope", v.name));
            }
        }
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(_) | Term::Const(..) | Term::Num(..) | Term::State(..) => {}
            Term::App { fun, arg, sort } => {
                match self.spec.signature.fun(fun) {
                    Some(d) if d.domain == arg.sort() && d.codomain == *sort => {}
                    Some(_) => self.sort_error(format!("ill-sorted application of `{fun}`")),
                    None => self.error(format!("unknown function `{fun}`")),
                }
                self.term(arg);
            }
            Term::Select { array, index, sort } => {
                match self.spec.array(array) {
                    Some(d) if d.index == index.sort() && d.elem == *sort => {}
                    Some(_) => self.sort_error(format!("ill-sorted access to `{array}`")),
                    None => self.error(format!("unknown array `{array}`")),
                }
                self.term(index);
            }
            Term::Lin(l) => l.terms.iter().for_each(|(_, u)| {
                if u.sort() != l.sort {
                    self.sort_error("mixed sorts in a linear term");
                }
                self.term(u)
            }),
            Term::Case { branches, default } => {
                let s = default.sort();
                for (c, u) in branches {
                    self.qf("case condition", c);
                    self.formula(c);
                    if u.sort() != s {
                        self.sort_error("case arms have different sorts");
                    }
                    self.term(u);
                }
                self.term(default);
            }
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) => {
                if a.sort() != b.sort() {
                    self.sort_error(format!("equality between sorts {} and {}", a.sort(), b.sort()));
                }
                self.term(a);
                self.term(b);
            }
            Formula::Lt(a, b) | Formula::Le(a, b) => {
                if !a.sort().is_arith() || a.sort() != b.sort() {
                    self.sort_error("comparison needs arithmetic operands of one sort");
                }
                self.term(a);
                self.term(b);
            }
            Formula::Divides(_, t) => {
                if !t.sort().is_int() {
                    self.sort_error("divisibility needs an integer term");
                }
                self.term(t);
            }
            Formula::Rel(r, args) => {
                match self.spec.signature.rel(r) {
                    Some(d) if d.args.len() == args.len() && d.args.iter().zip(args).all(|(s, t)| *s == t.sort()) => {}
                    Some(_) => self.sort_error(format!("ill-sorted use of relation `{r}`")),
                    None => self.error(format!("unknown relation `{r}`")),
                }
                args.iter().for_each(|t| self.term(t));
            }
            Formula::Not(a) => self.formula(a),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| self.formula(g)),
            Formula::Implies(a, b) => {
                self.formula(a);
                self.formula(b);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => self.formula(b),
            Formula::LambdaEq { body, .. } => self.term(body),
        }
    }

    fn qf(&mut self, what: &str, f: &Formula) {
        if !f.is_quantifier_free() {
            self.error(format!("{what} must be quantifier-free"));
        }
    }

    fn index_vars(&mut self, what: &str, vs: &[Var]) {
        for v in vs {
            if !v.sort.is_memory() {
                self.error(format!("{what}: `{}` must range over a memory sort", v.name));
            }
        }
    }

    fn transitions(&mut self) {
        for t in &self.spec.transitions {
            self.pos = self.spec.spans.0.get(&format!("transition:{}", t.name)).copied();
            let what = format!("transition `{}`", t.name);
            self.index_vars(&what, &t.index_vars);
            for d in &t.data_vars {
                if !d.sort.is_basic() {
                    self.error(format!("{what}: data variable `{}` must have a basic sort", d.name));
                }
            }
            let outer: Vec<&Var> = t.index_vars.iter().chain(&t.data_vars).collect();
            self.qf(&format!("{what}: guard"), &t.guard);
            self.scoped(&what, &t.guard, &outer);
            self.formula(&t.guard);
            if let Some(u) = &t.universal {
                if !u.var.sort.is_memory() {
                    self.error(format!("{what}: universal variable `{}` must range over a memory sort", u.var.name));
                }
                if t.guard.free_vars().contains(&u.var) {
                    self.error(format!("{what}: universal variable occurs in the guard"));
                }
                self.qf(&format!("{what}: universal guard"), &u.guard);
                let mut inner = outer.clone();
                inner.push(&u.var);
                self.scoped(&what, &u.guard, &inner);
                self.formula(&u.guard);
            }
            let mut seen = BTreeSet::new();
            for (x, f) in &t.var_updates {
                if !seen.insert(x.clone()) {
                    self.error(format!("{what}: `{x}` updated twice"));
                }
                match self.spec.var(x) {
                    Some(v) if v.sort != f.sort() => self.sort_error(format!("{what}: update of `{x}` has the wrong sort")),
                    None => self.error(format!("{what}: `{x}` is not a memory variable")),
                    _ => {}
                }
                let as_f = Formula::eq(f.clone(), f.clone());
                self.scoped(&what, &as_f, &outer);
                self.term(f);
            }
            for u in &t.array_updates {
                if !seen.insert(u.array.clone()) {
                    self.error(format!("{what}: `{}` updated twice", u.array));
                }
                match self.spec.array(&u.array) {
                    Some(d) if d.elem != u.body.sort() || d.index != u.param.sort => {
                        self.sort_error(format!("{what}: update of `{}` has the wrong sort", u.array))
                    }
                    None => self.error(format!("{what}: `{}` is not an array", u.array)),
                    _ => {}
                }
                let as_f = Formula::eq(u.body.clone(), u.body.clone());
                let mut inner = outer.clone();
                inner.push(&u.param);
                self.scoped(&what, &as_f, &inner);
                self.term(&u.body);
            }
        }
        self.pos = None;
    }

    fn properties(&mut self) {
        for u in &self.spec.unsafe_props {
            self.pos = self.spec.spans.0.get(&format!("unsafe:{}", u.name)).copied();
            let what = format!("unsafe formula `{}`", u.name);
            let (vars, body) = match &u.formula {
                Formula::Exists(vs, b) => (vs.clone(), &**b),
                f => (vec![], f),
            };
            self.index_vars(&what, &vars);
            if !body.is_quantifier_free() {
                self.error(format!("{what} must be existential over index variables with a quantifier-free body"));
            }
            self.scoped(&what, body, &vars.iter().collect::<Vec<_>>());
            self.formula(body);
        }
        for inv in &self.spec.invariants {
            self.pos = self.spec.spans.0.get(&format!("invariant:{}", inv.name)).copied();
            self.invariant(inv);
        }
        self.pos = None;
    }

    fn invariant(&mut self, inv: &super::Invariant) {
        let what = format!("invariant `{}`", inv.name);
        self.index_vars(&what, &inv.vars);
        if !inv.body.is_quantifier_free() {
            self.error(format!("{what} must be universal over index variables with a quantifier-free body"));
        }
        self.scoped(&what, &inv.body, &inv.vars.iter().collect::<Vec<_>>());
        self.formula(&inv.body);
    }

    fn unused(&mut self) {
        let mut used = BTreeSet::new();
        let mut note = |t: &Term| {
            match t {
                Term::State(n, _) | Term::Const(n, _) => {
                    used.insert(n.to_string());
                }
                Term::App { fun, .. } => {
                    used.insert(fun.to_string());
                }
                Term::Select { array, .. } => {
                    used.insert(array.to_string());
                }
                _ => {}
            }
            false
        };
        let s = self.spec;
        let mut fs: Vec<Formula> = vec![];
        for t in &s.transitions {
            fs.push(t.guard.clone());
            if let Some(u) = &t.universal {
                fs.push(u.guard.clone());
            }
            fs.extend(t.var_updates.iter().map(|(_, f)| Formula::eq(f.clone(), f.clone())));
            fs.extend(t.array_updates.iter().map(|u| Formula::eq(u.body.clone(), u.body.clone())));
        }
        fs.extend(s.unsafe_props.iter().map(|u| u.formula.clone()));
        fs.extend(s.invariants.iter().map(|i| i.body.clone()));
        for f in &fs {
            f.any_term(&mut note);
        }
        let mut rels = BTreeSet::new();
        for f in &fs {
            let mut atoms = vec![];
            f.atoms_into(&mut atoms);
            for a in atoms {
                if let Formula::Rel(r, _) = a {
                    rels.insert(r.to_string());
                }
            }
        }
        let names = s
            .vars
            .iter()
            .map(|v| ("memory variable", &v.name))
            .chain(s.arrays.iter().filter(|a| !s.alive.contains(&a.name)).map(|a| ("array", &a.name)))
            .chain(s.signature.funs.iter().map(|f| ("function", &f.name)));
        let mut msgs = vec![];
        for (kind, n) in names {
            if !used.contains(&**n) {
                msgs.push(format!("{kind} `{n}` is never read"));
            }
        }
        for r in &s.signature.rels {
            if !rels.contains(&*r.name) {
                msgs.push(format!("relation `{}` is never used", r.name));
            }
        }
        msgs.into_iter().for_each(|m| self.warn(m));
    }
}

/// Every diagnostic for `spec`; errors first.
pub fn validate(spec: &RabSpec) -> Vec<Diagnostic> {
    let mut c = Checker { spec, out: vec![], pos: None };
    c.signature();
    c.init();
    c.transitions();
    c.properties();
    c.unused();
    let mut out = c.out;
    out.sort_by(|a, b| b.severity.cmp(&a.severity));
    out
}

/// Diagnostics for source text, including reader errors.
pub fn check_source(src: &str) -> Vec<Diagnostic> {
    match parse_unchecked(src) {
        Ok(spec) => validate(&spec),
        Err(e) => {
            let is_sort_error = matches!(e, SpecError::Sort { .. });
            vec![Diagnostic { severity: Severity::Error, message: e.to_string(), pos: Some(e.pos()), is_sort_error }]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(src: &str) -> Vec<String> {
        check_source(src).into_iter().filter(|d| d.severity == Severity::Error).map(|d| d.message).collect()
    }

    #[test]
    fn arith_domain_is_rejected() {
        let e = errors("(theory lia)\n(sort D :value)\n(fun f Int -> D)\n");
        assert!(e.iter().any(|m| m.contains("arith sort cannot be function domain")), "{e:?}");
    }

    #[test]
    fn existential_invariant_is_a_shape_error() {
        let src = "(theory none)(sort D :value)(mem-sort E)(arr a E -> D)
(invariant inv (forall (i E)) (exists ((j E)) (= (select a i) (select a j))))";
        let d = check_source(src);
        assert!(d.iter().any(|d| d.severity == Severity::Error && !d.is_sort_error), "{d:?}");
    }

    #[test]
    fn universal_in_unsafe_is_rejected() {
        let src = "(theory none)(sort D :value)(mem-sort E)(arr a E -> D)
(unsafe u (forall ((i E)) (= (select a i) undef)))";
        assert!(!errors(src).is_empty());
    }

    #[test]
    fn unused_symbols_warn() {
        let d = check_source("(theory none)(sort D :value)(var x D)(var y D)(unsafe u (= x undef))");
        assert!(d.iter().any(|d| d.severity == Severity::Warning && d.message.contains("`y`")));
        assert!(d.iter().all(|d| d.severity == Severity::Warning));
    }
}
