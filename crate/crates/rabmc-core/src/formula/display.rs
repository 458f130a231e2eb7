//! Prefix (s-expression) rendering, the same concrete syntax the spec
//! reader accepts.

use std::fmt::{self, Display, Formatter, Write};

use num::{BigRational, One, Signed};

use super::{Formula, LinExpr, Term, Var};

pub(crate) fn write_num(f: &mut impl Write, n: &BigRational) -> fmt::Result {
    let a = n.abs();
    let body = if a.is_integer() { a.numer().to_string() } else { format!("(/ {} {})", a.numer(), a.denom()) };
    if n.is_negative() {
        write!(f, "(- {body})")
    } else {
        f.write_str(&body)
    }
}

fn write_monomial(f: &mut Formatter<'_>, c: &BigRational, t: &Term) -> fmt::Result {
    if c.is_one() {
        write!(f, "{t}")
    } else if (-c).is_one() {
        write!(f, "(- {t})")
    } else {
        f.write_str("(* ")?;
        write_num(f, c)?;
        write!(f, " {t})")
    }
}

impl Display for LinExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let parts = self.terms.len() + usize::from(!num::Zero::is_zero(&self.constant));
        if parts == 1 && self.terms.len() == 1 {
            return write_monomial(f, &self.terms[0].0, &self.terms[0].1);
        }
        f.write_str("(+")?;
        for (c, t) in &self.terms {
            f.write_str(" ")?;
            write_monomial(f, c, t)?;
        }
        if !num::Zero::is_zero(&self.constant) {
            f.write_str(" ")?;
            write_num(f, &self.constant)?;
        }
        f.write_str(")")
    }
}

impl Display for Var {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::State(n, _) | Term::Const(n, _) => f.write_str(n),
            Term::App { fun, arg, .. } => write!(f, "({fun} {arg})"),
            Term::Select { array, index, .. } => write!(f, "(select {array} {index})"),
            Term::Num(n, _) => write_num(f, n),
            Term::Lin(l) => write!(f, "{l}"),
            Term::Case { branches, default } => {
                f.write_str("(case")?;
                for (c, t) in branches {
                    write!(f, " ({c} {t})")?;
                }
                write!(f, " (else {default}))")
            }
        }
    }
}

fn write_vars(f: &mut Formatter<'_>, vs: &[Var]) -> fmt::Result {
    f.write_str("(")?;
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "({} {})", v.name, v.sort)?;
    }
    f.write_str(")")
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Lt(a, b) => write!(f, "(< {a} {b})"),
            Formula::Le(a, b) => write!(f, "(<= {a} {b})"),
            Formula::Divides(m, t) => write!(f, "((_ divisible {m}) {t})"),
            Formula::Rel(r, args) => {
                write!(f, "({r}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::And(v) | Formula::Or(v) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for g in v {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
            Formula::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Formula::Exists(vs, b) | Formula::Forall(vs, b) => {
                f.write_str(if matches!(self, Formula::Exists(..)) { "(exists " } else { "(forall " })?;
                write_vars(f, vs)?;
                write!(f, " {b})")
            }
            Formula::LambdaEq { array, param, body, .. } => {
                write!(f, "(= {array} (lambda {} {body}))", param.name)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Sort, SortKind};
    use super::*;

    #[test]
    fn renders_prefix_syntax() {
        let e = Sort::new("E", SortKind::Memory);
        let d = Sort::new("D", SortKind::Value);
        let i = Var::new("i", e);
        let f = Formula::exists(
            vec![i.clone()],
            Formula::and(vec![
                Formula::neq(Term::select("a", Term::var(&i), &d), Term::undef(&d)),
                Formula::Le(Term::int(-3), Term::state("n", &Sort::int())),
            ]),
        );
        assert_eq!(
            f.to_string(),
            "(exists ((i E)) (and (not (= (select a i) undef)) (<= (- 3) n)))"
        );
    }

    #[test]
    fn renders_linear_terms() {
        let n = Term::state("n", &Sort::int());
        let m = Term::state("m", &Sort::int());
        let t = LinExpr::build(
            Sort::int(),
            vec![(BigRational::from_integer(2.into()), n), (-BigRational::one(), m)],
            BigRational::one(),
        );
        assert_eq!(t.to_string(), "(+ (- m) (* 2 n) 1)");
    }
}
