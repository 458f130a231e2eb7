//! Linear arithmetic expressions and canonical arithmetic atoms.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::{Formula, Sort, Term};

/// `Σ cᵢ·tᵢ + constant`, with distinct non-linear atoms `tᵢ`, sorted,
/// and no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    pub terms: Vec<(BigRational, Term)>,
    pub constant: BigRational,
    pub sort: Sort,
}

impl LinExpr {
    pub fn zero(sort: Sort) -> LinExpr {
        LinExpr { terms: Vec::new(), constant: BigRational::zero(), sort }
    }

    /// Canonicalise and collapse into the simplest equivalent term.
    pub fn build(sort: Sort, terms: Vec<(BigRational, Term)>, constant: BigRational) -> Term {
        let mut acc = LinExpr::zero(sort);
        acc.constant = constant;
        for (c, t) in terms {
            acc.add_term(&c, &t);
        }
        acc.into_term()
    }

    /// Add `c·t`, flattening nested linear expressions and numerals.
    pub fn add_term(&mut self, c: &BigRational, t: &Term) {
        let view = as_linear(t);
        self.constant += c * &view.constant;
        let mut map: BTreeMap<Term, BigRational> = std::mem::take(&mut self.terms)
            .into_iter()
            .map(|(k, v)| (v, k))
            .collect();
        for (k, v) in view.terms {
            let e = map.entry(v).or_insert_with(BigRational::zero);
            *e += c * k;
        }
        self.terms = map
            .into_iter()
            .filter(|(_, k)| !k.is_zero())
            .map(|(v, k)| (k, v))
            .collect();
    }

    pub fn add(&mut self, other: &LinExpr, scale: &BigRational) {
        for (c, t) in &other.terms {
            self.add_term(&(c * scale), t);
        }
        self.constant += &other.constant * scale;
    }

    pub fn scale(&mut self, k: &BigRational) {
        if k.is_zero() {
            self.terms.clear();
            self.constant = BigRational::zero();
            return;
        }
        for (c, _) in self.terms.iter_mut() {
            *c *= k;
        }
        self.constant *= k;
    }

    pub fn coeff(&self, t: &Term) -> BigRational {
        self.terms
            .iter()
            .find(|(_, u)| u == t)
            .map(|(c, _)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn into_term(self) -> Term {
        if self.terms.is_empty() {
            return Term::Num(self.constant, self.sort);
        }
        if self.terms.len() == 1 && self.constant.is_zero() && self.terms[0].0.is_one() {
            return self.terms.into_iter().next().unwrap().1;
        }
        Term::Lin(self)
    }

    /// Remove `t` and return its coefficient.
    pub fn take(&mut self, t: &Term) -> BigRational {
        match self.terms.iter().position(|(_, u)| u == t) {
            Some(i) => self.terms.remove(i).0,
            None => BigRational::zero(),
        }
    }
}

/// View any arithmetic term as a linear expression.
pub fn as_linear(t: &Term) -> LinExpr {
    match t {
        Term::Num(n, s) => LinExpr { terms: vec![], constant: n.clone(), sort: s.clone() },
        Term::Lin(l) => l.clone(),
        other => LinExpr {
            terms: vec![(BigRational::one(), other.clone())],
            constant: BigRational::zero(),
            sort: other.sort(),
        },
    }
}

fn lcm_of_denominators(e: &LinExpr) -> BigInt {
    let mut l = e.constant.denom().clone();
    for (c, _) in &e.terms {
        l = l.lcm(c.denom());
    }
    l
}

fn gcd_of_numerators(e: &LinExpr) -> BigInt {
    let mut g = BigInt::zero();
    for (c, _) in &e.terms {
        g = g.gcd(c.numer());
    }
    g
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    Lt,
    Le,
    Eq,
}

/// Rewrite an arithmetic atom into canonical form `P ⋈ N` where `P` holds
/// the positive-coefficient monomials and `N` the negated negative ones,
/// integer sorts use only `<=` and `=` with coprime integer coefficients,
/// and ground atoms are evaluated. Non-arithmetic atoms pass through.
pub fn canonical_atom(f: &Formula) -> Formula {
    let (rel, a, b) = match f {
        Formula::Lt(a, b) => (Rel::Lt, a, b),
        Formula::Le(a, b) => (Rel::Le, a, b),
        Formula::Eq(a, b) if a.sort().is_arith() => (Rel::Eq, a, b),
        Formula::Divides(m, t) => return canonical_divides(m, t),
        other => return other.clone(),
    };
    let sort = a.sort();
    let mut e = as_linear(a);
    e.add(&as_linear(b), &-BigRational::one());
    let mut rel = rel;
    if sort.is_int() {
        let l = lcm_of_denominators(&e);
        e.scale(&BigRational::from_integer(l));
        if rel == Rel::Lt {
            // e < 0  <=>  e + 1 <= 0 over the integers
            e.constant += BigRational::one();
            rel = Rel::Le;
        }
        let g = gcd_of_numerators(&e);
        if !g.is_zero() && !g.is_one() {
            let gr = BigRational::from_integer(g.clone());
            for (c, _) in e.terms.iter_mut() {
                *c /= &gr;
            }
            if rel == Rel::Eq {
                if !(e.constant.numer() % &g).is_zero() {
                    return Formula::False;
                }
                e.constant /= &gr;
            } else {
                // Σ c t + k <= 0  <=>  Σ (c/g) t <= floor(-k/g)
                let bound = (-e.constant.clone() / &gr).floor();
                e.constant = -bound;
            }
        }
    } else if let Some((c, _)) = e.terms.first() {
        let c = c.abs();
        e.scale(&c.recip());
    }
    if rel == Rel::Eq {
        if let Some((c, _)) = e.terms.first() {
            if c.is_negative() {
                e.scale(&-BigRational::one());
            }
        }
    }
    if e.terms.is_empty() {
        let k = &e.constant;
        let holds = match rel {
            Rel::Lt => k.is_negative(),
            Rel::Le => !k.is_positive(),
            Rel::Eq => k.is_zero(),
        };
        return if holds { Formula::True } else { Formula::False };
    }
    let mut pos = LinExpr::zero(sort.clone());
    let mut neg = LinExpr::zero(sort.clone());
    for (c, t) in &e.terms {
        if c.is_positive() {
            pos.terms.push((c.clone(), t.clone()));
        } else {
            neg.terms.push((-c.clone(), t.clone()));
        }
    }
    if e.constant.is_positive() {
        pos.constant = e.constant.clone();
    } else {
        neg.constant = -e.constant.clone();
    }
    let (l, r) = (pos.into_term(), neg.into_term());
    match rel {
        Rel::Lt => Formula::Lt(l, r),
        Rel::Le => Formula::Le(l, r),
        Rel::Eq => Formula::Eq(l, r),
    }
}

fn canonical_divides(m: &BigInt, t: &Term) -> Formula {
    let m = m.abs();
    if m.is_one() {
        return Formula::True;
    }
    let mut e = as_linear(t);
    for (c, _) in e.terms.iter_mut() {
        let r = c.numer().mod_floor(&m);
        *c = BigRational::from_integer(r);
    }
    e.terms.retain(|(c, _)| !c.is_zero());
    let k = e.constant.numer().mod_floor(&m);
    e.constant = BigRational::from_integer(k);
    if e.terms.is_empty() {
        return if e.constant.is_zero() { Formula::True } else { Formula::False };
    }
    Formula::Divides(m, e.into_term())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y() -> Term {
        Term::state("y", &Sort::int())
    }
    fn z() -> Term {
        Term::state("z", &Sort::int())
    }

    #[test]
    fn strict_integer_bound_becomes_non_strict() {
        // y + 1 < z  ~>  y + 2 <= z
        let lhs = LinExpr::build(Sort::int(), vec![(BigRational::one(), y())], BigRational::one());
        let f = canonical_atom(&Formula::Lt(lhs, z()));
        let expect_l =
            LinExpr::build(Sort::int(), vec![(BigRational::one(), y())], BigRational::from_integer(2.into()));
        assert_eq!(f, Formula::Le(expect_l, z()));
    }

    #[test]
    fn gcd_tightens_bound() {
        // 2y <= 3  ~>  y <= 1
        let lhs = LinExpr::build(Sort::int(), vec![(BigRational::from_integer(2.into()), y())], BigRational::zero());
        let f = canonical_atom(&Formula::Le(lhs, Term::int(3)));
        assert_eq!(f, Formula::Le(y(), Term::int(1)));
    }

    #[test]
    fn unsatisfiable_integer_equation() {
        let lhs = LinExpr::build(Sort::int(), vec![(BigRational::from_integer(2.into()), y())], BigRational::zero());
        assert_eq!(canonical_atom(&Formula::Eq(lhs, Term::int(3))), Formula::False);
    }

    #[test]
    fn ground_atoms_fold() {
        assert_eq!(canonical_atom(&Formula::Lt(Term::int(1), Term::int(2))), Formula::True);
        assert_eq!(canonical_atom(&Formula::Le(Term::int(3), Term::int(2))), Formula::False);
    }

    #[test]
    fn equality_orientation_is_canonical() {
        assert_eq!(canonical_atom(&Formula::Eq(y(), z())), canonical_atom(&Formula::Eq(z(), y())));
    }
}
