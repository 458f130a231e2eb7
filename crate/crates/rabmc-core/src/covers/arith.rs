//! Projection of linear arithmetic constraints: Fourier-Motzkin over the
//! reals and Cooper's method over the integers.

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use crate::formula::{as_linear, canonical_atom, Formula, LinExpr, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
    Dvd(BigInt),
    NotDvd(BigInt),
}

/// `e ⋈ 0`, or `m | e` for the divisibility relations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct ALit {
    pub e: LinExpr,
    pub rel: Rel,
}

fn diff(a: &Term, b: &Term) -> LinExpr {
    let mut e = as_linear(a);
    e.add(&as_linear(b), &-BigRational::one());
    e
}

impl ALit {
    /// Read an arithmetic literal; `None` for anything else.
    pub(crate) fn from_literal(l: &Formula) -> Option<ALit> {
        let (neg, atom) = match l {
            Formula::Not(a) => (true, &**a),
            a => (false, a),
        };
        let (e, rel) = match (atom, neg) {
            (Formula::Eq(a, b), false) if a.sort().is_arith() => (diff(a, b), Rel::Eq),
            (Formula::Eq(a, b), true) if a.sort().is_arith() => (diff(a, b), Rel::Ne),
            (Formula::Lt(a, b), false) => (diff(a, b), Rel::Lt),
            (Formula::Lt(a, b), true) => (diff(b, a), Rel::Le),
            (Formula::Le(a, b), false) => (diff(a, b), Rel::Le),
            (Formula::Le(a, b), true) => (diff(b, a), Rel::Lt),
            (Formula::Divides(m, t), false) => (as_linear(t), Rel::Dvd(m.clone())),
            (Formula::Divides(m, t), true) => (as_linear(t), Rel::NotDvd(m.clone())),
            _ => return None,
        };
        Some(ALit { e, rel })
    }

    pub(crate) fn to_formula(&self) -> Formula {
        let zero = Term::Num(BigRational::zero(), self.e.sort.clone());
        let t = self.e.clone().into_term();
        match &self.rel {
            Rel::Lt => canonical_atom(&Formula::Lt(t, zero)),
            Rel::Le => canonical_atom(&Formula::Le(t, zero)),
            Rel::Eq => canonical_atom(&Formula::Eq(t, zero)),
            Rel::Ne => Formula::not(canonical_atom(&Formula::Eq(t, zero))),
            Rel::Dvd(m) => canonical_atom(&Formula::Divides(m.clone(), t)),
            Rel::NotDvd(m) => Formula::not(canonical_atom(&Formula::Divides(m.clone(), t))),
        }
    }

    fn coeff(&self, x: &Var) -> BigRational {
        self.e.coeff(&Term::Var(x.clone()))
    }

    fn mentions(&self, x: &Var) -> bool {
        !self.coeff(x).is_zero()
    }

    /// Ground literals evaluate to a truth value.
    fn truth(&self) -> Option<bool> {
        if !self.e.terms.is_empty() {
            return None;
        }
        let k = &self.e.constant;
        Some(match &self.rel {
            Rel::Lt => k.is_negative(),
            Rel::Le => !k.is_positive(),
            Rel::Eq => k.is_zero(),
            Rel::Ne => !k.is_zero(),
            Rel::Dvd(m) => k.is_integer() && k.numer().mod_floor(m).is_zero(),
            Rel::NotDvd(m) => !(k.is_integer() && k.numer().mod_floor(m).is_zero()),
        })
    }

    /// Replace `x` by `s`.
    fn subst(&self, x: &Var, s: &LinExpr) -> ALit {
        let mut e = self.e.clone();
        let c = e.take(&Term::Var(x.clone()));
        e.add(s, &c);
        ALit { e, rel: self.rel.clone() }
    }

    fn scaled(&self, k: &BigRational) -> ALit {
        let mut e = self.e.clone();
        e.scale(k);
        let rel = match &self.rel {
            Rel::Dvd(m) => Rel::Dvd(m * k.to_integer()),
            Rel::NotDvd(m) => Rel::NotDvd(m * k.to_integer()),
            r => r.clone(),
        };
        ALit { e, rel }
    }
}

/// A conjunction after simplification: `None` when some literal is false.
fn clean(lits: Vec<ALit>) -> Option<Vec<ALit>> {
    let mut out = Vec::new();
    for l in lits {
        match l.truth() {
            Some(true) => {}
            Some(false) => return None,
            None => {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
    }
    Some(out)
}

/// The projection could not be done exactly within the limits.
#[derive(Debug)]
pub(crate) struct Inexact;

/// Cap on the number of disequalities split into two strict bounds.
const MAX_NE_SPLITS: usize = 8;

/// `∃x. ⋀ lits` over the reals, as a disjunction of conjunctions.
pub(crate) fn project_real(x: &Var, lits: Vec<ALit>) -> (Vec<Vec<ALit>>, bool) {
    let (with, mut rest): (Vec<ALit>, Vec<ALit>) = lits.into_iter().partition(|l| l.mentions(x));
    if let Some(eq) = with.iter().find(|l| l.rel == Rel::Eq) {
        // x = -(e - c·x)/c
        let c = eq.coeff(x);
        let mut s = eq.e.clone();
        s.take(&Term::Var(x.clone()));
        s.scale(&(-c.recip()));
        rest.extend(with.iter().filter(|l| *l != eq).map(|l| l.subst(x, &s)));
        return (clean(rest).into_iter().collect(), false);
    }
    let (nes, bounds): (Vec<ALit>, Vec<ALit>) = with.into_iter().partition(|l| l.rel == Rel::Ne);
    let mut approximate = false;
    let mut cases: Vec<Vec<ALit>> = vec![bounds];
    if nes.len() > MAX_NE_SPLITS {
        approximate = true;
    } else {
        for ne in &nes {
            let lt = ALit { e: ne.e.clone(), rel: Rel::Lt };
            let mut neg = ne.e.clone();
            neg.scale(&-BigRational::one());
            let gt = ALit { e: neg, rel: Rel::Lt };
            cases = cases
                .into_iter()
                .flat_map(|c| {
                    let mut a = c.clone();
                    a.push(lt.clone());
                    let mut b = c;
                    b.push(gt.clone());
                    [a, b]
                })
                .collect();
        }
    }
    let mut out = Vec::new();
    for case in cases {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for l in case {
            // c·x + r ⋈ 0
            let c = l.coeff(x);
            let mut r = l.e.clone();
            r.take(&Term::Var(x.clone()));
            r.scale(&(-c.recip()));
            // x ⋈ r when c > 0, x ⋈' r flipped otherwise
            let strict = l.rel == Rel::Lt;
            if c.is_positive() {
                upper.push((r, strict));
            } else {
                lower.push((r, strict));
            }
        }
        let mut conj = rest.clone();
        for (lo, s1) in &lower {
            for (hi, s2) in &upper {
                let mut e = lo.clone();
                e.add(hi, &-BigRational::one());
                conj.push(ALit { e, rel: if *s1 || *s2 { Rel::Lt } else { Rel::Le } });
            }
        }
        if let Some(c) = clean(conj) {
            out.push(c);
        }
    }
    (out, approximate)
}

fn lcm_denoms(e: &LinExpr) -> BigInt {
    let mut l = e.constant.denom().clone();
    for (c, _) in &e.terms {
        l = l.lcm(c.denom());
    }
    l
}

/// Scale to integer coefficients and drop strict inequalities.
fn integral(l: &ALit) -> ALit {
    let k = BigRational::from_integer(lcm_denoms(&l.e));
    let mut l = l.scaled(&k);
    if l.rel == Rel::Lt {
        l.e.constant += BigRational::one();
        l.rel = Rel::Le;
    }
    l
}

/// `∃x. ⋀ lits` over the integers by Cooper's method. Fails when the
/// least common multiple of the moduli exceeds `max_modulus`.
pub(crate) fn project_int(x: &Var, lits: Vec<ALit>, max_modulus: u64) -> Result<Vec<Vec<ALit>>, Inexact> {
    let (with, rest): (Vec<ALit>, Vec<ALit>) = lits.into_iter().partition(|l| l.mentions(x));
    let with: Vec<ALit> = with.iter().map(integral).collect();
    let xt = Term::Var(x.clone());
    // unit equality: plain substitution
    if let Some(eq) = with.iter().find(|l| l.rel == Rel::Eq && l.coeff(x).abs().is_one()) {
        let c = eq.coeff(x);
        let mut s = eq.e.clone();
        s.take(&xt);
        s.scale(&(-c.recip()));
        let mut conj = rest;
        conj.extend(with.iter().filter(|l| *l != eq).map(|l| l.subst(x, &s)));
        return Ok(clean(conj).into_iter().collect());
    }
    // make every coefficient of x equal to ±l, then read l·x as x
    let mut l = BigInt::one();
    for a in &with {
        l = l.lcm(&a.coeff(x).to_integer().abs());
    }
    let mut unit: Vec<ALit> = Vec::new();
    for a in &with {
        let c = a.coeff(x).to_integer().abs();
        let mut b = a.scaled(&BigRational::from_integer(&l / &c));
        let sign = b.coeff(x).signum();
        b.e.take(&xt);
        b.e.add_term(&sign, &xt);
        unit.push(b);
    }
    if !l.is_one() {
        let mut e = LinExpr::zero(x.sort.clone());
        e.add_term(&BigRational::one(), &xt);
        unit.push(ALit { e, rel: Rel::Dvd(l.clone()) });
    }
    let mut delta = BigInt::one();
    for a in &unit {
        if let Rel::Dvd(m) | Rel::NotDvd(m) = &a.rel {
            delta = delta.lcm(m);
        }
    }
    if delta > BigInt::from(max_modulus) {
        return Err(Inexact);
    }
    let delta: i64 = delta.try_into().map_err(|_| Inexact)?;

    // bound terms: x = b + j (from below) or x = a - j (from above)
    let rest_of = |a: &ALit| {
        let mut r = a.e.clone();
        r.take(&xt);
        r
    };
    let neg = |mut e: LinExpr| {
        e.scale(&-BigRational::one());
        e
    };
    let shift = |mut e: LinExpr, k: i64| {
        e.constant += BigRational::from_integer(k.into());
        e
    };
    let mut below: Vec<LinExpr> = Vec::new();
    let mut above: Vec<LinExpr> = Vec::new();
    for a in &unit {
        let pos = a.coeff(x).is_positive();
        let r = rest_of(a);
        // x + r ⋈ 0 means x ⋈ -r; -x + r ⋈ 0 means x ⋈' r
        let t = if pos { neg(r) } else { r };
        match (&a.rel, pos) {
            (Rel::Le, true) => above.push(shift(t, 1)),
            (Rel::Le, false) => below.push(shift(t, -1)),
            (Rel::Eq, _) => {
                below.push(shift(t.clone(), -1));
                above.push(shift(t, 1));
            }
            (Rel::Ne, _) => {
                below.push(t.clone());
                above.push(t);
            }
            _ => {}
        }
    }
    let from_below = below.len() <= above.len();
    // the projection at minus (or plus) infinity; `None` if it is false
    let mut infinity: Option<Vec<ALit>> = Some(Vec::new());
    for a in &unit {
        let pos = a.coeff(x).is_positive();
        let truth = match &a.rel {
            Rel::Le if pos => Some(from_below),
            Rel::Le => Some(!from_below),
            Rel::Eq => Some(false),
            Rel::Ne => Some(true),
            _ => None,
        };
        match (truth, infinity.as_mut()) {
            (Some(false), _) => infinity = None,
            (None, Some(v)) => v.push(a.clone()),
            _ => {}
        }
    }
    let mut out: Vec<Vec<ALit>> = Vec::new();
    let mut push = |conj: Vec<ALit>| {
        if let Some(c) = clean(conj) {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    };
    if let Some(inf) = &infinity {
        for j in 1..=delta {
            let mut s = LinExpr::zero(x.sort.clone());
            s.constant = BigRational::from_integer(j.into());
            let mut conj = rest.clone();
            conj.extend(inf.iter().map(|a| a.subst(x, &s)));
            push(conj);
        }
    }
    let points = if from_below { &below } else { &above };
    for p in points {
        for j in 1..=delta {
            let s = shift(p.clone(), if from_below { j } else { -j });
            let mut conj = rest.clone();
            conj.extend(unit.iter().map(|a| a.subst(x, &s)));
            push(conj);
        }
    }
    Ok(out)
}

/// The real shadow of an integer problem: implied, hence a sound
/// over-approximation.
pub(crate) fn shadow_int(x: &Var, lits: Vec<ALit>) -> Vec<Vec<ALit>> {
    let (with, rest): (Vec<ALit>, Vec<ALit>) = lits.into_iter().partition(|l| l.mentions(x));
    let kept: Vec<ALit> = with
        .into_iter()
        .filter(|l| matches!(l.rel, Rel::Lt | Rel::Le | Rel::Eq))
        .map(|l| integral(&l))
        .collect();
    let mut all = rest;
    all.extend(kept);
    project_real(x, all).0
}
