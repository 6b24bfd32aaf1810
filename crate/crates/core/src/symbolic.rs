//! Laurent polynomials with exact rational coefficients over the moment
//! symbols of a random walk.
//!
//! Exponents may be negative so that single-term expressions such as
//! `mu[Fm,1]` or `q` are units; this is exactly what the operator ring needs
//! to invert `S L_{F-,m}` and `Id - L_{F+,m-1}`, whose constant terms are
//! `mu[Fm,1]` and `q = 1 - p`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::scalar::{format_rational, Scalar};

/// A named moment symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Ascent probability `p = P{tau < inf}`.
    P,
    /// Complementary probability `q = 1 - p`.
    Q,
    /// Step mean `mu[F,1]`.
    MuF,
    /// Weak descending ladder moment `mu[Fm,j]`.
    MuMinus(u32),
    /// Defective strict ascending ladder moment `mu[Fp,j]`.
    MuPlus(u32),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::P => write!(f, "p"),
            Symbol::Q => write!(f, "q"),
            Symbol::MuF => write!(f, "mu[F,1]"),
            Symbol::MuMinus(j) => write!(f, "mu[Fm,{j}]"),
            Symbol::MuPlus(j) => write!(f, "mu[Fp,{j}]"),
        }
    }
}

/// Product of symbols with nonzero integer exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Symbol, i32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(sym: Symbol, exp: i32) -> Self {
        let mut m = Monomial::one();
        if exp != 0 {
            m.0.insert(sym, exp);
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, sym: Symbol) -> i32 {
        self.0.get(&sym).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (Symbol, i32)> + '_ {
        self.0.iter().map(|(s, e)| (*s, *e))
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (s, e) in &other.0 {
            let entry = out.entry(*s).or_insert(0);
            *entry += e;
            if *entry == 0 {
                out.remove(s);
            }
        }
        Monomial(out)
    }

    fn recip(&self) -> Monomial {
        Monomial(self.0.iter().map(|(s, e)| (*s, -e)).collect())
    }

    fn without(&self, sym: Symbol) -> Monomial {
        let mut out = self.0.clone();
        out.remove(&sym);
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, e) in &self.0 {
            if !first {
                write!(f, " * ")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("cannot raise a multi-term expression to a negative power (substituting {0})")]
    NotInvertible(Symbol),
}

/// Laurent polynomial in the moment symbols with rational coefficients.
///
/// Canonical form: terms keyed by monomial in sorted order, zero
/// coefficients never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolicScalar {
    terms: BTreeMap<Monomial, BigRational>,
}

impl SymbolicScalar {
    pub fn constant(c: BigRational) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn term(c: BigRational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&c) {
            terms.insert(m, c);
        }
        SymbolicScalar { terms }
    }

    pub fn symbol(sym: Symbol) -> Self {
        Self::term(<BigRational as One>::one(), Monomial::var(sym, 1))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if Zero::is_zero(&c) {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(<BigRational as Zero>::zero);
        *slot += c;
        if Zero::is_zero(slot) {
            self.terms.remove(&m);
        }
    }

    /// Integer power; negative powers require a single-term expression.
    pub fn pow(&self, e: i32) -> Option<Self> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = <Self as Scalar>::one();
        for _ in 0..e.unsigned_abs() {
            acc = Scalar::mul(&acc, &base);
        }
        Some(acc)
    }

    /// Replaces every occurrence of `sym` by `value`.
    pub fn substitute(&self, sym: Symbol, value: &SymbolicScalar) -> Result<Self, SymbolicError> {
        let mut out = SymbolicScalar::default();
        for (m, c) in &self.terms {
            let e = m.exponent(sym);
            let rest = SymbolicScalar::term(c.clone(), m.without(sym));
            let factor = value.pow(e).ok_or(SymbolicError::NotInvertible(sym))?;
            for (m2, c2) in Scalar::mul(&rest, &factor).terms {
                out.add_term(m2, c2);
            }
        }
        Ok(out)
    }

    /// Numeric value given an assignment of every symbol that occurs.
    pub fn evaluate(&self, assign: &dyn Fn(Symbol) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let coef = rational_to_f64(c);
                m.factors()
                    .fold(coef, |acc, (s, e)| acc * assign(s).powi(e))
            })
            .sum()
    }
}

pub(crate) fn rational_to_f64(c: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or_else(|| {
        let n = c.numer().to_f64().unwrap_or(f64::NAN);
        let d = c.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl Scalar for SymbolicScalar {
    fn zero() -> Self {
        SymbolicScalar::default()
    }
    fn one() -> Self {
        SymbolicScalar::constant(<BigRational as One>::one())
    }
    fn from_i64(n: i64) -> Self {
        SymbolicScalar::constant(BigRational::from_integer(n.into()))
    }
    fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
    fn sub(&self, rhs: &Self) -> Self {
        Scalar::add(self, &Scalar::neg(rhs))
    }
    fn mul(&self, rhs: &Self) -> Self {
        let mut out = SymbolicScalar::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
    fn neg(&self) -> Self {
        SymbolicScalar {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
    fn recip(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next()?;
        Some(SymbolicScalar::term(c.recip(), m.recip()))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl fmt::Display for SymbolicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            if m.is_one() {
                write!(f, "{}", format_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{} * {m}", format_rational(&a))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn sym(s: Symbol) -> SymbolicScalar {
        SymbolicScalar::symbol(s)
    }

    #[test]
    fn cancellation_removes_terms() {
        let a = sym(Symbol::Q);
        let z = Scalar::sub(&a, &a);
        assert!(Scalar::is_zero(&z));
        assert_eq!(z.to_string(), "0");
    }

    #[test]
    fn monomial_reciprocal_round_trips() {
        let a = Scalar::mul(
            &SymbolicScalar::constant(ratio(3, 2)),
            &Scalar::mul(&sym(Symbol::MuMinus(1)), &sym(Symbol::Q)),
        );
        let inv = a.recip().unwrap();
        assert_eq!(Scalar::mul(&a, &inv), <SymbolicScalar as Scalar>::one());
        assert_eq!(inv.to_string(), "2/3 * q^-1 * mu[Fm,1]^-1");
    }

    #[test]
    fn binomial_is_not_a_unit() {
        let one = <SymbolicScalar as Scalar>::one();
        assert!(Scalar::sub(&one, &sym(Symbol::P)).recip().is_none());
    }

    #[test]
    fn substitution_of_monomial_with_negative_power() {
        // mu[F,1]^-2 with mu[F,1] = q * mu[Fm,1]
        let e = sym(Symbol::MuF).pow(-2).unwrap();
        let v = Scalar::mul(&sym(Symbol::Q), &sym(Symbol::MuMinus(1)));
        let s = e.substitute(Symbol::MuF, &v).unwrap();
        assert_eq!(s.to_string(), "q^-2 * mu[Fm,1]^-2");
    }

    #[test]
    fn substituting_binomial_into_negative_power_fails() {
        let e = sym(Symbol::Q).pow(-1).unwrap();
        let one = <SymbolicScalar as Scalar>::one();
        let v = Scalar::sub(&one, &sym(Symbol::P));
        assert_eq!(
            e.substitute(Symbol::Q, &v),
            Err(SymbolicError::NotInvertible(Symbol::Q))
        );
    }

    #[test]
    fn evaluation_matches_hand_value() {
        let e = Scalar::add(
            &Scalar::mul(&sym(Symbol::Q), &sym(Symbol::MuPlus(1))),
            &SymbolicScalar::constant(ratio(1, 2)),
        );
        let v = e.evaluate(&|s| match s {
            Symbol::Q => 2.0,
            Symbol::MuPlus(1) => 3.0,
            _ => f64::NAN,
        });
        assert_eq!(v, 6.5);
    }
}
