//! Exact information quantities.
//!
//! Every distribution the auditor builds has integer atom weights, so each
//! entropy is a rational combination of `log2 p` over primes `p`. Keeping
//! the coefficients per prime makes equality and zero tests exact: the
//! logarithms of distinct primes are linearly independent over Q.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use serde::{Serialize, Serializer};

type Coeff = Ratio<i128>;

/// `Σ c_p · log2(p)`; the `p = 2` term is the rational part.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    terms: BTreeMap<u64, Coeff>,
}

fn factor(mut n: u64) -> Vec<(u64, i128)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

impl Bits {
    pub fn zero() -> Self {
        Bits::default()
    }

    pub fn from_integer(v: i128) -> Self {
        Bits::from_rational(Coeff::from_integer(v))
    }

    pub fn from_rational(v: Coeff) -> Self {
        let mut b = Bits::zero();
        b.add_term(2, v);
        b
    }

    /// `log2(n)`.
    pub fn log2(n: u64) -> Self {
        assert!(n > 0, "log2 of zero");
        let mut b = Bits::zero();
        for (p, e) in factor(n) {
            b.add_term(p, Coeff::from_integer(e));
        }
        b
    }

    fn add_term(&mut self, p: u64, c: Coeff) {
        let slot = self.terms.entry(p).or_insert_with(|| Coeff::from_integer(0));
        *slot += c;
        if *slot == Coeff::from_integer(0) {
            self.terms.remove(&p);
        }
    }

    pub fn scale(&self, k: Coeff) -> Self {
        let mut out = Bits::zero();
        for (&p, &c) in &self.terms {
            out.add_term(p, c * k);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value when it is rational.
    pub fn as_rational(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::from_integer(0)),
            1 => self.terms.get(&2).copied(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&p, c)| (*c.numer() as f64 / *c.denom() as f64) * (p as f64).log2())
            .sum()
    }
}

impl Add for &Bits {
    type Output = Bits;
    fn add(self, rhs: &Bits) -> Bits {
        let mut out = self.clone();
        for (&p, &c) in &rhs.terms {
            out.add_term(p, c);
        }
        out
    }
}

impl Sub for &Bits {
    type Output = Bits;
    fn sub(self, rhs: &Bits) -> Bits {
        self + &(-rhs)
    }
}

impl Neg for &Bits {
    type Output = Bits;
    fn neg(self) -> Bits {
        self.scale(Coeff::from_integer(-1))
    }
}

fn fmt_ratio(c: &Coeff, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if *c.denom() == 1 {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (p, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            fmt_ratio(c, f)?;
            if *p != 2 {
                write!(f, "*log2({p})")?;
            }
        }
        Ok(())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
