//! Arithmetic in GF(2^m) for 1 <= m <= 8.
//!
//! Symbols are carried as raw `u8` values below `2^m`. [`FieldSpec`] owns
//! the arithmetic; [`FieldElement`] pairs a value with its spec for callers
//! that want mismatches caught at runtime.
//!
//! The default GF(256) field (reduction polynomial `0x11B`) multiplies via
//! log/antilog tables. Every other field goes through [`clmul_reduce`], which
//! is also kept as the cross-check for the table path.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical reduction polynomial per bit width, index = m.
const DEFAULT_POLYS: [u16; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B];

const AES_POLY: u16 = 0x11B;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

// 0x03 generates the multiplicative group of GF(2)[x]/(0x11B).
const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        // x *= 3
        let mut doubled = x << 1;
        if doubled & 0x100 != 0 {
            doubled ^= AES_POLY;
        }
        x = doubled ^ x;
        i += 1;
    }
    exp[510] = exp[0];
    exp[511] = exp[1];
    Tables { exp, log }
}

static GF256: Tables = build_tables();

/// Carry-less multiply followed by long division by `poly`.
///
/// Independent of the table path; used as the reference multiplier.
pub fn clmul_reduce(a: u8, b: u8, poly: u16) -> u8 {
    let mut product: u32 = 0;
    for bit in 0..8 {
        if (b >> bit) & 1 == 1 {
            product ^= (a as u32) << bit;
        }
    }
    poly_rem(product, poly as u32) as u8
}

fn degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

fn poly_rem(mut num: u32, den: u32) -> u32 {
    let dd = degree(den);
    while num != 0 && degree(num) >= dd {
        num ^= den << (degree(num) - dd);
    }
    num
}

fn is_irreducible(poly: u16) -> bool {
    let p = poly as u32;
    let m = degree(p);
    if m < 1 {
        return false;
    }
    // any factorization has a factor of degree <= m/2
    for d in 2u32..(1 << (m / 2 + 1)) {
        if degree(d) >= 1 && degree(d) <= m / 2 && poly_rem(p, d) == 0 {
            return false;
        }
    }
    true
}

/// A binary extension field GF(2^m).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FieldRepr", into = "FieldRepr")]
pub struct FieldSpec {
    m: u8,
    poly: u16,
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    m: u8,
    poly: u16,
}

impl TryFrom<FieldRepr> for FieldSpec {
    type Error = Error;
    fn try_from(r: FieldRepr) -> Result<Self> {
        FieldSpec::new(r.m, r.poly)
    }
}

impl From<FieldSpec> for FieldRepr {
    fn from(f: FieldSpec) -> Self {
        FieldRepr {
            m: f.m,
            poly: f.poly,
        }
    }
}

impl FieldSpec {
    /// GF(256) with the AES polynomial.
    pub const GF256: FieldSpec = FieldSpec {
        m: 8,
        poly: AES_POLY,
    };

    pub fn new(m: u8, poly: u16) -> Result<Self> {
        if !(1..=8).contains(&m) {
            return Err(Error::Parameter(format!(
                "field width m = {m} outside 1..=8"
            )));
        }
        if degree(poly as u32) != m as i32 {
            return Err(Error::Parameter(format!(
                "reduction polynomial {poly:#x} does not have degree {m}"
            )));
        }
        if !is_irreducible(poly) {
            return Err(Error::Parameter(format!(
                "reduction polynomial {poly:#x} is reducible over GF(2)"
            )));
        }
        Ok(FieldSpec { m, poly })
    }

    /// The canonical field of width `m`.
    pub fn with_width(m: u8) -> Result<Self> {
        match DEFAULT_POLYS.get(m as usize) {
            Some(&poly) if m >= 1 => FieldSpec::new(m, poly),
            _ => Err(Error::Parameter(format!(
                "field width m = {m} outside 1..=8"
            ))),
        }
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn poly(&self) -> u16 {
        self.poly
    }

    /// Number of elements, `q = 2^m`.
    pub fn order(&self) -> u16 {
        1 << self.m
    }

    pub fn contains(&self, v: u8) -> bool {
        (v as u16) < self.order()
    }

    pub fn element(&self, value: u8) -> Result<FieldElement> {
        if !self.contains(value) {
            return Err(Error::Usage(format!(
                "{value:#x} is not an element of GF(2^{})",
                self.m
            )));
        }
        Ok(FieldElement { spec: *self, value })
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if self.poly == AES_POLY {
            if a == 0 || b == 0 {
                return 0;
            }
            let i = GF256.log[a as usize] as usize + GF256.log[b as usize] as usize;
            GF256.exp[i]
        } else {
            clmul_reduce(a, b, self.poly)
        }
    }

    pub fn pow(&self, mut base: u8, mut exp: u32) -> u8 {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u8) -> Result<u8> {
        if a == 0 {
            return Err(Error::Domain("zero has no multiplicative inverse"));
        }
        if self.poly == AES_POLY {
            return Ok(GF256.exp[255 - GF256.log[a as usize] as usize]);
        }
        // a^(q-2) = a^-1 in a group of order q-1
        Ok(self.pow(a, self.order() as u32 - 2))
    }

    pub fn div(&self, a: u8, b: u8) -> Result<u8> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Horner evaluation of `coeffs[0] + coeffs[1]·x + …`.
    pub fn eval_poly(&self, coeffs: &[u8], x: u8) -> u8 {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    /// Solves `matrix · x = rhs` by Gauss-Jordan elimination.
    pub fn solve(&self, matrix: &[Vec<u8>], rhs: &[u8]) -> Result<Vec<u8>> {
        let n = matrix.len();
        if rhs.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Usage(format!(
                "solve needs a square matrix and matching rhs, got {}x{:?} and {}",
                n,
                matrix.first().map(Vec::len),
                rhs.len()
            )));
        }
        // augmented rows
        let mut a: Vec<Vec<u8>> = matrix
            .iter()
            .zip(rhs)
            .map(|(row, &b)| {
                let mut r = row.clone();
                r.push(b);
                r
            })
            .collect();
        let mut rank = 0;
        for col in 0..n {
            let Some(pivot) = (rank..n).find(|&r| a[r][col] != 0) else {
                continue;
            };
            a.swap(rank, pivot);
            let scale = self.inv(a[rank][col])?;
            for v in a[rank].iter_mut() {
                *v = self.mul(*v, scale);
            }
            let pivot_row = a[rank].clone();
            for (r, row) in a.iter_mut().enumerate() {
                let factor = row[col];
                if r != rank && factor != 0 {
                    for (v, &p) in row.iter_mut().zip(&pivot_row).skip(col) {
                        *v ^= self.mul(factor, p);
                    }
                }
            }
            rank += 1;
        }
        if rank < n {
            return Err(Error::Rank { rank, size: n });
        }
        Ok(a.into_iter().map(|row| row[n]).collect())
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.m, self.poly)
    }
}

/// A value tagged with the field it lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    spec: FieldSpec,
    value: u8,
}

impl FieldElement {
    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Usage(format!(
                "mixed fields: {} and {}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    pub fn try_add(self, rhs: FieldElement) -> Result<FieldElement> {
        self.same_field(&rhs)?;
        Ok(FieldElement {
            spec: self.spec,
            value: self.spec.add(self.value, rhs.value),
        })
    }

    pub fn try_mul(self, rhs: FieldElement) -> Result<FieldElement> {
        self.same_field(&rhs)?;
        Ok(FieldElement {
            spec: self.spec,
            value: self.spec.mul(self.value, rhs.value),
        })
    }

    pub fn inv(self) -> Result<FieldElement> {
        Ok(FieldElement {
            spec: self.spec,
            value: self.spec.inv(self.value)?,
        })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.value)
    }
}

/// Element-level front end to [`FieldSpec::solve`].
pub fn solve_linear(matrix: &[Vec<FieldElement>], rhs: &[FieldElement]) -> Result<Vec<FieldElement>> {
    let spec = rhs
        .first()
        .or_else(|| matrix.first().and_then(|r| r.first()))
        .map(FieldElement::spec)
        .ok_or_else(|| Error::Usage("empty system".into()))?;
    if matrix
        .iter()
        .flatten()
        .chain(rhs)
        .any(|e| e.spec != spec)
    {
        return Err(Error::Usage("system mixes elements of different fields".into()));
    }
    let raw: Vec<Vec<u8>> = matrix
        .iter()
        .map(|r| r.iter().map(FieldElement::value).collect())
        .collect();
    let b: Vec<u8> = rhs.iter().map(FieldElement::value).collect();
    Ok(spec
        .solve(&raw, &b)?
        .into_iter()
        .map(|value| FieldElement { spec, value })
        .collect())
}
