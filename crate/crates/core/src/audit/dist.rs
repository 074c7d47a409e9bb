//! Exact joint distributions with integer atom weights.

use std::collections::HashMap;

use num_rational::Ratio;

use super::bits::Bits;
use crate::error::{Error, Result};

/// A named random variable made of `width` symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub width: usize,
}

/// Outcome table over labelled variables; each row is one joint assignment
/// with probability `weight / total`.
///
/// Rows are distinct and stored flat, `stride` symbols each, in first-seen
/// order for enumerated tables and sorted order for marginals.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    vars: Vec<Variable>,
    offsets: Vec<usize>,
    stride: usize,
    /// Bits needed per symbol; lets marginals pack rows into integers.
    symbol_bits: u32,
    rows: Vec<u8>,
    /// `None` when every row has weight one.
    weights: Option<Vec<u64>>,
    total: u64,
}

/// `I(X; Y)` together with the outcome of the factorization test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Information {
    pub bits: Bits,
    /// `p(x, y) = p(x) p(y)` held on every atom.
    pub independent: bool,
}

impl JointDistribution {
    /// An empty table to be filled with equiprobable atoms via
    /// [`push_atom`](Self::push_atom). Atoms must be distinct.
    pub fn with_variables(vars: Vec<Variable>) -> Self {
        JointDistribution::with_symbol_bits(vars, 8)
    }

    /// Like [`with_variables`](Self::with_variables) for symbols below
    /// `2^symbol_bits`.
    pub fn with_symbol_bits(vars: Vec<Variable>, symbol_bits: u32) -> Self {
        assert!((1..=8).contains(&symbol_bits));
        let mut offsets = Vec::with_capacity(vars.len());
        let mut stride = 0;
        for v in &vars {
            offsets.push(stride);
            stride += v.width;
        }
        JointDistribution {
            vars,
            offsets,
            stride,
            symbol_bits,
            rows: Vec::new(),
            weights: None,
            total: 0,
        }
    }

    pub fn reserve(&mut self, atoms: usize) {
        self.rows.reserve(atoms * self.stride);
    }

    pub fn push_atom(&mut self, assignment: &[u8]) {
        debug_assert_eq!(assignment.len(), self.stride);
        self.rows.extend_from_slice(assignment);
        if let Some(w) = &mut self.weights {
            w.push(1);
        }
        self.total += 1;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    /// Number of distinct rows.
    pub fn len(&self) -> usize {
        match (&self.weights, self.stride) {
            (Some(w), _) => w.len(),
            (None, 0) => self.total as usize,
            (None, s) => self.rows.len() / s,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    fn weight(&self, row: usize) -> u64 {
        self.weights.as_ref().map_or(1, |w| w[row])
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i * self.stride..(i + 1) * self.stride]
    }

    pub fn probability(&self, i: usize) -> Ratio<u64> {
        Ratio::new(self.weight(i), self.total)
    }

    /// `(assignment, probability)` for every row.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], Ratio<u64>)> + '_ {
        (0..self.len()).map(move |i| (self.row(i), self.probability(i)))
    }

    /// Value of variable `name` in row `i`.
    pub fn value(&self, i: usize, name: &str) -> Result<&[u8]> {
        let v = self.index_of(name)?;
        let start = i * self.stride + self.offsets[v];
        Ok(&self.rows[start..start + self.vars[v].width])
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::Usage(format!("unknown variable {name}")))
    }

    fn columns(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut cols = Vec::new();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Usage(format!("variable {n} listed twice")));
            }
            let v = self.index_of(n)?;
            cols.extend(self.offsets[v]..self.offsets[v] + self.vars[v].width);
        }
        Ok(cols)
    }

    /// Distribution of the listed variables, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointDistribution> {
        let cols = self.columns(names)?;
        let vars: Vec<Variable> = names
            .iter()
            .map(|n| self.vars[self.index_of(n).unwrap()].clone())
            .collect();
        let stride = cols.len();
        let packed = stride as u32 * self.symbol_bits;
        let (rows, weights) = if packed <= 64 && self.weights.is_none() {
            self.project_counted(&cols)
        } else if packed <= 128 {
            self.project_packed(&cols)
        } else {
            self.project_hashed(&cols)
        };
        let mut out = JointDistribution::with_symbol_bits(vars, self.symbol_bits);
        out.rows = rows;
        out.weights = Some(weights);
        out.total = self.total;
        Ok(out)
    }

    /// Sorted distinct projections with summed weights; each projected row
    /// packed into one integer.
    fn project_packed(&self, cols: &[usize]) -> (Vec<u8>, Vec<u64>) {
        let bits = self.symbol_bits;
        let mut keyed: Vec<(u128, u64)> = (0..self.len())
            .map(|i| {
                let row = self.row(i);
                let key = cols.iter().fold(0u128, |k, &c| (k << bits) | row[c] as u128);
                (key, self.weight(i))
            })
            .collect();
        keyed.sort_unstable_by_key(|&(k, _)| k);
        let mask = (1u128 << bits) - 1;
        let mut rows = Vec::new();
        let mut weights: Vec<u64> = Vec::new();
        let mut last = None;
        for (key, w) in keyed {
            if last == Some(key) {
                *weights.last_mut().unwrap() += w;
                continue;
            }
            last = Some(key);
            weights.push(w);
            for j in (0..cols.len()).rev() {
                rows.push(((key >> (j as u32 * bits)) & mask) as u8);
            }
        }
        if cols.is_empty() && weights.is_empty() {
            weights.push(self.total);
        }
        (rows, weights)
    }

    /// [`project_packed`](Self::project_packed) for unit weights and keys
    /// that fit a `u64`: sort the keys and count runs.
    fn project_counted(&self, cols: &[usize]) -> (Vec<u8>, Vec<u64>) {
        let bits = self.symbol_bits;
        let mut keys: Vec<u64> = (0..self.len())
            .map(|i| {
                let row = self.row(i);
                cols.iter().fold(0u64, |k, &c| (k << bits) | row[c] as u64)
            })
            .collect();
        keys.sort_unstable();
        let mask = (1u64 << bits) - 1;
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for run in keys.chunk_by(|a, b| a == b) {
            weights.push(run.len() as u64);
            for j in (0..cols.len()).rev() {
                rows.push(((run[0] >> (j as u32 * bits)) & mask) as u8);
            }
        }
        (rows, weights)
    }

    fn project_hashed(&self, cols: &[usize]) -> (Vec<u8>, Vec<u64>) {
        let stride = cols.len();
        let n = self.len();
        let mut projected = Vec::with_capacity(n * stride);
        for i in 0..n {
            let row = self.row(i);
            projected.extend(cols.iter().map(|&c| row[c]));
        }
        let mut acc: HashMap<&[u8], u64> = HashMap::new();
        for (i, key) in projected.chunks_exact(stride).enumerate() {
            *acc.entry(key).or_default() += self.weight(i);
        }
        let mut entries: Vec<(&[u8], u64)> = acc.into_iter().collect();
        entries.sort_unstable();
        let mut rows = Vec::with_capacity(entries.len() * stride);
        let mut weights = Vec::with_capacity(entries.len());
        for (k, w) in &entries {
            rows.extend_from_slice(k);
            weights.push(*w);
        }
        (rows, weights)
    }

    /// Exact `H(names)`.
    pub fn entropy(&self, names: &[&str]) -> Result<Bits> {
        Ok(self.marginal(names)?.entropy_all())
    }

    /// `log2 W - (1/W) Σ w log2 w` over this table's rows.
    fn entropy_all(&self) -> Bits {
        let mut sum = Bits::zero();
        let mut counts: HashMap<u64, i128> = HashMap::new();
        for i in 0..self.len() {
            *counts.entry(self.weight(i)).or_default() += 1;
        }
        let mut keys: Vec<_> = counts.into_iter().collect();
        keys.sort_unstable();
        for (w, times) in keys {
            let term = Bits::log2(w).scale(Ratio::from_integer(w as i128 * times));
            sum = &sum + &term;
        }
        &Bits::log2(self.total) - &sum.scale(Ratio::new(1, self.total as i128))
    }

    /// Exact `H(x | given)`.
    pub fn conditional_entropy(&self, x: &[&str], given: &[&str]) -> Result<Bits> {
        disjoint(x, given)?;
        let joint: Vec<&str> = x.iter().chain(given).copied().collect();
        Ok(&self.entropy(&joint)? - &self.entropy(given)?)
    }

    /// Exact `I(x; y)`, with zero detected by factorization.
    pub fn mutual_information(&self, x: &[&str], y: &[&str]) -> Result<Information> {
        disjoint(x, y)?;
        let names: Vec<&str> = x.iter().chain(y).copied().collect();
        let xy = self.marginal(&names)?;
        let px = xy.marginal(x)?;
        let py = xy.marginal(y)?;
        let split: usize = xy.vars[..x.len()].iter().map(|v| v.width).sum();

        let (wx, wy) = (px.weight_map(), py.weight_map());
        let total = xy.total as u128;
        let independent = (0..xy.len()).all(|i| {
            let row = xy.row(i);
            let a = wx[&row[..split]] as u128;
            let b = wy[&row[split..]] as u128;
            xy.weight(i) as u128 * total == a * b
        });
        let bits = &(&px.entropy_all() + &py.entropy_all()) - &xy.entropy_all();
        debug_assert_eq!(independent, bits.is_zero());
        Ok(Information { bits, independent })
    }

    fn weight_map(&self) -> HashMap<&[u8], u64> {
        (0..self.len()).map(|i| (self.row(i), self.weight(i))).collect()
    }

    /// Whether `name` is uniform over all `q^width` values.
    pub fn is_uniform(&self, name: &str, q: u64) -> Result<bool> {
        let m = self.marginal(&[name])?;
        let width = m.stride as u32;
        let support = q.pow(width);
        Ok(m.len() as u64 == support && (0..m.len()).all(|i| m.weight(i) as u128 * support as u128 == m.total as u128))
    }
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    if let Some(dup) = a.iter().find(|n| b.contains(n)) {
        return Err(Error::Usage(format!("variable {dup} on both sides")));
    }
    Ok(())
}
