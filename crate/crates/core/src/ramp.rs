//! (t, z, L) ramp secret sharing over GF(2^m).
//!
//! The secret is cut into blocks of `t - z` symbols. Block `j` together with
//! `z` tape symbols forms the coefficients of a polynomial of degree `t - 1`:
//!
//! ```text
//! f(x) = s_1 + s_2·x + … + s_{t-z}·x^{t-z-1} + r_1·x^{t-z} + … + r_z·x^{t-1}
//! ```
//!
//! and symbol `j` of share `l` is `f(α_l)`. Servers `1..q-1` use `α_l = l`.
//! When `L = q` the last server sits at the point at infinity and receives
//! the leading coefficient `r_z`; zero is never an evaluation point since
//! `f(0)` is a secret symbol.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RampParams {
    servers: usize,
    t: usize,
    z: usize,
    field: FieldSpec,
}

/// Where a share's polynomial is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalPoint {
    Finite(u8),
    Infinity,
}

impl RampParams {
    pub fn new(servers: usize, t: usize, z: usize, field: FieldSpec) -> Result<Self> {
        if !(1..=servers).contains(&t) {
            return Err(Error::Parameter(format!("t = {t} outside 1..={servers}")));
        }
        if z < 1 || z >= t {
            return Err(Error::Parameter(format!("z = {z} outside 1..={}", t - 1)));
        }
        if servers > field.order() as usize {
            return Err(Error::Parameter(format!(
                "{servers} servers need more evaluation points than {field} provides (at most {})",
                field.order()
            )));
        }
        Ok(RampParams {
            servers,
            t,
            z,
            field,
        })
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Secret symbols carried per block.
    pub fn block_len(&self) -> usize {
        self.t - self.z
    }

    /// Evaluation point of 1-based server `index`.
    pub fn point(&self, index: usize) -> Result<EvalPoint> {
        if index == 0 || index > self.servers {
            return Err(Error::Usage(format!(
                "share index {index} outside 1..={}",
                self.servers
            )));
        }
        Ok(if index < self.field.order() as usize {
            EvalPoint::Finite(index as u8)
        } else {
            EvalPoint::Infinity
        })
    }

    fn check_secret_len(&self, secret_len: usize) -> Result<()> {
        if !secret_len.is_multiple_of(self.block_len()) {
            return Err(Error::Parameter(format!(
                "secret of {secret_len} symbols is not a multiple of t - z = {}",
                self.block_len()
            )));
        }
        Ok(())
    }

    /// `n_s / (t - z)`.
    pub fn share_len(&self, secret_len: usize) -> Result<usize> {
        self.check_secret_len(secret_len)?;
        Ok(secret_len / self.block_len())
    }

    /// `n_s · z / (t - z)`.
    pub fn tape_len(&self, secret_len: usize) -> Result<usize> {
        Ok(self.share_len(secret_len)? * self.z)
    }

    /// Row of the generator matrix for server `index`: the monomials
    /// `1, α, …, α^{t-1}`, or `e_{t-1}` at infinity.
    fn generator_row(&self, index: usize) -> Result<Vec<u8>> {
        Ok(match self.point(index)? {
            EvalPoint::Finite(a) => (0..self.t as u32).map(|j| self.field.pow(a, j)).collect(),
            EvalPoint::Infinity => {
                let mut row = vec![0; self.t];
                row[self.t - 1] = 1;
                row
            }
        })
    }

    fn eval(&self, coeffs: &[u8], point: EvalPoint) -> u8 {
        match point {
            EvalPoint::Finite(a) => self.field.eval_poly(coeffs, a),
            EvalPoint::Infinity => coeffs[coeffs.len() - 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TapeSource {
    Seeded { seed: u64, stream: u64 },
    Entropy,
    Explicit,
}

/// Local randomness consumed by the encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomTape {
    symbols: Vec<u8>,
    source: TapeSource,
}

impl RandomTape {
    /// Caller-supplied symbols; used where randomness is injected, e.g. the
    /// exhaustive auditor.
    pub fn from_symbols(symbols: Vec<u8>, field: FieldSpec) -> Result<Self> {
        if let Some(bad) = symbols.iter().find(|&&s| !field.contains(s)) {
            return Err(Error::Usage(format!("tape symbol {bad:#x} not in {field}")));
        }
        Ok(RandomTape {
            symbols,
            source: TapeSource::Explicit,
        })
    }

    /// Deterministic tape from a ChaCha20 stream.
    pub fn seeded(seed: u64, stream: u64, len: usize, field: FieldSpec) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomTape {
            symbols: uniform_symbols(&mut rng, len, field),
            source: TapeSource::Seeded { seed, stream },
        }
    }

    pub fn from_entropy(len: usize, field: FieldSpec) -> Self {
        let mut rng = ChaCha20Rng::from_os_rng();
        RandomTape {
            symbols: uniform_symbols(&mut rng, len, field),
            source: TapeSource::Entropy,
        }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn source(&self) -> TapeSource {
        self.source
    }
}

/// `len` independent uniform symbols of `field`.
pub(crate) fn uniform_symbols(rng: &mut impl RngCore, len: usize, field: FieldSpec) -> Vec<u8> {
    let mask = (field.order() - 1) as u8;
    (0..len).map(|_| rng.random::<u8>() & mask).collect()
}

/// The `L` shares of one secret.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareBundle {
    shares: Vec<Vec<u8>>,
    params: RampParams,
}

impl ShareBundle {
    pub fn params(&self) -> &RampParams {
        &self.params
    }

    /// Share of 1-based server `index`.
    pub fn share(&self, index: usize) -> Option<&[u8]> {
        index
            .checked_sub(1)
            .and_then(|i| self.shares.get(i))
            .map(Vec::as_slice)
    }

    pub fn shares(&self) -> &[Vec<u8>] {
        &self.shares
    }

    pub fn share_len(&self) -> usize {
        self.shares.first().map_or(0, Vec::len)
    }

    /// `(index, share)` pairs for the given servers.
    pub fn select(&self, indices: &[usize]) -> Vec<(usize, &[u8])> {
        indices
            .iter()
            .filter_map(|&i| self.share(i).map(|s| (i, s)))
            .collect()
    }

    pub fn into_shares(self) -> Vec<Vec<u8>> {
        self.shares
    }
}

pub fn ramp_encode(secret: &[u8], tape: &RandomTape, params: &RampParams) -> Result<ShareBundle> {
    let share_len = params.share_len(secret.len())?;
    let expected_tape = share_len * params.z;
    if tape.len() != expected_tape {
        return Err(Error::Parameter(format!(
            "tape has {} symbols, encoder needs exactly {expected_tape}",
            tape.len()
        )));
    }
    let field = params.field;
    if let Some(bad) = secret.iter().find(|&&s| !field.contains(s)) {
        return Err(Error::Usage(format!("secret symbol {bad:#x} not in {field}")));
    }
    let points = (1..=params.servers)
        .map(|l| params.point(l))
        .collect::<Result<Vec<_>>>()?;

    let mut shares = vec![Vec::with_capacity(share_len); params.servers];
    let mut coeffs = vec![0u8; params.t];
    for (block, noise) in secret
        .chunks(params.block_len())
        .zip(tape.symbols().chunks(params.z))
    {
        coeffs[..block.len()].copy_from_slice(block);
        coeffs[block.len()..].copy_from_slice(noise);
        for (share, &p) in shares.iter_mut().zip(&points) {
            share.push(params.eval(&coeffs, p));
        }
    }
    Ok(ShareBundle {
        shares,
        params: *params,
    })
}

fn invert(field: FieldSpec, matrix: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
    let n = matrix.len();
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let mut unit = vec![0; n];
        unit[i] = 1;
        columns.push(field.solve(matrix, &unit)?);
    }
    // transpose columns into rows
    Ok((0..n)
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect())
}

/// Reconstructs the secret from at least `t` shares.
///
/// The `t` lowest-indexed shares determine each block polynomial; any
/// further shares must agree with it.
pub fn ramp_decode(shares: &[(usize, &[u8])], params: &RampParams) -> Result<Vec<u8>> {
    let mut sorted: Vec<(usize, &[u8])> = shares.to_vec();
    sorted.sort_by_key(|&(i, _)| i);
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Usage(format!("share index {} given twice", w[0].0)));
        }
    }
    for &(i, _) in &sorted {
        params.point(i)?;
    }
    if sorted.len() < params.t {
        return Err(Error::InsufficientShares {
            have: sorted.len(),
            need: params.t,
        });
    }
    let share_len = sorted[0].1.len();
    if sorted.iter().any(|(_, s)| s.len() != share_len) {
        return Err(Error::Usage("shares have different lengths".into()));
    }
    let field = params.field;
    let (basis, extra) = sorted.split_at(params.t);
    let matrix = basis
        .iter()
        .map(|&(i, _)| params.generator_row(i))
        .collect::<Result<Vec<_>>>()?;
    let inverse = invert(field, &matrix)?;
    let extra_points = extra
        .iter()
        .map(|&(i, _)| params.point(i))
        .collect::<Result<Vec<_>>>()?;

    let mut secret = Vec::with_capacity(share_len * params.block_len());
    let mut ys = vec![0u8; params.t];
    for pos in 0..share_len {
        for (y, (_, s)) in ys.iter_mut().zip(basis) {
            *y = s[pos];
        }
        let coeffs: Vec<u8> = inverse
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&ys)
                    .fold(0, |acc, (&a, &y)| acc ^ field.mul(a, y))
            })
            .collect();
        for (&(idx, s), &p) in extra.iter().zip(&extra_points) {
            if params.eval(&coeffs, p) != s[pos] {
                return Err(Error::Corruption(format!(
                    "share {idx} disagrees with the first {} shares at symbol {pos}",
                    params.t
                )));
            }
        }
        secret.extend_from_slice(&coeffs[..params.block_len()]);
    }
    Ok(secret)
}

/// Predicted leakage, in bits, of `subset_size` raw shares of a secret of
/// `secret_len` symbols: `[min(i - z, t - z)]^+ · n_s/(t - z) · m`.
pub fn ramp_leakage_profile(params: &RampParams, subset_size: usize, secret_len: usize) -> Result<u64> {
    if subset_size > params.servers {
        return Err(Error::Parameter(format!(
            "subset of {subset_size} servers, only {} exist",
            params.servers
        )));
    }
    let blocks = params.share_len(secret_len)?;
    let exposed = subset_size.saturating_sub(params.z).min(params.block_len());
    Ok((exposed * blocks) as u64 * params.field.m() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf4() -> FieldSpec {
        FieldSpec::with_width(2).unwrap()
    }

    fn tape(symbols: &[u8], field: FieldSpec) -> RandomTape {
        RandomTape::from_symbols(symbols.to_vec(), field).unwrap()
    }

    #[test]
    fn params_ranges() {
        let f = gf4();
        assert!(RampParams::new(3, 2, 1, f).is_ok());
        assert!(RampParams::new(3, 4, 1, f).is_err());
        assert!(RampParams::new(3, 0, 0, f).is_err());
        assert!(RampParams::new(3, 2, 2, f).is_err());
        assert!(RampParams::new(3, 2, 0, f).is_err());
        // q = 4 points: 1, 2, 3 and infinity
        assert!(RampParams::new(4, 3, 1, f).is_ok());
        assert!(RampParams::new(5, 3, 1, f).is_err());
    }

    #[test]
    fn zero_tape_gives_constant_shares() {
        let p = RampParams::new(3, 2, 1, gf4()).unwrap();
        for s in 0..4 {
            let b = ramp_encode(&[s], &tape(&[0], gf4()), &p).unwrap();
            assert_eq!(b.shares(), &[vec![s], vec![s], vec![s]]);
        }
    }

    #[test]
    fn encode_matches_direct_evaluation() {
        // f(x) = 1 + x over GF(4) mod x^2+x+1: f(1) = 0, f(2) = 3, f(3) = 2
        let f = gf4();
        let expected: Vec<Vec<u8>> = (1..=3u8).map(|x| vec![f.add(1, x)]).collect();
        assert_eq!(expected, vec![vec![0], vec![3], vec![2]]);
        let p = RampParams::new(3, 2, 1, f).unwrap();
        let b = ramp_encode(&[1], &tape(&[1], f), &p).unwrap();
        assert_eq!(b.shares(), expected.as_slice());
    }

    #[test]
    fn decode_example_pair() {
        let p = RampParams::new(3, 2, 1, gf4()).unwrap();
        let got = ramp_decode(&[(1, &[0x0][..]), (2, &[0x3][..])], &p).unwrap();
        assert_eq!(got, vec![1]);
    }

    #[test]
    fn all_three_subsets_gf8() {
        let f = FieldSpec::with_width(3).unwrap();
        let p = RampParams::new(4, 3, 1, f).unwrap();
        let secret = [5u8, 2, 7, 0];
        let b = ramp_encode(&secret, &tape(&[3, 6], f), &p).unwrap();
        let subsets = [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]];
        for s in subsets {
            assert_eq!(ramp_decode(&b.select(&s), &p).unwrap(), secret);
        }
    }

    #[test]
    fn infinity_point_roundtrip() {
        // L = q: server 4 holds the leading coefficient
        let f = gf4();
        let p = RampParams::new(4, 3, 1, f).unwrap();
        assert_eq!(p.point(4).unwrap(), EvalPoint::Infinity);
        let b = ramp_encode(&[1, 2], &tape(&[3], f), &p).unwrap();
        assert_eq!(b.share(4).unwrap(), &[3]);
        for s in [[1, 2, 4], [2, 3, 4], [1, 3, 4], [1, 2, 3]] {
            assert_eq!(ramp_decode(&b.select(&s), &p).unwrap(), vec![1, 2]);
        }
    }

    #[test]
    fn length_contract() {
        let p = RampParams::new(5, 4, 1, FieldSpec::GF256).unwrap();
        assert_eq!(p.share_len(9).unwrap(), 3);
        assert_eq!(p.tape_len(9).unwrap(), 3);
        assert!(matches!(p.share_len(10), Err(Error::Parameter(_))));
        let secret = vec![9u8; 9];
        assert!(matches!(
            ramp_encode(&secret, &tape(&[1, 2], FieldSpec::GF256), &p),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            ramp_encode(&[1; 10], &tape(&[1, 2, 3], FieldSpec::GF256), &p),
            Err(Error::Parameter(_))
        ));
        let b = ramp_encode(&secret, &tape(&[1, 2, 3], FieldSpec::GF256), &p).unwrap();
        assert!(b.shares().iter().all(|s| s.len() == 3));
    }

    #[test]
    fn decode_errors() {
        let f = FieldSpec::GF256;
        let p = RampParams::new(5, 3, 1, f).unwrap();
        let b = ramp_encode(&[1, 2, 3, 4], &tape(&[5, 6], f), &p).unwrap();
        assert!(matches!(
            ramp_decode(&b.select(&[1, 2]), &p),
            Err(Error::InsufficientShares { have: 2, need: 3 })
        ));
        let mut bad = b.shares()[4].clone();
        bad[1] ^= 1;
        let mut sel = b.select(&[1, 2, 3]);
        sel.push((5, &bad));
        assert!(matches!(ramp_decode(&sel, &p), Err(Error::Corruption(_))));
        // consistent overdetermined input decodes
        assert_eq!(ramp_decode(&b.select(&[1, 2, 3, 4, 5]), &p).unwrap(), vec![1, 2, 3, 4]);
        let dup = vec![(1, b.share(1).unwrap()), (1, b.share(1).unwrap()), (2, b.share(2).unwrap())];
        assert!(matches!(ramp_decode(&dup, &p), Err(Error::Usage(_))));
        assert!(ramp_decode(&[(0, &[1, 2][..]), (1, b.share(1).unwrap()), (2, b.share(2).unwrap())], &p).is_err());
    }

    #[test]
    fn leakage_profile_values() {
        let p = RampParams::new(4, 3, 1, gf4()).unwrap();
        assert_eq!(ramp_leakage_profile(&p, 1, 2).unwrap(), 0);
        assert_eq!(ramp_leakage_profile(&p, 2, 2).unwrap(), 2);
        assert_eq!(ramp_leakage_profile(&p, 3, 2).unwrap(), 4);
        assert_eq!(ramp_leakage_profile(&p, 4, 2).unwrap(), 4);
        assert!(ramp_leakage_profile(&p, 5, 2).is_err());
    }

    #[test]
    fn seeded_tape_is_reproducible() {
        let a = RandomTape::seeded(42, 1, 64, gf4());
        let b = RandomTape::seeded(42, 1, 64, gf4());
        let c = RandomTape::seeded(42, 2, 64, gf4());
        assert_eq!(a, b);
        assert_ne!(a.symbols(), c.symbols());
        assert!(a.symbols().iter().all(|&s| s < 4));
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| i + 1).collect())
            .collect()
    }

    proptest! {
        #[test]
        fn every_t_subset_recovers(
            (servers, t, z) in (2usize..=6).prop_flat_map(|l| (Just(l), 2..=l))
                .prop_flat_map(|(l, t)| (Just(l), Just(t), 1..t)),
            blocks in 1usize..4,
            seed in any::<u64>(),
        ) {
            let f = FieldSpec::GF256;
            let p = RampParams::new(servers, t, z, f).unwrap();
            let n_s = blocks * (t - z);
            let secret = RandomTape::seeded(seed, 0, n_s, f).symbols().to_vec();
            let tp = RandomTape::seeded(seed, 1, p.tape_len(n_s).unwrap(), f);
            let b = ramp_encode(&secret, &tp, &p).unwrap();
            prop_assert_eq!(b.share_len(), blocks);
            for s in subsets(servers, t) {
                prop_assert_eq!(ramp_decode(&b.select(&s), &p).unwrap(), secret.clone());
            }
        }
    }
}
