//! Exhaustive enumeration of every file, tape and key assignment, pushed
//! through the real store and ingest code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dist::{JointDistribution, Variable};
use crate::error::{Error, Result};
use crate::keys::KeyRing;
use crate::protocol::{multi_user_store, server_ingest, FileRecord, StorageParams};
use crate::ramp::RandomTape;

/// Largest state space the enumerator will walk.
pub const ATOM_LIMIT: u128 = 1 << 24;

/// The strategy under audit. The broken variants exist to show the auditor
/// catches them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Honest,
    /// Every share goes out without its pad.
    NoOtp,
    /// Only `server`'s share goes out without its pad.
    Asymmetric { server: u16 },
}

pub fn file_label(user: u16) -> String {
    format!("F{user}")
}

pub fn tape_label(user: u16) -> String {
    format!("R{user}")
}

pub fn key_label(user: u16, server: u16) -> String {
    format!("K{user}.{server}")
}

pub fn message_label(user: u16, server: u16) -> String {
    format!("M{user}.{server}")
}

pub fn share_label(server: u16, user: u16) -> String {
    format!("S{server}.{user}")
}

/// Symbol counts `(n_s, n_r, n)` for one user.
fn user_sizes(params: &StorageParams, user: u16) -> Result<(usize, usize, usize)> {
    let n_s = params.capacity(user)?;
    let n_r = params.ramp(user)?.tape_len(n_s)?;
    Ok((n_s, n_r, params.user(user)?.key_len))
}

/// Number of free symbols: files, tapes and keys of every user.
fn free_symbols(params: &StorageParams) -> Result<usize> {
    let mut total = 0;
    for u in params.users() {
        let (n_s, n_r, n) = user_sizes(params, u.user)?;
        total += n_s + n_r + params.servers() * n;
    }
    Ok(total)
}

/// `q^(Σ n_s + n_r + L·n)`, saturating.
pub fn atom_count(params: &StorageParams) -> Result<u128> {
    let exp = free_symbols(params)? as u128 * params.field().m() as u128;
    Ok(if exp >= 128 { u128::MAX } else { 1 << exp })
}

/// Joint distribution of every user's `F, R, K_l, M_l` and every server's
/// `S_l`, with all free symbols independent and uniform.
pub fn enumerate_strategy(params: &StorageParams, scheme: Scheme) -> Result<JointDistribution> {
    let atoms = atom_count(params)?;
    if atoms > ATOM_LIMIT {
        return Err(Error::Scale {
            atoms,
            limit: ATOM_LIMIT,
        });
    }
    if let Scheme::Asymmetric { server } = scheme {
        if server == 0 || server as usize > params.servers() {
            return Err(Error::Usage(format!("no server {server} to sabotage")));
        }
    }
    let field = params.field();
    let servers: Vec<u16> = params.server_ids().collect();

    let mut vars = Vec::new();
    let mut sizes = Vec::new();
    for u in params.users() {
        let (n_s, n_r, n) = user_sizes(params, u.user)?;
        sizes.push((u.user, n_s, n_r, n));
        vars.push(Variable { name: file_label(u.user), width: n_s });
        vars.push(Variable { name: tape_label(u.user), width: n_r });
        for &l in &servers {
            vars.push(Variable { name: key_label(u.user, l), width: n });
        }
        for &l in &servers {
            vars.push(Variable { name: message_label(u.user, l), width: n });
        }
        for &l in &servers {
            vars.push(Variable { name: share_label(l, u.user), width: n });
        }
    }
    let mut dist = JointDistribution::with_symbol_bits(vars, field.m() as u32);
    dist.reserve(atoms as usize);

    let m = field.m() as u32;
    let mask = field.order() as u128 - 1;
    let n_free = free_symbols(params)?;
    let mut free = vec![0u8; n_free];
    let mut row = Vec::new();
    for atom in 0..atoms {
        for (j, s) in free.iter_mut().enumerate() {
            *s = ((atom >> (j as u32 * m)) & mask) as u8;
        }

        let mut files = Vec::with_capacity(sizes.len());
        let mut rings = BTreeMap::new();
        let mut tapes = BTreeMap::new();
        let mut at = 0;
        for &(user, n_s, n_r, n) in &sizes {
            files.push(FileRecord::from_symbols(user, free[at..at + n_s].to_vec(), params)?);
            at += n_s;
            tapes.insert(user, RandomTape::from_symbols(free[at..at + n_r].to_vec(), field)?);
            at += n_r;
            let keys = servers.iter().map(|&l| {
                let k = free[at..at + n].to_vec();
                at += n;
                (l, k)
            });
            rings.insert(user, KeyRing::from_keys(user, field, keys.collect::<Vec<_>>())?);
        }
        // keys are consumed by the store; servers keep their own copies
        let server_keys = rings.clone();

        let (batches, _) = multi_user_store(&files, &mut rings, params, &tapes)?;
        // indexed [user position][server - 1] -> (sent, stored)
        let mut observed: Vec<Vec<(Vec<u8>, Vec<u8>)>> = vec![Vec::with_capacity(servers.len()); sizes.len()];
        for (&l, msgs) in &batches {
            for (pos, msg) in msgs.iter().enumerate() {
                debug_assert_eq!(msg.user(), sizes[pos].0);
                let share = server_ingest(msg, server_keys[&msg.user()].server_copy(l)?)?;
                let sent = match scheme {
                    Scheme::Honest => msg.payload.clone(),
                    Scheme::NoOtp => share.payload.clone(),
                    Scheme::Asymmetric { server } if server == l => share.payload.clone(),
                    Scheme::Asymmetric { .. } => msg.payload.clone(),
                };
                observed[pos].push((sent, share.payload));
            }
        }

        row.clear();
        let mut at = 0;
        for (&(_, n_s, n_r, n), seen) in sizes.iter().zip(&observed) {
            let own = n_s + n_r + servers.len() * n;
            row.extend_from_slice(&free[at..at + own]);
            at += own;
            for (sent, _) in seen {
                row.extend_from_slice(sent);
            }
            for (_, stored) in seen {
                row.extend_from_slice(stored);
            }
        }
        dist.push_atom(&row);
    }
    Ok(dist)
}
