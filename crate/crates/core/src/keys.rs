//! Per-(user, server) one-time pad keys.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::ramp::uniform_symbols;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    material: Vec<u8>,
    consumed: bool,
}

/// The keys one user shares with each server.
///
/// A key handed out by [`KeyRing::consume`] is never handed out again.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRing {
    user: u16,
    field: FieldSpec,
    key_len: usize,
    entries: BTreeMap<u16, Entry>,
}

/// Generates `servers` independent uniform keys of `n_symbols` symbols.
///
/// With a seed, the keys are a function of `(seed, user)` only: each user
/// reads its own ChaCha20 stream.
pub fn keygen(
    user: u16,
    servers: usize,
    n_symbols: usize,
    field: FieldSpec,
    seed: Option<u64>,
) -> Result<KeyRing> {
    if servers == 0 || servers > u16::MAX as usize {
        return Err(Error::Parameter(format!("server count {servers} out of range")));
    }
    if n_symbols == 0 {
        return Err(Error::Parameter("key length must be at least one symbol".into()));
    }
    let mut rng = match seed {
        Some(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(user as u64);
            rng
        }
        None => ChaCha20Rng::from_os_rng(),
    };
    let entries = (1..=servers as u16)
        .map(|l| {
            (
                l,
                Entry {
                    material: uniform_symbols(&mut rng, n_symbols, field),
                    consumed: false,
                },
            )
        })
        .collect();
    Ok(KeyRing {
        user,
        field,
        key_len: n_symbols,
        entries,
    })
}

impl KeyRing {
    /// Builds a ring from existing material, e.g. loaded key files or keys
    /// injected by the auditor.
    pub fn from_keys(
        user: u16,
        field: FieldSpec,
        keys: impl IntoIterator<Item = (u16, Vec<u8>)>,
    ) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut key_len = None;
        for (server, material) in keys {
            if material.is_empty() {
                return Err(Error::Parameter(format!("empty key for server {server}")));
            }
            if *key_len.get_or_insert(material.len()) != material.len() {
                return Err(Error::Parameter(format!(
                    "key for server {server} has {} symbols, expected {}",
                    material.len(),
                    key_len.unwrap()
                )));
            }
            if let Some(bad) = material.iter().find(|&&s| !field.contains(s)) {
                return Err(Error::Parameter(format!("key symbol {bad:#x} not in {field}")));
            }
            let fresh = Entry {
                material,
                consumed: false,
            };
            if entries.insert(server, fresh).is_some() {
                return Err(Error::Parameter(format!("duplicate key for server {server}")));
            }
        }
        let key_len = key_len.ok_or_else(|| Error::Parameter("key ring needs at least one key".into()))?;
        Ok(KeyRing {
            user,
            field,
            key_len,
            entries,
        })
    }

    pub fn user(&self) -> u16 {
        self.user
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Key length `n_d` in symbols.
    pub fn key_len(&self) -> usize {
        self.key_len
    }

    pub fn servers(&self) -> impl Iterator<Item = u16> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_consumed(&self, server: u16) -> Option<bool> {
        self.entries.get(&server).map(|e| e.consumed)
    }

    /// The copy of the key that is distributed to `server` out of band.
    pub fn server_copy(&self, server: u16) -> Result<&[u8]> {
        self.entries
            .get(&server)
            .map(|e| e.material.as_slice())
            .ok_or(Error::KeyNotFound {
                user: self.user,
                server,
            })
    }

    /// Fails unless every listed server has an unconsumed key.
    pub fn check_fresh(&self, servers: impl IntoIterator<Item = u16>) -> Result<()> {
        for server in servers {
            match self.entries.get(&server) {
                None => {
                    return Err(Error::KeyNotFound {
                        user: self.user,
                        server,
                    })
                }
                Some(e) if e.consumed => {
                    return Err(Error::KeyReuse {
                        user: self.user,
                        server,
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Hands out the key for encryption and retires it.
    pub fn consume(&mut self, server: u16) -> Result<Vec<u8>> {
        let user = self.user;
        let entry = self
            .entries
            .get_mut(&server)
            .ok_or(Error::KeyNotFound { user, server })?;
        if entry.consumed {
            return Err(Error::KeyReuse { user, server });
        }
        entry.consumed = true;
        Ok(entry.material.clone())
    }

    /// Records a consumption that happened elsewhere (e.g. a sidecar marker).
    pub fn mark_consumed(&mut self, server: u16) -> Result<()> {
        self.consume(server).map(drop)
    }
}

/// Element-wise field addition of `data` and `key`.
pub fn otp_apply(data: &[u8], key: &[u8]) -> Result<Vec<u8>> {
    if data.len() != key.len() {
        return Err(Error::Usage(format!(
            "one-time pad of {} symbols applied to {} symbols",
            key.len(),
            data.len()
        )));
    }
    Ok(data.iter().zip(key).map(|(d, k)| d ^ k).collect())
}
