//! Closed-form optimal resources and comparison against measured reports.
//!
//! With `n` key bits per server, thresholds `(t, z)` and `L` servers:
//! file `n(t-z)`, local randomness `nz`, per-server message `n` (under
//! symmetric leakage), total messages `Ln`, per-server storage `n`. With
//! several users the storage optimum becomes `Σ_d n_d` and every other
//! quantity is per user.

use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{ResourceReport, StorageParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserOptima {
    pub user: u16,
    pub key_bits: u64,
    pub file_bits: u64,
    pub randomness_bits: u64,
    pub message_bits_per_server: u64,
    pub message_sum_bits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimaTable {
    pub servers: usize,
    pub users: Vec<UserOptima>,
    pub storage_bits_per_server: u64,
}

impl OptimaTable {
    pub fn user(&self, user: u16) -> Option<&UserOptima> {
        self.users.iter().find(|u| u.user == user)
    }

    /// `(file, randomness, message, message sum, storage)` for one user.
    pub fn row(&self, user: u16) -> Option<[u64; 5]> {
        self.user(user).map(|u| {
            [
                u.file_bits,
                u.randomness_bits,
                u.message_bits_per_server,
                u.message_sum_bits,
                self.storage_bits_per_server,
            ]
        })
    }
}

/// Optima for one user holding `key_bits`-bit keys.
pub fn user_optima(user: u16, key_bits: u64, t: usize, z: usize, servers: usize) -> UserOptima {
    let (t, z, l) = (t as u64, z as u64, servers as u64);
    UserOptima {
        user,
        key_bits,
        file_bits: key_bits * (t - z),
        randomness_bits: key_bits * z,
        message_bits_per_server: key_bits,
        message_sum_bits: l * key_bits,
    }
}

pub fn compute_optima(params: &StorageParams) -> OptimaTable {
    let m = params.field().m() as u64;
    let users: Vec<UserOptima> = params
        .users()
        .iter()
        .map(|u| user_optima(u.user, u.key_len as u64 * m, u.t, u.z, params.servers()))
        .collect();
    OptimaTable {
        servers: params.servers(),
        storage_bits_per_server: users.iter().map(|u| u.key_bits).sum(),
        users,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    File,
    Randomness,
    Message,
    MessageSum,
    Storage,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::File => "r(F)",
            Quantity::Randomness => "r(R)",
            Quantity::Message => "r(M)_l",
            Quantity::MessageSum => "sum r(M)",
            Quantity::Storage => "r(S)_l",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Optimal,
    /// Uses more than the optimum (or, for the file, stores less).
    Suboptimal,
    /// Beats a proven bound: the measurement or the implementation is wrong.
    BoundViolated,
    /// Informational: the plaintext was padded up to capacity.
    CapacityUnused,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: Quantity,
    pub user: Option<u16>,
    pub server: Option<u16>,
    pub measured: u64,
    pub optimal: u64,
    pub verdict: Verdict,
}

impl Check {
    /// Whether this entry is consistent with an optimal implementation.
    pub fn ok(&self) -> bool {
        matches!(self.verdict, Verdict::Optimal | Verdict::CapacityUnused)
    }
}

fn judge(quantity: Quantity, user: Option<u16>, server: Option<u16>, measured: u64, optimal: u64) -> Check {
    use std::cmp::Ordering::*;
    let upper_bound = quantity == Quantity::File;
    let verdict = match (measured.cmp(&optimal), upper_bound) {
        (Equal, _) => Verdict::Optimal,
        (Greater, true) | (Less, false) => Verdict::BoundViolated,
        _ => Verdict::Suboptimal,
    };
    Check {
        quantity,
        user,
        server,
        measured,
        optimal,
        verdict,
    }
}

pub fn verify_achievement(report: &ResourceReport, table: &OptimaTable) -> Result<Vec<Check>> {
    let mut measured_users: Vec<u16> = report.users.iter().map(|u| u.user).collect();
    let mut table_users: Vec<u16> = table.users.iter().map(|u| u.user).collect();
    measured_users.sort_unstable();
    table_users.sort_unstable();
    if measured_users != table_users {
        return Err(Error::Usage(format!(
            "report covers users {measured_users:?}, optima cover {table_users:?}"
        )));
    }
    if report.storage_bits.len() != table.servers
        || report.users.iter().any(|u| u.message_bits.len() != table.servers)
    {
        return Err(Error::Usage(format!(
            "report and optima disagree on the server count ({})",
            table.servers
        )));
    }

    let mut checks = Vec::new();
    for u in &report.users {
        let opt = table.user(u.user).expect("user sets compared above");
        let who = Some(u.user);
        checks.push(judge(Quantity::File, who, None, u.file_bits, opt.file_bits));
        if u.plaintext_bits < u.file_bits {
            checks.push(Check {
                quantity: Quantity::File,
                user: who,
                server: None,
                measured: u.plaintext_bits,
                optimal: opt.file_bits,
                verdict: Verdict::CapacityUnused,
            });
        }
        checks.push(judge(Quantity::Randomness, who, None, u.randomness_bits, opt.randomness_bits));
        for (&l, &bits) in &u.message_bits {
            checks.push(judge(Quantity::Message, who, Some(l), bits, opt.message_bits_per_server));
        }
        checks.push(judge(Quantity::MessageSum, who, None, u.message_sum_bits, opt.message_sum_bits));
    }
    for (&l, &bits) in &report.storage_bits {
        checks.push(judge(Quantity::Storage, None, Some(l), bits, table.storage_bits_per_server));
    }
    Ok(checks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub key_bits: u64,
    pub t: usize,
    pub z: usize,
    pub capacity_bits: u64,
    pub randomness_bits: u64,
    pub communication_bits: u64,
}

/// Capacity `i(t-z)` with randomness `iz` and communication `iL`, for key
/// lengths `i = 1..=key_bits` and every valid `(t, z)` in the given ranges.
pub fn capacity_frontier(
    key_bits: u64,
    servers: usize,
    t_range: RangeInclusive<usize>,
    z_range: RangeInclusive<usize>,
) -> Vec<FrontierRow> {
    let mut rows = Vec::new();
    for i in 1..=key_bits {
        for t in t_range.clone().filter(|t| (1..=servers).contains(t)) {
            for z in z_range.clone().filter(|&z| z >= 1 && z < t) {
                let o = user_optima(0, i, t, z, servers);
                rows.push(FrontierRow {
                    key_bits: i,
                    t,
                    z,
                    capacity_bits: o.file_bits,
                    randomness_bits: o.randomness_bits,
                    communication_bits: o.message_sum_bits,
                });
            }
        }
    }
    rows
}
