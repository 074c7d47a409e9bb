//! Security, recoverability and symmetry checks over an enumerated table.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use super::bits::Bits;
use super::dist::JointDistribution;
use super::enumerate::{
    atom_count, enumerate_strategy, file_label, key_label, message_label, share_label, tape_label, Scheme,
};
use crate::error::Result;
use crate::protocol::{StorageParams, UserParams};
use crate::ramp::ramp_leakage_profile;

/// Leakage to one colluding set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetLeakage {
    pub servers: Vec<u16>,
    /// `I(F; M, K_U)` against the whole broadcast.
    pub leakage: Bits,
    /// `I(F; M_U, K_U)`: only the colluders' own messages.
    pub alpha: Bits,
    /// Closed-form ramp prediction for this subset size.
    pub expected_bits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaLevel {
    pub size: usize,
    pub leakage: Vec<Bits>,
    pub alpha: Vec<Bits>,
    pub expected_bits: u64,
    pub symmetric: bool,
    pub matches_profile: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UserLeakage {
    pub user: u16,
    pub t: usize,
    pub z: usize,
    pub file_entropy: Bits,
    pub subsets: Vec<SubsetLeakage>,
    pub profile: Vec<AlphaLevel>,
    pub symmetric: bool,
    pub monotone: bool,
    pub matches_profile: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SecurityEntry {
    pub user: u16,
    /// Users whose files must stay hidden: every `i` with `z_i >= z_user`.
    pub protected: Vec<u16>,
    pub servers: Vec<u16>,
    pub information: Bits,
    pub independent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecoveryEntry {
    pub user: u16,
    pub servers: Vec<u16>,
    /// `H(F | S_A)`.
    pub residual: Bits,
    pub expected: Bits,
    /// `|A| >= t`, so the residual must vanish.
    pub must_recover: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelfCheck {
    pub atoms: u64,
    pub expected_atoms: u64,
    /// Every atom is a distinct assignment of the free symbols.
    pub equiprobable: bool,
    /// Each `M_{d,l}` on its own is uniform.
    pub messages_uniform: bool,
}

impl SelfCheck {
    pub fn ok(&self) -> bool {
        self.atoms == self.expected_atoms && self.equiprobable && self.messages_uniform
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub self_check: bool,
    pub security: bool,
    pub recoverability: bool,
    pub symmetry: bool,
    pub profile: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeakageReport {
    pub field_m: u8,
    pub servers: usize,
    pub users: Vec<UserParams>,
    pub scheme: Scheme,
    pub self_check: SelfCheck,
    pub leakage: Vec<UserLeakage>,
    pub security: Vec<SecurityEntry>,
    pub recoverability: Vec<RecoveryEntry>,
    pub verdicts: Verdicts,
}

/// All subsets of `1..=servers` with `lo <= |U| <= hi`, by size then
/// lexicographically.
pub fn subsets(servers: usize, lo: usize, hi: usize) -> Vec<Vec<u16>> {
    let mut out: Vec<Vec<u16>> = (0u32..1 << servers)
        .map(|mask| (0..servers as u16).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect::<Vec<_>>())
        .filter(|s: &Vec<u16>| (lo..=hi).contains(&s.len()))
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn refs(labels: &[String]) -> Vec<&str> {
    labels.iter().map(String::as_str).collect()
}

/// Exact comparison when both sides are rational, otherwise numeric.
fn le(a: &Bits, b: &Bits) -> bool {
    match (a.as_rational(), b.as_rational()) {
        (Some(x), Some(y)) => x <= y,
        _ => a.to_f64().partial_cmp(&b.to_f64()) != Some(Ordering::Greater),
    }
}

fn user_marginal(dist: &JointDistribution, params: &StorageParams, user: u16) -> Result<JointDistribution> {
    if params.users().len() == 1 {
        return Ok(dist.clone());
    }
    let mut labels = vec![file_label(user)];
    for l in params.server_ids() {
        labels.push(key_label(user, l));
        labels.push(message_label(user, l));
        labels.push(share_label(l, user));
    }
    dist.marginal(&refs(&labels))
}

/// Per-user leakage to every nonempty colluding set, with the α profile.
pub fn leakage_profile(dist: &JointDistribution, params: &StorageParams) -> Result<Vec<UserLeakage>> {
    let m = params.field().m() as i128;
    let mut out = Vec::new();
    for u in params.users() {
        let d = user_marginal(dist, params, u.user)?;
        let ramp = params.ramp(u.user)?;
        let n_s = params.capacity(u.user)?;
        let f = [file_label(u.user)];
        let all_messages: Vec<String> = params.server_ids().map(|l| message_label(u.user, l)).collect();

        let mut rows = Vec::new();
        for set in subsets(params.servers(), 1, params.servers()) {
            let keys: Vec<String> = set.iter().map(|&l| key_label(u.user, l)).collect();
            let mut full = all_messages.clone();
            full.extend(keys.iter().cloned());
            let mut local: Vec<String> = set.iter().map(|&l| message_label(u.user, l)).collect();
            local.extend(keys);
            rows.push(SubsetLeakage {
                expected_bits: ramp_leakage_profile(&ramp, set.len(), n_s)?,
                leakage: d.mutual_information(&refs(&f), &refs(&full))?.bits,
                alpha: d.mutual_information(&refs(&f), &refs(&local))?.bits,
                servers: set,
            });
        }

        let mut profile = Vec::new();
        for size in 1..=params.servers() {
            let level: Vec<&SubsetLeakage> = rows.iter().filter(|r| r.servers.len() == size).collect();
            let expected_bits = ramp_leakage_profile(&ramp, size, n_s)?;
            let expected = Bits::from_integer(expected_bits as i128);
            let leakage: Vec<Bits> = level.iter().map(|r| r.leakage.clone()).collect();
            let alpha: Vec<Bits> = level.iter().map(|r| r.alpha.clone()).collect();
            profile.push(AlphaLevel {
                size,
                symmetric: leakage.windows(2).all(|w| w[0] == w[1]) && alpha.windows(2).all(|w| w[0] == w[1]),
                matches_profile: leakage.iter().chain(&alpha).all(|b| *b == expected),
                leakage,
                alpha,
                expected_bits,
            });
        }
        // α_i <= α_{i+1} across every pair of adjacent levels
        let monotone = profile.windows(2).all(|w| {
            w[0].alpha.iter().all(|a| w[1].alpha.iter().all(|b| le(a, b)))
                && w[0].leakage.iter().all(|a| w[1].leakage.iter().all(|b| le(a, b)))
        });
        out.push(UserLeakage {
            user: u.user,
            t: u.t,
            z: u.z,
            file_entropy: Bits::from_integer(n_s as i128 * m),
            symmetric: check_symmetry(&profile),
            monotone,
            matches_profile: profile.iter().all(|p| p.matches_profile),
            subsets: rows,
            profile,
        });
    }
    Ok(out)
}

/// Equal-size colluding sets learn exactly the same amount.
pub fn check_symmetry(profile: &[AlphaLevel]) -> bool {
    profile.iter().all(|p| p.symmetric)
}

/// `I(F_{Z_d}; M_D, K_{D,U}) = 0` for every user `d` and every `|U| <= z_d`,
/// where `Z_d` holds the users at least as protected as `d`. The empty set
/// is included: the broadcast alone must be independent of every file.
pub fn check_security(dist: &JointDistribution, params: &StorageParams) -> Result<Vec<SecurityEntry>> {
    let users = params.users();
    let messages: Vec<String> = users
        .iter()
        .flat_map(|u| params.server_ids().map(move |l| message_label(u.user, l)))
        .collect();
    let mut out = Vec::new();
    for u in users {
        let protected: Vec<u16> = users.iter().filter(|i| i.z >= u.z).map(|i| i.user).collect();
        let files: Vec<String> = protected.iter().map(|&d| file_label(d)).collect();
        for set in subsets(params.servers(), 0, u.z) {
            let mut view = messages.clone();
            for i in users {
                view.extend(set.iter().map(|&l| key_label(i.user, l)));
            }
            let info = dist.mutual_information(&refs(&files), &refs(&view))?;
            out.push(SecurityEntry {
                user: u.user,
                protected: protected.clone(),
                servers: set,
                information: info.bits,
                independent: info.independent,
            });
        }
    }
    Ok(out)
}

/// `H(F | S_A)` for every nonempty server set, against the ramp profile
/// `H(F) - leak(|A|)`; zero is mandatory once `|A| >= t`.
pub fn check_recoverability(dist: &JointDistribution, params: &StorageParams) -> Result<Vec<RecoveryEntry>> {
    let m = params.field().m() as i128;
    let mut out = Vec::new();
    for u in params.users() {
        let d = user_marginal(dist, params, u.user)?;
        let ramp = params.ramp(u.user)?;
        let n_s = params.capacity(u.user)?;
        let f = [file_label(u.user)];
        for set in subsets(params.servers(), 1, params.servers()) {
            let shares: Vec<String> = set.iter().map(|&l| share_label(l, u.user)).collect();
            let residual = d.conditional_entropy(&refs(&f), &refs(&shares))?;
            let leak = ramp_leakage_profile(&ramp, set.len(), n_s)? as i128;
            let expected = Bits::from_rational(Ratio::from_integer(n_s as i128 * m - leak));
            let must_recover = set.len() >= u.t;
            out.push(RecoveryEntry {
                user: u.user,
                ok: residual == expected && (!must_recover || residual.is_zero()),
                servers: set,
                residual,
                expected,
                must_recover,
            });
        }
    }
    Ok(out)
}

fn self_check(dist: &JointDistribution, params: &StorageParams) -> Result<SelfCheck> {
    let mut free = Vec::new();
    let mut messages_uniform = true;
    let q = params.field().order() as u64;
    for u in params.users() {
        free.push(file_label(u.user));
        free.push(tape_label(u.user));
        for l in params.server_ids() {
            free.push(key_label(u.user, l));
            messages_uniform &= dist.is_uniform(&message_label(u.user, l), q)?;
        }
    }
    let distinct = dist.marginal(&refs(&free))?.len() as u64;
    Ok(SelfCheck {
        atoms: dist.total_weight(),
        expected_atoms: atom_count(params)? as u64,
        equiprobable: distinct == dist.total_weight() && dist.len() as u64 == distinct,
        messages_uniform,
    })
}

/// Builds the table for `scheme` and runs every check on it.
pub fn audit(params: &StorageParams, scheme: Scheme) -> Result<LeakageReport> {
    let dist = enumerate_strategy(params, scheme)?;
    audit_distribution(&dist, params, scheme)
}

pub fn audit_distribution(dist: &JointDistribution, params: &StorageParams, scheme: Scheme) -> Result<LeakageReport> {
    let self_check = self_check(dist, params)?;
    let leakage = leakage_profile(dist, params)?;
    let security = check_security(dist, params)?;
    let recoverability = check_recoverability(dist, params)?;
    let mut verdicts = Verdicts {
        self_check: self_check.ok(),
        security: security.iter().all(|e| e.independent),
        recoverability: recoverability.iter().all(|e| e.ok),
        symmetry: leakage.iter().all(|u| u.symmetric),
        profile: leakage.iter().all(|u| u.matches_profile && u.monotone),
        pass: false,
    };
    verdicts.pass =
        verdicts.self_check && verdicts.security && verdicts.recoverability && verdicts.symmetry && verdicts.profile;
    Ok(LeakageReport {
        field_m: params.field().m(),
        servers: params.servers(),
        users: params.users().to_vec(),
        scheme,
        self_check,
        leakage,
        security,
        recoverability,
        verdicts,
    })
}

fn set_name(set: &[u16]) -> String {
    let inner: Vec<String> = set.iter().map(u16::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl fmt::Display for LeakageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "audit: q = {}, L = {}, scheme = {:?}, {} atoms",
            1u32 << self.field_m,
            self.servers,
            self.scheme,
            self.self_check.atoms
        )?;
        for u in &self.leakage {
            writeln!(f, "user {} (t = {}, z = {}), H(F) = {} bits", u.user, u.t, u.z, u.file_entropy)?;
            writeln!(f, "  {:<12} {:>14} {:>14} {:>9}", "servers", "I(F;M,K_U)", "alpha", "profile")?;
            for s in &u.subsets {
                writeln!(
                    f,
                    "  {:<12} {:>14} {:>14} {:>9}",
                    set_name(&s.servers),
                    s.leakage.to_string(),
                    s.alpha.to_string(),
                    s.expected_bits
                )?;
            }
        }
        for e in &self.security {
            if !e.independent {
                writeln!(
                    f,
                    "leak: user {} colluders {} learn {} bits",
                    e.user,
                    set_name(&e.servers),
                    e.information
                )?;
            }
        }
        for e in &self.recoverability {
            if !e.ok {
                writeln!(
                    f,
                    "recovery: user {} servers {} residual {} (expected {})",
                    e.user,
                    set_name(&e.servers),
                    e.residual,
                    e.expected
                )?;
            }
        }
        let v = &self.verdicts;
        writeln!(f, "self-check     {}", mark(v.self_check))?;
        writeln!(f, "security       {}", mark(v.security))?;
        writeln!(f, "recoverability {}", mark(v.recoverability))?;
        writeln!(f, "symmetry       {}", mark(v.symmetry))?;
        writeln!(f, "profile        {}", mark(v.profile))?;
        write!(f, "overall        {}", mark(v.pass))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    fn gf4() -> FieldSpec {
        FieldSpec::with_width(2).unwrap()
    }

    #[test]
    fn subset_order() {
        let s = subsets(3, 0, 1);
        assert_eq!(s, vec![vec![], vec![1], vec![2], vec![3]]);
        assert_eq!(subsets(4, 2, 2).len(), 6);
    }

    #[test]
    fn default_audit_passes() {
        let p = StorageParams::single(3, 2, 1, 1, gf4()).unwrap();
        let r = audit(&p, Scheme::Honest).unwrap();
        assert!(r.verdicts.pass, "{r}");
        assert_eq!(r.security.len(), 4);
        assert!(r.security.iter().all(|e| e.information.is_zero()));
        let u = &r.leakage[0];
        assert_eq!(u.file_entropy, Bits::from_integer(2));
        // two servers already recover
        assert!(u.subsets.iter().filter(|s| s.servers.len() == 2).all(|s| s.leakage == u.file_entropy));
    }

    #[test]
    fn skipping_the_pad_leaks_everything() {
        let p = StorageParams::single(3, 2, 1, 1, gf4()).unwrap();
        let r = audit(&p, Scheme::NoOtp).unwrap();
        assert!(!r.verdicts.security && !r.verdicts.pass);
        let empty = r.security.iter().find(|e| e.servers.is_empty()).unwrap();
        assert_eq!(empty.information, Bits::from_integer(2));
        assert!(r.verdicts.recoverability);
    }

    #[test]
    fn ramp_profile_at_four_servers() {
        let p = StorageParams::single(4, 3, 1, 1, gf4()).unwrap();
        let r = audit(&p, Scheme::Honest).unwrap();
        assert!(r.verdicts.pass, "{r}");
        let u = &r.leakage[0];
        let alphas: Vec<Bits> = u.profile.iter().map(|p| p.alpha[0].clone()).collect();
        assert_eq!(alphas[..3], [Bits::zero(), Bits::from_integer(2), Bits::from_integer(4)]);
        for e in r.recoverability.iter().filter(|e| e.servers.len() == 2) {
            assert_eq!(e.residual, Bits::from_integer(2));
        }
    }

    #[test]
    fn asymmetric_sabotage_flagged_at_size_one() {
        let p = StorageParams::single(4, 3, 1, 1, gf4()).unwrap();
        let r = audit(&p, Scheme::Asymmetric { server: 2 }).unwrap();
        assert!(!r.verdicts.symmetry);
        let first = &r.leakage[0].profile[0];
        assert_eq!(first.size, 1);
        assert!(!first.symmetric);
        assert!(!r.verdicts.pass);
    }

    #[test]
    fn report_serializes_exact_strings() {
        let p = StorageParams::single(3, 2, 1, 1, gf4()).unwrap();
        let r = audit(&p, Scheme::Honest).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["security"][0]["information"], "0");
        assert_eq!(json["leakage"][0]["file_entropy"], "2");
        assert_eq!(json["scheme"], "honest");
    }
}
