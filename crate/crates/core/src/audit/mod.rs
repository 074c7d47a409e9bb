//! Exhaustive exact audit of the storage strategy at small field sizes.
//!
//! Every file, encoder tape and key assignment is enumerated and pushed
//! through the real protocol code. Entropies come out as exact symbolic
//! values, so "no leakage" means an exact zero and not a small float.

mod bits;
mod dist;
mod enumerate;
mod report;

pub use bits::Bits;
pub use dist::{Information, JointDistribution, Variable};
pub use enumerate::{
    atom_count, enumerate_strategy, file_label, key_label, message_label, share_label, tape_label, Scheme,
    ATOM_LIMIT,
};
pub use report::{
    audit, audit_distribution, check_recoverability, check_security, check_symmetry, leakage_profile, subsets,
    AlphaLevel, LeakageReport, RecoveryEntry, SecurityEntry, SelfCheck, SubsetLeakage, UserLeakage, Verdicts,
};
