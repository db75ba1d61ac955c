//! Transmission schedule algebra.
//!
//! Users are labelled `1..=K` throughout this module, matching the usual
//! notation for the routing map. In broadcast slot `t` the relay beams
//! toward user `i` the symbol of user `j(i, t)`, so user `k` receives its
//! desired symbol `x_{j(k,t)}` on its own beam while every other beam
//! leaks interference.
//!
//! The SIC broadcast needs `t' = ceil((K-1)/2)` slots. After those, each
//! user knows `t' + 1` symbols and solves a `t' x (K - t' - 1)` linear
//! system for the rest.

use crate::error::{Error, Result};

/// Broadcast SIC slot count `ceil((K-1)/2)`.
pub fn slot_count(users: usize) -> Result<usize> {
    if users < 2 {
        return Err(Error::InvalidConfig(format!(
            "user count must be at least 2, got {users}"
        )));
    }
    Ok(users / 2)
}

/// Routing map `j(k, t) = ((k + t - 1) mod K) + 1`, total over all integers.
///
/// # Panics
///
/// Panics if `users < 2`.
pub fn partner_index(k: i64, t: i64, users: usize) -> usize {
    assert!(users >= 2, "partner_index needs at least two users");
    let k_len = users as i64;
    ((k + t - 1).rem_euclid(k_len) + 1) as usize
}

/// Schedule bookkeeping for a fixed user count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotIndexer {
    users: usize,
    sic_slots: usize,
}

impl SlotIndexer {
    pub fn new(users: usize) -> Result<Self> {
        let sic_slots = slot_count(users)?;
        Ok(Self { users, sic_slots })
    }

    /// `K`.
    pub fn users(&self) -> usize {
        self.users
    }

    /// `t'`, the number of broadcast slots in the proposed scheme.
    pub fn sic_slots(&self) -> usize {
        self.sic_slots
    }

    /// Number of symbols each user resolves by zero-forcing, `K - t' - 1`.
    pub fn zf_unknowns(&self) -> usize {
        self.users - self.sic_slots - 1
    }

    /// Total slots (access + broadcast) of the proposed protocol.
    pub fn proposed_total_slots(&self) -> usize {
        self.sic_slots + 1
    }

    /// Total slots (access + broadcast) of the conventional protocol.
    pub fn conventional_total_slots(&self) -> usize {
        self.users
    }

    pub fn partner(&self, k: i64, t: i64) -> usize {
        partner_index(k, t, self.users)
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.users {
            return Err(Error::InvalidArgument(format!("user {k} outside 1..={}", self.users)));
        }
        Ok(())
    }

    /// `V_{k,t} = { j(k - t + i, t) : i = 0..=t }`, in that order.
    ///
    /// These are the symbols user `k` holds once slot `t` has been decoded:
    /// its own symbol plus one symbol per decoded slot.
    pub fn known_set(&self, k: usize, t: usize) -> Result<Vec<usize>> {
        self.check_user(k)?;
        if t > self.sic_slots {
            return Err(Error::InvalidArgument(format!(
                "slot {t} outside 0..={}",
                self.sic_slots
            )));
        }
        let (k, t) = (k as i64, t as i64);
        Ok((0..=t).map(|i| self.partner(k - t + i, t)).collect())
    }

    /// `[j(k, t'+1), ..., j(k, K-1)]`, the symbols left for the ZF stage.
    pub fn remaining_unknowns(&self, k: usize) -> Result<Vec<usize>> {
        self.check_user(k)?;
        Ok((self.sic_slots + 1..self.users)
            .map(|t| self.partner(k as i64, t as i64))
            .collect())
    }

    /// Routing offset of entry `(m, n)` of the ZF matrix: `t' + n - m`.
    ///
    /// Rows are ordered by broadcast slot `m = 1..=t'`, columns by unknown
    /// `n = 1..=K-t'-1`. The entry is `g_k^H g_{j(k, offset)}`.
    pub fn zf_coefficient_offset(&self, m: usize, n: usize) -> Result<usize> {
        zf_coefficient_offset(m, n, self.sic_slots, self.zf_unknowns())
    }

    /// Users whose beams still interfere with user `k` in conventional slot
    /// `t`: every `i` with `j(i,t)` outside `{j(k,t), j(k-t,t)}`.
    pub fn conventional_interferers(&self, k: usize, t: usize) -> Result<Vec<usize>> {
        self.check_user(k)?;
        if t == 0 || t >= self.users {
            return Err(Error::InvalidArgument(format!(
                "conventional slot {t} outside 1..={}",
                self.users - 1
            )));
        }
        let (ki, ti) = (k as i64, t as i64);
        let desired = self.partner(ki, ti);
        let own = self.partner(ki - ti, ti);
        Ok((1..=self.users)
            .filter(|&i| {
                let s = self.partner(i as i64, ti);
                s != desired && s != own
            })
            .collect())
    }

    /// Users whose beams still interfere with user `k` in SIC slot `t`:
    /// every `i` with `j(i,t)` outside `V_{k,t}`.
    pub fn proposed_interferers(&self, k: usize, t: usize) -> Result<Vec<usize>> {
        if t == 0 {
            return Err(Error::InvalidArgument("SIC slots start at 1".into()));
        }
        let known = self.known_set(k, t)?;
        let ti = t as i64;
        Ok((1..=self.users)
            .filter(|&i| !known.contains(&self.partner(i as i64, ti)))
            .collect())
    }
}

/// Free-standing form of [`SlotIndexer::zf_coefficient_offset`].
pub fn zf_coefficient_offset(m: usize, n: usize, sic_slots: usize, unknowns: usize) -> Result<usize> {
    if m == 0 || m > sic_slots || n == 0 || n > unknowns {
        return Err(Error::InvalidArgument(format!(
            "ZF entry ({m}, {n}) outside {sic_slots} x {unknowns}"
        )));
    }
    Ok(sic_slots + n - m)
}
