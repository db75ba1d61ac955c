//! Closed-form lower bounds and large-array limits of the per-stage
//! spectral efficiencies, plus the random-matrix helpers behind them.
//!
//! The downlink bounds come from Jensen's inequality applied to
//! `log2(1 + 1/X)` together with the inverse moments of `||g_k||^2`, which
//! only exist for `M >= 3`.

use nalgebra::DVectorView;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::SlotIndexer;

fn require_antennas(quantity: &'static str, antennas: usize, min_antennas: usize) -> Result<()> {
    if antennas < min_antennas {
        return Err(Error::Domain {
            quantity,
            min_antennas,
            antennas,
        });
    }
    Ok(())
}

fn check_user(beta: &[f64], k: usize) -> Result<()> {
    if k == 0 || k > beta.len() {
        return Err(Error::InvalidArgument(format!("user {k} outside 1..={}", beta.len())));
    }
    Ok(())
}

/// `log2(1 + P_u (M-1) beta_k / (P_u sum_{i != k} beta_i + 1))`.
pub fn uplink_bound(beta: &[f64], user_power: f64, antennas: usize, k: usize) -> Result<f64> {
    require_antennas("uplink bound", antennas, 2)?;
    check_user(beta, k)?;
    let others: f64 = beta
        .iter()
        .enumerate()
        .filter(|(i, _)| i + 1 != k)
        .map(|(_, b)| b)
        .sum();
    let m = antennas as f64;
    Ok((1.0 + user_power * (m - 1.0) * beta[k - 1] / (user_power * others + 1.0)).log2())
}

/// Shared form of both downlink bounds for a given interferer set.
pub fn downlink_bound_with(beta: &[f64], relay_power: f64, antennas: usize, k: usize, interferers: &[usize]) -> f64 {
    let m = antennas as f64;
    let bk = beta[k - 1];
    let interference: f64 = interferers.iter().map(|&i| beta[i - 1]).sum();
    let total: f64 = beta.iter().sum();
    let num = relay_power * (m - 1.0) * (m - 2.0) * bk * bk;
    let den = relay_power * (m - 2.0) * bk * interference + m * total;
    (1.0 + num / den).log2()
}

/// Lower bound on the conventional broadcast SE of user `k` in slot `t`.
pub fn conventional_dl_bound(beta: &[f64], relay_power: f64, antennas: usize, k: usize, t: usize) -> Result<f64> {
    require_antennas("downlink bound", antennas, 3)?;
    let idx = SlotIndexer::new(beta.len())?;
    let interferers = idx.conventional_interferers(k, t)?;
    Ok(downlink_bound_with(beta, relay_power, antennas, k, &interferers))
}

/// Lower bound on the SIC broadcast SE of user `k` in slot `t <= t'`.
pub fn proposed_dl_bound(beta: &[f64], relay_power: f64, antennas: usize, k: usize, t: usize) -> Result<f64> {
    require_antennas("downlink bound", antennas, 3)?;
    let idx = SlotIndexer::new(beta.len())?;
    if t == 0 || t > idx.sic_slots() {
        return Err(Error::InvalidArgument(format!(
            "SIC slot {t} outside 1..={}",
            idx.sic_slots()
        )));
    }
    let interferers = idx.proposed_interferers(k, t)?;
    Ok(downlink_bound_with(beta, relay_power, antennas, k, &interferers))
}

/// Large-array limit of the ZF output `n` of user `k`:
/// `log2(1 + P_r beta_k sum_{i=1}^{t'} beta_{j(k, n+i-1)} / sum(beta))`.
pub fn zf_asymptotic_rate(beta: &[f64], relay_power: f64, k: usize, n: usize) -> Result<f64> {
    let idx = SlotIndexer::new(beta.len())?;
    check_user(beta, k)?;
    if n == 0 || n > idx.zf_unknowns() {
        return Err(Error::InvalidArgument(format!(
            "ZF output {n} outside 1..={}",
            idx.zf_unknowns()
        )));
    }
    Ok((1.0 + relay_power * beta[k - 1] * zf_limit_sum(beta, &idx, k, n) / beta.iter().sum::<f64>()).log2())
}

/// `sum_{i=1}^{t'} beta_{j(k, n+i-1)}`; the claimed limit of
/// `M [(A^H A)^{-1}]_{nn}` is `1 / (beta_k` times this`)`.
pub fn zf_limit_sum(beta: &[f64], idx: &SlotIndexer, k: usize, n: usize) -> f64 {
    (1..=idx.sic_slots())
        .map(|i| beta[idx.partner(k as i64, (n + i - 1) as i64) - 1])
        .sum()
}

/// `(E{1/||g_k||^2}, E{1/||g_k||^4})` for `g_k ~ CN(0, beta_k I_M)`.
pub fn inverse_norm_moments(antennas: usize, beta_k: f64) -> Result<(f64, f64)> {
    require_antennas("inverse norm moments", antennas, 3)?;
    let m = antennas as f64;
    Ok((
        1.0 / ((m - 1.0) * beta_k),
        1.0 / ((m - 1.0) * (m - 2.0) * beta_k * beta_k),
    ))
}

/// `(1/M) a^H b b^H c`; with `a = c = g_k` and `b = g_{j(k,i)}` this is the
/// trace-lemma statistic whose mean is `beta_k beta_{j(k,i)}`.
pub fn quadratic_statistic(
    a: DVectorView<'_, Complex64>,
    b: DVectorView<'_, Complex64>,
    c: DVectorView<'_, Complex64>,
) -> Complex64 {
    let m = a.len() as f64;
    a.dotc(&b) * b.dotc(&c) / m
}

/// `(1/M) |g_k^H g_{j(k,i)}|^2` from a channel realization.
pub fn trace_lemma_statistic(channel: &crate::channel::ChannelRealization, k: usize, i: usize) -> Result<f64> {
    let users = channel.users();
    let partner = crate::protocol::partner_index(k as i64, i as i64, users);
    if partner == k {
        return Err(Error::InvalidArgument(format!("offset {i} maps user {k} onto itself")));
    }
    let gk = channel.column(k);
    let gj = channel.column(partner);
    Ok(quadratic_statistic(gk, gj, gk).re)
}

/// Every closed-form quantity for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub uplink: Vec<f64>,
    /// `[k][t-1]` for `t = 1..K-1`.
    pub conventional: Vec<Vec<f64>>,
    /// `[k][t-1]` for `t = 1..t'`.
    pub proposed: Vec<Vec<f64>>,
    /// `[k][n-1]` for `n = 1..K-t'-1`.
    pub zf_asymptotic: Vec<Vec<f64>>,
}

impl BoundReport {
    pub fn new(beta: &[f64], user_power: f64, relay_power: f64, antennas: usize) -> Result<Self> {
        require_antennas("bound report", antennas, 3)?;
        let idx = SlotIndexer::new(beta.len())?;
        let users = idx.users();
        let mut report = Self {
            uplink: Vec::with_capacity(users),
            conventional: Vec::with_capacity(users),
            proposed: Vec::with_capacity(users),
            zf_asymptotic: Vec::with_capacity(users),
        };
        for k in 1..=users {
            report.uplink.push(uplink_bound(beta, user_power, antennas, k)?);
            report.conventional.push(
                (1..users)
                    .map(|t| conventional_dl_bound(beta, relay_power, antennas, k, t))
                    .collect::<Result<_>>()?,
            );
            report.proposed.push(
                (1..=idx.sic_slots())
                    .map(|t| proposed_dl_bound(beta, relay_power, antennas, k, t))
                    .collect::<Result<_>>()?,
            );
            report.zf_asymptotic.push(
                (1..=idx.zf_unknowns())
                    .map(|n| zf_asymptotic_rate(beta, relay_power, k, n))
                    .collect::<Result<_>>()?,
            );
        }
        Ok(report)
    }

    /// Proposed-scheme downlink row for user `k`: SIC bounds then ZF limits.
    pub fn proposed_row(&self, k: usize) -> Vec<f64> {
        let mut row = self.proposed[k - 1].clone();
        row.extend_from_slice(&self.zf_asymptotic[k - 1]);
        row
    }
}
