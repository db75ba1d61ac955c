//! Instantaneous SINR for every stage of both protocols.
//!
//! All quantities depend on the channel only through inner products
//! `g_k^H g_i`, so they are evaluated from a [`Gram`] computed once per
//! realization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::HermitianFactor;
use crate::protocol::SlotIndexer;

/// `G^H G` for one realization together with the antenna count.
#[derive(Debug, Clone)]
pub struct Gram {
    inner: DMatrix<Complex64>,
    antennas: usize,
}

impl Gram {
    pub fn new(channel: &ChannelRealization) -> Self {
        let g = channel.matrix();
        Self {
            inner: g.adjoint() * g,
            antennas: g.nrows(),
        }
    }

    pub fn users(&self) -> usize {
        self.inner.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// `g_k^H g_i` for 1-based users.
    pub fn inner(&self, k: usize, i: usize) -> Complex64 {
        self.inner[(k - 1, i - 1)]
    }

    /// `||g_k||^2`.
    pub fn norm_sqr(&self, k: usize) -> f64 {
        self.inner[(k - 1, k - 1)].re
    }

    /// `|g_k^H g_i|^2`.
    pub fn cross_gain(&self, k: usize, i: usize) -> f64 {
        self.inner[(k - 1, i - 1)].norm_sqr()
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.users() {
            return Err(Error::InvalidArgument(format!("user {k} outside 1..={}", self.users())));
        }
        Ok(())
    }
}

impl From<&ChannelRealization> for Gram {
    fn from(channel: &ChannelRealization) -> Self {
        Gram::new(channel)
    }
}

/// Relay precoding scale `P_r / (M sum(beta))`.
pub fn relay_scale(beta: &[f64], relay_power: f64, antennas: usize) -> f64 {
    relay_power / (antennas as f64 * beta.iter().sum::<f64>())
}

/// `log2(1 + sinr)` in bit/s/Hz.
pub fn instantaneous_se(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Post-MRC uplink SINR of user `k` at the relay.
pub fn uplink_sinr(gram: &Gram, user_power: f64, k: usize) -> Result<f64> {
    gram.check_user(k)?;
    let norm = gram.norm_sqr(k);
    if !(norm > 0.0) {
        return Err(Error::DegenerateChannel { user: k });
    }
    let interference: f64 = (1..=gram.users())
        .filter(|&i| i != k)
        .map(|i| gram.cross_gain(k, i))
        .sum();
    Ok(user_power * norm * norm / (user_power * interference + norm))
}

/// Broadcast SINR of user `k` given the beams that still interfere.
///
/// `scale` is [`relay_scale`]; `interferers` lists 1-based users.
pub fn broadcast_sinr(gram: &Gram, scale: f64, k: usize, interferers: &[usize]) -> f64 {
    let norm = gram.norm_sqr(k);
    let interference: f64 = interferers.iter().map(|&i| gram.cross_gain(k, i)).sum();
    scale * norm * norm / (scale * interference + 1.0)
}

/// SINR of user `k` in slot `t` of the conventional `K`-slot broadcast.
pub fn conventional_dl_sinr(gram: &Gram, beta: &[f64], relay_power: f64, k: usize, t: usize) -> Result<f64> {
    let idx = SlotIndexer::new(gram.users())?;
    let interferers = idx.conventional_interferers(k, t)?;
    let scale = relay_scale(beta, relay_power, gram.antennas());
    Ok(broadcast_sinr(gram, scale, k, &interferers))
}

/// SINR of user `k` in SIC slot `t` (`1..=t'`) of the proposed broadcast.
pub fn proposed_dl_sinr(gram: &Gram, beta: &[f64], relay_power: f64, k: usize, t: usize) -> Result<f64> {
    let idx = SlotIndexer::new(gram.users())?;
    if t > idx.sic_slots() {
        return Err(Error::InvalidArgument(format!(
            "SIC slot {t} outside 1..={}",
            idx.sic_slots()
        )));
    }
    let interferers = idx.proposed_interferers(k, t)?;
    let scale = relay_scale(beta, relay_power, gram.antennas());
    Ok(broadcast_sinr(gram, scale, k, &interferers))
}

/// The zero-forcing stage of one user: the residual system matrix `A`,
/// its Gram matrix and the diagonal of the inverse Gram.
#[derive(Debug, Clone)]
pub struct ZfStage {
    user: usize,
    a: DMatrix<Complex64>,
    gram: DMatrix<Complex64>,
    noise_gain: Vec<f64>,
    factor: HermitianFactor,
}

impl ZfStage {
    pub fn user(&self) -> usize {
        self.user
    }

    /// `t' x (K - t' - 1)`; rows follow broadcast slots.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    /// `[(A^H A)^{-1}]_{nn}` for `n = 1..=K-t'-1` (stored 0-based).
    pub fn noise_gain(&self) -> &[f64] {
        &self.noise_gain
    }

    pub fn unknowns(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.a.ncols() == 0
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.factor.pivot_ratio()
    }

    /// The combiner `Z^T = (A^H A)^{-1} A^H`.
    pub fn combiner(&self) -> DMatrix<Complex64> {
        self.factor.solve_matrix(&self.a.adjoint())
    }

    /// `Z^T y` for a residual observation vector of length `t'`.
    pub fn apply(&self, residual: &DVector<Complex64>) -> DVector<Complex64> {
        self.factor.solve(&(self.a.adjoint() * residual))
    }
}

/// Build user `k`'s ZF stage from the realization's inner products.
///
/// Entry `(m, n)` of `A` is `g_k^H g_{j(k, t' + n - m)}`. For `K = 2` the
/// stage is empty.
pub fn build_zf_stage(gram: &Gram, k: usize, indexer: &SlotIndexer) -> Result<ZfStage> {
    gram.check_user(k)?;
    if indexer.users() != gram.users() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} users", indexer.users()),
            got: format!("{} users", gram.users()),
        });
    }
    let rows = indexer.sic_slots();
    let cols = indexer.zf_unknowns();
    let mut a = DMatrix::<Complex64>::zeros(rows, cols);
    for m in 1..=rows {
        for n in 1..=cols {
            let offset = indexer.zf_coefficient_offset(m, n)?;
            a[(m - 1, n - 1)] = gram.inner(k, indexer.partner(k as i64, offset as i64));
        }
    }
    let ag = a.adjoint() * &a;
    let factor = HermitianFactor::new(&ag)?;
    let noise_gain = factor.inverse_diagonal();
    Ok(ZfStage {
        user: k,
        a,
        gram: ag,
        noise_gain,
        factor,
    })
}

/// Post-ZF SINR of unknown `n` (1-based): `scale / [(A^H A)^{-1}]_{nn}`.
pub fn zf_sinr(stage: &ZfStage, beta: &[f64], relay_power: f64, antennas: usize, n: usize) -> Result<f64> {
    if n == 0 || n > stage.unknowns() {
        return Err(Error::InvalidArgument(format!(
            "ZF output {n} outside 1..={}",
            stage.unknowns()
        )));
    }
    Ok(relay_scale(beta, relay_power, antennas) / stage.noise_gain[n - 1])
}

/// Relay transmit vector `sqrt(P_r/(M sum beta)) sum_i g_i s_i`, where
/// `assignment[i-1]` is the symbol sent on user `i`'s beam.
pub fn relay_precode(
    channel: &ChannelRealization,
    beta: &[f64],
    relay_power: f64,
    assignment: &[Complex64],
) -> Result<DVector<Complex64>> {
    let g = channel.matrix();
    if assignment.len() != g.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} symbols", g.ncols()),
            got: format!("{} symbols", assignment.len()),
        });
    }
    let x = DVector::from_column_slice(assignment);
    let scale = relay_scale(beta, relay_power, g.nrows()).sqrt();
    Ok(g * x * Complex64::from(scale))
}

/// Beam assignment of slot `t`: entry `i` carries `x_{j(i,t)}`.
pub fn slot_assignment(symbols: &[Complex64], t: usize) -> Vec<Complex64> {
    let users = symbols.len();
    (1..=users)
        .map(|i| symbols[crate::protocol::partner_index(i as i64, t as i64, users) - 1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelRealization, LargeScaleProfile};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn channel(rows: usize, cols: usize, data: &[Complex64]) -> ChannelRealization {
        ChannelRealization::from_matrix(DMatrix::from_row_slice(rows, cols, data), vec![1.0; cols]).unwrap()
    }

    #[test]
    fn se_values() {
        assert_eq!(instantaneous_se(0.0), 0.0);
        assert_eq!(instantaneous_se(1.0), 1.0);
        assert_eq!(instantaneous_se(3.0), 2.0);
    }

    #[test]
    fn uplink_examples() {
        let ch = channel(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((uplink_sinr(&Gram::new(&ch), 1.0, 1).unwrap() - 2.0).abs() < 1e-15);

        let ch = channel(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((uplink_sinr(&Gram::new(&ch), 1.0, 1).unwrap() - 0.5).abs() < 1e-15);

        let ch = channel(
            3,
            2,
            &[
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let gram = Gram::new(&ch);
        assert!((uplink_sinr(&gram, 1.0, 1).unwrap() - 4.0).abs() < 1e-15);
        assert!((uplink_sinr(&gram, 1.0, 2).unwrap() - 1.0).abs() < 1e-15);

        let ch = channel(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            uplink_sinr(&Gram::new(&ch), 1.0, 1),
            Err(Error::DegenerateChannel { user: 1 })
        ));
        assert!(uplink_sinr(&Gram::new(&ch), 1.0, 3).is_err());
    }

    #[test]
    fn two_users_see_no_broadcast_interference() {
        let ch = ChannelRealization::draw(4, &LargeScaleProfile::uniform(2), 3, 0);
        let gram = Gram::new(&ch);
        let scale = relay_scale(&[1.0, 1.0], 5.0, 4);
        for k in 1..=2 {
            let n = gram.norm_sqr(k);
            let got = conventional_dl_sinr(&gram, &[1.0, 1.0], 5.0, k, 1).unwrap();
            assert!((got - scale * n * n).abs() <= 1e-12 * got);
        }
        assert!(conventional_dl_sinr(&gram, &[1.0, 1.0], 5.0, 1, 2).is_err());
        assert!(conventional_dl_sinr(&gram, &[1.0, 1.0], 5.0, 1, 0).is_err());
    }

    #[test]
    fn three_user_broadcast_by_enumeration() {
        // K = 3, slot 1: user k hears x_{k+1} on beam k and x_{k} on beam k-1
        // (its own symbol), leaving beam k+1 (carrying x_{k+2}) as interference.
        let ch = ChannelRealization::draw(4, &LargeScaleProfile::uniform(3), 8, 1);
        let gram = Gram::new(&ch);
        let beta = [1.0; 3];
        let scale = 7.0 / (4.0 * 3.0);
        for k in 1..=3usize {
            let beam = k % 3 + 1;
            let n = gram.norm_sqr(k);
            let expected = scale * n * n / (scale * gram.cross_gain(k, beam) + 1.0);
            let got = proposed_dl_sinr(&gram, &beta, 7.0, k, 1).unwrap();
            assert!((got - expected).abs() <= 1e-12 * expected);
            assert_eq!(got, conventional_dl_sinr(&gram, &beta, 7.0, k, 1).unwrap());
        }
        assert!(proposed_dl_sinr(&gram, &beta, 7.0, 1, 2).is_err());
    }

    #[test]
    fn zf_single_unknown() {
        // K = 3: A is the 1x1 matrix g_k^H g_{j(k,1)}.
        let ch = ChannelRealization::draw(6, &LargeScaleProfile::uniform(3), 4, 2);
        let gram = Gram::new(&ch);
        let idx = SlotIndexer::new(3).unwrap();
        for k in 1..=3 {
            let st = build_zf_stage(&gram, k, &idx).unwrap();
            let expected = 1.0 / gram.cross_gain(k, idx.partner(k as i64, 1));
            assert!((st.noise_gain()[0] - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn zf_unit_sinr_construction() {
        // |g_1^H g_2|^2 = M sum(beta) / P_r makes the single ZF output SINR 1.
        let m = 3usize;
        let pr = 2.0;
        let target = (m as f64 * 3.0 / pr).sqrt();
        let ch = channel(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(target, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let gram = Gram::new(&ch);
        let st = build_zf_stage(&gram, 1, &SlotIndexer::new(3).unwrap()).unwrap();
        let s = zf_sinr(&st, &[1.0; 3], pr, m, 1).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(zf_sinr(&st, &[1.0; 3], pr, m, 2).is_err());
    }

    #[test]
    fn zf_stage_empty_for_two_users() {
        let ch = ChannelRealization::draw(4, &LargeScaleProfile::uniform(2), 1, 0);
        let st = build_zf_stage(&Gram::new(&ch), 1, &SlotIndexer::new(2).unwrap()).unwrap();
        assert!(st.is_empty());
        assert!(st.noise_gain().is_empty());
        assert_eq!(st.combiner().nrows(), 0);
    }

    #[test]
    fn zf_singular_when_beams_collinear() {
        // Identical columns make every cross product equal, so A has rank one.
        let col = [c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.1), c(0.1, 0.0)];
        let data: Vec<Complex64> = (0..4).flat_map(|r| std::iter::repeat_n(col[r], 5)).collect();
        let ch = channel(4, 5, &data);
        let err = build_zf_stage(&Gram::new(&ch), 1, &SlotIndexer::new(5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }

    #[test]
    fn precode_examples() {
        let ch = channel(2, 1, &[c(1.0, 1.0), c(0.0, -2.0)]);
        let s = relay_precode(&ch, &[2.0], 8.0, &[c(1.0, 0.0)]).unwrap();
        let scale = (8.0f64 / (2.0 * 2.0)).sqrt();
        assert!((s[0] - c(scale, scale)).norm() < 1e-15);
        assert!((s[1] - c(0.0, -2.0 * scale)).norm() < 1e-15);
        let zero = relay_precode(&ch, &[2.0], 8.0, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert!(relay_precode(&ch, &[2.0], 8.0, &[]).is_err());
    }

    #[test]
    fn slot_assignment_routes_symbols() {
        let x: Vec<Complex64> = (1..=5).map(|i| c(i as f64, 0.0)).collect();
        let a = slot_assignment(&x, 2);
        assert_eq!(a.iter().map(|z| z.re as usize).collect::<Vec<_>>(), vec![3, 4, 5, 1, 2]);
    }
}
