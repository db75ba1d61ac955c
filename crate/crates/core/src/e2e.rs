//! Symbol-level simulation of one protocol round.
//!
//! The rate expressions assume each user ends the round holding all `K - 1`
//! foreign symbols. This module runs the actual chain (relay broadcast,
//! known-symbol subtraction, zero-forcing on the residual system) and checks
//! that it does.
//!
//! Relay decoding is genie-aided. In the SIC slots the symbol a user keeps
//! for later subtraction is the correct one, matching the rate model's
//! assumption of error-free earlier stages.

use std::collections::BTreeSet;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{self, ChannelRealization, LargeScaleProfile, SystemConfig};
use crate::error::{Error, Result};
use crate::protocol::{partner_index, SlotIndexer};
use crate::rates::{self, Gram, ZfStage};
use crate::rng::{self, Domain};

const MAX_RESAMPLES: u64 = 64;

/// Symbol alphabet of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Qpsk,
    /// Deterministic unit-modulus symbols `exp(i * 0.7 k)`.
    UnitTestFixed,
}

/// One unit-energy symbol per user.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Vec<Complex64>,
    pub constellation: Constellation,
}

/// Gray-mapped QPSK point with index `0..4`.
pub fn qpsk_point(index: u8) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let re = if index & 1 == 0 { a } else { -a };
    let im = if index & 2 == 0 { a } else { -a };
    Complex64::new(re, im)
}

/// Nearest QPSK point.
pub fn qpsk_decide(z: Complex64) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(if z.re >= 0.0 { a } else { -a }, if z.im >= 0.0 { a } else { -a })
}

impl SymbolFrame {
    pub fn qpsk<R: Rng + ?Sized>(users: usize, rng: &mut R) -> Self {
        Self {
            symbols: (0..users).map(|_| qpsk_point(rng.random_range(0..4))).collect(),
            constellation: Constellation::Qpsk,
        }
    }

    pub fn fixed(users: usize) -> Self {
        Self {
            symbols: (1..=users)
                .map(|k| Complex64::from_polar(1.0, 0.7 * k as f64))
                .collect(),
            constellation: Constellation::UnitTestFixed,
        }
    }

    /// `x_s` for 1-based user `s`.
    pub fn symbol(&self, s: usize) -> Complex64 {
        self.symbols[s - 1]
    }
}

/// Which symbols each user holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeState {
    known: Vec<BTreeSet<usize>>,
}

impl KnowledgeState {
    /// Each user starts with its own symbol.
    pub fn new(users: usize) -> Self {
        Self {
            known: (1..=users).map(|k| BTreeSet::from([k])).collect(),
        }
    }

    pub fn known(&self, k: usize) -> &BTreeSet<usize> {
        &self.known[k - 1]
    }

    /// Record that user `k` decoded symbol `s`; returns false if already known.
    pub fn learn(&mut self, k: usize, s: usize) -> bool {
        self.known[k - 1].insert(s)
    }

    pub fn is_complete(&self) -> bool {
        let users = self.known.len();
        self.known.iter().all(|s| s.len() == users)
    }
}

/// Outcome of a noiseless round.
#[derive(Debug, Clone)]
pub struct RoundReport {
    /// `recovered[k-1][s-1]`: user `k`'s estimate of `x_s` (its own symbol included).
    pub recovered: Vec<Vec<Option<Complex64>>>,
    /// Largest `|estimate - true|` over all users and foreign symbols.
    pub max_deviation: f64,
    /// Access slot plus broadcast slots.
    pub slots_used: usize,
    /// Knowledge after each SIC slot `t = 0..=t'`, then after the ZF stage.
    pub knowledge_trace: Vec<KnowledgeState>,
    pub zf_invoked: bool,
    /// Channel draws rejected because some ZF stage was singular.
    pub resampled: u64,
    pub frame: SymbolFrame,
}

impl RoundReport {
    pub fn all_recovered(&self) -> bool {
        self.recovered.iter().all(|row| row.iter().all(Option::is_some))
    }
}

/// Coefficient of symbol `s` at user `k` in slot `t`: the symbol rides on
/// beam `i` with `j(i, t) = s`.
fn beam_of(s: usize, t: usize, users: usize) -> usize {
    partner_index(s as i64, -(t as i64), users)
}

struct Broadcast {
    /// `received[k-1][t-1]`
    received: Vec<Vec<Complex64>>,
    amplitude: f64,
}

fn broadcast(
    channel: &ChannelRealization,
    frame: &SymbolFrame,
    relay_power: f64,
    slots: usize,
    noise: Option<&mut dyn rand::RngCore>,
) -> Result<Broadcast> {
    let users = channel.users();
    let beta = channel.beta();
    let amplitude = rates::relay_scale(beta, relay_power, channel.antennas()).sqrt();
    let mut received = vec![Vec::with_capacity(slots); users];
    let mut noise = noise;
    for t in 1..=slots {
        let assignment = rates::slot_assignment(&frame.symbols, t);
        let s = rates::relay_precode(channel, beta, relay_power, &assignment)?;
        for (k, row) in received.iter_mut().enumerate() {
            let mut y = channel.column(k + 1).dotc(&s);
            if let Some(rng) = noise.as_deref_mut() {
                y += channel::complex_normal(rng);
            }
            row.push(y);
        }
    }
    Ok(Broadcast { received, amplitude })
}

/// Subtract from `y` (slot `t`, user `k`) every symbol in `known` using the
/// user's own estimates.
fn subtract_known(
    y: Complex64,
    gram: &Gram,
    amplitude: f64,
    k: usize,
    t: usize,
    known: &BTreeSet<usize>,
    estimates: &[Option<Complex64>],
) -> Complex64 {
    let users = gram.users();
    known.iter().fold(y, |acc, &s| {
        let est = estimates[s - 1].expect("known symbol has an estimate");
        acc - gram.inner(k, beam_of(s, t, users)) * amplitude * est
    })
}

fn draw_nonsingular(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    idx: &SlotIndexer,
    seed: u64,
    trial: u64,
) -> Result<(ChannelRealization, Gram, Vec<ZfStage>, u64)> {
    for attempt in 0..MAX_RESAMPLES {
        let ch = ChannelRealization::draw(config.antennas, profile, seed, trial + (attempt << 40));
        let gram = Gram::new(&ch);
        let stages: Result<Vec<ZfStage>> = (1..=config.users)
            .map(|k| rates::build_zf_stage(&gram, k, idx))
            .collect();
        match stages {
            Ok(stages) => return Ok((ch, gram, stages, attempt)),
            Err(Error::SingularSystem { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SingularSystem { pivot_ratio: 0.0 })
}

fn check_round(config: &SystemConfig, profile: &LargeScaleProfile) -> Result<SlotIndexer> {
    config.validate()?;
    if profile.users() != config.users {
        return Err(Error::DimensionMismatch {
            expected: format!("{} users", config.users),
            got: format!("profile with {} users", profile.users()),
        });
    }
    SlotIndexer::new(config.users)
}

/// Run one noiseless round of the proposed protocol.
///
/// In each SIC slot the user removes every symbol it already holds. The
/// still-unknown interferers are removed with genie knowledge so that the
/// estimate isolates the subtraction chain. The ZF stage then solves the
/// residual system using only the user's own estimates.
pub fn run_round_noiseless(config: &SystemConfig, profile: &LargeScaleProfile, seed: u64) -> Result<RoundReport> {
    let idx = check_round(config, profile)?;
    let users = config.users;
    let tp = idx.sic_slots();
    let (channel, gram, stages, resampled) = draw_nonsingular(config, profile, &idx, seed, 0)?;
    let mut srng = rng::substream(seed, Domain::Symbols, 0);
    let frame = SymbolFrame::qpsk(users, &mut srng);
    let bc = broadcast(&channel, &frame, config.relay_power, tp, None)?;
    let a = bc.amplitude;

    let mut state = KnowledgeState::new(users);
    let mut estimates: Vec<Vec<Option<Complex64>>> = (1..=users)
        .map(|k| (1..=users).map(|s| (s == k).then(|| frame.symbol(k))).collect())
        .collect();
    let mut trace = vec![state.clone()];

    for t in 1..=tp {
        for k in 1..=users {
            let desired = idx.partner(k as i64, t as i64);
            let residual = subtract_known(
                bc.received[k - 1][t - 1],
                &gram,
                a,
                k,
                t,
                state.known(k),
                &estimates[k - 1],
            );
            let genie: Complex64 = idx
                .proposed_interferers(k, t)?
                .into_iter()
                .map(|i| gram.inner(k, i) * a * frame.symbol(idx.partner(i as i64, t as i64)))
                .sum();
            let est = (residual - genie) / (a * gram.norm_sqr(k));
            estimates[k - 1][desired - 1] = Some(est);
            state.learn(k, desired);
        }
        trace.push(state.clone());
    }

    let zf_invoked = idx.zf_unknowns() > 0;
    if zf_invoked {
        for k in 1..=users {
            let stage = &stages[k - 1];
            let known = state.known(k).clone();
            let residual = DVector::from_iterator(
                tp,
                (1..=tp).map(|m| subtract_known(bc.received[k - 1][m - 1], &gram, a, k, m, &known, &estimates[k - 1])),
            );
            let solved = stage.apply(&residual) / Complex64::from(a);
            for (n, s) in idx.remaining_unknowns(k)?.into_iter().enumerate() {
                estimates[k - 1][s - 1] = Some(solved[n]);
                state.learn(k, s);
            }
        }
        trace.push(state.clone());
    }

    let mut max_deviation: f64 = 0.0;
    for (k, row) in estimates.iter().enumerate() {
        for (s, est) in row.iter().enumerate() {
            if s != k {
                if let Some(e) = est {
                    max_deviation = max_deviation.max((e - frame.symbols[s]).norm());
                }
            }
        }
    }
    Ok(RoundReport {
        recovered: estimates,
        max_deviation,
        slots_used: 1 + tp,
        knowledge_trace: trace,
        zf_invoked,
        resampled,
        frame,
    })
}

/// Noiseless round of the conventional protocol: `K - 1` broadcast slots,
/// one new symbol per slot, self-interference removed.
pub fn run_conventional_round_noiseless(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    seed: u64,
) -> Result<RoundReport> {
    let idx = check_round(config, profile)?;
    let users = config.users;
    let channel = ChannelRealization::draw(config.antennas, profile, seed, 0);
    let gram = Gram::new(&channel);
    let mut srng = rng::substream(seed, Domain::Symbols, 0);
    let frame = SymbolFrame::qpsk(users, &mut srng);
    let bc = broadcast(&channel, &frame, config.relay_power, users - 1, None)?;
    let a = bc.amplitude;
    let mut state = KnowledgeState::new(users);
    let mut estimates: Vec<Vec<Option<Complex64>>> = (1..=users)
        .map(|k| (1..=users).map(|s| (s == k).then(|| frame.symbol(k))).collect())
        .collect();
    let mut trace = vec![state.clone()];
    for t in 1..users {
        for k in 1..=users {
            let own = BTreeSet::from([k]);
            let residual = subtract_known(bc.received[k - 1][t - 1], &gram, a, k, t, &own, &estimates[k - 1]);
            let genie: Complex64 = idx
                .conventional_interferers(k, t)?
                .into_iter()
                .map(|i| gram.inner(k, i) * a * frame.symbol(idx.partner(i as i64, t as i64)))
                .sum();
            let desired = idx.partner(k as i64, t as i64);
            estimates[k - 1][desired - 1] = Some((residual - genie) / (a * gram.norm_sqr(k)));
            state.learn(k, desired);
        }
        trace.push(state.clone());
    }
    let max_deviation = estimates
        .iter()
        .enumerate()
        .flat_map(|(k, row)| {
            let frame = &frame;
            row.iter()
                .enumerate()
                .filter(move |(s, _)| *s != k)
                .filter_map(move |(s, e)| e.map(|e| (e - frame.symbols[s]).norm()))
        })
        .fold(0.0, f64::max);
    Ok(RoundReport {
        recovered: estimates,
        max_deviation,
        slots_used: users,
        knowledge_trace: trace,
        zf_invoked: false,
        resampled: 0,
        frame,
    })
}

/// Symbol-error rates of the noisy proposed round.
#[derive(Debug, Clone, PartialEq)]
pub struct SerReport {
    /// `ser[k-1][p-1]` for slot position `p = 1..K-1` (SIC slots, then ZF outputs).
    pub ser: Vec<Vec<f64>>,
    pub trials: u64,
}

impl SerReport {
    pub fn mean(&self) -> f64 {
        let n: usize = self.ser.iter().map(Vec::len).sum();
        self.ser.iter().flatten().sum::<f64>() / n as f64
    }
}

/// QPSK symbol-error rates over `trials` noisy rounds at relay power
/// `relay_power` (linear, may be 0), with genie-aided SIC.
pub fn run_round_noisy(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    relay_power: f64,
    trials: u64,
    seed: u64,
) -> Result<SerReport> {
    let idx = check_round(config, profile)?;
    if !(relay_power >= 0.0 && relay_power.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "relay power {relay_power} must be non-negative"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    let users = config.users;
    let tp = idx.sic_slots();
    let mut errors = vec![vec![0u64; users - 1]; users];
    for trial in 0..trials {
        let (channel, gram, stages, _) = draw_nonsingular(config, profile, &idx, seed, trial)?;
        let mut srng = rng::substream(seed, Domain::Symbols, trial);
        let frame = SymbolFrame::qpsk(users, &mut srng);
        let mut nrng = rng::substream(seed, Domain::Noise, trial);
        let bc = broadcast(&channel, &frame, relay_power, tp, Some(&mut nrng))?;
        let a = bc.amplitude;
        let truth: Vec<Option<Complex64>> = frame.symbols.iter().copied().map(Some).collect();
        for k in 1..=users {
            for t in 1..=tp {
                let before: BTreeSet<usize> = idx.known_set(k, t - 1)?.into_iter().collect();
                let residual = subtract_known(bc.received[k - 1][t - 1], &gram, a, k, t, &before, &truth);
                let desired = idx.partner(k as i64, t as i64);
                if qpsk_decide(residual) != frame.symbol(desired) {
                    errors[k - 1][t - 1] += 1;
                }
            }
            if idx.zf_unknowns() > 0 {
                let known: BTreeSet<usize> = idx.known_set(k, tp)?.into_iter().collect();
                let residual = DVector::from_iterator(
                    tp,
                    (1..=tp).map(|m| subtract_known(bc.received[k - 1][m - 1], &gram, a, k, m, &known, &truth)),
                );
                let solved = stages[k - 1].apply(&residual);
                for (n, s) in idx.remaining_unknowns(k)?.into_iter().enumerate() {
                    if qpsk_decide(solved[n]) != frame.symbol(s) {
                        errors[k - 1][tp + n] += 1;
                    }
                }
            }
        }
    }
    Ok(SerReport {
        ser: errors
            .into_iter()
            .map(|row| row.into_iter().map(|e| e as f64 / trials as f64).collect())
            .collect(),
        trials,
    })
}
