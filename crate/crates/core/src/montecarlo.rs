//! Ergodic spectral-efficiency estimation and sum-SE assembly.
//!
//! Trials are grouped into fixed-size blocks. Each block is accumulated in
//! trial order and the block summaries are merged in block order, so the
//! result does not depend on how many worker threads ran the blocks.

use std::fmt;

use rayon::prelude::*;

use crate::bounds::BoundReport;
use crate::channel::{self, ChannelRealization, GeometryModel, LargeScaleProfile, SystemConfig};
use crate::error::{Error, Result};
use crate::protocol::SlotIndexer;
use crate::rates::{self, Gram};
use crate::rng::{self, Domain};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MWRELAY_THREADS";

/// Default trial count for sweeps.
pub const DEFAULT_TRIALS: u64 = 10_000;
/// Default trial count per large-scale profile in CDF runs.
pub const DEFAULT_TRIALS_PER_PROFILE: u64 = 1_000;

const BLOCK: u64 = 256;

/// Sample mean of an ergodic quantity with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; 0 for a single trial.
    pub stderr: f64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    /// With one trial there is no spread estimate and `stderr` is reported as 0.
    pub fn is_single_trial(&self) -> bool {
        self.trials == 1
    }
}

impl fmt::Display for MonteCarloEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4} (n={})", self.mean, self.stderr, self.trials)
    }
}

/// Streaming mean/variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn estimate(&self) -> MonteCarloEstimate {
        let stderr = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        MonteCarloEstimate {
            mean: self.mean,
            stderr,
            trials: self.count,
        }
    }
}

/// Worker cap from `MWRELAY_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Run `f` on a pool of `threads` workers (or the env cap, or rayon's default).
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads.or_else(threads_from_env) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Accumulate `width` quantities over `trials` trials; `f(trial, out)` fills
/// one trial's values.
pub fn accumulate<F>(trials: u64, width: usize, parallel: bool, f: F) -> Vec<Accumulator>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let run_block = |b: u64| {
        let mut acc = vec![Accumulator::default(); width];
        let mut buf = vec![0.0; width];
        for trial in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            f(trial, &mut buf);
            for (a, &x) in acc.iter_mut().zip(&buf) {
                a.push(x);
            }
        }
        acc
    };
    let partials: Vec<Vec<Accumulator>> = if parallel {
        (0..blocks).into_par_iter().map(run_block).collect()
    } else {
        (0..blocks).map(run_block).collect()
    };
    let mut total = vec![Accumulator::default(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

/// Which broadcast protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `K - 1` broadcast slots, self-interference cancelation only.
    Conventional,
    /// `t'` SIC slots followed by per-user zero-forcing.
    Proposed,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Conventional => "conventional",
            Scheme::Proposed => "proposed",
        }
    }

    /// Pre-log factor: `1/K` conventional, `1/(t'+1)` proposed.
    pub fn pre_log(&self, users: usize) -> Result<f64> {
        let idx = SlotIndexer::new(users)?;
        Ok(match self {
            Scheme::Conventional => 1.0 / idx.conventional_total_slots() as f64,
            Scheme::Proposed => 1.0 / idx.proposed_total_slots() as f64,
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(Scheme::Conventional),
            "proposed" => Ok(Scheme::Proposed),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Trial count, master seed and worker cap for one estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub trials: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl McOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            threads: None,
        }
    }

    pub fn threads(self, threads: usize) -> Self {
        Self {
            threads: Some(threads),
            ..self
        }
    }
}

/// Per-realization evaluation of every stage of both protocols, with the
/// interferer sets resolved once.
#[derive(Debug, Clone)]
pub struct RateEvaluator {
    config: SystemConfig,
    profile: LargeScaleProfile,
    indexer: SlotIndexer,
    conventional: Vec<Vec<Vec<usize>>>,
    proposed: Vec<Vec<Vec<usize>>>,
}

/// Per-trial value layout of [`RateEvaluator::evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    users: usize,
}

impl Layout {
    pub fn width(&self) -> usize {
        self.users + 2 * self.users * (self.users - 1)
    }

    pub fn uplink(&self, k: usize) -> usize {
        k - 1
    }

    pub fn downlink(&self, scheme: Scheme, k: usize, t: usize) -> usize {
        let base = match scheme {
            Scheme::Conventional => self.users,
            Scheme::Proposed => self.users + self.users * (self.users - 1),
        };
        base + (k - 1) * (self.users - 1) + (t - 1)
    }
}

impl RateEvaluator {
    pub fn new(config: &SystemConfig, profile: &LargeScaleProfile) -> Result<Self> {
        config.validate()?;
        if profile.users() != config.users {
            return Err(Error::DimensionMismatch {
                expected: format!("{} users", config.users),
                got: format!("profile with {} users", profile.users()),
            });
        }
        let indexer = SlotIndexer::new(config.users)?;
        let users = config.users;
        let conventional = (1..=users)
            .map(|k| (1..users).map(|t| indexer.conventional_interferers(k, t)).collect())
            .collect::<Result<_>>()?;
        let proposed = (1..=users)
            .map(|k| {
                (1..=indexer.sic_slots())
                    .map(|t| indexer.proposed_interferers(k, t))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config: *config,
            profile: profile.clone(),
            indexer,
            conventional,
            proposed,
        })
    }

    pub fn layout(&self) -> Layout {
        Layout {
            users: self.config.users,
        }
    }

    pub fn indexer(&self) -> &SlotIndexer {
        &self.indexer
    }

    /// Instantaneous SE of every stage on one realization.
    ///
    /// A ZF stage that fails the singularity test contributes SE 0 (its
    /// noise gain is unbounded); this is a probability-zero event.
    pub fn evaluate(&self, gram: &Gram, out: &mut [f64]) {
        let users = self.config.users;
        let layout = self.layout();
        let scale = rates::relay_scale(self.profile.beta(), self.config.relay_power, self.config.antennas);
        for k in 1..=users {
            out[layout.uplink(k)] = match rates::uplink_sinr(gram, self.config.user_power, k) {
                Ok(s) => rates::instantaneous_se(s),
                Err(_) => 0.0,
            };
            for t in 1..users {
                let s = rates::broadcast_sinr(gram, scale, k, &self.conventional[k - 1][t - 1]);
                out[layout.downlink(Scheme::Conventional, k, t)] = rates::instantaneous_se(s);
            }
            for t in 1..=self.indexer.sic_slots() {
                let s = rates::broadcast_sinr(gram, scale, k, &self.proposed[k - 1][t - 1]);
                out[layout.downlink(Scheme::Proposed, k, t)] = rates::instantaneous_se(s);
            }
            let tp = self.indexer.sic_slots();
            let unknowns = self.indexer.zf_unknowns();
            match rates::build_zf_stage(gram, k, &self.indexer) {
                Ok(stage) => {
                    for n in 1..=unknowns {
                        let s = scale / stage.noise_gain()[n - 1];
                        out[layout.downlink(Scheme::Proposed, k, tp + n)] = rates::instantaneous_se(s);
                    }
                }
                Err(_) => {
                    for n in 1..=unknowns {
                        out[layout.downlink(Scheme::Proposed, k, tp + n)] = 0.0;
                    }
                }
            }
        }
    }

    /// Draw trial `trial` and evaluate it.
    pub fn evaluate_trial(&self, seed: u64, trial: u64, out: &mut [f64]) {
        let ch = ChannelRealization::draw(self.config.antennas, &self.profile, seed, trial);
        self.evaluate(&Gram::new(&ch), out);
    }
}

/// Ergodic SE of every stage of both protocols from one set of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicRates {
    pub uplink: Vec<MonteCarloEstimate>,
    /// `[k-1][t-1]`, `t = 1..K-1`.
    pub conventional: Vec<Vec<MonteCarloEstimate>>,
    /// `[k-1][t-1]`, SIC slots followed by ZF outputs.
    pub proposed: Vec<Vec<MonteCarloEstimate>>,
}

impl ErgodicRates {
    pub fn downlink(&self, scheme: Scheme) -> &[Vec<MonteCarloEstimate>] {
        match scheme {
            Scheme::Conventional => &self.conventional,
            Scheme::Proposed => &self.proposed,
        }
    }

    pub fn sum_se(&self, scheme: Scheme) -> Result<SumSeReport> {
        let ul = means(&self.uplink);
        let dl: Vec<Vec<f64>> = self.downlink(scheme).iter().map(|r| means(r)).collect();
        sum_se(&ul, &dl, scheme, self.uplink.len())
    }
}

fn means(v: &[MonteCarloEstimate]) -> Vec<f64> {
    v.iter().map(|e| e.mean).collect()
}

fn run_profile(evaluator: &RateEvaluator, trials: u64, seed: u64, parallel: bool) -> ErgodicRates {
    let layout = evaluator.layout();
    let users = evaluator.config.users;
    let profile = &evaluator.profile;
    let antennas = evaluator.config.antennas;
    let acc = accumulate(trials, layout.width(), parallel, |trial, out| {
        let ch = ChannelRealization::draw(antennas, profile, seed, trial);
        evaluator.evaluate(&Gram::new(&ch), out);
    });
    let est = |i: usize| acc[i].estimate();
    ErgodicRates {
        uplink: (1..=users).map(|k| est(layout.uplink(k))).collect(),
        conventional: (1..=users)
            .map(|k| {
                (1..users)
                    .map(|t| est(layout.downlink(Scheme::Conventional, k, t)))
                    .collect()
            })
            .collect(),
        proposed: (1..=users)
            .map(|k| {
                (1..users)
                    .map(|t| est(layout.downlink(Scheme::Proposed, k, t)))
                    .collect()
            })
            .collect(),
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    Ok(())
}

/// Estimate every ergodic rate of both schemes from one set of channel draws.
pub fn estimate_rates(config: &SystemConfig, profile: &LargeScaleProfile, opts: McOptions) -> Result<ErgodicRates> {
    check_trials(opts.trials)?;
    let evaluator = RateEvaluator::new(config, profile)?;
    Ok(with_workers(opts.threads, || {
        run_profile(&evaluator, opts.trials, opts.seed, true)
    }))
}

/// Per-user ergodic uplink SE after MRC at the relay.
pub fn estimate_uplink_se(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    opts: McOptions,
) -> Result<Vec<MonteCarloEstimate>> {
    Ok(estimate_rates(config, profile, opts)?.uplink)
}

/// Per-user, per-slot ergodic downlink SE for `t = 1..K-1`.
///
/// For the proposed scheme slots `1..=t'` are SIC broadcast slots and slots
/// `t'+n` are ZF outputs `n`.
pub fn estimate_downlink_se(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    scheme: Scheme,
    opts: McOptions,
) -> Result<Vec<Vec<MonteCarloEstimate>>> {
    let r = estimate_rates(config, profile, opts)?;
    Ok(match scheme {
        Scheme::Conventional => r.conventional,
        Scheme::Proposed => r.proposed,
    })
}

/// Sum spectral efficiency of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SumSeReport {
    pub scheme: Scheme,
    /// `sum_t min(R_ul_k, R_dl_k^(t))` per user, before the pre-log.
    pub per_user: Vec<f64>,
    pub sum: f64,
    pub pre_log: f64,
}

/// `pre_log * sum_k sum_{t=1}^{K-1} min(uplink_k, downlink_k^(t))`, applied
/// to already-averaged rates.
pub fn sum_se(uplink: &[f64], downlink: &[Vec<f64>], scheme: Scheme, users: usize) -> Result<SumSeReport> {
    let pre_log = scheme.pre_log(users)?;
    if uplink.len() < users {
        return Err(Error::MissingEntry {
            user: uplink.len() + 1,
            slot: 0,
        });
    }
    let mut per_user = Vec::with_capacity(users);
    for k in 1..=users {
        let row = downlink.get(k - 1).ok_or(Error::MissingEntry { user: k, slot: 1 })?;
        if row.len() < users - 1 {
            return Err(Error::MissingEntry {
                user: k,
                slot: row.len() + 1,
            });
        }
        per_user.push(row[..users - 1].iter().map(|&d| d.min(uplink[k - 1])).sum());
    }
    let sum = pre_log * per_user.iter().sum::<f64>();
    Ok(SumSeReport {
        scheme,
        per_user,
        sum,
        pre_log,
    })
}

/// Closed-form counterpart of the Monte Carlo sum SE: uplink bound, downlink
/// bounds and (proposed) ZF large-array limits.
pub fn analytic_sum_se(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> Result<SumSeReport> {
    let report = BoundReport::new(profile.beta(), config.user_power, config.relay_power, config.antennas)?;
    let users = config.users;
    let dl: Vec<Vec<f64>> = match scheme {
        Scheme::Conventional => report.conventional.clone(),
        Scheme::Proposed => (1..=users).map(|k| report.proposed_row(k)).collect(),
    };
    sum_se(&report.uplink, &dl, scheme, users)
}

/// Trial-averaged `M [(A_k^H A_k)^{-1}]_{nn}` for user `k`, `n = 1..K-t'-1`.
///
/// Singular stages are skipped; the returned estimate's `trials` counts the
/// realizations that contributed.
pub fn estimate_scaled_noise_gain(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    k: usize,
    opts: McOptions,
) -> Result<Vec<MonteCarloEstimate>> {
    check_trials(opts.trials)?;
    config.validate()?;
    let idx = SlotIndexer::new(config.users)?;
    let unknowns = idx.zf_unknowns();
    let m = config.antennas as f64;
    let per_trial = |trial: u64| -> Option<Vec<f64>> {
        let ch = ChannelRealization::draw(config.antennas, profile, opts.seed, trial);
        let stage = rates::build_zf_stage(&Gram::new(&ch), k, &idx).ok()?;
        Some(stage.noise_gain().iter().map(|g| m * g).collect())
    };
    let values: Vec<Option<Vec<f64>>> = with_workers(opts.threads, || {
        (0..opts.trials).into_par_iter().map(per_trial).collect()
    });
    let mut acc = vec![Accumulator::default(); unknowns];
    for v in values.into_iter().flatten() {
        for (a, x) in acc.iter_mut().zip(v) {
            a.push(x);
        }
    }
    Ok(acc.iter().map(Accumulator::estimate).collect())
}

/// Monte Carlo `(E{1/||g||^2}, E{1/||g||^4})` for `g ~ CN(0, beta I_M)`.
pub fn estimate_inverse_norm_moments(
    antennas: usize,
    beta: f64,
    draws: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<(MonteCarloEstimate, MonteCarloEstimate)> {
    check_trials(draws)?;
    let acc = with_workers(threads, || {
        accumulate(draws, 2, true, |trial, out| {
            let mut rng = rng::substream(seed, Domain::Channel, trial);
            let norm: f64 = (0..antennas)
                .map(|_| channel::complex_normal(&mut rng).norm_sqr() * beta)
                .sum();
            out[0] = 1.0 / norm;
            out[1] = 1.0 / (norm * norm);
        })
    });
    Ok((acc[0].estimate(), acc[1].estimate()))
}

/// How large-scale profiles are chosen for a CDF run.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    /// Every sample uses the same profile.
    Fixed(LargeScaleProfile),
    /// Each sample draws a fresh profile from the geometry.
    Geometry(GeometryModel),
}

/// Sorted sum-SE samples over random large-scale profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfResult {
    pub samples: Vec<f64>,
    /// 5th percentile (the "95%-likely" sum SE).
    pub p5: f64,
}

/// Quantile `q` of sorted data with linear interpolation between order
/// statistics (position `q (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Large-scale profile `index` of a CDF run.
pub fn cdf_profile(source: &ProfileSource, users: usize, seed: u64, index: u64) -> Result<LargeScaleProfile> {
    match source {
        ProfileSource::Fixed(p) => Ok(p.clone()),
        ProfileSource::Geometry(g) => {
            channel::draw_large_scale(g, users, rng::child_seed(seed, Domain::Profile, index))
        }
    }
}

/// One sum-SE sample per profile; profiles run in parallel, the trials of
/// each profile sequentially. Every profile sees the same small-scale draws,
/// so the spread of the samples comes from the large-scale gains alone.
pub fn cdf_experiment(
    config: &SystemConfig,
    source: &ProfileSource,
    scheme: Scheme,
    profiles: u64,
    trials_per_profile: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<CdfResult> {
    if profiles == 0 {
        return Err(Error::InvalidArgument("profile count must be at least 1".into()));
    }
    check_trials(trials_per_profile)?;
    config.validate()?;
    let one = |p: u64| -> Result<f64> {
        let profile = cdf_profile(source, config.users, seed, p)?;
        let evaluator = RateEvaluator::new(config, &profile)?;
        // common small-scale draws across profiles
        run_profile(&evaluator, trials_per_profile, seed, false)
            .sum_se(scheme)
            .map(|r| r.sum)
    };
    let mut samples = with_workers(threads, || {
        (0..profiles).into_par_iter().map(one).collect::<Result<Vec<f64>>>()
    })?;
    samples.sort_by(f64::total_cmp);
    let p5 = quantile_sorted(&samples, 0.05);
    Ok(CdfResult { samples, p5 })
}
