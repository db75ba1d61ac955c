//! Named experiments, their configuration, and the CSV output format.
//!
//! Every CSV file starts with the experiment's settings as `# key = value`
//! comment lines (the same keys accepted by configuration files and, with a
//! `--` prefix, by the command line), followed by the header
//!
//! ```text
//! experiment,scheme,M,K,user,slot,metric,value,stderr,seed
//! ```
//!
//! `slot` 0 denotes the multiple-access (uplink) slot. Broadcast slots are
//! numbered `1..K-1`; for the proposed scheme slots past `t'` are the ZF
//! outputs. Closed-form sums carry the scheme label suffixed `:analysis`.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bounds::BoundReport;
use crate::channel::{self, GeometryModel, LargeScaleProfile, SystemConfig};
use crate::e2e;
use crate::error::{Error, Result};
use crate::montecarlo::{self, McOptions, ProfileSource, Scheme};
use crate::protocol::SlotIndexer;
use crate::rates::{self, Gram};

pub const CSV_HEADER: &str = "experiment,scheme,M,K,user,slot,metric,value,stderr,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SweepM,
    CompareSchemes,
    Cdf,
    BoundsTable,
    Selftest,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SweepM => "sweep-m",
            Experiment::CompareSchemes => "compare-schemes",
            Experiment::Cdf => "cdf",
            Experiment::BoundsTable => "bounds-table",
            Experiment::Selftest => "selftest",
        }
    }

    fn default_schemes(&self) -> SchemeChoice {
        match self {
            Experiment::SweepM | Experiment::Cdf => SchemeChoice::Proposed,
            _ => SchemeChoice::Both,
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sweep-m" => Experiment::SweepM,
            "compare-schemes" => Experiment::CompareSchemes,
            "cdf" => Experiment::Cdf,
            "bounds-table" => Experiment::BoundsTable,
            "selftest" => Experiment::Selftest,
            other => return Err(Error::Parse(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Conventional,
    Proposed,
    Both,
}

impl SchemeChoice {
    pub fn schemes(&self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Conventional => vec![Scheme::Conventional],
            SchemeChoice::Proposed => vec![Scheme::Proposed],
            SchemeChoice::Both => vec![Scheme::Conventional, Scheme::Proposed],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            SchemeChoice::Conventional => "conventional",
            SchemeChoice::Proposed => "proposed",
            SchemeChoice::Both => "both",
        }
    }
}

impl FromStr for SchemeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "conventional" => SchemeChoice::Conventional,
            "proposed" => SchemeChoice::Proposed,
            "both" => SchemeChoice::Both,
            other => return Err(Error::Parse(format!("unknown scheme {other:?}"))),
        })
    }
}

/// Source of the large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaSource {
    Unit,
    File(PathBuf),
    Geometry,
}

impl fmt::Display for BetaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSource::Unit => f.write_str("unit"),
            BetaSource::File(p) => write!(f, "file:{}", p.display()),
            BetaSource::Geometry => f.write_str("geometry"),
        }
    }
}

impl FromStr for BetaSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(BetaSource::Unit),
            "geometry" => Ok(BetaSource::Geometry),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(BetaSource::File(PathBuf::from(p))),
                _ => Err(Error::Parse(format!("unknown beta source {s:?}"))),
            },
        }
    }
}

/// Antenna counts: a single value or `start:stop:step`, inclusive of `stop`
/// when it lies on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntennaRange {
    text: String,
    values: Vec<usize>,
}

impl AntennaRange {
    pub fn single(m: usize) -> Self {
        Self {
            text: m.to_string(),
            values: vec![m],
        }
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }
}

impl FromStr for AntennaRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |p: &str| -> Result<usize> {
            p.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("antenna count {p:?}: {e}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [one] => vec![num(one)?],
            [a, b, c] => {
                let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                if step == 0 || stop < start {
                    return Err(Error::Parse(format!("empty antenna range {s:?}")));
                }
                (start..=stop).step_by(step).collect()
            }
            _ => return Err(Error::Parse(format!("antenna range {s:?} is not M or start:stop:step"))),
        };
        if values.contains(&0) {
            return Err(Error::Parse("antenna counts must be positive".into()));
        }
        Ok(Self {
            text: s.trim().to_string(),
            values,
        })
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub users: usize,
    pub antennas: AntennaRange,
    pub user_power_db: f64,
    pub relay_power_db: f64,
    pub trials: u64,
    pub profiles: u64,
    pub trials_per_profile: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub scheme: SchemeChoice,
    pub beta: BetaSource,
    pub geometry: GeometryModel,
    /// Worker cap; never echoed into output since results do not depend on it.
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            users: 10,
            antennas: AntennaRange::single(100),
            user_power_db: 0.0,
            relay_power_db: 10.0,
            trials: montecarlo::DEFAULT_TRIALS,
            profiles: 2000,
            trials_per_profile: montecarlo::DEFAULT_TRIALS_PER_PROFILE,
            seed: 1,
            out: None,
            scheme: experiment.default_schemes(),
            beta: if experiment == Experiment::Cdf {
                BetaSource::Geometry
            } else {
                BetaSource::Unit
            },
            geometry: GeometryModel::default(),
            threads: None,
        }
    }

    /// Apply one `key = value` setting (keys are the long flag names).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let f = |v: &str| -> Result<f64> {
            let x: f64 = v.parse().map_err(|e| Error::Parse(format!("{key} = {v:?}: {e}")))?;
            if !x.is_finite() {
                return Err(Error::Parse(format!("{key} must be finite")));
            }
            Ok(x)
        };
        let u = |v: &str| -> Result<u64> { v.parse().map_err(|e| Error::Parse(format!("{key} = {v:?}: {e}"))) };
        match key.trim().trim_start_matches("--") {
            "k" => self.users = u(value)? as usize,
            "m" => self.antennas = value.parse()?,
            "pu-db" => self.user_power_db = f(value)?,
            "pr-db" => self.relay_power_db = f(value)?,
            "trials" => self.trials = u(value)?,
            "profiles" => self.profiles = u(value)?,
            "trials-per-profile" => self.trials_per_profile = u(value)?,
            "seed" => self.seed = u(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "scheme" => self.scheme = value.parse()?,
            "beta" => self.beta = value.parse()?,
            "cell-radius" => self.geometry.cell_radius = f(value)?,
            "exclusion-radius" => self.geometry.exclusion_radius = f(value)?,
            "ploss-exp" => self.geometry.path_loss_exponent = f(value)?,
            "shadow-db" => self.geometry.shadowing_sigma_db = f(value)?,
            "ref-dist" => self.geometry.reference_distance = f(value)?,
            "threads" => self.threads = Some(u(value)? as usize),
            "experiment" => self.experiment = value.parse()?,
            other => return Err(Error::Parse(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Apply a configuration file's settings.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_config(text)? {
            self.apply(&k, &v)?;
        }
        Ok(())
    }

    /// Rebuild a spec from the `#` metadata lines of a CSV file.
    pub fn from_csv_header(text: &str) -> Result<Self> {
        let meta: String = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| format!("{}\n", l.trim_start_matches('#')))
            .collect();
        let settings = parse_config(&meta)?;
        let experiment = settings
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| Error::Parse("metadata lacks an experiment line".into()))?
            .1
            .parse()?;
        let mut spec = Self::new(experiment);
        for (k, v) in settings {
            spec.apply(&k, &v)?;
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trials", self.trials),
            ("profiles", self.profiles),
            ("trials-per-profile", self.trials_per_profile),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for &m in self.antennas.values() {
            self.config(m)?;
        }
        if self.beta == BetaSource::Geometry {
            self.geometry.validate()?;
        }
        Ok(())
    }

    pub fn config(&self, antennas: usize) -> Result<SystemConfig> {
        SystemConfig::from_db(antennas, self.users, self.user_power_db, self.relay_power_db)
    }

    /// The large-scale profile used by fixed-profile experiments.
    pub fn profile(&self) -> Result<LargeScaleProfile> {
        let p = match &self.beta {
            BetaSource::Unit => LargeScaleProfile::uniform(self.users),
            BetaSource::File(path) => LargeScaleProfile::from_text(&fs::read_to_string(path)?)?,
            BetaSource::Geometry => channel::draw_large_scale(&self.geometry, self.users, self.seed)?,
        };
        if p.users() != self.users {
            return Err(Error::DimensionMismatch {
                expected: format!("{} users", self.users),
                got: format!("profile with {} entries", p.users()),
            });
        }
        Ok(p)
    }

    /// Settings echoed into the CSV header, in a fixed order.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut meta = vec![
            ("experiment", self.experiment.name().to_string()),
            ("k", self.users.to_string()),
            ("m", self.antennas.text.clone()),
            ("pu-db", self.user_power_db.to_string()),
            ("pr-db", self.relay_power_db.to_string()),
            ("scheme", self.scheme.name().to_string()),
            ("seed", self.seed.to_string()),
            ("beta", self.beta.to_string()),
        ];
        match self.experiment {
            Experiment::Cdf => {
                meta.push(("profiles", self.profiles.to_string()));
                meta.push(("trials-per-profile", self.trials_per_profile.to_string()));
            }
            Experiment::BoundsTable => {}
            _ => meta.push(("trials", self.trials.to_string())),
        }
        if self.beta == BetaSource::Geometry {
            let g = &self.geometry;
            meta.extend([
                ("cell-radius", g.cell_radius.to_string()),
                ("exclusion-radius", g.exclusion_radius.to_string()),
                ("ploss-exp", g.path_loss_exponent.to_string()),
                ("shadow-db", g.shadowing_sigma_db.to_string()),
                ("ref-dist", g.reference_distance.to_string()),
            ]);
        }
        meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Parse `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SeMc,
    SeBound,
    SeAsym,
    SumSe,
    CdfSample,
    P5,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::SeMc,
        Metric::SeBound,
        Metric::SeAsym,
        Metric::SumSe,
        Metric::CdfSample,
        Metric::P5,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::SeMc => "se_mc",
            Metric::SeBound => "se_bound",
            Metric::SeAsym => "se_asym",
            Metric::SumSe => "sum_se",
            Metric::CdfSample => "cdf_sample",
            Metric::P5 => "p5",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown metric {s:?}")))
    }
}

/// One CSV record.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: Experiment,
    pub scheme: String,
    pub antennas: usize,
    pub users: usize,
    pub user: Option<usize>,
    pub slot: Option<usize>,
    pub metric: Metric,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
}

/// Thirteen significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.experiment.name(),
            self.scheme,
            self.antennas,
            self.users,
            opt(self.user),
            opt(self.slot),
            self.metric.name(),
            format_value(self.value),
            self.stderr.map(format_value).unwrap_or_default(),
            self.seed
        )
    }
}

/// Write metadata comments, the header and the rows.
pub fn write_csv<W: Write>(mut w: W, metadata: &[(String, String)], rows: &[CsvRow]) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()
}

pub fn write_csv_file(path: &Path, metadata: &[(String, String)], rows: &[CsvRow]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(io::BufWriter::new(file), metadata, rows).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Check a CSV body against the header and metric vocabulary.
pub fn validate_csv(text: &str) -> Result<usize> {
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("missing or malformed header".into()));
    }
    let mut n = 0;
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Parse(format!("row {}: {} fields", i + 1, fields.len())));
        }
        fields[6].parse::<Metric>()?;
        fields[7]
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("row {}: value: {e}", i + 1)))?;
        n += 1;
    }
    Ok(n)
}

/// Rows and metadata produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<CsvRow>,
}

struct RowBuilder<'a> {
    spec: &'a ExperimentSpec,
    antennas: usize,
    rows: Vec<CsvRow>,
}

impl RowBuilder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        scheme: &str,
        user: Option<usize>,
        slot: Option<usize>,
        metric: Metric,
        value: f64,
        stderr: Option<f64>,
    ) {
        self.rows.push(CsvRow {
            experiment: self.spec.experiment,
            scheme: scheme.to_string(),
            antennas: self.antennas,
            users: self.spec.users,
            user,
            slot,
            metric,
            value,
            stderr,
            seed: self.spec.seed,
        });
    }
}

fn analysis_label(scheme: Scheme) -> String {
    format!("{}:analysis", scheme.name())
}

/// Run a CSV-producing experiment.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &m in spec.antennas.values() {
        let mut b = RowBuilder {
            spec,
            antennas: m,
            rows: Vec::new(),
        };
        match spec.experiment {
            Experiment::SweepM => sweep_rows(&mut b, m, true)?,
            Experiment::CompareSchemes => sweep_rows(&mut b, m, false)?,
            Experiment::BoundsTable => bounds_rows(&mut b, m)?,
            Experiment::Cdf => cdf_rows(&mut b, m)?,
            Experiment::Selftest => {
                return Err(Error::InvalidArgument(
                    "selftest produces no CSV; use run_selftest".into(),
                ))
            }
        }
        rows.extend(b.rows);
    }
    Ok(ExperimentOutput {
        metadata: spec.metadata(),
        rows,
    })
}

fn sweep_rows(b: &mut RowBuilder<'_>, m: usize, detailed: bool) -> Result<()> {
    let spec = b.spec;
    let cfg = spec.config(m)?;
    let profile = spec.profile()?;
    let opts = McOptions {
        trials: spec.trials,
        seed: spec.seed,
        threads: spec.threads,
    };
    let mc = montecarlo::estimate_rates(&cfg, &profile, opts)?;
    let report = if m >= 3 {
        Some(BoundReport::new(profile.beta(), cfg.user_power, cfg.relay_power, m)?)
    } else {
        None
    };
    let idx = SlotIndexer::new(spec.users)?;
    if detailed {
        for k in 1..=spec.users {
            let e = mc.uplink[k - 1];
            b.push("uplink", Some(k), Some(0), Metric::SeMc, e.mean, Some(e.stderr));
            if let Some(r) = &report {
                b.push("uplink", Some(k), Some(0), Metric::SeBound, r.uplink[k - 1], None);
            }
        }
    }
    for scheme in spec.scheme.schemes() {
        let name = scheme.name();
        if detailed {
            for k in 1..=spec.users {
                for t in 1..spec.users {
                    let e = mc.downlink(scheme)[k - 1][t - 1];
                    b.push(name, Some(k), Some(t), Metric::SeMc, e.mean, Some(e.stderr));
                    if let Some(r) = &report {
                        let (metric, v) = match scheme {
                            Scheme::Conventional => (Metric::SeBound, r.conventional[k - 1][t - 1]),
                            Scheme::Proposed if t <= idx.sic_slots() => (Metric::SeBound, r.proposed[k - 1][t - 1]),
                            Scheme::Proposed => (Metric::SeAsym, r.zf_asymptotic[k - 1][t - idx.sic_slots() - 1]),
                        };
                        b.push(name, Some(k), Some(t), metric, v, None);
                    }
                }
            }
        }
        let s = mc.sum_se(scheme)?;
        b.push(name, None, None, Metric::SumSe, s.sum, None);
        if report.is_some() {
            let a = montecarlo::analytic_sum_se(&cfg, &profile, scheme)?;
            b.push(&analysis_label(scheme), None, None, Metric::SumSe, a.sum, None);
        }
    }
    Ok(())
}

fn bounds_rows(b: &mut RowBuilder<'_>, m: usize) -> Result<()> {
    let spec = b.spec;
    let cfg = spec.config(m)?;
    let profile = spec.profile()?;
    let r = BoundReport::new(profile.beta(), cfg.user_power, cfg.relay_power, m)?;
    let idx = SlotIndexer::new(spec.users)?;
    for k in 1..=spec.users {
        b.push("uplink", Some(k), Some(0), Metric::SeBound, r.uplink[k - 1], None);
    }
    for scheme in spec.scheme.schemes() {
        for k in 1..=spec.users {
            for t in 1..spec.users {
                let (metric, v) = match scheme {
                    Scheme::Conventional => (Metric::SeBound, r.conventional[k - 1][t - 1]),
                    Scheme::Proposed if t <= idx.sic_slots() => (Metric::SeBound, r.proposed[k - 1][t - 1]),
                    Scheme::Proposed => (Metric::SeAsym, r.zf_asymptotic[k - 1][t - idx.sic_slots() - 1]),
                };
                b.push(scheme.name(), Some(k), Some(t), metric, v, None);
            }
        }
        let a = montecarlo::analytic_sum_se(&cfg, &profile, scheme)?;
        b.push(&analysis_label(scheme), None, None, Metric::SumSe, a.sum, None);
    }
    Ok(())
}

fn cdf_rows(b: &mut RowBuilder<'_>, m: usize) -> Result<()> {
    let spec = b.spec;
    let cfg = spec.config(m)?;
    let source = match spec.beta {
        BetaSource::Geometry => ProfileSource::Geometry(spec.geometry),
        _ => ProfileSource::Fixed(spec.profile()?),
    };
    for scheme in spec.scheme.schemes() {
        let cdf = montecarlo::cdf_experiment(
            &cfg,
            &source,
            scheme,
            spec.profiles,
            spec.trials_per_profile,
            spec.seed,
            spec.threads,
        )?;
        for v in &cdf.samples {
            b.push(scheme.name(), None, None, Metric::CdfSample, *v, None);
        }
        b.push(scheme.name(), None, None, Metric::P5, cdf.p5, None);
    }
    Ok(())
}

/// Outcome of one self-test check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Fast invariant suite: schedule algebra, ZF exactness, rate identities and
/// end-to-end recovery.
pub fn run_selftest(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut ok = true;
    for users in 2..=16usize {
        let idx = SlotIndexer::new(users).expect("valid user count");
        ok &= idx.sic_slots() >= idx.zf_unknowns();
        for k in 1..=users {
            let mut all: Vec<usize> = idx.known_set(k, idx.sic_slots()).unwrap_or_default();
            all.extend(idx.remaining_unknowns(k).unwrap_or_default());
            all.sort_unstable();
            ok &= all == (1..=users).collect::<Vec<_>>();
            for t in -(users as i64)..=(users as i64) {
                ok &= idx.partner(k as i64 - t, t) == k;
            }
        }
    }
    out.push(check(
        "schedule",
        ok,
        "partition, self-symbol and slot-count identities for K = 2..16".into(),
    ));

    let mut worst_identity: f64 = 0.0;
    let mut failures = 0usize;
    for (i, users) in (3..=12usize).enumerate() {
        let m = 2 * users;
        let profile = LargeScaleProfile::uniform(users);
        let ch = channel::ChannelRealization::draw(m, &profile, seed, i as u64);
        let gram = Gram::new(&ch);
        let idx = SlotIndexer::new(users).expect("valid user count");
        for k in 1..=users {
            match rates::build_zf_stage(&gram, k, &idx) {
                Ok(stage) => {
                    let prod = stage.combiner() * stage.matrix();
                    let n = prod.nrows();
                    for r in 0..n {
                        for c in 0..n {
                            let target = if r == c { 1.0 } else { 0.0 };
                            worst_identity = worst_identity.max((prod[(r, c)] - target).norm());
                        }
                    }
                }
                Err(_) => failures += 1,
            }
        }
    }
    out.push(check(
        "zf-exactness",
        failures == 0 && worst_identity <= 1e-9,
        format!("max |Z^T A - I| = {worst_identity:.3e}, singular stages = {failures}"),
    ));

    let mut ok = true;
    for users in [3usize, 6, 10] {
        let profile = LargeScaleProfile::uniform(users);
        let ch = channel::ChannelRealization::draw(32, &profile, seed, 100 + users as u64);
        let gram = Gram::new(&ch);
        let idx = SlotIndexer::new(users).expect("valid user count");
        for k in 1..=users {
            let conv = rates::conventional_dl_sinr(&gram, profile.beta(), 10.0, k, 1);
            let prop = rates::proposed_dl_sinr(&gram, profile.beta(), 10.0, k, 1);
            ok &= matches!((conv, prop), (Ok(a), Ok(b)) if a == b);
            for t in 1..=idx.sic_slots() {
                let conv = rates::conventional_dl_sinr(&gram, profile.beta(), 10.0, k, t).unwrap_or(f64::NAN);
                let prop = rates::proposed_dl_sinr(&gram, profile.beta(), 10.0, k, t).unwrap_or(f64::NAN);
                ok &= prop >= conv;
            }
        }
    }
    out.push(check(
        "sic-ordering",
        ok,
        "slot 1 coincides; SIC SINR >= conventional SINR".into(),
    ));

    let mut worst: f64 = 0.0;
    let mut ok = true;
    for users in 2..=10usize {
        let cfg = match SystemConfig::new(32, users, 1.0, 10.0) {
            Ok(c) => c,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        match e2e::run_round_noiseless(
            &cfg,
            &LargeScaleProfile::uniform(users),
            seed.wrapping_add(users as u64),
        ) {
            Ok(r) => {
                worst = worst.max(r.max_deviation);
                ok &= r.all_recovered() && r.slots_used == users / 2 + 1;
            }
            Err(_) => ok = false,
        }
    }
    out.push(check(
        "e2e-recovery",
        ok && worst <= 1e-9,
        format!("K = 2..10, M = 32, max deviation {worst:.3e}"),
    ));

    let spec = ExperimentSpec {
        trials: 300,
        antennas: AntennaRange::single(16),
        users: 4,
        ..ExperimentSpec::new(Experiment::CompareSchemes)
    };
    let a = run(&ExperimentSpec {
        threads: Some(1),
        ..spec.clone()
    });
    let b = run(&ExperimentSpec {
        threads: Some(4),
        ..spec
    });
    out.push(check(
        "determinism",
        matches!((&a, &b), (Ok(x), Ok(y)) if x == y),
        "identical rows at 1 and 4 workers".into(),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antenna_ranges() {
        let r: AntennaRange = "50:500:50".parse().unwrap();
        assert_eq!(r.values(), &[50, 100, 150, 200, 250, 300, 350, 400, 450, 500]);
        let r: AntennaRange = "10:25:10".parse().unwrap();
        assert_eq!(r.values(), &[10, 20]);
        let r: AntennaRange = "64".parse().unwrap();
        assert_eq!(r.values(), &[64]);
        assert!("10:5:1".parse::<AntennaRange>().is_err());
        assert!("10:20:0".parse::<AntennaRange>().is_err());
        assert!("0".parse::<AntennaRange>().is_err());
        assert!("1:2".parse::<AntennaRange>().is_err());
        assert!("x".parse::<AntennaRange>().is_err());
    }

    #[test]
    fn beta_sources() {
        assert_eq!("unit".parse::<BetaSource>().unwrap(), BetaSource::Unit);
        assert_eq!("geometry".parse::<BetaSource>().unwrap(), BetaSource::Geometry);
        assert_eq!(
            "file:/tmp/b.txt".parse::<BetaSource>().unwrap(),
            BetaSource::File("/tmp/b.txt".into())
        );
        assert!("file:".parse::<BetaSource>().is_err());
        assert!("random".parse::<BetaSource>().is_err());
    }

    #[test]
    fn config_file_and_overrides() {
        let mut spec = ExperimentSpec::new(Experiment::SweepM);
        spec.apply_config("# comment\nk = 5\nm = 50:100:50\npu-db = 3\n\nscheme = both\n")
            .unwrap();
        assert_eq!(spec.users, 5);
        assert_eq!(spec.antennas.values(), &[50, 100]);
        assert_eq!(spec.scheme, SchemeChoice::Both);
        spec.apply("--k", "7").unwrap();
        assert_eq!(spec.users, 7);
        assert!(spec.apply("bogus", "1").is_err());
        assert!(spec.apply_config("k 5").is_err());
        assert!(spec.apply("pu-db", "inf").is_err());
        assert!(spec.apply("trials", "-3").is_err());
    }

    #[test]
    fn validation() {
        let mut spec = ExperimentSpec::new(Experiment::SweepM);
        assert!(spec.validate().is_ok());
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(Experiment::SweepM);
        spec.users = 1;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::new(Experiment::Cdf);
        spec.geometry.path_loss_exponent = 1.5;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[], &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn row_format() {
        let row = CsvRow {
            experiment: Experiment::SweepM,
            scheme: "proposed".into(),
            antennas: 100,
            users: 10,
            user: Some(3),
            slot: None,
            metric: Metric::SeMc,
            value: 2.0 / 3.0,
            stderr: Some(0.001),
            seed: 9,
        };
        let line = row.to_line();
        assert_eq!(
            line,
            "sweep-m,proposed,100,10,3,,se_mc,6.666666666667e-1,1.000000000000e-3,9"
        );
        let value: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
        assert!((value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn metric_vocabulary() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("rate".parse::<Metric>().is_err());
        let bad = format!("{CSV_HEADER}\ncdf,proposed,100,10,,,rate,1,,1\n");
        assert!(validate_csv(&bad).is_err());
    }

    #[test]
    fn metadata_round_trip() {
        let mut spec = ExperimentSpec::new(Experiment::Cdf);
        spec.apply_config("k = 7\nm = 64\nprofiles = 12\nshadow-db = 6.5\nseed = 99\n")
            .unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &spec.metadata(), &[]).unwrap();
        let back = ExperimentSpec::from_csv_header(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn bounds_table_rows() {
        let mut spec = ExperimentSpec::new(Experiment::BoundsTable);
        spec.apply_config("k = 4\nm = 10:20:10\n").unwrap();
        let out = run(&spec).unwrap();
        // per M: 4 uplink + 2 schemes * (12 slot rows + 1 sum)
        assert_eq!(out.rows.len(), 2 * (4 + 2 * 13));
        let mut buf = Vec::new();
        write_csv(&mut buf, &out.metadata, &out.rows).unwrap();
        assert_eq!(validate_csv(&String::from_utf8(buf).unwrap()).unwrap(), out.rows.len());
    }

    #[test]
    fn selftest_passes() {
        for c in run_selftest(1) {
            assert!(c.passed, "{c}");
        }
    }
}
