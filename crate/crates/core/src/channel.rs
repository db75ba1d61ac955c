//! Channel model: large-scale profiles, Rayleigh small-scale fading, and the
//! composite `M x K` matrix `G = H D^{1/2}`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Antenna count, user count and linear transmit powers (noise normalized to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub antennas: usize,
    pub users: usize,
    /// Per-user transmit power `P_u`.
    pub user_power: f64,
    /// Relay transmit power `P_r`.
    pub relay_power: f64,
}

impl SystemConfig {
    pub fn new(antennas: usize, users: usize, user_power: f64, relay_power: f64) -> Result<Self> {
        let cfg = Self {
            antennas,
            users,
            user_power,
            relay_power,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same as [`SystemConfig::new`] with powers given in dB.
    pub fn from_db(antennas: usize, users: usize, user_power_db: f64, relay_power_db: f64) -> Result<Self> {
        Self::new(
            antennas,
            users,
            db_to_linear(user_power_db),
            db_to_linear(relay_power_db),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas < 1 {
            return Err(Error::InvalidConfig("antenna count must be at least 1".into()));
        }
        if self.users < 2 {
            return Err(Error::InvalidConfig(format!(
                "user count must be at least 2, got {}",
                self.users
            )));
        }
        for (name, p) in [("user power", self.user_power), ("relay power", self.relay_power)] {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {p}")));
            }
        }
        Ok(())
    }

    pub fn with_antennas(self, antennas: usize) -> Self {
        Self { antennas, ..self }
    }
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    if db == 0.0 {
        1.0
    } else if db == 10.0 {
        10.0
    } else {
        10f64.powf(db / 10.0)
    }
}

/// User placement and propagation parameters for drawing large-scale gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryModel {
    /// Meters.
    pub cell_radius: f64,
    /// Meters; no user is placed closer to the relay than this.
    pub exclusion_radius: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    /// Meters; path loss is unity at this distance.
    pub reference_distance: f64,
}

impl Default for GeometryModel {
    fn default() -> Self {
        Self {
            cell_radius: 1000.0,
            exclusion_radius: 100.0,
            path_loss_exponent: 3.8,
            shadowing_sigma_db: 8.0,
            reference_distance: 100.0,
        }
    }
}

impl GeometryModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.exclusion_radius >= 0.0 && self.exclusion_radius < self.cell_radius) {
            return bad(format!(
                "exclusion radius {} must lie in [0, cell radius {})",
                self.exclusion_radius, self.cell_radius
            ));
        }
        if !(self.path_loss_exponent > 2.0) {
            return bad(format!("path-loss exponent {} must exceed 2", self.path_loss_exponent));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return bad(format!(
                "shadowing sigma {} dB must be non-negative",
                self.shadowing_sigma_db
            ));
        }
        if !(self.reference_distance > 0.0) {
            return bad(format!(
                "reference distance {} must be positive",
                self.reference_distance
            ));
        }
        Ok(())
    }

    /// Large-scale gain of a user at `distance` meters with shadowing `shadow_db`.
    pub fn gain(&self, distance: f64, shadow_db: f64) -> f64 {
        db_to_linear(shadow_db) / (distance / self.reference_distance).powf(self.path_loss_exponent)
    }

    /// Distance for a uniform variate `u` under uniform-in-area placement.
    pub fn distance_quantile(&self, u: f64) -> f64 {
        let (r0, r1) = (self.exclusion_radius, self.cell_radius);
        (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt()
    }
}

/// Where a large-scale profile came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    UniformUnit,
    Generated {
        geometry: GeometryModel,
        seed: u64,
    },
    /// Read back from the plain-text form.
    Loaded,
}

/// Large-scale gains `beta_1..beta_K` (the diagonal of `D`).
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleProfile {
    beta: Vec<f64>,
    provenance: Provenance,
}

impl LargeScaleProfile {
    pub fn new(beta: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidConfig("large-scale profile is empty".into()));
        }
        if let Some((i, b)) = beta.iter().enumerate().find(|(_, b)| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidConfig(format!("beta[{}] = {b} is not positive", i + 1)));
        }
        Ok(Self { beta, provenance })
    }

    pub fn uniform(users: usize) -> Self {
        Self {
            beta: vec![1.0; users],
            provenance: Provenance::UniformUnit,
        }
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn users(&self) -> usize {
        self.beta.len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn total(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// One decimal value per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.beta {
            let _ = writeln!(out, "{b}");
        }
        out
    }

    /// Inverse of [`LargeScaleProfile::to_text`]; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut beta = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {line:?}: {e}", lineno + 1)))?;
            beta.push(v);
        }
        Self::new(beta, Provenance::Loaded)
    }
}

/// One realization of the composite channel `G` (column `k` is `g_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    g: DMatrix<Complex64>,
    beta: Vec<f64>,
}

impl ChannelRealization {
    /// Wrap an explicit matrix, e.g. a hand-built test channel.
    pub fn from_matrix(g: DMatrix<Complex64>, beta: Vec<f64>) -> Result<Self> {
        if g.ncols() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} columns", beta.len()),
                got: format!("{} columns", g.ncols()),
            });
        }
        if g.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("channel has non-finite entries".into()));
        }
        Ok(Self { g, beta })
    }

    /// Draw trial `trial` of the channel stream for `seed`.
    pub fn draw(antennas: usize, profile: &LargeScaleProfile, seed: u64, trial: u64) -> Self {
        let mut rng = rng::substream(seed, Domain::Channel, trial);
        let h = draw_small_scale(antennas, profile.users(), &mut rng);
        compose_channel(h, profile.beta()).expect("dimensions agree by construction")
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn antennas(&self) -> usize {
        self.g.nrows()
    }

    pub fn users(&self) -> usize {
        self.g.ncols()
    }

    /// Column of user `k` (1-based).
    pub fn column(&self, k: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.g.column(k - 1)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            g: &self.g * c,
            beta: self.beta.clone(),
        }
    }
}

/// One `CN(0, 1)` sample: two independent normals scaled by `1/sqrt(2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `M x K` matrix of i.i.d. `CN(0, 1)` entries, filled column by column.
pub fn draw_small_scale<R: Rng + ?Sized>(antennas: usize, users: usize, rng: &mut R) -> DMatrix<Complex64> {
    let data: Vec<Complex64> = (0..antennas * users).map(|_| complex_normal(rng)).collect();
    DMatrix::from_vec(antennas, users, data)
}

/// `g_mk = sqrt(beta_k) h_mk`.
pub fn compose_channel(h: DMatrix<Complex64>, beta: &[f64]) -> Result<ChannelRealization> {
    if h.ncols() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} columns", beta.len()),
            got: format!("{} columns", h.ncols()),
        });
    }
    let mut g = h;
    for (mut col, &b) in g.column_iter_mut().zip(beta) {
        col *= Complex64::from(b.sqrt());
    }
    ChannelRealization::from_matrix(g, beta.to_vec())
}

/// Draw a profile for `users` users from `geometry` using substream 0 of `seed`.
pub fn draw_large_scale(geometry: &GeometryModel, users: usize, seed: u64) -> Result<LargeScaleProfile> {
    geometry.validate()?;
    let mut rng = rng::substream(seed, Domain::LargeScale, 0);
    let beta = (0..users)
        .map(|_| {
            let u: f64 = rng.random();
            let z: f64 = StandardNormal.sample(&mut rng);
            geometry.gain(geometry.distance_quantile(u), geometry.shadowing_sigma_db * z)
        })
        .collect();
    LargeScaleProfile::new(
        beta,
        Provenance::Generated {
            geometry: *geometry,
            seed,
        },
    )
}
