//! Run configuration shared by every subcommand.

use std::fmt;
use std::path::PathBuf;

use plasmon_core::{Momentum, Potential};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// `V̂_k = g|k|⁻²`.
    Coulomb,
    /// `V̂ ≡ 0`.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a run depends on. Unset optional fields take per-command defaults in
/// [`RunConfig::resolve`]; the resolved config is what gets hashed and echoed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Fermi ball `|p|² ≤ radius_sq` for the one-body and correlation computations.
    pub radius_sq: Option<i64>,
    pub g: f64,
    pub potential: PotentialKind,
    /// Sweep `k = (j,0,0)` for `j = 1..=k_max` unless `k_list` is given.
    pub k_max: Option<u32>,
    pub k_list: Option<Vec<[i64; 3]>>,
    /// Largest `M` of the trial states.
    pub m: u32,
    /// Interior radius of the Fock-space truncation.
    pub fock_radius_sq: i64,
    /// Exterior modes are `fock_radius_sq < |p|² ≤ shell_cap`.
    pub shell_cap: i64,
    /// Correlation energy is summed over `0 < |k| ≤ k_cut`.
    pub k_cut: u32,
    /// Absolute tolerance of the correlation quadrature.
    pub tol: f64,
    /// Relative tolerance of the Fock-space identity checks.
    pub check_tol: f64,
    /// Worker threads; falls back to `PLASMON_THREADS`, then to the number of cores.
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            radius_sq: None,
            g: 4.0 * std::f64::consts::PI,
            potential: PotentialKind::Coulomb,
            k_max: None,
            k_list: None,
            m: 4,
            fock_radius_sq: 1,
            shell_cap: 2,
            k_cut: 4,
            tol: 1e-10,
            check_tol: 1e-12,
            threads: None,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Figure1,
    Dispersion,
    Ecorr,
    Bounds,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Figure1 => "figure1",
            Command::Dispersion => "dispersion",
            Command::Ecorr => "ecorr",
            Command::Bounds => "bounds",
            Command::Verify => "verify",
        }
    }

    fn default_radius_sq(self) -> i64 {
        match self {
            Command::Figure1 | Command::Dispersion | Command::Bounds => 250_000,
            Command::Ecorr => 400,
            Command::Verify => 1,
        }
    }

    fn default_k_max(self) -> u32 {
        match self {
            Command::Figure1 | Command::Dispersion => 13,
            Command::Ecorr | Command::Bounds | Command::Verify => 1,
        }
    }
}

/// Validation failure naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError { field, message: message.into() }
}

impl RunConfig {
    /// Fills per-command defaults and validates.
    pub fn resolve(mut self, cmd: Command) -> Result<Self, ConfigError> {
        self.radius_sq.get_or_insert(cmd.default_radius_sq());
        if self.k_list.is_none() {
            self.k_max.get_or_insert(cmd.default_k_max());
        }
        if cmd == Command::Verify {
            // the suite runs on a single truncation; keep one radius in the echoed config
            self.fock_radius_sq = self.radius_sq.unwrap();
        }
        self.validate(cmd)?;
        Ok(self)
    }

    pub fn validate(&self, cmd: Command) -> Result<(), ConfigError> {
        if let Some(r) = self.radius_sq {
            if r < 0 || (r == 0 && cmd != Command::Verify) {
                return Err(invalid("radius_sq", format!("must be positive, got {r}")));
            }
        }
        if !self.g.is_finite() || self.g < 0.0 {
            return Err(invalid("g", format!("must be finite and non-negative, got {}", self.g)));
        }
        if cmd == Command::Dispersion && (self.potential != PotentialKind::Coulomb || self.g == 0.0) {
            return Err(invalid("g", "the continuum comparison needs a Coulomb potential with g > 0"));
        }
        if matches!(cmd, Command::Bounds | Command::Verify) && (self.potential != PotentialKind::Coulomb || self.g == 0.0) {
            return Err(invalid("g", "trial states need a Coulomb potential with g > 0"));
        }
        if self.k_max == Some(0) {
            return Err(invalid("k_max", "must be positive"));
        }
        if let Some(list) = &self.k_list {
            if list.is_empty() {
                return Err(invalid("k_list", "must not be empty"));
            }
            if list.iter().any(|k| k == &[0, 0, 0]) {
                return Err(invalid("k_list", "k = 0 is excluded"));
            }
        }
        if self.m == 0 {
            return Err(invalid("m", "must be positive"));
        }
        if self.fock_radius_sq < 0 {
            return Err(invalid("fock_radius_sq", format!("must be non-negative, got {}", self.fock_radius_sq)));
        }
        if self.shell_cap < self.fock_radius_sq {
            return Err(invalid("shell_cap", format!("must be at least fock_radius_sq = {}", self.fock_radius_sq)));
        }
        if self.k_cut == 0 {
            return Err(invalid("k_cut", "must be positive"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        if !(self.check_tol.is_finite() && self.check_tol > 0.0) {
            return Err(invalid("check_tol", format!("must be positive, got {}", self.check_tol)));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be positive"));
        }
        Ok(())
    }

    pub fn radius(&self) -> i64 {
        self.radius_sq.expect("resolved config")
    }

    pub fn potential(&self) -> Potential {
        match self.potential {
            PotentialKind::Zero => Potential::zero(),
            PotentialKind::Coulomb if self.g == 0.0 => Potential::zero(),
            PotentialKind::Coulomb => Potential::coulomb(self.g).expect("validated g"),
        }
    }

    /// Sweep momenta in output order.
    pub fn momenta(&self) -> Vec<Momentum> {
        match &self.k_list {
            Some(list) => list.iter().map(|k| Momentum::new(k[0], k[1], k[2])).collect(),
            None => (1..=self.k_max.unwrap_or(1) as i64).map(Momentum::axis).collect(),
        }
    }

    /// SHA-256 of the JSON form with the fields that cannot change the numbers removed.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.hashed_view()).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The config without `threads` and `output`.
    pub fn hashed_view(&self) -> RunConfig {
        RunConfig { threads: None, output: None, ..self.clone() }
    }
}
