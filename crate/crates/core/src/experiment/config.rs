//! Experiment configuration: flat `key = value` text with dotted keys.
//!
//! ```text
//! synth.kind = "exact-low-rank"
//! synth.n = 200
//! r = 5
//! d = "auto"
//! checks = ["delta", "projection"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::RngStream;
use crate::synth::{CoherenceKind, SpectrumKind, SynthSpec};

/// A sample budget that is either fixed or derived from the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BudgetRepr", into = "BudgetRepr")]
pub enum Budget {
    #[default]
    Auto,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BudgetRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<BudgetRepr> for Budget {
    type Error = String;

    fn try_from(r: BudgetRepr) -> std::result::Result<Self, String> {
        match r {
            BudgetRepr::Count(n) => Ok(Budget::Count(n)),
            BudgetRepr::Word(w) if w == "auto" => Ok(Budget::Auto),
            BudgetRepr::Word(w) => Err(format!("expected a count or \"auto\", found {w:?}")),
        }
    }
}

impl From<Budget> for BudgetRepr {
    fn from(b: Budget) -> Self {
        match b {
            Budget::Auto => BudgetRepr::Word("auto".into()),
            Budget::Count(n) => BudgetRepr::Count(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    ExactLowRank,
    GeometricSpectrum,
    PowerLawSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoherenceChoice {
    Flat,
    Spiky,
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub kind: SynthKind,
    pub n: usize,
    pub m: usize,
    /// Planted rank; defaults to the target rank `r`.
    pub r: Option<usize>,
    pub decay: f64,
    pub exponent: f64,
    pub coherence: CoherenceChoice,
    pub spike_index: usize,
    pub spike_weight: f64,
    /// Gaussian noise with Frobenius norm `noise * ||M||_F`.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            kind: SynthKind::ExactLowRank,
            n: 100,
            m: 100,
            r: None,
            decay: 0.5,
            exponent: 1.0,
            coherence: CoherenceChoice::Flat,
            spike_index: 0,
            spike_weight: 0.9,
            noise: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn spec(&self, target_rank: usize, seed: RngStream) -> SynthSpec {
        let kind = match self.kind {
            SynthKind::ExactLowRank => SpectrumKind::ExactLowRank {
                r: self.r.unwrap_or(target_rank),
            },
            SynthKind::GeometricSpectrum => SpectrumKind::Geometric { decay: self.decay },
            SynthKind::PowerLawSpectrum => SpectrumKind::PowerLaw {
                exponent: self.exponent,
            },
        };
        let coherence = match self.coherence {
            CoherenceChoice::Flat => CoherenceKind::Flat,
            CoherenceChoice::Spiky => CoherenceKind::Spiky {
                index: self.spike_index,
                weight: self.spike_weight,
            },
            CoherenceChoice::Minimal => CoherenceKind::Minimal,
        };
        SynthSpec {
            n: self.n,
            m: self.m,
            kind,
            coherence,
            seed,
        }
    }

    pub fn is_low_rank(&self) -> bool {
        self.kind == SynthKind::ExactLowRank
    }
}

/// Checkers that `verify` and `sweep` can run on each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Halko,
    SinTheta,
    Combine,
    DeltaTriangle,
    Projection,
    Delta,
    Omega1Spectrum,
    StrongConvexity,
    HSandwich,
    MuHat,
    FullRankRecovery,
    IncoherenceLemma,
}

impl CheckId {
    pub const ALL: [CheckId; 12] = [
        CheckId::Halko,
        CheckId::SinTheta,
        CheckId::Combine,
        CheckId::DeltaTriangle,
        CheckId::Projection,
        CheckId::Delta,
        CheckId::Omega1Spectrum,
        CheckId::StrongConvexity,
        CheckId::HSandwich,
        CheckId::MuHat,
        CheckId::FullRankRecovery,
        CheckId::IncoherenceLemma,
    ];

    /// Checks that need the recovered estimate.
    pub fn needs_estimate(self) -> bool {
        matches!(self, CheckId::Combine | CheckId::FullRankRecovery)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(v.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Column/row counts to sweep; entry budget per point from `omega_count`,
    /// or `ceil(nm/d^2)` when that is "auto".
    pub d_grid: Vec<usize>,
    /// Entry budgets to sweep at the configured `d`.
    pub omega_grid: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurConfig {
    /// Sampled columns; defaults to `d` when that is a count.
    pub c: Option<usize>,
    /// Sampled rows; defaults to `c`.
    pub r_rows: Option<usize>,
    /// Comparison rank; defaults to `r`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    /// Read the target from this file instead of generating it.
    pub matrix: Option<PathBuf>,
    pub r: usize,
    pub d: Budget,
    pub omega_count: Budget,
    pub t: f64,
    /// `delta` for the H sandwich check.
    pub delta: f64,
    pub trials: usize,
    pub ridge: f64,
    pub seed: u64,
    pub checks: Vec<CheckId>,
    pub save_m_hat: bool,
    pub save_samples: bool,
    pub sweep: SweepConfig,
    pub cur: CurConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            synth: SynthConfig::default(),
            matrix: None,
            r: 2,
            d: Budget::Auto,
            omega_count: Budget::Auto,
            t: crate::bounds::DEFAULT_T,
            delta: 0.5,
            trials: 1,
            ridge: 0.0,
            seed: 0,
            checks: Vec::new(),
            save_m_hat: false,
            save_samples: false,
            sweep: SweepConfig::default(),
            cur: CurConfig::default(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
    Error::parse(path, line, e.message().to_string())
}

/// Parses `value` as a TOML literal, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::invalid(format!("malformed key {key:?}")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::invalid(format!("{part:?} in {key:?} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses config text; `path` is only used in error messages.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        Self::from_text_with(text, path, &[])
    }

    /// Parses config text and then applies `key=value` overrides.
    pub fn from_text_with(text: &str, path: &Path, overrides: &[String]) -> Result<Self> {
        // Parse the file alone first so that errors carry its line numbers.
        let base: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(path, text, e))?;
        if overrides.is_empty() {
            base.validate()?;
            return Ok(base);
        }
        let mut table: toml::Table = text.parse().map_err(|e| toml_error(path, text, e))?;
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut table, key.trim(), override_value(value.trim()))?;
        }
        let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| {
            Error::invalid(format!("bad override: {}", e.message()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text_with(&text, path, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::invalid("r must be positive"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!(
                "t must be positive, got {}",
                self.t
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::invalid(format!(
                "ridge must be nonnegative, got {}",
                self.ridge
            )));
        }
        if !(self.synth.noise >= 0.0 && self.synth.noise.is_finite()) {
            return Err(Error::invalid(format!(
                "synth.noise must be nonnegative, got {}",
                self.synth.noise
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        if self.matrix.is_none() {
            self.synth
                .spec(self.r, RngStream::new(self.seed, 0))
                .validate()?;
        }
        Ok(())
    }

    /// Root stream of trial `k`.
    pub fn trial_stream(&self, k: usize) -> RngStream {
        RngStream::new(self.seed, 0).child(1).child(k as u64)
    }
}
