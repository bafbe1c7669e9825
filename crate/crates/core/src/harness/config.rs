use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DEFAULT_MIN_STEPS, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::potential::{BlendMode, PotentialSpec};
use crate::spectral1d::BasisKind;
use crate::timestepping::{SchemeKind, SchemeParams, DEFAULT_BOOTSTRAP_SUBSTEPS};

/// Which initial datum a run starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Seeded uniform noise on the dealiasing grid.
    Random,
    /// The noise evolved to `t = 64ε³` by the first-order scheme.
    #[default]
    Prepared,
    /// Nodal snapshot file on the `M`-point grid.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialConfig {
    pub truncation_point: f64,
    pub blend_width: f64,
    pub mode: BlendMode,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            truncation_point: 2.0,
            blend_width: 0.0,
            mode: BlendMode::Piecewise,
        }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialSpec> {
        PotentialSpec::new(self.truncation_point, self.blend_width, self.mode)
    }
}

/// One simulation. Missing keys take the defaults of [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub m: usize,
    pub eps: f64,
    pub gamma: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub scheme: SchemeKind,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub seed: u64,
    pub basis: BasisKind,
    pub initial: InitialData,
    pub potential: PotentialConfig,
    pub bootstrap_substeps: usize,
    /// Write a snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 127,
            eps: 0.05,
            gamma: 0.0025,
            tau: 0.01,
            t_final: 12.8,
            scheme: SchemeKind::SlBdf2,
            a: 0.25,
            b: 40.0,
            seed: 0,
            basis: BasisKind::Printed,
            initial: InitialData::Prepared,
            potential: PotentialConfig::default(),
            bootstrap_substeps: DEFAULT_BOOTSTRAP_SUBSTEPS,
            snapshot_every: 0,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 4 {
            return Err(Error::InvalidParameter(format!(
                "M must be >= 4, got {}",
                self.m
            )));
        }
        if self.scheme == SchemeKind::FirstOrder {
            return Err(Error::InvalidParameter(
                "runs use SL_BDF2 or SL_CN; FIRST_ORDER is the bootstrap scheme".into(),
            ));
        }
        if self.bootstrap_substeps == 0 {
            return Err(Error::InvalidParameter(
                "bootstrap_substeps must be >= 1".into(),
            ));
        }
        self.scheme_params().validate()?;
        if !(self.t_final.is_finite() && self.t_final >= self.tau * (1.0 - 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "T = {} must be at least tau = {}",
                self.t_final, self.tau
            )));
        }
        self.potential.build().map(|_| ())
    }

    pub fn scheme_params(&self) -> SchemeParams {
        SchemeParams::sl_bdf2(self.tau, self.gamma, self.eps, self.a, self.b)
            .with_scheme(self.scheme)
    }

    /// Number of time levels after `φ⁰`: `⌈T/τ⌉`.
    pub fn num_levels(&self) -> usize {
        (self.t_final / self.tau * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepTarget {
    A,
    B,
}

impl SweepTarget {
    pub fn other(self) -> &'static str {
        match self {
            SweepTarget::A => "B",
            SweepTarget::B => "A",
        }
    }
}

/// Minimum-stabilizer sweep. The base run supplies `M`, `eps`, `scheme`,
/// `seed`, basis, initial data and potential; `gamma`, `tau`, `A`, `B` and
/// `T` are set per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub base: RunConfig,
    pub target: SweepTarget,
    /// Values of the stabilizer that is held fixed.
    pub fixed: Vec<f64>,
    pub gammas: Vec<f64>,
    pub taus: Vec<f64>,
    /// Candidate values; defaults to the ladder for `target` per `gamma`.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Run every candidate and flag non-monotone verdicts.
    #[serde(default = "default_true")]
    pub check_monotone: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_steps() -> usize {
    DEFAULT_MIN_STEPS
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_true() -> bool {
    true
}

impl SweepConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fixed.is_empty() || self.gammas.is_empty() || self.taus.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs non-empty fixed, gammas and taus".into(),
            ));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if let Some(l) = &self.ladder {
            check_ladder(l)?;
        }
        for &gamma in &self.gammas {
            for &tau in &self.taus {
                for &fixed in &self.fixed {
                    self.cell_config(gamma, tau, fixed, 0.0).validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn ladder_for(&self, gamma: f64) -> Vec<f64> {
        self.ladder
            .clone()
            .unwrap_or_else(|| default_ladder(self.target, gamma, self.base.eps))
    }

    pub(crate) fn cell_config(
        &self,
        gamma: f64,
        tau: f64,
        fixed: f64,
        candidate: f64,
    ) -> RunConfig {
        let (a, b) = match self.target {
            SweepTarget::A => (candidate, fixed),
            SweepTarget::B => (fixed, candidate),
        };
        RunConfig {
            gamma,
            tau,
            a,
            b,
            t_final: self.steps as f64 * tau,
            snapshot_every: 0,
            out_dir: None,
            ..self.base.clone()
        }
    }
}

fn check_ladder(l: &[f64]) -> Result<()> {
    let ok = !l.is_empty()
        && l.iter().all(|v| v.is_finite() && *v >= 0.0)
        && l.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "ladder must be strictly increasing and >= 0: {l:?}"
        )))
    }
}

/// `{0} ∪ {2^i · 4γ/ε², i = -7..=1}` for A, `{0} ∪ {2^i · 2/ε, i = -3..=4}` for B.
pub fn default_ladder(target: SweepTarget, gamma: f64, eps: f64) -> Vec<f64> {
    let (base, lo, hi) = match target {
        SweepTarget::A => (4.0 * gamma / (eps * eps), -7, 1),
        SweepTarget::B => (2.0 / eps, -3, 4),
    };
    // Rounded to 12 significant digits so that e.g. 4γ/ε² prints as 4.
    let tidy = |v: f64| {
        let scale = 10f64.powi(11 - v.abs().log10().floor() as i32);
        (v * scale).round() / scale
    };
    std::iter::once(0.0)
        .chain((lo..=hi).map(|i| tidy(base * 2f64.powi(i))))
        .collect()
}

/// Convergence study: a base run plus the step sizes to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    #[serde(flatten)]
    pub base: RunConfig,
    pub taus: Vec<f64>,
    pub tau_ref: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ConvergenceConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
