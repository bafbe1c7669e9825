//! Free energy, the schemes' modified energies, dissipation monitoring and
//! error norms between fields.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field2d::{bulk_integral, hminus1_norm_sq_unchecked, Field};
use crate::potential::PotentialSpec;
use crate::timestepping::{SchemeKind, SchemeParams, State};

/// Largest mean mismatch tolerated when an H⁻¹ norm of a difference is taken.
pub const MEAN_MATCH_TOL: f64 = 1e-9;

/// Per-step energy increase tolerated by [`stability_verdict`] by default.
pub const DEFAULT_THRESHOLD: f64 = 1e-10;

/// Number of steps a run must survive by default to be called stable.
pub const DEFAULT_MIN_STEPS: usize = 1024;

pub const TRACE_HEADER: &str = "n,t,E_eps,E_mod,dE_mod,mean,dt_norm";

/// `E_ε(u) = (ε/2)‖∇u‖² + (1/ε)∫F(u)`, the bulk term on the `2M` grid.
pub fn energy_eps(u: &Field, spec: &PotentialSpec, eps: f64) -> f64 {
    0.5 * eps * u.h1_seminorm_sq() + bulk_integral(spec, u) / eps
}

fn mean_free_difference(u: &Field, v: &Field) -> Result<Field> {
    let (mu, mv) = (u.mean_value(), v.mean_value());
    let diff = u - v;
    if (mu - mv).abs() > MEAN_MATCH_TOL {
        return Err(Error::MeanNotZero {
            mean: mu - mv,
            norm: diff.l2_norm(),
        });
    }
    Ok(diff.without_mean())
}

/// Modified energy whose monotone decay the stability theorems guarantee.
///
/// * SL-CN: `E_ε(φⁿ) + (L/(4ε) + B/2)‖δtφⁿ‖²`
/// * SL-BDF2: `E_ε(φⁿ) + ‖δtφⁿ‖₋₁²/(4τγ) + (L/(2ε) + B/2)‖δtφⁿ‖²`
pub fn modified_energy(state: &State, params: &SchemeParams, spec: &PotentialSpec) -> Result<f64> {
    let eps = params.eps;
    let lip = spec.lipschitz_bound();
    let e = energy_eps(&state.phi_curr, spec, eps);
    let inc = state.increment();
    let l2_sq = inc.l2_norm().powi(2);
    match params.scheme {
        SchemeKind::SlCn => Ok(e + (lip / (4.0 * eps) + 0.5 * params.b) * l2_sq),
        SchemeKind::SlBdf2 => {
            let dt = mean_free_difference(&state.phi_curr, &state.phi_prev)?;
            let h = hminus1_norm_sq_unchecked(&dt);
            Ok(e + h / (4.0 * params.tau * params.gamma)
                + (lip / (2.0 * eps) + 0.5 * params.b) * l2_sq)
        }
        SchemeKind::FirstOrder => Err(Error::InvalidParameter(
            "modified energy is defined for SL_CN and SL_BDF2 only".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub t: f64,
    pub e_eps: f64,
    pub e_mod: f64,
    /// `E_mod(n) - E_mod(n-1)`; zero on the first row.
    pub de_mod: f64,
    pub mean: f64,
    /// `‖φⁿ - φⁿ⁻¹‖`.
    pub dt_norm: f64,
    /// Block residual of the solve that produced this row.
    pub residual: f64,
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    NonFinite {
        step: usize,
        max_abs: f64,
    },
    /// Ended early because the modified energy rose past a limit.
    Stopped {
        step: usize,
    },
    Failed {
        step: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
}

impl Default for EnergyTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl EnergyTrace {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            termination: Termination::Completed,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Append a row computed from `state`.
    pub fn record(
        &mut self,
        state: &State,
        params: &SchemeParams,
        spec: &PotentialSpec,
        residual: f64,
    ) -> Result<&TraceRow> {
        let e_mod = modified_energy(state, params, spec)?;
        let row = TraceRow {
            n: state.n,
            t: state.t,
            e_eps: energy_eps(&state.phi_curr, spec, params.eps),
            e_mod,
            de_mod: self.last().map_or(0.0, |r| e_mod - r.e_mod),
            mean: state.phi_curr.mean_value(),
            dt_norm: state.increment().l2_norm(),
            residual,
        };
        self.push(row)?;
        Ok(self.rows.last().expect("just pushed"))
    }

    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.last() {
            if row.n != last.n + 1 || !(row.t > last.t) {
                return Err(Error::InvalidParameter(format!(
                    "trace row (n={}, t={}) does not follow (n={}, t={})",
                    row.n, row.t, last.n, last.t
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.n, r.t, r.e_eps, r.e_mod, r.de_mod, r.mean, r.dt_norm
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    /// Largest per-step increase of the modified energy.
    pub fn max_increase(&self) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| r.de_mod)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
}

impl Verdict {
    pub fn is_stable(self) -> bool {
        self == Verdict::Stable
    }
}

/// Stable iff the run completed at least `min_steps` rows and no step raised
/// the modified energy by more than `threshold`.
pub fn stability_verdict(trace: &EnergyTrace, threshold: f64, min_steps: usize) -> Verdict {
    let completed = trace.termination == Termination::Completed && trace.len() >= min_steps;
    let dissipative = trace
        .rows
        .iter()
        .skip(1)
        .all(|r| r.de_mod.is_finite() && r.de_mod <= threshold);
    if completed && dissipative {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub h_minus1: f64,
    pub l2: f64,
    /// Full H¹ norm `(‖e‖² + ‖∇e‖²)^½`.
    pub h1: f64,
}

/// Norms of `u - v`. The means must agree to [`MEAN_MATCH_TOL`]; the
/// leftover mean is removed before the H⁻¹ norm is taken.
pub fn error_norms(u: &Field, v: &Field) -> Result<ErrorNorms> {
    let diff = u - v;
    let h_minus1 = hminus1_norm_sq_unchecked(&mean_free_difference(u, v)?).sqrt();
    let l2 = diff.l2_norm();
    let h1 = (l2 * l2 + diff.h1_seminorm_sq().max(0.0)).sqrt();
    Ok(ErrorNorms { h_minus1, l2, h1 })
}
