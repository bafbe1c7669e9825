use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{error_norms, ErrorNorms, Termination};
use crate::error::{Error, Result};

use super::config::RunConfig;
use super::run::{prepare, run_from, RunOptions};
use super::with_thread_cap;

pub const CONVERGENCE_HEADER: &str =
    "tau,err_hminus1,order_hminus1,err_l2,order_l2,err_h1,order_h1";

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub errors: ErrorNorms,
    /// `ln(e_prev/e) / ln(τ_prev/τ)` against the previous row.
    pub order: Option<ErrorNorms>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub tau_ref: f64,
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Largest block residual over all runs, reference included.
    pub max_residual: f64,
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CONVERGENCE_HEADER}")?;
        let ord = |o: Option<f64>| o.map_or_else(String::new, |v| format!("{v:.4}"));
        for r in &self.rows {
            let o = r.order;
            writeln!(
                w,
                "{},{:e},{},{:e},{},{:e},{}",
                r.tau,
                r.errors.h_minus1,
                ord(o.map(|o| o.h_minus1)),
                r.errors.l2,
                ord(o.map(|o| o.l2)),
                r.errors.h1,
                ord(o.map(|o| o.h1)),
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

fn is_multiple(a: f64, b: f64) -> bool {
    let r = a / b;
    (r - r.round()).abs() <= 1e-9 * r.max(1.0) && r.round() >= 1.0
}

/// Run `cfg` once at `tau_ref` and once per `τ` in `taus`, all from the
/// same `φ⁰`, and compare the fields at `T`.
pub fn convergence_study(cfg: &RunConfig, taus: &[f64], tau_ref: f64) -> Result<ConvergenceTable> {
    if taus.is_empty() {
        return Err(Error::InvalidParameter("no step sizes given".into()));
    }
    let t_final = cfg.t_final;
    for &tau in taus.iter().chain([&tau_ref]) {
        if !(tau > 0.0 && is_multiple(t_final, tau) && is_multiple(tau, tau_ref)) {
            return Err(Error::InvalidParameter(format!(
                "tau = {tau} must divide T = {t_final} and be a multiple of tau_ref = {tau_ref}"
            )));
        }
    }
    let (_, spec, phi0) = prepare(cfg)?;
    let opts = RunOptions {
        skip_trace: true,
        stop_above: None,
    };
    let all: Vec<f64> = std::iter::once(tau_ref)
        .chain(taus.iter().copied())
        .collect();
    let finals = with_thread_cap(|| {
        all.par_iter()
            .map(|&tau| {
                let out = run_from(&RunConfig { tau, ..cfg.clone() }, &spec, &phi0, opts)?;
                match out.trace.termination {
                    Termination::Completed => Ok((out.final_state.phi_curr, out.max_residual)),
                    Termination::NonFinite { max_abs, .. } => Err(Error::NonFinite { max_abs }),
                    other => Err(Error::InvalidParameter(format!(
                        "run at tau = {tau} ended: {other:?}"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let max_residual = finals.iter().map(|f| f.1).fold(0.0, f64::max);
    let reference = &finals[0].0;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(taus.len());
    for (&tau, (field, _)) in taus.iter().zip(&finals[1..]) {
        let errors = error_norms(field, reference)?;
        let order = rows.last().map(|p| {
            let rate = |e_prev: f64, e: f64| (e_prev / e).ln() / (p.tau / tau).ln();
            ErrorNorms {
                h_minus1: rate(p.errors.h_minus1, errors.h_minus1),
                l2: rate(p.errors.l2, errors.l2),
                h1: rate(p.errors.h1, errors.h1),
            }
        });
        rows.push(ConvergenceRow { tau, errors, order });
    }
    Ok(ConvergenceTable {
        tau_ref,
        t_final,
        rows,
        max_residual,
    })
}
