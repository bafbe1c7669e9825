use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{
    stability_verdict, EnergyTrace, Termination, Verdict, DEFAULT_MIN_STEPS, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::field2d::snapshot::{self, SnapshotMeta};
use crate::field2d::Field;
use crate::potential::PotentialSpec;
use crate::spectral1d::Basis1D;
use crate::timestepping::{bootstrap_with_residual, State, StepOperator};

use super::config::{InitialData, RunConfig};
use super::initial::{generate_phi0_in, prepare_phi1};

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub trace: EnergyTrace,
    /// Last state reached (the failing step is not included).
    pub final_state: State,
    pub initial_mean: f64,
    pub snapshots: Vec<Snapshot>,
    /// Largest block residual over all solves, bootstrap included.
    pub max_residual: f64,
}

impl RunOutput {
    pub fn final_field(&self) -> &Field {
        &self.final_state.phi_curr
    }

    pub fn verdict(&self, threshold: f64, min_steps: usize) -> Verdict {
        stability_verdict(&self.trace, threshold, min_steps)
    }

    pub fn max_mean_drift(&self) -> f64 {
        self.trace
            .rows
            .iter()
            .map(|r| (r.mean - self.initial_mean).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RunOptions {
    /// Skip energy bookkeeping; only the trajectory is needed.
    pub skip_trace: bool,
    /// Stop as soon as the modified energy rises by more than this.
    pub stop_above: Option<f64>,
}

/// The basis, potential and `φ⁰` described by `cfg`.
pub fn prepare(cfg: &RunConfig) -> Result<(Arc<Basis1D>, PotentialSpec, Field)> {
    cfg.validate()?;
    let basis = Arc::new(Basis1D::assemble_kind(cfg.basis, cfg.m)?);
    let spec = cfg.potential.build()?;
    let phi0 = initial_field(cfg, &basis, &spec)?;
    Ok((basis, spec, phi0))
}

pub fn initial_field(cfg: &RunConfig, basis: &Arc<Basis1D>, spec: &PotentialSpec) -> Result<Field> {
    match &cfg.initial {
        InitialData::Random => Ok(generate_phi0_in(basis, cfg.seed)),
        InitialData::Prepared => prepare_phi1(&generate_phi0_in(basis, cfg.seed), cfg.eps, spec),
        InitialData::File(path) => Ok(snapshot::load(path, basis)?.0),
    }
}

/// Bootstrap, then `⌈T/τ⌉ - 1` scheme steps. Solver failures end the run
/// and are recorded in the trace's termination reason.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    let (_, spec, phi0) = prepare(cfg)?;
    run_from(cfg, &spec, &phi0, RunOptions::default())
}

pub(crate) fn run_from(
    cfg: &RunConfig,
    spec: &PotentialSpec,
    phi0: &Field,
    opts: RunOptions,
) -> Result<RunOutput> {
    cfg.validate()?;
    let params = cfg.scheme_params();
    let basis = phi0.basis();
    if basis.dim() != cfg.m {
        return Err(Error::Shape(format!(
            "initial field has M = {}, config says {}",
            basis.dim(),
            cfg.m
        )));
    }
    let op = StepOperator::build(params, basis)?;
    let levels = cfg.num_levels();
    let cadence = cfg.snapshot_every;

    let mut trace = EnergyTrace::new();
    let mut max_residual = 0.0f64;
    let mut snapshots = Vec::new();
    let keep = |n: usize, state: &State, snaps: &mut Vec<Snapshot>| {
        if cadence > 0 && (n.is_multiple_of(cadence) || n == levels) {
            snaps.push(Snapshot {
                step: n,
                t: state.t,
                field: state.phi_curr.clone(),
            });
        }
    };
    let mut state = State {
        phi_curr: phi0.clone(),
        phi_prev: phi0.clone(),
        t: 0.0,
        n: 0,
    };
    keep(0, &state, &mut snapshots);

    let record = |trace: &mut EnergyTrace, state: &State, residual: f64| -> Result<bool> {
        if opts.skip_trace {
            return Ok(false);
        }
        let row = trace.record(state, &params, spec, residual)?;
        Ok(opts.stop_above.is_some_and(|lim| row.de_mod > lim))
    };
    let fail = |step: usize, e: Error| match e {
        Error::NonFinite { max_abs } => Termination::NonFinite { step, max_abs },
        other => Termination::Failed {
            step,
            message: other.to_string(),
        },
    };

    match bootstrap_with_residual(phi0, &params, cfg.bootstrap_substeps, spec) {
        Ok((phi1, residual)) => {
            max_residual = max_residual.max(residual);
            state = State::from_bootstrap(phi0.clone(), phi1, cfg.tau);
            keep(1, &state, &mut snapshots);
            match record(&mut trace, &state, residual) {
                Ok(true) => trace.termination = Termination::Stopped { step: 1 },
                Ok(false) => {}
                Err(e) => trace.termination = fail(1, e),
            }
        }
        Err(e) => trace.termination = fail(1, e),
    }

    while trace.termination == Termination::Completed && state.n < levels {
        let step = state.n + 1;
        match op.step(&state, spec) {
            Ok(adv) => {
                max_residual = max_residual.max(adv.residual);
                state = adv.state;
                state.t = state.n as f64 * cfg.tau;
                keep(state.n, &state, &mut snapshots);
                match record(&mut trace, &state, adv.residual) {
                    Ok(true) => trace.termination = Termination::Stopped { step },
                    Ok(false) => {}
                    Err(e) => trace.termination = fail(step, e),
                }
            }
            Err(e) => trace.termination = fail(step, e),
        }
    }

    Ok(RunOutput {
        config: cfg.clone(),
        trace,
        final_state: state,
        initial_mean: phi0.mean_value(),
        snapshots,
        max_residual,
    })
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    termination: &'a Termination,
    steps: usize,
    t: f64,
    e_eps: Option<f64>,
    e_mod: Option<f64>,
    max_energy_increase: Option<f64>,
    max_residual: f64,
    max_mean_drift: f64,
    verdict: Verdict,
}

/// `trace.csv`, `summary.json` and `snapshot_<step>.csv` files under `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    out.trace.save_csv(dir.join("trace.csv"))?;
    for s in &out.snapshots {
        let meta = SnapshotMeta {
            m: out.config.m,
            eps: out.config.eps,
            gamma: out.config.gamma,
            t: s.t,
            step: s.step,
        };
        snapshot::save(
            &dir.join(format!("snapshot_{:06}.csv", s.step)),
            &s.field,
            &meta,
        )?;
    }
    let last = out.trace.last();
    let summary = Summary {
        config: &out.config,
        termination: &out.trace.termination,
        steps: out.final_state.n,
        t: out.final_state.t,
        e_eps: last.map(|r| r.e_eps),
        e_mod: last.map(|r| r.e_mod),
        max_energy_increase: (out.trace.len() > 1).then(|| out.trace.max_increase()),
        max_residual: out.max_residual,
        max_mean_drift: out.max_mean_drift(),
        verdict: out.verdict(
            DEFAULT_THRESHOLD,
            DEFAULT_MIN_STEPS.min(out.config.num_levels()),
        ),
    };
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}
