use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::Verdict;
use crate::error::Result;
use crate::timestepping::SchemeKind;

use super::config::{SweepConfig, SweepTarget};
use super::run::{prepare, run_from, RunOptions};
use super::with_thread_cap;

/// Result for one `(γ, fixed stabilizer, τ)` cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub gamma: f64,
    pub fixed: f64,
    pub tau: f64,
    /// Smallest stable candidate; `None` when the whole ladder failed.
    pub min_stable: Option<f64>,
    /// Verdicts for the candidates that were run, in ladder order.
    pub verdicts: Vec<(f64, Verdict)>,
    /// A stable candidate followed by an unstable larger one.
    pub anomaly: bool,
    pub ladder_max: f64,
    /// Largest block residual over the runs in this cell.
    pub max_residual: f64,
}

impl SweepCell {
    /// Table entry: the minimum, or `>max` when nothing was stable.
    pub fn label(&self) -> String {
        match self.min_stable {
            Some(v) => format!("{v}"),
            None => format!(">{}", self.ladder_max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub scheme: SchemeKind,
    pub target: SweepTarget,
    pub gammas: Vec<f64>,
    pub fixed: Vec<f64>,
    pub taus: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, gamma: f64, fixed: f64, tau: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.gamma == gamma && c.fixed == fixed && c.tau == tau)
    }

    pub fn anomalies(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.anomaly)
    }

    /// One row per `τ`, one column per `(γ, fixed)` pair.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let other = self.target.other();
        let mut header = String::from("tau");
        for g in &self.gammas {
            for f in &self.fixed {
                header.push_str(&format!(",gamma={g} {other}={f}"));
            }
        }
        writeln!(w, "{header}")?;
        for &tau in &self.taus {
            let mut line = format!("{tau}");
            for &g in &self.gammas {
                for &f in &self.fixed {
                    let label = self
                        .cell(g, f, tau)
                        .map_or_else(String::new, SweepCell::label);
                    line.push(',');
                    line.push_str(&label);
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// For every cell, run the ladder in increasing order over `cfg.steps`
/// steps and report the smallest candidate judged stable. With
/// `check_monotone` every candidate is run so that a stable value followed
/// by an unstable larger one can be flagged.
pub fn sweep_min_stabilizer(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let (_, spec, phi0) = prepare(&cfg.cell_config(cfg.gammas[0], cfg.taus[0], cfg.fixed[0], 0.0))?;

    let coords: Vec<(f64, f64, f64)> = cfg
        .gammas
        .iter()
        .flat_map(|&g| {
            cfg.fixed
                .iter()
                .flat_map(move |&f| cfg.taus.iter().map(move |&t| (g, f, t)))
        })
        .collect();

    let verdict = |g: f64, f: f64, t: f64, candidate: f64| -> (Verdict, f64) {
        let run_cfg = cfg.cell_config(g, t, f, candidate);
        let opts = RunOptions {
            skip_trace: false,
            stop_above: Some(cfg.threshold),
        };
        match run_from(&run_cfg, &spec, &phi0, opts) {
            Ok(out) => (out.verdict(cfg.threshold, cfg.steps), out.max_residual),
            Err(_) => (Verdict::Unstable, 0.0),
        }
    };

    let cells = with_thread_cap(|| {
        if cfg.check_monotone {
            let jobs: Vec<(usize, f64)> = coords
                .iter()
                .enumerate()
                .flat_map(|(i, &(g, _, _))| cfg.ladder_for(g).into_iter().map(move |c| (i, c)))
                .collect();
            let results: Vec<(Verdict, f64)> = jobs
                .par_iter()
                .map(|&(i, c)| {
                    let (g, f, t) = coords[i];
                    verdict(g, f, t, c)
                })
                .collect();
            coords
                .iter()
                .enumerate()
                .map(|(i, &(g, f, t))| {
                    let mine: Vec<(f64, Verdict, f64)> = jobs
                        .iter()
                        .zip(&results)
                        .filter(|((j, _), _)| *j == i)
                        .map(|(&(_, c), &(v, r))| (c, v, r))
                        .collect();
                    let verdicts = mine.iter().map(|&(c, v, _)| (c, v)).collect();
                    let residual = mine.iter().map(|m| m.2).fold(0.0, f64::max);
                    let mut cell = summarize(g, f, t, cfg.ladder_for(g), verdicts);
                    cell.max_residual = residual;
                    cell
                })
                .collect::<Vec<_>>()
        } else {
            coords
                .par_iter()
                .map(|&(g, f, t)| {
                    let ladder = cfg.ladder_for(g);
                    let mut verdicts = Vec::new();
                    let mut residual = 0.0f64;
                    for &c in &ladder {
                        let (v, r) = verdict(g, f, t, c);
                        verdicts.push((c, v));
                        residual = residual.max(r);
                        if v.is_stable() {
                            break;
                        }
                    }
                    let mut cell = summarize(g, f, t, ladder, verdicts);
                    cell.max_residual = residual;
                    cell
                })
                .collect()
        }
    });

    Ok(SweepTable {
        scheme: cfg.base.scheme,
        target: cfg.target,
        gammas: cfg.gammas.clone(),
        fixed: cfg.fixed.clone(),
        taus: cfg.taus.clone(),
        cells,
    })
}

fn summarize(g: f64, f: f64, t: f64, ladder: Vec<f64>, verdicts: Vec<(f64, Verdict)>) -> SweepCell {
    let first = verdicts.iter().position(|(_, v)| v.is_stable());
    let anomaly = first.is_some_and(|i| verdicts[i..].iter().any(|(_, v)| !v.is_stable()));
    SweepCell {
        gamma: g,
        fixed: f,
        tau: t,
        min_stable: first.map(|i| verdicts[i].0),
        verdicts,
        anomaly,
        ladder_max: ladder.last().copied().unwrap_or(0.0),
        max_residual: 0.0,
    }
}
