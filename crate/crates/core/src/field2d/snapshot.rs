//! Field snapshots as CSV of nodal values on the `M x M` Gauss grid.
//!
//! ```text
//! M,eps,gamma,t,step
//! 48,5e-2,2.5e-3,1.28e0,128
//! u(x_0,y_0),u(x_0,y_1),...,u(x_0,y_{M-1})
//! ...
//! u(x_{M-1},y_0),...,u(x_{M-1},y_{M-1})
//! ```
//!
//! Row `i` holds the values at `x_i` (ascending Gauss nodes), column `l`
//! the value at `y_l`. Floats are written in shortest round-trip exponent
//! form, so reading a snapshot back reproduces the nodal values bit for bit.
//! The `M`-point grid determines the field uniquely (interpolation).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Field, NodalGrid};
use crate::error::{Error, Result};
use crate::spectral1d::{Basis1D, NodeSet};

pub const HEADER: &str = "M,eps,gamma,t,step";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub m: usize,
    pub eps: f64,
    pub gamma: f64,
    pub t: f64,
    pub step: usize,
}

pub fn write_snapshot<W: Write>(mut out: W, field: &Field, meta: &SnapshotMeta) -> Result<()> {
    if meta.m != field.dim() {
        return Err(Error::Shape(format!(
            "snapshot header says M = {} but field has M = {}",
            meta.m,
            field.dim()
        )));
    }
    writeln!(out, "{HEADER}")?;
    writeln!(
        out,
        "{},{:e},{:e},{:e},{}",
        meta.m, meta.eps, meta.gamma, meta.t, meta.step
    )?;
    let grid = field.to_nodal(NodeSet::Base);
    let v = grid.values();
    let mut line = String::new();
    for i in 0..v.nrows() {
        line.clear();
        for l in 0..v.ncols() {
            if l > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:e}", v[(i, l)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{what}: {tok:?}: {e}")))
}

/// Header and nodal values, without building a field.
pub fn read_nodal<R: BufRead>(input: R) -> Result<(SnapshotMeta, DMatrix<f64>)> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("snapshot truncated before {what}")))?
            .map_err(Error::from)
    };
    let header = next("header")?;
    if header.trim() != HEADER {
        return Err(Error::Parse(format!(
            "unexpected snapshot header {header:?}"
        )));
    }
    let meta_line = next("metadata")?;
    let toks: Vec<&str> = meta_line.trim().split(',').collect();
    if toks.len() != 5 {
        return Err(Error::Parse(format!("bad metadata line {meta_line:?}")));
    }
    let m: usize = toks[0]
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("M: {e}")))?;
    let meta = SnapshotMeta {
        m,
        eps: parse_f64(toks[1], "eps")?,
        gamma: parse_f64(toks[2], "gamma")?,
        t: parse_f64(toks[3], "t")?,
        step: toks[4]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("step: {e}")))?,
    };
    let mut values = DMatrix::zeros(m, m);
    for i in 0..m {
        let row = next("data row")?;
        let toks: Vec<&str> = row.trim().split(',').collect();
        if toks.len() != m {
            return Err(Error::Parse(format!(
                "row {i} has {} values, expected {m}",
                toks.len()
            )));
        }
        for (l, tok) in toks.iter().enumerate() {
            values[(i, l)] = parse_f64(tok, "value")?;
        }
    }
    Ok((meta, values))
}

pub fn read_snapshot<R: BufRead>(input: R, basis: &Arc<Basis1D>) -> Result<(Field, SnapshotMeta)> {
    let (meta, values) = read_nodal(input)?;
    if meta.m != basis.dim() {
        return Err(Error::Shape(format!(
            "snapshot has M = {} but basis has M = {}",
            meta.m,
            basis.dim()
        )));
    }
    let grid = NodalGrid::new(NodeSet::Base, values)?;
    Ok((Field::from_nodal(basis, &grid)?, meta))
}

pub fn save(path: &Path, field: &Field, meta: &SnapshotMeta) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_snapshot(&mut out, field, meta)?;
    out.flush()?;
    Ok(())
}

pub fn load(path: &Path, basis: &Arc<Basis1D>) -> Result<(Field, SnapshotMeta)> {
    read_snapshot(BufReader::new(File::open(path)?), basis)
}
