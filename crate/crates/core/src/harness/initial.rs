use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::field2d::{Field, NodalGrid};
use crate::potential::PotentialSpec;
use crate::spectral1d::{Basis1D, NodeSet};
use crate::timestepping::{SchemeParams, State, StepOperator};

use super::rng::SplitMix64;

/// Number of first-order sub-steps (of size `ε³`) used to prepare `φ₁`.
pub const PREPARE_STEPS: usize = 64;

/// Uniform random values in `[-1, 1]` at the `2M x 2M` Gauss nodes, drawn
/// row-major (x index outer, y index inner), projected onto the basis.
pub fn generate_phi0_in(basis: &Arc<Basis1D>, seed: u64) -> Field {
    let p = basis.num_points(NodeSet::Double);
    let mut rng = SplitMix64::new(seed);
    let mut values = DMatrix::zeros(p, p);
    for i in 0..p {
        for l in 0..p {
            values[(i, l)] = rng.next_symmetric();
        }
    }
    let grid = NodalGrid::new(NodeSet::Double, values).expect("square grid");
    Field::from_nodal(basis, &grid).expect("grid matches basis")
}

/// [`generate_phi0_in`] on the default basis of dimension `m`.
pub fn generate_phi0(m: usize, seed: u64) -> Result<Field> {
    Ok(generate_phi0_in(&Arc::new(Basis1D::assemble(m)?), seed))
}

/// Evolve `φ0` to `t = 64ε³` with the first-order scheme (`γ = 1`,
/// `S = 1/ε`, step `ε³`).
pub fn prepare_phi1(phi0: &Field, eps: f64, spec: &PotentialSpec) -> Result<Field> {
    let step = eps.powi(3);
    let params = SchemeParams::first_order(step, 1.0, eps, 1.0 / eps);
    let op = StepOperator::build(params, phi0.basis())?;
    let mut state = State {
        phi_curr: phi0.clone(),
        phi_prev: phi0.clone(),
        t: 0.0,
        n: 0,
    };
    for _ in 0..PREPARE_STEPS {
        state = op.step(&state, spec)?.state;
    }
    Ok(state.phi_curr)
}
