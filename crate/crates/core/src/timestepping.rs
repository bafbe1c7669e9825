//! Linear time-marching schemes for the Cahn-Hilliard system
//!
//! ```text
//! φ_t = γ Δμ,   μ = -ε Δφ + f(φ)/ε,   ∂φ/∂n = ∂μ/∂n = 0.
//! ```
//!
//! Each scheme leads, per step, to the same constant-coefficient Galerkin
//! system for the unknowns `(φⁿ⁺¹, μ)`:
//!
//! ```text
//! [ α 𝕄         γ 𝕂 ] [φ]   [b₁]
//! [ -κ 𝕂 - β 𝕄   𝕄  ] [μ] = [b₂]
//! ```
//!
//! | scheme      | α        | κ          | β |
//! |-------------|----------|------------|---|
//! | SL-BDF2     | 3/(2τ)   | ε + Aτ     | B |
//! | SL-CN       | 1/τ      | ε/2 + Aτ   | B |
//! | first order | 1/s      | ε          | S |
//!
//! with `𝕄 = Mₘ ⊗ Mₘ` and `𝕂 = S ⊗ Mₘ + Mₘ ⊗ S`. In the mass-orthonormal
//! modal basis of [`Basis1D`] both `𝕄` and `𝕂` are diagonal, so the
//! block system splits into independent 2x2 systems, one per mode
//! `(i, j)` with `d = λᵢ + λⱼ`. The per-mode pivots are computed once when
//! the operator is built and reused for every step.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field2d::{apply_mass, apply_stiffness, dual_to_modal, from_modal, load_vector, Field};
use crate::potential::PotentialSpec;
use crate::spectral1d::Basis1D;

/// Normalized block residual accepted from a step solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Coefficient magnitude beyond which a step is reported as blown up.
pub const BLOWUP_LIMIT: f64 = 1e8;

/// Default number of first-order sub-steps used to produce `φ¹`.
pub const DEFAULT_BOOTSTRAP_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "SL_BDF2")]
    SlBdf2,
    #[serde(rename = "SL_CN")]
    SlCn,
    #[serde(rename = "FIRST_ORDER")]
    FirstOrder,
}

impl SchemeKind {
    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::SlBdf2 => "SL_BDF2",
            SchemeKind::SlCn => "SL_CN",
            SchemeKind::FirstOrder => "FIRST_ORDER",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SL_BDF2" | "BDF2" => Ok(SchemeKind::SlBdf2),
            "SL_CN" | "CN" => Ok(SchemeKind::SlCn),
            "FIRST_ORDER" => Ok(SchemeKind::FirstOrder),
            _ => Err(Error::InvalidParameter(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Step configuration. For [`SchemeKind::FirstOrder`], `tau` is the
/// sub-step size `s` and `s` the zero-order stabilizer `S`; `a` and `b`
/// are unused. The two-step schemes ignore `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub scheme: SchemeKind,
    pub tau: f64,
    pub gamma: f64,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub s: f64,
}

impl SchemeParams {
    pub fn sl_bdf2(tau: f64, gamma: f64, eps: f64, a: f64, b: f64) -> Self {
        Self {
            scheme: SchemeKind::SlBdf2,
            tau,
            gamma,
            eps,
            a,
            b,
            s: 0.0,
        }
    }

    pub fn sl_cn(tau: f64, gamma: f64, eps: f64, a: f64, b: f64) -> Self {
        Self {
            scheme: SchemeKind::SlCn,
            ..Self::sl_bdf2(tau, gamma, eps, a, b)
        }
    }

    pub fn first_order(step: f64, gamma: f64, eps: f64, s: f64) -> Self {
        Self {
            scheme: SchemeKind::FirstOrder,
            tau: step,
            gamma,
            eps,
            a: 0.0,
            b: 0.0,
            s,
        }
    }

    pub fn with_scheme(self, scheme: SchemeKind) -> Self {
        Self { scheme, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} out of range: {v}")));
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad("tau", self.tau);
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma", self.gamma);
        }
        if !(self.eps.is_finite() && self.eps > 0.0 && self.eps <= 1.0) {
            return bad("eps", self.eps);
        }
        for (what, v) in [("A", self.a), ("B", self.b), ("S", self.s)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(what, v);
            }
        }
        Ok(())
    }

    /// `(α, κ, β)` of the block system.
    fn block_coefficients(&self) -> (f64, f64, f64) {
        let (tau, eps) = (self.tau, self.eps);
        match self.scheme {
            SchemeKind::SlBdf2 => (1.5 / tau, eps + self.a * tau, self.b),
            SchemeKind::SlCn => (1.0 / tau, 0.5 * eps + self.a * tau, self.b),
            SchemeKind::FirstOrder => (1.0 / tau, eps, self.s),
        }
    }
}

/// Two consecutive time levels of one simulation.
#[derive(Debug, Clone)]
pub struct State {
    pub phi_curr: Field,
    pub phi_prev: Field,
    pub t: f64,
    pub n: usize,
}

impl State {
    /// History `(φ¹, φ⁰)` at `t = τ`, `n = 1`.
    pub fn from_bootstrap(phi0: Field, phi1: Field, tau: f64) -> Self {
        Self {
            phi_curr: phi1,
            phi_prev: phi0,
            t: tau,
            n: 1,
        }
    }

    /// `δtφⁿ = φⁿ - φⁿ⁻¹`.
    pub fn increment(&self) -> Field {
        &self.phi_curr - &self.phi_prev
    }
}

/// Result of one block solve.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub phi: Field,
    pub mu: Field,
    /// `‖r‖∞ / max(‖term‖∞)` over both block rows.
    pub residual: f64,
}

/// Result of one time step.
#[derive(Debug, Clone)]
pub struct Advance {
    pub state: State,
    pub mu: Field,
    pub residual: f64,
}

/// Pre-factorized block system for fixed parameters and basis.
#[derive(Debug, Clone)]
pub struct StepOperator {
    params: SchemeParams,
    basis: Arc<Basis1D>,
    alpha: f64,
    kappa: f64,
    beta: f64,
    // λᵢ + λⱼ per mode.
    eig_sum: DMatrix<f64>,
    // 1 / (α + γ d (κ d + β)) per mode.
    inv_pivot: DMatrix<f64>,
}

impl StepOperator {
    pub fn build(params: SchemeParams, basis: &Arc<Basis1D>) -> Result<Self> {
        params.validate()?;
        let (alpha, kappa, beta) = params.block_coefficients();
        let lam = basis.modal_values();
        let m = basis.dim();
        let eig_sum = DMatrix::from_fn(m, m, |i, j| lam[i] + lam[j]);
        let mut inv_pivot = DMatrix::zeros(m, m);
        for j in 0..m {
            for i in 0..m {
                let d = eig_sum[(i, j)];
                let pivot = alpha + params.gamma * d * (kappa * d + beta);
                if !(pivot.is_finite() && pivot > 0.0) {
                    return Err(Error::SingularSystem(format!(
                        "mode ({i}, {j}) has pivot {pivot:e}"
                    )));
                }
                inv_pivot[(i, j)] = 1.0 / pivot;
            }
        }
        Ok(Self {
            params,
            basis: Arc::clone(basis),
            alpha,
            kappa,
            beta,
            eig_sum,
            inv_pivot,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn basis(&self) -> &Arc<Basis1D> {
        &self.basis
    }

    /// Forward application of the block matrix, returning `(b₁, b₂)` in
    /// dual (load-vector) form.
    pub fn apply(&self, phi: &Field, mu: &Field) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = self.block_terms(phi.coeffs(), mu.coeffs());
        (
            &t.mass_phi + &t.stiff_mu,
            &t.mass_mu - &t.stiff_phi - &t.zero_phi,
        )
    }

    fn block_terms(&self, phi: &DMatrix<f64>, mu: &DMatrix<f64>) -> BlockTerms {
        let b = &*self.basis;
        let mphi = apply_mass(b, phi);
        let kphi = apply_stiffness(b, phi);
        BlockTerms {
            mass_phi: &mphi * self.alpha,
            stiff_mu: apply_stiffness(b, mu) * self.params.gamma,
            stiff_phi: kphi * self.kappa,
            zero_phi: mphi * self.beta,
            mass_mu: apply_mass(b, mu),
        }
    }

    /// Solve the block system for dual right-hand sides `(b₁, b₂)`.
    pub fn solve(&self, b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> Result<BlockSolution> {
        let basis = &*self.basis;
        let r1 = dual_to_modal(basis, b1);
        let r2 = dual_to_modal(basis, b2);
        let gamma = self.params.gamma;
        let mut phi_hat = DMatrix::zeros(r1.nrows(), r1.ncols());
        let mut mu_hat = DMatrix::zeros(r1.nrows(), r1.ncols());
        for j in 0..r1.ncols() {
            for i in 0..r1.nrows() {
                let d = self.eig_sum[(i, j)];
                let p = (r1[(i, j)] - gamma * d * r2[(i, j)]) * self.inv_pivot[(i, j)];
                phi_hat[(i, j)] = p;
                mu_hat[(i, j)] = r2[(i, j)] + (self.kappa * d + self.beta) * p;
            }
        }
        let phi = from_modal(basis, &phi_hat);
        let mu = from_modal(basis, &mu_hat);

        let max_abs = phi.amax().max(mu.amax());
        if !max_abs.is_finite() || phi.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { max_abs: f64::NAN });
        }
        if phi.amax() > BLOWUP_LIMIT {
            return Err(Error::NonFinite {
                max_abs: phi.amax(),
            });
        }

        let t = self.block_terms(&phi, &mu);
        let res1 = &t.mass_phi + &t.stiff_mu - b1;
        let res2 = &t.mass_mu - &t.stiff_phi - &t.zero_phi - b2;
        let scale = [
            t.mass_phi.amax(),
            t.stiff_mu.amax(),
            t.stiff_phi.amax(),
            t.zero_phi.amax(),
            t.mass_mu.amax(),
            b1.amax(),
            b2.amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let residual = if scale > 0.0 {
            res1.amax().max(res2.amax()) / scale
        } else {
            0.0
        };
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::SolveFailed { residual });
        }
        Ok(BlockSolution {
            phi: Field::from_raw(&self.basis, phi),
            mu: Field::from_raw(&self.basis, mu),
            residual,
        })
    }

    /// Right-hand side `(b₁, b₂)` for advancing from `(φⁿ, φⁿ⁻¹)`.
    pub fn rhs(
        &self,
        curr: &Field,
        prev: &Field,
        spec: &PotentialSpec,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let basis = &*self.basis;
        let p = &self.params;
        let c = curr.coeffs();
        let inv_eps = 1.0 / p.eps;
        match p.scheme {
            SchemeKind::SlBdf2 => {
                let extrap = curr.lincomb(2.0, prev, -1.0);
                let b1 = apply_mass(basis, &(c * 4.0 - prev.coeffs())) * (0.5 / p.tau);
                let b2 = load_vector(spec, &extrap) * inv_eps
                    - apply_stiffness(basis, c) * (p.a * p.tau)
                    - apply_mass(basis, extrap.coeffs()) * p.b;
                (b1, b2)
            }
            SchemeKind::SlCn => {
                let extrap = curr.lincomb(1.5, prev, -0.5);
                let second = curr.lincomb(2.0, prev, -1.0);
                let b1 = apply_mass(basis, c) / p.tau;
                let b2 = load_vector(spec, &extrap) * inv_eps
                    + apply_stiffness(basis, c) * (0.5 * p.eps - p.a * p.tau)
                    - apply_mass(basis, second.coeffs()) * p.b;
                (b1, b2)
            }
            SchemeKind::FirstOrder => {
                let mc = apply_mass(basis, c);
                let b1 = &mc / p.tau;
                let b2 = load_vector(spec, curr) * inv_eps - mc * p.s;
                (b1, b2)
            }
        }
    }

    /// Advance `(φⁿ, φⁿ⁻¹) → (φⁿ⁺¹, φⁿ)`. The first-order scheme only reads
    /// `φⁿ`.
    pub fn step(&self, state: &State, spec: &PotentialSpec) -> Result<Advance> {
        if !state.phi_curr.same_basis(&state.phi_prev)
            || state.phi_curr.dim() != self.basis.dim()
            || state.phi_curr.basis().kind() != self.basis.kind()
        {
            return Err(Error::Shape(
                "state basis does not match operator basis".into(),
            ));
        }
        let (b1, b2) = self.rhs(&state.phi_curr, &state.phi_prev, spec);
        let sol = self.solve(&b1, &b2)?;
        Ok(Advance {
            state: State {
                phi_prev: state.phi_curr.clone(),
                phi_curr: sol.phi,
                t: state.t + self.params.tau,
                n: state.n + 1,
            },
            mu: sol.mu,
            residual: sol.residual,
        })
    }
}

struct BlockTerms {
    mass_phi: DMatrix<f64>,
    stiff_mu: DMatrix<f64>,
    stiff_phi: DMatrix<f64>,
    zero_phi: DMatrix<f64>,
    mass_mu: DMatrix<f64>,
}

/// `φ¹` from `φ⁰` by `m` sub-steps of size `τ/m` of the first-order
/// stabilized scheme with `S = 1/ε`. Returns the field and the largest
/// block residual seen.
pub fn bootstrap_with_residual(
    phi0: &Field,
    params: &SchemeParams,
    m: usize,
    spec: &PotentialSpec,
) -> Result<(Field, f64)> {
    if m == 0 {
        return Err(Error::InvalidParameter("bootstrap needs m >= 1".into()));
    }
    params.validate()?;
    let sub = SchemeParams::first_order(
        params.tau / m as f64,
        params.gamma,
        params.eps,
        1.0 / params.eps,
    );
    let op = StepOperator::build(sub, phi0.basis())?;
    let mut state = State {
        phi_curr: phi0.clone(),
        phi_prev: phi0.clone(),
        t: 0.0,
        n: 0,
    };
    let mut worst = 0.0f64;
    for _ in 0..m {
        let adv = op.step(&state, spec)?;
        worst = worst.max(adv.residual);
        state = adv.state;
    }
    Ok((state.phi_curr, worst))
}

pub fn bootstrap_first_step(
    phi0: &Field,
    params: &SchemeParams,
    m: usize,
    spec: &PotentialSpec,
) -> Result<Field> {
    bootstrap_with_residual(phi0, params, m, spec).map(|(phi, _)| phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field2d::hminus1_norm;
    use crate::harness::rng::SplitMix64;

    fn basis(m: usize) -> Arc<Basis1D> {
        Arc::new(Basis1D::assemble(m).unwrap())
    }

    fn random_field(b: &Arc<Basis1D>, seed: u64, decay: f64) -> Field {
        let mut g = SplitMix64::new(seed);
        let m = b.dim();
        let c = DMatrix::from_fn(m, m, |k, j| {
            g.next_symmetric() * (-decay * (k + j) as f64).exp()
        });
        Field::from_coeffs(b, c).unwrap()
    }

    #[test]
    fn manufactured_solution_round_trip() {
        let b = basis(8);
        let all = [
            SchemeParams::sl_bdf2(0.01, 0.0025, 0.05, 2.0, 20.0),
            SchemeParams::sl_cn(0.01, 0.0025, 0.05, 0.0, 0.0),
            SchemeParams::sl_cn(1.0, 1.0, 0.05, 25.0, 40.0),
            SchemeParams::first_order(1e-3, 1.0, 0.05, 20.0),
        ];
        for params in all {
            let op = StepOperator::build(params, &b).unwrap();
            let phi = random_field(&b, 1, 0.0);
            let mu = random_field(&b, 2, 0.0);
            let (b1, b2) = op.apply(&phi, &mu);
            let sol = op.solve(&b1, &b2).unwrap();
            let err = (sol.phi.coeffs() - phi.coeffs())
                .amax()
                .max((sol.mu.coeffs() - mu.coeffs()).amax());
            assert!(err <= 1e-10, "{params:?}: {err}");
            assert!(sol.residual <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn unstabilized_cn_blocks() {
        let b = basis(6);
        let p = SchemeParams::sl_cn(0.1, 0.5, 0.2, 0.0, 0.0);
        let op = StepOperator::build(p, &b).unwrap();
        assert_eq!((op.alpha, op.kappa, op.beta), (10.0, 0.1, 0.0));
        let p = SchemeParams::sl_bdf2(0.1, 0.5, 0.2, 3.0, 7.0);
        let op = StepOperator::build(p, &b).unwrap();
        assert!((op.alpha - 15.0).abs() < 1e-14);
        assert!((op.kappa - 0.5).abs() < 1e-14);
        assert_eq!(op.beta, 7.0);
    }

    #[test]
    fn constant_mode_row_balances_mass() {
        // φ ≡ c, μ ≡ m: b₁ = α 𝕄 φ has only the (0,0) entry α·4·c.
        let b = basis(8);
        let p = SchemeParams::sl_bdf2(0.02, 0.0025, 0.05, 1.0, 1.0);
        let op = StepOperator::build(p, &b).unwrap();
        let (b1, _) = op.apply(&Field::constant(&b, 0.3), &Field::constant(&b, -2.0));
        assert!((b1[(0, 0)] - 1.5 / 0.02 * 4.0 * 0.3).abs() < 1e-12);
        assert!(b1.iter().skip(1).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_degenerate_params() {
        let b = basis(6);
        let p = SchemeParams::sl_bdf2(0.0, 0.0025, 0.05, 0.0, 0.0);
        assert!(StepOperator::build(p, &b).is_err());
        let p = SchemeParams::sl_bdf2(0.1, 0.0025, 1.5, 0.0, 0.0);
        assert!(StepOperator::build(p, &b).is_err());
        let p = SchemeParams::sl_cn(0.1, 0.0025, 0.05, -1.0, 0.0);
        assert!(StepOperator::build(p, &b).is_err());
        assert!("sl-bdf2".parse::<SchemeKind>().unwrap() == SchemeKind::SlBdf2);
        assert!("nope".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn constants_are_equilibria() {
        let b = basis(12);
        let spec = PotentialSpec::default();
        for scheme in [SchemeKind::SlBdf2, SchemeKind::SlCn, SchemeKind::FirstOrder] {
            let p = SchemeParams {
                s: 20.0,
                ..SchemeParams::sl_bdf2(0.01, 0.0025, 0.05, 1.0, 10.0)
            }
            .with_scheme(scheme);
            let op = StepOperator::build(p, &b).unwrap();
            let c = Field::constant(&b, 0.37);
            let mut state = State::from_bootstrap(c.clone(), c.clone(), 0.01);
            for _ in 0..20 {
                state = op.step(&state, &spec).unwrap().state;
                assert!((state.phi_curr.coeffs() - c.coeffs()).amax() <= 1e-12);
            }
            assert_eq!(state.n, 21);
        }
    }

    #[test]
    fn mean_is_conserved() {
        let b = basis(16);
        let spec = PotentialSpec::default();
        let phi0 = random_field(&b, 5, 0.3);
        for scheme in [SchemeKind::SlBdf2, SchemeKind::SlCn] {
            let p = SchemeParams::sl_bdf2(0.01, 0.0025, 0.05, 1.0, 20.0).with_scheme(scheme);
            let phi1 = bootstrap_first_step(&phi0, &p, 10, &spec).unwrap();
            assert!((phi1.mean_value() - phi0.mean_value()).abs() <= 1e-11);
            let op = StepOperator::build(p, &b).unwrap();
            let mut state = State::from_bootstrap(phi0.clone(), phi1, p.tau);
            for _ in 0..100 {
                state = op.step(&state, &spec).unwrap().state;
                assert!((state.phi_curr.mean_value() - phi0.mean_value()).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn bootstrap_keeps_constants_and_validates() {
        let b = basis(8);
        let spec = PotentialSpec::default();
        let c = Field::constant(&b, -0.2);
        let p = SchemeParams::sl_bdf2(0.1, 1.0, 0.05, 0.0, 0.0);
        let phi1 = bootstrap_first_step(&c, &p, DEFAULT_BOOTSTRAP_SUBSTEPS, &spec).unwrap();
        assert!((phi1.coeffs() - c.coeffs()).amax() < 1e-13);
        assert!(bootstrap_first_step(&c, &p, 0, &spec).is_err());
    }

    #[test]
    fn bootstrap_error_is_second_order_in_tau() {
        // ‖φ¹(τ) - φ(τ)‖₋₁ against a tiny-step first-order reference; the
        // local error of m sub-steps over [0, τ] scales as τ². The printed
        // basis carries a fast transient (time scale ~1e-4) so its
        // asymptotic range starts at much smaller τ.
        use crate::spectral1d::BasisKind;
        use std::f64::consts::PI;
        let spec = PotentialSpec::default();
        for (kind, tau) in [(BasisKind::Neumann, 0.02), (BasisKind::Printed, 1e-5)] {
            let b = Arc::new(Basis1D::assemble_kind(kind, 16).unwrap());
            let phi0 = Field::project(&b, |x, y| {
                0.4 * (PI * x).cos() * (PI * y).cos() + 0.2 * (0.5 * PI * x).sin()
            });
            let err = |tau: f64| {
                let p = SchemeParams::sl_bdf2(tau, 0.0025, 0.1, 0.0, 0.0);
                let phi1 = bootstrap_first_step(&phi0, &p, 10, &spec).unwrap();
                let reference = bootstrap_first_step(&phi0, &p, 4000, &spec).unwrap();
                hminus1_norm(&(&phi1 - &reference).without_mean()).unwrap()
            };
            let ratio = err(2.0 * tau) / err(tau);
            assert!((3.4..=4.6).contains(&ratio), "{kind:?}: ratio {ratio}");
        }
    }

    #[test]
    fn blowup_is_reported() {
        let b = basis(8);
        let p = SchemeParams::sl_cn(0.1, 1.0, 0.05, 0.0, 0.0);
        let op = StepOperator::build(p, &b).unwrap();
        let huge = DMatrix::from_element(8, 8, 1e300);
        assert!(matches!(
            op.solve(&huge, &huge),
            Err(Error::NonFinite { .. })
        ));
    }
}
