//! Tensor-product fields on `V_M ⊗ V_M` over `Ω = [-1, 1]²`.
//!
//! A [`Field`] stores the `M x M` coefficient matrix `C` of
//! `u(x, y) = Σ_{k,j} C[k, j] φ_k(x) φ_j(y)`. In this layout the 2-D mass
//! operator is `C ↦ Mₘ C Mₘ` and the 2-D stiffness operator is
//! `C ↦ S C Mₘ + Mₘ C S`, with `Mₘ`, `S` the 1-D matrices.

pub mod snapshot;

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::spectral1d::{Basis1D, NodeSet};

/// Area of `[-1, 1]²`.
pub const DOMAIN_AREA: f64 = 4.0;

/// Relative mean tolerance for the zero-mean precondition of `-Δ⁻¹`.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Field {
    basis: Arc<Basis1D>,
    coeffs: DMatrix<f64>,
}

/// Values on the `P x P` tensor Gauss grid; entry `(i, l)` is `u(x_i, y_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalGrid {
    set: NodeSet,
    values: DMatrix<f64>,
}

impl NodalGrid {
    pub fn new(set: NodeSet, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Shape(format!(
                "nodal grid must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(Self { set, values })
    }

    pub fn set(&self) -> NodeSet {
        self.set
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

impl Field {
    pub fn zeros(basis: &Arc<Basis1D>) -> Self {
        let m = basis.dim();
        Self {
            basis: Arc::clone(basis),
            coeffs: DMatrix::zeros(m, m),
        }
    }

    pub fn constant(basis: &Arc<Basis1D>, value: f64) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[(0, 0)] = value;
        f
    }

    pub fn from_coeffs(basis: &Arc<Basis1D>, coeffs: DMatrix<f64>) -> Result<Self> {
        let m = basis.dim();
        if coeffs.shape() != (m, m) {
            return Err(Error::Shape(format!(
                "expected {m}x{m} coefficients, got {:?}",
                coeffs.shape()
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { max_abs: f64::NAN });
        }
        Ok(Self {
            basis: Arc::clone(basis),
            coeffs,
        })
    }

    /// Builds a field without validating finiteness; callers guarantee shape.
    pub(crate) fn from_raw(basis: &Arc<Basis1D>, coeffs: DMatrix<f64>) -> Self {
        debug_assert_eq!(coeffs.shape(), (basis.dim(), basis.dim()));
        Self {
            basis: Arc::clone(basis),
            coeffs,
        }
    }

    /// `φ_k(x) φ_j(y)`.
    pub fn basis_product(basis: &Arc<Basis1D>, k: usize, j: usize) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[(k, j)] = 1.0;
        f
    }

    /// Projection of a function given pointwise, via the `2M` grid.
    pub fn project<F: Fn(f64, f64) -> f64>(basis: &Arc<Basis1D>, func: F) -> Self {
        let xs = basis.nodes(NodeSet::Double);
        let values = DMatrix::from_fn(xs.len(), xs.len(), |i, l| func(xs[i], xs[l]));
        let grid = NodalGrid {
            set: NodeSet::Double,
            values,
        };
        Self::from_nodal(basis, &grid).expect("grid built with matching shape")
    }

    pub fn basis(&self) -> &Arc<Basis1D> {
        &self.basis
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> DMatrix<f64> {
        self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }

    pub fn same_basis(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis)
            || (self.basis.dim() == other.basis.dim() && self.basis.kind() == other.basis.kind())
    }

    fn assert_compatible(&self, other: &Field) {
        assert!(
            self.same_basis(other),
            "fields live on different bases ({} vs {})",
            self.dim(),
            other.dim()
        );
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &Field, b: f64) -> Field {
        self.assert_compatible(other);
        Field::from_raw(&self.basis, &self.coeffs * a + &other.coeffs * b)
    }

    pub fn scale(&self, a: f64) -> Field {
        Field::from_raw(&self.basis, &self.coeffs * a)
    }

    pub fn to_nodal(&self, set: NodeSet) -> NodalGrid {
        let values = self.basis.eval_table_t(set) * &self.coeffs * self.basis.eval_table(set);
        NodalGrid { set, values }
    }

    pub fn from_nodal(basis: &Arc<Basis1D>, grid: &NodalGrid) -> Result<Field> {
        let p = basis.num_points(grid.set);
        if grid.values.shape() != (p, p) {
            return Err(Error::Shape(format!(
                "expected {p}x{p} nodal values, got {:?}",
                grid.values.shape()
            )));
        }
        let proj = basis.projector(grid.set);
        Ok(Field::from_raw(
            basis,
            proj * &grid.values * proj.transpose(),
        ))
    }

    /// `(1/|Ω|) ∫ u`; only the `φ_0 ⊗ φ_0` mode carries mean.
    pub fn mean_value(&self) -> f64 {
        self.coeffs[(0, 0)]
    }

    pub fn l2_norm(&self) -> f64 {
        inner_l2(self, self).max(0.0).sqrt()
    }

    /// `‖∇u‖²`.
    pub fn h1_seminorm_sq(&self) -> f64 {
        h1_seminorm_sq(self)
    }

    /// Copy with the mean removed.
    pub fn without_mean(&self) -> Field {
        let mut c = self.coeffs.clone();
        c[(0, 0)] = 0.0;
        Field::from_raw(&self.basis, c)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.lincomb(1.0, rhs, 1.0)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.lincomb(1.0, rhs, -1.0)
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

/// `Mₘ C Mₘ`: the coefficient-space image of the 2-D mass operator.
pub(crate) fn apply_mass(basis: &Basis1D, c: &DMatrix<f64>) -> DMatrix<f64> {
    let m = basis.mass();
    m * c * m
}

/// `S C Mₘ + Mₘ C S`: the 2-D stiffness operator.
pub(crate) fn apply_stiffness(basis: &Basis1D, c: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, s) = (basis.mass(), basis.stiffness());
    s * c * m + m * c * s
}

/// Coordinates in the mass-orthonormal modal basis of a coefficient matrix.
pub(crate) fn to_modal(basis: &Basis1D, c: &DMatrix<f64>) -> DMatrix<f64> {
    let left = basis.modal_left();
    left * c * left.transpose()
}

/// Modal coordinates of the primal solution of `𝕄 x = b`, given `b`.
pub(crate) fn dual_to_modal(basis: &Basis1D, b: &DMatrix<f64>) -> DMatrix<f64> {
    let v = basis.modal_vectors();
    v.transpose() * b * v
}

pub(crate) fn from_modal(basis: &Basis1D, c_hat: &DMatrix<f64>) -> DMatrix<f64> {
    let v = basis.modal_vectors();
    v * c_hat * v.transpose()
}

/// `(u, v)` in `L²(Ω)`.
///
/// # Panics
/// Panics when the fields live on different bases.
pub fn inner_l2(u: &Field, v: &Field) -> f64 {
    u.assert_compatible(v);
    u.coeffs.dot(&apply_mass(&u.basis, &v.coeffs))
}

/// `‖∇u‖²`.
pub fn h1_seminorm_sq(u: &Field) -> f64 {
    u.coeffs.dot(&apply_stiffness(&u.basis, &u.coeffs)).max(0.0)
}

pub fn mean_value(u: &Field) -> f64 {
    u.mean_value()
}

fn check_zero_mean(u: &Field) -> Result<()> {
    let mean = u.mean_value();
    let norm = u.l2_norm();
    if mean.abs() > ZERO_MEAN_TOL * norm {
        return Err(Error::MeanNotZero { mean, norm });
    }
    Ok(())
}

/// Zero-mean `v ∈ V_M ⊗ V_M` with `(∇v, ∇w) = (u, w)` for all `w`.
///
/// The Neumann kernel is the single zero modal eigenvalue; dropping that
/// mode solves the reduced SPD system exactly.
pub fn inv_neumann_laplacian(u: &Field) -> Result<Field> {
    check_zero_mean(u)?;
    Ok(inv_laplacian_unchecked(u))
}

pub(crate) fn inv_laplacian_unchecked(u: &Field) -> Field {
    let basis = &u.basis;
    let lam = basis.modal_values();
    let mut hat = to_modal(basis, &u.coeffs);
    for j in 0..hat.ncols() {
        for i in 0..hat.nrows() {
            let d = lam[i] + lam[j];
            hat[(i, j)] = if i == 0 && j == 0 {
                0.0
            } else {
                hat[(i, j)] / d
            };
        }
    }
    Field::from_raw(basis, from_modal(basis, &hat))
}

/// `‖u‖₋₁² = (u, -Δ⁻¹u)` with the mean mode dropped, no precondition check.
pub(crate) fn hminus1_norm_sq_unchecked(u: &Field) -> f64 {
    let basis = &u.basis;
    let lam = basis.modal_values();
    let hat = to_modal(basis, &u.coeffs);
    let mut acc = 0.0;
    for j in 0..hat.ncols() {
        for i in 0..hat.nrows() {
            if i == 0 && j == 0 {
                continue;
            }
            acc += hat[(i, j)] * hat[(i, j)] / (lam[i] + lam[j]);
        }
    }
    acc
}

/// `‖u‖₋₁ = √(u, -Δ⁻¹u)` for zero-mean `u`.
pub fn hminus1_norm(u: &Field) -> Result<f64> {
    check_zero_mean(u)?;
    Ok(hminus1_norm_sq_unchecked(u).sqrt())
}

/// `(f(a), φ_k φ_j)` integrated with the `2M`-point rule in each direction.
pub(crate) fn load_vector(spec: &PotentialSpec, a: &Field) -> DMatrix<f64> {
    let basis = &a.basis;
    let nodal = a.to_nodal(NodeSet::Double).values.map(|v| spec.deriv(v));
    let w = basis.weights(NodeSet::Double);
    let weighted = DMatrix::from_fn(nodal.nrows(), nodal.ncols(), |i, l| {
        w[i] * w[l] * nodal[(i, l)]
    });
    let e = basis.eval_table(NodeSet::Double);
    e * weighted * e.transpose()
}

/// Dealiased projection of `f(a)` onto `V_M ⊗ V_M`: `f` is sampled on the
/// `2M x 2M` grid and projected back with the same quadrature.
pub fn nonlinear_projection(spec: &PotentialSpec, a: &Field) -> Field {
    let nodal = a.to_nodal(NodeSet::Double).values.map(|v| spec.deriv(v));
    let grid = NodalGrid {
        set: NodeSet::Double,
        values: nodal,
    };
    Field::from_nodal(&a.basis, &grid).expect("grid shape matches basis")
}

/// `∫ F(u)` on the `2M x 2M` grid.
pub(crate) fn bulk_integral(spec: &PotentialSpec, u: &Field) -> f64 {
    let basis = &u.basis;
    let nodal = u.to_nodal(NodeSet::Double);
    let w = basis.weights(NodeSet::Double);
    let mut acc = 0.0;
    for l in 0..nodal.values.ncols() {
        let col: f64 = w
            .iter()
            .zip(nodal.values.column(l).iter())
            .map(|(wi, &v)| wi * spec.value(v))
            .sum();
        acc += w[l] * col;
    }
    acc
}
