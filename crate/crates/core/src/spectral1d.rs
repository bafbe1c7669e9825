//! One-dimensional Legendre-Galerkin machinery on `[-1, 1]`.
//!
//! Every basis here has the form `φ_k = L_k + b_k L_{k+2}` with `b_0 = 0`,
//! so `φ_0 ≡ 1` is decoupled from the rest in both the mass and the
//! stiffness matrix. The default [`BasisKind::Printed`] basis is
//!
//! ```text
//! φ_0 = L_0,  φ_1 = L_1,  φ_k = L_k - L_{k+2}  (k = 2, ..., M-1)
//! ```
//!
//! whose stiffness matrix is `diag(0, 2, 4k + 6)`. Its span is a codimension-2
//! subspace of polynomials of degree `M + 1` cut out by `p(±1) = a_0 ± a_1`
//! (`a_k` the Legendre coefficients), a constraint that is continuous in
//! `H¹`; functions violating it are not recovered as `M` grows.
//! [`BasisKind::Neumann`] uses `b_k = -k(k+1)/((k+2)(k+3))`, i.e.
//! `φ_k'(±1) = 0`, which is dense in `H¹`.
//!
//! Mass and stiffness couple only indices of equal parity, which gives the
//! blocks `{0}`, `{1, 3, ...}` and `{2, 4, ...}` used by the modal
//! decomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Choice of the `b_k` in `φ_k = L_k + b_k L_{k+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `b_0 = b_1 = 0`, `b_k = -1` for `k >= 2`.
    #[default]
    Printed,
    /// `b_0 = 0`, `b_k = -k(k+1)/((k+2)(k+3))`: Neumann-adapted.
    Neumann,
}

impl BasisKind {
    /// `b_k` in `φ_k = L_k + b_k L_{k+2}`.
    pub fn tail_coeff(self, k: usize) -> f64 {
        match (self, k) {
            (_, 0) | (BasisKind::Printed, 1) => 0.0,
            (BasisKind::Printed, _) => -1.0,
            (BasisKind::Neumann, _) => {
                let k = k as f64;
                -(k * (k + 1.0)) / ((k + 2.0) * (k + 3.0))
            }
        }
    }
}

/// Which Gauss rule a nodal array lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeSet {
    /// `M` Gauss-Legendre points per direction.
    Base,
    /// `2M` points per direction (dealiasing grid).
    Double,
}

/// `L_0(x), ..., L_max_degree(x)` by the three-term recurrence.
pub fn legendre_values(max_degree: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.abs() <= 1.0 + 1e-12) {
        return Err(Error::Domain { x });
    }
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree >= 1 {
        out.push(x);
    }
    for k in 1..max_degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    Ok(out)
}

/// `(L_n(x), L_n'(x))` for `n >= 1`, `|x| < 1`.
fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss-Legendre nodes (ascending) and weights with `n` points.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature needs n >= 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    // Roots come in ± pairs; compute the non-negative half.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNotConverged { n, index: i });
        }
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    Ok((nodes, weights))
}

fn legendre_norm_sq(k: usize) -> f64 {
    2.0 / (2.0 * k as f64 + 1.0)
}

/// `φ_k` evaluated at every point of `xs`, as an `M x xs.len()` table.
fn basis_table(kind: BasisKind, m: usize, xs: &[f64]) -> Result<DMatrix<f64>> {
    let mut table = DMatrix::zeros(m, xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let l = legendre_values(m + 1, x)?;
        for k in 0..m {
            let b = kind.tail_coeff(k);
            table[(k, i)] = if b == 0.0 { l[k] } else { l[k] + b * l[k + 2] };
        }
    }
    Ok(table)
}

/// `(L_j', L_k') = min(j,k)(min(j,k)+1)` when `j + k` is even, else 0.
fn legendre_deriv_gram(j: usize, k: usize) -> f64 {
    if (j + k) % 2 == 1 {
        return 0.0;
    }
    let n = j.min(k) as f64;
    n * (n + 1.0)
}

fn assemble_matrices(kind: BasisKind, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let terms = |k: usize| -> Vec<(usize, f64)> {
        let b = kind.tail_coeff(k);
        if b == 0.0 {
            vec![(k, 1.0)]
        } else {
            vec![(k, 1.0), (k + 2, b)]
        }
    };
    let mut mass = DMatrix::zeros(m, m);
    let mut stiffness = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            if (j + k) % 2 == 1 {
                continue;
            }
            let (tj, tk) = (terms(j), terms(k));
            let mut mjk = 0.0;
            let mut sjk = 0.0;
            for &(p, cp) in &tj {
                for &(q, cq) in &tk {
                    if p == q {
                        mjk += cp * cq * legendre_norm_sq(p);
                    }
                    sjk += cp * cq * legendre_deriv_gram(p, q);
                }
            }
            mass[(j, k)] = mjk;
            mass[(k, j)] = mjk;
            stiffness[(j, k)] = sjk;
            stiffness[(k, j)] = sjk;
        }
    }
    (mass, stiffness)
}

/// Legendre-Galerkin basis of dimension `M` with its quadrature rules,
/// evaluation tables, matrices and modal decomposition.
///
/// Immutable after assembly; share it through an `Arc`.
#[derive(Debug, Clone)]
pub struct Basis1D {
    kind: BasisKind,
    m: usize,
    nodes_m: Vec<f64>,
    weights_m: Vec<f64>,
    nodes_2m: Vec<f64>,
    weights_2m: Vec<f64>,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    eval_m: DMatrix<f64>,
    eval_2m: DMatrix<f64>,
    eval_m_t: DMatrix<f64>,
    eval_2m_t: DMatrix<f64>,
    // Coefficients from nodal values: c = proj * u.
    proj_m: DMatrix<f64>,
    proj_2m: DMatrix<f64>,
    // Generalized eigenpairs: stiffness V = mass V diag(λ), Vᵀ mass V = I.
    modal_vectors: DMatrix<f64>,
    modal_values: DVector<f64>,
    modal_left: DMatrix<f64>,
}

impl Basis1D {
    /// Assemble the default basis of dimension `m` (`m >= 4`).
    pub fn assemble(m: usize) -> Result<Self> {
        Self::assemble_kind(BasisKind::Printed, m)
    }

    pub fn assemble_kind(kind: BasisKind, m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidParameter(format!(
                "basis dimension must be >= 4, got {m}"
            )));
        }
        let (nodes_m, weights_m) = gauss_legendre(m)?;
        let (nodes_2m, weights_2m) = gauss_legendre(2 * m)?;

        let (mass, stiffness) = assemble_matrices(kind, m);
        let eval_m = basis_table(kind, m, &nodes_m)?;
        let eval_2m = basis_table(kind, m, &nodes_2m)?;

        let proj_m = eval_m
            .transpose()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("basis interpolation matrix".into()))?;
        let mass_chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("mass matrix not SPD".into()))?;
        let weighted = DMatrix::from_fn(m, 2 * m, |k, i| eval_2m[(k, i)] * weights_2m[i]);
        let proj_2m = mass_chol.solve(&weighted);

        let (modal_vectors, modal_values) = modal_decomposition(&mass, &stiffness)?;
        let modal_left = modal_vectors.transpose() * &mass;

        Ok(Self {
            kind,
            m,
            eval_m_t: eval_m.transpose(),
            eval_2m_t: eval_2m.transpose(),
            nodes_m,
            weights_m,
            nodes_2m,
            weights_2m,
            mass,
            stiffness,
            eval_m,
            eval_2m,
            proj_m,
            proj_2m,
            modal_vectors,
            modal_values,
            modal_left,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn nodes(&self, set: NodeSet) -> &[f64] {
        match set {
            NodeSet::Base => &self.nodes_m,
            NodeSet::Double => &self.nodes_2m,
        }
    }

    pub fn weights(&self, set: NodeSet) -> &[f64] {
        match set {
            NodeSet::Base => &self.weights_m,
            NodeSet::Double => &self.weights_2m,
        }
    }

    pub fn num_points(&self, set: NodeSet) -> usize {
        match set {
            NodeSet::Base => self.m,
            NodeSet::Double => 2 * self.m,
        }
    }

    /// `(φ_j, φ_k)`.
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// `(φ_j', φ_k')`.
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// `M x P` table with entry `(k, i) = φ_k(x_i)`.
    pub fn eval_table(&self, set: NodeSet) -> &DMatrix<f64> {
        match set {
            NodeSet::Base => &self.eval_m,
            NodeSet::Double => &self.eval_2m,
        }
    }

    pub(crate) fn eval_table_t(&self, set: NodeSet) -> &DMatrix<f64> {
        match set {
            NodeSet::Base => &self.eval_m_t,
            NodeSet::Double => &self.eval_2m_t,
        }
    }

    /// `M x P` matrix mapping nodal values to coefficients.
    ///
    /// On the `2M` grid this is the exact `L²` projection (the quadrature
    /// integrates every product `φ_j φ_k` exactly). On the `M` grid the
    /// discrete least-squares problem is square and reduces to
    /// interpolation.
    pub(crate) fn projector(&self, set: NodeSet) -> &DMatrix<f64> {
        match set {
            NodeSet::Base => &self.proj_m,
            NodeSet::Double => &self.proj_2m,
        }
    }

    /// Columns `v_k` with `stiffness v_k = λ_k mass v_k`, mass-orthonormal.
    /// Column 0 is the constant mode with `λ_0 = 0` exactly.
    pub fn modal_vectors(&self) -> &DMatrix<f64> {
        &self.modal_vectors
    }

    pub fn modal_values(&self) -> &DVector<f64> {
        &self.modal_values
    }

    /// `Vᵀ mass`, the inverse of [`Self::modal_vectors`].
    pub fn modal_left(&self) -> &DMatrix<f64> {
        &self.modal_left
    }

    fn check_len(&self, len: usize, expect: usize, what: &str) -> Result<()> {
        if len != expect {
            return Err(Error::Shape(format!(
                "{what}: expected {expect} values, got {len}"
            )));
        }
        Ok(())
    }

    /// Coefficients of the discrete `L²` projection of nodal values.
    pub fn forward_transform_1d(&self, nodal: &[f64], set: NodeSet) -> Result<Vec<f64>> {
        self.check_len(nodal.len(), self.num_points(set), "nodal values")?;
        let u = DVector::from_column_slice(nodal);
        Ok((self.projector(set) * u).as_slice().to_vec())
    }

    /// Pointwise evaluation `Σ c_k φ_k(x_i)`.
    pub fn backward_transform_1d(&self, coeffs: &[f64], set: NodeSet) -> Result<Vec<f64>> {
        self.check_len(coeffs.len(), self.m, "coefficients")?;
        let c = DVector::from_column_slice(coeffs);
        Ok((self.eval_table_t(set) * c).as_slice().to_vec())
    }
}

/// Solve `stiffness v = λ mass v` block by block.
fn modal_decomposition(
    mass: &DMatrix<f64>,
    stiffness: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = mass.nrows();
    let mut vectors = DMatrix::zeros(m, m);
    let mut values = DVector::zeros(m);

    vectors[(0, 0)] = 1.0 / mass[(0, 0)].sqrt();

    let mut pairs: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(m - 1);
    for start in [1usize, 2] {
        let idx: Vec<usize> = (start..m).step_by(2).collect();
        if idx.is_empty() {
            continue;
        }
        let n = idx.len();
        let mc = DMatrix::from_fn(n, n, |a, b| mass[(idx[a], idx[b])]);
        let chol = mc
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("mass block not SPD".into()))?;
        let l = chol.l();
        // C = L⁻¹ S L⁻ᵀ
        let sc = DMatrix::from_fn(n, n, |a, b| stiffness[(idx[a], idx[b])]);
        let linv_s = l
            .solve_lower_triangular(&sc)
            .ok_or_else(|| Error::SingularSystem("mass factor".into()))?;
        let c = l
            .solve_lower_triangular(&linv_s.transpose())
            .ok_or_else(|| Error::SingularSystem("mass factor".into()))?;
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let v = l
            .transpose()
            .solve_upper_triangular(&eig.eigenvectors)
            .ok_or_else(|| Error::SingularSystem("mass factor".into()))?;
        for j in 0..n {
            let column: Vec<(usize, f64)> = (0..n).map(|a| (idx[a], v[(a, j)])).collect();
            pairs.push((eig.eigenvalues[j], column));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (slot, (lambda, column)) in pairs.into_iter().enumerate() {
        let col = slot + 1;
        values[col] = lambda;
        for (row, val) in column {
            vectors[(row, col)] = val;
        }
    }
    Ok((vectors, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Legendre polynomials in monomial form, k <= 5.
    fn legendre_monomial(k: usize, x: f64) -> f64 {
        match k {
            0 => 1.0,
            1 => x,
            2 => (3.0 * x * x - 1.0) / 2.0,
            3 => (5.0 * x.powi(3) - 3.0 * x) / 2.0,
            4 => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
            5 => (63.0 * x.powi(5) - 70.0 * x.powi(3) + 15.0 * x) / 8.0,
            _ => unreachable!(),
        }
    }

    fn tail(kind: BasisKind, k: usize) -> f64 {
        match kind {
            BasisKind::Printed => {
                if k >= 2 {
                    -1.0
                } else {
                    0.0
                }
            }
            BasisKind::Neumann => {
                if k == 0 {
                    0.0
                } else {
                    let k = k as f64;
                    -(k * (k + 1.0)) / ((k + 2.0) * (k + 3.0))
                }
            }
        }
    }

    /// Brute-force matrix assembly by quadrature, differentiating `L_k`
    /// via `(1 - x²) L_k' = k (L_{k-1} - x L_k)`.
    fn quadrature_matrices(kind: BasisKind, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let (xs, ws) = gauss_legendre(2 * m + 4).unwrap();
        let mut mass = DMatrix::zeros(m, m);
        let mut stiff = DMatrix::zeros(m, m);
        for (&x, &w) in xs.iter().zip(&ws) {
            let l = legendre_values(m + 2, x).unwrap();
            let dl: Vec<f64> = (0..=m + 1)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        k as f64 * (l[k - 1] - x * l[k]) / (1.0 - x * x)
                    }
                })
                .collect();
            let phi: Vec<f64> = (0..m).map(|k| l[k] + tail(kind, k) * l[k + 2]).collect();
            let dphi: Vec<f64> = (0..m).map(|k| dl[k] + tail(kind, k) * dl[k + 2]).collect();
            for j in 0..m {
                for k in 0..m {
                    mass[(j, k)] += w * phi[j] * phi[k];
                    stiff[(j, k)] += w * dphi[j] * dphi[k];
                }
            }
        }
        (mass, stiff)
    }

    #[test]
    fn legendre_value_examples() {
        assert_eq!(legendre_values(2, 1.0).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(legendre_values(2, 0.0).unwrap(), vec![1.0, 0.0, -0.5]);
        let v = legendre_values(5, 0.3).unwrap();
        for (k, &vk) in v.iter().enumerate() {
            assert!((vk - legendre_monomial(k, 0.3)).abs() < 1e-15);
        }
        assert!(matches!(legendre_values(3, 1.1), Err(Error::Domain { .. })));
        assert!(legendre_values(3, f64::NAN).is_err());
        assert_eq!(legendre_values(0, 0.7).unwrap(), vec![1.0]);
    }

    #[test]
    fn legendre_values_bounded() {
        for i in 0..=200 {
            let x = -1.0 + i as f64 / 100.0;
            for v in legendre_values(40, x).unwrap() {
                assert!(v.abs() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn gauss_small_rules() {
        let (x, w) = gauss_legendre(1).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn gauss_rule_properties() {
        for n in [1, 2, 3, 7, 16, 33, 128, 256] {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(x.iter().all(|&xi| xi > -1.0 && xi < 1.0));
            assert!(w.iter().all(|&wi| wi > 0.0));
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
        let (x, w) = gauss_legendre(16).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn stiffness_diagonal_examples() {
        let b = Basis1D::assemble(4).unwrap();
        let diag: Vec<f64> = (0..4).map(|k| b.stiffness()[(k, k)]).collect();
        assert_eq!(diag, vec![0.0, 2.0, 14.0, 18.0]);
        assert!((b.mass()[(2, 2)] - (2.0 / 5.0 + 2.0 / 9.0)).abs() < 1e-15);
        let b6 = Basis1D::assemble(6).unwrap();
        assert!((b6.mass()[(2, 4)] + 2.0 / 9.0).abs() < 1e-15);
        assert!(Basis1D::assemble(3).is_err());
    }

    #[test]
    fn analytic_matrices_match_quadrature() {
        for kind in [BasisKind::Printed, BasisKind::Neumann] {
            for m in [4, 5, 9, 16, 40] {
                let b = Basis1D::assemble_kind(kind, m).unwrap();
                let (mq, sq) = quadrature_matrices(kind, m);
                let scale = sq.amax();
                for j in 0..m {
                    for k in 0..m {
                        assert!(
                            (b.mass()[(j, k)] - mq[(j, k)]).abs() < 1e-12,
                            "mass {j},{k}"
                        );
                        assert!(
                            (b.stiffness()[(j, k)] - sq[(j, k)]).abs() < 1e-12 * scale,
                            "{kind:?} stiff {j},{k}"
                        );
                        let coupled = j == k || (j >= 1 && k >= 1 && j.abs_diff(k) == 2);
                        if !coupled {
                            assert_eq!(b.mass()[(j, k)], 0.0);
                        }
                        if j != k {
                            assert!(b.stiffness()[(j, k)].abs() <= 1e-13 * scale);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn printed_basis_matrices_are_exactly_structured() {
        let m = 32;
        let b = Basis1D::assemble(m).unwrap();
        for j in 0..m {
            for k in 0..m {
                let expect = match (j, k) {
                    _ if j != k => 0.0,
                    (0, _) => 0.0,
                    (1, _) => 2.0,
                    _ => 4.0 * k as f64 + 6.0,
                };
                assert_eq!(b.stiffness()[(j, k)], expect);
                let coupled = j == k || (j >= 2 && k >= 2 && j.abs_diff(k) == 2);
                if !coupled {
                    assert_eq!(b.mass()[(j, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn neumann_basis_has_zero_end_slopes() {
        let b = Basis1D::assemble_kind(BasisKind::Neumann, 12).unwrap();
        for k in 0..12 {
            let s = 4.0 * k as f64 + 6.0;
            let kf = k as f64;
            let expect = if k == 0 {
                0.0
            } else {
                kf * (kf + 1.0) * s / ((kf + 2.0) * (kf + 3.0))
            };
            assert!((b.stiffness()[(k, k)] - expect).abs() < 1e-12 * expect.max(1.0));
            // L_n'(1) = n(n+1)/2
            let slope =
                kf * (kf + 1.0) / 2.0 + tail(BasisKind::Neumann, k) * (kf + 2.0) * (kf + 3.0) / 2.0;
            assert!(slope.abs() < 1e-12);
        }
    }

    #[test]
    fn mass_is_spd_and_stiffness_kernel_is_constant() {
        let b = Basis1D::assemble(24).unwrap();
        let eig = SymmetricEigen::new(b.mass().clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        let s = b.stiffness();
        assert_eq!(s[(0, 0)], 0.0);
        assert!((1..24).all(|k| s[(k, k)] > 0.0));
    }

    #[test]
    fn modal_decomposition_diagonalizes() {
        for (kind, m) in [
            (BasisKind::Printed, 4),
            (BasisKind::Printed, 17),
            (BasisKind::Printed, 64),
            (BasisKind::Neumann, 33),
            (BasisKind::Neumann, 128),
        ] {
            let b = Basis1D::assemble_kind(kind, m).unwrap();
            let v = b.modal_vectors();
            let vmv = v.transpose() * b.mass() * v;
            let vsv = v.transpose() * b.stiffness() * v;
            let scale = b.modal_values().max();
            for i in 0..m {
                for j in 0..m {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((vmv[(i, j)] - id).abs() < 1e-12, "m={m} VMV {i},{j}");
                    let lam = if i == j { b.modal_values()[i] } else { 0.0 };
                    assert!(
                        (vsv[(i, j)] - lam).abs() < 1e-12 * scale,
                        "m={m} VSV {i},{j}"
                    );
                }
            }
            assert_eq!(b.modal_values()[0], 0.0);
            assert!((1..m).all(|k| v[(0, k)] == 0.0 && v[(k, 0)] == 0.0));
            let left_inv = b.modal_left() * v;
            assert!((left_inv - DMatrix::identity(m, m)).amax() < 1e-12);
        }
    }

    #[test]
    fn quadrature_exact_for_random_polynomials() {
        use proptest::prelude::*;
        use proptest::test_runner::TestRunner;
        let mut runner = TestRunner::default();
        runner
            .run(
                &(1usize..40, prop::collection::vec(-1.0f64..1.0, 80)),
                |(n, raw)| {
                    let deg = 2 * n - 1;
                    let a = &raw[..=deg.min(79)];
                    let (x, w) = gauss_legendre(n).unwrap();
                    let quad: f64 = x
                        .iter()
                        .zip(&w)
                        .map(|(&xi, &wi)| wi * a.iter().rev().fold(0.0, |acc, &c| acc * xi + c))
                        .sum();
                    let exact: f64 = a
                        .iter()
                        .enumerate()
                        .map(|(p, &c)| {
                            if p % 2 == 0 {
                                2.0 * c / (p as f64 + 1.0)
                            } else {
                                0.0
                            }
                        })
                        .sum();
                    let scale: f64 = a.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
                    prop_assert!((quad - exact).abs() <= 1e-12 * scale);
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn transform_examples() {
        let b = Basis1D::assemble(8).unwrap();
        for set in [NodeSet::Base, NodeSet::Double] {
            let phi3: Vec<f64> = (0..b.num_points(set))
                .map(|i| b.eval_table(set)[(3, i)])
                .collect();
            let c = b.forward_transform_1d(&phi3, set).unwrap();
            for (k, ck) in c.iter().enumerate() {
                let e = if k == 3 { 1.0 } else { 0.0 };
                assert!((ck - e).abs() < 1e-13, "{set:?} k={k} {ck}");
            }
            let ones = vec![1.0; b.num_points(set)];
            let c = b.forward_transform_1d(&ones, set).unwrap();
            assert!((c[0] - 1.0).abs() < 1e-13 && c[1..].iter().all(|v| v.abs() < 1e-13));

            let mut e0 = vec![0.0; 8];
            e0[0] = 1.0;
            let back = b.backward_transform_1d(&e0, set).unwrap();
            assert!(back.iter().all(|&v| (v - 1.0).abs() < 1e-15));
            let mut e1 = vec![0.0; 8];
            e1[1] = 1.0;
            let back = b.backward_transform_1d(&e1, set).unwrap();
            for (v, x) in back.iter().zip(b.nodes(set)) {
                assert!((v - x).abs() < 1e-15);
            }
        }
        assert!(b.forward_transform_1d(&[1.0; 5], NodeSet::Base).is_err());
        assert!(b.backward_transform_1d(&[1.0; 5], NodeSet::Double).is_err());
    }

    #[test]
    fn quintic_round_trip_on_double_grid() {
        // x⁵ - (10/7) x³ satisfies p(±1) = a_0 ± a_1 and so lies in the
        // printed span; x⁵ alone does not.
        let b = Basis1D::assemble(8).unwrap();
        let xs = b.nodes(NodeSet::Double);
        let member: Vec<f64> = xs
            .iter()
            .map(|x| x.powi(5) - 10.0 / 7.0 * x.powi(3))
            .collect();
        let c = b.forward_transform_1d(&member, NodeSet::Double).unwrap();
        let back = b.backward_transform_1d(&c, NodeSet::Double).unwrap();
        for (u, v) in back.iter().zip(&member) {
            assert!((u - v).abs() < 1e-13);
        }

        let x5: Vec<f64> = xs.iter().map(|x| x.powi(5)).collect();
        let c = b.forward_transform_1d(&x5, NodeSet::Double).unwrap();
        let back = b.backward_transform_1d(&c, NodeSet::Double).unwrap();
        let err = back
            .iter()
            .zip(&x5)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(err > 1e-3, "x⁵ unexpectedly representable: {err}");
    }

    #[test]
    fn round_trip_identity_on_coefficients() {
        for kind in [BasisKind::Printed, BasisKind::Neumann] {
            let b = Basis1D::assemble_kind(kind, 32).unwrap();
            let mut state = 12345u64;
            for _ in 0..20 {
                let c: Vec<f64> = (0..32)
                    .map(|_| {
                        state = state
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(1442695040888963407);
                        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                    })
                    .collect();
                for set in [NodeSet::Base, NodeSet::Double] {
                    let nodal = b.backward_transform_1d(&c, set).unwrap();
                    let back = b.forward_transform_1d(&nodal, set).unwrap();
                    let err = c
                        .iter()
                        .zip(&back)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    assert!(err < 1e-13, "{set:?}: {err}");
                }
            }
        }
    }
}
