//! Schmidt-form bipartite states and the weighted trace inner product
//! `Tr(Λ U† V)` that defines orthogonality of local unitaries.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{unitarity_deviation, CMatrix};

pub const UNITARITY_TOL: f64 = 1e-10;
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

const NEGATIVE_CLAMP: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Schmidt weights of a pure bipartite state, sorted descending and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtVector {
    lambda: Vec<f64>,
}

impl SchmidtVector {
    /// Validates `coeffs` as the Schmidt weights of a `d`-level state.
    ///
    /// Entries down to -1e-12 are clamped to zero; the vector is not
    /// renormalized and is rejected if its sum is off by more than 1e-9.
    pub fn new(coeffs: &[f64], d: usize) -> Result<Self> {
        Self::validate_shape(coeffs, d)?;
        let lambda = Self::clamp(coeffs)?;
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { sum });
        }
        Ok(Self::sorted(lambda))
    }

    /// Like [`SchmidtVector::new`] but divides by the sum first.
    pub fn normalized(coeffs: &[f64], d: usize) -> Result<Self> {
        Self::validate_shape(coeffs, d)?;
        let lambda = Self::clamp(coeffs)?;
        let sum: f64 = lambda.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::Normalization { sum });
        }
        Ok(Self::sorted(lambda.into_iter().map(|x| x / sum).collect()))
    }

    /// The maximally entangled state of two `d`-level systems.
    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(&vec![1.0 / d as f64; d], d)
    }

    /// The two-coefficient state `(lambda0, 1 - lambda0, 0, ..., 0)`.
    pub fn two_coefficient(lambda0: f64, d: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; d];
        coeffs[0] = lambda0;
        if d > 1 {
            coeffs[1] = 1.0 - lambda0;
        }
        Self::new(&coeffs, d)
    }

    fn validate_shape(coeffs: &[f64], d: usize) -> Result<()> {
        if d < 2 {
            return Err(Error::Dimension(format!("d must be at least 2, got {d}")));
        }
        if coeffs.len() != d {
            return Err(Error::Dimension(format!(
                "expected {d} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(())
    }

    fn clamp(coeffs: &[f64]) -> Result<Vec<f64>> {
        coeffs
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if !value.is_finite() || value < -NEGATIVE_CLAMP {
                    Err(Error::NegativeCoefficient { index, value })
                } else {
                    Ok(value.max(0.0))
                }
            })
            .collect()
    }

    fn sorted(mut lambda: Vec<f64>) -> Self {
        // stable: ties keep their input order
        lambda.sort_by(|a, b| b.partial_cmp(a).expect("finite coefficients"));
        Self { lambda }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda[0]
    }

    /// Λ as a dense diagonal matrix.
    pub fn weight_matrix(&self) -> CMatrix {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                Complex64::new(self.lambda[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn is_uniform(&self, tol: f64) -> bool {
        let u = 1.0 / self.dim() as f64;
        self.lambda.iter().all(|x| (x - u).abs() <= tol)
    }
}

/// A d x d complex matrix used as a local operation on Alice's side.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    matrix: CMatrix,
}

impl Unitary {
    /// Wraps `matrix`, rejecting it when `max |U†U - 1| > 1e-10`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation.is_nan() || deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    /// Wraps a square matrix without the unitarity check. Used by readers of
    /// files that may hold corrupted sets; [`is_orthogonal_set`] still checks
    /// unitarity of every member.
    pub fn from_raw(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.deviation() <= tol
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, other: &Unitary) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
        }
    }
}

/// Local unitaries together with the state they are meant to be orthogonal on.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    state: SchmidtVector,
    unitaries: Vec<Unitary>,
    gram_residual: f64,
}

impl OperatorSet {
    pub fn new(state: SchmidtVector, unitaries: Vec<Unitary>) -> Result<Self> {
        let gram_residual = gram_residual(&state, &unitaries)?;
        Ok(Self {
            state,
            unitaries,
            gram_residual,
        })
    }

    pub fn state(&self) -> &SchmidtVector {
        &self.state
    }

    pub fn unitaries(&self) -> &[Unitary] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    pub fn gram_matrix(&self) -> DMatrix<Complex64> {
        gram_matrix(&self.state, &self.unitaries).expect("validated on construction")
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        is_orthogonal_set(&self.state, &self.unitaries, tol).unwrap_or(false)
    }

    /// Keeps the first `n` members.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.state.clone(), self.unitaries[..n.min(self.len())].to_vec())
    }
}

/// Entanglement entropy `-Σ λ log λ`, in units of `log_base` (0·log 0 = 0).
pub fn entropy(state: &SchmidtVector, log_base: f64) -> f64 {
    assert!(log_base > 1.0, "log base must exceed 1");
    let nats: f64 = state
        .lambda()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    nats / log_base.ln()
}

/// `Tr(Λ U† V) = Σ_k λ_k (U†V)_kk`.
pub fn weighted_inner(state: &SchmidtVector, u: &Unitary, v: &Unitary) -> Result<Complex64> {
    let d = state.dim();
    if u.dim() != d || v.dim() != d {
        return Err(Error::Dimension(format!(
            "state has d = {d}, operators have {} and {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(weighted_inner_raw(state.lambda(), u.matrix(), v.matrix()))
}

pub(crate) fn weighted_inner_raw(lambda: &[f64], u: &CMatrix, v: &CMatrix) -> Complex64 {
    let d = lambda.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &w) in lambda.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut col = Complex64::new(0.0, 0.0);
        for a in 0..d {
            col += u[(a, k)].conj() * v[(a, k)];
        }
        acc += col * w;
    }
    acc
}

fn check_members(state: &SchmidtVector, unitaries: &[Unitary]) -> Result<()> {
    if unitaries.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(bad) = unitaries.iter().find(|u| u.dim() != state.dim()) {
        return Err(Error::Dimension(format!(
            "state has d = {}, operator has d = {}",
            state.dim(),
            bad.dim()
        )));
    }
    Ok(())
}

/// The full N x N weighted Gram matrix `G_ij = Tr(Λ U_i† U_j)`.
pub fn gram_matrix(state: &SchmidtVector, unitaries: &[Unitary]) -> Result<DMatrix<Complex64>> {
    check_members(state, unitaries)?;
    let n = unitaries.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        weighted_inner_raw(state.lambda(), unitaries[i].matrix(), unitaries[j].matrix())
    }))
}

/// Largest off-diagonal magnitude `max_{i<j} |Tr(Λ U_i† U_j)|`; zero for a singleton.
pub fn gram_residual(state: &SchmidtVector, unitaries: &[Unitary]) -> Result<f64> {
    check_members(state, unitaries)?;
    let mut worst: f64 = 0.0;
    for i in 0..unitaries.len() {
        for j in (i + 1)..unitaries.len() {
            let g = weighted_inner_raw(state.lambda(), unitaries[i].matrix(), unitaries[j].matrix());
            worst = worst.max(g.norm());
        }
    }
    Ok(worst)
}

/// True iff the Gram residual is within `tol` and every member is unitary to 1e-10.
pub fn is_orthogonal_set(state: &SchmidtVector, unitaries: &[Unitary], tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::BadArguments(format!("tolerance must be positive, got {tol}")));
    }
    let residual = gram_residual(state, unitaries)?;
    Ok(residual <= tol && unitaries.iter().all(|u| u.is_unitary(UNITARITY_TOL)))
}
