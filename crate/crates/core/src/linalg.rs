//! Small dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry magnitude of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// max |U^dagger U - 1| over all entries.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(n, n))
}

/// Number of real parameters of a d x d Hermitian generator.
pub fn hermitian_dim(d: usize) -> usize {
    d * d
}

/// Hermitian basis element `p` of the d^2-dimensional real space:
/// diagonal units first, then for each k < l the symmetric and the
/// antisymmetric (imaginary) off-diagonal pair.
pub fn hermitian_basis(d: usize, p: usize) -> CMatrix {
    let mut e = CMatrix::zeros(d, d);
    if p < d {
        e[(p, p)] = c(1.0, 0.0);
        return e;
    }
    let mut idx = d;
    for k in 0..d {
        for l in (k + 1)..d {
            if idx == p {
                e[(k, l)] = c(1.0, 0.0);
                e[(l, k)] = c(1.0, 0.0);
                return e;
            }
            if idx + 1 == p {
                e[(k, l)] = c(0.0, -1.0);
                e[(l, k)] = c(0.0, 1.0);
                return e;
            }
            idx += 2;
        }
    }
    panic!("hermitian basis index {p} out of range for d = {d}");
}

/// Assembles H = sum_p theta_p E_p.
pub fn hermitian_from_params(d: usize, theta: &[f64]) -> CMatrix {
    assert_eq!(theta.len(), hermitian_dim(d));
    let mut h = CMatrix::zeros(d, d);
    for k in 0..d {
        h[(k, k)] = c(theta[k], 0.0);
    }
    let mut idx = d;
    for k in 0..d {
        for l in (k + 1)..d {
            let z = c(theta[idx], -theta[idx + 1]);
            h[(k, l)] = z;
            h[(l, k)] = z.conj();
            idx += 2;
        }
    }
    h
}

/// Spectral data of exp(iH) for Hermitian H, reused for the Fréchet derivative.
pub struct ExpIH {
    pub vectors: CMatrix,
    pub values: Vec<f64>,
    pub exp: CMatrix,
}

impl ExpIH {
    pub fn new(h: &CMatrix) -> Self {
        let d = h.nrows();
        if h.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            return Self {
                vectors: CMatrix::identity(d, d),
                values: vec![0.0; d],
                exp: CMatrix::identity(d, d),
            };
        }
        let eig = SymmetricEigen::new(h.clone());
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let vectors = eig.eigenvectors;
        let phases = DVector::from_iterator(d, values.iter().map(|w| (I * *w).exp()));
        let exp = &vectors * DMatrix::from_diagonal(&phases) * vectors.adjoint();
        Self { vectors, values, exp }
    }

    /// Directional derivative of H -> exp(iH) along the Hermitian direction `e`
    /// (Daleckii–Krein: V (Phi ∘ V^† E V) V^†).
    pub fn derivative(&self, e: &CMatrix) -> CMatrix {
        let d = self.values.len();
        let rotated = self.vectors.adjoint() * e * &self.vectors;
        let mut scaled = rotated;
        for k in 0..d {
            for l in 0..d {
                scaled[(k, l)] *= divided_difference(self.values[k], self.values[l]);
            }
        }
        &self.vectors * scaled * self.vectors.adjoint()
    }
}

/// (e^{ia} - e^{ib}) / (a - b), continuous at a = b where it equals i e^{ia}.
fn divided_difference(a: f64, b: f64) -> Complex64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (a - b);
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    I * (I * mid).exp() * sinc
}

/// exp(iH) for Hermitian H.
pub fn expm_i_hermitian(h: &CMatrix) -> CMatrix {
    ExpIH::new(h).exp
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            let phase = rjj / n;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Modified Gram–Schmidt on the columns of `m`, in place. Columns listed in
/// `fixed` (a prefix) are assumed orthonormal already and only used for projection.
pub fn gram_schmidt_columns(m: &mut CMatrix, fixed: usize) {
    let (rows, cols) = m.shape();
    for j in fixed..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    proj += m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..rows {
                    let v = m[(i, k)];
                    m[(i, j)] -= proj * v;
                }
            }
        }
        let norm = (0..rows).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..rows {
            m[(i, j)] /= norm;
        }
    }
}

/// Completes orthonormal columns to a unitary by Gram–Schmidt (two passes)
/// on the canonical basis vectors `candidates`, in the given order, skipping
/// any that are numerically in the span of what is already present.
pub fn complete_unitary(columns: &[DVector<Complex64>], d: usize, candidates: &[usize]) -> CMatrix {
    let mut basis: Vec<DVector<Complex64>> = columns.to_vec();
    for &k in candidates {
        if basis.len() == d {
            break;
        }
        let mut v = DVector::<Complex64>::zeros(d);
        v[k] = c(1.0, 0.0);
        for _pass in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / c(norm, 0.0));
        }
    }
    assert_eq!(basis.len(), d, "failed to complete to a unitary basis");
    CMatrix::from_columns(&basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..7 {
            let u = haar_unitary(d, &mut rng);
            assert!(unitarity_deviation(&u) < 1e-12);
        }
    }

    #[test]
    fn hermitian_params_round_trip_through_basis() {
        let d = 4;
        let theta: Vec<f64> = (0..d * d).map(|k| 0.1 * k as f64 - 0.5).collect();
        let h = hermitian_from_params(d, &theta);
        let mut sum = CMatrix::zeros(d, d);
        for (p, t) in theta.iter().enumerate() {
            sum += hermitian_basis(d, p) * c(*t, 0.0);
        }
        assert!(max_abs_diff(&h, &sum) < 1e-14);
        assert!(max_abs_diff(&h, &h.adjoint()) < 1e-15);
    }

    #[test]
    fn exp_derivative_matches_finite_differences() {
        let d = 3;
        let theta: Vec<f64> = (0..d * d).map(|k| (k as f64 * 0.7).sin()).collect();
        let h = hermitian_from_params(d, &theta);
        let exp = ExpIH::new(&h);
        for p in 0..d * d {
            let e = hermitian_basis(d, p);
            let step = c(1e-6, 0.0);
            let plus = expm_i_hermitian(&(&h + &e * step));
            let minus = expm_i_hermitian(&(&h - &e * step));
            let fd = (plus - minus) / c(2e-6, 0.0);
            assert!(max_abs_diff(&fd, &exp.derivative(&e)) < 1e-8);
        }
    }

    #[test]
    fn completion_extends_orthonormal_columns() {
        let d = 5;
        let mut col = DVector::<Complex64>::zeros(d);
        col[0] = c(0.6, 0.0);
        col[3] = c(0.0, 0.8);
        let u = complete_unitary(&[col.clone()], d, &[0, 1, 2, 3, 4]);
        assert!(unitarity_deviation(&u) < 1e-13);
        assert!((u.column(0) - col).norm() < 1e-15);
    }
}
