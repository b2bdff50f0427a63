//! Encode a letter with a local unitary, measure the pair in the basis of
//! encoded states, decode.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qstate::{OperatorSet, SchmidtVector};

/// Two-qudit pure state; amplitude of `|a⟩_A |b⟩_B` at index `a·d + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteVector {
    d: usize,
    amplitudes: DVector<Complex64>,
}

impl BipartiteVector {
    pub fn new(d: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != d * d {
            return Err(Error::Dimension(format!("expected {} amplitudes, got {}", d * d, amplitudes.len())));
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization { sum: norm });
        }
        Ok(Self { d, amplitudes })
    }

    /// `Σ_i √λ_i |i⟩|i⟩`.
    pub fn from_state(state: &SchmidtVector) -> Self {
        let d = state.dim();
        let mut amplitudes = DVector::zeros(d * d);
        for (i, &l) in state.lambda().iter().enumerate() {
            amplitudes[i * d + i] = Complex64::new(l.sqrt(), 0.0);
        }
        Self { d, amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn amplitude(&self, a: usize, b: usize) -> Complex64 {
        self.amplitudes[a * self.d + b]
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &BipartiteVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// `(U_letter ⊗ 1)|ψ⟩`: amplitude `(a, b)` is `U[a, b] √λ_b`.
pub fn encode(state: &SchmidtVector, set: &OperatorSet, letter: usize) -> Result<BipartiteVector> {
    let u = set
        .unitaries()
        .get(letter)
        .ok_or(Error::LetterOutOfRange { letter, size: set.len() })?;
    let d = state.dim();
    if u.dim() != d {
        return Err(Error::Dimension(format!("state has d = {d}, operators have d = {}", u.dim())));
    }
    let m = u.matrix();
    let amplitudes = DVector::from_fn(d * d, |idx, _| {
        let (a, b) = (idx / d, idx % d);
        m[(a, b)] * state.lambda()[b].sqrt()
    });
    Ok(BipartiteVector { d, amplitudes })
}

/// The N encoded states, one per letter.
pub fn measurement_basis(state: &SchmidtVector, set: &OperatorSet) -> Result<Vec<BipartiteVector>> {
    (0..set.len()).map(|letter| encode(state, set, letter)).collect()
}

/// Projective measurement onto the span of the encoded states.
///
/// The projectors are the symmetric orthonormalization `B (B†B)^{-1/2}` of the
/// basis vectors, which is the basis itself when it is already orthonormal.
/// Weight outside the span is reported as erasure.
#[derive(Debug, Clone)]
pub struct Measurement {
    projectors: Vec<DVector<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    /// `None` is the erasure symbol.
    pub letter: Option<usize>,
    pub probability: f64,
    pub probabilities: Vec<f64>,
    pub erasure: f64,
}

impl Measurement {
    pub fn new(basis: &[BipartiteVector]) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::DegenerateBasis("empty basis".into()));
        }
        let n = basis.len();
        let gram = DMatrix::from_fn(n, n, |i, j| basis[i].inner(&basis[j]));
        let orthonormal = (0..n).all(|i| {
            (0..n).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (gram[(i, j)] - Complex64::new(target, 0.0)).norm() <= 1e-12
            })
        });
        if orthonormal {
            return Ok(Self { projectors: basis.iter().map(|b| b.amplitudes.clone()).collect() });
        }
        let eig = SymmetricEigen::new(gram);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 1e-10) {
            return Err(Error::DegenerateBasis(format!(
                "encoded states are linearly dependent (smallest Gram eigenvalue {min:e})"
            )));
        }
        let inv_sqrt = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&e| Complex64::new(e.powf(-0.5), 0.0)));
        let s = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.adjoint();
        let b = DMatrix::from_columns(&basis.iter().map(|v| v.amplitudes.clone()).collect::<Vec<_>>());
        let ortho = b * s;
        Ok(Self { projectors: ortho.column_iter().map(|c| c.into_owned()).collect() })
    }

    pub fn probabilities(&self, received: &BipartiteVector) -> Vec<f64> {
        self.projectors.iter().map(|p| p.dotc(&received.amplitudes).norm_sqr()).collect()
    }

    pub fn measure(&self, received: &BipartiteVector) -> Outcome {
        let probabilities = self.probabilities(received);
        let total: f64 = probabilities.iter().sum();
        let erasure = (received.amplitudes.norm_squared() - total).max(0.0);
        let max = probabilities.iter().copied().fold(0.0, f64::max);
        // lowest index among (numerically) tied maxima
        let best = probabilities.iter().position(|&p| p >= max - 1e-12).unwrap_or(0);
        let letter = (probabilities[best] >= erasure).then_some(best);
        Outcome { letter, probability: probabilities[best], probabilities, erasure }
    }
}

/// Most likely letter and its probability.
pub fn decode(received: &BipartiteVector, basis: &[BipartiteVector]) -> Result<(Option<usize>, f64)> {
    let outcome = Measurement::new(basis)?.measure(received);
    Ok((outcome.letter, outcome.probability))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub message: Vec<usize>,
    pub decoded: Vec<Option<usize>>,
    /// Probability of decoding each sent letter correctly.
    pub success_probability: Vec<f64>,
    /// `log_d N` dits per transmitted particle.
    pub dits_per_use: f64,
    /// Per-letter count of correct decodes out of `shots`, when sampling.
    pub shot_successes: Option<Vec<usize>>,
    pub shots: Option<usize>,
}

impl SimulationReport {
    /// Decoded equals message and every letter decodes with certainty.
    pub fn is_perfect(&self) -> bool {
        self.decoded.iter().zip(&self.message).all(|(d, m)| *d == Some(*m))
            && self.success_probability.iter().all(|&p| p >= 1.0 - 1e-9)
    }
}

/// Sends `message` letter by letter. With `shots`, also samples that many
/// outcomes per letter from the Born probabilities.
pub fn simulate(
    state: &SchmidtVector,
    set: &OperatorSet,
    message: &[usize],
    shots: Option<usize>,
    seed: u64,
) -> Result<SimulationReport> {
    let basis = measurement_basis(state, set)?;
    let measurement = Measurement::new(&basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut decoded = Vec::with_capacity(message.len());
    let mut success_probability = Vec::with_capacity(message.len());
    let mut shot_successes = shots.map(|_| Vec::with_capacity(message.len()));
    for &letter in message {
        let received = encode(state, set, letter)?;
        let outcome = measurement.measure(&received);
        success_probability.push(outcome.probabilities[letter]);
        if let (Some(k), Some(counts)) = (shots, shot_successes.as_mut()) {
            let hits = (0..k)
                .filter(|_| sample(&outcome.probabilities, &mut rng) == Some(letter))
                .count();
            counts.push(hits);
        }
        decoded.push(outcome.letter);
    }
    let d = state.dim() as f64;
    Ok(SimulationReport {
        message: message.to_vec(),
        decoded,
        success_probability,
        dits_per_use: (set.len() as f64).ln() / d.ln(),
        shot_successes,
        shots,
    })
}

fn sample(probabilities: &[f64], rng: &mut ChaCha8Rng) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(k);
        }
    }
    None
}
