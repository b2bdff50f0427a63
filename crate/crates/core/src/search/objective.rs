//! The weighted-orthogonality residual system for N unitaries.
//!
//! Residuals are the real and imaginary parts of `G_ij = Tr(Λ U_i† U_j)` for
//! every pair `i < j` involving at least one free member. The leading
//! `fixed` members are held constant (gauge `U_0 = 1`). Free members are
//! charted as `U_p = B_p exp(i H(θ_p))` with `H` Hermitian, d² real
//! parameters per member.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::lm::LeastSquares;
use crate::linalg::{c, hermitian_basis, hermitian_dim, hermitian_from_params, CMatrix, ExpIH};
use crate::qstate::{weighted_inner_raw, SchmidtVector};

#[derive(Debug, Clone)]
pub struct GramProblem {
    lambda: Vec<f64>,
    d: usize,
    members: usize,
    fixed: usize,
    pairs: Vec<(usize, usize)>,
    basis: Vec<CMatrix>,
}

impl GramProblem {
    pub fn new(state: &SchmidtVector, members: usize, fixed: usize) -> Self {
        let d = state.dim();
        let pairs = (0..members)
            .flat_map(|i| ((i + 1)..members).map(move |j| (i, j)))
            .filter(|&(_, j)| j >= fixed)
            .collect();
        let basis = (0..hermitian_dim(d)).map(|p| hermitian_basis(d, p)).collect();
        Self {
            lambda: state.lambda().to_vec(),
            d,
            members,
            fixed,
            pairs,
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn num_params(&self) -> usize {
        (self.members - self.fixed) * hermitian_dim(self.d)
    }

    pub fn num_residuals(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn residuals_of(&self, us: &[CMatrix]) -> DVector<f64> {
        let mut r = DVector::zeros(self.num_residuals());
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let g = weighted_inner_raw(&self.lambda, &us[i], &us[j]);
            r[2 * k] = g.re;
            r[2 * k + 1] = g.im;
        }
        r
    }

    /// Largest |G_ij| over the residual pairs.
    pub fn max_residual(&self, us: &[CMatrix]) -> f64 {
        let r = self.residuals_of(us);
        (0..self.pairs.len())
            .map(|k| r[2 * k].hypot(r[2 * k + 1]))
            .fold(0.0, f64::max)
    }

    /// Chart centred at `bases`.
    pub fn chart<'a>(&'a self, bases: &'a [CMatrix]) -> ExpChart<'a> {
        assert_eq!(bases.len(), self.members);
        ExpChart {
            problem: self,
            bases,
        }
    }
}

/// `U_p = B_p exp(i H(θ_p))` for free members, `U_p = B_p` for fixed ones.
pub struct ExpChart<'a> {
    problem: &'a GramProblem,
    bases: &'a [CMatrix],
}

impl ExpChart<'_> {
    fn member_params<'p>(&self, params: &'p [f64], p: usize) -> &'p [f64] {
        let k = hermitian_dim(self.problem.d);
        let off = (p - self.problem.fixed) * k;
        &params[off..off + k]
    }

    fn exps(&self, params: &[f64]) -> Vec<Option<ExpIH>> {
        (0..self.problem.members)
            .map(|p| {
                (p >= self.problem.fixed).then(|| {
                    ExpIH::new(&hermitian_from_params(self.problem.d, self.member_params(params, p)))
                })
            })
            .collect()
    }

    fn assemble(&self, exps: &[Option<ExpIH>]) -> Vec<CMatrix> {
        exps.iter()
            .zip(self.bases)
            .map(|(e, b)| match e {
                Some(e) => b * &e.exp,
                None => b.clone(),
            })
            .collect()
    }

    pub fn unitaries(&self, params: &[f64]) -> Vec<CMatrix> {
        self.assemble(&self.exps(params))
    }

    pub fn residuals(&self, params: &[f64]) -> DVector<f64> {
        self.problem.residuals_of(&self.unitaries(params))
    }

    /// `Σ_{pairs} |G_ij|^2`.
    pub fn cost(&self, params: &[f64]) -> f64 {
        self.residuals(params).norm_squared()
    }

    pub fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let problem = self.problem;
        let k = hermitian_dim(problem.d);
        let exps = self.exps(params);
        let us = self.assemble(&exps);
        let mut jac = DMatrix::zeros(problem.num_residuals(), problem.num_params());
        for p in problem.fixed..problem.members {
            let exp = exps[p].as_ref().expect("free member");
            for (q, e) in problem.basis.iter().enumerate() {
                let du = &self.bases[p] * exp.derivative(e);
                let col = (p - problem.fixed) * k + q;
                for (row, &(i, j)) in problem.pairs.iter().enumerate() {
                    let dg: Complex64 = if i == p {
                        weighted_inner_raw(&problem.lambda, &du, &us[j])
                    } else if j == p {
                        weighted_inner_raw(&problem.lambda, &us[i], &du)
                    } else {
                        continue;
                    };
                    jac[(2 * row, col)] = dg.re;
                    jac[(2 * row + 1, col)] = dg.im;
                }
            }
        }
        jac
    }

    /// Analytic gradient of [`ExpChart::cost`], `2 J^T r`.
    pub fn gradient(&self, params: &[f64]) -> DVector<f64> {
        let r = self.residuals(params);
        self.jacobian(params).transpose() * r * 2.0
    }
}

impl LeastSquares for GramProblem {
    type Point = Vec<CMatrix>;

    fn residuals(&self, x: &Vec<CMatrix>) -> DVector<f64> {
        self.residuals_of(x)
    }

    fn jacobian(&self, x: &Vec<CMatrix>) -> DMatrix<f64> {
        self.chart(x).jacobian(&vec![0.0; self.num_params()])
    }

    fn retract(&self, x: &Vec<CMatrix>, step: &DVector<f64>) -> Vec<CMatrix> {
        let k = hermitian_dim(self.d);
        x.iter()
            .enumerate()
            .map(|(p, b)| {
                if p < self.fixed {
                    return b.clone();
                }
                let off = (p - self.fixed) * k;
                let h = hermitian_from_params(self.d, &step.as_slice()[off..off + k]);
                b * ExpIH::new(&h).exp
            })
            .collect()
    }
}

/// Central finite-difference gradient of the chart cost, step `h`.
pub fn finite_difference_gradient(chart: &ExpChart<'_>, params: &[f64], h: f64) -> DVector<f64> {
    let mut g = DVector::zeros(params.len());
    let mut work = params.to_vec();
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + h;
        let plus = chart.cost(&work);
        work[i] = orig - h;
        let minus = chart.cost(&work);
        work[i] = orig;
        g[i] = (plus - minus) / (2.0 * h);
    }
    g
}

/// Identity matrix of dimension `d`, the gauge-fixed first member.
pub fn identity(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}
