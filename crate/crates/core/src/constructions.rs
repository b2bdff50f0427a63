//! Analytic operator-set constructions: Weyl shift/rotate products, phase
//! operators combined with shifts, grouped phase tables and the d+1 family
//! built from a rotation mixing |0⟩ into the unpopulated levels.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, complete_unitary, CMatrix};
use crate::qstate::{OperatorSet, SchmidtVector, Unitary, ORTHOGONALITY_TOL};
use crate::search::config::SearchConfig;
use crate::search::lm::{self, LeastSquares, LmOptions};
use crate::search::multistart::{self, Attempt};

/// Tolerance on `λ0 ≤ 1/N` comparisons so that exact fractions stay on the
/// feasible side of the boundary.
const BOUNDARY_EPS: f64 = 1e-12;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::Dimension(format!("d must be at least 2, got {d}")))
    } else {
        Ok(())
    }
}

/// `X^m` with `X|k⟩ = |k+1 mod d⟩`.
pub fn shift(d: usize, m: usize) -> Result<Unitary> {
    check_dim(d)?;
    if m >= d {
        return Err(Error::Dimension(format!("shift power {m} out of range for d = {d}")));
    }
    let mut u = CMatrix::zeros(d, d);
    for k in 0..d {
        u[((k + m) % d, k)] = c(1.0, 0.0);
    }
    Unitary::new(u)
}

/// `Z^n = diag(e^{2πikn/d})`.
pub fn rotate(d: usize, n: usize) -> Result<Unitary> {
    check_dim(d)?;
    if n >= d {
        return Err(Error::Dimension(format!("rotate power {n} out of range for d = {d}")));
    }
    let diag = DVector::from_fn(d, |k, _| root_of_unity((k * n) % d, d));
    Unitary::new(DMatrix::from_diagonal(&diag))
}

fn root_of_unity(k: usize, d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// All `d²` products `X^m Z^n`, index `m·d + n`, on the uniform state.
pub fn weyl_set(d: usize) -> Result<OperatorSet> {
    let state = SchmidtVector::uniform(d)?;
    product_set(&state, &PhaseTable::weyl(d)?)
}

/// Phases `θ_k^n` of N diagonal operators `Z_n|k⟩ = e^{iθ_k^n}|k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    theta: Vec<Vec<f64>>,
}

impl PhaseTable {
    /// Row 0 must be all zeros.
    pub fn new(theta: Vec<Vec<f64>>) -> Result<Self> {
        let d = theta.first().map(Vec::len).unwrap_or(0);
        if theta.is_empty() || d < 2 || theta.iter().any(|row| row.len() != d) {
            return Err(Error::BadArguments("phase table must be a non-empty N x d array, d >= 2".into()));
        }
        if theta[0].iter().any(|&t| t != 0.0) {
            return Err(Error::BadArguments("row 0 of a phase table must be all zeros".into()));
        }
        Ok(Self { theta })
    }

    /// `θ_k^n = 2πkn/d`, the phases of `rotate(d, n)`.
    pub fn weyl(d: usize) -> Result<Self> {
        check_dim(d)?;
        Self::new(
            (0..d)
                .map(|n| (0..d).map(|k| 2.0 * PI * ((k * n) % d) as f64 / d as f64).collect())
                .collect(),
        )
    }

    pub fn count(&self) -> usize {
        self.theta.len()
    }

    pub fn dim(&self) -> usize {
        self.theta[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn phase_operator(&self, n: usize) -> Unitary {
        let diag = DVector::from_fn(self.dim(), |k, _| Complex64::from_polar(1.0, self.theta[n][k]));
        Unitary::new(DMatrix::from_diagonal(&diag)).expect("diagonal phases are unitary")
    }

    /// `max_{m<n} |Σ_i λ_i e^{i(θ_i^m - θ_i^n)}|`.
    pub fn residual(&self, state: &SchmidtVector) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..self.count() {
            for n in (m + 1)..self.count() {
                worst = worst.max(pair_sum(state.lambda(), &self.theta[m], &self.theta[n]).norm());
            }
        }
        worst
    }
}

fn pair_sum(lambda: &[f64], a: &[f64], b: &[f64]) -> Complex64 {
    lambda
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&l, (&x, &y))| Complex64::from_polar(l, x - y))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSolution {
    Found(PhaseTable),
    /// No table was produced. `best_residual` is `None` when the `λ0 ≤ 1/N`
    /// gate rejected the request without searching.
    Infeasible { best_residual: Option<f64> },
}

impl PhaseSolution {
    pub fn table(&self) -> Option<&PhaseTable> {
        match self {
            PhaseSolution::Found(t) => Some(t),
            PhaseSolution::Infeasible { .. } => None,
        }
    }
}

/// Closed-form phases with `Σ λ_i e^{iθ_i} = 0`, available iff `λ0 ≤ 1/2`.
///
/// λ0 sits at angle 0; the remaining weights are split greedily into two
/// groups, and the triangle (λ0, s1, s2) fixes one angle per group.
pub fn polygon_phases(state: &SchmidtVector) -> Result<Vec<f64>> {
    let lambda = state.lambda();
    let l0 = lambda[0];
    if l0 > 0.5 + BOUNDARY_EPS {
        return Err(Error::PolygonImpossible { lambda0: l0 });
    }
    let mut in_first = vec![false; lambda.len()];
    let (mut s1, mut s2) = (0.0, 0.0);
    for (k, &w) in lambda.iter().enumerate().skip(1) {
        if s1 <= s2 {
            s1 += w;
            in_first[k] = true;
        } else {
            s2 += w;
        }
    }
    let alpha = if s1 == 0.0 {
        PI
    } else {
        let cos = (s2 * s2 - l0 * l0 - s1 * s1) / (2.0 * l0 * s1);
        cos.clamp(-1.0, 1.0).acos()
    };
    let rest = -Complex64::new(l0, 0.0) - Complex64::from_polar(s1, alpha);
    let beta = if s2 == 0.0 { PI } else { rest.arg() };
    let wrap = |t: f64| t.rem_euclid(2.0 * PI);
    Ok((0..lambda.len())
        .map(|k| match k {
            0 => 0.0,
            _ if in_first[k] => wrap(alpha),
            _ => wrap(beta),
        })
        .collect())
}

/// Searches for N phase operators orthogonal on `state`.
///
/// With the gate enabled (the default) a request with `λ0 > 1/N` returns
/// [`PhaseSolution::Infeasible`] immediately. Otherwise, N = 2 uses
/// [`polygon_phases`], an exact equal-weight grouping is tried next, and
/// finally a multi-start Levenberg–Marquardt search over `θ_i^n`
/// (i, n ≥ 1, gauge `θ_0^n = 0`) on `Σ_{m<n} |Σ_i λ_i e^{i(θ_i^m-θ_i^n)}|²`.
///
/// A table is the same as N orthonormal rows `√λ_k e^{iθ_k^n}`, i.e. N rows
/// of a d × d unitary whose squared moduli all equal `λ`. Column norms force
/// `λ0 ≤ 1/N`, which is also sufficient for N = 2. For N ≥ 3 it is not:
/// with d = 4, N = 3 the completed moduli matrix must be unistochastic,
/// and near-uniform weights give ones that are not.
pub fn solve_phase_table(state: &SchmidtVector, n: usize, config: &SearchConfig) -> Result<PhaseSolution> {
    let d = state.dim();
    if n < 2 || n > d {
        return Err(Error::BadArguments(format!("phase count N = {n} must satisfy 2 <= N <= d = {d}")));
    }
    config.validate()?;
    let below_gate = state.lambda0() <= 1.0 / n as f64 + BOUNDARY_EPS;
    if config.phase_gate && !below_gate {
        return Ok(PhaseSolution::Infeasible { best_residual: None });
    }
    if below_gate {
        if n == 2 {
            let phases = polygon_phases(state)?;
            return Ok(PhaseSolution::Found(PhaseTable::new(vec![vec![0.0; d], phases])?));
        }
        if let Some(groups) = equal_weight_grouping(state.lambda(), n) {
            if let Some(table) = grouped_phase_set(state, &groups)? {
                return Ok(PhaseSolution::Found(table));
            }
        }
    }

    let problem = PhaseProblem { lambda: state.lambda().to_vec(), n, d };
    let opts = LmOptions {
        max_iterations: config.max_iterations,
        target_cost: config.ortho_tol * config.ortho_tol,
        initial_damping: config.initial_damping,
        stall_window: config.stall_window,
        stall_ratio: config.stall_ratio,
    };
    let summary = multistart::run(config, config.restarts, |r| {
        let mut rng = config.restart_rng(r);
        let start = DVector::from_fn(problem.num_params(), |_, _| rng.random_range(0.0..2.0 * PI));
        let out = lm::minimize(&problem, start, &opts);
        let table = problem.table(&out.point);
        let residual = table.residual(state);
        Attempt {
            success: out.cost < opts.target_cost && residual <= config.ortho_tol,
            residual,
            value: table,
        }
    });
    Ok(if summary.best.success {
        PhaseSolution::Found(summary.best.value)
    } else {
        PhaseSolution::Infeasible { best_residual: Some(summary.best.residual) }
    })
}

struct PhaseProblem {
    lambda: Vec<f64>,
    n: usize,
    d: usize,
}

impl PhaseProblem {
    fn num_params(&self) -> usize {
        (self.n - 1) * (self.d - 1)
    }

    fn phase(&self, x: &DVector<f64>, row: usize, k: usize) -> f64 {
        if row == 0 || k == 0 {
            0.0
        } else {
            x[(row - 1) * (self.d - 1) + (k - 1)]
        }
    }

    fn table(&self, x: &DVector<f64>) -> PhaseTable {
        let theta = (0..self.n)
            .map(|row| (0..self.d).map(|k| self.phase(x, row, k).rem_euclid(2.0 * PI)).collect())
            .collect();
        PhaseTable::new(theta).expect("row 0 is gauge-fixed")
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |m| ((m + 1)..self.n).map(move |n| (m, n)))
    }
}

impl LeastSquares for PhaseProblem {
    type Point = DVector<f64>;

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let pairs: Vec<_> = self.pairs().collect();
        let mut r = DVector::zeros(2 * pairs.len());
        for (row, (m, n)) in pairs.into_iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..self.d {
                s += Complex64::from_polar(self.lambda[k], self.phase(x, m, k) - self.phase(x, n, k));
            }
            r[2 * row] = s.re;
            r[2 * row + 1] = s.im;
        }
        r
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let pairs: Vec<_> = self.pairs().collect();
        let mut j = DMatrix::zeros(2 * pairs.len(), self.num_params());
        for (row, (m, n)) in pairs.into_iter().enumerate() {
            for k in 1..self.d {
                // d/dθ_k^m of λ_k e^{i(θ_k^m - θ_k^n)} is i·(that term); the θ_k^n slot gets the negative
                let t = Complex64::from_polar(self.lambda[k], self.phase(x, m, k) - self.phase(x, n, k));
                let dt = Complex64::new(0.0, 1.0) * t;
                if m > 0 {
                    let col = (m - 1) * (self.d - 1) + (k - 1);
                    j[(2 * row, col)] += dt.re;
                    j[(2 * row + 1, col)] += dt.im;
                }
                let col = (n - 1) * (self.d - 1) + (k - 1);
                j[(2 * row, col)] -= dt.re;
                j[(2 * row + 1, col)] -= dt.im;
            }
        }
        j
    }

    fn retract(&self, x: &DVector<f64>, step: &DVector<f64>) -> DVector<f64> {
        x + step
    }
}

/// Exact partition of the nonzero weights into `n` groups of weight `1/n`, if one exists.
pub fn equal_weight_grouping(lambda: &[f64], n: usize) -> Option<Vec<Vec<usize>>> {
    let target = 1.0 / n as f64;
    let idx: Vec<usize> = (0..lambda.len()).filter(|&k| lambda[k] > 0.0).collect();
    let mut sums = vec![0.0; n];
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];

    fn place(
        pos: usize,
        idx: &[usize],
        lambda: &[f64],
        target: f64,
        sums: &mut [f64],
        groups: &mut [Vec<usize>],
    ) -> bool {
        if pos == idx.len() {
            return sums.iter().all(|s| (s - target).abs() <= 1e-9);
        }
        let w = lambda[idx[pos]];
        for g in 0..sums.len() {
            if sums[g] + w > target + 1e-9 {
                continue;
            }
            let was_empty = groups[g].is_empty();
            sums[g] += w;
            groups[g].push(idx[pos]);
            if place(pos + 1, idx, lambda, target, sums, groups) {
                return true;
            }
            groups[g].pop();
            sums[g] -= w;
            // empty groups are interchangeable
            if was_empty {
                break;
            }
        }
        false
    }

    place(0, &idx, lambda, target, &mut sums, &mut groups).then_some(groups)
}

/// Phase table treating each group of Schmidt levels as one level of an
/// N-dimensional maximally entangled state: group `g` gets the phases of
/// `rotate(N, n)`. Returns `None` unless every group weighs `1/N` (within 1e-9).
pub fn grouped_phase_set(state: &SchmidtVector, grouping: &[Vec<usize>]) -> Result<Option<PhaseTable>> {
    let d = state.dim();
    let n = grouping.len();
    if n < 1 {
        return Err(Error::BadPartition("grouping has no groups".into()));
    }
    let mut label = vec![None; d];
    for (g, group) in grouping.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::BadPartition(format!("group {g} is empty")));
        }
        for &k in group {
            if k >= d {
                return Err(Error::BadPartition(format!("index {k} out of range for d = {d}")));
            }
            if label[k].replace(g).is_some() {
                return Err(Error::BadPartition(format!("index {k} appears in more than one group")));
            }
        }
    }
    if let Some(k) = (0..d).find(|&k| label[k].is_none() && state.lambda()[k] > 0.0) {
        return Err(Error::BadPartition(format!("index {k} has nonzero weight but no group")));
    }
    let target = 1.0 / n as f64;
    let balanced = grouping
        .iter()
        .all(|g| (g.iter().map(|&k| state.lambda()[k]).sum::<f64>() - target).abs() <= 1e-9);
    if !balanced {
        return Ok(None);
    }
    let theta = (0..n)
        .map(|row| {
            (0..d)
                .map(|k| match label[k] {
                    Some(g) => 2.0 * PI * ((g * row) % n) as f64 / n as f64,
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    Ok(Some(PhaseTable::new(theta)?))
}

/// The `N·d` products `X^m Z_n` (index `m·N + n`).
pub fn product_set(state: &SchmidtVector, phases: &PhaseTable) -> Result<OperatorSet> {
    let d = state.dim();
    if phases.dim() != d {
        return Err(Error::Dimension(format!(
            "phase table has d = {}, state has d = {d}",
            phases.dim()
        )));
    }
    let residual = phases.residual(state);
    if residual > ORTHOGONALITY_TOL {
        return Err(Error::InvalidSet(format!(
            "phase table is not orthogonal on this state (residual {residual:e})"
        )));
    }
    let zs: Vec<Unitary> = (0..phases.count()).map(|n| phases.phase_operator(n)).collect();
    let mut unitaries = Vec::with_capacity(d * zs.len());
    for m in 0..d {
        let x = shift(d, m)?;
        for z in &zs {
            unitaries.push(x.mul(z));
        }
    }
    OperatorSet::new(state.clone(), unitaries)
}

/// `((d-1)/d, 1/d, 0, ..., 0)`.
pub fn d_plus_1_state(d: usize) -> Result<SchmidtVector> {
    let mut coeffs = vec![0.0; d];
    coeffs[0] = (d - 1) as f64 / d as f64;
    coeffs[1] = 1.0 / d as f64;
    SchmidtVector::new(&coeffs, d)
}

/// The rotation `U_d^k`: column 0 is
/// `(-1/(d-1), 0, √d/(d-1)·e^{2πikj/(d-1)} for j = 1..d-2)`, column 1 is `e_1`,
/// and the rest is completed by Gram–Schmidt on `e_2, ..., e_{d-1}`.
pub fn d_plus_1_rotation(d: usize, k: usize) -> Result<Unitary> {
    if d < 3 {
        return Err(Error::BadArguments(format!("the d+1 family needs d >= 3, got {d}")));
    }
    let dm1 = (d - 1) as f64;
    let mut col0 = DVector::<Complex64>::zeros(d);
    col0[0] = c(-1.0 / dm1, 0.0);
    for j in 1..=(d - 2) {
        col0[j + 1] = Complex64::from_polar((d as f64).sqrt() / dm1, 2.0 * PI * ((k * j) % (d - 1)) as f64 / dm1);
    }
    let mut col1 = DVector::<Complex64>::zeros(d);
    col1[1] = c(1.0, 0.0);
    let candidates: Vec<usize> = (2..d).collect();
    Unitary::new(complete_unitary(&[col0, col1], d, &candidates))
}

/// `ψ_d` and the `d + 1` set `{1, X} ∪ {U_d^k}_{k=0}^{d-2}`.
pub fn d_plus_1_set(d: usize) -> Result<(SchmidtVector, OperatorSet)> {
    if d < 3 {
        return Err(Error::BadArguments(format!("the d+1 family needs d >= 3, got {d}")));
    }
    let state = d_plus_1_state(d)?;
    let mut unitaries = vec![Unitary::identity(d), shift(d, 1)?];
    for k in 0..=(d - 2) {
        unitaries.push(d_plus_1_rotation(d, k)?);
    }
    let set = OperatorSet::new(state.clone(), unitaries)?;
    Ok((state, set))
}

/// The explicit qutrit rotation by 2π/3 in the {|0⟩, |2⟩} plane.
pub fn qutrit_rotation() -> Unitary {
    let h = 3f64.sqrt() / 2.0;
    Unitary::new(CMatrix::from_row_slice(
        3,
        3,
        &[
            c(-0.5, 0.0),
            c(0.0, 0.0),
            c(-h, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(h, 0.0),
            c(0.0, 0.0),
            c(-0.5, 0.0),
        ],
    ))
    .expect("rotation is unitary")
}

/// `{1, X, U_3, U_3†}` on `(2/3, 1/3, 0)` with the explicit rotation `U_3`.
pub fn qutrit_four_set() -> Result<OperatorSet> {
    let u3 = qutrit_rotation();
    OperatorSet::new(
        d_plus_1_state(3)?,
        vec![Unitary::identity(3), shift(3, 1)?, u3.clone(), u3.adjoint()],
    )
}
