use serde::Serialize;

use super::config::SearchConfig;
use super::lm::{self, LmOptions};
use super::multistart::{self, Attempt};
use super::objective::{identity, GramProblem};
use crate::constructions::{d_plus_1_set, d_plus_1_state, product_set, shift, solve_phase_table, PhaseSolution};
use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt_columns, haar_unitary, CMatrix};
use crate::qstate::{is_orthogonal_set, OperatorSet, SchmidtVector, Unitary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityStatus {
    Feasible,
    /// No restart reached the tolerance. This is evidence, not a proof of infeasibility.
    NotFound,
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    pub set: Option<OperatorSet>,
    pub best_residual: f64,
    pub restarts_used: usize,
    /// True when an analytic construction settled the question without optimizing.
    pub analytic: bool,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Looks for `n` unitaries with `Tr(Λ U_i† U_j) = δ_ij` on `state`.
///
/// Analytic constructions are tried first (shifts, phase products for any
/// `k ≥ n/d` with `λ0 ≤ 1/k` whose phase table is found, the d+1 family on
/// `ψ_d`). Otherwise the
/// first member is fixed to the identity and the rest are optimized by
/// multi-start Levenberg–Marquardt on `Σ_{i<j} |Tr(Λ U_i† U_j)|²`.
/// Every reported set is re-verified with [`is_orthogonal_set`].
pub fn feasible(state: &SchmidtVector, n: usize, config: &SearchConfig) -> Result<FeasibilityResult> {
    let d = state.dim();
    if n < d || n > d * d {
        return Err(Error::BadArguments(format!("alphabet size N = {n} must satisfy d <= N <= d^2 for d = {d}")));
    }
    config.validate()?;

    if let Some(set) = analytic_set(state, n, config)? {
        if is_orthogonal_set(state, set.unitaries(), config.ortho_tol)? {
            return Ok(FeasibilityResult {
                status: FeasibilityStatus::Feasible,
                best_residual: set.gram_residual(),
                set: Some(set),
                restarts_used: 0,
                analytic: true,
            });
        }
    }
    Ok(optimize(state, n, config))
}

/// An analytic set of at least `n` members when one applies, truncated to `n`.
pub fn analytic_set(state: &SchmidtVector, n: usize, config: &SearchConfig) -> Result<Option<OperatorSet>> {
    let d = state.dim();
    if n <= d {
        let shifts = (0..n).map(|m| shift(d, m)).collect::<Result<Vec<_>>>()?;
        return Ok(Some(OperatorSet::new(state.clone(), shifts)?));
    }
    let gated = SearchConfig { phase_gate: true, ..config.clone() };
    for k in n.div_ceil(d)..=d {
        if state.lambda0() > 1.0 / k as f64 + 1e-12 {
            continue;
        }
        if let PhaseSolution::Found(table) = solve_phase_table(state, k, &gated)? {
            let set = product_set(state, &table)?;
            return Ok(Some(set.truncated(n)?));
        }
    }
    if d >= 3 && n <= d + 1 {
        let psi = d_plus_1_state(d)?;
        if psi.lambda().iter().zip(state.lambda()).all(|(a, b)| (a - b).abs() <= 1e-12) {
            let (_, set) = d_plus_1_set(d)?;
            let set = OperatorSet::new(state.clone(), set.unitaries()[..n].to_vec())?;
            return Ok(Some(set));
        }
    }
    Ok(None)
}

fn lm_options(config: &SearchConfig) -> LmOptions {
    LmOptions {
        max_iterations: config.max_iterations,
        target_cost: 0.25 * config.ortho_tol * config.ortho_tol,
        initial_damping: config.initial_damping,
        stall_window: config.stall_window,
        stall_ratio: config.stall_ratio,
    }
}

fn optimize(state: &SchmidtVector, n: usize, config: &SearchConfig) -> FeasibilityResult {
    let d = state.dim();
    let problem = GramProblem::new(state, n, 1);
    let opts = lm_options(config);

    let summary = multistart::run(config, config.restarts, |r| {
        let mut rng = config.restart_rng(r);
        let mut start = vec![identity(d)];
        for p in 1..n {
            // restart 0 starts from the shift operators where it can
            if r == 0 && p < d {
                start.push(shift(d, p).expect("p < d").into_matrix());
            } else {
                start.push(haar_unitary(d, &mut rng));
            }
        }
        let out = lm::minimize(&problem, start, &opts);
        let mut us: Vec<CMatrix> = out.point;
        for u in us.iter_mut().skip(1) {
            gram_schmidt_columns(u, 0);
        }
        let residual = problem.max_residual(&us);
        let unitaries: Vec<Unitary> = us.into_iter().map(|m| Unitary::from_raw(m).expect("square")).collect();
        let success = residual <= config.ortho_tol
            && is_orthogonal_set(state, &unitaries, config.ortho_tol).unwrap_or(false);
        Attempt { value: unitaries, residual, success }
    });

    let best_residual = summary.best.residual;
    if summary.best.success {
        let set = OperatorSet::new(state.clone(), summary.best.value).expect("dimensions checked");
        FeasibilityResult {
            status: FeasibilityStatus::Feasible,
            set: Some(set),
            best_residual,
            restarts_used: summary.used,
            analytic: false,
        }
    } else {
        FeasibilityResult {
            status: FeasibilityStatus::NotFound,
            set: None,
            best_residual,
            restarts_used: summary.used,
            analytic: false,
        }
    }
}

/// Optimizer-only variant of [`feasible`], skipping analytic seeds.
pub fn feasible_numeric(state: &SchmidtVector, n: usize, config: &SearchConfig) -> Result<FeasibilityResult> {
    let d = state.dim();
    if n < 2 || n > d * d {
        return Err(Error::BadArguments(format!("alphabet size N = {n} out of range for d = {d}")));
    }
    config.validate()?;
    Ok(optimize(state, n, config))
}
