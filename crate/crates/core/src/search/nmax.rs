use serde::Serialize;

use super::config::SearchConfig;
use super::feasibility::{feasible, FeasibilityStatus};
use crate::constructions::{d_plus_1_state, equal_weight_grouping};
use crate::error::{Error, Result};
use crate::qstate::{OperatorSet, SchmidtVector};

/// Why the ascent stopped.
#[derive(Debug, Clone, Serialize)]
pub struct NMaxEvidence {
    /// Size guaranteed by an analytic construction, where the ascent began.
    pub lower_bound: usize,
    /// The first size that was not found (`None` when `d²` was reached).
    pub failed_n: Option<usize>,
    /// Best Gram residual of each failed attempt at `failed_n` (normal, then doubled budget).
    pub failed_residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NMaxResult {
    pub n_max: usize,
    pub set: OperatorSet,
    pub evidence: NMaxEvidence,
}

/// Largest alphabet guaranteed by a construction that always succeeds:
/// the shifts (`d`), the polygon phases when `λ0 ≤ 1/2` (`2d`), an exact
/// split of the weights into `k` groups of `1/k` (`k·d`), and the d+1 family
/// on `ψ_d`.
///
/// `λ0 ≤ 1/k` alone is not enough for `k ≥ 3`: near-uniform weights with
/// d = 4, k = 3 admit no phase table at all.
pub fn analytic_lower_bound(state: &SchmidtVector) -> usize {
    let d = state.dim();
    let mut best = d;
    if d >= 2 && state.lambda0() <= 0.5 + 1e-12 {
        best = 2 * d;
    }
    for k in 3..=d {
        if equal_weight_grouping(state.lambda(), k).is_some() {
            best = best.max(k * d);
        }
    }
    if d >= 3 {
        if let Ok(psi) = d_plus_1_state(d) {
            if psi.lambda().iter().zip(state.lambda()).all(|(a, b)| (a - b).abs() <= 1e-12) {
                best = best.max(d + 1);
            }
        }
    }
    best
}

/// Ascends from the analytic lower bound until a size is not found twice
/// (the second time with doubled restarts and fresh seeds).
pub fn n_max(state: &SchmidtVector, config: &SearchConfig) -> Result<NMaxResult> {
    config.validate()?;
    let d = state.dim();
    let lower = analytic_lower_bound(state);
    let base = feasible(state, lower, &config.derived(lower as u64))?;
    let mut set = base.set.ok_or_else(|| {
        Error::InvalidSet(format!("analytic construction of size {lower} failed verification"))
    })?;

    let mut evidence = NMaxEvidence { lower_bound: lower, failed_n: None, failed_residuals: Vec::new() };
    for n in (lower + 1)..=(d * d) {
        let first = feasible(state, n, &config.derived(n as u64))?;
        let result = if first.status == FeasibilityStatus::Feasible {
            first
        } else {
            let retry = SearchConfig { restarts: 2 * config.restarts, ..config.derived(0x1_0000 + n as u64) };
            let second = feasible(state, n, &retry)?;
            if second.status == FeasibilityStatus::NotFound {
                evidence.failed_n = Some(n);
                evidence.failed_residuals = vec![first.best_residual, second.best_residual];
                break;
            }
            second
        };
        set = result.set.expect("feasible result carries a set");
    }
    Ok(NMaxResult { n_max: set.len(), set, evidence })
}
