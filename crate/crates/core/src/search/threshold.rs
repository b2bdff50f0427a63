//! Minimal-entanglement thresholds on the two-coefficient family
//! `(λ0, 1 - λ0, 0, ..., 0)` and the capacity bound `S ≥ log_d N - 1`.

use serde::Serialize;

use super::config::SearchConfig;
use super::feasibility::feasible;
use crate::error::{Error, Result};
use crate::qstate::{entropy, OperatorSet, SchmidtVector};

pub const SCAN_POINTS: usize = 16;
pub const PRECISION: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSearch {
    pub n: usize,
    pub d: usize,
    /// `(λ0, feasible)` for the pre-scan over `[1/2, 1)`.
    pub scan: Vec<(f64, bool)>,
    /// Final bracket: `lo` feasible, `hi` not found.
    pub lo: f64,
    pub hi: f64,
    /// Reported threshold: `lo`, the largest `λ0` with a verified set.
    pub lambda0: f64,
    /// The verified set of size `N` at `lo`.
    #[serde(skip)]
    pub witness: OperatorSet,
}

fn check_range(n: usize, d: usize) -> Result<()> {
    if d < 2 || n <= d || n > 2 * d {
        return Err(Error::BadArguments(format!("need d < N <= 2d, got N = {n}, d = {d}")));
    }
    Ok(())
}

/// Bisects for the largest feasible `λ0` on the two-coefficient family.
///
/// A 16-point scan over `[1/2, 1)` first checks that feasibility is a
/// down-set in `λ0` (all feasible points precede all infeasible ones) and
/// provides the initial bracket. Bisection stops once the bracket is at
/// most 1e-3 wide.
pub fn min_lambda0_search(n: usize, d: usize, config: &SearchConfig) -> Result<ThresholdSearch> {
    check_range(n, d)?;
    config.validate()?;
    let probe = |lambda0: f64, tag: u64| -> Result<Option<OperatorSet>> {
        let state = SchmidtVector::two_coefficient(lambda0, d)?;
        Ok(feasible(&state, n, &config.derived(tag))?.set)
    };

    let scan = config.install(|| {
        use rayon::prelude::*;
        (0..SCAN_POINTS)
            .into_par_iter()
            .map(|k| {
                let l0 = 0.5 + 0.5 * k as f64 / SCAN_POINTS as f64;
                probe(l0, k as u64).map(|f| (l0, f))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (scan, mut sets): (Vec<(f64, bool)>, Vec<Option<OperatorSet>>) =
        scan.into_iter().map(|(l0, s)| ((l0, s.is_some()), s)).unzip();

    if let Some(pos) = scan.windows(2).position(|w| !w[0].1 && w[1].1) {
        return Err(Error::NonMonotone(format!(
            "N = {n}, d = {d}: lambda0 = {} not found but lambda0 = {} feasible",
            scan[pos].0,
            scan[pos + 1].0
        )));
    }
    let last_feasible = scan.iter().rposition(|p| p.1).ok_or_else(|| {
        Error::NonMonotone(format!("N = {n}, d = {d}: no feasible point at lambda0 = 1/2"))
    })?;
    let mut lo = scan[last_feasible].0;
    let mut witness = sets.swap_remove(last_feasible).expect("feasible scan point");
    // λ0 = 1 is a product state: only d letters
    let mut hi = scan.get(last_feasible + 1).map_or(1.0, |p| p.0);

    let mut step = 0u64;
    while hi - lo > PRECISION {
        let mid = 0.5 * (lo + hi);
        match probe(mid, 1000 + step)? {
            Some(set) => {
                lo = mid;
                witness = set;
            }
            None => hi = mid,
        }
        step += 1;
    }
    Ok(ThresholdSearch { n, d, scan, lo, hi, lambda0: lo, witness })
}

pub fn min_lambda0(n: usize, d: usize, config: &SearchConfig) -> Result<f64> {
    Ok(min_lambda0_search(n, d, config)?.lambda0)
}

/// Entropy (base d) of the threshold state `(λ0*, 1 - λ0*, 0, ...)`.
pub fn min_entropy_for_n(n: usize, d: usize, config: &SearchConfig) -> Result<f64> {
    let l0 = min_lambda0(n, d, config)?;
    Ok(two_coefficient_entropy(l0, d))
}

pub fn two_coefficient_entropy(lambda0: f64, d: usize) -> f64 {
    let state = SchmidtVector::two_coefficient(lambda0, d).expect("lambda0 in [1/2, 1]");
    entropy(&state, d as f64)
}

/// `max(0, log_d N - 1)`: entanglement (in e-dits) needed for N letters.
pub fn capacity_lower_bound(n: usize, d: usize) -> f64 {
    ((n as f64).ln() / (d as f64).ln() - 1.0).max(0.0)
}
